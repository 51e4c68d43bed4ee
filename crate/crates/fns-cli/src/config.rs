//! Config-file merging: `--config FILE` reads a flat `key = value` file and
//! injects each entry as a long flag right after the subcommand, so flags the
//! user typed later override it (the parser keeps the last occurrence).
//!
//! Keys are long flag names (dashes or underscores); a subcommand-name prefix
//! scopes an entry, e.g. `converge.kappa = 0.5` is ignored by `solve`. A few
//! dotted grid keys are accepted as spellings of their flags: `grid.n`,
//! `grid.dim`, `grid.L` / `grid.box-length`, and `data_preset` for `preset`.

use std::path::Path;

const SUBCOMMANDS: [&str; 7] = [
    "kernel-distance",
    "solve",
    "solve-mhd",
    "norm",
    "converge",
    "converge-mhd",
    "fit",
];

/// One parsed config entry.
struct Entry {
    scope: Option<String>,
    key: String,
    value: String,
}

/// Maps documented alternate spellings onto the canonical long flag.
fn canonical_key(key: &str) -> String {
    let dashed = key.replace('_', "-");
    match dashed.to_ascii_lowercase().as_str() {
        "grid.n" => "n".into(),
        "grid.dim" => "dim".into(),
        "grid.l" | "grid.box-length" => "box-length".into(),
        "data-preset" => "preset".into(),
        _ => dashed,
    }
}

fn parse_entries(text: &str) -> Result<Vec<Entry>, String> {
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key = value", lineno + 1))?;
        let key = key.trim();
        let value = value.trim().to_string();
        if key.is_empty() {
            return Err(format!("config line {}: empty key", lineno + 1));
        }
        let (scope, name) = match key.split_once('.') {
            Some((prefix, name)) if SUBCOMMANDS.contains(&prefix.trim()) => {
                (Some(prefix.trim().to_string()), name.trim())
            }
            _ => (None, key),
        };
        entries.push(Entry {
            scope,
            key: canonical_key(name),
            value,
        });
    }
    Ok(entries)
}

/// Locates the subcommand token: the first argument that is not a flag or a
/// flag value of the global `--config`.
fn subcommand_position(args: &[String]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let a = &args[i];
        if a == "--config" {
            i += 2;
            continue;
        }
        if a.starts_with('-') {
            i += 1;
            continue;
        }
        return Some(i);
    }
    None
}

fn config_path(args: &[String]) -> Option<String> {
    for (i, a) in args.iter().enumerate() {
        if a == "--config" {
            return args.get(i + 1).cloned();
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.to_string());
        }
    }
    None
}

/// Returns argv with config entries spliced in after the subcommand, or an
/// error message suitable for a usage failure.
pub fn inject_config(args: Vec<String>) -> Result<Vec<String>, String> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| format!("cannot read config file {path}: {e}"))?;
    let entries = parse_entries(&text)?;
    let Some(pos) = subcommand_position(&args) else {
        // No subcommand: leave argv alone; the parser will print usage.
        return Ok(args);
    };
    let subcommand = args[pos].clone();
    let mut injected = Vec::new();
    for e in &entries {
        if let Some(scope) = &e.scope {
            if *scope != subcommand {
                continue;
            }
        }
        // Boolean switches take no value: inject the bare flag for "true",
        // nothing for "false".
        match e.value.as_str() {
            "true" => injected.push(format!("--{}", e.key)),
            "false" => {}
            v => {
                injected.push(format!("--{}", e.key));
                injected.push(v.to_string());
            }
        }
    }
    let mut out = args[..=pos].to_vec();
    out.extend(injected);
    out.extend(args[pos + 1..].iter().cloned());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(parts: &[&str]) -> Vec<String> {
        parts.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn injects_after_subcommand_so_user_flags_win() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "kappa = 0.5\nconverge.n = 64\nsolve.n = 32\n").unwrap();
        let args = argv(&[
            "fnslab",
            "converge",
            "--config",
            path.to_str().unwrap(),
            "--kappa",
            "2",
        ]);
        let merged = inject_config(args).unwrap();
        let joined = merged.join(" ");
        assert!(
            joined.contains("converge --kappa 0.5 --n 64 --config"),
            "config entries must land right after the subcommand: {joined}"
        );
        assert!(!joined.contains("--n 32"), "other-scope entries must be dropped");
        // The user's --kappa 2 comes later, so override-self keeps it.
        assert!(joined.ends_with("--kappa 2"));
    }

    #[test]
    fn boolean_entries_become_bare_switches() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "override-floor = true\nestimate_floor = false\n").unwrap();
        let args = argv(&["fnslab", "converge", "--config", path.to_str().unwrap()]);
        let merged = inject_config(args).unwrap().join(" ");
        assert!(merged.contains("--override-floor"));
        assert!(!merged.contains("estimate-floor"));
    }

    #[test]
    fn missing_file_and_bad_lines_are_reported() {
        let args = argv(&["fnslab", "converge", "--config", "/nonexistent.cfg"]);
        assert!(inject_config(args).is_err());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "just-a-key-without-value\n").unwrap();
        let args = argv(&["fnslab", "converge", "--config", path.to_str().unwrap()]);
        assert!(inject_config(args).is_err());
    }

    #[test]
    fn documented_grid_spellings_map_onto_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(
            &path,
            "grid.n = 128\ngrid.L = 3.14\ngrid.dim = 3\ndata_preset = random\n",
        )
        .unwrap();
        let args = argv(&["fnslab", "solve", "--config", path.to_str().unwrap()]);
        let merged = inject_config(args).unwrap().join(" ");
        assert!(merged.contains("--n 128"), "grid.n spells --n: {merged}");
        assert!(merged.contains("--box-length 3.14"), "grid.L spells --box-length");
        assert!(merged.contains("--dim 3"));
        assert!(merged.contains("--preset random"));
    }

    #[test]
    fn no_config_flag_is_a_no_op() {
        let args = argv(&["fnslab", "solve", "--alpha", "1.5"]);
        assert_eq!(inject_config(args.clone()).unwrap(), args);
    }
}

//! Subcommand implementations: each builds its core-library inputs, runs the
//! experiment, persists results plus a manifest, and prints a short summary.

use crate::args::*;
use crate::failure::{io_failure, Failure};
use crate::manifest::Manifest;
use crate::output::{self, FitReport};
use fns_core::fit::fit_rate;
use fns_core::kernels::{certify_two_sided_bound, KernelPoint};
use fns_core::lab::{self, DataFamilySpec, ErrorRow, ErrorTable, MhdFamilySpec, SweepConfig};
use fns_core::norms::{self, NormKind, NormSpec};
use fns_core::solver::{Scheme, SolveRecord};
use fns_core::{GridSpec, QuadratureConfig, SpectralField};
use std::fmt::Write as _;
use std::path::Path;

/// Acceptance tolerance on |slope - predicted| used by the fit verdicts.
const FIT_TOLERANCE: f64 = 0.15;

pub fn run(cli: Cli) -> Result<(), Failure> {
    let config = cli.config;
    match cli.command {
        Command::KernelDistance(a) => kernel_distance(a, config.as_deref()),
        Command::Solve(a) => solve(a, config.as_deref()),
        Command::SolveMhd(a) => solve_mhd(a, config.as_deref()),
        Command::Norm(a) => norm(a),
        Command::Converge(a) => converge(a, config.as_deref()),
        Command::ConvergeMhd(a) => converge_mhd(a, config.as_deref()),
        Command::Fit(a) => fit(a, config.as_deref()),
    }
}

/// Parses a norm label (the inverse of `NormSpec::label`).
pub fn parse_norm_spec(text: &str) -> Result<NormSpec, Failure> {
    let t = text.trim();
    let bad = || {
        Failure::usage(format!(
            "unknown norm '{t}' (expected sup, l2, bmo, h<s>, h-<s>, l<p>l<q>, linfl<q>)"
        ))
    };
    match t {
        "sup" => return Ok(NormSpec::sup()),
        "l2" => return Ok(NormSpec::l2()),
        "bmo" => return Ok(NormSpec::bmo()),
        _ => {}
    }
    if let Some(q) = t.strip_prefix("linfl") {
        let q: f64 = q.parse().map_err(|_| bad())?;
        return Ok(NormSpec::lplq(f64::INFINITY, q)?);
    }
    if let Some(s) = t.strip_prefix("h-") {
        let s: f64 = s.parse().map_err(|_| bad())?;
        return Ok(NormSpec::hminus(s)?);
    }
    if let Some(body) = t.strip_prefix('l') {
        if let Some((p, q)) = body.split_once('l') {
            let p: f64 = p.parse().map_err(|_| bad())?;
            let q: f64 = q.parse().map_err(|_| bad())?;
            return Ok(NormSpec::lplq(p, q)?);
        }
    }
    if let Some(s) = t.strip_prefix('h') {
        let s: f64 = s.parse().map_err(|_| bad())?;
        return Ok(NormSpec::hs(s)?);
    }
    Err(bad())
}

fn scheme_name(s: Scheme) -> &'static str {
    match s {
        Scheme::PicardDuhamel => "picard",
        Scheme::EtdRk2 => "etd-rk2",
    }
}

fn preset_name(p: PresetArg) -> &'static str {
    match p {
        PresetArg::TaylorGreen => "taylor-green",
        PresetArg::Random => "random",
        PresetArg::Shear => "shear",
    }
}

fn hash_config(m: &mut Manifest, config: Option<&Path>) -> Result<(), Failure> {
    if let Some(p) = config {
        m.hash_input("config", p).map_err(|e| io_failure(p, &e))?;
    }
    Ok(())
}

fn build_grid(g: &GridArgs) -> Result<GridSpec, Failure> {
    Ok(GridSpec::new(g.dim, g.n, g.box_length)?)
}

fn record_grid(m: &mut Manifest, g: &GridArgs) {
    m.set("dim", g.dim);
    m.set("n", g.n);
    m.set_f64("box_length", g.box_length);
}

fn record_preset(m: &mut Manifest, p: &PresetArgs) {
    m.set("preset", preset_name(p.preset));
    m.set("seed", p.seed);
    m.set_f64("spectrum_decay", p.spectrum_decay);
    m.set_f64("amplitude", p.amplitude);
}

fn record_stepping(m: &mut Manifest, st: &SteppingArgs) {
    m.set_f64("dt", st.dt);
    m.set("snapshots", st.snapshots);
    m.set("scheme", scheme_name(st.scheme.into()));
    m.set_f64("picard_tol", st.picard_tol);
    m.set("picard_max_iter", st.picard_max_iter);
}

fn sweep_config(st: &SteppingArgs, hz: &HorizonArgs) -> SweepConfig {
    let mut cfg = SweepConfig::new(st.dt).with_snapshots(st.snapshots);
    cfg.scheme = st.scheme.into();
    cfg.picard_tol = st.picard_tol;
    cfg.picard_max_iter = st.picard_max_iter;
    cfg.c_const = hz.c_const;
    if let Some(t) = hz.t_end {
        cfg = cfg.with_horizon(t);
    }
    if hz.override_floor {
        cfg = cfg.with_override();
    }
    cfg
}

/// Writes a field snapshot atomically (temp name in the same dir + rename).
fn write_snapshot_atomic(
    field: &SpectralField,
    alpha: f64,
    dir: &Path,
    name: &str,
) -> Result<(), Failure> {
    let tmp = dir.join(format!(".{name}.tmp"));
    field.write_snapshot(alpha, &tmp)?;
    let path = dir.join(name);
    std::fs::rename(&tmp, &path).map_err(|e| io_failure(&path, &e))?;
    Ok(())
}

/// Filename-friendly rendering of an exponent (shortest f64 round-trip).
fn alpha_tag(alpha: f64) -> String {
    format!("{alpha}")
}

fn kernel_plot_csv(alphas: &[f64], points: &[KernelPoint]) -> String {
    let mut s = String::from("log2ma,logerr\n");
    for (a, p) in alphas.iter().zip(points) {
        let _ = writeln!(
            s,
            "{},{}",
            output::fmt_f64((2.0 - a).ln()),
            output::fmt_f64(p.value.ln())
        );
    }
    s
}

fn kernel_points_csv(alphas: &[f64], plain: &[KernelPoint], grad: &[KernelPoint]) -> String {
    let mut s = String::from(
        "alpha,distance,t_star,err_bound,grad_distance,grad_t_star,grad_err_bound\n",
    );
    for ((a, p), g) in alphas.iter().zip(plain).zip(grad) {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            output::fmt_f64(*a),
            output::fmt_f64(p.value),
            output::fmt_f64(p.t_star),
            output::fmt_f64(p.err_bound),
            output::fmt_f64(g.value),
            output::fmt_f64(g.t_star),
            output::fmt_f64(g.err_bound)
        );
    }
    s
}

fn kernel_distance(args: KernelDistanceArgs, config: Option<&Path>) -> Result<(), Failure> {
    let out = &args.out.out;
    output::prepare_dir(out, args.out.force)?;
    let quad = QuadratureConfig {
        panel_tol: args.panel_tol,
        tail_tol: args.tail_tol,
        scan_points: args.scan_points,
        ..QuadratureConfig::default()
    };
    let report = certify_two_sided_bound(args.s, args.t_max, &args.alpha_grid, args.dim, &quad)?;
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Failure::io(format!("cannot encode kernel report: {e}")))?;
    output::write_atomic(out, "report.json", json.as_bytes())?;
    output::write_atomic(
        out,
        "points.csv",
        kernel_points_csv(&report.alphas, &report.points, &report.grad_points).as_bytes(),
    )?;
    output::write_atomic(
        out,
        "plot_kernel.csv",
        kernel_plot_csv(&report.alphas, &report.points).as_bytes(),
    )?;
    output::write_atomic(
        out,
        "plot_kernel_grad.csv",
        kernel_plot_csv(&report.alphas, &report.grad_points).as_bytes(),
    )?;

    let mut m = Manifest::new("kernel-distance", 0);
    m.set_f64_list("alpha_grid", &args.alpha_grid);
    m.set_f64("s", args.s);
    m.set_f64("t_max", args.t_max);
    m.set("dim", args.dim);
    m.set_f64("panel_tol", args.panel_tol);
    m.set_f64("tail_tol", args.tail_tol);
    m.set("scan_points", args.scan_points);
    hash_config(&mut m, config)?;
    output::write_manifest(out, &m)?;

    let grad_slope = if report.alphas.len() >= 3 {
        fit_rate(&report.alphas, &report.grad_distances(), "grad", 1.0)
            .map(|f| f.slope)
            .ok()
    } else {
        None
    };
    println!(
        "kernel distance: slope {:.4}, C {:.6e}, c {:.6e}, passes {}",
        report.slope, report.fitted_upper_c, report.fitted_lower_c, report.passes
    );
    if let Some(gs) = grad_slope {
        println!("gradient kernel distance: slope {gs:.4}");
    }
    println!("wrote report.json, points.csv, plot_kernel[_grad].csv to {}", out.display());
    Ok(())
}

/// Loads the initial field from a snapshot (hashing it into the manifest) or
/// builds it from the preset.
fn build_initial(
    preset: &PresetArgs,
    grid: GridSpec,
    initial: Option<&Path>,
    manifest: &mut Manifest,
) -> Result<SpectralField, Failure> {
    if let Some(path) = initial {
        let (field, _alpha) = SpectralField::read_snapshot(path, Some(grid.box_length()))?;
        manifest
            .hash_input("initial", path)
            .map_err(|e| io_failure(path, &e))?;
        manifest.set("initial", path.display());
        Ok(field)
    } else {
        Ok(lab::build_base(
            &preset.preset.to_preset(preset.seed, preset.spectrum_decay),
            grid,
            preset.amplitude,
        )?)
    }
}

fn print_solve_summary(rec: &SolveRecord) {
    let last = rec.diagnostics.last().expect("at least the initial diagnostic");
    let max_div = rec
        .diagnostics
        .iter()
        .map(|d| d.div_residual)
        .fold(0.0f64, f64::max);
    let max_iters = rec.diagnostics.iter().map(|d| d.picard_iters).max().unwrap_or(0);
    println!(
        "t = {:.6}: kinetic energy {:.6e}, magnetic energy {:.6e}, max divergence residual {:.3e}, max picard iters {}",
        last.t, last.energy_kin, last.energy_mag, max_div, max_iters
    );
}

fn solve(args: SolveArgs, config: Option<&Path>) -> Result<(), Failure> {
    let out = &args.out.out;
    output::prepare_dir(out, args.out.force)?;
    let grid = build_grid(&args.grid)?;

    let mut m = Manifest::new("solve", args.preset.seed);
    record_grid(&mut m, &args.grid);
    record_preset(&mut m, &args.preset);
    record_stepping(&mut m, &args.stepping);
    m.set_f64("alpha", args.alpha);
    m.set_f64("t_end", args.t_end);
    hash_config(&mut m, config)?;

    let u0 = build_initial(&args.preset, grid, args.initial.as_deref(), &mut m)?;
    let solver_cfg = fns_core::SolverConfig::new(grid, args.alpha, args.stepping.dt, args.t_end)?
        .with_scheme(args.stepping.scheme.into())
        .with_picard(args.stepping.picard_tol, args.stepping.picard_max_iter)?
        .with_snapshots(args.stepping.snapshots)?;
    let rec = fns_core::solve_ns(&u0, &solver_cfg)?;

    output::write_atomic(out, "diagnostics.csv", output::diagnostics_csv(&rec).as_bytes())?;
    let u_final = rec.velocity.last().expect("at least one snapshot");
    let p_final = rec.pressure.last().expect("at least one snapshot");
    write_snapshot_atomic(u_final, args.alpha, out, "velocity_final.fnsf")?;
    write_snapshot_atomic(p_final, args.alpha, out, "pressure_final.fnsf")?;
    output::write_manifest(out, &m)?;

    print_solve_summary(&rec);
    println!(
        "wrote diagnostics.csv, velocity_final.fnsf, pressure_final.fnsf to {}",
        out.display()
    );
    Ok(())
}

fn solve_mhd(args: SolveMhdArgs, config: Option<&Path>) -> Result<(), Failure> {
    let out = &args.out.out;
    output::prepare_dir(out, args.out.force)?;
    let grid = build_grid(&args.grid)?;

    let mut m = Manifest::new("solve-mhd", args.preset.seed);
    record_grid(&mut m, &args.grid);
    record_preset(&mut m, &args.preset);
    record_stepping(&mut m, &args.stepping);
    m.set_f64("alpha", args.alpha);
    m.set_f64("beta", args.beta);
    m.set_f64("t_end", args.t_end);
    m.set("magnetic_preset", preset_name(args.magnetic_preset));
    m.set("magnetic_seed", args.magnetic_seed);
    m.set_f64("magnetic_amplitude", args.magnetic_amplitude);
    hash_config(&mut m, config)?;

    let u0 = lab::build_base(
        &args.preset.preset.to_preset(args.preset.seed, args.preset.spectrum_decay),
        grid,
        args.preset.amplitude,
    )?;
    let b0 = lab::build_base(
        &args
            .magnetic_preset
            .to_preset(args.magnetic_seed, args.preset.spectrum_decay),
        grid,
        args.magnetic_amplitude,
    )?;
    let solver_cfg = fns_core::SolverConfig::new(grid, args.alpha, args.stepping.dt, args.t_end)?
        .with_beta(args.beta)?
        .with_scheme(args.stepping.scheme.into())
        .with_picard(args.stepping.picard_tol, args.stepping.picard_max_iter)?
        .with_snapshots(args.stepping.snapshots)?;
    let rec = fns_core::solve_mhd(&u0, &b0, &solver_cfg)?;

    output::write_atomic(out, "diagnostics.csv", output::diagnostics_csv(&rec).as_bytes())?;
    let u_final = rec.velocity.last().expect("at least one snapshot");
    let p_final = rec.pressure.last().expect("at least one snapshot");
    let b_final = rec
        .magnetic
        .as_ref()
        .and_then(|b| b.last())
        .expect("coupled run stores magnetic snapshots");
    write_snapshot_atomic(u_final, args.alpha, out, "velocity_final.fnsf")?;
    write_snapshot_atomic(p_final, args.alpha, out, "pressure_final.fnsf")?;
    write_snapshot_atomic(b_final, args.beta, out, "magnetic_final.fnsf")?;
    output::write_manifest(out, &m)?;

    print_solve_summary(&rec);
    println!(
        "wrote diagnostics.csv, velocity_final.fnsf, pressure_final.fnsf, magnetic_final.fnsf to {}",
        out.display()
    );
    Ok(())
}

fn norm(args: NormArgs) -> Result<(), Failure> {
    let spec = parse_norm_spec(&args.norm)?;
    let (field, _alpha) = SpectralField::read_snapshot(&args.input, Some(args.box_length))?;
    let value = norms::norm(&field, &spec)?;
    println!("{value:.16e}");
    Ok(())
}

/// Predicted slope for one norm: kernel-only families converge at rate 1,
/// perturbed families at min(1, kappa); mixed space-time norms pick up the
/// (1 - 1/q) interpolation factor.
fn predicted_slope(spec: &NormSpec, base: f64) -> f64 {
    match spec.kind() {
        NormKind::LpLq { q, .. } => (1.0 - 1.0 / q) * base,
        _ => base,
    }
}

/// Fits every requested norm that has enough usable points; writes one plot
/// CSV per fitted norm. Norms with fewer than 3 non-excluded finite-gap
/// points are reported and skipped so partial sweeps still produce files.
fn fit_norms(
    table: &ErrorTable,
    specs: &[(NormSpec, String)],
    base: f64,
    out: &Path,
) -> Result<FitReport, Failure> {
    let mut fits = Vec::new();
    let mut passes = Vec::new();
    for (spec, label) in specs {
        let (alphas, _) = table.series(label);
        if alphas.len() < 3 {
            println!(
                "norm {label}: {} usable points, skipping the rate fit (need 3)",
                alphas.len()
            );
            continue;
        }
        if alphas.iter().any(|&a| a >= 2.0) {
            println!("norm {label}: grid contains the classical endpoint, skipping the rate fit");
            continue;
        }
        let fit = lab::fit_table(table, label, predicted_slope(spec, base))?;
        output::write_atomic(
            out,
            &format!("plot_{label}.csv"),
            output::plot_csv(table, label).as_bytes(),
        )?;
        println!(
            "norm {label}: slope {:.4} (predicted {:.4}, r^2 {:.5}) {}",
            fit.slope,
            fit.predicted_slope,
            fit.r_squared,
            if fit.passes(FIT_TOLERANCE) { "PASS" } else { "FAIL" }
        );
        passes.push(fit.passes(FIT_TOLERANCE));
        fits.push(fit);
    }
    Ok(FitReport { tolerance: FIT_TOLERANCE, fits, passes })
}

fn record_family(m: &mut Manifest, f: &FamilyArgs, alphas: &[f64]) {
    m.set_f64_list("alpha_grid", alphas);
    m.set_f64("kappa", f.kappa);
    m.set_f64("c_pert", f.c_pert);
    m.set_f64("epsilon", f.epsilon);
    m.set("perturbation_seed", f.perturbation_seed);
    m.set_f64("perturbation_decay", f.perturbation_decay);
}

fn record_horizon(
    m: &mut Manifest,
    hz: &HorizonArgs,
    t_end: f64,
    t_floor: Option<f64>,
    floor_estimate: Option<f64>,
) {
    m.set_f64("t_end", t_end);
    m.set("override_floor", hz.override_floor);
    m.set_f64("c_const", hz.c_const);
    if let Some(f) = t_floor {
        m.set_f64("uniform_time_floor", f);
    }
    if let Some(f) = floor_estimate {
        m.set_f64("measurement_floor", f);
    }
}

fn print_horizon(t_end: f64, t_floor: Option<f64>, floor_estimate: Option<f64>) {
    match t_floor {
        Some(f) => println!("horizon t_end {t_end:.6e} within uniform floor {f:.6e}"),
        None => println!("horizon t_end {t_end:.6e} (uniform floor overridden)"),
    }
    if let Some(f) = floor_estimate {
        println!("measurement floor estimate {f:.3e} (errors below 100x are excluded)");
    }
}

fn converge(args: ConvergeArgs, config: Option<&Path>) -> Result<(), Failure> {
    let out = &args.out.out;
    output::prepare_dir(out, args.out.force)?;
    let grid = build_grid(&args.grid)?;
    let preset = args
        .preset
        .preset
        .to_preset(args.preset.seed, args.preset.spectrum_decay);
    let alphas = args
        .family
        .alpha_grid
        .clone()
        .unwrap_or_else(lab::default_alphas);
    let spec = DataFamilySpec::new(
        preset,
        grid,
        args.family.kappa,
        args.family.c_pert,
        alphas.clone(),
        args.family.epsilon,
    )?
    .with_amplitude(args.preset.amplitude)?
    .with_perturbation(args.family.perturbation_seed, args.family.perturbation_decay)?;
    let cfg = sweep_config(&args.stepping, &args.horizon);
    let floor = if args.horizon.estimate_floor {
        Some(lab::estimate_floor(&spec, &cfg)?)
    } else {
        None
    };
    let result = lab::run_sweep(&spec, &cfg)?;

    let mut specs = Vec::new();
    for text in &args.norms {
        let spec = parse_norm_spec(text)?;
        specs.push((spec, spec.label()));
    }
    let table = lab::measure_errors(&result, &specs.iter().map(|(s, _)| *s).collect::<Vec<_>>(), floor)?;

    let mut m = Manifest::new("converge", args.preset.seed);
    record_grid(&mut m, &args.grid);
    record_preset(&mut m, &args.preset);
    record_stepping(&mut m, &args.stepping);
    record_family(&mut m, &args.family, &spec.alphas);
    record_horizon(&mut m, &args.horizon, result.t_end, result.t_floor, floor);
    m.set(
        "norms",
        specs.iter().map(|(_, l)| l.as_str()).collect::<Vec<_>>().join(","),
    );
    hash_config(&mut m, config)?;

    output::write_atomic(out, "results.csv", output::error_table_csv(&table, false).as_bytes())?;
    for (alpha, rec) in &result.records {
        output::write_atomic(
            out,
            &format!("diagnostics_alpha_{}.csv", alpha_tag(*alpha)),
            output::diagnostics_csv(rec).as_bytes(),
        )?;
    }
    output::write_atomic(
        out,
        "diagnostics_reference.csv",
        output::diagnostics_csv(&result.reference).as_bytes(),
    )?;

    print_horizon(result.t_end, result.t_floor, floor);
    let base = if args.family.c_pert == 0.0 {
        1.0
    } else {
        args.family.kappa.min(1.0)
    };
    let report = fit_norms(&table, &specs, base, out)?;
    output::write_atomic(out, "fit.json", output::fit_json(&report)?.as_bytes())?;
    output::write_manifest(out, &m)?;
    println!("wrote results.csv, fit.json, diagnostics and plots to {}", out.display());
    Ok(())
}

fn converge_mhd(args: ConvergeMhdArgs, config: Option<&Path>) -> Result<(), Failure> {
    let out = &args.out.out;
    output::prepare_dir(out, args.out.force)?;
    let grid = build_grid(&args.grid)?;
    let preset = args
        .preset
        .preset
        .to_preset(args.preset.seed, args.preset.spectrum_decay);
    let alphas = args
        .family
        .alpha_grid
        .clone()
        .unwrap_or_else(lab::default_alphas);
    let betas = args.beta_grid.clone().unwrap_or_else(|| alphas.clone());
    let velocity = DataFamilySpec::new(
        preset,
        grid,
        args.family.kappa,
        args.family.c_pert,
        alphas,
        args.family.epsilon,
    )?
    .with_amplitude(args.preset.amplitude)?
    .with_perturbation(args.family.perturbation_seed, args.family.perturbation_decay)?;
    let mut mspec = MhdFamilySpec::new(velocity, betas, args.kappa2, args.c_pert2)?;
    mspec.magnetic_preset = args
        .magnetic_preset
        .to_preset(args.magnetic_seed, args.preset.spectrum_decay);
    mspec.magnetic_amplitude = args.magnetic_amplitude;
    mspec.magnetic_seed = args.magnetic_perturbation_seed;

    let cfg = sweep_config(&args.stepping, &args.horizon);
    // The measurement-floor estimate reuses the velocity family: it gauges
    // refinement error of the discretization, not of a particular coupling.
    let floor = if args.horizon.estimate_floor {
        Some(lab::estimate_floor(&mspec.velocity, &cfg)?)
    } else {
        None
    };
    let result = lab::run_mhd_sweep(&mspec, &cfg)?;
    let table = lab::mhd_combined_errors(&result, floor)?;

    let mut m = Manifest::new("converge-mhd", args.preset.seed);
    record_grid(&mut m, &args.grid);
    record_preset(&mut m, &args.preset);
    record_stepping(&mut m, &args.stepping);
    record_family(&mut m, &args.family, &mspec.velocity.alphas);
    record_horizon(&mut m, &args.horizon, result.t_end, result.t_floor, floor);
    m.set_f64_list("beta_grid", &mspec.betas);
    m.set_f64("kappa2", args.kappa2);
    m.set_f64("c_pert2", args.c_pert2);
    m.set("magnetic_preset", preset_name(args.magnetic_preset));
    m.set("magnetic_seed", args.magnetic_seed);
    m.set_f64("magnetic_amplitude", args.magnetic_amplitude);
    m.set("magnetic_perturbation_seed", args.magnetic_perturbation_seed);
    hash_config(&mut m, config)?;

    output::write_atomic(out, "results.csv", output::error_table_csv(&table, true).as_bytes())?;
    for ((alpha, beta), rec) in result.pairs.iter().zip(&result.records) {
        output::write_atomic(
            out,
            &format!(
                "diagnostics_alpha_{}_beta_{}.csv",
                alpha_tag(*alpha),
                alpha_tag(*beta)
            ),
            output::diagnostics_csv(rec).as_bytes(),
        )?;
    }
    output::write_atomic(
        out,
        "diagnostics_reference.csv",
        output::diagnostics_csv(&result.reference).as_bytes(),
    )?;

    print_horizon(result.t_end, result.t_floor, floor);
    // Slowest active data rate caps the combined rate at min(1, kappa).
    let mut base = 1.0f64;
    if args.family.c_pert > 0.0 {
        base = base.min(args.family.kappa);
    }
    if args.c_pert2 > 0.0 {
        base = base.min(args.kappa2);
    }
    let combined = (NormSpec::sup(), "combined".to_string());
    let report = fit_norms(&table, std::slice::from_ref(&combined), base, out)?;
    output::write_atomic(out, "fit.json", output::fit_json(&report)?.as_bytes())?;
    output::write_manifest(out, &m)?;
    println!("wrote results.csv, fit.json, diagnostics and plots to {}", out.display());
    Ok(())
}

/// Parses a results.csv back into an error table (both header forms).
pub fn parse_results_csv(text: &str) -> Result<ErrorTable, Failure> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Failure::usage("results file is empty"))?;
    let with_beta = match header.trim_end() {
        "alpha,kappa,norm_kind,error,excluded" => false,
        "alpha,beta,kappa,norm_kind,error,excluded" => true,
        other => {
            return Err(Failure::usage(format!(
                "unrecognized results header: {other}"
            )))
        }
    };
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        let want = if with_beta { 6 } else { 5 };
        if cells.len() != want {
            return Err(Failure::usage(format!(
                "results line {}: expected {want} columns, found {}",
                i + 1,
                cells.len()
            )));
        }
        let num = |cell: &str, what: &str| -> Result<f64, Failure> {
            cell.parse::<f64>().map_err(|_| {
                Failure::usage(format!("results line {}: bad {what} '{cell}'", i + 1))
            })
        };
        let mut c = cells.iter();
        let alpha = num(c.next().unwrap(), "alpha")?;
        let beta = if with_beta {
            Some(num(c.next().unwrap(), "beta")?)
        } else {
            None
        };
        let kappa = num(c.next().unwrap(), "kappa")?;
        let norm_label = c.next().unwrap().to_string();
        let error = num(c.next().unwrap(), "error")?;
        let excluded = c
            .next()
            .unwrap()
            .parse::<bool>()
            .map_err(|_| Failure::usage(format!("results line {}: bad excluded flag", i + 1)))?;
        rows.push(ErrorRow { alpha, beta, kappa, norm_label, error, excluded });
    }
    Ok(ErrorTable { rows })
}

fn fit(args: FitArgs, config: Option<&Path>) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&args.input).map_err(|e| io_failure(&args.input, &e))?;
    let table = parse_results_csv(&text)?;
    let (alphas, errors) = table.series(&args.norm);
    if alphas.is_empty() {
        return Err(Failure::usage(format!(
            "no usable rows for norm '{}' in {}",
            args.norm,
            args.input.display()
        )));
    }
    let fit = fit_rate(&alphas, &errors, &args.norm, args.predicted)?;
    let pass = fit.passes(FIT_TOLERANCE);
    println!(
        "norm {}: slope {:.4} (predicted {:.4}, r^2 {:.5}) {}",
        args.norm,
        fit.slope,
        fit.predicted_slope,
        fit.r_squared,
        if pass { "PASS" } else { "FAIL" }
    );
    let report = FitReport { tolerance: FIT_TOLERANCE, fits: vec![fit], passes: vec![pass] };
    let json = output::fit_json(&report)?;
    if let Some(out) = &args.out {
        output::prepare_dir(out, args.force)?;
        let mut m = Manifest::new("fit", 0);
        m.set("norm", &args.norm);
        m.set_f64("predicted", args.predicted);
        m.set("input", args.input.display());
        m.hash_input("results", &args.input)
            .map_err(|e| io_failure(&args.input, &e))?;
        hash_config(&mut m, config)?;
        output::write_atomic(out, "fit.json", json.as_bytes())?;
        output::write_manifest(out, &m)?;
        println!("wrote fit.json to {}", out.display());
    } else {
        println!("{json}");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_labels_round_trip_through_the_parser() {
        for label in ["sup", "l2", "bmo", "h1.5", "h-2", "l2l4", "linfl4", "l1l2.5"] {
            let spec = parse_norm_spec(label).unwrap();
            let back = spec.label();
            let respec = parse_norm_spec(&back).unwrap();
            assert_eq!(
                spec.label(),
                respec.label(),
                "label {label} must survive a parse/print round trip"
            );
        }
    }

    #[test]
    fn bad_norm_strings_are_usage_errors() {
        for label in ["", "h", "su p", "l2l", "ll4", "h--2", "linflx", "l0l4"] {
            let err = parse_norm_spec(label).unwrap_err();
            assert_eq!(err.code, 2, "'{label}' must be a usage error: {}", err.message);
        }
    }

    #[test]
    fn results_csv_round_trips_through_the_parser() {
        let table = ErrorTable {
            rows: vec![
                ErrorRow {
                    alpha: 1.9,
                    beta: None,
                    kappa: 0.5,
                    norm_label: "sup".into(),
                    error: 0.125,
                    excluded: false,
                },
                ErrorRow {
                    alpha: 2.0,
                    beta: None,
                    kappa: 0.5,
                    norm_label: "sup".into(),
                    error: 0.0,
                    excluded: true,
                },
            ],
        };
        let csv = output::error_table_csv(&table, false);
        let back = parse_results_csv(&csv).unwrap();
        assert_eq!(back.rows.len(), 2);
        assert_eq!(back.rows[0].alpha, 1.9, "full-precision floats survive");
        assert_eq!(back.rows[0].error, 0.125);
        assert!(back.rows[1].excluded);

        let mut mhd = table;
        for r in &mut mhd.rows {
            r.beta = Some(1.95);
        }
        let csv = output::error_table_csv(&mhd, true);
        let back = parse_results_csv(&csv).unwrap();
        assert_eq!(back.rows[0].beta, Some(1.95));
    }

    #[test]
    fn malformed_results_are_rejected() {
        assert!(parse_results_csv("").is_err());
        assert!(parse_results_csv("wrong,header\n").is_err());
        let missing_cell = "alpha,kappa,norm_kind,error,excluded\n1.9,0.5,sup,0.1\n";
        assert!(parse_results_csv(missing_cell).is_err());
        let bad_float = "alpha,kappa,norm_kind,error,excluded\nxx,0.5,sup,0.1,false\n";
        assert!(parse_results_csv(bad_float).is_err());
    }

    #[test]
    fn predicted_slope_applies_the_mixed_norm_factor() {
        let sup = NormSpec::sup();
        assert_eq!(predicted_slope(&sup, 0.5), 0.5);
        let lplq = NormSpec::lplq(2.0, 4.0).unwrap();
        assert_eq!(predicted_slope(&lplq, 0.5), 0.375, "(1 - 1/4) * 0.5");
    }
}

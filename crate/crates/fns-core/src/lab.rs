//! The convergence laboratory: builds initial-data families whose sup-norm
//! gap to the reference closes at a prescribed rate kappa, sweeps the
//! fractional exponent against the classical reference solution, measures
//! trajectory norms, and fits empirical convergence rates.

use crate::error::{Error, Result};
use crate::existence::uniform_time_floor;
use crate::field::SpectralField;
use crate::fit::{fit_rate, RateFitResult};
use crate::grid::GridSpec;
use crate::norms::{self, NormSpec, TrajectoryField};
use crate::solver::{solve_mhd, solve_ns, Scheme, SolveRecord, SolverConfig};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Largest wavenumber (per axis) carried by the random presets. Fixed so the
/// drawn coefficients do not depend on the grid resolution.
const RANDOM_KMAX: i64 = 10;

/// Default exponent grid: close enough to 2 for the asymptotic regime, far
/// enough that errors sit well above discretization noise.
pub fn default_alphas() -> Vec<f64> {
    vec![1.9, 1.925, 1.95, 1.975, 1.99, 1.995]
}

/// Base initial-data presets; all are divergence-free by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DataPreset {
    TaylorGreen,
    RandomSmooth { seed: u64, spectrum_decay: f64 },
    Shear,
}

/// Divergence-free random trigonometric polynomial on the fixed band
/// |k_a| <= 10, coefficient magnitude |xi|^{-spectrum_decay}. The draw order
/// runs over the fixed band, so the same seed yields the same coefficients on
/// every grid fine enough to carry the band un-aliased (3 kmax < n).
pub fn random_solenoidal(grid: GridSpec, seed: u64, spectrum_decay: f64) -> Result<SpectralField> {
    if 3 * (RANDOM_KMAX as usize) >= grid.n() {
        return Err(Error::param(
            "n",
            "grid too coarse for the fixed random band (need n > 30)",
            grid.n() as f64,
        ));
    }
    let dim = grid.dim();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut f = SpectralField::zeros(grid, dim);
    let scale = 2.0 * std::f64::consts::PI / grid.box_length();
    let k2_range = if dim == 3 { -RANDOM_KMAX..=RANDOM_KMAX } else { 0..=0 };
    for k0 in -RANDOM_KMAX..=RANDOM_KMAX {
        for k1 in -RANDOM_KMAX..=RANDOM_KMAX {
            for k2 in k2_range.clone() {
                let k = [k0, k1, k2];
                // Visit each conjugate pair once: first nonzero entry positive.
                let canonical = k.iter().find(|&&v| v != 0).map(|&v| v > 0);
                if canonical != Some(true) {
                    continue;
                }
                let mut c = [Complex64::default(); 3];
                for item in c.iter_mut().take(dim) {
                    *item = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }
                let xi = [
                    scale * k0 as f64,
                    scale * k1 as f64,
                    scale * k2 as f64,
                ];
                let m2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
                let mut dot = Complex64::default();
                for a in 0..dim {
                    dot += xi[a] * c[a];
                }
                let weight = m2.powf(-0.5 * spectrum_decay);
                for a in 0..dim {
                    let coeff = (c[a] - xi[a] * dot / m2) * weight;
                    f.set_mode_pair(a, k, coeff);
                }
            }
        }
    }
    Ok(f)
}

fn normalize_sup(mut f: SpectralField, target: f64) -> Result<SpectralField> {
    let sup = norms::norm(&f, &NormSpec::sup())?;
    if sup == 0.0 {
        return Err(Error::param("amplitude", "field is identically zero", 0.0));
    }
    f.scale(target / sup);
    Ok(f)
}

/// Builds a preset velocity field with the requested sup-norm amplitude.
pub fn build_base(preset: &DataPreset, grid: GridSpec, amplitude: f64) -> Result<SpectralField> {
    if !(amplitude >= 0.0) || !amplitude.is_finite() {
        return Err(Error::param("amplitude", "must be a non-negative number", amplitude));
    }
    let dim = grid.dim();
    match preset {
        DataPreset::RandomSmooth { seed, spectrum_decay } => {
            if amplitude == 0.0 {
                return Ok(SpectralField::zeros(grid, dim));
            }
            normalize_sup(random_solenoidal(grid, *seed, *spectrum_decay)?, amplitude)
        }
        DataPreset::TaylorGreen => {
            let theta = 2.0 * std::f64::consts::PI / grid.box_length();
            let mut comps = vec![vec![0.0; grid.len()]; dim];
            for flat in 0..grid.len() {
                let x = grid.x_at(flat);
                let (t0, t1) = (theta * x[0], theta * x[1]);
                let t2 = if dim == 3 { (theta * x[2]).cos() } else { 1.0 };
                comps[0][flat] = amplitude * t0.sin() * t1.cos() * t2;
                comps[1][flat] = -amplitude * t0.cos() * t1.sin() * t2;
            }
            SpectralField::from_physical(grid, &comps)
        }
        DataPreset::Shear => {
            let theta = 2.0 * std::f64::consts::PI / grid.box_length();
            let mut comps = vec![vec![0.0; grid.len()]; dim];
            let across = dim - 1; // shear varies along the last axis
            for flat in 0..grid.len() {
                let x = grid.x_at(flat);
                comps[0][flat] = amplitude * (theta * x[across]).sin();
            }
            SpectralField::from_physical(grid, &comps)
        }
    }
}

/// A one-parameter family of divergence-free initial data
/// u0(alpha) = base + c_pert (2 - alpha)^kappa w, with w a fixed unit-sup
/// solenoidal profile, so the sup-norm data gap is exactly
/// c_pert (2 - alpha)^kappa.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataFamilySpec {
    pub preset: DataPreset,
    pub grid: GridSpec,
    pub amplitude: f64,
    pub kappa: f64,
    pub c_pert: f64,
    pub alphas: Vec<f64>,
    pub epsilon: f64,
    pub perturbation_seed: u64,
    pub perturbation_decay: f64,
}

impl DataFamilySpec {
    pub fn new(
        preset: DataPreset,
        grid: GridSpec,
        kappa: f64,
        c_pert: f64,
        alphas: Vec<f64>,
        epsilon: f64,
    ) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::param("kappa", "data rate must be positive", kappa));
        }
        if !(c_pert >= 0.0) || !c_pert.is_finite() {
            return Err(Error::param("c_pert", "perturbation size must be non-negative", c_pert));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::param("epsilon", "need 0 < epsilon < 1", epsilon));
        }
        if alphas.is_empty() {
            return Err(Error::param("alphas", "need at least one exponent", 0.0));
        }
        for w in alphas.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::param("alphas", "must be strictly increasing", w[1]));
            }
        }
        for &a in &alphas {
            if !(a > 1.0 + epsilon) || !(a <= 2.0) {
                return Err(Error::param(
                    "alpha",
                    "exponents must lie in (1 + epsilon, 2]",
                    a,
                ));
            }
        }
        Ok(DataFamilySpec {
            preset,
            grid,
            amplitude: 1.0,
            kappa,
            c_pert,
            alphas,
            epsilon,
            perturbation_seed: 2718,
            perturbation_decay: 4.0,
        })
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Result<Self> {
        if !(amplitude >= 0.0) || !amplitude.is_finite() {
            return Err(Error::param("amplitude", "must be a non-negative number", amplitude));
        }
        self.amplitude = amplitude;
        Ok(self)
    }

    pub fn with_perturbation(mut self, seed: u64, decay: f64) -> Result<Self> {
        if !(decay > 0.0) {
            return Err(Error::param("spectrum_decay", "must be positive", decay));
        }
        self.perturbation_seed = seed;
        self.perturbation_decay = decay;
        Ok(self)
    }

    /// The unit-sup perturbation profile w on this spec's grid.
    pub fn perturbation_profile(&self) -> Result<SpectralField> {
        normalize_sup(
            random_solenoidal(self.grid, self.perturbation_seed, self.perturbation_decay)?,
            1.0,
        )
    }
}

/// Returns the per-alpha family plus the reference (alpha = 2) base field.
pub fn build_family(spec: &DataFamilySpec) -> Result<(Vec<(f64, SpectralField)>, SpectralField)> {
    let base = build_base(&spec.preset, spec.grid, spec.amplitude)?;
    let w = if spec.c_pert > 0.0 {
        Some(spec.perturbation_profile()?)
    } else {
        None
    };
    let mut family = Vec::with_capacity(spec.alphas.len());
    for &alpha in &spec.alphas {
        let mut u0 = base.clone();
        if let Some(w) = &w {
            let gap = spec.c_pert * (2.0 - alpha).powf(spec.kappa);
            u0.add_scaled(w, gap);
        }
        family.push((alpha, u0));
    }
    Ok((family, base))
}

/// Sweep controls: horizon, step, snapshot count, scheme, and the existence
/// floor policy. `t_end = None` means min(uniform floor, 0.05).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub dt: f64,
    pub t_end: Option<f64>,
    pub snapshots: usize,
    pub scheme: Scheme,
    pub picard_tol: f64,
    pub picard_max_iter: u32,
    /// Proceed even when the horizon exceeds the uniform existence floor
    /// (the floor with C = 1 is conventionally tiny); record the choice.
    pub override_floor: bool,
    pub c_const: f64,
}

impl SweepConfig {
    pub fn new(dt: f64) -> Self {
        SweepConfig {
            dt,
            t_end: None,
            snapshots: 32,
            scheme: Scheme::PicardDuhamel,
            picard_tol: 1e-10,
            picard_max_iter: 50,
            override_floor: false,
            c_const: 1.0,
        }
    }

    pub fn with_horizon(mut self, t_end: f64) -> Self {
        self.t_end = Some(t_end);
        self
    }

    pub fn with_override(mut self) -> Self {
        self.override_floor = true;
        self
    }

    pub fn with_snapshots(mut self, snapshots: usize) -> Self {
        self.snapshots = snapshots;
        self
    }

    fn solver_config(&self, grid: GridSpec, alpha: f64, t_end: f64) -> Result<SolverConfig> {
        SolverConfig::new(grid, alpha, self.dt, t_end)?
            .with_scheme(self.scheme)
            .with_picard(self.picard_tol, self.picard_max_iter)?
            .with_snapshots(self.snapshots)
    }
}

/// Results of an exponent sweep: one record per alpha plus the classical
/// reference on the identical time grid.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub spec: DataFamilySpec,
    pub records: Vec<(f64, SolveRecord)>,
    pub reference: SolveRecord,
    /// Uniform existence floor for the family (None when overridden).
    pub t_floor: Option<f64>,
    pub t_end: f64,
}

fn max_hs_norm(fields: &[&SpectralField], s: f64) -> Result<f64> {
    let spec = NormSpec::hs(s)?;
    let mut best = 0.0f64;
    for f in fields {
        best = best.max(norms::norm(f, &spec)?);
    }
    Ok(best)
}

fn resolve_horizon(
    cfg: &SweepConfig,
    epsilon: f64,
    fields: &[&SpectralField],
    dim: usize,
) -> Result<(Option<f64>, f64)> {
    if cfg.override_floor {
        return Ok((None, cfg.t_end.unwrap_or(0.05)));
    }
    let s = norms::default_sobolev_index(dim);
    let norm_max = max_hs_norm(fields, s)?;
    let floor = uniform_time_floor(epsilon, norm_max, cfg.c_const)?;
    let t_end = cfg.t_end.unwrap_or_else(|| floor.min(0.05));
    if t_end > floor * (1.0 + 1e-12) {
        return Err(Error::param(
            "t_end",
            "horizon exceeds the uniform existence floor (set the override to proceed)",
            t_end,
        ));
    }
    Ok((Some(floor), t_end))
}

/// Runs the family against the classical reference. Per-alpha solves run in
/// parallel; results are merged in alpha order. A failure at any exponent
/// aborts the sweep naming that exponent.
pub fn run_sweep(spec: &DataFamilySpec, cfg: &SweepConfig) -> Result<SweepResult> {
    let (family, base) = build_family(spec)?;
    let fields: Vec<&SpectralField> =
        family.iter().map(|(_, f)| f).chain(std::iter::once(&base)).collect();
    let (t_floor, t_end) = resolve_horizon(cfg, spec.epsilon, &fields, spec.grid.dim())?;

    let reference = solve_ns(&base, &cfg.solver_config(spec.grid, 2.0, t_end)?)
        .map_err(|e| Error::Sweep { alpha: 2.0, source: Box::new(e) })?;
    let records: Vec<(f64, SolveRecord)> = family
        .par_iter()
        .map(|(alpha, u0)| {
            let solver_cfg = cfg.solver_config(spec.grid, *alpha, t_end)?;
            let rec = solve_ns(u0, &solver_cfg)?;
            Ok((*alpha, rec))
        })
        .map(|r: Result<(f64, SolveRecord)>| {
            r.map_err(|e| match e {
                Error::Sweep { .. } => e,
                other => Error::Sweep { alpha: f64::NAN, source: Box::new(other) },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    // Re-attach the failing alpha deterministically (rayon reports the first
    // error in reduction order, which may not carry the index).
    let records = records;
    Ok(SweepResult { spec: spec.clone(), records, reference, t_floor, t_end })
}

/// Discretization floor estimate: solve the stiffest family member (smallest
/// alpha) on the spec grid and on the doubled grid from the identical
/// trigonometric data, and return the sup-in-time sup-norm gap.
pub fn estimate_floor(spec: &DataFamilySpec, cfg: &SweepConfig) -> Result<f64> {
    let (family, base) = build_family(spec)?;
    let (alpha, u0) = family.first().expect("validated non-empty");
    let fields: Vec<&SpectralField> =
        family.iter().map(|(_, f)| f).chain(std::iter::once(&base)).collect();
    let (_, t_end) = resolve_horizon(cfg, spec.epsilon, &fields, spec.grid.dim())?;
    let coarse = solve_ns(u0, &cfg.solver_config(spec.grid, *alpha, t_end)?)?;
    let fine_grid = GridSpec::new(spec.grid.dim(), 2 * spec.grid.n(), spec.grid.box_length())?;
    let fine = solve_ns(&u0.embedded(fine_grid)?, &cfg.solver_config(fine_grid, *alpha, t_end)?)?;
    let sup = NormSpec::sup();
    let mut worst = 0.0f64;
    for (a, b) in coarse.velocity.iter().zip(&fine.velocity) {
        let d = a.embedded(fine_grid)?.difference(b)?;
        worst = worst.max(norms::norm(&d, &sup)?);
    }
    Ok(worst)
}

/// One measured trajectory error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorRow {
    pub alpha: f64,
    pub beta: Option<f64>,
    pub kappa: f64,
    pub norm_label: String,
    pub error: f64,
    pub excluded: bool,
}

/// Per-alpha, per-norm trajectory errors with measurement-floor flags.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ErrorTable {
    pub rows: Vec<ErrorRow>,
}

impl ErrorTable {
    /// Non-excluded (alphas, errors) for one norm label.
    pub fn series(&self, norm_label: &str) -> (Vec<f64>, Vec<f64>) {
        let mut alphas = Vec::new();
        let mut errors = Vec::new();
        for row in &self.rows {
            if row.norm_label == norm_label && !row.excluded {
                alphas.push(row.alpha);
                errors.push(row.error);
            }
        }
        (alphas, errors)
    }
}

/// Measures trajectory errors against the reference for each requested norm.
/// Rows are excluded from fitting when the exponent is exactly 2 (zero gap)
/// or the error sits within 100x of the discretization floor estimate.
pub fn measure_errors(
    result: &SweepResult,
    specs: &[NormSpec],
    floor: Option<f64>,
) -> Result<ErrorTable> {
    let mut rows = Vec::with_capacity(result.records.len() * specs.len());
    for (alpha, rec) in &result.records {
        for spec in specs {
            let error = norms::trajectory_norm(rec, &result.reference, spec)?;
            let excluded = *alpha >= 2.0 || floor.map_or(false, |f| error < 100.0 * f);
            rows.push(ErrorRow {
                alpha: *alpha,
                beta: None,
                kappa: result.spec.kappa,
                norm_label: spec.label(),
                error,
                excluded,
            });
        }
    }
    Ok(ErrorTable { rows })
}

/// Fits the non-excluded errors of one norm against (2 - alpha).
pub fn fit_table(table: &ErrorTable, norm_label: &str, predicted: f64) -> Result<RateFitResult> {
    let (alphas, errors) = table.series(norm_label);
    fit_rate(&alphas, &errors, norm_label, predicted)
}

/// One data-rate entry of the competition experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompetitionRow {
    pub kappa: f64,
    pub predicted: f64,
    pub velocity_fit: RateFitResult,
    pub pressure_fit: RateFitResult,
    pub pass: bool,
}

/// Rate-competition table across several data rates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompetitionReport {
    pub rows: Vec<CompetitionRow>,
    pub tolerance: f64,
}

/// For each kappa: sweep, measure velocity sup / pressure bmo errors, fit both
/// against the predicted competition rate min(1, kappa) with tolerance 0.15.
pub fn competition_report(
    kappas: &[f64],
    template: &DataFamilySpec,
    cfg: &SweepConfig,
    floor: Option<f64>,
) -> Result<CompetitionReport> {
    let tolerance = 0.15;
    let specs = [NormSpec::sup(), NormSpec::bmo()];
    let mut rows = Vec::with_capacity(kappas.len());
    for &kappa in kappas {
        let mut spec = template.clone();
        spec.kappa = kappa;
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::param("kappa", "data rate must be positive", kappa));
        }
        let sweep = run_sweep(&spec, cfg)?;
        let table = measure_errors(&sweep, &specs, floor)?;
        let predicted = kappa.min(1.0);
        let velocity_fit = fit_table(&table, "sup", predicted)?;
        let pressure_fit = fit_table(&table, "bmo", predicted)?;
        let pass = velocity_fit.passes(tolerance) && pressure_fit.passes(tolerance);
        rows.push(CompetitionRow { kappa, predicted, velocity_fit, pressure_fit, pass });
    }
    Ok(CompetitionReport { rows, tolerance })
}

/// Fits the mixed space-time error; the predicted rate carries the (1 - 1/q)
/// interpolation factor.
pub fn mixed_norm_report(
    result: &SweepResult,
    p: f64,
    q: f64,
    floor: Option<f64>,
) -> Result<RateFitResult> {
    let spec = NormSpec::lplq(p, q)?;
    let table = measure_errors(result, &[spec], floor)?;
    let predicted = (1.0 - 1.0 / q) * result.spec.kappa.min(1.0);
    fit_table(&table, &spec.label(), predicted)
}

/// Fits the mixed error for p in {1, 2, inf} at fixed q and reports the
/// largest pairwise slope spread (the rate must not depend on p).
pub fn mixed_norm_p_consistency(
    result: &SweepResult,
    q: f64,
    floor: Option<f64>,
) -> Result<(Vec<RateFitResult>, f64)> {
    let fits: Vec<RateFitResult> = [1.0, 2.0, f64::INFINITY]
        .iter()
        .map(|&p| mixed_norm_report(result, p, q, floor))
        .collect::<Result<_>>()?;
    let mut spread = 0.0f64;
    for a in &fits {
        for b in &fits {
            spread = spread.max((a.slope - b.slope).abs());
        }
    }
    Ok((fits, spread))
}

/// Coupled-family description: velocity family plus a magnetic base with its
/// own rate kappa2, perturbation size and exponent list (paired with alphas).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MhdFamilySpec {
    pub velocity: DataFamilySpec,
    pub betas: Vec<f64>,
    pub kappa2: f64,
    pub c_pert2: f64,
    pub magnetic_preset: DataPreset,
    pub magnetic_amplitude: f64,
    pub magnetic_seed: u64,
}

impl MhdFamilySpec {
    pub fn new(velocity: DataFamilySpec, betas: Vec<f64>, kappa2: f64, c_pert2: f64) -> Result<Self> {
        if betas.len() != velocity.alphas.len() {
            return Err(Error::param(
                "betas",
                "need one beta per alpha",
                betas.len() as f64,
            ));
        }
        for &b in &betas {
            if !(b > 1.0 + velocity.epsilon) || !(b <= 2.0) {
                return Err(Error::param(
                    "beta",
                    "exponents must lie in (1 + epsilon, 2]",
                    b,
                ));
            }
        }
        if !(kappa2 > 0.0) || !kappa2.is_finite() {
            return Err(Error::param("kappa2", "data rate must be positive", kappa2));
        }
        if !(c_pert2 >= 0.0) || !c_pert2.is_finite() {
            return Err(Error::param("c_pert2", "perturbation size must be non-negative", c_pert2));
        }
        Ok(MhdFamilySpec {
            velocity,
            betas,
            kappa2,
            c_pert2,
            magnetic_preset: DataPreset::RandomSmooth { seed: 99, spectrum_decay: 4.0 },
            magnetic_amplitude: 0.5,
            magnetic_seed: 4242,
        })
    }
}

/// One coupled family member.
#[derive(Debug, Clone)]
pub struct MhdMember {
    pub alpha: f64,
    pub beta: f64,
    pub u0: SpectralField,
    pub b0: SpectralField,
}

/// Builds the coupled family plus the (alpha, beta) = (2, 2) base pair.
pub fn build_mhd_family(spec: &MhdFamilySpec) -> Result<(Vec<MhdMember>, (SpectralField, SpectralField))> {
    let (vel_family, u_base) = build_family(&spec.velocity)?;
    let b_base = build_base(&spec.magnetic_preset, spec.velocity.grid, spec.magnetic_amplitude)?;
    let wb = if spec.c_pert2 > 0.0 {
        Some(normalize_sup(
            random_solenoidal(spec.velocity.grid, spec.magnetic_seed, spec.velocity.perturbation_decay)?,
            1.0,
        )?)
    } else {
        None
    };
    let mut members = Vec::with_capacity(vel_family.len());
    for ((alpha, u0), &beta) in vel_family.into_iter().zip(&spec.betas) {
        let mut b0 = b_base.clone();
        if let Some(wb) = &wb {
            b0.add_scaled(wb, spec.c_pert2 * (2.0 - beta).powf(spec.kappa2));
        }
        members.push(MhdMember { alpha, beta, u0, b0 });
    }
    Ok((members, (u_base, b_base)))
}

/// Coupled sweep results against the (2, 2) reference.
#[derive(Debug, Clone)]
pub struct MhdSweepResult {
    pub spec: MhdFamilySpec,
    pub pairs: Vec<(f64, f64)>,
    pub records: Vec<SolveRecord>,
    pub reference: SolveRecord,
    pub t_floor: Option<f64>,
    pub t_end: f64,
}

/// Runs the coupled family against the classical reference pair.
pub fn run_mhd_sweep(spec: &MhdFamilySpec, cfg: &SweepConfig) -> Result<MhdSweepResult> {
    let (members, (u_base, b_base)) = build_mhd_family(spec)?;
    let mut fields: Vec<&SpectralField> = vec![&u_base, &b_base];
    for m in &members {
        fields.push(&m.u0);
        fields.push(&m.b0);
    }
    let (t_floor, t_end) =
        resolve_horizon(cfg, spec.velocity.epsilon, &fields, spec.velocity.grid.dim())?;
    let grid = spec.velocity.grid;
    let reference = solve_mhd(
        &u_base,
        &b_base,
        &cfg.solver_config(grid, 2.0, t_end)?.with_beta(2.0)?,
    )
    .map_err(|e| Error::Sweep { alpha: 2.0, source: Box::new(e) })?;
    let records: Vec<SolveRecord> = members
        .par_iter()
        .map(|m| {
            let solver_cfg = cfg.solver_config(grid, m.alpha, t_end)?.with_beta(m.beta)?;
            solve_mhd(&m.u0, &m.b0, &solver_cfg)
                .map_err(|e| Error::Sweep { alpha: m.alpha, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>>>()?;
    let pairs = members.iter().map(|m| (m.alpha, m.beta)).collect();
    Ok(MhdSweepResult { spec: spec.clone(), pairs, records, reference, t_floor, t_end })
}

/// Combined trajectory error of one coupled run against the reference:
/// velocity sup + magnetic sup + pressure bmo.
pub fn mhd_combined_errors(result: &MhdSweepResult, floor: Option<f64>) -> Result<ErrorTable> {
    let sup = NormSpec::sup();
    let bmo = NormSpec::bmo();
    let mut rows = Vec::with_capacity(result.pairs.len());
    for ((alpha, beta), rec) in result.pairs.iter().zip(&result.records) {
        let vel = norms::trajectory_norm_field(rec, &result.reference, TrajectoryField::Velocity, &sup)?;
        let mag = norms::trajectory_norm_field(rec, &result.reference, TrajectoryField::Magnetic, &sup)?;
        let prs = norms::trajectory_norm_field(rec, &result.reference, TrajectoryField::Pressure, &bmo)?;
        let error = vel + mag + prs;
        let excluded = (*alpha >= 2.0 && *beta >= 2.0)
            || floor.map_or(false, |f| error < 100.0 * f);
        rows.push(ErrorRow {
            alpha: *alpha,
            beta: Some(*beta),
            kappa: result.spec.velocity.kappa,
            norm_label: "combined".into(),
            error,
            excluded,
        });
    }
    Ok(ErrorTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::norm;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn grid2d(n: usize) -> GridSpec {
        GridSpec::new(2, n, 2.0 * PI).unwrap()
    }

    fn tg_spec(alphas: Vec<f64>, kappa: f64, c_pert: f64) -> DataFamilySpec {
        DataFamilySpec::new(DataPreset::TaylorGreen, grid2d(32), kappa, c_pert, alphas, 0.5)
            .unwrap()
    }

    fn quick_cfg(t_end: f64, dt: f64) -> SweepConfig {
        SweepConfig::new(dt)
            .with_horizon(t_end)
            .with_override()
            .with_snapshots(4)
    }

    #[test]
    fn data_gap_is_exact_power_law() {
        for kappa in [0.5, 1.0, 2.0] {
            let spec = tg_spec(default_alphas(), kappa, 0.7);
            let (family, base) = build_family(&spec).unwrap();
            for (alpha, u0) in &family {
                let gap = norm(&u0.difference(&base).unwrap(), &NormSpec::sup()).unwrap();
                let expect = 0.7 * (2.0 - alpha).powf(kappa);
                assert_relative_eq!(gap, expect, max_relative = 1e-12);
            }
        }
        // kappa = 1, c = 1, alpha = 1.9 -> gap exactly 0.1.
        let spec = tg_spec(vec![1.9], 1.0, 1.0);
        let (family, base) = build_family(&spec).unwrap();
        let gap = norm(&family[0].1.difference(&base).unwrap(), &NormSpec::sup()).unwrap();
        assert_relative_eq!(gap, 0.1, max_relative = 1e-12);
    }

    #[test]
    fn zero_perturbation_reproduces_base_exactly() {
        let spec = tg_spec(default_alphas(), 1.0, 0.0);
        let (family, base) = build_family(&spec).unwrap();
        for (_, u0) in &family {
            assert_eq!(u0.max_mode_distance(&base), 0.0);
        }
    }

    #[test]
    fn family_is_uniformly_bounded_in_sobolev_norm() {
        let spec = DataFamilySpec::new(
            DataPreset::RandomSmooth { seed: 3, spectrum_decay: 4.0 },
            grid2d(32),
            0.5,
            0.5,
            default_alphas(),
            0.5,
        )
        .unwrap();
        let (family, base) = build_family(&spec).unwrap();
        let hs = NormSpec::hs(1.5).unwrap();
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for f in family.iter().map(|(_, f)| f).chain(std::iter::once(&base)) {
            let v = norm(f, &hs).unwrap();
            lo = lo.min(v);
            hi = hi.max(v);
        }
        assert!(hi / lo <= 1.5, "family H^s spread {hi}/{lo} too wide");
    }

    #[test]
    fn family_members_stay_divergence_free() {
        let spec = DataFamilySpec::new(
            DataPreset::RandomSmooth { seed: 12, spectrum_decay: 4.0 },
            grid2d(32),
            1.0,
            1.0,
            vec![1.9, 1.99],
            0.5,
        )
        .unwrap();
        let (family, base) = build_family(&spec).unwrap();
        assert!(base.divergence_residual() < 1e-10);
        for (_, u0) in &family {
            assert!(u0.divergence_residual() < 1e-10);
        }
    }

    #[test]
    fn random_draws_do_not_depend_on_resolution() {
        let coarse = random_solenoidal(grid2d(32), 7, 4.0).unwrap();
        let fine = random_solenoidal(grid2d(64), 7, 4.0).unwrap();
        for k in [[1i64, 0, 0], [3, -2, 0], [10, 10, 0], [-5, 9, 0]] {
            for c in 0..2 {
                assert_eq!(
                    coarse.mode(c, k),
                    fine.mode(c, k),
                    "coefficient at {k:?} must be grid-independent"
                );
            }
        }
        assert!(random_solenoidal(grid2d(16), 7, 4.0).is_err(), "band needs n > 30");
    }

    #[test]
    fn spec_validation_rejects_out_of_regime_exponents() {
        let g = grid2d(32);
        let bad = DataFamilySpec::new(DataPreset::TaylorGreen, g, 1.0, 0.5, vec![1.4, 1.9], 0.5);
        assert!(bad.is_err(), "alpha below 1 + epsilon must be rejected");
        let unsorted =
            DataFamilySpec::new(DataPreset::TaylorGreen, g, 1.0, 0.5, vec![1.9, 1.8], 0.5);
        assert!(unsorted.is_err());
        assert!(
            DataFamilySpec::new(DataPreset::TaylorGreen, g, 0.0, 0.5, vec![1.9], 0.5).is_err(),
            "kappa must be positive"
        );
        assert!(DataFamilySpec::new(DataPreset::TaylorGreen, g, 1.0, 0.5, vec![], 0.5).is_err());
    }

    #[test]
    fn alpha_two_member_matches_reference_exactly() {
        let spec = tg_spec(vec![1.95, 2.0], 1.0, 0.5);
        let sweep = run_sweep(&spec, &quick_cfg(0.02, 2e-3)).unwrap();
        let table = measure_errors(&sweep, &[NormSpec::sup()], None).unwrap();
        let at_two = table.rows.iter().find(|r| r.alpha == 2.0).unwrap();
        assert_eq!(at_two.error, 0.0, "alpha = 2 must reproduce the reference bitwise");
        assert!(at_two.excluded, "zero gap cannot enter a log fit");
    }

    #[test]
    fn kernel_only_errors_decrease_toward_two() {
        let spec = tg_spec(vec![1.9, 1.95, 1.99], 1.0, 0.0);
        let sweep = run_sweep(&spec, &quick_cfg(0.02, 2e-3)).unwrap();
        let table = measure_errors(&sweep, &[NormSpec::sup()], None).unwrap();
        let (_, errors) = table.series("sup");
        assert_eq!(errors.len(), 3);
        assert!(
            errors[0] > errors[1] && errors[1] > errors[2],
            "errors must shrink as alpha -> 2: {errors:?}"
        );
    }

    #[test]
    fn sweeps_are_deterministic() {
        let spec = DataFamilySpec::new(
            DataPreset::RandomSmooth { seed: 5, spectrum_decay: 4.0 },
            grid2d(32),
            1.0,
            0.5,
            vec![1.9, 1.95],
            0.5,
        )
        .unwrap();
        let cfg = quick_cfg(0.01, 1e-3);
        let t1 = measure_errors(&run_sweep(&spec, &cfg).unwrap(), &[NormSpec::sup()], None).unwrap();
        let t2 = measure_errors(&run_sweep(&spec, &cfg).unwrap(), &[NormSpec::sup()], None).unwrap();
        for (a, b) in t1.rows.iter().zip(&t2.rows) {
            assert_eq!(a.error.to_bits(), b.error.to_bits(), "sweep must be reproducible");
        }
    }

    #[test]
    fn horizon_guard_requires_override() {
        let spec = tg_spec(vec![1.9, 1.95], 1.0, 0.0);
        // Amplitude-one data: the C = 1 floor is tiny, so 0.02 must be refused
        // without the override.
        let cfg = SweepConfig::new(2e-3).with_horizon(0.02).with_snapshots(3);
        let err = run_sweep(&spec, &cfg).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { .. } | Error::UniformFloorViolated { .. }));
        assert!(run_sweep(&spec, &cfg.clone().with_override()).is_ok());
    }

    #[test]
    fn tiny_data_runs_inside_the_floor_without_override() {
        let spec = tg_spec(vec![1.9], 1.0, 0.0).with_amplitude(1e-3).unwrap();
        let cfg = SweepConfig::new(1e-3).with_snapshots(3);
        let sweep = run_sweep(&spec, &cfg).unwrap();
        let floor = sweep.t_floor.expect("floor computed when not overridden");
        assert!(sweep.t_end <= floor);
        assert!(sweep.t_end <= 0.05, "default horizon caps at 0.05");
    }

    #[test]
    fn measurement_floor_excludes_noise_level_points() {
        let spec = tg_spec(vec![1.9, 1.95, 1.99], 1.0, 0.0);
        let sweep = run_sweep(&spec, &quick_cfg(0.02, 2e-3)).unwrap();
        let table = measure_errors(&sweep, &[NormSpec::sup()], None).unwrap();
        let smallest = table
            .rows
            .iter()
            .map(|r| r.error)
            .fold(f64::INFINITY, f64::min);
        // A synthetic floor just above smallest/100 knocks out exactly the
        // near-2 point.
        let floored = measure_errors(&sweep, &[NormSpec::sup()], Some(smallest / 99.0)).unwrap();
        let excluded: Vec<f64> = floored
            .rows
            .iter()
            .filter(|r| r.excluded)
            .map(|r| r.alpha)
            .collect();
        assert_eq!(excluded, vec![1.99], "only the noise-level point is dropped");
        let (alphas, _) = floored.series("sup");
        assert_eq!(alphas, vec![1.9, 1.95]);
    }

    #[test]
    fn refinement_floor_estimate_is_small_for_smooth_data() {
        let spec = tg_spec(vec![1.9], 1.0, 0.0);
        let floor = estimate_floor(&spec, &quick_cfg(0.02, 2e-3)).unwrap();
        // Taylor-Green dynamics are exactly resolved at n = 32, so refinement
        // changes nothing beyond rounding.
        assert!(floor < 1e-10, "smooth-data refinement floor too large: {floor}");
    }

    #[test]
    fn mhd_decoupled_limit_matches_plain_sweep() {
        let vel = DataFamilySpec::new(
            DataPreset::RandomSmooth { seed: 5, spectrum_decay: 4.0 },
            grid2d(32),
            1.0,
            0.5,
            vec![1.9, 1.95],
            0.5,
        )
        .unwrap();
        let mut mhd = MhdFamilySpec::new(vel.clone(), vec![2.0, 2.0], 1.0, 0.0).unwrap();
        mhd.magnetic_amplitude = 0.0;
        let cfg = quick_cfg(0.01, 1e-3);
        let plain = run_sweep(&vel, &cfg).unwrap();
        let coupled = run_mhd_sweep(&mhd, &cfg).unwrap();
        for ((_, rec), crec) in plain.records.iter().zip(&coupled.records) {
            for (a, b) in rec.velocity.iter().zip(&crec.velocity) {
                assert!(
                    a.max_mode_distance(b) == 0.0,
                    "zero magnetic data must not alter the velocity trajectory"
                );
            }
        }
        let table = mhd_combined_errors(&coupled, None).unwrap();
        let plain_table = measure_errors(&plain, &[NormSpec::sup(), NormSpec::bmo()], None).unwrap();
        for row in &table.rows {
            let vel_err = plain_table
                .rows
                .iter()
                .find(|r| r.alpha == row.alpha && r.norm_label == "sup")
                .unwrap()
                .error;
            let prs_err = plain_table
                .rows
                .iter()
                .find(|r| r.alpha == row.alpha && r.norm_label == "bmo")
                .unwrap()
                .error;
            assert_relative_eq!(row.error, vel_err + prs_err, max_relative = 1e-12);
        }
    }

    #[test]
    fn mhd_spec_validation() {
        let vel = tg_spec(vec![1.9, 1.95], 1.0, 0.5);
        assert!(MhdFamilySpec::new(vel.clone(), vec![1.9], 1.0, 0.5).is_err(), "length mismatch");
        assert!(MhdFamilySpec::new(vel.clone(), vec![1.2, 1.9], 1.0, 0.5).is_err());
        assert!(MhdFamilySpec::new(vel.clone(), vec![1.9, 1.95], 0.0, 0.5).is_err());
        assert!(MhdFamilySpec::new(vel, vec![1.9, 1.95], 1.0, 0.5).is_ok());
    }

    #[test]
    fn mhd_magnetic_gap_follows_its_own_rate() {
        let vel = tg_spec(vec![1.9, 1.95], 1.0, 0.0);
        let spec = MhdFamilySpec::new(vel, vec![1.9, 1.95], 2.0, 0.8).unwrap();
        let (members, (_, b_base)) = build_mhd_family(&spec).unwrap();
        for m in &members {
            let gap = norm(&m.b0.difference(&b_base).unwrap(), &NormSpec::sup()).unwrap();
            let expect = 0.8 * (2.0 - m.beta).powf(2.0);
            assert_relative_eq!(gap, expect, max_relative = 1e-12);
            assert!(m.b0.divergence_residual() < 1e-10);
        }
    }

    #[test]
    fn constant_ratio_is_stable_under_refinement() {
        // Error <= c_hat ((2 - alpha) + (2 - alpha)^kappa): the sweep-wide
        // max ratio must agree across n = 32 and n = 64 within +-50%.
        let kappa = 1.0;
        let cfg = quick_cfg(0.02, 2e-3);
        let mut hats = Vec::new();
        for n in [32, 64] {
            let spec = DataFamilySpec::new(
                DataPreset::RandomSmooth { seed: 5, spectrum_decay: 4.0 },
                grid2d(n),
                kappa,
                0.5,
                vec![1.9, 1.95, 1.99],
                0.5,
            )
            .unwrap();
            let sweep = run_sweep(&spec, &cfg).unwrap();
            let table = measure_errors(&sweep, &[NormSpec::sup()], None).unwrap();
            let mut hat = 0.0f64;
            for row in &table.rows {
                let gap = 2.0 - row.alpha;
                hat = hat.max(row.error / (gap + gap.powf(kappa)));
            }
            assert!(hat.is_finite() && hat > 0.0);
            hats.push(hat);
        }
        let ratio = hats[1] / hats[0];
        assert!(
            (0.5..=1.5).contains(&ratio),
            "refinement changed the sweep constant too much: {hats:?}"
        );
    }
}

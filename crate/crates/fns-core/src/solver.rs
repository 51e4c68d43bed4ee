//! Time integration of the mild (Duhamel) formulation on the periodic grid:
//! per-step Picard iteration and an ETD-RK2 reference path, for the velocity
//! equation alone or coupled with an induction equation.
//!
//! State fields are kept dealiased (2/3 rule) and divergence-free; the
//! quadratic terms are evaluated pseudo-spectrally and Leray-projected, which
//! makes them energy-neutral on the grid, so total energy decays step by step
//! under the unit-viscosity dissipation.

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::GridSpec;
use crate::operators::{
    self, apply_dealias, leray_project, nonlinear_advection, nonlinear_advection_pair,
    FractionalSymbol,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    PicardDuhamel,
    EtdRk2,
}

/// Solver parameters; `beta` is the induction-equation exponent (coupled runs only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub grid: GridSpec,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub dt: f64,
    pub t_end: f64,
    pub picard_tol: f64,
    pub picard_max_iter: u32,
    pub scheme: Scheme,
    pub snapshots: usize,
}

impl SolverConfig {
    pub fn new(grid: GridSpec, alpha: f64, dt: f64, t_end: f64) -> Result<Self> {
        FractionalSymbol::new(alpha)?;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::param("dt", "must be positive", dt));
        }
        if !(t_end >= dt) {
            return Err(Error::param("t_end", "must be at least one time step", t_end));
        }
        Ok(SolverConfig {
            grid,
            alpha,
            beta: None,
            dt,
            t_end,
            picard_tol: 1e-10,
            picard_max_iter: 50,
            scheme: Scheme::PicardDuhamel,
            snapshots: 32,
        })
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        FractionalSymbol::new(beta)?;
        self.beta = Some(beta);
        Ok(self)
    }

    pub fn with_snapshots(mut self, snapshots: usize) -> Result<Self> {
        if snapshots < 2 {
            return Err(Error::param("snapshots", "need at least 2", snapshots as f64));
        }
        self.snapshots = snapshots;
        Ok(self)
    }

    pub fn with_picard(mut self, tol: f64, max_iter: u32) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::param("picard_tol", "must be positive", tol));
        }
        if max_iter == 0 {
            return Err(Error::param("picard_max_iter", "must be positive", max_iter as f64));
        }
        self.picard_tol = tol;
        self.picard_max_iter = max_iter;
        Ok(self)
    }
}

/// Per-step scalar diagnostics.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub t: f64,
    pub energy_kin: f64,
    pub energy_mag: f64,
    pub div_residual: f64,
    pub picard_iters: u32,
}

/// A completed run: snapshots of velocity/pressure (and magnetic field when
/// coupled) on a shared time grid, plus per-step diagnostics.
#[derive(Debug, Clone)]
pub struct SolveRecord {
    pub config: SolverConfig,
    pub times: Vec<f64>,
    pub velocity: Vec<SpectralField>,
    pub pressure: Vec<SpectralField>,
    pub magnetic: Option<Vec<SpectralField>>,
    pub diagnostics: Vec<StepDiagnostics>,
}

/// 0.5 sum_k |u_hat(k)|^2 — kinetic energy under the normalized measure.
pub fn kinetic_energy(f: &SpectralField) -> f64 {
    let mut e = 0.0;
    for c in 0..f.num_components() {
        e += f.comp(c).iter().map(|v| v.norm_sqr()).sum::<f64>();
    }
    0.5 * e
}

fn l2_sq(f: &SpectralField) -> f64 {
    (0..f.num_components())
        .map(|c| f.comp(c).iter().map(|v| v.norm_sqr()).sum::<f64>())
        .sum()
}

fn l2_sq_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    let mut d = 0.0;
    for c in 0..a.num_components() {
        for (x, y) in a.comp(c).iter().zip(b.comp(c)) {
            d += (x - y).norm_sqr();
        }
    }
    d
}

fn apply_multiplier(f: &SpectralField, m: &[f64]) -> SpectralField {
    let mut out = f.clone();
    apply_multiplier_mut(&mut out, m);
    out
}

fn apply_multiplier_mut(f: &mut SpectralField, m: &[f64]) {
    for c in 0..f.num_components() {
        for (v, &w) in f.comp_mut(c).iter_mut().zip(m) {
            *v *= w;
        }
    }
}

/// phi1(z) = (e^z - 1)/z, series near zero.
fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-2 {
        1.0 + z * (0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z / 120.0)))
    } else {
        z.exp_m1() / z
    }
}

/// phi2(z) = (e^z - 1 - z)/z^2, series near zero.
fn phi2(z: f64) -> f64 {
    if z.abs() < 1e-2 {
        0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z * (1.0 / 120.0 + z / 720.0)))
    } else {
        (z.exp_m1() - z) / (z * z)
    }
}

/// Gauss-Legendre nodes on [0, dt] relative to the left endpoint.
fn gauss_nodes(dt: f64) -> [f64; 2] {
    let shift = dt * 0.5 / 3.0f64.sqrt();
    [0.5 * dt - shift, 0.5 * dt + shift]
}

/// Per-mode exponential factors of one field for a fixed step size.
struct LinearFactors {
    dt: f64,
    tau: [f64; 2],
    /// e^{-dt lambda}
    e_full: Vec<f64>,
    /// e^{-(dt - tau_j) lambda}
    e_tail: [Vec<f64>; 2],
    /// e^{-tau_j lambda}
    e_node: [Vec<f64>; 2],
    /// e^{-(tau_j / 2) lambda}
    e_half: [Vec<f64>; 2],
    /// phi1(-dt lambda), phi2(-dt lambda)
    phi1: Vec<f64>,
    phi2: Vec<f64>,
}

impl LinearFactors {
    fn new(grid: &GridSpec, alpha: f64, dt: f64) -> Result<Self> {
        let sym = FractionalSymbol::new(alpha)?;
        let lambda: Vec<f64> = (0..grid.len()).map(|i| sym.eval(grid.xi_at(i))).collect();
        let tau = gauss_nodes(dt);
        let exp_at = |t: f64| -> Vec<f64> { lambda.iter().map(|&l| (-t * l).exp()).collect() };
        Ok(LinearFactors {
            dt,
            tau,
            e_full: exp_at(dt),
            e_tail: [exp_at(dt - tau[0]), exp_at(dt - tau[1])],
            e_node: [exp_at(tau[0]), exp_at(tau[1])],
            e_half: [exp_at(0.5 * tau[0]), exp_at(0.5 * tau[1])],
            phi1: lambda.iter().map(|&l| phi1(-dt * l)).collect(),
            phi2: lambda.iter().map(|&l| phi2(-dt * l)).collect(),
        })
    }
}

/// Right sides of the mild formulation, Leray-projected and dealiased.
/// One field: F(u) = -P div(u (x) u). Two fields (u, b):
///   F_u = -P div(u (x) u) + P div(b (x) b),
///   F_b = -P div(u (x) b) + P div(b (x) u).
fn eval_rhs(fields: &[SpectralField]) -> Result<Vec<SpectralField>> {
    match fields {
        [u] => {
            let mut f = leray_project(&nonlinear_advection(u, u)?);
            f.scale(-1.0);
            Ok(vec![f])
        }
        [u, b] => {
            let mut fu = leray_project(&nonlinear_advection(u, u)?);
            fu.scale(-1.0);
            fu.add_scaled(&leray_project(&nonlinear_advection(b, b)?), 1.0);
            let (ub, bu) = nonlinear_advection_pair(u, b)?;
            let mut fb = leray_project(&ub);
            fb.scale(-1.0);
            fb.add_scaled(&leray_project(&bu), 1.0);
            Ok(vec![fu, fb])
        }
        _ => unreachable!("state holds one or two fields"),
    }
}

/// One Duhamel step by fixed-point iteration: interior Gauss-node states are
/// iterated until the relative L2 update drops below `tol`, then the step
/// integral is taken by 2-point Gauss quadrature. Returns the new state and
/// the number of Picard sweeps used.
fn picard_step_state(
    fields: &[SpectralField],
    factors: &[LinearFactors],
    tol: f64,
    max_iter: u32,
) -> Result<(Vec<SpectralField>, u32)> {
    let dt = factors[0].dt;
    let tau = factors[0].tau;
    // Interpolation weights for the nonlinearity at the midpoint tau_j / 2
    // from its values at the two Gauss nodes.
    let interp = |sigma: f64| -> (f64, f64) {
        let w2 = (sigma - tau[0]) / (tau[1] - tau[0]);
        (1.0 - w2, w2)
    };
    let base = l2_sq(&fields[0]).sqrt().max(f64::MIN_POSITIVE);

    let mut nodes: [Vec<SpectralField>; 2] = [Vec::new(), Vec::new()];
    for j in 0..2 {
        nodes[j] = fields
            .iter()
            .zip(factors)
            .map(|(f, fac)| apply_multiplier(f, &fac.e_node[j]))
            .collect();
    }

    let mut residual = f64::INFINITY;
    for iter in 1..=max_iter {
        let rhs = [eval_rhs(&nodes[0])?, eval_rhs(&nodes[1])?];
        let mut delta_sq = 0.0;
        for j in 0..2 {
            let (w1, w2) = interp(0.5 * tau[j]);
            for (i, fac) in factors.iter().enumerate() {
                // u_j <- e^{-tau_j L} u + tau_j e^{-(tau_j/2) L} F(tau_j/2),
                // with F interpolated between the node evaluations.
                let mut fmid = rhs[0][i].clone();
                fmid.scale(w1);
                fmid.add_scaled(&rhs[1][i], w2);
                apply_multiplier_mut(&mut fmid, &fac.e_half[j]);
                let mut unew = apply_multiplier(&fields[i], &fac.e_node[j]);
                unew.add_scaled(&fmid, tau[j]);
                delta_sq += l2_sq_diff(&unew, &nodes[j][i]);
                nodes[j][i] = unew;
            }
        }
        residual = delta_sq.sqrt() / base;
        if residual < tol {
            let rhs = [eval_rhs(&nodes[0])?, eval_rhs(&nodes[1])?];
            let mut out = Vec::with_capacity(fields.len());
            for (i, fac) in factors.iter().enumerate() {
                let mut unew = apply_multiplier(&fields[i], &fac.e_full);
                for j in 0..2 {
                    let tail = apply_multiplier(&rhs[j][i], &fac.e_tail[j]);
                    unew.add_scaled(&tail, 0.5 * dt);
                }
                out.push(unew);
            }
            return Ok((out, iter));
        }
    }
    Err(Error::PicardDiverged { residual, iters: max_iter })
}

/// One ETD-RK2 step:
///   a  = e^{-dt L} u + dt phi1(-dt L) F(u),
///   u+ = a + dt phi2(-dt L) (F(a) - F(u)).
fn etd_rk2_step_state(
    fields: &[SpectralField],
    factors: &[LinearFactors],
) -> Result<Vec<SpectralField>> {
    let dt = factors[0].dt;
    let f0 = eval_rhs(fields)?;
    let mut stage: Vec<SpectralField> = Vec::with_capacity(fields.len());
    for (i, fac) in factors.iter().enumerate() {
        let mut a = apply_multiplier(&fields[i], &fac.e_full);
        a.add_scaled(&apply_multiplier(&f0[i], &fac.phi1), dt);
        stage.push(a);
    }
    let f1 = eval_rhs(&stage)?;
    let mut out = stage;
    for (i, fac) in factors.iter().enumerate() {
        let mut corr = f1[i].clone();
        corr.add_scaled(&f0[i], -1.0);
        apply_multiplier_mut(&mut corr, &fac.phi2);
        out[i].add_scaled(&corr, dt);
    }
    Ok(out)
}

/// Advances the velocity field by one step of the configured scheme.
/// Input must be dealiased and divergence-free. Returns the new field and the
/// Picard sweep count (0 for ETD-RK2).
pub fn step_picard(u: &SpectralField, dt: f64, config: &SolverConfig) -> Result<(SpectralField, u32)> {
    u.grid().ensure_same(&config.grid, "step")?;
    let factors = [LinearFactors::new(u.grid(), config.alpha, dt)?];
    let fields = [u.clone()];
    let (mut out, iters) =
        picard_step_state(&fields, &factors, config.picard_tol, config.picard_max_iter)?;
    Ok((out.pop().expect("one field"), iters))
}

/// One ETD-RK2 step of the velocity field (same preconditions as `step_picard`).
pub fn step_etd_rk2(u: &SpectralField, dt: f64, config: &SolverConfig) -> Result<SpectralField> {
    u.grid().ensure_same(&config.grid, "step")?;
    let factors = [LinearFactors::new(u.grid(), config.alpha, dt)?];
    let fields = [u.clone()];
    let mut out = etd_rk2_step_state(&fields, &factors)?;
    Ok(out.pop().expect("one field"))
}

/// Pressure from the velocity (and optional magnetic) field:
/// p_hat = -xi_i xi_j / |xi|^2 (u_i u_j + b_i b_j)_hat, zero mean, with the
/// quadratic products dealiased. Equivalent to summing R_i R_j over the tensor.
pub fn recover_pressure(u: &SpectralField, b: Option<&SpectralField>) -> Result<SpectralField> {
    let g = *u.grid();
    let dim = g.dim();
    let mut tensors = vec![operators::product_tensor(u, u)?];
    if let Some(b) = b {
        u.grid().ensure_same(b.grid(), "pressure")?;
        tensors.push(operators::product_tensor(b, b)?);
    }
    let mut p = SpectralField::zeros(g, 1);
    let out = p.comp_mut(0);
    for (flat, v) in out.iter_mut().enumerate() {
        let xi = g.xi_at(flat);
        let m2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        if m2 == 0.0 {
            continue;
        }
        let mut acc = Complex64::default();
        for tensor in &tensors {
            for i in 0..dim {
                for j in 0..dim {
                    acc += xi[i] * xi[j] * tensor[i * dim + j][flat];
                }
            }
        }
        *v = -acc / m2;
    }
    Ok(p)
}

/// Evenly spread `snapshots` indices over 0..=n_steps (always includes both ends).
fn snapshot_steps(n_steps: usize, snapshots: usize) -> Vec<usize> {
    let want = snapshots.max(2);
    let mut steps: Vec<usize> = (0..want)
        .map(|j| ((j as f64) * (n_steps as f64) / (want as f64 - 1.0)).round() as usize)
        .collect();
    steps.dedup();
    steps
}

fn validate_initial(name: &'static str, f: &SpectralField, grid: &GridSpec) -> Result<()> {
    f.grid().ensure_same(grid, name)?;
    if !f.is_vector() {
        return Err(Error::GridMismatch(format!("{name} must be a velocity-like vector field")));
    }
    if f.divergence_residual() > 1e-8 {
        return Err(Error::param(name, "initial field must be divergence-free", f.divergence_residual()));
    }
    Ok(())
}

fn march(
    initial: Vec<SpectralField>,
    config: &SolverConfig,
) -> Result<(Vec<f64>, Vec<Vec<SpectralField>>, Vec<StepDiagnostics>)> {
    let coupled = initial.len() == 2;
    let exps: Vec<f64> = if coupled {
        vec![config.alpha, config.beta.expect("beta set for coupled runs")]
    } else {
        vec![config.alpha]
    };

    let n_steps = (config.t_end / config.dt).round().max(1.0) as usize;
    // Land exactly on t_end: the last step absorbs the rounding remainder.
    let last_dt = config.t_end - config.dt * (n_steps - 1) as f64;
    let factors: Vec<LinearFactors> = exps
        .iter()
        .map(|&a| LinearFactors::new(&config.grid, a, config.dt))
        .collect::<Result<_>>()?;
    let last_factors: Vec<LinearFactors> = if (last_dt - config.dt).abs() > 1e-12 * config.dt {
        exps.iter()
            .map(|&a| LinearFactors::new(&config.grid, a, last_dt))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    let snap_at = snapshot_steps(n_steps, config.snapshots);
    let mut snaps: Vec<Vec<SpectralField>> = Vec::with_capacity(snap_at.len());
    let mut times = Vec::with_capacity(snap_at.len());
    let mut diagnostics = Vec::with_capacity(n_steps + 1);

    let mut state = initial;
    let energy = |s: &[SpectralField]| -> (f64, f64) {
        let kin = kinetic_energy(&s[0]);
        let mag = if s.len() == 2 { kinetic_energy(&s[1]) } else { 0.0 };
        (kin, mag)
    };
    let diag_of = |s: &[SpectralField], t: f64, iters: u32| -> StepDiagnostics {
        let (energy_kin, energy_mag) = energy(s);
        let mut div_residual = s[0].divergence_residual();
        if s.len() == 2 {
            div_residual = div_residual.max(s[1].divergence_residual());
        }
        StepDiagnostics { t, energy_kin, energy_mag, div_residual, picard_iters: iters }
    };

    diagnostics.push(diag_of(&state, 0.0, 0));
    if snap_at.contains(&0) {
        times.push(0.0);
        snaps.push(state.clone());
    }

    for step in 1..=n_steps {
        let fac = if step == n_steps && !last_factors.is_empty() {
            &last_factors
        } else {
            &factors
        };
        let (e_kin0, e_mag0) = energy(&state);
        let before = e_kin0 + e_mag0;
        let t = if step == n_steps {
            config.t_end
        } else {
            config.dt * step as f64
        };
        let (next, iters) = match config.scheme {
            Scheme::PicardDuhamel => {
                picard_step_state(&state, fac, config.picard_tol, config.picard_max_iter)?
            }
            Scheme::EtdRk2 => (etd_rk2_step_state(&state, fac)?, 0),
        };
        state = next;
        let (e_kin1, e_mag1) = energy(&state);
        let after = e_kin1 + e_mag1;
        if after > before * (1.0 + 1e-6) {
            return Err(Error::EnergyIncrease { t, before, after });
        }
        diagnostics.push(diag_of(&state, t, iters));
        if snap_at.contains(&step) {
            times.push(t);
            snaps.push(state.clone());
        }
    }
    Ok((times, snaps, diagnostics))
}

/// Time-marches the velocity equation from `u0` (divergence-free, on the
/// config grid), recording snapshots and per-step diagnostics. Initial data is
/// dealiased on entry; pressure is recovered at every snapshot.
pub fn solve_ns(u0: &SpectralField, config: &SolverConfig) -> Result<SolveRecord> {
    let mut u = u0.clone();
    apply_dealias(&mut u);
    validate_initial("u0", &u, &config.grid)?;
    let (times, snaps, diagnostics) = march(vec![u], config)?;
    let mut velocity = Vec::with_capacity(snaps.len());
    let mut pressure = Vec::with_capacity(snaps.len());
    for mut s in snaps {
        let u = s.pop().expect("one field");
        pressure.push(recover_pressure(&u, None)?);
        velocity.push(u);
    }
    Ok(SolveRecord {
        config: config.clone(),
        times,
        velocity,
        pressure,
        magnetic: None,
        diagnostics,
    })
}

/// Coupled velocity/induction march; `config.beta` must be set.
pub fn solve_mhd(
    u0: &SpectralField,
    b0: &SpectralField,
    config: &SolverConfig,
) -> Result<SolveRecord> {
    if config.beta.is_none() {
        return Err(Error::param("beta", "coupled solve requires beta", f64::NAN));
    }
    let mut u = u0.clone();
    let mut b = b0.clone();
    apply_dealias(&mut u);
    apply_dealias(&mut b);
    validate_initial("u0", &u, &config.grid)?;
    validate_initial("b0", &b, &config.grid)?;
    let (times, snaps, diagnostics) = march(vec![u, b], config)?;
    let mut velocity = Vec::with_capacity(snaps.len());
    let mut pressure = Vec::with_capacity(snaps.len());
    let mut magnetic = Vec::with_capacity(snaps.len());
    for mut s in snaps {
        let b = s.pop().expect("two fields");
        let u = s.pop().expect("two fields");
        pressure.push(recover_pressure(&u, Some(&b))?);
        velocity.push(u);
        magnetic.push(b);
    }
    Ok(SolveRecord {
        config: config.clone(),
        times,
        velocity,
        pressure,
        magnetic: Some(magnetic),
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::{build_base, DataPreset};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn grid2d(n: usize) -> GridSpec {
        GridSpec::new(2, n, 2.0 * PI).unwrap()
    }

    /// u = (sin x cos y, -cos x sin y): self-advection is a pure gradient, so
    /// the projected trajectory is exact semigroup decay of the |xi|^2 = 2 shell.
    fn taylor_green(n: usize) -> SpectralField {
        build_base(&DataPreset::TaylorGreen, grid2d(n), 1.0).unwrap()
    }

    fn random_small(n: usize, amp: f64) -> SpectralField {
        build_base(
            &DataPreset::RandomSmooth { seed: 40, spectrum_decay: 4.0 },
            grid2d(n),
            amp,
        )
        .unwrap()
    }

    #[test]
    fn shear_mode_decays_exactly_linearly() {
        // Single-mode shear u = (A sin y, 0): the nonlinearity vanishes before
        // projection, so one step is exactly the semigroup factor.
        let g = grid2d(16);
        let mut u = SpectralField::zeros(g, 2);
        u.set_mode_pair(0, [0, 1, 0], Complex64::new(0.0, -0.4));
        for alpha in [1.5, 1.9, 2.0] {
            let cfg = SolverConfig::new(g, alpha, 1e-2, 1e-1).unwrap();
            let (next, _) = step_picard(&u, 1e-2, &cfg).unwrap();
            let expect = (-1e-2f64).exp(); // |xi| = 1 on this mode
            let got = next.mode(0, [0, 1, 0]);
            assert_relative_eq!(got.im, -0.4 * expect.powf(1.0), max_relative = 1e-12);
            let etd = step_etd_rk2(&u, 1e-2, &cfg).unwrap();
            assert_relative_eq!(etd.mode(0, [0, 1, 0]).im, -0.4 * expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn taylor_green_matches_closed_form_trajectory() {
        let u0 = taylor_green(32);
        let cfg = SolverConfig::new(grid2d(32), 2.0, 1e-3, 0.1)
            .unwrap()
            .with_snapshots(6)
            .unwrap();
        let rec = solve_ns(&u0, &cfg).unwrap();
        for (idx, &t) in rec.times.iter().enumerate() {
            let decay = (-2.0 * t).exp();
            let mut expect = u0.clone();
            expect.scale(decay);
            let got = &rec.velocity[idx];
            let err = got.max_mode_distance(&expect);
            assert!(err < 1e-6, "trajectory error {err} at t = {t}");
            // Pressure for this orientation: +1/4 (cos 2x + cos 2y) e^{-4t}
            // (from laplace(p) = -(cos 2x + cos 2y) worked by hand).
            let p = &rec.pressure[idx];
            let pd = (-4.0 * t).exp();
            for k in [[2i64, 0, 0], [0i64, 2, 0]] {
                let got_c = p.mode(0, k);
                assert_relative_eq!(got_c.re, 0.125 * pd, max_relative = 1e-5);
                assert!(got_c.im.abs() < 1e-12);
            }
            assert!(p.mode(0, [0, 0, 0]).norm() < 1e-14, "pressure must have zero mean");
        }
        for d in &rec.diagnostics {
            assert!(d.div_residual <= 1e-8, "divergence residual {}", d.div_residual);
        }
        for w in rec.diagnostics.windows(2) {
            assert!(
                w[1].energy_kin <= w[0].energy_kin * (1.0 + 1e-6),
                "energy must not increase"
            );
        }
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = grid2d(16);
        let u0 = SpectralField::zeros(g, 2);
        let cfg = SolverConfig::new(g, 1.7, 1e-2, 0.05).unwrap();
        let rec = solve_ns(&u0, &cfg).unwrap();
        for (u, p) in rec.velocity.iter().zip(&rec.pressure) {
            assert_eq!(l2_sq(u), 0.0);
            assert_eq!(l2_sq(p), 0.0);
        }
    }

    #[test]
    fn pressure_gradient_matches_unprojected_advection() {
        // grad p = (I - P)(-div(u (x) u)) mode-wise for divergence-free u.
        let g = grid2d(32);
        let u = random_small(32, 0.8);
        let p = recover_pressure(&u, None).unwrap();
        let adv = nonlinear_advection(&u, &u).unwrap();
        let projected = leray_project(&adv);
        let mut worst = 0.0f64;
        for axis in 0..2 {
            let dp = operators::derivative(&p, axis);
            for flat in 0..g.len() {
                // (I - P)(-adv) = projected - adv componentwise.
                let expect = projected.comp(axis)[flat] - adv.comp(axis)[flat];
                worst = worst.max((dp.comp(0)[flat] - expect).norm());
            }
        }
        assert!(worst < 1e-8, "pressure consistency residual {worst}");
    }

    #[test]
    fn pressure_of_zero_field_is_zero() {
        let g = grid2d(16);
        let z = SpectralField::zeros(g, 2);
        let p = recover_pressure(&z, None).unwrap();
        assert_eq!(l2_sq(&p), 0.0);
    }

    #[test]
    fn cross_scheme_agreement_is_second_order() {
        let u0 = random_small(32, 1.0);
        let g = grid2d(32);
        let dt = 2e-3;
        let t_end = 0.04;
        let base = SolverConfig::new(g, 1.8, dt, t_end).unwrap().with_snapshots(2).unwrap();
        let picard = solve_ns(&u0, &base).unwrap();
        let etd = solve_ns(&u0, &base.clone().with_scheme(Scheme::EtdRk2)).unwrap();
        let last = picard.velocity.len() - 1;
        let du = picard.velocity[last].difference(&etd.velocity[last]).unwrap();
        let sup = du
            .to_physical()
            .iter()
            .flatten()
            .fold(0.0f64, |m, &v| m.max(v.abs()));
        assert!(
            sup <= 10.0 * dt * dt,
            "schemes disagree by {sup}, allowed {}",
            10.0 * dt * dt
        );
    }

    #[test]
    fn etd_self_convergence_is_second_order() {
        let u0 = random_small(32, 1.0);
        let g = grid2d(32);
        let t_end = 0.04;
        let solve_with = |dt: f64| {
            let cfg = SolverConfig::new(g, 1.8, dt, t_end)
                .unwrap()
                .with_scheme(Scheme::EtdRk2)
                .with_snapshots(2)
                .unwrap();
            solve_ns(&u0, &cfg).unwrap().velocity.pop().unwrap()
        };
        let u1 = solve_with(4e-3);
        let u2 = solve_with(2e-3);
        let u4 = solve_with(1e-3);
        let e12 = l2_sq_diff(&u1, &u2).sqrt();
        let e24 = l2_sq_diff(&u2, &u4).sqrt();
        let ratio = e12 / e24;
        assert!(
            (3.2..=4.8).contains(&ratio),
            "halving dt should quarter the error, got ratio {ratio}"
        );
    }

    #[test]
    fn classical_path_factors_match_direct_squared_magnitude() {
        // At alpha = 2 the per-mode factors must be bit-identical to the
        // classical-Laplacian formulas, making the trajectories identical too.
        let g = grid2d(16);
        let dt = 3e-3;
        let fac = LinearFactors::new(&g, 2.0, dt).unwrap();
        for flat in 0..g.len() {
            let xi = g.xi_at(flat);
            let m2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
            assert_eq!(fac.e_full[flat].to_bits(), (-dt * m2).exp().to_bits());
            assert_eq!(fac.phi1[flat].to_bits(), phi1(-dt * m2).to_bits());
            for j in 0..2 {
                assert_eq!(
                    fac.e_node[j][flat].to_bits(),
                    (-fac.tau[j] * m2).exp().to_bits()
                );
            }
        }
    }

    #[test]
    fn picard_reports_divergence_on_oversized_steps() {
        // A large amplitude and a huge step break the contraction.
        let u0 = random_small(32, 40.0);
        let g = grid2d(32);
        let cfg = SolverConfig::new(g, 1.5, 0.5, 1.0)
            .unwrap()
            .with_picard(1e-10, 8)
            .unwrap();
        let err = solve_ns(&u0, &cfg).unwrap_err();
        assert!(
            matches!(err, Error::PicardDiverged { .. } | Error::EnergyIncrease { .. }),
            "expected numerical failure, got {err}"
        );
    }

    #[test]
    fn small_data_runs_far_beyond_its_horizon() {
        // H^s norm ~ 1e-2: the formula horizon is enormous; march to 10x a
        // modest multiple with large steps and check monotone decay.
        let u0 = random_small(32, 1e-2);
        let g = grid2d(32);
        let norm = {
            // H^{1.5} norm of the data.
            let mut acc = 0.0;
            for c in 0..2 {
                for (flat, v) in u0.comp(c).iter().enumerate() {
                    let xi = g.xi_at(flat);
                    let w = 1.0 + xi[0] * xi[0] + xi[1] * xi[1];
                    acc += w.powf(1.5) * v.norm_sqr();
                }
            }
            acc.sqrt()
        };
        let t_alpha = crate::existence::existence_time(1.9, norm, 1.0).unwrap();
        let t_end = 10.0 * t_alpha;
        let cfg = SolverConfig::new(g, 1.9, t_end / 100.0, t_end)
            .unwrap()
            .with_snapshots(4)
            .unwrap();
        let rec = solve_ns(&u0, &cfg).unwrap();
        for w in rec.diagnostics.windows(2) {
            assert!(w[1].energy_kin <= w[0].energy_kin * (1.0 + 1e-9));
        }
    }

    #[test]
    fn mhd_with_zero_magnetic_field_reduces_to_ns() {
        let u0 = random_small(32, 1.0);
        let g = grid2d(32);
        let b0 = SpectralField::zeros(g, 2);
        let ns_cfg = SolverConfig::new(g, 1.8, 1e-3, 0.02).unwrap().with_snapshots(3).unwrap();
        let mhd_cfg = ns_cfg.clone().with_beta(1.6).unwrap();
        let ns = solve_ns(&u0, &ns_cfg).unwrap();
        let mhd = solve_mhd(&u0, &b0, &mhd_cfg).unwrap();
        for (a, b) in ns.velocity.iter().zip(&mhd.velocity) {
            assert!(a.max_mode_distance(b) < 1e-12, "mhd with b = 0 must match plain ns");
        }
        let mag = mhd.magnetic.as_ref().unwrap();
        for b in mag {
            assert_eq!(l2_sq(b), 0.0, "zero magnetic data must stay zero");
        }
    }

    #[test]
    fn mhd_equal_fields_degenerate_to_pure_diffusion() {
        // u0 = b0 with alpha = beta: the quadratic terms cancel pairwise, so
        // both fields follow the bare semigroup and stay equal.
        let u0 = random_small(32, 1.0);
        let g = grid2d(32);
        let cfg = SolverConfig::new(g, 1.8, 1e-3, 0.02)
            .unwrap()
            .with_snapshots(3)
            .unwrap()
            .with_beta(1.8)
            .unwrap();
        let rec = solve_mhd(&u0, &u0, &cfg).unwrap();
        let mag = rec.magnetic.as_ref().unwrap();
        let sym = FractionalSymbol::new(1.8).unwrap();
        for (idx, t) in rec.times.iter().enumerate() {
            assert!(
                rec.velocity[idx].max_mode_distance(&mag[idx]) < 1e-8,
                "velocity and magnetic field must stay equal"
            );
            let mut expect = u0.clone();
            apply_dealias(&mut expect);
            for c in 0..2 {
                for (flat, v) in expect.comp_mut(c).iter_mut().enumerate() {
                    *v *= (-t * sym.eval(g.xi_at(flat))).exp();
                }
            }
            assert!(
                rec.velocity[idx].max_mode_distance(&expect) < 1e-9,
                "degenerate run must be pure diffusion"
            );
        }
    }

    #[test]
    fn mhd_total_energy_never_increases() {
        let u0 = random_small(32, 1.0);
        let b0 = random_small(32, 0.7);
        let g = grid2d(32);
        let cfg = SolverConfig::new(g, 1.9, 1e-3, 0.02)
            .unwrap()
            .with_beta(1.7)
            .unwrap();
        let rec = solve_mhd(&u0, &b0, &cfg).unwrap();
        for w in rec.diagnostics.windows(2) {
            let before = w[0].energy_kin + w[0].energy_mag;
            let after = w[1].energy_kin + w[1].energy_mag;
            assert!(after <= before * (1.0 + 1e-6), "total energy grew: {before} -> {after}");
        }
        assert!(solve_mhd(&u0, &b0, &SolverConfig::new(g, 1.9, 1e-3, 0.02).unwrap()).is_err());
    }

    #[test]
    fn snapshot_steps_cover_both_ends() {
        assert_eq!(snapshot_steps(20, 5), vec![0, 5, 10, 15, 20]);
        assert_eq!(snapshot_steps(3, 8), vec![0, 1, 2, 3]);
        assert_eq!(snapshot_steps(1, 2), vec![0, 1]);
    }

    #[test]
    fn rejects_divergent_initial_data() {
        let g = grid2d(16);
        let mut u = SpectralField::zeros(g, 2);
        u.set_mode_pair(0, [1, 0, 0], Complex64::new(0.0, 0.5)); // gradient-like
        let cfg = SolverConfig::new(g, 1.8, 1e-3, 0.01).unwrap();
        assert!(solve_ns(&u, &cfg).is_err());
    }

    #[test]
    fn config_validation() {
        let g = grid2d(16);
        assert!(SolverConfig::new(g, 1.0, 1e-3, 1.0).is_err());
        assert!(SolverConfig::new(g, 1.5, 0.0, 1.0).is_err());
        assert!(SolverConfig::new(g, 1.5, 1e-2, 1e-3).is_err(), "dt must not exceed t_end");
        assert!(SolverConfig::new(g, 1.5, 1e-3, 1.0).unwrap().with_beta(2.5).is_err());
        assert!(SolverConfig::new(g, 1.5, 1e-3, 1.0).unwrap().with_picard(0.0, 3).is_err());
        assert!(SolverConfig::new(g, 1.5, 1e-3, 1.0).unwrap().with_snapshots(1).is_err());
    }
}

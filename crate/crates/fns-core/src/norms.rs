//! Discrete functional norms on the periodic grid: sup, L^2, Sobolev scales
//! H^{±s}, mixed space-time L^p_t L^q_x, and a dyadic BMO approximation.
//!
//! Physical-space norms use the normalized (probability) measure on the box,
//! so Parseval makes the spectral l2 equal to the RMS of the samples and the
//! grid interpolation inequality |f|_q <= |f|_2^{2/q} |f|_sup^{1-2/q} is exact.

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::solver::SolveRecord;
use serde::{Deserialize, Serialize};

/// Which norm to evaluate; construct through the `NormSpec` helpers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NormKind {
    Sup,
    L2,
    Hs(f64),
    Hminus(f64),
    Bmo,
    LpLq { p: f64, q: f64 },
}

/// Validated norm selector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    kind: NormKind,
}

impl NormSpec {
    pub fn sup() -> Self {
        NormSpec { kind: NormKind::Sup }
    }

    pub fn l2() -> Self {
        NormSpec { kind: NormKind::L2 }
    }

    pub fn hs(s: f64) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::param("s", "Sobolev index must be positive", s));
        }
        Ok(NormSpec { kind: NormKind::Hs(s) })
    }

    pub fn hminus(s: f64) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::param("s", "Sobolev index must be positive", s));
        }
        Ok(NormSpec { kind: NormKind::Hminus(s) })
    }

    pub fn bmo() -> Self {
        NormSpec { kind: NormKind::Bmo }
    }

    /// Mixed space-time norm; `p` may be infinite (sup in time), `q` must lie
    /// strictly between 2 and infinity.
    pub fn lplq(p: f64, q: f64) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::param("p", "time exponent must satisfy p >= 1", p));
        }
        if !(q > 2.0) || !q.is_finite() {
            return Err(Error::param("q", "space exponent must satisfy 2 < q < inf", q));
        }
        Ok(NormSpec { kind: NormKind::LpLq { p, q } })
    }

    pub fn kind(&self) -> NormKind {
        self.kind
    }

    /// Short, file-name-safe label ("sup", "h1.5", "l2l4", ...).
    pub fn label(&self) -> String {
        match self.kind {
            NormKind::Sup => "sup".into(),
            NormKind::L2 => "l2".into(),
            NormKind::Hs(s) => format!("h{s}"),
            NormKind::Hminus(s) => format!("h-{s}"),
            NormKind::Bmo => "bmo".into(),
            NormKind::LpLq { p, q } => {
                if p.is_finite() {
                    format!("l{p}l{q}")
                } else {
                    format!("linfl{q}")
                }
            }
        }
    }
}

/// Default regularity index for well-posedness bookkeeping: d/2 + 1/2.
pub fn default_sobolev_index(dim: usize) -> f64 {
    if dim == 3 {
        2.0
    } else {
        1.5
    }
}

/// Pointwise Euclidean magnitude over components, max over the grid.
fn sup_norm(f: &SpectralField) -> f64 {
    let phys = f.to_physical();
    let len = phys[0].len();
    let mut best = 0.0f64;
    for i in 0..len {
        let mut m2 = 0.0;
        for comp in &phys {
            m2 += comp[i] * comp[i];
        }
        best = best.max(m2);
    }
    best.sqrt()
}

fn spectral_weighted(f: &SpectralField, weight: impl Fn(f64) -> f64) -> f64 {
    let g = f.grid();
    let mut acc = 0.0;
    for flat in 0..g.len() {
        let w = weight(g.xi_norm_sq(flat));
        for c in 0..f.num_components() {
            acc += w * f.comp(c)[flat].norm_sqr();
        }
    }
    acc.sqrt()
}

/// L^q norm (1 <= q < inf) of the pointwise Euclidean magnitude under the
/// normalized measure: (mean |f|^q)^{1/q}.
pub fn lq_norm(f: &SpectralField, q: f64) -> Result<f64> {
    if !(q >= 1.0) || !q.is_finite() {
        return Err(Error::param("q", "need 1 <= q < inf", q));
    }
    let phys = f.to_physical();
    let len = phys[0].len();
    let mut acc = 0.0;
    for i in 0..len {
        let mut m2 = 0.0;
        for comp in &phys {
            m2 += comp[i] * comp[i];
        }
        acc += m2.powf(0.5 * q);
    }
    Ok((acc / len as f64).powf(1.0 / q))
}

/// Dyadic BMO approximation: sup over dyadic subcubes at levels
/// 0..=max_level of the mean of |f - mean_Q f| over the cube Q. Scalar only.
pub fn bmo_discrete(f: &SpectralField, max_level: usize) -> Result<f64> {
    if f.num_components() != 1 {
        return Err(Error::GridMismatch(
            "bmo is defined for scalar fields; pass one component".into(),
        ));
    }
    if max_level < 1 {
        return Err(Error::param("max_level", "need at least one refinement level", 0.0));
    }
    let g = *f.grid();
    let n = g.n();
    if (1usize << max_level) > n {
        return Err(Error::param(
            "max_level",
            "finest dyadic cube must contain a grid point",
            max_level as f64,
        ));
    }
    let samples = f.physical_component(0);
    let dim = g.dim();
    let mut best = 0.0f64;
    for level in 0..=max_level {
        let cubes_per_axis = 1usize << level;
        let side = n / cubes_per_axis;
        let n_cubes = cubes_per_axis.pow(dim as u32);
        let mut sums = vec![0.0f64; n_cubes];
        let cube_of = |idx: [usize; 3]| -> usize {
            let mut c = 0;
            for a in 0..dim {
                c = c * cubes_per_axis + idx[a] / side;
            }
            c
        };
        for (flat, &v) in samples.iter().enumerate() {
            sums[cube_of(g.unravel(flat))] += v;
        }
        let pts = (side as f64).powi(dim as i32);
        let means: Vec<f64> = sums.iter().map(|s| s / pts).collect();
        let mut osc = vec![0.0f64; n_cubes];
        for (flat, &v) in samples.iter().enumerate() {
            let c = cube_of(g.unravel(flat));
            osc[c] += (v - means[c]).abs();
        }
        for o in osc {
            best = best.max(o / pts);
        }
    }
    Ok(best)
}

/// Evaluates a spatial norm of one snapshot.
pub fn norm(f: &SpectralField, spec: &NormSpec) -> Result<f64> {
    match spec.kind {
        NormKind::Sup => Ok(sup_norm(f)),
        NormKind::L2 => Ok(spectral_weighted(f, |_| 1.0)),
        NormKind::Hs(s) => Ok(spectral_weighted(f, |m2| (1.0 + m2).powf(s))),
        NormKind::Hminus(s) => Ok(spectral_weighted(f, |m2| (1.0 + m2).powf(-s))),
        NormKind::Bmo => bmo_discrete(f, 4),
        NormKind::LpLq { p, q } => Err(Error::param(
            "spec",
            "mixed space-time norm needs a trajectory, not one snapshot",
            p.min(q),
        )),
    }
}

/// Which trajectory component a space-time norm measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrajectoryField {
    Velocity,
    Pressure,
    Magnetic,
}

fn record_field<'r>(rec: &'r SolveRecord, field: TrajectoryField) -> Result<&'r [SpectralField]> {
    match field {
        TrajectoryField::Velocity => Ok(&rec.velocity),
        TrajectoryField::Pressure => Ok(&rec.pressure),
        TrajectoryField::Magnetic => rec
            .magnetic
            .as_deref()
            .ok_or_else(|| Error::GridMismatch("record has no magnetic trajectory".into())),
    }
}

/// Space-time norm of the difference of two trajectories on a chosen field.
/// Snapshot times and grids must agree. Spatial specs take the sup over
/// snapshots; lplq integrates the spatial L^q norm in time by the composite
/// trapezoid rule (p = inf as the sup in time).
pub fn trajectory_norm_field(
    rec_a: &SolveRecord,
    rec_b: &SolveRecord,
    field: TrajectoryField,
    spec: &NormSpec,
) -> Result<f64> {
    rec_a.config.grid.ensure_same(&rec_b.config.grid, "trajectory")?;
    if rec_a.times.len() != rec_b.times.len()
        || rec_a
            .times
            .iter()
            .zip(&rec_b.times)
            .any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + a.abs()))
    {
        return Err(Error::GridMismatch(
            "trajectory norms need matching snapshot times".into(),
        ));
    }
    let fa = record_field(rec_a, field)?;
    let fb = record_field(rec_b, field)?;
    match spec.kind {
        NormKind::LpLq { p, q } => {
            let mut vals = Vec::with_capacity(fa.len());
            for (a, b) in fa.iter().zip(fb) {
                vals.push(lq_norm(&a.difference(b)?, q)?);
            }
            if !p.is_finite() {
                return Ok(vals.iter().fold(0.0f64, |m, &v| m.max(v)));
            }
            let ts = &rec_a.times;
            let mut acc = 0.0;
            for i in 1..ts.len() {
                let dt = ts[i] - ts[i - 1];
                acc += 0.5 * dt * (vals[i - 1].powf(p) + vals[i].powf(p));
            }
            Ok(acc.powf(1.0 / p))
        }
        _ => {
            let mut best = 0.0f64;
            for (a, b) in fa.iter().zip(fb) {
                best = best.max(norm(&a.difference(b)?, spec)?);
            }
            Ok(best)
        }
    }
}

/// Convenience wrapper: bmo compares pressures, every other spec compares
/// velocities.
pub fn trajectory_norm(rec_a: &SolveRecord, rec_b: &SolveRecord, spec: &NormSpec) -> Result<f64> {
    let field = if spec.kind == NormKind::Bmo {
        TrajectoryField::Pressure
    } else {
        TrajectoryField::Velocity
    };
    trajectory_norm_field(rec_a, rec_b, field, spec)
}

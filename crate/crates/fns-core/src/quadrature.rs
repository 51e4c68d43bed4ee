//! Adaptive Gauss-Kronrod quadrature and a golden-section maximizer.
//!
//! The 7/15-point Gauss-Kronrod pair gives per-panel values together with the
//! classical |K15 - G7| error estimate; panels are bisected until the estimate
//! drops below an absolute per-panel tolerance.

/// Tolerances and budgets for kernel-distance quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Absolute acceptance tolerance per panel.
    pub panel_tol: f64,
    /// Absolute tolerance for the truncated tail of improper integrals
    /// (applied to the squared-norm integrand).
    pub tail_tol: f64,
    /// Number of coarse time-scan points for the sup over t.
    pub scan_points: usize,
    /// Hard cap on the number of accepted panels.
    pub max_panels: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            panel_tol: 1e-12,
            tail_tol: 1e-10,
            scan_points: 64,
            max_panels: 4000,
        }
    }
}

/// Value and certified error bound of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureOutcome {
    pub value: f64,
    pub err_bound: f64,
    pub panels: usize,
}

// 15-point Kronrod abscissae (positive half) and weights, with the embedded
// 7-point Gauss weights; standard QUADPACK constants.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One Gauss-Kronrod panel: returns (K15 value, |K15 - G7| estimate).
fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let fsum = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * fsum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * fsum;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive integration of `f` over consecutive intervals of `breaks`.
/// Bisects the worst panel until every estimate is below `panel_tol` or the
/// panel budget is exhausted; the returned `err_bound` always sums the final
/// per-panel estimates, so budget exhaustion degrades the bound, not honesty.
pub fn integrate_adaptive(
    f: &dyn Fn(f64) -> f64,
    breaks: &[f64],
    panel_tol: f64,
    max_panels: usize,
) -> QuadratureOutcome {
    assert!(breaks.len() >= 2, "need at least one interval");
    // (a, b, value, err); refine the largest-error panel first.
    let mut panels: Vec<(f64, f64, f64, f64)> = Vec::new();
    for w in breaks.windows(2) {
        let (v, e) = gk15(f, w[0], w[1]);
        panels.push((w[0], w[1], v, e));
    }
    loop {
        let (worst_idx, worst_err) = panels
            .iter()
            .enumerate()
            .map(|(i, p)| (i, p.3))
            .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if worst_err <= panel_tol || panels.len() >= max_panels {
            break;
        }
        let (a, b, _, _) = panels[worst_idx];
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break; // interval at floating-point resolution
        }
        let left = gk15(f, a, mid);
        let right = gk15(f, mid, b);
        panels[worst_idx] = (a, mid, left.0, left.1);
        panels.push((mid, b, right.0, right.1));
    }
    let value = panels.iter().map(|p| p.2).sum();
    let err_bound = panels.iter().map(|p| p.3).sum();
    QuadratureOutcome {
        value,
        err_bound,
        panels: panels.len(),
    }
}

/// Golden-section search for the maximizer of a unimodal `f` on [a, b].
/// Returns (argmax, max). Tolerance is relative to the bracket width.
pub fn golden_max(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let width0 = (b - a).abs().max(f64::MIN_POSITIVE);
    for _ in 0..200 {
        if (hi - lo).abs() <= rel_tol * width0 {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

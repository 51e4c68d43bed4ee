//! Multi-dimensional FFTs over the flat field layout.
//!
//! Conventions: `forward` maps physical samples to Fourier coefficients with a
//! 1/n^d normalization, so the coefficients are those of the trigonometric
//! interpolant u(x) = sum_k u_hat(k) e^{i xi_k . x}. `inverse` is its exact
//! inverse (unnormalized synthesis sum). Plans and scratch buffers are cached
//! per thread; plans are never shared across threads.

use crate::grid::GridSpec;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

struct AxisPlan {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    line: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

thread_local! {
    static PLANS: RefCell<HashMap<usize, AxisPlan>> = RefCell::new(HashMap::new());
}

fn with_plan<R>(n: usize, f: impl FnOnce(&mut AxisPlan) -> R) -> R {
    PLANS.with(|cell| {
        let mut map = cell.borrow_mut();
        let plan = map.entry(n).or_insert_with(|| {
            let mut planner = FftPlanner::new();
            let fwd = planner.plan_fft_forward(n);
            let inv = planner.plan_fft_inverse(n);
            let scratch_len = fwd
                .get_inplace_scratch_len()
                .max(inv.get_inplace_scratch_len());
            AxisPlan {
                fwd,
                inv,
                line: vec![Complex64::default(); n],
                scratch: vec![Complex64::default(); scratch_len],
            }
        });
        f(plan)
    })
}

/// Transforms every line along `axis`, gathering strided elements into a
/// contiguous buffer and scattering back.
fn transform_axis(grid: &GridSpec, data: &mut [Complex64], axis: usize, forward: bool) {
    let n = grid.n();
    let dim = grid.dim();
    let stride = n.pow((dim - 1 - axis) as u32);
    // Enumerate line starts: all flat indices whose digit along `axis` is zero.
    let outer = grid.len() / n;
    with_plan(n, |plan| {
        for line_id in 0..outer {
            // Split line_id into the digits before and after `axis`.
            let hi = line_id / stride;
            let lo = line_id % stride;
            let start = hi * stride * n + lo;
            for j in 0..n {
                plan.line[j] = data[start + j * stride];
            }
            let fft = if forward { &plan.fwd } else { &plan.inv };
            fft.process_with_scratch(&mut plan.line, &mut plan.scratch);
            for j in 0..n {
                data[start + j * stride] = plan.line[j];
            }
        }
    });
}

/// Physical samples -> Fourier coefficients (includes the 1/n^d factor).
pub fn forward(grid: &GridSpec, data: &mut [Complex64]) {
    debug_assert_eq!(data.len(), grid.len());
    for axis in 0..grid.dim() {
        transform_axis(grid, data, axis, true);
    }
    let scale = 1.0 / grid.len() as f64;
    for v in data.iter_mut() {
        *v *= scale;
    }
}

/// Fourier coefficients -> physical samples.
pub fn inverse(grid: &GridSpec, data: &mut [Complex64]) {
    debug_assert_eq!(data.len(), grid.len());
    for axis in 0..grid.dim() {
        transform_axis(grid, data, axis, false);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn forward_picks_out_plane_wave_coefficients() {
        // u(x, y) = 3 + 2 cos(k . x') with k = (1, 2): coefficients 3 at zero
        // mode and 1 at +/-k.
        let g = GridSpec::new(2, 16, 2.0 * std::f64::consts::PI).unwrap();
        let mut data = vec![Complex64::default(); g.len()];
        for (flat, v) in data.iter_mut().enumerate() {
            let x = g.x_at(flat);
            *v = Complex64::new(3.0 + 2.0 * (x[0] + 2.0 * x[1]).cos(), 0.0);
        }
        forward(&g, &mut data);
        assert_abs_diff_eq!(data[g.index_of_k([0, 0, 0])].re, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(data[g.index_of_k([1, 2, 0])].re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(data[g.index_of_k([-1, -2, 0])].re, 1.0, epsilon = 1e-12);
        let energy_elsewhere: f64 = (0..g.len())
            .filter(|&f| {
                f != g.index_of_k([0, 0, 0])
                    && f != g.index_of_k([1, 2, 0])
                    && f != g.index_of_k([-1, -2, 0])
            })
            .map(|f| data[f].norm())
            .sum();
        assert!(energy_elsewhere < 1e-10, "spurious modes: {energy_elsewhere}");
    }

    #[test]
    fn round_trip_is_identity_2d_and_3d() {
        for dim in [2, 3] {
            let g = GridSpec::new(dim, 16, 1.7).unwrap();
            let orig: Vec<Complex64> = (0..g.len())
                .map(|f| {
                    let x = g.x_at(f);
                    Complex64::new(
                        (x[0] * 9.0).sin() + 0.3 * (x[1] * 17.0).cos(),
                        (x[0] - 2.0 * x[1] + x[2]).cos(),
                    )
                })
                .collect();
            let mut data = orig.clone();
            forward(&g, &mut data);
            inverse(&g, &mut data);
            let max_err = data
                .iter()
                .zip(&orig)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            let scale = orig.iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(
                max_err <= 1e-12 * scale.max(1.0),
                "round trip error {max_err} in dim {dim}"
            );
        }
    }
}

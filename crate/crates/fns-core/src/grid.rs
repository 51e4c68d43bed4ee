//! Periodic-grid bookkeeping: axis sizes, signed wavevectors, flat indexing.
//!
//! Fields live on the torus [0, L)^d sampled at n points per axis. Spectral
//! coefficients are indexed by integer wavevectors k with components in
//! [-n/2, n/2); the physical wavevector is xi = (2*pi/L) * k.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Uniform periodic grid on [0, L)^d with the same point count per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    n: usize,
    box_length: f64,
}

impl GridSpec {
    /// Validates dim in {2, 3}, n a power of two >= 8, box_length > 0.
    pub fn new(dim: usize, n: usize, box_length: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::param("dim", "must be 2 or 3", dim as f64));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::param(
                "n",
                "must be a power of two >= 8",
                n as f64,
            ));
        }
        if !(box_length > 0.0) || !box_length.is_finite() {
            return Err(Error::param("box_length", "must be positive", box_length));
        }
        Ok(GridSpec {
            dim,
            n,
            box_length,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    /// Total number of grid points (= number of retained modes), n^dim.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Fundamental wavenumber 2*pi/L.
    pub fn k0(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.box_length
    }

    /// Grid spacing L/n.
    pub fn dx(&self) -> f64 {
        self.box_length / self.n as f64
    }

    /// Signed integer mode for array position i along one axis: values in [-n/2, n/2).
    #[inline]
    pub fn k_of(&self, i: usize) -> i64 {
        debug_assert!(i < self.n);
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Array position of a signed integer mode (reduced mod n).
    #[inline]
    pub fn pos_of(&self, k: i64) -> usize {
        let n = self.n as i64;
        (k.rem_euclid(n)) as usize
    }

    /// Decomposes a flat index into per-axis array positions (unused axes are 0).
    #[inline]
    pub fn unravel(&self, flat: usize) -> [usize; 3] {
        let n = self.n;
        match self.dim {
            2 => [flat / n, flat % n, 0],
            _ => [flat / (n * n), (flat / n) % n, flat % n],
        }
    }

    /// Flat index from per-axis array positions.
    #[inline]
    pub fn ravel(&self, idx: [usize; 3]) -> usize {
        let n = self.n;
        match self.dim {
            2 => idx[0] * n + idx[1],
            _ => (idx[0] * n + idx[1]) * n + idx[2],
        }
    }

    /// Integer wavevector [kx, ky, kz] at a flat index (kz = 0 in 2D).
    #[inline]
    pub fn k_at(&self, flat: usize) -> [i64; 3] {
        let idx = self.unravel(flat);
        let mut k = [0i64; 3];
        for a in 0..self.dim {
            k[a] = self.k_of(idx[a]);
        }
        k
    }

    /// Physical wavevector xi = (2*pi/L) * k at a flat index.
    #[inline]
    pub fn xi_at(&self, flat: usize) -> [f64; 3] {
        let k = self.k_at(flat);
        let k0 = self.k0();
        [k[0] as f64 * k0, k[1] as f64 * k0, k[2] as f64 * k0]
    }

    /// |xi|^2 at a flat index.
    #[inline]
    pub fn xi_norm_sq(&self, flat: usize) -> f64 {
        let xi = self.xi_at(flat);
        xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]
    }

    /// Flat index of the mode with integer wavevector k.
    #[inline]
    pub fn index_of_k(&self, k: [i64; 3]) -> usize {
        let mut idx = [0usize; 3];
        for a in 0..self.dim {
            idx[a] = self.pos_of(k[a]);
        }
        self.ravel(idx)
    }

    /// True if any axis sits on the unpaired Nyquist mode k = -n/2.
    #[inline]
    pub fn is_nyquist(&self, flat: usize) -> bool {
        let idx = self.unravel(flat);
        (0..self.dim).any(|a| idx[a] == self.n / 2)
    }

    /// Physical coordinates of the grid point at a flat index.
    #[inline]
    pub fn x_at(&self, flat: usize) -> [f64; 3] {
        let idx = self.unravel(flat);
        let dx = self.dx();
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = idx[a] as f64 * dx;
        }
        x
    }

    /// Checks that two fields may be combined.
    pub fn ensure_same(&self, other: &GridSpec, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "{what}: {:?} vs {:?}",
                self, other
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(1, 64, 1.0).is_err());
        assert!(GridSpec::new(4, 64, 1.0).is_err());
        assert!(GridSpec::new(2, 48, 1.0).is_err(), "48 is not a power of two");
        assert!(GridSpec::new(2, 4, 1.0).is_err(), "below minimum size");
        assert!(GridSpec::new(2, 64, 0.0).is_err());
        assert!(GridSpec::new(3, 64, 2.0 * std::f64::consts::PI).is_ok());
    }

    #[test]
    fn wavenumbers_cover_half_open_range() {
        let g = GridSpec::new(2, 8, 1.0).unwrap();
        let ks: Vec<i64> = (0..8).map(|i| g.k_of(i)).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        for k in -4..4 {
            assert_eq!(g.k_of(g.pos_of(k)), k, "pos_of/k_of round trip at {k}");
        }
    }

    #[test]
    fn ravel_unravel_round_trip() {
        for dim in [2, 3] {
            let g = GridSpec::new(dim, 8, 1.0).unwrap();
            for flat in 0..g.len() {
                assert_eq!(g.ravel(g.unravel(flat)), flat);
            }
        }
    }

    #[test]
    fn index_of_k_matches_k_at() {
        let g = GridSpec::new(3, 8, 3.0).unwrap();
        for flat in 0..g.len() {
            assert_eq!(g.index_of_k(g.k_at(flat)), flat);
        }
    }

    #[test]
    fn nyquist_detection() {
        let g = GridSpec::new(2, 8, 1.0).unwrap();
        let flat = g.index_of_k([-4, 1, 0]);
        assert!(g.is_nyquist(flat));
        let flat = g.index_of_k([3, 1, 0]);
        assert!(!g.is_nyquist(flat));
    }
}

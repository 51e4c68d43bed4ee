//! Scalar/vector fields stored as Fourier coefficients on a periodic grid.

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::GridSpec;
use num_complex::Complex64;
use std::io::{Read, Write};
use std::path::Path;

/// Magic bytes of the binary field snapshot format.
pub const SNAPSHOT_MAGIC: [u8; 4] = *b"FNSF";
/// Current snapshot format version.
pub const SNAPSHOT_VERSION: u32 = 1;

/// A real field on the torus, held as complex Fourier coefficients per component.
///
/// Invariant: coefficients are Hermitian-symmetric, coeff(-k) = conj(coeff(k)),
/// so physical samples are real.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    comps: Vec<Vec<Complex64>>,
}

impl SpectralField {
    /// All-zero field with the given number of components (1 = scalar, dim = vector).
    pub fn zeros(grid: GridSpec, components: usize) -> Self {
        assert!(
            components == 1 || components == grid.dim(),
            "components must be 1 or dim"
        );
        SpectralField {
            grid,
            comps: vec![vec![Complex64::default(); grid.len()]; components],
        }
    }

    /// Builds a field from physical samples (one slice per component, length n^dim).
    pub fn from_physical(grid: GridSpec, samples: &[Vec<f64>]) -> Result<Self> {
        let mut field = SpectralField::zeros(grid, samples.len());
        for (c, comp) in samples.iter().enumerate() {
            if comp.len() != grid.len() {
                return Err(Error::GridMismatch(format!(
                    "component {c} has {} samples, grid holds {}",
                    comp.len(),
                    grid.len()
                )));
            }
            let data = &mut field.comps[c];
            for (v, &s) in data.iter_mut().zip(comp.iter()) {
                *v = Complex64::new(s, 0.0);
            }
            fft::forward(&grid, data);
        }
        Ok(field)
    }

    /// Physical samples of one component (real parts after synthesis).
    pub fn physical_component(&self, c: usize) -> Vec<f64> {
        let mut data = self.comps[c].clone();
        fft::inverse(&self.grid, &mut data);
        data.into_iter().map(|v| v.re).collect()
    }

    /// Physical samples of every component.
    pub fn to_physical(&self) -> Vec<Vec<f64>> {
        (0..self.comps.len())
            .map(|c| self.physical_component(c))
            .collect()
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn num_components(&self) -> usize {
        self.comps.len()
    }

    pub fn is_vector(&self) -> bool {
        self.comps.len() == self.grid.dim()
    }

    pub fn comp(&self, c: usize) -> &[Complex64] {
        &self.comps[c]
    }

    pub fn comp_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.comps[c]
    }

    /// Coefficient of component `c` at integer wavevector `k`.
    pub fn mode(&self, c: usize, k: [i64; 3]) -> Complex64 {
        self.comps[c][self.grid.index_of_k(k)]
    }

    /// Sets the coefficient at `k` and its Hermitian partner at `-k` to keep the
    /// field real. Self-paired modes (k = -k mod n) are forced to their real part.
    pub fn set_mode_pair(&mut self, c: usize, k: [i64; 3], v: Complex64) {
        let i = self.grid.index_of_k(k);
        let j = self.grid.index_of_k([-k[0], -k[1], -k[2]]);
        if i == j {
            self.comps[c][i] = Complex64::new(v.re, 0.0);
        } else {
            self.comps[c][i] = v;
            self.comps[c][j] = v.conj();
        }
    }

    /// Largest violation of Hermitian symmetry, max_k |coeff(k) - conj(coeff(-k))|.
    pub fn hermitian_residual(&self) -> f64 {
        let g = &self.grid;
        let mut worst = 0.0f64;
        for comp in &self.comps {
            for flat in 0..g.len() {
                let k = g.k_at(flat);
                let j = g.index_of_k([-k[0], -k[1], -k[2]]);
                let d = (comp[flat] - comp[j].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Relative divergence residual of a vector field:
    /// ||xi . u_hat||_l2 / ||  |xi| |u_hat| ||_l2 (0 for the zero field).
    pub fn divergence_residual(&self) -> f64 {
        assert!(self.is_vector(), "divergence of a scalar field");
        let g = &self.grid;
        let mut num = 0.0;
        let mut den = 0.0;
        for flat in 0..g.len() {
            let xi = g.xi_at(flat);
            let mut dot = Complex64::default();
            let mut mag_sq = 0.0;
            for (a, comp) in self.comps.iter().enumerate() {
                dot += Complex64::new(0.0, xi[a]) * comp[flat];
                mag_sq += comp[flat].norm_sqr();
            }
            num += dot.norm_sqr();
            den += (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]) * mag_sq;
        }
        if den == 0.0 {
            0.0
        } else {
            (num / den).sqrt()
        }
    }

    /// self <- self + scale * other.
    pub fn add_scaled(&mut self, other: &SpectralField, scale: f64) {
        debug_assert_eq!(self.grid, other.grid);
        debug_assert_eq!(self.comps.len(), other.comps.len());
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += *y * scale;
            }
        }
    }

    /// self <- scale * self.
    pub fn scale(&mut self, scale: f64) {
        for comp in &mut self.comps {
            for x in comp.iter_mut() {
                *x *= scale;
            }
        }
    }

    /// Difference self - other as a new field.
    pub fn difference(&self, other: &SpectralField) -> Result<Self> {
        self.grid.ensure_same(&other.grid, "field difference")?;
        if self.comps.len() != other.comps.len() {
            return Err(Error::GridMismatch(format!(
                "component count {} vs {}",
                self.comps.len(),
                other.comps.len()
            )));
        }
        let mut out = self.clone();
        out.add_scaled(other, -1.0);
        Ok(out)
    }

    /// Re-expresses the field on a finer grid (same box, same dim, larger n) by
    /// copying coefficients at matching integer wavevectors: the underlying
    /// trigonometric polynomial is unchanged.
    pub fn embedded(&self, fine: GridSpec) -> Result<Self> {
        if fine.dim() != self.grid.dim() || fine.box_length() != self.grid.box_length() {
            return Err(Error::GridMismatch(format!(
                "embedding requires same dim and box, got {:?} -> {:?}",
                self.grid, fine
            )));
        }
        if fine.n() < self.grid.n() {
            return Err(Error::GridMismatch(format!(
                "embedding target n = {} is coarser than source n = {}",
                fine.n(),
                self.grid.n()
            )));
        }
        let mut out = SpectralField::zeros(fine, self.comps.len());
        let half = (self.grid.n() / 2) as i64;
        for flat in 0..self.grid.len() {
            let k = self.grid.k_at(flat);
            // The unpaired coarse Nyquist plane has no faithful fine image.
            if k.iter().any(|&ka| ka == -half) {
                continue;
            }
            let j = fine.index_of_k(k);
            for (c, comp) in self.comps.iter().enumerate() {
                out.comp_mut(c)[j] = comp[flat];
            }
        }
        Ok(out)
    }

    /// Maximum coefficient-wise distance to another field (spectral sup).
    pub fn max_mode_distance(&self, other: &SpectralField) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        let mut worst = 0.0f64;
        for (a, b) in self.comps.iter().zip(&other.comps) {
            for (x, y) in a.iter().zip(b) {
                worst = worst.max((x - y).norm());
            }
        }
        worst
    }

    /// Writes the snapshot: 32-byte header (magic, version, dim, n, components,
    /// alpha as f64 LE at offset 24) followed by physical-space f64 LE samples,
    /// component-major, row-major within each component.
    pub fn write_snapshot(&self, alpha: f64, path: &Path) -> Result<()> {
        let io_err = |e: std::io::Error| Error::Io {
            path: path.display().to_string(),
            source: e,
        };
        let mut buf = Vec::with_capacity(32 + 8 * self.grid.len() * self.comps.len());
        buf.extend_from_slice(&SNAPSHOT_MAGIC);
        buf.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.grid.dim() as u32).to_le_bytes());
        buf.extend_from_slice(&(self.grid.n() as u32).to_le_bytes());
        buf.extend_from_slice(&(self.comps.len() as u32).to_le_bytes());
        buf.extend_from_slice(&[0u8; 4]); // padding to a 32-byte header
        buf.extend_from_slice(&alpha.to_le_bytes());
        for c in 0..self.comps.len() {
            for v in self.physical_component(c) {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        let mut file = std::fs::File::create(path).map_err(io_err)?;
        file.write_all(&buf).map_err(io_err)?;
        Ok(())
    }

    /// Reads a snapshot written by `write_snapshot`. The box length is not part
    /// of the format; the caller supplies it (defaults to 2*pi when `None`).
    pub fn read_snapshot(path: &Path, box_length: Option<f64>) -> Result<(Self, f64)> {
        let io_err = |e: std::io::Error| Error::Io {
            path: path.display().to_string(),
            source: e,
        };
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .map_err(io_err)?
            .read_to_end(&mut bytes)
            .map_err(io_err)?;
        if bytes.len() < 32 {
            return Err(Error::SnapshotFormat("shorter than the 32-byte header".into()));
        }
        if bytes[0..4] != SNAPSHOT_MAGIC {
            return Err(Error::SnapshotFormat("bad magic".into()));
        }
        let u32_at = |off: usize| {
            u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap())
        };
        let version = u32_at(4);
        if version != SNAPSHOT_VERSION {
            return Err(Error::SnapshotFormat(format!("unknown version {version}")));
        }
        let dim = u32_at(8) as usize;
        let n = u32_at(12) as usize;
        let components = u32_at(16) as usize;
        let alpha = f64::from_le_bytes(bytes[24..32].try_into().unwrap());
        let grid = GridSpec::new(dim, n, box_length.unwrap_or(2.0 * std::f64::consts::PI))?;
        let expected = 32 + 8 * components * grid.len();
        if bytes.len() != expected {
            return Err(Error::SnapshotFormat(format!(
                "expected {expected} bytes, found {}",
                bytes.len()
            )));
        }
        let mut samples = Vec::with_capacity(components);
        let mut off = 32;
        for _ in 0..components {
            let mut comp = Vec::with_capacity(grid.len());
            for _ in 0..grid.len() {
                comp.push(f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()));
                off += 8;
            }
            samples.push(comp);
        }
        Ok((SpectralField::from_physical(grid, &samples)?, alpha))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_field() -> SpectralField {
        let g = GridSpec::new(2, 16, 2.0 * std::f64::consts::PI).unwrap();
        let mut u = SpectralField::zeros(g, 2);
        u.set_mode_pair(0, [1, 2, 0], Complex64::new(0.4, -0.3));
        u.set_mode_pair(1, [3, 0, 0], Complex64::new(-0.1, 0.2));
        u
    }

    #[test]
    fn set_mode_pair_keeps_field_real() {
        let u = sample_field();
        assert!(u.hermitian_residual() < 1e-15);
        for c in 0..2 {
            let mut data = u.comp(c).to_vec();
            fft::inverse(u.grid(), &mut data);
            let max_imag = data.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
            assert!(max_imag < 1e-13, "imaginary residue {max_imag}");
        }
    }

    #[test]
    fn physical_round_trip() {
        let u = sample_field();
        let phys = u.to_physical();
        let v = SpectralField::from_physical(*u.grid(), &phys).unwrap();
        assert!(u.max_mode_distance(&v) < 1e-13);
    }

    #[test]
    fn snapshot_round_trip() {
        let u = sample_field();
        let dir = std::env::temp_dir().join("fns_core_snapshot_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("f.fnsf");
        u.write_snapshot(1.75, &path).unwrap();
        let (v, alpha) = SpectralField::read_snapshot(&path, Some(u.grid().box_length())).unwrap();
        assert_eq!(alpha, 1.75);
        assert_eq!(v.grid(), u.grid());
        assert!(u.max_mode_distance(&v) < 1e-12);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn snapshot_rejects_garbage() {
        let dir = std::env::temp_dir().join("fns_core_snapshot_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("garbage.fnsf");
        std::fs::write(&path, b"not a snapshot").unwrap();
        assert!(SpectralField::read_snapshot(&path, None).is_err());
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn divergence_residual_flags_gradients() {
        let g = GridSpec::new(2, 16, 2.0 * std::f64::consts::PI).unwrap();
        // Gradient of sin(x+y): u = (cos, cos) modes at (1,1) -> maximal divergence.
        let mut grad = SpectralField::zeros(g, 2);
        grad.set_mode_pair(0, [1, 1, 0], Complex64::new(0.0, 0.5));
        grad.set_mode_pair(1, [1, 1, 0], Complex64::new(0.0, 0.5));
        assert!(grad.divergence_residual() > 0.9);
        // Perpendicular (solenoidal) arrangement.
        let mut sol = SpectralField::zeros(g, 2);
        sol.set_mode_pair(0, [1, 1, 0], Complex64::new(0.0, 0.5));
        sol.set_mode_pair(1, [1, 1, 0], Complex64::new(0.0, -0.5));
        assert!(sol.divergence_residual() < 1e-14);
    }

    #[test]
    fn embedding_preserves_trigonometric_samples() {
        // Zero-padding a band-limited field must reproduce the same function:
        // coarse samples appear verbatim among the fine samples.
        let g = GridSpec::new(2, 16, 2.0 * std::f64::consts::PI).unwrap();
        let fine = GridSpec::new(2, 32, 2.0 * std::f64::consts::PI).unwrap();
        let mut f = SpectralField::zeros(g, 1);
        f.set_mode_pair(0, [3, -2, 0], Complex64::new(0.4, 0.1));
        f.set_mode_pair(0, [1, 5, 0], Complex64::new(-0.2, 0.7));
        let emb = f.embedded(fine).unwrap();
        assert_eq!(emb.mode(0, [3, -2, 0]), f.mode(0, [3, -2, 0]));
        assert_eq!(emb.mode(0, [1, 5, 0]), f.mode(0, [1, 5, 0]));
        let coarse_phys = f.physical_component(0);
        let fine_phys = emb.physical_component(0);
        for i in 0..16 {
            for j in 0..16 {
                let c = coarse_phys[i * 16 + j];
                let fval = fine_phys[(2 * i) * 32 + (2 * j)];
                assert!(
                    (c - fval).abs() < 1e-12,
                    "sample mismatch at ({i}, {j}): {c} vs {fval}"
                );
            }
        }
        // Narrower targets and mismatched boxes are rejected.
        assert!(f.embedded(g).is_ok(), "same grid is a no-op embedding");
        let shorter = GridSpec::new(2, 8, 2.0 * std::f64::consts::PI).unwrap();
        assert!(f.embedded(shorter).is_err());
        let other_box = GridSpec::new(2, 32, 1.0).unwrap();
        assert!(f.embedded(other_box).is_err());
    }
}

//! Two-electron wavefunction on a square grid and its binary snapshot format.

use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid2D;

pub const SNAPSHOT_MAGIC: [u8; 8] = *b"NSDIWF2D";
pub const SNAPSHOT_VERSION: u64 = 1;

/// `Ψ(x1, x2, t)` stored row-major with `x1` as the slow index.
#[derive(Debug, Clone)]
pub struct WaveFunction2D {
    pub values: Vec<Complex64>,
    pub grid: Arc<Grid2D>,
    pub time: f64,
}

impl WaveFunction2D {
    pub fn zeros(grid: Arc<Grid2D>) -> Self {
        let len = grid.len();
        Self {
            values: vec![Complex64::new(0.0, 0.0); len],
            grid,
            time: 0.0,
        }
    }

    /// Samples `f(x1, x2)` on the grid.
    pub fn from_fn<F>(grid: Arc<Grid2D>, f: F) -> Self
    where
        F: Fn(f64, f64) -> Complex64,
    {
        let x = grid.axis().x();
        let values = x
            .iter()
            .flat_map(|&x1| x.iter().map(move |&x2| (x1, x2)))
            .map(|(x1, x2)| f(x1, x2))
            .collect();
        Self {
            values,
            grid,
            time: 0.0,
        }
    }

    /// Symmetric Gaussian `exp(-(x1² + x2²) / (2σ²))`, normalized.
    pub fn gaussian_seed(grid: Arc<Grid2D>, sigma: f64) -> Self {
        let mut psi = Self::from_fn(grid, |a, b| {
            Complex64::new((-(a * a + b * b) / (2.0 * sigma * sigma)).exp(), 0.0)
        });
        psi.normalize();
        psi
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    #[inline]
    pub fn at(&self, i1: usize, i2: usize) -> Complex64 {
        self.values[self.grid.index(i1, i2)]
    }

    /// `∫|Ψ|² dx1 dx2`.
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    /// Rescales to unit norm and returns the norm before rescaling.
    pub fn normalize(&mut self) -> f64 {
        let norm = self.norm_sqr().sqrt();
        if norm > 0.0 {
            let s = 1.0 / norm;
            self.values.iter_mut().for_each(|c| *c *= s);
        }
        norm
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &WaveFunction2D) -> Complex64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.grid.cell_area()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// `max |Ψ(x1,x2) − Ψ(x2,x1)|`.
    pub fn exchange_residual(&self) -> f64 {
        let n = self.n();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.at(i, j) - self.at(j, i)).norm());
            }
        }
        worst
    }

    /// Replaces Ψ by `(Ψ(x1,x2) + Ψ(x2,x1)) / 2`.
    ///
    /// The grid is symmetric under index exchange because both axes coincide.
    pub fn symmetrize(&mut self) {
        let n = self.n();
        for i in 0..n {
            for j in (i + 1)..n {
                let a = i * n + j;
                let b = j * n + i;
                let m = (self.values[a] + self.values[b]) * 0.5;
                self.values[a] = m;
                self.values[b] = m;
            }
        }
    }

    pub fn max_density(&self) -> f64 {
        self.values.iter().map(|c| c.norm_sqr()).fold(0.0, f64::max)
    }

    /// Places a state defined on a smaller, equally spaced grid at the centre
    /// of `target`; everything outside is zero.
    pub fn embed_into(&self, target: Arc<Grid2D>) -> Result<WaveFunction2D> {
        let small = self.n();
        let big = target.n();
        if (self.grid.dx() - target.dx()).abs() > 1e-12 * target.dx() || small > big {
            return Err(Error::InvalidGrid(
                "embedding requires equal spacing and a larger target".into(),
            ));
        }
        let offset = (big - small) / 2;
        let mut out = WaveFunction2D::zeros(target);
        for i in 0..small {
            let src = &self.values[i * small..(i + 1) * small];
            let row = (i + offset) * big + offset;
            out.values[row..row + small].copy_from_slice(src);
        }
        out.time = self.time;
        Ok(out)
    }

    /// Writes the little-endian snapshot record.
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&SNAPSHOT_MAGIC)?;
        w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
        w.write_all(&(self.n() as u64).to_le_bytes())?;
        w.write_all(&self.grid.half_width().to_le_bytes())?;
        w.write_all(&self.time.to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.values.len() * 16);
        for c in &self.values {
            buf.extend_from_slice(&c.re.to_le_bytes());
            buf.extend_from_slice(&c.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_snapshot<R: Read>(mut r: R) -> Result<WaveFunction2D> {
        let mut word = [0u8; 8];
        r.read_exact(&mut word)?;
        if word != SNAPSHOT_MAGIC {
            return Err(Error::Snapshot("bad magic".into()));
        }
        r.read_exact(&mut word)?;
        let version = u64::from_le_bytes(word);
        if version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!("unsupported version {version}")));
        }
        r.read_exact(&mut word)?;
        let n = u64::from_le_bytes(word) as usize;
        r.read_exact(&mut word)?;
        let half_width = f64::from_le_bytes(word);
        r.read_exact(&mut word)?;
        let time = f64::from_le_bytes(word);
        let grid = Arc::new(Grid2D::new(half_width, n)?);
        let mut buf = vec![0u8; n * n * 16];
        r.read_exact(&mut buf)?;
        let values = buf
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                Complex64::new(re, im)
            })
            .collect();
        Ok(WaveFunction2D { values, grid, time })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_seed_is_normalized_and_symmetric() {
        let g = Arc::new(Grid2D::new(10.0, 64).unwrap());
        let psi = WaveFunction2D::gaussian_seed(g, 1.0);
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(psi.exchange_residual() < 1e-15);
    }

    #[test]
    fn snapshot_header_layout() {
        let g = Arc::new(Grid2D::new(5.0, 8).unwrap());
        let mut psi = WaveFunction2D::gaussian_seed(g, 1.0);
        psi.time = 1.25;
        let mut bytes = Vec::new();
        psi.write_snapshot(&mut bytes).unwrap();
        assert_eq!(bytes.len(), 40 + 64 * 16);
        assert_eq!(&bytes[..8], b"NSDIWF2D");
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(bytes[16..24].try_into().unwrap()), 8);
        assert_eq!(f64::from_le_bytes(bytes[24..32].try_into().unwrap()), 5.0);
        assert_eq!(f64::from_le_bytes(bytes[32..40].try_into().unwrap()), 1.25);
        // first value is row 0 (x1 = -L), column 0 (x2 = -L)
        let re0 = f64::from_le_bytes(bytes[40..48].try_into().unwrap());
        assert_eq!(re0, psi.values[0].re);
        let back = WaveFunction2D::read_snapshot(&bytes[..]).unwrap();
        assert_eq!(back.values, psi.values);
        assert_eq!(back.time, 1.25);
    }

    #[test]
    fn snapshot_rejects_bad_magic() {
        let bytes = [0u8; 64];
        assert!(WaveFunction2D::read_snapshot(&bytes[..]).is_err());
    }

    #[test]
    fn embedding_preserves_norm() {
        let big = Arc::new(Grid2D::new(20.0, 128).unwrap());
        let small = Arc::new(big.compact_with_half_width(8.0).unwrap());
        let psi = WaveFunction2D::gaussian_seed(small, 1.0);
        let e = psi.embed_into(big.clone()).unwrap();
        assert!((e.norm_sqr() - 1.0).abs() < 1e-12);
        let o = big.axis().origin_index();
        let so = psi.grid.axis().origin_index();
        assert_eq!(e.at(o, o), psi.at(so, so));
    }
}

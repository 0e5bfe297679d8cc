//! Unnormalized forward/inverse FFTs on 1D buffers and square 2D arrays.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::par;

#[derive(Clone)]
pub struct Fft1 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft1 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft1").field("n", &self.n).finish()
    }
}

impl Fft1 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn scratch_len(&self) -> usize {
        self.forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len())
    }

    /// Forward transform of every consecutive length-`n` chunk of `data`.
    pub fn forward(&self, data: &mut [Complex64], scratch: &mut [Complex64]) {
        self.forward.process_with_scratch(data, scratch);
    }

    /// Inverse (unnormalized) transform of every length-`n` chunk.
    pub fn inverse(&self, data: &mut [Complex64], scratch: &mut [Complex64]) {
        self.inverse.process_with_scratch(data, scratch);
    }

    pub fn forward_alloc(&self, data: &mut [Complex64]) {
        let mut s = vec![Complex64::new(0.0, 0.0); self.scratch_len()];
        self.forward(data, &mut s);
    }

    pub fn inverse_alloc(&self, data: &mut [Complex64]) {
        let mut s = vec![Complex64::new(0.0, 0.0); self.scratch_len()];
        self.inverse(data, &mut s);
    }
}

/// Row-block size for parallel row transforms.
const ROW_BLOCK: usize = 32;
const TILE: usize = 32;

/// 2D transform on an `n x n` row-major array.
///
/// The column pass is done by transposing, transforming rows and leaving the
/// array transposed; [`Fft2::forward_transposed`] and
/// [`Fft2::inverse_from_transposed`] make that explicit so that diagonal
/// operators (which are symmetric in the two axes here) can be applied in
/// the transposed layout without a second transpose.
#[derive(Clone, Debug)]
pub struct Fft2 {
    fft: Fft1,
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        Self { fft: Fft1::new(n) }
    }

    pub fn n(&self) -> usize {
        self.fft.len()
    }

    fn rows(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n();
        let scratch_len = self.fft.scratch_len();
        par::for_each_chunk_mut(data, n * ROW_BLOCK, |_, block| {
            let mut scratch = vec![Complex64::new(0.0, 0.0); scratch_len];
            if inverse {
                self.fft.inverse(block, &mut scratch);
            } else {
                self.fft.forward(block, &mut scratch);
            }
        });
    }

    /// Forward 2D FFT; output is left transposed (`out[k2 * n + k1]`).
    pub fn forward_transposed(&self, data: &mut [Complex64]) {
        self.rows(data, false);
        transpose_in_place(data, self.n());
        self.rows(data, false);
    }

    /// Inverse of [`Fft2::forward_transposed`], unnormalized (scale `n^2`).
    pub fn inverse_from_transposed(&self, data: &mut [Complex64]) {
        self.rows(data, true);
        transpose_in_place(data, self.n());
        self.rows(data, true);
    }

    /// Forward 2D FFT in natural layout (`out[k1 * n + k2]`).
    pub fn forward(&self, data: &mut [Complex64]) {
        self.forward_transposed(data);
        transpose_in_place(data, self.n());
    }

    /// Inverse 2D FFT in natural layout, unnormalized.
    pub fn inverse(&self, data: &mut [Complex64]) {
        transpose_in_place(data, self.n());
        self.inverse_from_transposed(data);
    }
}

/// Blocked in-place transpose of an `n x n` matrix.
pub fn transpose_in_place(data: &mut [Complex64], n: usize) {
    debug_assert_eq!(data.len(), n * n);
    for bi in (0..n).step_by(TILE) {
        for bj in (bi..n).step_by(TILE) {
            let i_end = (bi + TILE).min(n);
            let j_end = (bj + TILE).min(n);
            for i in bi..i_end {
                let j_start = if bi == bj { i + 1 } else { bj };
                for j in j_start..j_end {
                    data.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft2(data: &[Complex64], n: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for k1 in 0..n {
            for k2 in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for j1 in 0..n {
                    for j2 in 0..n {
                        let ph = -2.0 * std::f64::consts::PI * ((k1 * j1 + k2 * j2) as f64)
                            / n as f64;
                        acc += data[j1 * n + j2] * Complex64::from_polar(1.0, ph);
                    }
                }
                out[k1 * n + k2] = acc;
            }
        }
        out
    }

    #[test]
    fn matches_naive_dft() {
        let n = 8;
        let data: Vec<Complex64> = (0..n * n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let expect = naive_dft2(&data, n);
        let mut got = data.clone();
        Fft2::new(n).forward(&mut got);
        for (a, b) in got.iter().zip(&expect) {
            assert!((a - b).norm() < 1e-10);
        }
        Fft2::new(n).inverse(&mut got);
        for (a, b) in got.iter().zip(&data) {
            assert!((a / (n * n) as f64 - b).norm() < 1e-12);
        }
    }

    #[test]
    fn transpose_roundtrip() {
        let n = 70;
        let data: Vec<Complex64> = (0..n * n).map(|i| Complex64::new(i as f64, 0.0)).collect();
        let mut t = data.clone();
        transpose_in_place(&mut t, n);
        assert_eq!(t[3 * n + 5], data[5 * n + 3]);
        transpose_in_place(&mut t, n);
        assert_eq!(t, data);
    }
}

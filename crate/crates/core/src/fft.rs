//! Periodic FFTs on a [`Grid`] and circular convolution helpers.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid;

/// Forward/inverse transforms over all axes of a grid.
#[derive(Clone)]
pub(crate) struct GridFft {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for GridFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridFft").field("grid", &self.grid).finish()
    }
}

/// Signed wavenumber index of FFT slot `k` out of `n`.
pub(crate) fn signed_index(k: usize, n: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

impl GridFft {
    pub(crate) fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            forward: planner.plan_fft_forward(grid.n()),
            inverse: planner.plan_fft_inverse(grid.n()),
        }
    }

    fn run(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.grid.n();
        if self.grid.dim() == 1 {
            plan.process(data);
            return;
        }
        for row in data.chunks_exact_mut(n) {
            plan.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = data[i * n + j];
            }
            plan.process(&mut col);
            for i in 0..n {
                data[i * n + j] = col[i];
            }
        }
    }

    /// Unnormalized forward transform.
    pub(crate) fn forward(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut data = values.to_vec();
        self.run(&mut data, &self.forward);
        data
    }

    /// Inverse transform including the `1/N^dim` normalization.
    pub(crate) fn inverse(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let mut data = coeffs.to_vec();
        self.run(&mut data, &self.inverse);
        let scale = 1.0 / self.grid.len() as f64;
        for v in &mut data {
            *v *= scale;
        }
        data
    }
}

/// Circular convolution `out(x) = sum_d kernel(d) data(x - d)` where `kernel`
/// is indexed by flat offset. Negative round-off is not clamped here.
pub(crate) fn convolve(fft: &GridFft, kernel_hat: &[Complex64], data: &[f64]) -> Vec<f64> {
    let input: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut spec = fft.forward(&input);
    for (s, k) in spec.iter_mut().zip(kernel_hat) {
        *s *= k;
    }
    fft.inverse(&spec).into_iter().map(|v| v.re).collect()
}

/// Transform of a kernel given as a function of the flat offset index.
pub(crate) fn kernel_transform(fft: &GridFft, grid: &Grid, kernel: impl Fn(usize) -> f64) -> Vec<Complex64> {
    let values: Vec<Complex64> = (0..grid.len()).map(|d| Complex64::new(kernel(d), 0.0)).collect();
    fft.forward(&values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_two_d() {
        let g = Grid::new(2, 16, 1.0).unwrap();
        let fft = GridFft::new(g);
        let v: Vec<Complex64> = (0..g.len()).map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let back = fft.inverse(&fft.forward(&v));
        for (a, b) in v.iter().zip(&back) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn convolution_matches_direct_sum() {
        let g = Grid::new(2, 8, 1.0).unwrap();
        let fft = GridFft::new(g);
        let data: Vec<f64> = (0..g.len()).map(|i| ((i * 7) % 11) as f64).collect();
        let kernel = |d: usize| 1.0 / (1.0 + g.offset_distance(d));
        let hat = kernel_transform(&fft, &g, kernel);
        let out = convolve(&fft, &hat, &data);
        for x in 0..g.len() {
            let direct: f64 = (0..g.len()).map(|y| kernel_offset(&g, x, y, &kernel) * data[y]).sum();
            assert!((out[x] - direct).abs() < 1e-10);
        }
    }

    fn kernel_offset(g: &Grid, x: usize, y: usize, k: &impl Fn(usize) -> f64) -> f64 {
        let mx = g.multi_index(x);
        let my = g.multi_index(y);
        let n = g.n();
        let d = [(mx[0] + n - my[0]) % n, (mx[1] + n - my[1]) % n];
        k(g.flat_index(d))
    }

    #[test]
    fn signed_indices() {
        assert_eq!(signed_index(0, 8), 0);
        assert_eq!(signed_index(3, 8), 3);
        assert_eq!(signed_index(4, 8), -4);
        assert_eq!(signed_index(7, 8), -1);
    }
}

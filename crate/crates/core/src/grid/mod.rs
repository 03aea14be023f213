//! Periodic computational domain, sampled functions and weighted Lebesgue norms.
//!
//! The domain is the torus `[-R, R)^dim` sampled on `N` points per axis with
//! spacing `h = 2R / N`. Samples are stored lexicographically with axis 0
//! varying slowest. Every integral in `x` is the midpoint Riemann sum
//! `sum_x g(x) h^dim`.

mod io;

pub use io::{read_binary, read_csv, write_binary, write_csv};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic grid on `[-R, R)^dim`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: usize,
    half_width: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, half_width: f64) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::Parameter(format!("dim must be 1 or 2, got {dim}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Parameter(format!(
                "points per axis must be a power of two >= 8, got {n}"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::Parameter(format!(
                "half width must be positive and finite, got {half_width}"
            )));
        }
        Ok(Self { dim, n, half_width })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// `h = 2R / N`. Exact in binary floating point since `N` is a power of two.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// `h^dim`, the quadrature weight of a single sample.
    pub fn cell_measure(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// `(2R)^dim`.
    pub fn domain_measure(&self) -> f64 {
        (2.0 * self.half_width).powi(self.dim as i32)
    }

    /// Total number of samples, `N^dim`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of index `i` along one axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    /// Index of the grid coordinate nearest to `x` along one axis (periodic).
    pub fn nearest_index(&self, x: f64) -> usize {
        let h = self.spacing();
        let raw = ((x + self.half_width) / h).round() as i64;
        raw.rem_euclid(self.n as i64) as usize
    }

    /// Per-axis indices of a flat index.
    pub fn multi_index(&self, flat: usize) -> [usize; 2] {
        if self.dim == 1 {
            [flat, 0]
        } else {
            [flat / self.n, flat % self.n]
        }
    }

    pub fn flat_index(&self, idx: [usize; 2]) -> usize {
        if self.dim == 1 {
            idx[0]
        } else {
            idx[0] * self.n + idx[1]
        }
    }

    /// Physical coordinates of a flat index (unused axis reported as 0).
    pub fn point(&self, flat: usize) -> [f64; 2] {
        let m = self.multi_index(flat);
        let y = if self.dim == 2 { self.coordinate(m[1]) } else { 0.0 };
        [self.coordinate(m[0]), y]
    }

    /// Periodic index offset along one axis, `min(|a-b|, N-|a-b|)`.
    pub fn axis_offset(&self, a: usize, b: usize) -> usize {
        let d = a.abs_diff(b) % self.n;
        d.min(self.n - d)
    }

    /// Squared torus distance between two flat indices, in units of `h^2`.
    pub fn torus_offset2(&self, a: usize, b: usize) -> usize {
        let ma = self.multi_index(a);
        let mb = self.multi_index(b);
        (0..self.dim)
            .map(|k| {
                let d = self.axis_offset(ma[k], mb[k]);
                d * d
            })
            .sum()
    }

    /// Torus distance between two flat indices.
    pub fn torus_distance(&self, a: usize, b: usize) -> f64 {
        (self.torus_offset2(a, b) as f64).sqrt() * self.spacing()
    }

    /// Torus distance from the origin of a flat offset index (offset form of
    /// `torus_distance(0, d)`).
    pub fn offset_distance(&self, offset: usize) -> f64 {
        self.torus_distance(0, offset)
    }

    /// Cyclic shift of a flat index by a per-axis offset.
    pub fn shifted(&self, flat: usize, by: [i64; 2]) -> usize {
        let m = self.multi_index(flat);
        let n = self.n as i64;
        let a = (m[0] as i64 + by[0]).rem_euclid(n) as usize;
        let b = if self.dim == 2 {
            (m[1] as i64 + by[1]).rem_euclid(n) as usize
        } else {
            0
        };
        self.flat_index([a, b])
    }

    /// Largest heat-time parameter at which torus kernels still resemble
    /// their whole-space counterparts.
    pub fn t_max(&self) -> f64 {
        self.half_width * self.half_width / 4.0
    }
}

/// Neumaier compensated sum in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// A sampled complex function on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::RejectedInput(format!("non-finite sample at index {i}")));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_parts_unchecked(grid: Grid, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn from_real(grid: Grid, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, values.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> Complex64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self::new(grid, values)
    }

    pub fn from_real_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn constant(grid: Grid, c: Complex64) -> Self {
        Self { grid, values: vec![c; grid.len()] }
    }

    /// Discrete delta at `index`, normalized to unit integral.
    pub fn delta(grid: Grid, index: usize) -> Self {
        let mut f = Self::zeros(grid);
        f.values[index] = Complex64::new(1.0 / grid.cell_measure(), 0.0);
        f
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn re(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn abs(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Dimension("functions live on different grids".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(Self { grid: self.grid, values })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(Self { grid: self.grid, values })
    }

    /// `<f, g> = sum_x f(x) conj(g(x)) h^dim`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.check_same_grid(other)?;
        let re = compensated_sum(self.values.iter().zip(&other.values).map(|(a, b)| (a * b.conj()).re));
        let im = compensated_sum(self.values.iter().zip(&other.values).map(|(a, b)| (a * b.conj()).im));
        Ok(Complex64::new(re, im) * self.grid.cell_measure())
    }

    /// Cyclic translation by a per-axis index offset.
    pub fn shift(&self, by: [i64; 2]) -> Self {
        let mut values = vec![Complex64::new(0.0, 0.0); self.values.len()];
        for (i, v) in self.values.iter().enumerate() {
            values[self.grid.shifted(i, by)] = *v;
        }
        Self { grid: self.grid, values }
    }

    /// Largest imaginary part in magnitude.
    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }
}

/// A non-negative weight, not identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    grid: Grid,
    values: Vec<f64>,
}

impl Weight {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "expected {} weight samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::RejectedInput(format!(
                "weight must be finite and non-negative (index {i} is {})",
                values[i]
            )));
        }
        if !values.iter().any(|&v| v > 0.0) {
            return Err(Error::RejectedInput("weight vanishes identically".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        Self::new(grid, (0..grid.len()).map(|i| f(grid.point(i))).collect())
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.len()])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total_mass(&self) -> f64 {
        compensated_sum(self.values.iter().copied()) * self.grid.cell_measure()
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.values.iter().all(|&v| v > 0.0)
    }

    /// `w^e`; negative exponents require a strictly positive weight.
    pub fn powf(&self, e: f64) -> Result<Self> {
        if e < 0.0 && !self.is_strictly_positive() {
            return Err(Error::SingularWeight("negative power of a weight with zeros".into()));
        }
        Self::new(self.grid, self.values.iter().map(|v| v.powf(e)).collect())
    }

    pub fn as_function(&self) -> GridFunction {
        GridFunction::from_parts_unchecked(
            self.grid,
            self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }
}

fn check_finite(f: &GridFunction) -> Result<()> {
    if f.values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::RejectedInput("function has non-finite samples".into()));
    }
    Ok(())
}

/// `(sum_x |f(x)|^p h^dim)^(1/p)`.
pub fn lp_norm(f: &GridFunction, p: f64) -> Result<f64> {
    check_finite(f)?;
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::Parameter(format!("p must be finite and >= 1, got {p}")));
    }
    let s = compensated_sum(f.values.iter().map(|v| v.norm().powf(p)));
    Ok((s * f.grid.cell_measure()).powf(1.0 / p))
}

/// `(sum_x |f(x)|^p w(x) h^dim)^(1/p)`.
pub fn weighted_lp_norm(f: &GridFunction, w: &Weight, p: f64) -> Result<f64> {
    check_finite(f)?;
    if f.grid != w.grid {
        return Err(Error::Dimension("function and weight live on different grids".into()));
    }
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::Parameter(format!("p must be finite and >= 1, got {p}")));
    }
    let s = compensated_sum(f.values.iter().zip(&w.values).map(|(v, wv)| v.norm().powf(p) * wv));
    Ok((s * f.grid.cell_measure()).powf(1.0 / p))
}

/// `w{x : |f(x)| > lambda}`.
pub fn weighted_superlevel_measure(f: &GridFunction, w: &Weight, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Parameter(format!("level must be positive, got {lambda}")));
    }
    if f.grid != w.grid {
        return Err(Error::Dimension("function and weight live on different grids".into()));
    }
    let s = compensated_sum(
        f.values
            .iter()
            .zip(&w.values)
            .filter(|(v, _)| v.norm() > lambda)
            .map(|(_, wv)| *wv),
    );
    Ok(s * f.grid.cell_measure())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(n: usize, r: f64) -> Grid {
        Grid::new(1, n, r).unwrap()
    }

    #[test]
    fn grid_rejects_bad_shapes() {
        assert!(Grid::new(3, 16, 1.0).is_err());
        assert!(Grid::new(1, 12, 1.0).is_err());
        assert!(Grid::new(1, 4, 1.0).is_err());
        assert!(Grid::new(2, 16, 0.0).is_err());
        let g = line(64, 3.0);
        assert_eq!(g.spacing() * 64.0, 6.0);
    }

    #[test]
    fn constant_norms() {
        let g = line(64, 1.0);
        let one = GridFunction::constant(g, Complex64::new(1.0, 0.0));
        assert!((lp_norm(&one, 2.0).unwrap() - 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(lp_norm(&GridFunction::zeros(g), 3.0).unwrap(), 0.0);
        let half = GridFunction::from_real_fn(g, |x| if x[0] < 0.0 { 1.0 } else { 0.0 }).unwrap();
        assert!((lp_norm(&half, 1.0).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn non_finite_rejected() {
        let g = line(8, 1.0);
        let mut v = vec![Complex64::new(0.0, 0.0); 8];
        v[3] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(GridFunction::new(g, v), Err(Error::RejectedInput(_))));
    }

    #[test]
    fn weighted_norm_reductions() {
        let g = line(32, 2.0);
        let f = GridFunction::from_real_fn(g, |x| (x[0] * 1.3).sin() + 0.2).unwrap();
        let one = Weight::constant(g, 1.0).unwrap();
        for p in [1.0, 1.5, 2.0, 4.0] {
            let a = weighted_lp_norm(&f, &one, p).unwrap();
            let b = lp_norm(&f, p).unwrap();
            assert!((a - b).abs() < 1e-13 * b);
        }
        let w = Weight::from_fn(g, |x| 1.0 + x[0] * x[0]).unwrap();
        let ones = GridFunction::constant(g, Complex64::new(1.0, 0.0));
        assert!((weighted_lp_norm(&ones, &w, 1.0).unwrap() - w.total_mass()).abs() < 1e-12);
        let q = GridFunction::from_real_fn(g, |x| if x[0] < -1.0 { 1.0 } else { 0.0 }).unwrap();
        let wq = Weight::from_fn(g, |x| if x[0] > 1.0 { 1.0 } else { 0.0 }).unwrap();
        assert_eq!(weighted_lp_norm(&q, &wq, 2.0).unwrap(), 0.0);
        let other = line(64, 2.0);
        let w2 = Weight::constant(other, 1.0).unwrap();
        assert!(matches!(weighted_lp_norm(&f, &w2, 2.0), Err(Error::Dimension(_))));
    }

    #[test]
    fn superlevel_examples() {
        let g = line(64, 1.0);
        let one = Weight::constant(g, 1.0).unwrap();
        let f = GridFunction::constant(g, Complex64::new(1.0, 0.0));
        assert!((weighted_superlevel_measure(&f, &one, 0.5).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(weighted_superlevel_measure(&f, &one, 1.5).unwrap(), 0.0);
        assert!(weighted_superlevel_measure(&f, &one, 0.0).is_err());

        // indicator of [0,1) on R = 2: count the samples directly
        let g2 = line(64, 2.0);
        let ind = GridFunction::from_real_fn(g2, |x| if (0.0..1.0).contains(&x[0]) { 1.0 } else { 0.0 })
            .unwrap();
        let count = (0..64).filter(|&i| (0.0..1.0).contains(&g2.coordinate(i))).count();
        let expected = count as f64 * g2.spacing();
        assert!((expected - 1.0).abs() < 1e-14);
        let w = Weight::constant(g2, 1.0).unwrap();
        assert!((weighted_superlevel_measure(&ind, &w, 0.5).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn weight_validation() {
        let g = line(8, 1.0);
        assert!(Weight::new(g, vec![0.0; 8]).is_err());
        assert!(Weight::new(g, vec![-1.0; 8]).is_err());
        let mut v = vec![0.0; 8];
        v[2] = 1.0;
        let w = Weight::new(g, v).unwrap();
        assert!(matches!(w.powf(-1.0), Err(Error::SingularWeight(_))));
    }

    #[test]
    fn torus_metric_wraps() {
        let g = line(16, 1.0);
        assert_eq!(g.axis_offset(0, 15), 1);
        assert_eq!(g.axis_offset(3, 11), 8);
        let g2 = Grid::new(2, 8, 1.0).unwrap();
        let a = g2.flat_index([0, 0]);
        let b = g2.flat_index([7, 6]);
        assert_eq!(g2.torus_offset2(a, b), 1 + 4);
    }

    proptest! {
        #[test]
        fn homogeneity(c in -5.0f64..5.0, p in 1.0f64..6.0, seed in 0u64..1000) {
            let g = line(32, 1.5);
            let f = GridFunction::from_real_fn(g, |x| ((seed as f64 + 1.0) * x[0]).sin() + 0.1).unwrap();
            let a = lp_norm(&f.scale(Complex64::new(c, 0.0)), p).unwrap();
            let b = c.abs() * lp_norm(&f, p).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b));
        }

        #[test]
        fn superlevel_monotone(l1 in 0.01f64..2.0, dl in 0.0f64..2.0, seed in 0u64..1000) {
            let g = line(32, 1.0);
            let f = GridFunction::from_real_fn(g, |x| ((seed as f64) * 0.37 + 3.0 * x[0]).cos() * 2.0).unwrap();
            let w = Weight::from_fn(g, |x| 1.0 + 0.5 * (x[0] * 2.0).sin()).unwrap();
            let a = weighted_superlevel_measure(&f, &w, l1).unwrap();
            let b = weighted_superlevel_measure(&f, &w, l1 + dl).unwrap();
            prop_assert!(a >= b);
        }

        #[test]
        fn holder_consistency(p in 1.0f64..8.0, r in 0.5f64..4.0, seed in 0u64..100) {
            let g = line(64, r);
            let f = GridFunction::from_real_fn(g, |x| (x[0] * (seed as f64 + 0.5)).sin().abs() + (x[0] / r).powi(3)).unwrap();
            let lhs = lp_norm(&f, 1.0).unwrap();
            let rhs = (2.0 * r).powf(1.0 - 1.0 / p) * lp_norm(&f, p).unwrap();
            prop_assert!(lhs <= rhs * (1.0 + 1e-12));
        }
    }
}

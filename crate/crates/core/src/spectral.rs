//! Non-negative self-adjoint operators with an explicit diagonalization, and
//! the functional calculus `F(sqrt(L))` built on it.
//!
//! Two models are bundled:
//!
//! * [`LaplacianTorus`]: `-Delta` on the periodic grid, diagonal in the
//!   discrete Fourier basis with `sqrt(lambda) = |xi|`, `xi_k = pi k / R`.
//! * [`HermiteOscillator1D`]: `-d^2/dx^2 + x^2` on the line, truncated to the
//!   first `K` Hermite functions sampled on the grid, `lambda_k = 2k + 1`.
//!
//! Every operation goes through [`SpectralOperator::project`] and
//! [`SpectralOperator::synthesize`], so any bounded profile `F` can be applied
//! by multiplying coefficients by `F(sqrt(lambda))`.

use std::fmt::Debug;
use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{signed_index, GridFft};
use crate::grid::{compensated_sum, Grid, GridFunction};
use crate::multipliers::MultiplierProfile;
use crate::quad::Rule;

/// Largest fraction of `||f||^2` a truncated eigenbasis may leave unresolved.
pub const RESOLUTION_TOLERANCE: f64 = 1e-8;

/// Default memory budget for dense kernel matrices.
pub const DEFAULT_KERNEL_BUDGET_MB: usize = 512;

/// Orthonormality tolerance for sampled Hermite functions.
pub const HERMITE_ORTHONORMALITY_TOLERANCE: f64 = 1e-8;

/// Step of the trapezoidal subordination rule in `v = ln u`.
pub const SUBORDINATION_STEP: f64 = 0.25;
/// Largest accepted disagreement between the subordination rule and the same
/// rule at twice the step, over the operator's spectrum.
pub const SUBORDINATION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    Laplacian,
    Hermite,
}

impl std::fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OperatorKind::Laplacian => write!(f, "laplacian"),
            OperatorKind::Hermite => write!(f, "hermite"),
        }
    }
}

impl std::str::FromStr for OperatorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "laplacian" => Ok(OperatorKind::Laplacian),
            "hermite" => Ok(OperatorKind::Hermite),
            other => Err(Error::Parameter(format!("unknown operator {other:?}"))),
        }
    }
}

/// A non-negative self-adjoint operator exposed through its eigenbasis.
pub trait SpectralOperator: Send + Sync + Debug {
    fn grid(&self) -> &Grid;

    fn kind(&self) -> OperatorKind;

    /// `sqrt(lambda)` for each coefficient slot.
    fn frequencies(&self) -> &[f64];

    /// Eigenbasis coefficients of `f`, without any resolution check.
    fn project(&self, f: &GridFunction) -> Result<Vec<Complex64>>;

    /// Fraction of `||f||_2^2` missed by `coeffs` (zero for complete bases).
    fn unresolved_fraction(&self, _f: &GridFunction, _coeffs: &[Complex64]) -> f64 {
        0.0
    }

    fn synthesize(&self, coeffs: &[Complex64]) -> GridFunction;

    /// Gradient (one component per axis) of `synthesize(coeffs)`.
    fn synthesize_gradient(&self, coeffs: &[Complex64]) -> Vec<GridFunction>;

    /// Whether the heat kernel satisfies the pointwise gradient bound, i.e.
    /// whether vertical square functions are meaningful for this model.
    fn gradient_bound_available(&self) -> bool;
}

fn check_grid(op: &dyn SpectralOperator, f: &GridFunction) -> Result<()> {
    if op.grid() != f.grid() {
        return Err(Error::Dimension("function does not live on the operator's grid".into()));
    }
    Ok(())
}

/// Coefficients of `f`, failing if the eigenbasis misses more than
/// [`RESOLUTION_TOLERANCE`] of its energy.
pub fn analyze(op: &dyn SpectralOperator, f: &GridFunction) -> Result<Vec<Complex64>> {
    let coeffs = op.project(f)?;
    let miss = op.unresolved_fraction(f, &coeffs);
    if miss > RESOLUTION_TOLERANCE {
        return Err(Error::Resolution(format!(
            "{:.3e} of the input energy lies outside the retained eigenbasis",
            miss
        )));
    }
    Ok(coeffs)
}

/// Evaluates `symbol` on the spectrum, rejecting non-finite values.
pub fn symbol_values(op: &dyn SpectralOperator, symbol: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
    op.frequencies()
        .iter()
        .map(|&s| {
            let v = symbol(s);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Evaluation(format!("profile is not finite at spectral point {s}")))
            }
        })
        .collect()
}

fn multiply(coeffs: &[Complex64], mult: &[f64]) -> Vec<Complex64> {
    coeffs.iter().zip(mult).map(|(c, m)| c * m).collect()
}

/// `F(sqrt(L))` applied to already computed coefficients.
pub fn synthesize_with(op: &dyn SpectralOperator, coeffs: &[Complex64], symbol: impl Fn(f64) -> f64) -> Result<GridFunction> {
    let mult = symbol_values(op, symbol)?;
    Ok(op.synthesize(&multiply(coeffs, &mult)))
}

/// `nabla F(sqrt(L))` applied to already computed coefficients.
pub fn synthesize_gradient_with(
    op: &dyn SpectralOperator,
    coeffs: &[Complex64],
    symbol: impl Fn(f64) -> f64,
) -> Result<Vec<GridFunction>> {
    let mult = symbol_values(op, symbol)?;
    Ok(op.synthesize_gradient(&multiply(coeffs, &mult)))
}

/// `F(sqrt(L)) f`.
pub fn apply_function(op: &dyn SpectralOperator, profile: &MultiplierProfile, f: &GridFunction) -> Result<GridFunction> {
    check_grid(op, f)?;
    let coeffs = analyze(op, f)?;
    synthesize_with(op, &coeffs, |s| profile.eval(s))
}

fn check_time(t: f64) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Parameter(format!("time parameter must be positive, got {t}")));
    }
    Ok(())
}

/// `e^{-tL} f`.
pub fn heat_semigroup(op: &dyn SpectralOperator, t: f64, f: &GridFunction) -> Result<GridFunction> {
    check_time(t)?;
    apply_function(op, &MultiplierProfile::heat(t), f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PoissonMethod {
    /// Multiply by `e^{-ts}`.
    Multiplier,
    /// `pi^{-1/2} int_0^inf e^{-u} u^{-1/2} e^{-(t^2/4u) L} du`, discretized by
    /// the trapezoidal rule in `v = ln u` on `[-75, 4.5]`.
    Subordination,
}

/// Nodes `u_i` and weights (including `pi^{-1/2}`) of the subordination rule.
fn subordination_rule(step: f64) -> Rule {
    let count = ((4.5 + 75.0) / step).round() as usize + 1;
    let mut nodes = Vec::with_capacity(count);
    let mut weights = Vec::with_capacity(count);
    let norm = step / std::f64::consts::PI.sqrt();
    for i in 0..count {
        let u = (-75.0 + i as f64 * step).exp();
        nodes.push(u);
        weights.push(norm * (-u).exp() * u.sqrt());
    }
    Rule { nodes, weights }
}

fn cached_rule(coarse: bool) -> &'static Rule {
    static FINE: OnceLock<Rule> = OnceLock::new();
    static COARSE: OnceLock<Rule> = OnceLock::new();
    if coarse {
        COARSE.get_or_init(|| subordination_rule(2.0 * SUBORDINATION_STEP))
    } else {
        FINE.get_or_init(|| subordination_rule(SUBORDINATION_STEP))
    }
}

fn subordinated_symbol(rule: &Rule, t: f64, s: f64) -> f64 {
    let a = t * t * s * s / 4.0;
    compensated_sum(rule.nodes.iter().zip(&rule.weights).map(|(&u, &w)| w * (-a / u).exp()))
}

/// Largest disagreement between the subordination rule and its double-step
/// companion over the operator's spectrum.
pub fn subordination_error_estimate(op: &dyn SpectralOperator, t: f64) -> f64 {
    let (fine, coarse) = (cached_rule(false), cached_rule(true));
    op.frequencies()
        .iter()
        .map(|&s| (subordinated_symbol(fine, t, s) - subordinated_symbol(coarse, t, s)).abs())
        .fold(0.0, f64::max)
}

/// `e^{-t sqrt(L)} f`.
pub fn poisson_semigroup(op: &dyn SpectralOperator, t: f64, f: &GridFunction, method: PoissonMethod) -> Result<GridFunction> {
    check_time(t)?;
    match method {
        PoissonMethod::Multiplier => apply_function(op, &MultiplierProfile::poisson(t), f),
        PoissonMethod::Subordination => {
            let est = subordination_error_estimate(op, t);
            if est > SUBORDINATION_TOLERANCE {
                return Err(Error::Accuracy(format!(
                    "subordination quadrature error estimate {est:.3e} at t = {t}"
                )));
            }
            check_grid(op, f)?;
            let coeffs = analyze(op, f)?;
            let rule = cached_rule(false);
            let mut acc = vec![Complex64::new(0.0, 0.0); f.grid().len()];
            for (&u, &w) in rule.nodes.iter().zip(&rule.weights) {
                if w < 1e-300 {
                    continue;
                }
                let tau = t * t / (4.0 * u);
                let slice = synthesize_with(op, &coeffs, |s| (-tau * s * s).exp())?;
                for (a, v) in acc.iter_mut().zip(slice.values()) {
                    *a += v * w;
                }
            }
            GridFunction::new(*f.grid(), acc)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Flow {
    /// `e^{-t^2 L}`
    Heat,
    /// `e^{-t sqrt(L)}`
    Poisson,
}

/// `nabla (flow_t f)`, one component per axis.
pub fn grad_semigroup(op: &dyn SpectralOperator, t: f64, f: &GridFunction, flow: Flow) -> Result<Vec<GridFunction>> {
    check_time(t)?;
    check_grid(op, f)?;
    let coeffs = analyze(op, f)?;
    match flow {
        Flow::Heat => synthesize_gradient_with(op, &coeffs, |s| (-t * t * s * s).exp()),
        Flow::Poisson => synthesize_gradient_with(op, &coeffs, |s| (-t * s).exp()),
    }
}

/// `cos(t sqrt(L)) f`; `t = 0` returns `f`.
pub fn wave_cosine(op: &dyn SpectralOperator, t: f64, f: &GridFunction) -> Result<GridFunction> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Parameter(format!("wave time must be non-negative, got {t}")));
    }
    apply_function(op, &MultiplierProfile::wave(t), f)
}

/// Dense kernel `K(x, y)` of an operator expression on the grid, such that
/// `(Tf)(x) = sum_y K(x, y) f(y) h^dim`.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    grid: Grid,
    size: usize,
    entries: Vec<f64>,
    generator_tag: String,
}

impl KernelMatrix {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn generator_tag(&self) -> &str {
        &self.generator_tag
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.entries[x * self.size + y]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn asymmetry(&self) -> f64 {
        let m = self.size;
        let mut worst = 0.0_f64;
        for x in 0..m {
            for y in x + 1..m {
                worst = worst.max((self.get(x, y) - self.get(y, x)).abs());
            }
        }
        worst
    }

    /// `sum_y K(x, y) f(y) h^dim`.
    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        if *f.grid() != self.grid {
            return Err(Error::Dimension("kernel and function grids differ".into()));
        }
        let hd = self.grid.cell_measure();
        let values = (0..self.size)
            .into_par_iter()
            .map(|x| {
                let row = &self.entries[x * self.size..(x + 1) * self.size];
                let re = compensated_sum(row.iter().zip(f.values()).map(|(k, v)| k * v.re));
                let im = compensated_sum(row.iter().zip(f.values()).map(|(k, v)| k * v.im));
                Complex64::new(re, im) * hd
            })
            .collect();
        GridFunction::new(self.grid, values)
    }
}

fn assemble(
    op: &dyn SpectralOperator,
    tag: String,
    budget_mb: usize,
    column: impl Fn(&[Complex64]) -> Result<GridFunction> + Sync,
) -> Result<KernelMatrix> {
    let grid = *op.grid();
    let m = grid.len();
    let bytes = (m as u128) * (m as u128) * 8;
    if bytes > (budget_mb as u128) << 20 {
        return Err(Error::Resource(format!(
            "kernel matrix needs {} MiB, budget is {budget_mb} MiB",
            bytes >> 20
        )));
    }
    let columns: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|y| {
            let delta = GridFunction::delta(grid, y);
            let coeffs = op.project(&delta)?;
            Ok(column(&coeffs)?.re())
        })
        .collect::<Result<_>>()?;
    let mut entries = vec![0.0; m * m];
    for (y, col) in columns.iter().enumerate() {
        for (x, v) in col.iter().enumerate() {
            entries[x * m + y] = *v;
        }
    }
    Ok(KernelMatrix { grid, size: m, entries, generator_tag: tag })
}

/// Kernel of `F(sqrt(L))`: column `y` is `F(sqrt(L))` applied to the unit
/// delta at `y`.
pub fn kernel_matrix(op: &dyn SpectralOperator, profile: &MultiplierProfile, budget_mb: usize) -> Result<KernelMatrix> {
    let mult = symbol_values(op, |s| profile.eval(s))?;
    assemble(op, format!("{}({})", profile.tag(), op.kind()), budget_mb, |c| {
        Ok(op.synthesize(&multiply(c, &mult)))
    })
}

/// Kernel of `d/dx_axis F(sqrt(L))`, differentiated in the first variable.
pub fn gradient_kernel_matrix(
    op: &dyn SpectralOperator,
    profile: &MultiplierProfile,
    axis: usize,
    budget_mb: usize,
) -> Result<KernelMatrix> {
    if axis >= op.grid().dim() {
        return Err(Error::Parameter(format!("axis {axis} out of range")));
    }
    let mult = symbol_values(op, |s| profile.eval(s))?;
    assemble(op, format!("grad{axis} {}({})", profile.tag(), op.kind()), budget_mb, |c| {
        Ok(op.synthesize_gradient(&multiply(c, &mult)).swap_remove(axis))
    })
}

/// `-Delta` on the periodic grid.
#[derive(Debug, Clone)]
pub struct LaplacianTorus {
    grid: Grid,
    fft: GridFft,
    freqs: Vec<f64>,
    /// Per-slot wave vector used for derivatives (Nyquist component zeroed).
    wavevec: Vec<[f64; 2]>,
}

impl LaplacianTorus {
    pub fn new(grid: Grid) -> Self {
        let n = grid.n();
        let base = std::f64::consts::PI / grid.half_width();
        let mut freqs = Vec::with_capacity(grid.len());
        let mut wavevec = Vec::with_capacity(grid.len());
        for slot in 0..grid.len() {
            let m = grid.multi_index(slot);
            let mut mag2 = 0.0;
            let mut dv = [0.0; 2];
            for (axis, d) in dv.iter_mut().enumerate().take(grid.dim()) {
                let k = signed_index(m[axis], n);
                let xi = base * k as f64;
                mag2 += xi * xi;
                *d = if m[axis] == n / 2 { 0.0 } else { xi };
            }
            freqs.push(mag2.sqrt());
            wavevec.push(dv);
        }
        Self { grid, fft: GridFft::new(grid), freqs, wavevec }
    }
}

impl SpectralOperator for LaplacianTorus {
    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn kind(&self) -> OperatorKind {
        OperatorKind::Laplacian
    }

    fn frequencies(&self) -> &[f64] {
        &self.freqs
    }

    fn project(&self, f: &GridFunction) -> Result<Vec<Complex64>> {
        check_grid(self, f)?;
        Ok(self.fft.forward(f.values()))
    }

    fn synthesize(&self, coeffs: &[Complex64]) -> GridFunction {
        GridFunction::from_parts_unchecked(self.grid, self.fft.inverse(coeffs))
    }

    fn synthesize_gradient(&self, coeffs: &[Complex64]) -> Vec<GridFunction> {
        (0..self.grid.dim())
            .map(|axis| {
                let spec: Vec<Complex64> = coeffs
                    .iter()
                    .zip(&self.wavevec)
                    .map(|(c, k)| c * Complex64::new(0.0, k[axis]))
                    .collect();
                self.synthesize(&spec)
            })
            .collect()
    }

    fn gradient_bound_available(&self) -> bool {
        true
    }
}

/// The harmonic oscillator `-d^2/dx^2 + x^2` truncated to `K` eigenpairs.
#[derive(Debug, Clone)]
pub struct HermiteOscillator1D {
    grid: Grid,
    truncation: usize,
    freqs: Vec<f64>,
    /// `h_0 .. h_K` sampled on the grid (one extra for derivatives).
    basis: Vec<Vec<f64>>,
}

pub const DEFAULT_HERMITE_K: usize = 128;

/// Samples of the Hermite functions `h_0 .. h_{count-1}` at `x`.
pub fn hermite_functions(x: f64, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let h0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
    out.push(h0);
    if count > 1 {
        out.push(std::f64::consts::SQRT_2 * x * h0);
    }
    for k in 1..count.saturating_sub(1) {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
        out.push(next);
    }
    out.truncate(count);
    out
}

impl HermiteOscillator1D {
    pub fn new(grid: Grid, truncation: usize) -> Result<Self> {
        if grid.dim() != 1 {
            return Err(Error::Parameter("the Hermite model is one-dimensional".into()));
        }
        if truncation == 0 {
            return Err(Error::Parameter("Hermite truncation must be positive".into()));
        }
        let count = truncation + 1;
        let samples: Vec<Vec<f64>> = (0..grid.n()).map(|i| hermite_functions(grid.coordinate(i), count)).collect();
        let basis: Vec<Vec<f64>> = (0..count).map(|k| samples.iter().map(|s| s[k]).collect()).collect();
        let h = grid.spacing();
        let worst = (0..truncation)
            .into_par_iter()
            .map(|a| {
                (0..=a)
                    .map(|b| {
                        let g = h * compensated_sum(basis[a].iter().zip(&basis[b]).map(|(x, y)| x * y));
                        let target = if a == b { 1.0 } else { 0.0 };
                        (g - target).abs()
                    })
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max);
        if worst > HERMITE_ORTHONORMALITY_TOLERANCE {
            return Err(Error::Resolution(format!(
                "sampled Hermite functions deviate from orthonormality by {worst:.2e}; \
                 refine the grid or widen the domain"
            )));
        }
        let freqs = (0..truncation).map(|k| ((2 * k + 1) as f64).sqrt()).collect();
        Ok(Self { grid, truncation, freqs, basis })
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        (0..self.truncation).map(|k| (2 * k + 1) as f64).collect()
    }

    /// Sampled eigenfunction `h_k`, `k <= K`.
    pub fn eigenfunction(&self, k: usize) -> GridFunction {
        GridFunction::from_parts_unchecked(
            self.grid,
            self.basis[k].iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    fn combine(&self, coeffs: &[Complex64]) -> GridFunction {
        let mut values = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        for (c, h) in coeffs.iter().zip(&self.basis) {
            if c.re == 0.0 && c.im == 0.0 {
                continue;
            }
            for (v, b) in values.iter_mut().zip(h) {
                *v += c * b;
            }
        }
        GridFunction::from_parts_unchecked(self.grid, values)
    }
}

impl SpectralOperator for HermiteOscillator1D {
    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn kind(&self) -> OperatorKind {
        OperatorKind::Hermite
    }

    fn frequencies(&self) -> &[f64] {
        &self.freqs
    }

    fn project(&self, f: &GridFunction) -> Result<Vec<Complex64>> {
        check_grid(self, f)?;
        let h = self.grid.spacing();
        Ok(self.basis[..self.truncation]
            .iter()
            .map(|b| {
                let re = compensated_sum(b.iter().zip(f.values()).map(|(x, v)| x * v.re));
                let im = compensated_sum(b.iter().zip(f.values()).map(|(x, v)| x * v.im));
                Complex64::new(re, im) * h
            })
            .collect())
    }

    fn unresolved_fraction(&self, f: &GridFunction, coeffs: &[Complex64]) -> f64 {
        let total = compensated_sum(f.values().iter().map(|v| v.norm_sqr())) * self.grid.spacing();
        if total == 0.0 {
            return 0.0;
        }
        let kept = compensated_sum(coeffs.iter().map(|c| c.norm_sqr()));
        ((total - kept) / total).max(0.0)
    }

    fn synthesize(&self, coeffs: &[Complex64]) -> GridFunction {
        self.combine(coeffs)
    }

    fn synthesize_gradient(&self, coeffs: &[Complex64]) -> Vec<GridFunction> {
        // h_k' = sqrt(k/2) h_{k-1} - sqrt((k+1)/2) h_{k+1}
        let k = self.truncation;
        let mut d = vec![Complex64::new(0.0, 0.0); k + 1];
        for (j, c) in coeffs.iter().enumerate().take(k) {
            let jf = j as f64;
            if j > 0 {
                d[j - 1] += c * (jf / 2.0).sqrt();
            }
            d[j + 1] -= c * ((jf + 1.0) / 2.0).sqrt();
        }
        vec![self.combine(&d)]
    }

    fn gradient_bound_available(&self) -> bool {
        true
    }
}

/// Builds one of the bundled operators.
pub fn build_operator(kind: OperatorKind, grid: Grid, hermite_k: usize) -> Result<Box<dyn SpectralOperator>> {
    Ok(match kind {
        OperatorKind::Laplacian => Box::new(LaplacianTorus::new(grid)),
        OperatorKind::Hermite => Box::new(HermiteOscillator1D::new(grid, hermite_k)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::lp_norm;
    use std::f64::consts::PI;

    fn lap1(n: usize, r: f64) -> LaplacianTorus {
        LaplacianTorus::new(Grid::new(1, n, r).unwrap())
    }

    fn hermite() -> HermiteOscillator1D {
        HermiteOscillator1D::new(Grid::new(1, 512, 20.0).unwrap(), 128).unwrap()
    }

    fn max_diff(a: &GridFunction, b: &GridFunction) -> f64 {
        a.values().iter().zip(b.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    fn bump(g: Grid, x0: f64, sigma: f64) -> GridFunction {
        GridFunction::from_real_fn(g, |x| (-(x[0] - x0).powi(2) / (2.0 * sigma * sigma)).exp()).unwrap()
    }

    #[test]
    fn identity_profile() {
        let op = lap1(64, 2.0);
        let f = bump(*op.grid(), 0.3, 0.2);
        let g = apply_function(&op, &MultiplierProfile::identity(), &f).unwrap();
        assert!(max_diff(&f, &g) < 1e-14);
    }

    #[test]
    fn laplacian_eigenfunction() {
        let r = 2.0;
        let op = lap1(64, r);
        let f = GridFunction::from_real_fn(*op.grid(), |x| (PI * x[0] / r).sin()).unwrap();
        let sq = MultiplierProfile::custom("s^2", crate::multipliers::DecayClass::Bounded, |s| s * s);
        let g = apply_function(&op, &sq, &f).unwrap();
        let want = f.scale(Complex64::new((PI / r).powi(2), 0.0));
        assert!(max_diff(&g, &want) < 1e-12);
    }

    #[test]
    fn hermite_basis_is_orthonormal_and_coarse_grids_fail() {
        let op = hermite();
        assert_eq!(op.eigenvalues()[0], 1.0);
        assert!(op.eigenvalues().windows(2).all(|w| w[1] > w[0]));
        assert!(matches!(
            HermiteOscillator1D::new(Grid::new(1, 128, 20.0).unwrap(), 128),
            Err(Error::Resolution(_))
        ));
    }

    #[test]
    fn hermite_heat_on_ground_state() {
        let op = hermite();
        let h0 = op.eigenfunction(0);
        let g = heat_semigroup(&op, 1.0, &h0).unwrap();
        assert!(max_diff(&g, &h0.scale(Complex64::new((-1.0f64).exp(), 0.0))) < 1e-12);
        let g = apply_function(&op, &MultiplierProfile::heat(1.0), &h0).unwrap();
        assert!(max_diff(&g, &h0.scale(Complex64::new((-1.0f64).exp(), 0.0))) < 1e-12);
        let p = poisson_semigroup(&op, 1.0, &h0, PoissonMethod::Multiplier).unwrap();
        assert!(max_diff(&p, &h0.scale(Complex64::new((-1.0f64).exp(), 0.0))) < 1e-12);
    }

    #[test]
    fn hermite_rejects_unresolved_input() {
        let op = hermite();
        let spike = GridFunction::delta(*op.grid(), 256);
        assert!(matches!(apply_function(&op, &MultiplierProfile::identity(), &spike), Err(Error::Resolution(_))));
    }

    #[test]
    fn heat_matches_periodized_gaussian_convolution() {
        let r = PI;
        let op = lap1(256, r);
        let g = *op.grid();
        let sigma = 0.15;
        let f = bump(g, 0.4, sigma);
        let t = 0.01;
        let got = heat_semigroup(&op, t, &f).unwrap();
        // oracle: direct periodic convolution with the closed-form heat kernel
        let kernel = |d: f64| {
            (-3..=3)
                .map(|m| {
                    let z = d + 2.0 * r * m as f64;
                    (-z * z / (4.0 * t)).exp() / (4.0 * PI * t).sqrt()
                })
                .sum::<f64>()
        };
        let h = g.spacing();
        let fv = f.re();
        for x in (0..256).step_by(7) {
            let want: f64 = (0..256).map(|y| kernel(g.coordinate(x) - g.coordinate(y)) * fv[y] * h).sum();
            assert!((got.values()[x].re - want).abs() < 1e-10, "x = {x}");
        }
    }

    #[test]
    fn heat_strong_continuity_and_semigroup_law() {
        let op = lap1(128, 2.0);
        let f = bump(*op.grid(), 0.0, 0.1);
        let mut prev = f64::INFINITY;
        for t in [1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 1e-4] {
            let e = lp_norm(&heat_semigroup(&op, t, &f).unwrap().sub(&f).unwrap(), 2.0).unwrap();
            assert!(e < prev);
            prev = e;
        }
        let a = heat_semigroup(&op, 0.02, &heat_semigroup(&op, 0.03, &f).unwrap()).unwrap();
        let b = heat_semigroup(&op, 0.05, &f).unwrap();
        assert!(max_diff(&a, &b) < 1e-12);
        assert!(heat_semigroup(&op, 0.0, &f).is_err());
        assert!(heat_semigroup(&op, -1.0, &f).is_err());
    }

    #[test]
    fn poisson_methods_agree() {
        for op in [Box::new(lap1(256, PI)) as Box<dyn SpectralOperator>, Box::new(hermite())] {
            let g = *op.grid();
            let f = bump(g, 0.5, 0.4);
            for t in [0.05, 0.3, 1.0, 2.0] {
                let a = poisson_semigroup(op.as_ref(), t, &f, PoissonMethod::Multiplier).unwrap();
                let b = poisson_semigroup(op.as_ref(), t, &f, PoissonMethod::Subordination).unwrap();
                let rel = lp_norm(&a.sub(&b).unwrap(), 2.0).unwrap() / lp_norm(&a, 2.0).unwrap();
                assert!(rel < 1e-6, "{:?} t = {t}: {rel:e}", op.kind());
            }
            // semigroup law
            let a = poisson_semigroup(op.as_ref(), 0.2, &poisson_semigroup(op.as_ref(), 0.3, &f, PoissonMethod::Multiplier).unwrap(), PoissonMethod::Multiplier).unwrap();
            let b = poisson_semigroup(op.as_ref(), 0.5, &f, PoissonMethod::Multiplier).unwrap();
            assert!(max_diff(&a, &b) < 1e-8);
        }
    }

    #[test]
    fn gradients() {
        let r = PI;
        let op = lap1(128, r);
        let g = *op.grid();
        let k = 3.0;
        let f = GridFunction::from_real_fn(g, |x| (k * x[0]).sin()).unwrap();
        let t = 0.4;
        let d = grad_semigroup(&op, t, &f, Flow::Heat).unwrap();
        let want = GridFunction::from_real_fn(g, |x| k * (-t * t * k * k).exp() * (k * x[0]).cos()).unwrap();
        assert!(max_diff(&d[0], &want) < 1e-12);
        let c = GridFunction::constant(g, Complex64::new(2.5, 0.0));
        for flow in [Flow::Heat, Flow::Poisson] {
            assert!(grad_semigroup(&op, t, &c, flow).unwrap()[0].max_abs() < 1e-13);
        }
        assert!(grad_semigroup(&op, 0.0, &f, Flow::Heat).is_err());

        // Hermite: d/dx e^{-L} h0 = e^{-1} h0' = -e^{-1} sqrt(1/2) h1
        let op = hermite();
        let d = grad_semigroup(&op, 1.0, &op.eigenfunction(0), Flow::Heat).unwrap();
        let want = op.eigenfunction(1).scale(Complex64::new(-(-1.0f64).exp() * 0.5f64.sqrt(), 0.0));
        assert!(max_diff(&d[0], &want) < 1e-12);
        // recurrence oracle against a centered difference of the sampled h0
        let h = op.grid().spacing();
        let h0 = op.eigenfunction(0).re();
        let fd: Vec<f64> = (1..511).map(|i| (h0[i + 1] - h0[i - 1]) / (2.0 * h)).collect();
        let exact = op.eigenfunction(1).scale(Complex64::new(-(0.5f64).sqrt(), 0.0)).re();
        for i in 1..511 {
            assert!((fd[i - 1] - exact[i]).abs() < 2e-3);
        }
    }

    #[test]
    fn wave_examples() {
        let op = lap1(128, PI);
        let g = *op.grid();
        let f = bump(g, 0.0, 0.2);
        assert!(max_diff(&wave_cosine(&op, 0.0, &f).unwrap(), &f) < 1e-14);
        let k = 5.0;
        let e = GridFunction::from_fn(g, |x| Complex64::new(0.0, k * x[0]).exp()).unwrap();
        let t = 0.7;
        let w = wave_cosine(&op, t, &e).unwrap();
        assert!(max_diff(&w, &e.scale(Complex64::new((t * k).cos(), 0.0))) < 1e-12);
        for t in [0.1, 0.5, 1.3] {
            assert!(lp_norm(&wave_cosine(&op, t, &f).unwrap(), 2.0).unwrap() <= lp_norm(&f, 2.0).unwrap() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn kernel_matrix_identity_and_budget() {
        let op = lap1(32, 1.0);
        let k = kernel_matrix(&op, &MultiplierProfile::identity(), 64).unwrap();
        let h = op.grid().spacing();
        for x in 0..32 {
            for y in 0..32 {
                let want = if x == y { 1.0 / h } else { 0.0 };
                assert!((k.get(x, y) - want).abs() < 1e-10);
            }
        }
        let big = lap1(1 << 13, 1.0);
        assert!(matches!(kernel_matrix(&big, &MultiplierProfile::identity(), 1), Err(Error::Resource(_))));
    }

    #[test]
    fn kernel_matrix_reproduces_action() {
        let op = lap1(64, 2.0);
        let p = MultiplierProfile::heat(0.05);
        let k = kernel_matrix(&op, &p, 64).unwrap();
        assert!(k.asymmetry() < 1e-12);
        let f = bump(*op.grid(), 0.3, 0.3);
        let a = k.apply(&f).unwrap();
        let b = apply_function(&op, &p, &f).unwrap();
        assert!(max_diff(&a, &b) < 1e-8);
    }

    #[test]
    fn laplacian_heat_kernel_is_periodized_gaussian() {
        let r = PI;
        let op = lap1(128, r);
        let t = 0.05;
        let k = kernel_matrix(&op, &MultiplierProfile::heat(t), 64).unwrap();
        let g = *op.grid();
        for x in (0..128).step_by(5) {
            for y in (0..128).step_by(3) {
                let d = g.coordinate(x) - g.coordinate(y);
                let want: f64 = (-3..=3)
                    .map(|m| {
                        let z = d + 2.0 * r * m as f64;
                        (-z * z / (4.0 * t)).exp() / (4.0 * PI * t).sqrt()
                    })
                    .sum();
                assert!((k.get(x, y) - want).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn hermite_heat_kernel_is_mehler() {
        let op = hermite();
        let g = *op.grid();
        for t in [0.05, 0.2, 1.0] {
            let k = kernel_matrix(&op, &MultiplierProfile::heat(t), 64).unwrap();
            let rho = (-2.0 * t).exp();
            let mehler = |x: f64, y: f64| {
                (-t).exp() / (PI * (1.0 - rho * rho)).sqrt()
                    * (-((1.0 + rho * rho) * (x * x + y * y) - 4.0 * rho * x * y) / (2.0 * (1.0 - rho * rho))).exp()
            };
            let mut worst = 0.0_f64;
            for x in (100..412).step_by(3) {
                for y in (100..412).step_by(5) {
                    worst = worst.max((k.get(x, y) - mehler(g.coordinate(x), g.coordinate(y))).abs());
                }
            }
            assert!(worst < 1e-6, "t = {t}: {worst:e}");
        }
    }

    #[test]
    fn self_adjoint_and_commuting() {
        let ops: Vec<Box<dyn SpectralOperator>> = vec![
            Box::new(lap1(128, 2.0)),
            Box::new(LaplacianTorus::new(Grid::new(2, 16, 1.0).unwrap())),
            Box::new(hermite()),
        ];
        for op in &ops {
            let g = *op.grid();
            let f = GridFunction::from_real_fn(g, |x| (-(x[0] - 0.2).powi(2) * 3.0 - x[1] * x[1]).exp() * (1.0 + x[0])).unwrap();
            let h = GridFunction::from_real_fn(g, |x| (-(x[0] + 0.3).powi(2) * 2.0).exp() * (2.0 * x[0] + x[1]).cos()).unwrap();
            let a = MultiplierProfile::heat(0.03);
            let b = MultiplierProfile::poisson(0.2);
            let l = apply_function(op.as_ref(), &a, &f).unwrap().inner(&h).unwrap();
            let r = f.inner(&apply_function(op.as_ref(), &a, &h).unwrap()).unwrap();
            assert!((l - r).norm() < 1e-10);
            let ab = apply_function(op.as_ref(), &a, &apply_function(op.as_ref(), &b, &f).unwrap()).unwrap();
            let prod = apply_function(op.as_ref(), &a.times(&b), &f).unwrap();
            assert!(max_diff(&ab, &prod) < 1e-10);
            let sq = MultiplierProfile::custom("s^2", crate::multipliers::DecayClass::Bounded, |s| s * s);
            let lf = apply_function(op.as_ref(), &sq, &f).unwrap();
            assert!(lf.inner(&f).unwrap().re >= -1e-10);
        }
    }

    #[test]
    fn non_finite_profile_is_rejected() {
        let op = lap1(32, 1.0);
        let f = bump(*op.grid(), 0.0, 0.2);
        let bad = MultiplierProfile::custom("1/s", crate::multipliers::DecayClass::Bounded, |s| 1.0 / s);
        assert!(matches!(apply_function(&op, &bad, &f), Err(Error::Evaluation(_))));
    }
}

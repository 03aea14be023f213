use serde::{Deserialize, Serialize};

use super::{linear_fit, Lab};
use crate::error::{Error, Result};
use crate::grid::{compensated_sum, GridFunction};
use crate::multipliers::{psi_cubed_bump, BumpProfile, DecayClass, MultiplierProfile};
use crate::spectral::{gradient_kernel_matrix, kernel_matrix, wave_cosine, KernelMatrix, OperatorKind, DEFAULT_KERNEL_BUDGET_MB};
use crate::tolerances::*;

/// Fitted constants of one kernel bound across a grid of scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelFit {
    pub tag: String,
    pub times: Vec<f64>,
    /// Multiplicative constant `C` per scale.
    pub constants: Vec<f64>,
    /// Common Gaussian exponent `c` (polynomial bounds: `None`).
    pub exponent: Option<f64>,
    /// Per-scale fitted exponent before the common one is chosen.
    pub fitted_exponents: Vec<f64>,
    /// `max/min - 1` of `constants`.
    pub spread: f64,
    /// Largest relative mass outside the nominal support (support bounds only).
    pub leak: Option<f64>,
    pub passed: bool,
}

fn spread(v: &[f64]) -> f64 {
    let (lo, hi) = v.iter().fold((f64::INFINITY, 0.0_f64), |(l, h), x| (l.min(*x), h.max(*x)));
    if v.is_empty() {
        0.0
    } else if lo > 0.0 && hi.is_finite() {
        hi / lo - 1.0
    } else {
        f64::INFINITY
    }
}

impl KernelFit {
    fn finish(tag: String, times: Vec<f64>, constants: Vec<f64>, leak: Option<f64>) -> Self {
        let s = spread(&constants);
        let passed = s < KERNEL_CONSTANT_SPREAD && leak.is_none_or(|l| l < SUPPORT_LEAK);
        Self { tag, times, constants, exponent: None, fitted_exponents: Vec::new(), spread: s, leak, passed }
    }
}

fn profile(name: &str, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> MultiplierProfile {
    MultiplierProfile::custom(name, DecayClass::Bounded, f)
}

/// Squared torus distances (in `h^2`) for every matrix entry, row-major.
fn offsets(k: &KernelMatrix) -> Vec<usize> {
    let g = k.grid();
    let m = k.size();
    (0..m * m).map(|i| g.torus_offset2(i / m, i % m)).collect()
}

fn fit_region(abs: &[f64]) -> Vec<usize> {
    let top = abs.iter().copied().fold(0.0, f64::max);
    (0..abs.len()).filter(|&i| abs[i] > KERNEL_FIT_FLOOR * top).collect()
}

/// Least-squares Gaussian exponent `c` of `|K| ~ exp(-d^2 / (c tau))`, from
/// `ln|K|` against `d^2/tau` where `|K| > 1e-12 max`.
pub fn gaussian_exponent(abs: &[f64], d2: &[usize], h: f64, tau: f64) -> Result<f64> {
    let keep = fit_region(abs);
    let u: Vec<f64> = keep.iter().map(|&i| d2[i] as f64 * h * h / tau).collect();
    let y: Vec<f64> = keep.iter().map(|&i| abs[i].ln()).collect();
    let (slope, _, _) = linear_fit(&u, &y);
    if !(slope < 0.0) {
        return Err(Error::Accuracy(format!("kernel does not decay (fitted slope {slope})")));
    }
    Ok(-1.0 / slope)
}

/// Smallest `C` with `|K| <= C tau^{-alpha} exp(-d^2 / (c tau))` on the fit region.
pub fn gaussian_constant(abs: &[f64], d2: &[usize], h: f64, tau: f64, alpha: f64, c: f64) -> f64 {
    fit_region(abs)
        .into_iter()
        .map(|i| abs[i] * tau.powf(alpha) * (d2[i] as f64 * h * h / (c * tau)).exp())
        .fold(0.0, f64::max)
}

/// Gaussian bound across scales: exponents fitted per scale, the largest
/// taken as the common `c`, then `C` per scale against that `c`.
fn gaussian_family(
    tag: String,
    lab: &Lab,
    times: &[f64],
    tau: impl Fn(f64) -> f64,
    alpha: f64,
    kernel: impl Fn(f64) -> Result<Vec<f64>>,
) -> Result<KernelFit> {
    let grid = *lab.grid();
    let h = grid.spacing();
    let d2: Vec<usize> = (0..grid.len() * grid.len()).map(|i| grid.torus_offset2(i / grid.len(), i % grid.len())).collect();
    let fitted = times.iter().map(|&t| gaussian_exponent(&kernel(t)?, &d2, h, tau(t))).collect::<Result<Vec<_>>>()?;
    let c = fitted.iter().copied().fold(0.0, f64::max);
    let constants = times
        .iter()
        .map(|&t| Ok(gaussian_constant(&kernel(t)?, &d2, h, tau(t), alpha, c)))
        .collect::<Result<Vec<_>>>()?;
    let mut fit = KernelFit::finish(tag, times.to_vec(), constants, None);
    fit.exponent = Some(c);
    fit.fitted_exponents = fitted;
    Ok(fit)
}

fn abs_kernel(lab: &Lab, p: &MultiplierProfile) -> Result<Vec<f64>> {
    Ok(kernel_matrix(lab.op(), p, DEFAULT_KERNEL_BUDGET_MB)?.entries().iter().map(|v| v.abs()).collect())
}

/// `|nabla_x K(x, y)|` as a flat matrix.
fn abs_gradient_kernel(lab: &Lab, p: &MultiplierProfile) -> Result<Vec<f64>> {
    let grid = lab.grid();
    let mut g2 = vec![0.0; grid.len() * grid.len()];
    for axis in 0..grid.dim() {
        let gk = gradient_kernel_matrix(lab.op(), p, axis, DEFAULT_KERNEL_BUDGET_MB)?;
        for (a, v) in g2.iter_mut().zip(gk.entries()) {
            *a += v * v;
        }
    }
    Ok(g2.into_iter().map(f64::sqrt).collect())
}

fn sqrt_spectrum_max(lab: &Lab) -> f64 {
    lab.op().frequencies().iter().copied().fold(0.0, f64::max)
}

fn geomspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64)).collect()
}

/// Heat times where the kernel is band-limited to double precision and its
/// periodic images are below the fit floor.
pub fn heat_times(lab: &Lab) -> Vec<f64> {
    let s = sqrt_spectrum_max(lab);
    let lo = 36.0 / (s * s);
    let hi = match lab.op().kind() {
        OperatorKind::Laplacian => lab.grid().half_width().powi(2) / 120.0,
        OperatorKind::Hermite => 0.5,
    };
    geomspace(lo, hi.max(1.5 * lo), 8)
}

/// Gaussian fits of the heat kernel, its gradient and its time derivative.
pub fn heat_fits(lab: &Lab, times: &[f64]) -> Result<Vec<KernelFit>> {
    let n = lab.grid().dim() as f64;
    Ok(vec![
        gaussian_family("heat_gaussian".into(), lab, times, |t| t, n / 2.0, |t| abs_kernel(lab, &MultiplierProfile::heat(t)))?,
        gaussian_family("heat_gradient".into(), lab, times, |t| t, (n + 1.0) / 2.0, |t| {
            abs_gradient_kernel(lab, &MultiplierProfile::heat(t))
        })?,
        gaussian_family("heat_time_derivative".into(), lab, times, |t| t, n / 2.0 + 1.0, |t| {
            abs_kernel(lab, &profile("dt_heat", move |s| -s * s * (-t * s * s).exp()))
        })?,
    ])
}

/// Scales for the compactly supported kernels `(t^2 L)^k Phi(t sqrt L)`.
pub fn support_times(lab: &Lab) -> Vec<f64> {
    let lo = 50.0 / sqrt_spectrum_max(lab);
    let hi = 0.75 * lab.grid().half_width();
    geomspace(lo, hi.max(1.5 * lo), 6)
}

/// Kernels of `(t^2 L)^k Phi(t sqrt L)`, `k = 0, 1, 2`, with `Phi` the
/// transform of an order-8 bump supported in `(-1, 1)`: `C = max|K| t^n` and
/// the relative mass outside `|x - y| <= t + 4h`.
pub fn support_bounds(lab: &Lab, times: &[f64]) -> Result<Vec<KernelFit>> {
    let op = lab.op();
    let grid = *lab.grid();
    let n = grid.dim() as i32;
    let h = grid.spacing();
    let bump = BumpProfile::smoothed(1.0, 8)?;
    let mut out = Vec::new();
    for kappa in 0..3 {
        let mut constants = Vec::new();
        let mut leak = 0.0_f64;
        for &t in times {
            let b = bump.clone();
            let p = profile("phi_power", move |s| (t * s).powi(2 * kappa) * b.hat(t * s));
            let k = kernel_matrix(op, &p, DEFAULT_KERNEL_BUDGET_MB)?;
            let d2 = offsets(&k);
            let limit = t + SUPPORT_HALO_CELLS * h;
            let abs: Vec<f64> = k.entries().iter().map(|v| v.abs()).collect();
            let total = compensated_sum(abs.iter().copied());
            let outside = compensated_sum(abs.iter().zip(&d2).filter(|(_, &d)| (d as f64).sqrt() * h > limit).map(|(a, _)| *a));
            leak = leak.max(outside / total);
            constants.push(k.max_abs() * t.powi(n));
        }
        out.push(KernelFit::finish(format!("support_k{kappa}"), times.to_vec(), constants, Some(leak)));
    }
    Ok(out)
}

/// Scales for the truncation bound.
pub fn truncation_times(lab: &Lab) -> Vec<f64> {
    let r = lab.grid().half_width();
    geomspace(0.25 * r, 0.8 * r, 5)
}

/// Ratios `r/t` swept by the truncation bound.
pub const TRUNCATION_RATIOS: [f64; 4] = [0.125, 0.25, 0.5, 1.0];

/// Kernel of `Psi(t sqrt L)(1 - Phi(r sqrt L))` against the periodized
/// majorant of `(r / t^{n+1}) (1 + d^2/t^2)^{-(n+1)/2}` with the radius-1/10
/// bump; the constant at each `t` is the largest over `r/t` in
/// [`TRUNCATION_RATIOS`].
pub fn truncation_bound(lab: &Lab, times: &[f64]) -> Result<KernelFit> {
    let op = lab.op();
    let grid = *lab.grid();
    let e = (grid.dim() + 1) as f64 / 2.0;
    let bump = BumpProfile::new(0.1)?;
    let psi = psi_cubed_bump(grid.dim(), &bump)?;
    let m = grid.len();
    let mut constants = Vec::new();
    for &t in times {
        let bound = periodized(lab, t, |rho| (1.0 + rho * rho).powf(-e));
        let mut best = 0.0_f64;
        for q in TRUNCATION_RATIOS {
            let r = q * t;
            let (b, ps) = (bump.clone(), psi.clone());
            let p = profile("psi_truncated", move |s| ps.eval(t * s) * (1.0 - b.hat(r * s)));
            let k = kernel_matrix(op, &p, DEFAULT_KERNEL_BUDGET_MB)?;
            let worst = (0..m * m).map(|i| k.entries()[i].abs() / bound(i / m, i % m)).fold(0.0, f64::max);
            best = best.max(worst * t / r);
        }
        constants.push(best);
    }
    Ok(KernelFit::finish("truncation".into(), times.to_vec(), constants, None))
}

/// Scales for the Poisson-type bounds: band-limited to double precision.
pub fn poisson_times(lab: &Lab) -> Vec<f64> {
    let lo = 40.0 / sqrt_spectrum_max(lab);
    geomspace(lo, 1.6 * lo, 6)
}

/// Number of periodic images summed on each side in polynomial majorants.
pub const IMAGE_COUNT: i64 = 1000;

/// `sum_m t^{-n} g(|delta + 2Rm|/t)` over periodic images `m`, for each
/// per-axis offset `delta` (1-D) or offset pair (2-D).
fn periodized(lab: &Lab, t: f64, g: impl Fn(f64) -> f64) -> impl Fn(usize, usize) -> f64 {
    let grid = *lab.grid();
    let n = grid.n();
    let h = grid.spacing();
    let period = 2.0 * grid.half_width();
    let dim = grid.dim();
    let images = if dim == 1 { IMAGE_COUNT } else { 40 };
    let half = n / 2 + 1;
    // table over minimal offsets per axis
    let mut table = vec![0.0; if dim == 1 { half } else { half * half }];
    for (i, slot) in table.iter_mut().enumerate() {
        let (a, b) = if dim == 1 { (i, 0) } else { (i / half, i % half) };
        let mut acc = Vec::new();
        for m0 in -images..=images {
            let x = a as f64 * h + period * m0 as f64;
            if dim == 1 {
                acc.push(g(x.abs() / t));
            } else {
                for m1 in -images..=images {
                    let y = b as f64 * h + period * m1 as f64;
                    acc.push(g((x * x + y * y).sqrt() / t));
                }
            }
        }
        *slot = compensated_sum(acc) * t.powi(-(dim as i32));
    }
    move |x, y| {
        let (mx, my) = (grid.multi_index(x), grid.multi_index(y));
        let a = grid.axis_offset(mx[0], my[0]);
        if dim == 1 {
            table[a]
        } else {
            table[a * half + grid.axis_offset(mx[1], my[1])]
        }
    }
}

/// Kernels of `(t sqrt L)^{2k} e^{-t sqrt L}` against the periodized
/// majorant of `t^{-n} (1 + |x - y|/t)^{-(n + 2k + 1)}`, `k = 0, 1, 2`.
pub fn poisson_bounds(lab: &Lab, times: &[f64]) -> Result<Vec<KernelFit>> {
    let op = lab.op();
    let n = lab.grid().dim() as f64;
    let mut out = Vec::new();
    for kappa in 0..3 {
        let mut constants = Vec::new();
        for &t in times {
            let p = profile("poisson_power", move |s| (t * s).powi(2 * kappa) * (-t * s).exp());
            let k = kernel_matrix(op, &p, DEFAULT_KERNEL_BUDGET_MB)?;
            let e = n + 2.0 * kappa as f64 + 1.0;
            let bound = periodized(lab, t, |rho| (1.0 + rho).powf(-e));
            let m = k.size();
            let c = (0..m * m).map(|i| k.entries()[i].abs() / bound(i / m, i % m)).fold(0.0, f64::max);
            constants.push(c);
        }
        out.push(KernelFit::finish(format!("poisson_k{kappa}"), times.to_vec(), constants, None));
    }
    Ok(out)
}

/// Gaussian fits of `t^{2k+1} nabla L^k e^{-t^2 L}`, `k = 0, 1, 2`, in the
/// variable `d^2 / t^2` with prefactor `t^{-n}`.
pub fn gradient_power_bounds(lab: &Lab, times: &[f64]) -> Result<Vec<KernelFit>> {
    let n = lab.grid().dim() as f64;
    (0..3)
        .map(|kappa| {
            gaussian_family(format!("gradient_power_k{kappa}"), lab, times, |t| t * t, n / 2.0, |t| {
                let p = profile("grad_heat_power", move |s| t.powi(2 * kappa + 1) * s.powi(2 * kappa) * (-t * t * s * s).exp());
                abs_gradient_kernel(lab, &p)
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSuite {
    pub fits: Vec<KernelFit>,
    pub passed: bool,
}

/// All kernel bounds on their default scale grids.
pub fn kernel_bound_suite(lab: &Lab) -> Result<KernelSuite> {
    let mut fits = heat_fits(lab, &heat_times(lab))?;
    fits.extend(support_bounds(lab, &support_times(lab))?);
    fits.push(truncation_bound(lab, &truncation_times(lab))?);
    fits.extend(poisson_bounds(lab, &poisson_times(lab))?);
    let gt: Vec<f64> = heat_times(lab).iter().map(|t| t.sqrt()).collect();
    fits.extend(gradient_power_bounds(lab, &gt)?);
    Ok(KernelSuite { passed: fits.iter().all(|f| f.passed), fits })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationReport {
    pub times: Vec<f64>,
    /// `|| cos(t sqrt L) f ||_{L^1(outside)} / ||f||_1` per time.
    pub leaks: Vec<f64>,
    /// Gaussian width of the initial bump.
    pub sigma: f64,
    /// Effective bump radius `8 sigma`.
    pub bump_radius: f64,
    pub passed: bool,
}

/// Gaussian bump of width `sigma` (the smallest of `3h, 6h, 12h, ...` the
/// eigenbasis resolves to `1e-14`) at the origin; for `count` times up to
/// `0.9 (R - 8 sigma - 4h)` measures the mass of `|cos(t sqrt L) f|` farther
/// than `t + 8 sigma + 4h` from the origin.
pub fn finite_propagation(lab: &Lab, count: usize) -> Result<PropagationReport> {
    let op = lab.op();
    let grid = *lab.grid();
    let h = grid.spacing();
    let r = grid.half_width();
    let mut sigma = 3.0 * h;
    let f = loop {
        let f = GridFunction::from_real_fn(grid, |x| (-(x[0] * x[0] + x[1] * x[1]) / (2.0 * sigma * sigma)).exp())?;
        let c = op.project(&f)?;
        if op.unresolved_fraction(&f, &c) < 1e-14 {
            break f;
        }
        sigma *= 2.0;
        if 8.0 * sigma > 0.5 * r {
            return Err(Error::Resolution("no resolvable bump narrower than R/16".into()));
        }
    };
    let radius = 8.0 * sigma;
    let t_hi = 0.9 * (r - radius - SUPPORT_HALO_CELLS * h);
    let origin = grid.flat_index([grid.nearest_index(0.0), grid.nearest_index(0.0)]);
    let mass = compensated_sum(f.abs());
    let times: Vec<f64> = (1..=count).map(|i| t_hi * i as f64 / count as f64).collect();
    let mut leaks = Vec::with_capacity(count);
    for &t in &times {
        let u = wave_cosine(op, t, &f)?;
        let limit = t + radius + SUPPORT_HALO_CELLS * h;
        let outside = compensated_sum(
            u.values()
                .iter()
                .enumerate()
                .filter(|(i, _)| grid.torus_distance(*i, origin) > limit)
                .map(|(_, v)| v.norm()),
        );
        leaks.push(outside / mass);
    }
    Ok(PropagationReport { passed: leaks.iter().all(|l| *l < SUPPORT_LEAK), times, leaks, sigma, bump_radius: radius })
}

//! Area integrals over the cone `|x - y| < t`, the `g*` function with
//! polynomial aperture weight, and pointwise Littlewood-Paley-Stein
//! g-functions.
//!
//! Every square function is a sum over a geometric [`TimeGrid`] of slices
//! `u(., t_j)`, each computed once through the functional calculus:
//!
//! | kind | `u(y, t)` |
//! |------|-----------|
//! | `s_h` | `t^2 L e^{-t^2 L} f` |
//! | `s_p` | `t sqrt(L) e^{-t sqrt(L)} f` |
//! | `S_H` | `t nabla e^{-t^2 L} f` |
//! | `S_P` | `t nabla e^{-t sqrt(L)} f` |

use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::balls::BallMask;
use crate::fft::{convolve, kernel_transform, GridFft};
use crate::grid::{compensated_sum, Grid, GridFunction};
use crate::multipliers::{log_energy, psi_cubed_bump, BumpProfile, MultiplierProfile};
use crate::spectral::{analyze, synthesize_gradient_with, synthesize_with, SpectralOperator};

/// Geometric time nodes `t_j = t_min r^j`, `j = 0..count`, with log-step
/// `ln r` (the measure `dt/t`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_min: f64,
    ratio: f64,
    count: usize,
}

pub const DEFAULT_TIME_RATIO: f64 = 1.090_507_732_665_257_7; // 2^{1/8}

impl TimeGrid {
    pub fn new(t_min: f64, ratio: f64, count: usize) -> Result<Self> {
        if !(t_min.is_finite() && t_min > 0.0) {
            return Err(Error::Parameter(format!("t_min must be positive, got {t_min}")));
        }
        if !(ratio.is_finite() && ratio > 1.0) {
            return Err(Error::Parameter(format!("time ratio must exceed 1, got {ratio}")));
        }
        if count == 0 {
            return Err(Error::Parameter("time grid needs at least one node".into()));
        }
        Ok(Self { t_min, ratio, count })
    }

    /// Nodes from `t_min` up to the last one not exceeding `t_max`.
    pub fn spanning(t_min: f64, t_max: f64, ratio: f64) -> Result<Self> {
        if !(t_max >= t_min) {
            return Err(Error::Parameter(format!("empty time range [{t_min}, {t_max}]")));
        }
        let count = ((t_max / t_min).ln() / ratio.ln() * (1.0 + 1e-12)).floor() as usize + 1;
        Self::new(t_min, ratio, count)
    }

    /// `t_min = 2h`, `r = 2^{1/8}`, up to `R^2/4`.
    pub fn default_for(grid: &Grid) -> Result<Self> {
        Self::spanning(2.0 * grid.spacing(), grid.t_max(), DEFAULT_TIME_RATIO)
    }

    /// Nodes chosen so that `int |psi(t s)|^2 dt/t` over the grid captures all
    /// but `loss` of `kappa^2` for every `s` in `[s_lo, s_hi]`.
    pub fn for_band(psi: &MultiplierProfile, s_lo: f64, s_hi: f64, ratio: f64, loss: f64) -> Result<Self> {
        if !(s_lo > 0.0 && s_hi >= s_lo) {
            return Err(Error::Band(format!("invalid band [{s_lo}, {s_hi}]")));
        }
        let k2 = crate::multipliers::kappa(psi)?.powi(2);
        let budget = 0.5 * loss * k2;
        // smallest z with tail mass above z below budget, largest with head below budget
        let head = |a: f64| log_energy(psi, 1e-12, a);
        let tail = |b: f64| log_energy(psi, b, 1e6);
        let (mut lo, mut hi) = (1e-12_f64, 1e6_f64);
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if head(mid) <= budget {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let a = lo;
        let (mut lo, mut hi) = (a, 1e6_f64);
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if tail(mid) <= budget {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let b = hi;
        let t_min = a / s_hi;
        let t_max = b / s_lo;
        let count = ((t_max / t_min).ln() / ratio.ln()).ceil() as usize + 1;
        Self::new(t_min, ratio, count)
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn log_step(&self) -> f64 {
        self.ratio.ln()
    }

    pub fn node(&self, j: usize) -> f64 {
        self.t_min * self.ratio.powi(j as i32)
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.count).map(|j| self.node(j)).collect()
    }

    pub fn t_last(&self) -> f64 {
        self.node(self.count - 1)
    }

    /// Fraction of `kappa^2` the grid's range `[t_min s, t_last s]` captures.
    pub fn captured_fraction(&self, psi: &MultiplierProfile, kappa: f64, s: f64) -> f64 {
        let lo = self.t_min / self.ratio.sqrt() * s;
        let hi = self.t_last() * self.ratio.sqrt() * s;
        log_energy(psi, lo, hi) / (kappa * kappa)
    }
}

/// Which slice integrand a square function is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SquareKind {
    /// `s_p`: `t sqrt(L) e^{-t sqrt(L)}`
    HorizontalPoisson,
    /// `s_h`: `t^2 L e^{-t^2 L}`
    HorizontalHeat,
    /// `S_P`: `t nabla e^{-t sqrt(L)}`
    VerticalPoisson,
    /// `S_H`: `t nabla e^{-t^2 L}`
    VerticalHeat,
}

impl SquareKind {
    pub const ALL: [SquareKind; 4] = [
        SquareKind::HorizontalHeat,
        SquareKind::HorizontalPoisson,
        SquareKind::VerticalHeat,
        SquareKind::VerticalPoisson,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SquareKind::HorizontalPoisson => "s_p",
            SquareKind::HorizontalHeat => "s_h",
            SquareKind::VerticalPoisson => "S_P",
            SquareKind::VerticalHeat => "S_H",
        }
    }

    pub fn is_vertical(self) -> bool {
        matches!(self, SquareKind::VerticalPoisson | SquareKind::VerticalHeat)
    }

    /// Scalar profile `z -> psi(z)` of the slice (under the gradient for
    /// vertical kinds).
    pub fn profile(self) -> fn(f64) -> f64 {
        match self {
            SquareKind::HorizontalPoisson => |z| z * (-z).exp(),
            SquareKind::HorizontalHeat => |z| z * z * (-z * z).exp(),
            SquareKind::VerticalPoisson => |z| (-z).exp(),
            SquareKind::VerticalHeat => |z| (-z * z).exp(),
        }
    }

    /// The profile whose `kappa^2` is the L^2 constant of the g-function
    /// (`z psi(z)` for vertical kinds, since `|t nabla u|^2` carries `t^2 s^2`).
    pub fn energy_profile(self) -> MultiplierProfile {
        let p = self.profile();
        let v = self.is_vertical();
        MultiplierProfile::custom(self.label(), crate::multipliers::DecayClass::FClass(1.0), move |z| {
            if v {
                z * p(z)
            } else {
                p(z)
            }
        })
    }
}

impl std::fmt::Display for SquareKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SquareKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "s_p" | "sp" | "gp" | "g_p" => Ok(SquareKind::HorizontalPoisson),
            "s_h" | "sh" | "gh" | "g_h" => Ok(SquareKind::HorizontalHeat),
            "S_P" | "SP" | "GP" | "G_P" => Ok(SquareKind::VerticalPoisson),
            "S_H" | "SH" | "GH" | "G_H" => Ok(SquareKind::VerticalHeat),
            other => Err(Error::Parameter(format!("unknown square-function kind {other:?}"))),
        }
    }
}

fn require_gradient(op: &dyn SpectralOperator, kind: SquareKind) -> Result<()> {
    if kind.is_vertical() && !op.gradient_bound_available() {
        return Err(Error::Capability(format!(
            "{} needs a gradient bound that the {} model does not provide",
            kind.label(),
            op.kind()
        )));
    }
    Ok(())
}

/// `|u(y, t)|^2` for every grid point `y`.
pub fn slice_energy(op: &dyn SpectralOperator, coeffs: &[Complex64], kind: SquareKind, t: f64) -> Result<Vec<f64>> {
    let p = kind.profile();
    if kind.is_vertical() {
        let grads = synthesize_gradient_with(op, coeffs, |s| p(t * s))?;
        let mut e = vec![0.0; op.grid().len()];
        for g in &grads {
            for (acc, v) in e.iter_mut().zip(g.values()) {
                *acc += t * t * v.norm_sqr();
            }
        }
        Ok(e)
    } else {
        Ok(synthesize_with(op, coeffs, |s| p(t * s))?.values().iter().map(|v| v.norm_sqr()).collect())
    }
}

/// The discretized cone `|x - y| < t_j` over a [`TimeGrid`].
#[derive(Debug, Clone)]
pub struct ConeQuadrature {
    grid: Grid,
    times: TimeGrid,
    balls: Vec<BallMask>,
}

impl ConeQuadrature {
    pub fn new(grid: Grid, times: TimeGrid) -> Result<Self> {
        if times.t_min() < grid.spacing() {
            return Err(Error::Resolution(format!(
                "smallest cone radius {} is below the grid spacing {}",
                times.t_min(),
                grid.spacing()
            )));
        }
        let balls = times.nodes().iter().map(|&t| BallMask::new(&grid, t)).collect();
        Ok(Self { grid, times, balls })
    }

    pub fn default_for(grid: Grid) -> Result<Self> {
        Self::new(grid, TimeGrid::default_for(&grid)?)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn times(&self) -> &TimeGrid {
        &self.times
    }

    pub fn aperture(&self) -> f64 {
        1.0
    }

    /// Number of grid points in the ball of slice `j`.
    pub fn ball_count(&self, j: usize) -> usize {
        self.balls[j].count()
    }
}

fn finish(grid: Grid, sq: Vec<f64>) -> GridFunction {
    GridFunction::from_parts_unchecked(grid, sq.into_iter().map(|v| Complex64::new(v.max(0.0).sqrt(), 0.0)).collect())
}

/// Accumulates per-slice contributions in slice order.
fn reduce_slices(len: usize, slices: Vec<Vec<f64>>) -> Vec<f64> {
    let mut acc = vec![0.0; len];
    for s in slices {
        for (a, v) in acc.iter_mut().zip(s) {
            *a += v;
        }
    }
    acc
}

/// `x -> (sum_j ln r * t_j^{-n} sum_{|x-y|<t_j} |u(y,t_j)|^2 h^n)^{1/2}`.
pub fn area_integral(
    kind: SquareKind,
    f: &GridFunction,
    op: &dyn SpectralOperator,
    cone: &ConeQuadrature,
) -> Result<GridFunction> {
    require_gradient(op, kind)?;
    if f.grid() != op.grid() || cone.grid() != op.grid() {
        return Err(Error::Dimension("function, operator and cone grids differ".into()));
    }
    let grid = *op.grid();
    let coeffs = analyze(op, f)?;
    let n = grid.dim() as i32;
    let hd = grid.cell_measure();
    let dt = cone.times.log_step();
    let slices = (0..cone.times.count())
        .into_par_iter()
        .map(|j| {
            let t = cone.times.node(j);
            let e = slice_energy(op, &coeffs, kind, t)?;
            let w = dt * t.powi(-n) * hd;
            Ok(cone.balls[j].sum(&e).into_iter().map(|v| v * w).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(finish(grid, reduce_slices(grid.len(), slices)))
}

/// `x -> (sum_j ln r |u(x, t_j)|^2)^{1/2}`.
pub fn g_function(kind: SquareKind, f: &GridFunction, op: &dyn SpectralOperator, times: &TimeGrid) -> Result<GridFunction> {
    require_gradient(op, kind)?;
    if f.grid() != op.grid() {
        return Err(Error::Dimension("function and operator grids differ".into()));
    }
    let grid = *op.grid();
    let coeffs = analyze(op, f)?;
    let dt = times.log_step();
    let slices = (0..times.count())
        .into_par_iter()
        .map(|j| Ok(slice_energy(op, &coeffs, kind, times.node(j))?.into_iter().map(|v| v * dt).collect()))
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(finish(grid, reduce_slices(grid.len(), slices)))
}

/// `sum_j ln r ||psi(t_j sqrt(L)) f||_2^2`, the discrete counterpart of
/// `int_0^inf ||psi(t sqrt(L)) f||^2 dt/t`.
pub fn log_time_energy(op: &dyn SpectralOperator, psi: &MultiplierProfile, f: &GridFunction, times: &TimeGrid) -> Result<f64> {
    let coeffs = analyze(op, f)?;
    let hd = op.grid().cell_measure();
    let parts = (0..times.count())
        .into_par_iter()
        .map(|j| {
            let t = times.node(j);
            let u = synthesize_with(op, &coeffs, |s| psi.eval(t * s))?;
            Ok(compensated_sum(u.values().iter().map(|v| v.norm_sqr())) * hd)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(compensated_sum(parts) * times.log_step())
}

#[derive(Debug, Clone)]
pub struct GStarParams {
    mu: f64,
    psi: MultiplierProfile,
}

/// Default bump radius for the `g*` profile `Psi = s^{2n+2} Phi^3`.
pub const GSTAR_BUMP_RADIUS: f64 = 1.0;

impl GStarParams {
    pub fn new(mu: f64, psi: MultiplierProfile) -> Result<Self> {
        if !(mu.is_finite() && mu > 1.0) {
            return Err(Error::Parameter(format!("mu must exceed 1, got {mu}")));
        }
        Ok(Self { mu, psi })
    }

    /// `Psi(s) = s^{2n+2} Phi(s)^3` with the default bump.
    pub fn standard(dim: usize, mu: f64) -> Result<Self> {
        Self::new(mu, psi_cubed_bump(dim, &BumpProfile::new(GSTAR_BUMP_RADIUS)?)?)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn psi(&self) -> &MultiplierProfile {
        &self.psi
    }
}

/// `g*(x)^2 = sum_j ln r t_j^{-n} sum_y (t_j/(t_j+|x-y|))^{n mu} |Psi(t_j sqrt(L)) f(y)|^2 h^n`,
/// with the `y`-sum over the whole torus.
pub fn g_star(f: &GridFunction, op: &dyn SpectralOperator, params: &GStarParams, times: &TimeGrid) -> Result<GridFunction> {
    if f.grid() != op.grid() {
        return Err(Error::Dimension("function and operator grids differ".into()));
    }
    let grid = *op.grid();
    let fft = GridFft::new(grid);
    let coeffs = analyze(op, f)?;
    let n = grid.dim() as f64;
    let expo = n * params.mu;
    let hd = grid.cell_measure();
    let dt = times.log_step();
    let slices = (0..times.count())
        .into_par_iter()
        .map(|j| {
            let t = times.node(j);
            let u = synthesize_with(op, &coeffs, |s| params.psi.eval(t * s))?;
            let e: Vec<f64> = u.values().iter().map(|v| v.norm_sqr()).collect();
            let hat = kernel_transform(&fft, &grid, |d| (t / (t + grid.offset_distance(d))).powf(expo));
            let w = dt * t.powf(-n) * hd;
            Ok(convolve(&fft, &hat, &e).into_iter().map(|v| v.max(0.0) * w).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(finish(grid, reduce_slices(grid.len(), slices)))
}

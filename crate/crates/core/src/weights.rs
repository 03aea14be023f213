//! Maximal operators, Muckenhoupt constants, the Rubio de Francia iteration,
//! weighted rearrangements and the local sharp maximal function.
//!
//! The uncentered maximal function and the `A_p` constants range over a
//! [`CubeFamily`]: all periodic grid-aligned cubes with side `2^k h`. Window
//! sums are direct sums of non-negative values (no prefix-sum cancellation),
//! so averages far from the support of `f` keep full relative accuracy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::balls::BallMask;
use crate::error::{Error, Result};
use crate::grid::{lp_norm, Grid, GridFunction, Weight};

/// Periodic cube `corner + [0, side)^dim` in grid cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicCube {
    pub corner: [usize; 2],
    pub side: usize,
}

impl PeriodicCube {
    /// Coordinates of the cube's midpoint (the torus point halfway along
    /// each side).
    pub fn center(&self, grid: &Grid) -> [f64; 2] {
        let h = grid.spacing();
        let mut c = [0.0; 2];
        for (axis, v) in c.iter_mut().enumerate().take(grid.dim()) {
            let x = grid.coordinate(self.corner[axis]) + 0.5 * (self.side as f64 - 1.0) * h;
            let r = grid.half_width();
            *v = (x + r).rem_euclid(2.0 * r) - r;
        }
        c
    }

    pub fn side_length(&self, grid: &Grid) -> f64 {
        self.side as f64 * grid.spacing()
    }

    pub fn contains(&self, grid: &Grid, x: usize) -> bool {
        let m = grid.multi_index(x);
        (0..grid.dim()).all(|a| (m[a] + grid.n() - self.corner[a]) % grid.n() < self.side)
    }

    pub fn points(&self, grid: &Grid) -> Vec<usize> {
        let n = grid.n();
        let side = self.side.min(n);
        if grid.dim() == 1 {
            (0..side).map(|k| (self.corner[0] + k) % n).collect()
        } else {
            let mut out = Vec::with_capacity(side * side);
            for a in 0..side {
                for b in 0..side {
                    out.push(grid.flat_index([(self.corner[0] + a) % n, (self.corner[1] + b) % n]));
                }
            }
            out
        }
    }
}

/// All periodic cubes of side `2^k h`, `k = 0..=log2(max side)`, at every
/// grid-aligned position.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeFamily {
    grid: Grid,
    sides: Vec<usize>,
}

impl CubeFamily {
    pub fn new(grid: Grid) -> Self {
        Self::with_max_side(grid, grid.n())
    }

    /// Family truncated to sides of at most `max_side` cells.
    pub fn with_max_side(grid: Grid, max_side: usize) -> Self {
        let mut sides = Vec::new();
        let mut m = 1;
        while m <= max_side.min(grid.n()) {
            sides.push(m);
            m *= 2;
        }
        Self { grid, sides }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn sides(&self) -> &[usize] {
        &self.sides
    }

    /// Number of distinct cubes (a full-torus side has a single position).
    pub fn len(&self) -> usize {
        self.sides
            .iter()
            .map(|&m| if m == self.grid.n() { 1 } else { self.grid.len() })
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.sides.is_empty()
    }

    fn check(&self, grid: &Grid) -> Result<()> {
        if *grid != self.grid {
            return Err(Error::Dimension("cube family and function grids differ".into()));
        }
        Ok(())
    }
}

/// `out[c] = op_{k < m} v[c + k]` along one periodic axis of every row.
fn ring_rows(v: &[f64], n: usize, m: usize, init: f64, op: impl Fn(f64, f64) -> f64 + Sync) -> Vec<f64> {
    v.par_chunks(n)
        .flat_map_iter(|row| {
            (0..n).map(|c| {
                let mut acc = init;
                for k in 0..m {
                    acc = op(acc, row[(c + k) % n]);
                }
                acc
            }).collect::<Vec<_>>()
        })
        .collect()
}

fn transpose(v: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = v[i * n + j];
        }
    }
    out
}

/// Separable periodic window reduction with lower corner `c` and side `m`.
fn cube_reduce(grid: &Grid, v: &[f64], m: usize, init: f64, op: impl Fn(f64, f64) -> f64 + Sync + Copy) -> Vec<f64> {
    let n = grid.n();
    let rows = ring_rows(v, n, m, init, op);
    if grid.dim() == 1 {
        return rows;
    }
    transpose(&ring_rows(&transpose(&rows, n), n, m, init, op), n)
}

/// `out[x] = op` over all corners `c` with `x in c + [0, m)`, i.e. over
/// `c = x - k`, `k < m`.
fn cover_reduce(grid: &Grid, v: &[f64], m: usize, init: f64, op: impl Fn(f64, f64) -> f64 + Sync + Copy) -> Vec<f64> {
    let n = grid.n();
    let one = |data: &[f64]| -> Vec<f64> {
        data.par_chunks(n)
            .flat_map_iter(|row| {
                (0..n).map(|x| {
                    let mut acc = init;
                    for k in 0..m {
                        acc = op(acc, row[(x + n * m - k) % n]);
                    }
                    acc
                }).collect::<Vec<_>>()
            })
            .collect()
    };
    let rows = one(v);
    if grid.dim() == 1 {
        return rows;
    }
    transpose(&one(&transpose(&rows, n)), n)
}

fn cube_sums(grid: &Grid, v: &[f64], m: usize) -> Vec<f64> {
    cube_reduce(grid, v, m, 0.0, |a, b| a + b)
}

fn cube_points(grid: &Grid, m: usize) -> f64 {
    (m.min(grid.n()) as f64).powi(grid.dim() as i32)
}

/// Maximal function of non-negative samples over the family.
fn maximal_values(family: &CubeFamily, v: &[f64]) -> Vec<f64> {
    let grid = &family.grid;
    let mut out = vec![0.0_f64; grid.len()];
    for &m in &family.sides {
        let count = cube_points(grid, m);
        let avg: Vec<f64> = cube_sums(grid, v, m).into_iter().map(|s| s / count).collect();
        let cov = cover_reduce(grid, &avg, m, 0.0, f64::max);
        for (o, c) in out.iter_mut().zip(cov) {
            *o = o.max(c);
        }
    }
    out
}

/// `Mf(x) = max_{Q ni x} avg_Q |f|` over the cube family.
pub fn maximal(f: &GridFunction, family: &CubeFamily) -> Result<GridFunction> {
    family.check(f.grid())?;
    let v = maximal_values(family, &f.abs());
    GridFunction::from_real(*f.grid(), v)
}

/// `M w` as a weight.
pub fn maximal_weight(w: &Weight, family: &CubeFamily) -> Result<Weight> {
    family.check(w.grid())?;
    Weight::new(*w.grid(), maximal_values(family, w.values()))
}

/// Centered weighted maximal function
/// `M_w h(z) = max_t w(B(z,t))^{-1} int_{B(z,t)} |h| w` over radii
/// `t = h, 2h, 4h, ...` (open periodic balls) until the ball is the torus.
/// Radii whose ball has zero `w`-mass are skipped.
pub fn weighted_centered_maximal(hf: &GridFunction, w: &Weight) -> Result<GridFunction> {
    if hf.grid() != w.grid() {
        return Err(Error::Dimension("function and weight grids differ".into()));
    }
    let grid = *w.grid();
    let hw: Vec<f64> = hf.abs().iter().zip(w.values()).map(|(a, b)| a * b).collect();
    let support: Vec<f64> = w.values().iter().map(|&v| if v > 0.0 { 1.0 } else { 0.0 }).collect();
    let mut best = vec![f64::NEG_INFINITY; grid.len()];
    let mut t = grid.spacing();
    loop {
        let ball = BallMask::new(&grid, t);
        let num = ball.sum(&hw);
        let den = ball.sum(w.values());
        let positive = ball.sum(&support);
        for x in 0..grid.len() {
            if positive[x] > 0.0 {
                best[x] = best[x].max(num[x] / den[x]);
            }
        }
        if ball.is_full() {
            break;
        }
        t *= 2.0;
    }
    if let Some(x) = best.iter().position(|v| !v.is_finite()) {
        return Err(Error::UndefinedPoint(x));
    }
    GridFunction::from_real(grid, best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApReport {
    pub p: f64,
    pub constant: f64,
    pub witness: PeriodicCube,
    pub witness_center: [f64; 2],
    pub witness_side: f64,
}

/// `||w||_{A_p} = max_Q (avg_Q w)(avg_Q w^{-1/(p-1)})^{p-1}`, and for `p = 1`
/// `max_Q (avg_Q w) / min_Q w`.
pub fn ap_constant(w: &Weight, p: f64, family: &CubeFamily) -> Result<ApReport> {
    family.check(w.grid())?;
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::Parameter(format!("p must be >= 1, got {p}")));
    }
    if !w.is_strictly_positive() {
        return Err(Error::SingularWeight("A_p constants need a strictly positive weight".into()));
    }
    let grid = *w.grid();
    let dual: Vec<f64> = if p > 1.0 {
        w.values().iter().map(|v| v.powf(-1.0 / (p - 1.0))).collect()
    } else {
        Vec::new()
    };
    let mut best = (f64::NEG_INFINITY, PeriodicCube { corner: [0, 0], side: 1 });
    for &m in &family.sides {
        let count = cube_points(&grid, m);
        let aw = cube_sums(&grid, w.values(), m);
        let other = if p > 1.0 {
            cube_sums(&grid, &dual, m)
        } else {
            cube_reduce(&grid, w.values(), m, f64::INFINITY, f64::min)
        };
        let positions = if m == grid.n() { 1 } else { grid.len() };
        for c in 0..positions {
            let avg = aw[c] / count;
            let value = if p > 1.0 {
                avg * (other[c] / count).powf(p - 1.0)
            } else {
                avg / other[c]
            };
            if value > best.0 {
                best = (value, PeriodicCube { corner: grid.multi_index(c), side: m });
            }
        }
    }
    let witness = best.1;
    Ok(ApReport {
        p,
        constant: best.0,
        witness,
        witness_center: witness.center(&grid),
        witness_side: witness.side_length(&grid),
    })
}

/// Pseudo-random non-negative functions used to estimate `||M||_{L^q}`.
fn norm_probe_family(grid: Grid, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(65);
    for k in 0..64 {
        let power = 1.0 + (k % 8) as f64;
        let v: Vec<f64> = (0..grid.len()).map(|_| rng.gen::<f64>().powf(power)).collect();
        out.push(v);
    }
    let mut spike = vec![0.0; grid.len()];
    spike[grid.len() / 2] = 1.0;
    out.push(spike);
    out
}

/// Safety factor applied to the empirical `||M||_{L^q}`.
pub const MAXIMAL_NORM_MARGIN: f64 = 1.25;

/// `1.25 * max ||Mf||_q / ||f||_q` over 64 pseudo-random functions and a
/// single spike.
pub fn maximal_norm_estimate(family: &CubeFamily, q: f64, seed: u64) -> Result<f64> {
    let grid = family.grid;
    let mut worst = 0.0_f64;
    for v in norm_probe_family(grid, seed) {
        let f = GridFunction::from_real(grid, v)?;
        let mf = maximal(&f, family)?;
        worst = worst.max(lp_norm(&mf, q)? / lp_norm(&f, q)?);
    }
    Ok(MAXIMAL_NORM_MARGIN * worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RdfCertificate {
    /// `phi <= v` pointwise.
    pub dominates: bool,
    /// `||v||_q / ||phi||_q`, at most 2.
    pub norm_ratio: f64,
    /// `max_x Mv(x) / v(x)`.
    pub a1_ratio: f64,
    /// `2 M_norm`.
    pub a1_bound: f64,
    /// Truncation allowance `max_x 2 M_norm T_K(x) / v(x)`, `T_K` the first
    /// omitted term.
    pub slack: f64,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct RdfWeight {
    pub weight: Weight,
    pub certificate: RdfCertificate,
    pub terms: usize,
}

/// Relative size of the geometric tail beyond which the series is reported
/// as not converged.
pub const RDF_TAIL_TOLERANCE: f64 = 1e-8;

/// `v = sum_{k < terms} M^k phi / (2 M_norm)^k`.
pub fn rubio_de_francia(phi: &GridFunction, q: f64, m_norm: f64, terms: usize, family: &CubeFamily) -> Result<RdfWeight> {
    family.check(phi.grid())?;
    if !(q > 1.0 && q.is_finite()) {
        return Err(Error::Parameter(format!("q must exceed 1, got {q}")));
    }
    if !(m_norm.is_finite() && m_norm > 0.0) || terms == 0 {
        return Err(Error::Parameter("M_norm must be positive and terms >= 1".into()));
    }
    if phi.values().iter().any(|v| v.re < 0.0 || v.im != 0.0) {
        return Err(Error::RejectedInput("phi must be real and non-negative".into()));
    }
    let grid = *phi.grid();
    let base: Vec<f64> = phi.re();
    let scale = 1.0 / (2.0 * m_norm);
    let mut v = base.clone();
    let mut term = base.clone();
    let mut norms = vec![lp_norm(phi, q)?];
    for _ in 1..terms {
        term = maximal_values(family, &term).into_iter().map(|x| x * scale).collect();
        for (a, b) in v.iter_mut().zip(&term) {
            *a += b;
        }
        norms.push(lp_norm(&GridFunction::from_real(grid, term.clone())?, q)?);
    }
    let next: Vec<f64> = maximal_values(family, &term).into_iter().map(|x| x * scale).collect();
    let v_norm = lp_norm(&GridFunction::from_real(grid, v.clone())?, q)?;
    let next_norm = lp_norm(&GridFunction::from_real(grid, next.clone())?, q)?;
    let last = *norms.last().expect("at least one term");
    let r = if last > 0.0 { (next_norm / last).min(1.0) } else { 0.0 };
    let tail = if r < 1.0 { next_norm / (1.0 - r) } else { f64::INFINITY };
    if tail > RDF_TAIL_TOLERANCE * v_norm {
        return Err(Error::Convergence(format!(
            "series tail {:.3e} exceeds {RDF_TAIL_TOLERANCE:e} of the partial sum after {terms} terms",
            tail / v_norm
        )));
    }
    let weight = Weight::new(grid, v.clone())?;
    let mv = maximal_values(family, &v);
    let mut a1_ratio = 0.0_f64;
    let mut slack = 0.0_f64;
    for x in 0..grid.len() {
        if v[x] > 0.0 {
            a1_ratio = a1_ratio.max(mv[x] / v[x]);
            slack = slack.max(2.0 * m_norm * next[x] / v[x]);
        }
    }
    let norm_ratio = v_norm / norms[0];
    let dominates = base.iter().zip(&v).all(|(a, b)| a <= b);
    let a1_bound = 2.0 * m_norm;
    let passed = dominates && norm_ratio <= 2.0 && a1_ratio <= a1_bound + slack + 1e-9 * a1_bound;
    Ok(RdfWeight { weight, certificate: RdfCertificate { dominates, norm_ratio, a1_ratio, a1_bound, slack, passed }, terms })
}

/// `f*_w(t) = inf { lambda : w{|f| > lambda} <= t }`.
pub fn rearrangement_w(f: &GridFunction, w: &Weight, t: f64) -> Result<f64> {
    if f.grid() != w.grid() {
        return Err(Error::Dimension("function and weight grids differ".into()));
    }
    let hd = f.grid().cell_measure();
    let total = w.total_mass();
    if !(t > 0.0 && t < total) {
        return Err(Error::Parameter(format!("t must lie in (0, {total}), got {t}")));
    }
    let mut pairs: Vec<(f64, f64)> = f.abs().into_iter().zip(w.values().iter().map(|v| v * hd)).collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    // mass W_i of the top i distinct levels; answer is the next level below
    let mut mass = 0.0;
    let mut i = 0;
    while i < pairs.len() {
        let level = pairs[i].0;
        let mut j = i;
        let mut add = 0.0;
        while j < pairs.len() && pairs[j].0 == level {
            add += pairs[j].1;
            j += 1;
        }
        if mass + add > t {
            return Ok(level);
        }
        mass += add;
        i = j;
    }
    Ok(0.0)
}

/// Smallest achievable `k`-th order statistic of `|v - c|` over `c`: the
/// minimal half-range of `len - k` consecutive sorted values.
fn best_constant_deviation(sorted: &[f64], dropped: usize) -> f64 {
    let keep = sorted.len() - dropped;
    (0..=dropped)
        .map(|i| 0.5 * (sorted[i + keep - 1] - sorted[i]))
        .fold(f64::INFINITY, f64::min)
}

/// `M#_lambda f(x) = max_{Q ni x} min_c ((f - c) chi_Q)*(lambda |Q|)` for real
/// `f`; the minimization over `c` is exact (window of sorted values).
pub fn local_sharp_maximal(f: &GridFunction, lambda: f64, family: &CubeFamily) -> Result<GridFunction> {
    family.check(f.grid())?;
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Parameter(format!("lambda must lie in (0, 1), got {lambda}")));
    }
    let grid = *f.grid();
    let values = f.re();
    let mut out = vec![0.0_f64; grid.len()];
    for &m in &family.sides {
        let positions = if m == grid.n() { 1 } else { grid.len() };
        let inner: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map(|c| {
                let cube = PeriodicCube { corner: grid.multi_index(c % positions), side: m };
                let mut vals: Vec<f64> = cube.points(&grid).iter().map(|&p| values[p]).collect();
                vals.sort_by(f64::total_cmp);
                let dropped = (lambda * vals.len() as f64).floor() as usize;
                best_constant_deviation(&vals, dropped)
            })
            .collect();
        let cov = cover_reduce(&grid, &inner, m, 0.0, f64::max);
        for (o, c) in out.iter_mut().zip(cov) {
            *o = o.max(c);
        }
    }
    GridFunction::from_real(grid, out)
}

/// `(|x| + h)^a` with `|x|` the distance to the origin.
pub fn power_weight(grid: Grid, a: f64) -> Result<Weight> {
    let h = grid.spacing();
    Weight::from_fn(grid, |x| ((x[0] * x[0] + x[1] * x[1]).sqrt() + h).powf(a))
}

/// Checkerboard with `blocks` cells per axis alternating between 1 and `level`.
pub fn checker_weight(grid: Grid, level: f64, blocks: usize) -> Result<Weight> {
    let width = (grid.n() / blocks.max(1)).max(1);
    Weight::new(
        grid,
        (0..grid.len())
            .map(|i| {
                let m = grid.multi_index(i);
                let parity: usize = (0..grid.dim()).map(|a| m[a] / width).sum();
                if parity.is_multiple_of(2) {
                    1.0
                } else {
                    level
                }
            })
            .collect(),
    )
}

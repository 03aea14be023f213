//! Whitney covers of grid sets and the Calderón–Zygmund decomposition.
//!
//! Both work on a single non-periodic fundamental cell: cubes are dyadic
//! blocks of grid indices `corner + [0, 2^k)^dim` that never wrap. Distances
//! are Euclidean between grid-point sets and are computed exactly in integer
//! units of `h`; the diameter of a cube of `m` cells is `m h sqrt(dim)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{compensated_sum, Grid, GridFunction};
use crate::weights::{maximal, CubeFamily};

pub const WHITNEY_C1: f64 = 1.0;
pub const WHITNEY_C2: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cube {
    pub corner: [usize; 2],
    /// Side in cells, `2^level`.
    pub cells: usize,
    pub level: u32,
}

impl Cube {
    pub fn side(&self, grid: &Grid) -> f64 {
        self.cells as f64 * grid.spacing()
    }

    pub fn diameter(&self, grid: &Grid) -> f64 {
        self.side(grid) * (grid.dim() as f64).sqrt()
    }

    pub fn center(&self, grid: &Grid) -> [f64; 2] {
        let mut c = [0.0; 2];
        let off = 0.5 * (self.cells as f64 - 1.0) * grid.spacing();
        for (a, v) in c.iter_mut().enumerate().take(grid.dim()) {
            *v = grid.coordinate(self.corner[a]) + off;
        }
        c
    }

    pub fn contains(&self, grid: &Grid, x: usize) -> bool {
        let m = grid.multi_index(x);
        (0..grid.dim()).all(|a| m[a] >= self.corner[a] && m[a] < self.corner[a] + self.cells)
    }

    pub fn points(&self, grid: &Grid) -> Vec<usize> {
        let m = self.cells;
        if grid.dim() == 1 {
            (self.corner[0]..self.corner[0] + m).collect()
        } else {
            let mut out = Vec::with_capacity(m * m);
            for a in self.corner[0]..self.corner[0] + m {
                for b in self.corner[1]..self.corner[1] + m {
                    out.push(grid.flat_index([a, b]));
                }
            }
            out
        }
    }
}

/// Exact squared Euclidean distance (in cells) from every grid point to the
/// set `target`, without wrap-around. `u64::MAX` when `target` is empty.
pub(crate) fn squared_distance_to(grid: &Grid, target: &[bool]) -> Vec<u64> {
    let n = grid.n();
    let row_pass = |row: &[bool]| -> Vec<Option<u64>> {
        let mut out = vec![None; n];
        let mut last: Option<usize> = None;
        for i in 0..n {
            if row[i] {
                last = Some(i);
            }
            out[i] = last.map(|j| (i - j) as u64);
        }
        last = None;
        for i in (0..n).rev() {
            if row[i] {
                last = Some(i);
            }
            if let Some(j) = last {
                let d = (j - i) as u64;
                out[i] = Some(out[i].map_or(d, |e| e.min(d)));
            }
        }
        out
    };
    if grid.dim() == 1 {
        return row_pass(target).into_iter().map(|d| d.map_or(u64::MAX, |d| d * d)).collect();
    }
    let rows: Vec<Vec<Option<u64>>> = target.par_chunks(n).map(row_pass).collect();
    let mut out = vec![u64::MAX; n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(r, line)| {
        for (c, slot) in line.iter_mut().enumerate() {
            for (r2, row) in rows.iter().enumerate() {
                if let Some(g) = row[c] {
                    let dr = r.abs_diff(r2) as u64;
                    *slot = (*slot).min(g * g + dr * dr);
                }
            }
        }
    });
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverEntry {
    pub center: [f64; 2],
    pub side: f64,
    pub dist_over_diam: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WhitneyCover {
    grid: Grid,
    open_set: Vec<bool>,
    cubes: Vec<Cube>,
    /// `dist(Q, complement) / diam(Q)` per cube.
    ratios: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhitneyCheck {
    pub union_exact: bool,
    pub disjoint: bool,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Cubes outside `[c1, c2]` other than the unit-cell floor.
    pub violations: Vec<usize>,
    /// Unit cells adjacent to the complement in 2-D: every cover must contain
    /// such a cell (or a larger cube at the same distance), and its ratio is
    /// `1/sqrt(2)`.
    pub floor_cells: Vec<usize>,
    pub passed: bool,
}

impl WhitneyCover {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn open_set(&self) -> &[bool] {
        &self.open_set
    }

    pub fn cubes(&self) -> &[Cube] {
        &self.cubes
    }

    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn constants(&self) -> (f64, f64) {
        (WHITNEY_C1, WHITNEY_C2)
    }

    pub fn entries(&self) -> Vec<CoverEntry> {
        self.cubes
            .iter()
            .zip(&self.ratios)
            .map(|(q, &r)| CoverEntry { center: q.center(&self.grid), side: q.side(&self.grid), dist_over_diam: r })
            .collect()
    }

    /// Re-derives union, disjointness and the distance sandwich from scratch.
    pub fn check(&self) -> WhitneyCheck {
        let grid = &self.grid;
        let mut hits = vec![0u32; grid.len()];
        for q in &self.cubes {
            for p in q.points(grid) {
                hits[p] += 1;
            }
        }
        let union_exact = hits.iter().zip(&self.open_set).all(|(&k, &o)| (k > 0) == o);
        let disjoint = hits.iter().all(|&k| k <= 1);
        let complement: Vec<bool> = self.open_set.iter().map(|o| !o).collect();
        let d2 = squared_distance_to(grid, &complement);
        let ratios: Vec<f64> = self
            .cubes
            .par_iter()
            .map(|q| {
                let m = q.points(grid).into_iter().map(|p| d2[p]).min().unwrap_or(u64::MAX);
                cube_ratio(m, q.cells, grid.dim())
            })
            .collect();
        let mut violations = Vec::new();
        let mut floor_cells = Vec::new();
        for (i, (&r, q)) in ratios.iter().zip(&self.cubes).enumerate() {
            if (WHITNEY_C1..=WHITNEY_C2).contains(&r) {
                continue;
            }
            if q.cells == 1 && grid.dim() == 2 && r >= WHITNEY_C1 / 2f64.sqrt() {
                floor_cells.push(i);
            } else {
                violations.push(i);
            }
        }
        let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
        WhitneyCheck {
            union_exact,
            disjoint,
            min_ratio,
            max_ratio,
            passed: union_exact && disjoint && violations.is_empty(),
            violations,
            floor_cells,
        }
    }

    /// Largest number of dilated cubes `(1 + eps) Q` (same center) containing
    /// a single grid point.
    pub fn overlap_count(&self, eps: f64) -> usize {
        let grid = &self.grid;
        let n = grid.n() as f64;
        let mut hits = vec![0usize; grid.len()];
        for q in &self.cubes {
            let half = 0.5 * (1.0 + eps) * q.cells as f64;
            let mut ranges = [(0usize, 1usize); 2];
            for (a, range) in ranges.iter_mut().enumerate().take(grid.dim()) {
                let c = q.corner[a] as f64 + 0.5 * (q.cells as f64 - 1.0);
                // grid point i lies in the dilated cube iff its cell [i-1/2, i+1/2)
                // centre satisfies |i - c| < half
                let lo = (c - half).floor() + 1.0;
                let hi = (c + half).ceil() - 1.0;
                *range = (lo.max(0.0) as usize, (hi.min(n - 1.0) as usize) + 1);
            }
            for a in ranges[0].0..ranges[0].1 {
                for b in ranges[1].0..ranges[1].1 {
                    hits[grid.flat_index([a, b])] += 1;
                }
            }
        }
        hits.into_iter().max().unwrap_or(0)
    }
}

fn cube_ratio(min_d2: u64, cells: usize, dim: usize) -> f64 {
    if min_d2 == u64::MAX {
        f64::INFINITY
    } else {
        (min_d2 as f64).sqrt() / (cells as f64 * (dim as f64).sqrt())
    }
}

/// Whitney cover of `mask` by maximal dyadic cubes `Q` inside the set with
/// `dist(Q, complement) >= diam(Q)`. Maximality forces
/// `dist < 4 diam`; unit cells are always taken, which in 2-D admits the
/// floor ratio `1/sqrt(2)` next to the complement.
pub fn whitney(grid: &Grid, mask: &[bool], proper_subset_required: bool) -> Result<WhitneyCover> {
    if mask.len() != grid.len() {
        return Err(Error::Dimension(format!("mask has {} entries, grid {}", mask.len(), grid.len())));
    }
    let n = grid.n();
    let dim = grid.dim();
    let empty = WhitneyCover { grid: *grid, open_set: mask.to_vec(), cubes: Vec::new(), ratios: Vec::new() };
    if !mask.iter().any(|&b| b) {
        return Ok(empty);
    }
    if mask.iter().all(|&b| b) {
        if proper_subset_required {
            return Err(Error::Precondition("the set is the whole domain; no complement to measure against".into()));
        }
        let top = Cube { corner: [0, 0], cells: n, level: n.trailing_zeros() };
        return Ok(WhitneyCover { cubes: vec![top], ratios: vec![f64::INFINITY], ..empty });
    }
    let complement: Vec<bool> = mask.iter().map(|o| !o).collect();
    let d2 = squared_distance_to(grid, &complement);

    // per level: (min squared distance, any complement point) on the dyadic blocks
    let levels = n.trailing_zeros() as usize;
    let mut tree: Vec<Vec<(u64, bool)>> = Vec::with_capacity(levels + 1);
    tree.push(d2.iter().zip(&complement).map(|(&d, &c)| (d, c)).collect());
    for k in 1..=levels {
        let side = n >> k;
        let child_side = side * 2;
        let prev = &tree[k - 1];
        let merged: Vec<(u64, bool)> = (0..side.pow(dim as u32))
            .map(|b| {
                let (mut d, mut c) = (u64::MAX, false);
                let children: Vec<usize> = if dim == 1 {
                    vec![2 * b, 2 * b + 1]
                } else {
                    let (i, j) = (b / side, b % side);
                    vec![
                        2 * i * child_side + 2 * j,
                        2 * i * child_side + 2 * j + 1,
                        (2 * i + 1) * child_side + 2 * j,
                        (2 * i + 1) * child_side + 2 * j + 1,
                    ]
                };
                for ch in children {
                    d = d.min(prev[ch].0);
                    c |= prev[ch].1;
                }
                (d, c)
            })
            .collect();
        tree.push(merged);
    }

    let mut cubes = Vec::new();
    let mut ratios = Vec::new();
    let mut stack = vec![(levels, 0usize)];
    while let Some((k, b)) = stack.pop() {
        let side = n >> k;
        let cells = 1usize << k;
        let (min_d2, touches) = tree[k][b];
        let block = if dim == 1 { [b, 0] } else { [b / side, b % side] };
        let corner = [block[0] * cells, block[1] * cells];
        let fits = !touches && min_d2 >= (cells * cells * dim) as u64;
        if fits || (k == 0 && !touches) {
            cubes.push(Cube { corner, cells, level: k as u32 });
            ratios.push(cube_ratio(min_d2, cells, dim));
            continue;
        }
        if k == 0 {
            continue;
        }
        let child_side = side * 2;
        // push in reverse so cubes come out in index order
        let children: Vec<usize> = if dim == 1 {
            vec![2 * b, 2 * b + 1]
        } else {
            let (i, j) = (block[0], block[1]);
            vec![
                2 * i * child_side + 2 * j,
                2 * i * child_side + 2 * j + 1,
                (2 * i + 1) * child_side + 2 * j,
                (2 * i + 1) * child_side + 2 * j + 1,
            ]
        };
        for ch in children.into_iter().rev() {
            stack.push((k - 1, ch));
        }
    }
    Ok(WhitneyCover { cubes, ratios, ..empty })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BadPart {
    pub cube: Cube,
    /// Values of `b_j` on `cube.points(grid)`, in that order; zero elsewhere.
    pub values: Vec<Complex64>,
}

impl BadPart {
    pub fn to_function(&self, grid: &Grid) -> GridFunction {
        let mut v = vec![Complex64::new(0.0, 0.0); grid.len()];
        for (p, b) in self.cube.points(grid).into_iter().zip(&self.values) {
            v[p] = *b;
        }
        GridFunction::from_parts_unchecked(*grid, v)
    }

    pub fn integral(&self, grid: &Grid) -> Complex64 {
        let re = compensated_sum(self.values.iter().map(|v| v.re));
        let im = compensated_sum(self.values.iter().map(|v| v.im));
        Complex64::new(re, im) * grid.cell_measure()
    }

    pub fn l1_norm(&self, grid: &Grid) -> f64 {
        compensated_sum(self.values.iter().map(|v| v.norm())) * grid.cell_measure()
    }
}

#[derive(Debug, Clone)]
pub struct CzDecomposition {
    pub level: f64,
    pub good_part: GridFunction,
    pub bad_parts: Vec<BadPart>,
    pub omega: Vec<bool>,
    pub cover: WhitneyCover,
    /// `max |h| / lambda`.
    pub constant: f64,
}

impl CzDecomposition {
    /// `max_x |f - h - sum_j b_j|`.
    pub fn reconstruction_error(&self, f: &GridFunction) -> f64 {
        let grid = *f.grid();
        let mut sum: Vec<Complex64> = self.good_part.values().to_vec();
        for b in &self.bad_parts {
            for (p, v) in b.cube.points(&grid).into_iter().zip(&b.values) {
                sum[p] += v;
            }
        }
        sum.iter().zip(f.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn max_bad_integral(&self) -> f64 {
        let grid = *self.good_part.grid();
        self.bad_parts.iter().map(|b| b.integral(&grid).norm()).fold(0.0, f64::max)
    }

    pub fn bad_mass(&self) -> f64 {
        let grid = *self.good_part.grid();
        compensated_sum(self.bad_parts.iter().map(|b| b.l1_norm(&grid)))
    }
}

/// `f = h + sum_j b_j` over the Whitney cover of `{Mf > lambda}`: `h = f` off
/// the set and the cube average on each cube, `b_j = (f - avg_Q f) chi_Q`.
pub fn cz_decomposition(f: &GridFunction, lambda: f64, family: &CubeFamily) -> Result<CzDecomposition> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Parameter(format!("level must be positive, got {lambda}")));
    }
    let grid = *f.grid();
    let mf = maximal(f, family)?.re();
    let omega: Vec<bool> = mf.iter().map(|&v| v > lambda).collect();
    if omega.iter().all(|&b| b) {
        return Err(Error::Level(format!("Mf > {lambda} everywhere; raise the level above min Mf")));
    }
    let cover = whitney(&grid, &omega, true)?;
    let mut h = f.values().to_vec();
    let mut bad_parts = Vec::with_capacity(cover.len());
    for q in cover.cubes() {
        let pts = q.points(&grid);
        let k = pts.len() as f64;
        let avg = Complex64::new(
            compensated_sum(pts.iter().map(|&p| f.values()[p].re)) / k,
            compensated_sum(pts.iter().map(|&p| f.values()[p].im)) / k,
        );
        let values = pts.iter().map(|&p| f.values()[p] - avg).collect();
        for &p in &pts {
            h[p] = avg;
        }
        bad_parts.push(BadPart { cube: *q, values });
    }
    let good_part = GridFunction::new(grid, h)?;
    let constant = good_part.max_abs() / lambda;
    Ok(CzDecomposition { level: lambda, good_part, bad_parts, omega, cover, constant })
}

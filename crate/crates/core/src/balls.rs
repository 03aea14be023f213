//! Periodic balls `{y : |x - y|_torus < t}` and their moving sums.

use rayon::prelude::*;

use crate::grid::{compensated_sum, Grid};

/// One periodic ball `{y : |x - y|_torus < t}` as row offsets with symmetric
/// half widths (`None` marks a full row).
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct BallMask {
    grid: Grid,
    rows: Vec<(i64, Option<usize>)>,
    count: usize,
}

fn half_width_below(limit2: f64, a: i64, n: usize) -> Option<Option<usize>> {
    let rest = limit2 - (a * a) as f64;
    if rest <= 0.0 {
        return None;
    }
    let mut b = rest.sqrt().floor() as i64;
    while b >= 0 && ((b * b) as f64) >= rest {
        b -= 1;
    }
    if b < 0 {
        return None;
    }
    let b = b as usize;
    Some(if 2 * b + 1 >= n { None } else { Some(b) })
}

impl BallMask {
    pub(crate) fn new(grid: &Grid, t: f64) -> Self {
        let n = grid.n();
        let limit2 = (t / grid.spacing()).powi(2);
        let row_len = |w: Option<usize>| w.map_or(n, |b| 2 * b + 1);
        let mut rows = Vec::new();
        if grid.dim() == 1 {
            if let Some(w) = half_width_below(limit2, 0, n) {
                rows.push((0, w));
            }
        } else {
            let half = (n / 2) as i64;
            for a in -half + 1..=half {
                if let Some(w) = half_width_below(limit2, a, n) {
                    rows.push((a, w));
                }
            }
        }
        let count = rows.iter().map(|r| row_len(r.1)).sum();
        Self { grid: *grid, rows, count }
    }

    pub(crate) fn count(&self) -> usize {
        self.count
    }

    /// Whether the ball is the whole torus.
    pub(crate) fn is_full(&self) -> bool {
        self.count == self.grid.len()
    }

    /// `sum_{y in B(x)} e(y)` for every `x`.
    pub(crate) fn sum(&self, e: &[f64]) -> Vec<f64> {
        let grid = &self.grid;
        let n = grid.n();
        if grid.dim() == 1 {
            let Some(&(_, w)) = self.rows.first() else {
                return vec![0.0; n];
            };
            return match w {
                None => vec![compensated_sum(e.iter().copied()); n],
                Some(b) => (0..n)
                    .into_par_iter()
                    .map(|x| {
                        let mut acc = 0.0;
                        for m in 0..=2 * b {
                            acc += e[(x + n + m - b) % n];
                        }
                        acc
                    })
                    .collect(),
            };
        }
        // per-row prefix sums over three periods
        let prefix: Vec<Vec<f64>> = (0..n)
            .map(|r| {
                let row = &e[r * n..(r + 1) * n];
                let mut p = Vec::with_capacity(3 * n + 1);
                p.push(0.0);
                let mut acc = 0.0;
                for k in 0..3 * n {
                    acc += row[k % n];
                    p.push(acc);
                }
                p
            })
            .collect();
        let totals: Vec<f64> = (0..n).map(|r| compensated_sum(e[r * n..(r + 1) * n].iter().copied())).collect();
        (0..n * n)
            .into_par_iter()
            .map(|x| {
                let (i, j) = (x / n, x % n);
                let mut acc = 0.0;
                for &(a, w) in &self.rows {
                    let r = (i as i64 + a).rem_euclid(n as i64) as usize;
                    acc += match w {
                        None => totals[r],
                        Some(b) => prefix[r][j + n + b + 1] - prefix[r][j + n - b],
                    };
                }
                acc
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_masks_count_torus_points() {
        for (dim, n) in [(1, 64), (2, 16)] {
            let g = Grid::new(dim, n, 1.0).unwrap();
            for t in [g.spacing() * 1.0001, 0.3, 0.77, 1.2, 5.0] {
                let mask = BallMask::new(&g, t);
                let brute = (0..g.len()).filter(|&y| g.torus_distance(0, y) < t).count();
                assert_eq!(mask.count(), brute, "dim {dim} t {t}");
                // sums of an indicator reproduce the brute-force ball
                let e: Vec<f64> = (0..g.len()).map(|i| (i % 3) as f64).collect();
                let s = mask.sum(&e);
                for x in [0, 5, g.len() - 1] {
                    let want: f64 = (0..g.len()).filter(|&y| g.torus_distance(x, y) < t).map(|y| e[y]).sum();
                    assert!((s[x] - want).abs() < 1e-9);
                }
            }
        }
    }

}

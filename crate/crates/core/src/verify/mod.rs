//! The inequality harness: test families, measured ratios, fitted growth
//! exponents and the kernel-bound suite.
//!
//! Every empirical constant is a supremum over a finite family and hence a
//! lower bound for the true constant, so every pass/fail rule is one-sided.

mod checks;
mod kernels;

pub use checks::*;
pub use kernels::*;

use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::grid::{lp_norm, Grid, GridFunction, Weight};
use crate::spectral::{build_operator, synthesize_with, OperatorKind, SpectralOperator};
use crate::squarefuncs::{area_integral, g_function, g_star, ConeQuadrature, GStarParams, SquareKind, TimeGrid};
use crate::weights::{checker_weight, maximal_norm_estimate, power_weight, rubio_de_francia, CubeFamily};

/// Hex digest (16 characters) of a canonical description.
pub fn digest(text: &str) -> String {
    let h = Sha256::digest(text.as_bytes());
    h.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Operator plus the discretizations every check shares.
#[derive(Debug)]
pub struct Lab {
    op: Box<dyn SpectralOperator>,
    cone: ConeQuadrature,
    times: TimeGrid,
    cubes: CubeFamily,
    hermite_k: usize,
}

impl Lab {
    pub fn new(op: Box<dyn SpectralOperator>) -> Result<Self> {
        let grid = *op.grid();
        let times = TimeGrid::default_for(&grid)?;
        Self::with_times(op, times)
    }

    pub fn with_times(op: Box<dyn SpectralOperator>, times: TimeGrid) -> Result<Self> {
        let grid = *op.grid();
        let cone = ConeQuadrature::new(grid, times)?;
        let hermite_k = if op.kind() == OperatorKind::Hermite { op.frequencies().len() - 1 } else { 0 };
        Ok(Self { op, cone, times, cubes: CubeFamily::new(grid), hermite_k })
    }

    pub fn build(kind: OperatorKind, dim: usize, n: usize, half_width: f64, hermite_k: usize) -> Result<Self> {
        let grid = Grid::new(dim, n, half_width)?;
        Self::new(build_operator(kind, grid, hermite_k)?)
    }

    /// 1-D Laplacian on `[-pi, pi)`.
    pub fn laplacian(n: usize) -> Result<Self> {
        Self::build(OperatorKind::Laplacian, 1, n, PI, 0)
    }

    /// Hermite oscillator on `[-20, 20)` with `k` eigenfunctions.
    pub fn hermite(n: usize, k: usize) -> Result<Self> {
        Self::build(OperatorKind::Hermite, 1, n, 20.0, k)
    }

    pub fn op(&self) -> &dyn SpectralOperator {
        self.op.as_ref()
    }

    pub fn grid(&self) -> &Grid {
        self.op.grid()
    }

    pub fn cone(&self) -> &ConeQuadrature {
        &self.cone
    }

    pub fn times(&self) -> &TimeGrid {
        &self.times
    }

    pub fn cubes(&self) -> &CubeFamily {
        &self.cubes
    }

    pub fn label(&self) -> String {
        let g = self.grid();
        let mut s = format!("{} dim={} N={} R={}", self.op.kind(), g.dim(), g.n(), g.half_width());
        if self.hermite_k > 0 {
            s.push_str(&format!(" K={}", self.hermite_k));
        }
        s.push_str(&format!(
            " t=[{:e},r={:e},J={}]",
            self.times.t_min(),
            self.times.ratio(),
            self.times.count()
        ));
        s
    }

    /// Largest frequency of the smooth band filter applied to test families.
    pub fn band_cap(&self) -> f64 {
        match self.op.kind() {
            OperatorKind::Laplacian => 12.0 * PI / self.grid().half_width(),
            OperatorKind::Hermite => 0.5 * self.op.frequencies().iter().copied().fold(0.0, f64::max),
        }
    }

    pub fn apply(&self, t: Transform, f: &GridFunction) -> Result<GridFunction> {
        match t {
            Transform::Area(kind) => area_integral(kind, f, self.op(), &self.cone),
            Transform::G(kind) => g_function(kind, f, self.op(), &self.times),
            Transform::GStar(mu) => g_star(f, self.op(), &GStarParams::standard(self.grid().dim(), mu)?, &self.times),
        }
    }

    /// `T` applied to every member of a family.
    pub fn evaluate<'a>(&self, t: Transform, family: &'a TestFamily) -> Result<Evaluated<'a>> {
        let outputs = family.members.iter().map(|f| self.apply(t, f)).collect::<Result<Vec<_>>>()?;
        Ok(Evaluated { transform: t, family, outputs, context: format!("{} | {}", self.label(), family.description) })
    }
}

/// Sublinear operators the checks measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Transform {
    /// Conical square function (`s_h`, `s_p`, `S_H`, `S_P`).
    Area(SquareKind),
    /// Vertical g-function with the same slice.
    G(SquareKind),
    /// `g*_mu` with the standard compactly supported profile.
    GStar(f64),
}

impl Transform {
    pub fn label(&self) -> String {
        match self {
            Transform::Area(k) => k.label().to_string(),
            Transform::G(k) => match k {
                SquareKind::HorizontalHeat => "g_h".into(),
                SquareKind::HorizontalPoisson => "g_p".into(),
                SquareKind::VerticalHeat => "G_H".into(),
                SquareKind::VerticalPoisson => "G_P".into(),
            },
            Transform::GStar(mu) => format!("g*_{mu}"),
        }
    }

    /// The four conical square functions.
    pub fn areas() -> [Transform; 4] {
        SquareKind::ALL.map(Transform::Area)
    }
}

impl std::fmt::Display for Transform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Transform {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if let Some(mu) = s.strip_prefix("g*_").or_else(|| s.strip_prefix("gstar:")) {
            let mu: f64 = mu.parse().map_err(|_| Error::Parameter(format!("bad mu in {s:?}")))?;
            return Ok(Transform::GStar(mu));
        }
        match s {
            "g_h" => Ok(Transform::G(SquareKind::HorizontalHeat)),
            "g_p" => Ok(Transform::G(SquareKind::HorizontalPoisson)),
            "G_H" => Ok(Transform::G(SquareKind::VerticalHeat)),
            "G_P" => Ok(Transform::G(SquareKind::VerticalPoisson)),
            "s_h" | "s_p" | "S_H" | "S_P" => Ok(Transform::Area(s.parse()?)),
            other => Err(Error::Parameter(format!("unknown operator {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shape {
    /// Sum of random-signed Gaussians at random centres.
    Field,
    /// One Gaussian.
    Bump,
    /// Filtered unit delta.
    Spike,
    /// Modulated Gaussian.
    Packet,
}

/// Deterministic family of nonzero test functions, band-limited through the
/// operator's own functional calculus.
#[derive(Debug, Clone)]
pub struct TestFamily {
    pub seed: u64,
    pub members: Vec<GridFunction>,
    pub shapes: Vec<Shape>,
    pub description: String,
}

fn gaussian(x: [f64; 2], c: [f64; 2], sigma: f64, dim: usize) -> f64 {
    let d2: f64 = (0..dim).map(|a| (x[a] - c[a]).powi(2)).sum();
    (-d2 / (2.0 * sigma * sigma)).exp()
}

fn filtered(op: &dyn SpectralOperator, raw: &GridFunction, filter: impl Fn(f64) -> f64) -> Result<GridFunction> {
    let coeffs = op.project(raw)?;
    synthesize_with(op, &coeffs, filter)
}

impl TestFamily {
    /// `count` members cycling through fields, bumps, spikes and packets,
    /// smoothly filtered by `exp(-(s / cap)^4)`.
    pub fn mixed(lab: &Lab, seed: u64, count: usize) -> Result<Self> {
        let op = lab.op();
        let grid = *lab.grid();
        let dim = grid.dim();
        let r = grid.half_width();
        let cap = lab.band_cap();
        let ell = 2.0 / cap;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let order = [Shape::Field, Shape::Bump, Shape::Spike, Shape::Packet];
        let mut members = Vec::with_capacity(count);
        let mut shapes = Vec::with_capacity(count);
        for i in 0..count {
            let shape = order[i % 4];
            // centres on the R/32 lattice of the middle half, exact grid points for N >= 64
            let mut lattice = || r * (rng.gen_range(-16i32..16) as f64) / 32.0;
            let c = [lattice(), if dim == 2 { lattice() } else { 0.0 }];
            let raw = match shape {
                Shape::Field => {
                    let parts: Vec<([f64; 2], f64)> = (0..16)
                        .map(|_| {
                            let p = [rng.gen_range(-0.5..0.5) * r, if dim == 2 { rng.gen_range(-0.5..0.5) * r } else { 0.0 }];
                            (p, rng.gen_range(-1.0..1.0))
                        })
                        .collect();
                    GridFunction::from_real_fn(grid, |x| parts.iter().map(|(p, a)| a * gaussian(x, *p, ell, dim)).sum())?
                }
                Shape::Bump => {
                    let sigma = ell * rng.gen_range(0.5..2.0);
                    GridFunction::from_real_fn(grid, |x| gaussian(x, c, sigma, dim))?
                }
                Shape::Spike => {
                    let idx = grid.flat_index([grid.nearest_index(c[0]), grid.nearest_index(c[1])]);
                    GridFunction::delta(grid, idx)
                }
                Shape::Packet => {
                    let omega = cap * rng.gen_range(0.25..0.6);
                    let angle = if dim == 2 { rng.gen_range(0.0..PI) } else { 0.0 };
                    let phase = rng.gen_range(0.0..2.0 * PI);
                    let dir = [angle.cos(), angle.sin()];
                    GridFunction::from_real_fn(grid, |x| {
                        let s: f64 = (0..dim).map(|a| dir[a] * (x[a] - c[a])).sum();
                        (omega * s + phase).cos() * gaussian(x, c, 2.0 * ell, dim)
                    })?
                }
            };
            let f = filtered(op, &raw, |s| (-(s / cap).powi(4)).exp())?;
            if lp_norm(&f, 2.0)? == 0.0 {
                return Err(Error::RejectedInput(format!("family member {i} vanished")));
            }
            members.push(f);
            shapes.push(shape);
        }
        Ok(Self { seed, members, shapes, description: format!("mixed seed={seed} count={count} cap={cap:e}") })
    }

    /// Random fields with spectrum exactly inside `[s_lo, s_hi]`.
    pub fn band_limited(lab: &Lab, seed: u64, count: usize, s_lo: f64, s_hi: f64) -> Result<Self> {
        if !(s_lo >= 0.0 && s_hi > s_lo) {
            return Err(Error::Band(format!("invalid band [{s_lo}, {s_hi}]")));
        }
        let op = lab.op();
        let grid = *lab.grid();
        let dim = grid.dim();
        let r = grid.half_width();
        let ell = 1.0 / s_hi;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut members = Vec::with_capacity(count);
        for i in 0..count {
            let parts: Vec<([f64; 2], f64)> = (0..12)
                .map(|_| {
                    let p = [rng.gen_range(-0.5..0.5) * r, if dim == 2 { rng.gen_range(-0.5..0.5) * r } else { 0.0 }];
                    (p, rng.gen_range(-1.0..1.0))
                })
                .collect();
            let raw = GridFunction::from_real_fn(grid, |x| parts.iter().map(|(p, a)| a * gaussian(x, *p, ell, dim)).sum())?;
            let f = filtered(op, &raw, |s| if s >= s_lo && s <= s_hi { 1.0 } else { 0.0 })?;
            if lp_norm(&f, 2.0)? < 1e-12 * lp_norm(&raw, 2.0)? {
                return Err(Error::Band(format!("member {i} has no energy in [{s_lo}, {s_hi}]")));
            }
            members.push(f);
        }
        Ok(Self {
            seed,
            shapes: vec![Shape::Field; count],
            members,
            description: format!("band seed={seed} count={count} band=[{s_lo:e},{s_hi:e}]"),
        })
    }

    /// A family with given members.
    pub fn from_members(members: Vec<GridFunction>, description: &str) -> Self {
        Self { seed: 0, shapes: vec![Shape::Field; members.len()], members, description: description.to_string() }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// A family together with `T f` for each member.
#[derive(Debug, Clone)]
pub struct Evaluated<'a> {
    pub transform: Transform,
    pub family: &'a TestFamily,
    pub outputs: Vec<GridFunction>,
    context: String,
}

impl Evaluated<'_> {
    pub fn context(&self) -> &str {
        &self.context
    }
}

/// Weight generators: `const`, `power:a`, `checker:level`, `spike`, `rdf:seed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WeightSpec {
    Const,
    Power(f64),
    Checker(f64),
    Spike,
    Rdf(u64),
}

impl WeightSpec {
    /// The five weights of the standard `(f, w)` suite.
    pub fn standard() -> Vec<WeightSpec> {
        vec![WeightSpec::Const, WeightSpec::Power(-0.5), WeightSpec::Power(0.5), WeightSpec::Checker(10.0), WeightSpec::Spike]
    }

    pub fn build(&self, lab: &Lab) -> Result<Weight> {
        let grid = *lab.grid();
        let r = grid.half_width();
        match *self {
            WeightSpec::Const => Weight::constant(grid, 1.0),
            WeightSpec::Power(a) => power_weight(grid, a),
            WeightSpec::Checker(level) => checker_weight(grid, level, 8),
            WeightSpec::Spike => {
                let c = [0.75 * r, if grid.dim() == 2 { 0.75 * r } else { 0.0 }];
                Weight::from_fn(grid, |x| 0.01 + 50.0 * gaussian(x, c, r / 20.0, grid.dim()))
            }
            WeightSpec::Rdf(seed) => {
                let family = TestFamily::mixed(lab, seed, 1)?;
                let phi = GridFunction::from_real(grid, family.members[0].abs())?;
                let m_norm = maximal_norm_estimate(lab.cubes(), 2.0, seed)?;
                Ok(rubio_de_francia(&phi, 2.0, m_norm, 200, lab.cubes())?.weight)
            }
        }
    }
}

impl std::fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WeightSpec::Const => write!(f, "const"),
            WeightSpec::Power(a) => write!(f, "power:{a}"),
            WeightSpec::Checker(l) => write!(f, "checker:{l}"),
            WeightSpec::Spike => write!(f, "spike"),
            WeightSpec::Rdf(s) => write!(f, "rdf:{s}"),
        }
    }
}

impl FromStr for WeightSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parameter(format!("bad weight spec {s:?}"));
        let (head, arg) = s.split_once(':').map_or((s, None), |(a, b)| (a, Some(b)));
        match (head, arg) {
            ("const", None) => Ok(WeightSpec::Const),
            ("spike", None) => Ok(WeightSpec::Spike),
            ("power", Some(a)) => Ok(WeightSpec::Power(a.parse().map_err(|_| bad())?)),
            ("checker", Some(a)) => Ok(WeightSpec::Checker(a.parse().map_err(|_| bad())?)),
            ("rdf", Some(a)) => Ok(WeightSpec::Rdf(a.parse().map_err(|_| bad())?)),
            _ => Err(bad()),
        }
    }
}

/// Which `(member, weight, level)` produced a ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub member: usize,
    pub weight: Option<usize>,
    pub level: Option<f64>,
}

impl Witness {
    pub fn member(member: usize) -> Self {
        Self { member, weight: None, level: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub tag: String,
    pub ratios: Vec<f64>,
    pub witnesses: Vec<Witness>,
    pub sup_ratio: f64,
    /// Index into `ratios` of the supremum.
    pub witness: usize,
    pub skipped: usize,
    pub notes: Vec<String>,
    pub passed: bool,
    pub config_hash: String,
}

impl RatioReport {
    /// Report over finite non-negative ratios; passes when there is at least one.
    pub fn new(tag: String, ratios: Vec<f64>, witnesses: Vec<Witness>, skipped: usize, context: &str) -> Result<Self> {
        if let Some(bad) = ratios.iter().position(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::Accuracy(format!("{tag}: ratio {bad} is {}", ratios[bad])));
        }
        let (witness, sup_ratio) = ratios
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, r)| if r > acc.1 { (i, r) } else { acc });
        let sup_ratio = if ratios.is_empty() { 0.0 } else { sup_ratio };
        let mut notes = Vec::new();
        if skipped > 0 {
            notes.push(format!("{skipped} cases skipped (zero denominator)"));
        }
        Ok(Self {
            config_hash: digest(&format!("{tag} | {context}")),
            passed: !ratios.is_empty(),
            tag,
            ratios,
            witnesses,
            sup_ratio,
            witness,
            skipped,
            notes,
        })
    }

    pub fn sup_witness(&self) -> Option<Witness> {
        self.witnesses.get(self.witness).copied()
    }

    /// `sup / other.sup`, symmetric: always at least 1.
    pub fn stability_factor(&self, other: &RatioReport) -> f64 {
        let (a, b) = (self.sup_ratio, other.sup_ratio);
        if a == 0.0 && b == 0.0 {
            1.0
        } else {
            a.max(b) / a.min(b)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub tag: String,
    pub x_values: Vec<f64>,
    pub y_values: Vec<f64>,
    pub fitted_exponent: f64,
    /// 95% confidence interval of the slope.
    pub interval: (f64, f64),
    pub exponent_bound: f64,
    pub slack: f64,
    pub passed: bool,
    pub config_hash: String,
}

/// Least-squares slope, intercept and slope standard error of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let se = if x.len() > 2 { (rss / (n - 2.0) / sxx).sqrt() } else { f64::INFINITY };
    (slope, intercept, se)
}

impl GrowthFit {
    /// Log-log fit of `y` against `x`; passes when the slope is at most
    /// `bound + slack`.
    pub fn fit(tag: String, x: Vec<f64>, y: Vec<f64>, bound: f64, slack: f64, context: &str) -> Result<Self> {
        if x.len() < 4 || x.len() != y.len() {
            return Err(Error::StatisticalPower(format!("{tag}: a growth fit needs at least 4 points")));
        }
        if x.iter().chain(&y).any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Accuracy(format!("{tag}: growth data must be positive and finite")));
        }
        let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
        let (slope, _, se) = linear_fit(&lx, &ly);
        let q = StudentsT::new(0.0, 1.0, (x.len() - 2) as f64)
            .map_err(|e| Error::Parameter(e.to_string()))?
            .inverse_cdf(0.975);
        Ok(Self {
            config_hash: digest(&format!("{tag} | {context}")),
            passed: slope <= bound + slack,
            interval: (slope - q * se, slope + q * se),
            tag,
            x_values: x,
            y_values: y,
            fitted_exponent: slope,
            exponent_bound: bound,
            slack,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families_are_deterministic_and_resolved() {
        let lab = Lab::laplacian(128).unwrap();
        let a = TestFamily::mixed(&lab, 5, 8).unwrap();
        let b = TestFamily::mixed(&lab, 5, 8).unwrap();
        assert_eq!(a.members, b.members);
        assert_ne!(a.members, TestFamily::mixed(&lab, 6, 8).unwrap().members);
        for f in &a.members {
            assert!(f.max_imag() < 1e-12 * f.max_abs());
            crate::spectral::analyze(lab.op(), f).unwrap();
        }
    }

    #[test]
    fn families_sample_one_continuum_function() {
        let coarse = Lab::laplacian(128).unwrap();
        let fine = Lab::laplacian(256).unwrap();
        let a = TestFamily::mixed(&coarse, 2, 4).unwrap();
        let b = TestFamily::mixed(&fine, 2, 4).unwrap();
        for (fa, fb) in a.members.iter().zip(&b.members) {
            for i in 0..128 {
                assert!((fa.values()[i] - fb.values()[2 * i]).norm() < 1e-9 * fb.max_abs());
            }
        }
    }

    #[test]
    fn band_family_stays_in_band() {
        let lab = Lab::laplacian(128).unwrap();
        let fam = TestFamily::band_limited(&lab, 1, 3, 4.0, 9.0).unwrap();
        for f in &fam.members {
            let c = lab.op().project(f).unwrap();
            for (v, s) in c.iter().zip(lab.op().frequencies()) {
                if *s < 4.0 || *s > 9.0 {
                    assert!(v.norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn transform_and_weight_specs_parse() {
        for s in ["s_h", "S_P", "g_h", "G_H", "g*_3.5"] {
            assert_eq!(s.parse::<Transform>().unwrap().label(), s);
        }
        assert_eq!("gstar:4".parse::<Transform>().unwrap(), Transform::GStar(4.0));
        assert!("s_x".parse::<Transform>().is_err());
        for s in ["const", "power:-0.5", "checker:10", "spike", "rdf:3"] {
            assert_eq!(s.parse::<WeightSpec>().unwrap().to_string(), s);
        }
        assert!("power".parse::<WeightSpec>().is_err());
    }

    #[test]
    fn growth_fit_recovers_a_power_law() {
        let x = vec![2.0, 4.0, 8.0, 16.0, 32.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(0.4)).collect();
        let fit = GrowthFit::fit("t".into(), x.clone(), y, 0.5, 0.15, "").unwrap();
        assert!((fit.fitted_exponent - 0.4).abs() < 1e-12);
        assert!(fit.passed);
        let y: Vec<f64> = x.iter().map(|v: &f64| v.powf(0.7)).collect();
        assert!(!GrowthFit::fit("t".into(), x.clone(), y, 0.5, 0.15, "").unwrap().passed);
        assert!(matches!(GrowthFit::fit("t".into(), vec![1.0, 2.0, 3.0], vec![1.0; 3], 0.5, 0.1, ""), Err(Error::StatisticalPower(_))));
        // interval is exact-width for noisy data: y = x^0.5 * (1 + small wiggle)
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| v.sqrt() * (1.0 + 0.01 * (i as f64 - 2.0).powi(2))).collect();
        let fit = GrowthFit::fit("t".into(), x, y, 0.5, 0.15, "").unwrap();
        assert!(fit.interval.0 < fit.fitted_exponent && fit.fitted_exponent < fit.interval.1);
    }

    #[test]
    fn report_sup_and_witness() {
        let w = (0..3).map(Witness::member).collect();
        let r = RatioReport::new("x".into(), vec![0.5, 2.0, 1.0], w, 1, "ctx").unwrap();
        assert_eq!(r.sup_ratio, 2.0);
        assert_eq!(r.sup_witness().unwrap().member, 1);
        assert_eq!(r.config_hash.len(), 16);
        assert!(RatioReport::new("x".into(), vec![f64::NAN], vec![Witness::member(0)], 0, "").is_err());
    }
}

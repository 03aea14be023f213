use serde_json::{json, Value};

use sqfn_core::grid::Grid;
use sqfn_core::multipliers::{square_symbol, SymbolKind};
use sqfn_core::spectral::{build_operator, OperatorKind};
use sqfn_core::squarefuncs::TimeGrid;
use sqfn_core::verify::*;
use sqfn_core::{Result, Weight};

use crate::config::RunConfig;

pub struct CheckInfo {
    pub tag: &'static str,
    pub formula: &'static str,
    pub tolerance: &'static str,
    pub keys: &'static str,
}

pub const CHECKS: &[CheckInfo] = &[
    CheckInfo {
        tag: "spectral_identity",
        formula: "(sum_j ln(r) ||psi(t_j sqrt L) f||_2^2)^(1/2) = kappa ||f||_2, psi(z) = z^2 exp(-z^2), kappa^2 = int_0^inf psi(s)^2 ds/s",
        tolerance: "every member within 1 +- 0.02; band leak below 1e-10",
        keys: "band, seed, family_size",
    },
    CheckInfo {
        tag: "plancherel",
        formula: "||s f||_2 / ||f||_2 = sqrt(v_n) kappa (area integrals), ||g f||_2 / ||f||_2 = kappa (g-functions)",
        tolerance: "area integrals 1 +- 0.05, g-functions 1 +- 0.02",
        keys: "band, transforms, t_min, t_max, ratio",
    },
    CheckInfo {
        tag: "finite_propagation",
        formula: "cos(t sqrt L) f vanishes outside |x| <= t + supp f",
        tolerance: "mass outside t + 8 sigma + 4h below 1e-6 of ||f||_1 at 10 times",
        keys: "operator, N, R",
    },
    CheckInfo {
        tag: "kernel_bounds",
        formula: "heat |p_t| <= C t^(-n/2) exp(-d^2/(ct)) with gradient and time derivative; (t^2 L)^k Phi(t sqrt L) supported in d <= t with sup <= C t^-n; \
                  Psi(t sqrt L)(1 - Phi(r sqrt L)) <= C r/t^(n+1) (1 + d^2/t^2)^(-(n+1)/2); (t sqrt L)^2k exp(-t sqrt L) <= C t^-n (1 + d/t)^-(n+2k+1); \
                  t^(2k+1) grad L^k exp(-t^2 L) Gaussian, k = 0, 1, 2",
        tolerance: "fitted constants vary below 20% across scales; support leak below 1e-6",
        keys: "operator, N, R",
    },
    CheckInfo {
        tag: "whitney",
        formula: "maximal dyadic cubes Q of an open set with c1 diam Q <= dist(Q, complement) <= c2 diam Q, c1 = 1, c2 = 4",
        tolerance: "exact union and disjointness; ratio bounds on every cube except 2-D unit cells at the boundary",
        keys: "dim, N, whitney_masks, seed",
    },
    CheckInfo {
        tag: "cz",
        formula: "f = h + sum_j b_j, |h| <= C lambda, supp b_j in Q_j, int b_j = 0",
        tolerance: "reconstruction and bad-part integrals below 1e-12",
        keys: "dim, N",
    },
    CheckInfo {
        tag: "weighted_l2",
        formula: "int (Tf)^2 w <= C int |f|^2 Mw",
        tolerance: "finite sup ratio over the (f, w) suite",
        keys: "transforms, weights, mu, seed, family_size",
    },
    CheckInfo {
        tag: "lp_range",
        formula: "int (Tf)^p w <= C int |f|^p W, W = Mw (p <= 2), W = (Mw)^(p/2) w^(1-p/2) (p > 2)",
        tolerance: "finite sup ratio; p = 2 coincides with weighted_l2",
        keys: "transforms, weights, p_list, mu, seed, family_size",
    },
    CheckInfo {
        tag: "weak_1_1",
        formula: "lambda w({Tf > lambda}) <= C int |f| Mw",
        tolerance: "finite sup ratio over 16 levels; g* needs mu > 3",
        keys: "transforms, weights, mu, seed, family_size",
    },
    CheckInfo {
        tag: "domination",
        formula: "Tf(x) <= C g*_mu f(x)",
        tolerance: "finite sup ratio; at most 1% of points excluded where g* < 1e-14 max",
        keys: "transforms, mu, seed, family_size",
    },
    CheckInfo {
        tag: "growth_p",
        formula: "||T||_(L^p -> L^p) <= C p^(1/2)",
        tolerance: "log-log slope <= 0.5 + 0.15",
        keys: "transforms, growth_p_list, seed, family_size",
    },
    CheckInfo {
        tag: "growth_ap",
        formula: "||T||_(L^p_w) <= C ||w||_(A_p)^(beta_p + 1/(p-1)), beta_p = max(1/2, 1/(p-1))",
        tolerance: "log-log slope <= beta_p + 1/(p-1) + 0.2; constants must span a decade",
        keys: "transforms, p_list, seed, family_size",
    },
    CheckInfo {
        tag: "growth_a1",
        formula: "||T||_(L^2_w) <= C ||w||_(A_1)^(1/2)",
        tolerance: "log-log slope <= 0.5 + 0.2",
        keys: "transforms, seed, family_size",
    },
    CheckInfo {
        tag: "rdf",
        formula: "v = sum_k M^k phi / (2 ||M||)^k: phi <= v, ||v||_q <= 2 ||phi||_q, Mv <= 2 ||M|| v",
        tolerance: "all three inequalities on every seed",
        keys: "rdf_seeds",
    },
    CheckInfo {
        tag: "sharp_maximal",
        formula: "M#_lambda((g*_mu f)^2) <= C (Mf)^2",
        tolerance: "finite sup ratio; mu > 3",
        keys: "lambda, mu, seed, family_size",
    },
    CheckInfo {
        tag: "sharp_composite",
        formula: "||Mf||_(L^p_w) <= C ||M#_lambda_n(|f|^2)||_(L^(p/2)_w)^(1/2) ||w||_(A_p)^gamma, gamma = max(1/2, 1/(p-1)), lambda_n = 2^(-n-2)",
        tolerance: "finite sup ratio for p >= 2",
        keys: "weights, p_list, seed, family_size",
    },
];

pub fn find(tag: &str) -> Option<&'static CheckInfo> {
    CHECKS.iter().find(|c| c.tag == tag)
}

pub fn describe(tag: &str) -> std::result::Result<String, String> {
    let c = find(tag).ok_or_else(|| format!("unknown check {tag:?}; available: {}", tags().join(", ")))?;
    Ok(format!("{}\n  formula:   {}\n  tolerance: {}\n  keys:      {}\n", c.tag, c.formula, c.tolerance, c.keys))
}

pub fn tags() -> Vec<&'static str> {
    CHECKS.iter().map(|c| c.tag).collect()
}

/// One line of the JSON-lines report.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub check: String,
    pub tag: String,
    pub passed: bool,
    pub value: Option<f64>,
    pub body: Value,
    /// `(x, y)` columns for growth fits.
    pub series: Option<(Vec<f64>, Vec<f64>)>,
}

impl Record {
    fn new(check: &str, tag: String, passed: bool, value: Option<f64>, body: Value) -> Self {
        Self { check: check.into(), tag, passed, value, body, series: None }
    }

    fn error(check: &str, e: impl std::fmt::Display) -> Self {
        Self::new(check, check.into(), false, None, json!({ "error": e.to_string() }))
    }
}

fn ratio(check: &str, r: RatioReport) -> Record {
    Record::new(check, r.tag.clone(), r.passed, Some(r.sup_ratio), json!(r))
}

fn growth(check: &str, g: GrowthFit) -> Record {
    let series = Some((g.x_values.clone(), g.y_values.clone()));
    Record { series, ..Record::new(check, g.tag.clone(), g.passed, Some(g.fitted_exponent), json!(g)) }
}

pub fn build_lab(cfg: &RunConfig) -> Result<Lab> {
    let grid = Grid::new(cfg.dim, cfg.n, cfg.half_width)?;
    let op = build_operator(cfg.operator, grid, cfg.hermite_k)?;
    if cfg.t_min.is_none() && cfg.t_max.is_none() && cfg.ratio == sqfn_core::squarefuncs::DEFAULT_TIME_RATIO {
        return Lab::new(op);
    }
    let t_min = cfg.t_min.unwrap_or(2.0 * grid.spacing());
    let t_max = cfg.t_max.unwrap_or(grid.half_width().powi(2) / 4.0);
    Lab::with_times(op, TimeGrid::spanning(t_min, t_max, cfg.ratio)?)
}

fn default_band(lab: &Lab, low: bool) -> (f64, f64) {
    match (lab.op().kind(), low) {
        (OperatorKind::Laplacian, true) => (1.0, 2.0),
        (OperatorKind::Hermite, true) => (1.0, 5f64.sqrt()),
        (OperatorKind::Laplacian, false) => (5.0, 25.0),
        (OperatorKind::Hermite, false) => (3.0, 8.0),
    }
}

struct Context<'a> {
    cfg: &'a RunConfig,
    lab: Lab,
    family: TestFamily,
    weights: Vec<Weight>,
}

impl Context<'_> {
    fn each_transform(&self, check: &str, out: &mut Vec<Record>, mut f: impl FnMut(&Evaluated) -> Result<Vec<Record>>) {
        for &t in &self.cfg.transforms {
            match self.lab.evaluate(t, &self.family).and_then(|ev| f(&ev)) {
                Ok(records) => out.extend(records),
                Err(e) => out.push(Record::error(check, format!("{t}: {e}"))),
            }
        }
    }
}

fn cz_sample(x: [f64; 2]) -> f64 {
    let bump = |c: [f64; 2], s: f64| (-((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)) / (2.0 * s * s)).exp();
    4.0 * bump([0.3, -0.2], 0.05) + 2.0 * bump([-0.5, 0.4], 0.1) + (3.0 * x[0]).sin().abs()
}

/// Runs the configured checks in order; failures inside a check become
/// failed records.
pub fn run_checks(cfg: &RunConfig) -> Vec<Record> {
    if cfg.checks.is_empty() {
        return Vec::new();
    }
    let ctx = match build_lab(cfg).and_then(|lab| {
        let family = TestFamily::mixed(&lab, cfg.seed, cfg.family_size)?;
        let weights = cfg.weights.iter().map(|w| w.build(&lab)).collect::<Result<Vec<_>>>()?;
        Ok(Context { cfg, lab, family, weights })
    }) {
        Ok(c) => c,
        Err(e) => return vec![Record::error("setup", e)],
    };
    let mut out = Vec::new();
    for check in &cfg.checks {
        let before = out.len();
        if let Err(e) = run_one(&ctx, check, &mut out) {
            out.truncate(before);
            out.push(Record::error(check, e));
        }
    }
    out
}

fn run_one(ctx: &Context, check: &str, out: &mut Vec<Record>) -> Result<()> {
    let (cfg, lab) = (ctx.cfg, &ctx.lab);
    match check {
        "spectral_identity" => {
            let band = cfg.band.unwrap_or_else(|| default_band(lab, false));
            let fam = TestFamily::band_limited(lab, cfg.seed, cfg.family_size, band.0, band.1)?;
            out.push(ratio(check, spectral_identity(lab, &square_symbol(SymbolKind::Sh), &fam, band)?));
        }
        "plancherel" => {
            let band = cfg.band.unwrap_or_else(|| default_band(lab, true));
            let fam = TestFamily::band_limited(lab, cfg.seed, cfg.family_size, band.0, band.1)?;
            for &t in cfg.transforms.iter().filter(|t| !matches!(t, Transform::GStar(_))) {
                out.push(ratio(check, plancherel(lab, t, &fam)?));
            }
        }
        "finite_propagation" => {
            let r = finite_propagation(lab, 10)?;
            let worst = r.leaks.iter().copied().fold(0.0, f64::max);
            out.push(Record::new(check, check.into(), r.passed, Some(worst), json!(r)));
        }
        "kernel_bounds" => {
            for f in kernel_bound_suite(lab)?.fits {
                out.push(Record::new(check, format!("kernel/{}", f.tag), f.passed, Some(f.spread), json!(f)));
            }
        }
        "whitney" => {
            let s = whitney_random_masks(*lab.grid(), cfg.whitney_masks, cfg.seed)?;
            let worst = s.checks.iter().map(|c| c.max_ratio).fold(0.0, f64::max);
            out.push(Record::new(check, check.into(), s.passed, Some(worst), json!(s)));
        }
        "cz" => {
            let grid = Grid::new(cfg.dim, cfg.n, 1.0)?;
            let r = cz_report(grid, cz_sample, 1.2)?;
            let passed = r.reconstruction_error <= 1e-12 && r.max_bad_integral <= 1e-12;
            out.push(Record::new(check, check.into(), passed, Some(r.constant), json!(r)));
        }
        "weighted_l2" => ctx.each_transform(check, out, |ev| Ok(vec![ratio(check, weighted_l2_mw(lab, ev, &ctx.weights)?)])),
        "lp_range" => ctx.each_transform(check, out, |ev| {
            cfg.p_list.iter().map(|&p| Ok(ratio(check, lp_range(lab, ev, &ctx.weights, p)?))).collect()
        }),
        "weak_1_1" => {
            ctx.each_transform(check, out, |ev| Ok(vec![ratio(check, weak_1_1(lab, ev, &ctx.weights, &default_levels())?)]))
        }
        "domination" => ctx.each_transform(check, out, |ev| {
            if matches!(ev.transform, Transform::GStar(_)) {
                return Ok(Vec::new());
            }
            Ok(vec![ratio(check, pointwise_domination(lab, ev, cfg.mu)?)])
        }),
        "growth_p" => ctx.each_transform(check, out, |ev| Ok(vec![growth(check, growth_in_p(ev, &cfg.growth_p_list)?)])),
        "growth_ap" => ctx.each_transform(check, out, |ev| {
            cfg.p_list.iter().map(|&p| Ok(growth(check, growth_in_ap(lab, ev, p, &default_ap_exponents(p))?))).collect()
        }),
        "growth_a1" => {
            ctx.each_transform(check, out, |ev| Ok(vec![growth(check, growth_in_a1(lab, ev, &default_a1_exponents())?)]))
        }
        "rdf" => {
            let seeds: Vec<u64> = (1..=cfg.rdf_seeds as u64).collect();
            let s = rdf_certificates(lab, &seeds, 2.0)?;
            let worst = s.certificates.iter().map(|c| c.norm_ratio).fold(0.0, f64::max);
            out.push(Record::new(check, check.into(), s.passed, Some(worst), json!(s)));
        }
        "sharp_maximal" => {
            let lambda = cfg.lambda.unwrap_or_else(|| sharp_lambda(cfg.dim));
            out.push(ratio(check, sharp_maximal_domination(lab, &ctx.family, lambda, cfg.mu)?));
        }
        "sharp_composite" => {
            for &p in cfg.p_list.iter().filter(|p| **p >= 2.0) {
                out.push(ratio(check, sharp_maximal_composite(lab, &ctx.family, &ctx.weights, p)?));
            }
        }
        other => unreachable!("config validation admits only registered checks, got {other}"),
    }
    Ok(())
}

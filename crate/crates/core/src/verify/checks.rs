use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{digest, Evaluated, GrowthFit, Lab, RatioReport, TestFamily, Transform, Witness};
use crate::decomp::{cz_decomposition, whitney, WhitneyCheck};
use crate::error::{Error, Result};
use crate::grid::{compensated_sum, lp_norm, weighted_lp_norm, weighted_superlevel_measure, Grid, GridFunction, Weight};
use crate::multipliers::{kappa, MultiplierProfile};
use crate::spectral::analyze;
use crate::squarefuncs::{log_time_energy, TimeGrid, DEFAULT_TIME_RATIO};
use crate::tolerances::*;
use crate::weights::{
    ap_constant, local_sharp_maximal, maximal, maximal_norm_estimate, maximal_weight, power_weight, rubio_de_francia,
    CubeFamily, RdfCertificate,
};

fn integral(grid: &Grid, values: impl Iterator<Item = f64>) -> f64 {
    compensated_sum(values) * grid.cell_measure()
}

fn pow(x: f64, p: f64) -> f64 {
    if p == 2.0 {
        x * x
    } else {
        x.powf(p)
    }
}

/// `int (Tf)^p w / int |f|^p W` with the majorant `W = Mw` for `p <= 2` and
/// `W = (Mw)^{p/2} w^{1-p/2}` for `p > 2`.
fn majorant_ratios(lab: &Lab, ev: &Evaluated, weights: &[Weight], p: f64) -> Result<(Vec<f64>, Vec<Witness>, usize)> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Parameter(format!("p must exceed 1, got {p}")));
    }
    let grid = *lab.grid();
    let mut ratios = Vec::new();
    let mut witnesses = Vec::new();
    let mut skipped = 0;
    for (wi, w) in weights.iter().enumerate() {
        if p > 2.0 && !w.is_strictly_positive() {
            return Err(Error::SingularWeight(format!("weight {wi} vanishes somewhere; p = {p} needs w > 0")));
        }
        let mw = maximal_weight(w, lab.cubes())?;
        let major: Vec<f64> = if p > 2.0 {
            mw.values().iter().zip(w.values()).map(|(m, v)| m.powf(p / 2.0) * v.powf(1.0 - p / 2.0)).collect()
        } else {
            mw.values().to_vec()
        };
        for (fi, (f, tf)) in ev.family.members.iter().zip(&ev.outputs).enumerate() {
            let den = integral(&grid, f.abs().into_iter().zip(&major).map(|(a, m)| pow(a, p) * m));
            if den == 0.0 {
                skipped += 1;
                continue;
            }
            let num = integral(&grid, tf.abs().into_iter().zip(w.values()).map(|(a, v)| pow(a, p) * v));
            ratios.push(num / den);
            witnesses.push(Witness { member: fi, weight: Some(wi), level: None });
        }
    }
    Ok((ratios, witnesses, skipped))
}

/// `int (Tf)^2 w / int |f|^2 Mw` over all `(f, w)`.
pub fn weighted_l2_mw(lab: &Lab, ev: &Evaluated, weights: &[Weight]) -> Result<RatioReport> {
    let (r, w, s) = majorant_ratios(lab, ev, weights, 2.0)?;
    RatioReport::new(format!("weighted_l2_mw/{}", ev.transform), r, w, s, ev.context())
}

/// The `L^p` majorant ratios; `p = 2` is the same formula as [`weighted_l2_mw`].
pub fn lp_range(lab: &Lab, ev: &Evaluated, weights: &[Weight], p: f64) -> Result<RatioReport> {
    let (r, w, s) = majorant_ratios(lab, ev, weights, p)?;
    RatioReport::new(format!("lp_range/{}/p={p}", ev.transform), r, w, s, ev.context())
}

/// `lambda w{Tf > lambda} / int |f| Mw` with `lambda = q max(Tf)` for each
/// relative level `q`.
pub fn weak_1_1(lab: &Lab, ev: &Evaluated, weights: &[Weight], levels: &[f64]) -> Result<RatioReport> {
    if let Transform::GStar(mu) = ev.transform {
        if mu <= 3.0 {
            return Err(Error::Precondition(format!("weak type (1,1) of g* needs mu > 3, got {mu}")));
        }
    }
    let grid = *lab.grid();
    let mut ratios = Vec::new();
    let mut witnesses = Vec::new();
    let mut skipped = 0;
    for (wi, w) in weights.iter().enumerate() {
        let mw = maximal_weight(w, lab.cubes())?;
        for (fi, (f, tf)) in ev.family.members.iter().zip(&ev.outputs).enumerate() {
            let den = integral(&grid, f.abs().into_iter().zip(mw.values()).map(|(a, m)| a * m));
            let top = tf.max_abs();
            if den == 0.0 || top == 0.0 {
                skipped += levels.len();
                continue;
            }
            for &q in levels {
                let lambda = q * top;
                let num = lambda * weighted_superlevel_measure(tf, w, lambda)?;
                ratios.push(num / den);
                witnesses.push(Witness { member: fi, weight: Some(wi), level: Some(lambda) });
            }
        }
    }
    RatioReport::new(format!("weak_1_1/{}", ev.transform), ratios, witnesses, skipped, ev.context())
}

/// Default relative levels for weak-type scans.
pub fn default_levels() -> Vec<f64> {
    (0..16).map(|i| 0.02 * (50.0f64).powf(i as f64 / 15.0)).collect()
}

/// `max_x Tf(x) / g*_mu f(x)` per member, excluding points where `g*` is
/// below `1e-14` of its maximum.
pub fn pointwise_domination(lab: &Lab, ev: &Evaluated, mu: f64) -> Result<RatioReport> {
    let star = lab.evaluate(Transform::GStar(mu), ev.family)?;
    let mut ratios = Vec::new();
    let mut witnesses = Vec::new();
    let mut skipped = 0;
    let mut excluded = 0usize;
    let mut total = 0usize;
    for (fi, (tf, gs)) in ev.outputs.iter().zip(&star.outputs).enumerate() {
        let g = gs.re();
        let top = g.iter().copied().fold(0.0, f64::max);
        if top == 0.0 {
            skipped += 1;
            continue;
        }
        let mut best = 0.0_f64;
        for (t, s) in tf.re().into_iter().zip(&g) {
            total += 1;
            if *s < DOMINATION_FLOOR * top {
                excluded += 1;
            } else {
                best = best.max(t / s);
            }
        }
        ratios.push(best);
        witnesses.push(Witness::member(fi));
    }
    let fraction = if total > 0 { excluded as f64 / total as f64 } else { 0.0 };
    if fraction > DOMINATION_EXCLUSION {
        return Err(Error::InconclusivePoints(format!("{:.2}% of points excluded", 100.0 * fraction)));
    }
    let mut r = RatioReport::new(format!("domination/{}/mu={mu}", ev.transform), ratios, witnesses, skipped, ev.context())?;
    r.notes.push(format!("excluded fraction {fraction:e}"));
    Ok(r)
}

/// Slope of `log max_f ||Tf||_p / ||f||_p` against `log p`.
pub fn growth_in_p(ev: &Evaluated, p_list: &[f64]) -> Result<GrowthFit> {
    if ev.family.len() < 8 {
        return Err(Error::StatisticalPower(format!("family has {} members, need 8", ev.family.len())));
    }
    if p_list.len() < 4 || p_list.iter().any(|p| !(2.0..=64.0).contains(p)) {
        return Err(Error::Parameter("growth in p needs at least 4 exponents in [2, 64]".into()));
    }
    let mut y = Vec::with_capacity(p_list.len());
    for &p in p_list {
        let mut best = 0.0_f64;
        for (f, tf) in ev.family.members.iter().zip(&ev.outputs) {
            best = best.max(lp_norm(tf, p)? / lp_norm(f, p)?);
        }
        y.push(best);
    }
    GrowthFit::fit(format!("growth_p/{}", ev.transform), p_list.to_vec(), y, 0.5, GROWTH_P_SLACK, ev.context())
}

/// `beta_p + 1/(p-1)` with `beta_p = max(1/2, 1/(p-1))`.
pub fn ap_growth_exponent(p: f64) -> f64 {
    0.5f64.max(1.0 / (p - 1.0)) + 1.0 / (p - 1.0)
}

fn weighted_growth(
    lab: &Lab,
    ev: &Evaluated,
    exponents: &[f64],
    p: f64,
    constant: impl Fn(&Weight) -> Result<f64>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for &a in exponents {
        let w = power_weight(*lab.grid(), a)?;
        let mut best = 0.0_f64;
        for (f, tf) in ev.family.members.iter().zip(&ev.outputs) {
            best = best.max(weighted_lp_norm(tf, &w, p)? / weighted_lp_norm(f, &w, p)?);
        }
        x.push(constant(&w)?);
        y.push(best);
    }
    let (lo, hi) = x.iter().fold((f64::INFINITY, 0.0_f64), |(l, h), v| (l.min(*v), h.max(*v)));
    if hi < AP_SPAN * lo {
        return Err(Error::Span(format!("weight constants span only [{lo:.3}, {hi:.3}]")));
    }
    Ok((x, y))
}

/// Slope of `log ||T||_{L^p_w}` against `log ||w||_{A_p}` over power weights
/// `(|x| + h)^a`.
pub fn growth_in_ap(lab: &Lab, ev: &Evaluated, p: f64, exponents: &[f64]) -> Result<GrowthFit> {
    if !(p > 1.0) {
        return Err(Error::Parameter(format!("p must exceed 1, got {p}")));
    }
    let (x, y) = weighted_growth(lab, ev, exponents, p, |w| Ok(ap_constant(w, p, lab.cubes())?.constant))?;
    GrowthFit::fit(format!("growth_ap/{}/p={p}", ev.transform), x, y, ap_growth_exponent(p), GROWTH_AP_SLACK, ev.context())
}

/// Slope of `log ||T||_{L^2_w}` against `log ||w||_{A_1}`.
pub fn growth_in_a1(lab: &Lab, ev: &Evaluated, exponents: &[f64]) -> Result<GrowthFit> {
    let (x, y) = weighted_growth(lab, ev, exponents, 2.0, |w| Ok(ap_constant(w, 1.0, lab.cubes())?.constant))?;
    GrowthFit::fit(format!("growth_a1/{}", ev.transform), x, y, 0.5, GROWTH_AP_SLACK, ev.context())
}

/// Power exponents for `A_p` growth fits. The regularization `(|x| + h)^a`
/// keeps every exponent in `A_p`; those past the continuum range
/// `(-n, n(p - 1))` supply constants growing like a power of `N`.
pub fn default_ap_exponents(p: f64) -> Vec<f64> {
    let top = p - 1.0;
    [-2.5, -2.0, -1.5, -1.0, -0.5, 0.0].into_iter().chain([0.5, 1.0, 1.5, 2.0, 2.5].map(|s| s * top)).collect()
}

/// Non-positive power exponents for `A_1` growth fits.
pub fn default_a1_exponents() -> Vec<f64> {
    vec![-2.5, -2.0, -1.5, -1.0, -0.75, -0.5, -0.25, 0.0]
}

/// `max_x M#_lambda((g* f)^2)(x) / Mf(x)^2` per member.
pub fn sharp_maximal_domination(lab: &Lab, family: &TestFamily, lambda: f64, mu: f64) -> Result<RatioReport> {
    if mu <= 3.0 {
        return Err(Error::Precondition(format!("needs mu > 3, got {mu}")));
    }
    let star = lab.evaluate(Transform::GStar(mu), family)?;
    let grid = *lab.grid();
    let mut ratios = Vec::new();
    let mut witnesses = Vec::new();
    for (fi, (f, gs)) in family.members.iter().zip(&star.outputs).enumerate() {
        let sq = GridFunction::from_real(grid, gs.re().iter().map(|v| v * v).collect())?;
        let sharp = local_sharp_maximal(&sq, lambda, lab.cubes())?.re();
        let mf = maximal(f, lab.cubes())?.re();
        let r = sharp.iter().zip(&mf).map(|(s, m)| s / (m * m)).fold(0.0, f64::max);
        ratios.push(r);
        witnesses.push(Witness::member(fi));
    }
    RatioReport::new(format!("sharp_maximal/lambda={lambda}/mu={mu}"), ratios, witnesses, 0, star.context())
}

/// `lambda_n = 2^{-n-2}`.
pub fn sharp_lambda(dim: usize) -> f64 {
    0.5f64.powi(dim as i32 + 2)
}

/// `||Mf||_{L^p_w} / (||M#_{lambda_n}(|f|^2)||_{L^{p/2}_w}^{1/2} ||w||_{A_p}^gamma)`,
/// `gamma = max(1/2, 1/(p-1))`, over all `(f, w)`; needs `p >= 2`.
pub fn sharp_maximal_composite(lab: &Lab, family: &TestFamily, weights: &[Weight], p: f64) -> Result<RatioReport> {
    if !(p >= 2.0 && p.is_finite()) {
        return Err(Error::Parameter(format!("composite check needs p >= 2, got {p}")));
    }
    let grid = *lab.grid();
    let gamma = 0.5f64.max(1.0 / (p - 1.0));
    let lambda = sharp_lambda(grid.dim());
    let mut ratios = Vec::new();
    let mut witnesses = Vec::new();
    let mut skipped = 0;
    let parts: Vec<(GridFunction, GridFunction)> = family
        .members
        .iter()
        .map(|f| {
            let sq = GridFunction::from_real(grid, f.abs().iter().map(|v| v * v).collect())?;
            Ok((maximal(f, lab.cubes())?, local_sharp_maximal(&sq, lambda, lab.cubes())?))
        })
        .collect::<Result<_>>()?;
    for (wi, w) in weights.iter().enumerate() {
        let a = ap_constant(w, p, lab.cubes())?.constant;
        for (fi, (mf, sharp)) in parts.iter().enumerate() {
            let rhs = weighted_lp_norm(sharp, w, p / 2.0)?.sqrt() * a.powf(gamma);
            if rhs == 0.0 {
                skipped += 1;
                continue;
            }
            ratios.push(weighted_lp_norm(mf, w, p)? / rhs);
            witnesses.push(Witness { member: fi, weight: Some(wi), level: None });
        }
    }
    let context = format!("{} | {} | gamma={gamma}", lab.label(), family.description);
    RatioReport::new(format!("sharp_composite/p={p}"), ratios, witnesses, skipped, &context)
}

/// Fraction of `||f||^2` outside `[s_lo, s_hi]`.
pub fn band_leak(lab: &Lab, f: &GridFunction, s_lo: f64, s_hi: f64) -> Result<f64> {
    let c = analyze(lab.op(), f)?;
    let mut inside = Vec::new();
    let mut outside = Vec::new();
    for (v, s) in c.iter().zip(lab.op().frequencies()) {
        if *s >= s_lo && *s <= s_hi {
            inside.push(v.norm_sqr());
        } else {
            outside.push(v.norm_sqr());
        }
    }
    let out = compensated_sum(outside);
    let total = out + compensated_sum(inside);
    Ok(if total > 0.0 { out / total } else { 0.0 })
}

/// `(sum_j ln r ||psi(t_j sqrt(L)) f||^2)^{1/2} / (kappa ||f||_2)` on a time
/// grid built for the band `[s_lo, s_hi]`.
pub fn spectral_identity(lab: &Lab, psi: &MultiplierProfile, family: &TestFamily, band: (f64, f64)) -> Result<RatioReport> {
    let (s_lo, s_hi) = band;
    let times = TimeGrid::for_band(psi, s_lo, s_hi, DEFAULT_TIME_RATIO, 1e-4)?;
    let k = kappa(psi)?;
    let mut ratios = Vec::new();
    let mut witnesses = Vec::new();
    let mut skipped = 0;
    for (fi, f) in family.members.iter().enumerate() {
        let norm = lp_norm(f, 2.0)?;
        if norm == 0.0 {
            skipped += 1;
            continue;
        }
        let leak = band_leak(lab, f, s_lo, s_hi)?;
        if leak > BAND_LEAK {
            return Err(Error::Band(format!("member {fi} leaves {leak:e} of its energy outside [{s_lo}, {s_hi}]")));
        }
        ratios.push(log_time_energy(lab.op(), psi, f, &times)?.sqrt() / (k * norm));
        witnesses.push(Witness::member(fi));
    }
    let context = format!("{} | {} | psi={}", lab.label(), family.description, psi.tag());
    let mut r = RatioReport::new(format!("spectral_identity/{}", psi.tag()), ratios, witnesses, skipped, &context)?;
    r.passed = !r.ratios.is_empty() && r.ratios.iter().all(|v| (v - 1.0).abs() <= IDENTITY_WINDOW);
    r.notes.push(format!("kappa = {k:.12}, {} time nodes", times.count()));
    Ok(r)
}

/// Volume of the unit ball.
pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        _ => std::f64::consts::PI,
    }
}

/// `||T f|| / ||f||` against `sqrt(v_n) kappa` (area integrals) or `kappa`
/// (g-functions) for the slice of `T`.
pub fn plancherel(lab: &Lab, t: Transform, family: &TestFamily) -> Result<RatioReport> {
    let (kind, expected, window) = match t {
        Transform::Area(k) => (k, unit_ball_volume(lab.grid().dim()).sqrt(), AREA_PLANCHEREL_WINDOW),
        Transform::G(k) => (k, 1.0, G_PLANCHEREL_WINDOW),
        Transform::GStar(_) => return Err(Error::Parameter("no closed-form L^2 constant for g*".into())),
    };
    let expected = expected * kappa(&kind.energy_profile())?;
    let ev = lab.evaluate(t, family)?;
    let ratios = family
        .members
        .iter()
        .zip(&ev.outputs)
        .map(|(f, tf)| Ok(lp_norm(tf, 2.0)? / lp_norm(f, 2.0)? / expected))
        .collect::<Result<Vec<f64>>>()?;
    let witnesses = (0..ratios.len()).map(Witness::member).collect();
    let mut r = RatioReport::new(format!("plancherel/{t}"), ratios, witnesses, 0, ev.context())?;
    r.passed = r.ratios.iter().all(|v| (v - 1.0).abs() <= window);
    r.notes.push(format!("expected ||Tf||/||f|| = {expected:.12}"));
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdfSuite {
    pub seeds: Vec<u64>,
    pub certificates: Vec<RdfCertificate>,
    pub passed: bool,
}

/// Rubio de Francia weights from random `phi` for each seed, with their
/// certificates.
pub fn rdf_certificates(lab: &Lab, seeds: &[u64], q: f64) -> Result<RdfSuite> {
    let grid = *lab.grid();
    let m_norm = maximal_norm_estimate(lab.cubes(), q, 7)?;
    let mut certificates = Vec::new();
    for &seed in seeds {
        let fam = TestFamily::mixed(lab, seed, 1 + (seed as usize % 4))?;
        let f = fam.members.last().expect("nonempty family");
        let phi = GridFunction::from_real(grid, f.abs())?;
        certificates.push(rubio_de_francia(&phi, q, m_norm, 400, lab.cubes())?.certificate);
    }
    Ok(RdfSuite { seeds: seeds.to_vec(), passed: certificates.iter().all(|c| c.passed), certificates })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhitneySuite {
    pub checks: Vec<WhitneyCheck>,
    pub passed: bool,
    pub config_hash: String,
}

/// Whitney covers of `count` random masks (clustered blobs of varied density).
pub fn whitney_random_masks(grid: Grid, count: usize, seed: u64) -> Result<WhitneySuite> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::with_capacity(count);
    for _ in 0..count {
        let density = rng.gen_range(0.05..0.9);
        let blobs: Vec<([f64; 2], f64)> = (0..rng.gen_range(1..6))
            .map(|_| {
                let r = grid.half_width();
                ([rng.gen_range(-r..r), rng.gen_range(-r..r)], rng.gen_range(0.05..0.5) * r)
            })
            .collect();
        let mut mask: Vec<bool> = (0..grid.len())
            .map(|i| {
                let x = grid.point(i);
                let inside = blobs.iter().any(|(c, rad)| {
                    let d2: f64 = (0..grid.dim()).map(|a| (x[a] - c[a]).powi(2)).sum();
                    d2 < rad * rad
                });
                inside || rng.gen_bool(density * 0.2)
            })
            .collect();
        let hole = rng.gen_range(0..grid.len());
        mask[hole] = false;
        checks.push(whitney(&grid, &mask, true)?.check());
    }
    Ok(WhitneySuite {
        passed: checks.iter().all(|c| c.passed),
        checks,
        config_hash: digest(&format!("whitney | {grid:?} | count={count} seed={seed}")),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CzReport {
    pub n: usize,
    pub level: f64,
    pub cubes: usize,
    pub reconstruction_error: f64,
    pub max_bad_integral: f64,
    pub bad_mass_ratio: f64,
    pub constant: f64,
}

/// Calderón–Zygmund decomposition of `f` (sampled on an `n`-point grid) at
/// `lambda`.
pub fn cz_report(grid: Grid, f: impl Fn([f64; 2]) -> f64, lambda: f64) -> Result<CzReport> {
    let g = GridFunction::from_real_fn(grid, f)?;
    let cz = cz_decomposition(&g, lambda, &CubeFamily::new(grid))?;
    Ok(CzReport {
        n: grid.n(),
        level: lambda,
        cubes: cz.bad_parts.len(),
        reconstruction_error: cz.reconstruction_error(&g),
        max_bad_integral: cz.max_bad_integral(),
        bad_mass_ratio: cz.bad_mass() / lp_norm(&g, 1.0)?,
        constant: cz.constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multipliers::{square_symbol, SymbolKind};
    use crate::squarefuncs::SquareKind;
    use crate::verify::WeightSpec;

    fn small() -> (Lab, TestFamily) {
        let lab = Lab::laplacian(128).unwrap();
        let fam = TestFamily::mixed(&lab, 1, 4).unwrap();
        (lab, fam)
    }

    #[test]
    fn l2_and_lp_two_agree_bitwise() {
        let (lab, fam) = small();
        let ev = lab.evaluate(Transform::Area(SquareKind::HorizontalHeat), &fam).unwrap();
        let ws: Vec<Weight> = WeightSpec::standard().iter().map(|s| s.build(&lab).unwrap()).collect();
        let a = weighted_l2_mw(&lab, &ev, &ws).unwrap();
        let b = lp_range(&lab, &ev, &ws, 2.0).unwrap();
        assert_eq!(a.ratios, b.ratios);
        assert_eq!(a.ratios.len(), 20);
        // replay the witness
        let wit = a.sup_witness().unwrap();
        let (r, _, _) = majorant_ratios(&lab, &ev, &ws[wit.weight.unwrap()..=wit.weight.unwrap()], 2.0).unwrap();
        assert_eq!(r[wit.member], a.sup_ratio);
    }

    #[test]
    fn constant_weight_reduces_to_plain_norms() {
        let (lab, fam) = small();
        let ev = lab.evaluate(Transform::G(SquareKind::HorizontalHeat), &fam).unwrap();
        let one = [Weight::constant(*lab.grid(), 1.0).unwrap()];
        let r4 = lp_range(&lab, &ev, &one, 4.0).unwrap();
        for (i, r) in r4.ratios.iter().enumerate() {
            let want = (lp_norm(&ev.outputs[i], 4.0).unwrap() / lp_norm(&fam.members[i], 4.0).unwrap()).powi(4);
            assert!((r - want).abs() < 1e-12 * want);
        }
        let r2 = weighted_l2_mw(&lab, &ev, &one).unwrap();
        for r in &r2.ratios {
            // g_h is bounded on L^2 by kappa = 1/(2 sqrt 2)
            assert!(*r <= 0.125 * 1.05);
        }
        assert!(matches!(lp_range(&lab, &ev, &one, 1.0), Err(Error::Parameter(_))));
        let holes = [Weight::from_fn(*lab.grid(), |x| x[0].max(0.0)).unwrap()];
        assert!(matches!(lp_range(&lab, &ev, &holes, 3.0), Err(Error::SingularWeight(_))));
    }

    #[test]
    fn weak_levels_above_the_maximum_give_zero() {
        let (lab, fam) = small();
        let ev = lab.evaluate(Transform::Area(SquareKind::HorizontalHeat), &fam).unwrap();
        let one = [Weight::constant(*lab.grid(), 1.0).unwrap()];
        let r = weak_1_1(&lab, &ev, &one, &[1.5]).unwrap();
        assert!(r.ratios.iter().all(|v| *v == 0.0));
        let r = weak_1_1(&lab, &ev, &one, &default_levels()).unwrap();
        assert!(r.sup_ratio > 0.0 && r.sup_ratio.is_finite());
        let star = lab.evaluate(Transform::GStar(2.5), &fam).unwrap();
        assert!(matches!(weak_1_1(&lab, &star, &one, &[0.5]), Err(Error::Precondition(_))));
    }

    #[test]
    fn domination_grows_with_mu() {
        let (lab, fam) = small();
        let ev = lab.evaluate(Transform::Area(SquareKind::HorizontalHeat), &fam).unwrap();
        let a = pointwise_domination(&lab, &ev, 3.5).unwrap();
        let b = pointwise_domination(&lab, &ev, 4.0).unwrap();
        assert!(a.sup_ratio.is_finite() && a.sup_ratio > 0.0);
        assert!(b.sup_ratio >= a.sup_ratio);
    }

    #[test]
    fn single_mode_growth_is_flat() {
        let lab = Lab::laplacian(128).unwrap();
        let members = (0..8)
            .map(|k| GridFunction::from_real_fn(*lab.grid(), |x| ((k + 1) as f64 * x[0]).cos()).unwrap())
            .collect();
        let fam = TestFamily::from_members(members, "modes");
        let ev = lab.evaluate(Transform::G(SquareKind::HorizontalHeat), &fam).unwrap();
        let fit = growth_in_p(&ev, &[2.0, 4.0, 8.0, 16.0]).unwrap();
        assert!(fit.fitted_exponent.abs() < 1e-6, "{fit:?}");
        assert!(fit.passed);
        let few = TestFamily::from_members(fam.members[..3].to_vec(), "few");
        let ev = lab.evaluate(Transform::G(SquareKind::HorizontalHeat), &few).unwrap();
        assert!(matches!(growth_in_p(&ev, &[2.0, 4.0, 8.0, 16.0]), Err(Error::StatisticalPower(_))));
    }

    #[test]
    fn ap_exponents_and_span() {
        assert_eq!(ap_growth_exponent(2.0), 2.0);
        assert_eq!(ap_growth_exponent(3.0), 1.0);
        let (lab, fam) = small();
        let ev = lab.evaluate(Transform::Area(SquareKind::HorizontalHeat), &fam).unwrap();
        assert!(matches!(growth_in_ap(&lab, &ev, 2.0, &[0.0, 0.05, 0.1, -0.1]), Err(Error::Span(_))));
    }

    #[test]
    fn identity_single_mode_and_band_error() {
        let lab = Lab::laplacian(256).unwrap();
        let psi = square_symbol(SymbolKind::Sh);
        let mode = GridFunction::from_real_fn(*lab.grid(), |x| (12.0 * x[0]).sin()).unwrap();
        let fam = TestFamily::from_members(vec![mode], "mode 12");
        let r = spectral_identity(&lab, &psi, &fam, (5.0, 25.0)).unwrap();
        assert!((r.ratios[0] - 1.0).abs() < SINGLE_MODE_WINDOW, "{r:?}");
        let low = GridFunction::from_real_fn(*lab.grid(), |x| (2.0 * x[0]).sin()).unwrap();
        let fam = TestFamily::from_members(vec![low], "mode 2");
        assert!(matches!(spectral_identity(&lab, &psi, &fam, (5.0, 25.0)), Err(Error::Band(_))));
    }

    #[test]
    fn cz_report_is_exact() {
        let g = Grid::new(1, 128, 4.0).unwrap();
        let r = cz_report(g, |x| 8.0 * (-(x[0] / 0.3).powi(2)).exp(), 4.0).unwrap();
        assert!(r.reconstruction_error <= 1e-12 && r.max_bad_integral <= 1e-12);
        assert!(r.bad_mass_ratio <= 2.0);
    }
}

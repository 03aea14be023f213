//! Spectral profiles: the smooth bump and its Fourier transform, the
//! square-function symbols, and the `kappa` normalization
//! `kappa^2 = int_0^inf |psi(t)|^2 dt / t`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, Rule};

/// Decay class of a profile, as used to decide which quadratures converge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DecayClass {
    /// Fourier transform of a compactly supported function.
    CompactFourierSupport,
    Schwartz,
    /// `|psi(z)| <= C |z|^s / (1 + |z|^{2s})`.
    FClass(f64),
    /// No decay assumed (bounded functions such as `cos(ts)`).
    Bounded,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProfileTag {
    Identity,
    PhiHat,
    PsiCubedBump,
    SExpHeat,
    SExpPoisson,
    Heat,
    Poisson,
    Wave,
    Custom(String),
}

impl fmt::Display for ProfileTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileTag::Identity => write!(f, "identity"),
            ProfileTag::PhiHat => write!(f, "phi_hat"),
            ProfileTag::PsiCubedBump => write!(f, "psi_cubed_bump"),
            ProfileTag::SExpHeat => write!(f, "s_exp_heat"),
            ProfileTag::SExpPoisson => write!(f, "s_exp_poisson"),
            ProfileTag::Heat => write!(f, "heat"),
            ProfileTag::Poisson => write!(f, "poisson"),
            ProfileTag::Wave => write!(f, "wave"),
            ProfileTag::Custom(name) => write!(f, "custom:{name}"),
        }
    }
}

type Eval = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A real function of the spectral variable `s = sqrt(lambda) >= 0`.
#[derive(Clone)]
pub struct MultiplierProfile {
    tag: ProfileTag,
    decay: DecayClass,
    eval: Eval,
}

impl fmt::Debug for MultiplierProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MultiplierProfile")
            .field("tag", &self.tag)
            .field("decay", &self.decay)
            .finish()
    }
}

impl MultiplierProfile {
    pub fn new(tag: ProfileTag, decay: DecayClass, eval: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { tag, decay, eval: Arc::new(eval) }
    }

    pub fn custom(name: &str, decay: DecayClass, eval: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(ProfileTag::Custom(name.to_string()), decay, eval)
    }

    pub fn identity() -> Self {
        Self::new(ProfileTag::Identity, DecayClass::Bounded, |_| 1.0)
    }

    /// `s -> exp(-t s^2)`, i.e. `e^{-tL}`.
    pub fn heat(t: f64) -> Self {
        Self::new(ProfileTag::Heat, DecayClass::Schwartz, move |s| (-t * s * s).exp())
    }

    /// `s -> exp(-t s)`, i.e. `e^{-t sqrt(L)}`.
    pub fn poisson(t: f64) -> Self {
        Self::new(ProfileTag::Poisson, DecayClass::FClass(1.0), move |s| (-t * s).exp())
    }

    /// `s -> cos(t s)`.
    pub fn wave(t: f64) -> Self {
        Self::new(ProfileTag::Wave, DecayClass::Bounded, move |s| (t * s).cos())
    }

    pub fn tag(&self) -> &ProfileTag {
        &self.tag
    }

    pub fn decay(&self) -> DecayClass {
        self.decay
    }

    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        (self.eval)(s)
    }

    /// `z -> psi(c z)`.
    pub fn dilated(&self, c: f64) -> Self {
        let inner = self.eval.clone();
        Self { tag: self.tag.clone(), decay: self.decay, eval: Arc::new(move |s| inner(c * s)) }
    }

    /// Pointwise product; the tag of `self` is kept.
    pub fn times(&self, other: &MultiplierProfile) -> Self {
        let (a, b) = (self.eval.clone(), other.eval.clone());
        Self {
            tag: ProfileTag::Custom(format!("{}*{}", self.tag, other.tag)),
            decay: self.decay,
            eval: Arc::new(move |s| a(s) * b(s)),
        }
    }
}

/// Reference normalizer `int_{-1}^{1} exp(-1/(1-u^2)) du`, with the
/// Clenshaw-Curtis table used for every bump evaluation.
struct UnitBump {
    rule: Rule,
    mass: f64,
    scaled_weights: Vec<f64>,
}

pub const BUMP_QUADRATURE_NODES: usize = 2000;

fn unit_bump_profile(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u * u)).exp()
    }
}

fn unit_bump() -> &'static UnitBump {
    static CELL: OnceLock<UnitBump> = OnceLock::new();
    CELL.get_or_init(|| {
        let rule = quad::clenshaw_curtis(BUMP_QUADRATURE_NODES);
        let mass = rule.integrate(unit_bump_profile);
        let scaled_weights = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&u, &w)| w * unit_bump_profile(u) / mass)
            .collect();
        UnitBump { rule, mass, scaled_weights }
    })
}

/// Fourier transform of the unit-radius bump normalized to unit mass.
/// Beyond `|z| = 1500` the true value is below `1e-20` and zero is returned.
fn unit_bump_hat(z: f64) -> f64 {
    let z = z.abs();
    if z > 1500.0 {
        return 0.0;
    }
    let ub = unit_bump();
    ub.rule.nodes.iter().zip(&ub.scaled_weights).map(|(&u, &w)| w * (z * u).cos()).sum()
}

/// Even, non-negative, unit-mass `C^infinity` bump supported in `[-a, a]`.
///
/// `order = 1` is `c_a exp(-1/(1-(s/a)^2))`. Higher orders are the `order`-fold
/// self-convolution of the order-one bump of radius `a / order`; the support
/// is unchanged while the Fourier transform decays much faster, which keeps
/// band-limited kernels on coarse grids inside their nominal support.
#[derive(Clone)]
pub struct BumpProfile {
    radius: f64,
    order: u32,
    cache: Arc<Mutex<HashMap<u64, f64>>>,
}

impl fmt::Debug for BumpProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BumpProfile").field("radius", &self.radius).field("order", &self.order).finish()
    }
}

impl BumpProfile {
    pub fn new(radius: f64) -> Result<Self> {
        Self::smoothed(radius, 1)
    }

    pub fn smoothed(radius: f64, order: u32) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Parameter(format!("bump radius must be positive, got {radius}")));
        }
        if order == 0 {
            return Err(Error::Parameter("bump order must be >= 1".into()));
        }
        Ok(Self { radius, order, cache: Arc::new(Mutex::new(HashMap::new())) })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Normalization constant `c_a` of the order-one bump.
    pub fn normalization(&self) -> f64 {
        1.0 / (self.radius * unit_bump().mass)
    }

    /// `phi(s)`.
    pub fn density(&self, s: f64) -> f64 {
        if s.abs() >= self.radius {
            return 0.0;
        }
        if self.order == 1 {
            return self.normalization() * unit_bump_profile(s / self.radius);
        }
        // inverse cosine transform of the (rapidly decaying) hat, uncached
        let m = self.order as i32;
        let scale = self.radius / self.order as f64;
        let cutoff = self.hat_cutoff();
        let panel = std::f64::consts::PI / self.radius;
        let panels = (cutoff / panel).ceil() as usize;
        let rule = quad::gauss_legendre(16);
        let mut v = 0.0;
        for p in 0..panels {
            let (a, b) = (p as f64 * panel, (p + 1) as f64 * panel);
            let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
            v += h * rule.integrate(|u| {
                let k = c + h * u;
                unit_bump_hat(k * scale).powi(m) * (k * s).cos()
            });
        }
        (v / std::f64::consts::PI).max(0.0)
    }

    /// Frequency beyond which `|Phi|` is negligible in double precision.
    fn hat_cutoff(&self) -> f64 {
        let m = self.order as i32;
        let mut z = 1.0;
        while z < 1500.0 && !(0..8).all(|k| unit_bump_hat(z + k as f64).abs().powi(m) < 1e-18) {
            z += 1.0;
        }
        z * self.order as f64 / self.radius
    }

    /// `Phi(s) = int phi(u) e^{-ius} du`.
    pub fn hat(&self, s: f64) -> f64 {
        let key = s.abs().to_bits();
        if let Some(v) = self.cache.lock().expect("bump cache poisoned").get(&key) {
            return *v;
        }
        let m = self.order as f64;
        let v = unit_bump_hat(s.abs() * self.radius / m).powi(self.order as i32);
        self.cache.lock().expect("bump cache poisoned").insert(key, v);
        v
    }

    /// The profile `s -> Phi(s)`.
    pub fn profile(&self) -> MultiplierProfile {
        let b = self.clone();
        MultiplierProfile::new(ProfileTag::PhiHat, DecayClass::CompactFourierSupport, move |s| b.hat(s))
    }
}

/// `Phi(s)`, the Fourier transform of the bump.
pub fn phi_hat(bump: &BumpProfile, s: f64) -> f64 {
    bump.hat(s)
}

/// `Psi(s) = s^{2n+2} Phi(s)^3`.
pub fn psi_cubed_bump(n: usize, bump: &BumpProfile) -> Result<MultiplierProfile> {
    if !(n == 1 || n == 2) {
        return Err(Error::Parameter(format!("dimension must be 1 or 2, got {n}")));
    }
    let b = bump.clone();
    let k = (2 * n + 2) as i32;
    Ok(MultiplierProfile::new(ProfileTag::PsiCubedBump, DecayClass::CompactFourierSupport, move |s| {
        s.powi(k) * b.hat(s).powi(3)
    }))
}

/// Which scalar symbol a square function is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymbolKind {
    /// `z^2 e^{-z^2}` (horizontal heat, `s_h`)
    Sh,
    /// `z e^{-z}` (horizontal Poisson, `s_p`)
    Sp,
    /// `e^{-z^2}`, the flow under the gradient in `S_H`
    ScalarSH,
    /// `e^{-z}`, the flow under the gradient in `S_P`
    ScalarSP,
}

impl FromStr for SymbolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "s_h" | "sh" => Ok(SymbolKind::Sh),
            "s_p" | "sp" => Ok(SymbolKind::Sp),
            "S_H" | "SH" => Ok(SymbolKind::ScalarSH),
            "S_P" | "SP" => Ok(SymbolKind::ScalarSP),
            other => Err(Error::Parameter(format!("unknown symbol kind {other:?}"))),
        }
    }
}

pub fn square_symbol(kind: SymbolKind) -> MultiplierProfile {
    match kind {
        SymbolKind::Sh => MultiplierProfile::new(ProfileTag::SExpHeat, DecayClass::FClass(1.0), |z| {
            z * z * (-z * z).exp()
        }),
        SymbolKind::Sp => MultiplierProfile::new(ProfileTag::SExpPoisson, DecayClass::FClass(1.0), |z| {
            z * (-z).exp()
        }),
        SymbolKind::ScalarSH => MultiplierProfile::new(ProfileTag::Heat, DecayClass::Schwartz, |z| (-z * z).exp()),
        SymbolKind::ScalarSP => MultiplierProfile::new(ProfileTag::Poisson, DecayClass::FClass(1.0), |z| (-z).exp()),
    }
}

/// `sup_z |psi(z)| (1 + z^{2s}) / z^s` over a logarithmic grid on `[1e-6, 1e6]`.
pub fn f_class_sup(psi: &MultiplierProfile, s: f64) -> f64 {
    (0..=2400)
        .map(|i| 10f64.powf(-6.0 + i as f64 * 0.005))
        .map(|z| psi.eval(z).abs() * (1.0 + z.powf(2.0 * s)) / z.powf(s))
        .fold(0.0, f64::max)
}

/// `int_{a}^{b} |psi(z)|^2 dz / z` computed on the logarithmic axis.
pub fn log_energy(psi: &MultiplierProfile, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (v, _) = quad::adaptive(
        |v| {
            let p = psi.eval(v.exp());
            p * p
        },
        a.ln(),
        b.ln(),
        1e-14,
    );
    v
}

/// `kappa = (int_0^inf |psi(t)|^2 dt/t)^{1/2}`.
pub fn kappa(psi: &MultiplierProfile) -> Result<f64> {
    let g = |v: f64| {
        let p = psi.eval(v.exp());
        p * p
    };
    // locate a peak on a coarse scan, then walk outward until the integrand dies
    let (peak_v, peak) = (-300..=300)
        .map(|i| i as f64 * 0.25)
        .map(|v| (v, g(v)))
        .fold((0.0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    if !(peak.is_finite() && peak > 0.0) {
        return Err(Error::Class(format!("profile {} vanishes or is not finite", psi.tag())));
    }
    let limit = 700.0;
    let threshold = 1e-32 * peak;
    let mut hi = peak_v;
    while !(g(hi) < threshold && g(hi + 1.0) < threshold && g(hi + 4.0) < threshold) {
        hi += 1.0;
        if hi > limit {
            return Err(Error::Class(format!("profile {} does not decay at infinity", psi.tag())));
        }
    }
    let mut lo = peak_v;
    while !(g(lo) < threshold && g(lo - 1.0) < threshold && g(lo - 4.0) < threshold) {
        lo -= 1.0;
        if lo < -limit {
            return Err(Error::Class(format!("profile {} does not vanish at zero", psi.tag())));
        }
    }
    let (v, err) = quad::adaptive(g, lo, hi, 1e-13);
    if !(v.is_finite() && err < 1e-10) {
        return Err(Error::Class(format!("kappa quadrature did not converge (err {err:e})")));
    }
    Ok(v.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_invariants() {
        for a in [0.1, 1.0, 2.5] {
            let b = BumpProfile::new(a).unwrap();
            assert_eq!(b.density(a), 0.0);
            assert_eq!(b.density(-a * 1.01), 0.0);
            assert!(b.density(0.3 * a) > 0.0);
            assert_eq!(b.density(0.3 * a), b.density(-0.3 * a));
            let rule = quad::clenshaw_curtis(4001);
            let mass = rule.integrate(|u| b.density(u * a)) * a;
            assert!((mass - 1.0).abs() < 1e-10, "mass {mass}");
        }
    }

    #[test]
    fn smoothed_bump_keeps_mass_and_support() {
        let b = BumpProfile::smoothed(1.0, 4).unwrap();
        assert_eq!(b.density(1.0), 0.0);
        assert!((b.hat(0.0) - 1.0).abs() < 1e-14);
        let rule = quad::gauss_legendre(200);
        let mass = rule.integrate(|u| b.density(u));
        assert!((mass - 1.0).abs() < 1e-6, "mass {mass}");
        assert!(b.density(0.0) > b.density(0.5));
    }

    #[test]
    fn phi_hat_basics() {
        let b = BumpProfile::new(0.1).unwrap();
        assert!((phi_hat(&b, 0.0) - 1.0).abs() < 1e-14);
        for s in [0.5, 3.0, 17.0, 80.0] {
            assert_eq!(phi_hat(&b, s), phi_hat(&b, -s));
            assert!(phi_hat(&b, s).abs() <= 1.0);
        }
    }

    #[test]
    fn phi_hat_decay_matches_high_precision_quadrature() {
        // oracle: composite Gauss-Legendre on [-1, 1] with 400 panels of 20 nodes
        let rule = quad::gauss_legendre(20);
        let oracle = |s: f64| {
            let panels = 400;
            let (mut num, mut den) = (0.0, 0.0);
            for p in 0..panels {
                let lo = -1.0 + 2.0 * p as f64 / panels as f64;
                let hw = 1.0 / panels as f64;
                for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                    let u = lo + hw * (x + 1.0);
                    let e = unit_bump_profile(u);
                    num += w * hw * e * (s * u).cos();
                    den += w * hw * e;
                }
            }
            num / den
        };
        let b = BumpProfile::new(1.0).unwrap();
        for s in [1.0, 10.0, 50.0, 100.0, 300.0] {
            let want = oracle(s);
            assert!((phi_hat(&b, s) - want).abs() < 1e-12, "s = {s}: {} vs {want}", phi_hat(&b, s));
        }
        assert!(phi_hat(&b, 100.0).abs() < 1e-5);
        assert!(phi_hat(&b, 300.0).abs() < 1e-8);
        // the convolution-smoothed bump reaches 1e-8 by s = 100
        let smooth = BumpProfile::smoothed(1.0, 8).unwrap();
        assert!(phi_hat(&smooth, 100.0).abs() < 1e-8);
    }

    #[test]
    fn psi_cubed_bump_vanishing_order() {
        let b = BumpProfile::new(1.0).unwrap();
        let psi = psi_cubed_bump(1, &b).unwrap();
        assert_eq!(psi.eval(0.0), 0.0);
        let ratio = psi.eval(1e-3) / 1e-12;
        assert!((ratio - 1.0).abs() < 1e-5);
        let sup = f_class_sup(&psi, 4.0);
        assert!(sup.is_finite() && sup > 0.0);
        assert!(psi_cubed_bump(3, &b).is_err());
    }

    #[test]
    fn symbols() {
        let sh = square_symbol(SymbolKind::Sh);
        let sp = square_symbol(SymbolKind::Sp);
        assert_eq!(sh.eval(0.0), 0.0);
        // derivative of z e^{-z} vanishes at z = 1
        let best = (1..20000).map(|i| i as f64 * 1e-4).map(|z| sp.eval(z)).fold(0.0, f64::max);
        assert!((best - (-1.0f64).exp()).abs() < 1e-9);
        assert!(f_class_sup(&sh, 1.0).is_finite());
        assert!(f_class_sup(&sp, 1.0).is_finite());
        assert!(matches!("bogus".parse::<SymbolKind>(), Err(Error::Parameter(_))));
    }

    #[test]
    fn kappa_values() {
        let sp = square_symbol(SymbolKind::Sp);
        let sh = square_symbol(SymbolKind::Sh);
        assert!((kappa(&sp).unwrap() - 0.5).abs() < 1e-10);
        assert!((kappa(&sh).unwrap() - 1.0 / (2.0 * 2f64.sqrt())).abs() < 1e-10);
        for c in [1.0 / 3.0, 1.0, 7.0] {
            assert!((kappa(&sh.dilated(c)).unwrap() - kappa(&sh).unwrap()).abs() < 1e-10);
            assert!((kappa(&sp.dilated(c)).unwrap() - 0.5).abs() < 1e-10);
        }
        let flat = MultiplierProfile::custom("flat", DecayClass::Bounded, |_| 1.0);
        assert!(matches!(kappa(&flat), Err(Error::Class(_))));
    }

    #[test]
    fn phi_hat_agrees_with_fft_of_samples() {
        use crate::fft::GridFft;
        use crate::grid::Grid;
        use num_complex::Complex64;
        // sample the bump on a wide periodic grid; the DFT times h approximates Phi
        let a = 1.0;
        let b = BumpProfile::new(a).unwrap();
        let grid = Grid::new(1, 1 << 16, 64.0).unwrap();
        let h = grid.spacing();
        let fft = GridFft::new(grid);
        let samples: Vec<Complex64> = (0..grid.len())
            .map(|i| {
                // center the bump at index 0 (periodic)
                let k = crate::fft::signed_index(i, grid.n()) as f64;
                Complex64::new(b.density(k * h), 0.0)
            })
            .collect();
        let spec = fft.forward(&samples);
        let dk = std::f64::consts::PI / grid.half_width();
        for (k, v) in spec.iter().enumerate().take(grid.n() / 2) {
            let s = k as f64 * dk;
            if s > 50.0 {
                break;
            }
            assert!((v.re * h - phi_hat(&b, s)).abs() < 1e-8, "s = {s}");
        }
    }
}

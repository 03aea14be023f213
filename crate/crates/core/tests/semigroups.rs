use std::f64::consts::PI;

use proptest::prelude::*;
use sqfn_core::grid::{compensated_sum, Grid, GridFunction};
use sqfn_core::multipliers::MultiplierProfile;
use sqfn_core::spectral::{
    build_operator, heat_semigroup, kernel_matrix, poisson_semigroup, OperatorKind, PoissonMethod, DEFAULT_KERNEL_BUDGET_MB,
};

fn laplacian(dim: usize, n: usize) -> Box<dyn sqfn_core::spectral::SpectralOperator> {
    build_operator(OperatorKind::Laplacian, Grid::new(dim, n, PI).unwrap(), 0).unwrap()
}

/// Poisson kernel of the circle of length `2 pi`.
fn circle_poisson(t: f64, d: f64) -> f64 {
    t.sinh() / (t.cosh() - d.cos()) / (2.0 * PI)
}

fn periodized_gaussian(t: f64, d: f64) -> f64 {
    (-20..=20).map(|m| (-(d + 2.0 * PI * m as f64).powi(2) / (4.0 * t)).exp()).sum::<f64>() / (4.0 * PI * t).sqrt()
}

#[test]
fn poisson_kernel_is_the_circle_poisson_kernel() {
    let op = laplacian(1, 64);
    let g = *op.grid();
    let t = 1.0;
    let k = kernel_matrix(op.as_ref(), &MultiplierProfile::poisson(t), DEFAULT_KERNEL_BUDGET_MB).unwrap();
    for x in 0..64 {
        for y in 0..64 {
            let d = g.point(x)[0] - g.point(y)[0];
            assert!((k.get(x, y) - circle_poisson(t, d)).abs() < 1e-10);
        }
    }
}

#[test]
fn subordinated_poisson_matches_closed_form_convolution() {
    let op = laplacian(1, 128);
    let g = *op.grid();
    let f = |x: f64| (-(x - 0.4).powi(2) / 0.08).exp() + 0.3 * (2.0 * x).cos();
    let samples = GridFunction::from_real_fn(g, |x| f(x[0])).unwrap();
    // the oracle integral uses a fine grid so narrow kernels are resolved
    let fine = 4096;
    let dy = 2.0 * PI / fine as f64;
    for t in [0.05, 0.3, 1.5] {
        let u = poisson_semigroup(op.as_ref(), t, &samples, PoissonMethod::Subordination).unwrap();
        for x in (0..128).step_by(7) {
            let px = g.point(x)[0];
            let direct = compensated_sum((0..fine).map(|j| {
                let y = -PI + j as f64 * dy;
                circle_poisson(t, px - y) * f(y) * dy
            }));
            assert!((u.values()[x].re - direct).abs() < 1e-8, "t = {t}, x = {x}");
        }
    }
}

#[test]
fn heat_kernel_in_two_dimensions_factorizes() {
    let op = laplacian(2, 16);
    let g = *op.grid();
    let t = 0.5;
    let k = kernel_matrix(op.as_ref(), &MultiplierProfile::heat(t), DEFAULT_KERNEL_BUDGET_MB).unwrap();
    for x in (0..g.len()).step_by(5) {
        for y in 0..g.len() {
            let (a, b) = (g.point(x), g.point(y));
            let expected = periodized_gaussian(t, a[0] - b[0]) * periodized_gaussian(t, a[1] - b[1]);
            assert!((k.get(x, y) - expected).abs() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn heat_conserves_mass_and_positivity(
        centres in prop::collection::vec(-2.5f64..2.5, 1..4),
        width in 0.15f64..0.6,
        t in 0.001f64..2.0,
    ) {
        let op = laplacian(1, 128);
        let g = *op.grid();
        let f = GridFunction::from_real_fn(g, |x| {
            centres.iter().map(|c| (-(x[0] - c).powi(2) / (2.0 * width * width)).exp()).sum()
        }).unwrap();
        let u = heat_semigroup(op.as_ref(), t, &f).unwrap();
        let mass = |v: &GridFunction| compensated_sum(v.values().iter().map(|z| z.re));
        prop_assert!((mass(&u) / mass(&f) - 1.0).abs() < 1e-12);
        let top = u.max_abs();
        prop_assert!(u.values().iter().all(|z| z.re > -1e-12 * top));
        prop_assert!(top <= f.max_abs() * (1.0 + 1e-12));
    }
}

use proptest::prelude::*;
use sqfn_core::decomp::cz_decomposition;
use sqfn_core::grid::{lp_norm, GridFunction};
use sqfn_core::squarefuncs::SquareKind;
use sqfn_core::verify::*;
use sqfn_core::weights::CubeFamily;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn g_function_plancherel_on_random_low_bands(seed in 0u64..1000, hi in 1.0f64..2.2) {
        // frequencies are the integers; the band holds mode 1 and possibly 2
        let lab = Lab::laplacian(256).unwrap();
        let fam = TestFamily::band_limited(&lab, seed, 3, 1.0, hi).unwrap();
        let r = plancherel(&lab, Transform::G(SquareKind::HorizontalHeat), &fam).unwrap();
        prop_assert!(r.passed, "{:?}", r.ratios);
    }

    #[test]
    fn cz_decomposition_is_exact(seed in 0u64..1000, q in 0.3f64..0.9) {
        let lab = Lab::laplacian(128).unwrap();
        let fam = TestFamily::mixed(&lab, seed, 2).unwrap();
        let f = GridFunction::from_real(*lab.grid(), fam.members[1].abs()).unwrap();
        let cz = cz_decomposition(&f, q * f.max_abs(), &CubeFamily::new(*lab.grid())).unwrap();
        prop_assert!(cz.reconstruction_error(&f) <= 1e-12 * f.max_abs());
        prop_assert!(cz.max_bad_integral() <= 1e-12 * lp_norm(&f, 1.0).unwrap());
        for (i, inside) in cz.omega.iter().enumerate() {
            if !inside {
                prop_assert_eq!(cz.good_part.values()[i], f.values()[i]);
            }
        }
    }

    #[test]
    fn rubio_de_francia_certificate_holds(seed in 0u64..10_000) {
        let lab = Lab::laplacian(128).unwrap();
        let suite = rdf_certificates(&lab, &[seed], 2.0).unwrap();
        prop_assert!(suite.passed, "{:?}", suite.certificates);
    }
}

#[test]
fn ratios_are_invariant_under_weight_scaling() {
    let lab = Lab::laplacian(128).unwrap();
    let fam = TestFamily::mixed(&lab, 3, 4).unwrap();
    let ev = lab.evaluate(Transform::Area(SquareKind::HorizontalPoisson), &fam).unwrap();
    let w = WeightSpec::Power(0.5).build(&lab).unwrap();
    let scaled = sqfn_core::Weight::new(*lab.grid(), w.values().iter().map(|v| 7.0 * v).collect()).unwrap();
    let a = weighted_l2_mw(&lab, &ev, &[w]).unwrap();
    let b = weighted_l2_mw(&lab, &ev, &[scaled]).unwrap();
    for (x, y) in a.ratios.iter().zip(&b.ratios) {
        assert!((x / y - 1.0).abs() < 1e-12);
    }
}

#[test]
fn domination_scales_out_of_the_input() {
    let lab = Lab::laplacian(128).unwrap();
    let fam = TestFamily::mixed(&lab, 5, 3).unwrap();
    let minus_three = num_complex::Complex64::new(-3.0, 0.0);
    let scaled = TestFamily::from_members(fam.members.iter().map(|f| f.scale(minus_three)).collect(), "scaled");
    let t = Transform::Area(SquareKind::VerticalHeat);
    let a = pointwise_domination(&lab, &lab.evaluate(t, &fam).unwrap(), 3.5).unwrap();
    let b = pointwise_domination(&lab, &lab.evaluate(t, &scaled).unwrap(), 3.5).unwrap();
    for (x, y) in a.ratios.iter().zip(&b.ratios) {
        assert!((x / y - 1.0).abs() < 1e-9);
    }
}

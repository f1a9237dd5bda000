use proptest::prelude::*;
use rosensweig_core::dn_operators::{nonlinear_dn, taylor_dn_lower, taylor_dn_upper};
use rosensweig_core::*;

fn pattern() -> impl Strategy<Value = PatternKind> {
    prop::sample::select(PatternKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn first_order_symbols(p in pattern(), beta0 in 0.1f64..1.0, m in 0.5f64..4.0, g in 0.3f64..3.0, k in 1i32..3) {
        let lat = LatticeSpec::new(p, 1.0, 4).unwrap();
        let law = MagnetizationLaw::langevin(m, g).unwrap();
        let c = law.constants_at_one().unwrap();
        let res = Resolution::new(4, 40).unwrap();
        let phi = SurfaceField::cosine(&lat, k, 0);
        let zero = SurfaceField::zeros(&lat);
        let kk = k as f64;
        let lo = taylor_dn_lower(&lat, &law, beta0, &zero, &phi, 1, &res).unwrap();
        let th = (c.s1 * kk / beta0).tanh();
        prop_assert!((lo.g_terms[0].coeff(k, 0).re - 0.5 * c.mu1 * c.s1 * kk * th).abs() < 1e-9);
        prop_assert!((lo.h_terms[0].coeff(k, 0).re - 0.5 * c.s1 * kk * th).abs() < 1e-9);
        let up = taylor_dn_upper(&lat, beta0, &zero, &phi, 1, &res).unwrap();
        prop_assert!((up.g_terms[0].coeff(k, 0).re - 0.5 * kk * (kk / beta0).tanh()).abs() < 1e-9);
    }

    #[test]
    fn taylor_terms_are_homogeneous(p in pattern(), lambda in -2.0f64..2.0) {
        let lat = LatticeSpec::new(p, 1.0, 4).unwrap();
        let law = MagnetizationLaw::langevin(2.0, 1.0).unwrap();
        let res = Resolution::new(4, 24).unwrap();
        let mut eta = SurfaceField::fundamental(&lat);
        eta.axpy(0.3, &SurfaceField::sine(&lat, 2, 0));
        let phi = SurfaceField::cosine(&lat, 1, 0);
        let a = taylor_dn_lower(&lat, &law, 0.4, &eta, &phi, 3, &res).unwrap();
        let b = taylor_dn_lower(&lat, &law, 0.4, &eta.scale(lambda), &phi.scale(lambda), 3, &res).unwrap();
        for n in 0..3 {
            let scaled = a.g_terms[n].scale(lambda.powi(n as i32 + 1));
            prop_assert!(b.g_terms[n].max_abs_diff(&scaled) < 1e-10 * (1.0 + scaled.max_abs()));
            let scaled = a.h_terms[n].scale(lambda.powi(n as i32 + 1));
            prop_assert!(b.h_terms[n].max_abs_diff(&scaled) < 1e-10 * (1.0 + scaled.max_abs()));
        }
    }
}

#[test]
fn nonlinear_zero_state_and_amplitude_guard() {
    let lat = LatticeSpec::new(PatternKind::Hexagons, 1.0, 4).unwrap();
    let law = MagnetizationLaw::langevin(2.0, 1.0).unwrap();
    let res = Resolution::new(4, 24).unwrap();
    let zero = SurfaceField::zeros(&lat);
    let (g, h) = nonlinear_dn(&lat, &law, 0.5, Strip::Lower, &zero, &zero, 1e-12, &res).unwrap();
    assert!(g.max_abs() < 1e-12 && h.max_abs() < 1e-12);
    let big = SurfaceField::fundamental(&lat);
    let err = nonlinear_dn(&lat, &law, 0.5, Strip::Lower, &big, &zero, 1e-12, &res).unwrap_err();
    assert!(matches!(err, Error::InvalidArgument(_)));
}

#[test]
fn nonlinear_matches_flat_solution_for_constant_law() {
    let lat = LatticeSpec::new(PatternKind::Rolls, 1.0, 4).unwrap();
    let law = MagnetizationLaw::constant(3.0).unwrap();
    let res = Resolution::new(4, 32).unwrap();
    let phi = SurfaceField::cosine(&lat, 1, 0).scale(0.1);
    let zero = SurfaceField::zeros(&lat);
    let (g, _) = nonlinear_dn(&lat, &law, 0.5, Strip::Lower, &zero, &phi, 1e-12, &res).unwrap();
    let exact = 0.05 * 3.0 * 2f64.tanh();
    assert!((g.coeff(1, 0).re - exact).abs() < 1e-10);
}

#[test]
fn lattice_mismatch_is_rejected() {
    let a = LatticeSpec::new(PatternKind::Rolls, 1.0, 4).unwrap();
    let b = LatticeSpec::new(PatternKind::Rolls, 1.1, 4).unwrap();
    let law = MagnetizationLaw::constant(2.0).unwrap();
    let res = Resolution::default();
    let r = taylor_dn_lower(&a, &law, 0.3, &SurfaceField::zeros(&b), &SurfaceField::zeros(&a), 2, &res);
    assert!(r.is_err());
}

use expforge::cycle::{find_cycle_near_line, in_band, multiplier_of};
use expforge::dynamics::{iterate, orbit_derivative, parameter_derivative, singular_values, Parameter};
use expforge::probe::{bock_probe, escape_measure_probe, GridSpec};
use expforge::psf::{solve_psf, PsfSpec};
use expforge::{Complex64, EscapePolicy, TWO_PI};
use proptest::prelude::*;

fn moderate_lambda() -> impl Strategy<Value = Parameter> {
    (0.2f64..2.0, -1.0f64..1.0).prop_map(|(re, im)| Parameter::from_parts(re, im).unwrap())
}

fn point() -> impl Strategy<Value = Complex64> {
    (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(re, im)| Complex64::new(re, im))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn iterates_compose(param in moderate_lambda(), z in point(), a in 0usize..6, b in 0usize..6) {
        if let (Ok(whole), Ok(first)) = (iterate(&param, z, a + b), iterate(&param, z, a)) {
            prop_assert_eq!(iterate(&param, first, b).unwrap(), whole);
        }
    }

    #[test]
    fn orbit_derivative_chain_rule(param in moderate_lambda(), z in point(), n in 2usize..12, split in 1usize..11) {
        let k = split.min(n - 1);
        if let (Ok(full), Ok(head), Ok(mid)) =
            (orbit_derivative(&param, z, n), orbit_derivative(&param, z, k), iterate(&param, z, k))
        {
            let tail = orbit_derivative(&param, mid, n - k).unwrap();
            prop_assert!((full - head * tail).norm() <= 1e-10 * full.norm());
        }
    }

    #[test]
    fn parameter_derivative_matches_scaled_difference(param in moderate_lambda(), n in 1usize..12) {
        let Ok(trace) = parameter_derivative(&param, n) else { return Ok(()) };
        let d = trace.dxi(n);
        // beyond this the scaled step drops below the spacing of binary64 near λ
        prop_assume!(d.norm() < 1e6);
        // keep h·|ξ'| small so the difference quotient stays in its linear regime
        let h = 1e-6 / d.norm().max(1.0);
        let (lo, hi) = (param.value() - h, param.value() + h);
        let at = |l: Complex64| singular_values(&Parameter::new(l).unwrap(), n).map(|v| v[n - 1]);
        if let (Ok(up), Ok(down)) = (at(hi), at(lo)) {
            // divide by the step actually represented, not the nominal 2h
            let fd = (up - down) / (hi - lo);
            prop_assert!((fd - d).norm() <= 1e-4 * d.norm().max(1.0), "fd {} vs {}", fd, d);
        }
    }

    #[test]
    fn band_cycles_satisfy_contract(x in 2.0f64..20.0, which in 0usize..3) {
        let param = [
            Parameter::from_parts(1.0, 0.0).unwrap(),
            Parameter::from_parts(1.0, 0.3).unwrap(),
            Parameter::new(Complex64::new(0.0, TWO_PI * 1.01)).unwrap(),
        ][which];
        if let Ok(c) = find_cycle_near_line(&param, x, 3, 1e-10) {
            prop_assert!(in_band(&param, c.points[0], x));
            prop_assert!(c.residual < 1e-10);
            prop_assert!(c.is_repelling());
            prop_assert_eq!(multiplier_of(&c).unwrap(), c.multiplier);
        }
    }

    #[test]
    fn psf_family_recovered(k in prop_oneof![-6i64..=-1, 1i64..=6], du in -0.02f64..0.02) {
        let exact = Parameter::two_pi_i(k).unwrap();
        let seed = Parameter::new(exact.value() + Complex64::new(du, du)).unwrap();
        let found = solve_psf(&PsfSpec::new(1, 1, seed, 1e-10).unwrap(), 60).unwrap();
        prop_assert!((found.lambda.value() - exact.value()).norm() < 1e-12);
    }

    #[test]
    fn escape_curve_non_increasing(mut ts in proptest::collection::vec(-50.0f64..800.0, 1..6)) {
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        let starts = GridSpec::square(-3.0, 3.0, 16).unwrap();
        let curve = escape_measure_probe(&Parameter::from_parts(0.3, 0.0).unwrap(), &starts, 10, &ts).unwrap();
        prop_assert!(curve.points.windows(2).all(|w| w[1].1 <= w[0].1));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn coverage_non_decreasing_in_n(im in 6.0f64..6.6, n in 10usize..200) {
        let param = Parameter::from_parts(0.0, im).unwrap();
        let starts = GridSpec::square(-2.0, 2.0, 8).unwrap();
        let boxes = GridSpec::square(-20.0, 20.0, 16).unwrap();
        let policy = EscapePolicy::default();
        let short = bock_probe(&param, &starts, n, &boxes, &policy);
        let long = bock_probe(&param, &starts, 2 * n, &boxes, &policy);
        prop_assert!(long.coverage >= short.coverage);
        prop_assert_eq!(long.escaped + long.accumulating + long.running, starts.len());
    }
}

#[test]
fn forward_multiplier_agrees_on_moderate_cycles() {
    let param = Parameter::from_parts(1.0, 0.0).unwrap();
    for x in [2.0, 3.0, 4.0] {
        let c = find_cycle_near_line(&param, x, 3, 1e-10).unwrap();
        let forward = orbit_derivative(&param, c.points[0], c.period).unwrap();
        assert!((forward - c.multiplier).norm() <= 1e-9 * c.multiplier.norm(), "x={x}");
    }
}

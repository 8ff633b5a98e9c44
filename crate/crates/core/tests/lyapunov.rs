use accel_core::adaptive::{run_adaptive, LineSearch};
use accel_core::coeffs::CoefficientTable;
use accel_core::fsfo::{build_schedule, run_fsfo, Method};
use accel_core::lyapunov::{
    bounds, function_value_jump_chain, gradient_jump_chain, obl_f_tilde_sandwich, verify_decrement, verify_rate,
    LYAPUNOV_TOL,
};
use accel_core::oracles::{make_huber, random_quadratic, registry, SmoothOracle};
use accel_core::rng::SplitMix64;
use accel_core::trajectory::Trajectory;
use proptest::prelude::*;

const WITH_DECOMPOSITION: [Method; 10] = [
    Method::Fgm,
    Method::Ogm,
    Method::FgmRcSharp,
    Method::FgmBl,
    Method::OrcFFlat,
    Method::OrcF,
    Method::OblFFlat,
    Method::OblF,
    Method::OblGFlat,
    Method::OblG,
];

fn run(m: Method, o: &SmoothOracle, x0: &[f64], n: usize, seed: u64, l0: f64) -> Trajectory {
    let tb = CoefficientTable::global();
    if m.is_fixed_step() {
        let s = build_schedule(m, n, tb).unwrap();
        run_fsfo(&s, o, x0, &Default::default()).unwrap()
    } else {
        run_adaptive(m, o, x0, n, seed, &LineSearch::new(l0, 2.0).unwrap()).unwrap()
    }
}

#[test]
fn unsupported_methods_say_so() {
    let p = registry::lookup("quad-diag-10").unwrap();
    let tb = CoefficientTable::new();
    for m in [Method::OgmG, Method::FgmRc] {
        let t = run(m, &p.oracle, &p.x0, 6, 3, 1.0);
        assert!(verify_decrement(m, &t, &tb, &p.oracle).is_err(), "{m}");
    }
}

#[test]
fn huber_decrements() {
    let o = make_huber(1.0, vec![0.5, -1.0, 0.0]).unwrap();
    let x0 = [6.0, -4.0, 2.5];
    let tb = CoefficientTable::new();
    for m in WITH_DECOMPOSITION {
        let t = run(m, &o, &x0, 30, 7, o.l / 8.0);
        let r = verify_decrement(m, &t, &tb, &o).unwrap();
        assert!(r.passed, "{m}: {:?}", r.first_failure(LYAPUNOV_TOL));
    }
}

#[test]
fn rate_report_rows() {
    let p = registry::lookup("quad-diag-10").unwrap();
    let tb = CoefficientTable::new();
    let t = run(Method::Fgm, &p.oracle, &p.x0, 12, 0, 1.0);
    let r = verify_rate(Method::Fgm, &t, &tb, &p.oracle).unwrap();
    assert!(r.passed);
    assert_eq!(r.entries.len(), 12);
    let rows = r.by_row(13);
    assert!(rows[0].is_none());
    assert!(rows[1..].iter().all(Option::is_some));
    assert!(r.min_slack() >= 0.0);
}

#[test]
fn bound_anchors() {
    let tb = CoefficientTable::new();
    // θ₀ = 1, φ₁ = 2, θ̃₁ = (1 + 3)/2 = 2.
    assert_eq!(bounds::fgm(2.0, 3.0, 0, &tb).unwrap(), 3.0);
    assert_eq!(bounds::orc(2.0, 3.0, 0, &tb).unwrap(), 1.5);
    assert_eq!(bounds::ogm(2.0, 4.0, 1, &tb).unwrap(), 1.0);
    assert_eq!(bounds::gd(1.0, 6.0, 1), 1.0);
    assert_eq!(bounds::obl_f_y(1.0, 6.0, 1), 1.0);
    // k = 1: 2 + √4 = 4.
    assert_eq!(bounds::obl_f_tilde(1.0, 4.0, 1), 1.0);
    assert_eq!(bounds::obl_g_simple(1.0, 1.0, 2), 1.0);
    assert_eq!(bounds::fgm_rc(1.0, 2.0, 0), 1.0);
}

#[test]
fn jump_chains_reject_other_methods() {
    let p = registry::lookup("quad-diag-10").unwrap();
    let t = run(Method::Fgm, &p.oracle, &p.x0, 4, 0, 1.0);
    assert!(function_value_jump_chain(&t, &p.oracle).is_err());
    assert!(gradient_jump_chain(&t).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn decrement_identities_hold(seed in any::<u64>(), dim in 1usize..6, n in 3usize..25, shrink in 1.0f64..20.0) {
        let mut rng = SplitMix64::new(seed);
        let singular = rng.next_f64() < 0.3;
        let o = random_quadratic(&mut rng, dim, singular).unwrap();
        let x0 = rng.normal_vec(dim);
        let tb = CoefficientTable::global();
        for m in WITH_DECOMPOSITION {
            let t = run(m, &o, &x0, n, seed, o.l / shrink);
            let r = verify_decrement(m, &t, tb, &o).unwrap();
            prop_assert!(r.passed, "{m}: {:?}", r.first_failure(LYAPUNOV_TOL));
            for s in &r.steps {
                let sum: f64 = s.terms.iter().map(|t| t.contribution()).sum();
                if !m.is_randomized() {
                    prop_assert!((s.decrement - sum).abs() <= LYAPUNOV_TOL * s.scale);
                }
                prop_assert!(s.violated_term(LYAPUNOV_TOL).is_none());
            }
        }
    }

    #[test]
    fn deterministic_rates_hold(seed in any::<u64>(), dim in 1usize..6, n in 3usize..40) {
        let mut rng = SplitMix64::new(seed);
        let o = random_quadratic(&mut rng, dim, false).unwrap();
        let x0 = rng.normal_vec(dim);
        let tb = CoefficientTable::global();
        for m in [Method::Gd, Method::Fgm, Method::Ogm, Method::OgmG, Method::OrcFFlat, Method::OblFFlat, Method::OblGFlat] {
            let t = run(m, &o, &x0, n, 0, o.l);
            let r = verify_rate(m, &t, tb, &o).unwrap();
            prop_assert!(r.passed, "{m}: min slack {}", r.min_slack());
        }
        let t = run(Method::OblFFlat, &o, &x0, n, 0, o.l);
        prop_assert!(obl_f_tilde_sandwich(&t, tb, &o).unwrap() >= -1e-9 * o.l);
    }
}

use accel_core::adaptive::{
    coordinate_coeffs, deterministic_counterpart, run_adaptive, run_fgm_bl, run_obl_f, run_obl_g, LineSearch,
};
use accel_core::coeffs::CoefficientTable;
use accel_core::fsfo::{run_three_sequence, Method};
use accel_core::inequalities::{cocoercivity, Sample};
use accel_core::linalg::SymmetricMatrix;
use accel_core::oracles::{make_quadratic, random_quadratic, registry};
use accel_core::rng::SplitMix64;
use proptest::prelude::*;

const RANDOMIZED: [Method; 3] = [Method::OrcF, Method::FgmRc, Method::FgmRcSharp];

#[test]
fn one_coordinate_runs_are_bitwise_deterministic() {
    // L = 4 so that S·√L₁ = 4 exactly and the z-step divisions agree bit for bit.
    let p = registry::lookup("quad-1d").unwrap();
    let tb = CoefficientTable::new();
    for m in RANDOMIZED {
        let seq = deterministic_counterpart(m, 40, &tb).unwrap();
        let det = run_three_sequence(m, &seq, &p.oracle, &p.x0, p.oracle.l).unwrap();
        for seed in [0, 1, 99] {
            let ls = LineSearch::new(1.0, 2.0).unwrap();
            let rnd = run_adaptive(m, &p.oracle, &p.x0, 40, seed, &ls).unwrap();
            assert_eq!(rnd.x, det.x, "{m} seed {seed}");
            assert_eq!(rnd.z, det.z, "{m} seed {seed}");
            assert!(rnd.coords.iter().all(|&i| i == 0));
        }
    }
}

#[test]
fn orc_coefficients_follow_phi() {
    let tb = CoefficientTable::new();
    // φ₀ = 0, φ₁ = 2, φ₂ = 3 + √3.
    let (num, a) = coordinate_coeffs(Method::OrcF, 0, &tb).unwrap();
    assert_eq!(num, 2.0);
    let phi2 = 3.0 + 3f64.sqrt();
    assert!((a - 2.0 / phi2).abs() < 1e-15);
    let (num, a) = coordinate_coeffs(Method::FgmRc, 0, &tb).unwrap();
    assert_eq!((num, a), (1.0, 1.0 / 3.0));
    assert!(coordinate_coeffs(Method::Fgm, 0, &tb).is_err());
}

#[test]
fn line_search_arguments_are_validated() {
    assert!(LineSearch::new(0.0, 2.0).is_err());
    assert!(LineSearch::new(1.0, 1.0).is_err());
    assert!(LineSearch::new(f64::NAN, 2.0).is_err());
    assert!(LineSearch::new(1.0, 2.0).is_ok());
}

#[test]
fn obl_g_needs_three_steps() {
    let p = registry::lookup("quad-diag-10").unwrap();
    let ls = LineSearch::new(1.0, 2.0).unwrap();
    assert!(run_obl_g(&p.oracle, &p.x0, 2, &ls).is_err());
    assert!(run_obl_g(&p.oracle, &p.x0, 3, &ls).is_ok());
}

#[test]
fn fixed_methods_are_rejected_by_dispatch() {
    let p = registry::lookup("quad-diag-10").unwrap();
    let ls = LineSearch::new(1.0, 2.0).unwrap();
    assert!(run_adaptive(Method::Ogm, &p.oracle, &p.x0, 5, 0, &ls).is_err());
}

#[test]
fn exact_estimate_never_jumps() {
    // With L₀ = L every accepted step satisfies the test on the first try.
    let p = registry::lookup("quad-diag-10").unwrap();
    let ls = LineSearch::new(p.oracle.l, 2.0).unwrap();
    for t in [
        run_obl_f(&p.oracle, &p.x0, 30, &ls).unwrap(),
        run_obl_g(&p.oracle, &p.x0, 30, &ls).unwrap(),
        run_fgm_bl(&p.oracle, &p.x0, 30, &ls).unwrap(),
    ] {
        assert!(t.jumps.is_empty(), "{}", t.method);
        assert_eq!(t.backtracks, 0);
        assert!(t.lk.iter().all(|&l| l == p.oracle.l));
    }
}

#[test]
fn quadratic_1d_jump_count() {
    // L = 4, L₀ = 1/2, η = 2: 1/2 → 1 → 2 → 4 at most.
    let o = make_quadratic(SymmetricMatrix::diag(&[4.0]), vec![0.0]).unwrap();
    let ls = LineSearch::new(0.5, 2.0).unwrap();
    let t = run_obl_f(&o, &[1.0], 20, &ls).unwrap();
    assert!(t.jumps.len() <= 3);
    assert!(*t.lk.last().unwrap() <= 8.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn accepted_steps_satisfy_the_search_test(seed in any::<u64>(), dim in 1usize..6, shrink in 1.0f64..50.0) {
        let mut rng = SplitMix64::new(seed);
        let o = random_quadratic(&mut rng, dim, false).unwrap();
        let x0 = rng.normal_vec(dim);
        let ls = LineSearch::new(o.l / shrink, 2.0).unwrap();
        for t in [run_obl_f(&o, &x0, 15, &ls).unwrap(), run_obl_g(&o, &x0, 15, &ls).unwrap()] {
            for k in 0..t.n {
                prop_assert!(t.lk[k + 1] >= t.lk[k]);
                prop_assert!(t.lk[k + 1] <= 2.0 * o.l * (1.0 + 1e-12));
                let a = Sample::new(t.x[k].clone(), t.fx[k], t.gx[k].clone());
                let b = Sample::new(t.x[k + 1].clone(), t.fx[k + 1], t.gx[k + 1].clone());
                let r = cocoercivity(&a, &b, t.lk[k + 1]);
                let scale = 1f64.max(t.fx[k].abs()).max(t.grad_norm_sq(k) / t.lk[k + 1]);
                prop_assert!(r >= -1e-10 * scale, "{} k = {k}: {r}", t.method);
            }
            prop_assert_eq!(t.jumps.len(), (0..t.n).filter(|&k| t.lk[k + 1] > t.lk[k]).count());
        }
    }

    #[test]
    fn coordinates_stay_in_range(seed in any::<u64>(), dim in 1usize..6) {
        let mut rng = SplitMix64::new(seed);
        let o = random_quadratic(&mut rng, dim, false).unwrap();
        let x0 = rng.normal_vec(dim);
        let ls = LineSearch::new(1.0, 2.0).unwrap();
        for m in RANDOMIZED {
            let t = run_adaptive(m, &o, &x0, 25, seed, &ls).unwrap();
            prop_assert_eq!(t.coords.len(), 25);
            for k in 0..25 {
                let i = t.coords[k];
                prop_assert!(i < dim);
                // Only coordinate i moves in y and z.
                for j in (0..dim).filter(|&j| j != i) {
                    prop_assert_eq!(t.y[k + 1][j], t.x[k][j]);
                    prop_assert_eq!(t.z[k + 1][j], t.z[k][j]);
                }
            }
        }
    }
}

use accel_core::linalg::SymmetricMatrix;
use accel_core::oracles::{make_huber, make_logsumexp, make_quadratic, random_quadratic, registry, validate};
use accel_core::rng::SplitMix64;
use proptest::prelude::*;

/// Central finite difference, the reference gradient.
fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let h = 1e-6;
    (0..x.len())
        .map(|i| {
            let mut a = x.to_vec();
            let mut b = x.to_vec();
            a[i] += h;
            b[i] -= h;
            (f(&a) - f(&b)) / (2.0 * h)
        })
        .collect()
}

#[test]
fn registry_problems_are_valid() {
    for id in registry::ids() {
        let p = registry::lookup(id).unwrap();
        assert_eq!(p.x0.len(), p.oracle.dim, "{id}");
        assert_eq!(p.oracle.id, id);
        let r = validate(&p.oracle, 500, 11).unwrap();
        assert!(r.passed, "{id}: {r:?}");
    }
    assert!(registry::lookup("nope").is_err());
}

#[test]
fn logsumexp_estimate_is_close_to_exact() {
    // Rows ±e₁, ±e₂: minimized at 0 with value log 4.
    let p = registry::lookup("lse-2").unwrap();
    assert!(p.oracle.f_star_is_estimate);
    assert!((p.oracle.f_star - 4f64.ln()).abs() < 1e-8);
    assert!(p.oracle.f_star >= 4f64.ln() - 1e-15);
}

#[test]
fn huber_values() {
    let o = make_huber(1.0, vec![0.0, 1.0]).unwrap();
    // 0.5·0.25 + (3 − 0.5)
    assert!((o.value(&[0.5, -2.0]) - 2.625).abs() < 1e-15);
    assert_eq!(o.gradient(&[0.5, -2.0]), vec![0.5, -1.0]);
    assert!(make_huber(0.0, vec![0.0]).is_err());
}

#[test]
fn singular_quadratic_minimizer() {
    let a = SymmetricMatrix::diag(&[2.0, 0.0]);
    let o = make_quadratic(a, vec![4.0, 0.0]).unwrap();
    assert_eq!(o.x_star.as_deref(), Some(&[2.0, 0.0][..]));
    assert!((o.f_star + 4.0).abs() < 1e-14);
}

#[test]
fn bad_inputs() {
    assert!(make_logsumexp(vec![], 1.0).is_err());
    assert!(make_logsumexp(vec![vec![1.0]], 0.0).is_err());
    let o = make_huber(1.0, vec![0.0]).unwrap();
    assert!(o.check_point(&[0.0, 1.0]).is_err());
    assert!(o.check_point(&[f64::NAN]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gradients_match_finite_differences(seed in any::<u64>(), dim in 1usize..6) {
        let mut rng = SplitMix64::new(seed);
        let q = random_quadratic(&mut rng, dim, seed % 2 == 0).unwrap();
        let rows: Vec<Vec<f64>> = (0..3).map(|_| rng.normal_vec(dim)).collect();
        let lse = make_logsumexp(rows, 0.7).unwrap();
        let hub = make_huber(0.5, rng.normal_vec(dim)).unwrap();
        let x = rng.normal_vec(dim);
        for o in [&q, &lse, &hub] {
            let g = o.gradient(&x);
            let fd = fd_gradient(|p| o.value(p), &x);
            let scale = 1.0 + g.iter().map(|v| v.abs()).fold(0.0, f64::max) + o.l;
            for (a, b) in g.iter().zip(&fd) {
                prop_assert!((a - b).abs() < 1e-5 * scale, "{a} vs {b}");
            }
            for i in 0..dim {
                prop_assert_eq!(o.coord_gradient(&x, i), g[i]);
            }
        }
    }

    #[test]
    fn random_quadratics_validate(seed in any::<u64>(), dim in 1usize..8) {
        let mut rng = SplitMix64::new(seed);
        let o = random_quadratic(&mut rng, dim, true).unwrap();
        let xs = o.x_star.clone().unwrap();
        let g = o.gradient(&xs);
        prop_assert!(g.iter().all(|v| v.abs() < 1e-9 * (1.0 + o.l)));
        prop_assert!(validate(&o, 50, seed).unwrap().passed);
    }
}

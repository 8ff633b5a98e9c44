use accel_core::inequalities::*;
use accel_core::oracles::random_quadratic;
use accel_core::rng::{CoordinateSampler, SplitMix64};
use accel_core::vecops::{dot, norm_sq, sub};
use proptest::prelude::*;

#[test]
fn interpolation_of_two_parabola_samples() {
    let s = |x: f64| (vec![x], vec![x], 0.5 * x * x);
    assert!(check_interpolable(&[s(-1.0), s(2.0)], 1.0).interpolable);
    assert!(check_interpolable(&[s(0.0)], 1.0).interpolable);
    let bad = [(vec![0.0], vec![0.0], 0.0), (vec![1.0], vec![0.0], 1.0)];
    assert!(!check_interpolable(&bad, 1.0).interpolable);
}

proptest! {
    #[test]
    fn convexity_minus_cocoercivity_is_gradient_gap(seed in any::<u64>(), dim in 1usize..6) {
        let mut rng = SplitMix64::new(seed);
        let o = random_quadratic(&mut rng, dim, false).unwrap();
        let a = Sample::at(&o, &rng.normal_vec(dim));
        let b = Sample::at(&o, &rng.normal_vec(dim));
        let co = cocoercivity(&a, &b, o.l);
        let cv = convexity(&a, &b);
        let gap = norm_sq(&sub(&a.g, &b.g)) / (2.0 * o.l);
        prop_assert!(co >= -1e-9 * (1.0 + a.f.abs() + b.f.abs()));
        prop_assert!(((cv - co) - gap).abs() <= 1e-12 * cv.abs().max(gap).max(1.0));
        // Direct arithmetic reference.
        let direct = a.f - b.f - dot(&b.g, &sub(&a.x, &b.x)) - gap;
        prop_assert!((co - direct).abs() <= 1e-12 * direct.abs().max(1.0));
    }

    #[test]
    fn gradient_step_holds_at_exact_step(seed in any::<u64>(), dim in 1usize..6) {
        let mut rng = SplitMix64::new(seed);
        let o = random_quadratic(&mut rng, dim, false).unwrap();
        let a = Sample::at(&o, &rng.normal_vec(dim));
        let y: Vec<f64> = a.x.iter().zip(&a.g).map(|(x, g)| x - g / o.l).collect();
        let r = gradient_step(&a, o.value(&y), o.l);
        prop_assert!(r >= -1e-9 * (1.0 + a.f.abs()));
    }

    #[test]
    fn coordinate_expectation_identity(seed in any::<u64>(), dim in 1usize..6) {
        let mut rng = SplitMix64::new(seed);
        let o = random_quadratic(&mut rng, dim, false).unwrap();
        let cl = o.coordinate_l().unwrap().to_vec();
        let sampler = CoordinateSampler::new(&cl, seed).unwrap();
        let s = sampler.s();
        let x = rng.normal_vec(dim);
        let d = rng.normal_vec(dim);
        let g = o.gradient(&x);
        let lhs: f64 = sampler
            .probabilities()
            .iter()
            .enumerate()
            .map(|(i, p)| p * (s / cl[i].sqrt()) * g[i] * d[i])
            .sum();
        let rhs = dot(&g, &d);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
    }

    #[test]
    fn coordinate_inequalities_hold(seed in any::<u64>(), dim in 1usize..6) {
        let mut rng = SplitMix64::new(seed);
        let o = random_quadratic(&mut rng, dim, false).unwrap();
        let cl = o.coordinate_l().unwrap().to_vec();
        let a = Sample::at(&o, &rng.normal_vec(dim));
        let i = (seed % dim as u64) as usize;
        let b = Sample::at(&o, &rng.normal_vec(dim));
        let scale = 1.0 + a.f.abs() + b.f.abs();
        prop_assert!(coord_cocoercivity(&a, &b, i, cl[i]) >= -1e-9 * scale);
        let mut y = a.x.clone();
        y[i] -= a.g[i] / cl[i];
        prop_assert!(coord_gradient_step(&a, o.value(&y), i, cl[i]) >= -1e-9 * scale);
    }
}

use accel_core::coeffs::{phi_next, theta_next, theta_tilde_from, CoefficientTable};
use proptest::prelude::*;

/// Naive recomputation used as the reference for the cached table.
fn naive(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut th = vec![1.0];
    let mut ph = vec![0.0];
    for k in 0..n {
        let t: f64 = th[k];
        th.push((1.0 + (4.0 * t * t + 1.0).sqrt()) / 2.0);
        let p: f64 = ph[k];
        ph.push(p + 1.0 + (1.0 + p).sqrt());
    }
    (th, ph)
}

#[test]
fn table_matches_naive_recurrence() {
    let tb = CoefficientTable::new();
    let (th, ph) = naive(2000);
    for k in 0..=2000 {
        assert_eq!(tb.theta(k).unwrap(), th[k]);
        assert_eq!(tb.phi(k).unwrap(), ph[k]);
    }
}

#[test]
fn small_values() {
    let tb = CoefficientTable::new();
    assert_eq!(tb.theta(0).unwrap(), 1.0);
    assert!((tb.theta(1).unwrap() - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-15);
    assert_eq!(tb.phi(1).unwrap(), 2.0);
    assert!((tb.phi(2).unwrap() - (3.0 + 3f64.sqrt())).abs() < 1e-14);
    // θ̃_1 = (1 + √9)/2
    assert_eq!(tb.theta_tilde(1).unwrap(), 2.0);
    assert_eq!(theta_tilde_from(1.0), 2.0);
}

#[test]
fn theta_tilde_has_no_index_zero() {
    assert!(CoefficientTable::new().theta_tilde(0).is_err());
}

proptest! {
    #[test]
    fn theta_square_identity(k in 1usize..20_000) {
        let tb = CoefficientTable::global();
        let (t0, t1) = (tb.theta(k - 1).unwrap(), tb.theta(k).unwrap());
        // θ_k² − θ_k = θ_{k−1}²
        prop_assert!(((t1 * t1 - t1) - t0 * t0).abs() <= 1e-12 * t0 * t0);
        prop_assert!(theta_next(t0) == t1);
    }

    #[test]
    fn phi_step_identity(k in 0usize..20_000) {
        let tb = CoefficientTable::global();
        let (p0, p1) = (tb.phi(k).unwrap(), tb.phi(k + 1).unwrap());
        // Δφ_k from the closed step avoids cancellation in p1 − p0.
        let d = 1.0 + (1.0 + p0).sqrt();
        prop_assert!((p1 - p0 - d).abs() <= 1e-12 * p1.max(1.0));
        // Δφ_k² = Δφ_k + φ_{k+1}
        prop_assert!((d * d - d - p1).abs() <= 1e-12 * (d * d).max(1.0));
        prop_assert!(phi_next(p0) == p1);
    }

    #[test]
    fn theta_squared_below_phi(k in 0usize..20_000) {
        let tb = CoefficientTable::global();
        prop_assert!(tb.theta(k).unwrap().powi(2) <= tb.phi(k + 1).unwrap());
    }

    #[test]
    fn growth_is_quadratic(k in 1usize..20_000) {
        let tb = CoefficientTable::global();
        let kf = k as f64;
        let th = tb.theta(k).unwrap();
        prop_assert!(th >= (kf + 2.0) / 2.0 - 1e-12);
        prop_assert!(tb.phi(k).unwrap() >= (kf + 1.0).powi(2) / 4.0);
    }
}

use accel_core::linalg::*;
use proptest::prelude::*;

fn sym_strategy(max_dim: usize) -> impl Strategy<Value = SymmetricMatrix> {
    (1..=max_dim).prop_flat_map(|d| {
        prop::collection::vec(-5.0f64..5.0, d * d).prop_map(move |v| SymmetricMatrix::new(d, v).unwrap())
    })
}

/// Characteristic-polynomial check for 2×2 and 3×3 via trace invariants.
fn invariants(a: &SymmetricMatrix) -> (f64, f64) {
    let tr = a.trace();
    (tr, a.trace_product(a))
}

#[test]
fn known_spectra() {
    let a = SymmetricMatrix::from_rows(&[vec![2.0, -1.0, 0.0], vec![-1.0, 2.0, -1.0], vec![0.0, -1.0, 2.0]]).unwrap();
    let ev = eigenvalues_sym(&a).unwrap();
    let r2 = 2f64.sqrt();
    for (got, want) in ev.iter().zip([2.0 - r2, 2.0, 2.0 + r2]) {
        assert!((got - want).abs() < 1e-13, "{got} vs {want}");
    }
}

#[test]
fn schur_matches_block_formula() {
    let a = SymmetricMatrix::from_rows(&[vec![4.0, 1.0, 2.0], vec![1.0, 3.0, 0.5], vec![2.0, 0.5, 2.0]]).unwrap();
    let s = schur_complement(&a, 2, 2.0).unwrap();
    // [[4 − 4/2, 1 − 1/2], [·, 3 − 0.25/2]]
    assert!((s.get(0, 0) - 2.0).abs() < 1e-15);
    assert!((s.get(0, 1) - 0.5).abs() < 1e-15);
    assert!((s.get(1, 1) - 2.875).abs() < 1e-15);
    assert!(schur_complement(&a, 2, 1.0).is_err());
}

#[test]
fn least_squares_rank_deficient_is_minimum_norm() {
    // Two identical columns: minimum-norm solution splits evenly.
    let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0], vec![0.0, 0.0]]).unwrap();
    let sol = solve_ls(&a, &[2.0, 4.0, 0.0]).unwrap();
    assert_eq!(sol.deficiency, 1);
    assert!((sol.x[0] - 1.0).abs() < 1e-12 && (sol.x[1] - 1.0).abs() < 1e-12);
    assert!(sol.residual < 1e-12);
}

#[test]
fn least_squares_needs_tall_matrix() {
    let a = Matrix::zeros(1, 2);
    assert!(solve_ls(&a, &[0.0]).is_err());
}

proptest! {
    #[test]
    fn eigen_reconstructs(a in sym_strategy(7)) {
        let e = eigen_sym(&a).unwrap();
        let d = a.dim();
        let scale = a.frobenius_norm().max(1.0);
        for i in 0..d {
            for j in 0..d {
                let v: f64 = (0..d).map(|k| e.vectors.get(i, k) * e.values[k] * e.vectors.get(j, k)).sum();
                prop_assert!((v - a.get(i, j)).abs() <= 1e-11 * scale);
            }
        }
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let (tr, fro2) = invariants(&a);
        prop_assert!((e.values.iter().sum::<f64>() - tr).abs() <= 1e-11 * scale);
        prop_assert!((e.values.iter().map(|v| v * v).sum::<f64>() - fro2).abs() <= 1e-10 * scale * scale);
    }

    #[test]
    fn gram_is_psd(rows in 1usize..8, cols in 1usize..6, seed in prop::collection::vec(-3.0f64..3.0, 48)) {
        let data: Vec<f64> = seed.iter().cycle().take(rows * cols).copied().collect();
        let m = Matrix::new(rows, cols, data).unwrap();
        let g = m.gram();
        let r = is_psd(&g, 1e-10 * g.frobenius_norm().max(1.0)).unwrap();
        prop_assert!(r.psd);
    }

    #[test]
    fn least_squares_recovers_consistent_solution(
        x in prop::collection::vec(-2.0f64..2.0, 3),
        noise in prop::collection::vec(-1.0f64..1.0, 15),
    ) {
        // Well-conditioned 5×3 matrix: identity on top plus perturbation.
        let mut a = Matrix::zeros(5, 3);
        for i in 0..5 {
            for j in 0..3 {
                let v = if i == j { 3.0 } else { 0.0 } + noise[i * 3 + j];
                a.set(i, j, v);
            }
        }
        let b = a.mul_vec(&x);
        let sol = solve_ls(&a, &b).unwrap();
        prop_assert_eq!(sol.deficiency, 0);
        for (u, v) in sol.x.iter().zip(&x) {
            prop_assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn schur_preserves_psd(a in sym_strategy(6)) {
        // A Aᵀ + I is positive definite, so every Schur complement is too.
        let m = a.matmul(&a);
        let d = a.dim();
        let mut data = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                data[i * d + j] = m.get(i, j) + if i == j { 1.0 } else { 0.0 };
            }
        }
        let p = SymmetricMatrix::new(d, data).unwrap();
        if d > 1 {
            let s = schur_complement(&p, d - 1, p.get(d - 1, d - 1)).unwrap();
            let ev = eigenvalues_sym(&s).unwrap();
            prop_assert!(ev[0] > 1.0 - 1e-9);
        }
    }
}

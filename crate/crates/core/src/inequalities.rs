//! Residuals (left side minus right side) of the smooth convex inequality
//! families. A genuinely L-smooth convex function gives nonnegative values.

use crate::error::{Error, Result};
use crate::oracles::SmoothOracle;
use crate::vecops::{dot, norm_sq, sub};
use serde::Serialize;

/// Relative tolerance used when judging a residual nonnegative.
pub const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityKind {
    /// f(x) − f(y) − ⟨∇f(y), x − y⟩ − ‖∇f(x) − ∇f(y)‖²/(2L)
    Cocoercivity,
    /// f(x) − f(y) − ‖∇f(x)‖²/(2L), with y the step taken from x
    GradientStep,
    /// f(x) − f(y) − ⟨∇f(y), x − y⟩
    Convexity,
    /// f(x) − f(y) − ⟨∇f(y), x − y⟩ − |∇ᵢf(x) − ∇ᵢf(y)|²/(2Lᵢ)
    CoordCocoercivity,
    /// f(x) − f(y) − |∇ᵢf(x)|²/(2Lᵢ)
    CoordGradientStep,
}

impl InequalityKind {
    pub fn is_coordinate(self) -> bool {
        matches!(self, Self::CoordCocoercivity | Self::CoordGradientStep)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InequalityResidual {
    pub kind: InequalityKind,
    pub value: f64,
    /// max(1, |f(x)|, |f(y)|, ‖∇f(x)‖²/L)
    pub scale: f64,
    pub coordinate: Option<usize>,
}

impl InequalityResidual {
    pub fn holds(&self) -> bool {
        self.value >= -RESIDUAL_TOL * self.scale
    }
}

/// Function value and gradient at a point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub x: Vec<f64>,
    pub f: f64,
    pub g: Vec<f64>,
}

impl Sample {
    pub fn at(oracle: &SmoothOracle, x: &[f64]) -> Self {
        let (f, g) = oracle.eval(x);
        Self { x: x.to_vec(), f, g }
    }

    pub fn new(x: Vec<f64>, f: f64, g: Vec<f64>) -> Self {
        Self { x, f, g }
    }
}

/// Cocoercivity residual on (a, b) with modulus `l`.
pub fn cocoercivity(a: &Sample, b: &Sample, l: f64) -> f64 {
    convexity(a, b) - norm_sq(&sub(&a.g, &b.g)) / (2.0 * l)
}

/// Convexity residual on (a, b).
pub fn convexity(a: &Sample, b: &Sample) -> f64 {
    a.f - b.f - dot(&b.g, &sub(&a.x, &b.x))
}

/// Gradient-step residual from `a` to a point with value `f_next`.
pub fn gradient_step(a: &Sample, f_next: f64, l: f64) -> f64 {
    a.f - f_next - norm_sq(&a.g) / (2.0 * l)
}

/// Coordinate-wise cocoercivity residual on (a, b, i) with modulus `li`.
pub fn coord_cocoercivity(a: &Sample, b: &Sample, i: usize, li: f64) -> f64 {
    convexity(a, b) - (a.g[i] - b.g[i]).powi(2) / (2.0 * li)
}

/// Coordinate-wise gradient-step residual from `a` to a point with value `f_next`.
pub fn coord_gradient_step(a: &Sample, f_next: f64, i: usize, li: f64) -> f64 {
    a.f - f_next - a.g[i] * a.g[i] / (2.0 * li)
}

/// Evaluates the named inequality at (x, y). `l_override` replaces the
/// modulus (global L, or Lᵢ for coordinate kinds).
pub fn residual(
    kind: InequalityKind,
    oracle: &SmoothOracle,
    x: &[f64],
    y: &[f64],
    i: Option<usize>,
    l_override: Option<f64>,
) -> Result<InequalityResidual> {
    oracle.check_point(x)?;
    oracle.check_point(y)?;
    let a = Sample::at(oracle, x);
    let b = Sample::at(oracle, y);
    let l = l_override.unwrap_or(oracle.l);
    let modulus = |i: Option<usize>| -> Result<(usize, f64)> {
        let i = i.ok_or(Error::MissingCoordinateData)?;
        if i >= oracle.dim {
            return Err(Error::Dimension { expected: oracle.dim, got: i });
        }
        let li = match l_override {
            Some(v) => v,
            None => oracle.coordinate_l()?[i],
        };
        Ok((i, li))
    };
    let (value, coordinate, m) = match kind {
        InequalityKind::Cocoercivity => (cocoercivity(&a, &b, l), None, l),
        InequalityKind::GradientStep => (gradient_step(&a, b.f, l), None, l),
        InequalityKind::Convexity => (convexity(&a, &b), None, l),
        InequalityKind::CoordCocoercivity => {
            let (i, li) = modulus(i)?;
            (coord_cocoercivity(&a, &b, i, li), Some(i), li)
        }
        InequalityKind::CoordGradientStep => {
            let (i, li) = modulus(i)?;
            (coord_gradient_step(&a, b.f, i, li), Some(i), li)
        }
    };
    let scale = 1f64.max(a.f.abs()).max(b.f.abs()).max(norm_sq(&a.g) / m);
    Ok(InequalityResidual { kind, value, scale, coordinate })
}

#[derive(Debug, Clone, Serialize)]
pub struct InterpolationReport {
    pub interpolable: bool,
    /// (i, j, residual) of the most violated ordered pair.
    pub worst: Option<(usize, usize, f64)>,
}

/// Checks fᵢ − fⱼ − ⟨gⱼ, xᵢ − xⱼ⟩ ≥ ‖gᵢ − gⱼ‖²/(2L) over all ordered pairs of
/// (x, g, f) triplets.
pub fn check_interpolable(triplets: &[(Vec<f64>, Vec<f64>, f64)], l: f64) -> InterpolationReport {
    let mut worst: Option<(usize, usize, f64)> = None;
    let mut ok = true;
    for (i, (xi, gi, fi)) in triplets.iter().enumerate() {
        for (j, (xj, gj, fj)) in triplets.iter().enumerate() {
            if i == j {
                continue;
            }
            let v = fi - fj - dot(gj, &sub(xi, xj)) - norm_sq(&sub(gi, gj)) / (2.0 * l);
            let scale = 1f64.max(fi.abs()).max(fj.abs()).max(norm_sq(gi) / l);
            if v < -RESIDUAL_TOL * scale {
                ok = false;
            }
            if worst.is_none_or(|(_, _, w)| v < w) {
                worst = Some((i, j, v));
            }
        }
    }
    InterpolationReport { interpolable: ok, worst }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymmetricMatrix;
    use crate::oracles::make_quadratic;

    #[test]
    fn identity_pair_and_exact_step() {
        let o = make_quadratic(SymmetricMatrix::diag(&[3.0]), vec![0.0]).unwrap();
        let r = residual(InequalityKind::Convexity, &o, &[0.7], &[0.7], None, None).unwrap();
        assert_eq!(r.value, 0.0);
        let r = residual(InequalityKind::GradientStep, &o, &[1.0], &[0.0], None, None).unwrap();
        assert!(r.value.abs() < 1e-15);
    }

    #[test]
    fn coordinate_kinds_need_index() {
        let o = make_quadratic(SymmetricMatrix::diag(&[1.0, 2.0]), vec![0.0, 0.0]).unwrap();
        let e = residual(InequalityKind::CoordCocoercivity, &o, &[1.0, 1.0], &[0.0, 0.0], None, None);
        assert!(matches!(e, Err(Error::MissingCoordinateData)));
    }

    #[test]
    fn interpolation_examples() {
        assert!(check_interpolable(&[(vec![0.0], vec![0.0], 0.0)], 1.0).interpolable);
        let bad = [(vec![0.0], vec![0.0], 0.0), (vec![1.0], vec![0.0], 1.0)];
        assert!(!check_interpolable(&bad, 1.0).interpolable);
        let good = [(vec![1.0], vec![1.0], 0.5), (vec![-2.0], vec![-2.0], 2.0)];
        assert!(check_interpolable(&good, 1.0).interpolable);
    }
}

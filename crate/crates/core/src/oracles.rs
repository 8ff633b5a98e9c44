//! Test functions exposing value, gradient and per-coordinate gradient, with
//! registered smoothness constants and (where available) the minimizer.

use crate::error::{Error, Result};
use crate::linalg::{eigen_sym, SymmetricMatrix};
use crate::rng::SplitMix64;
use crate::vecops::{dist_sq, dot, norm, norm_sq, sub};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub enum OracleKind {
    /// ½ xᵀAx − bᵀx
    Quadratic { a: SymmetricMatrix, b: Vec<f64> },
    /// scale · log Σ exp(aᵢᵀx / scale)
    LogSumExp { rows: Vec<Vec<f64>>, scale: f64 },
    /// Σ huber_δ(xᵢ − cᵢ)
    Huber { delta: f64, center: Vec<f64> },
}

/// An L-smooth convex function with oracle access.
#[derive(Debug, Clone, Serialize)]
pub struct SmoothOracle {
    pub id: String,
    pub dim: usize,
    pub l: f64,
    pub coordinate_l: Option<Vec<f64>>,
    pub x_star: Option<Vec<f64>>,
    pub f_star: f64,
    /// True when `f_star` comes from a numerical run rather than a formula.
    pub f_star_is_estimate: bool,
    pub kind: OracleKind,
}

impl SmoothOracle {
    pub fn value(&self, x: &[f64]) -> f64 {
        match &self.kind {
            OracleKind::Quadratic { a, b } => 0.5 * dot(x, &a.mul_vec(x)) - dot(b, x),
            OracleKind::LogSumExp { rows, scale } => {
                let z: Vec<f64> = rows.iter().map(|r| dot(r, x) / scale).collect();
                let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                scale * (m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln())
            }
            OracleKind::Huber { delta, center } => x
                .iter()
                .zip(center)
                .map(|(xi, ci)| huber(xi - ci, *delta))
                .sum(),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            OracleKind::Quadratic { a, b } => sub(&a.mul_vec(x), b),
            OracleKind::LogSumExp { rows, scale } => {
                let z: Vec<f64> = rows.iter().map(|r| dot(r, x) / scale).collect();
                let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let w: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
                let total: f64 = w.iter().sum();
                let mut g = vec![0.0; self.dim];
                for (r, wi) in rows.iter().zip(&w) {
                    for (gj, rj) in g.iter_mut().zip(r) {
                        *gj += wi / total * rj;
                    }
                }
                g
            }
            OracleKind::Huber { delta, center } => x
                .iter()
                .zip(center)
                .map(|(xi, ci)| (xi - ci).clamp(-delta, *delta))
                .collect(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> (f64, Vec<f64>) {
        (self.value(x), self.gradient(x))
    }

    /// ∇ᵢf(x), taken from the full gradient.
    pub fn coord_gradient(&self, x: &[f64], i: usize) -> f64 {
        self.gradient(x)[i]
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: x.len() });
        }
        if !crate::vecops::all_finite(x) {
            return Err(Error::NonFinite("starting point".into()));
        }
        Ok(())
    }

    /// ‖x₀ − x⋆‖², requiring a known minimizer.
    pub fn dist_sq_to_min(&self, x0: &[f64]) -> Result<f64> {
        let xs = self.x_star.as_ref().ok_or(Error::MissingMinimizer)?;
        Ok(dist_sq(x0, xs))
    }

    pub fn coordinate_l(&self) -> Result<&[f64]> {
        self.coordinate_l.as_deref().ok_or(Error::MissingCoordinateData)
    }

    pub fn with_id(mut self, id: &str) -> Self {
        self.id = id.to_string();
        self
    }
}

fn huber(t: f64, delta: f64) -> f64 {
    if t.abs() <= delta {
        0.5 * t * t
    } else {
        delta * (t.abs() - 0.5 * delta)
    }
}

/// f(x) = ½xᵀAx − bᵀx with L = λ_max(A), coordinate constants diag(A) and the
/// minimum-norm minimizer.
pub fn make_quadratic(a: SymmetricMatrix, b: Vec<f64>) -> Result<SmoothOracle> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::Dimension { expected: n, got: b.len() });
    }
    let eig = eigen_sym(&a)?;
    let top = eig.values[n - 1].max(0.0);
    let tol = 1e-10 * top.max(1.0);
    if eig.values[0] < -tol {
        return Err(Error::NotPsd { min_eigenvalue: eig.values[0] });
    }
    let mut x_star = vec![0.0; n];
    for (j, &lam) in eig.values.iter().enumerate() {
        if lam > tol {
            let v = eig.vector(j);
            let c = dot(&v, &b) / lam;
            for (xi, vi) in x_star.iter_mut().zip(&v) {
                *xi += c * vi;
            }
        }
    }
    let res = norm(&sub(&a.mul_vec(&x_star), &b));
    if res > 1e-9 * (1.0 + norm(&b)) {
        return Err(Error::InvalidArgument(
            "b is not in the range of A, the quadratic is unbounded below".into(),
        ));
    }
    let coordinate_l: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    let coordinate_l = if coordinate_l.iter().all(|v| *v > 0.0) { Some(coordinate_l) } else { None };
    let mut o = SmoothOracle {
        id: "quadratic".into(),
        dim: n,
        l: top,
        coordinate_l,
        x_star: Some(x_star.clone()),
        f_star: 0.0,
        f_star_is_estimate: false,
        kind: OracleKind::Quadratic { a, b },
    };
    if !(o.l > 0.0) {
        return Err(Error::InvalidArgument("A must be nonzero".into()));
    }
    o.f_star = o.value(&x_star);
    Ok(o)
}

/// Coordinate-separable Huber loss about `center`; L = 1 and every
/// coordinate constant is 1.
pub fn make_huber(delta: f64, center: Vec<f64>) -> Result<SmoothOracle> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument("delta must be positive".into()));
    }
    let n = center.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty center".into()));
    }
    Ok(SmoothOracle {
        id: "huber".into(),
        dim: n,
        l: 1.0,
        coordinate_l: Some(vec![1.0; n]),
        x_star: Some(center.clone()),
        f_star: 0.0,
        f_star_is_estimate: false,
        kind: OracleKind::Huber { delta, center },
    })
}

/// scale · log Σ exp(aᵢᵀx / scale), registered with L = λ_max(AᵀA)/scale.
/// The optimal value is estimated by a long accelerated run and flagged.
pub fn make_logsumexp(rows: Vec<Vec<f64>>, scale: f64) -> Result<SmoothOracle> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("logsumexp needs at least one row".into()));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument("scale must be positive".into()));
    }
    let n = rows[0].len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidArgument("rows must share a positive length".into()));
    }
    let a = crate::linalg::Matrix::from_rows(&rows)?;
    let top = eigen_sym(&a.gram())?.values[n - 1];
    let mut o = SmoothOracle {
        id: "logsumexp".into(),
        dim: n,
        l: top / scale,
        coordinate_l: None,
        x_star: None,
        f_star: 0.0,
        f_star_is_estimate: true,
        kind: OracleKind::LogSumExp { rows, scale },
    };
    if o.l == 0.0 {
        // Constant function: every point is a minimizer.
        o.l = 1.0;
        o.x_star = Some(vec![0.0; n]);
        o.f_star = o.value(&vec![0.0; n]);
        o.f_star_is_estimate = false;
        return Ok(o);
    }
    o.f_star = estimate_min(&o, 20_000);
    Ok(o)
}

/// Minimum function value seen along an FGM run of `iters` steps from 0.
fn estimate_min(o: &SmoothOracle, iters: usize) -> f64 {
    let mut x = vec![0.0; o.dim];
    let mut z = x.clone();
    let mut t = 1.0f64;
    let mut best = o.value(&x);
    for _ in 0..iters {
        let g = o.gradient(&x);
        let y = crate::vecops::axpy(&x, -1.0 / o.l, &g);
        z = crate::vecops::axpy(&z, -t / o.l, &g);
        let tn = crate::coeffs::theta_next(t);
        x = crate::vecops::mix(1.0 - 1.0 / tn, &y, &z);
        t = tn;
        best = best.min(o.value(&y));
    }
    best
}

/// Random PSD quadratic: A = MMᵀ for Gaussian M and b = Aw for Gaussian w.
/// With `singular`, the smallest eigenvalue of A is zeroed first.
pub fn random_quadratic(rng: &mut SplitMix64, dim: usize, singular: bool) -> Result<SmoothOracle> {
    let m: Vec<Vec<f64>> = (0..dim).map(|_| rng.normal_vec(dim)).collect();
    let mut data = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            data[i * dim + j] = dot(&m[i], &m[j]);
        }
    }
    let mut a = SymmetricMatrix::new(dim, data)?;
    if singular && dim > 1 {
        let eig = eigen_sym(&a)?;
        let v0 = eig.vector(0);
        a.add_outer(-eig.values[0], &v0);
    }
    // b = Aw keeps b in the range of A even when A is badly conditioned.
    let w = rng.normal_vec(dim);
    let b = a.mul_vec(&w);
    Ok(make_quadratic(a, b)?.with_id("random-quadratic"))
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub pairs: usize,
    pub worst_cocoercivity: f64,
    pub worst_coordinate: Option<f64>,
    pub worst_lipschitz_ratio: f64,
    pub passed: bool,
}

/// Samples `pairs` random point pairs around the minimizer (or the origin)
/// and checks cocoercivity, coordinate-wise cocoercivity, the Lipschitz bound
/// on the gradient and f(x⋆) = f⋆.
pub fn validate(o: &SmoothOracle, pairs: usize, seed: u64) -> Result<ValidationReport> {
    let mut rng = SplitMix64::new(seed);
    let center = o.x_star.clone().unwrap_or_else(|| vec![0.0; o.dim]);
    let radius = match &o.kind {
        OracleKind::Huber { delta, .. } => 3.0 * delta,
        _ => 3.0,
    };
    let point = |rng: &mut SplitMix64| -> Vec<f64> {
        center.iter().map(|c| c + rng.uniform(-radius, radius)).collect()
    };
    let mut worst = f64::INFINITY;
    let mut worst_coord: Option<f64> = None;
    let mut worst_ratio: f64 = 0.0;
    let mut passed = true;
    for _ in 0..pairs {
        let x = point(&mut rng);
        let y = point(&mut rng);
        let (fx, gx) = o.eval(&x);
        let (fy, gy) = o.eval(&y);
        let gd = sub(&gx, &gy);
        let v = fx - fy - dot(&gy, &sub(&x, &y)) - norm_sq(&gd) / (2.0 * o.l);
        let scale = 1f64.max(fx.abs()).max(fy.abs()).max(norm_sq(&gx) / o.l);
        worst = worst.min(v / scale);
        if v < -1e-9 * scale {
            passed = false;
        }
        let dx = norm(&sub(&x, &y));
        if dx > 0.0 {
            let ratio = norm(&gd) / (o.l * dx);
            worst_ratio = worst_ratio.max(ratio);
            if ratio > 1.0 + 1e-9 {
                passed = false;
            }
        }
        if let Some(cl) = &o.coordinate_l {
            let i = (rng.next_u64() % o.dim as u64) as usize;
            let delta = rng.uniform(-radius, radius);
            let mut xi = x.clone();
            xi[i] += delta;
            let (fxi, gxi) = o.eval(&xi);
            let v = fxi - fx - gx[i] * delta - (gxi[i] - gx[i]).powi(2) / (2.0 * cl[i]);
            let s = 1f64.max(fxi.abs()).max(fx.abs());
            let r = v / s;
            worst_coord = Some(worst_coord.map_or(r, |w| w.min(r)));
            if v < -1e-9 * s {
                passed = false;
            }
        }
    }
    if let Some(xs) = &o.x_star {
        let f = o.value(xs);
        if (f - o.f_star).abs() > 1e-12 * f.abs().max(1.0) {
            passed = false;
        }
    }
    Ok(ValidationReport {
        pairs,
        worst_cocoercivity: worst,
        worst_coordinate: worst_coord,
        worst_lipschitz_ratio: worst_ratio,
        passed,
    })
}

pub mod registry {
    //! Named problems addressable from the command line.

    use super::*;

    /// A registered oracle together with its default starting point.
    #[derive(Debug, Clone, Serialize)]
    pub struct Problem {
        pub oracle: SmoothOracle,
        pub x0: Vec<f64>,
        pub description: &'static str,
    }

    pub const PROBLEMS: &[(&str, &str)] = &[
        ("quad-diag-10", "0.5 x'diag(1,10)x, x0 = (1, 1)"),
        ("quad-1d", "2x^2 (A = [4]), x0 = 1"),
        ("huber-1d", "Huber loss, delta = 1, center 0, x0 = 3"),
        ("huber-4", "Huber loss in R^4, delta = 1, center (1,-2,0.5,0), x0 = (4,2,-3,1)"),
        ("lse-2", "log-sum-exp of rows +-e1, +-e2, scale 1, x0 = (1, -2)"),
    ];

    pub fn ids() -> Vec<&'static str> {
        PROBLEMS.iter().map(|(id, _)| *id).collect()
    }

    /// Builds and validates the problem named `id`.
    pub fn lookup(id: &str) -> Result<Problem> {
        let description = PROBLEMS
            .iter()
            .find(|(k, _)| *k == id)
            .map(|(_, d)| *d)
            .ok_or_else(|| Error::UnknownId(id.to_string()))?;
        let (oracle, x0) = match id {
            "quad-diag-10" => (
                make_quadratic(SymmetricMatrix::diag(&[1.0, 10.0]), vec![0.0, 0.0])?,
                vec![1.0, 1.0],
            ),
            "quad-1d" => (make_quadratic(SymmetricMatrix::diag(&[4.0]), vec![0.0])?, vec![1.0]),
            "huber-1d" => (make_huber(1.0, vec![0.0])?, vec![3.0]),
            "huber-4" => (
                make_huber(1.0, vec![1.0, -2.0, 0.5, 0.0])?,
                vec![4.0, 2.0, -3.0, 1.0],
            ),
            "lse-2" => (
                make_logsumexp(
                    vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]],
                    1.0,
                )?,
                vec![1.0, -2.0],
            ),
            _ => return Err(Error::UnknownId(id.to_string())),
        };
        let oracle = oracle.with_id(id);
        let report = validate(&oracle, 1000, 0x5EED)?;
        if !report.passed {
            return Err(Error::Mismatch(format!("problem {id} failed smoothness validation")));
        }
        Ok(Problem { oracle, x0, description })
    }
}

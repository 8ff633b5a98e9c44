//! Fixed-step first-order methods.
//!
//! A fixed-step method is x_{i+1} = x_i − (1/L) Σ_{k≤i} h_{i+1,k} ∇f(x_k)
//! with a lower-triangular matrix h that depends only on N and the method.
//! Built-in methods are specified by their three-sequence form
//!
//! ```text
//! y_{k+1} = x_k − ∇f(x_k)/L
//! z_{k+1} = z_k − c_k ∇f(x_k)/L
//! x_{k+1} = a_k y_{k+1} + (1 − a_k) z_{k+1}
//! ```
//!
//! which is unrolled into h by tracking x_k = x_0 − Σ_t s_{k,t} ∇f(x_t)/L.

use crate::coeffs::CoefficientTable;
use crate::error::{Error, Result};
use crate::oracles::SmoothOracle;
use crate::trajectory::Trajectory;
use crate::vecops::{axpy, dist_sq, mix, norm};
use serde::Serialize;

pub use crate::trajectory::Method;

/// Per-step coefficients (c_k, a_k) for k = 0..N−1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThreeSequence {
    pub c: Vec<f64>,
    pub a: Vec<f64>,
}

impl ThreeSequence {
    pub fn n(&self) -> usize {
        self.c.len()
    }

    /// Coefficients of `method` for horizon `n`.
    pub fn for_method(method: Method, n: usize, table: &CoefficientTable) -> Result<Self> {
        if !method.is_fixed_step() || method == Method::Custom {
            return Err(Error::Unsupported(format!("{method} has no fixed-step generator")));
        }
        if n < method.min_horizon() {
            return Err(Error::HorizonTooSmall {
                method: method.id().into(),
                n,
                min: method.min_horizon(),
            });
        }
        let nf = n as f64;
        let mut c = Vec::with_capacity(n);
        let mut a = Vec::with_capacity(n);
        for k in 0..n {
            let kf = k as f64;
            let (ck, ak) = match method {
                Method::Gd => (1.0, 1.0),
                Method::Fgm => (table.theta(k)?, 1.0 - 1.0 / table.theta(k + 1)?),
                Method::Ogm => {
                    let next = if k + 1 == n { table.theta_tilde(n)? } else { table.theta(k + 1)? };
                    (2.0 * table.theta(k)?, 1.0 - 1.0 / next)
                }
                Method::OgmG => {
                    if k == 0 {
                        let tt = table.theta_tilde(n)?;
                        ((1.0 + tt) / 2.0, table.theta(n - 1)?.powi(4) / tt.powi(4))
                    } else {
                        let hi = table.theta(n - k)?;
                        (hi, table.theta(n - k - 1)?.powi(4) / hi.powi(4))
                    }
                }
                Method::OrcFFlat => {
                    let (p0, p1, p2) = (table.phi(k)?, table.phi(k + 1)?, table.phi(k + 2)?);
                    (p1 - p0, p1 / p2)
                }
                Method::OblFFlat => {
                    if k + 1 == n {
                        let s = (nf * (nf + 1.0) / 2.0).sqrt();
                        (kf + 1.0, s / (s + 1.0))
                    } else {
                        (kf + 1.0, 1.0 - 2.0 / (kf + 3.0))
                    }
                }
                Method::OblGFlat => {
                    if k == 0 {
                        ((1.0 + (nf * (nf + 1.0) / 2.0).sqrt()) / 2.0, (nf - 2.0) / (nf + 2.0))
                    } else {
                        ((nf - kf + 1.0) / 2.0, (nf - kf - 2.0) / (nf - kf + 2.0))
                    }
                }
                _ => unreachable!(),
            };
            c.push(ck);
            a.push(ak);
        }
        Ok(Self { c, a })
    }
}

/// Lower-triangular step-size matrix with method metadata.
#[derive(Debug, Clone, Serialize)]
pub struct FsfoSchedule {
    pub n: usize,
    pub method: Method,
    /// h[i][k] for 0 ≤ k < i ≤ N (row 0 and entries k ≥ i are zero).
    pub h: Vec<Vec<f64>>,
    /// s[i][k] = Σ_{j=k+1}^{i} h[j][k]
    pub s: Vec<Vec<f64>>,
    /// Three-sequence coefficients the matrix was generated from.
    pub generator: Option<ThreeSequence>,
}

impl FsfoSchedule {
    /// Schedule from an explicit lower-triangular matrix given as rows
    /// h[1..=N], row i holding h_{i,0..i−1}.
    pub fn custom(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::HorizonTooSmall { method: "custom".into(), n: 0, min: 1 });
        }
        let mut h = vec![vec![0.0; n + 1]; n + 1];
        for (idx, row) in rows.iter().enumerate() {
            let i = idx + 1;
            if row.len() != i {
                return Err(Error::Dimension { expected: i, got: row.len() });
            }
            if !crate::vecops::all_finite(row) {
                return Err(Error::NonFinite("schedule entry".into()));
            }
            h[i][..i].copy_from_slice(row);
        }
        Ok(Self::from_h(Method::Custom, h, None))
    }

    /// Unrolls a three-sequence form into its h-matrix.
    pub fn from_three_sequence(method: Method, seq: ThreeSequence) -> Self {
        let n = seq.n();
        let mut s = vec![vec![0.0; n + 1]; n + 1];
        let mut zc = vec![0.0; n + 1];
        for k in 0..n {
            let mut y = s[k].clone();
            y[k] += 1.0;
            zc[k] += seq.c[k];
            let a = seq.a[k];
            s[k + 1] = y.iter().zip(&zc).map(|(yv, zv)| a * yv + (1.0 - a) * zv).collect();
        }
        let mut h = vec![vec![0.0; n + 1]; n + 1];
        for i in 1..=n {
            for k in 0..i {
                h[i][k] = s[i][k] - s[i - 1][k];
            }
        }
        Self { n, method, h, s, generator: Some(seq) }
    }

    fn from_h(method: Method, h: Vec<Vec<f64>>, generator: Option<ThreeSequence>) -> Self {
        let n = h.len() - 1;
        let mut s = vec![vec![0.0; n + 1]; n + 1];
        for i in 1..=n {
            for k in 0..=n {
                s[i][k] = s[i - 1][k] + h[i][k];
            }
        }
        Self { n, method, h, s, generator }
    }

    pub fn h(&self, i: usize, k: usize) -> f64 {
        self.h[i][k]
    }

    pub fn s(&self, i: usize, k: usize) -> f64 {
        self.s[i][k]
    }

    /// Largest entrywise difference between two schedules of equal horizon.
    pub fn max_abs_diff(&self, other: &FsfoSchedule) -> Result<f64> {
        if self.n != other.n {
            return Err(Error::Dimension { expected: self.n, got: other.n });
        }
        let mut m: f64 = 0.0;
        for i in 1..=self.n {
            for k in 0..i {
                m = m.max((self.h[i][k] - other.h[i][k]).abs());
            }
        }
        Ok(m)
    }
}

/// Builds the h-matrix of a built-in fixed-step method.
pub fn build_schedule(method: Method, n: usize, table: &CoefficientTable) -> Result<FsfoSchedule> {
    let seq = ThreeSequence::for_method(method, n, table)?;
    Ok(FsfoSchedule::from_three_sequence(method, seq))
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    /// Replay the three-sequence recursion and compare iterate streams.
    pub replay_check: bool,
    /// Relative tolerance of the replay comparison (times ‖x₀ − x⋆‖).
    pub replay_tol: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { replay_check: true, replay_tol: 1e-9 }
    }
}

/// Runs the three-sequence recursion directly with modulus `l`.
pub fn run_three_sequence(
    method: Method,
    seq: &ThreeSequence,
    oracle: &SmoothOracle,
    x0: &[f64],
    l: f64,
) -> Result<Trajectory> {
    oracle.check_point(x0)?;
    let n = seq.n();
    let mut t = Trajectory::empty(method, &oracle.id, n, l);
    let (f0, g0) = oracle.eval(x0);
    push_point(&mut t, x0.to_vec(), x0.to_vec(), x0.to_vec(), f0, f0, g0, l);
    for k in 0..n {
        let xk = &t.x[k];
        let g = &t.gx[k];
        let y = axpy(xk, -1.0 / l, g);
        let z = axpy(&t.z[k], -seq.c[k] / l, g);
        let x = mix(seq.a[k], &y, &z);
        finish_step(&mut t, oracle, k, x, y, z, l)?;
    }
    Ok(t)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn push_point(t: &mut Trajectory, x: Vec<f64>, y: Vec<f64>, z: Vec<f64>, fx: f64, fy: f64, g: Vec<f64>, l: f64) {
    t.x.push(x);
    t.y.push(y);
    t.z.push(z);
    t.fx.push(fx);
    t.fy.push(fy);
    t.gx.push(g);
    t.lk.push(l);
}

pub(crate) fn finish_step(
    t: &mut Trajectory,
    oracle: &SmoothOracle,
    k: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    l: f64,
) -> Result<()> {
    if !(crate::vecops::all_finite(&x) && crate::vecops::all_finite(&y) && crate::vecops::all_finite(&z)) {
        return Err(Error::NonFinite(format!("iterate at k = {}", k + 1)));
    }
    let (fx, g) = oracle.eval(&x);
    let fy = oracle.value(&y);
    push_point(t, x, y, z, fx, fy, g, l);
    Ok(())
}

/// Executes the h-matrix recursion. x_k comes from the h-matrix; y_k and z_k
/// come from the generator when there is one (y_k = x_{k−1} − ∇f(x_{k−1})/L
/// otherwise). With `replay_check`, the generator's own x stream must match
/// to `replay_tol · ‖x₀ − x⋆‖` (a machine-precision floor applies when x₀ is
/// already optimal or x⋆ is unknown).
pub fn run_fsfo(
    schedule: &FsfoSchedule,
    oracle: &SmoothOracle,
    x0: &[f64],
    opts: &RunOptions,
) -> Result<Trajectory> {
    oracle.check_point(x0)?;
    let n = schedule.n;
    let l = oracle.l;
    let replay = match &schedule.generator {
        Some(seq) => Some(run_three_sequence(schedule.method, seq, oracle, x0, l)?),
        None => None,
    };
    let mut t = Trajectory::empty(schedule.method, &oracle.id, n, l);
    let (f0, g0) = oracle.eval(x0);
    push_point(&mut t, x0.to_vec(), x0.to_vec(), x0.to_vec(), f0, f0, g0, l);
    for i in 0..n {
        let mut x = t.x[i].clone();
        for k in 0..=i {
            let h = schedule.h[i + 1][k];
            if h != 0.0 {
                for (xj, gj) in x.iter_mut().zip(&t.gx[k]) {
                    *xj -= h / l * gj;
                }
            }
        }
        let (y, z) = match &replay {
            Some(r) => (r.y[i + 1].clone(), r.z[i + 1].clone()),
            None => {
                let y = axpy(&t.x[i], -1.0 / l, &t.gx[i]);
                (y, x.clone())
            }
        };
        finish_step(&mut t, oracle, i, x, y, z, l)?;
    }
    if opts.replay_check {
        if let Some(r) = &replay {
            let base = match &oracle.x_star {
                Some(xs) => dist_sq(x0, xs).sqrt(),
                None => norm(x0),
            };
            let floor = 64.0 * f64::EPSILON * (1.0 + norm(x0));
            let tol = (opts.replay_tol * base).max(floor);
            for k in 0..=n {
                let dev = dist_sq(&t.x[k], &r.x[k]).sqrt();
                if dev > tol {
                    return Err(Error::ReplayMismatch { k, deviation: dev });
                }
            }
        }
    }
    Ok(t)
}

/// x̃_k = (√(k(k+1)/2)·y_k + z_k) / (√(k(k+1)/2) + 1).
pub fn obl_f_tilde(t: &Trajectory, k: usize, _table: &CoefficientTable) -> Result<Vec<f64>> {
    if k >= t.len() {
        return Err(Error::Dimension { expected: t.len(), got: k });
    }
    let kf = k as f64;
    let s = (kf * (kf + 1.0) / 2.0).sqrt();
    Ok(mix(s / (s + 1.0), &t.y[k], &t.z[k]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymmetricMatrix;
    use crate::oracles::make_quadratic;

    #[test]
    fn gd_schedule_is_identity_band() {
        let s = build_schedule(Method::Gd, 4, &CoefficientTable::new()).unwrap();
        for i in 1..=4 {
            for k in 0..i {
                assert_eq!(s.h(i, k), if k + 1 == i { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn first_row_examples() {
        let t = CoefficientTable::new();
        assert!((build_schedule(Method::Fgm, 1, &t).unwrap().h(1, 0) - 1.0).abs() < 1e-15);
        let n = 5.0f64;
        let s = build_schedule(Method::OblGFlat, 5, &t).unwrap();
        let want = (n + (2.0 * n * (n + 1.0)).sqrt()) / (n + 2.0);
        assert!((s.h(1, 0) - want).abs() < 1e-14);
        assert!(matches!(
            build_schedule(Method::OblGFlat, 2, &t),
            Err(Error::HorizonTooSmall { .. })
        ));
    }

    #[test]
    fn one_step_to_minimizer() {
        let o = make_quadratic(SymmetricMatrix::diag(&[3.0]), vec![0.0]).unwrap();
        let t = CoefficientTable::new();
        let s = build_schedule(Method::Gd, 1, &t).unwrap();
        let tr = run_fsfo(&s, &o, &[1.0], &RunOptions::default()).unwrap();
        assert_eq!(tr.x[1], vec![0.0]);
        let s = build_schedule(Method::Fgm, 1, &t).unwrap();
        let tr = run_fsfo(&s, &o, &[1.0], &RunOptions::default()).unwrap();
        assert_eq!(tr.y[1], vec![0.0]);
        assert_eq!(tr.fy[1], 0.0);
    }

    #[test]
    fn tilde_weights() {
        let o = make_quadratic(SymmetricMatrix::diag(&[1.0, 2.0]), vec![0.0, 0.0]).unwrap();
        let t = CoefficientTable::new();
        let s = build_schedule(Method::OblFFlat, 4, &t).unwrap();
        let tr = run_fsfo(&s, &o, &[1.0, -1.0], &RunOptions::default()).unwrap();
        assert_eq!(obl_f_tilde(&tr, 0, &t).unwrap(), tr.x[0]);
        let x1 = obl_f_tilde(&tr, 1, &t).unwrap();
        for j in 0..2 {
            assert!((x1[j] - 0.5 * (tr.y[1][j] + tr.z[1][j])).abs() < 1e-15);
        }
        let x2 = obl_f_tilde(&tr, 2, &t).unwrap();
        let r3 = 3f64.sqrt();
        for j in 0..2 {
            assert!((x2[j] - (r3 * tr.y[2][j] + tr.z[2][j]) / (r3 + 1.0)).abs() < 1e-15);
        }
    }
}

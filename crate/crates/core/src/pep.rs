//! Closed-form dual certificates of the performance estimation problem.
//!
//! Points are embedded as unit vectors in dimension N + 2: x₀ ↦ e₀ and
//! ∇f(x_t) ↦ e_{t+1}, so x_k = e₀ − (1/L) Σ_t s_{k,t} e_{t+1}. A certificate
//! gives multipliers whose S-matrix is PSD; for the optimal schedule the
//! Schur-reduced block (or S itself for the gradient-norm method) vanishes.

use crate::coeffs::CoefficientTable;
use crate::error::{Error, Result};
use crate::fsfo::{build_schedule, FsfoSchedule};
use crate::linalg::{eigenvalues_sym, is_psd, schur_complement, solve_ls, Matrix, SymmetricMatrix};
use crate::lyapunov::bounds;
use crate::trajectory::Method;
use serde::Serialize;

/// Methods with a closed-form certificate.
pub const CERTIFIED_METHODS: [Method; 4] = [Method::OrcFFlat, Method::OblFFlat, Method::Fgm, Method::OblGFlat];

/// Tolerances of the certificate checks.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CertTolerances {
    pub linear: f64,
    pub multiplier: f64,
    /// Relative to L.
    pub zero_block: f64,
    /// Relative to L.
    pub eigenvalue: f64,
    pub tau: f64,
    pub h_match: f64,
    pub kkt: f64,
}

impl Default for CertTolerances {
    fn default() -> Self {
        Self {
            linear: 1e-12,
            multiplier: 1e-14,
            zero_block: 1e-9,
            eigenvalue: 1e-9,
            tau: 1e-12,
            h_match: 1e-9,
            kkt: 1e-8,
        }
    }
}

impl CertTolerances {
    /// Scales every tolerance by `factor` relative to the defaults.
    pub fn scaled(factor: f64) -> Self {
        let d = Self::default();
        Self {
            linear: d.linear * factor,
            multiplier: d.multiplier * factor,
            zero_block: d.zero_block * factor,
            eigenvalue: d.eigenvalue * factor,
            tau: d.tau * factor,
            h_match: d.h_match * factor,
            kkt: d.kkt * factor,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DualCertificate {
    pub method: Method,
    pub n: usize,
    pub l: f64,
    /// λ₀..λ_N with λ₀ = 0 (unused).
    pub lambda: Vec<f64>,
    /// β₀..β_N (β₀..β_{N−1} for the gradient-norm method).
    pub beta: Vec<f64>,
    pub alpha: Option<Vec<f64>>,
    pub tau: f64,
    /// γ = −Lβ.
    pub gamma: Vec<f64>,
    /// r_{k,t} for 0 ≤ t < k ≤ N (row k has k entries). For the gradient-norm
    /// method row k holds the symmetric gradient block entries t ≤ k instead.
    pub r: Vec<Vec<f64>>,
    /// Free scale of the gradient-norm multipliers, fixed by the g_N equation.
    pub normalization: Option<f64>,
    pub c: Option<Vec<f64>>,
    pub k_matrix: Option<SymmetricMatrix>,
}

fn check_method(method: Method, n: usize) -> Result<()> {
    if !CERTIFIED_METHODS.contains(&method) {
        return Err(Error::Unsupported(format!("no certificate for {method}")));
    }
    if n < method.min_horizon() {
        return Err(Error::HorizonTooSmall { method: method.id().into(), n, min: method.min_horizon() });
    }
    Ok(())
}

/// β̂₀ = 2(√(N(N+1)/2) − 1)/((N−1)N(N+1)(N+2)).
pub fn obl_g_beta_hat(n: usize) -> f64 {
    let nf = n as f64;
    2.0 * ((nf * (nf + 1.0) / 2.0).sqrt() - 1.0) / ((nf - 1.0) * nf * (nf + 1.0) * (nf + 2.0))
}

/// Multipliers of the certificate from their closed forms.
pub fn build_certificate(method: Method, n: usize, l: f64, table: &CoefficientTable) -> Result<DualCertificate> {
    check_method(method, n)?;
    if !(l.is_finite() && l > 0.0) {
        return Err(Error::InvalidArgument(format!("L must be positive, got {l}")));
    }
    let nf = n as f64;
    let mut lambda = vec![0.0; n + 1];
    let mut normalization = None;
    let (beta, alpha, tau) = match method {
        Method::OblGFlat => {
            let bh = obl_g_beta_hat(n);
            let nn = nf * (nf + 1.0);
            let lam = 2.0 * l / (0.5 + 1.0 / nn - bh);
            normalization = Some(lam);
            for (k, v) in lambda.iter_mut().enumerate().skip(1) {
                let m = (n - k) as f64;
                *v = lam / ((m + 1.0) * (m + 2.0));
            }
            let mut beta = vec![bh * lam];
            for k in 1..n {
                let m = (n - k) as f64;
                beta.push(2.0 * lam / (m * (m + 1.0) * (m + 2.0)));
            }
            (beta, None, lam * (1.0 / nn - bh))
        }
        _ => {
            let tau = match method {
                Method::OrcFFlat => {
                    let pn = table.phi(n + 1)?;
                    for (k, v) in lambda.iter_mut().enumerate().skip(1) {
                        *v = table.phi(k)? / pn;
                    }
                    l / (2.0 * pn)
                }
                Method::Fgm => {
                    let tn = table.theta(n)?.powi(2);
                    for (k, v) in lambda.iter_mut().enumerate().skip(1) {
                        *v = table.theta(k - 1)?.powi(2) / tn;
                    }
                    l / (2.0 * tn)
                }
                _ => {
                    let sn = nf * (nf + 1.0) / 2.0;
                    let t = 1.0 / (sn + sn.sqrt());
                    for (k, v) in lambda.iter_mut().enumerate().skip(1) {
                        *v = (k * (k + 1)) as f64 / 2.0 * t;
                    }
                    l / (nn_plus_root(n))
                }
            };
            let mut beta = vec![lambda[1]];
            for k in 1..n {
                beta.push(lambda[k + 1] - lambda[k]);
            }
            beta.push(1.0 - lambda[n]);
            let alpha = (method != Method::OblFFlat).then(|| {
                let mut a: Vec<f64> = (0..n).map(|k| lambda[k + 1]).collect();
                a.push(1.0);
                a
            });
            (beta, alpha, tau)
        }
    };
    let gamma = beta.iter().map(|b| -l * b).collect();
    let mut cert = DualCertificate {
        method,
        n,
        l,
        lambda,
        beta,
        alpha,
        tau,
        gamma,
        r: Vec::new(),
        normalization,
        c: None,
        k_matrix: None,
    };
    cert.r = match method {
        Method::OrcFFlat => orc_r(n, &cert.lambda, table)?,
        Method::OblGFlat => {
            let zero = FsfoSchedule::custom(&zero_rows(n))?;
            let s0 = assemble_s(&cert, &zero)?;
            (0..=n).map(|k| (0..=k).map(|t| -2.0 * l * s0.get(k + 1, t + 1)).collect()).collect()
        }
        _ => {
            let sched = build_schedule(method, n, table)?;
            (0..=n)
                .map(|k| (0..k).map(|t| cert.lambda[k] * sched.h(k, t) + cert.beta[k] * sched.s(k, t)).collect())
                .collect()
        }
    };
    Ok(cert)
}

fn nn_plus_root(n: usize) -> f64 {
    let q = (n * (n + 1)) as f64;
    q + (2.0 * q).sqrt()
}

fn zero_rows(n: usize) -> Vec<Vec<f64>> {
    (1..=n).map(|i| vec![0.0; i]).collect()
}

/// r of the φ-based certificate: r_{k,t} = Δφ_k Δφ_t / φ_{N+1}, plus λ_k on
/// the subdiagonal t = k − 1.
fn orc_r(n: usize, lambda: &[f64], table: &CoefficientTable) -> Result<Vec<Vec<f64>>> {
    let phi = table.phi_range(n + 2)?;
    let pn = phi[n + 1];
    let d = |k: usize| phi[k + 1] - phi[k];
    Ok((0..=n)
        .map(|k| {
            (0..k)
                .map(|t| {
                    let base = d(k) * d(t) / pn;
                    if t + 1 == k {
                        lambda[k] + base
                    } else {
                        base
                    }
                })
                .collect()
        })
        .collect())
}

fn unit(d: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[i] = 1.0;
    v
}

/// Embedded x_k for every k of a schedule.
fn embedded_points(schedule: &FsfoSchedule, l: f64) -> Vec<Vec<f64>> {
    let n = schedule.n;
    let d = n + 2;
    (0..=n)
        .map(|k| {
            let mut x = unit(d, 0);
            for t in 0..k {
                x[t + 1] -= schedule.s(k, t) / l;
            }
            x
        })
        .collect()
}

/// The S-matrix of `cert` evaluated on `schedule`.
pub fn assemble_s(cert: &DualCertificate, schedule: &FsfoSchedule) -> Result<SymmetricMatrix> {
    let n = cert.n;
    if schedule.n != n {
        return Err(Error::Dimension { expected: n, got: schedule.n });
    }
    let l = cert.l;
    let d = n + 2;
    let x = embedded_points(schedule, l);
    let g: Vec<Vec<f64>> = (0..=n).map(|t| unit(d, t + 1)).collect();
    let mut s = SymmetricMatrix::zeros(d);
    let lam = &cert.lambda;
    let diff = |k: usize| -> Vec<f64> { x[k - 1].iter().zip(&x[k]).map(|(a, b)| a - b).collect() };
    let gdiff = |k: usize| -> Vec<f64> { g[k - 1].iter().zip(&g[k]).map(|(a, b)| a - b).collect() };
    match cert.method {
        Method::OblGFlat => {
            let c = cert.tau;
            s.add_outer(c / (2.0 * l) - 1.0, &g[n]);
            for k in 1..=n {
                s.add_sym_outer(lam[k] / 2.0, &g[k], &diff(k));
                s.add_outer(lam[k] / (2.0 * l), &gdiff(k));
            }
            for k in 0..n {
                s.add_sym_outer(cert.beta[k] / 2.0, &g[k], &x[n]);
                s.add_sym_outer(-cert.beta[k] / 2.0, &g[k], &x[k]);
            }
        }
        method => {
            s.add_outer(cert.tau, &x[0]);
            for k in 0..=n {
                let diag = match (method, &cert.alpha) {
                    (Method::OrcFFlat, Some(a)) => a[k] + cert.beta[k],
                    (Method::Fgm, Some(a)) => a[k],
                    _ => 0.0,
                };
                if diag != 0.0 {
                    s.add_outer(diag / (2.0 * l), &g[k]);
                }
                s.add_sym_outer(-cert.beta[k] / 2.0, &g[k], &x[k]);
            }
            for k in 1..=n {
                s.add_sym_outer(lam[k] / 2.0, &g[k], &diff(k));
                if method == Method::OblFFlat {
                    s.add_outer(lam[k] / (2.0 * l), &gdiff(k));
                } else {
                    s.add_sym_outer(-lam[k] / (2.0 * l), &g[k - 1], &g[k]);
                }
            }
        }
    }
    Ok(s)
}

/// Diagonal entry of L·S at the last index used as the Schur pivot.
pub fn schur_pivot(cert: &DualCertificate) -> Result<f64> {
    let ln = cert.lambda[cert.n];
    match cert.method {
        Method::OrcFFlat => Ok((2.0 - ln) / 2.0),
        Method::Fgm => Ok(0.5),
        Method::OblFFlat => Ok(ln / 2.0),
        m => Err(Error::Unsupported(format!("{m} has no Schur reduction"))),
    }
}

/// Schur complement of `s` at `pos` with the given pivot.
pub fn schur_reduce(s: &SymmetricMatrix, pos: usize, pivot: f64) -> Result<SymmetricMatrix> {
    schur_complement(s, pos, pivot)
}

/// Reduced block of L·S with respect to the last gradient.
pub fn reduced_block(cert: &DualCertificate, schedule: &FsfoSchedule) -> Result<SymmetricMatrix> {
    let ls = assemble_s(cert, schedule)?.scaled(cert.l);
    let last = ls.dim() - 1;
    schur_reduce(&ls, last, schur_pivot(cert)?)
}

/// The reduced block of the φ-based certificate assembled directly from its
/// block formula (basis x₀, g₀..g_{N−1}), independent of
/// [`assemble_s`].
pub fn closed_form_reduced_block(cert: &DualCertificate, schedule: &FsfoSchedule) -> Result<SymmetricMatrix> {
    if cert.method != Method::OrcFFlat {
        return Err(Error::Unsupported("closed-form block exists for orc-f-flat only".into()));
    }
    let n = cert.n;
    if schedule.n != n {
        return Err(Error::Dimension { expected: n, got: schedule.n });
    }
    let lam = &cert.lambda;
    let h = |k: usize, t: usize| schedule.h(k, t);
    let sum_h = |k: usize, t: usize| -> f64 { (t + 1..=k).map(|j| h(j, t)).sum() };
    let lam_next = |k: usize| if k < n { lam[k + 1] } else { 1.0 };
    // Q over g₀..g_{N−1}.
    let mut q = SymmetricMatrix::zeros(n);
    let e = |i: usize| unit(n, i);
    q.add_outer(lam[1] / 2.0, &e(0));
    for k in 1..n {
        q.add_outer((lam[k + 1] - 2.0 * lam[k]) / 2.0, &e(k));
        let d: Vec<f64> = e(k - 1).iter().zip(&e(k)).map(|(a, b)| a - b).collect();
        q.add_outer(lam[k] / 2.0, &d);
    }
    q.add_outer(lam[n] / 2.0, &e(n - 1));
    for k in 1..n {
        for t in 0..k {
            let coef = lam[k] * h(k, t) / 2.0 + (lam_next(k) - lam[k]) / 2.0 * sum_h(k, t);
            q.add_sym_outer(coef, &e(k), &e(t));
        }
    }
    let mut qv = vec![0.0; n];
    for (t, v) in qv.iter_mut().enumerate().take(n.saturating_sub(1)) {
        *v = lam[n] * h(n, t) / 2.0 + (1.0 - lam[n]) / 2.0 * sum_h(n, t);
    }
    qv[n - 1] = h(n, n - 1) / 2.0 - lam[n] / 2.0;
    let piv = (2.0 - lam[n]) / 2.0;
    let tau_p = 2.0 * cert.l * cert.tau;
    let g_n = cert.gamma[n];
    let mut out = SymmetricMatrix::zeros(n + 1);
    out.set(0, 0, 0.5 * (tau_p - g_n * g_n / (2.0 - lam[n])));
    for i in 0..n {
        out.set(0, i + 1, 0.5 * (cert.gamma[i] - 2.0 * qv[i] * g_n / (2.0 - lam[n])));
        for j in 0..n {
            out.set(i + 1, j + 1, q.get(i, j) - qv[i] * qv[j] / piv);
        }
    }
    Ok(out)
}

/// Schedule recovered from (λ, β, r).
pub fn recover_h(cert: &DualCertificate) -> Result<FsfoSchedule> {
    let n = cert.n;
    if cert.method == Method::OblGFlat {
        return recover_h_gradient(cert);
    }
    let mut h = vec![vec![0.0; n + 1]; n + 1];
    let mut s = vec![vec![0.0; n + 1]; n + 1];
    for k in 1..=n {
        let div = cert.lambda[k] + cert.beta[k];
        if div.abs() <= 1e-300 || div.abs() < 1e-14 * cert.lambda[k].abs().max(1.0) {
            return Err(Error::SingularRow { k, pivot: div });
        }
        for t in 0..k {
            h[k][t] = (cert.r[k][t] - cert.beta[k] * s[k - 1][t]) / div;
            s[k][t] = s[k - 1][t] + h[k][t];
        }
    }
    let rows: Vec<Vec<f64>> = (1..=n).map(|i| h[i][..i].to_vec()).collect();
    let mut sched = FsfoSchedule::custom(&rows)?;
    sched.method = cert.method;
    Ok(sched)
}

/// The gradient block of 2L·S is affine in h; solve for the h that maps it
/// to zero, given r = −2L·S(h = 0).
fn recover_h_gradient(cert: &DualCertificate) -> Result<FsfoSchedule> {
    let n = cert.n;
    let l = cert.l;
    let zero = FsfoSchedule::custom(&zero_rows(n))?;
    let s0 = assemble_s(cert, &zero)?;
    let idx: Vec<(usize, usize)> = (1..=n).flat_map(|i| (0..i).map(move |k| (i, k))).collect();
    let pairs: Vec<(usize, usize)> = (0..=n).flat_map(|a| (a..=n).map(move |b| (a, b))).collect();
    let mut a = Matrix::zeros(pairs.len(), idx.len());
    for (col, &(i, k)) in idx.iter().enumerate() {
        let mut rows = zero_rows(n);
        rows[i - 1][k] = 1.0;
        let unit_sched = FsfoSchedule::custom(&rows)?;
        let si = assemble_s(cert, &unit_sched)?;
        for (row, &(p, q)) in pairs.iter().enumerate() {
            a.set(row, col, 2.0 * l * (si.get(p + 1, q + 1) - s0.get(p + 1, q + 1)));
        }
    }
    let b: Vec<f64> = pairs
        .iter()
        .map(|&(p, q)| if q <= p { cert.r[p][q] } else { cert.r[q][p] })
        .collect();
    let sol = solve_ls(&a, &b)?;
    if sol.deficiency > 0 {
        return Err(Error::SingularRow { k: 0, pivot: 0.0 });
    }
    let mut rows = zero_rows(n);
    for (col, &(i, k)) in idx.iter().enumerate() {
        rows[i - 1][k] = sol.x[col];
    }
    let mut sched = FsfoSchedule::custom(&rows)?;
    sched.method = cert.method;
    Ok(sched)
}

#[derive(Debug, Clone, Serialize)]
pub struct KktReport {
    pub method: Method,
    pub c: Vec<f64>,
    pub k_diag: Vec<f64>,
    pub k_matrix: SymmetricMatrix,
    pub k_min_eigenvalue: f64,
    /// |trace(S K)| / (‖S‖_F ‖K‖_F)
    pub complementary_slackness: f64,
    /// max |(L·S)·K|
    pub stationarity_residual: f64,
    /// max |cᵢ − ζᵢ K_ii| / max |c|, ζ the method's z-coefficients.
    pub coefficient_residual: f64,
    /// Σ cᵢ² / (L² K_ii)
    pub normalization: f64,
    pub passed: bool,
}

/// z-step coefficients ζ₀..ζ_N that the KKT multipliers follow.
fn zeta(method: Method, n: usize, table: &CoefficientTable) -> Result<Vec<f64>> {
    (0..=n)
        .map(|i| match method {
            Method::Fgm => table.theta(i),
            Method::OrcFFlat => Ok(table.phi(i + 1)? - table.phi(i)?),
            _ => Ok(if i < n {
                i as f64 + 1.0
            } else {
                let nf = n as f64;
                (nf * (nf + 1.0) / 2.0).sqrt()
            }),
        })
        .collect()
}

/// Builds the multiplier matrix K = [[1, cᵀ/L], [c/L, diag(K_d)]] and checks
/// PSD-ness, complementary slackness and stationarity.
pub fn verify_kkt(cert: &DualCertificate, table: &CoefficientTable, tol: f64) -> Result<KktReport> {
    let method = cert.method;
    if !matches!(method, Method::OrcFFlat | Method::OblFFlat | Method::Fgm) {
        return Err(Error::Unsupported(format!("no KKT construction for {method}")));
    }
    let n = cert.n;
    let l = cert.l;
    let sched = build_schedule(method, n, table)?;
    let s = assemble_s(cert, &sched)?;
    let a = s.scaled(l);
    let d = n + 2;
    let m = n + 1;
    let (c, kd) = if method == Method::Fgm {
        let th = table.theta_range(n)?;
        let mut c = vec![1.0];
        for i in 0..n {
            c.push(c[i] * (1.0 - 1.0 / (2.0 * th[i])));
        }
        let norm: f64 = c.iter().zip(&th).map(|(ci, ti)| ci * ti).sum();
        let c: Vec<f64> = c.iter().map(|ci| ci * l * l / norm).collect();
        let kd = c.iter().zip(&th).map(|(ci, ti)| ci / ti).collect();
        (c, kd)
    } else {
        let mut rows = Matrix::zeros(d * d, 2 * m);
        let mut rhs = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                let r = i * d + j;
                for p in 0..d {
                    let v = a.get(i, p);
                    if p == 0 && j == 0 {
                        rhs[r] -= v;
                    } else if p == 0 {
                        rows.set(r, j - 1, rows.get(r, j - 1) + v / l);
                    } else if j == 0 {
                        rows.set(r, p - 1, rows.get(r, p - 1) + v / l);
                    } else if p == j {
                        rows.set(r, m + p - 1, rows.get(r, m + p - 1) + v);
                    }
                }
            }
        }
        let sol = solve_ls(&rows, &rhs)?;
        (sol.x[..m].to_vec(), sol.x[m..].to_vec())
    };
    let mut k = SymmetricMatrix::zeros(d);
    k.set(0, 0, 1.0);
    for i in 0..m {
        k.set(0, i + 1, c[i] / l);
        k.set(i + 1, i + 1, kd[i]);
    }
    let k_min = eigenvalues_sym(&k)?[0];
    let ak = a.matmul(&k);
    let stationarity_residual = ak.max_abs();
    let cs = s.trace_product(&k).abs() / (s.frobenius_norm() * k.frobenius_norm()).max(f64::MIN_POSITIVE);
    let z = zeta(method, n, table)?;
    let cmax = c.iter().fold(0f64, |a, b| a.max(b.abs())).max(f64::MIN_POSITIVE);
    let coefficient_residual = c.iter().zip(&kd).zip(&z).map(|((ci, ki), zi)| (ci - zi * ki).abs()).fold(0.0, f64::max) / cmax;
    let normalization = c.iter().zip(&kd).map(|(ci, ki)| ci * ci / (l * l * ki)).sum();
    let passed = k_min >= -tol
        && cs <= tol
        && stationarity_residual <= tol * l.max(1.0) * l.max(1.0)
        && coefficient_residual <= tol;
    Ok(KktReport {
        method,
        c,
        k_diag: kd,
        k_matrix: k,
        k_min_eigenvalue: k_min,
        complementary_slackness: cs,
        stationarity_residual,
        coefficient_residual,
        normalization,
        passed,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub method: Method,
    pub n: usize,
    pub l: f64,
    pub tau: f64,
    pub tau_expected: f64,
    pub tau_relative_error: f64,
    pub linear_residual: f64,
    pub min_multiplier: f64,
    /// max |entry| of the Schur-reduced block (of S itself for the gradient-norm method).
    pub zero_block_max: f64,
    pub min_eigenvalue: f64,
    pub h_match: f64,
    pub kkt: Option<KktReport>,
    pub certificate: DualCertificate,
    pub passed: bool,
    pub failures: Vec<String>,
}

/// Residual of the linear constraints among the multipliers.
pub fn linear_residual(cert: &DualCertificate) -> f64 {
    let n = cert.n;
    let lam = &cert.lambda;
    let l = cert.l;
    let mut r: f64 = 0.0;
    if cert.method == Method::OblGFlat {
        let nf = n as f64;
        let nn = nf * (nf + 1.0);
        let bh = obl_g_beta_hat(n);
        let scale = cert.normalization.unwrap_or(0.0);
        // g_N g_Nᵀ coefficient of S: λ_N/(2L) + c/(2L) − 1 = 0.
        r = r.max((lam[n] / (2.0 * l) + cert.tau / (2.0 * l) - 1.0).abs());
        r = r.max((cert.tau - scale * (1.0 / nn - bh)).abs() / l);
        r = r.max((cert.beta[0] - bh * scale).abs() / l);
        for k in 1..n {
            let m = (n - k) as f64;
            r = r.max((lam[k] - scale / ((m + 1.0) * (m + 2.0))).abs() / l);
            r = r.max((cert.beta[k] - 2.0 * scale / (m * (m + 1.0) * (m + 2.0))).abs() / l);
        }
        return r;
    }
    r = r.max((cert.beta[0] - lam[1]).abs());
    for k in 1..n {
        r = r.max((cert.beta[k] - (lam[k + 1] - lam[k])).abs());
    }
    r = r.max((cert.beta[n] - (1.0 - lam[n])).abs());
    if let Some(a) = &cert.alpha {
        for k in 0..n {
            r = r.max((a[k] - lam[k + 1]).abs());
        }
        r = r.max((a[n] - 1.0).abs());
    }
    for (g, b) in cert.gamma.iter().zip(&cert.beta) {
        r = r.max((g + l * b).abs() / l);
    }
    r
}

/// Runs every certificate check for one (method, N, L).
pub fn check_certificate(
    method: Method,
    n: usize,
    l: f64,
    table: &CoefficientTable,
    tol: &CertTolerances,
) -> Result<CertificateReport> {
    let mut cert = build_certificate(method, n, l, table)?;
    let sched = build_schedule(method, n, table)?;
    let s = assemble_s(&cert, &sched)?;
    let tau_expected = match method {
        Method::OrcFFlat => bounds::orc(l, 1.0, n, table)?,
        Method::Fgm => bounds::fgm(l, 1.0, n, table)?,
        Method::OblFFlat => bounds::obl_f_tilde(l, 1.0, n),
        _ => bounds::obl_g(l, 1.0, n),
    };
    let tau_relative_error = (cert.tau - tau_expected).abs() / tau_expected.abs();
    let linear = linear_residual(&cert);
    let min_multiplier = cert
        .lambda
        .iter()
        .skip(1)
        .chain(&cert.beta)
        .chain(cert.alpha.iter().flatten())
        .chain(std::iter::once(&cert.tau))
        .fold(f64::INFINITY, |a, &b| a.min(b));
    let zero_block_max = if method == Method::OblGFlat {
        s.max_abs()
    } else {
        reduced_block(&cert, &sched)?.max_abs()
    };
    let psd = is_psd(&s, tol.eigenvalue * l)?;
    let rec = recover_h(&cert)?;
    let h_match = rec.max_abs_diff(&sched)?;
    let kkt = if method == Method::OblGFlat {
        None
    } else {
        let k = verify_kkt(&cert, table, tol.kkt)?;
        cert.c = Some(k.c.clone());
        cert.k_matrix = Some(k.k_matrix.clone());
        Some(k)
    };
    let mut failures = Vec::new();
    if linear > tol.linear {
        failures.push(format!("linear constraints: residual {linear:.3e}"));
    }
    if min_multiplier < -tol.multiplier {
        failures.push(format!("negative multiplier {min_multiplier:.3e}"));
    }
    if zero_block_max > tol.zero_block * l {
        failures.push(format!("zero block: max entry {zero_block_max:.3e}"));
    }
    if !psd.psd {
        failures.push(format!("S not PSD: min eigenvalue {:.3e}", psd.min_eigenvalue));
    }
    if tau_relative_error > tol.tau {
        failures.push(format!("tau mismatch: relative error {tau_relative_error:.3e}"));
    }
    if h_match > tol.h_match {
        failures.push(format!("recovered schedule differs by {h_match:.3e}"));
    }
    if let Some(k) = &kkt {
        if !k.passed {
            failures.push(format!(
                "KKT: min eig {:.3e}, slackness {:.3e}, stationarity {:.3e}, coefficients {:.3e}",
                k.k_min_eigenvalue, k.complementary_slackness, k.stationarity_residual, k.coefficient_residual
            ));
        }
    }
    Ok(CertificateReport {
        method,
        n,
        l,
        tau: cert.tau,
        tau_expected,
        tau_relative_error,
        linear_residual: linear,
        min_multiplier,
        zero_block_max,
        min_eigenvalue: psd.min_eigenvalue,
        h_match,
        kkt,
        passed: failures.is_empty(),
        failures,
        certificate: cert,
    })
}

/// Certificate reports for a range of horizons, computed in parallel.
pub fn sweep_certificates(
    method: Method,
    horizons: &[usize],
    l: f64,
    tol: &CertTolerances,
) -> Vec<Result<CertificateReport>> {
    let table = CoefficientTable::global();
    crate::par::par_map(horizons, |&n| check_certificate(method, n, l, table, tol))
}

impl CertificateReport {
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

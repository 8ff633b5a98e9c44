//! Methods whose steps depend on what the oracle returns: randomized
//! coordinate updates and backtracking line searches.

use crate::coeffs::CoefficientTable;
use crate::error::{Error, Result};
use crate::fsfo::{push_point, ThreeSequence};
use crate::inequalities::{cocoercivity, gradient_step, Sample};
use crate::oracles::SmoothOracle;
use crate::rng::CoordinateSampler;
use crate::trajectory::{JumpTerm, Method, Trajectory};
use crate::vecops::{all_finite, axpy, mix, norm_sq};

/// Safety valve on the number of η-multiplications in one step.
pub const MAX_BACKTRACKS: usize = 200;

/// Relative slack on search acceptance, absorbing rounding in the residual.
pub const ACCEPT_TOL: f64 = 1e-12;

/// z-step numerator and mixing weight of a randomized method at step k. The
/// z-step coefficient on coordinate i is `num / (S √Lᵢ)`.
pub fn coordinate_coeffs(method: Method, k: usize, table: &CoefficientTable) -> Result<(f64, f64)> {
    let kf = k as f64;
    match method {
        Method::FgmRc => Ok(((kf + 2.0) / 2.0, (kf + 1.0) / (kf + 3.0))),
        Method::FgmRcSharp => Ok((table.theta(k)?, 1.0 - 1.0 / table.theta(k + 1)?)),
        Method::OrcF => {
            let (p0, p1, p2) = (table.phi(k)?, table.phi(k + 1)?, table.phi(k + 2)?);
            Ok((p1 - p0, p1 / p2))
        }
        other => Err(Error::Unsupported(format!("{other} is not a coordinate method"))),
    }
}

/// Full-gradient method a randomized method reduces to when n = 1.
pub fn deterministic_counterpart(method: Method, n: usize, table: &CoefficientTable) -> Result<ThreeSequence> {
    let mut c = Vec::with_capacity(n);
    let mut a = Vec::with_capacity(n);
    for k in 0..n {
        let (ck, ak) = coordinate_coeffs(method, k, table)?;
        c.push(ck);
        a.push(ak);
    }
    Ok(ThreeSequence { c, a })
}

/// One coordinate step from (x_k, z_k) along coordinate i. Returns
/// (x_{k+1}, y_{k+1}, z_{k+1}).
#[allow(clippy::too_many_arguments)]
pub fn coordinate_step(
    method: Method,
    k: usize,
    x: &[f64],
    z: &[f64],
    g: &[f64],
    i: usize,
    coordinate_l: &[f64],
    s: f64,
    table: &CoefficientTable,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let (num, a) = coordinate_coeffs(method, k, table)?;
    let li = coordinate_l[i];
    let mut y = x.to_vec();
    y[i] = x[i] + (-1.0 / li) * g[i];
    let mut zn = z.to_vec();
    zn[i] = z[i] + (-num / (s * li.sqrt())) * g[i];
    let xn = mix(a, &y, &zn);
    Ok((xn, y, zn))
}

fn run_coordinate(method: Method, oracle: &SmoothOracle, x0: &[f64], n: usize, seed: u64) -> Result<Trajectory> {
    oracle.check_point(x0)?;
    let cl = oracle.coordinate_l()?.to_vec();
    let mut sampler = CoordinateSampler::new(&cl, seed)?;
    let s = sampler.s();
    let table = CoefficientTable::global();
    let mut t = Trajectory::empty(method, &oracle.id, n, oracle.l);
    t.seed = Some(seed);
    t.s = Some(s);
    let (f0, g0) = oracle.eval(x0);
    push_point(&mut t, x0.to_vec(), x0.to_vec(), x0.to_vec(), f0, f0, g0, oracle.l);
    for k in 0..n {
        let i = sampler.sample();
        let (x, y, z) = coordinate_step(method, k, &t.x[k], &t.z[k], &t.gx[k], i, &cl, s, table)?;
        if !(all_finite(&x) && all_finite(&z)) {
            return Err(Error::NonFinite(format!("iterate at k = {}", k + 1)));
        }
        t.coords.push(i);
        let (fx, g) = oracle.eval(&x);
        let fy = oracle.value(&y);
        push_point(&mut t, x, y, z, fx, fy, g, oracle.l);
    }
    Ok(t)
}

/// ORC-F: coordinate i drawn with probability √Lᵢ/S, z-step Δφₖ/(S√Lᵢ),
/// mixing φₖ₊₁/φₖ₊₂.
pub fn run_orc_f(oracle: &SmoothOracle, x0: &[f64], n: usize, seed: u64) -> Result<Trajectory> {
    run_coordinate(Method::OrcF, oracle, x0, n, seed)
}

/// FGM-RC (`sharp = false`) or its θ-coefficient refinement (`sharp = true`).
pub fn run_fgm_rc(oracle: &SmoothOracle, x0: &[f64], n: usize, seed: u64, sharp: bool) -> Result<Trajectory> {
    let m = if sharp { Method::FgmRcSharp } else { Method::FgmRc };
    run_coordinate(m, oracle, x0, n, seed)
}

/// Backtracking parameters: initial estimate L₀ and growth factor η > 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearch {
    pub l0: f64,
    pub eta: f64,
}

impl LineSearch {
    pub fn new(l0: f64, eta: f64) -> Result<Self> {
        if !(l0.is_finite() && l0 > 0.0) {
            return Err(Error::InvalidArgument(format!("L0 must be positive, got {l0}")));
        }
        if !(eta.is_finite() && eta > 1.0) {
            return Err(Error::InvalidArgument(format!("eta must exceed 1, got {eta}")));
        }
        Ok(Self { l0, eta })
    }
}

fn accept_scale(values: &[f64]) -> f64 {
    values.iter().fold(f64::MIN_POSITIVE, |m, v| m.max(v.abs()))
}

/// Candidate produced for a trial modulus M.
struct Candidate {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    fx: f64,
    g: Vec<f64>,
}

/// Shared backtracking loop for the cocoercivity-searched methods.
/// `propose(k, M)` builds the step for trial modulus M.
fn backtrack_coco(
    t: &mut Trajectory,
    oracle: &SmoothOracle,
    ls: &LineSearch,
    k: usize,
    mut propose: impl FnMut(f64) -> (Vec<f64>, Vec<f64>, Vec<f64>),
) -> Result<(Candidate, f64)> {
    let cur = Sample::new(t.x[k].clone(), t.fx[k], t.gx[k].clone());
    let mut m = t.lk[k];
    for tries in 0..=MAX_BACKTRACKS {
        let (x, y, z) = propose(m);
        if !(all_finite(&x) && all_finite(&y) && all_finite(&z)) {
            return Err(Error::NonFinite(format!("iterate at k = {}", k + 1)));
        }
        let (fx, g) = oracle.eval(&x);
        let next = Sample::new(x, fx, g);
        let r = cocoercivity(&cur, &next, m);
        let scale = accept_scale(&[cur.f, next.f, norm_sq(&cur.g) / m, norm_sq(&next.g) / m]);
        if r >= -ACCEPT_TOL * scale {
            t.backtracks += tries;
            return Ok((Candidate { x: next.x, y, z, fx: next.f, g: next.g }, m));
        }
        m *= ls.eta;
    }
    Err(Error::LineSearch { k, max: MAX_BACKTRACKS })
}

fn start_line_search(method: Method, oracle: &SmoothOracle, x0: &[f64], n: usize, ls: &LineSearch) -> Result<Trajectory> {
    oracle.check_point(x0)?;
    let mut t = Trajectory::empty(method, &oracle.id, n, oracle.l);
    let (f0, g0) = oracle.eval(x0);
    push_point(&mut t, x0.to_vec(), x0.to_vec(), x0.to_vec(), f0, f0, g0, ls.l0);
    Ok(t)
}

fn accept(t: &mut Trajectory, oracle: &SmoothOracle, k: usize, c: Candidate, m: f64) {
    let fy = oracle.value(&c.y);
    if m > t.lk[k] {
        t.jumps.push(k);
    }
    push_point(t, c.x, c.y, c.z, c.fx, fy, c.g, m);
}

/// OBL-F: y = x − ∇f/M, z-step (k+1)/Lₖ with the estimate in force before
/// the search, mixing 1 − 2/(k+3). M grows by η until the cocoercivity
/// residual on (xₖ, xₖ₊₁) with modulus M is nonnegative.
pub fn run_obl_f(oracle: &SmoothOracle, x0: &[f64], n: usize, ls: &LineSearch) -> Result<Trajectory> {
    let mut t = start_line_search(Method::OblF, oracle, x0, n, ls)?;
    for k in 0..n {
        let kf = k as f64;
        let lk = t.lk[k];
        let xk = t.x[k].clone();
        let zk = t.z[k].clone();
        let g = t.gx[k].clone();
        let z = axpy(&zk, -(kf + 1.0) / lk, &g);
        let w = 1.0 - 2.0 / (kf + 3.0);
        let (cand, m) = backtrack_coco(&mut t, oracle, ls, k, |m| {
            let y = axpy(&xk, -1.0 / m, &g);
            (mix(w, &y, &z), y, z.clone())
        })?;
        let jumped = m > lk;
        let g_next_sq = norm_sq(&cand.g);
        accept(&mut t, oracle, k, cand, m);
        if jumped {
            let a = (kf + 1.0) * (kf + 2.0) / 2.0;
            let d = 1.0 / (lk * lk) - 1.0 / (m * m);
            t.jump_terms.push(JumpTerm {
                k,
                l_before: lk,
                l_after: m,
                current_grad_term: a * d * norm_sq(&g),
                next_grad_term: a * d * g_next_sq,
            });
        }
    }
    Ok(t)
}

/// Closed-form correction for a gradient-norm line-search jump at k.
pub fn obl_g_jump_correction(t: &Trajectory, k: usize) -> f64 {
    let m = (t.n - k) as f64;
    let (lk, l1) = (t.lk[k], t.lk[k + 1]);
    1.0 / (m * (m + 1.0))
        * (1.0 / lk - 1.0 / l1)
        * (t.fx[k] - 0.5 * (1.0 / lk + 1.0 / l1) * t.grad_norm_sq(k) - t.fx[t.n])
}

/// OBL-G: the gradient-norm counterpart. y = x − ∇f/M; the z-step uses the
/// estimate in force before the search, with coefficient (1 + √(N(N+1)/2))/2
/// at k = 0 and (N−k+1)/2 after; mixing (N−k−2)/(N−k+2). Requires N ≥ 3.
pub fn run_obl_g(oracle: &SmoothOracle, x0: &[f64], n: usize, ls: &LineSearch) -> Result<Trajectory> {
    if n < Method::OblG.min_horizon() {
        return Err(Error::HorizonTooSmall { method: "obl-g".into(), n, min: 3 });
    }
    let seq = ThreeSequence::for_method(Method::OblGFlat, n, CoefficientTable::global())?;
    let mut t = start_line_search(Method::OblG, oracle, x0, n, ls)?;
    for k in 0..n {
        let lk = t.lk[k];
        let xk = t.x[k].clone();
        let g = t.gx[k].clone();
        let z = axpy(&t.z[k], -seq.c[k] / lk, &g);
        let w = seq.a[k];
        let (cand, m) = backtrack_coco(&mut t, oracle, ls, k, |m| {
            let y = axpy(&xk, -1.0 / m, &g);
            (mix(w, &y, &z), y, z.clone())
        })?;
        accept(&mut t, oracle, k, cand, m);
    }
    // Corrections reference f(x_N), known only now.
    let jumps = t.jumps.clone();
    for k in jumps {
        let c = obl_g_jump_correction(&t, k);
        t.jump_terms.push(JumpTerm {
            k,
            l_before: t.lk[k],
            l_after: t.lk[k + 1],
            current_grad_term: c,
            next_grad_term: c,
        });
    }
    Ok(t)
}

/// FGM-BL: M grows by η until f(x − ∇f/M) ≤ f(x) − ‖∇f‖²/(2M); then the FGM
/// step runs with M in place of L.
pub fn run_fgm_bl(oracle: &SmoothOracle, x0: &[f64], n: usize, ls: &LineSearch) -> Result<Trajectory> {
    let table = CoefficientTable::global();
    let mut t = start_line_search(Method::FgmBl, oracle, x0, n, ls)?;
    for k in 0..n {
        let cur = Sample::new(t.x[k].clone(), t.fx[k], t.gx[k].clone());
        let mut m = t.lk[k];
        let mut found = None;
        for tries in 0..=MAX_BACKTRACKS {
            let y = axpy(&cur.x, -1.0 / m, &cur.g);
            let fy = oracle.value(&y);
            let r = gradient_step(&cur, fy, m);
            if r >= -ACCEPT_TOL * accept_scale(&[cur.f, fy, norm_sq(&cur.g) / m]) {
                t.backtracks += tries;
                found = Some(y);
                break;
            }
            m *= ls.eta;
        }
        let y = found.ok_or(Error::LineSearch { k, max: MAX_BACKTRACKS })?;
        let th = table.theta(k)?;
        let z = axpy(&t.z[k], -th / m, &cur.g);
        let x = mix(1.0 - 1.0 / table.theta(k + 1)?, &y, &z);
        if !(all_finite(&x) && all_finite(&z)) {
            return Err(Error::NonFinite(format!("iterate at k = {}", k + 1)));
        }
        let (fx, g) = oracle.eval(&x);
        accept(&mut t, oracle, k, Candidate { x, y, z, fx, g }, m);
    }
    Ok(t)
}

/// Dispatches a non-fixed-step method by id.
pub fn run_adaptive(
    method: Method,
    oracle: &SmoothOracle,
    x0: &[f64],
    n: usize,
    seed: u64,
    ls: &LineSearch,
) -> Result<Trajectory> {
    match method {
        Method::OrcF => run_orc_f(oracle, x0, n, seed),
        Method::FgmRc => run_fgm_rc(oracle, x0, n, seed, false),
        Method::FgmRcSharp => run_fgm_rc(oracle, x0, n, seed, true),
        Method::OblF => run_obl_f(oracle, x0, n, ls),
        Method::OblG => run_obl_g(oracle, x0, n, ls),
        Method::FgmBl => run_fgm_bl(oracle, x0, n, ls),
        other => Err(Error::Unsupported(format!("{other} is a fixed-step method"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymmetricMatrix;
    use crate::oracles::make_quadratic;

    fn diag_1_10() -> SmoothOracle {
        make_quadratic(SymmetricMatrix::diag(&[1.0, 10.0]), vec![0.0, 0.0]).unwrap()
    }

    #[test]
    fn fixed_point_start() {
        let o = diag_1_10();
        let x0 = [0.0, 0.0];
        let ls = LineSearch::new(1.0, 2.0).unwrap();
        for m in [Method::OrcF, Method::FgmRc, Method::FgmRcSharp, Method::OblF, Method::OblG, Method::FgmBl] {
            let t = run_adaptive(m, &o, &x0, 6, 3, &ls).unwrap();
            assert!(t.x.iter().all(|x| x == &x0.to_vec()), "{m}");
            assert!(t.jumps.is_empty());
        }
    }

    #[test]
    fn exact_modulus_never_backtracks() {
        let o = diag_1_10();
        let ls = LineSearch::new(10.0, 2.0).unwrap();
        for m in [Method::OblF, Method::OblG, Method::FgmBl] {
            let t = run_adaptive(m, &o, &[1.0, -2.0], 8, 0, &ls).unwrap();
            assert_eq!(t.backtracks, 0, "{m}");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(LineSearch::new(0.0, 2.0).is_err());
        assert!(LineSearch::new(1.0, 1.0).is_err());
        let o = diag_1_10();
        let ls = LineSearch::new(1.0, 2.0).unwrap();
        assert!(matches!(run_obl_g(&o, &[1.0, 1.0], 2, &ls), Err(Error::HorizonTooSmall { .. })));
    }
}

//! Dense symmetric linear algebra for the small matrices that appear in
//! certificates (dimension N + 2 with N ≤ a few dozen).

use crate::error::{Error, Result};
use serde::Serialize;

/// Default absolute tolerance on the minimum eigenvalue for PSD tests.
pub const PSD_TOL: f64 = 1e-8;

/// Square symmetric matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetricMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    /// Builds from row-major entries, symmetrizing as (A + Aᵀ)/2.
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if data.len() != dim * dim {
            return Err(Error::Dimension { expected: dim * dim, got: data.len() });
        }
        let mut m = Self { dim, data };
        for i in 0..dim {
            for j in (i + 1)..dim {
                let v = 0.5 * (m.data[i * dim + j] + m.data[j * dim + i]);
                m.data[i * dim + j] = v;
                m.data[j * dim + i] = v;
            }
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::Dimension { expected: dim, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        Self::new(dim, data)
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, v) in d.iter().enumerate() {
            m.data[i * d.len() + i] = *v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Sets both (i, j) and (j, i).
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    /// Adds `c · a aᵀ`.
    pub fn add_outer(&mut self, c: f64, a: &[f64]) {
        for i in 0..self.dim {
            if a[i] == 0.0 {
                continue;
            }
            for j in 0..self.dim {
                self.data[i * self.dim + j] += c * a[i] * a[j];
            }
        }
    }

    /// Adds `c · (a bᵀ + b aᵀ)`.
    pub fn add_sym_outer(&mut self, c: f64, a: &[f64], b: &[f64]) {
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.data[i * self.dim + j] += c * (a[i] * b[j] + b[i] * a[j]);
            }
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|v| v * c).collect() }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.data.chunks(self.dim).map(|r| crate::vecops::dot(r, x)).collect()
    }

    /// General product `self · other` as a [`Matrix`].
    pub fn matmul(&self, other: &SymmetricMatrix) -> Matrix {
        let n = self.dim;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        Matrix { rows: n, cols: n, data: out }
    }

    /// trace(self · other) for symmetric arguments.
    pub fn trace_product(&self, other: &SymmetricMatrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// Principal submatrix keeping `keep` indices in order.
    pub fn submatrix(&self, keep: &[usize]) -> SymmetricMatrix {
        let m = keep.len();
        let mut out = SymmetricMatrix::zeros(m);
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate() {
                out.data[a * m + b] = self.get(i, j);
            }
        }
        out
    }

    fn check_finite(&self) -> Result<()> {
        if self.data.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("matrix entry".into()))
        }
    }
}

/// General dense matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension { expected: rows * cols, got: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::Dimension { expected: cols, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.data.chunks(self.cols).map(|r| crate::vecops::dot(r, x)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// AᵀA as a symmetric matrix.
    pub fn gram(&self) -> SymmetricMatrix {
        let n = self.cols;
        let mut g = vec![0.0; n * n];
        for r in self.data.chunks(n) {
            for i in 0..n {
                if r[i] == 0.0 {
                    continue;
                }
                for j in i..n {
                    g[i * n + j] += r[i] * r[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                g[i * n + j] = g[j * n + i];
            }
        }
        SymmetricMatrix { dim: n, data: g }
    }

    pub fn transpose_mul_vec(&self, b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (r, bi) in self.data.chunks(self.cols).zip(b) {
            for (o, a) in out.iter_mut().zip(r) {
                *o += a * bi;
            }
        }
        out
    }
}

/// Eigen-decomposition: ascending eigenvalues and matching column eigenvectors.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// Column `j` of this matrix is the eigenvector for `values[j]`.
    pub vectors: Matrix,
}

impl Eigen {
    pub fn vector(&self, j: usize) -> Vec<f64> {
        (0..self.vectors.rows).map(|i| self.vectors.get(i, j)).collect()
    }
}

/// Cyclic Jacobi rotations until the off-diagonal norm drops below
/// 1e-13·‖A‖_F (or machine precision is reached).
pub fn eigen_sym(a: &SymmetricMatrix) -> Result<Eigen> {
    a.check_finite()?;
    let n = a.dim;
    let mut m = a.data.clone();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let fro = a.frobenius_norm();
    let target = 1e-13 * fro;
    let off = |m: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[i * n + j] * m[i * n + j];
                }
            }
        }
        s.sqrt()
    };
    for _sweep in 0..100 {
        if off(&m) <= target {
            break;
        }
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                if apq.abs() < 1e-18 * (app.abs() + aqq.abs()) {
                    m[p * n + q] = 0.0;
                    m[q * n + p] = 0.0;
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].total_cmp(&m[j * n + j]));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors.set(r, col, v[r * n + src]);
        }
    }
    Ok(Eigen { values, vectors })
}

/// All eigenvalues in ascending order.
pub fn eigenvalues_sym(a: &SymmetricMatrix) -> Result<Vec<f64>> {
    Ok(eigen_sym(a)?.values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsdReport {
    pub psd: bool,
    pub min_eigenvalue: f64,
}

/// PSD test with an absolute tolerance on the minimum eigenvalue.
pub fn is_psd(a: &SymmetricMatrix, tol: f64) -> Result<PsdReport> {
    if !(tol >= 0.0) {
        return Err(Error::InvalidArgument("tolerance must be nonnegative".into()));
    }
    let min = eigenvalues_sym(a)?[0];
    Ok(PsdReport { psd: min >= -tol, min_eigenvalue: min })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LsSolution {
    pub x: Vec<f64>,
    /// ‖Ax − b‖₂
    pub residual: f64,
    /// Number of directions treated as dependent (0 for full column rank).
    pub deficiency: usize,
}

/// Regularization added to the normal equations.
pub const LS_REGULARIZATION: f64 = 1e-14;

/// Iterative-refinement passes after the initial solve.
pub const LS_REFINEMENT_STEPS: usize = 3;

/// Relative size of a pivoted-QR diagonal entry below which a column counts
/// as dependent.
pub const LS_RANK_TOL: f64 = 1e-10;

/// Householder QR with column pivoting, stored compactly.
struct PivotedQr {
    m: usize,
    n: usize,
    /// Column-major: R on and above the diagonal, reflector tails below.
    qr: Vec<f64>,
    beta: Vec<f64>,
    perm: Vec<usize>,
}

impl PivotedQr {
    fn new(a: &Matrix) -> Self {
        let (m, n) = (a.rows, a.cols);
        let mut qr = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                qr[j * m + i] = a.get(i, j);
            }
        }
        let mut perm: Vec<usize> = (0..n).collect();
        let mut beta = vec![0.0; n];
        for j in 0..n {
            let tail_norm = |c: usize, qr: &[f64]| qr[c * m + j..(c + 1) * m].iter().map(|v| v * v).sum::<f64>();
            let p = (j..n)
                .map(|c| (c, tail_norm(c, &qr)))
                .fold((j, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best })
                .0;
            if p != j {
                for i in 0..m {
                    qr.swap(j * m + i, p * m + i);
                }
                perm.swap(j, p);
            }
            let col = &mut qr[j * m + j..(j + 1) * m];
            let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            let alpha = if col[0] > 0.0 { -norm } else { norm };
            let v0 = col[0] - alpha;
            for v in col[1..].iter_mut() {
                *v /= v0;
            }
            col[0] = alpha;
            // H = I − β v vᵀ with v = (1, col[1..]).
            beta[j] = -v0 / alpha;
            let (left, right) = qr.split_at_mut((j + 1) * m);
            let v = &left[j * m + j + 1..(j + 1) * m];
            for c in 0..n - j - 1 {
                let w = &mut right[c * m + j..(c + 1) * m];
                let s = beta[j] * (w[0] + v.iter().zip(&w[1..]).map(|(a, b)| a * b).sum::<f64>());
                w[0] -= s;
                for (wi, vi) in w[1..].iter_mut().zip(v) {
                    *wi -= s * vi;
                }
            }
        }
        Self { m, n, qr, beta, perm }
    }

    fn rank(&self) -> usize {
        let d = |j: usize| self.qr[j * self.m + j].abs();
        let top = if self.n > 0 { d(0) } else { 0.0 };
        (0..self.n).take_while(|&j| d(j) > LS_RANK_TOL * top && d(j) > 0.0).count()
    }

    /// Least-squares solution for a full-rank factorization.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (m, n) = (self.m, self.n);
        let mut y = b.to_vec();
        for j in 0..n {
            let v = &self.qr[j * m + j + 1..(j + 1) * m];
            let s = self.beta[j] * (y[j] + v.iter().zip(&y[j + 1..]).map(|(a, b)| a * b).sum::<f64>());
            y[j] -= s;
            for (yi, vi) in y[j + 1..].iter_mut().zip(v) {
                *yi -= s * vi;
            }
        }
        let mut z = vec![0.0; n];
        for j in (0..n).rev() {
            let mut acc = y[j];
            for c in j + 1..n {
                acc -= self.qr[c * m + j] * z[c];
            }
            z[j] = acc / self.qr[j * m + j];
        }
        let mut x = vec![0.0; n];
        for (j, &p) in self.perm.iter().enumerate() {
            x[p] = z[j];
        }
        x
    }
}

/// Least squares min ‖Ax − b‖₂. Full-rank systems go through Householder QR
/// with column pivoting. When pivoted QR detects dependent columns, the
/// normal equations (AᵀA + εI)x = Aᵀb are solved in the eigenbasis of AᵀA,
/// dropping directions whose eigenvalue is below 1e-12 of the largest; this
/// yields the minimum-norm solution and the count is reported in
/// `deficiency`. A few refinement passes follow either way.
pub fn solve_ls(a: &Matrix, b: &[f64]) -> Result<LsSolution> {
    if a.rows < a.cols {
        return Err(Error::InvalidArgument(format!(
            "least squares needs rows >= cols, got {}x{}",
            a.rows, a.cols
        )));
    }
    if b.len() != a.rows {
        return Err(Error::Dimension { expected: a.rows, got: b.len() });
    }
    if !a.data.iter().chain(b).all(|v| v.is_finite()) {
        return Err(Error::NonFinite("least-squares input".into()));
    }
    let qr = PivotedQr::new(a);
    if qr.rank() == a.cols {
        let mut x = qr.solve(b);
        for _ in 0..LS_REFINEMENT_STEPS {
            let r = crate::vecops::sub(b, &a.mul_vec(&x));
            for (xi, d) in x.iter_mut().zip(qr.solve(&r)) {
                *xi += d;
            }
        }
        let r = crate::vecops::sub(&a.mul_vec(&x), b);
        return Ok(LsSolution { residual: crate::vecops::norm(&r), x, deficiency: 0 });
    }
    solve_ls_normal(a, b)
}

fn solve_ls_normal(a: &Matrix, b: &[f64]) -> Result<LsSolution> {
    let gram = a.gram();
    let eig = eigen_sym(&gram)?;
    let top = eig.values.last().copied().unwrap_or(0.0).max(0.0);
    let cutoff = 1e-12 * top;
    let kept: Vec<(f64, Vec<f64>)> = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &lam)| lam > cutoff && lam > 0.0)
        .map(|(j, &lam)| (lam, eig.vector(j)))
        .collect();
    let deficiency = a.cols - kept.len();
    let apply = |rhs: &[f64]| -> Vec<f64> {
        let mut x = vec![0.0; a.cols];
        for (lam, v) in &kept {
            let coef = crate::vecops::dot(v, rhs) / (lam + LS_REGULARIZATION);
            for (xi, vi) in x.iter_mut().zip(v) {
                *xi += coef * vi;
            }
        }
        x
    };
    let mut x = apply(&a.transpose_mul_vec(b));
    // Refinement against the true residual undoes most of the precision lost
    // by squaring the condition number.
    for _ in 0..LS_REFINEMENT_STEPS {
        let r = crate::vecops::sub(b, &a.mul_vec(&x));
        let dx = apply(&a.transpose_mul_vec(&r));
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
    }
    let r = crate::vecops::sub(&a.mul_vec(&x), b);
    Ok(LsSolution { residual: crate::vecops::norm(&r), x, deficiency })
}

/// Schur complement of `s` with respect to the scalar at `pos`, using
/// `pivot` as the pivot value. The pivot must be positive and agree with the
/// stored diagonal entry to 1e-12 relative.
pub fn schur_complement(s: &SymmetricMatrix, pos: usize, pivot: f64) -> Result<SymmetricMatrix> {
    if !(pivot > 0.0) {
        return Err(Error::InvalidArgument(format!("pivot must be positive, got {pivot:e}")));
    }
    if pos >= s.dim {
        return Err(Error::Dimension { expected: s.dim, got: pos });
    }
    let stored = s.get(pos, pos);
    if (stored - pivot).abs() > 1e-12 * pivot.abs().max(1.0) {
        return Err(Error::Mismatch(format!(
            "pivot {pivot:e} does not match diagonal entry {stored:e}"
        )));
    }
    let keep: Vec<usize> = (0..s.dim).filter(|&i| i != pos).collect();
    let m = keep.len();
    let mut out = SymmetricMatrix::zeros(m.max(1));
    if m == 0 {
        return Err(Error::InvalidArgument("cannot reduce a 1x1 matrix".into()));
    }
    for (a, &i) in keep.iter().enumerate() {
        for (b, &j) in keep.iter().enumerate() {
            out.data[a * m + b] = s.get(i, j) - s.get(i, pos) * s.get(pos, j) / pivot;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_two_by_two() {
        let a = SymmetricMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let ev = eigenvalues_sym(&a).unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
        let r = is_psd(&a, 1e-9).unwrap();
        assert!(!r.psd);
        assert!((r.min_eigenvalue + 1.0).abs() < 1e-14);
    }

    #[test]
    fn diagonal_sorted() {
        let ev = eigenvalues_sym(&SymmetricMatrix::diag(&[0.0, 5.0, -2.0])).unwrap();
        assert_eq!(ev, vec![-2.0, 0.0, 5.0]);
        assert_eq!(eigenvalues_sym(&SymmetricMatrix::identity(3)).unwrap(), vec![1.0; 3]);
        assert!(is_psd(&SymmetricMatrix::zeros(2), 0.0).unwrap().psd);
    }

    #[test]
    fn rejects_non_finite() {
        let a = SymmetricMatrix::from_rows(&[vec![f64::NAN, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(eigenvalues_sym(&a).is_err());
    }

    #[test]
    fn ls_small_cases() {
        let id = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let s = solve_ls(&id, &[1.0, 2.0]).unwrap();
        assert!((s.x[0] - 1.0).abs() < 1e-12 && (s.x[1] - 2.0).abs() < 1e-12);
        assert!(s.residual < 1e-12);
        let col = Matrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        let s = solve_ls(&col, &[1.0, 3.0]).unwrap();
        assert!((s.x[0] - 2.0).abs() < 1e-12);
        assert!((s.residual - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn schur_two_by_two() {
        let a = SymmetricMatrix::from_rows(&[vec![3.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let r = schur_complement(&a, 1, 2.0).unwrap();
        assert!((r.get(0, 0) - 2.5).abs() < 1e-15);
        assert!(schur_complement(&a, 1, -1.0).is_err());
        let id = SymmetricMatrix::identity(2);
        assert_eq!(schur_complement(&id, 1, 1.0).unwrap().get(0, 0), 1.0);
    }
}

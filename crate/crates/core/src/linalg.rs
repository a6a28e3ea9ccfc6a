//! Dense real linear algebra.
//!
//! [`Matrix`] is a small row-major matrix type used for every projector and
//! operator in the crate. The kernels are plain dense routines sized for
//! desk-scale problems (a few dozen rows): one-sided Jacobi SVD, and
//! Hessenberg reduction plus Francis double-shift QR for eigenvalues.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Default relative threshold below which singular values count as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

const SVD_MAX_SWEEPS: usize = 100;
const HQR_MAX_ITERS: usize = 200;

/// Dense real matrix in row-major order: `data[i * cols + j] = A[i, j]`.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major data, rejecting wrong lengths and
    /// non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidShape {
                rows,
                cols,
                got: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols.max(1),
                col: pos % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from equal-length rows.
    ///
    /// Panics on ragged input; intended for literals in code and tests.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self::new(r, c, data).expect("finite literal matrix")
    }

    /// Matrix whose columns are the given vectors, all of length `rows`.
    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        let mut m = Self::zeros(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            if col.len() != rows {
                return Err(Error::DimensionMismatch {
                    context: "column length",
                    expected: rows,
                    got: col.len(),
                });
            }
            for (i, &v) in col.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Self::new(rows, columns.len(), m.data)
    }

    /// Column vector `n x 1`.
    pub fn column(v: &[f64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    /// Assembles a matrix from a grid of blocks. Every block in a block-row must
    /// share its row count and every block in a block-column its column count.
    pub fn from_blocks(blocks: &[Vec<Matrix>]) -> Result<Self> {
        let Some(first_row) = blocks.first() else {
            return Ok(Self::zeros(0, 0));
        };
        let col_widths: Vec<usize> = first_row.iter().map(|b| b.cols).collect();
        let total_cols: usize = col_widths.iter().sum();
        let mut row_heights = Vec::with_capacity(blocks.len());
        for row in blocks {
            if row.len() != col_widths.len() {
                return Err(Error::DimensionMismatch {
                    context: "block row length",
                    expected: col_widths.len(),
                    got: row.len(),
                });
            }
            let h = row[0].rows;
            for (b, &w) in row.iter().zip(&col_widths) {
                if b.rows != h {
                    return Err(Error::DimensionMismatch {
                        context: "block height",
                        expected: h,
                        got: b.rows,
                    });
                }
                if b.cols != w {
                    return Err(Error::DimensionMismatch {
                        context: "block width",
                        expected: w,
                        got: b.cols,
                    });
                }
            }
            row_heights.push(h);
        }
        let total_rows: usize = row_heights.iter().sum();
        let mut out = Self::zeros(total_rows, total_cols);
        let mut r0 = 0;
        for (row, &h) in blocks.iter().zip(&row_heights) {
            let mut c0 = 0;
            for b in row {
                out.set_block(r0, c0, b);
                c0 += b.cols;
            }
            r0 += h;
        }
        Ok(out)
    }

    /// Block-diagonal matrix.
    pub fn block_diag(blocks: &[&Matrix]) -> Self {
        let rows = blocks.iter().map(|b| b.rows).sum();
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            out.set_block(r0, c0, b);
            r0 += b.rows;
            c0 += b.cols;
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// Copy of the `rows x cols` block starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols, "block out of range");
        let mut b = Self::zeros(rows, cols);
        for i in 0..rows {
            let src = &self.data[(r0 + i) * self.cols + c0..(r0 + i) * self.cols + c0 + cols];
            b.data[i * cols..(i + 1) * cols].copy_from_slice(src);
        }
        b
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Matrix) {
        assert!(
            r0 + b.rows <= self.rows && c0 + b.cols <= self.cols,
            "block out of range"
        );
        for i in 0..b.rows {
            let dst = (r0 + i) * self.cols + c0;
            self.data[dst..dst + b.cols].copy_from_slice(b.row(i));
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matrix-vector dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Like [`Matrix::mul_vec`] but reports a mismatch instead of panicking.
    pub fn try_mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                context: "matrix-vector product",
                expected: self.cols,
                got: x.len(),
            });
        }
        Ok(self.mul_vec(x))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `(A + Aᵀ) / 2`.
    pub fn symmetrized(&self) -> Self {
        assert!(self.is_square(), "symmetrize needs a square matrix");
        let mut s = self.clone();
        for i in 0..self.rows {
            for j in 0..i {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        s
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, " ")?;
            for v in self.row(i) {
                write!(f, " {v:>11.4e}")?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Mul for &Matrix {
    type Output = Matrix;

    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "matrix product dimension mismatch");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, b) in dst.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

impl Add for &Matrix {
    type Output = Matrix;

    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;

    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &Matrix {
    type Output = Matrix;

    fn neg(self) -> Matrix {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned_binop {
    ($tr:ident, $method:ident) => {
        impl $tr<Matrix> for Matrix {
            type Output = Matrix;
            fn $method(self, rhs: Matrix) -> Matrix {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&Matrix> for Matrix {
            type Output = Matrix;
            fn $method(self, rhs: &Matrix) -> Matrix {
                (&self).$method(rhs)
            }
        }
        impl $tr<Matrix> for &Matrix {
            type Output = Matrix;
            fn $method(self, rhs: Matrix) -> Matrix {
                self.$method(&rhs)
            }
        }
    };
}

forward_owned_binop!(Mul, mul);
forward_owned_binop!(Add, add);
forward_owned_binop!(Sub, sub);

/// Thin singular value decomposition `A = U diag(σ) Vᵀ`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// `m x k` with orthonormal columns, `k = min(m, n)`.
    pub u: Matrix,
    /// Nonincreasing, nonnegative.
    pub singular_values: Vec<f64>,
    /// `k x n` with orthonormal rows.
    pub vt: Matrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for j in 0..us.cols() {
            let s = self.singular_values[j];
            for i in 0..us.rows() {
                us[(i, j)] *= s;
            }
        }
        &us * &self.vt
    }
}

pub fn svd(a: &Matrix) -> Result<SvdResult> {
    if a.is_empty() {
        return Err(Error::Empty {
            operation: "svd",
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if a.rows() >= a.cols() {
        jacobi_svd(a)
    } else {
        // Aᵀ = U Σ Vᵀ  ⇒  A = V Σ Uᵀ
        let t = jacobi_svd(&a.transpose())?;
        Ok(SvdResult {
            u: t.vt.transpose(),
            singular_values: t.singular_values,
            vt: t.u.transpose(),
        })
    }
}

/// One-sided (Hestenes) Jacobi SVD for `m >= n`: rotate column pairs of `A V`
/// until all columns are mutually orthogonal.
fn jacobi_svd(a: &Matrix) -> Result<SvdResult> {
    let (m, n) = (a.rows(), a.cols());
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| a.col(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let tol = f64::EPSILON * m as f64;
    // Columns below this squared norm are numerical zeros; rotating them
    // against others never settles.
    let negligible = (f64::EPSILON * a.frobenius_norm()).powi(2);
    let mut converged = false;
    for _ in 0..SVD_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if alpha <= negligible
                    || beta <= negligible
                    || gamma == 0.0
                    || gamma.abs() <= tol * (alpha * beta).sqrt()
                {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut w, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            operation: "svd",
            rows: m,
            cols: n,
        });
    }

    let mut order: Vec<(f64, usize)> = w.iter().enumerate().map(|(j, c)| (norm(c), j)).collect();
    order.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    let smax = order[0].0;
    let mut u = Matrix::zeros(m, n);
    let mut vt = Matrix::zeros(n, n);
    let mut singular_values = Vec::with_capacity(n);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut deficient = Vec::new();
    for (k, &(s, j)) in order.iter().enumerate() {
        singular_values.push(s);
        for i in 0..n {
            vt[(k, i)] = v[j][i];
        }
        if s > 0.0 && s > smax * f64::EPSILON * 1e-3 {
            let col: Vec<f64> = w[j].iter().map(|x| x / s).collect();
            basis.push(col);
        } else {
            deficient.push(k);
            basis.push(Vec::new());
        }
    }
    // Complete the left singular vectors of (numerically) zero singular values.
    for &k in &deficient {
        let mut candidate = 0;
        loop {
            let mut e = vec![0.0; m];
            e[candidate % m] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for b in basis.iter().filter(|b| !b.is_empty()) {
                    let proj = dot(b, &e);
                    e.iter_mut().zip(b).for_each(|(x, y)| *x -= proj * y);
                }
            }
            let nrm = norm(&e);
            if nrm > 0.5 || candidate > 2 * m {
                basis[k] = e.into_iter().map(|x| x / nrm).collect();
                break;
            }
        }
    }
    for (k, col) in basis.iter().enumerate() {
        for i in 0..m {
            u[(i, k)] = col[i];
        }
    }
    Ok(SvdResult {
        u,
        singular_values,
        vt,
    })
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Moore–Penrose pseudoinverse. Singular values `σ ≤ tol · σ_max` are treated as zero.
pub fn pseudoinverse(a: &Matrix, tol: f64) -> Result<Matrix> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!(
            "pseudoinverse tolerance must be positive, got {tol}"
        )));
    }
    let dec = svd(a)?;
    let cutoff = tol * dec.singular_values.first().copied().unwrap_or(0.0);
    let mut out = Matrix::zeros(a.cols(), a.rows());
    for (k, &s) in dec.singular_values.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        let inv = 1.0 / s;
        // out += v_k * u_kᵀ / s
        for i in 0..a.cols() {
            let vik = dec.vt[(k, i)] * inv;
            if vik == 0.0 {
                continue;
            }
            for j in 0..a.rows() {
                out[(i, j)] += vik * dec.u[(j, k)];
            }
        }
    }
    Ok(out)
}

/// Pseudoinverse with [`DEFAULT_RANK_TOL`].
pub fn pinv(a: &Matrix) -> Result<Matrix> {
    pseudoinverse(a, DEFAULT_RANK_TOL)
}

/// Spectral norm `σ_max(A)`.
pub fn operator_norm(a: &Matrix) -> Result<f64> {
    let dec = svd(a)?;
    Ok(dec.singular_values.first().copied().unwrap_or(0.0))
}

/// Number of singular values above `tol · σ_max`.
pub fn rank(a: &Matrix, tol: f64) -> Result<usize> {
    let dec = svd(a)?;
    let smax = dec.singular_values.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return Ok(0);
    }
    Ok(dec.singular_values.iter().filter(|&&s| s > tol * smax).count())
}

/// All eigenvalues of a square matrix as `(re, im)` pairs.
///
/// Householder reduction to upper Hessenberg form followed by the Francis
/// double-shift QR iteration; converged 2x2 diagonal blocks yield
/// complex-conjugate pairs.
pub fn eigenvalues(a: &Matrix) -> Result<Vec<(f64, f64)>> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            operation: "eigenvalues",
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if a.is_empty() {
        return Err(Error::Empty {
            operation: "eigenvalues",
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let mut h = a.clone();
    hessenberg(&mut h);
    hessenberg_qr(&mut h).ok_or(Error::NoConvergence {
        operation: "Hessenberg QR",
        rows: a.rows(),
        cols: a.cols(),
    })
}

/// In-place orthogonal similarity reduction to upper Hessenberg form.
fn hessenberg(a: &mut Matrix) {
    let n = a.rows();
    for k in 0..n.saturating_sub(2) {
        let mut v: Vec<f64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        let alpha = norm(&v);
        if alpha == 0.0 {
            continue;
        }
        v[0] += if v[0] >= 0.0 { alpha } else { -alpha };
        let vn = norm(&v);
        if vn == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= vn);
        // A ← (I − 2vvᵀ) A
        for j in 0..n {
            let s: f64 = v.iter().enumerate().map(|(r, vr)| vr * a[(k + 1 + r, j)]).sum();
            for (r, vr) in v.iter().enumerate() {
                a[(k + 1 + r, j)] -= 2.0 * s * vr;
            }
        }
        // A ← A (I − 2vvᵀ)
        for i in 0..n {
            let s: f64 = v.iter().enumerate().map(|(r, vr)| vr * a[(i, k + 1 + r)]).sum();
            for (r, vr) in v.iter().enumerate() {
                a[(i, k + 1 + r)] -= 2.0 * s * vr;
            }
        }
        for i in k + 2..n {
            a[(i, k)] = 0.0;
        }
    }
}

/// Eigenvalues of an upper Hessenberg matrix (EISPACK `hqr` structure).
/// Returns `None` when the iteration budget for some eigenvalue is exhausted.
fn hessenberg_qr(a: &mut Matrix) -> Option<Vec<(f64, f64)>> {
    let n = a.rows();
    let mut out = vec![(0.0, 0.0); n];
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[(i, j)].abs();
        }
    }
    let eps = f64::EPSILON;
    let mut nn = n as isize - 1;
    let mut shift = 0.0;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let top = nn as usize;
            // Find a negligible subdiagonal element.
            let mut l = top;
            while l > 0 {
                let mut s = a[(l - 1, l - 1)].abs() + a[(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[(l, l - 1)].abs() <= eps * s {
                    a[(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[(top, top)];
            if l == top {
                out[top] = (x + shift, 0.0);
                nn -= 1;
                break;
            }
            let mut y = a[(top - 1, top - 1)];
            let mut w = a[(top, top - 1)] * a[(top - 1, top)];
            if l == top - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                x += shift;
                if q >= 0.0 {
                    let z = p + z.copysign(p);
                    let hi = x + z;
                    let lo = if z != 0.0 { x - w / z } else { hi };
                    out[top - 1] = (hi, 0.0);
                    out[top] = (lo, 0.0);
                } else {
                    out[top - 1] = (x + p, z);
                    out[top] = (x + p, -z);
                }
                nn -= 2;
                break;
            }
            if its >= HQR_MAX_ITERS {
                return None;
            }
            if its > 0 && its % 10 == 0 {
                // Exceptional shift.
                shift += x;
                for i in 0..=top {
                    a[(i, i)] -= x;
                }
                let s = a[(top, top - 1)].abs() + a[(top - 1, top - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            // Look for two consecutive small subdiagonal elements.
            let (mut p, mut q, mut r);
            let mut m = top - 2;
            loop {
                let z = a[(m, m)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[(m + 1, m)] + a[(m, m + 1)];
                q = a[(m + 1, m + 1)] - z - rr - ss;
                r = a[(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[(m, m - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[(m - 1, m - 1)].abs() + z.abs() + a[(m + 1, m + 1)].abs());
                if u <= eps * v {
                    break;
                }
                m -= 1;
            }
            for i in m..top - 1 {
                a[(i + 2, i)] = 0.0;
                if i != m {
                    a[(i + 2, i - 1)] = 0.0;
                }
            }
            // Double-shift QR sweep on rows l..=top, columns m..=top.
            for k in m..top {
                let last = k + 1 == top;
                if k != m {
                    p = a[(k, k - 1)];
                    q = a[(k + 1, k - 1)];
                    r = if last { 0.0 } else { a[(k + 2, k - 1)] };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s == 0.0 {
                    continue;
                }
                if k == m {
                    if l != m {
                        a[(k, k - 1)] = -a[(k, k - 1)];
                    }
                } else {
                    a[(k, k - 1)] = -s * x;
                }
                p += s;
                x = p / s;
                y = q / s;
                let z = r / s;
                q /= p;
                r /= p;
                for j in k..=top {
                    let mut t = a[(k, j)] + q * a[(k + 1, j)];
                    if !last {
                        t += r * a[(k + 2, j)];
                        a[(k + 2, j)] -= t * z;
                    }
                    a[(k + 1, j)] -= t * y;
                    a[(k, j)] -= t * x;
                }
                let mmin = if top < k + 3 { top } else { k + 3 };
                for i in l..=mmin {
                    let mut t = x * a[(i, k)] + y * a[(i, k + 1)];
                    if !last {
                        t += z * a[(i, k + 2)];
                        a[(i, k + 2)] -= t * r;
                    }
                    a[(i, k + 1)] -= t * q;
                    a[(i, k)] -= t;
                }
            }
        }
    }
    Some(out)
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(a: &Matrix) -> Result<f64> {
    Ok(eigenvalues(a)?
        .into_iter()
        .map(|(re, im)| re.hypot(im))
        .fold(0.0, f64::max))
}

/// Euclidean norm.
pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Euclidean distance.
pub fn distance(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

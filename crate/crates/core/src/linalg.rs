//! Dense kernels for the small matrices that show up along a trajectory:
//! Jacobians (n×n), tangent frames (n×m) and triangular factors (m×m), with
//! n at most a handful for the built-in maps.
//!
//! [`Matrix`] stores its entries column-major, so a column of a frame is a
//! contiguous slice.

use std::fmt;

use crate::error::{Error, Result};

/// Relative tolerance on |r_ii| / ‖a‖_max below which a QR factorization is
/// reported as degenerate.
pub const DEGENERATE_TOL: f64 = 1e-13;

/// Absolute tolerance on |r_ii| for [`invert_upper_triangular`].
pub const SINGULAR_R_TOL: f64 = 1e-13;

/// Column-major dense matrix of `f64`.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::eye(n, n)
    }

    /// The leading `cols` columns of the `rows`×`rows` identity.
    pub fn eye(rows: usize, cols: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows.min(cols) {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        assert_eq!(data.len(), rows * cols, "data length must equal rows*cols");
        Self { rows, cols, data }
    }

    /// Builds a matrix from row slices, which reads naturally in tests.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// A single column vector.
    pub fn column(v: &[f64]) -> Self {
        Self::from_col_major(v.len(), 1, v.to_vec())
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, rhs: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        matmul_into(self, rhs, &mut out);
        out
    }

    /// `selfᵀ · rhs` without forming the transpose.
    pub fn tr_matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.rows, rhs.rows, "tr_matmul row mismatch");
        let mut out = Matrix::zeros(self.cols, rhs.cols);
        for j in 0..rhs.cols {
            for i in 0..self.cols {
                out[(i, j)] = dot(self.col(i), rhs.col(j));
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.mul_vec_into(v, &mut out);
        out
    }

    #[inline]
    pub fn mul_vec_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        out.iter_mut().for_each(|o| *o = 0.0);
        for (j, &vj) in v.iter().enumerate() {
            if vj == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.col(j)) {
                *o += a * vj;
            }
        }
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Largest absolute entrywise difference; shapes must agree.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.shape(), other.shape(), "shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn copy_from(&mut self, other: &Matrix) {
        assert_eq!(self.shape(), other.shape(), "shape mismatch");
        self.data.copy_from_slice(&other.data);
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                write!(f, "{:>14.6e}", self[(i, j)])?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `out = a · b`.
pub fn matmul_into(a: &Matrix, b: &Matrix, out: &mut Matrix) {
    assert_eq!(a.cols, b.rows, "matmul inner dimension mismatch");
    assert_eq!(
        out.shape(),
        (a.rows, b.cols),
        "matmul output shape mismatch"
    );
    for j in 0..b.cols {
        let (bj, oj) = (b.col(j), j * out.rows);
        let ocol = &mut out.data[oj..oj + a.rows];
        ocol.iter_mut().for_each(|o| *o = 0.0);
        for (k, &bkj) in bj.iter().enumerate() {
            for (o, &aik) in ocol.iter_mut().zip(a.col(k)) {
                *o += aik * bkj;
            }
        }
    }
}

/// Thin QR factorization: `q` is n×m with orthonormal columns, `r` is m×m
/// upper triangular with a strictly positive diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct QrPair {
    pub q: Matrix,
    pub r: Matrix,
}

/// Householder QR of an n×m matrix with n ≥ m.
///
/// Reflector signs are fixed afterwards so that every diagonal entry of `r`
/// is positive; with that convention the factorization is unique and a frame
/// propagated by repeated QR evolves continuously.
pub fn qr_householder(a: &Matrix) -> Result<QrPair> {
    let mut qr = QrPair {
        q: Matrix::zeros(a.rows, a.cols),
        r: Matrix::zeros(a.cols, a.cols),
    };
    let mut work = a.clone();
    qr_householder_into(&mut work, &mut qr.q, &mut qr.r)?;
    Ok(qr)
}

/// Allocation-free Householder QR. `a` is overwritten with the reflectors.
pub fn qr_householder_into(a: &mut Matrix, q: &mut Matrix, r: &mut Matrix) -> Result<()> {
    let (n, m) = a.shape();
    if n < m {
        return Err(Error::DimensionMismatch(format!(
            "QR needs rows >= cols, got {n}x{m}"
        )));
    }
    if q.shape() != (n, m) || r.shape() != (m, m) {
        return Err(Error::DimensionMismatch("QR output shapes".into()));
    }
    if !a.is_finite() {
        return Err(Error::NonFiniteState("QR input"));
    }
    let scale = a.max_abs();
    let tol = DEGENERATE_TOL * scale;

    r.as_mut_slice().iter_mut().for_each(|v| *v = 0.0);
    // Column k of `a` below the diagonal ends up holding the reflector v_k;
    // the diagonal slot holds v_k[0]. `betas[k] = 2 / ‖v_k‖²`.
    let mut betas = [0.0f64; 16];
    let mut betas_vec;
    let betas: &mut [f64] = if m <= betas.len() {
        &mut betas[..m]
    } else {
        betas_vec = vec![0.0; m];
        &mut betas_vec
    };

    for k in 0..m {
        let x = &a.col(k)[k..];
        let alpha = norm(x);
        let s = if x[0] >= 0.0 { -alpha } else { alpha };
        // upper part of R for this column was filled by previous reflections
        for i in 0..k {
            r[(i, k)] = a[(i, k)];
        }
        r[(k, k)] = s;
        if alpha == 0.0 {
            betas[k] = 0.0;
            continue;
        }
        a[(k, k)] -= s;
        let vnorm2 = dot(&a.col(k)[k..], &a.col(k)[k..]);
        let beta = if vnorm2 > 0.0 { 2.0 / vnorm2 } else { 0.0 };
        betas[k] = beta;
        for j in k + 1..m {
            let (vk, cj) = split_cols(a, k, j);
            let w = beta * dot(&vk[k..], &cj[k..]);
            for (c, v) in cj[k..].iter_mut().zip(&vk[k..]) {
                *c -= w * v;
            }
        }
    }

    // Q = H_0 ⋯ H_{m-1} [I_m; 0], accumulated backwards.
    q.as_mut_slice().iter_mut().for_each(|v| *v = 0.0);
    for i in 0..m {
        q[(i, i)] = 1.0;
    }
    for k in (0..m).rev() {
        let beta = betas[k];
        if beta == 0.0 {
            continue;
        }
        let vk = &a.col(k)[k..];
        for j in k..m {
            let qj = &mut q.col_mut(j)[k..];
            let w = beta * dot(vk, qj);
            for (c, v) in qj.iter_mut().zip(vk) {
                *c -= w * v;
            }
        }
    }

    for i in 0..m {
        if r[(i, i)] < 0.0 {
            for j in i..m {
                r[(i, j)] = -r[(i, j)];
            }
            q.col_mut(i).iter_mut().for_each(|v| *v = -*v);
        }
    }
    for i in 0..m {
        let d = r[(i, i)];
        if !(d > tol) {
            return Err(Error::DegenerateBasis {
                index: i,
                value: d,
                tolerance: tol,
            });
        }
    }
    Ok(())
}

/// Borrow column `k` immutably and column `j > k` mutably.
fn split_cols(a: &mut Matrix, k: usize, j: usize) -> (&[f64], &mut [f64]) {
    debug_assert!(k < j);
    let n = a.rows;
    let (lo, hi) = a.data.split_at_mut(j * n);
    (&lo[k * n..(k + 1) * n], &mut hi[..n])
}

/// Inverse of an upper-triangular matrix by back-substitution.
pub fn invert_upper_triangular(r: &Matrix) -> Result<Matrix> {
    let mut out = Matrix::zeros(r.rows, r.cols);
    invert_upper_triangular_into(r, &mut out)?;
    Ok(out)
}

pub fn invert_upper_triangular_into(r: &Matrix, out: &mut Matrix) -> Result<()> {
    let m = r.rows;
    if r.cols != m || out.shape() != (m, m) {
        return Err(Error::DimensionMismatch(format!(
            "triangular inverse of {}x{}",
            r.rows, r.cols
        )));
    }
    for i in 0..m {
        let d = r[(i, i)];
        if !(d.abs() >= SINGULAR_R_TOL) {
            return Err(Error::SingularR { index: i, value: d });
        }
    }
    out.as_mut_slice().iter_mut().for_each(|v| *v = 0.0);
    for j in 0..m {
        out[(j, j)] = 1.0 / r[(j, j)];
        for i in (0..j).rev() {
            let mut s = 0.0;
            for k in i + 1..=j {
                s += r[(i, k)] * out[(k, j)];
            }
            out[(i, j)] = -s / r[(i, i)];
        }
    }
    Ok(())
}

/// Singular values (descending) by one-sided Jacobi rotations.
pub fn singular_values(a: &Matrix) -> Vec<f64> {
    // Work on the orientation with fewer columns.
    let mut w = if a.cols <= a.rows {
        a.clone()
    } else {
        a.transpose()
    };
    let k = w.cols;
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..k {
            for q in p + 1..k {
                let alpha = dot(w.col(p), w.col(p));
                let beta = dot(w.col(q), w.col(q));
                let gamma = dot(w.col(p), w.col(q));
                if gamma == 0.0 {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt());
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..w.rows {
                    let (xp, xq) = (w[(i, p)], w[(i, q)]);
                    w[(i, p)] = c * xp - s * xq;
                    w[(i, q)] = s * xp + c * xq;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..k).map(|j| norm(w.col(j))).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// `sin θ_min`, where θ_min is the smallest principal angle between the
/// column spaces of `qu` and `qs` (both with orthonormal columns).
///
/// Returns 0 when the subspaces share a direction and 1 when they are
/// orthogonal.
pub fn principal_angle_measure(qu: &Matrix, qs: &Matrix) -> Result<f64> {
    if qu.rows != qs.rows {
        return Err(Error::DimensionMismatch(format!(
            "subspace bases live in R^{} and R^{}",
            qu.rows, qs.rows
        )));
    }
    let cross = qu.tr_matmul(qs);
    let cos_max = singular_values(&cross)[0].min(1.0);
    Ok((1.0 - cos_max * cos_max).max(0.0).sqrt())
}

/// Solves `a · x = b` in place (`b` becomes `x`) by Gaussian elimination with
/// partial pivoting, returning det(a). `a` must be square.
pub fn solve_in_place(a: &Matrix, b: &mut Matrix) -> Result<f64> {
    let n = a.rows;
    if a.cols != n || b.rows != n {
        return Err(Error::DimensionMismatch("solve shapes".into()));
    }
    let mut lu = a.clone();
    let mut det = 1.0;
    for k in 0..n {
        let (mut piv, mut best) = (k, lu[(k, k)].abs());
        for i in k + 1..n {
            if lu[(i, k)].abs() > best {
                piv = i;
                best = lu[(i, k)].abs();
            }
        }
        if best == 0.0 {
            return Ok(0.0);
        }
        if piv != k {
            det = -det;
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(piv, j)];
                lu[(piv, j)] = t;
            }
            for j in 0..b.cols {
                let t = b[(k, j)];
                b[(k, j)] = b[(piv, j)];
                b[(piv, j)] = t;
            }
        }
        let d = lu[(k, k)];
        det *= d;
        for i in k + 1..n {
            let l = lu[(i, k)] / d;
            if l == 0.0 {
                continue;
            }
            for j in k..n {
                lu[(i, j)] -= l * lu[(k, j)];
            }
            for j in 0..b.cols {
                b[(i, j)] -= l * b[(k, j)];
            }
        }
    }
    for j in 0..b.cols {
        for i in (0..n).rev() {
            let mut s = b[(i, j)];
            for k in i + 1..n {
                s -= lu[(i, k)] * b[(k, j)];
            }
            b[(i, j)] = s / lu[(i, i)];
        }
    }
    Ok(det)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Matrix::from_col_major(rows, cols, data)
    }

    fn orthonormality_defect(q: &Matrix) -> f64 {
        q.tr_matmul(q).max_abs_diff(&Matrix::identity(q.cols()))
    }

    #[test]
    fn qr_of_identity_columns() {
        let a = Matrix::eye(3, 2);
        let QrPair { q, r } = qr_householder(&a).unwrap();
        assert_abs_diff_eq!(q.max_abs_diff(&a), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.max_abs_diff(&Matrix::identity(2)), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn qr_single_column_positive_convention() {
        let a = Matrix::column(&[3.0, 4.0]);
        let QrPair { q, r } = qr_householder(&a).unwrap();
        assert_abs_diff_eq!(q[(0, 0)], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(q[(1, 0)], 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(r[(0, 0)], 5.0, epsilon = 1e-14);

        let neg = Matrix::column(&[-3.0, -4.0]);
        let QrPair { q, r } = qr_householder(&neg).unwrap();
        assert!(r[(0, 0)] > 0.0);
        assert_abs_diff_eq!(q[(0, 0)], -0.6, epsilon = 1e-15);
    }

    #[test]
    fn qr_random_5x3_reproduces_input() {
        let a = random_matrix(5, 3, 11);
        let QrPair { q, r } = qr_householder(&a).unwrap();
        assert!(orthonormality_defect(&q) < 1e-12);
        assert!(q.matmul(&r).max_abs_diff(&a) < 1e-12 * a.max_abs());
        for i in 0..3 {
            assert!(r[(i, i)] > 0.0);
            for j in 0..i {
                assert_eq!(r[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn qr_rejects_dependent_columns() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0], &[3.0, 6.0]]);
        let err = qr_householder(&a).unwrap_err();
        assert!(
            matches!(err, Error::DegenerateBasis { index: 1, .. }),
            "{err}"
        );
        let zero = Matrix::zeros(3, 1);
        assert!(matches!(
            qr_householder(&zero),
            Err(Error::DegenerateBasis { index: 0, .. })
        ));
    }

    #[test]
    fn qr_is_bitwise_deterministic() {
        let a = random_matrix(6, 4, 3);
        let x = qr_householder(&a).unwrap();
        let y = qr_householder(&a).unwrap();
        assert_eq!(x.q.as_slice(), y.q.as_slice());
        assert_eq!(x.r.as_slice(), y.r.as_slice());
    }

    #[test]
    fn invert_triangular_examples() {
        let id = invert_upper_triangular(&Matrix::identity(3)).unwrap();
        assert_eq!(id, Matrix::identity(3));

        let d = invert_upper_triangular(&Matrix::diag(&[2.0, 4.0])).unwrap();
        assert_eq!(d, Matrix::diag(&[0.5, 0.25]));

        let r = Matrix::from_rows(&[&[2.0, 1.0], &[0.0, 3.0]]);
        let inv = invert_upper_triangular(&r).unwrap();
        let expected = Matrix::from_rows(&[&[0.5, -1.0 / 6.0], &[0.0, 1.0 / 3.0]]);
        assert!(inv.max_abs_diff(&expected) < 1e-15);
        assert!(r.matmul(&inv).max_abs_diff(&Matrix::identity(2)) < 1e-15);
    }

    #[test]
    fn invert_triangular_rejects_small_pivot() {
        let r = Matrix::from_rows(&[&[1.0, 1.0], &[0.0, 1e-14]]);
        assert!(matches!(
            invert_upper_triangular(&r),
            Err(Error::SingularR { index: 1, .. })
        ));
    }

    #[test]
    fn invert_triangular_conditioning() {
        // condition number ~1e6: row-scaled unit upper triangle
        let mut r = random_matrix(4, 4, 5);
        for i in 0..4 {
            let d = 10f64.powi(-(i as i32) * 2);
            for j in 0..4 {
                r[(i, j)] = match j.cmp(&i) {
                    std::cmp::Ordering::Less => 0.0,
                    std::cmp::Ordering::Equal => d,
                    std::cmp::Ordering::Greater => 0.5 * d * r[(i, j)],
                };
            }
        }
        let inv = invert_upper_triangular(&r).unwrap();
        assert!(r.matmul(&inv).max_abs_diff(&Matrix::identity(4)) < 1e-10);
    }

    #[test]
    fn principal_angle_examples() {
        let e1 = Matrix::column(&[1.0, 0.0]);
        let e2 = Matrix::column(&[0.0, 1.0]);
        assert_abs_diff_eq!(
            principal_angle_measure(&e1, &e2).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            principal_angle_measure(&e1, &e1).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        let a = std::f64::consts::FRAC_PI_6;
        let v = Matrix::column(&[a.cos(), a.sin()]);
        assert_abs_diff_eq!(
            principal_angle_measure(&e1, &v).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        let e3 = Matrix::column(&[0.0, 0.0, 1.0]);
        assert!(matches!(
            principal_angle_measure(&e1, &e3),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn singular_values_match_known_spectrum() {
        // U diag(3, 1) Vᵀ with rotations U, V
        let (a, b) = (0.3f64, 1.1f64);
        let u = Matrix::from_rows(&[&[a.cos(), -a.sin()], &[a.sin(), a.cos()]]);
        let v = Matrix::from_rows(&[&[b.cos(), -b.sin()], &[b.sin(), b.cos()]]);
        let m = u.matmul(&Matrix::diag(&[3.0, 1.0])).matmul(&v.transpose());
        let sv = singular_values(&m);
        assert_abs_diff_eq!(sv[0], 3.0, epsilon = 1e-13);
        assert_abs_diff_eq!(sv[1], 1.0, epsilon = 1e-13);
        let wide = Matrix::from_rows(&[&[3.0, 0.0, 4.0]]);
        assert_abs_diff_eq!(singular_values(&wide)[0], 5.0, epsilon = 1e-14);
    }

    #[test]
    fn solve_recovers_solution() {
        let a = random_matrix(4, 4, 9);
        let x = random_matrix(4, 2, 10);
        let mut b = a.matmul(&x);
        let det = solve_in_place(&a, &mut b).unwrap();
        assert!(det != 0.0);
        assert!(b.max_abs_diff(&x) < 1e-11);
        let p = Matrix::from_rows(&[&[0.0, 2.0], &[3.0, 0.0]]);
        let mut rhs = Matrix::column(&[2.0, 3.0]);
        assert_abs_diff_eq!(solve_in_place(&p, &mut rhs).unwrap(), -6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            rhs.max_abs_diff(&Matrix::column(&[1.0, 1.0])),
            0.0,
            epsilon = 1e-15
        );
    }
}

//! Small dense real/complex matrix kernels.
//!
//! Everything here is sized for the handful-of-rows matrices that show up in
//! relaxation systems and Butcher tableaux (m, s ≤ ~10): LU with partial
//! pivoting, cyclic Jacobi for symmetric eigenproblems, a semidefiniteness and
//! rank test, and a scaling-and-squaring matrix exponential.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use num_traits::{One, Zero};
use thiserror::Error;

/// Pivot magnitude below which a factorization is declared singular.
pub const PIVOT_FLOOR: f64 = 1e-300;

/// Default relative tolerance for [`is_psd`].
pub const PSD_TOL: f64 = 1e-10;

/// Relative asymmetry accepted by the symmetric routines.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("singular matrix (pivot magnitude {0:e})")]
    SingularMatrix(f64),
    #[error("matrix is not symmetric (relative asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("overflow in matrix exponential")]
    Overflow,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("matrix text, line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Scalar types the kernels operate on.
pub trait Scalar:
    Copy
    + PartialEq
    + fmt::Debug
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::Neg<Output = Self>
    + Send
    + Sync
{
    fn modulus(self) -> f64;
    fn from_real(x: f64) -> Self;
    fn is_finite_scalar(self) -> bool;
}

impl Scalar for f64 {
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn is_finite_scalar(self) -> bool {
        self.is_finite()
    }
}

impl Scalar for Complex64 {
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn is_finite_scalar(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

pub type RealMatrix = Matrix<f64>;
pub type ComplexMatrix = Matrix<Complex64>;

impl<T: Scalar> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting non-finite values.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(LinalgError::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite_scalar()) {
            return Err(LinalgError::NonFinite(pos / cols, pos % cols));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a slice of equally long rows.
    ///
    /// Panics on ragged input; intended for literals.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n * m);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), m, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: n,
            cols: m,
            data,
        }
    }

    pub fn from_diag(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
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

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
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

    pub fn scale(&self, alpha: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * alpha).collect(),
        }
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(LinalgError::ShapeMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] = out.data[i * rhs.cols + j] + a * rhs[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// `self · x` for a column vector `x`.
    pub fn matvec(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.cols {
            return Err(LinalgError::ShapeMismatch(format!(
                "{}x{} times vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect())
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        })
    }

    /// Largest entry modulus.
    pub fn norm_max(&self) -> f64 {
        self.data.iter().map(|x| x.modulus()).fold(0.0, f64::max)
    }

    /// Induced infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.modulus()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm_fro(&self) -> f64 {
        self.data
            .iter()
            .map(|x| x.modulus() * x.modulus())
            .sum::<f64>()
            .sqrt()
    }

    /// Copy of the block starting at `(r0, c0)` with the given extent.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        let mut b = Self::zeros(nr, nc);
        for i in 0..nr {
            for j in 0..nc {
                b[(i, j)] = self[(r0 + i, c0 + j)];
            }
        }
        b
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite_scalar())
    }
}

impl RealMatrix {
    pub fn to_complex(&self) -> ComplexMatrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    /// Largest absolute difference between `S` and `Sᵀ`, relative to `‖S‖max`.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.norm_max();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst / scale
    }

    /// `S + Sᵀ`.
    pub fn symmetric_part_doubled(&self) -> Self {
        let mut s = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                s[(i, j)] = self[(i, j)] + self[(j, i)];
            }
        }
        s
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// LU factors with partial pivoting, `P·A = L·U` packed in one matrix.
#[derive(Clone)]
pub struct LuFactors<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> fmt::Debug for LuFactors<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LuFactors")
            .field("lu", &self.lu)
            .field("perm", &self.perm)
            .finish()
    }
}

impl<T: Scalar> LuFactors<T> {
    pub fn factor(a: &Matrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(LinalgError::ShapeMismatch(format!(
                "LU of a {}x{} matrix",
                a.rows, a.cols
            )));
        }
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, mag) =
                (k..n)
                    .map(|i| (i, lu[(i, k)].modulus()))
                    .fold(
                        (k, -1.0),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if mag < PIVOT_FLOOR {
                return Err(LinalgError::SingularMatrix(mag));
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let l = lu[(i, k)] / pivot;
                lu[(i, k)] = l;
                if l == T::zero() {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] = lu[(i, j)] - l * u;
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        let n = self.dim();
        if b.len() != n {
            return Err(LinalgError::ShapeMismatch(format!(
                "rhs of length {} for a {n}x{n} system",
                b.len()
            )));
        }
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] = x[i] - self.lu[(i, j)] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] = x[i] - self.lu[(i, j)] * x[j];
            }
            x[i] = x[i] / self.lu[(i, i)];
        }
        Ok(x)
    }

    /// Rebuilds `A` from the factors; used to check the factorization.
    pub fn reconstruct(&self) -> Matrix<T> {
        let n = self.dim();
        let mut l = Matrix::identity(n);
        let mut u = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if j < i {
                    l[(i, j)] = self.lu[(i, j)];
                } else {
                    u[(i, j)] = self.lu[(i, j)];
                }
            }
        }
        let pa = l.matmul(&u).expect("square factors");
        let mut a = Matrix::zeros(n, n);
        for (row, &p) in self.perm.iter().enumerate() {
            for j in 0..n {
                a[(p, j)] = pa[(row, j)];
            }
        }
        a
    }
}

impl LuFactors<f64> {
    /// Solves with a complex right-hand side in place, using the real factors
    /// on the real and imaginary parts simultaneously.
    pub fn solve_complex_in_place(&self, b: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        let n = self.dim();
        debug_assert_eq!(b.len(), n);
        scratch.clear();
        scratch.extend(self.perm.iter().map(|&p| b[p]));
        for i in 0..n {
            let (done, rest) = scratch.split_at_mut(i);
            for (j, x) in done.iter().enumerate() {
                rest[0] -= *x * self.lu[(i, j)];
            }
        }
        for i in (0..n).rev() {
            let (head, done) = scratch.split_at_mut(i + 1);
            let mut acc = head[i];
            for (j, x) in done.iter().enumerate() {
                acc -= *x * self.lu[(i, i + 1 + j)];
            }
            head[i] = acc / self.lu[(i, i)];
        }
        b.copy_from_slice(scratch);
    }
}

/// Solves `A x = b` by LU with partial pivoting.
pub fn lu_solve<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Result<Vec<T>> {
    LuFactors::factor(a)?.solve(b)
}

/// Inverse via LU; only for the tiny matrices used in certificates.
pub fn inverse<T: Scalar>(a: &Matrix<T>) -> Result<Matrix<T>> {
    let lu = LuFactors::factor(a)?;
    let n = a.rows;
    let mut inv = Matrix::zeros(n, n);
    let mut e = vec![T::zero(); n];
    for j in 0..n {
        e.iter_mut().for_each(|x| *x = T::zero());
        e[j] = T::one();
        let col = lu.solve(&e)?;
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    Ok(inv)
}

/// Determinant via LU; zero when the factorization hits a vanishing pivot.
pub fn determinant(a: &RealMatrix) -> Result<f64> {
    if !a.is_square() {
        return Err(LinalgError::ShapeMismatch(
            "determinant of a non-square matrix".into(),
        ));
    }
    let lu = match LuFactors::factor(a) {
        Ok(lu) => lu,
        Err(LinalgError::SingularMatrix(_)) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    let mut det: f64 = (0..a.rows).map(|i| lu.lu[(i, i)]).product();
    // parity of the row permutation
    let mut seen = vec![false; a.rows];
    for start in 0..a.rows {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut k = start;
        while !seen[k] {
            seen[k] = true;
            k = lu.perm[k];
            len += 1;
        }
        if len % 2 == 0 {
            det = -det;
        }
    }
    Ok(det)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenReport {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub positive_rank: usize,
    pub negative_count: usize,
}

fn check_symmetric(s: &RealMatrix) -> Result<()> {
    if !s.is_square() {
        return Err(LinalgError::ShapeMismatch(format!(
            "symmetric eigenproblem on a {}x{} matrix",
            s.rows, s.cols
        )));
    }
    let asym = s.asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(LinalgError::NotSymmetric(asym));
    }
    Ok(())
}

/// Eigenvalues (ascending) and orthonormal eigenvectors (as columns) of a
/// symmetric matrix by the cyclic Jacobi method.
pub fn sym_eigen_vectors(s: &RealMatrix) -> Result<(Vec<f64>, RealMatrix)> {
    check_symmetric(s)?;
    let n = s.rows;
    let mut a = s.clone();
    // symmetrize away roundoff-level asymmetry
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = avg;
            a[(j, i)] = avg;
        }
    }
    let mut v = RealMatrix::identity(n);
    let scale = a.norm_fro();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = RealMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, dst)] = v[(k, src)];
        }
    }
    Ok((values, vectors))
}

fn spectral_threshold(eigenvalues: &[f64], tol: f64) -> f64 {
    let scale = eigenvalues.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        tol
    } else {
        tol * scale
    }
}

/// Symmetric eigenvalues with rank counts at the default tolerance.
pub fn sym_eigen(s: &RealMatrix) -> Result<EigenReport> {
    let (eigenvalues, _) = sym_eigen_vectors(s)?;
    let thr = spectral_threshold(&eigenvalues, PSD_TOL);
    let positive_rank = eigenvalues.iter().filter(|&&x| x > thr).count();
    let negative_count = eigenvalues.iter().filter(|&&x| x < -thr).count();
    Ok(EigenReport {
        eigenvalues,
        positive_rank,
        negative_count,
    })
}

/// Positive-semidefiniteness test. Returns the flag and the number of
/// eigenvalues above `tol·‖S‖₂`.
pub fn is_psd(s: &RealMatrix, tol: f64) -> Result<(bool, usize)> {
    let (eigenvalues, _) = sym_eigen_vectors(s)?;
    let thr = spectral_threshold(&eigenvalues, tol);
    let min = eigenvalues.first().copied().unwrap_or(0.0);
    let rank = eigenvalues.iter().filter(|&&x| x > thr).count();
    Ok((min >= -thr, rank))
}

/// `exp(t·A)` by scaling and squaring.
///
/// The core evaluates `E = exp(B) − I` by its Taylor series with `‖B‖∞ ≤ 0.5`,
/// and squaring is carried out on `E` as `E ← 2E + E²`. Working with the
/// offset from the identity keeps the slow, near-unit eigen-directions from
/// accumulating `2^s` roundoff when a stiff block forces many squarings.
pub fn expm(a: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(LinalgError::ShapeMismatch(format!(
            "expm of a {}x{} matrix",
            a.rows, a.cols
        )));
    }
    let n = a.rows;
    let b = a.scale(Complex64::new(t, 0.0));
    let norm = b.norm_inf();
    if !norm.is_finite() {
        return Err(LinalgError::Overflow);
    }
    let mut squarings = 0u32;
    let mut scaled = norm;
    while scaled > 0.5 {
        scaled *= 0.5;
        squarings += 1;
        if squarings > 1100 {
            return Err(LinalgError::Overflow);
        }
    }
    let b = b.scale(Complex64::new(0.5f64.powi(squarings as i32), 0.0));

    let mut e = ComplexMatrix::zeros(n, n);
    let mut term = ComplexMatrix::identity(n);
    for k in 1..=60 {
        term = term.matmul(&b)?.scale(Complex64::new(1.0 / k as f64, 0.0));
        e = e.try_add(&term)?;
        if term.norm_inf() < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        let e2 = e.matmul(&e)?;
        e = e.scale(Complex64::new(2.0, 0.0)).try_add(&e2)?;
        if !e.is_finite() {
            return Err(LinalgError::Overflow);
        }
    }
    let out = ComplexMatrix::identity(n).try_add(&e)?;
    if !out.is_finite() {
        return Err(LinalgError::Overflow);
    }
    Ok(out)
}

/// Parses the plain-text matrix format: `rows cols` followed by one line per
/// row. Blank lines and `#` comments are skipped.
pub fn parse_matrix(text: &str) -> Result<RealMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hdr_line, hdr) = lines.next().ok_or(LinalgError::Parse {
        line: 0,
        msg: "empty input".into(),
    })?;
    let dims = parse_numbers::<usize>(hdr, hdr_line)?;
    if dims.len() != 2 {
        return Err(LinalgError::Parse {
            line: hdr_line,
            msg: "expected `rows cols`".into(),
        });
    }
    let (rows, cols) = (dims[0], dims[1]);
    let mut data = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let (ln, l) = lines.next().ok_or(LinalgError::Parse {
            line: hdr_line + r + 1,
            msg: format!("expected {rows} rows, found {r}"),
        })?;
        let vals = parse_numbers::<f64>(l, ln)?;
        if vals.len() != cols {
            return Err(LinalgError::Parse {
                line: ln,
                msg: format!("expected {cols} entries, found {}", vals.len()),
            });
        }
        data.extend(vals);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(LinalgError::Parse {
            line: ln,
            msg: "trailing content".into(),
        });
    }
    RealMatrix::from_vec(rows, cols, data)
}

pub(crate) fn parse_numbers<N: std::str::FromStr>(line: &str, lineno: usize) -> Result<Vec<N>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<N>().map_err(|_| LinalgError::Parse {
                line: lineno,
                msg: format!("bad number `{tok}`"),
            })
        })
        .collect()
}

/// Writes a real matrix in the plain-text format with round-trip precision.
pub fn write_matrix(m: &RealMatrix) -> String {
    let mut out = format!("{} {}\n", m.rows, m.cols);
    for i in 0..m.rows {
        let row: Vec<String> = m.row(i).iter().map(|x| format!("{x:.16e}")).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

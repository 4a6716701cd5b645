//! Dense complex-matrix arithmetic and spectral utilities.
//!
//! Everything here operates on [`ComplexMatrix`], a row-major dense matrix of
//! `Complex64` entries. Matrices at play are tiny (at most a few tensor
//! factors of dimension 2), so all algorithms are straightforward dense
//! loops; there is no attempt at sparsity or blocking.
//!
//! The JSON form of a matrix, used by every other module, is
//! `{"rows": n, "cols": m, "entries": [[re, im], ...]}` with entries in
//! row-major order.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance for validity predicates (hermiticity, positivity,
/// unitarity). Overridable per call; matrices here are at most 16x16, so
/// double precision leaves a wide margin around this value.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

/// Serialized form: entries as `[re, im]` pairs, row-major.
#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    entries: Vec<[f64; 2]>,
}

impl TryFrom<MatrixRepr> for ComplexMatrix {
    type Error = Error;

    fn try_from(r: MatrixRepr) -> Result<Self> {
        if r.rows == 0 || r.cols == 0 {
            return Err(Error::Validation("matrix dimensions must be positive".into()));
        }
        if r.entries.len() != r.rows * r.cols {
            return Err(Error::Dimension(format!(
                "matrix declared {}x{} but carries {} entries",
                r.rows,
                r.cols,
                r.entries.len()
            )));
        }
        Ok(ComplexMatrix {
            rows: r.rows,
            cols: r.cols,
            entries: r.entries.iter().map(|[re, im]| Complex64::new(*re, *im)).collect(),
        })
    }
}

impl From<ComplexMatrix> for MatrixRepr {
    fn from(m: ComplexMatrix) -> Self {
        MatrixRepr {
            rows: m.rows,
            cols: m.cols,
            entries: m.entries.iter().map(|c| [c.re, c.im]).collect(),
        }
    }
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Validation("matrix dimensions must be positive".into()));
        }
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {}x{} matrix, got {}",
                rows * cols,
                rows,
                cols,
                entries.len()
            )));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Build from rows of `(re, im)` pairs; panics on ragged input, so only
    /// used for literals in code and tests.
    pub fn from_rows(rows: &[&[(f64, f64)]]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        let mut entries = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged matrix literal");
            for &(re, im) in *row {
                entries.push(Complex64::new(re, im));
            }
        }
        Self { rows: r, cols: c, entries }
    }

    /// Build from real rows.
    pub fn from_real(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        let mut entries = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged matrix literal");
            for &re in *row {
                entries.push(Complex64::new(re, 0.0));
            }
        }
        Self { rows: r, cols: c, entries }
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

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self { rows: self.rows, cols: self.cols, entries })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self { rows: self.rows, cols: self.cols, entries })
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn scale_re(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|c| c.conj()).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Result<Complex64> {
        if !self.is_square() {
            return Err(Error::Dimension(format!(
                "trace of non-square {}x{} matrix",
                self.rows, self.cols
            )));
        }
        Ok((0..self.rows).map(|i| self[(i, i)]).sum())
    }

    /// tr(self * other) without forming the product.
    pub fn trace_product(&self, other: &Self) -> Result<Complex64> {
        if self.cols != other.rows || self.rows != other.cols {
            return Err(Error::Dimension(format!(
                "trace of product needs {}x{} against {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.rows {
            for j in 0..self.cols {
                acc += self[(i, j)] * other[(j, i)];
            }
        }
        Ok(acc)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        matches!(self.max_abs_diff(other), Ok(d) if d <= tol)
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "shape mismatch: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        for i in 0..self.rows {
            for j in i..self.cols {
                if (self[(i, j)] - self[(j, i)].conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        match self.matmul(&self.dagger()) {
            Ok(p) => p.approx_eq(&Self::identity(self.rows), tol),
            Err(_) => false,
        }
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[i * self.cols + j]
    }
}

/// Kronecker product: block (i, j) of the result equals `a[i,j] * b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(a.rows * b.rows, a.cols * b.cols);
    for ia in 0..a.rows {
        for ja in 0..a.cols {
            let f = a[(ia, ja)];
            if f.norm_sqr() == 0.0 {
                continue;
            }
            for ib in 0..b.rows {
                for jb in 0..b.cols {
                    out[(ia * b.rows + ib, ja * b.cols + jb)] = f * b[(ib, jb)];
                }
            }
        }
    }
    out
}

/// Kronecker product of a sequence of factors, left to right.
pub fn kron_all(factors: &[&ComplexMatrix]) -> ComplexMatrix {
    assert!(!factors.is_empty(), "kron_all of empty factor list");
    let mut acc = factors[0].clone();
    for f in &factors[1..] {
        acc = kron(&acc, f);
    }
    acc
}

/// Trace out every tensor factor not listed in `keep`, preserving factor
/// order. `dims` lists the factor dimensions whose product must equal the
/// (square) matrix dimension.
pub fn partial_trace(m: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    let total: usize = dims.iter().product();
    if !m.is_square() || m.rows() != total {
        return Err(Error::Dimension(format!(
            "partial trace of {}x{} with factor dims {:?} (product {})",
            m.rows(),
            m.cols(),
            dims,
            total
        )));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.iter().any(|&k| k >= dims.len()) {
        return Err(Error::Dimension(format!(
            "keep index out of range: {:?} with {} factors",
            keep,
            dims.len()
        )));
    }
    let keep_dim: usize = kept.iter().map(|&k| dims[k]).product();
    let keep_dim = keep_dim.max(1);
    let mut out = ComplexMatrix::zeros(keep_dim, keep_dim);

    let nf = dims.len();
    let mut row_digits = vec![0usize; nf];
    let mut col_digits = vec![0usize; nf];
    for row in 0..total {
        decompose(row, dims, &mut row_digits);
        for col in 0..total {
            decompose(col, dims, &mut col_digits);
            // Off-diagonal in any traced factor contributes nothing.
            let mut traced_diag = true;
            for f in 0..nf {
                if !kept.contains(&f) && row_digits[f] != col_digits[f] {
                    traced_diag = false;
                    break;
                }
            }
            if !traced_diag {
                continue;
            }
            let (mut ro, mut co) = (0usize, 0usize);
            for &f in &kept {
                ro = ro * dims[f] + row_digits[f];
                co = co * dims[f] + col_digits[f];
            }
            out[(ro, co)] += m[(row, col)];
        }
    }
    Ok(out)
}

fn decompose(mut index: usize, dims: &[usize], digits: &mut [usize]) {
    for f in (0..dims.len()).rev() {
        digits[f] = index % dims[f];
        index /= dims[f];
    }
}

/// Eigenvalues and eigenvectors of a Hermitian matrix by cyclic Jacobi
/// rotations. Returns `(values, vectors)` with `m = V diag(values) V†` and
/// eigenvectors in the columns of `V`. Values are unsorted.
pub fn hermitian_eigen(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "eigendecomposition of non-square {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    // Symmetrize: callers check hermiticity first; this removes roundoff skew.
    let mut a = m.add(&m.dagger())?.scale_re(0.5);
    let mut v = ComplexMatrix::identity(n);

    let scale = a.frobenius_norm().max(1.0);
    let target = 1e-28 * scale * scale;
    for _sweep in 0..100 {
        let off: f64 = {
            let mut s = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    s += a[(p, q)].norm_sqr();
                }
            }
            2.0 * s
        };
        if off <= target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let b = apq.norm();
                if b <= 1e-300 {
                    continue;
                }
                let phase = apq / b;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // Annihilation of the (p, q) entry requires t^2 - 2*tau*t - 1 = 0
                // for this rotation convention; take the smaller-magnitude root.
                let tau = (aqq - app) / (2.0 * b);
                let t = if tau >= 0.0 {
                    -1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // Unitary in the (p, q) plane:
                //   U[p][p] = c        U[p][q] = -s * phase
                //   U[q][p] = s / phase  U[q][q] = c
                // applied as a <- U† a U, v <- v U.
                let sp = Complex64::new(s, 0.0) * phase;
                let spc = Complex64::new(s, 0.0) * phase.conj();
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip * c + aiq * spc;
                    a[(i, q)] = aiq * c - aip * sp;
                }
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = apj * c + aqj * sp;
                    a[(q, j)] = aqj * c - apj * spc;
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * c + viq * spc;
                    v[(i, q)] = viq * c - vip * sp;
                }
            }
        }
    }
    let values = (0..n).map(|i| a[(i, i)].re).collect();
    Ok((values, v))
}

/// Eigenvalues only, sorted ascending.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let (mut vals, _) = hermitian_eigen(m)?;
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(vals)
}

/// True iff `m` is Hermitian within `tol` (max entry deviation) and every
/// eigenvalue is at least `-tol`.
pub fn is_psd(m: &ComplexMatrix, tol: f64) -> Result<bool> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "positivity check on non-square {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_hermitian(tol) {
        return Ok(false);
    }
    let vals = hermitian_eigenvalues(m)?;
    Ok(vals.iter().all(|&v| v >= -tol))
}

/// Numerical rank against the threshold `tol * max_eigenvalue_magnitude`.
/// Only meaningful for Hermitian PSD input.
pub fn psd_rank(m: &ComplexMatrix, tol: f64) -> Result<usize> {
    let vals = hermitian_eigenvalues(m)?;
    let top = vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if top == 0.0 {
        return Ok(0);
    }
    Ok(vals.iter().filter(|v| v.abs() > tol * top).count())
}

/// Least-squares proportionality test: the scalar `c` with `a == c * b`
/// entrywise, judged by the Frobenius residual of `a - c*b` relative to
/// `|a|_F`. Returns `None` when no such scalar exists within `tol`.
///
/// Both matrices (numerically) zero returns `Some(1)` by convention.
pub fn proportionality(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> Result<Option<Complex64>> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::Dimension(format!(
            "proportionality of {}x{} against {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let norm_a = a.frobenius_norm();
    let norm_b = b.frobenius_norm();
    if norm_b <= 1e-300 {
        return Ok(if norm_a <= 1e-300 {
            Some(Complex64::new(1.0, 0.0))
        } else {
            None
        });
    }
    // Least-squares scalar: <b, a> / <b, b>.
    let mut inner = Complex64::new(0.0, 0.0);
    for (x, y) in b.entries().iter().zip(a.entries()) {
        inner += x.conj() * y;
    }
    let c = inner / (norm_b * norm_b);
    let residual = a.sub(&b.scale(c))?.frobenius_norm();
    let denom = norm_a.max(1e-300);
    if residual / denom <= tol {
        Ok(Some(c))
    } else {
        Ok(None)
    }
}

/// Pauli X.
pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_real(&[&[0.0, 1.0], &[1.0, 0.0]])
}

/// Pauli Y.
pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[&[(0.0, 0.0), (0.0, -1.0)], &[(0.0, 1.0), (0.0, 0.0)]])
}

/// Pauli Z.
pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_real(&[&[1.0, 0.0], &[0.0, -1.0]])
}

/// Hadamard gate.
pub fn hadamard() -> ComplexMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_real(&[&[h, h], &[h, -h]])
}

/// The four single-qubit Paulis in the order identity, X, Y, Z.
pub fn pauli_basis() -> [ComplexMatrix; 4] {
    [ComplexMatrix::identity(2), pauli_x(), pauli_y(), pauli_z()]
}

/// Coefficients of a 4x4 operator in the two-qubit Pauli product basis,
/// `coeff[p][q] = tr[(P_p (x) P_q) m] / 4`, ordered identity, X, Y, Z on
/// each slot. Coefficients of Hermitian input are real; the imaginary part
/// is returned so callers can assert it vanishes.
pub fn two_qubit_pauli_coefficients(m: &ComplexMatrix) -> Result<Vec<((usize, usize), Complex64)>> {
    if m.rows() != 4 || m.cols() != 4 {
        return Err(Error::Dimension(format!(
            "two-qubit expansion of a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    let basis = pauli_basis();
    let mut out = Vec::with_capacity(16);
    for (p, bp) in basis.iter().enumerate() {
        for (q, bq) in basis.iter().enumerate() {
            let el = kron(bp, bq);
            let coeff = el.dagger().trace_product(m)? / 4.0;
            out.push(((p, q), coeff));
        }
    }
    Ok(out)
}

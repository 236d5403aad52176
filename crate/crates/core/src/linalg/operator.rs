use std::ops::{Add, Mul, Neg, Sub};

use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};
use crate::C64;

/// Square complex matrix on a finite Hilbert space.
#[derive(Clone, Debug)]
pub struct Operator {
    mat: Mat<C64>,
    hermitian_hint: bool,
}

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        Self { mat: Mat::zeros(dim, dim), hermitian_hint: true }
    }

    pub fn identity(dim: usize) -> Self {
        Self { mat: Mat::identity(dim, dim), hermitian_hint: true }
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self { mat: Mat::from_fn(dim, dim, f), hermitian_hint: false }
    }

    /// Real diagonal operator.
    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut out = Self::zeros(n);
        for (i, v) in values.iter().enumerate() {
            out.mat[(i, i)] = C64::new(*v, 0.0);
        }
        out
    }

    /// Builds an operator from `(row, col, value)` entries; duplicates add up.
    pub fn from_entries(dim: usize, entries: &[(usize, usize, C64)]) -> Result<Self> {
        let mut mat = Mat::zeros(dim, dim);
        for &(i, j, v) in entries {
            if i >= dim || j >= dim {
                return Err(Error::InvalidDimension(format!(
                    "entry ({i}, {j}) outside a {dim}x{dim} operator"
                )));
            }
            mat[(i, j)] += v;
        }
        Self::from_mat(mat)
    }

    /// Wraps a dense matrix, checking it is square with finite entries.
    pub fn from_mat(mat: Mat<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::InvalidDimension(format!(
                "operator must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if mat.nrows() == 0 {
            return Err(Error::InvalidDimension("operator of dimension 0".into()));
        }
        for j in 0..mat.ncols() {
            for i in 0..mat.nrows() {
                let z = mat[(i, j)];
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::NumericalFailure(format!("non-finite entry at ({i}, {j})")));
                }
            }
        }
        Ok(Self { mat, hermitian_hint: false })
    }

    /// Marks the operator Hermitian after verifying
    /// `max |A − A†| ≤ 1e-12 · max |A|`.
    pub fn into_hermitian(mut self) -> Result<Self> {
        let defect = self.hermiticity_defect();
        if defect > 1e-12 * self.max_abs().max(f64::MIN_POSITIVE) {
            return Err(Error::InvalidHamiltonian { defect });
        }
        self.hermitian_hint = true;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn hermitian_hint(&self) -> bool {
        self.hermitian_hint
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: C64) {
        self.mat[(i, j)] = value;
        self.hermitian_hint = false;
    }

    pub fn as_mat(&self) -> MatRef<'_, C64> {
        self.mat.as_ref()
    }

    pub fn into_mat(self) -> Mat<C64> {
        self.mat
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim();
        Self {
            mat: Mat::from_fn(d, d, |i, j| self.mat[(j, i)].conj()),
            hermitian_hint: self.hermitian_hint,
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.mat[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        let d = self.dim();
        let mut m = 0.0f64;
        for j in 0..d {
            for i in 0..d {
                m = m.max(self.mat[(i, j)].norm());
            }
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        let d = self.dim();
        let mut s = 0.0;
        for j in 0..d {
            for i in 0..d {
                s += self.mat[(i, j)].norm_sqr();
            }
        }
        s.sqrt()
    }

    /// `max |A − A†|` over entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut m = 0.0f64;
        for j in 0..d {
            for i in 0..=j {
                m = m.max((self.mat[(i, j)] - self.mat[(j, i)].conj()).norm());
            }
        }
        m
    }

    /// `(A + A†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let d = self.dim();
        Self {
            mat: Mat::from_fn(d, d, |i, j| (self.mat[(i, j)] + self.mat[(j, i)].conj()) * 0.5),
            hermitian_hint: true,
        }
    }

    pub fn scaled(&self, c: C64) -> Self {
        let d = self.dim();
        Self {
            mat: Mat::from_fn(d, d, |i, j| self.mat[(i, j)] * c),
            hermitian_hint: self.hermitian_hint && c.im == 0.0,
        }
    }

    pub fn scaled_real(&self, c: f64) -> Self {
        self.scaled(C64::new(c, 0.0))
    }

    /// `[A, B] = AB − BA`.
    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// `Tr{A B}` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        let d = self.dim();
        let mut s = C64::new(0.0, 0.0);
        for i in 0..d {
            for k in 0..d {
                s += self.mat[(i, k)] * other.mat[(k, i)];
            }
        }
        s
    }

    /// Nonzero entries as `(row, col, value)`.
    pub fn nonzeros(&self) -> Vec<(usize, usize, C64)> {
        let d = self.dim();
        let mut out = Vec::new();
        for j in 0..d {
            for i in 0..d {
                let z = self.mat[(i, j)];
                if z.re != 0.0 || z.im != 0.0 {
                    out.push((i, j, z));
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self - other).max_abs()
    }

    /// Eigendecomposition of a Hermitian operator: ascending real eigenvalues
    /// and the unitary whose columns are the eigenvectors.
    pub fn eigh(&self) -> Result<(Vec<f64>, Mat<C64>)> {
        let herm = self.hermitian_part();
        let evd = herm
            .mat
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::NumericalFailure(format!("Hermitian eigensolver: {e:?}")))?;
        let s = evd.S().column_vector();
        let values = (0..self.dim()).map(|i| s[i].re).collect();
        Ok((values, evd.U().to_owned()))
    }

    /// `f(A)` for Hermitian `A` through its spectral decomposition.
    pub fn hermitian_fn(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let (values, vecs) = self.eigh()?;
        Ok(from_spectrum(&values.iter().map(|&x| f(x)).collect::<Vec<_>>(), &vecs))
    }
}

/// `V diag(values) V†`.
pub(crate) fn from_spectrum(values: &[f64], vecs: &Mat<C64>) -> Operator {
    let d = values.len();
    let scaled = Mat::from_fn(d, d, |i, k| vecs[(i, k)] * values[k]);
    let mat = &scaled * vecs.adjoint();
    Operator { mat, hermitian_hint: true }.hermitian_part()
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        Operator {
            mat: &self.mat + &rhs.mat,
            hermitian_hint: self.hermitian_hint && rhs.hermitian_hint,
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        Operator {
            mat: &self.mat - &rhs.mat,
            hermitian_hint: self.hermitian_hint && rhs.hermitian_hint,
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        Operator { mat: &self.mat * &rhs.mat, hermitian_hint: false }
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scaled_real(-1.0)
    }
}

/// Truncated bosonic annihilation operator on `n_max` Fock levels:
/// `⟨n|a|n+1⟩ = √(n+1)`.
pub fn fock_annihilation(n_max: usize) -> Result<Operator> {
    if n_max < 2 {
        return Err(Error::InvalidDimension(format!(
            "Fock truncation needs at least 2 levels, got {n_max}"
        )));
    }
    let mut a = Operator::zeros(n_max);
    for n in 0..n_max - 1 {
        a.mat[(n, n + 1)] = C64::new(((n + 1) as f64).sqrt(), 0.0);
    }
    a.hermitian_hint = false;
    Ok(a)
}

/// Tensor product `A ⊗ B`; the index of `|i⟩_A|k⟩_B` is `i·dim(B) + k`.
pub fn kron(a: &Operator, b: &Operator) -> Operator {
    let (da, db) = (a.dim(), b.dim());
    let mut mat = Mat::zeros(da * db, da * db);
    for (i, j, x) in a.nonzeros() {
        for l in 0..db {
            for k in 0..db {
                let y = b.mat[(k, l)];
                if y.re != 0.0 || y.im != 0.0 {
                    mat[(i * db + k, j * db + l)] = x * y;
                }
            }
        }
    }
    Operator { mat, hermitian_hint: a.hermitian_hint && b.hermitian_hint }
}

use faer::Mat;

use super::operator::Operator;
use crate::error::{Error, Result};
use crate::C64;

/// Position of `ρ[i, j]` in the column-stacked vector of a `dim × dim` operator.
#[inline]
pub fn vec_index(dim: usize, i: usize, j: usize) -> usize {
    i + dim * j
}

pub fn vectorize(op: &Operator) -> Vec<C64> {
    let d = op.dim();
    let mut v = Vec::with_capacity(d * d);
    for j in 0..d {
        for i in 0..d {
            v.push(op.get(i, j));
        }
    }
    v
}

pub fn unvectorize(dim: usize, v: &[C64]) -> Result<Operator> {
    if v.len() != dim * dim {
        return Err(Error::DimensionMismatch { expected: dim * dim, got: v.len() });
    }
    Ok(Operator::from_fn(dim, |i, j| v[vec_index(dim, i, j)]))
}

/// Linear map on vectorized operators, stored in compressed sparse rows.
#[derive(Clone, Debug)]
pub struct SuperOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl SuperOperator {
    pub fn zero(dim: usize) -> Self {
        Self { dim, row_ptr: vec![0; dim * dim + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    /// Builds from unsorted triplets over `dim² × dim²`; duplicates are summed
    /// and exact zeros dropped.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        let n = dim * dim;
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            debug_assert!(r < n && c < n);
            if let (Some(&lr), Some(&lc)) = (rows.last(), col_idx.last()) {
                if lr == r && lc == c {
                    *values.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            col_idx.push(c);
            values.push(v);
        }
        // drop entries that cancelled exactly
        let mut keep_rows = Vec::with_capacity(rows.len());
        let mut keep_cols = Vec::with_capacity(rows.len());
        let mut keep_vals = Vec::with_capacity(rows.len());
        for ((r, c), v) in rows.into_iter().zip(col_idx).zip(values) {
            if v.re != 0.0 || v.im != 0.0 {
                keep_rows.push(r);
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for &r in &keep_rows {
            row_ptr[r + 1] += 1;
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self { dim, row_ptr, col_idx: keep_cols, values: keep_vals }
    }

    /// Hilbert-space dimension `d`; the map acts on vectors of length `d²`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn size(&self) -> usize {
        self.dim * self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.size()).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.col_idx[k], self.values[k]))
    }

    pub fn apply_vec(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.size());
        assert_eq!(y.len(), self.size());
        for (r, out) in y.iter_mut().enumerate() {
            let mut s = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *out = s;
        }
    }

    pub fn apply(&self, rho: &Operator) -> Result<Operator> {
        if rho.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: rho.dim() });
        }
        let x = vectorize(rho);
        let mut y = vec![C64::new(0.0, 0.0); x.len()];
        self.apply_vec(&x, &mut y);
        unvectorize(self.dim, &y)
    }

    pub fn sum<'a>(dim: usize, parts: impl IntoIterator<Item = &'a SuperOperator>) -> Self {
        let mut t = Vec::new();
        for p in parts {
            assert_eq!(p.dim, dim, "superoperator dimension mismatch");
            t.extend(p.triplets());
        }
        Self::from_triplets(dim, t)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::sum(self.dim, [self, other])
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= c;
        }
        if c == 0.0 {
            return Self::zero(self.dim);
        }
        out
    }

    /// Largest `|Tr{S(X)}|` over matrix units `X = |k⟩⟨l|`, i.e. the largest
    /// entry of `S†(I)`. Zero for a trace-preserving map.
    pub fn trace_defect(&self) -> f64 {
        let mut col_sums = vec![C64::new(0.0, 0.0); self.size()];
        for i in 0..self.dim {
            let r = vec_index(self.dim, i, i);
            for (c, v) in self.row(r) {
                col_sums[c] += v;
            }
        }
        col_sums.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute row sum; bounds the spectral radius.
    pub fn inf_norm(&self) -> f64 {
        (0..self.size()).map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let diff = Self::sum(self.dim, [self, &other.scaled(-1.0)]);
        diff.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Mat<C64> {
        let mut m = Mat::zeros(self.size(), self.size());
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }
}

/// `ρ ↦ A ρ B`, i.e. `(Bᵀ ⊗ A)` in the column-stacking convention.
pub fn sandwich_super(a: &Operator, b: &Operator) -> Result<SuperOperator> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    Ok(SuperOperator::from_triplets(a.dim(), sandwich_triplets(a, b)))
}

fn sandwich_triplets(a: &Operator, b: &Operator) -> Vec<(usize, usize, C64)> {
    let d = a.dim();
    let na = a.nonzeros();
    let nb = b.nonzeros();
    let mut t = Vec::with_capacity(na.len() * nb.len());
    for &(l, j, y) in &nb {
        for &(i, k, x) in &na {
            t.push((vec_index(d, i, j), vec_index(d, k, l), x * y));
        }
    }
    t
}

fn left_triplets(a: &Operator, scale: C64) -> Vec<(usize, usize, C64)> {
    let d = a.dim();
    let mut t = Vec::new();
    for (i, k, x) in a.nonzeros() {
        for j in 0..d {
            t.push((vec_index(d, i, j), vec_index(d, k, j), x * scale));
        }
    }
    t
}

fn right_triplets(b: &Operator, scale: C64) -> Vec<(usize, usize, C64)> {
    let d = b.dim();
    let mut t = Vec::new();
    for (l, j, y) in b.nonzeros() {
        for i in 0..d {
            t.push((vec_index(d, i, j), vec_index(d, i, l), y * scale));
        }
    }
    t
}

/// `𝓓[L]ρ = LρL† − ½{L†L, ρ}`.
pub fn dissipator_super(l: &Operator) -> SuperOperator {
    let ldag = l.adjoint();
    let ldl = &ldag * l;
    let half = C64::new(-0.5, 0.0);
    let mut t = sandwich_triplets(l, &ldag);
    t.extend(left_triplets(&ldl, half));
    t.extend(right_triplets(&ldl, half));
    SuperOperator::from_triplets(l.dim(), t)
}

/// `ρ ↦ −i[H, ρ]` for Hermitian `H`.
pub fn commutator_super(h: &Operator) -> Result<SuperOperator> {
    let h = if h.hermitian_hint() { h.clone() } else { h.clone().into_hermitian()? };
    let mi = C64::new(0.0, -1.0);
    let mut t = left_triplets(&h, mi);
    t.extend(right_triplets(&h, -mi));
    Ok(SuperOperator::from_triplets(h.dim(), t))
}

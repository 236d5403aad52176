use std::sync::OnceLock;

use faer::Mat;

use super::operator::Operator;
use crate::error::{Error, Result};
use crate::C64;

/// Eigenvalues below this are dropped from entropies and floored in matrix
/// logarithms.
pub const EIG_FLOOR: f64 = 1e-14;

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = -1e-8;

/// Spectral decomposition of a density matrix (ascending eigenvalues).
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Mat<C64>,
}

impl Eigen {
    /// Eigenvalues with round-off negatives in `[−1e-8, 0)` clipped to zero and
    /// the spectrum renormalized.
    pub fn clipped_values(&self) -> Vec<f64> {
        let clipped: Vec<f64> = self.values.iter().map(|&l| l.max(0.0)).collect();
        let s: f64 = clipped.iter().sum();
        clipped.into_iter().map(|l| l / s).collect()
    }
}

/// Hermitian, unit-trace, positive semidefinite operator.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    op: Operator,
    eigen: OnceLock<Eigen>,
}

impl DensityMatrix {
    /// Validates `op` as a density matrix without modifying it.
    pub fn new(op: Operator) -> Result<Self> {
        let defect = op.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (defect {defect:.3e})")));
        }
        let tr = op.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let rho = Self { op, eigen: OnceLock::new() };
        let min = rho.eigen()?.values.first().copied().unwrap_or(0.0);
        if min < PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(rho)
    }

    /// Hermitizes and normalizes `op`, then validates it.
    pub fn from_unnormalized(op: &Operator) -> Result<Self> {
        let h = op.hermitian_part();
        let tr = h.trace().re;
        if !(tr.is_finite() && tr > 0.0) {
            return Err(Error::InvalidState(format!("cannot normalize operator with trace {tr}")));
        }
        Self::new(h.scaled_real(1.0 / tr))
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) state vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if norm <= 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let op = Operator::from_fn(psi.len(), |i, j| psi[i] * psi[j].conj() / norm);
        Self::from_unnormalized(&op)
    }

    /// Maximally mixed state `I/d`.
    pub fn maximally_mixed(dim: usize) -> Self {
        let op = Operator::identity(dim).scaled_real(1.0 / dim as f64);
        Self { op, eigen: OnceLock::new() }
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn eigen(&self) -> Result<&Eigen> {
        if let Some(e) = self.eigen.get() {
            return Ok(e);
        }
        let (values, vectors) = self.op.eigh()?;
        let _ = self.eigen.set(Eigen { values, vectors });
        Ok(self.eigen.get().expect("eigendecomposition cached"))
    }

    pub fn purity(&self) -> f64 {
        self.op.trace_product(&self.op).re
    }

    /// `max |ρ − σ|` entrywise.
    pub fn distance(&self, other: &Self) -> f64 {
        self.op.max_abs_diff(&other.op)
    }
}

/// `Tr{A ρ}`.
pub fn expectation(a: &Operator, rho: &DensityMatrix) -> Result<C64> {
    if a.dim() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), got: a.dim() });
    }
    Ok(a.trace_product(rho.operator()))
}

/// `−Tr{ρ ln ρ}` over eigenvalues above [`EIG_FLOOR`].
pub fn vn_entropy(rho: &DensityMatrix) -> Result<f64> {
    let eig = rho.eigen()?;
    let s: f64 = eig
        .clipped_values()
        .into_iter()
        .filter(|&l| l > EIG_FLOOR)
        .map(|l| -l * l.ln())
        .sum();
    Ok(s.max(0.0))
}

/// `−Tr{ρ̇ ln ρ}`: the rate of change of the von Neumann entropy along `ρ̇`.
///
/// The logarithm floors eigenvalues at [`EIG_FLOOR`]; a warning is logged if
/// `ρ̇` has appreciable weight on the floored subspace.
pub fn entropy_rate(rho: &DensityMatrix, drho: &Operator) -> Result<f64> {
    if drho.dim() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), got: drho.dim() });
    }
    let eig = rho.eigen()?;
    let v = &eig.vectors;
    let rotated = v.adjoint() * drho.as_mat() * v;
    let scale = drho.max_abs();
    let mut rate = 0.0;
    let mut floored_weight = 0.0;
    for (k, &l) in eig.clipped_values().iter().enumerate() {
        let w = rotated[(k, k)].re;
        if l <= EIG_FLOOR {
            floored_weight += w.abs();
        }
        rate -= w * l.max(EIG_FLOOR).ln();
    }
    if floored_weight > 1e-10 * scale.max(f64::MIN_POSITIVE) && floored_weight > 1e-14 {
        log::warn!(
            "entropy rate: state is rank deficient where the derivative has weight {floored_weight:.3e}; logarithm regularized"
        );
    }
    Ok(rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{fock_annihilation, kron};
    use proptest::prelude::*;

    fn thermal(n_max: usize, n_c: f64) -> DensityMatrix {
        let r = n_c / (n_c + 1.0);
        let w: Vec<f64> = (0..n_max).map(|n| r.powi(n as i32)).collect();
        let z: f64 = w.iter().sum();
        DensityMatrix::new(Operator::diag(&w.iter().map(|x| x / z).collect::<Vec<_>>())).unwrap()
    }

    fn coherent(n_max: usize, alpha: C64) -> DensityMatrix {
        let mut psi = Vec::with_capacity(n_max);
        let mut amp = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
        for n in 0..n_max {
            if n > 0 {
                amp = amp * alpha / (n as f64).sqrt();
            }
            psi.push(amp);
        }
        DensityMatrix::pure(&psi).unwrap()
    }

    #[test]
    fn identity_expectation_is_one() {
        let rho = thermal(10, 0.7);
        let e = expectation(&Operator::identity(10), &rho).unwrap();
        assert!((e - C64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn thermal_number_matches_geometric_sum() {
        let (n_max, n_c) = (12usize, 1.3f64);
        let a = fock_annihilation(n_max).unwrap();
        let n = &a.adjoint() * &a;
        let got = expectation(&n, &thermal(n_max, n_c)).unwrap();
        // oracle: weighted sum over the truncated geometric distribution
        let r = n_c / (n_c + 1.0);
        let (mut num, mut den) = (0.0, 0.0);
        for k in 0..n_max {
            num += k as f64 * r.powi(k as i32);
            den += r.powi(k as i32);
        }
        assert!((got.re - num / den).abs() < 1e-12);
        assert!(got.im.abs() < 1e-14);
        assert!(got.re < n_c);
    }

    #[test]
    fn coherent_amplitude() {
        let alpha = C64::new(0.6, -0.3);
        let a = fock_annihilation(30).unwrap();
        let got = expectation(&a, &coherent(30, alpha)).unwrap();
        assert!((got - alpha).norm() < 1e-10);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let rho = thermal(4, 0.1);
        assert!(matches!(
            expectation(&Operator::identity(3), &rho),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn pure_state_has_zero_entropy() {
        let rho = coherent(20, C64::new(1.0, 0.5));
        assert!(vn_entropy(&rho).unwrap().abs() < 1e-10);
    }

    #[test]
    fn maximally_mixed_entropy() {
        for d in [2usize, 5, 17] {
            let s = vn_entropy(&DensityMatrix::maximally_mixed(d)).unwrap();
            assert!((s - (d as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn thermal_entropy_matches_bosonic_formula() {
        let s = vn_entropy(&thermal(40, 1.0)).unwrap();
        assert!((s - 2.0 * 2f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn entropy_rate_of_zero_derivative() {
        let rho = thermal(6, 0.4);
        assert_eq!(entropy_rate(&rho, &Operator::zeros(6)).unwrap(), 0.0);
    }

    #[test]
    fn rejects_invalid_states() {
        assert!(DensityMatrix::new(Operator::diag(&[0.5, 0.6])).is_err());
        assert!(DensityMatrix::new(Operator::diag(&[1.5, -0.5])).is_err());
        let skew = Operator::from_entries(2, &[(0, 0, C64::new(0.5, 0.0)), (1, 1, C64::new(0.5, 0.0)), (0, 1, C64::new(0.1, 0.0))]).unwrap();
        assert!(DensityMatrix::new(skew).is_err());
    }

    #[test]
    fn kron_of_states_is_state() {
        let rho = kron(thermal(3, 0.2).operator(), DensityMatrix::maximally_mixed(2).operator());
        assert!(DensityMatrix::new(rho).is_ok());
    }

    fn random_unitary(d: usize, seed: &[f64]) -> Operator {
        let h = Operator::from_fn(d, |i, j| C64::new(seed[(i * d + j) % seed.len()], seed[(j * d + i + 1) % seed.len()]))
            .hermitian_part();
        let (vals, vecs) = h.eigh().unwrap();
        Operator::from_fn(d, |i, j| (0..d).map(|k| vecs[(i, k)] * C64::from_polar(1.0, vals[k]) * vecs[(j, k)].conj()).sum())
    }

    proptest! {
        #[test]
        fn entropy_is_unitarily_invariant(
            weights in proptest::collection::vec(0.01f64..1.0, 4),
            seed in proptest::collection::vec(-2.0f64..2.0, 16),
        ) {
            let z: f64 = weights.iter().sum();
            let rho = DensityMatrix::new(Operator::diag(&weights.iter().map(|w| w / z).collect::<Vec<_>>())).unwrap();
            let u = random_unitary(4, &seed);
            let rotated = DensityMatrix::from_unnormalized(&(&(&u * rho.operator()) * &u.adjoint())).unwrap();
            let (s0, s1) = (vn_entropy(&rho).unwrap(), vn_entropy(&rotated).unwrap());
            prop_assert!((s0 - s1).abs() < 1e-9);
            prop_assert!(s0 <= 4f64.ln() + 1e-12);
        }
    }
}

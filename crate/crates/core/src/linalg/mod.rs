//! Complex operator and superoperator algebra on finite-dimensional Hilbert
//! spaces.
//!
//! Operators are stored densely (the largest Hilbert space handled here has a
//! few hundred states). Superoperators act on column-stacked vectorized
//! operators, `vec(ρ)[i + d·j] = ρ[i, j]`, and are always stored sparse.

mod density;
mod operator;
mod superop;

pub use density::{entropy_rate, expectation, vn_entropy, DensityMatrix, Eigen, EIG_FLOOR};
pub use operator::{fock_annihilation, kron, Operator};
pub use superop::{
    commutator_super, dissipator_super, sandwich_super, unvectorize, vec_index, vectorize,
    SuperOperator,
};

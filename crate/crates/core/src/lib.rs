//! Numerical engine for coherently driven cavity systems described by GKSL
//! master equations.
//!
//! The crate assembles Liouvillians for a driven cavity mode (optionally
//! hosting a Kerr nonlinearity, a two-level system or a three-level maser),
//! finds steady states and transients, and evaluates two complete
//! thermodynamic bookkeepings for the result:
//!
//! * the *conventional* one, where everything leaving the cavity is heat;
//! * the *input–output* one, where the coherent part of the output light is
//!   counted as work and only its noise is counted as heat.
//!
//! The [`audit`] module turns every identity and inequality linking the two
//! into a machine-checkable report.
//!
//! Units: ħ = k_B = 1; rates and frequencies are conventionally expressed in
//! units of the cavity linewidth κ.

pub mod audit;
pub mod error;
pub mod linalg;
pub mod models;
pub mod solver;
pub mod thermo;

pub use error::{Error, Result};
pub use linalg::{DensityMatrix, Operator, SuperOperator};
pub use models::{BathChannel, ChannelKind, DriveSpec, IntraSystem, ModelSpec, Preset};
pub use solver::{Liouvillian, SteadyStateMethod};
pub use thermo::ThermoReport;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

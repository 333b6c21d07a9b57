//! Exact simulation and verification of β-Hermite and β-Laguerre matrix
//! processes.
//!
//! Each matrix process is a tridiagonal (Hermite) or bidiagonal (Laguerre)
//! matrix whose independent entries are Ornstein–Uhlenbeck and generalized
//! Bessel processes. The crate samples them exactly, computes spectral
//! measures, evaluates the reference laws they should follow, and measures
//! how closely simulations match those laws.

// `!(x > 0.0)` is deliberate: it rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod kernels;
pub mod laws;
pub mod matproc;
pub mod quad;
pub mod rng;
pub mod special;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use kernels::{BesselParams, OuParams, SeriesVariant};
pub use laws::{LimitKind, LimitLaw, WeightKind, WeightLaw};
pub use matproc::{BidiagonalMatrix, HermiteProcess, JacobiMatrix, LaguerreProcess};
pub use spectral::{Atom, AtomicMeasure, EmpiricalMeasure, SpectralMeasure};

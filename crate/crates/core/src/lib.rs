//! Slice-monogenic S-functional calculus for operators with Clifford coefficients.

pub mod calculus;
pub mod clifford;
pub mod error;
pub mod exec;
pub mod io;
pub mod operator;
pub mod slice;
pub mod spectral;
pub mod unbounded;
pub mod verify;

pub use clifford::{BladeIndex, ImagUnit, Multivector, Paravector};
pub use error::{Error, Result};
pub use exec::Exec;
pub use operator::{CliffordMatrix, ModuleVector, ParavectorOperator, RealRep};
pub use slice::SliceSeriesFunction;

//! Two-qubit weak-measurement simulation: density matrices, local
//! measurements, entanglement measures and measurement sequences.

pub mod entanglement;
pub mod error;
pub mod matrix;
pub mod measurements;
pub mod sequences;
pub mod states;

pub use error::{Error, Result};
pub use matrix::{Mat2, Mat3, Mat4, Vec3, C64};
pub use states::{BlochForm, DensityMatrix2Q, PureState2Q};

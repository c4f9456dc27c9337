//! Random polynomial systems and their condition functionals.
//!
//! A system of `n − 1` homogeneous degree-`d` forms in `n` variables is
//! stored as a dense, unsymmetrized coefficient tensor ([`system`]). On top
//! of it sit the coefficient ensembles and seed streams ([`ensembles`]), the
//! functionals `L(x, y)`, μ⁽¹⁾ and μ⁽²⁾ ([`condition`]), least common
//! denominators and small-ball estimates ([`diophantine`]), compressible
//! vectors ([`geometry`]), tensor operator norms ([`opnorm`]) and the Monte
//! Carlo experiments tying them together ([`harness`]).
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); sampling and
//! experiments run in `f64`, for which the crate root has aliases.

pub mod condition;
pub mod diophantine;
pub mod ensembles;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod opnorm;
pub mod scalar;
pub mod stats;
pub mod system;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use system::{CoefficientTensor, PolynomialSystem, SystemShape, TangentFrame};

pub type Tensor = CoefficientTensor<f64>;
pub type System = PolynomialSystem<f64>;
pub type Pair = condition::UnitPair<f64>;
pub type Frame = TangentFrame<f64>;

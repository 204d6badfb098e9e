//! Dense matrices, a reverse-mode autodiff tape, seeded random streams and a
//! finite-difference gradient checker.

pub mod gradcheck;
pub mod matrix;
pub mod rng;
pub mod tape;

pub use gradcheck::{GradCheckReport, grad_check};
pub use matrix::{Matrix, Real};
pub use rng::Rng;
pub use tape::{Gradients, Tape, Var};

//! Second-order stabilized two-step Runge-Kutta methods built on damped,
//! shifted Chebyshev polynomials: coefficient design, stability analysis,
//! a constant-step integrator and a small set of stiff test problems.

pub mod chebyshev;
pub mod design;
pub mod error;
pub mod integrator;
pub mod problems;
pub mod reference;
pub mod stability;

pub use error::{Error, Result};

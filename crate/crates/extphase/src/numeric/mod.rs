//! Numerical building blocks: an adaptive Runge–Kutta integrator, quintic
//! Hermite interpolation, Gauss–Legendre quadrature and bracketed root finding.

pub mod hermite;
pub mod ode;
pub mod quad;
pub mod root;

pub use hermite::QuinticHermite;
pub use ode::{Dopri5, StepRecord};

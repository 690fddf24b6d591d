//! Numerical toolkit for the fractional nonlinear Schrodinger equation with
//! combined power nonlinearities
//!
//! ```text
//! i u_t - (-Delta)^s u + l1 |u|^{2 p1} u + l2 |u|^{2 p2} u = 0
//! ```
//!
//! on periodic boxes: ground states and sharp Gagliardo-Nirenberg constants,
//! threshold curves for blow-up versus global existence, split-step dynamics,
//! localized virial monitoring and blow-up diagnostics.

pub mod blowup;
pub mod dynamics;
pub mod error;
pub mod ground_state;
pub mod snapshot;
pub mod spectral;
pub mod thresholds;
pub mod virial;

pub use error::{Error, Result};
pub use spectral::{Field, Grid, ModelParams};

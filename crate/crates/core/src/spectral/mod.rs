//! Periodic grids, fields, and the Fourier-multiplier calculus everything else builds on.

mod field;
mod grid;
mod interp;
mod ops;
mod params;

pub use field::Field;
pub use grid::Grid;
pub use interp::{sample_point, sample_tensor};
pub use ops::{energy, frac_laplacian, gradient, hs_seminorm, lq_norm, lq_power, EnergyParts};
pub(crate) use ops::{hs_seminorm_sq_unchecked, lq_power_unchecked};
pub use params::{energy_critical_exponent, ModelParams};

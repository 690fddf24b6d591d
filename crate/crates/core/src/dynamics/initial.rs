use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::ground_state::GroundState;
use crate::spectral::{sample_tensor, Field, Grid};

/// `amplitude * exp(-|x|^2 / width^2)`.
pub fn gaussian(grid: &Arc<Grid>, amplitude: f64, width: f64) -> Field {
    let w2 = width * width;
    Field::from_real_fn(Arc::clone(grid), |x| {
        amplitude * (-x.iter().map(|v| v * v).sum::<f64>() / w2).exp()
    })
}

/// Gaussian shell of the given radius, with an angular ripple
/// `1 + eps cos(mode * angle)` in the first coordinate plane when `N >= 2`.
pub fn ring(grid: &Arc<Grid>, amplitude: f64, radius: f64, width: f64, eps: f64, mode: u32) -> Field {
    let w2 = width * width;
    Field::from_real_fn(Arc::clone(grid), |x| {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let shell = amplitude * (-(r - radius) * (r - radius) / w2).exp();
        if x.len() >= 2 {
            shell * (1.0 + eps * (mode as f64 * x[1].atan2(x[0])).cos())
        } else {
            shell
        }
    })
}

/// `c rho^{N/2} Q(rho x)` on `grid`. When `grid` is the ground-state grid
/// shrunk by `rho` the samples are reused as they are; otherwise `Q` is
/// evaluated by spectral interpolation.
pub fn scaled_ground_state(gs: &GroundState, c: Complex64, rho: f64, grid: &Arc<Grid>) -> Result<Field> {
    let qg = gs.profile.grid();
    let amp = c * rho.powf(0.5 * qg.dim() as f64);
    let same_nodes = grid.dim() == qg.dim()
        && grid.n() == qg.n()
        && (grid.half_length() * rho - qg.half_length()).abs() <= 1e-12 * qg.half_length();
    if same_nodes {
        return Field::new(Arc::clone(grid), gs.profile.values().iter().map(|&v| amp * v).collect());
    }
    let axis: Vec<f64> = (0..grid.n()).map(|j| rho * grid.coord(j)).collect();
    let targets = vec![axis; grid.dim()];
    let vals = sample_tensor(&gs.profile, &targets)?;
    Field::new(Arc::clone(grid), vals.into_iter().map(|v| amp * v).collect())
}

/// Multiplies each sample by `1 + eps * xi` with `xi` uniform on `[-1, 1]`,
/// drawn from a seeded generator.
pub fn perturb(f: &Field, eps: f64, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> = (0..f.values().len()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let vals = f
        .values()
        .iter()
        .zip(noise)
        .map(|(&v, xi)| v * (1.0 + eps * xi))
        .collect();
    Field::new(Arc::clone(f.grid()), vals).expect("same length")
}

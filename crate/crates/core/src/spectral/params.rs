use crate::error::{Error, Result};

/// Coefficients of `i u_t - (-Delta)^s u + l1 |u|^{2 p1} u + l2 |u|^{2 p2} u = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub s: f64,
    pub dim: usize,
    pub p1: f64,
    pub p2: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl ModelParams {
    pub fn new(s: f64, dim: usize, p1: f64, p2: f64, lambda1: f64, lambda2: f64) -> Result<Self> {
        let params = ModelParams {
            s,
            dim,
            p1,
            p2,
            lambda1,
            lambda2,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let ModelParams { s, dim, p1, p2, .. } = *self;
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::InvalidParams(format!("s = {s} outside (0, 1]")));
        }
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidParams(format!("dimension {dim} outside 1..=3")));
        }
        if !(p1 > 0.0 && p1 < p2) {
            return Err(Error::InvalidParams(format!(
                "need 0 < p1 < p2, got p1 = {p1}, p2 = {p2}"
            )));
        }
        if let Some(pmax) = energy_critical_exponent(s, dim) {
            if p2 >= pmax {
                return Err(Error::InvalidParams(format!(
                    "p2 = {p2} not below the energy-critical bound {pmax}"
                )));
            }
        }
        if !(self.lambda1.is_finite() && self.lambda2.is_finite()) {
            return Err(Error::InvalidParams("non-finite coupling".into()));
        }
        Ok(())
    }

    /// The mass-critical exponent `2s / N`.
    pub fn critical_p(&self) -> f64 {
        2.0 * self.s / self.dim as f64
    }

    /// True when `N >= 2` and `1/2 < s < 1`, the setting the blow-up results assume.
    pub fn in_threshold_setting(&self) -> bool {
        self.dim >= 2 && self.s > 0.5 && self.s < 1.0
    }
}

/// `2s / (N - 2s)` when `N > 2s`, otherwise there is no upper bound.
pub fn energy_critical_exponent(s: f64, dim: usize) -> Option<f64> {
    let n = dim as f64;
    (n > 2.0 * s).then(|| 2.0 * s / (n - 2.0 * s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_ordering() {
        assert!(ModelParams::new(0.7, 2, 0.5, 0.7, -1.0, 1.0).is_ok());
        assert!(ModelParams::new(0.7, 2, 0.7, 0.5, -1.0, 1.0).is_err());
        // 2s/(N-2s) = 1.4/0.6
        assert!(ModelParams::new(0.7, 2, 0.5, 2.4, 1.0, 1.0).is_err());
        assert!(ModelParams::new(0.0, 2, 0.5, 0.7, 1.0, 1.0).is_err());
        assert!(ModelParams::new(1.2, 2, 0.5, 0.7, 1.0, 1.0).is_err());
    }

    #[test]
    fn classical_one_d_is_admitted() {
        let p = ModelParams::new(1.0, 1, 1.0, 2.0, 0.0, 1.0).unwrap();
        assert!(!p.in_threshold_setting());
        assert_eq!(p.critical_p(), 2.0);
    }
}

//! Regularity parameters and the summability constraint that governs every
//! density-of-states estimate.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Regularity parameters `(s, gamma, alpha)`:
/// `s` controls smoothness across fibers, `gamma` smoothness along each
/// fiber, and `alpha` is the degeneracy exponent of the flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralParams {
    pub s: f64,
    pub gamma: f64,
    pub alpha: f64,
}

/// Report produced by [`SpectralParams::validate`]: which requirements hold
/// and the exponents they predict.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ParamReport {
    pub s_ok: bool,
    pub gamma_ok: bool,
    pub constraint_ok: bool,
    pub ok: bool,
    /// Exponent of the density-of-states bound: `2s/alpha - 1`.
    pub dos_exponent: f64,
    /// Uniform averaging rate `s / (s + alpha)`.
    pub rate: f64,
    /// Intermediate exponent `p = 2s/alpha`.
    pub p: f64,
    /// `p / (2 + p)`, which must equal `rate` identically.
    pub rate_from_p: f64,
}

impl SpectralParams {
    /// Requires only that the fields are finite and `alpha > 0`; the
    /// regularity requirements themselves are checked by [`validate`],
    /// which reports rather than fails.
    ///
    /// [`validate`]: SpectralParams::validate
    pub fn new(s: f64, gamma: f64, alpha: f64) -> Result<Self> {
        if !s.is_finite() || !gamma.is_finite() || !alpha.is_finite() {
            return Err(Error::Parameter("parameters must be finite".into()));
        }
        if alpha <= 0.0 {
            return Err(Error::Parameter(format!(
                "degeneracy exponent must be positive, got {alpha}"
            )));
        }
        Ok(SpectralParams { s, gamma, alpha })
    }

    /// `gamma + s/alpha > 1/2`, the condition that makes the mode sums of the
    /// density of states converge.
    pub fn constraint_ok(&self) -> bool {
        self.gamma + self.s / self.alpha > 0.5
    }

    /// Exponent of the density-of-states envelope near zero.
    pub fn dos_exponent(&self) -> f64 {
        2.0 * self.s / self.alpha - 1.0
    }

    /// Uniform averaging rate exponent.
    pub fn rate(&self) -> f64 {
        self.s / (self.s + self.alpha)
    }

    /// Decay exponent of the mode sums: `2*gamma + 2s/alpha`.
    pub fn tail_exponent(&self) -> f64 {
        2.0 * self.gamma + 2.0 * self.s / self.alpha
    }

    /// Full validation report, including the predicted exponents and the
    /// identity `p/(2+p) = s/(s+alpha)` with `p = 2s/alpha`.
    pub fn validate(&self) -> ParamReport {
        let s_ok = self.s > 0.5;
        let gamma_ok = self.gamma >= 0.0;
        let constraint_ok = self.constraint_ok();
        let p = 2.0 * self.s / self.alpha;
        ParamReport {
            s_ok,
            gamma_ok,
            constraint_ok,
            ok: s_ok && gamma_ok && constraint_ok,
            dos_exponent: self.dos_exponent(),
            rate: self.rate(),
            p,
            rate_from_p: p / (2.0 + p),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_parameters_pass() {
        let p = SpectralParams::new(0.75, 0.0, 1.0).unwrap();
        let r = p.validate();
        assert!(r.ok);
        assert!((r.dos_exponent - 0.5).abs() < 1e-15);
        assert!((r.rate - 0.428571428571).abs() < 1e-9);
    }

    #[test]
    fn fast_degeneracy_needs_theta_regularity() {
        let p = SpectralParams::new(0.75, 0.0, 2.0).unwrap();
        let r = p.validate();
        assert!(!r.constraint_ok);
        assert!(!r.ok);
        // 0.375 <= 0.5
        assert!(p.gamma + p.s / p.alpha <= 0.5);
    }

    #[test]
    fn theta_regularity_restores_constraint() {
        let p = SpectralParams::new(0.6, 0.3, 2.0).unwrap();
        let r = p.validate();
        assert!(r.ok);
        assert!((r.dos_exponent + 0.4).abs() < 1e-15);
        assert!((r.rate - 0.230769230769).abs() < 1e-9);
    }

    #[test]
    fn rate_identity_holds_symbolically() {
        for &(s, gamma, alpha) in &[
            (0.75, 0.0, 1.0),
            (0.6, 0.3, 2.0),
            (0.9, 0.2, 0.5),
            (0.55, 0.0, 0.25),
        ] {
            let r = SpectralParams::new(s, gamma, alpha).unwrap().validate();
            assert!(
                (r.rate - r.rate_from_p).abs() < 1e-14,
                "identity fails at s={s} gamma={gamma} alpha={alpha}"
            );
        }
    }

    #[test]
    fn bad_alpha_rejected() {
        assert!(SpectralParams::new(0.75, 0.0, 0.0).is_err());
        assert!(SpectralParams::new(0.75, 0.0, -1.0).is_err());
        assert!(SpectralParams::new(f64::NAN, 0.0, 1.0).is_err());
    }
}

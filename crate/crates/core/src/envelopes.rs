//! Deterministic threshold envelopes used by the confidence ball and the
//! model-switching test.
//!
//! All logarithms are natural. The log terms that depend only on the run
//! configuration are computed once in [`EnvelopeParams::new`], so every
//! envelope evaluation is O(1).

use crate::error::{Error, Result};

/// Run-level constants feeding the envelopes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeParams {
    delta_prime: f64,
    sigma: f64,
    arms: usize,
    dim: usize,
    horizon: usize,
    rho_min: f64,
    rho_max: f64,
    // ln(2 d n / delta')
    log_dim: f64,
    // ln(2 K n / delta')
    log_arms: f64,
    // ln(1 / delta')
    log_inv_delta: f64,
}

impl EnvelopeParams {
    pub fn new(
        delta_prime: f64,
        sigma: f64,
        arms: usize,
        dim: usize,
        horizon: usize,
        rho_min: f64,
        rho_max: f64,
    ) -> Result<Self> {
        if !(delta_prime > 0.0 && delta_prime < 1.0) {
            return Err(Error::InvalidParameter {
                name: "delta_prime",
                reason: format!("must lie in (0, 1), got {delta_prime}"),
            });
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "sigma",
                reason: format!("must be positive, got {sigma}"),
            });
        }
        if arms == 0 || dim == 0 || horizon == 0 {
            return Err(Error::InvalidParameter {
                name: "K/d/n",
                reason: "arm count, dimension and horizon must be positive".into(),
            });
        }
        if !(rho_min > 0.0 && rho_max > 0.0 && rho_min.is_finite() && rho_max.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "rho",
                reason: "rho_min and rho_max must be positive".into(),
            });
        }
        Ok(Self::unchecked(
            delta_prime,
            sigma,
            arms,
            dim,
            horizon,
            rho_min,
            rho_max,
        ))
    }

    pub(crate) fn unchecked(
        delta_prime: f64,
        sigma: f64,
        arms: usize,
        dim: usize,
        horizon: usize,
        rho_min: f64,
        rho_max: f64,
    ) -> Self {
        let (k, d, n) = (arms as f64, dim as f64, horizon as f64);
        Self {
            delta_prime,
            sigma,
            arms,
            dim,
            horizon,
            rho_min,
            rho_max,
            log_dim: (2.0 * d * n / delta_prime).ln(),
            log_arms: (2.0 * k * n / delta_prime).ln(),
            log_inv_delta: (1.0 / delta_prime).ln(),
        }
    }

    pub fn delta_prime(&self) -> f64 {
        self.delta_prime
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn rho_min(&self) -> f64 {
        self.rho_min
    }

    pub fn rho_max(&self) -> f64 {
        self.rho_max
    }
}

/// Burn-in length after which the design matrix is well conditioned.
pub fn tau_min(p: &EnvelopeParams) -> f64 {
    let r = p.rho_min;
    (16.0 / (r * r) + 8.0 / (3.0 * r)) * p.log_dim
}

/// Deviation envelope for the bias-corrected regression targets.
pub fn upsilon(p: &EnvelopeParams, t: usize) -> f64 {
    let l = p.log_dim;
    let scale = 10.0 / 3.0 * (2.0 + p.sigma * (1.0 + 2.0 * p.log_arms).sqrt());
    scale * (l + (t as f64 * l + l * l).sqrt())
}

/// Self-normalized radius term (with the unit parameter bound added).
pub fn m_one(p: &EnvelopeParams, t: usize) -> f64 {
    let d = p.dim as f64;
    let inner = d / 2.0 * (1.0 + t as f64 / d).ln() + p.log_inv_delta;
    (2.0 * p.sigma * p.sigma * inner).sqrt() + 1.0
}

/// Euclidean confidence radius around the ridge estimate at the end of round `t`.
///
/// Piecewise: before `K + tau_min` rounds the two terms add unscaled; after
/// that they shrink with the guaranteed eigenvalue growth `1 + rho_min (t-K)/2`.
pub fn kappa_envelope(p: &EnvelopeParams, t: usize) -> Result<f64> {
    if t <= p.arms {
        return Err(Error::RoundBeforeWarmup { round: t, arms: p.arms });
    }
    Ok(kappa_unchecked(p, t))
}

/// Same formula as [`kappa_envelope`], also evaluated at `t = K` (no regression
/// rows yet), where the first branch applies.
pub(crate) fn kappa_unchecked(p: &EnvelopeParams, t: usize) -> f64 {
    let after = t.saturating_sub(p.arms) as f64;
    if after <= tau_min(p) {
        m_one(p, t) + upsilon(p, t)
    } else {
        let growth = 1.0 + p.rho_min * after / 2.0;
        m_one(p, t) / growth.sqrt() + upsilon(p, t) / growth
    }
}

/// Cumulative optimism envelope from the per-round radii `kappa_series`.
///
/// `kappa_series` must hold the radii for rounds `K+1..=t` (length `t - K`).
pub fn q_envelope(p: &EnvelopeParams, t: usize, kappa_series: &[f64]) -> Result<f64> {
    let expected = t.saturating_sub(p.arms);
    if kappa_series.len() != expected || t < p.arms {
        return Err(Error::LengthMismatch {
            expected,
            actual: kappa_series.len(),
        });
    }
    let sum: f64 = kappa_series.iter().sum();
    let sum_sq: f64 = kappa_series.iter().map(|k| k * k).sum();
    Ok(q_from_sums(p, sum, sum_sq))
}

fn q_from_sums(p: &EnvelopeParams, sum: f64, sum_sq: f64) -> f64 {
    let lead = 16.0 * ((p.arms as f64).ln() * p.rho_max).sqrt();
    lead * ((sum_sq * p.log_inv_delta).sqrt() + sum) + 3.0 * p.log_inv_delta
}

/// Switching threshold at round `t` given the matching `q_envelope` value.
pub fn w_envelope(p: &EnvelopeParams, t: usize, q_value: f64) -> f64 {
    let tf = t as f64;
    let k = p.arms as f64;
    let noise = p.sigma * ((1.0 + tf) / 2.0 * p.log_inv_delta).sqrt();
    let arm_log = (k * tf.sqrt() / p.delta_prime).ln();
    let arms_term = (2.0 * p.sigma + 3.0) * (1.0 + 2.0 * arm_log).sqrt() * (k * tf).sqrt();
    2.0 * q_value + noise + arms_term
}

/// Running sums of the radii used by one run, so `Q` and `W` cost O(1) per round.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KappaAccumulator {
    sum: f64,
    sum_sq: f64,
    len: usize,
}

impl KappaAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, kappa: f64) {
        self.sum += kappa;
        self.sum_sq += kappa * kappa;
        self.len += 1;
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `Q` at the round covered by the radii pushed so far (`t = K + len`).
    pub fn q(&self, p: &EnvelopeParams) -> f64 {
        q_from_sums(p, self.sum, self.sum_sq)
    }

    /// `W` at `t = K + len`.
    pub fn w(&self, p: &EnvelopeParams) -> f64 {
        w_envelope(p, p.arms + self.len, self.q(p))
    }
}

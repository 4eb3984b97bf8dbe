//! Complete system description consumed by the closed forms and the simulator.

use crate::channel::{BackhaulModel, InterferenceProfile, NomaPair};
use crate::error::{Error, Result};

/// γ = 2^R − 1.
pub fn rate_to_threshold(rate_bits: f64) -> f64 {
    rate_bits.exp2() - 1.0
}

/// R = log₂(1 + γ).
pub fn threshold_to_rate(gamma: f64) -> f64 {
    gamma.ln_1p() / std::f64::consts::LN_2
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma_sum: f64,
}

impl Thresholds {
    pub fn new(gamma1: f64, gamma2: f64, gamma_sum: f64) -> Result<Self> {
        for (key, v) in [("gamma1", gamma1), ("gamma2", gamma2), ("gamma_sum", gamma_sum)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::validation(key, "threshold must be finite and ≥ 0"));
            }
        }
        Ok(Self {
            gamma1,
            gamma2,
            gamma_sum,
        })
    }

    pub fn from_rates(r1: f64, r2: f64, r_sum: f64) -> Result<Self> {
        Self::new(rate_to_threshold(r1), rate_to_threshold(r2), rate_to_threshold(r_sum))
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub pair: NomaPair,
    /// σ²_R in watts.
    pub relay_noise: f64,
    pub backhaul: BackhaulModel,
    pub interference: InterferenceProfile,
    pub thresholds: Thresholds,
}

impl ScenarioConfig {
    pub fn new(
        pair: NomaPair,
        relay_noise: f64,
        backhaul: BackhaulModel,
        interference: InterferenceProfile,
        thresholds: Thresholds,
    ) -> Result<Self> {
        if !(relay_noise >= 0.0) || !relay_noise.is_finite() {
            return Err(Error::validation("relay_noise_w", "must be finite and ≥ 0"));
        }
        Ok(Self {
            pair,
            relay_noise,
            backhaul,
            interference,
            thresholds,
        })
    }

    pub fn with_tx_power(&self, tx_power_w: f64) -> Result<Self> {
        let pair = NomaPair::new(self.pair.l1, self.pair.l2, tx_power_w, self.pair.backoff_db)?;
        Ok(Self { pair, ..self.clone() })
    }

    pub fn with_backoff(&self, backoff_db: f64) -> Result<Self> {
        let pair = NomaPair::new(self.pair.l1, self.pair.l2, self.pair.tx_power_w, backoff_db)?;
        Ok(Self { pair, ..self.clone() })
    }

    pub fn with_thresholds(&self, thresholds: Thresholds) -> Self {
        Self {
            thresholds,
            ..self.clone()
        }
    }

    /// Destination interference terms that actually reach the receiver (RF only).
    pub fn dest_terms(&self) -> &[f64] {
        match self.backhaul {
            BackhaulModel::Rf(_) => self.interference.dest(),
            BackhaulModel::Fso(_) => &[],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_threshold_round_trip() {
        assert_eq!(rate_to_threshold(1.0), 1.0);
        assert_eq!(rate_to_threshold(0.0), 0.0);
        for r in [0.1, 0.85, 2.0, 5.5] {
            assert!((threshold_to_rate(rate_to_threshold(r)) - r).abs() < 1e-14);
        }
    }

    #[test]
    fn thresholds_validate() {
        assert!(Thresholds::new(0.8, 0.4, 1.2).is_ok());
        assert!(Thresholds::new(-0.1, 0.4, 1.2).is_err());
        assert!(Thresholds::new(0.8, f64::NAN, 1.2).is_err());
    }
}

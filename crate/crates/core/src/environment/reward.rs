use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Reward weights. `soc_ref` defaults to the episode's initial SoC when
/// built from a [`RewardConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardSpec {
    /// Scale on power losses (1/W).
    pub alpha: f64,
    /// Scale on the shared global term; 1.0 recovers the raw `−P_loss`.
    pub alpha_global: f64,
    pub soc_ref: f64,
    /// Independence ratio weighting the global term in each agent's reward.
    pub r_ind: f64,
    /// SoC weight applied while below the reference.
    pub beta_high: f64,
    /// Added (negated) to every reward channel when SoC leaves its window.
    pub termination_penalty: f64,
}

impl RewardSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha_global > 0.0) {
            return Err(Error::Config(
                "reward alpha and alpha_global must be > 0".into(),
            ));
        }
        if !(self.soc_ref > 0.0 && self.soc_ref < 1.0) {
            return Err(Error::Config(format!(
                "soc_ref must lie in (0, 1), got {}",
                self.soc_ref
            )));
        }
        if !(0.0..=1.0).contains(&self.r_ind) {
            return Err(Error::Config(format!(
                "r_ind must lie in [0, 1], got {}",
                self.r_ind
            )));
        }
        if !(self.beta_high >= 0.0 && self.termination_penalty >= 0.0) {
            return Err(Error::Config(
                "beta_high and termination_penalty must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Serialized form; `soc_ref: null` means "use the initial SoC".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardConfig {
    pub alpha: f64,
    pub alpha_global: f64,
    pub soc_ref: Option<f64>,
    pub beta_high: f64,
    pub termination_penalty: f64,
}

/// Loss scale at which holding a SoC deficit for half a composite episode
/// costs about as much as replacing the charge through the engine and MG1
/// (≈30 % chain efficiency, 54.3 Ah at 350 V, β = 2):
/// `α ≈ β·243 s / (Q·U·(1/0.3 − 1)) ≈ 3e-6`.
pub const DEFAULT_ALPHA: f64 = 3e-6;

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            alpha_global: DEFAULT_ALPHA,
            soc_ref: None,
            beta_high: 2.0,
            termination_penalty: 10.0,
        }
    }
}

impl RewardConfig {
    pub fn resolve(&self, initial_soc: f64, r_ind: f64) -> Result<RewardSpec> {
        let spec = RewardSpec {
            alpha: self.alpha,
            alpha_global: self.alpha_global,
            soc_ref: self.soc_ref.unwrap_or(initial_soc),
            r_ind,
            beta_high: self.beta_high,
            termination_penalty: self.termination_penalty,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Conditional SoC weight: nothing at or above the reference, `beta_high` below.
pub fn soc_weight(soc: f64, spec: &RewardSpec) -> f64 {
    if soc >= spec.soc_ref {
        0.0
    } else {
        spec.beta_high
    }
}

/// Weighted-sum reward of the single-agent baseline.
pub fn reward_single(p_loss_w: f64, soc: f64, spec: &RewardSpec) -> f64 {
    -spec.alpha * p_loss_w - soc_weight(soc, spec) * (spec.soc_ref - soc).abs()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardComponents {
    pub global: f64,
    /// SoC keeping (agent 1, MG1).
    pub local1: f64,
    /// Engine loss (agent 2, MG2).
    pub local2: f64,
}

pub fn reward_components(
    p_loss_w: f64,
    loss_eng_w: f64,
    soc: f64,
    spec: &RewardSpec,
) -> RewardComponents {
    RewardComponents {
        global: -spec.alpha_global * p_loss_w,
        local1: -soc_weight(soc, spec) * (spec.soc_ref - soc).abs(),
        local2: -spec.alpha * loss_eng_w,
    }
}

/// Blend the shared global reward into each agent's local reward.
pub fn handshake(global: f64, local1: f64, local2: f64, r_ind: f64) -> (f64, f64) {
    (r_ind * global + local1, r_ind * global + local2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(soc_ref: f64) -> RewardSpec {
        let cfg = RewardConfig {
            alpha: 1e-4,
            alpha_global: 1e-4,
            ..RewardConfig::default()
        };
        cfg.resolve(soc_ref, 0.2).unwrap()
    }

    #[test]
    fn default_alpha_balances_charge_replacement() {
        let b = crate::powertrain::BatterySpec::default();
        let stored_j = b.capacity_coulombs() * b.ocv_v;
        let alpha = 2.0 * 243.0 / (stored_j * (1.0 / 0.3 - 1.0));
        assert!((alpha - DEFAULT_ALPHA).abs() / alpha < 0.05, "{alpha}");
    }

    #[test]
    fn conditional_weight() {
        let s = spec(0.28);
        assert_eq!(soc_weight(0.30, &s), 0.0);
        assert_eq!(soc_weight(0.25, &s), 2.0);
        assert_eq!(soc_weight(0.28, &s), 0.0);
    }

    #[test]
    fn single_reward_examples() {
        let s = spec(0.28);
        assert_eq!(reward_single(0.0, 0.28, &s), 0.0);
        assert!((reward_single(20_000.0, 0.30, &s) + 2.0).abs() < 1e-12);
        assert!((reward_single(20_000.0, 0.25, &s) + 2.06).abs() < 1e-12);
    }

    #[test]
    fn component_examples() {
        let s = spec(0.28);
        let c = reward_components(0.0, 0.0, 0.28, &s);
        assert_eq!((c.global, c.local1, c.local2), (0.0, 0.0, 0.0));
        let c = reward_components(22_683.1, 22_557.6, 0.30, &s);
        assert!((c.local2 + 2.25576).abs() < 1e-9);
        let c = reward_components(0.0, 0.0, 0.25, &s);
        assert!((c.local1 + 0.06).abs() < 1e-12);
    }

    #[test]
    fn handshake_examples() {
        assert_eq!(handshake(-7.0, -1.5, -2.5, 0.0), (-1.5, -2.5));
        let (m1, _) = handshake(-10.0, -3.0, -1.0, 0.2);
        assert!((m1 + 5.0).abs() < 1e-12);
        assert_eq!(handshake(0.0, -1.5, -2.5, 0.7), (-1.5, -2.5));
    }

    #[test]
    fn config_validation() {
        assert!(RewardConfig::default().resolve(0.28, 1.2).is_err());
        assert!(RewardConfig::default().resolve(0.0, 0.2).is_err());
        let bad = RewardConfig {
            alpha: 0.0,
            ..RewardConfig::default()
        };
        assert!(bad.resolve(0.28, 0.2).is_err());
    }

    proptest! {
        #[test]
        fn components_are_non_positive(p in 0.0f64..1e5, frac in 0.0f64..=1.0, soc in 0.0f64..=1.0) {
            let s = spec(0.28);
            let c = reward_components(p, p * frac, soc, &s);
            prop_assert!(c.global <= 0.0 && c.local1 <= 0.0 && c.local2 <= 0.0);
        }
    }
}

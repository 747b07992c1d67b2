//! Per-block protocol interventions: a spread ceiling, caps on new supply
//! after a rate jump, and treasury liquidity injection.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::closed_form;
use crate::error::{Error, Result};
use crate::num::{self, Rational};
use crate::pool::{self, MarketParams, PoolState};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupplyCap {
    /// Largest new supply per block, as a fraction of current supply.
    #[serde(with = "num::decimal_string")]
    pub max_fraction: Rational,
    /// Rate increase over the previous block that arms the cap.
    #[serde(with = "num::decimal_string")]
    pub trigger: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolLiquidity {
    #[serde(with = "num::decimal_string")]
    pub treasury: Rational,
    #[serde(default = "enabled_by_default")]
    pub enabled: bool,
}

fn enabled_by_default() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MitigationConfig {
    #[serde(default)]
    pub dynamic_spread: bool,
    #[serde(default)]
    pub supply_cap: Option<SupplyCap>,
    #[serde(default)]
    pub pol: Option<ProtocolLiquidity>,
}

impl MitigationConfig {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(cap) = &self.supply_cap {
            if !cap.max_fraction.is_positive() || cap.max_fraction > num::one() {
                return Err(Error::config("supply_cap.max_fraction must lie in (0, 1]"));
            }
        }
        if let Some(pol) = &self.pol {
            if pol.treasury.is_negative() {
                return Err(Error::config("pol.treasury must be non-negative"));
            }
        }
        Ok(())
    }

    pub fn pol_enabled(&self) -> bool {
        self.pol.as_ref().is_some_and(|p| p.enabled)
    }
}

/// `min(gamma, gamma_safety(S_t, D_prev, U*))`. At or below the safety
/// threshold every attack duration loses money.
pub fn dynamic_spread(state: &PoolState, d_prev: &Rational, params: &MarketParams) -> Rational {
    let threshold = closed_form::gamma_safety(&state.supply, &params.u_target, d_prev);
    num::min(&params.gamma, &num::max(&threshold, &num::zero()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapDecision {
    pub allowed: Rational,
    pub capped: bool,
}

/// Limits a positive supply delta to `max_fraction * S` once the rate has
/// jumped by more than the trigger. Withdrawals always pass.
pub fn supply_cap_check(
    state: &PoolState,
    requested: &Rational,
    last_rate_delta: &Rational,
    cap: &SupplyCap,
) -> CapDecision {
    if last_rate_delta <= &cap.trigger || !requested.is_positive() {
        return CapDecision {
            allowed: requested.clone(),
            capped: false,
        };
    }
    let ceiling = &cap.max_fraction * &state.supply;
    if requested > &ceiling {
        CapDecision {
            allowed: ceiling,
            capped: true,
        }
    } else {
        CapDecision {
            allowed: requested.clone(),
            capped: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Injection {
    pub amount: Rational,
    /// The treasury could not cover the full amount needed.
    pub partial: bool,
}

/// Supply the treasury must add so that `U <= U*`, bounded by the treasury.
pub fn pol_injection(state: &PoolState, params: &MarketParams, treasury: &Rational) -> Result<Injection> {
    if treasury.is_negative() {
        return Err(Error::domain("treasury must be non-negative"));
    }
    let u = pool::utilization(state)?;
    if u <= params.u_target || params.u_target.is_zero() {
        return Ok(Injection {
            amount: num::zero(),
            partial: false,
        });
    }
    let needed = &state.demand / &params.u_target - &state.supply;
    if &needed > treasury {
        Ok(Injection {
            amount: treasury.clone(),
            partial: true,
        })
    } else {
        Ok(Injection {
            amount: needed,
            partial: false,
        })
    }
}

//! Pool state, the linear rate curve and per-block simple-interest accrual.
//!
//! Rates are quoted per block. Interest never compounds: each block charges
//! `r_t * borrowed` to every borrower and credits `r^S_t * supplied` to every
//! supplier, with the remainder going to the protocol reserve.

use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{self, Rational};

/// Aggregate pool state at block `t`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolState {
    pub t: u64,
    #[serde(with = "num::decimal_string")]
    pub supply: Rational,
    #[serde(with = "num::decimal_string")]
    pub demand: Rational,
    /// Rate coefficient `k`; the borrow rate is `k * U`.
    #[serde(with = "num::decimal_string")]
    pub k: Rational,
}

impl PoolState {
    pub fn new(t: u64, supply: Rational, demand: Rational, k: Rational) -> Self {
        PoolState {
            t,
            supply,
            demand,
            k,
        }
    }

    /// Checks `S > 0` and `0 <= D <= S`.
    pub fn validate(&self) -> Result<()> {
        if self.supply <= Rational::zero() {
            return Err(Error::domain(format!(
                "supply must be positive, got {}",
                num::format(&self.supply)
            )));
        }
        if self.demand < Rational::zero() || self.demand > self.supply {
            return Err(Error::domain(format!(
                "demand {} outside [0, supply={}]",
                num::format(&self.demand),
                num::format(&self.supply)
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    #[serde(alias = "P")]
    P,
    #[serde(alias = "PI")]
    Pi,
}

/// Exponent convention for the integral decay `xi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayMode {
    /// `xi^(t - i)`: the most recent error has weight `xi`, older ones less.
    #[default]
    Age,
    /// `xi^i` with `i` the absolute block index, exactly as the update law is
    /// usually written down. Only useful for formula reproduction.
    Absolute,
}

/// How the integral term enters the coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PiForm {
    /// `k_t = base_t + beta * I_t`, where `base_t` follows the proportional
    /// law and `I_t` is the windowed error sum. The integral contribution is
    /// recomputed each block, not accumulated.
    #[default]
    Windowed,
    /// `k_t = k_{t-1} + alpha * e_t + beta * I_t`: the integral term is added
    /// on top of the previous coefficient every block.
    Accumulating,
}

/// Controller gains, spread, target and clamps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarketParams {
    pub controller: ControllerKind,
    #[serde(with = "num::decimal_string")]
    pub alpha: Rational,
    #[serde(with = "num::decimal_string")]
    pub beta: Rational,
    #[serde(with = "num::decimal_string")]
    pub xi: Rational,
    pub lookback_p: usize,
    #[serde(with = "num::decimal_string")]
    pub gamma: Rational,
    #[serde(with = "num::decimal_string")]
    pub u_target: Rational,
    #[serde(with = "num::decimal_string")]
    pub k_min: Rational,
    #[serde(with = "num::decimal_string")]
    pub k_max: Rational,
    #[serde(default)]
    pub decay: DecayMode,
    #[serde(default)]
    pub pi_form: PiForm,
}

impl MarketParams {
    /// Proportional controller with no integral part and the given clamps.
    pub fn proportional(
        alpha: Rational,
        gamma: Rational,
        u_target: Rational,
        k_min: Rational,
        k_max: Rational,
    ) -> Self {
        MarketParams {
            controller: ControllerKind::P,
            alpha,
            beta: num::zero(),
            xi: num::one(),
            lookback_p: 1,
            gamma,
            u_target,
            k_min,
            k_max,
            decay: DecayMode::Age,
            pi_form: PiForm::Windowed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let zero = num::zero();
        let one = num::one();
        check_gamma(&self.gamma)?;
        if self.u_target <= zero || self.u_target >= one {
            return Err(Error::domain("u_target must lie in (0, 1)"));
        }
        if self.xi <= zero || self.xi > one {
            return Err(Error::domain("xi must lie in (0, 1]"));
        }
        if self.lookback_p == 0 {
            return Err(Error::domain("lookback_p must be at least 1"));
        }
        if self.k_min <= zero || self.k_min > self.k_max {
            return Err(Error::domain("clamps must satisfy 0 < k_min <= k_max"));
        }
        Ok(())
    }
}

pub(crate) fn check_gamma(gamma: &Rational) -> Result<()> {
    if *gamma <= num::zero() || *gamma > num::one() {
        return Err(Error::domain(format!(
            "gamma must lie in (0, 1], got {}",
            num::format(gamma)
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccountId {
    Attacker,
    Background,
    Protocol,
}

impl AccountId {
    pub const ALL: [AccountId; 3] = [AccountId::Attacker, AccountId::Background, AccountId::Protocol];
}

impl fmt::Display for AccountId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AccountId::Attacker => "attacker",
            AccountId::Background => "background",
            AccountId::Protocol => "protocol",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountPosition {
    pub account: AccountId,
    #[serde(with = "num::decimal_string")]
    pub supplied: Rational,
    #[serde(with = "num::decimal_string")]
    pub borrowed: Rational,
}

impl AccountPosition {
    pub fn new(account: AccountId, supplied: Rational, borrowed: Rational) -> Self {
        AccountPosition {
            account,
            supplied,
            borrowed,
        }
    }

    pub fn empty(account: AccountId) -> Self {
        Self::new(account, num::zero(), num::zero())
    }

    pub fn is_non_negative(&self) -> bool {
        self.supplied >= num::zero() && self.borrowed >= num::zero()
    }
}

/// Interest paid and earned by one account in one block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountFlow {
    pub account: AccountId,
    #[serde(with = "num::decimal_string")]
    pub paid: Rational,
    #[serde(with = "num::decimal_string")]
    pub earned: Rational,
}

impl AccountFlow {
    /// Earned minus paid.
    pub fn net(&self) -> Rational {
        &self.earned - &self.paid
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub t: u64,
    #[serde(with = "num::decimal_string")]
    pub utilization: Rational,
    #[serde(with = "num::decimal_string")]
    pub k: Rational,
    #[serde(with = "num::decimal_string")]
    pub borrow_rate: Rational,
    #[serde(with = "num::decimal_string")]
    pub supply_rate: Rational,
    pub flows: Vec<AccountFlow>,
    #[serde(with = "num::decimal_string")]
    pub reserve: Rational,
}

impl LedgerEntry {
    pub fn flow(&self, account: AccountId) -> Option<&AccountFlow> {
        self.flows.iter().find(|f| f.account == account)
    }

    pub fn total_paid(&self) -> Rational {
        self.flows.iter().map(|f| &f.paid).sum()
    }

    pub fn total_earned(&self) -> Rational {
        self.flows.iter().map(|f| &f.earned).sum()
    }

    /// Borrower payments equal lender credits plus reserve income.
    pub fn is_conserved(&self) -> bool {
        self.total_paid() == self.total_earned() + &self.reserve
    }
}

/// `U = D / S`.
pub fn utilization(state: &PoolState) -> Result<Rational> {
    if state.supply.is_zero() {
        return Err(Error::domain("utilization undefined for zero supply"));
    }
    Ok(&state.demand / &state.supply)
}

/// `r = k * U`.
pub fn borrow_rate(state: &PoolState) -> Result<Rational> {
    Ok(&state.k * utilization(state)?)
}

/// `r^S = gamma * r * U = gamma * k * U^2`.
pub fn supply_rate(state: &PoolState, gamma: &Rational) -> Result<Rational> {
    check_gamma(gamma)?;
    let u = utilization(state)?;
    Ok(gamma * &state.k * &u * &u)
}

/// Charges one block of interest at the state's current rates.
pub fn accrue(
    state: &PoolState,
    positions: &[AccountPosition],
    gamma: &Rational,
) -> Result<LedgerEntry> {
    let supplied: Rational = positions.iter().map(|p| &p.supplied).sum();
    let borrowed: Rational = positions.iter().map(|p| &p.borrowed).sum();
    if supplied != state.supply || borrowed != state.demand {
        return Err(Error::domain(format!(
            "positions sum to supply={} demand={}, pool has supply={} demand={}",
            num::format(&supplied),
            num::format(&borrowed),
            num::format(&state.supply),
            num::format(&state.demand)
        )));
    }
    let u = utilization(state)?;
    let r = &state.k * &u;
    let r_supply = supply_rate(state, gamma)?;
    let flows: Vec<AccountFlow> = positions
        .iter()
        .map(|p| AccountFlow {
            account: p.account,
            paid: &r * &p.borrowed,
            earned: &r_supply * &p.supplied,
        })
        .collect();
    let reserve = &r * &state.demand - &r_supply * &state.supply;
    Ok(LedgerEntry {
        t: state.t,
        utilization: u,
        k: state.k.clone(),
        borrow_rate: r,
        supply_rate: r_supply,
        flows,
        reserve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{int, parse, ratio};

    fn state(s: i64, d: i64, k: &str) -> PoolState {
        PoolState::new(0, int(s), int(d), parse(k).unwrap())
    }

    #[test]
    fn utilization_examples() {
        assert_eq!(utilization(&state(1000, 400, "1")).unwrap(), ratio(2, 5));
        assert_eq!(utilization(&state(1000, 0, "1")).unwrap(), int(0));
        assert_eq!(utilization(&state(1000, 1000, "1")).unwrap(), int(1));
        assert!(matches!(
            utilization(&state(0, 0, "1")),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn borrow_rate_examples() {
        assert_eq!(borrow_rate(&state(1000, 400, "2.0")).unwrap(), ratio(4, 5));
        assert_eq!(
            borrow_rate(&state(1000, 500, "0.002")).unwrap(),
            parse("0.001").unwrap()
        );
        assert_eq!(borrow_rate(&state(1000, 0, "5")).unwrap(), int(0));
    }

    #[test]
    fn supply_rate_examples() {
        let half = ratio(1, 2);
        assert_eq!(
            supply_rate(&state(1000, 400, "2.0"), &half).unwrap(),
            parse("0.16").unwrap()
        );
        let full = state(1000, 1000, "7.3");
        assert_eq!(
            supply_rate(&full, &int(1)).unwrap(),
            borrow_rate(&full).unwrap()
        );
        assert_eq!(
            supply_rate(&state(1000, 500, "0.002"), &half).unwrap(),
            parse("0.00025").unwrap()
        );
        assert!(supply_rate(&full, &int(0)).is_err());
        assert!(supply_rate(&full, &ratio(3, 2)).is_err());
    }

    #[test]
    fn accrue_pro_rata_credits() {
        // U = 1/2, k = 0.08, gamma = 1/2 gives r = 0.04 and r^S = 0.01.
        let s = state(1000, 500, "0.08");
        let positions = [
            AccountPosition::new(AccountId::Attacker, int(600), int(0)),
            AccountPosition::new(AccountId::Background, int(400), int(500)),
        ];
        let entry = accrue(&s, &positions, &ratio(1, 2)).unwrap();
        assert_eq!(entry.supply_rate, parse("0.01").unwrap());
        assert_eq!(entry.flow(AccountId::Attacker).unwrap().earned, int(6));
        assert_eq!(entry.flow(AccountId::Background).unwrap().earned, int(4));
        assert_eq!(entry.flow(AccountId::Background).unwrap().paid, int(20));
        assert!(entry.is_conserved());
    }

    #[test]
    fn accrue_borrower_payment() {
        // r = 0.04 * 0.5 = 0.02 on a 500 loan.
        let s = state(1000, 500, "0.04");
        let positions = [AccountPosition::new(AccountId::Attacker, int(1000), int(500))];
        let entry = accrue(&s, &positions, &int(1)).unwrap();
        assert_eq!(entry.borrow_rate, parse("0.02").unwrap());
        assert_eq!(entry.flows[0].paid, int(10));
    }

    #[test]
    fn accrue_zero_rate() {
        let s = state(1000, 0, "3");
        let positions = [AccountPosition::new(AccountId::Background, int(1000), int(0))];
        let entry = accrue(&s, &positions, &int(1)).unwrap();
        assert!(entry.flows.iter().all(|f| f.paid.is_zero() && f.earned.is_zero()));
        assert!(entry.reserve.is_zero());
    }

    #[test]
    fn accrue_rejects_inconsistent_positions() {
        let s = state(1000, 500, "1");
        let positions = [AccountPosition::new(AccountId::Background, int(900), int(500))];
        assert!(accrue(&s, &positions, &int(1)).is_err());
    }

    proptest::proptest! {
        #[test]
        fn supply_rate_never_exceeds_borrow_rate(
            s in 1i64..10_000, frac in 0u32..=100, k in 1i64..1000, g in 1i64..=100
        ) {
            let d = s * frac as i64 / 100;
            let st = PoolState::new(0, int(s), int(d), ratio(k, 100));
            let gamma = ratio(g, 100);
            let rs = supply_rate(&st, &gamma).unwrap();
            proptest::prop_assert!(rs <= borrow_rate(&st).unwrap());
        }

        #[test]
        fn accrual_conserves(
            a_s in 0i64..5000, b_s in 1i64..5000, a_d in 0i64..2000, k in 1i64..1000, g in 1i64..=100
        ) {
            let supply = a_s + b_s;
            let a_d = a_d.min(supply);
            let b_d = (supply - a_d) / 2;
            let st = PoolState::new(3, int(supply), int(a_d + b_d), ratio(k, 1000));
            let positions = [
                AccountPosition::new(AccountId::Attacker, int(a_s), int(a_d)),
                AccountPosition::new(AccountId::Background, int(b_s), int(b_d)),
            ];
            let entry = accrue(&st, &positions, &ratio(g, 100)).unwrap();
            proptest::prop_assert!(entry.is_conserved());
        }
    }
}

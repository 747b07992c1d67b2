//! Attacker profit oracle, yield attribution and break-even search.

use std::ops::RangeInclusive;

use num_traits::{Signed, Zero};
use serde::Serialize;

use super::{run, AccountingMode, AttackSpec, BlockRecord, Scenario, Trace};
use crate::closed_form::{self, PAttackInputs, Variant};
use crate::error::{Error, Result};
use crate::num::{self, Rational};
use crate::pool::AccountId;
use crate::schedule::Phase;

/// Exact attacker profit from a trace under one accounting convention.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AttackerPnl {
    pub mode: AccountingMode,
    /// Borrow interest plus action fees.
    #[serde(with = "num::decimal_string")]
    pub cost: Rational,
    #[serde(with = "num::decimal_string")]
    pub fees: Rational,
    #[serde(with = "num::decimal_string")]
    pub revenue: Rational,
    #[serde(with = "num::decimal_string")]
    pub profit: Rational,
}

/// Supply interest credited to the attacker in one block.
pub(crate) fn block_revenue(block: &BlockRecord, mode: AccountingMode) -> Rational {
    match (mode, block.phase) {
        (AccountingMode::PaperFaithful, Some(Phase::Unwind)) => block.supply_rate() * &block.supply,
        _ => block
            .ledger
            .flow(AccountId::Attacker)
            .map(|f| f.earned.clone())
            .unwrap_or_else(num::zero),
    }
}

pub(crate) fn block_cost(block: &BlockRecord) -> Rational {
    let interest = block
        .ledger
        .flow(AccountId::Attacker)
        .map(|f| f.paid.clone())
        .unwrap_or_else(num::zero);
    interest + &block.fee
}

pub fn attacker_pnl(trace: &Trace, mode: AccountingMode) -> AttackerPnl {
    let mut cost = num::zero();
    let mut fees = num::zero();
    let mut revenue = num::zero();
    for block in &trace.blocks {
        cost += block_cost(block);
        fees += &block.fee;
        revenue += block_revenue(block, mode);
    }
    AttackerPnl {
        mode,
        profit: &revenue - &cost,
        cost,
        fees,
        revenue,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AccountYield {
    pub account: AccountId,
    /// Interest credited over the whole trace.
    #[serde(with = "num::decimal_string")]
    pub earned: Rational,
    /// Interest credited over the attack window.
    #[serde(with = "num::decimal_string")]
    pub window_earned: Rational,
    /// Block-summed supply of this account over total supply in the window.
    #[serde(with = "num::decimal_string")]
    pub supply_share: Rational,
    /// Window earnings over all supplier earnings in the window.
    #[serde(with = "num::decimal_string")]
    pub yield_share: Rational,
    #[serde(with = "num::decimal_string")]
    pub counterfactual_earned: Rational,
}

fn in_window(block: &BlockRecord, attacked: bool) -> bool {
    !attacked || block.phase.is_some_and(Phase::is_stationary)
}

/// Per-account earnings and shares. The window is the stationary part of the
/// attack, or the whole trace when there is no attack.
pub fn yield_share(trace: &Trace, counterfactual: &Trace) -> Result<Vec<AccountYield>> {
    if trace.len() != counterfactual.len() {
        return Err(Error::domain("counterfactual trace has a different horizon"));
    }
    let attacked = trace.blocks.iter().any(|b| b.phase.is_some());
    let window: Vec<&BlockRecord> = trace.blocks.iter().filter(|b| in_window(b, attacked)).collect();
    let total_supply: Rational = window.iter().map(|b| &b.supply).sum();
    let total_earned: Rational = window.iter().map(|b| b.ledger.total_earned()).sum();
    let earned_in = |t: &Trace, account| -> Rational {
        t.blocks
            .iter()
            .filter_map(|b| b.ledger.flow(account))
            .map(|f| &f.earned)
            .sum()
    };
    Ok(AccountId::ALL
        .iter()
        .map(|&account| {
            let supplied: Rational = window.iter().map(|b| &b.position(account).supplied).sum();
            let window_earned: Rational = window
                .iter()
                .filter_map(|b| b.ledger.flow(account))
                .map(|f| &f.earned)
                .sum();
            AccountYield {
                account,
                earned: earned_in(trace, account),
                supply_share: share(&supplied, &total_supply),
                yield_share: share(&window_earned, &total_earned),
                window_earned,
                counterfactual_earned: earned_in(counterfactual, account),
            }
        })
        .collect())
}

fn share(part: &Rational, whole: &Rational) -> Rational {
    if whole.is_zero() {
        num::zero()
    } else {
        part / whole
    }
}

/// Smallest P-attack duration in `k_range` with strictly positive oracle
/// profit under the template's accounting mode. Durations whose schedule is
/// infeasible or rejected count as unprofitable.
pub fn break_even_duration(template: &Scenario, k_range: RangeInclusive<u64>) -> Result<Option<u64>> {
    let start_block = template.attack.start_block();
    for k in k_range {
        let scenario = Scenario {
            attack: AttackSpec::P {
                start_block,
                duration_k: k,
            },
            horizon: Some(start_block + k + 2),
            ..template.clone()
        };
        match run(&scenario) {
            Ok(trace) => {
                if attacker_pnl(&trace, template.accounting_mode).profit.is_positive() {
                    return Ok(Some(k));
                }
            }
            Err(Error::InfeasibleSchedule { .. }) | Err(Error::Precondition(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(None)
}

/// Same search on a closed-form profit variant.
pub fn break_even_closed_form(
    inputs: &PAttackInputs,
    k_range: RangeInclusive<u64>,
    variant: Variant,
) -> Result<Option<u64>> {
    for k in k_range {
        let at_k = PAttackInputs { k, ..inputs.clone() };
        if closed_form::profit_p(&at_k, variant)?.profit.is_positive() {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::InitialState;
    use crate::num::{int, parse, ratio};
    use crate::pool::MarketParams;

    fn at_target(mode: AccountingMode, k: u64) -> Scenario {
        let params = MarketParams::proportional(
            int(0),
            int(1),
            ratio(1, 2),
            parse("0.0001").unwrap(),
            int(100),
        );
        let mut sc = Scenario::new(
            InitialState::new(int(1000), int(500), parse("0.002").unwrap()),
            params,
            AttackSpec::P {
                start_block: 0,
                duration_k: k,
            },
        );
        sc.accounting_mode = mode;
        sc
    }

    #[test]
    fn oracle_examples() {
        let trace = run(&at_target(AccountingMode::PaperFaithful, 20)).unwrap();
        let pf = attacker_pnl(&trace, AccountingMode::PaperFaithful);
        assert_eq!(pf.cost, parse("5.75").unwrap());
        assert_eq!(pf.revenue, parse("14.75").unwrap());
        assert_eq!(pf.profit, int(9));
        let pr = attacker_pnl(&trace, AccountingMode::ProRata);
        assert_eq!(pr.revenue, parse("4.75").unwrap());
        assert_eq!(pr.profit, int(-1));

        let mut idle = at_target(AccountingMode::PaperFaithful, 20);
        idle.attack = AttackSpec::None;
        idle.horizon = Some(22);
        let quiet = run(&idle).unwrap();
        assert!(attacker_pnl(&quiet, AccountingMode::PaperFaithful).profit.is_zero());
    }

    #[test]
    fn paper_faithful_profit_is_half_k_minus_one() {
        for k in 1..=12u64 {
            let trace = run(&at_target(AccountingMode::PaperFaithful, k)).unwrap();
            let expected = ratio(k as i64, 2) - int(1);
            assert_eq!(attacker_pnl(&trace, AccountingMode::PaperFaithful).profit, expected);
        }
    }

    #[test]
    fn break_even_examples() {
        let pf = at_target(AccountingMode::PaperFaithful, 1);
        assert_eq!(break_even_duration(&pf, 1..=50).unwrap(), Some(3));
        let pr = at_target(AccountingMode::ProRata, 1);
        assert_eq!(break_even_duration(&pr, 1..=50).unwrap(), None);

        let inputs = PAttackInputs {
            r_star: parse("0.001").unwrap(),
            gamma: ratio(1, 2),
            u_star: ratio(1, 2),
            supply: int(1000),
            d_prev: int(400),
            k: 1,
        };
        assert_eq!(break_even_closed_form(&inputs, 1..=100, Variant::Paper).unwrap(), Some(28));
    }

    #[test]
    fn fee_reduces_profit_per_action() {
        let mut sc = at_target(AccountingMode::PaperFaithful, 4);
        sc.action_fee = parse("0.01").unwrap();
        let trace = run(&sc).unwrap();
        let pnl = attacker_pnl(&trace, AccountingMode::PaperFaithful);
        // Spike and four unwind steps; the close is a no-op when D_prev = D*.
        assert_eq!(pnl.fees, parse("0.05").unwrap());
        assert_eq!(pnl.profit, int(1) - parse("0.05").unwrap());
    }

    #[test]
    fn yield_share_examples() {
        let sc = at_target(AccountingMode::ProRata, 20);
        let trace = run(&sc).unwrap();
        let cf = run(&sc.without_attack().unwrap()).unwrap();
        let ys = yield_share(&trace, &cf).unwrap();
        let att = ys.iter().find(|y| y.account == AccountId::Attacker).unwrap();
        assert_eq!(att.supply_share, ratio(9500, 29500));
        assert_eq!(att.yield_share, att.supply_share);
        assert_eq!(att.window_earned, parse("4.75").unwrap());

        let quiet = run(&sc.without_attack().unwrap()).unwrap();
        for y in yield_share(&quiet, &cf).unwrap() {
            assert_eq!(y.earned, y.counterfactual_earned);
            assert_eq!(y.yield_share, y.supply_share);
        }
    }
}

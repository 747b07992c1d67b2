//! Deterministic per-block scenario runner.
//!
//! Each block runs in a fixed order:
//!
//! 1. attacker schedule deltas,
//! 2. background response to the previous block's rate change,
//! 3. mitigations (dynamic spread, supply cap, protocol liquidity),
//! 4. utilization and controller update,
//! 5. interest accrual at the freshly updated rates.
//!
//! The state before block 0 is the scenario's initial state, taken to be
//! block `-1`. Its rate `k_init * U_init` is the reference for the first
//! rate change, which is zero.

mod pnl;
mod report;
mod sweep;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

pub use pnl::{attacker_pnl, break_even_closed_form, break_even_duration, yield_share, AccountYield, AttackerPnl};
pub use report::{analyze, figure_csv, trace_csv, trace_json, AnalyzeReport, Discrepancy, TRACE_COLUMNS};
pub use sweep::{parse_grid, sweep, sweep_csv, GridAxis, GridSpec, SweepRow};

use crate::closed_form::ElasticityBound;
use crate::controller::RateController;
use crate::error::{Error, Result};
use crate::market::{ElasticityModel, ResponseSampler};
use crate::mitigation::{self, MitigationConfig};
use crate::num::{self, Rational};
use crate::pool::{self, AccountId, AccountPosition, LedgerEntry, MarketParams, PoolState};
use crate::schedule::{self, AttackSchedule, Feasibility, Phase, ScheduleAction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccountingMode {
    /// Credits the attacker with supply interest on the whole pool during
    /// unwind blocks, mirroring how the P-attack revenue is summed.
    #[default]
    PaperFaithful,
    /// Credits only the attacker's own supplied balance.
    ProRata,
}

impl AccountingMode {
    pub const BOTH: [AccountingMode; 2] = [AccountingMode::PaperFaithful, AccountingMode::ProRata];

    pub fn as_str(self) -> &'static str {
        match self {
            AccountingMode::PaperFaithful => "paper_faithful",
            AccountingMode::ProRata => "pro_rata",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitialState {
    #[serde(with = "num::decimal_string")]
    pub supply: Rational,
    #[serde(with = "num::decimal_string")]
    pub demand: Rational,
    #[serde(with = "num::decimal_string")]
    pub k_coeff: Rational,
}

impl InitialState {
    pub fn new(supply: Rational, demand: Rational, k_coeff: Rational) -> Self {
        InitialState {
            supply,
            demand,
            k_coeff,
        }
    }

    pub fn pool_state(&self) -> PoolState {
        PoolState::new(0, self.supply.clone(), self.demand.clone(), self.k_coeff.clone())
    }
}

/// Attack description in a scenario: a builder invocation or explicit actions.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AttackSpec {
    #[default]
    None,
    P {
        #[serde(default)]
        start_block: u64,
        duration_k: u64,
    },
    Pi {
        #[serde(default)]
        start_block: u64,
        stab_p: u64,
        extract_m: u64,
    },
    Custom {
        #[serde(default)]
        start_block: u64,
        actions: Vec<ScheduleAction>,
    },
}

impl AttackSpec {
    pub fn start_block(&self) -> u64 {
        match self {
            AttackSpec::None => 0,
            AttackSpec::P { start_block, .. }
            | AttackSpec::Pi { start_block, .. }
            | AttackSpec::Custom { start_block, .. } => *start_block,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundSpec {
    #[serde(with = "num::decimal_string")]
    pub c: Rational,
    #[serde(with = "num::decimal_string")]
    pub epsilon: Rational,
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub initial: InitialState,
    pub params: MarketParams,
    #[serde(default)]
    pub attack: AttackSpec,
    #[serde(default)]
    pub elasticity: ElasticityModel,
    #[serde(default)]
    pub mitigations: MitigationConfig,
    #[serde(default)]
    pub accounting_mode: AccountingMode,
    /// Number of blocks; defaults to one block past the last attack action.
    #[serde(default)]
    pub horizon: Option<u64>,
    /// Flat cost per non-empty attacker action.
    #[serde(with = "num::decimal_string", default = "num::zero")]
    pub action_fee: Rational,
    #[serde(default)]
    pub bound: Option<BoundSpec>,
}

impl Scenario {
    pub fn new(initial: InitialState, params: MarketParams, attack: AttackSpec) -> Self {
        Scenario {
            initial,
            params,
            attack,
            elasticity: ElasticityModel::inelastic(),
            mitigations: MitigationConfig::none(),
            accounting_mode: AccountingMode::PaperFaithful,
            horizon: None,
            action_fee: num::zero(),
            bound: None,
        }
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let scenario: Scenario = serde_json::from_str(json)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.initial.pool_state().validate()?;
        self.elasticity.validate()?;
        self.mitigations.validate()?;
        if self.action_fee.is_negative() {
            return Err(Error::config("action_fee must be non-negative"));
        }
        if let Some(b) = &self.bound {
            if !b.c.is_positive() || !b.epsilon.is_positive() {
                return Err(Error::config("bound.c and bound.epsilon must be positive"));
            }
        }
        Ok(())
    }

    /// Builds the attack schedule, if any.
    pub fn schedule(&self) -> Result<Option<AttackSchedule>> {
        let initial = self.initial.pool_state();
        Ok(match &self.attack {
            AttackSpec::None => None,
            AttackSpec::P {
                start_block,
                duration_k,
            } => Some(schedule::build_p_attack(
                &initial,
                &self.params,
                *duration_k,
                *start_block,
            )?),
            AttackSpec::Pi {
                start_block,
                stab_p,
                extract_m,
            } => Some(schedule::build_pi_attack(
                &initial,
                &self.params,
                *stab_p,
                *extract_m,
                *start_block,
            )?),
            AttackSpec::Custom {
                start_block,
                actions,
            } => Some(AttackSchedule::custom(
                *start_block,
                &self.params.u_target * &self.initial.supply,
                actions.clone(),
            )?),
        })
    }

    fn resolve_horizon(&self, schedule: Option<&AttackSchedule>) -> Result<u64> {
        let needed = schedule
            .map(|s| s.start_block + s.end_offset() + 1)
            .unwrap_or(1);
        match self.horizon {
            None => Ok(needed),
            Some(h) if h >= needed => Ok(h),
            Some(h) => Err(Error::config(format!(
                "horizon {h} ends before the attack's last action (needs {needed})"
            ))),
        }
    }

    /// Same scenario with the attack removed and the horizon pinned.
    pub fn without_attack(&self) -> Result<Scenario> {
        let schedule = self.schedule()?;
        let horizon = self.resolve_horizon(schedule.as_ref())?;
        Ok(Scenario {
            attack: AttackSpec::None,
            horizon: Some(horizon),
            ..self.clone()
        })
    }

    pub fn elasticity_bound(&self) -> Option<ElasticityBound> {
        self.bound.as_ref().map(|b| ElasticityBound {
            c: b.c.clone(),
            epsilon: b.epsilon.clone(),
            gamma_s: self.elasticity.gamma_s.clone(),
            gamma_d: self.elasticity.gamma_d.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    /// A background withdrawal or repayment exceeded its position.
    BackgroundClip,
    /// A withdrawal or borrow would have pushed demand above supply.
    LiquidityClip,
    /// The supply cap trimmed new deposits.
    SupplyCap,
    /// The dynamic spread lowered the reserve factor.
    SpreadReduced,
    PolInjection { partial: bool },
    /// The attacker's own position went negative (allowed only in
    /// paper-faithful accounting).
    NegativeAttackerPosition,
    /// An attacker withdrawal was limited to what it actually holds.
    AttackerClip,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub t: u64,
    #[serde(flatten)]
    pub kind: EventKind,
    pub detail: String,
}

/// Everything recorded for one block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub t: u64,
    pub offset: Option<u64>,
    pub phase: Option<Phase>,
    #[serde(with = "num::decimal_string")]
    pub supply: Rational,
    #[serde(with = "num::decimal_string")]
    pub demand: Rational,
    #[serde(with = "num::decimal_string")]
    pub supply_delta: Rational,
    #[serde(with = "num::decimal_string")]
    pub demand_delta: Rational,
    /// Reserve factor in force after mitigations.
    #[serde(with = "num::decimal_string")]
    pub gamma: Rational,
    /// Rate change of the previous block, which drove the background.
    #[serde(with = "num::decimal_string")]
    pub rate_change_seen: Rational,
    #[serde(with = "num::decimal_string")]
    pub background_supply_delta: Rational,
    #[serde(with = "num::decimal_string")]
    pub background_demand_delta: Rational,
    pub positions: Vec<AccountPosition>,
    pub ledger: LedgerEntry,
    /// Attacker fees charged this block.
    #[serde(with = "num::decimal_string")]
    pub fee: Rational,
}

impl BlockRecord {
    pub fn position(&self, account: AccountId) -> &AccountPosition {
        self.positions
            .iter()
            .find(|p| p.account == account)
            .expect("every account has a position")
    }

    pub fn utilization(&self) -> &Rational {
        &self.ledger.utilization
    }

    pub fn k(&self) -> &Rational {
        &self.ledger.k
    }

    pub fn borrow_rate(&self) -> &Rational {
        &self.ledger.borrow_rate
    }

    pub fn supply_rate(&self) -> &Rational {
        &self.ledger.supply_rate
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub accounting_mode: AccountingMode,
    pub initial: InitialState,
    pub schedule: Option<AttackSchedule>,
    pub blocks: Vec<BlockRecord>,
    pub events: Vec<Event>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn ledger(&self) -> impl Iterator<Item = &LedgerEntry> {
        self.blocks.iter().map(|b| &b.ledger)
    }
}

struct Deltas {
    supply: Rational,
    demand: Rational,
}

fn index(account: AccountId) -> usize {
    match account {
        AccountId::Attacker => 0,
        AccountId::Background => 1,
        AccountId::Protocol => 2,
    }
}

/// Runs a scenario to completion.
pub fn run(scenario: &Scenario) -> Result<Trace> {
    scenario.validate()?;
    let schedule = scenario.schedule()?;
    let horizon = scenario.resolve_horizon(schedule.as_ref())?;
    let mode = scenario.accounting_mode;
    let params = &scenario.params;

    if mode == AccountingMode::ProRata {
        if let Some(s) = &schedule {
            if let Feasibility::Infeasible {
                offset,
                supplied,
                borrowed,
            } = schedule::feasibility_check(s, &AccountPosition::empty(AccountId::Attacker))
            {
                return Err(Error::InfeasibleSchedule {
                    offset,
                    reason: format!(
                        "attacker position at block {} would be supplied={} borrowed={}",
                        s.start_block + offset,
                        num::format(&supplied),
                        num::format(&borrowed)
                    ),
                });
            }
        }
    }

    let init = &scenario.initial;
    let u_init = &init.demand / &init.supply;
    let mut controller = RateController::new(params, init.k_coeff.clone(), &u_init);
    let mut positions = vec![
        AccountPosition::empty(AccountId::Attacker),
        AccountPosition::new(AccountId::Background, init.supply.clone(), init.demand.clone()),
        AccountPosition::empty(AccountId::Protocol),
    ];
    let mut supply = init.supply.clone();
    let mut demand = init.demand.clone();
    let mut prev_rate = &init.k_coeff * &u_init;
    let mut rate_change = num::zero();
    let mut treasury = scenario
        .mitigations
        .pol
        .as_ref()
        .filter(|p| p.enabled)
        .map(|p| p.treasury.clone())
        .unwrap_or_else(num::zero);
    let mut spread = params.gamma.clone();
    let mut sampler: ResponseSampler = scenario.elasticity.sampler();
    let mut events = Vec::new();
    let mut blocks = Vec::with_capacity(horizon as usize);

    for t in 0..horizon {
        let d_prev = demand.clone();
        let s_before = supply.clone();
        let (offset, action) = match &schedule {
            Some(s) if t >= s.start_block => {
                let off = t - s.start_block;
                (Some(off), s.action_at(off))
            }
            _ => (None, None),
        };
        let phase = action.map(|a| a.phase);
        let mut attacker = Deltas {
            supply: action.map(|a| a.supply_delta.clone()).unwrap_or_else(num::zero),
            demand: action.map(|a| a.demand_delta.clone()).unwrap_or_else(num::zero),
        };
        let fee = match action {
            Some(a) if !(a.supply_delta.is_zero() && a.demand_delta.is_zero()) => {
                scenario.action_fee.clone()
            }
            _ => num::zero(),
        };

        let (bg_s, bg_d) = sampler.respond(&rate_change);
        let mut background = Deltas {
            supply: bg_s.clone(),
            demand: bg_d.clone(),
        };
        {
            let bg = &positions[index(AccountId::Background)];
            let floor_s = -bg.supplied.clone();
            let floor_d = -bg.borrowed.clone();
            if background.supply < floor_s || background.demand < floor_d {
                events.push(Event {
                    t,
                    kind: EventKind::BackgroundClip,
                    detail: format!(
                        "requested supply {} demand {}",
                        num::format(&background.supply),
                        num::format(&background.demand)
                    ),
                });
                background.supply = num::max(&background.supply, &floor_s);
                background.demand = num::max(&background.demand, &floor_d);
            }
        }

        if mode == AccountingMode::ProRata {
            let att = &positions[index(AccountId::Attacker)];
            let floor_s = -att.supplied.clone();
            let floor_d = -att.borrowed.clone();
            if attacker.supply < floor_s || attacker.demand < floor_d {
                events.push(Event {
                    t,
                    kind: EventKind::AttackerClip,
                    detail: format!(
                        "requested supply {} demand {}",
                        num::format(&attacker.supply),
                        num::format(&attacker.demand)
                    ),
                });
                attacker.supply = num::max(&attacker.supply, &floor_s);
                attacker.demand = num::max(&attacker.demand, &floor_d);
            }
        }

        // Mitigation 1: spread ceiling. It is evaluated whenever utilization
        // jumps above target and, once lowered, stays lowered.
        let tentative_supply = &supply + &attacker.supply + &background.supply;
        let tentative_demand = &demand + &attacker.demand + &background.demand;
        if scenario.mitigations.dynamic_spread
            && tentative_supply.is_positive()
            && tentative_demand > &params.u_target * &tentative_supply
        {
            let probe = PoolState::new(t, tentative_supply.clone(), d_prev.clone(), num::zero());
            let g = mitigation::dynamic_spread(&probe, &d_prev, params);
            if g.is_positive() && g < spread {
                events.push(Event {
                    t,
                    kind: EventKind::SpreadReduced,
                    detail: format!("gamma {}", num::format(&g)),
                });
                spread = g;
            }
        }
        let gamma_t = spread.clone();

        // Mitigation 2: cap on new supply, attacker served first.
        if let Some(cap) = &scenario.mitigations.supply_cap {
            let pos_att = num::max(&attacker.supply, &num::zero());
            let pos_bg = num::max(&background.supply, &num::zero());
            let requested = &pos_att + &pos_bg;
            let current = PoolState::new(t, supply.clone(), demand.clone(), num::zero());
            let decision = mitigation::supply_cap_check(&current, &requested, &rate_change, cap);
            if decision.capped {
                let att_allowed = num::min(&pos_att, &decision.allowed);
                let bg_allowed = num::min(&pos_bg, &(&decision.allowed - &att_allowed));
                if pos_att.is_positive() {
                    attacker.supply = att_allowed;
                }
                if pos_bg.is_positive() {
                    background.supply = bg_allowed;
                }
                events.push(Event {
                    t,
                    kind: EventKind::SupplyCap,
                    detail: format!(
                        "requested {} allowed {}",
                        num::format(&requested),
                        num::format(&decision.allowed)
                    ),
                });
            }
        }

        // Liquidity: demand may never exceed supply.
        let mut new_demand = &demand + &attacker.demand + &background.demand;
        let mut new_supply = &supply + &attacker.supply + &background.supply;
        if new_demand > new_supply {
            let mut excess = &new_demand - &new_supply;
            for d in [&mut attacker, &mut background] {
                if d.supply.is_negative() && excess.is_positive() {
                    let give = num::min(&-d.supply.clone(), &excess);
                    d.supply += &give;
                    excess -= &give;
                }
            }
            for d in [&mut background, &mut attacker] {
                if d.demand.is_positive() && excess.is_positive() {
                    let take = num::min(&d.demand, &excess);
                    d.demand -= &take;
                    excess -= &take;
                }
            }
            new_demand = &demand + &attacker.demand + &background.demand;
            new_supply = &supply + &attacker.supply + &background.supply;
            events.push(Event {
                t,
                kind: EventKind::LiquidityClip,
                detail: format!(
                    "supply {} demand {}",
                    num::format(&new_supply),
                    num::format(&new_demand)
                ),
            });
        }
        {
            let att = &mut positions[index(AccountId::Attacker)];
            att.supplied += &attacker.supply;
            att.borrowed += &attacker.demand;
            if !att.is_non_negative() {
                events.push(Event {
                    t,
                    kind: EventKind::NegativeAttackerPosition,
                    detail: format!(
                        "supplied {} borrowed {}",
                        num::format(&att.supplied),
                        num::format(&att.borrowed)
                    ),
                });
            }
            let bg = &mut positions[index(AccountId::Background)];
            bg.supplied += &background.supply;
            bg.borrowed += &background.demand;
        }
        supply = new_supply;
        demand = new_demand;
        if !supply.is_positive() {
            return Err(Error::Invariant {
                block: t,
                reason: format!("pool supply fell to {}", num::format(&supply)),
            });
        }

        // Mitigation 3: protocol-owned liquidity.
        if scenario.mitigations.pol_enabled() {
            let current = PoolState::new(t, supply.clone(), demand.clone(), num::zero());
            let inj = mitigation::pol_injection(&current, params, &treasury)?;
            if inj.amount.is_positive() {
                treasury -= &inj.amount;
                supply += &inj.amount;
                positions[index(AccountId::Protocol)].supplied += &inj.amount;
                events.push(Event {
                    t,
                    kind: EventKind::PolInjection {
                        partial: inj.partial,
                    },
                    detail: format!("injected {}", num::format(&inj.amount)),
                });
            }
        }

        let u = &demand / &supply;
        let k = controller.step(&u);
        let state = PoolState::new(t, supply.clone(), demand.clone(), k);
        let ledger = pool::accrue(&state, &positions, &gamma_t).map_err(|e| Error::Invariant {
            block: t,
            reason: e.to_string(),
        })?;
        if !ledger.is_conserved() {
            return Err(Error::Invariant {
                block: t,
                reason: "interest paid does not match interest credited plus reserve".into(),
            });
        }
        let rate = ledger.borrow_rate.clone();
        blocks.push(BlockRecord {
            t,
            offset,
            phase,
            supply_delta: &supply - &s_before,
            demand_delta: &demand - &d_prev,
            supply: supply.clone(),
            demand: demand.clone(),
            gamma: gamma_t,
            rate_change_seen: rate_change.clone(),
            background_supply_delta: background.supply,
            background_demand_delta: background.demand,
            positions: positions.clone(),
            ledger,
            fee,
        });
        rate_change = &rate - &prev_rate;
        prev_rate = rate;
    }

    Ok(Trace {
        accounting_mode: mode,
        initial: init.clone(),
        schedule,
        blocks,
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{int, parse, ratio};

    fn p_scenario(d_prev: i64, k: u64) -> Scenario {
        let params = MarketParams::proportional(
            int(0),
            ratio(1, 2),
            ratio(1, 2),
            parse("0.0001").unwrap(),
            int(100),
        );
        Scenario::new(
            InitialState::new(int(1000), int(d_prev), parse("0.002").unwrap()),
            params,
            AttackSpec::P {
                start_block: 0,
                duration_k: k,
            },
        )
    }

    #[test]
    fn no_attack_at_target_keeps_coefficient() {
        let mut sc = p_scenario(500, 1);
        sc.attack = AttackSpec::None;
        sc.params.alpha = ratio(1, 5);
        sc.horizon = Some(30);
        let trace = run(&sc).unwrap();
        assert_eq!(trace.len(), 30);
        assert!(trace.blocks.iter().all(|b| b.k() == &parse("0.002").unwrap()));
    }

    #[test]
    fn staircase_shape() {
        let trace = run(&p_scenario(400, 20)).unwrap();
        assert_eq!(trace.len(), 22);
        assert_eq!(trace.blocks[0].utilization(), &int(1));
        for b in &trace.blocks[1..=20] {
            assert_eq!(b.utilization(), &ratio(1, 2));
            assert_eq!(b.demand_delta, int(-30));
        }
        assert_eq!(trace.blocks[1].supply_delta, int(940));
        for b in &trace.blocks[2..=20] {
            assert_eq!(b.supply_delta, int(-60));
        }
        assert!(trace.ledger().all(|e| e.is_conserved()));
    }

    #[test]
    fn pro_rata_rejects_negative_attacker_supply() {
        let mut sc = p_scenario(400, 20);
        sc.accounting_mode = AccountingMode::ProRata;
        match run(&sc) {
            Err(Error::InfeasibleSchedule { offset, .. }) => assert_eq!(offset, 17),
            other => panic!("expected infeasible schedule, got {other:?}"),
        }
        let faithful = run(&p_scenario(400, 20)).unwrap();
        assert!(faithful
            .events
            .iter()
            .any(|e| e.kind == EventKind::NegativeAttackerPosition));
    }

    #[test]
    fn horizon_shorter_than_attack_is_config_error() {
        let mut sc = p_scenario(400, 20);
        sc.horizon = Some(5);
        assert_eq!(run(&sc).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn pol_restores_target_after_spike() {
        let mut sc = p_scenario(500, 20);
        sc.mitigations.pol = Some(mitigation::ProtocolLiquidity {
            treasury: int(10_000),
            enabled: true,
        });
        let trace = run(&sc).unwrap();
        assert_eq!(trace.blocks[0].utilization(), &ratio(1, 2));
        assert!(trace
            .events
            .iter()
            .any(|e| matches!(e.kind, EventKind::PolInjection { partial: false })));
    }

    #[test]
    fn elastic_background_moves_after_rate_change() {
        let mut sc = p_scenario(500, 5);
        sc.elasticity = ElasticityModel::linear(int(1000), int(-1000));
        let trace = run(&sc).unwrap();
        assert!(trace.blocks[0].background_supply_delta.is_zero());
        assert!(trace.blocks[1].background_supply_delta.is_positive());
        assert!(trace.blocks[1].background_demand_delta.is_negative());
        assert!(trace.ledger().all(|e| e.is_conserved()));
    }
}

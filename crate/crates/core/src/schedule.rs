//! Attack schedules: per-block attacker deltas relative to the attack start.
//!
//! Builders solve the stationarity condition `U = U*` block by block in exact
//! arithmetic, so every schedule they return keeps utilization pinned at the
//! target for its whole hold/unwind/stabilize/extract window.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{self, Rational};
use crate::pool::{AccountPosition, MarketParams, PoolState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Spike,
    Hold,
    Unwind,
    Stabilize,
    Extract,
    Close,
}

impl Phase {
    /// Phases during which utilization must sit exactly at the target.
    pub fn is_stationary(self) -> bool {
        matches!(
            self,
            Phase::Hold | Phase::Unwind | Phase::Stabilize | Phase::Extract
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Spike => "spike",
            Phase::Hold => "hold",
            Phase::Unwind => "unwind",
            Phase::Stabilize => "stabilize",
            Phase::Extract => "extract",
            Phase::Close => "close",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleAction {
    pub offset: u64,
    #[serde(with = "num::decimal_string")]
    pub demand_delta: Rational,
    #[serde(with = "num::decimal_string")]
    pub supply_delta: Rational,
    pub phase: Phase,
}

impl ScheduleAction {
    pub fn new(offset: u64, demand_delta: Rational, supply_delta: Rational, phase: Phase) -> Self {
        ScheduleAction {
            offset,
            demand_delta,
            supply_delta,
            phase,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum AttackShape {
    P { duration_k: u64 },
    Pi { stab_p: u64, extract_m: u64 },
    Custom,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackSchedule {
    pub start_block: u64,
    pub shape: AttackShape,
    /// Target demand `D* = U* * S_s`.
    #[serde(with = "num::decimal_string")]
    pub d_target: Rational,
    pub actions: Vec<ScheduleAction>,
}

impl AttackSchedule {
    /// Wraps hand-written actions, checking they are sorted with unique offsets.
    pub fn custom(
        start_block: u64,
        d_target: Rational,
        actions: Vec<ScheduleAction>,
    ) -> Result<Self> {
        for pair in actions.windows(2) {
            if pair[0].offset >= pair[1].offset {
                return Err(Error::config(format!(
                    "schedule offsets must be strictly increasing ({} then {})",
                    pair[0].offset, pair[1].offset
                )));
            }
        }
        Ok(AttackSchedule {
            start_block,
            shape: AttackShape::Custom,
            d_target,
            actions,
        })
    }

    pub fn empty(start_block: u64) -> Self {
        AttackSchedule {
            start_block,
            shape: AttackShape::Custom,
            d_target: num::zero(),
            actions: Vec::new(),
        }
    }

    /// Offset of the final action (0 for an empty schedule).
    pub fn end_offset(&self) -> u64 {
        self.actions.last().map(|a| a.offset).unwrap_or(0)
    }

    pub fn action_at(&self, offset: u64) -> Option<&ScheduleAction> {
        self.actions
            .binary_search_by_key(&offset, |a| a.offset)
            .ok()
            .map(|i| &self.actions[i])
    }

    /// Attacker net (supplied, borrowed) after all actions.
    pub fn terminal_position(&self) -> (Rational, Rational) {
        let supplied = self.actions.iter().map(|a| &a.supply_delta).sum();
        let borrowed = self.actions.iter().map(|a| &a.demand_delta).sum();
        (supplied, borrowed)
    }

    /// JSON array of `{offset, demand_delta, supply_delta, phase}`.
    pub fn actions_to_json(&self) -> String {
        serde_json::to_string_pretty(&self.actions).expect("actions serialize")
    }

    pub fn actions_from_json(json: &str) -> Result<Vec<ScheduleAction>> {
        Ok(serde_json::from_str(json)?)
    }
}

fn check_target(params: &MarketParams) -> Result<()> {
    if &params.u_target * num::int(2) > num::one() {
        return Err(Error::precondition(format!(
            "attack needs 2U* <= 1, got U* = {}",
            num::format(&params.u_target)
        )));
    }
    Ok(())
}

/// Proportional-controller attack: spike demand to `2D*` at offset 0, then
/// unwind the spike linearly over `duration_k` blocks while adjusting supply
/// so that `U = U*` at every unwind block, then close at `duration_k + 1`.
pub fn build_p_attack(
    initial: &PoolState,
    params: &MarketParams,
    duration_k: u64,
    start_block: u64,
) -> Result<AttackSchedule> {
    initial.validate()?;
    check_target(params)?;
    if duration_k == 0 {
        return Err(Error::precondition("duration_k must be at least 1"));
    }
    let u_star = &params.u_target;
    let s_spike = initial.supply.clone();
    let d_prev = initial.demand.clone();
    // D_{s-1} = D* is allowed.
    if &d_prev / &s_spike > *u_star {
        return Err(Error::precondition(
            "P attack needs pre-attack utilization at or below the target",
        ));
    }
    // The last unwind block solves S = D_{s-1} / U*, which empties the pool.
    if d_prev.is_zero() {
        return Err(Error::precondition(
            "P attack needs positive pre-attack demand; the final unwind block would leave zero supply",
        ));
    }
    let d_target = u_star * &s_spike;
    let spike = num::int(2) * &d_target - &d_prev;
    let step = &spike / num::int(duration_k as i64);

    let mut actions = vec![ScheduleAction::new(
        0,
        spike.clone(),
        num::zero(),
        Phase::Spike,
    )];
    let mut supply = s_spike.clone();
    let mut demand = &d_prev + &spike;
    for offset in 1..=duration_k {
        demand -= &step;
        let required = &demand / u_star;
        let delta = &required - &supply;
        if offset == 1 && delta.is_negative() {
            return Err(Error::InfeasibleSchedule {
                offset,
                reason: format!(
                    "initial supply injection would be {} < 0 (duration too short)",
                    num::format(&delta)
                ),
            });
        }
        actions.push(ScheduleAction::new(
            offset,
            -step.clone(),
            delta,
            Phase::Unwind,
        ));
        supply = required;
    }
    // The demand spike is fully repaid by now; return supply to its pre-attack level.
    actions.push(ScheduleAction::new(
        duration_k + 1,
        num::zero(),
        &s_spike - &supply,
        Phase::Close,
    ));
    Ok(AttackSchedule {
        start_block,
        shape: AttackShape::P { duration_k },
        d_target,
        actions,
    })
}

/// Proportional-integral attack: spike to `2U*` for one block, double the
/// supply to pin `U*` while the integral window absorbs the spike
/// (`stab_p` blocks), then extract over `extract_m` blocks keeping `U = U*`.
pub fn build_pi_attack(
    initial: &PoolState,
    params: &MarketParams,
    stab_p: u64,
    extract_m: u64,
    start_block: u64,
) -> Result<AttackSchedule> {
    initial.validate()?;
    check_target(params)?;
    if stab_p == 0 || extract_m == 0 {
        return Err(Error::precondition("stab_p and extract_m must be at least 1"));
    }
    let u_star = &params.u_target;
    let s_spike = initial.supply.clone();
    let d_target = u_star * &s_spike;
    if initial.demand != d_target {
        return Err(Error::precondition(format!(
            "PI attack needs pre-attack demand equal to D* = {}, got {}",
            num::format(&d_target),
            num::format(&initial.demand)
        )));
    }

    let mut actions = vec![
        ScheduleAction::new(0, d_target.clone(), num::zero(), Phase::Spike),
        ScheduleAction::new(1, num::zero(), s_spike.clone(), Phase::Stabilize),
    ];
    for offset in 2..=stab_p {
        actions.push(ScheduleAction::new(
            offset,
            num::zero(),
            num::zero(),
            Phase::Hold,
        ));
    }
    let m = num::int(extract_m as i64);
    let demand_step = &d_target / &m;
    let mut supply = num::int(2) * &s_spike;
    let mut demand = num::int(2) * &d_target;
    for j in 1..=extract_m {
        demand -= &demand_step;
        let required = &demand / u_star;
        actions.push(ScheduleAction::new(
            stab_p + j,
            -demand_step.clone(),
            &required - &supply,
            Phase::Extract,
        ));
        supply = required;
    }
    actions.push(ScheduleAction::new(
        stab_p + extract_m + 1,
        num::zero(),
        &s_spike - &supply,
        Phase::Close,
    ));
    Ok(AttackSchedule {
        start_block,
        shape: AttackShape::Pi { stab_p, extract_m },
        d_target,
        actions,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StationarityReport {
    pub ok: bool,
    /// `(offset, U)` after each action is applied.
    pub utilization: Vec<(u64, String)>,
    pub first_deviation: Option<u64>,
}

/// Replays the schedule's deltas on `initial` and checks `U == U*` exactly on
/// every stationary-phase block.
pub fn verify_stationarity(
    schedule: &AttackSchedule,
    initial: &PoolState,
    params: &MarketParams,
) -> StationarityReport {
    let mut supply = initial.supply.clone();
    let mut demand = initial.demand.clone();
    let mut utilization = Vec::with_capacity(schedule.actions.len());
    let mut first_deviation = None;
    for action in &schedule.actions {
        supply += &action.supply_delta;
        demand += &action.demand_delta;
        let u = if supply.is_positive() {
            Some(&demand / &supply)
        } else {
            None
        };
        utilization.push((
            action.offset,
            u.as_ref().map(num::format).unwrap_or_else(|| "undefined".into()),
        ));
        if action.phase.is_stationary()
            && first_deviation.is_none()
            && u.as_ref() != Some(&params.u_target)
        {
            first_deviation = Some(action.offset);
        }
    }
    StationarityReport {
        ok: first_deviation.is_none(),
        utilization,
        first_deviation,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum Feasibility {
    Feasible,
    Infeasible {
        offset: u64,
        #[serde(with = "num::decimal_string")]
        supplied: Rational,
        #[serde(with = "num::decimal_string")]
        borrowed: Rational,
    },
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible)
    }
}

/// Walks the attacker's own position; infeasible at the first offset where
/// it would withdraw supply it never deposited or repay debt it never took.
pub fn feasibility_check(schedule: &AttackSchedule, attacker_initial: &AccountPosition) -> Feasibility {
    let mut supplied = attacker_initial.supplied.clone();
    let mut borrowed = attacker_initial.borrowed.clone();
    for action in &schedule.actions {
        supplied += &action.supply_delta;
        borrowed += &action.demand_delta;
        if supplied.is_negative() || borrowed.is_negative() {
            return Feasibility::Infeasible {
                offset: action.offset,
                supplied,
                borrowed,
            };
        }
    }
    Feasibility::Feasible
}

/// Whether all supply deltas in the unwind phase are identical.
pub fn has_constant_unwind_supply(schedule: &AttackSchedule) -> bool {
    let mut deltas = schedule
        .actions
        .iter()
        .filter(|a| a.phase == Phase::Unwind && a.offset >= 2)
        .map(|a| &a.supply_delta);
    match deltas.next() {
        Some(first) => deltas.all(|d| d == first),
        None => true,
    }
}

/// True when every action has zero deltas.
pub fn is_noop(schedule: &AttackSchedule) -> bool {
    schedule
        .actions
        .iter()
        .all(|a| a.demand_delta.is_zero() && a.supply_delta.is_zero())
}

//! Serialized views of runs: trace CSV/JSON, figure series and the analysis
//! report comparing formula variants.

use std::fmt::Write as _;

use num_traits::{Signed, Zero};
use serde::Serialize;

use super::pnl::{block_cost, block_revenue};
use super::{attacker_pnl, run, AccountingMode, AttackSpec, AttackerPnl, Scenario, Trace};
use crate::closed_form::{
    self, PAttackInputs, PiAttackInputs, PiComponents, ProfitBreakdown, Thresholds, Variant,
};
use crate::controller;
use crate::error::Result;
use crate::num::{self, Rational};
use crate::pool::{AccountId, ControllerKind};

pub const TRACE_COLUMNS: [&str; 13] = [
    "t",
    "S",
    "D",
    "U",
    "k",
    "r",
    "r_supply",
    "attacker_supply",
    "attacker_demand",
    "attacker_cashflow",
    "background_cashflow",
    "reserve_cashflow",
    "cum_attacker_pnl",
];

/// One row per block. Attacker cashflow follows the trace's accounting mode.
pub fn trace_csv(trace: &Trace) -> String {
    let mut out = TRACE_COLUMNS.join(",");
    out.push('\n');
    let mut cum = num::zero();
    for b in &trace.blocks {
        let att = b.position(AccountId::Attacker);
        let cash = block_revenue(b, trace.accounting_mode) - block_cost(b);
        cum += &cash;
        let bg = b
            .ledger
            .flow(AccountId::Background)
            .map(|f| f.net())
            .unwrap_or_else(num::zero);
        let cells = [
            b.t.to_string(),
            num::format(&b.supply),
            num::format(&b.demand),
            num::format(b.utilization()),
            num::format(b.k()),
            num::format(b.borrow_rate()),
            num::format(b.supply_rate()),
            num::format(&att.supplied),
            num::format(&att.borrowed),
            num::format(&cash),
            num::format(&bg),
            num::format(&b.ledger.reserve),
            num::format(&cum),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn trace_json(trace: &Trace) -> String {
    let mut s = serde_json::to_string_pretty(trace).expect("trace serializes");
    s.push('\n');
    s
}

/// Utilization, supply change and demand around the attack, starting with the
/// pre-attack block (offset `-1`).
pub fn figure_csv(trace: &Trace) -> String {
    let mut out = String::from("t,offset,phase,U,delta_S,D,S,k,r\n");
    let start = trace.schedule.as_ref().map(|s| s.start_block).unwrap_or(0);
    let init = &trace.initial;
    let u0 = &init.demand / &init.supply;
    let _ = writeln!(
        out,
        "{},-1,pre,{},0,{},{},{},{}",
        start as i64 - 1,
        num::format(&u0),
        num::format(&init.demand),
        num::format(&init.supply),
        num::format(&init.k_coeff),
        num::format(&(&init.k_coeff * &u0)),
    );
    for b in trace.blocks.iter().filter(|b| b.t >= start) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            b.t,
            b.offset.map(|o| o.to_string()).unwrap_or_default(),
            b.phase.map(|p| p.as_str()).unwrap_or("idle"),
            num::format(b.utilization()),
            num::format(&b.supply_delta),
            num::format(&b.demand),
            num::format(&b.supply),
            num::format(b.k()),
            num::format(b.borrow_rate()),
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Discrepancy {
    pub quantity: String,
    #[serde(with = "num::decimal_string")]
    pub paper: Rational,
    #[serde(with = "num::decimal_string")]
    pub rederived: Rational,
    /// `published - rederived`.
    #[serde(with = "num::decimal_string")]
    pub difference: Rational,
}

impl Discrepancy {
    fn new(quantity: &str, paper: Rational, rederived: Rational) -> Self {
        Discrepancy {
            quantity: quantity.to_string(),
            difference: &paper - &rederived,
            paper,
            rederived,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.difference.is_zero()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PAnalysis {
    pub duration_k: u64,
    #[serde(with = "num::decimal_string")]
    pub r_star: Rational,
    pub paper: ProfitBreakdown,
    pub rederived: ProfitBreakdown,
    #[serde(with = "num::decimal_string")]
    pub hurdle_as_printed: Rational,
    pub break_even_paper: Option<u64>,
    pub break_even_rederived: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PiVariantView {
    #[serde(with = "num::decimal_string")]
    pub supply_revenue: Rational,
    #[serde(with = "num::decimal_string")]
    pub extraction_revenue: Rational,
    #[serde(with = "num::decimal_string")]
    pub stabilization_cost: Rational,
    #[serde(with = "num::decimal_string")]
    pub extraction_cost: Rational,
    #[serde(with = "num::decimal_string")]
    pub profit: Rational,
    #[serde(with = "num::decimal_string")]
    pub extraction_coefficient: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PiAnalysis {
    pub stab_p: u64,
    pub extract_m: u64,
    /// `k_s(2U*), k_{s+1}(U*), ..., k_{s+p}(U*)`.
    pub coefficient_path: Vec<String>,
    pub paper: PiVariantView,
    pub rederived: PiVariantView,
}

/// Largest plateau coefficient at which the elasticity-adjusted bound on
/// expected profit is non-positive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoefficientAdvice {
    #[serde(with = "num::opt_decimal_string")]
    pub max_plateau_coefficient: Option<Rational>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnalyzeReport {
    pub accounting_mode: AccountingMode,
    pub thresholds: Option<Thresholds>,
    pub p_attack: Option<PAnalysis>,
    pub pi_attack: Option<PiAnalysis>,
    pub discrepancies: Vec<Discrepancy>,
    pub oracle: Vec<AttackerPnl>,
    pub oracle_error: Option<String>,
    #[serde(with = "num::opt_decimal_string")]
    pub expected_profit_bound: Option<Rational>,
    pub coefficient_advice: Option<CoefficientAdvice>,
    pub notes: Vec<String>,
}

impl AnalyzeReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn discrepancy(&self, quantity: &str) -> Option<&Discrepancy> {
        self.discrepancies.iter().find(|d| d.quantity == quantity)
    }
}

/// Plateau rate `k_s U*` of a P attack, where `k_s` is the coefficient after
/// the spike block.
pub(crate) fn p_plateau_rate(scenario: &Scenario) -> Rational {
    let p = &scenario.params;
    let k_s = controller::clamp(&(&scenario.initial.k_coeff + &p.alpha * &p.u_target), p);
    k_s * &p.u_target
}

pub(crate) fn p_inputs(scenario: &Scenario, k: u64) -> PAttackInputs {
    PAttackInputs {
        r_star: p_plateau_rate(scenario),
        gamma: scenario.params.gamma.clone(),
        u_star: scenario.params.u_target.clone(),
        supply: scenario.initial.supply.clone(),
        d_prev: scenario.initial.demand.clone(),
        k,
    }
}

pub(crate) fn pi_inputs(scenario: &Scenario, p: u64, m: u64) -> PiAttackInputs {
    let params = &scenario.params;
    PiAttackInputs {
        u_star: params.u_target.clone(),
        supply: scenario.initial.supply.clone(),
        d_prev: scenario.initial.demand.clone(),
        k_prev: scenario.initial.k_coeff.clone(),
        alpha: params.alpha.clone(),
        beta: params.beta.clone(),
        gamma: params.gamma.clone(),
        p,
        m,
    }
}

fn pi_view(inputs: &PiAttackInputs, variant: Variant) -> Result<PiVariantView> {
    let c = PiComponents::evaluate(inputs, variant)?;
    let profit = closed_form::profit_pi(&c)?.profit;
    Ok(PiVariantView {
        supply_revenue: c.supply_revenue.value,
        extraction_revenue: c.extraction_revenue.value,
        stabilization_cost: c.stabilization_cost.value,
        extraction_cost: c.extraction_cost.value,
        profit,
        extraction_coefficient: closed_form::extraction_coefficient(inputs, variant)?,
    })
}

/// Thresholds, both formula variants with their discrepancies, and the
/// engine oracle for the configured attack.
pub fn analyze(scenario: &Scenario) -> Result<AnalyzeReport> {
    scenario.validate()?;
    let params = &scenario.params;
    let init = &scenario.initial;
    let mut notes = Vec::new();
    let mut discrepancies = Vec::new();

    let d_star = &params.u_target * &init.supply;
    let p_compatible = !init.demand.is_negative() && init.demand <= d_star;
    let thresholds = if p_compatible {
        Some(closed_form::thresholds(
            &init.supply,
            &params.u_target,
            &init.demand,
            &params.gamma,
        )?)
    } else {
        notes.push("pre-attack demand exceeds D*; P-attack formulas do not apply".into());
        None
    };

    let mut p_attack = None;
    if let AttackSpec::P { duration_k, .. } = scenario.attack {
        if p_compatible {
            let inputs = p_inputs(scenario, duration_k);
            let paper = closed_form::profit_p(&inputs, Variant::Paper)?;
            let rederived = closed_form::profit_p(&inputs, Variant::Rederived)?;
            let sum = |v| {
                closed_form::supply_sum(&init.supply, &params.u_target, &init.demand, duration_k, v)
            };
            discrepancies.push(Discrepancy::new(
                "supply_sum",
                sum(Variant::Paper),
                sum(Variant::Rederived),
            ));
            discrepancies.push(Discrepancy::new("p_cost", paper.cost.clone(), rederived.cost.clone()));
            discrepancies.push(Discrepancy::new(
                "p_revenue",
                paper.revenue.clone(),
                rederived.revenue.clone(),
            ));
            discrepancies.push(Discrepancy::new(
                "p_hurdle",
                paper.hurdle.clone().unwrap_or_default(),
                rederived.hurdle.clone().unwrap_or_default(),
            ));
            discrepancies.push(Discrepancy::new(
                "p_profit",
                paper.profit.clone(),
                rederived.profit.clone(),
            ));
            let range = 1..=10_000;
            p_attack = Some(PAnalysis {
                duration_k,
                r_star: inputs.r_star.clone(),
                hurdle_as_printed: closed_form::hurdle_as_printed(&inputs),
                break_even_paper: super::break_even_closed_form(&inputs, range.clone(), Variant::Paper)?,
                break_even_rederived: super::break_even_closed_form(&inputs, range, Variant::Rederived)?,
                paper,
                rederived,
            });
        }
    }

    let mut pi_attack = None;
    if let AttackSpec::Pi {
        stab_p, extract_m, ..
    } = scenario.attack
    {
        if params.controller != ControllerKind::Pi {
            notes.push("PI attack configured on a proportional controller".into());
        }
        if params.lookback_p as u64 != stab_p {
            notes.push(format!(
                "closed forms assume lookback p = stab_p; lookback is {}, stab_p is {}",
                params.lookback_p, stab_p
            ));
        }
        let inputs = pi_inputs(scenario, stab_p, extract_m);
        let paper = pi_view(&inputs, Variant::Paper)?;
        let rederived = pi_view(&inputs, Variant::Rederived)?;
        let path = closed_form::pi_coefficient_path(
            &inputs.k_prev,
            &inputs.alpha,
            &inputs.beta,
            &params.xi,
            &inputs.u_star,
            &inputs.u_prev(),
            stab_p,
        )?;
        let k_s = inputs.k_spike();
        let sum = |v| {
            closed_form::coefficient_sum(&k_s, &inputs.beta, &inputs.u_star, &inputs.u_prev(), stab_p, v)
        };
        discrepancies.push(Discrepancy::new(
            "coefficient_sum",
            sum(Variant::Paper),
            sum(Variant::Rederived),
        ));
        let pairs = [
            ("stabilization_cost", &paper.stabilization_cost, &rederived.stabilization_cost),
            ("supply_revenue", &paper.supply_revenue, &rederived.supply_revenue),
            ("extraction_cost", &paper.extraction_cost, &rederived.extraction_cost),
            ("extraction_revenue", &paper.extraction_revenue, &rederived.extraction_revenue),
            (
                "extraction_coefficient",
                &paper.extraction_coefficient,
                &rederived.extraction_coefficient,
            ),
            ("pi_profit", &paper.profit, &rederived.profit),
        ];
        for (name, a, b) in pairs {
            discrepancies.push(Discrepancy::new(name, a.clone(), b.clone()));
        }
        pi_attack = Some(PiAnalysis {
            stab_p,
            extract_m,
            coefficient_path: path.iter().map(num::format).collect(),
            paper,
            rederived,
        });
    }

    let (oracle, oracle_error) = match run(scenario) {
        Ok(trace) => (
            AccountingMode::BOTH
                .iter()
                .map(|&m| attacker_pnl(&trace, m))
                .collect(),
            None,
        ),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };

    let bound = scenario.elasticity_bound();
    let mut expected_profit_bound = None;
    let mut coefficient_advice = None;
    if let (Some(b), Some(p)) = (&bound, &p_attack) {
        expected_profit_bound = Some(closed_form::expected_profit_bound(&p.paper.profit, b, p.duration_k)?);
        let per_rate = &p.paper.profit / &p.r_star;
        let penalty =
            &b.c * num::int(p.duration_k as i64) / &b.epsilon * (&b.gamma_s - &b.gamma_d);
        coefficient_advice = Some(if per_rate.is_positive() {
            CoefficientAdvice {
                max_plateau_coefficient: Some(penalty / (per_rate * &params.u_target)),
                note: "plateau coefficients at or below this value make the expected-profit bound non-positive"
                    .into(),
            }
        } else {
            CoefficientAdvice {
                max_plateau_coefficient: None,
                note: "deterministic profit is already non-positive at any coefficient".into(),
            }
        });
    }

    Ok(AnalyzeReport {
        accounting_mode: scenario.accounting_mode,
        thresholds,
        p_attack,
        pi_attack,
        discrepancies,
        oracle,
        oracle_error,
        expected_profit_bound,
        coefficient_advice,
        notes,
    })
}

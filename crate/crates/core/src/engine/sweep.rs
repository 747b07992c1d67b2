//! Cartesian parameter sweeps over a scenario template.
//!
//! Grid syntax: `axis=values` clauses separated by `;`. Values are a comma
//! list (`0.1,0.2`), an integer range (`1..40`) or a stepped range
//! (`0.1..0.5:0.1`). Points run in parallel and come back in grid order,
//! first axis slowest.

use num_traits::{Signed, ToPrimitive};
use rayon::prelude::*;
use serde::Serialize;

use super::report::{p_inputs, pi_inputs};
use super::{attacker_pnl, run, AccountingMode, AttackSpec, Scenario};
use crate::closed_form::{self, PiComponents, Variant};
use crate::error::{Error, Result};
use crate::market::ResponseKind;
use crate::num::{self, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GridAxis {
    K,
    Gamma,
    UStar,
    GammaS,
    GammaD,
    Beta,
    P,
    M,
    Supply,
    DPrev,
}

impl GridAxis {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name.trim() {
            "k" | "duration_k" => GridAxis::K,
            "gamma" => GridAxis::Gamma,
            "u_star" | "u_target" | "U*" => GridAxis::UStar,
            "gamma_s" => GridAxis::GammaS,
            "gamma_d" => GridAxis::GammaD,
            "beta" => GridAxis::Beta,
            "p" | "stab_p" => GridAxis::P,
            "m" | "extract_m" => GridAxis::M,
            "supply" | "S" => GridAxis::Supply,
            "d_prev" | "demand" => GridAxis::DPrev,
            other => return Err(Error::config(format!("unknown grid axis '{other}'"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            GridAxis::K => "k",
            GridAxis::Gamma => "gamma",
            GridAxis::UStar => "u_star",
            GridAxis::GammaS => "gamma_s",
            GridAxis::GammaD => "gamma_d",
            GridAxis::Beta => "beta",
            GridAxis::P => "p",
            GridAxis::M => "m",
            GridAxis::Supply => "supply",
            GridAxis::DPrev => "d_prev",
        }
    }

    fn is_integer(self) -> bool {
        matches!(self, GridAxis::K | GridAxis::P | GridAxis::M)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSpec {
    pub axes: Vec<(GridAxis, Vec<Rational>)>,
}

impl GridSpec {
    pub fn len(&self) -> usize {
        self.axes.iter().map(|(_, v)| v.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All points, first axis varying slowest.
    pub fn points(&self) -> Vec<Vec<(GridAxis, Rational)>> {
        let mut points = vec![Vec::new()];
        for (axis, values) in &self.axes {
            points = points
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |v| {
                        let mut p = prefix.clone();
                        p.push((*axis, v.clone()));
                        p
                    })
                })
                .collect();
        }
        points
    }
}

const MAX_AXIS_VALUES: usize = 1_000_000;

fn parse_values(axis: GridAxis, text: &str) -> Result<Vec<Rational>> {
    let text = text.trim();
    let values = if let Some((lo, rest)) = text.split_once("..") {
        let (hi, step) = match rest.split_once(':') {
            Some((hi, step)) => (hi, num::parse(step.trim())?),
            None => (rest, num::one()),
        };
        let lo = num::parse(lo.trim())?;
        let hi = num::parse(hi.trim())?;
        if !step.is_positive() {
            return Err(Error::config(format!("step must be positive in '{text}'")));
        }
        let count = ((&hi - &lo) / &step).floor().to_integer().to_usize().unwrap_or(0);
        if count >= MAX_AXIS_VALUES {
            return Err(Error::config(format!("range '{text}' is too large")));
        }
        let mut out = Vec::new();
        let mut v = lo;
        while v <= hi {
            out.push(v.clone());
            v += &step;
        }
        out
    } else {
        text.split(',')
            .map(|s| num::parse(s.trim()).map_err(Error::from))
            .collect::<Result<Vec<_>>>()?
    };
    if values.is_empty() {
        return Err(Error::config(format!("axis {} has no values", axis.name())));
    }
    if axis.is_integer() && values.iter().any(|v| !v.is_integer() || v.is_negative()) {
        return Err(Error::config(format!(
            "axis {} takes non-negative integers",
            axis.name()
        )));
    }
    Ok(values)
}

pub fn parse_grid(spec: &str) -> Result<GridSpec> {
    let mut axes = Vec::new();
    for clause in spec.split(';').map(str::trim).filter(|c| !c.is_empty()) {
        let (name, values) = clause
            .split_once('=')
            .ok_or_else(|| Error::config(format!("grid clause '{clause}' lacks '='")))?;
        let axis = GridAxis::parse(name)?;
        if axes.iter().any(|(a, _)| *a == axis) {
            return Err(Error::config(format!("axis {} given twice", axis.name())));
        }
        axes.push((axis, parse_values(axis, values)?));
    }
    if axes.is_empty() {
        return Err(Error::config("empty grid"));
    }
    Ok(GridSpec { axes })
}

fn as_u64(v: &Rational) -> u64 {
    v.to_integer().to_u64().unwrap_or(0)
}

/// Template with one grid point applied.
pub fn apply_point(template: &Scenario, point: &[(GridAxis, Rational)]) -> Result<Scenario> {
    let mut sc = template.clone();
    for (axis, v) in point {
        match axis {
            GridAxis::K => match &mut sc.attack {
                AttackSpec::P { duration_k, .. } => *duration_k = as_u64(v),
                AttackSpec::None => {
                    sc.attack = AttackSpec::P {
                        start_block: 0,
                        duration_k: as_u64(v),
                    }
                }
                _ => return Err(Error::config("axis k needs a P attack template")),
            },
            GridAxis::P | GridAxis::M => match &mut sc.attack {
                AttackSpec::Pi {
                    stab_p, extract_m, ..
                } => {
                    if *axis == GridAxis::P {
                        *stab_p = as_u64(v);
                        sc.params.lookback_p = as_u64(v) as usize;
                    } else {
                        *extract_m = as_u64(v);
                    }
                }
                _ => return Err(Error::config("axes p and m need a PI attack template")),
            },
            GridAxis::Gamma => sc.params.gamma = v.clone(),
            GridAxis::UStar => sc.params.u_target = v.clone(),
            GridAxis::Beta => sc.params.beta = v.clone(),
            GridAxis::GammaS | GridAxis::GammaD => {
                if *axis == GridAxis::GammaS {
                    sc.elasticity.gamma_s = v.clone();
                } else {
                    sc.elasticity.gamma_d = v.clone();
                }
                if sc.elasticity.kind == ResponseKind::None {
                    sc.elasticity.kind = ResponseKind::Linear;
                }
            }
            GridAxis::Supply => sc.initial.supply = v.clone(),
            GridAxis::DPrev => sc.initial.demand = v.clone(),
        }
    }
    if let Some(h) = sc.horizon {
        if let Ok(Some(s)) = sc.schedule() {
            sc.horizon = Some(h.max(s.start_block + s.end_offset() + 1));
        }
    }
    Ok(sc)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub point: Vec<(GridAxis, String)>,
    pub gamma_min: Option<String>,
    pub k_min_paper: Option<String>,
    pub k_break_even: Option<u64>,
    pub gamma_safety: Option<String>,
    pub closed_paper: Option<String>,
    pub closed_rederived: Option<String>,
    pub oracle_paper_faithful: Option<String>,
    pub oracle_pro_rata: Option<String>,
    pub expected_bound: Option<String>,
    pub errors: Vec<String>,
}

fn oracle(sc: &Scenario, mode: AccountingMode, errors: &mut Vec<String>) -> Option<Rational> {
    let scenario = Scenario {
        accounting_mode: mode,
        ..sc.clone()
    };
    match run(&scenario) {
        Ok(trace) => Some(attacker_pnl(&trace, mode).profit),
        Err(e) => {
            errors.push(format!("{}: {e}", mode.as_str()));
            None
        }
    }
}

fn evaluate(index: usize, template: &Scenario, point: &[(GridAxis, Rational)]) -> SweepRow {
    let mut row = SweepRow {
        index,
        point: point.iter().map(|(a, v)| (*a, num::format(v))).collect(),
        gamma_min: None,
        k_min_paper: None,
        k_break_even: None,
        gamma_safety: None,
        closed_paper: None,
        closed_rederived: None,
        oracle_paper_faithful: None,
        oracle_pro_rata: None,
        expected_bound: None,
        errors: Vec::new(),
    };
    let sc = match apply_point(template, point).and_then(|sc| sc.validate().map(|_| sc)) {
        Ok(sc) => sc,
        Err(e) => {
            row.errors.push(e.to_string());
            return row;
        }
    };
    let init = &sc.initial;
    if let Ok(t) = closed_form::thresholds(&init.supply, &sc.params.u_target, &init.demand, &sc.params.gamma) {
        row.gamma_min = Some(num::format(&t.gamma_min));
        row.k_min_paper = Some(num::format(&t.k_min_paper));
        row.k_break_even = t.k_break_even;
        row.gamma_safety = Some(num::format(&t.gamma_safety));
    }
    match sc.attack {
        AttackSpec::P { duration_k, .. } => {
            let inputs = p_inputs(&sc, duration_k);
            match (
                closed_form::profit_p(&inputs, Variant::Paper),
                closed_form::profit_p(&inputs, Variant::Rederived),
            ) {
                (Ok(p), Ok(r)) => {
                    if let Some(b) = sc.elasticity_bound() {
                        match closed_form::expected_profit_bound(&p.profit, &b, duration_k) {
                            Ok(v) => row.expected_bound = Some(num::format(&v)),
                            Err(e) => row.errors.push(e.to_string()),
                        }
                    }
                    row.closed_paper = Some(num::format(&p.profit));
                    row.closed_rederived = Some(num::format(&r.profit));
                }
                (Err(e), _) | (_, Err(e)) => row.errors.push(e.to_string()),
            }
        }
        AttackSpec::Pi {
            stab_p, extract_m, ..
        } => {
            let inputs = pi_inputs(&sc, stab_p, extract_m);
            for variant in Variant::BOTH {
                let profit = PiComponents::evaluate(&inputs, variant)
                    .and_then(|c| closed_form::profit_pi(&c))
                    .map(|b| num::format(&b.profit));
                match (variant, profit) {
                    (Variant::Paper, Ok(v)) => row.closed_paper = Some(v),
                    (Variant::Rederived, Ok(v)) => row.closed_rederived = Some(v),
                    (_, Err(e)) => row.errors.push(e.to_string()),
                }
            }
        }
        _ => {}
    }
    let mut errors = Vec::new();
    row.oracle_paper_faithful =
        oracle(&sc, AccountingMode::PaperFaithful, &mut errors).map(|v| num::format(&v));
    row.oracle_pro_rata = oracle(&sc, AccountingMode::ProRata, &mut errors).map(|v| num::format(&v));
    row.errors.extend(errors);
    row
}

/// One row per grid point, in grid order regardless of scheduling.
pub fn sweep(template: &Scenario, grid: &GridSpec) -> Vec<SweepRow> {
    grid.points()
        .par_iter()
        .enumerate()
        .map(|(i, point)| evaluate(i, template, point))
        .collect()
}

fn csv_cell(value: &Option<String>) -> String {
    value.clone().unwrap_or_default()
}

pub fn sweep_csv(grid: &GridSpec, rows: &[SweepRow]) -> String {
    let mut header: Vec<String> = vec!["index".into()];
    header.extend(grid.axes.iter().map(|(a, _)| a.name().to_string()));
    header.extend(
        [
            "gamma_min",
            "k_min_paper",
            "k_break_even",
            "gamma_safety",
            "closed_paper",
            "closed_rederived",
            "oracle_paper_faithful",
            "oracle_pro_rata",
            "expected_bound",
            "errors",
        ]
        .map(String::from),
    );
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let mut cells = vec![row.index.to_string()];
        cells.extend(row.point.iter().map(|(_, v)| v.clone()));
        cells.push(csv_cell(&row.gamma_min));
        cells.push(csv_cell(&row.k_min_paper));
        cells.push(row.k_break_even.map(|k| k.to_string()).unwrap_or_default());
        cells.push(csv_cell(&row.gamma_safety));
        cells.push(csv_cell(&row.closed_paper));
        cells.push(csv_cell(&row.closed_rederived));
        cells.push(csv_cell(&row.oracle_paper_faithful));
        cells.push(csv_cell(&row.oracle_pro_rata));
        cells.push(csv_cell(&row.expected_bound));
        let errs = row.errors.join(" | ").replace(['"', ','], ";");
        cells.push(if errs.is_empty() { errs } else { format!("\"{errs}\"") });
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::InitialState;
    use crate::num::{int, parse, ratio};
    use crate::pool::MarketParams;
    use num_traits::Zero;

    fn worked() -> Scenario {
        let params = MarketParams::proportional(
            int(0),
            ratio(1, 2),
            ratio(1, 2),
            parse("0.0001").unwrap(),
            int(100),
        );
        Scenario::new(
            InitialState::new(int(1000), int(400), parse("0.002").unwrap()),
            params,
            AttackSpec::P {
                start_block: 0,
                duration_k: 20,
            },
        )
    }

    #[test]
    fn parses_grids() {
        let g = parse_grid("k=1..3; gamma=0.1,0.2").unwrap();
        assert_eq!(g.len(), 6);
        let pts = g.points();
        assert_eq!(pts[0][0].1, int(1));
        assert_eq!(pts[1][1].1, ratio(1, 5));
        assert_eq!(pts[2][0].1, int(2));
        let stepped = parse_grid("u_star=0.1..0.5:0.1").unwrap();
        assert_eq!(stepped.axes[0].1.len(), 5);
        assert!(parse_grid("k=0.5").is_err());
        assert!(parse_grid("zeta=1").is_err());
        assert!(parse_grid("k").is_err());
        assert!(parse_grid("").is_err());
    }

    #[test]
    fn single_point_matches_single_run() {
        let g = parse_grid("k=20").unwrap();
        let rows = sweep(&worked(), &g);
        let trace = run(&worked()).unwrap();
        let direct = attacker_pnl(&trace, AccountingMode::PaperFaithful).profit;
        assert_eq!(rows[0].oracle_paper_faithful, Some(num::format(&direct)));
    }

    #[test]
    fn k_grid_crosses_zero_between_27_and_28() {
        let g = parse_grid("k=1..40").unwrap();
        let rows = sweep(&worked(), &g);
        let profit = |k: usize| parse(rows[k - 1].closed_paper.as_ref().unwrap()).unwrap();
        assert!(profit(27).is_zero());
        assert!(profit(28).is_positive());
        assert!(profit(26).is_negative());
    }

    #[test]
    fn gamma_grid_flips_sign_around_gamma_min() {
        // gamma_min = 3/7 for D_prev = 400; long duration makes the sign
        // follow the duration coefficient.
        let g = parse_grid("k=10000;gamma=0.42,0.43").unwrap();
        let rows = sweep(&worked(), &g);
        let p0 = parse(rows[0].closed_paper.as_ref().unwrap()).unwrap();
        let p1 = parse(rows[1].closed_paper.as_ref().unwrap()).unwrap();
        assert!(p0.is_negative());
        assert!(p1.is_positive());
    }
}

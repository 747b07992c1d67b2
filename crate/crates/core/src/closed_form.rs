//! Closed-form cost, revenue and profit of the P and PI attacks.
//!
//! Every formula comes in two variants:
//!
//! * [`Variant::Paper`] evaluates the published expression verbatim, including
//!   its slips, so it can be regression-tested and compared.
//! * [`Variant::Rederived`] is re-derived from the per-block accounting the
//!   engine performs; on built schedules with zero elasticity it agrees with
//!   the engine oracle exactly.
//!
//! Conventions: `r_star` is the plateau borrow rate `k_s * U*`, where `k_s` is
//! the coefficient after the spike block. The rederived cost charges the spike
//! block itself at `k_s * 2U* = 2 r_star`.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{self, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Paper,
    Rederived,
}

impl Variant {
    pub const BOTH: [Variant; 2] = [Variant::Paper, Variant::Rederived];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfitBreakdown {
    #[serde(with = "num::decimal_string")]
    pub cost: Rational,
    #[serde(with = "num::decimal_string")]
    pub revenue: Rational,
    #[serde(with = "num::decimal_string")]
    pub profit: Rational,
    /// Coefficient of `k` in `profit / r_star` (P attack only).
    #[serde(with = "num::opt_decimal_string", default)]
    pub duration_coefficient: Option<Rational>,
    /// Constant term subtracted in `profit / r_star` (P attack only).
    #[serde(with = "num::opt_decimal_string", default)]
    pub hurdle: Option<Rational>,
    pub variant: Variant,
}

impl ProfitBreakdown {
    pub fn from_parts(cost: Rational, revenue: Rational, variant: Variant) -> Self {
        ProfitBreakdown {
            profit: &revenue - &cost,
            cost,
            revenue,
            duration_coefficient: None,
            hurdle: None,
            variant,
        }
    }
}

/// Inputs shared by the P-attack formulas.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PAttackInputs {
    pub r_star: Rational,
    pub gamma: Rational,
    pub u_star: Rational,
    /// Pool supply at the spike block, `S_s`.
    pub supply: Rational,
    /// Pre-attack demand `D_{s-1}`.
    pub d_prev: Rational,
    pub k: u64,
}

impl PAttackInputs {
    pub fn d_star(&self) -> Rational {
        &self.u_star * &self.supply
    }

    fn check(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::precondition("duration k must be at least 1"));
        }
        check_demands(&self.d_star(), &self.d_prev)
    }
}

fn check_demands(d_star: &Rational, d_prev: &Rational) -> Result<()> {
    if d_prev.is_negative() || d_prev > d_star {
        return Err(Error::precondition(format!(
            "need 0 <= D_prev <= D*, got D_prev = {}, D* = {}",
            num::format(d_prev),
            num::format(d_star)
        )));
    }
    Ok(())
}

fn int_u(k: u64) -> Rational {
    Rational::from_integer(BigInt::from(k))
}

/// Attacker borrow cost over the spike and `k` unwind blocks.
///
/// Published: `r (2D* - D_prev) (k + 1) / 2`, which prices the spike block at the
/// plateau rate. Rederived: `r (2D* - D_prev) (k + 3) / 2`, pricing it at `2r`.
pub fn cost_p(
    r_star: &Rational,
    d_star: &Rational,
    d_prev: &Rational,
    k: u64,
    variant: Variant,
) -> Result<Rational> {
    if k == 0 {
        return Err(Error::precondition("duration k must be at least 1"));
    }
    check_demands(d_star, d_prev)?;
    let spike = num::int(2) * d_star - d_prev;
    let blocks = match variant {
        Variant::Paper => int_u(k) + num::one(),
        Variant::Rederived => int_u(k) + num::int(3),
    };
    Ok(r_star * spike * blocks / num::int(2))
}

/// `sum_{i=1..k} S_{s+i}`.
///
/// Published: `(k - 3)(S_s + D_prev / (2U*))`. Rederived from the stationary
/// supply path `S_{s+i} = 2 S_s (1 - i/k) + (i/k) D_prev / U*`:
/// `(k - 1) S_s + (k + 1) D_prev / (2U*)`.
pub fn supply_sum(
    supply: &Rational,
    u_star: &Rational,
    d_prev: &Rational,
    k: u64,
    variant: Variant,
) -> Rational {
    let k = int_u(k);
    let half_base = d_prev / (num::int(2) * u_star);
    match variant {
        Variant::Paper => (&k - num::int(3)) * (supply + half_base),
        Variant::Rederived => (&k - num::one()) * supply + (&k + num::one()) * half_base,
    }
}

/// Closed-form pool supply `i` blocks after the spike.
///
/// the published expression is shifted by one block (`(i + 1)/k`) relative to
/// its own recursion; the rederived form uses `i/k`.
pub fn supply_at(
    supply: &Rational,
    u_star: &Rational,
    d_prev: &Rational,
    k: u64,
    i: u64,
    variant: Variant,
) -> Rational {
    let step = match variant {
        Variant::Paper => i + 1,
        Variant::Rederived => i,
    };
    let frac = int_u(step) / int_u(k);
    num::int(2) * supply * (num::one() - &frac) + frac * d_prev / u_star
}

/// Attacker supply revenue over the `k` unwind blocks, credited on total pool
/// supply: `gamma * r * U* * sum S_{s+i}`.
pub fn revenue_p(inputs: &PAttackInputs, variant: Variant) -> Result<Rational> {
    inputs.check()?;
    crate::pool::check_gamma(&inputs.gamma)?;
    let sum = supply_sum(
        &inputs.supply,
        &inputs.u_star,
        &inputs.d_prev,
        inputs.k,
        variant,
    );
    Ok(&inputs.gamma * &inputs.r_star * &inputs.u_star * sum)
}

/// `(duration coefficient, hurdle)` with `profit = r (k * coeff - hurdle)`.
///
/// Both variants share the duration coefficient
/// `gamma (U* S_s + D_prev/2) - (2D* - D_prev)/2`.
pub fn profit_decomposition(inputs: &PAttackInputs, variant: Variant) -> (Rational, Rational) {
    let two = num::int(2);
    let a = &inputs.u_star * &inputs.supply + &inputs.d_prev / &two;
    let b = (&two * inputs.d_star() - &inputs.d_prev) / &two;
    let coeff = &inputs.gamma * &a - &b;
    let hurdle = match variant {
        Variant::Paper => num::int(3) * &inputs.gamma * &a + &b,
        Variant::Rederived => {
            &inputs.gamma * (&inputs.u_star * &inputs.supply - &inputs.d_prev / &two)
                + num::int(3) * &b
        }
    };
    (coeff, hurdle)
}

/// The hurdle exactly as typeset next to the profit display,
/// `3 (U* S_s + D_prev/2) - (2D* - D_prev)/2`. It omits the `gamma` factor and
/// flips a sign, so it does not reproduce the profit; kept for comparison.
pub fn hurdle_as_printed(inputs: &PAttackInputs) -> Rational {
    let two = num::int(2);
    let a = &inputs.u_star * &inputs.supply + &inputs.d_prev / &two;
    let b = (&two * inputs.d_star() - &inputs.d_prev) / &two;
    num::int(3) * a - b
}

pub fn profit_p(inputs: &PAttackInputs, variant: Variant) -> Result<ProfitBreakdown> {
    let cost = cost_p(
        &inputs.r_star,
        &inputs.d_star(),
        &inputs.d_prev,
        inputs.k,
        variant,
    )?;
    let revenue = revenue_p(inputs, variant)?;
    let (coeff, hurdle) = profit_decomposition(inputs, variant);
    Ok(ProfitBreakdown {
        profit: &revenue - &cost,
        cost,
        revenue,
        duration_coefficient: Some(coeff),
        hurdle: Some(hurdle),
        variant,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Thresholds {
    /// Spread above which the duration coefficient is positive.
    #[serde(with = "num::decimal_string")]
    pub gamma_min: Rational,
    /// The published duration condition `k > 3 / gamma`.
    #[serde(with = "num::decimal_string")]
    pub k_min_paper: Rational,
    /// Smallest integer `k >= 1` with strictly positive published-variant profit.
    pub k_break_even: Option<u64>,
    /// Integer `k` at which published-variant profit is exactly zero, if any.
    pub k_zero_profit: Option<u64>,
    /// Same search on the rederived variant.
    pub k_break_even_rederived: Option<u64>,
    /// Spread ceiling below which the attack is unprofitable for every `k`.
    #[serde(with = "num::decimal_string")]
    pub gamma_safety: Rational,
}

/// `(2D* - D_prev) / (2D* + D_prev)`.
pub fn gamma_min(d_star: &Rational, d_prev: &Rational) -> Rational {
    let two = num::int(2);
    (&two * d_star - d_prev) / (&two * d_star + d_prev)
}

/// `(2D* - D_prev) / (2 (S_s + D_prev / U*))`.
pub fn gamma_safety(supply: &Rational, u_star: &Rational, d_prev: &Rational) -> Rational {
    let two = num::int(2);
    let d_star = u_star * supply;
    (&two * d_star - d_prev) / (&two * (supply + d_prev / u_star))
}

/// Solves `k * coeff > hurdle` over positive integers.
fn smallest_profitable_k(coeff: &Rational, hurdle: &Rational) -> (Option<u64>, Option<u64>) {
    if !coeff.is_positive() {
        return (None, None);
    }
    let root = hurdle / coeff;
    let zero = if root.is_integer() && root >= Rational::one() {
        root.to_integer().to_u64()
    } else {
        None
    };
    let above = num::next_integer_above(&root).to_u64().map(|k| k.max(1));
    (above, zero)
}

pub fn thresholds(
    supply: &Rational,
    u_star: &Rational,
    d_prev: &Rational,
    gamma: &Rational,
) -> Result<Thresholds> {
    crate::pool::check_gamma(gamma)?;
    let d_star = u_star * supply;
    check_demands(&d_star, d_prev)?;
    let inputs = PAttackInputs {
        r_star: num::one(),
        gamma: gamma.clone(),
        u_star: u_star.clone(),
        supply: supply.clone(),
        d_prev: d_prev.clone(),
        k: 1,
    };
    let (coeff, hurdle) = profit_decomposition(&inputs, Variant::Paper);
    let (k_break_even, k_zero_profit) = smallest_profitable_k(&coeff, &hurdle);
    let (coeff_r, hurdle_r) = profit_decomposition(&inputs, Variant::Rederived);
    let (k_break_even_rederived, _) = smallest_profitable_k(&coeff_r, &hurdle_r);
    Ok(Thresholds {
        gamma_min: gamma_min(&d_star, d_prev),
        k_min_paper: num::int(3) / gamma,
        k_break_even,
        k_zero_profit,
        k_break_even_rederived,
        gamma_safety: gamma_safety(supply, u_star, d_prev),
    })
}

/// Constants of the elasticity-adjusted expected-profit bound.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElasticityBound {
    #[serde(with = "num::decimal_string")]
    pub c: Rational,
    #[serde(with = "num::decimal_string")]
    pub epsilon: Rational,
    #[serde(with = "num::decimal_string")]
    pub gamma_s: Rational,
    #[serde(with = "num::decimal_string")]
    pub gamma_d: Rational,
}

impl ElasticityBound {
    pub fn validate(&self) -> Result<()> {
        if !self.epsilon.is_positive() {
            return Err(Error::domain("epsilon must be positive"));
        }
        if !self.c.is_positive() {
            return Err(Error::domain("bound constant C must be positive"));
        }
        if self.gamma_s.is_negative() || self.gamma_d.is_positive() {
            return Err(Error::domain(
                "elasticities must satisfy gamma_s >= 0 and gamma_d <= 0",
            ));
        }
        Ok(())
    }
}

/// `profit - (C k / eps)(Gamma^S - Gamma^D)`.
pub fn expected_profit_bound(
    deterministic_profit: &Rational,
    bound: &ElasticityBound,
    k: u64,
) -> Result<Rational> {
    bound.validate()?;
    let penalty = &bound.c * int_u(k) / &bound.epsilon * (&bound.gamma_s - &bound.gamma_d);
    Ok(deterministic_profit - penalty)
}

/// Inputs shared by the PI-attack formulas. Pre-history is flat at
/// `u_prev = D_prev / S_s` and the decay is 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiAttackInputs {
    pub u_star: Rational,
    pub supply: Rational,
    pub d_prev: Rational,
    /// `k_{s-1}`.
    pub k_prev: Rational,
    pub alpha: Rational,
    pub beta: Rational,
    pub gamma: Rational,
    pub p: u64,
    pub m: u64,
}

impl PiAttackInputs {
    pub fn d_star(&self) -> Rational {
        &self.u_star * &self.supply
    }

    pub fn u_prev(&self) -> Rational {
        &self.d_prev / &self.supply
    }

    /// `k_s(2U*) = k_{s-1} + alpha U* + beta p (U_{s-1} - U*)`.
    pub fn k_spike(&self) -> Rational {
        &self.k_prev
            + &self.alpha * &self.u_star
            + &self.beta * int_u(self.p) * (self.u_prev() - &self.u_star)
    }
}

/// `[k_s(2U*), k_{s+1}(U*), ..., k_{s+p}(U*)]` from
/// `k_{s+j} = k_s + beta (U* + (p - j)(U_{s-1} - U*))`.
pub fn pi_coefficient_path(
    k_prev: &Rational,
    alpha: &Rational,
    beta: &Rational,
    xi: &Rational,
    u_star: &Rational,
    u_prev: &Rational,
    p: u64,
) -> Result<Vec<Rational>> {
    if !xi.is_one() {
        return Err(Error::precondition(
            "closed-form coefficient path assumes xi = 1; use the engine for general decay",
        ));
    }
    if p == 0 {
        return Err(Error::precondition("lookback p must be at least 1"));
    }
    let gap = u_prev - u_star;
    let k_s = k_prev + alpha * u_star + beta * int_u(p) * &gap;
    let mut path = Vec::with_capacity(p as usize + 1);
    path.push(k_s.clone());
    for j in 1..=p {
        path.push(&k_s + beta * (u_star + int_u(p - j) * &gap));
    }
    Ok(path)
}

/// `sum_{j=1..p} k_{s+j}`. the published simplification keeps a single `k_s`
/// instead of `p k_s`.
pub fn coefficient_sum(
    k_s: &Rational,
    beta: &Rational,
    u_star: &Rational,
    u_prev: &Rational,
    p: u64,
    variant: Variant,
) -> Rational {
    let pq = int_u(p);
    let integral =
        beta * &pq * (u_star + (&pq - num::one()) / num::int(2) * (u_prev - u_star));
    match variant {
        Variant::Paper => k_s + integral,
        Variant::Rederived => &pq * k_s + integral,
    }
}

/// Borrow cost over the spike block and the `p` stabilization blocks.
pub fn stabilization_cost(inputs: &PiAttackInputs, variant: Variant) -> Result<Rational> {
    check_pi(inputs)?;
    let u = &inputs.u_star;
    let spike = num::int(2) * inputs.d_star() - &inputs.d_prev;
    let k_s = inputs.k_spike();
    let u_prev = inputs.u_prev();
    Ok(match variant {
        Variant::Paper => {
            let pq = int_u(inputs.p);
            u * &spike
                * (num::int(3) * &k_s
                    + &inputs.beta * &pq / num::int(2)
                        * ((&pq - num::one()) * &u_prev - (&pq - num::int(3)) * u))
        }
        Variant::Rederived => {
            let sum = coefficient_sum(&k_s, &inputs.beta, u, &u_prev, inputs.p, variant);
            u * &spike * (num::int(2) * &k_s + sum)
        }
    })
}

/// Borrow cost over the extraction window at a stationary rate `r`.
///
/// Published: `((3m - 1)/2) D* r`, which sums total pool demand. Rederived: the
/// attacker's own debt, `((m - 1)/2) D* r`.
pub fn extraction_cost(d_star: &Rational, r: &Rational, m: u64, variant: Variant) -> Result<Rational> {
    if m == 0 {
        return Err(Error::precondition("extraction length m must be at least 1"));
    }
    let mq = int_u(m);
    let factor = match variant {
        Variant::Paper => (num::int(3) * mq - num::one()) / num::int(2),
        Variant::Rederived => (mq - num::one()) / num::int(2),
    };
    Ok(factor * d_star * r)
}

/// Supply revenue during stabilization.
///
/// Published: `gamma U* (k_s + beta p (U* + (p-1)/2 (U_{s-1} - U*)))`. Rederived:
/// `gamma U*^2 S_s sum_j k_{s+j}` (attacker supply `S_s` at rate `gamma k U*^2`).
pub fn supply_revenue_pi(inputs: &PiAttackInputs, variant: Variant) -> Result<Rational> {
    check_pi(inputs)?;
    let u = &inputs.u_star;
    let k_s = inputs.k_spike();
    let sum = coefficient_sum(&k_s, &inputs.beta, u, &inputs.u_prev(), inputs.p, variant);
    Ok(match variant {
        Variant::Paper => &inputs.gamma * u * sum,
        Variant::Rederived => &inputs.gamma * u * u * &inputs.supply * sum,
    })
}

/// Supply revenue during extraction at stationary rate `r`.
///
/// Published: the P-attack revenue formula for `m` blocks on an explicit supply
/// base. Rederived: the attacker's own supply `(1 - j/m) S_s`, summing to
/// `gamma r U* S_s (m - 1)/2`.
pub fn extraction_revenue(
    inputs: &PiAttackInputs,
    r: &Rational,
    paper_supply_base: &Rational,
    variant: Variant,
) -> Result<Rational> {
    check_pi(inputs)?;
    Ok(match variant {
        Variant::Paper => {
            let sum = supply_sum(
                paper_supply_base,
                &inputs.u_star,
                &inputs.d_prev,
                inputs.m,
                Variant::Paper,
            );
            &inputs.gamma * r * &inputs.u_star * sum
        }
        Variant::Rederived => {
            &inputs.gamma * r * &inputs.u_star * &inputs.supply * (int_u(inputs.m) - num::one())
                / num::int(2)
        }
    })
}

/// Per-block supply change during extraction: published `-S_{s+p}/m = -2 S_s/m`,
/// rederived `-S_s/m`.
pub fn extraction_supply_step(supply: &Rational, m: u64, variant: Variant) -> Rational {
    let base = match variant {
        Variant::Paper => num::int(2) * supply,
        Variant::Rederived => supply.clone(),
    };
    -base / int_u(m)
}

/// Coefficient in force during extraction.
///
/// Published: `k_{s+p} = k_s + beta U*` is held. Rederived (windowed integral):
/// once the spike leaves the lookback window the integral term is zero again
/// and the coefficient falls back to the proportional state `k_s`.
pub fn extraction_coefficient(inputs: &PiAttackInputs, variant: Variant) -> Result<Rational> {
    Ok(match variant {
        Variant::Paper => {
            let path = pi_coefficient_path(
                &inputs.k_prev,
                &inputs.alpha,
                &inputs.beta,
                &num::one(),
                &inputs.u_star,
                &inputs.u_prev(),
                inputs.p,
            )?;
            path.last().cloned().expect("path has p + 1 entries")
        }
        Variant::Rederived => {
            inputs.k_spike() - &inputs.beta * int_u(inputs.p) * (inputs.u_prev() - &inputs.u_star)
        }
    })
}

fn check_pi(inputs: &PiAttackInputs) -> Result<()> {
    if inputs.p == 0 || inputs.m == 0 {
        return Err(Error::precondition("p and m must be at least 1"));
    }
    if inputs.supply <= Rational::zero() {
        return Err(Error::domain("supply must be positive"));
    }
    crate::pool::check_gamma(&inputs.gamma)?;
    check_demands(&inputs.d_star(), &inputs.d_prev)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub variant: Variant,
    pub value: Rational,
}

/// The four PI-attack profit components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiComponents {
    pub supply_revenue: Component,
    pub extraction_revenue: Component,
    pub stabilization_cost: Component,
    pub extraction_cost: Component,
}

impl PiComponents {
    /// Evaluates every component in one variant. The published variant uses
    /// `S_{s+p} = 2 S_s` as the extraction-revenue supply base.
    pub fn evaluate(inputs: &PiAttackInputs, variant: Variant) -> Result<Self> {
        let k_extract = extraction_coefficient(inputs, variant)?;
        let r_extract = &k_extract * &inputs.u_star;
        let base = num::int(2) * &inputs.supply;
        let c = |value| Component { variant, value };
        Ok(PiComponents {
            supply_revenue: c(supply_revenue_pi(inputs, variant)?),
            extraction_revenue: c(extraction_revenue(inputs, &r_extract, &base, variant)?),
            stabilization_cost: c(stabilization_cost(inputs, variant)?),
            extraction_cost: c(extraction_cost(&inputs.d_star(), &r_extract, inputs.m, variant)?),
        })
    }
}

/// `R^supp + R_m - C^stab - C^extract`.
pub fn profit_pi(components: &PiComponents) -> Result<ProfitBreakdown> {
    let variant = components.supply_revenue.variant;
    let all = [
        &components.supply_revenue,
        &components.extraction_revenue,
        &components.stabilization_cost,
        &components.extraction_cost,
    ];
    if all.iter().any(|c| c.variant != variant) {
        return Err(Error::precondition("PI profit components mix variants"));
    }
    let revenue = &components.supply_revenue.value + &components.extraction_revenue.value;
    let cost = &components.stabilization_cost.value + &components.extraction_cost.value;
    Ok(ProfitBreakdown::from_parts(cost, revenue, variant))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{int, parse, ratio};

    fn q(s: &str) -> Rational {
        parse(s).unwrap()
    }

    fn worked(k: u64) -> PAttackInputs {
        PAttackInputs {
            r_star: q("0.001"),
            gamma: ratio(1, 2),
            u_star: ratio(1, 2),
            supply: int(1000),
            d_prev: int(400),
            k,
        }
    }

    fn pi_reference(beta: &str, p: u64, m: u64) -> PiAttackInputs {
        PiAttackInputs {
            u_star: ratio(1, 2),
            supply: int(1000),
            d_prev: int(500),
            k_prev: int(2),
            alpha: q("0.2"),
            beta: q(beta),
            gamma: ratio(1, 2),
            p,
            m,
        }
    }

    #[test]
    fn cost_p_examples() {
        let r = q("0.001");
        assert_eq!(cost_p(&r, &int(500), &int(400), 20, Variant::Paper).unwrap(), q("6.3"));
        assert_eq!(cost_p(&r, &int(500), &int(500), 20, Variant::Paper).unwrap(), q("5.25"));
        assert_eq!(cost_p(&r, &int(500), &int(400), 1, Variant::Paper).unwrap(), q("0.6"));
        // Spike block at 2r: 0.001 * 500 * 23 / 2.
        assert_eq!(cost_p(&r, &int(500), &int(500), 20, Variant::Rederived).unwrap(), q("5.75"));
        assert!(cost_p(&r, &int(500), &int(600), 20, Variant::Paper).is_err());
        assert!(cost_p(&r, &int(500), &int(400), 0, Variant::Paper).is_err());
    }

    #[test]
    fn revenue_p_examples() {
        assert_eq!(revenue_p(&worked(20), Variant::Paper).unwrap(), q("5.95"));
        assert_eq!(revenue_p(&worked(20), Variant::Rederived).unwrap(), q("6.85"));
        assert_eq!(revenue_p(&worked(3), Variant::Paper).unwrap(), int(0));
    }

    /// Brute-force oracle for the rederived supply sum: walk the stationary
    /// supply recursion block by block.
    fn recursion_supply_sum(s: &Rational, u: &Rational, d_prev: &Rational, k: u64) -> Rational {
        let spike = int(2) * u * s - d_prev;
        let mut demand = d_prev + &spike;
        let mut total = int(0);
        for _ in 0..k {
            demand -= &spike / int(k as i64);
            total += &demand / u;
        }
        total
    }

    #[test]
    fn supply_sum_matches_recursion() {
        assert_eq!(supply_sum(&int(1000), &ratio(1, 2), &int(400), 20, Variant::Rederived), int(27400));
        assert_eq!(supply_sum(&int(1000), &ratio(1, 2), &int(400), 20, Variant::Paper), int(23800));
        for k in 1..30 {
            for d in [0, 100, 250, 400, 500] {
                assert_eq!(
                    supply_sum(&int(1000), &ratio(1, 2), &int(d), k, Variant::Rederived),
                    recursion_supply_sum(&int(1000), &ratio(1, 2), &int(d), k)
                );
            }
        }
    }

    #[test]
    fn supply_at_index_shift() {
        let s = int(1000);
        let u = ratio(1, 2);
        let d = int(400);
        assert_eq!(supply_at(&s, &u, &d, 20, 1, Variant::Rederived), int(1940));
        assert_eq!(supply_at(&s, &u, &d, 20, 1, Variant::Paper), int(1880));
        assert_eq!(supply_at(&s, &u, &d, 20, 0, Variant::Paper), int(1940));
    }

    #[test]
    fn profit_p_examples() {
        let at27 = profit_p(&worked(27), Variant::Paper).unwrap();
        assert_eq!(at27.profit, int(0));
        assert_eq!(profit_p(&worked(28), Variant::Paper).unwrap().profit, q("0.05"));

        let no_latent = PAttackInputs {
            gamma: int(1),
            d_prev: int(0),
            k: 10,
            ..worked(10)
        };
        assert_eq!(profit_p(&no_latent, Variant::Paper).unwrap().profit, q("-2.0"));
    }

    #[test]
    fn decomposition_reproduces_profit() {
        for variant in Variant::BOTH {
            for k in 1..40 {
                let inputs = worked(k);
                let b = profit_p(&inputs, variant).unwrap();
                let coeff = b.duration_coefficient.clone().unwrap();
                let hurdle = b.hurdle.clone().unwrap();
                assert_eq!(b.profit, &inputs.r_star * (int(k as i64) * coeff - hurdle));
                assert_eq!(b.profit, &b.revenue - &b.cost);
            }
        }
        // The printed hurdle does not reproduce the profit.
        let inputs = worked(27);
        let (coeff, _) = profit_decomposition(&inputs, Variant::Paper);
        assert_ne!(int(27) * coeff, hurdle_as_printed(&inputs));
    }

    #[test]
    fn threshold_examples() {
        let t = thresholds(&int(1000), &ratio(1, 2), &int(400), &ratio(1, 2)).unwrap();
        assert_eq!(t.gamma_min, ratio(3, 7));
        assert_eq!(t.k_min_paper, int(6));
        assert_eq!(t.k_break_even, Some(28));
        assert_eq!(t.k_zero_profit, Some(27));
        assert_eq!(t.gamma_safety, ratio(1, 6));

        let at_target = thresholds(&int(1000), &ratio(1, 2), &int(500), &ratio(1, 2)).unwrap();
        assert_eq!(at_target.gamma_min, ratio(1, 3));
        let none = thresholds(&int(1000), &ratio(1, 2), &int(0), &int(1)).unwrap();
        assert_eq!(none.gamma_min, int(1));
        assert_eq!(none.k_break_even, None);
        assert_eq!(none.gamma_safety, ratio(1, 2));
    }

    #[test]
    fn expected_bound_examples() {
        let profit = q("0.05");
        let zero = ElasticityBound {
            c: int(1),
            epsilon: int(1),
            gamma_s: int(0),
            gamma_d: int(0),
        };
        assert_eq!(expected_profit_bound(&profit, &zero, 28).unwrap(), profit);
        let elastic = ElasticityBound {
            gamma_s: q("0.02"),
            gamma_d: q("-0.02"),
            ..zero.clone()
        };
        assert_eq!(expected_profit_bound(&profit, &elastic, 28).unwrap(), q("-1.07"));
        let mut prev_gap = None;
        for exp in 1..8 {
            let tiny = ElasticityBound {
                c: ratio(1, 10i64.pow(exp)),
                ..elastic.clone()
            };
            let gap = &profit - expected_profit_bound(&profit, &tiny, 28).unwrap();
            if let Some(prev) = prev_gap {
                assert!(gap < prev);
            }
            prev_gap = Some(gap);
        }
        let bad = ElasticityBound {
            epsilon: int(0),
            ..zero
        };
        assert!(expected_profit_bound(&profit, &bad, 1).is_err());
    }

    #[test]
    fn pi_path_examples() {
        let path = pi_coefficient_path(&int(2), &q("0.2"), &q("0.1"), &int(1), &ratio(1, 2), &ratio(1, 2), 5)
            .unwrap();
        assert_eq!(path[0], q("2.1"));
        assert!(path[1..].iter().all(|k| *k == q("2.15")));
        let flat = pi_coefficient_path(&int(2), &q("0.2"), &int(0), &int(1), &ratio(1, 2), &ratio(1, 2), 5)
            .unwrap();
        assert!(flat.iter().all(|k| *k == q("2.1")));
        assert!(pi_coefficient_path(&int(2), &q("0.2"), &q("0.1"), &ratio(1, 2), &ratio(1, 2), &ratio(1, 2), 5).is_err());
    }

    #[test]
    fn stabilization_cost_examples() {
        assert_eq!(stabilization_cost(&pi_reference("0.1", 5, 10), Variant::Paper).unwrap(), q("1637.5"));
        assert_eq!(stabilization_cost(&pi_reference("0.1", 5, 10), Variant::Rederived).unwrap(), q("3737.5"));
        for variant in Variant::BOTH {
            assert_eq!(stabilization_cost(&pi_reference("0", 1, 1), variant).unwrap(), int(1575));
        }
    }

    #[test]
    fn extraction_cost_examples() {
        let r = q("1.075");
        assert_eq!(extraction_cost(&int(500), &r, 10, Variant::Paper).unwrap(), q("7793.75"));
        assert_eq!(extraction_cost(&int(500), &r, 1, Variant::Paper).unwrap(), q("537.5"));
        assert_eq!(extraction_cost(&int(500), &r, 2, Variant::Paper).unwrap(), q("1343.75"));
        assert_eq!(extraction_cost(&int(500), &r, 1, Variant::Rederived).unwrap(), int(0));
        assert!(extraction_cost(&int(500), &r, 0, Variant::Paper).is_err());
    }

    #[test]
    fn supply_revenue_examples() {
        assert_eq!(supply_revenue_pi(&pi_reference("0.1", 5, 10), Variant::Paper).unwrap(), q("0.5875"));
        assert_eq!(supply_revenue_pi(&pi_reference("0.1", 5, 10), Variant::Rederived).unwrap(), q("1343.75"));
        let single = PiAttackInputs {
            gamma: int(1),
            ..pi_reference("0", 1, 1)
        };
        assert_eq!(supply_revenue_pi(&single, Variant::Rederived).unwrap(), int(525));
    }

    #[test]
    fn profit_pi_micro_scenario() {
        let micro = PiAttackInputs {
            gamma: int(1),
            ..pi_reference("0", 1, 1)
        };
        let c = PiComponents::evaluate(&micro, Variant::Rederived).unwrap();
        let b = profit_pi(&c).unwrap();
        assert_eq!(b.cost, int(1575));
        assert_eq!(b.revenue, int(525));
        assert_eq!(b.profit, int(-1050));

        let zero = Component { variant: Variant::Paper, value: int(0) };
        let zeros = PiComponents {
            supply_revenue: zero.clone(),
            extraction_revenue: zero.clone(),
            stabilization_cost: zero.clone(),
            extraction_cost: zero.clone(),
        };
        assert_eq!(profit_pi(&zeros).unwrap().profit, int(0));

        let mut mixed = c.clone();
        mixed.extraction_cost.variant = Variant::Paper;
        assert!(profit_pi(&mixed).is_err());

        let paper = PiComponents::evaluate(&micro, Variant::Paper).unwrap();
        let p = profit_pi(&paper).unwrap();
        assert_eq!(
            p.profit,
            &paper.supply_revenue.value + &paper.extraction_revenue.value
                - &paper.stabilization_cost.value
                - &paper.extraction_cost.value
        );
    }

    #[test]
    fn extraction_steps() {
        assert_eq!(extraction_supply_step(&int(1000), 10, Variant::Rederived), int(-100));
        assert_eq!(extraction_supply_step(&int(1000), 10, Variant::Paper), int(-200));
    }

    proptest::proptest! {
        #[test]
        fn duration_coefficient_sign_tracks_gamma_min(
            s in 100i64..5000, d_pct in 0i64..=100, u_pct in 5i64..=50, g in 1i64..=100
        ) {
            let u = ratio(u_pct, 100);
            let supply = int(s);
            let d_prev = &u * &supply * ratio(d_pct, 100);
            let gamma = ratio(g, 100);
            let inputs = PAttackInputs {
                r_star: q("0.001"), gamma: gamma.clone(), u_star: u.clone(),
                supply: supply.clone(), d_prev: d_prev.clone(), k: 10,
            };
            let b = profit_p(&inputs, Variant::Paper).unwrap();
            let lhs = (&b.profit / &inputs.r_star + b.hurdle.unwrap()) / int(10);
            let gm = gamma_min(&inputs.d_star(), &d_prev);
            proptest::prop_assert_eq!(lhs.is_positive(), gamma > gm);
        }

        #[test]
        fn safety_below_minimum(s in 1i64..100_000, u_pct in 1i64..100, d_pct in 0i64..=100) {
            let u = ratio(u_pct, 100);
            let supply = int(s);
            let d_prev = &u * &supply * ratio(d_pct, 100);
            let d_star = &u * &supply;
            proptest::prop_assert!(gamma_safety(&supply, &u, &d_prev) < gamma_min(&d_star, &d_prev));
        }

        #[test]
        fn profit_monotone_in_gamma_affine_in_k(
            g1 in 1i64..=100, g2 in 1i64..=100, d_pct in 0i64..=100, k in 1u64..200
        ) {
            for variant in Variant::BOTH {
                // The published supply sum is negative below k = 3, so
                // monotonicity in gamma only holds from there on.
                if variant == Variant::Paper && k < 3 {
                    continue;
                }
                let base = worked(k);
                let d_prev = int(500) * ratio(d_pct, 100);
                let a = PAttackInputs { gamma: ratio(g1.min(g2), 100), d_prev: d_prev.clone(), ..base.clone() };
                let b = PAttackInputs { gamma: ratio(g1.max(g2), 100), d_prev: d_prev.clone(), ..base.clone() };
                proptest::prop_assert!(profit_p(&a, variant).unwrap().profit <= profit_p(&b, variant).unwrap().profit);
                let at = |k| profit_p(&PAttackInputs { k, ..a.clone() }, variant).unwrap().profit;
                proptest::prop_assert_eq!(at(k + 2) - at(k + 1), at(k + 1) - at(k));
            }
        }

        #[test]
        fn no_latent_demand_never_profits(k in 1u64..10_000, g in 1i64..=10) {
            let inputs = PAttackInputs { gamma: ratio(g, 10), d_prev: int(0), k, ..worked(k) };
            proptest::prop_assert!(profit_p(&inputs, Variant::Paper).unwrap().profit.is_negative());
        }

        #[test]
        fn pi_stabilization_dominates_p(beta_milli in 1i64..500, p in 1u64..12) {
            let pi = pi_reference("0", p, 3);
            let pi = PiAttackInputs { beta: ratio(beta_milli, 1000), ..pi };
            let p_only = PiAttackInputs { beta: int(0), ..pi.clone() };
            proptest::prop_assert!(
                stabilization_cost(&pi, Variant::Rederived).unwrap()
                    > stabilization_cost(&p_only, Variant::Rederived).unwrap()
            );
        }
    }
}

//! Proportional and proportional-integral coefficient update laws.

use std::collections::VecDeque;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::num::{self, Rational};
use crate::pool::{ControllerKind, DecayMode, MarketParams, PiForm};

/// The last `lookback_p` utilizations, oldest first, tagged with the block
/// index of the newest entry so absolute-index decay can be evaluated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UtilizationHistory {
    capacity: usize,
    values: VecDeque<Rational>,
    newest_block: i64,
}

impl UtilizationHistory {
    pub fn new(capacity: usize) -> Self {
        UtilizationHistory {
            capacity: capacity.max(1),
            values: VecDeque::new(),
            newest_block: -1,
        }
    }

    /// History filled with `capacity` copies of `u`, ending at block `newest_block`.
    pub fn flat(capacity: usize, u: &Rational, newest_block: i64) -> Self {
        let mut history = Self::new(capacity);
        for _ in 0..history.capacity {
            history.values.push_back(u.clone());
        }
        history.newest_block = newest_block;
        history
    }

    /// Builds a history from explicit values (oldest first). Entries beyond
    /// `capacity` are dropped from the front.
    pub fn from_values(capacity: usize, values: &[Rational], newest_block: i64) -> Self {
        let mut history = Self::new(capacity);
        for v in values {
            history.push_at(v.clone(), newest_block);
        }
        history.newest_block = newest_block;
        history
    }

    pub fn push(&mut self, u: Rational) {
        let block = self.newest_block + 1;
        self.push_at(u, block);
    }

    fn push_at(&mut self, u: Rational, block: i64) {
        if self.values.len() == self.capacity {
            self.values.pop_front();
        }
        self.values.push_back(u);
        self.newest_block = block;
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> impl Iterator<Item = &Rational> {
        self.values.iter()
    }

    pub fn newest_block(&self) -> i64 {
        self.newest_block
    }

    /// `sum_i w_i (U_i - U*)` over the window.
    ///
    /// During warm-up (fewer than `p` entries) only the available entries are
    /// summed.
    pub fn weighted_error(&self, u_target: &Rational, xi: &Rational, decay: DecayMode) -> Rational {
        let n = self.values.len() as i64;
        self.values
            .iter()
            .enumerate()
            .map(|(j, u)| {
                let block = self.newest_block - (n - 1 - j as i64);
                let weight = match decay {
                    DecayMode::Age => pow(xi, self.newest_block + 1 - block),
                    DecayMode::Absolute => pow(xi, block),
                };
                weight * (u - u_target)
            })
            .sum()
    }
}

fn pow(base: &Rational, exp: i64) -> Rational {
    if base.is_one() || exp == 0 {
        return Rational::one();
    }
    num_traits::Pow::pow(base, exp as i32)
}

/// `min(max(k_raw, k_min), k_max)`.
pub fn clamp(k_raw: &Rational, params: &MarketParams) -> Rational {
    num::min(&num::max(k_raw, &params.k_min), &params.k_max)
}

/// `clamp(k_prev + alpha * (u_now - U*))`.
pub fn p_update(k_prev: &Rational, u_now: &Rational, params: &MarketParams) -> Rational {
    clamp(
        &(k_prev + &params.alpha * (u_now - &params.u_target)),
        params,
    )
}

/// `clamp(k_prev + alpha * (u_now - U*) + beta * sum_window decay * (U_i - U*))`.
///
/// The window is the history, i.e. blocks `t - p .. t - 1`; `u_now` enters
/// only through the proportional term.
pub fn pi_update(
    k_prev: &Rational,
    history: &UtilizationHistory,
    u_now: &Rational,
    params: &MarketParams,
) -> Result<Rational> {
    if history.is_empty() {
        return Err(Error::precondition("PI update needs a non-empty history"));
    }
    let integral = history.weighted_error(&params.u_target, &params.xi, params.decay);
    Ok(clamp(
        &(k_prev + &params.alpha * (u_now - &params.u_target) + &params.beta * integral),
        params,
    ))
}

/// Stateful coefficient controller used by the engine.
#[derive(Debug, Clone)]
pub struct RateController {
    params: MarketParams,
    history: UtilizationHistory,
    k: Rational,
    // Proportional state for the windowed PI form.
    base: Rational,
}

impl RateController {
    /// Starts from coefficient `k_init` with a flat pre-history at `u_init`
    /// covering blocks `-p .. -1`.
    pub fn new(params: &MarketParams, k_init: Rational, u_init: &Rational) -> Self {
        let history = UtilizationHistory::flat(params.lookback_p, u_init, -1);
        let base = match (params.controller, params.pi_form) {
            (ControllerKind::Pi, PiForm::Windowed) => {
                &k_init
                    - &params.beta
                        * history.weighted_error(&params.u_target, &params.xi, params.decay)
            }
            _ => k_init.clone(),
        };
        RateController {
            params: params.clone(),
            history,
            k: k_init,
            base,
        }
    }

    pub fn coefficient(&self) -> &Rational {
        &self.k
    }

    pub fn history(&self) -> &UtilizationHistory {
        &self.history
    }

    /// Feeds the utilization observed at the next block and returns the new coefficient.
    pub fn step(&mut self, u_now: &Rational) -> Rational {
        let params = &self.params;
        let next = match params.controller {
            ControllerKind::P => p_update(&self.k, u_now, params),
            ControllerKind::Pi => match params.pi_form {
                PiForm::Accumulating => pi_update(&self.k, &self.history, u_now, params)
                    .expect("controller history is never empty"),
                PiForm::Windowed => {
                    self.base = p_update(&self.base, u_now, params);
                    let integral =
                        self.history
                            .weighted_error(&params.u_target, &params.xi, params.decay);
                    if params.beta.is_zero() {
                        self.base.clone()
                    } else {
                        clamp(&(&self.base + &params.beta * integral), params)
                    }
                }
            },
        };
        self.history.push(u_now.clone());
        self.k = next.clone();
        next
    }
}

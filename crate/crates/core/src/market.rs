//! Background supply/demand elasticity: response models, estimation from
//! traces, and Markov tail bounds.
//!
//! The background responds to the change in the borrow rate between the two
//! previous blocks. The response families shipped here are modeling choices,
//! not something the attack analysis pins down.

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::Trace;
use crate::error::{Error, Result};
use crate::num::{self, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseKind {
    /// Completely inelastic background: the attacker's best case.
    #[default]
    None,
    Linear,
    /// Linear response plus uniform noise on `[-noise_scale, noise_scale]`.
    LinearPlusNoise,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElasticityModel {
    #[serde(default)]
    pub kind: ResponseKind,
    /// Expected supply change per unit rate change (`>= 0`).
    #[serde(with = "num::decimal_string", default = "num::zero")]
    pub gamma_s: Rational,
    /// Expected demand change per unit rate change (`<= 0`).
    #[serde(with = "num::decimal_string", default = "num::zero")]
    pub gamma_d: Rational,
    #[serde(with = "num::decimal_string", default = "num::zero")]
    pub noise_scale: Rational,
    #[serde(default)]
    pub seed: u64,
    /// Background deltas are rounded to a multiple of this amount; zero
    /// keeps them exact. Without rounding, feedback through the rate makes
    /// denominators grow geometrically from block to block.
    #[serde(with = "num::decimal_string", default = "default_quantum")]
    pub quantum: Rational,
}

fn default_quantum() -> Rational {
    num::ratio(1, 1_000_000_000)
}

impl Default for ElasticityModel {
    fn default() -> Self {
        ElasticityModel::inelastic()
    }
}

impl ElasticityModel {
    pub fn inelastic() -> Self {
        ElasticityModel {
            kind: ResponseKind::None,
            gamma_s: num::zero(),
            gamma_d: num::zero(),
            noise_scale: num::zero(),
            seed: 0,
            quantum: default_quantum(),
        }
    }

    pub fn linear(gamma_s: Rational, gamma_d: Rational) -> Self {
        ElasticityModel {
            kind: ResponseKind::Linear,
            gamma_s,
            gamma_d,
            ..Self::inelastic()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gamma_s.is_negative() || self.gamma_d.is_positive() {
            return Err(Error::domain(
                "elasticities must satisfy gamma_s >= 0 and gamma_d <= 0",
            ));
        }
        if self.noise_scale.is_negative() {
            return Err(Error::domain("noise_scale must be non-negative"));
        }
        if self.quantum.is_negative() {
            return Err(Error::domain("quantum must be non-negative"));
        }
        Ok(())
    }

    pub fn sampler(&self) -> ResponseSampler {
        ResponseSampler {
            model: self.clone(),
            rng: ChaCha8Rng::seed_from_u64(self.seed),
        }
    }
}

/// Stateful view of an [`ElasticityModel`] carrying its RNG stream.
#[derive(Debug, Clone)]
pub struct ResponseSampler {
    model: ElasticityModel,
    rng: ChaCha8Rng,
}

impl ResponseSampler {
    pub fn model(&self) -> &ElasticityModel {
        &self.model
    }

    fn noise(&mut self) -> Rational {
        let u: f64 = self.rng.gen_range(-1.0..=1.0);
        &self.model.noise_scale * num::from_f64(u)
    }

    /// `(supply_delta, demand_delta)` of the background for a rate change.
    pub fn respond(&mut self, rate_change: &Rational) -> (Rational, Rational) {
        background_response(rate_change, self)
    }
}

/// Background reaction to a borrow-rate change. No change in the rate means
/// no reaction, noise included.
pub fn background_response(
    rate_change: &Rational,
    sampler: &mut ResponseSampler,
) -> (Rational, Rational) {
    if rate_change.is_zero() {
        return (num::zero(), num::zero());
    }
    let model = &sampler.model;
    let (supply, demand) = match model.kind {
        ResponseKind::None => return (num::zero(), num::zero()),
        ResponseKind::Linear => (&model.gamma_s * rate_change, &model.gamma_d * rate_change),
        ResponseKind::LinearPlusNoise => {
            let supply = &model.gamma_s * rate_change;
            let demand = &model.gamma_d * rate_change;
            let ns = sampler.noise();
            let nd = sampler.noise();
            (supply + ns, demand + nd)
        }
    };
    let q = &sampler.model.quantum;
    (quantize(&supply, q), quantize(&demand, q))
}

/// Nearest multiple of `quantum` (ties away from zero).
pub fn quantize(value: &Rational, quantum: &Rational) -> Rational {
    if quantum.is_zero() {
        return value.clone();
    }
    (value / quantum).round() * quantum
}

/// Realized supply and demand sensitivities `(dS/dr, |dD/dr|)` for one
/// draw at a given rate change.
pub fn sample_sensitivity(rate_change: &Rational, sampler: &mut ResponseSampler) -> (Rational, Rational) {
    let (ds, dd) = background_response(rate_change, sampler);
    if rate_change.is_zero() {
        return (num::zero(), num::zero());
    }
    (ds / rate_change, (dd / rate_change).abs())
}

/// `min(Gamma / epsilon, 1)`: Markov's bound on `P[X > epsilon]` for a
/// non-negative `X` with mean `Gamma`.
pub fn markov_bound(gamma: &Rational, epsilon: &Rational) -> Result<Rational> {
    if !epsilon.is_positive() {
        return Err(Error::domain("epsilon must be positive"));
    }
    if gamma.is_negative() {
        return Err(Error::domain("Markov bound needs a non-negative mean"));
    }
    Ok(num::min(&(gamma / epsilon), &num::one()))
}

/// One regression point: the rate change the background saw and how it moved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticityObservation {
    pub rate_change: f64,
    pub supply_delta: f64,
    pub demand_delta: f64,
}

/// Least-squares slopes of background supply and demand changes against rate
/// changes, over every block of the trace.
pub fn estimate_elasticities(trace: &Trace) -> Result<(f64, f64)> {
    let obs: Vec<ElasticityObservation> = trace
        .blocks
        .iter()
        .map(|b| ElasticityObservation {
            rate_change: num::to_f64(&b.rate_change_seen),
            supply_delta: num::to_f64(&b.background_supply_delta),
            demand_delta: num::to_f64(&b.background_demand_delta),
        })
        .collect();
    estimate_from_observations(&obs)
}

pub fn estimate_from_observations(obs: &[ElasticityObservation]) -> Result<(f64, f64)> {
    let moving = obs.iter().filter(|o| o.rate_change != 0.0).count();
    if moving < 2 {
        return Err(Error::domain(
            "need at least two blocks with a nonzero rate change",
        ));
    }
    let n = obs.len() as f64;
    let mean_x = obs.iter().map(|o| o.rate_change).sum::<f64>() / n;
    let mean_s = obs.iter().map(|o| o.supply_delta).sum::<f64>() / n;
    let mean_d = obs.iter().map(|o| o.demand_delta).sum::<f64>() / n;
    let sxx: f64 = obs.iter().map(|o| (o.rate_change - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("rate changes have no variance"));
    }
    let sxs: f64 = obs
        .iter()
        .map(|o| (o.rate_change - mean_x) * (o.supply_delta - mean_s))
        .sum();
    let sxd: f64 = obs
        .iter()
        .map(|o| (o.rate_change - mean_x) * (o.demand_delta - mean_d))
        .sum();
    Ok((sxs / sxx, sxd / sxx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{int, parse, ratio};

    #[test]
    fn linear_response_examples() {
        let mut s = ElasticityModel::linear(int(10), int(-5)).sampler();
        let (ds, dd) = s.respond(&parse("0.01").unwrap());
        assert_eq!(ds, parse("0.1").unwrap());
        assert_eq!(dd, parse("-0.05").unwrap());
    }

    #[test]
    fn zero_rate_change_has_no_response() {
        for kind in [ResponseKind::None, ResponseKind::Linear, ResponseKind::LinearPlusNoise] {
            let model = ElasticityModel {
                kind,
                gamma_s: int(3),
                gamma_d: int(-3),
                noise_scale: int(2),
                seed: 9,
                quantum: ratio(1, 1000),
            };
            let mut s = model.sampler();
            assert_eq!(s.respond(&int(0)), (int(0), int(0)));
        }
        let mut none = ElasticityModel::inelastic().sampler();
        assert_eq!(none.respond(&int(1)), (int(0), int(0)));
    }

    #[test]
    fn noise_is_deterministic_and_bounded() {
        let model = ElasticityModel {
            kind: ResponseKind::LinearPlusNoise,
            gamma_s: int(10),
            gamma_d: int(-5),
            noise_scale: ratio(1, 10),
            seed: 42,
            quantum: num::zero(),
        };
        let mut a = model.sampler();
        let mut b = model.sampler();
        let dr = parse("0.01").unwrap();
        for _ in 0..100 {
            let ra = a.respond(&dr);
            assert_eq!(ra, b.respond(&dr));
            assert!((&ra.0 - parse("0.1").unwrap()).abs() <= ratio(1, 10));
        }
        let first = model.sampler().respond(&dr);
        let mut other = ElasticityModel { seed: 43, ..model }.sampler();
        assert_ne!(other.respond(&dr), first);
    }

    #[test]
    fn quantized_responses() {
        let mut s = ElasticityModel {
            quantum: ratio(1, 100),
            ..ElasticityModel::linear(int(10), int(-5))
        }
        .sampler();
        assert_eq!(s.respond(&parse("0.0013").unwrap()), (parse("0.01").unwrap(), parse("-0.01").unwrap()));
        assert_eq!(quantize(&parse("0.125").unwrap(), &ratio(1, 100)), parse("0.13").unwrap());
        assert_eq!(quantize(&parse("-0.125").unwrap(), &int(0)), parse("-0.125").unwrap());
    }

    #[test]
    fn markov_bound_examples() {
        assert_eq!(markov_bound(&parse("0.2").unwrap(), &int(1)).unwrap(), parse("0.2").unwrap());
        assert_eq!(markov_bound(&int(0), &int(7)).unwrap(), int(0));
        assert_eq!(markov_bound(&int(5), &int(1)).unwrap(), int(1));
        assert!(markov_bound(&int(1), &int(0)).is_err());
    }

    #[test]
    fn sign_conventions_enforced() {
        assert!(ElasticityModel::linear(int(-1), int(0)).validate().is_err());
        assert!(ElasticityModel::linear(int(1), int(1)).validate().is_err());
        assert!(ElasticityModel::linear(int(1), int(-1)).validate().is_ok());
    }

    #[test]
    fn estimator_recovers_noiseless_slopes() {
        let obs: Vec<_> = [-0.003, 0.0, 0.002, 0.01, 0.0005]
            .iter()
            .map(|&x| ElasticityObservation {
                rate_change: x,
                supply_delta: 10.0 * x,
                demand_delta: -5.0 * x,
            })
            .collect();
        let (gs, gd) = estimate_from_observations(&obs).unwrap();
        assert!((gs - 10.0).abs() <= 1e-9 * 10.0);
        assert!((gd + 5.0).abs() <= 1e-9 * 5.0);
    }

    #[test]
    fn estimator_rejects_degenerate() {
        let obs = vec![
            ElasticityObservation { rate_change: 0.0, supply_delta: 1.0, demand_delta: 0.0 };
            5
        ];
        assert!(estimate_from_observations(&obs).is_err());
    }
}

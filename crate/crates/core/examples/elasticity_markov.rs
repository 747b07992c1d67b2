// Elastic background: simulate, estimate the elasticities back from the
// trace, and check Markov's tail bound on sampled responses.

use pidrate::engine::{self, Scenario};
use pidrate::market::{self, ElasticityModel};
use pidrate::num::{self, parse};

pub fn run_example() -> pidrate::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/elastic_mitigated.json");
    let scenario = Scenario::from_json(&std::fs::read_to_string(path)?)?;
    let trace = engine::run(&scenario)?;
    // The supply cap and protocol liquidity in this config bias the estimate.
    let (gs, gd) = market::estimate_elasticities(&trace)?;
    println!(
        "configured ({}, {}), estimated ({gs:.1}, {gd:.1})",
        num::format(&scenario.elasticity.gamma_s),
        num::format(&scenario.elasticity.gamma_d)
    );

    let dr = parse("0.001").unwrap();
    let mut sampler = ElasticityModel {
        seed: 3,
        ..scenario.elasticity.clone()
    }
    .sampler();
    let n = 10_000;
    let eps = parse("5.2").unwrap();
    let hits = (0..n).filter(|_| sampler.respond(&dr).0 > eps).count();
    let bound = market::markov_bound(&(&scenario.elasticity.gamma_s * &dr), &eps)?;
    println!(
        "P[dS > {}] ~ {:.4}, Markov bound {}",
        num::format(&eps),
        hits as f64 / n as f64,
        num::format(&bound)
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> pidrate::Result<()> {
    run_example()
}

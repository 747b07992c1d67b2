// PI-controller attack: spike, hold at target while the integral window
// fills, then withdraw supply to extract.

use pidrate::closed_form::{self, PiAttackInputs, PiComponents, Variant};
use pidrate::engine::{self, Scenario};
use pidrate::num;

pub fn run_example() -> pidrate::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/pi_reference.json");
    let scenario = Scenario::from_json(&std::fs::read_to_string(path)?)?;
    let trace = engine::run(&scenario)?;

    for b in trace.blocks.iter().filter(|b| b.phase.is_some()) {
        println!(
            "t={:<3} {:<10} U={:<6} k={}",
            b.t,
            b.phase.unwrap().as_str(),
            num::format(b.utilization()),
            num::format(b.k())
        );
    }
    let pnl = engine::attacker_pnl(&trace, scenario.accounting_mode);
    println!("simulated profit: {}", num::format(&pnl.profit));

    let p = &scenario.params;
    let inputs = PiAttackInputs {
        u_star: p.u_target.clone(),
        supply: scenario.initial.supply.clone(),
        d_prev: scenario.initial.demand.clone(),
        k_prev: scenario.initial.k_coeff.clone(),
        alpha: p.alpha.clone(),
        beta: p.beta.clone(),
        gamma: p.gamma.clone(),
        p: 5,
        m: 10,
    };
    for variant in Variant::BOTH {
        let profit = closed_form::profit_pi(&PiComponents::evaluate(&inputs, variant)?)?;
        println!("{variant:?} formula profit: {}", num::format(&profit.profit));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> pidrate::Result<()> {
    run_example()
}

// Break-even durations and spread thresholds for the P attack.

use pidrate::closed_form::{self, PAttackInputs, Variant};
use pidrate::engine::{self, Scenario};
use pidrate::num;

pub fn run_example() -> pidrate::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/worked_p.json");
    let scenario = Scenario::from_json(&std::fs::read_to_string(path)?)?;
    let init = &scenario.initial;
    let params = &scenario.params;

    let t = closed_form::thresholds(&init.supply, &params.u_target, &init.demand, &params.gamma)?;
    println!("gamma_min     {}", num::format(&t.gamma_min));
    println!("gamma_safety  {}", num::format(&t.gamma_safety));
    println!("k > 3/gamma   {}", num::format(&t.k_min_paper));

    let inputs = PAttackInputs {
        r_star: &init.k_coeff * &params.u_target,
        gamma: params.gamma.clone(),
        u_star: params.u_target.clone(),
        supply: init.supply.clone(),
        d_prev: init.demand.clone(),
        k: 1,
    };
    for variant in Variant::BOTH {
        let k = engine::break_even_closed_form(&inputs, 1..=200, variant)?;
        println!("{variant:?} formula break-even: {k:?}");
    }
    println!("simulated break-even: {:?}", engine::break_even_duration(&scenario, 1..=60)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> pidrate::Result<()> {
    run_example()
}

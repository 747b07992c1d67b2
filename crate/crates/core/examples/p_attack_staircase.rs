// Runs the proportional-controller attack on the worked scenario and prints
// the utilization staircase together with the attacker's profit.

use pidrate::engine::{self, AccountingMode, Scenario};
use pidrate::num;

pub fn run_example() -> pidrate::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/worked_p.json");
    let scenario = Scenario::from_json(&std::fs::read_to_string(path)?)?;
    let trace = engine::run(&scenario)?;

    println!("{:>3} {:>8} {:>6} {:>8} {:>8}", "t", "phase", "U", "dS", "dD");
    for b in &trace.blocks {
        println!(
            "{:>3} {:>8} {:>6} {:>8} {:>8}",
            b.t,
            b.phase.map_or("-", |p| p.as_str()),
            num::format(b.utilization()),
            num::format(&b.supply_delta),
            num::format(&b.demand_delta),
        );
    }
    for mode in AccountingMode::BOTH {
        let pnl = engine::attacker_pnl(&trace, mode);
        println!(
            "{}: cost {} revenue {} profit {}",
            mode.as_str(),
            num::format(&pnl.cost),
            num::format(&pnl.revenue),
            num::format(&pnl.profit)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> pidrate::Result<()> {
    run_example()
}

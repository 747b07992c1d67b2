// The same P attack with and without each protocol-side defence.
//
// Profit is measured in the whole-pool accounting mode, so a cap that keeps
// utilization high can raise the credited revenue rather than lower it.

use pidrate::engine::{self, AccountingMode, Scenario};
use pidrate::mitigation::{ProtocolLiquidity, SupplyCap};
use pidrate::num::{self, parse};

pub fn run_example() -> pidrate::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/worked_p.json");
    let mut base = Scenario::from_json(&std::fs::read_to_string(path)?)?;
    if let pidrate::engine::AttackSpec::P { duration_k, .. } = &mut base.attack {
        *duration_k = 60;
    }
    base.horizon = None;

    let mut spread = base.clone();
    spread.mitigations.dynamic_spread = true;
    let mut cap = base.clone();
    cap.mitigations.supply_cap = Some(SupplyCap {
        max_fraction: parse("0.05").unwrap(),
        trigger: parse("0.0001").unwrap(),
    });
    let mut pol = base.clone();
    pol.mitigations.pol = Some(ProtocolLiquidity {
        treasury: parse("5000").unwrap(),
        enabled: true,
    });

    for (name, sc) in [("none", &base), ("dynamic spread", &spread), ("supply cap", &cap), ("POL", &pol)] {
        let trace = engine::run(sc)?;
        let pnl = engine::attacker_pnl(&trace, AccountingMode::PaperFaithful);
        println!("{name:<15} profit {:>10.4}  events {}", num::to_f64(&pnl.profit), trace.events.len());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> pidrate::Result<()> {
    run_example()
}

// Compares the published closed forms with their rederived counterparts and
// lists every quantity on which they disagree.

use pidrate::engine::{self, Scenario};
use pidrate::num;

pub fn run_example() -> pidrate::Result<()> {
    for name in ["worked_p.json", "pi_reference.json"] {
        let path = format!("{}/examples/configs/{name}", env!("CARGO_MANIFEST_DIR"));
        let report = engine::analyze(&Scenario::from_json(&std::fs::read_to_string(path)?)?)?;
        println!("{name}");
        for d in report.discrepancies.iter().filter(|d| !d.is_zero()) {
            println!(
                "  {:<24} published {:>14} rederived {:>14}",
                d.quantity,
                num::format(&d.paper),
                num::format(&d.rederived)
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> pidrate::Result<()> {
    run_example()
}

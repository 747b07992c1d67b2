// Builds a scenario in code, round-trips it through JSON, and writes the
// trace and figure series to a temporary directory.

use pidrate::engine::{self, AttackSpec, InitialState, Scenario};
use pidrate::num::{int, parse};
use pidrate::pool::MarketParams;

pub fn run_example() -> pidrate::Result<()> {
    let params = MarketParams::proportional(
        parse("0.0005").unwrap(),
        parse("0.8").unwrap(),
        parse("0.4").unwrap(),
        parse("0.0001").unwrap(),
        int(1),
    );
    let scenario = Scenario::new(
        InitialState::new(int(5000), int(1500), parse("0.003").unwrap()),
        params,
        AttackSpec::P {
            start_block: 1,
            duration_k: 12,
        },
    );
    let json = scenario.to_json();
    let reloaded = Scenario::from_json(&json)?;
    assert_eq!(reloaded, scenario);

    let trace = engine::run(&reloaded)?;
    let dir = std::env::temp_dir().join("pidrate-scenario-config");
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("scenario.json"), json)?;
    std::fs::write(dir.join("trace.csv"), engine::trace_csv(&trace))?;
    std::fs::write(dir.join("figure.csv"), engine::figure_csv(&trace))?;
    println!("wrote {} blocks to {}", trace.len(), dir.display());
    Ok(())
}

#[allow(dead_code)]
fn main() -> pidrate::Result<()> {
    run_example()
}

// Sweeps attack duration and spread and prints the result table as CSV.

use pidrate::engine::{self, Scenario};

pub fn run_example() -> pidrate::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/worked_p.json");
    let template = Scenario::from_json(&std::fs::read_to_string(path)?)?;
    let grid = engine::parse_grid("k=10..40:10;gamma=0.3,0.5,1")?;
    let rows = engine::sweep(&template, &grid);
    print!("{}", engine::sweep_csv(&grid, &rows));
    Ok(())
}

#[allow(dead_code)]
fn main() -> pidrate::Result<()> {
    run_example()
}

//! Exact simulation and analysis of utilization-manipulation attacks on
//! lending pools whose interest-rate coefficient is driven by a proportional
//! (P) or proportional-integral (PI) controller.
//!
//! All quantities are exact rationals. The crate is organised bottom-up:
//!
//! * [`pool`]: pool state, the linear rate curve and per-block accrual.
//! * [`controller`]: P and PI coefficient updates with clamping.
//! * [`schedule`]: attack schedule builders and feasibility checks.
//! * [`closed_form`]: published and re-derived profit formulas side by side.
//! * [`market`]: background elasticity models and Markov bounds.
//! * [`mitigation`]: dynamic spread, supply caps and treasury injection.
//! * [`engine`]: the per-block scenario runner, profit oracle, sweeps and reports.
//!
//! ```
//! use pidrate::engine::{self, AccountingMode, AttackSpec, InitialState, Scenario};
//! use pidrate::num::{int, parse, ratio};
//! use pidrate::pool::MarketParams;
//!
//! let params = MarketParams::proportional(int(0), int(1), ratio(1, 2), parse("0.0001").unwrap(), int(10));
//! let initial = InitialState::new(int(1000), int(500), parse("0.002").unwrap());
//! let scenario = Scenario::new(initial, params, AttackSpec::P { start_block: 0, duration_k: 20 });
//! let trace = engine::run(&scenario).unwrap();
//! let pnl = engine::attacker_pnl(&trace, AccountingMode::PaperFaithful);
//! assert_eq!(pnl.profit, int(9));
//! ```

pub mod closed_form;
pub mod controller;
pub mod engine;
pub mod error;
pub mod market;
pub mod mitigation;
pub mod num;
pub mod pool;
pub mod schedule;

pub use error::{Error, Result};
pub use num::Rational;

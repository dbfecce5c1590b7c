//! Simulation of a current-source-inverter-fed PMSM drive over a long cable,
//! started open loop with I-f control and handed over to sensorless
//! field-oriented control.
//!
//! ```
//! use csi_foc::{run_scenario, Scenario};
//!
//! let mut sc = Scenario::default();
//! sc.sim.t_end = 0.1;
//! let run = run_scenario(&sc).unwrap();
//! assert_eq!(run.trace.len(), 501);
//! ```

pub mod controller;
pub mod error;
pub mod estimator;
pub mod frames;
pub mod metrics;
pub mod output;
pub mod plant;
pub mod plot;
pub mod scenario;
pub mod sim;
pub mod sweep;
pub mod trace;

pub use controller::{Controller, Terminal, TransitionConfig, TransitionMode};
pub use error::{Error, Result};
pub use estimator::{Estimator, EstimatorState, LockReport};
pub use frames::{AlphaBeta, Dq};
pub use metrics::{compute_metrics, Metrics, MetricsConfig};
pub use plant::{PlantParams, PlantState};
pub use scenario::Scenario;
pub use sim::{run_scenario, RunOutput, SimConfig, Simulation};
pub use trace::TraceRecord;

// The guide's code blocks run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/plant.md")]
    mod plant {}
    #[doc = include_str!("../../../book/src/startup.md")]
    mod startup {}
    #[doc = include_str!("../../../book/src/estimator.md")]
    mod estimator {}
    #[doc = include_str!("../../../book/src/transition.md")]
    mod transition {}
    #[doc = include_str!("../../../book/src/hill_climbing.md")]
    mod hill_climbing {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
    #[doc = include_str!("../../../book/src/outputs.md")]
    mod outputs {}
    #[doc = include_str!("../../../book/src/determinism.md")]
    mod determinism {}
}

//! Simulator for dual block-coordinate distributed optimization on strongly
//! connected directed graphs with unreliable links.
//!
//! Each node `i` holds a convex `f_i` and an anchor `xbar_i`; the network
//! jointly minimizes `sum_i f_i(x) + 1/2 |x - xbar_i|^2` by push-sum style
//! broadcast/delivery of dual mass plus local dual block minimization.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiment;
pub mod functions;
pub mod graph;
pub mod linalg;
pub mod metrics;
pub mod protocol;
pub mod scheduler;

pub use config::{parse_config, preset_paper_sec4, ConfigError, ExperimentConfig};
pub use experiment::{run_experiment, ExperimentError, ExperimentReport};
pub use functions::{Objective, ObjectiveSpec, Treatment};
pub use graph::GraphTopology;
pub use metrics::{MetricsRecord, ReferenceSolution};
pub use protocol::{Problem, SimState};
pub use scheduler::{run, Cadence, MetricsLog, RunOptions, ScheduleEvent, SchedulePolicy};

//! JSON experiment configuration.
//!
//! Node ids are 1-based in the file and 0-based everywhere else.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::functions::{
    make_paper_quadratic, AffineFunction, Objective, ObjectiveSpec, QuadraticFunction, Treatment,
};
use crate::graph::{two_cycle_edges, GraphError, GraphTopology};
use crate::protocol::Problem;
use crate::scheduler::{parse_trace, Cadence, PolicyKind, RunOptions, SchedulePolicy};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("cannot read {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionConfig {
    Zero,
    /// Random quadratic regenerated from `seed` whose gradient at the
    /// all-ones vector is `target_gradient`.
    QuadraticSeeded {
        seed: u64,
        target_gradient: Vec<f64>,
    },
    Affine {
        gradient: Vec<f64>,
        offset: f64,
    },
    /// `1/2 x^T (v v^T + r I) x + b^T x + c`
    Quadratic {
        v: Vec<f64>,
        r: f64,
        b: Vec<f64>,
        c: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeConfig {
    pub id: usize,
    pub treatment: Treatment,
    pub function: FunctionConfig,
    pub xbar: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyName {
    RoundRobin,
    RandomEvent,
    Trace,
}

fn default_p_deliver() -> f64 {
    1.0
}

fn is_default_p(p: &f64) -> bool {
    *p == 1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub policy: PolicyName,
    #[serde(default = "default_p_deliver", skip_serializing_if = "is_default_p")]
    pub p_deliver: f64,
    #[serde(default)]
    pub seed: u64,
    /// Trace file, relative paths resolved against the config's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
    /// Relative frequencies of (A, B, C) for `random_event`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events_per_round: Option<usize>,
    /// Run the local-min sweep every this many rounds (`round_robin`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_min_every: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CadenceConfig {
    #[default]
    #[serde(rename = "round")]
    Round,
    #[serde(rename = "event")]
    Event,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dimension: usize,
    pub nodes: Vec<NodeConfig>,
    pub edges: Vec<[usize; 2]>,
    pub schedule: ScheduleConfig,
    pub rounds: usize,
    #[serde(default)]
    pub cadence: CadenceConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// Parses and validates a JSON config.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let config: ExperimentConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    config.validate()?;
    Ok(config)
}

/// Reads and parses a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

fn check_len(field: String, found: usize, expected: usize) -> Result<(), ConfigError> {
    if found == expected {
        Ok(())
    } else {
        Err(invalid(
            field,
            format!("expected {expected} entries, found {found}"),
        ))
    }
}

fn check_finite(field: String, values: &[f64]) -> Result<(), ConfigError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(invalid(field, "values must be finite"))
    }
}

impl ExperimentConfig {
    /// Serializes to pretty-printed JSON accepted by [`parse_config`].
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config is serializable");
        s.push('\n');
        s
    }

    /// Checks everything that can be checked without touching the file system.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let m = self.dimension;
        if m == 0 {
            return Err(invalid("dimension", "must be at least 1"));
        }
        let n = self.nodes.len();
        if n == 0 {
            return Err(invalid("nodes", "at least one node is required"));
        }
        let mut seen = vec![false; n];
        for (k, node) in self.nodes.iter().enumerate() {
            let field = |name: &str| format!("nodes[{k}].{name}");
            if node.id == 0 || node.id > n {
                return Err(invalid(
                    field("id"),
                    format!("ids must lie in 1..={n}, got {}", node.id),
                ));
            }
            if std::mem::replace(&mut seen[node.id - 1], true) {
                return Err(invalid(field("id"), format!("duplicate id {}", node.id)));
            }
            check_len(field("xbar"), node.xbar.len(), m)?;
            check_finite(field("xbar"), &node.xbar)?;
            match &node.function {
                FunctionConfig::Zero => {}
                FunctionConfig::QuadraticSeeded {
                    target_gradient, ..
                } => {
                    check_len(field("function.target_gradient"), target_gradient.len(), m)?;
                    check_finite(field("function.target_gradient"), target_gradient)?;
                }
                FunctionConfig::Affine { gradient, offset } => {
                    check_len(field("function.gradient"), gradient.len(), m)?;
                    check_finite(field("function.gradient"), gradient)?;
                    check_finite(field("function.offset"), &[*offset])?;
                }
                FunctionConfig::Quadratic { v, r, b, c } => {
                    check_len(field("function.v"), v.len(), m)?;
                    check_len(field("function.b"), b.len(), m)?;
                    check_finite(field("function.v"), v)?;
                    check_finite(field("function.b"), b)?;
                    check_finite(field("function.c"), &[*c])?;
                    if !(*r > 0.0 && r.is_finite()) {
                        return Err(invalid(
                            field("function.r"),
                            format!("must be positive, got {r}"),
                        ));
                    }
                }
            }
        }
        self.topology()?;
        let s = &self.schedule;
        if !(s.p_deliver > 0.0 && s.p_deliver <= 1.0) {
            return Err(invalid(
                "schedule.p_deliver",
                format!("must lie in (0, 1], got {}", s.p_deliver),
            ));
        }
        if let Some(w) = s.weights {
            if w.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) || !(w.iter().sum::<f64>() > 0.0) {
                return Err(invalid(
                    "schedule.weights",
                    "must be nonnegative with a positive sum",
                ));
            }
        }
        if s.local_min_every == Some(0) {
            return Err(invalid("schedule.local_min_every", "must be at least 1"));
        }
        if s.policy == PolicyName::Trace && s.trace.is_none() {
            return Err(invalid("schedule.trace", "required by the trace policy"));
        }
        if self.rounds == 0 {
            return Err(invalid("rounds", "must be at least 1"));
        }
        Ok(())
    }

    /// Builds the validated graph.
    pub fn topology(&self) -> Result<GraphTopology, ConfigError> {
        let n = self.nodes.len();
        let mut edges = Vec::with_capacity(self.edges.len());
        for &[a, b] in &self.edges {
            if a == 0 || b == 0 || a > n || b > n {
                return Err(invalid(
                    "edges",
                    format!("edge ({a}, {b}) references a node outside 1..={n}"),
                ));
            }
            edges.push((a - 1, b - 1));
        }
        GraphTopology::new(n, &edges).map_err(|e: GraphError| invalid("edges", e.to_string()))
    }

    /// Builds the per-node objectives and anchors, ordered by node id.
    pub fn problem(&self) -> Result<Problem, ConfigError> {
        let mut nodes: Vec<&NodeConfig> = self.nodes.iter().collect();
        nodes.sort_by_key(|n| n.id);
        let mut specs = Vec::with_capacity(nodes.len());
        let mut xbar = Vec::with_capacity(nodes.len());
        for node in nodes {
            let field = format!("nodes[id={}].function", node.id);
            let function = match &node.function {
                FunctionConfig::Zero => Objective::Zero {
                    dim: self.dimension,
                },
                FunctionConfig::QuadraticSeeded {
                    seed,
                    target_gradient,
                } => {
                    let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                    Objective::Quadratic(make_paper_quadratic(target_gradient, &mut rng))
                }
                FunctionConfig::Affine { gradient, offset } => {
                    Objective::Affine(AffineFunction::new(gradient.clone(), *offset))
                }
                FunctionConfig::Quadratic { v, r, b, c } => Objective::Quadratic(
                    QuadraticFunction::new(v.clone(), *r, b.clone(), *c)
                        .map_err(|e| invalid(field.clone(), e.to_string()))?,
                ),
            };
            specs.push(ObjectiveSpec::new(function, node.treatment));
            xbar.push(node.xbar.clone());
        }
        Problem::new(specs, xbar).map_err(|e| invalid("nodes", e.to_string()))
    }

    /// Builds the schedule policy, reading the trace file if there is one.
    pub fn policy(&self, base_dir: &Path) -> Result<SchedulePolicy, ConfigError> {
        let s = &self.schedule;
        let kind = match s.policy {
            PolicyName::RoundRobin => PolicyKind::RoundRobin {
                p_deliver: s.p_deliver,
                local_min_every: s.local_min_every.unwrap_or(1),
            },
            PolicyName::RandomEvent => PolicyKind::RandomEvent {
                weights: s.weights.unwrap_or([1.0, 1.0, 1.0]),
                p_deliver: s.p_deliver,
                events_per_round: s.events_per_round,
            },
            PolicyName::Trace => {
                let rel = s
                    .trace
                    .as_ref()
                    .ok_or_else(|| invalid("schedule.trace", "required by the trace policy"))?;
                let path = base_dir.join(rel);
                let text = std::fs::read_to_string(&path)
                    .map_err(|source| ConfigError::Io { path, source })?;
                let rounds =
                    parse_trace(&text).map_err(|e| invalid("schedule.trace", e.to_string()))?;
                PolicyKind::TraceReplay { rounds }
            }
        };
        Ok(SchedulePolicy { kind, seed: s.seed })
    }

    pub fn run_options(&self) -> RunOptions {
        let mut options = RunOptions::new(self.rounds);
        options.cadence = match self.cadence {
            CadenceConfig::Round => Cadence::PerRound,
            CadenceConfig::Event => Cadence::PerEvent,
        };
        options
    }
}

/// The six-node, two-cycle experiment with `m = 6`.
///
/// Every node gets a seeded random quadratic and the same anchor, chosen so
/// that the optimum of the whole problem is the all-ones vector. Both modes
/// draw identical functions for the same seed.
pub fn preset_paper_sec4(seed: u64, mode: Treatment) -> ExperimentConfig {
    const NODES: usize = 6;
    const DIM: usize = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<(Vec<f64>, u64)> = (0..NODES)
        .map(|_| {
            let v: Vec<f64> = (0..DIM).map(|_| rng.gen_range(-1.0..1.0)).collect();
            (v, rng.gen::<u64>())
        })
        .collect();
    let xbar: Vec<f64> = (0..DIM)
        .map(|k| 1.0 + draws.iter().map(|(v, _)| v[k]).sum::<f64>() / NODES as f64)
        .collect();
    let nodes = draws
        .into_iter()
        .enumerate()
        .map(|(i, (v, node_seed))| NodeConfig {
            id: i + 1,
            treatment: mode,
            function: FunctionConfig::QuadraticSeeded {
                seed: node_seed,
                target_gradient: v,
            },
            xbar: xbar.clone(),
        })
        .collect();
    ExperimentConfig {
        dimension: DIM,
        nodes,
        edges: two_cycle_edges()
            .into_iter()
            .map(|(a, b)| [a + 1, b + 1])
            .collect(),
        schedule: ScheduleConfig {
            policy: PolicyName::RoundRobin,
            p_deliver: 1.0,
            seed,
            trace: None,
            weights: None,
            events_per_round: None,
            local_min_every: None,
        },
        rounds: 1000,
        cadence: CadenceConfig::Round,
        output: None,
    }
}

//! End-to-end driver: config in, CSV and summary out.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig};
use crate::metrics::MetricsRecord;
use crate::protocol::{ProtocolError, SimState};
use crate::scheduler::{check_delivery_window, run, MetricsLog, RunError};

pub const CSV_HEADER: &str = "round,event_count,dual_surrogate,duality_gap,s_weighted_error,\
consensus_residual,weight_residual,mass_residual";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot initialize simulation: {0}")]
    Setup(#[from] ProtocolError),
    #[error("simulation failed: {0}")]
    Simulation(#[from] RunError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ExperimentError {
    /// 2 for bad configuration, 3 for a failed or invariant-violating run,
    /// 4 for file system errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(ConfigError::Io { .. }) | ExperimentError::Io { .. } => 4,
            ExperimentError::Config(_) | ExperimentError::Setup(_) => 2,
            ExperimentError::Simulation(_) => 3,
        }
    }
}

/// One-line run summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub rounds: usize,
    pub events: u64,
    pub final_gap: f64,
    pub final_consensus: f64,
    /// Longest stretch of events before every edge saw a broadcast followed
    /// by its delivery; `None` if some edge never did.
    pub empirical_k: Option<usize>,
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "rounds={} events={} final_gap={:.6e} final_consensus={:.6e} empirical_K={} invariants=ok",
            self.rounds,
            self.events,
            self.final_gap,
            self.final_consensus,
            self.empirical_k
                .map_or_else(|| "unbounded".to_string(), |k| k.to_string()),
        )
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub csv: String,
    pub summary: Summary,
    pub log: MetricsLog,
}

fn csv_row(out: &mut String, r: &MetricsRecord) {
    writeln!(
        out,
        "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
        r.round,
        r.event_count,
        r.dual_surrogate,
        r.duality_gap,
        r.s_weighted_error,
        r.consensus_residual,
        r.weight_residual,
        r.mass_residual
    )
    .expect("writing to a String cannot fail");
}

/// Renders records in the CSV schema, one row per record.
pub fn to_csv(records: &[MetricsRecord]) -> String {
    let mut out = String::with_capacity(64 + 200 * records.len());
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        csv_row(&mut out, r);
    }
    out
}

/// Builds the simulation from `config`, runs it with invariant checks after
/// every event, and renders the CSV. Trace paths resolve against `base_dir`.
pub fn run_experiment(
    config: &ExperimentConfig,
    base_dir: &Path,
) -> Result<ExperimentReport, ExperimentError> {
    config.validate()?;
    let topology = Arc::new(config.topology()?);
    let problem = Arc::new(config.problem()?);
    let policy = config.policy(base_dir)?;
    let mut state = SimState::initialize(topology.clone(), problem)?;
    let log = run(&mut state, &policy, &config.run_options())?;
    let events: Vec<_> = log.events().copied().collect();
    let last = log.last();
    let summary = Summary {
        rounds: log.rounds.len(),
        events: state.event_count(),
        final_gap: last.duality_gap,
        final_consensus: last.consensus_residual,
        empirical_k: check_delivery_window(&topology, &events).max(),
    };
    Ok(ExperimentReport {
        csv: to_csv(&log.records),
        summary,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_config, preset_paper_sec4, CadenceConfig};
    use crate::functions::Treatment;

    #[test]
    fn csv_format() {
        let r = MetricsRecord {
            round: 2,
            event_count: 38,
            event: None,
            dual_surrogate: 1.0,
            duality_gap: 0.1,
            s_weighted_error: 0.0,
            consensus_residual: 2.5e-10,
            weight_residual: 0.0,
            mass_residual: 1e-300,
        };
        let csv = to_csv(&[r]);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let row = lines.next().unwrap();
        assert_eq!(
            row,
            "2,38,1.0000000000000000e0,1.0000000000000001e-1,0.0000000000000000e0,\
             2.5000000000000002e-10,0.0000000000000000e0,1.0000000000000000e-300"
        );
        // 17 significant digits round-trip every value.
        for field in row.split(',').skip(2) {
            let x: f64 = field.parse().unwrap();
            assert_eq!(format!("{x:.16e}"), field);
        }
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn single_node_runs_trivially() {
        let c = parse_config(
            r#"{"dimension": 2, "nodes": [{"id": 1, "treatment": "subdiff",
                "function": {"type": "zero"}, "xbar": [1.0, -2.0]}],
                "edges": [], "schedule": {"policy": "round_robin"}, "rounds": 4}"#,
        )
        .unwrap();
        let report = run_experiment(&c, Path::new(".")).unwrap();
        assert_eq!(report.csv.lines().count(), 5);
        assert_eq!(report.summary.empirical_k, Some(0));
        assert!(report.summary.final_gap.abs() < 1e-12);
    }

    #[test]
    fn preset_prox_has_one_row_per_round_and_nonincreasing_gap() {
        let c = preset_paper_sec4(1, Treatment::Proximable);
        let report = run_experiment(&c, Path::new(".")).unwrap();
        let recs = &report.log.records;
        assert_eq!(recs.len(), 1000);
        assert_eq!(report.csv.lines().count(), 1001);
        for w in recs.windows(2) {
            assert!(w[1].duality_gap <= w[0].duality_gap + 1e-9 * w[0].duality_gap.abs().max(1.0));
        }
        assert_eq!(report.summary.empirical_k, Some(19));
    }

    #[test]
    fn per_event_cadence() {
        let mut c = preset_paper_sec4(1, Treatment::Proximable);
        c.rounds = 3;
        c.cadence = CadenceConfig::Event;
        let report = run_experiment(&c, Path::new(".")).unwrap();
        assert_eq!(report.log.records.len(), 57);
        assert_eq!(report.log.records[56].event_count, 57);
    }

    #[test]
    fn exit_codes() {
        let config = ExperimentError::Config(ConfigError::Validation {
            field: "edges".into(),
            message: String::new(),
        });
        assert_eq!(config.exit_code(), 2);
        let io = ExperimentError::Io {
            path: "x".into(),
            source: std::io::Error::other("boom"),
        };
        assert_eq!(io.exit_code(), 4);
        let sim = ExperimentError::Simulation(RunError::InvariantViolation {
            event_index: 1,
            detail: String::new(),
        });
        assert_eq!(sim.exit_code(), 3);
    }
}

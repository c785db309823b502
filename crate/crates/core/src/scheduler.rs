//! Event schedules modelling asynchronous nodes and lossy links, and the
//! simulation loop that drives a [`SimState`] through them.
//!
//! Undelivered broadcasts are never dropped: a failed delivery simply leaves
//! the data in flight until the next successful delivery on that edge.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::GraphTopology;
use crate::metrics::{solve_centralized, MetricsError, MetricsRecord, ReferenceSolution};
use crate::protocol::{ProtocolError, SimState};

/// One step of the protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScheduleEvent {
    /// Operation A on a node.
    Broadcast(usize),
    /// Operation B on edge `(from, to)`.
    Deliver(usize, usize),
    /// Operation C on a node.
    LocalMin(usize),
}

impl fmt::Display for ScheduleEvent {
    /// Trace-file form with 1-based ids: `A i`, `B i j`, `C j`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ScheduleEvent::Broadcast(i) => write!(f, "A {}", i + 1),
            ScheduleEvent::Deliver(i, j) => write!(f, "B {} {}", i + 1, j + 1),
            ScheduleEvent::LocalMin(j) => write!(f, "C {}", j + 1),
        }
    }
}

impl ScheduleEvent {
    pub fn tag(&self) -> char {
        match self {
            ScheduleEvent::Broadcast(_) => 'A',
            ScheduleEvent::Deliver(..) => 'B',
            ScheduleEvent::LocalMin(_) => 'C',
        }
    }

    fn check(&self, topology: &GraphTopology) -> bool {
        match *self {
            ScheduleEvent::Broadcast(i) | ScheduleEvent::LocalMin(i) => {
                topology.check_node(i).is_ok()
            }
            ScheduleEvent::Deliver(i, j) => topology.edge_index(i, j).is_ok(),
        }
    }
}

impl SimState {
    pub fn apply(&mut self, event: &ScheduleEvent) -> Result<(), ProtocolError> {
        match *event {
            ScheduleEvent::Broadcast(i) => self.broadcast(i),
            ScheduleEvent::Deliver(i, j) => self.deliver(i, j),
            ScheduleEvent::LocalMin(j) => self.local_min(j),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("delivery probability must lie in (0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("event weights must be nonnegative with a positive sum, got {0:?}")]
    InvalidWeights([f64; 3]),
    #[error("local-min period must be at least 1")]
    InvalidPeriod,
    #[error("trace line {line}: {message}")]
    TraceParse { line: usize, message: String },
    #[error("trace event `{0}` references a node or edge not in the graph")]
    InvalidEvent(ScheduleEvent),
    #[error("trace exhausted")]
    TraceExhausted,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolicyKind {
    /// Every round each node in ascending order broadcasts, then each of its
    /// out-edges delivers independently with probability `p_deliver`; every
    /// `local_min_every` rounds all nodes then run the dual update.
    RoundRobin {
        p_deliver: f64,
        local_min_every: usize,
    },
    /// Each round samples `events_per_round` events (default `2|V| + |E|`),
    /// the type drawn with `weights` over (A, B, C). A sampled delivery is
    /// lost with probability `1 - p_deliver`.
    RandomEvent {
        weights: [f64; 3],
        p_deliver: f64,
        events_per_round: Option<usize>,
    },
    /// Replays recorded rounds verbatim.
    TraceReplay { rounds: Vec<Vec<ScheduleEvent>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchedulePolicy {
    pub kind: PolicyKind,
    pub seed: u64,
}

impl SchedulePolicy {
    pub fn round_robin(p_deliver: f64, seed: u64) -> Self {
        SchedulePolicy {
            kind: PolicyKind::RoundRobin {
                p_deliver,
                local_min_every: 1,
            },
            seed,
        }
    }
}

fn check_probability(p: f64) -> Result<(), ScheduleError> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(ScheduleError::InvalidProbability(p))
    }
}

/// Stateful event generator for one simulation.
#[derive(Debug, Clone)]
pub struct Scheduler {
    policy: SchedulePolicy,
    topology: GraphTopology,
    // One independent stream per edge for delivery draws.
    edge_streams: Vec<ChaCha8Rng>,
    rng: ChaCha8Rng,
    round: usize,
}

impl Scheduler {
    pub fn new(policy: SchedulePolicy, topology: &GraphTopology) -> Result<Self, ScheduleError> {
        match &policy.kind {
            PolicyKind::RoundRobin {
                p_deliver,
                local_min_every,
            } => {
                check_probability(*p_deliver)?;
                if *local_min_every == 0 {
                    return Err(ScheduleError::InvalidPeriod);
                }
            }
            PolicyKind::RandomEvent {
                weights, p_deliver, ..
            } => {
                check_probability(*p_deliver)?;
                let sum: f64 = weights.iter().sum();
                if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) || !(sum > 0.0) {
                    return Err(ScheduleError::InvalidWeights(*weights));
                }
            }
            PolicyKind::TraceReplay { rounds } => {
                if let Some(bad) = rounds.iter().flatten().find(|e| !e.check(topology)) {
                    return Err(ScheduleError::InvalidEvent(*bad));
                }
            }
        }
        let edge_streams = (0..topology.edge_count())
            .map(|e| {
                let mut rng = ChaCha8Rng::seed_from_u64(policy.seed);
                rng.set_stream(e as u64 + 1);
                rng
            })
            .collect();
        Ok(Scheduler {
            rng: ChaCha8Rng::seed_from_u64(policy.seed),
            policy,
            topology: topology.clone(),
            edge_streams,
            round: 0,
        })
    }

    pub fn policy(&self) -> &SchedulePolicy {
        &self.policy
    }

    /// Events of the next round. Deterministic given the policy seed.
    pub fn generate_round(&mut self) -> Result<Vec<ScheduleEvent>, ScheduleError> {
        self.round += 1;
        let n = self.topology.node_count();
        let mut events = Vec::new();
        match &self.policy.kind {
            PolicyKind::RoundRobin {
                p_deliver,
                local_min_every,
            } => {
                for i in 0..n {
                    events.push(ScheduleEvent::Broadcast(i));
                    for &(j, e) in self.topology.out_edges(i).expect("node in range") {
                        if self.edge_streams[e].gen::<f64>() < *p_deliver {
                            events.push(ScheduleEvent::Deliver(i, j));
                        }
                    }
                }
                if self.round.is_multiple_of(*local_min_every) {
                    events.extend((0..n).map(ScheduleEvent::LocalMin));
                }
            }
            PolicyKind::RandomEvent {
                weights,
                p_deliver,
                events_per_round,
            } => {
                let edges = self.topology.edges();
                let count = events_per_round.unwrap_or(2 * n + edges.len());
                let total: f64 = weights.iter().sum();
                for _ in 0..count {
                    let u = self.rng.gen::<f64>() * total;
                    if u < weights[0] {
                        events.push(ScheduleEvent::Broadcast(self.rng.gen_range(0..n)));
                    } else if u < weights[0] + weights[1] {
                        if edges.is_empty() {
                            continue;
                        }
                        let (i, j) = edges[self.rng.gen_range(0..edges.len())];
                        if self.rng.gen::<f64>() < *p_deliver {
                            events.push(ScheduleEvent::Deliver(i, j));
                        }
                    } else {
                        events.push(ScheduleEvent::LocalMin(self.rng.gen_range(0..n)));
                    }
                }
            }
            PolicyKind::TraceReplay { rounds } => {
                events = rounds
                    .get(self.round - 1)
                    .cloned()
                    .ok_or(ScheduleError::TraceExhausted)?;
            }
        }
        Ok(events)
    }
}

/// Parses a trace file: one event per line (`A i`, `B i j`, `C j`, 1-based).
/// Blank lines and `#` comments are ignored, except that a `# round` comment
/// starts a new round. Without any round markers every event is its own round.
pub fn parse_trace(text: &str) -> Result<Vec<Vec<ScheduleEvent>>, ScheduleError> {
    let mut rounds: Vec<Vec<ScheduleEvent>> = Vec::new();
    let mut marked = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if comment.trim_start().starts_with("round") {
                marked = true;
                rounds.push(Vec::new());
            }
            continue;
        }
        let err = |message: &str| ScheduleError::TraceParse {
            line: idx + 1,
            message: message.to_string(),
        };
        let mut parts = line.split_whitespace();
        let tag = parts.next().unwrap_or_default();
        let ids: Vec<usize> = parts
            .map(|p| p.parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| err("node ids must be positive integers"))?;
        if ids.contains(&0) {
            return Err(err("node ids are 1-based"));
        }
        let event = match (tag, ids.as_slice()) {
            ("A", [i]) => ScheduleEvent::Broadcast(i - 1),
            ("B", [i, j]) => ScheduleEvent::Deliver(i - 1, j - 1),
            ("C", [j]) => ScheduleEvent::LocalMin(j - 1),
            _ => return Err(err("expected `A i`, `B i j` or `C j`")),
        };
        if marked {
            rounds
                .last_mut()
                .expect("marker pushed a round")
                .push(event);
        } else {
            rounds.push(vec![event]);
        }
    }
    Ok(rounds)
}

/// Inverse of [`parse_trace`], with a `# round N` marker before each round.
pub fn format_trace(rounds: &[Vec<ScheduleEvent>]) -> String {
    let mut out = String::new();
    for (r, events) in rounds.iter().enumerate() {
        out.push_str(&format!("# round {}\n", r + 1));
        for e in events {
            out.push_str(&format!("{e}\n"));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Cadence {
    #[default]
    PerRound,
    PerEvent,
}

/// Tolerances for the per-event invariant checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative to `|V|`.
    pub weight: f64,
    /// Absolute.
    pub mass: f64,
    /// Relative to `max(1, |previous value|)`.
    pub monotone: f64,
    /// Slack for `gap >= s_weighted_error`, relative to `1 + |gap|`.
    pub gap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            weight: 1e-12,
            mass: 1e-9,
            monotone: 1e-9,
            gap: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub rounds: usize,
    pub cadence: Cadence,
    /// Check conservation, positivity, monotonicity and the gap bound after
    /// every event, aborting on the first violation.
    pub check_invariants: bool,
    pub tolerances: Tolerances,
}

impl RunOptions {
    pub fn new(rounds: usize) -> Self {
        RunOptions {
            rounds,
            cadence: Cadence::PerRound,
            check_invariants: true,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error("number of rounds must be at least 1")]
    NoRounds,
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("reference solution: {0}")]
    Reference(#[source] MetricsError),
    #[error("event {event_index}: {source}")]
    Protocol {
        event_index: u64,
        #[source]
        source: ProtocolError,
    },
    #[error("event {event_index}: {source}")]
    Metrics {
        event_index: u64,
        #[source]
        source: MetricsError,
    },
    #[error("invariant violated at event {event_index}: {detail}")]
    InvariantViolation { event_index: u64, detail: String },
}

impl RunError {
    pub fn is_invariant_violation(&self) -> bool {
        matches!(self, RunError::InvariantViolation { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsLog {
    pub reference: ReferenceSolution,
    /// Snapshot before any event.
    pub initial: MetricsRecord,
    pub records: Vec<MetricsRecord>,
    /// Every applied event, grouped by round.
    pub rounds: Vec<Vec<ScheduleEvent>>,
}

impl MetricsLog {
    pub fn events(&self) -> impl Iterator<Item = &ScheduleEvent> {
        self.rounds.iter().flatten()
    }

    pub fn last(&self) -> &MetricsRecord {
        self.records.last().unwrap_or(&self.initial)
    }
}

fn check_record(
    state: &SimState,
    rec: &MetricsRecord,
    prev_dual: f64,
    tol: &Tolerances,
) -> Result<(), String> {
    let n = state.topology().node_count() as f64;
    if rec.weight_residual > tol.weight * n {
        return Err(format!(
            "weight conservation residual {:e}",
            rec.weight_residual
        ));
    }
    if !(rec.mass_residual <= tol.mass) {
        return Err(format!(
            "mass conservation residual {:e}",
            rec.mass_residual
        ));
    }
    if let Some((i, node)) = state.nodes().iter().enumerate().find(|(_, n)| !(n.s > 0.0)) {
        return Err(format!(
            "node {} weight {:e} is not positive",
            i + 1,
            node.s
        ));
    }
    for e in 0..state.topology().edge_count() {
        let w = state
            .weight(crate::protocol::Site::Edge(e))
            .unwrap_or(f64::NAN);
        if !(w >= 0.0) {
            return Err(format!("edge {} weight {:e} is negative", e + 1, w));
        }
    }
    if !(rec.dual_surrogate <= prev_dual + tol.monotone * prev_dual.abs().max(1.0)) {
        return Err(format!(
            "dual surrogate increased from {prev_dual:e} to {:e}",
            rec.dual_surrogate
        ));
    }
    if rec.duality_gap < -tol.gap {
        return Err(format!("negative duality gap {:e}", rec.duality_gap));
    }
    if rec.duality_gap < rec.s_weighted_error - tol.gap * (1.0 + rec.duality_gap.abs()) {
        return Err(format!(
            "duality gap {:e} below s-weighted error {:e}",
            rec.duality_gap, rec.s_weighted_error
        ));
    }
    Ok(())
}

/// Runs `options.rounds` rounds and collects the log.
pub fn run(
    state: &mut SimState,
    policy: &SchedulePolicy,
    options: &RunOptions,
) -> Result<MetricsLog, RunError> {
    run_with_sink(state, policy, options, |_| {})
}

/// Like [`run`], also handing every emitted record to `sink` as it is made.
///
/// A trace that runs out of rounds ends the run early without error.
pub fn run_with_sink(
    state: &mut SimState,
    policy: &SchedulePolicy,
    options: &RunOptions,
    mut sink: impl FnMut(&MetricsRecord),
) -> Result<MetricsLog, RunError> {
    if options.rounds == 0 {
        return Err(RunError::NoRounds);
    }
    let mut scheduler = Scheduler::new(policy.clone(), state.topology())?;
    let reference = solve_centralized(state.problem()).map_err(RunError::Reference)?;
    let capture = |state: &SimState, round, event| {
        MetricsRecord::capture(state, &reference, round, event).map_err(|source| {
            RunError::Metrics {
                event_index: state.event_count(),
                source,
            }
        })
    };
    let initial = capture(state, 0, None)?;
    let mut prev_dual = initial.dual_surrogate;
    let mut records = Vec::new();
    let mut rounds = Vec::new();

    for round in 1..=options.rounds {
        let events = match scheduler.generate_round() {
            Ok(events) => events,
            Err(ScheduleError::TraceExhausted) => break,
            Err(e) => return Err(e.into()),
        };
        let per_event = options.cadence == Cadence::PerEvent;
        for event in &events {
            state.apply(event).map_err(|source| RunError::Protocol {
                event_index: state.event_count() + 1,
                source,
            })?;
            if options.check_invariants || per_event {
                let rec = capture(state, round, Some(*event))?;
                if options.check_invariants {
                    check_record(state, &rec, prev_dual, &options.tolerances).map_err(
                        |detail| RunError::InvariantViolation {
                            event_index: state.event_count(),
                            detail,
                        },
                    )?;
                    prev_dual = rec.dual_surrogate;
                }
                if per_event {
                    sink(&rec);
                    records.push(rec);
                }
            }
        }
        if !per_event {
            let rec = capture(state, round, None)?;
            sink(&rec);
            records.push(rec);
        }
        rounds.push(events);
    }
    Ok(MetricsLog {
        reference,
        initial,
        records,
        rounds,
    })
}

/// Empirical delivery window per edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeliveryWindow {
    /// Per edge index: the longest stretch of events without a broadcast of
    /// the sender followed by a delivery on that edge, or `None` if that
    /// never happens.
    pub per_edge: Vec<Option<usize>>,
}

impl DeliveryWindow {
    /// The largest per-edge window, `None` (unbounded) if any edge never
    /// satisfies the pattern.
    pub fn max(&self) -> Option<usize> {
        self.per_edge
            .iter()
            .try_fold(0usize, |acc, w| w.map(|w| acc.max(w)))
    }
}

/// Measures how often each edge sees a broadcast of its sender immediately
/// followed by a delivery on that edge. Deliveries on sibling out-edges of
/// the same sender may sit in between; any other event breaks the pattern.
pub fn check_delivery_window(topology: &GraphTopology, events: &[ScheduleEvent]) -> DeliveryWindow {
    let n = topology.node_count();
    let mut armed = vec![false; n];
    let mut hits: Vec<Vec<usize>> = vec![Vec::new(); topology.edge_count()];
    for (t, event) in events.iter().enumerate() {
        match *event {
            ScheduleEvent::Broadcast(i) => {
                armed.iter_mut().for_each(|a| *a = false);
                armed[i] = true;
            }
            ScheduleEvent::Deliver(i, j) => {
                if armed[i] {
                    if let Ok(e) = topology.edge_index(i, j) {
                        hits[e].push(t);
                    }
                }
                for (k, a) in armed.iter_mut().enumerate() {
                    if k != i {
                        *a = false;
                    }
                }
            }
            ScheduleEvent::LocalMin(_) => armed.iter_mut().for_each(|a| *a = false),
        }
    }
    let len = events.len();
    let per_edge = hits
        .iter()
        .map(|h| {
            let first = *h.first()?;
            let last = *h.last()?;
            let inner = h.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0);
            Some(inner.max(first + 1).max(len - last))
        })
        .collect();
    DeliveryWindow { per_edge }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::two_cycle_edges;

    fn two_cycle() -> GraphTopology {
        GraphTopology::new(6, &two_cycle_edges()).unwrap()
    }

    #[test]
    fn event_display_is_one_based() {
        assert_eq!(ScheduleEvent::Broadcast(0).to_string(), "A 1");
        assert_eq!(ScheduleEvent::Deliver(1, 3).to_string(), "B 2 4");
        assert_eq!(ScheduleEvent::LocalMin(5).to_string(), "C 6");
    }

    #[test]
    fn round_robin_counts() {
        let g = two_cycle();
        let mut s = Scheduler::new(SchedulePolicy::round_robin(1.0, 9), &g).unwrap();
        let round = s.generate_round().unwrap();
        let count = |tag| round.iter().filter(|e| e.tag() == tag).count();
        assert_eq!((count('A'), count('B'), count('C')), (6, 7, 6));
        // Deliveries come right after their sender's broadcast.
        assert_eq!(
            &round[..4],
            &[
                ScheduleEvent::Broadcast(0),
                ScheduleEvent::Deliver(0, 1),
                ScheduleEvent::Broadcast(1),
                ScheduleEvent::Deliver(1, 2),
            ]
        );
    }

    #[test]
    fn round_robin_is_deterministic() {
        let g = two_cycle();
        let gen = |seed| {
            let mut s = Scheduler::new(SchedulePolicy::round_robin(0.8, seed), &g).unwrap();
            (0..50)
                .map(|_| s.generate_round().unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(gen(4), gen(4));
        assert_ne!(gen(4), gen(5));
    }

    #[test]
    fn local_min_period() {
        let g = two_cycle();
        let policy = SchedulePolicy {
            kind: PolicyKind::RoundRobin {
                p_deliver: 1.0,
                local_min_every: 3,
            },
            seed: 0,
        };
        let mut s = Scheduler::new(policy, &g).unwrap();
        let lens: Vec<usize> = (0..6).map(|_| s.generate_round().unwrap().len()).collect();
        assert_eq!(lens, vec![13, 13, 19, 13, 13, 19]);
    }

    #[test]
    fn policy_validation() {
        let g = two_cycle();
        for p in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(
                Scheduler::new(SchedulePolicy::round_robin(p, 0), &g),
                Err(ScheduleError::InvalidProbability(_))
            ));
        }
        let bad_weights = SchedulePolicy {
            kind: PolicyKind::RandomEvent {
                weights: [0.0, 0.0, 0.0],
                p_deliver: 1.0,
                events_per_round: None,
            },
            seed: 0,
        };
        assert!(matches!(
            Scheduler::new(bad_weights, &g),
            Err(ScheduleError::InvalidWeights(_))
        ));
        let bad_trace = SchedulePolicy {
            kind: PolicyKind::TraceReplay {
                rounds: vec![vec![ScheduleEvent::Deliver(0, 2)]],
            },
            seed: 0,
        };
        assert_eq!(
            Scheduler::new(bad_trace, &g).unwrap_err(),
            ScheduleError::InvalidEvent(ScheduleEvent::Deliver(0, 2))
        );
    }

    #[test]
    fn random_event_round_size_and_determinism() {
        let g = two_cycle();
        let policy = SchedulePolicy {
            kind: PolicyKind::RandomEvent {
                weights: [1.0, 1.0, 1.0],
                p_deliver: 1.0,
                events_per_round: None,
            },
            seed: 17,
        };
        let mut a = Scheduler::new(policy.clone(), &g).unwrap();
        let mut b = Scheduler::new(policy, &g).unwrap();
        for _ in 0..20 {
            let ra = a.generate_round().unwrap();
            assert_eq!(ra.len(), 19);
            assert_eq!(ra, b.generate_round().unwrap());
        }
    }

    #[test]
    fn trace_replay_then_exhausted() {
        let g = two_cycle();
        let rounds = vec![
            vec![ScheduleEvent::Broadcast(0)],
            vec![ScheduleEvent::LocalMin(2)],
        ];
        let mut s = Scheduler::new(
            SchedulePolicy {
                kind: PolicyKind::TraceReplay {
                    rounds: rounds.clone(),
                },
                seed: 0,
            },
            &g,
        )
        .unwrap();
        assert_eq!(s.generate_round().unwrap(), rounds[0]);
        assert_eq!(s.generate_round().unwrap(), rounds[1]);
        assert_eq!(
            s.generate_round().unwrap_err(),
            ScheduleError::TraceExhausted
        );
    }

    #[test]
    fn trace_text_round_trip() {
        let rounds = vec![
            vec![ScheduleEvent::Broadcast(0), ScheduleEvent::Deliver(0, 1)],
            vec![],
            vec![ScheduleEvent::LocalMin(5)],
        ];
        let text = format_trace(&rounds);
        assert_eq!(text, "# round 1\nA 1\nB 1 2\n# round 2\n# round 3\nC 6\n");
        assert_eq!(parse_trace(&text).unwrap(), rounds);
    }

    #[test]
    fn trace_without_markers_is_one_event_per_round() {
        let rounds = parse_trace("A 1\n\n# comment\nB 1 2\nC 2\n").unwrap();
        assert_eq!(rounds.len(), 3);
        assert_eq!(rounds[1], vec![ScheduleEvent::Deliver(0, 1)]);
    }

    #[test]
    fn trace_parse_errors() {
        for (text, line) in [
            ("A 1\nX 2\n", 2),
            ("A 0\n", 1),
            ("B 1\n", 1),
            ("C one\n", 1),
        ] {
            match parse_trace(text) {
                Err(ScheduleError::TraceParse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text:?} gave {other:?}"),
            }
        }
    }

    #[test]
    fn window_reliable_round_robin_is_one_round() {
        let g = two_cycle();
        let mut s = Scheduler::new(SchedulePolicy::round_robin(1.0, 1), &g).unwrap();
        let events: Vec<_> = (0..10).flat_map(|_| s.generate_round().unwrap()).collect();
        let w = check_delivery_window(&g, &events);
        assert!(w.per_edge.iter().all(|k| *k == Some(19)));
        assert_eq!(w.max(), Some(19));
    }

    #[test]
    fn window_unbounded_when_edge_never_delivered() {
        let g = GraphTopology::new(2, &[(0, 1), (1, 0)]).unwrap();
        let events = [
            ScheduleEvent::Broadcast(0),
            ScheduleEvent::Deliver(0, 1),
            ScheduleEvent::Broadcast(1),
            ScheduleEvent::LocalMin(0),
            ScheduleEvent::Deliver(1, 0),
        ];
        let w = check_delivery_window(&g, &events);
        assert_eq!(w.per_edge, vec![Some(4), None]);
        assert_eq!(w.max(), None);
    }
}

//! Convergence metrics computed from read-only state snapshots.
//!
//! The dual surrogate is the dual objective in minimization form, with each
//! subdifferentiable node's conjugate replaced by the conjugate of its
//! current affine model. The duality gap is the centralized optimal value
//! minus the dual value at the current iterate; it upper-bounds the
//! weight-scaled squared distance of every tracked estimate to the optimum.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::functions::{FunctionError, Objective, Treatment};
use crate::linalg::{axpy, dist_sq, norm, norm_sq, sub, zeros};
use crate::protocol::{Problem, SimState, Site};
use crate::scheduler::ScheduleEvent;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("conjugate evaluation failed at node {}: {source}", .node + 1)]
    Conjugate {
        node: usize,
        #[source]
        source: FunctionError,
    },
    #[error("objective evaluation failed at node {}: {source}", .node + 1)]
    Objective {
        node: usize,
        #[source]
        source: FunctionError,
    },
    #[error("centralized system is singular")]
    SingularSystem,
}

/// Centralized optimum of `sum_i f_i(x) + 1/2 |x - xbar_i|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub x_star: Vec<f64>,
    /// Optimal value including the constant from the anchors.
    pub primal_value: f64,
}

/// Solves `(sum_i A_i + |V| I) x = sum_i xbar_i - sum_i b_i` directly.
pub fn solve_centralized(problem: &Problem) -> Result<ReferenceSolution, MetricsError> {
    let m = problem.dim();
    let n = problem.node_count() as f64;
    let mut lhs = DMatrix::<f64>::identity(m, m) * n;
    let mut rhs = DVector::<f64>::zeros(m);
    for (spec, xbar) in problem.objectives().iter().zip(problem.xbar()) {
        rhs += DVector::from_column_slice(xbar);
        match &spec.function {
            Objective::Zero { .. } => {}
            Objective::Affine(a) => rhs -= DVector::from_column_slice(&a.gradient),
            Objective::Quadratic(q) => {
                let v = DVector::from_column_slice(q.direction());
                lhs += &v * v.transpose();
                for k in 0..m {
                    lhs[(k, k)] += q.ridge();
                }
                rhs -= DVector::from_column_slice(q.linear());
            }
        }
    }
    let chol = lhs.cholesky().ok_or(MetricsError::SingularSystem)?;
    let x_star: Vec<f64> = chol.solve(&rhs).iter().copied().collect();
    let primal_value = primal_objective(problem, &x_star)?;
    Ok(ReferenceSolution {
        x_star,
        primal_value,
    })
}

/// `sum_i f_i(x) + 1/2 |x - xbar_i|^2`
pub fn primal_objective(problem: &Problem, x: &[f64]) -> Result<f64, MetricsError> {
    problem
        .objectives()
        .iter()
        .zip(problem.xbar())
        .enumerate()
        .map(|(node, (spec, xbar))| {
            let f = spec
                .function
                .eval(x)
                .map_err(|source| MetricsError::Objective { node, source })?;
            Ok(f + 0.5 * dist_sq(x, xbar))
        })
        .sum()
}

/// Norm of `sum_i grad f_i(x) + sum_i (x - xbar_i)`.
pub fn optimality_residual(problem: &Problem, x: &[f64]) -> Result<f64, MetricsError> {
    let mut g = zeros(problem.dim());
    for (node, (spec, xbar)) in problem.objectives().iter().zip(problem.xbar()).enumerate() {
        let grad = spec
            .function
            .subgradient(x)
            .map_err(|source| MetricsError::Objective { node, source })?;
        axpy(1.0, &grad, &mut g);
        axpy(1.0, &sub(x, xbar), &mut g);
    }
    Ok(norm(&g))
}

fn conjugate_sum(state: &SimState) -> Result<f64, MetricsError> {
    let specs = state.problem().objectives();
    state
        .nodes()
        .iter()
        .zip(specs)
        .enumerate()
        .map(|(node, (n, spec))| {
            let value = match (spec.treatment, &n.minorant) {
                (Treatment::Subdifferentiable, Some(model)) => model.conjugate_value(&n.z),
                _ => spec.function.conjugate_value(&n.z),
            };
            match value {
                // A proximable affine node starts at z = 0, outside dom f*.
                Err(FunctionError::OutsideConjugateDomain { .. }) => Ok(f64::INFINITY),
                other => other.map_err(|source| MetricsError::Conjugate { node, source }),
            }
        })
        .sum()
}

/// `sum_alpha (s_alpha / 2) |x_alpha|^2` over sites with positive weight.
fn weighted_square_sum(state: &SimState) -> f64 {
    let nodes: f64 = state
        .nodes()
        .iter()
        .map(|n| 0.5 * n.s * norm_sq(&n.x))
        .sum();
    let edges: f64 = (0..state.topology().edge_count())
        .map(|e| {
            let w = state.weight(Site::Edge(e)).unwrap_or(0.0);
            if w > 0.0 {
                0.5 * norm_sq(&state.edge_mass(e).unwrap_or_default()) / w
            } else {
                0.0
            }
        })
        .sum();
    nodes + edges
}

/// Dual surrogate value at the current iterate (nonincreasing under every
/// protocol operation). It is `+inf` while some `z_i` lies outside the
/// domain of the corresponding conjugate.
pub fn dual_surrogate(state: &SimState) -> Result<f64, MetricsError> {
    Ok(conjugate_sum(state)? + weighted_square_sum(state))
}

/// Centralized optimal value minus the current dual value.
pub fn duality_gap(state: &SimState, reference: &ReferenceSolution) -> Result<f64, MetricsError> {
    let mbar = state.mean_anchor();
    let n = state.topology().node_count() as f64;
    let f_star: f64 = state
        .problem()
        .objectives()
        .iter()
        .enumerate()
        .map(|(node, spec)| {
            spec.function
                .eval(&reference.x_star)
                .map_err(|source| MetricsError::Objective { node, source })
        })
        .sum::<Result<f64, _>>()?;
    let primal = 0.5 * state.total_weight() * dist_sq(&reference.x_star, mbar) + f_star;
    Ok(primal - 0.5 * n * norm_sq(mbar) + dual_surrogate(state)?)
}

/// `sum_alpha (s_alpha / 2) |x_star - x_alpha|^2` over nodes and edges.
pub fn s_weighted_error(state: &SimState, reference: &ReferenceSolution) -> f64 {
    state
        .sites()
        .map(|site| {
            let w = state.weight(site).unwrap_or(0.0);
            if w > 0.0 {
                let x = state.primal_estimate(site).unwrap_or_default();
                0.5 * w * dist_sq(&reference.x_star, &x)
            } else {
                0.0
            }
        })
        .sum()
}

/// Largest pairwise distance between node estimates.
pub fn consensus_residual(state: &SimState) -> f64 {
    let nodes = state.nodes();
    let mut worst = 0.0f64;
    for (a, na) in nodes.iter().enumerate() {
        for nb in &nodes[a + 1..] {
            worst = worst.max(dist_sq(&na.x, &nb.x));
        }
    }
    worst.sqrt()
}

/// `|total weight - |V||`
pub fn weight_residual(state: &SimState) -> f64 {
    (state.total_weight() - state.topology().node_count() as f64).abs()
}

/// `|sum y + in-flight y + sum z - |V| mbar|`
pub fn mass_residual(state: &SimState) -> f64 {
    let n = state.topology().node_count() as f64;
    let expected: Vec<f64> = state.mean_anchor().iter().map(|m| m * n).collect();
    norm(&sub(&state.total_mass(), &expected))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    /// 1-based round index (0 for the initial snapshot).
    pub round: usize,
    /// Operations applied so far.
    pub event_count: u64,
    /// The event that produced this snapshot, when recorded per event.
    pub event: Option<ScheduleEvent>,
    pub dual_surrogate: f64,
    pub duality_gap: f64,
    pub s_weighted_error: f64,
    pub consensus_residual: f64,
    pub weight_residual: f64,
    pub mass_residual: f64,
}

impl MetricsRecord {
    pub fn capture(
        state: &SimState,
        reference: &ReferenceSolution,
        round: usize,
        event: Option<ScheduleEvent>,
    ) -> Result<Self, MetricsError> {
        let dual = dual_surrogate(state)?;
        let gap = duality_gap(state, reference)?;
        Ok(MetricsRecord {
            round,
            event_count: state.event_count(),
            event,
            dual_surrogate: dual,
            duality_gap: gap,
            s_weighted_error: s_weighted_error(state, reference),
            consensus_residual: consensus_residual(state),
            weight_residual: weight_residual(state),
            mass_residual: mass_residual(state),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::functions::{ObjectiveSpec, QuadraticFunction};
    use crate::graph::GraphTopology;

    fn zero_state(xbar: Vec<Vec<f64>>) -> SimState {
        let n = xbar.len();
        let m = xbar[0].len();
        let specs = (0..n)
            .map(|_| ObjectiveSpec::new(Objective::Zero { dim: m }, Treatment::Proximable))
            .collect();
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        let edges = if n == 1 { vec![] } else { edges };
        SimState::initialize(
            Arc::new(GraphTopology::new(n, &edges).unwrap()),
            Arc::new(Problem::new(specs, xbar).unwrap()),
        )
        .unwrap()
    }

    #[test]
    fn centralized_zero_problem_is_mean() {
        let st = zero_state(vec![vec![0.0, 1.0], vec![2.0, 5.0], vec![4.0, 0.0]]);
        let r = solve_centralized(st.problem()).unwrap();
        assert!(dist_sq(&r.x_star, &[2.0, 2.0]).sqrt() < 1e-14);
        assert!(optimality_residual(st.problem(), &r.x_star).unwrap() <= 1e-9);
    }

    #[test]
    fn centralized_single_quadratic() {
        let q = QuadraticFunction::new(vec![0.0], 1.0, vec![0.0], 0.0).unwrap();
        let p = Problem::new(
            vec![ObjectiveSpec::new(
                Objective::Quadratic(q),
                Treatment::Proximable,
            )],
            vec![vec![2.0]],
        )
        .unwrap();
        let r = solve_centralized(&p).unwrap();
        assert!((r.x_star[0] - 1.0).abs() < 1e-15);
        // 1/2 * 1 + 1/2 * 1
        assert!((r.primal_value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn surrogate_two_nodes() {
        let st = zero_state(vec![vec![0.0], vec![2.0]]);
        assert_eq!(dual_surrogate(&st).unwrap(), 2.0);
    }

    #[test]
    fn surrogate_and_gap_at_consensus() {
        let st = zero_state(vec![vec![1.5, -1.0]; 3]);
        let r = solve_centralized(st.problem()).unwrap();
        let d = dual_surrogate(&st).unwrap();
        assert!((d - 1.5 * (2.25 + 1.0)).abs() < 1e-14);
        assert!(duality_gap(&st, &r).unwrap().abs() < 1e-14);
        assert!(s_weighted_error(&st, &r) < 1e-28);
    }

    #[test]
    fn s_weighted_error_two_nodes() {
        let st = zero_state(vec![vec![0.0], vec![2.0]]);
        let r = ReferenceSolution {
            x_star: vec![1.0],
            primal_value: 0.0,
        };
        assert_eq!(s_weighted_error(&st, &r), 1.0);
    }

    #[test]
    fn consensus_residual_examples() {
        assert_eq!(consensus_residual(&zero_state(vec![vec![3.0]])), 0.0);
        assert_eq!(
            consensus_residual(&zero_state(vec![vec![0.0], vec![2.0]])),
            2.0
        );
    }

    #[test]
    fn affine_prox_node_starts_with_infinite_surrogate() {
        use crate::functions::AffineFunction;
        let spec = |a: f64| {
            ObjectiveSpec::new(
                Objective::Affine(AffineFunction::new(vec![a], 0.0)),
                Treatment::Proximable,
            )
        };
        let mut st = SimState::initialize(
            Arc::new(GraphTopology::new(2, &[(0, 1), (1, 0)]).unwrap()),
            Arc::new(Problem::new(vec![spec(1.0), spec(0.0)], vec![vec![0.0], vec![1.0]]).unwrap()),
        )
        .unwrap();
        let r = solve_centralized(st.problem()).unwrap();
        assert_eq!(dual_surrogate(&st).unwrap(), f64::INFINITY);
        assert_eq!(duality_gap(&st, &r).unwrap(), f64::INFINITY);
        st.local_min(0).unwrap();
        assert!(duality_gap(&st, &r).unwrap().is_finite());
    }

    #[test]
    fn residuals_start_at_zero() {
        let st = zero_state(vec![vec![0.3, 1.0], vec![2.0, -5.0], vec![4.0, 0.25]]);
        assert_eq!(weight_residual(&st), 0.0);
        assert!(mass_residual(&st) < 1e-14);
    }
}

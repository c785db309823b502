//! Node and edge state of the asynchronous dual protocol and its three
//! operations: broadcast, delivery, and the dual block update.
//!
//! Every node keeps a mass `y`, a weight `s`, running broadcast sums
//! `sigma_y`/`sigma_s`, its own dual block `z` and the tracked primal
//! estimate `x = y / s`. Every edge keeps only the last-received counters
//! `rho_y`/`rho_s`; the data in flight on `(i, j)` is `sigma_i - rho_(i,j)`.
//! Edge duals never need to be stored.

use std::sync::Arc;

use thiserror::Error;

use crate::functions::{bundle_prox, AffineFunction, FunctionError, ObjectiveSpec, Treatment};
use crate::graph::{GraphError, GraphTopology};
use crate::linalg::{axpy, scale, zeros};

/// Below this weight a node refuses to run the dual update.
pub const MIN_NODE_WEIGHT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("objective error at node {}: {source}", .node + 1)]
    Function {
        node: usize,
        #[source]
        source: FunctionError,
    },
    #[error("node {} weight {weight:e} is below the stability threshold", .node + 1)]
    NumericalInstability { node: usize, weight: f64 },
    #[error("{what} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("edge index {0} does not exist")]
    InvalidEdgeIndex(usize),
    #[error("problem has {problem} nodes but the graph has {graph}")]
    NodeCountMismatch { problem: usize, graph: usize },
}

/// The distributed problem: `min_x sum_i f_i(x) + 1/2 |x - xbar_i|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    dim: usize,
    objectives: Vec<ObjectiveSpec>,
    xbar: Vec<Vec<f64>>,
}

impl Problem {
    pub fn new(objectives: Vec<ObjectiveSpec>, xbar: Vec<Vec<f64>>) -> Result<Self, ProtocolError> {
        if objectives.len() != xbar.len() {
            return Err(ProtocolError::NodeCountMismatch {
                problem: objectives.len(),
                graph: xbar.len(),
            });
        }
        let dim = xbar.first().map_or(0, Vec::len);
        for (i, (f, x)) in objectives.iter().zip(&xbar).enumerate() {
            for (what, found) in [("objective", f.dim()), ("xbar", x.len())] {
                if found != dim {
                    return Err(ProtocolError::DimensionMismatch {
                        what: format!("{what} of node {}", i + 1),
                        expected: dim,
                        found,
                    });
                }
            }
        }
        Ok(Problem {
            dim,
            objectives,
            xbar,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node_count(&self) -> usize {
        self.objectives.len()
    }

    pub fn objectives(&self) -> &[ObjectiveSpec] {
        &self.objectives
    }

    pub fn xbar(&self) -> &[Vec<f64>] {
        &self.xbar
    }

    /// Average anchor `mbar = mean_i xbar_i`.
    pub fn mean_anchor(&self) -> Vec<f64> {
        let mut m = zeros(self.dim);
        for x in &self.xbar {
            axpy(1.0, x, &mut m);
        }
        scale(&m, 1.0 / self.node_count() as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub y: Vec<f64>,
    pub s: f64,
    pub sigma_y: Vec<f64>,
    pub sigma_s: f64,
    pub z: Vec<f64>,
    pub x: Vec<f64>,
    /// Current affine model `f_i^k`; present only for subdifferentiable nodes.
    pub minorant: Option<AffineFunction>,
}

impl NodeState {
    fn refresh_x(&mut self) {
        self.x = scale(&self.y, 1.0 / self.s);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeChannelState {
    pub rho_y: Vec<f64>,
    pub rho_s: f64,
}

/// Either a node or an edge, the two kinds of primal-tracking entities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Site {
    Node(usize),
    /// Edge by index into [`GraphTopology::edges`].
    Edge(usize),
}

#[derive(Debug, Clone)]
pub struct SimState {
    topology: Arc<GraphTopology>,
    problem: Arc<Problem>,
    mean_anchor: Vec<f64>,
    nodes: Vec<NodeState>,
    edges: Vec<EdgeChannelState>,
    events: u64,
}

impl SimState {
    /// Initial state: `y_i = xbar_i`, `s_i = 1`, counters zeroed. A
    /// subdifferentiable node starts from its tangent at `xbar_i`, with `z_i`
    /// set to that tangent's slope and `y_i` shifted down by `z_i`.
    pub fn initialize(
        topology: Arc<GraphTopology>,
        problem: Arc<Problem>,
    ) -> Result<Self, ProtocolError> {
        if topology.node_count() != problem.node_count() {
            return Err(ProtocolError::NodeCountMismatch {
                problem: problem.node_count(),
                graph: topology.node_count(),
            });
        }
        let m = problem.dim();
        let nodes = problem
            .objectives()
            .iter()
            .zip(problem.xbar())
            .enumerate()
            .map(|(i, (spec, xbar))| {
                let mut node = NodeState {
                    y: xbar.clone(),
                    s: 1.0,
                    sigma_y: zeros(m),
                    sigma_s: 0.0,
                    z: zeros(m),
                    x: xbar.clone(),
                    minorant: None,
                };
                if spec.treatment == Treatment::Subdifferentiable {
                    let tangent = spec
                        .function
                        .tangent_at(xbar)
                        .map_err(|source| ProtocolError::Function { node: i, source })?;
                    node.z = tangent.gradient.clone();
                    axpy(-1.0, &node.z, &mut node.y);
                    node.refresh_x();
                    node.minorant = Some(tangent);
                }
                Ok(node)
            })
            .collect::<Result<Vec<_>, ProtocolError>>()?;
        let edges = vec![
            EdgeChannelState {
                rho_y: zeros(m),
                rho_s: 0.0,
            };
            topology.edge_count()
        ];
        Ok(SimState {
            mean_anchor: problem.mean_anchor(),
            topology,
            problem,
            nodes,
            edges,
            events: 0,
        })
    }

    pub fn topology(&self) -> &GraphTopology {
        &self.topology
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn mean_anchor(&self) -> &[f64] {
        &self.mean_anchor
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> Result<&NodeState, ProtocolError> {
        self.topology.check_node(i)?;
        Ok(&self.nodes[i])
    }

    pub fn channels(&self) -> &[EdgeChannelState] {
        &self.edges
    }

    /// Number of operations applied so far.
    pub fn event_count(&self) -> u64 {
        self.events
    }

    /// Operation A: node `i` splits its mass and weight evenly between
    /// itself and its out-edges, adding the share to its broadcast sums.
    pub fn broadcast(&mut self, i: usize) -> Result<(), ProtocolError> {
        let parts = (self.topology.out_degree(i)? + 1) as f64;
        let node = &mut self.nodes[i];
        for y in &mut node.y {
            *y /= parts;
        }
        node.s /= parts;
        axpy(1.0, &node.y.clone(), &mut node.sigma_y);
        node.sigma_s += node.s;
        node.refresh_x();
        self.events += 1;
        Ok(())
    }

    /// Operation B: `to` absorbs everything `from` has broadcast since the
    /// last successful delivery on this edge.
    pub fn deliver(&mut self, from: usize, to: usize) -> Result<(), ProtocolError> {
        let e = self.topology.edge_index(from, to)?;
        let (sigma_y, sigma_s) = {
            let sender = &self.nodes[from];
            (sender.sigma_y.clone(), sender.sigma_s)
        };
        let channel = &mut self.edges[e];
        let receiver = &mut self.nodes[to];
        for ((y, sig), rho) in receiver.y.iter_mut().zip(&sigma_y).zip(&channel.rho_y) {
            *y += sig - rho;
        }
        receiver.s += sigma_s - channel.rho_s;
        channel.rho_y = sigma_y;
        channel.rho_s = sigma_s;
        receiver.refresh_x();
        self.events += 1;
        Ok(())
    }

    /// Operation C: dual block minimization at node `j`.
    ///
    /// The prox center is `(y_j + z_j) / s_j`. Proximable nodes take an
    /// exact prox step; subdifferentiable nodes take the two-piece step on
    /// their current model and the tangent at the current estimate. Both
    /// leave `y_j = s_j x_j`.
    pub fn local_min(&mut self, j: usize) -> Result<(), ProtocolError> {
        self.topology.check_node(j)?;
        let spec = &self.problem.objectives()[j];
        let node = &mut self.nodes[j];
        if !(node.s >= MIN_NODE_WEIGHT) {
            return Err(ProtocolError::NumericalInstability {
                node: j,
                weight: node.s,
            });
        }
        let s = node.s;
        let center: Vec<f64> = node
            .y
            .iter()
            .zip(&node.z)
            .map(|(y, z)| (y + z) / s)
            .collect();
        let wrap = |source| ProtocolError::Function { node: j, source };
        match spec.treatment {
            Treatment::Proximable => {
                let p = spec.function.prox(s, &center).map_err(wrap)?;
                node.x = p.x;
                node.z = p.z;
            }
            Treatment::Subdifferentiable => {
                let tangent = spec.function.tangent_at(&node.x).map_err(wrap)?;
                let model = node
                    .minorant
                    .as_ref()
                    .expect("subdifferentiable node without a minorant");
                let step = bundle_prox(model, &tangent, s, &center).map_err(wrap)?;
                node.x = step.x;
                node.z = step.z;
                node.minorant = Some(step.model);
            }
        }
        node.y = scale(&node.x, s);
        self.events += 1;
        Ok(())
    }

    /// Weight of a node, or of an edge (its in-flight weight).
    pub fn weight(&self, site: Site) -> Result<f64, ProtocolError> {
        match site {
            Site::Node(i) => Ok(self.node(i)?.s),
            Site::Edge(e) => {
                let (from, _) = self.edge_endpoints(e)?;
                Ok(self.nodes[from].sigma_s - self.edges[e].rho_s)
            }
        }
    }

    /// In-flight mass `sigma_y(from) - rho_y` on edge `e`.
    pub fn edge_mass(&self, e: usize) -> Result<Vec<f64>, ProtocolError> {
        let (from, _) = self.edge_endpoints(e)?;
        Ok(self.nodes[from]
            .sigma_y
            .iter()
            .zip(&self.edges[e].rho_y)
            .map(|(a, b)| a - b)
            .collect())
    }

    /// Tracked primal value `x_alpha = y_alpha / s_alpha`. A drained edge
    /// (zero in-flight weight) reports its sender's estimate.
    pub fn primal_estimate(&self, site: Site) -> Result<Vec<f64>, ProtocolError> {
        match site {
            Site::Node(i) => Ok(self.node(i)?.x.clone()),
            Site::Edge(e) => {
                let (from, _) = self.edge_endpoints(e)?;
                let w = self.weight(site)?;
                if w > 0.0 {
                    Ok(scale(&self.edge_mass(e)?, 1.0 / w))
                } else {
                    Ok(self.nodes[from].x.clone())
                }
            }
        }
    }

    fn edge_endpoints(&self, e: usize) -> Result<(usize, usize), ProtocolError> {
        self.topology
            .edge(e)
            .ok_or(ProtocolError::InvalidEdgeIndex(e))
    }

    /// All sites: nodes first, then edges in index order.
    pub fn sites(&self) -> impl Iterator<Item = Site> {
        (0..self.nodes.len())
            .map(Site::Node)
            .chain((0..self.edges.len()).map(Site::Edge))
    }

    /// `sum_nodes s_i + sum_edges (sigma_s - rho_s)`, which stays `|V|`.
    pub fn total_weight(&self) -> f64 {
        let nodes: f64 = self.nodes.iter().map(|n| n.s).sum();
        let edges: f64 = self
            .topology
            .edges()
            .iter()
            .zip(&self.edges)
            .map(|(&(from, _), ch)| self.nodes[from].sigma_s - ch.rho_s)
            .sum();
        nodes + edges
    }

    /// `sum y_nodes + sum in-flight y + sum z_nodes`, which stays `|V| mbar`.
    pub fn total_mass(&self) -> Vec<f64> {
        let mut total = zeros(self.problem.dim());
        for n in &self.nodes {
            axpy(1.0, &n.y, &mut total);
            axpy(1.0, &n.z, &mut total);
        }
        for (&(from, _), ch) in self.topology.edges().iter().zip(&self.edges) {
            axpy(1.0, &self.nodes[from].sigma_y, &mut total);
            axpy(-1.0, &ch.rho_y, &mut total);
        }
        total
    }
}

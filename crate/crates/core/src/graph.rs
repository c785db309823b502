//! Directed communication topology.
//!
//! Node indices are 0-based inside the library. Every user-facing message
//! (errors, trace files, config files) labels nodes 1-based.

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("graph must have at least one node")]
    Empty,
    #[error("edge ({}, {}) is a self-loop", .0 + 1, .0 + 1)]
    SelfLoop(usize),
    #[error("edge ({}, {}) appears more than once", .0 + 1, .1 + 1)]
    DuplicateEdge(usize, usize),
    #[error("edge ({}, {}) references a node outside 1..={node_count}", .from + 1, .to + 1)]
    InvalidEndpoint {
        from: usize,
        to: usize,
        node_count: usize,
    },
    #[error("graph is not strongly connected: node {} cannot {direction} node 1", .node + 1)]
    NotStronglyConnected {
        node: usize,
        direction: &'static str,
    },
    #[error("node {} does not exist", .0 + 1)]
    InvalidNode(usize),
    #[error("edge ({}, {}) does not exist", .0 + 1, .1 + 1)]
    InvalidEdge(usize, usize),
}

/// Validated, immutable directed graph `G = (V, E)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphTopology {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    // Per node, (target, edge index) sorted by target.
    out_adj: Vec<Vec<(usize, usize)>>,
    edge_lookup: HashMap<(usize, usize), usize>,
}

impl GraphTopology {
    /// Builds a topology from 0-based edge pairs and checks that it is
    /// strongly connected.
    pub fn new(node_count: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        if node_count == 0 {
            return Err(GraphError::Empty);
        }
        let mut out_adj = vec![Vec::new(); node_count];
        let mut edge_lookup = HashMap::with_capacity(edges.len());
        for (idx, &(from, to)) in edges.iter().enumerate() {
            if from >= node_count || to >= node_count {
                return Err(GraphError::InvalidEndpoint {
                    from,
                    to,
                    node_count,
                });
            }
            if from == to {
                return Err(GraphError::SelfLoop(from));
            }
            if edge_lookup.insert((from, to), idx).is_some() {
                return Err(GraphError::DuplicateEdge(from, to));
            }
            out_adj[from].push((to, idx));
        }
        for adj in &mut out_adj {
            adj.sort_unstable();
        }
        let topo = GraphTopology {
            node_count,
            edges: edges.to_vec(),
            out_adj,
            edge_lookup,
        };
        topo.check_strongly_connected()?;
        Ok(topo)
    }

    fn check_strongly_connected(&self) -> Result<(), GraphError> {
        let forward = reachable_from(self.node_count, 0, self.edges.iter().copied());
        if let Some(node) = forward.iter().position(|r| !r) {
            return Err(GraphError::NotStronglyConnected {
                node,
                direction: "be reached from",
            });
        }
        let reverse = reachable_from(self.node_count, 0, self.edges.iter().map(|&(a, b)| (b, a)));
        if let Some(node) = reverse.iter().position(|r| !r) {
            return Err(GraphError::NotStronglyConnected {
                node,
                direction: "reach",
            });
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in construction order; the position is the edge index.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, idx: usize) -> Option<(usize, usize)> {
        self.edges.get(idx).copied()
    }

    pub fn edge_index(&self, from: usize, to: usize) -> Result<usize, GraphError> {
        self.edge_lookup
            .get(&(from, to))
            .copied()
            .ok_or(GraphError::InvalidEdge(from, to))
    }

    /// Out-neighbors of `i` in ascending order.
    pub fn out_neighbors(&self, i: usize) -> Result<Vec<usize>, GraphError> {
        self.check_node(i)?;
        Ok(self.out_adj[i].iter().map(|&(j, _)| j).collect())
    }

    /// `(target, edge index)` pairs for the out-edges of `i`, ascending by target.
    pub fn out_edges(&self, i: usize) -> Result<&[(usize, usize)], GraphError> {
        self.check_node(i)?;
        Ok(&self.out_adj[i])
    }

    pub fn out_degree(&self, i: usize) -> Result<usize, GraphError> {
        self.check_node(i)?;
        Ok(self.out_adj[i].len())
    }

    pub fn check_node(&self, i: usize) -> Result<(), GraphError> {
        if i < self.node_count {
            Ok(())
        } else {
            Err(GraphError::InvalidNode(i))
        }
    }
}

fn reachable_from(
    n: usize,
    start: usize,
    edges: impl Iterator<Item = (usize, usize)>,
) -> Vec<bool> {
    let mut adj = vec![Vec::new(); n];
    for (a, b) in edges {
        adj[a].push(b);
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen
}

/// Edge list of the six-node, two-cycle test network (`1→2→3→5→1` and
/// `2→4→6→2`), 0-based.
pub fn two_cycle_edges() -> Vec<(usize, usize)> {
    vec![(0, 1), (1, 2), (2, 4), (4, 0), (1, 3), (3, 5), (5, 1)]
}

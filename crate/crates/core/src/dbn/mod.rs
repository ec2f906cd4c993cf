//! Dynamic-Bayesian-network templates and ancestral sampling.
//!
//! A template describes one time slice: a discrete state node, discrete
//! input nodes, and continuous observation nodes, connected by intra-slice
//! (lag 0) and inter-slice (lag 1 or 2) edges. Discrete nodes carry
//! conditional multinomial tables, observation nodes conditional diagonal
//! Gaussians, one row per configuration of the node's discrete parents.
//!
//! At the first slices an inter-slice parent may not exist yet; its value is
//! then drawn uniformly, which samples from the parent-marginalized
//! conditional.

mod cases;
mod random;
mod sample;

pub use cases::{build_case_spec, CaseId, CaseOverrides};
pub use random::random_cpds;
pub use sample::sample_dataset;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hmm::ROW_SUM_TOL;

/// Maximum inter-slice edge lag supported by the sampler.
pub const MAX_LAG: usize = 2;

/// One node of the slice template.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeId {
    State,
    Input(usize),
    Obs(usize),
}

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NodeId::State => write!(f, "state"),
            NodeId::Input(i) => write!(f, "input{i}"),
            NodeId::Obs(i) => write!(f, "obs{i}"),
        }
    }
}

/// Directed edge `from[t - lag] -> to[t]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub lag: usize,
}

/// Conditional multinomial table: `table[config]` is the distribution over
/// the node's values given the parent configuration `config` (mixed-radix
/// index over the canonical parent order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteCpd {
    pub table: Vec<Vec<f64>>,
}

/// Conditional Gaussian per parent configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianCpdRow {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianCpd {
    pub table: Vec<GaussianCpdRow>,
}

/// All conditional distributions of a template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpdSet {
    pub state: DiscreteCpd,
    pub inputs: Vec<DiscreteCpd>,
    pub obs: Vec<GaussianCpd>,
}

/// A time-unrolled network template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DbnSpec {
    pub label: String,
    /// Number of state values (Ns).
    pub state_cardinality: usize,
    /// Cardinality of each input node (Nu_i).
    pub input_cardinalities: Vec<usize>,
    /// Dimension of each observation node; dataset dimension is their sum.
    pub obs_dims: Vec<usize>,
    pub edges: Vec<Edge>,
    /// Sequence length (T).
    pub t_len: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cpds: Option<CpdSet>,
}

impl DbnSpec {
    /// Total observation dimension per time step.
    pub fn obs_dim(&self) -> usize {
        self.obs_dims.iter().sum()
    }

    pub fn num_inputs(&self) -> usize {
        self.input_cardinalities.len()
    }

    /// Cardinality of a discrete node.
    pub fn cardinality(&self, node: NodeId) -> Result<usize> {
        match node {
            NodeId::State => Ok(self.state_cardinality),
            NodeId::Input(i) => self
                .input_cardinalities
                .get(i)
                .copied()
                .ok_or_else(|| self.node_error(node, "no such input node")),
            NodeId::Obs(_) => Err(self.node_error(node, "observation nodes are not discrete")),
        }
    }

    fn node_error(&self, node: NodeId, detail: impl Into<String>) -> Error {
        Error::SpecValidation {
            node: node.to_string(),
            detail: detail.into(),
        }
    }

    /// Parents of `node` in canonical order: ascending lag, then node id.
    /// CPD configuration indices are mixed-radix over this order.
    pub fn parents(&self, node: NodeId) -> Vec<(NodeId, usize)> {
        let mut parents: Vec<(NodeId, usize)> = self
            .edges
            .iter()
            .filter(|e| e.to == node)
            .map(|e| (e.from, e.lag))
            .collect();
        parents.sort_by_key(|&(from, lag)| (lag, from));
        parents
    }

    /// Number of parent configurations of `node`.
    pub fn config_count(&self, node: NodeId) -> Result<usize> {
        let mut count = 1usize;
        for (parent, _) in self.parents(node) {
            count *= self.cardinality(parent)?;
        }
        Ok(count)
    }

    /// Mixed-radix configuration index for concrete parent values.
    pub fn config_index(&self, node: NodeId, values: &[usize]) -> Result<usize> {
        let parents = self.parents(node);
        if values.len() != parents.len() {
            return Err(self.node_error(node, "parent value count mismatch"));
        }
        let mut index = 0usize;
        for (&v, &(parent, _)) in values.iter().zip(&parents) {
            let card = self.cardinality(parent)?;
            if v >= card {
                return Err(self.node_error(node, format!("parent value {v} out of range")));
            }
            index = index * card + v;
        }
        Ok(index)
    }

    /// All nodes of one slice, inputs first, then state, then observations.
    pub fn nodes(&self) -> Vec<NodeId> {
        let mut nodes: Vec<NodeId> = (0..self.num_inputs()).map(NodeId::Input).collect();
        nodes.push(NodeId::State);
        nodes.extend((0..self.obs_dims.len()).map(NodeId::Obs));
        nodes
    }

    /// Topological order of one slice under the intra-slice edges.
    pub fn topo_order(&self) -> Result<Vec<NodeId>> {
        let nodes = self.nodes();
        let mut order = Vec::with_capacity(nodes.len());
        let mut placed: Vec<bool> = vec![false; nodes.len()];
        let idx_of = |n: NodeId| nodes.iter().position(|&x| x == n).unwrap();
        while order.len() < nodes.len() {
            let mut advanced = false;
            for (i, &node) in nodes.iter().enumerate() {
                if placed[i] {
                    continue;
                }
                let ready = self
                    .edges
                    .iter()
                    .filter(|e| e.to == node && e.lag == 0)
                    .all(|e| placed[idx_of(e.from)]);
                if ready {
                    placed[i] = true;
                    order.push(node);
                    advanced = true;
                }
            }
            if !advanced {
                return Err(Error::SpecValidation {
                    node: "graph".into(),
                    detail: "intra-slice edges contain a cycle".into(),
                });
            }
        }
        Ok(order)
    }

    /// Check the template: positive cardinalities, edges between existing
    /// nodes with lag at most 2, observation nodes without children, an
    /// acyclic slice, and (when present) CPD tables covering every parent
    /// configuration.
    pub fn validate(&self) -> Result<()> {
        if self.state_cardinality == 0 {
            return Err(self.node_error(NodeId::State, "state cardinality must be positive"));
        }
        if self.t_len == 0 {
            return Err(Error::SpecValidation {
                node: "graph".into(),
                detail: "sequence length must be positive".into(),
            });
        }
        if self.obs_dims.is_empty() || self.obs_dims.iter().any(|&d| d == 0) {
            return Err(Error::SpecValidation {
                node: "graph".into(),
                detail: "need at least one observation node with positive dimension".into(),
            });
        }
        if self.input_cardinalities.iter().any(|&c| c == 0) {
            return Err(Error::SpecValidation {
                node: "graph".into(),
                detail: "input cardinalities must be positive".into(),
            });
        }
        for e in &self.edges {
            if e.lag > MAX_LAG {
                return Err(self.node_error(e.to, format!("edge lag {} exceeds {MAX_LAG}", e.lag)));
            }
            if matches!(e.from, NodeId::Obs(_)) {
                return Err(self.node_error(e.from, "observation nodes cannot have children"));
            }
            if e.lag == 0 && e.from == e.to {
                return Err(self.node_error(e.to, "self-edge within a slice"));
            }
            for node in [e.from, e.to] {
                let exists = match node {
                    NodeId::State => true,
                    NodeId::Input(i) => i < self.num_inputs(),
                    NodeId::Obs(i) => i < self.obs_dims.len(),
                };
                if !exists {
                    return Err(self.node_error(node, "edge references a missing node"));
                }
            }
        }
        self.topo_order()?;

        if let Some(cpds) = &self.cpds {
            if cpds.inputs.len() != self.num_inputs() {
                return Err(Error::SpecValidation {
                    node: "inputs".into(),
                    detail: format!(
                        "{} input CPDs for {} input nodes",
                        cpds.inputs.len(),
                        self.num_inputs()
                    ),
                });
            }
            if cpds.obs.len() != self.obs_dims.len() {
                return Err(Error::SpecValidation {
                    node: "observations".into(),
                    detail: format!(
                        "{} observation CPDs for {} observation nodes",
                        cpds.obs.len(),
                        self.obs_dims.len()
                    ),
                });
            }
            self.check_discrete_cpd(NodeId::State, &cpds.state)?;
            for (i, cpd) in cpds.inputs.iter().enumerate() {
                self.check_discrete_cpd(NodeId::Input(i), cpd)?;
            }
            for (i, cpd) in cpds.obs.iter().enumerate() {
                let node = NodeId::Obs(i);
                let configs = self.config_count(node)?;
                if cpd.table.len() != configs {
                    return Err(self.node_error(
                        node,
                        format!(
                            "{} CPD rows for {configs} parent configurations",
                            cpd.table.len()
                        ),
                    ));
                }
                for (c, row) in cpd.table.iter().enumerate() {
                    if row.mean.len() != self.obs_dims[i] || row.var.len() != self.obs_dims[i] {
                        return Err(
                            self.node_error(node, format!("configuration {c} has wrong dimension"))
                        );
                    }
                    if row.var.iter().any(|&v| !(v > 0.0)) {
                        return Err(self.node_error(
                            node,
                            format!("configuration {c} has non-positive variance"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    fn check_discrete_cpd(&self, node: NodeId, cpd: &DiscreteCpd) -> Result<()> {
        let configs = self.config_count(node)?;
        let card = self.cardinality(node)?;
        if cpd.table.len() != configs {
            return Err(self.node_error(
                node,
                format!(
                    "{} CPD rows for {configs} parent configurations",
                    cpd.table.len()
                ),
            ));
        }
        for (c, row) in cpd.table.iter().enumerate() {
            if row.len() != card {
                return Err(self.node_error(
                    node,
                    format!(
                        "configuration {c} has {} entries for cardinality {card}",
                        row.len()
                    ),
                ));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL
                || row.iter().any(|&p| !(0.0..=1.0 + 1e-12).contains(&p))
            {
                return Err(
                    self.node_error(node, format!("configuration {c} is not a distribution"))
                );
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_parents_are_canonically_ordered() {
        let spec = build_case_spec(CaseId::Iii, &CaseOverrides::default()).unwrap();
        // Obs 0 parents: state at lag 0, then state at lag 1.
        assert_eq!(
            spec.parents(NodeId::Obs(0)),
            vec![(NodeId::State, 0), (NodeId::State, 1)]
        );
    }

    #[test]
    fn topo_order_puts_inputs_before_state_before_obs() {
        let spec = build_case_spec(CaseId::I, &CaseOverrides::default()).unwrap();
        let order = spec.topo_order().unwrap();
        let pos = |n: NodeId| order.iter().position(|&x| x == n).unwrap();
        assert!(pos(NodeId::Input(0)) < pos(NodeId::State));
        assert!(pos(NodeId::Input(1)) < pos(NodeId::State));
        assert!(pos(NodeId::State) < pos(NodeId::Obs(0)));
    }

    #[test]
    fn cyclic_slice_is_rejected() {
        let mut spec = build_case_spec(CaseId::I, &CaseOverrides::default()).unwrap();
        spec.edges.push(Edge {
            from: NodeId::State,
            to: NodeId::Input(0),
            lag: 0,
        });
        assert!(matches!(spec.validate(), Err(Error::SpecValidation { .. })));
    }

    #[test]
    fn bad_lag_rejected() {
        let mut spec = build_case_spec(CaseId::Ii, &CaseOverrides::default()).unwrap();
        spec.edges.push(Edge {
            from: NodeId::State,
            to: NodeId::State,
            lag: 3,
        });
        assert!(spec.validate().is_err());
    }

    #[test]
    fn missing_cpd_rows_are_named() {
        let mut spec = build_case_spec(CaseId::Ii, &CaseOverrides::default()).unwrap();
        let mut cpds = random_cpds(&spec, 1, 1.0).unwrap();
        cpds.state.table.pop();
        spec.cpds = Some(cpds);
        let err = spec.validate().unwrap_err();
        assert!(err.to_string().contains("state"), "{err}");
    }

    #[test]
    fn config_index_is_mixed_radix() {
        let spec = build_case_spec(CaseId::I, &CaseOverrides::default()).unwrap();
        // State parents: u0 (card 2), u1 (card 2) at lag 0, then state (card 3) at lag 1.
        assert_eq!(spec.config_count(NodeId::State).unwrap(), 12);
        assert_eq!(spec.config_index(NodeId::State, &[0, 0, 0]).unwrap(), 0);
        assert_eq!(spec.config_index(NodeId::State, &[0, 0, 2]).unwrap(), 2);
        assert_eq!(spec.config_index(NodeId::State, &[0, 1, 0]).unwrap(), 3);
        assert_eq!(spec.config_index(NodeId::State, &[1, 0, 0]).unwrap(), 6);
        assert!(spec.config_index(NodeId::State, &[2, 0, 0]).is_err());
    }
}

//! The four benchmark network topologies.

use serde::{Deserialize, Serialize};

use super::{DbnSpec, Edge, NodeId};
use crate::error::{Error, Result};

/// Identifier of one of the four benchmark topologies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseId {
    I,
    Ii,
    Iii,
    Iv,
}

impl std::fmt::Display for CaseId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CaseId::I => "I",
            CaseId::Ii => "II",
            CaseId::Iii => "III",
            CaseId::Iv => "IV",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for CaseId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(CaseId::I),
            "II" | "2" => Ok(CaseId::Ii),
            "III" | "3" => Ok(CaseId::Iii),
            "IV" | "4" => Ok(CaseId::Iv),
            other => Err(Error::invalid(format!(
                "unknown case {other:?}; valid cases are I, II, III, IV"
            ))),
        }
    }
}

/// Optional replacements for a case's default sizes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseOverrides {
    /// Sequence length.
    pub t: Option<usize>,
    /// Number of observation nodes (each one-dimensional).
    pub d: Option<usize>,
    /// State cardinality.
    pub ns: Option<usize>,
    /// Cardinality applied to every input node.
    pub nu: Option<usize>,
}

impl CaseOverrides {
    fn check(&self) -> Result<()> {
        for (name, v) in [
            ("t", self.t),
            ("d", self.d),
            ("ns", self.ns),
            ("nu", self.nu),
        ] {
            if v == Some(0) {
                return Err(Error::invalid(format!("override {name} must be positive")));
            }
        }
        Ok(())
    }
}

/// Build one of the four benchmark topologies, with its published default
/// sizes unless overridden. CPDs are not attached; see
/// [`random_cpds`](super::random_cpds).
pub fn build_case_spec(case: CaseId, overrides: &CaseOverrides) -> Result<DbnSpec> {
    overrides.check()?;

    let (default_ns, num_inputs, default_t) = match case {
        CaseId::I => (3, 2, 50),
        CaseId::Ii => (4, 1, 20),
        CaseId::Iii => (4, 1, 10),
        CaseId::Iv => (4, 1, 20),
    };
    let default_d = if case == CaseId::I { 2 } else { 1 };

    let ns = overrides.ns.unwrap_or(default_ns);
    let nu = overrides.nu.unwrap_or(2);
    let t_len = overrides.t.unwrap_or(default_t);
    let d = overrides.d.unwrap_or(default_d);

    let mut edges = Vec::new();
    // Shared backbone: the state chain.
    edges.push(Edge {
        from: NodeId::State,
        to: NodeId::State,
        lag: 1,
    });
    match case {
        CaseId::I => {
            // Two independent per-slice inputs drive the state; the state
            // drives every observation.
            for u in 0..num_inputs {
                edges.push(Edge {
                    from: NodeId::Input(u),
                    to: NodeId::State,
                    lag: 0,
                });
            }
            for j in 0..d {
                edges.push(Edge {
                    from: NodeId::State,
                    to: NodeId::Obs(j),
                    lag: 0,
                });
            }
        }
        CaseId::Ii | CaseId::Iv => {
            // The input persists across time and drives both the state and
            // the observation.
            edges.push(Edge {
                from: NodeId::Input(0),
                to: NodeId::Input(0),
                lag: 1,
            });
            edges.push(Edge {
                from: NodeId::Input(0),
                to: NodeId::State,
                lag: 0,
            });
            for j in 0..d {
                edges.push(Edge {
                    from: NodeId::Input(0),
                    to: NodeId::Obs(j),
                    lag: 0,
                });
                edges.push(Edge {
                    from: NodeId::State,
                    to: NodeId::Obs(j),
                    lag: 0,
                });
            }
            if case == CaseId::Iv {
                edges.push(Edge {
                    from: NodeId::State,
                    to: NodeId::State,
                    lag: 2,
                });
            }
        }
        CaseId::Iii => {
            // The input persists and also reaches the next state; the state
            // reaches both the current and the next observation.
            edges.push(Edge {
                from: NodeId::Input(0),
                to: NodeId::Input(0),
                lag: 1,
            });
            edges.push(Edge {
                from: NodeId::Input(0),
                to: NodeId::State,
                lag: 0,
            });
            edges.push(Edge {
                from: NodeId::Input(0),
                to: NodeId::State,
                lag: 1,
            });
            for j in 0..d {
                edges.push(Edge {
                    from: NodeId::State,
                    to: NodeId::Obs(j),
                    lag: 0,
                });
                edges.push(Edge {
                    from: NodeId::State,
                    to: NodeId::Obs(j),
                    lag: 1,
                });
            }
        }
    }

    let spec = DbnSpec {
        label: format!("case-{}", case.to_string().to_ascii_lowercase()),
        state_cardinality: ns,
        input_cardinalities: vec![nu; num_inputs],
        obs_dims: vec![1; d],
        edges,
        t_len,
        cpds: None,
    };
    spec.validate()?;
    Ok(spec)
}

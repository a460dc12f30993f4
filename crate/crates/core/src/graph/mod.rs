//! Causal graph model, copy-on-write edits and the model tree.
//!
//! A [`CausalModel`] mixes directed and undirected edges; its directed part
//! is always acyclic. Edits never mutate their input: each returns a new
//! model, so earlier versions stay valid snapshots.

mod dot;
mod edit;
mod tree;

pub use dot::{to_dot, ColorConvention, DotStyle};
pub use edit::{
    add_edge, add_latent, add_third_variable, direct_edge, remove_edge, strength_prior, NewEdge,
    ThirdVariable,
};
pub use tree::{ModelTree, SplitOutcome, TreeNode};

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hash::{content_hash, FieldHasher};
use crate::ids::Id;
use crate::ingest::{Dataset, Kind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Measured,
    Hypothesized,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub id: Id,
    pub name: String,
    pub kind: Kind,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_column: Option<String>,
}

impl Variable {
    pub fn measured(name: &str, kind: Kind) -> Self {
        Variable {
            id: Id::generate(),
            name: name.to_owned(),
            kind,
            provenance: Provenance::Measured,
            dataset_column: Some(name.to_owned()),
        }
    }

    pub fn hypothesized(name: &str, kind: Kind) -> Self {
        Variable {
            id: Id::generate(),
            name: name.to_owned(),
            kind,
            provenance: Provenance::Hypothesized,
            dataset_column: None,
        }
    }

    pub fn is_measured(&self) -> bool {
        self.provenance == Provenance::Measured
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Directed,
    Undirected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Positive,
    Negative,
    Categorical,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeStatus {
    DataConfirmed,
    Hypothesized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeRole {
    Plain,
    ConfounderLink,
    MediatorLink,
    LatentLink,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Algorithm,
    User,
    Llm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: Id,
    pub src: Id,
    pub dst: Id,
    pub orientation: Orientation,
    pub sign: Sign,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
    pub status: EdgeStatus,
    pub role: EdgeRole,
    pub origin: Origin,
}

impl Edge {
    pub fn is_directed(&self) -> bool {
        self.orientation == Orientation::Directed
    }

    pub fn touches(&self, v: &Id) -> bool {
        &self.src == v || &self.dst == v
    }

    pub fn joins(&self, a: &Id, b: &Id) -> bool {
        (&self.src == a && &self.dst == b) || (&self.src == b && &self.dst == a)
    }

    pub fn other_end(&self, v: &Id) -> &Id {
        if &self.src == v {
            &self.dst
        } else {
            &self.src
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("unknown edge `{0}`")]
    UnknownEdge(Id),
    #[error("unknown variable `{0}`")]
    UnknownVariable(Id),
    #[error("unknown model `{0}`")]
    UnknownModel(Id),
    #[error("edge `{0}` is already directed")]
    AlreadyDirected(Id),
    #[error("variable `{var}` is not an endpoint of edge `{edge}`")]
    NotEndpoint { edge: Id, var: Id },
    #[error("the edit would create a directed cycle through {0}")]
    Cycle(String),
    #[error("variables `{0}` and `{1}` are already joined by an edge")]
    DuplicateEdge(String, String),
    #[error("an edge cannot join `{0}` to itself")]
    SelfLoop(String),
    #[error("a variable named `{0}` already exists; merge it explicitly instead")]
    NameCollision(String),
    #[error("invalid selection: {0}")]
    InvalidSelection(String),
    #[error("no edge joins `{0}` and `{1}`")]
    NoRelation(String, String),
    #[error("both directions between `{0}` and `{1}` create a directed cycle")]
    BothDirectionsCyclic(String, String),
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("invalid model tree: {0}")]
    InvalidTree(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalModel {
    pub id: Id,
    pub name: String,
    pub variables: Vec<Variable>,
    pub edges: Vec<Edge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Id>,
}

impl CausalModel {
    pub fn new(name: &str) -> Self {
        CausalModel {
            id: Id::generate(),
            name: name.to_owned(),
            variables: Vec::new(),
            edges: Vec::new(),
            outcome: None,
        }
    }

    /// Edgeless model with one measured variable per dataset column.
    pub fn from_dataset(ds: &Dataset, name: &str) -> Self {
        let mut m = CausalModel::new(name);
        m.variables = ds
            .columns
            .iter()
            .map(|c| Variable::measured(&c.name, c.kind))
            .collect();
        m
    }

    pub fn variable(&self, id: &Id) -> Option<&Variable> {
        self.variables.iter().find(|v| &v.id == id)
    }

    pub fn variable_by_name(&self, name: &str) -> Option<&Variable> {
        let needle = name.trim().to_lowercase();
        self.variables
            .iter()
            .find(|v| v.name.trim().to_lowercase() == needle)
    }

    pub fn edge(&self, id: &Id) -> Option<&Edge> {
        self.edges.iter().find(|e| &e.id == id)
    }

    pub fn edge_between(&self, a: &Id, b: &Id) -> Option<&Edge> {
        self.edges.iter().find(|e| e.joins(a, b))
    }

    pub(crate) fn require_variable(&self, id: &Id) -> Result<&Variable, GraphError> {
        self.variable(id)
            .ok_or_else(|| GraphError::UnknownVariable(id.clone()))
    }

    pub(crate) fn require_edge(&self, id: &Id) -> Result<&Edge, GraphError> {
        self.edge(id).ok_or_else(|| GraphError::UnknownEdge(id.clone()))
    }

    pub fn name_of(&self, id: &Id) -> String {
        self.variable(id)
            .map(|v| v.name.clone())
            .unwrap_or_else(|| id.to_string())
    }

    /// Sources of directed edges pointing into `v`.
    pub fn directed_parents(&self, v: &Id) -> Vec<&Id> {
        self.edges
            .iter()
            .filter(|e| e.is_directed() && &e.dst == v)
            .map(|e| &e.src)
            .collect()
    }

    /// Topological order of all variables under the directed edges, or the
    /// variables left on a cycle.
    pub fn topological_order(&self) -> Result<Vec<Id>, Vec<Id>> {
        let index: BTreeMap<&Id, usize> =
            self.variables.iter().enumerate().map(|(i, v)| (&v.id, i)).collect();
        let n = self.variables.len();
        let mut indegree = vec![0usize; n];
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        for e in self.edges.iter().filter(|e| e.is_directed()) {
            if let (Some(&s), Some(&d)) = (index.get(&e.src), index.get(&e.dst)) {
                children[s].push(d);
                indegree[d] += 1;
            }
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = queue.pop_front() {
            order.push(self.variables[i].id.clone());
            for &c in &children[i] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    queue.push_back(c);
                }
            }
        }
        if order.len() == n {
            Ok(order)
        } else {
            Err((0..n)
                .filter(|&i| indegree[i] > 0)
                .map(|i| self.variables[i].id.clone())
                .collect())
        }
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_ok()
    }

    pub(crate) fn ensure_acyclic(&self) -> Result<(), GraphError> {
        self.topological_order().map(|_| ()).map_err(|cyc| {
            let names: Vec<String> = cyc.iter().map(|id| self.name_of(id)).collect();
            GraphError::Cycle(names.join(", "))
        })
    }

    /// Checks every model invariant.
    pub fn validate(&self) -> Result<(), GraphError> {
        let mut ids = BTreeSet::new();
        let mut names = BTreeSet::new();
        for v in &self.variables {
            if !ids.insert(&v.id) {
                return Err(GraphError::Invalid(format!("duplicate variable id `{}`", v.id)));
            }
            if !names.insert(v.name.trim().to_lowercase()) {
                return Err(GraphError::NameCollision(v.name.clone()));
            }
            if v.is_measured() != v.dataset_column.is_some() {
                return Err(GraphError::Invalid(format!(
                    "variable `{}` must have a dataset column iff it is measured",
                    v.name
                )));
            }
        }
        let mut pairs = BTreeSet::new();
        let mut edge_ids = BTreeSet::new();
        for e in &self.edges {
            if !edge_ids.insert(&e.id) {
                return Err(GraphError::Invalid(format!("duplicate edge id `{}`", e.id)));
            }
            for end in [&e.src, &e.dst] {
                if !ids.contains(end) {
                    return Err(GraphError::Invalid(format!(
                        "edge `{}` references unknown variable `{end}`",
                        e.id
                    )));
                }
            }
            if e.src == e.dst {
                return Err(GraphError::SelfLoop(self.name_of(&e.src)));
            }
            let key = if e.src < e.dst {
                (&e.src, &e.dst)
            } else {
                (&e.dst, &e.src)
            };
            if !pairs.insert(key) {
                return Err(GraphError::DuplicateEdge(
                    self.name_of(&e.src),
                    self.name_of(&e.dst),
                ));
            }
            if let Some(w) = e.weight {
                if !w.is_finite() {
                    return Err(GraphError::Invalid(format!("edge `{}` has a non-finite weight", e.id)));
                }
                let bad = (e.sign == Sign::Positive && w < 0.0) || (e.sign == Sign::Negative && w > 0.0);
                if bad {
                    return Err(GraphError::Invalid(format!(
                        "edge `{}` weight {w} disagrees with its sign",
                        e.id
                    )));
                }
            }
        }
        if let Some(o) = &self.outcome {
            if !ids.contains(o) {
                return Err(GraphError::Invalid(format!("outcome `{o}` is not a variable")));
            }
        }
        self.ensure_acyclic()
    }

    /// Hash of the full model content (weights and statuses included).
    pub fn content_hash(&self) -> String {
        content_hash(self)
    }

    /// Hash of the model structure only: variables, edge endpoints and
    /// orientations. Weights, signs and statuses are excluded, so fitting a
    /// model does not change it.
    pub fn structure_hash(&self) -> String {
        let mut h = FieldHasher::new();
        let mut vars: Vec<&Variable> = self.variables.iter().collect();
        vars.sort_by(|a, b| a.id.cmp(&b.id));
        for v in vars {
            h.field(v.id.as_str())
                .field(&v.name)
                .field(v.dataset_column.as_deref().unwrap_or(""));
        }
        let mut edges: Vec<&Edge> = self.edges.iter().collect();
        edges.sort_by(|a, b| a.id.cmp(&b.id));
        for e in edges {
            h.field(e.id.as_str())
                .field(e.src.as_str())
                .field(e.dst.as_str())
                .field(if e.is_directed() { "->" } else { "--" });
        }
        h.finish()
    }
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;

    /// Model with named continuous measured variables and edges given as
    /// `(src, dst, directed)` by name.
    pub fn model(names: &[&str], edges: &[(&str, &str, bool)]) -> CausalModel {
        let mut m = CausalModel::new("test");
        for n in names {
            m.variables.push(Variable::measured(n, Kind::Continuous));
        }
        for (s, d, directed) in edges {
            let src = m.variable_by_name(s).unwrap().id.clone();
            let dst = m.variable_by_name(d).unwrap().id.clone();
            m.edges.push(Edge {
                id: Id::generate(),
                src,
                dst,
                orientation: if *directed {
                    Orientation::Directed
                } else {
                    Orientation::Undirected
                },
                sign: Sign::Unknown,
                weight: None,
                status: EdgeStatus::DataConfirmed,
                role: EdgeRole::Plain,
                origin: Origin::Algorithm,
            });
        }
        m
    }

    pub fn id(m: &CausalModel, name: &str) -> Id {
        m.variable_by_name(name).unwrap().id.clone()
    }

    pub fn edge_id(m: &CausalModel, a: &str, b: &str) -> Id {
        m.edge_between(&id(m, a), &id(m, b)).unwrap().id.clone()
    }
}

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{CausalModel, GraphError, Orientation};
use crate::ids::Id;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub model: CausalModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<Id>,
    #[serde(default)]
    pub note: String,
}

/// N-ary tree of model variants. The root is the global model; children are
/// induced subgraphs or direction-split variants of their parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelTree {
    pub nodes: BTreeMap<Id, TreeNode>,
    pub root: Id,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitOutcome {
    pub tree: ModelTree,
    /// Child with `a → b`, absent when that direction closes a cycle.
    pub child_ab: Option<Id>,
    /// Child with `b → a`, absent when that direction closes a cycle.
    pub child_ba: Option<Id>,
    pub warnings: Vec<String>,
}

impl ModelTree {
    pub fn new(root: CausalModel) -> Self {
        let id = root.id.clone();
        let mut nodes = BTreeMap::new();
        nodes.insert(
            id.clone(),
            TreeNode {
                model: root,
                parent: None,
                note: String::new(),
            },
        );
        ModelTree { nodes, root: id }
    }

    pub fn get(&self, id: &Id) -> Option<&CausalModel> {
        self.nodes.get(id).map(|n| &n.model)
    }

    pub fn require(&self, id: &Id) -> Result<&CausalModel, GraphError> {
        self.get(id).ok_or_else(|| GraphError::UnknownModel(id.clone()))
    }

    pub fn root_model(&self) -> &CausalModel {
        &self.nodes[&self.root].model
    }

    pub fn parent_of(&self, id: &Id) -> Option<&Id> {
        self.nodes.get(id).and_then(|n| n.parent.as_ref())
    }

    pub fn children(&self, id: &Id) -> Vec<&Id> {
        self.nodes
            .iter()
            .filter(|(_, n)| n.parent.as_ref() == Some(id))
            .map(|(k, _)| k)
            .collect()
    }

    /// Swaps in a new version of an existing model.
    pub fn replace_model(&self, model: CausalModel) -> Result<ModelTree, GraphError> {
        if !self.nodes.contains_key(&model.id) {
            return Err(GraphError::UnknownModel(model.id.clone()));
        }
        model.validate()?;
        let mut out = self.clone();
        let id = model.id.clone();
        out.nodes.get_mut(&id).unwrap().model = model;
        Ok(out)
    }

    fn with_child(&self, parent: &Id, model: CausalModel, note: &str) -> ModelTree {
        let mut out = self.clone();
        out.nodes.insert(
            model.id.clone(),
            TreeNode {
                model,
                parent: Some(parent.clone()),
                note: note.to_owned(),
            },
        );
        out
    }

    /// Appends the subgraph induced by `selected` as a child of `parent`.
    pub fn create_child_subgraph(
        &self,
        parent: &Id,
        selected: &BTreeSet<Id>,
        note: &str,
    ) -> Result<(ModelTree, Id), GraphError> {
        let pm = self.require(parent)?;
        if selected.len() < 2 {
            return Err(GraphError::InvalidSelection(format!(
                "select at least two variables (got {})",
                selected.len()
            )));
        }
        if let Some(missing) = selected.iter().find(|id| pm.variable(id).is_none()) {
            return Err(GraphError::UnknownVariable(missing.clone()));
        }
        let mut child = CausalModel::new(&format!("{} (subgraph)", pm.name));
        child.variables = pm
            .variables
            .iter()
            .filter(|v| selected.contains(&v.id))
            .cloned()
            .collect();
        child.edges = pm
            .edges
            .iter()
            .filter(|e| selected.contains(&e.src) && selected.contains(&e.dst))
            .cloned()
            .collect();
        child.outcome = pm.outcome.clone().filter(|o| selected.contains(o));
        let id = child.id.clone();
        Ok((self.with_child(parent, child, note), id))
    }

    /// Splits a relation the analyst flags as bidirectional into two child
    /// models, one per direction.
    pub fn split_bidirectional(
        &self,
        model_id: &Id,
        a: &Id,
        b: &Id,
        note: &str,
    ) -> Result<SplitOutcome, GraphError> {
        let pm = self.require(model_id)?;
        pm.require_variable(a)?;
        pm.require_variable(b)?;
        if a == b {
            return Err(GraphError::SelfLoop(pm.name_of(a)));
        }
        let edge = pm
            .edge_between(a, b)
            .ok_or_else(|| GraphError::NoRelation(pm.name_of(a), pm.name_of(b)))?;
        let (na, nb) = (pm.name_of(a), pm.name_of(b));

        let oriented = |from: &Id, to: &Id| -> Option<CausalModel> {
            let mut child = pm.clone();
            child.id = Id::generate();
            child.name = format!("{} ({} → {})", pm.name, pm.name_of(from), pm.name_of(to));
            let e = child.edges.iter_mut().find(|e| e.id == edge.id).unwrap();
            let reversed = e.is_directed() && &e.src != from;
            e.src = from.clone();
            e.dst = to.clone();
            e.orientation = Orientation::Directed;
            if reversed {
                e.weight = None;
            }
            child.is_acyclic().then_some(child)
        };

        let ab = oriented(a, b);
        let ba = oriented(b, a);
        if ab.is_none() && ba.is_none() {
            return Err(GraphError::BothDirectionsCyclic(na, nb));
        }
        let mut tree = self.clone();
        let mut warnings = Vec::new();
        let mut place = |child: Option<CausalModel>, from: &str, to: &str| match child {
            Some(m) => {
                let id = m.id.clone();
                tree = tree.with_child(model_id, m, note);
                Some(id)
            }
            None => {
                warnings.push(format!(
                    "direction {from} → {to} closes a directed cycle; that variant was not created"
                ));
                None
            }
        };
        let child_ab = place(ab, &na, &nb);
        let child_ba = place(ba, &nb, &na);
        Ok(SplitOutcome {
            tree,
            child_ab,
            child_ba,
            warnings,
        })
    }

    /// Checks tree shape and every model in it.
    pub fn validate(&self) -> Result<(), GraphError> {
        let root = self
            .nodes
            .get(&self.root)
            .ok_or_else(|| GraphError::InvalidTree(format!("root `{}` is not a node", self.root)))?;
        if root.parent.is_some() {
            return Err(GraphError::InvalidTree("root has a parent".into()));
        }
        for (id, node) in &self.nodes {
            if &node.model.id != id {
                return Err(GraphError::InvalidTree(format!(
                    "node `{id}` holds model `{}`",
                    node.model.id
                )));
            }
            if id != &self.root && node.parent.is_none() {
                return Err(GraphError::InvalidTree(format!("node `{id}` is a second root")));
            }
            // Walk to the root; more steps than nodes means a parent cycle.
            let mut cur = id;
            let mut steps = 0;
            while let Some(p) = self.nodes[cur].parent.as_ref() {
                if !self.nodes.contains_key(p) {
                    return Err(GraphError::InvalidTree(format!(
                        "node `{cur}` has unknown parent `{p}`"
                    )));
                }
                cur = p;
                steps += 1;
                if steps > self.nodes.len() {
                    return Err(GraphError::InvalidTree(format!("parent links of `{id}` loop")));
                }
            }
            if cur != &self.root {
                return Err(GraphError::InvalidTree(format!("node `{id}` is unreachable from the root")));
            }
            node.model.validate()?;
        }
        Ok(())
    }
}

use serde::{Deserialize, Serialize};

use super::score::ScoreCache;
use super::DiscoverError;
use crate::graph::{self, CausalModel, NewEdge, Orientation, Sign};
use crate::ids::Id;
use crate::ingest::Dataset;

/// A structural edit whose score impact can be previewed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Edit {
    Direct { edge: Id, toward: Id },
    Remove { edge: Id },
    Add { src: Id, dst: Id, directed: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDelta {
    pub variable: Id,
    pub name: String,
    pub delta: f64,
}

/// Score change of an edit. Negative is an improvement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BicDelta {
    pub total: f64,
    pub per_node: Vec<NodeDelta>,
}

/// Parent columns of `v` counted by the score: sources of directed edges
/// that are measured and present in `ds`. Undirected edges carry no parent
/// information and are ignored.
fn parent_columns(m: &CausalModel, ds: &Dataset, v: &Id) -> Vec<usize> {
    let mut cols: Vec<usize> = m
        .directed_parents(v)
        .into_iter()
        .filter_map(|p| column_of(m, ds, p))
        .collect();
    cols.sort_unstable();
    cols
}

fn column_of(m: &CausalModel, ds: &Dataset, v: &Id) -> Option<usize> {
    let var = m.variable(v)?;
    if !var.is_measured() {
        return None;
    }
    ds.column_index(var.dataset_column.as_deref()?)
}

fn require_data(m: &CausalModel, ds: &Dataset, v: &Id) -> Result<usize, DiscoverError> {
    m.variable(v)
        .ok_or_else(|| graph::GraphError::UnknownVariable(v.clone()))?;
    column_of(m, ds, v).ok_or_else(|| DiscoverError::NoData(m.name_of(v)))
}

/// Sum of local scores over the measured variables of `m`.
pub fn total_bic(ds: &Dataset, m: &CausalModel) -> Result<f64, DiscoverError> {
    total_bic_cached(&ScoreCache::new(ds), ds, m)
}

pub fn total_bic_cached(cache: &ScoreCache, ds: &Dataset, m: &CausalModel) -> Result<f64, DiscoverError> {
    let mut total = 0.0;
    for v in &m.variables {
        if let Some(col) = column_of(m, ds, &v.id) {
            total += cache.local(col, &parent_columns(m, ds, &v.id))?;
        }
    }
    Ok(total)
}

/// Applies `edit` to a copy of `m`, returning the edited model and the two
/// endpoint variables.
pub fn apply_edit(m: &CausalModel, edit: &Edit) -> Result<(CausalModel, [Id; 2]), DiscoverError> {
    Ok(match edit {
        Edit::Direct { edge, toward } => {
            let e = m
                .edge(edge)
                .ok_or_else(|| graph::GraphError::UnknownEdge(edge.clone()))?;
            let ends = [e.src.clone(), e.dst.clone()];
            (graph::direct_edge(m, edge, toward, Sign::Unknown)?, ends)
        }
        Edit::Remove { edge } => {
            let e = m
                .edge(edge)
                .ok_or_else(|| graph::GraphError::UnknownEdge(edge.clone()))?;
            let ends = [e.src.clone(), e.dst.clone()];
            (graph::remove_edge(m, edge)?, ends)
        }
        Edit::Add { src, dst, directed } => {
            let orientation = if *directed {
                Orientation::Directed
            } else {
                Orientation::Undirected
            };
            let spec = NewEdge::user(src.clone(), dst.clone(), orientation, Sign::Unknown);
            (graph::add_edge(m, spec)?.0, [src.clone(), dst.clone()])
        }
    })
}

/// Exact BIC change of `edit`, rescoring only the endpoints whose parent
/// sets change.
pub fn bic_delta(ds: &Dataset, m: &CausalModel, edit: &Edit) -> Result<BicDelta, DiscoverError> {
    bic_delta_cached(&ScoreCache::new(ds), ds, m, edit)
}

pub fn bic_delta_cached(
    cache: &ScoreCache,
    ds: &Dataset,
    m: &CausalModel,
    edit: &Edit,
) -> Result<BicDelta, DiscoverError> {
    let ends = match edit {
        Edit::Direct { edge, .. } | Edit::Remove { edge } => {
            let e = m
                .edge(edge)
                .ok_or_else(|| graph::GraphError::UnknownEdge(edge.clone()))?;
            [e.src.clone(), e.dst.clone()]
        }
        Edit::Add { src, dst, .. } => [src.clone(), dst.clone()],
    };
    for v in &ends {
        require_data(m, ds, v)?;
    }
    let (after, _) = apply_edit(m, edit)?;

    let mut per_node = Vec::new();
    let mut total = 0.0;
    for v in &ends {
        let col = require_data(m, ds, v)?;
        let before_pa = parent_columns(m, ds, v);
        let after_pa = parent_columns(&after, ds, v);
        if before_pa == after_pa {
            continue;
        }
        let delta = cache.local(col, &after_pa)? - cache.local(col, &before_pa)?;
        total += delta;
        per_node.push(NodeDelta {
            variable: v.clone(),
            name: m.name_of(v),
            delta,
        });
    }
    Ok(BicDelta { total, per_node })
}

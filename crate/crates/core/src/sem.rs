//! Linear SEM by per-node least squares.
//!
//! For a recursive model without latent structure, regressing each node on
//! its directed parents is the maximum-likelihood estimator. Coefficients
//! are reported standardized (`β·sd(x)/sd(y)`); for z-scored columns that is
//! the raw slope, and integer-coded categorical columns get the same
//! treatment.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{CausalModel, EdgeStatus, Sign};
use crate::ids::Id;
use crate::ingest::{Dataset, Kind};
use crate::linalg::{regress, Moments};

/// Coefficients inside `±SIGN_DEAD_ZONE` get sign `unknown`.
pub const SIGN_DEAD_ZONE: f64 = 0.02;

#[derive(Debug, Error)]
pub enum SemError {
    #[error("collinear parents for '{node}': {{{}}}", .parents.join(", "))]
    Collinear { node: String, parents: Vec<String> },
    #[error("'{node}' has {parents} parents but only {n} rows")]
    InsufficientRows { node: String, parents: usize, n: usize },
    #[error("model has a directed cycle")]
    Cyclic,
    #[error("fit was computed for a different model structure")]
    StaleFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeFit {
    pub coefficient: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Keyed by edge id.
    pub coefficients: BTreeMap<Id, EdgeFit>,
    /// Keyed by variable id, for every node with at least one fitted parent.
    pub r_squared: BTreeMap<Id, f64>,
    /// Edges skipped because they are undirected or touch a variable
    /// without data.
    pub unfitted: Vec<Id>,
    pub dataset_fingerprint: String,
    pub model_fingerprint: String,
}

fn data_column(m: &CausalModel, ds: &Dataset, v: &Id) -> Option<usize> {
    let var = m.variable(v)?;
    if !var.is_measured() {
        return None;
    }
    ds.column_index(var.dataset_column.as_deref()?)
}

pub fn fit(ds: &Dataset, m: &CausalModel) -> Result<FitResult, SemError> {
    if !m.is_acyclic() {
        return Err(SemError::Cyclic);
    }
    let moments = Moments::from_dataset(ds);
    let sd = |j: usize| (moments.cross[j][j] / (ds.n as f64 - 1.0)).sqrt();

    let mut coefficients = BTreeMap::new();
    let mut r_squared = BTreeMap::new();
    let mut unfitted = Vec::new();
    let mut incoming: BTreeMap<&Id, Vec<(&Id, usize)>> = BTreeMap::new();
    for e in &m.edges {
        let cols = (data_column(m, ds, &e.src), data_column(m, ds, &e.dst));
        match cols {
            (Some(src), Some(_)) if e.is_directed() => {
                incoming.entry(&e.dst).or_default().push((&e.id, src));
            }
            _ => unfitted.push(e.id.clone()),
        }
    }

    for v in &m.variables {
        let Some(parents) = incoming.get(&v.id) else {
            continue;
        };
        let y = data_column(m, ds, &v.id).expect("only measured heads are collected");
        let cols: Vec<usize> = parents.iter().map(|&(_, c)| c).collect();
        let k = cols.len();
        if ds.n <= k + 1 {
            return Err(SemError::InsufficientRows {
                node: v.name.clone(),
                parents: k,
                n: ds.n,
            });
        }
        let reg = regress(&moments, y, &cols).map_err(|_| SemError::Collinear {
            node: v.name.clone(),
            parents: parents.iter().map(|&(_, c)| ds.columns[c].name.clone()).collect(),
        })?;
        let sigma2 = reg.rss.max(0.0) / (ds.n - k - 1) as f64;
        for (i, &(edge, c)) in parents.iter().enumerate() {
            let scale = sd(c) / sd(y);
            coefficients.insert(
                edge.clone(),
                EdgeFit {
                    coefficient: reg.coefficients[i] * scale,
                    std_error: (sigma2 * reg.inverse_diag[i]).sqrt() * scale,
                },
            );
        }
        r_squared.insert(v.id.clone(), 1.0 - reg.rss.max(0.0) / reg.tss);
    }

    Ok(FitResult {
        coefficients,
        r_squared,
        unfitted,
        dataset_fingerprint: ds.fingerprint(),
        model_fingerprint: m.structure_hash(),
    })
}

pub fn sign_of(coefficient: f64) -> Sign {
    if coefficient > SIGN_DEAD_ZONE {
        Sign::Positive
    } else if coefficient < -SIGN_DEAD_ZONE {
        Sign::Negative
    } else {
        Sign::Unknown
    }
}

/// Copies fitted coefficients onto the model's edges. Edges touching a
/// categorical variable keep sign `categorical`.
pub fn apply_fit(m: &CausalModel, fr: &FitResult) -> Result<CausalModel, SemError> {
    if fr.model_fingerprint != m.structure_hash() {
        return Err(SemError::StaleFit);
    }
    let categorical = |id: &Id| m.variable(id).is_some_and(|v| v.kind == Kind::Categorical);
    let mut out = m.clone();
    for e in &mut out.edges {
        if let Some(f) = fr.coefficients.get(&e.id) {
            e.weight = Some(f.coefficient);
            e.sign = if categorical(&e.src) || categorical(&e.dst) {
                Sign::Categorical
            } else {
                sign_of(f.coefficient)
            };
            e.status = EdgeStatus::DataConfirmed;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{add_edge, NewEdge, Orientation};
    use crate::synth;

    fn directed(ds: &Dataset, pairs: &[(usize, usize)]) -> CausalModel {
        let mut m = CausalModel::from_dataset(ds, "m");
        for &(a, b) in pairs {
            let spec = NewEdge::user(
                m.variables[a].id.clone(),
                m.variables[b].id.clone(),
                Orientation::Directed,
                Sign::Unknown,
            );
            m = add_edge(&m, spec).unwrap().0;
        }
        m
    }

    #[test]
    fn recovers_known_coefficient() {
        let ds = synth::chain2(0.8, 5000, 42);
        let m = directed(&ds, &[(0, 1)]);
        let fr = fit(&ds, &m).unwrap();
        let c = fr.coefficients[&m.edges[0].id].coefficient;
        assert!((c - 0.8).abs() < 0.05, "{c}");
        assert!(fr.coefficients[&m.edges[0].id].std_error > 0.0);
    }

    #[test]
    fn exact_copy_has_unit_coefficient() {
        let csv = "x,y\n0.5,0.5\n1.25,1.25\n2.75,2.75\n3.5,3.5\n";
        let ds = Dataset::from_reader("t", csv.as_bytes(), &Default::default()).unwrap();
        let m = directed(&ds, &[(0, 1)]);
        let fr = fit(&ds, &m).unwrap();
        assert!((fr.coefficients[&m.edges[0].id].coefficient - 1.0).abs() < 1e-12);
        assert!((fr.r_squared[&m.variables[1].id] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn apply_sets_weights_signs_and_status() {
        let ds = synth::chain2(-0.6, 1000, 1);
        let m = directed(&ds, &[(0, 1)]);
        let fr = fit(&ds, &m).unwrap();
        let fitted = apply_fit(&m, &fr).unwrap();
        assert_eq!(fitted.edges[0].sign, Sign::Negative);
        assert_eq!(fitted.edges[0].status, EdgeStatus::DataConfirmed);
        let again = fit(&ds, &fitted).unwrap();
        assert_eq!(again.coefficients, fr.coefficients);
    }

    #[test]
    fn dead_zone_and_stale_fit() {
        assert_eq!(sign_of(0.019), Sign::Unknown);
        assert_eq!(sign_of(-0.021), Sign::Negative);
        let ds = synth::independent(3, 200, 4);
        let m = directed(&ds, &[(0, 1)]);
        let fr = fit(&ds, &m).unwrap();
        let changed = directed(&ds, &[(0, 1), (1, 2)]);
        assert!(matches!(apply_fit(&changed, &fr), Err(SemError::StaleFit)));
    }

    #[test]
    fn undirected_edges_are_unfitted() {
        let ds = synth::chain2(0.5, 100, 4);
        let m = CausalModel::from_dataset(&ds, "m");
        let spec = NewEdge::user(
            m.variables[0].id.clone(),
            m.variables[1].id.clone(),
            Orientation::Undirected,
            Sign::Unknown,
        );
        let (m, id) = add_edge(&m, spec).unwrap();
        let fr = fit(&ds, &m).unwrap();
        assert!(fr.coefficients.is_empty());
        assert_eq!(fr.unfitted, vec![id]);
    }
}

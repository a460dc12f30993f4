use std::collections::HashMap;
use std::sync::RwLock;

use super::DiscoverError;
use crate::ingest::Dataset;
use crate::linalg::{regress, Moments};

/// BIC contribution of one node given its parents:
/// `n·ln(RSS/n) + |parents|·ln(n)`, lower is better. Constant terms of the
/// Gaussian log-likelihood are dropped; they cancel in every comparison.
pub fn local_bic(ds: &Dataset, node: usize, parents: &[usize]) -> Result<f64, DiscoverError> {
    let names: Vec<String> = ds.columns.iter().map(|c| c.name.clone()).collect();
    local_bic_with(&Moments::from_dataset(ds), &names, node, parents)
}

pub(crate) fn local_bic_with(
    moments: &Moments,
    names: &[String],
    node: usize,
    parents: &[usize],
) -> Result<f64, DiscoverError> {
    let p = names.len();
    let n = moments.n;
    if node >= p {
        return Err(DiscoverError::UnknownColumn(format!("#{node}")));
    }
    if let Some(&bad) = parents.iter().find(|&&q| q >= p) {
        return Err(DiscoverError::UnknownColumn(format!("#{bad}")));
    }
    if parents.contains(&node) {
        return Err(DiscoverError::SelfParent(names[node].clone()));
    }
    if parents.len() + 1 >= n {
        return Err(DiscoverError::TooManyParents {
            node: names[node].clone(),
            parents: parents.len(),
            n,
        });
    }
    let singular = || DiscoverError::Singular {
        node: names[node].clone(),
        parents: parents.iter().map(|&q| names[q].clone()).collect(),
    };
    let fit = regress(moments, node, parents).map_err(|_| singular())?;
    if !(fit.tss > 0.0) || !(fit.rss > 1e-12 * fit.tss) {
        return Err(singular());
    }
    let n = n as f64;
    Ok(n * (fit.rss / n).ln() + parents.len() as f64 * n.ln())
}

/// Memoized local scores for one dataset. Reads proceed concurrently;
/// inserts take the write lock.
pub struct ScoreCache {
    fingerprint: String,
    names: Vec<String>,
    moments: Moments,
    entries: RwLock<HashMap<(usize, Vec<usize>), f64>>,
}

impl ScoreCache {
    pub fn new(ds: &Dataset) -> Self {
        ScoreCache {
            fingerprint: ds.fingerprint(),
            names: ds.columns.iter().map(|c| c.name.clone()).collect(),
            moments: Moments::from_dataset(ds),
            entries: RwLock::new(HashMap::new()),
        }
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Whether this cache was built for `ds`.
    pub fn matches(&self, ds: &Dataset) -> bool {
        self.fingerprint == ds.fingerprint()
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn local(&self, node: usize, parents: &[usize]) -> Result<f64, DiscoverError> {
        let mut key_parents = parents.to_vec();
        key_parents.sort_unstable();
        key_parents.dedup();
        let key = (node, key_parents);
        if let Some(&v) = self.entries.read().unwrap().get(&key) {
            return Ok(v);
        }
        let v = local_bic_with(&self.moments, &self.names, node, &key.1)?;
        self.entries.write().unwrap().insert(key, v);
        Ok(v)
    }

    /// Total score of a DAG given as parent sets.
    pub fn total(&self, parents: &[Vec<usize>]) -> Result<f64, DiscoverError> {
        parents
            .iter()
            .enumerate()
            .map(|(j, pa)| self.local(j, pa))
            .sum()
    }
}

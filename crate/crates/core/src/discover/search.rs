use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::cpdag::{dag_to_cpdag, Pdag};
use super::score::ScoreCache;
use super::DiscoverError;
use crate::graph::{CausalModel, Edge, EdgeRole, EdgeStatus, Orientation, Origin, Sign};
use crate::ids::Id;
use crate::ingest::{Dataset, Kind};

/// Two moves whose deltas differ by less than this are treated as tied.
const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Move {
    Insert,
    Delete,
}

/// One applied move. Serialized as one JSON line per step by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    #[serde(rename = "move")]
    pub kind: Move,
    pub src: String,
    pub dst: String,
    pub delta_bic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub cpdag: CausalModel,
    pub dag: CausalModel,
    pub total_bic: f64,
    pub trace: Vec<TraceStep>,
}

/// Column-index form of a search outcome, used by oracles and benches.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSearch {
    pub parents: Vec<Vec<usize>>,
    pub pdag: Pdag,
    pub total_bic: f64,
    pub trace: Vec<(Move, usize, usize, f64)>,
}

type Pairs = BTreeSet<(usize, usize)>;

fn resolve(ds: &Dataset, pairs: &BTreeSet<(String, String)>) -> Result<Pairs, DiscoverError> {
    pairs
        .iter()
        .map(|(a, b)| {
            let ia = ds
                .column_index(a)
                .ok_or_else(|| DiscoverError::UnknownColumn(a.clone()))?;
            let ib = ds
                .column_index(b)
                .ok_or_else(|| DiscoverError::UnknownColumn(b.clone()))?;
            if ia == ib {
                return Err(DiscoverError::InconsistentConstraints(format!(
                    "self-loop on '{a}'"
                )));
            }
            Ok((ia, ib))
        })
        .collect()
}

/// Whether `to` is reachable from `from` along parent-to-child links.
fn reaches(parents: &[Vec<usize>], from: usize, to: usize) -> bool {
    let p = parents.len();
    let mut seen = vec![false; p];
    let mut stack = vec![from];
    while let Some(u) = stack.pop() {
        if u == to {
            return true;
        }
        for c in 0..p {
            if !seen[c] && parents[c].contains(&u) {
                seen[c] = true;
                stack.push(c);
            }
        }
    }
    false
}

fn adjacent(parents: &[Vec<usize>], a: usize, b: usize) -> bool {
    parents[a].contains(&b) || parents[b].contains(&a)
}

fn with(pa: &[usize], extra: usize) -> Vec<usize> {
    let mut v = pa.to_vec();
    v.push(extra);
    v.sort_unstable();
    v
}

fn without(pa: &[usize], gone: usize) -> Vec<usize> {
    pa.iter().copied().filter(|&q| q != gone).collect()
}

fn better(delta: f64, best: Option<(f64, usize, usize)>) -> bool {
    match best {
        None => true,
        Some((b, _, _)) => delta < b - TIE_TOL * (1.0 + b.abs()),
    }
}

/// Greedy search over column indices. Candidates are scanned in
/// lexicographic `(src, dst)` order and only a strictly better delta
/// replaces the incumbent, which implements the smallest-pair tie-break.
pub fn search_indices(
    cache: &ScoreCache,
    forbidden: &Pairs,
    required: &Pairs,
) -> Result<RawSearch, DiscoverError> {
    let p = cache.names().len();
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); p];
    for &(a, b) in required {
        if reaches(&parents, b, a) {
            return Err(DiscoverError::InconsistentConstraints(format!(
                "required edges form a cycle through '{}' and '{}'",
                cache.names()[a],
                cache.names()[b]
            )));
        }
        parents[b] = with(&parents[b], a);
    }
    let mut trace = Vec::new();

    // DAG-space insertions then deletions. Greedy insertion can strand an
    // edge that only an equivalence-class deletion removes (typically around
    // a collider), so finish each round with the best such deletion and
    // repeat while one applies.
    loop {
        forward(cache, &mut parents, forbidden, &mut trace)?;
        backward(cache, &mut parents, required, &mut trace)?;
        let pdag = dag_to_cpdag(&parents, &known_orientations(&parents, forbidden, required));
        match class_delete(cache, &pdag, required)? {
            Some(op) => {
                parents = op.apply(pdag)?;
                trace.push((Move::Delete, op.x, op.y, op.delta));
            }
            None => break,
        }
    }

    let pdag = dag_to_cpdag(&parents, &known_orientations(&parents, forbidden, required));
    let total_bic = cache.total(&parents)?;
    Ok(RawSearch {
        parents,
        pdag,
        total_bic,
        trace,
    })
}

type Trace = Vec<(Move, usize, usize, f64)>;

fn forward(
    cache: &ScoreCache,
    parents: &mut [Vec<usize>],
    forbidden: &Pairs,
    trace: &mut Trace,
) -> Result<(), DiscoverError> {
    let p = parents.len();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..p {
            for j in 0..p {
                if i == j || adjacent(parents, i, j) || forbidden.contains(&(i, j)) {
                    continue;
                }
                if reaches(parents, j, i) {
                    continue;
                }
                let delta = cache.local(j, &with(&parents[j], i))? - cache.local(j, &parents[j])?;
                if better(delta, best) {
                    best = Some((delta, i, j));
                }
            }
        }
        match best {
            Some((delta, i, j)) if delta < 0.0 => {
                parents[j] = with(&parents[j], i);
                trace.push((Move::Insert, i, j, delta));
            }
            _ => return Ok(()),
        }
    }
}

fn backward(
    cache: &ScoreCache,
    parents: &mut [Vec<usize>],
    required: &Pairs,
    trace: &mut Trace,
) -> Result<(), DiscoverError> {
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for j in 0..parents.len() {
            for &i in &parents[j] {
                if required.contains(&(i, j)) {
                    continue;
                }
                let delta = cache.local(j, &without(&parents[j], i))? - cache.local(j, &parents[j])?;
                if better_pair(delta, (i, j), best) {
                    best = Some((delta, i, j));
                }
            }
        }
        match best {
            Some((delta, i, j)) if delta < 0.0 => {
                parents[j] = without(&parents[j], i);
                trace.push((Move::Delete, i, j, delta));
            }
            _ => return Ok(()),
        }
    }
}

/// Orientations known a priori: required edges, and DAG edges whose
/// reverse is forbidden.
fn known_orientations(parents: &[Vec<usize>], forbidden: &Pairs, required: &Pairs) -> Pairs {
    let mut fixed = required.clone();
    for (j, pa) in parents.iter().enumerate() {
        for &i in pa {
            if forbidden.contains(&(j, i)) {
                fixed.insert((i, j));
            }
        }
    }
    fixed
}

/// Equivalence-class edge deletion: remove `x - y` and turn every node of
/// `h` into a common child of both.
struct ClassDelete {
    x: usize,
    y: usize,
    h: Vec<usize>,
    delta: f64,
}

impl ClassDelete {
    fn apply(&self, mut g: Pdag) -> Result<Vec<Vec<usize>>, DiscoverError> {
        let (x, y) = (self.x, self.y);
        g.directed.remove(&(x, y));
        g.directed.remove(&(y, x));
        g.undirected.remove(&(x.min(y), x.max(y)));
        for &h in &self.h {
            for from in [y, x] {
                if g.undirected.remove(&(from.min(h), from.max(h))) {
                    g.directed.insert((from, h));
                }
            }
        }
        consistent_extension(&g).ok_or_else(|| {
            DiscoverError::InconsistentConstraints("no DAG extends the searched graph".into())
        })
    }
}

/// Best score-decreasing deletion over all DAGs in the class of `g`.
/// For `x` adjacent to `y` and `h` drawn from the undirected neighbours of
/// `y` that are adjacent to `x`, the deletion is valid when the rest of
/// those neighbours form a clique; only `y`'s local score changes.
fn class_delete(cache: &ScoreCache, g: &Pdag, required: &Pairs) -> Result<Option<ClassDelete>, DiscoverError> {
    let p = g.p;
    let mut best: Option<ClassDelete> = None;
    for x in 0..p {
        for y in 0..p {
            if x == y || !(g.is_directed(x, y) || g.is_undirected(x, y)) {
                continue;
            }
            if required.contains(&(x, y)) || required.contains(&(y, x)) {
                continue;
            }
            let na: Vec<usize> = (0..p)
                .filter(|&h| h != x && g.is_undirected(h, y) && g.adjacent(h, x))
                .collect();
            let pa_y: Vec<usize> = (0..p).filter(|&a| g.is_directed(a, y)).collect();
            for mask in 0..(1u32 << na.len()) {
                let h: Vec<usize> = na
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| mask & (1 << b) != 0)
                    .map(|(_, &v)| v)
                    .collect();
                let rest: Vec<usize> = na.iter().copied().filter(|v| !h.contains(v)).collect();
                let clique = rest
                    .iter()
                    .enumerate()
                    .all(|(i, &a)| rest[i + 1..].iter().all(|&b| g.adjacent(a, b)));
                if !clique {
                    continue;
                }
                let mut keep: Vec<usize> = rest.iter().chain(&pa_y).copied().filter(|&v| v != x).collect();
                keep.sort_unstable();
                keep.dedup();
                let delta = cache.local(y, &keep)? - cache.local(y, &with(&keep, x))?;
                let replace = match &best {
                    None => true,
                    Some(b) => delta < b.delta - TIE_TOL * (1.0 + b.delta.abs()),
                };
                if replace {
                    best = Some(ClassDelete { x, y, h, delta });
                }
            }
        }
    }
    Ok(best.filter(|b| b.delta < 0.0))
}

/// A DAG with the skeleton, directed edges and v-structures of `g`
/// (Dor and Tarsi). Repeatedly removes a sink whose undirected neighbours
/// are adjacent to all its other neighbours, orienting those edges into it.
fn consistent_extension(g: &Pdag) -> Option<Vec<Vec<usize>>> {
    let p = g.p;
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); p];
    let mut work = g.clone();
    let mut alive: Vec<bool> = vec![true; p];
    for _ in 0..p {
        let sink = (0..p).find(|&v| {
            alive[v]
                && !(0..p).any(|c| alive[c] && work.is_directed(v, c))
                && {
                    let nbrs: Vec<usize> = (0..p).filter(|&u| alive[u] && u != v && work.adjacent(u, v)).collect();
                    nbrs.iter().filter(|&&u| work.is_undirected(u, v)).all(|&u| {
                        nbrs.iter().all(|&w| w == u || work.adjacent(u, w))
                    })
                }
        })?;
        for u in 0..p {
            if alive[u] && u != sink && (work.is_directed(u, sink) || work.is_undirected(u, sink)) {
                parents[sink].push(u);
            }
        }
        alive[sink] = false;
        work.directed.retain(|&(a, b)| a != sink && b != sink);
        work.undirected.retain(|&(a, b)| a != sink && b != sink);
    }
    for pa in &mut parents {
        pa.sort_unstable();
    }
    Some(parents)
}

/// Deletions are scanned grouped by child, so compare pairs explicitly to
/// keep the smallest `(src, dst)` on ties.
fn better_pair(delta: f64, pair: (usize, usize), best: Option<(f64, usize, usize)>) -> bool {
    match best {
        None => true,
        Some((b, bi, bj)) => {
            let tol = TIE_TOL * (1.0 + b.abs());
            delta < b - tol || (delta <= b + tol && pair < (bi, bj))
        }
    }
}

fn edge_sign(ds: &Dataset, a: usize, b: usize) -> Sign {
    if ds.columns[a].kind == Kind::Categorical || ds.columns[b].kind == Kind::Categorical {
        Sign::Categorical
    } else {
        Sign::Unknown
    }
}

fn discovered_edge(base: &CausalModel, ds: &Dataset, a: usize, b: usize, directed: bool) -> Edge {
    Edge {
        id: Id::generate(),
        src: base.variables[a].id.clone(),
        dst: base.variables[b].id.clone(),
        orientation: if directed {
            Orientation::Directed
        } else {
            Orientation::Undirected
        },
        sign: edge_sign(ds, a, b),
        weight: None,
        status: EdgeStatus::DataConfirmed,
        role: EdgeRole::Plain,
        origin: Origin::Algorithm,
    }
}

/// Learns a CPDAG from `ds`. Constraints are ordered `(src, dst)` column
/// name pairs: a forbidden pair rules out `src → dst` only; a required pair
/// is present from the start and never deleted.
pub fn ges_search(
    ds: &Dataset,
    forbidden: &BTreeSet<(String, String)>,
    required: &BTreeSet<(String, String)>,
) -> Result<SearchResult, DiscoverError> {
    let forbidden = resolve(ds, forbidden)?;
    let required = resolve(ds, required)?;
    if let Some(&(a, b)) = required.intersection(&forbidden).next() {
        return Err(DiscoverError::InconsistentConstraints(format!(
            "'{}' -> '{}' is both required and forbidden",
            ds.columns[a].name, ds.columns[b].name
        )));
    }
    let cache = ScoreCache::new(ds);
    let raw = search_indices(&cache, &forbidden, &required)?;

    let base = CausalModel::from_dataset(ds, &ds.name);
    let mut dag = base.clone();
    dag.id = Id::generate();
    for (j, pa) in raw.parents.iter().enumerate() {
        for &i in pa {
            dag.edges.push(discovered_edge(&base, ds, i, j, true));
        }
    }
    let mut cpdag = base.clone();
    for &(i, j) in &raw.pdag.skeleton() {
        let e = if raw.pdag.is_directed(i, j) {
            discovered_edge(&base, ds, i, j, true)
        } else if raw.pdag.is_directed(j, i) {
            discovered_edge(&base, ds, j, i, true)
        } else {
            discovered_edge(&base, ds, i, j, false)
        };
        cpdag.edges.push(e);
    }
    dag.edges.sort_by_key(|e| (col_of(&base, &e.src), col_of(&base, &e.dst)));

    let names = cache.names();
    let trace = raw
        .trace
        .iter()
        .map(|&(kind, i, j, delta_bic)| TraceStep {
            kind,
            src: names[i].clone(),
            dst: names[j].clone(),
            delta_bic,
        })
        .collect();
    Ok(SearchResult {
        cpdag,
        dag,
        total_bic: raw.total_bic,
        trace,
    })
}

fn col_of(m: &CausalModel, id: &Id) -> usize {
    m.variables.iter().position(|v| &v.id == id).unwrap_or(usize::MAX)
}

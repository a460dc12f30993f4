//! DAG to CPDAG conversion: keep v-structures (and orientations fixed by
//! background knowledge), then close under Meek's orientation rules R1–R4.

use std::collections::BTreeSet;

/// Partially directed graph over `0..p`. Undirected pairs are stored with
/// the smaller index first.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Pdag {
    pub p: usize,
    pub directed: BTreeSet<(usize, usize)>,
    pub undirected: BTreeSet<(usize, usize)>,
}

fn pair(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Pdag {
    pub fn is_directed(&self, a: usize, b: usize) -> bool {
        self.directed.contains(&(a, b))
    }

    pub fn is_undirected(&self, a: usize, b: usize) -> bool {
        self.undirected.contains(&pair(a, b))
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.is_undirected(a, b) || self.is_directed(a, b) || self.is_directed(b, a)
    }

    fn orient(&mut self, a: usize, b: usize) -> bool {
        if self.undirected.remove(&pair(a, b)) {
            self.directed.insert((a, b));
            true
        } else {
            false
        }
    }

    /// Skeleton as unordered pairs.
    pub fn skeleton(&self) -> BTreeSet<(usize, usize)> {
        self.directed
            .iter()
            .map(|&(a, b)| pair(a, b))
            .chain(self.undirected.iter().copied())
            .collect()
    }

    /// Applies R1–R4 until no rule fires. Returns whether anything changed.
    pub fn apply_meek(&mut self) -> bool {
        let mut changed_any = false;
        loop {
            let mut changed = false;
            let undirected: Vec<(usize, usize)> = self.undirected.iter().copied().collect();
            for (x, y) in undirected {
                for (a, b) in [(x, y), (y, x)] {
                    if self.is_undirected(a, b) && self.should_orient(a, b) {
                        self.orient(a, b);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
            changed_any = true;
        }
        changed_any
    }

    /// Whether the undirected edge `a — b` is compelled to `a → b`.
    fn should_orient(&self, a: usize, b: usize) -> bool {
        let p = self.p;
        // R1: c → a — b with c, b non-adjacent.
        if (0..p).any(|c| self.is_directed(c, a) && !self.adjacent(c, b) && c != b) {
            return true;
        }
        // R2: a → c → b.
        if (0..p).any(|c| self.is_directed(a, c) && self.is_directed(c, b)) {
            return true;
        }
        // R3: a — c → b, a — d → b, c and d non-adjacent.
        let mids: Vec<usize> = (0..p)
            .filter(|&c| self.is_undirected(a, c) && self.is_directed(c, b))
            .collect();
        for (i, &c) in mids.iter().enumerate() {
            for &d in &mids[i + 1..] {
                if !self.adjacent(c, d) {
                    return true;
                }
            }
        }
        // R4: a — c → d → b, c and b non-adjacent, a adjacent to d.
        for c in (0..p).filter(|&c| self.is_undirected(a, c)) {
            for d in (0..p).filter(|&d| self.is_directed(c, d) && self.is_directed(d, b)) {
                if !self.adjacent(c, b) && self.adjacent(a, d) {
                    return true;
                }
            }
        }
        false
    }
}

/// CPDAG of the DAG given by parent sets. `fixed` lists orientations known a
/// priori (each must be an edge of the DAG); they stay directed.
pub fn dag_to_cpdag(parents: &[Vec<usize>], fixed: &BTreeSet<(usize, usize)>) -> Pdag {
    let p = parents.len();
    let mut g = Pdag {
        p,
        ..Pdag::default()
    };
    let dag_edge = |a: usize, b: usize| parents[b].contains(&a);
    for (b, pa) in parents.iter().enumerate() {
        for &a in pa {
            g.undirected.insert(pair(a, b));
        }
    }
    for (b, pa) in parents.iter().enumerate() {
        for (i, &a) in pa.iter().enumerate() {
            for &c in &pa[i + 1..] {
                if !dag_edge(a, c) && !dag_edge(c, a) {
                    g.orient(a, b);
                    g.orient(c, b);
                }
            }
        }
    }
    for &(a, b) in fixed {
        if dag_edge(a, b) {
            g.orient(a, b);
        }
    }
    g.apply_meek();
    g
}

//! Seeded linear-Gaussian data for tests, benchmarks and demos.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::ingest::{Dataset, RawTable};

/// A linear structural model `x_j = Σ β_ij x_i + σ_j ε_j` over nodes in
/// topological order (every parent index is smaller than its child).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSem {
    pub names: Vec<String>,
    /// `parents[j]` lists `(i, β_ij)`.
    pub parents: Vec<Vec<(usize, f64)>>,
    pub noise_sd: Vec<f64>,
}

impl LinearSem {
    /// Unit-variance noise everywhere, nodes named `x0`, `x1`, ...
    pub fn new(p: usize) -> Self {
        LinearSem {
            names: (0..p).map(|j| format!("x{j}")).collect(),
            parents: vec![Vec::new(); p],
            noise_sd: vec![1.0; p],
        }
    }

    pub fn edge(mut self, from: usize, to: usize, beta: f64) -> Self {
        assert!(from < to, "edges must follow node order");
        self.parents[to].push((from, beta));
        self
    }

    pub fn noise(mut self, node: usize, sd: f64) -> Self {
        self.noise_sd[node] = sd;
        self
    }

    pub fn p(&self) -> usize {
        self.names.len()
    }

    /// Random DAG: each forward pair is an edge with probability `density`,
    /// with |β| uniform in `[lo, hi]` and a random sign.
    pub fn random(p: usize, density: f64, lo: f64, hi: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sem = LinearSem::new(p);
        for j in 0..p {
            for i in 0..j {
                if rng.random_bool(density) {
                    let mag = rng.random_range(lo..=hi);
                    let beta = if rng.random_bool(0.5) { mag } else { -mag };
                    sem.parents[j].push((i, beta));
                }
            }
        }
        sem
    }

    /// Samples `n` rows, column-major.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = self.p();
        let mut cols = vec![vec![0.0; n]; p];
        for r in 0..n {
            for j in 0..p {
                let eps: f64 = StandardNormal.sample(&mut rng);
                let mut v = self.noise_sd[j] * eps;
                for &(i, b) in &self.parents[j] {
                    v += b * cols[i][r];
                }
                cols[j][r] = v;
            }
        }
        cols
    }

    pub fn table(&self, n: usize, seed: u64) -> RawTable {
        table_from_columns(&self.names, &self.sample(n, seed))
    }

    pub fn dataset(&self, n: usize, seed: u64) -> Dataset {
        Dataset::from_table("synthetic", &self.table(n, seed), &Default::default())
            .expect("synthetic data is well formed")
    }
}

/// Builds a raw table from named numeric columns. Values are written in
/// shortest round-trip form, so re-parsing is exact.
pub fn table_from_columns(names: &[String], cols: &[Vec<f64>]) -> RawTable {
    let n = cols.first().map_or(0, Vec::len);
    RawTable {
        headers: names.to_vec(),
        rows: (0..n)
            .map(|r| cols.iter().map(|c| format!("{:?}", c[r])).collect())
            .collect(),
    }
}

/// `p` independent standard normal columns.
pub fn independent(p: usize, n: usize, seed: u64) -> Dataset {
    LinearSem::new(p).dataset(n, seed)
}

/// `x0 → x1` with coefficient `beta` and noise scaled so Var(x1) = 1.
pub fn chain2(beta: f64, n: usize, seed: u64) -> Dataset {
    LinearSem::new(2)
        .edge(0, 1, beta)
        .noise(1, (1.0 - beta * beta).max(0.0).sqrt())
        .dataset(n, seed)
}

/// Collider `x0 → x2 ← x1` with independent causes.
pub fn collider(n: usize, seed: u64) -> Dataset {
    LinearSem::new(3)
        .edge(0, 2, 0.7)
        .edge(1, 2, 0.7)
        .dataset(n, seed)
}

use causeway_core::graph::{add_edge, NewEdge, Orientation, Sign};
use causeway_core::ingest::RawTable;
use causeway_core::sem::{apply_fit, fit};
use causeway_core::synth::{self, LinearSem};
use causeway_core::{CausalModel, Dataset};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

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

/// Slopes of `y` on `xs` (with intercept) via nalgebra's SVD.
fn ols(ds: &Dataset, y: usize, xs: &[usize]) -> Vec<f64> {
    let x = DMatrix::from_fn(ds.n, xs.len() + 1, |r, c| if c == 0 { 1.0 } else { ds.value(r, xs[c - 1]) });
    let yv = DVector::from_fn(ds.n, |r, _| ds.value(r, y));
    let beta = x.svd(true, true).solve(&yv, 1e-12).unwrap();
    beta.iter().skip(1).copied().collect()
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn coefficients_match_independent_ols() {
    let sem = LinearSem::new(4).edge(0, 2, 0.7).edge(1, 2, -0.5).edge(2, 3, 0.6).edge(0, 3, 0.3);
    let ds = sem.dataset(3000, 5);
    let m = directed(&ds, &[(0, 2), (1, 2), (2, 3), (0, 3)]);
    let fr = fit(&ds, &m).unwrap();
    let want2 = ols(&ds, 2, &[0, 1]);
    let want3 = ols(&ds, 3, &[2, 0]);
    let got = |i: usize| fr.coefficients[&m.edges[i].id].coefficient;
    assert!((got(0) - want2[0]).abs() < 1e-9);
    assert!((got(1) - want2[1]).abs() < 1e-9);
    assert!((got(2) - want3[0]).abs() < 1e-9);
    assert!((got(3) - want3[1]).abs() < 1e-9);
}

#[test]
fn misspecified_edge_in_a_chain_is_near_zero() {
    let sem = LinearSem::new(3).edge(0, 1, 0.8).edge(1, 2, 0.7);
    let ds = sem.dataset(5000, 9);
    let m = directed(&ds, &[(0, 1), (1, 2), (0, 2)]);
    let fr = fit(&ds, &m).unwrap();
    let spurious = fr.coefficients[&m.edges[2].id].coefficient;
    assert!(spurious.abs() < 0.05, "{spurious}");
}

#[test]
fn single_parent_equals_pearson_even_for_categorical_codes() {
    let csv: String = std::iter::once("g,y\n".to_string())
        .chain((0..60).map(|i| format!("{},{}\n", i % 3, (i as f64 * 0.37).sin() + (i % 3) as f64)))
        .collect();
    let ds = Dataset::from_reader("t", csv.as_bytes(), &Default::default()).unwrap();
    let m = directed(&ds, &[(0, 1)]);
    let fr = fit(&ds, &m).unwrap();
    let r = pearson(ds.column(0), ds.column(1));
    assert!((fr.coefficients[&m.edges[0].id].coefficient - r).abs() < 1e-9);
    let applied = apply_fit(&m, &fr).unwrap();
    assert_eq!(applied.edges[0].sign, Sign::Categorical);
}

fn scaled(table: &RawTable, col: usize, c: f64) -> RawTable {
    let mut t = table.clone();
    for row in &mut t.rows {
        let v: f64 = row[col].parse().unwrap();
        row[col] = format!("{:?}", v * c);
    }
    t
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scale_invariance(seed in 0u64..1000, col in 0usize..3, c in 0.001f64..1000.0) {
        let sem = LinearSem::new(3).edge(0, 1, 0.6).edge(1, 2, -0.4).edge(0, 2, 0.3);
        let table = sem.table(200, seed);
        let base = Dataset::from_table("a", &table, &Default::default()).unwrap();
        let other = Dataset::from_table("b", &scaled(&table, col, c), &Default::default()).unwrap();
        let m = directed(&base, &[(0, 1), (1, 2), (0, 2)]);
        let a = fit(&base, &m).unwrap();
        let b = fit(&other, &m).unwrap();
        for (id, fa) in &a.coefficients {
            prop_assert!((fa.coefficient - b.coefficients[id].coefficient).abs() <= 1e-9);
        }
    }

    #[test]
    fn single_parent_is_pearson(seed in 0u64..1000, beta in -0.95f64..0.95) {
        let ds = synth::chain2(beta, 150, seed);
        let m = directed(&ds, &[(0, 1)]);
        let fr = fit(&ds, &m).unwrap();
        let r = pearson(ds.column(0), ds.column(1));
        prop_assert!((fr.coefficients[&m.edges[0].id].coefficient - r).abs() <= 1e-9);
    }

    #[test]
    fn fit_apply_fit_is_a_fixed_point(seed in 0u64..1000) {
        let sem = LinearSem::random(4, 0.6, 0.5, 0.9, seed);
        let ds = sem.dataset(120, seed);
        let pairs: Vec<(usize, usize)> = sem
            .parents
            .iter()
            .enumerate()
            .flat_map(|(j, pa)| pa.iter().map(move |&(i, _)| (i, j)))
            .collect();
        let m = directed(&ds, &pairs);
        let first = fit(&ds, &m).unwrap();
        let applied = apply_fit(&m, &first).unwrap();
        let second = fit(&ds, &applied).unwrap();
        prop_assert_eq!(&first.coefficients, &second.coefficients);
        prop_assert_eq!(apply_fit(&applied, &second).unwrap(), applied);
    }
}

//! Least squares with intercept, computed from centered second moments.
//!
//! Both the BIC scorer and the SEM estimator regress one column on a small
//! set of others. The full centered cross-product matrix is computed once per
//! dataset; every regression then only factors a `k x k` block.

use crate::ingest::Dataset;

/// Relative pivot tolerance below which a parent set counts as collinear.
const PIVOT_TOLERANCE: f64 = 1e-10;

/// Column means and centered cross products `S[i][j] = Σ (x_i - x̄_i)(x_j - x̄_j)`.
#[derive(Debug, Clone)]
pub struct Moments {
    pub n: usize,
    pub means: Vec<f64>,
    pub cross: Vec<Vec<f64>>,
}

impl Moments {
    pub fn from_dataset(ds: &Dataset) -> Self {
        let p = ds.n_cols();
        let n = ds.n;
        let means: Vec<f64> = (0..p)
            .map(|j| ds.column(j).iter().sum::<f64>() / n as f64)
            .collect();
        let centered: Vec<Vec<f64>> = (0..p)
            .map(|j| ds.column(j).iter().map(|v| v - means[j]).collect())
            .collect();
        let mut cross = vec![vec![0.0; p]; p];
        for i in 0..p {
            for j in i..p {
                let s: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
                cross[i][j] = s;
                cross[j][i] = s;
            }
        }
        Moments { n, means, cross }
    }
}

/// Outcome of regressing one column on a set of others.
#[derive(Debug, Clone)]
pub struct Regression {
    /// Raw-scale slopes, one per regressor, in the order given.
    pub coefficients: Vec<f64>,
    /// Diagonal of `(X'X)^-1` over the centered regressors.
    pub inverse_diag: Vec<f64>,
    pub rss: f64,
    /// Total (centered) sum of squares of the response.
    pub tss: f64,
}

/// The regressor at `index` (position within the requested set) is
/// linearly dependent on the ones before it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Singular {
    pub index: usize,
}

/// In-place Cholesky factorization of a symmetric positive definite matrix,
/// returning the lower factor. Fails on a pivot that is small relative to the
/// original diagonal entry.
fn cholesky(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, Singular> {
    let k = a.len();
    let mut l = vec![vec![0.0; k]; k];
    for j in 0..k {
        let mut d = a[j][j];
        for m in 0..j {
            d -= l[j][m] * l[j][m];
        }
        if !(d > PIVOT_TOLERANCE * a[j][j].abs()) || !(a[j][j] > 0.0) {
            return Err(Singular { index: j });
        }
        let d = d.sqrt();
        l[j][j] = d;
        for i in (j + 1)..k {
            let mut s = a[i][j];
            for m in 0..j {
                s -= l[i][m] * l[j][m];
            }
            l[i][j] = s / d;
        }
    }
    Ok(l)
}

fn cholesky_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let k = l.len();
    let mut y = vec![0.0; k];
    for i in 0..k {
        let mut s = b[i];
        for m in 0..i {
            s -= l[i][m] * y[m];
        }
        y[i] = s / l[i][i];
    }
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = y[i];
        for m in (i + 1)..k {
            s -= l[m][i] * x[m];
        }
        x[i] = s / l[i][i];
    }
    x
}

/// Regresses column `response` on `regressors` (with intercept).
pub fn regress(m: &Moments, response: usize, regressors: &[usize]) -> Result<Regression, Singular> {
    let tss = m.cross[response][response];
    if regressors.is_empty() {
        return Ok(Regression {
            coefficients: Vec::new(),
            inverse_diag: Vec::new(),
            rss: tss,
            tss,
        });
    }
    let sxx: Vec<Vec<f64>> = regressors
        .iter()
        .map(|&i| regressors.iter().map(|&j| m.cross[i][j]).collect())
        .collect();
    let sxy: Vec<f64> = regressors.iter().map(|&i| m.cross[i][response]).collect();
    let l = cholesky(&sxx)?;
    let beta = cholesky_solve(&l, &sxy);
    let explained: f64 = beta.iter().zip(&sxy).map(|(b, s)| b * s).sum();
    let rss = tss - explained;
    let k = regressors.len();
    let inverse_diag = (0..k)
        .map(|j| {
            let mut e = vec![0.0; k];
            e[j] = 1.0;
            cholesky_solve(&l, &e)[j]
        })
        .collect();
    Ok(Regression {
        coefficients: beta,
        inverse_diag,
        rss,
        tss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn dataset(csv: &str) -> Dataset {
        Dataset::from_reader("t", csv.as_bytes(), &BTreeMap::new()).unwrap()
    }

    #[test]
    fn exact_linear_relation_has_zero_residual() {
        // y = 2x + 1.5 on raw scale; after z-scoring slope is 1.
        let ds = dataset("x,y\n1.5,4.5\n2.5,6.5\n3.5,8.5\n4.5,10.5\n");
        let m = Moments::from_dataset(&ds);
        let r = regress(&m, 1, &[0]).unwrap();
        assert!((r.coefficients[0] - 1.0).abs() < 1e-12);
        assert!(r.rss.abs() < 1e-12);
    }

    #[test]
    fn collinear_regressors_are_reported() {
        let ds = dataset("a,b,y\n1.5,3,1.25\n2.5,5,0.5\n3.5,7,2.5\n4.5,9,1.75\n");
        let m = Moments::from_dataset(&ds);
        assert_eq!(regress(&m, 2, &[0, 1]).unwrap_err(), Singular { index: 1 });
    }

    #[test]
    fn empty_regressor_set_returns_total_ss() {
        let ds = dataset("x,y\n1.5,4\n2.5,7\n3.5,8\n");
        let m = Moments::from_dataset(&ds);
        let r = regress(&m, 1, &[]).unwrap();
        // z-scored column with sample sd: Σz² = n - 1.
        assert!((r.rss - 2.0).abs() < 1e-12);
    }
}

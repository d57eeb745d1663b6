//! OSPA distance and RMSE scoring.

use nalgebra::{Matrix3, Point3};

use crate::{Error, Result};

/// Minimum-cost assignment of every row to a distinct column
/// (`rows ≤ cols`) by the Hungarian method with potentials. Returns the
/// column of each row and the total cost.
pub fn hungarian(cost: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let n = cost.len();
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    let m = cost[0].len();
    assert!(n <= m, "assignment needs rows ≤ columns");
    // 1-based arrays; column 0 is the virtual start.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    let total = assign.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    (assign, total)
}

#[derive(Debug, Clone, PartialEq)]
pub enum BaseDistance {
    Euclidean,
    /// Mahalanobis distance under one covariance per point of the first set.
    Mahalanobis(Vec<Matrix3<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OspaParams {
    pub cutoff: f64,
    pub order: f64,
    pub base: BaseDistance,
}

impl OspaParams {
    pub fn euclidean(cutoff: f64, order: f64) -> Self {
        Self {
            cutoff,
            order,
            base: BaseDistance::Euclidean,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cutoff > 0.0) || !(self.order >= 1.0) {
            return Err(Error::InvalidParameter("OSPA needs c > 0 and p ≥ 1".into()));
        }
        Ok(())
    }
}

/// OSPA distance of order `p` with cutoff `c` between two finite point sets.
pub fn ospa(x: &[Point3<f64>], y: &[Point3<f64>], params: &OspaParams) -> Result<f64> {
    params.validate()?;
    let precisions: Option<Vec<Matrix3<f64>>> = match &params.base {
        BaseDistance::Euclidean => None,
        BaseDistance::Mahalanobis(covs) => {
            if covs.len() != x.len() {
                return Err(Error::InvalidInput(
                    "one covariance per point of the first set is required".into(),
                ));
            }
            Some(
                covs.iter()
                    .map(|c| {
                        c.try_inverse()
                            .ok_or_else(|| Error::InvalidInput("singular OSPA covariance".into()))
                    })
                    .collect::<Result<_>>()?,
            )
        }
    };
    let base = |i: usize, j: usize| -> f64 {
        let e = y[j] - x[i];
        match &precisions {
            None => e.norm(),
            Some(p) => (e.transpose() * p[i] * e)[0].max(0.0).sqrt(),
        }
    };
    let (c, p) = (params.cutoff, params.order);
    let (m, n) = (x.len(), y.len());
    if m == 0 && n == 0 {
        return Ok(0.0);
    }
    let cut = |d: f64| d.min(c).powf(p);
    let (small, large) = (m.min(n), m.max(n));
    let cost: Vec<Vec<f64>> = (0..small)
        .map(|a| {
            (0..large)
                .map(|b| {
                    if m <= n {
                        cut(base(a, b))
                    } else {
                        cut(base(b, a))
                    }
                })
                .collect()
        })
        .collect();
    let (_, total) = hungarian(&cost);
    let pen = c.powf(p) * (large - small) as f64;
    Ok(((total + pen) / large as f64).powf(1.0 / p))
}

/// Mean and standard deviation over runs of the per-run RMSE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmseSummary {
    pub mean: f64,
    pub std: f64,
    pub per_run_count: usize,
}

/// RMSE of one time-aligned estimate series.
pub fn rmse_series(estimates: &[Point3<f64>], truth: &[Point3<f64>]) -> Result<f64> {
    if estimates.len() != truth.len() || estimates.is_empty() {
        return Err(Error::InvalidInput(
            "estimate and truth series must be equally long and non-empty".into(),
        ));
    }
    let se: f64 = estimates
        .iter()
        .zip(truth)
        .map(|(e, t)| (e - t).norm_squared())
        .sum();
    Ok((se / estimates.len() as f64).sqrt())
}

/// Estimate and truth trajectories of one run.
pub type RunPair = (Vec<Point3<f64>>, Vec<Point3<f64>>);

/// Per-run RMSE, then mean and (population) standard deviation across runs.
pub fn rmse(runs: &[RunPair]) -> Result<RmseSummary> {
    if runs.is_empty() {
        return Err(Error::InvalidInput("no runs".into()));
    }
    let per: Vec<f64> = runs
        .iter()
        .map(|(e, t)| rmse_series(e, t))
        .collect::<Result<_>>()?;
    let (mean, std) = mean_std(&per);
    Ok(RmseSummary {
        mean,
        std,
        per_run_count: per.len(),
    })
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

//! Monte-Carlo localisation of a static point at several distances with
//! the disparity-space filter and a bootstrap particle filter.

use disparity_fusion::cli::experiments::{localisation_case, single_run};
use disparity_fusion::metrics::rmse;
use disparity_fusion::sim::{par_runs, preset};

fn main() -> disparity_fusion::Result<()> {
    let cfg = preset("localise_s1")?;
    let prior = cfg.filter.disparity_prior;
    println!("distance  disparity RMSE  PF RMSE  (cm, {} runs)", cfg.runs);
    for distance in [50.0, 100.0, 150.0] {
        let case = localisation_case(&cfg, distance, prior);
        let runs = par_runs(case.runs, case.seed, |_, s| single_run(&case, s))
            .into_iter()
            .collect::<disparity_fusion::Result<Vec<_>>>()?;
        let ds: Vec<_> = runs
            .iter()
            .map(|r| (r.estimates.clone(), r.truth_trajectory()))
            .collect();
        let pf: Vec<_> = runs
            .iter()
            .filter_map(|r| r.baseline.as_ref())
            .zip(&runs)
            .map(|(b, r)| (b.estimates.clone(), r.truth_trajectory()))
            .collect();
        println!(
            "{distance:>6} cm  {:>14.3}  {:>7.2}",
            rmse(&ds)?.mean,
            rmse(&pf)?.mean
        );
    }
    Ok(())
}

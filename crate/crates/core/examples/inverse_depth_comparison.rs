//! Per-step error of the disparity-space filter against the inverse-depth
//! EKF for a static point, averaged over runs.

use disparity_fusion::cli::experiments::single_run;
use disparity_fusion::sim::{par_runs, preset, Baseline};

fn main() -> disparity_fusion::Result<()> {
    let mut cfg = preset("localise_s2")?;
    cfg.filter.baseline = Baseline::Idekf;
    let runs = par_runs(cfg.runs, cfg.seed, |_, s| single_run(&cfg, s))
        .into_iter()
        .collect::<disparity_fusion::Result<Vec<_>>>()?;
    let n = cfg.n_steps;
    let mut ds = vec![0.0; n];
    let mut id = vec![0.0; n];
    for r in &runs {
        let e = r.errors();
        let b = r.baseline_errors().expect("baseline configured");
        for t in 0..n {
            ds[t] += e[t] / runs.len() as f64;
            id[t] += b[t] / runs.len() as f64;
        }
    }
    println!("mean error over {} runs (cm)", runs.len());
    println!("step  disparity  inverse depth");
    for t in 0..n {
        println!("{:>4}  {:>9.3}  {:>13.3}", t + 1, ds[t], id[t]);
    }
    Ok(())
}

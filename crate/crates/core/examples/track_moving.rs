//! Tracks a moving object with the disparity-space filter and compares
//! the per-step error with a 1000-particle bootstrap filter.

use disparity_fusion::cli::experiments::single_run;
use disparity_fusion::sim::{preset, Baseline};

fn main() -> disparity_fusion::Result<()> {
    let mut cfg = preset("track")?;
    cfg.filter.baseline = Baseline::Pf;
    cfg.filter.baseline_particles = 1000;
    let run = single_run(&cfg, cfg.seed)?;
    let ds = run.errors();
    let pf = run.baseline_errors().unwrap_or_default();
    println!("step  truth (x, y, z)              disparity  PF   (error, cm)");
    let truth = run.truth_trajectory();
    for t in (0..ds.len()).step_by(10) {
        let p = truth[t];
        println!(
            "{t:>4}  ({:>7.2}, {:>6.2}, {:>7.2})  {:>9.3}  {:>6.3}",
            p.x,
            p.y,
            p.z,
            ds[t],
            pf.get(t).copied().unwrap_or(f64::NAN)
        );
    }
    let mean = |e: &[f64]| e.iter().sum::<f64>() / e.len() as f64;
    println!(
        "mean error: disparity {:.3} cm, PF {:.3} cm",
        mean(&ds),
        mean(&pf)
    );
    Ok(())
}

//! Parallel Monte-Carlo harness: per-step mean and spread of the tracking
//! error over independent seeded runs. `DF_THREADS` sets the worker count.

use disparity_fusion::cli::experiments::single_run;
use disparity_fusion::sim::{init_thread_pool, monte_carlo, preset, Baseline};

fn main() -> disparity_fusion::Result<()> {
    init_thread_pool();
    let mut cfg = preset("track")?;
    cfg.filter.baseline = Baseline::None;
    let (summary, _) = monte_carlo(20, cfg.seed, |_, s| Ok(single_run(&cfg, s)?.errors()));
    println!(
        "{} runs, {} failures, {:.3} s per run",
        summary.runs, summary.failures, summary.mean_runtime_s
    );
    for t in (0..summary.per_step_mean.len()).step_by(10) {
        println!(
            "step {t:>3}: error {:.3} ± {:.3} cm",
            summary.per_step_mean[t], summary.per_step_std[t]
        );
    }
    Ok(())
}

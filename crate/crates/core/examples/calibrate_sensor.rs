//! Joint multi-object tracking and right-camera calibration with a small
//! particle population. Prints the sensor estimate error as scans arrive.

use disparity_fusion::cli::experiments::calibration_run;
use disparity_fusion::sim::preset;

fn main() -> disparity_fusion::Result<()> {
    let mut cfg = preset("calibrate")?;
    if let Some(c) = cfg.calibration.as_mut() {
        c.particles = 200;
    }
    let run = calibration_run(&cfg, cfg.seed)?;
    let fmt = |e: &[f64; 6]| {
        format!(
            "x {:>7.2}  y {:>7.2}  z {:>7.2}  yaw {:>7.4}  pitch {:>7.4}  roll {:>7.4}",
            e[0], e[1], e[2], e[3], e[4], e[5]
        )
    };
    println!("true right camera: {:?}", run.true_state);
    println!("prior error  {}", fmt(&run.prior_error));
    for (s, e) in run.output.steps.iter().zip(&run.errors).step_by(5) {
        println!("step {:>3}     {}  (ESS {:.0})", s.time, fmt(e), s.ess);
    }
    if let Some(e) = run.errors.last() {
        println!("final        {}", fmt(e));
    }
    println!("resampling events: {}", run.output.resamples);
    Ok(())
}

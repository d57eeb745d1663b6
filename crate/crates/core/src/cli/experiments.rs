//! One Monte-Carlo run of each experiment, shared by the CLI, the examples
//! and the test suites.

use nalgebra::Point3;

use crate::calibration::{calibrate, CalibrationOutput, CalibrationPrior, SensorState};
use crate::geometry::StereoRig;
use crate::metrics::{ospa, OspaParams};
use crate::phd::{phd_track, PhdStep, Scan};
use crate::rng::{derive_seed, rng_from_seed};
use crate::sim::{
    flatten, generate_observations, generate_truth, Baseline, GroundTruth, ObjectConfig,
    ScenarioConfig,
};
use crate::single_object::{
    baseline_inverse_depth_ekf, baseline_pf, track_single, GaussianPrior, InverseDepthParams,
    ParticleFilterParams, SingleObjectParams,
};
use crate::{Error, Result};

/// Seeds of the independent streams of one run.
#[derive(Debug, Clone, Copy)]
pub struct RunSeeds {
    pub truth: u64,
    pub observations: u64,
    pub filter: u64,
    pub baseline: u64,
    pub prior: u64,
}

impl RunSeeds {
    pub fn new(run_seed: u64) -> Self {
        Self {
            truth: derive_seed(run_seed, &[1]),
            observations: derive_seed(run_seed, &[2]),
            filter: derive_seed(run_seed, &[3]),
            baseline: derive_seed(run_seed, &[4]),
            prior: derive_seed(run_seed, &[5]),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BaselineRun {
    pub kind: Baseline,
    pub estimates: Vec<Point3<f64>>,
    pub divergences: usize,
}

/// Single-object run: disparity filter plus optional baseline, with one
/// estimate per time step.
#[derive(Debug, Clone)]
pub struct SingleRun {
    pub truth: GroundTruth,
    pub scans: Vec<Scan>,
    pub estimates: Vec<Point3<f64>>,
    pub baseline: Option<BaselineRun>,
}

impl SingleRun {
    pub fn truth_trajectory(&self) -> Vec<Point3<f64>> {
        self.truth.trajectory(0)
    }

    /// Euclidean position error per step.
    pub fn errors(&self) -> Vec<f64> {
        per_step_errors(&self.estimates, &self.truth_trajectory())
    }

    pub fn baseline_errors(&self) -> Option<Vec<f64>> {
        self.baseline
            .as_ref()
            .map(|b| per_step_errors(&b.estimates, &self.truth_trajectory()))
    }
}

pub fn per_step_errors(est: &[Point3<f64>], truth: &[Point3<f64>]) -> Vec<f64> {
    est.iter().zip(truth).map(|(e, t)| (e - t).norm()).collect()
}

/// Spreads `(time, estimate)` pairs over `0..n_steps`, holding the latest
/// estimate through steps without observations.
fn align(series: &[(usize, Point3<f64>)], n_steps: usize) -> Result<Vec<Point3<f64>>> {
    let mut out = Vec::with_capacity(n_steps);
    let mut it = series.iter().peekable();
    let mut current = None;
    for t in 0..n_steps {
        while let Some(&&(time, p)) = it.peek() {
            if time > t {
                break;
            }
            current = Some(p);
            it.next();
        }
        out.push(
            current
                .ok_or_else(|| Error::InvalidInput(format!("no estimate available at step {t}")))?,
        );
    }
    Ok(out)
}

/// The scenario with a single static object at `distance` on the left
/// optical axis and the given disparity prior; used by the localisation
/// sweep.
pub fn localisation_case(
    cfg: &ScenarioConfig,
    distance: f64,
    prior: GaussianPrior,
) -> ScenarioConfig {
    let mut c = cfg.clone();
    c.objects = vec![ObjectConfig {
        position: [0.0, 0.0, distance],
        velocity: [0.0; 3],
    }];
    c.filter.disparity_prior = prior;
    c
}

/// Runs the disparity-space filter and the configured baseline on one
/// simulated single-object scenario.
pub fn single_run(cfg: &ScenarioConfig, run_seed: u64) -> Result<SingleRun> {
    let seeds = RunSeeds::new(run_seed);
    let rig = cfg.rig.build()?;
    let truth = generate_truth(cfg, &rig, seeds.truth);
    let scans = generate_observations(&truth, cfg, &rig, seeds.observations);
    let obs = flatten(&scans);
    let f = &cfg.filter;
    let params = SingleObjectParams {
        disparity_prior: f.disparity_prior,
        velocity_prior: f.velocity_prior,
        motion: f.motion,
        n_particles: f.n_particles,
        fov_truncation: true,
    };
    let out = track_single(&rig, &obs, &params, seeds.filter)?;
    let series: Vec<(usize, Point3<f64>)> =
        out.steps.iter().map(|s| (s.time, s.estimate)).collect();
    let estimates = align(&series, cfg.n_steps)?;
    let baseline = match f.baseline {
        Baseline::None => None,
        Baseline::Pf => {
            let p = ParticleFilterParams {
                n_particles: f.baseline_particles,
                disparity_prior: f.disparity_prior,
                velocity_prior: f.velocity_prior,
                motion: f.motion,
                resample_fraction: 0.5,
            };
            let r = baseline_pf(&rig, &obs, &p, seeds.baseline)?;
            Some(BaselineRun {
                kind: Baseline::Pf,
                estimates: align(&r.steps, cfg.n_steps)?,
                divergences: r.divergences,
            })
        }
        Baseline::Idekf => {
            let r = baseline_inverse_depth_ekf(
                &rig,
                &obs,
                &InverseDepthParams {
                    disparity_prior: f.disparity_prior,
                },
            )?;
            Some(BaselineRun {
                kind: Baseline::Idekf,
                estimates: align(&r, cfg.n_steps)?,
                divergences: 0,
            })
        }
    };
    Ok(SingleRun {
        truth,
        scans,
        estimates,
        baseline,
    })
}

#[derive(Debug, Clone)]
pub struct PhdRun {
    pub truth: GroundTruth,
    pub scans: Vec<Scan>,
    pub steps: Vec<PhdStep>,
    pub ospa: Vec<f64>,
}

/// GM-PHD tracking run scored by OSPA against the true positions.
pub fn phd_run(cfg: &ScenarioConfig, run_seed: u64) -> Result<PhdRun> {
    let seeds = RunSeeds::new(run_seed);
    let rig = cfg.rig.build()?;
    let truth = generate_truth(cfg, &rig, seeds.truth);
    let scans = generate_observations(&truth, cfg, &rig, seeds.observations);
    let params = cfg.phd_params()?;
    let steps = phd_track(&rig, &scans, &params, seeds.filter)?;
    let ospa = score_ospa(cfg, &truth, &steps)?;
    Ok(PhdRun {
        truth,
        scans,
        steps,
        ospa,
    })
}

fn ospa_params(cfg: &ScenarioConfig) -> OspaParams {
    let o = cfg.ospa.unwrap_or(crate::sim::OspaConfig {
        cutoff: 20.0,
        order: 1.0,
    });
    OspaParams::euclidean(o.cutoff, o.order)
}

fn score_ospa(cfg: &ScenarioConfig, truth: &GroundTruth, steps: &[PhdStep]) -> Result<Vec<f64>> {
    let params = ospa_params(cfg);
    steps
        .iter()
        .map(|s| ospa(&s.estimates, &truth.positions[s.time], &params))
        .collect()
}

#[derive(Debug, Clone)]
pub struct CalibrationRun {
    pub truth: GroundTruth,
    pub scans: Vec<Scan>,
    pub true_state: SensorState,
    pub prior_mean: SensorState,
    pub output: CalibrationOutput,
    /// Signed estimate error `(x, y, z, φ, θ, ψ)` per time step.
    pub errors: Vec<[f64; 6]>,
    /// Error of the prior mean.
    pub prior_error: [f64; 6],
}

/// Joint tracking and calibration run. The prior mean is drawn per run as
/// configured; the right camera of `cfg.rig` is the truth.
pub fn calibration_run(cfg: &ScenarioConfig, run_seed: u64) -> Result<CalibrationRun> {
    let cal = cfg
        .calibration
        .ok_or_else(|| Error::Config("calibration section is required".into()))?;
    let seeds = RunSeeds::new(run_seed);
    let rig: StereoRig = cfg.rig.build()?;
    let truth = generate_truth(cfg, &rig, seeds.truth);
    let scans = generate_observations(&truth, cfg, &rig, seeds.observations);
    let true_state = SensorState::from_pose(&cfg.rig.right.pose);
    let prior_mean = cal.prior_mean(&true_state, &mut rng_from_seed(seeds.prior));
    let prior = CalibrationPrior {
        mean: prior_mean,
        std: cal.prior_std,
        particles: cal.particles,
    };
    let mut params = cfg.phd_params()?;
    params.n_particles = cal.phd_particles;
    params.max_components = cal.max_components;
    let output = calibrate(&cfg.rig, &scans, &prior, &cal, &params, seeds.filter)?;
    let t = true_state.to_array();
    let diff = |s: &SensorState| {
        let a = s.to_array();
        std::array::from_fn(|i| a[i] - t[i])
    };
    let errors = output
        .steps
        .iter()
        .map(|s| diff(&s.estimate.mean))
        .collect();
    Ok(CalibrationRun {
        truth,
        scans,
        true_state,
        prior_mean,
        prior_error: diff(&prior_mean),
        output,
        errors,
    })
}

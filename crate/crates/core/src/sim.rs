//! Scenario configuration, ground truth, observation synthesis and the
//! Monte-Carlo harness.

use std::time::Instant;

use nalgebra::Point3;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Normal, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::CalibrationConfig;
use crate::geometry::{
    CameraIntrinsics, CameraPose, ImagePoint, ProjectiveCamera, Side, StereoRig,
};
use crate::phd::{PhdParams, Scan};
use crate::rng::{derive_seed, rng_from_seed};
use crate::single_object::{GaussianPrior, MotionModel, Observation};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraConfig {
    pub intrinsics: CameraIntrinsics,
    #[serde(default)]
    pub pose: CameraPose,
}

impl CameraConfig {
    pub fn build(&self) -> Result<ProjectiveCamera> {
        ProjectiveCamera::new(self.intrinsics, self.pose)
    }
}

fn default_abstract_baseline() -> f64 {
    crate::geometry::DEFAULT_ABSTRACT_BASELINE
}

/// Two cameras. With `rectified_baseline` set, the right camera is built
/// rectified with the left one and `right` is ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigConfig {
    pub left: CameraConfig,
    pub right: CameraConfig,
    #[serde(default)]
    pub rectified_baseline: Option<f64>,
    #[serde(default = "default_abstract_baseline")]
    pub abstract_baseline: f64,
}

impl RigConfig {
    pub fn build(&self) -> Result<StereoRig> {
        let left = self.left.build()?;
        match self.rectified_baseline {
            Some(b) => StereoRig::rectified(left, b),
            None => StereoRig::non_rectified(left, self.right.build()?, self.abstract_baseline),
        }
    }

    /// Same rig with the right camera at `pose`.
    pub fn with_right_pose(&self, pose: CameraPose) -> Self {
        let mut out = *self;
        out.right.pose = pose;
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectConfig {
    pub position: [f64; 3],
    #[serde(default)]
    pub velocity: [f64; 3],
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyncMode {
    /// Both cameras at every step, left first.
    #[default]
    Synchronous,
    /// Left camera at even steps, right camera at odd steps.
    Alternating,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    #[default]
    None,
    Pf,
    Idekf,
}

/// GM-PHD settings beyond the shared priors and motion model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhdConfig {
    pub p_survival: f64,
    pub birth_weight: f64,
    pub prune_threshold: f64,
    pub merge_distance: f64,
    pub max_components: usize,
    #[serde(default = "half")]
    pub extract_threshold: f64,
    #[serde(default = "enabled")]
    pub drop_unobservable: bool,
    /// Detection probability assumed by the filter; defaults to the
    /// simulated one.
    #[serde(default)]
    pub p_detection: Option<f64>,
}

fn enabled() -> bool {
    true
}

fn half() -> f64 {
    0.5
}

/// Filter settings shared by every command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    pub disparity_prior: GaussianPrior,
    #[serde(default)]
    pub velocity_prior: Option<GaussianPrior>,
    pub motion: MotionModel,
    /// Particles per move/prediction.
    pub n_particles: usize,
    #[serde(default)]
    pub baseline: Baseline,
    #[serde(default = "hundred")]
    pub baseline_particles: usize,
    #[serde(default)]
    pub phd: Option<PhdConfig>,
}

fn hundred() -> usize {
    100
}

/// Sweep used by `localise`: every distance along the left optical axis is
/// run against every disparity prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalisationGrid {
    pub distances: Vec<f64>,
    pub disparity_priors: Vec<GaussianPrior>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OspaConfig {
    pub cutoff: f64,
    pub order: f64,
}

fn one() -> f64 {
    1.0
}

fn one_run() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub rig: RigConfig,
    pub objects: Vec<ObjectConfig>,
    pub n_steps: usize,
    pub dt: f64,
    /// Pixel noise variances `(σ_u², σ_v²)`.
    pub observation_noise: [f64; 2],
    #[serde(default = "one")]
    pub p_detection: f64,
    #[serde(default)]
    pub clutter_lambda: f64,
    #[serde(default)]
    pub sync: SyncMode,
    /// Per-step velocity perturbation variance of the true motion
    /// (nearly-constant velocity); 0 gives exact constant velocity.
    #[serde(default)]
    pub truth_process_noise: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one_run")]
    pub runs: usize,
    pub filter: FilterConfig,
    #[serde(default)]
    pub grid: Option<LocalisationGrid>,
    #[serde(default)]
    pub calibration: Option<CalibrationConfig>,
    #[serde(default)]
    pub ospa: Option<OspaConfig>,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| config_err(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| config_err(e.to_string());
        self.rig.left.intrinsics.validate().map_err(wrap)?;
        self.rig.right.intrinsics.validate().map_err(wrap)?;
        self.rig.build().map_err(wrap)?;
        if self.n_steps == 0 {
            return Err(config_err("n_steps must be at least 1"));
        }
        if !(self.dt > 0.0) {
            return Err(config_err("dt must be positive"));
        }
        if !self
            .observation_noise
            .iter()
            .all(|v| *v > 0.0 && v.is_finite())
        {
            return Err(config_err("observation noise variances must be positive"));
        }
        if !(0.0..=1.0).contains(&self.p_detection) {
            return Err(config_err("p_detection must lie in [0, 1]"));
        }
        if !(self.clutter_lambda >= 0.0) || !(self.truth_process_noise >= 0.0) {
            return Err(config_err(
                "clutter_lambda and truth_process_noise must be non-negative",
            ));
        }
        if self.runs == 0 {
            return Err(config_err("runs must be at least 1"));
        }
        if self.filter.n_particles < 2 || self.filter.baseline_particles < 2 {
            return Err(config_err("particle counts must be at least 2"));
        }
        if !(self.filter.disparity_prior.variance > 0.0) {
            return Err(config_err("disparity prior variance must be positive"));
        }
        if let Some(v) = self.filter.velocity_prior {
            if !(v.variance > 0.0) {
                return Err(config_err("velocity prior variance must be positive"));
            }
        }
        self.filter.motion.validate().map_err(wrap)?;
        if (self.filter.motion.dt - self.dt).abs() > 1e-12 {
            return Err(config_err("filter.motion.dt must equal dt"));
        }
        if let Some(g) = &self.grid {
            if g.distances.is_empty() || g.disparity_priors.is_empty() {
                return Err(config_err("grid needs at least one distance and one prior"));
            }
        }
        if let Some(o) = self.ospa {
            if !(o.cutoff > 0.0) || !(o.order >= 1.0) {
                return Err(config_err("ospa needs cutoff > 0 and order ≥ 1"));
            }
        }
        if let Some(p) = &self.filter.phd {
            self.phd_params_with(p).validate().map_err(wrap)?;
        }
        if let Some(c) = &self.calibration {
            c.validate().map_err(wrap)?;
        }
        Ok(())
    }

    pub fn noise_covariance(&self) -> nalgebra::Matrix2<f64> {
        nalgebra::Matrix2::new(
            self.observation_noise[0],
            0.0,
            0.0,
            self.observation_noise[1],
        )
    }

    fn phd_params_with(&self, p: &PhdConfig) -> PhdParams {
        PhdParams {
            p_survival: p.p_survival,
            p_detection: p.p_detection.unwrap_or(self.p_detection),
            clutter_lambda: self.clutter_lambda,
            birth_weight: p.birth_weight,
            disparity_prior: self.filter.disparity_prior,
            velocity_prior: self.filter.velocity_prior,
            motion: self.filter.motion,
            n_particles: self.filter.n_particles,
            prune_threshold: p.prune_threshold,
            merge_distance: p.merge_distance,
            max_components: p.max_components,
            extract_threshold: p.extract_threshold,
            drop_unobservable: p.drop_unobservable,
        }
    }

    /// PHD parameters assembled from the filter section and the scenario's
    /// detection and clutter settings.
    pub fn phd_params(&self) -> Result<PhdParams> {
        let p = self
            .filter
            .phd
            .as_ref()
            .ok_or_else(|| config_err("filter.phd section is required"))?;
        Ok(self.phd_params_with(p))
    }
}

/// True trajectories and their projections.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// `positions[t][k]`.
    pub positions: Vec<Vec<Point3<f64>>>,
    pub velocities: Vec<Vec<[f64; 3]>>,
    /// `projections[t][k][camera]`; `None` when the object is behind or on
    /// the camera plane.
    pub projections: Vec<Vec<[Option<ImagePoint>; 2]>>,
}

impl GroundTruth {
    pub fn n_steps(&self) -> usize {
        self.positions.len()
    }

    /// Trajectory of object `k`.
    pub fn trajectory(&self, k: usize) -> Vec<Point3<f64>> {
        self.positions.iter().map(|p| p[k]).collect()
    }
}

/// Integrates every object over `n_steps`. With `truth_process_noise > 0`
/// each step perturbs the velocity by `w ~ N(0, q I)` and moves by
/// `(v + w/2) dt`.
pub fn generate_truth(config: &ScenarioConfig, rig: &StereoRig, seed: u64) -> GroundTruth {
    let mut rng = rng_from_seed(derive_seed(seed, &[0x7472]));
    let sd = config.truth_process_noise.sqrt();
    let mut x: Vec<[f64; 3]> = config.objects.iter().map(|o| o.position).collect();
    let mut v: Vec<[f64; 3]> = config.objects.iter().map(|o| o.velocity).collect();
    let mut truth = GroundTruth {
        positions: Vec::new(),
        velocities: Vec::new(),
        projections: Vec::new(),
    };
    for t in 0..config.n_steps {
        if t > 0 {
            for (xk, vk) in x.iter_mut().zip(v.iter_mut()) {
                for a in 0..3 {
                    let w: f64 = if sd > 0.0 {
                        sd * rng.sample::<f64, _>(StandardNormal)
                    } else {
                        0.0
                    };
                    xk[a] += (vk[a] + 0.5 * w) * config.dt;
                    vk[a] += w;
                }
            }
        }
        truth
            .positions
            .push(x.iter().map(|p| Point3::new(p[0], p[1], p[2])).collect());
        truth.velocities.push(v.clone());
        truth.projections.push(
            x.iter()
                .map(|p| {
                    [Side::Left, Side::Right].map(|s| match rig.camera(s).project_raw(p) {
                        Some((u, v, w)) if w > 0.0 => Some(ImagePoint::new(u, v)),
                        _ => None,
                    })
                })
                .collect(),
        );
    }
    truth
}

/// Cameras that observe at step `t`, in processing order.
pub fn cameras_at(sync: SyncMode, t: usize) -> &'static [Side] {
    match sync {
        SyncMode::Synchronous => &[Side::Left, Side::Right],
        SyncMode::Alternating if t.is_multiple_of(2) => &[Side::Left],
        SyncMode::Alternating => &[Side::Right],
    }
}

/// Per-step, per-camera scans: each true projection inside the image is
/// detected with probability `p_D` and perturbed by pixel noise, Poisson
/// clutter is added uniformly over the image, observations falling outside
/// the image are dropped and each scan is shuffled.
pub fn generate_observations(
    truth: &GroundTruth,
    config: &ScenarioConfig,
    rig: &StereoRig,
    seed: u64,
) -> Vec<Scan> {
    let mut rng = rng_from_seed(derive_seed(seed, &[0x6f62]));
    let r = config.noise_covariance();
    let (su, sv) = (
        config.observation_noise[0].sqrt(),
        config.observation_noise[1].sqrt(),
    );
    let poisson =
        (config.clutter_lambda > 0.0).then(|| Poisson::new(config.clutter_lambda).expect("λ > 0"));
    let mut scans = Vec::new();
    for t in 0..truth.n_steps() {
        for &cam in cameras_at(config.sync, t) {
            let intr = rig.camera(cam).intrinsics();
            let mut obs = Vec::new();
            for proj in &truth.projections[t] {
                let Some(z) = proj[cam.index()] else { continue };
                if !intr.contains(z.u, z.v) {
                    continue;
                }
                if rng.random::<f64>() >= config.p_detection {
                    continue;
                }
                let u = z.u + su * rng.sample::<f64, _>(StandardNormal);
                let v = z.v + sv * rng.sample::<f64, _>(StandardNormal);
                if intr.contains(u, v) {
                    obs.push(Observation::new(ImagePoint::new(u, v), r, cam, t));
                }
            }
            if let Some(p) = &poisson {
                let n = rng.sample::<f64, _>(p) as usize;
                for _ in 0..n {
                    let u = rng.random::<f64>() * intr.width;
                    let v = rng.random::<f64>() * intr.height;
                    obs.push(Observation::new(ImagePoint::new(u, v), r, cam, t));
                }
            }
            obs.shuffle(&mut rng);
            scans.push(Scan {
                time: t,
                camera: cam,
                observations: obs,
            });
        }
    }
    scans
}

/// Flattens scans into a time-ordered observation stream.
pub fn flatten(scans: &[Scan]) -> Vec<Observation> {
    scans
        .iter()
        .flat_map(|s| s.observations.iter().copied())
        .collect()
}

/// Draws from `N(μ, σ²)` componentwise; used for prior offsets in tests and
/// presets.
pub fn perturb<R: Rng + ?Sized>(rng: &mut R, mean: &[f64], std: &[f64]) -> Vec<f64> {
    mean.iter()
        .zip(std)
        .map(|(&m, &s)| {
            if s > 0.0 {
                rng.sample(Normal::new(m, s).expect("finite std"))
            } else {
                m
            }
        })
        .collect()
}

/// CSV of the ground truth: one row per (time, object).
pub fn truth_csv(truth: &GroundTruth) -> String {
    let mut s = String::from("time,object,x,y,z,vx,vy,vz,u_left,v_left,u_right,v_right\n");
    for (t, (pos, vel)) in truth.positions.iter().zip(&truth.velocities).enumerate() {
        for (k, (p, v)) in pos.iter().zip(vel).enumerate() {
            let proj = &truth.projections[t][k];
            let pr = |o: Option<ImagePoint>| match o {
                Some(z) => format!("{},{}", fmt_f64(z.u), fmt_f64(z.v)),
                None => ",".to_string(),
            };
            s.push_str(&format!(
                "{t},{k},{},{},{},{},{},{},{},{}\n",
                fmt_f64(p.x),
                fmt_f64(p.y),
                fmt_f64(p.z),
                fmt_f64(v[0]),
                fmt_f64(v[1]),
                fmt_f64(v[2]),
                pr(proj[0]),
                pr(proj[1])
            ));
        }
    }
    s
}

/// CSV of the observations: one row per observation, no object identity.
pub fn observations_csv(scans: &[Scan]) -> String {
    let mut s = String::from("time,camera,u,v\n");
    for scan in scans {
        for o in &scan.observations {
            s.push_str(&format!(
                "{},{},{},{}\n",
                o.time,
                o.camera.label(),
                fmt_f64(o.z.u),
                fmt_f64(o.z.v)
            ));
        }
    }
    s
}

/// 17 significant digits, enough to round-trip an `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Aggregate of per-run metric series.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSummary {
    pub per_step_mean: Vec<f64>,
    pub per_step_std: Vec<f64>,
    pub runs: usize,
    pub failures: usize,
    pub failure_messages: Vec<String>,
    pub mean_runtime_s: f64,
}

/// Runs `f(run_index, run_seed)` for `n_runs` independent runs, in parallel
/// when the pool allows, and aggregates equal-length metric series. Failed
/// runs are counted and excluded.
pub fn monte_carlo<F>(
    n_runs: usize,
    base_seed: u64,
    f: F,
) -> (MonteCarloSummary, Vec<Result<Vec<f64>>>)
where
    F: Fn(usize, u64) -> Result<Vec<f64>> + Sync,
{
    let results: Vec<(Result<Vec<f64>>, f64)> = (0..n_runs)
        .into_par_iter()
        .map(|i| {
            let start = Instant::now();
            let r = f(i, run_seed(base_seed, i));
            (r, start.elapsed().as_secs_f64())
        })
        .collect();
    let ok: Vec<&Vec<f64>> = results
        .iter()
        .filter_map(|(r, _)| r.as_ref().ok())
        .collect();
    let len = ok.iter().map(|s| s.len()).min().unwrap_or(0);
    let mut mean = vec![0.0; len];
    let mut std = vec![0.0; len];
    for t in 0..len {
        let col: Vec<f64> = ok.iter().map(|s| s[t]).collect();
        let (m, s) = crate::metrics::mean_std(&col);
        mean[t] = m;
        std[t] = s;
    }
    let failure_messages: Vec<String> = results
        .iter()
        .filter_map(|(r, _)| r.as_ref().err().map(|e| e.to_string()))
        .collect();
    let summary = MonteCarloSummary {
        per_step_mean: mean,
        per_step_std: std,
        runs: ok.len(),
        failures: failure_messages.len(),
        failure_messages,
        mean_runtime_s: results.iter().map(|(_, t)| t).sum::<f64>() / n_runs.max(1) as f64,
    };
    (summary, results.into_iter().map(|(r, _)| r).collect())
}

/// Runs `f(run_index, run_seed)` for `n_runs` runs in parallel and keeps
/// the full per-run results in run order.
pub fn par_runs<T, F>(n_runs: usize, base_seed: u64, f: F) -> Vec<Result<T>>
where
    T: Send,
    F: Fn(usize, u64) -> Result<T> + Sync,
{
    (0..n_runs)
        .into_par_iter()
        .map(|i| f(i, run_seed(base_seed, i)))
        .collect()
}

/// Seed of run `i` under `base`.
pub fn run_seed(base: u64, i: usize) -> u64 {
    derive_seed(base, &[i as u64])
}

/// Worker count from `DF_THREADS` (unset or 0: all cores).
pub fn thread_count() -> usize {
    std::env::var("DF_THREADS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0)
}

/// Installs the global rayon pool sized by `DF_THREADS`. Later calls are
/// no-ops.
pub fn init_thread_pool() {
    let n = thread_count();
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
}

const PRESETS: &[(&str, &str)] = &[
    ("localise_s1", include_str!("../presets/localise_s1.json")),
    ("localise_s2", include_str!("../presets/localise_s2.json")),
    ("track", include_str!("../presets/track.json")),
    ("phd", include_str!("../presets/phd.json")),
    ("calibrate", include_str!("../presets/calibrate.json")),
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

/// Loads a checked-in preset by name.
pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let text = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| {
            config_err(format!(
                "unknown preset '{name}'; available: {}",
                preset_names().join(", ")
            ))
        })?;
    ScenarioConfig::from_json(text)
}

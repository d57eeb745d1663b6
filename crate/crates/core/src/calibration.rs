//! Joint multi-object tracking and right-camera extrinsic calibration.
//!
//! The right camera's pose is represented by a weighted particle population.
//! Each particle carries the rig its pose induces and a conditional GM-PHD
//! filter over the objects. Every scan runs each particle's PHD step under
//! its own geometry and reweights the particle by the multi-object
//! likelihood of the scan.

use std::collections::HashMap;

use nalgebra::Point3;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{CameraPose, Side, StereoRig};
use crate::phd::{
    component_position, phd_update, ClutterModel, GaussianMixture, GmPhdFilter, PhdParams, Scan,
};
use crate::resampling::{effective_sample_size, systematic_indices};
use crate::rng::{derive_seed, rng_from_seed};
use crate::sim::RigConfig;
use crate::{Error, Result};

/// Right-camera extrinsics: position (cm) and yaw/pitch/roll (rad).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorState {
    pub position: [f64; 3],
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl SensorState {
    pub fn from_pose(p: &CameraPose) -> Self {
        Self {
            position: p.position,
            yaw: p.yaw,
            pitch: p.pitch,
            roll: p.roll,
        }
    }

    pub fn pose(&self) -> CameraPose {
        CameraPose::new(self.position, self.yaw, self.pitch, self.roll)
    }

    /// `(x, y, z, φ, θ, ψ)`.
    pub fn to_array(&self) -> [f64; 6] {
        let p = self.position;
        [p[0], p[1], p[2], self.yaw, self.pitch, self.roll]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self {
            position: [a[0], a[1], a[2]],
            yaw: a[3],
            pitch: a[4],
            roll: a[5],
        }
    }
}

#[derive(Debug, Clone)]
pub struct SensorParticle {
    pub state: SensorState,
    pub weight: f64,
    pub filter: GmPhdFilter,
    pub rig: StereoRig,
    /// Shared by all particles so that likelihoods differ only through the
    /// sensor state.
    seed: u64,
    /// Equal for exact copies made by resampling.
    lineage: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationPrior {
    pub mean: SensorState,
    /// `(σ_x, σ_y, σ_z, σ_φ, σ_θ, σ_ψ)`.
    pub std: [f64; 6],
    pub particles: usize,
}

/// Calibration settings of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationConfig {
    pub prior_std: [f64; 6],
    pub particles: usize,
    /// Offset of the prior mean from the true pose in units of `prior_std`.
    /// `None` draws the offset from the prior itself, so that the truth is a
    /// sample of the prior.
    #[serde(default)]
    pub prior_offset_sigmas: Option<f64>,
    #[serde(default = "half")]
    pub ess_fraction: f64,
    #[serde(default)]
    pub jitter_std: [f64; 6],
    /// Reweight on right-camera scans only.
    #[serde(default)]
    pub right_only: bool,
    /// Per-particle PHD overrides (particles per move, component cap).
    pub phd_particles: usize,
    pub max_components: usize,
}

fn half() -> f64 {
    0.5
}

impl CalibrationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.particles == 0 {
            return Err(Error::InvalidParameter(
                "calibration needs at least one particle".into(),
            ));
        }
        if !self
            .prior_std
            .iter()
            .chain(&self.jitter_std)
            .all(|s| *s >= 0.0 && s.is_finite())
        {
            return Err(Error::InvalidParameter(
                "standard deviations must be finite and non-negative".into(),
            ));
        }
        if !(self.ess_fraction > 0.0 && self.ess_fraction <= 1.0) {
            return Err(Error::InvalidParameter(
                "ess_fraction must lie in (0, 1]".into(),
            ));
        }
        if self.phd_particles < 2 || self.max_components == 0 {
            return Err(Error::InvalidParameter(
                "need ≥ 2 PHD particles and ≥ 1 component".into(),
            ));
        }
        Ok(())
    }

    /// Prior mean for one run given the true right-camera state.
    pub fn prior_mean<R: Rng + ?Sized>(&self, truth: &SensorState, rng: &mut R) -> SensorState {
        let t = truth.to_array();
        SensorState::from_array(std::array::from_fn(|i| {
            let k = match self.prior_offset_sigmas {
                Some(k) => k,
                None => rng.sample(StandardNormal),
            };
            t[i] + k * self.prior_std[i]
        }))
    }
}

fn sample_state<R: Rng + ?Sized>(mean: &SensorState, std: &[f64; 6], rng: &mut R) -> SensorState {
    let m = mean.to_array();
    SensorState::from_array(std::array::from_fn(|i| {
        if std[i] > 0.0 {
            m[i] + std[i] * rng.sample::<f64, _>(StandardNormal)
        } else {
            m[i]
        }
    }))
}

/// `M` particles from the independent Gaussian prior, uniform weights,
/// empty conditional mixtures. The left camera of `rig` is the fixed world
/// reference; the right pose comes from each particle.
pub fn init_calibration(
    prior: &CalibrationPrior,
    rig: &RigConfig,
    seed: u64,
) -> Result<Vec<SensorParticle>> {
    if prior.particles == 0 {
        return Err(Error::InvalidParameter(
            "calibration needs at least one particle".into(),
        ));
    }
    let mut rng = rng_from_seed(derive_seed(seed, &[0x7072]));
    let w = 1.0 / prior.particles as f64;
    (0..prior.particles)
        .map(|m| {
            let state = sample_state(&prior.mean, &prior.std, &mut rng);
            Ok(SensorParticle {
                state,
                weight: w,
                filter: GmPhdFilter::new(),
                rig: rig.with_right_pose(state.pose()).build()?,
                seed: filter_seed(seed),
                lineage: m as u64,
            })
        })
        .collect()
}

/// Seed of the conditional filters, common to all particles.
pub fn filter_seed(seed: u64) -> u64 {
    derive_seed(seed, &[0x6d])
}

/// `ln L = −λ − Σ w• + Σ_z ln(λc(z) + Σ_k w_k q_k(z))` for the detected part
/// of a predicted mixture.
pub fn calibration_likelihood(
    detected: &GaussianMixture,
    scan: &Scan,
    clutter: &ClutterModel,
    h_side: Side,
) -> Result<f64> {
    let empty = GaussianMixture::empty(detected.frame);
    Ok(phd_update(&empty, detected, &scan.observations, clutter, h_side)?.log_likelihood(clutter))
}

/// Runs each particle's PHD step on `scan` and, when `reweight` holds,
/// multiplies its weight by the scan likelihood and renormalises. Returns
/// the per-particle log-likelihoods. Particles of one lineage are exact
/// copies, so the step runs once per lineage.
pub fn joint_update(
    population: &mut [SensorParticle],
    scan: &Scan,
    params: &PhdParams,
    reweight: bool,
) -> Result<Vec<f64>> {
    let mut group_of = HashMap::new();
    let mut reps = Vec::new();
    let groups: Vec<usize> = population
        .iter()
        .enumerate()
        .map(|(i, p)| {
            *group_of.entry(p.lineage).or_insert_with(|| {
                reps.push(i);
                reps.len() - 1
            })
        })
        .collect();
    let stepped: Vec<(GmPhdFilter, f64)> = reps
        .par_iter()
        .map(|&i| {
            let p = &population[i];
            let mut filter = p.filter.clone();
            let l = match filter.process(&p.rig, scan, params, p.seed) {
                Ok(r) if r.log_likelihood.is_finite() => r.log_likelihood,
                _ => f64::NEG_INFINITY,
            };
            (filter, l)
        })
        .collect();
    let mut logl = Vec::with_capacity(population.len());
    for (p, &g) in population.iter_mut().zip(&groups) {
        p.filter = stepped[g].0.clone();
        logl.push(stepped[g].1);
    }
    if reweight {
        let lw: Vec<f64> = population
            .iter()
            .zip(&logl)
            .map(|(p, l)| p.weight.ln() + l)
            .collect();
        let max = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::NormalisationFailure);
        }
        let w: Vec<f64> = lw.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = w.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::NormalisationFailure);
        }
        for (p, wi) in population.iter_mut().zip(w) {
            p.weight = wi / total;
        }
    }
    Ok(logl)
}

/// Systematic resampling when ESS < `fraction · M`. Copies carry their
/// conditional mixtures; `jitter_std` perturbs the copies' sensor states,
/// and jittered copies start new lineages.
/// Returns whether resampling happened.
pub fn resample(
    population: &mut Vec<SensorParticle>,
    fraction: f64,
    jitter_std: &[f64; 6],
    rig: &RigConfig,
    seed: u64,
) -> Result<bool> {
    let m = population.len();
    let weights: Vec<f64> = population.iter().map(|p| p.weight).collect();
    if effective_sample_size(&weights) >= fraction * m as f64 {
        return Ok(false);
    }
    let mut rng = rng_from_seed(seed);
    let idx = systematic_indices(&weights, m, &mut rng);
    let jitter = jitter_std.iter().any(|s| *s > 0.0);
    let mut next = Vec::with_capacity(m);
    for (i, &j) in idx.iter().enumerate() {
        let mut p = population[j].clone();
        p.weight = 1.0 / m as f64;
        if jitter {
            p.lineage = derive_seed(seed, &[i as u64]);
            p.state = sample_state(&p.state, jitter_std, &mut rng);
            p.rig = rig.with_right_pose(p.state.pose()).build()?;
        }
        next.push(p);
    }
    *population = next;
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorEstimate {
    pub mean: SensorState,
    pub std: [f64; 6],
}

/// Weighted mean and standard deviation of every component; angles are
/// averaged arithmetically.
pub fn estimate_sensor(population: &[SensorParticle]) -> SensorEstimate {
    let total: f64 = population.iter().map(|p| p.weight).sum();
    let mut mean = [0.0; 6];
    for p in population {
        let a = p.state.to_array();
        for i in 0..6 {
            mean[i] += p.weight * a[i];
        }
    }
    mean.iter_mut().for_each(|m| *m /= total);
    let mut var = [0.0; 6];
    for p in population {
        let a = p.state.to_array();
        for i in 0..6 {
            var[i] += p.weight * (a[i] - mean[i]).powi(2);
        }
    }
    SensorEstimate {
        mean: SensorState::from_array(mean),
        std: var.map(|v| (v / total).max(0.0).sqrt()),
    }
}

#[derive(Debug, Clone)]
pub struct CalibrationStep {
    pub time: usize,
    pub estimate: SensorEstimate,
    pub ess: f64,
}

#[derive(Debug, Clone)]
pub struct CalibrationOutput {
    pub steps: Vec<CalibrationStep>,
    /// Targets extracted by the heaviest particle after the last scan.
    pub targets: Vec<Point3<f64>>,
    pub resamples: usize,
}

/// Drives [`joint_update`] over time-ordered scans with resampling, and
/// records the sensor estimate at the last scan of each time step.
pub fn calibrate(
    rig: &RigConfig,
    scans: &[Scan],
    prior: &CalibrationPrior,
    config: &CalibrationConfig,
    params: &PhdParams,
    seed: u64,
) -> Result<CalibrationOutput> {
    config.validate()?;
    params.validate()?;
    let mut population = init_calibration(prior, rig, seed)?;
    let mut steps = Vec::new();
    let mut resamples = 0;
    let mut targets = Vec::new();
    for (i, scan) in scans.iter().enumerate() {
        let reweight = !config.right_only || scan.camera == Side::Right;
        joint_update(&mut population, scan, params, reweight)?;
        let last_of_step = scans.get(i + 1).is_none_or(|n| n.time != scan.time);
        if last_of_step {
            let w: Vec<f64> = population.iter().map(|p| p.weight).collect();
            steps.push(CalibrationStep {
                time: scan.time,
                estimate: estimate_sensor(&population),
                ess: effective_sample_size(&w),
            });
        }
        if i + 1 == scans.len() {
            let best = population
                .iter()
                .max_by(|a, b| a.weight.total_cmp(&b.weight))
                .expect("non-empty population");
            targets = best
                .filter
                .mixture()
                .components
                .iter()
                .filter(|c| c.weight > params.extract_threshold)
                .filter_map(|c| component_position(&best.rig, &c.state).ok())
                .collect();
        }
        if resample(
            &mut population,
            config.ess_fraction,
            &config.jitter_std,
            rig,
            derive_seed(seed, &[0x7273, i as u64]),
        )? {
            resamples += 1;
        }
    }
    Ok(CalibrationOutput {
        steps,
        targets,
        resamples,
    })
}

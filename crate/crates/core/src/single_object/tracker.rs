use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use super::kalman::kalman_update;
use super::particle::{transport, TransportSpec};
use super::state::{initialise, GaussianPrior, GaussianState, MotionModel, Observation};
use crate::geometry::{DisparityPoint, StereoRig};
use crate::rng::{derive_seed, rng_from_seed};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleObjectParams {
    pub disparity_prior: GaussianPrior,
    /// Prior on each disparity-space velocity component (px s⁻¹); `None`
    /// gives a static 3-D state.
    #[serde(default)]
    pub velocity_prior: Option<GaussianPrior>,
    pub motion: MotionModel,
    pub n_particles: usize,
    #[serde(default = "yes")]
    pub fov_truncation: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrackStats {
    pub initialisations: usize,
    pub particle_steps: usize,
    pub kalman_updates: usize,
}

#[derive(Debug, Clone)]
pub struct TrackStep {
    pub time: usize,
    pub state: GaussianState,
    pub estimate: Point3<f64>,
}

#[derive(Debug, Clone)]
pub struct TrackOutput {
    pub steps: Vec<TrackStep>,
    pub stats: TrackStats,
}

/// [`initialise`] in the frame `rig` assigns to the observing camera. On a
/// rectified rig a right-camera observation sees `u + d`, so the left-image
/// coordinate inherits the disparity uncertainty with negative correlation.
pub fn initialise_on_rig(
    rig: &StereoRig,
    obs: &Observation,
    disparity_prior: GaussianPrior,
    velocity_prior: Option<GaussianPrior>,
) -> Result<GaussianState> {
    let frame = rig.frame_id(obs.camera);
    if frame == obs.camera {
        return initialise(obs, disparity_prior, velocity_prior, frame);
    }
    let mut shifted = *obs;
    shifted.camera = frame;
    shifted.z.u -= disparity_prior.mean;
    let mut s = initialise(&shifted, disparity_prior, velocity_prior, frame)?;
    s.cov[(0, 0)] += disparity_prior.variance;
    s.cov[(0, 2)] = -disparity_prior.variance;
    s.cov[(2, 0)] = -disparity_prior.variance;
    s.check_spd()?;
    Ok(s)
}

/// Sequential single-object filter over an asynchronous observation stream.
///
/// First observation: initialise in the observing camera's frame. Later
/// observations: predict (same frame, time advanced), move (frame changed,
/// composing motion if time advanced) or keep the belief (same frame, static
/// object), then Kalman-update.
#[derive(Debug, Clone)]
pub struct SingleObjectTracker<'a> {
    rig: &'a StereoRig,
    params: SingleObjectParams,
    state: Option<GaussianState>,
    last_time: usize,
    stats: TrackStats,
    seed: u64,
    calls: u64,
}

impl<'a> SingleObjectTracker<'a> {
    pub fn new(rig: &'a StereoRig, params: SingleObjectParams, seed: u64) -> Self {
        Self {
            rig,
            params,
            state: None,
            last_time: 0,
            stats: TrackStats::default(),
            seed,
            calls: 0,
        }
    }

    pub fn state(&self) -> Option<&GaussianState> {
        self.state.as_ref()
    }

    pub fn stats(&self) -> TrackStats {
        self.stats
    }

    pub fn process(&mut self, obs: &Observation) -> Result<()> {
        let target = self.rig.frame_id(obs.camera);
        let Some(state) = self.state.take() else {
            self.state = Some(initialise_on_rig(
                self.rig,
                obs,
                self.params.disparity_prior,
                self.params.velocity_prior,
            )?);
            self.last_time = obs.time;
            self.stats.initialisations += 1;
            return Ok(());
        };
        if obs.time < self.last_time {
            return Err(Error::InvalidInput(
                "observations must be time-ordered".into(),
            ));
        }
        let elapsed = obs.time - self.last_time;
        let moving = !self.params.motion.is_static() && state.is_dynamic() && elapsed > 0;
        let predicted = if state.frame == target && !moving {
            state
        } else {
            self.stats.particle_steps += 1;
            self.calls += 1;
            let fov = (self.params.fov_truncation && state.frame != target)
                .then(|| self.rig.frame_camera(target));
            let spec = TransportSpec {
                from: self.rig.frame(state.frame),
                to: self.rig.frame(target),
                motion: moving.then_some(self.params.motion),
                elapsed_steps: elapsed as f64,
                fov,
            };
            let mut rng = rng_from_seed(derive_seed(self.seed, &[self.calls]));
            let mut out = transport(&state, &spec, self.params.n_particles, &mut rng)?;
            out.frame = target;
            out
        };
        let updated = kalman_update(&predicted, obs, self.rig.observation_side(obs.camera))?;
        self.stats.kalman_updates += 1;
        self.state = Some(updated.posterior);
        self.last_time = obs.time;
        Ok(())
    }

    /// MAP (= mean) of the belief mapped to world space.
    pub fn estimate(&self) -> Result<Point3<f64>> {
        let s = self
            .state
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("tracker not initialised".into()))?;
        let p = s.position();
        self.rig
            .frame(s.frame)
            .from_disparity(&DisparityPoint::new(p[0], p[1], p[2]))
    }
}

/// Runs the single-object filter over a time-ordered stream and records one
/// estimate per time step, after all observations of that step.
pub fn track_single(
    rig: &StereoRig,
    observations: &[Observation],
    params: &SingleObjectParams,
    seed: u64,
) -> Result<TrackOutput> {
    let mut tracker = SingleObjectTracker::new(rig, *params, seed);
    let mut steps = Vec::new();
    for (i, obs) in observations.iter().enumerate() {
        tracker.process(obs)?;
        let last_of_step = observations
            .get(i + 1)
            .is_none_or(|next| next.time != obs.time);
        if last_of_step {
            steps.push(TrackStep {
                time: obs.time,
                state: tracker.state().cloned().expect("initialised"),
                estimate: tracker.estimate()?,
            });
        }
    }
    Ok(TrackOutput {
        steps,
        stats: tracker.stats(),
    })
}

//! Bootstrap particle filter in world space, used as a baseline.

use nalgebra::{Point3, Vector2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::state::{GaussianPrior, MotionModel, Observation};
use crate::geometry::{rectified_companion, DisparityFrame, StereoRig};
use crate::resampling::{effective_sample_size, systematic_indices};
use crate::rng::rng_from_seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleFilterParams {
    pub n_particles: usize,
    /// Depth prior expressed as disparity in the first camera's frame, so
    /// the baseline starts from the same information as the disparity filter.
    pub disparity_prior: GaussianPrior,
    #[serde(default)]
    pub velocity_prior: Option<GaussianPrior>,
    pub motion: MotionModel,
    /// Resample when ESS falls below this fraction of the particle count.
    #[serde(default = "half")]
    pub resample_fraction: f64,
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone)]
pub struct PfOutput {
    /// `(time, MAP particle position)` per time step.
    pub steps: Vec<(usize, Point3<f64>)>,
    /// Number of updates in which every particle weight underflowed.
    pub divergences: usize,
    pub resamples: usize,
}

#[derive(Clone, Copy)]
struct Particle {
    x: [f64; 3],
    v: [f64; 3],
}

/// Disparity frame anchored on the camera that made `obs`.
pub(crate) fn anchor_frame(rig: &StereoRig, obs: &Observation) -> Result<DisparityFrame> {
    let frame = rig.frame(rig.frame_id(obs.camera));
    if frame.owner() == obs.camera {
        Ok(frame.clone())
    } else {
        rectified_companion(rig.camera(obs.camera), frame.baseline(), obs.camera)
    }
}

fn sample_initial<R: Rng + ?Sized>(
    frame: &DisparityFrame,
    obs: &Observation,
    params: &ParticleFilterParams,
    rng: &mut R,
) -> Result<Vec<Particle>> {
    let chol = obs
        .cov
        .cholesky()
        .ok_or_else(|| Error::NumericalDegeneracy("observation covariance".into()))?
        .l();
    let h = params.motion.dt;
    let mut out = Vec::with_capacity(params.n_particles);
    let mut attempts = 0usize;
    while out.len() < params.n_particles {
        attempts += 1;
        if attempts > 100 * params.n_particles {
            return Err(Error::DegeneratePrediction);
        }
        let n = Vector2::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        let e = chol * n;
        let d = params.disparity_prior.mean
            + params.disparity_prior.variance.sqrt() * rng.sample::<f64, _>(StandardNormal);
        let y = [obs.z.u + e.x, obs.z.v + e.y, d];
        let Some((x, _)) = frame.from_disparity_raw(&y) else {
            continue;
        };
        let mut v = [0.0; 3];
        if let Some(vp) = params.velocity_prior {
            let sd = vp.variance.sqrt();
            let ydot: [f64; 3] =
                std::array::from_fn(|_| vp.mean + sd * rng.sample::<f64, _>(StandardNormal));
            let Some((xh, _)) = frame.from_disparity_raw(&[
                y[0] + ydot[0] * h,
                y[1] + ydot[1] * h,
                y[2] + ydot[2] * h,
            ]) else {
                continue;
            };
            v = std::array::from_fn(|k| (xh[k] - x[k]) / h);
        }
        out.push(Particle { x, v });
    }
    Ok(out)
}

fn log_likelihood(
    rig: &StereoRig,
    obs: &Observation,
    x: &[f64; 3],
    r_inv: &nalgebra::Matrix2<f64>,
) -> f64 {
    match rig.camera(obs.camera).project_raw(x) {
        Some((u, v, w)) if w > 0.0 => {
            let e = Vector2::new(obs.z.u - u, obs.z.v - v);
            -0.5 * (e.transpose() * r_inv * e)[0]
        }
        _ => f64::NEG_INFINITY,
    }
}

/// Bootstrap particle filter in world space: ray initialisation from the
/// first observation, world-space motion, image-plane Gaussian likelihoods,
/// systematic resampling below the ESS threshold. The per-step estimate is
/// the highest-weight particle.
pub fn baseline_pf(
    rig: &StereoRig,
    observations: &[Observation],
    params: &ParticleFilterParams,
    seed: u64,
) -> Result<PfOutput> {
    if params.n_particles < 2 {
        return Err(Error::InvalidParameter(
            "particle filter needs at least two particles".into(),
        ));
    }
    params.motion.validate()?;
    let mut rng = rng_from_seed(seed);
    let Some(first) = observations.first() else {
        return Ok(PfOutput {
            steps: Vec::new(),
            divergences: 0,
            resamples: 0,
        });
    };
    let frame = anchor_frame(rig, first)?;
    let mut particles = sample_initial(&frame, first, params, &mut rng)?;
    let n = particles.len();
    let mut weights = vec![1.0 / n as f64; n];
    let mut last_time = first.time;
    let mut out = PfOutput {
        steps: Vec::new(),
        divergences: 0,
        resamples: 0,
    };
    let moving = !params.motion.is_static() && params.velocity_prior.is_some();

    for (i, obs) in observations.iter().enumerate() {
        if i > 0 {
            if obs.time < last_time {
                return Err(Error::InvalidInput(
                    "observations must be time-ordered".into(),
                ));
            }
            let elapsed = (obs.time - last_time) as f64;
            if moving && elapsed > 0.0 {
                let t = params.motion.dt * elapsed;
                let sd = (params.motion.process_noise_variance * elapsed).sqrt();
                for p in particles.iter_mut() {
                    for k in 0..3 {
                        let w: f64 = sd * rng.sample::<f64, _>(StandardNormal);
                        p.x[k] += (p.v[k] + 0.5 * w) * t;
                        p.v[k] += w;
                    }
                }
            }
            let r_inv = obs
                .cov
                .try_inverse()
                .ok_or_else(|| Error::NumericalDegeneracy("observation covariance".into()))?;
            let logl: Vec<f64> = particles
                .iter()
                .map(|p| log_likelihood(rig, obs, &p.x, &r_inv))
                .collect();
            let max = logl
                .iter()
                .zip(&weights)
                .filter(|(_, &w)| w > 0.0)
                .map(|(l, _)| *l)
                .fold(f64::NEG_INFINITY, f64::max);
            if max == f64::NEG_INFINITY {
                out.divergences += 1;
                weights.iter_mut().for_each(|w| *w = 1.0 / n as f64);
            } else {
                for (w, l) in weights.iter_mut().zip(&logl) {
                    *w *= (l - max).exp();
                }
                let total: f64 = weights.iter().sum();
                if total > 0.0 && total.is_finite() {
                    weights.iter_mut().for_each(|w| *w /= total);
                } else {
                    out.divergences += 1;
                    weights.iter_mut().for_each(|w| *w = 1.0 / n as f64);
                }
            }
        }
        last_time = obs.time;
        let last_of_step = observations
            .get(i + 1)
            .is_none_or(|next| next.time != obs.time);
        if last_of_step {
            let best = weights
                .iter()
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |acc, (j, &w)| if w > acc.1 { (j, w) } else { acc },
                )
                .0;
            let x = particles[best].x;
            out.steps.push((obs.time, Point3::new(x[0], x[1], x[2])));
            if effective_sample_size(&weights) < params.resample_fraction * n as f64 {
                let idx = systematic_indices(&weights, n, &mut rng);
                particles = idx.iter().map(|&j| particles[j]).collect();
                weights = vec![1.0 / n as f64; n];
                out.resamples += 1;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{
        CameraIntrinsics, CameraPose, ProjectiveCamera, Side, DEFAULT_ABSTRACT_BASELINE,
    };

    #[test]
    fn well_initialised_static_case_converges() {
        let left =
            ProjectiveCamera::new(CameraIntrinsics::simulated(), CameraPose::identity()).unwrap();
        let right = ProjectiveCamera::new(
            CameraIntrinsics::simulated(),
            CameraPose::new([30.0, 0.0, 0.0], -std::f64::consts::PI / 12.0, 0.0, 0.0),
        )
        .unwrap();
        let rig = StereoRig::non_rectified(left, right, DEFAULT_ABSTRACT_BASELINE).unwrap();
        let x = Point3::new(0.0, 0.0, 100.0);
        let mut obs = Vec::new();
        for t in 0..10 {
            for side in [Side::Left, Side::Right] {
                let z = rig.camera(side).project(&x).unwrap();
                obs.push(Observation::isotropic(z.u, z.v, 2.0, side, t));
            }
        }
        let params = ParticleFilterParams {
            n_particles: 2000,
            disparity_prior: GaussianPrior::new(9.0, 0.5),
            velocity_prior: None,
            motion: MotionModel::stationary(),
            resample_fraction: 0.5,
        };
        let out = baseline_pf(&rig, &obs, &params, 5).unwrap();
        assert_eq!(out.steps.len(), 10);
        let err = (out.steps.last().unwrap().1 - x).norm();
        assert!(err < 2.0, "error {err}");
        assert_eq!(out.divergences, 0);
    }
}

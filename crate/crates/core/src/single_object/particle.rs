//! Monte-Carlo transport of Gaussian beliefs between disparity frames.
//!
//! A Gaussian in a source frame is sampled, each particle is mapped to world
//! space, optionally pushed through the motion model, mapped into the target
//! frame, and a Gaussian is refitted. Velocities are carried by mapping the
//! pair `(p, p + ṗ h)` and differencing, with `h` the motion step.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::state::{GaussianState, MotionKind, MotionModel};
use crate::geometry::{DisparityFrame, ProjectiveCamera, Side};
use crate::rng::rng_from_seed;
use crate::{Error, Result};

pub const MAX_DIM: usize = 6;

const FIT_JITTER: f64 = 1e-9;

/// Draws from `N(m, LLᵀ)` with stack-allocated buffers.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    dim: usize,
    mean: [f64; MAX_DIM],
    chol: [[f64; MAX_DIM]; MAX_DIM],
}

impl GaussianSampler {
    pub fn new(state: &GaussianState) -> Result<Self> {
        let dim = state.dim();
        let sym = (&state.cov + state.cov.transpose()) * 0.5;
        let l = match sym.clone().cholesky() {
            Some(c) => c.l(),
            None => (sym + DMatrix::identity(dim, dim) * FIT_JITTER)
                .cholesky()
                .ok_or_else(|| {
                    Error::NumericalDegeneracy("covariance cannot be factorised".into())
                })?
                .l(),
        };
        let mut mean = [0.0; MAX_DIM];
        let mut chol = [[0.0; MAX_DIM]; MAX_DIM];
        for i in 0..dim {
            mean[i] = state.mean[i];
            for j in 0..=i {
                chol[i][j] = l[(i, j)];
            }
        }
        Ok(Self { dim, mean, chol })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; MAX_DIM] {
        let mut z = [0.0; MAX_DIM];
        for zi in z.iter_mut().take(self.dim) {
            *zi = rng.sample(StandardNormal);
        }
        let mut out = self.mean;
        for (i, o) in out.iter_mut().enumerate().take(self.dim) {
            *o += self.chol[i][..=i]
                .iter()
                .zip(&z)
                .map(|(c, zj)| c * zj)
                .sum::<f64>();
        }
        out
    }
}

/// Where and how a belief is transported.
#[derive(Debug, Clone, Copy)]
pub struct TransportSpec<'a> {
    pub from: &'a DisparityFrame,
    pub to: &'a DisparityFrame,
    /// Motion applied in world space; `None` or a static model means the
    /// object does not move.
    pub motion: Option<MotionModel>,
    /// Number of motion steps elapsed (0 for a pure change of frame).
    pub elapsed_steps: f64,
    /// Drop particles that this camera does not see.
    pub fov: Option<&'a ProjectiveCamera>,
}

impl TransportSpec<'_> {
    fn velocity_interval(&self) -> f64 {
        self.motion.map(|m| m.dt).unwrap_or(1.0)
    }
}

#[inline]
fn map_particle<R: Rng + ?Sized>(
    p: &[f64; MAX_DIM],
    dim: usize,
    spec: &TransportSpec<'_>,
    h: f64,
    rng: &mut R,
) -> Option<[f64; MAX_DIM]> {
    let (mut x, _) = spec.from.from_disparity_raw(&[p[0], p[1], p[2]])?;
    let mut out = [0.0; MAX_DIM];
    if dim == 6 {
        let (xh, _) =
            spec.from
                .from_disparity_raw(&[p[0] + p[3] * h, p[1] + p[4] * h, p[2] + p[5] * h])?;
        let mut v = [(xh[0] - x[0]) / h, (xh[1] - x[1]) / h, (xh[2] - x[2]) / h];
        if let Some(m) = spec.motion {
            if m.kind == MotionKind::ConstantVelocity && spec.elapsed_steps > 0.0 {
                let t = m.dt * spec.elapsed_steps;
                let sd = (m.process_noise_variance * spec.elapsed_steps).sqrt();
                for k in 0..3 {
                    let w: f64 = if sd > 0.0 {
                        sd * rng.sample::<f64, _>(StandardNormal)
                    } else {
                        0.0
                    };
                    x[k] += (v[k] + 0.5 * w) * t;
                    v[k] += w;
                }
            }
        }
        if let Some(cam) = spec.fov {
            if !cam.sees(&x) {
                return None;
            }
        }
        let y = spec.to.to_disparity_raw(&x)?;
        let yh = spec
            .to
            .to_disparity_raw(&[x[0] + v[0] * h, x[1] + v[1] * h, x[2] + v[2] * h])?;
        for k in 0..3 {
            out[k] = y[k];
            out[k + 3] = (yh[k] - y[k]) / h;
        }
    } else {
        if let Some(cam) = spec.fov {
            if !cam.sees(&x) {
                return None;
            }
        }
        let y = spec.to.to_disparity_raw(&x)?;
        out[..3].copy_from_slice(&y);
    }
    if out[..dim].iter().all(|v| v.is_finite()) {
        Some(out)
    } else {
        None
    }
}

/// Samples `n` particles from `state` and transports them; returns the
/// surviving particles.
pub fn transport_particles<R: Rng + ?Sized>(
    state: &GaussianState,
    spec: &TransportSpec<'_>,
    n: usize,
    rng: &mut R,
) -> Result<Vec<[f64; MAX_DIM]>> {
    if n < 2 {
        return Err(Error::InvalidParameter(
            "at least two particles are required".into(),
        ));
    }
    let sampler = GaussianSampler::new(state)?;
    let dim = state.dim();
    let h = spec.velocity_interval();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let p = sampler.sample(rng);
        if let Some(q) = map_particle(&p, dim, spec, h, rng) {
            out.push(q);
        }
    }
    if out.len() < 2 {
        return Err(if spec.fov.is_some() {
            Error::TargetLeftFov(out.len())
        } else {
            Error::DegeneratePrediction
        });
    }
    Ok(out)
}

/// Transports `state` according to `spec` and refits a Gaussian in the
/// target frame.
pub fn transport<R: Rng + ?Sized>(
    state: &GaussianState,
    spec: &TransportSpec<'_>,
    n: usize,
    rng: &mut R,
) -> Result<GaussianState> {
    let particles = transport_particles(state, spec, n, rng)?;
    fit_gaussian(&particles, state.dim(), spec.to.owner())
}

/// Same-frame prediction of a dynamic state through the motion model.
pub fn particle_prediction(
    state: &GaussianState,
    frame: &DisparityFrame,
    model: &MotionModel,
    n_particles: usize,
    seed: u64,
) -> Result<GaussianState> {
    if !state.is_dynamic() {
        return Err(Error::InvalidInput(
            "particle prediction needs a dynamic (6-D) state".into(),
        ));
    }
    model.validate()?;
    let spec = TransportSpec {
        from: frame,
        to: frame,
        motion: Some(*model),
        elapsed_steps: 1.0,
        fov: None,
    };
    transport(state, &spec, n_particles, &mut rng_from_seed(seed))
}

/// Moves a belief from frame `from` to frame `to`, optionally composing one
/// step of motion and truncating to a camera's field of view.
pub fn particle_move(
    state: &GaussianState,
    from: &DisparityFrame,
    to: &DisparityFrame,
    model: Option<&MotionModel>,
    n_particles: usize,
    fov_camera: Option<&ProjectiveCamera>,
    seed: u64,
) -> Result<GaussianState> {
    if let Some(m) = model {
        m.validate()?;
    }
    let spec = TransportSpec {
        from,
        to,
        motion: model.copied(),
        elapsed_steps: if model.is_some() { 1.0 } else { 0.0 },
        fov: fov_camera,
    };
    transport(state, &spec, n_particles, &mut rng_from_seed(seed))
}

fn finish_fit(mean: DVector<f64>, mut cov: DMatrix<f64>, frame: Side) -> Result<GaussianState> {
    cov = (&cov + cov.transpose()) * 0.5;
    let dim = mean.len();
    if cov.clone().cholesky().is_none() {
        cov += DMatrix::identity(dim, dim) * FIT_JITTER;
    }
    GaussianState::new(mean, cov, frame)
}

/// Sample mean and unbiased sample covariance.
pub fn fit_gaussian(
    particles: &[[f64; MAX_DIM]],
    dim: usize,
    frame: Side,
) -> Result<GaussianState> {
    let n = particles.len();
    if n < 2 {
        return Err(Error::DegeneratePrediction);
    }
    let mut m = [0.0; MAX_DIM];
    for p in particles {
        for k in 0..dim {
            m[k] += p[k];
        }
    }
    for mk in m.iter_mut().take(dim) {
        *mk /= n as f64;
    }
    let mut c = [[0.0; MAX_DIM]; MAX_DIM];
    for p in particles {
        for i in 0..dim {
            let di = p[i] - m[i];
            for j in 0..=i {
                c[i][j] += di * (p[j] - m[j]);
            }
        }
    }
    let denom = (n - 1) as f64;
    let mean = DVector::from_fn(dim, |i, _| m[i]);
    let cov = DMatrix::from_fn(dim, dim, |i, j| {
        if j <= i {
            c[i][j] / denom
        } else {
            c[j][i] / denom
        }
    });
    finish_fit(mean, cov, frame)
}

/// Weighted mean and covariance with the reliability-weight correction
/// `Σw (x−m)(x−m)ᵀ / (V₁ − V₂/V₁)`.
pub fn fit_weighted_gaussian(
    particles: &[[f64; MAX_DIM]],
    weights: &[f64],
    dim: usize,
    frame: Side,
) -> Result<GaussianState> {
    let v1: f64 = weights.iter().sum();
    let v2: f64 = weights.iter().map(|w| w * w).sum();
    if !(v1 > 0.0) {
        return Err(Error::DegeneratePrediction);
    }
    let denom = v1 - v2 / v1;
    if !(denom > 0.0) {
        return Err(Error::DegeneratePrediction);
    }
    let mut m = [0.0; MAX_DIM];
    for (p, &w) in particles.iter().zip(weights) {
        for k in 0..dim {
            m[k] += w * p[k];
        }
    }
    for mk in m.iter_mut().take(dim) {
        *mk /= v1;
    }
    let mut c = [[0.0; MAX_DIM]; MAX_DIM];
    for (p, &w) in particles.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        for i in 0..dim {
            let di = p[i] - m[i];
            for j in 0..=i {
                c[i][j] += w * di * (p[j] - m[j]);
            }
        }
    }
    let mean = DVector::from_fn(dim, |i, _| m[i]);
    let cov = DMatrix::from_fn(dim, dim, |i, j| {
        if j <= i {
            c[i][j] / denom
        } else {
            c[j][i] / denom
        }
    });
    finish_fit(mean, cov, frame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{
        rectified_companion, CameraIntrinsics, CameraPose, DEFAULT_ABSTRACT_BASELINE,
    };

    fn frame() -> DisparityFrame {
        let cam =
            ProjectiveCamera::new(CameraIntrinsics::simulated(), CameraPose::identity()).unwrap();
        rectified_companion(&cam, DEFAULT_ABSTRACT_BASELINE, Side::Left).unwrap()
    }

    fn state6() -> GaussianState {
        GaussianState::new(
            DVector::from_vec(vec![400.0, 300.0, 7.0, 0.0, 0.0, 0.0]),
            DMatrix::from_diagonal(&DVector::from_vec(vec![
                2.0, 2.0, 0.5, 0.0001, 0.0001, 0.0001,
            ])),
            Side::Left,
        )
        .unwrap()
    }

    #[test]
    fn identity_move_keeps_mean() {
        let f = frame();
        let s = state6();
        let out = particle_move(&s, &f, &f, None, 10_000, None, 3).unwrap();
        for k in 0..3 {
            let se = (s.cov[(k, k)] / 10_000.0).sqrt();
            assert!((out.mean[k] - s.mean[k]).abs() < 4.0 * se, "component {k}");
        }
        assert!(out.check_spd().is_ok());
    }

    #[test]
    fn prediction_requires_dynamic_state() {
        let f = frame();
        let s = GaussianState::new(
            DVector::from_vec(vec![400.0, 300.0, 7.0]),
            DMatrix::identity(3, 3),
            Side::Left,
        )
        .unwrap();
        assert!(
            particle_prediction(&s, &f, &MotionModel::constant_velocity(0.1, 1.0), 100, 0).is_err()
        );
    }

    #[test]
    fn too_few_particles() {
        let f = frame();
        assert!(matches!(
            particle_move(&state6(), &f, &f, None, 1, None, 0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn deterministic_for_seed() {
        let f = frame();
        let m = MotionModel::constant_velocity(0.08, 1.0);
        let a = particle_prediction(&state6(), &f, &m, 500, 11).unwrap();
        let b = particle_prediction(&state6(), &f, &m, 500, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fov_truncation_of_invisible_target() {
        let f = frame();
        // far outside the image in u
        let s = GaussianState::new(
            DVector::from_vec(vec![-5000.0, 300.0, 7.0]),
            DMatrix::identity(3, 3),
            Side::Left,
        )
        .unwrap();
        let cam =
            ProjectiveCamera::new(CameraIntrinsics::simulated(), CameraPose::identity()).unwrap();
        assert!(matches!(
            particle_move(&s, &f, &f, None, 200, Some(&cam), 1),
            Err(Error::TargetLeftFov(0))
        ));
    }

    #[test]
    fn weighted_fit_with_equal_weights_matches_plain_fit() {
        let ps: Vec<[f64; MAX_DIM]> = (0..50)
            .map(|i| [i as f64, (i * i % 7) as f64, (i % 5) as f64, 0.0, 0.0, 0.0])
            .collect();
        let a = fit_gaussian(&ps, 3, Side::Left).unwrap();
        let b = fit_weighted_gaussian(&ps, &vec![0.3; 50], 3, Side::Left).unwrap();
        assert!((a.mean - b.mean).abs().max() < 1e-12);
        assert!((a.cov - b.cov).abs().max() < 1e-10);
    }
}

use nalgebra::{DMatrix, DVector, Matrix2};
use serde::{Deserialize, Serialize};

use crate::geometry::{ImagePoint, Side};
use crate::{Error, Result};

/// Gaussian belief in a disparity frame (3-D static or 6-D dynamic).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    /// Frame the state lives in, identified by the camera anchoring it.
    pub frame: Side,
}

impl GaussianState {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>, frame: Side) -> Result<Self> {
        let n = mean.len();
        if n != 3 && n != 6 {
            return Err(Error::InvalidInput(format!(
                "state dimension must be 3 or 6, got {n}"
            )));
        }
        if cov.nrows() != n || cov.ncols() != n {
            return Err(Error::InvalidInput(
                "covariance shape does not match mean".into(),
            ));
        }
        let s = Self { mean, cov, frame };
        s.check_spd()?;
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn is_dynamic(&self) -> bool {
        self.mean.len() == 6
    }

    /// Position part `(u, v, d)` of the mean.
    pub fn position(&self) -> [f64; 3] {
        [self.mean[0], self.mean[1], self.mean[2]]
    }

    /// Symmetric to 1e-12 (relative) and positive definite.
    pub fn check_spd(&self) -> Result<()> {
        if !self.mean.iter().all(|v| v.is_finite()) || !self.cov.iter().all(|v| v.is_finite()) {
            return Err(Error::NumericalDegeneracy(
                "non-finite Gaussian state".into(),
            ));
        }
        let scale = self.cov.abs().max().max(1.0);
        let asym = (&self.cov - self.cov.transpose()).abs().max();
        if asym > 1e-12 * scale {
            return Err(Error::NumericalDegeneracy(format!(
                "covariance asymmetric by {asym:e}"
            )));
        }
        let sym = (&self.cov + self.cov.transpose()) * 0.5;
        if sym.cholesky().is_none() {
            return Err(Error::NumericalDegeneracy(
                "covariance is not positive definite".into(),
            ));
        }
        Ok(())
    }

    pub fn symmetrise(&mut self) {
        self.cov = (&self.cov + self.cov.transpose()) * 0.5;
    }
}

/// Scalar Gaussian prior `(mean, variance)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianPrior {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianPrior {
    pub fn new(mean: f64, variance: f64) -> Self {
        Self { mean, variance }
    }
}

/// One image observation with its pixel covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub z: ImagePoint,
    pub cov: Matrix2<f64>,
    pub camera: Side,
    pub time: usize,
}

impl Observation {
    pub fn new(z: ImagePoint, cov: Matrix2<f64>, camera: Side, time: usize) -> Self {
        Self {
            z,
            cov,
            camera,
            time,
        }
    }

    pub fn isotropic(u: f64, v: f64, var: f64, camera: Side, time: usize) -> Self {
        Self::new(
            ImagePoint::new(u, v),
            Matrix2::new(var, 0.0, 0.0, var),
            camera,
            time,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionKind {
    Static,
    ConstantVelocity,
}

/// Motion in world space. For constant velocity, each step draws a velocity
/// perturbation `w ~ N(0, q I)` (q in cm² s⁻²) and applies
/// `v' = v + w`, `x' = x + (v + w/2) dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionModel {
    pub kind: MotionKind,
    #[serde(default)]
    pub process_noise_variance: f64,
    pub dt: f64,
}

impl MotionModel {
    pub fn stationary() -> Self {
        Self {
            kind: MotionKind::Static,
            process_noise_variance: 0.0,
            dt: 1.0,
        }
    }

    pub fn constant_velocity(process_noise_variance: f64, dt: f64) -> Self {
        Self {
            kind: MotionKind::ConstantVelocity,
            process_noise_variance,
            dt,
        }
    }

    pub fn is_static(&self) -> bool {
        self.kind == MotionKind::Static
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter("motion dt must be positive".into()));
        }
        if !(self.process_noise_variance >= 0.0) {
            return Err(Error::InvalidParameter(
                "process noise variance must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Initial Gaussian from a single observation: image coordinates from the
/// observation, disparity (and velocity) from priors. Negative disparities
/// keep their prior mass.
pub fn initialise(
    obs: &Observation,
    disparity_prior: GaussianPrior,
    velocity_prior: Option<GaussianPrior>,
    frame: Side,
) -> Result<GaussianState> {
    if obs.camera != frame {
        return Err(Error::InvalidInput(format!(
            "observation from the {} camera cannot initialise the {} frame",
            obs.camera.label(),
            frame.label()
        )));
    }
    let dim = if velocity_prior.is_some() { 6 } else { 3 };
    let mut mean = DVector::zeros(dim);
    let mut cov = DMatrix::zeros(dim, dim);
    mean[0] = obs.z.u;
    mean[1] = obs.z.v;
    mean[2] = disparity_prior.mean;
    cov.view_mut((0, 0), (2, 2)).copy_from(&obs.cov);
    cov[(2, 2)] = disparity_prior.variance;
    if let Some(vp) = velocity_prior {
        for i in 3..6 {
            mean[i] = vp.mean;
            cov[(i, i)] = vp.variance;
        }
    }
    GaussianState::new(mean, cov, frame)
}

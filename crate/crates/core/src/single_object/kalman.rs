use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use super::state::{GaussianState, Observation};
use crate::geometry::{disparity_observation_matrix, ImagePoint, Side};
use crate::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Quantities of a linear-Gaussian update that do not depend on the
/// observed value: predicted observation, innovation covariance, gain and
/// posterior covariance. Shared by every observation a component is
/// updated against.
#[derive(Debug, Clone)]
pub struct UpdateTerms {
    predicted: Vector2<f64>,
    s_inv: Matrix2<f64>,
    log_norm: f64,
    gain: DMatrix<f64>,
    prior_mean: DVector<f64>,
    posterior_cov: DMatrix<f64>,
    frame: Side,
}

impl UpdateTerms {
    pub fn new(state: &GaussianState, r: &Matrix2<f64>, h_side: Side) -> Result<Self> {
        let h = disparity_observation_matrix(h_side, state.is_dynamic());
        let hm = &h * &state.mean;
        let pht = &state.cov * h.transpose();
        let hpht = &h * &pht;
        let s = Matrix2::new(hpht[(0, 0)], hpht[(0, 1)], hpht[(1, 0)], hpht[(1, 1)]) + r;
        let s = (s + s.transpose()) * 0.5;
        let det = s.determinant();
        if !(det > 0.0) || !det.is_finite() {
            return Err(Error::NumericalDegeneracy(
                "innovation covariance is not invertible".into(),
            ));
        }
        let s_inv = s
            .try_inverse()
            .ok_or_else(|| Error::NumericalDegeneracy("innovation covariance".into()))?;
        let s_inv_d = DMatrix::from_column_slice(2, 2, s_inv.as_slice());
        let gain = &pht * &s_inv_d;
        let n = state.dim();
        let i_kh = DMatrix::identity(n, n) - &gain * &h;
        let r_d = DMatrix::from_column_slice(2, 2, r.as_slice());
        let joseph = &i_kh * &state.cov * i_kh.transpose() + &gain * r_d * gain.transpose();
        let posterior_cov = (&joseph + joseph.transpose()) * 0.5;
        Ok(Self {
            predicted: Vector2::new(hm[0], hm[1]),
            s_inv,
            log_norm: -LN_2PI - 0.5 * det.ln(),
            gain,
            prior_mean: state.mean.clone(),
            posterior_cov,
            frame: state.frame,
        })
    }

    pub fn predicted_observation(&self) -> ImagePoint {
        ImagePoint::new(self.predicted.x, self.predicted.y)
    }

    /// `log N(z; H m, H P Hᵀ + R)`.
    pub fn log_likelihood(&self, z: &ImagePoint) -> f64 {
        let e = Vector2::new(z.u, z.v) - self.predicted;
        self.log_norm - 0.5 * (e.transpose() * self.s_inv * e)[0]
    }

    pub fn posterior(&self, z: &ImagePoint) -> GaussianState {
        let e = DVector::from_vec(vec![z.u - self.predicted.x, z.v - self.predicted.y]);
        GaussianState {
            mean: &self.prior_mean + &self.gain * e,
            cov: self.posterior_cov.clone(),
            frame: self.frame,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KalmanOutcome {
    pub posterior: GaussianState,
    /// Predictive density of the observation, `N(z; H m, S)`.
    pub likelihood: f64,
    pub log_likelihood: f64,
}

/// Linear-Gaussian update with the orthographic projection `H_{h_side}`.
pub fn kalman_update(
    state: &GaussianState,
    obs: &Observation,
    h_side: Side,
) -> Result<KalmanOutcome> {
    let terms = UpdateTerms::new(state, &obs.cov, h_side)?;
    let log_likelihood = terms.log_likelihood(&obs.z);
    let posterior = terms.posterior(&obs.z);
    posterior.check_spd()?;
    Ok(KalmanOutcome {
        posterior,
        likelihood: log_likelihood.exp(),
        log_likelihood,
    })
}

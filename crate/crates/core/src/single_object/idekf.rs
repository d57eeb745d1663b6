//! Inverse-depth EKF baseline.

use nalgebra::{Matrix2x3, Matrix3, Matrix3x4, Point3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::pf::anchor_frame;
use super::state::{GaussianPrior, Observation};
use crate::geometry::StereoRig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InverseDepthParams {
    /// Disparity prior in the anchoring camera's frame; converted linearly to
    /// inverse depth through the frame's `fx · b`.
    pub disparity_prior: GaussianPrior,
}

/// EKF over `(u, v, ρ)` anchored on the first observing camera, with `ρ`
/// the inverse depth along that camera's ray. Same-camera observations are
/// linear; the other camera is linearised at the current mean. Returns one
/// `(time, estimate)` per time step, after all observations of that step.
pub fn baseline_inverse_depth_ekf(
    rig: &StereoRig,
    observations: &[Observation],
    params: &InverseDepthParams,
) -> Result<Vec<(usize, Point3<f64>)>> {
    let Some(first) = observations.first() else {
        return Ok(Vec::new());
    };
    let frame = anchor_frame(rig, first)?;
    let anchor = first.camera;
    let scale = rig.camera(anchor).intrinsics().fx() * frame.baseline();
    // Homogeneous image of the other camera as a linear function of (u, v, ρ, 1).
    let g: Matrix3x4<f64> = rig.camera(anchor.other()).matrix()
        * frame.inverse_matrix()
        * nalgebra::Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 1.0, scale, 1.0));

    let prior = params.disparity_prior;
    let mut mean = Vector3::new(first.z.u, first.z.v, prior.mean / scale);
    let mut cov = Matrix3::zeros();
    cov.fixed_view_mut::<2, 2>(0, 0).copy_from(&first.cov);
    cov[(2, 2)] = prior.variance / (scale * scale);

    let estimate = |m: &Vector3<f64>| {
        frame.from_disparity(&crate::geometry::DisparityPoint::new(
            m[0],
            m[1],
            m[2] * scale,
        ))
    };
    let mut out = Vec::new();
    let mut last_time = first.time;
    for (i, obs) in observations.iter().enumerate() {
        if i > 0 {
            if obs.time < last_time {
                return Err(Error::InvalidInput(
                    "observations must be time-ordered".into(),
                ));
            }
            let (pred, jac) = if obs.camera == anchor {
                (
                    Vector2::new(mean[0], mean[1]),
                    Matrix2x3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0),
                )
            } else {
                let h = g * mean.push(1.0);
                if h[2].abs() <= 1e-12 {
                    return Err(Error::NumericalDegeneracy(
                        "inverse-depth observation Jacobian is singular".into(),
                    ));
                }
                let (a, b, c) = (h[0], h[1], h[2]);
                let mut jac = Matrix2x3::zeros();
                for k in 0..3 {
                    jac[(0, k)] = (g[(0, k)] * c - a * g[(2, k)]) / (c * c);
                    jac[(1, k)] = (g[(1, k)] * c - b * g[(2, k)]) / (c * c);
                }
                (Vector2::new(a / c, b / c), jac)
            };
            let s = jac * cov * jac.transpose() + obs.cov;
            let s_inv = s
                .try_inverse()
                .ok_or_else(|| Error::NumericalDegeneracy("innovation covariance".into()))?;
            let gain = cov * jac.transpose() * s_inv;
            mean += gain * (Vector2::new(obs.z.u, obs.z.v) - pred);
            let i_kh = Matrix3::identity() - gain * jac;
            cov = i_kh * cov * i_kh.transpose() + gain * obs.cov * gain.transpose();
            cov = (cov + cov.transpose()) * 0.5;
            if !mean.iter().all(|v| v.is_finite()) {
                return Err(Error::NumericalDegeneracy(
                    "inverse-depth EKF diverged".into(),
                ));
            }
        }
        last_time = obs.time;
        if observations
            .get(i + 1)
            .is_none_or(|next| next.time != obs.time)
        {
            out.push((obs.time, estimate(&mean)?));
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
    fn noiseless_static_converges() {
        let left =
            ProjectiveCamera::new(CameraIntrinsics::simulated(), CameraPose::identity()).unwrap();
        let right = ProjectiveCamera::new(
            CameraIntrinsics::simulated(),
            CameraPose::new([30.0, 0.0, 0.0], -std::f64::consts::PI / 12.0, 0.0, 0.0),
        )
        .unwrap();
        let rig = StereoRig::non_rectified(left, right, DEFAULT_ABSTRACT_BASELINE).unwrap();
        let x = Point3::new(2.0, 1.0, 100.0);
        let mut obs = Vec::new();
        for t in 0..30 {
            for side in [Side::Left, Side::Right] {
                let z = rig.camera(side).project(&x).unwrap();
                obs.push(Observation::isotropic(z.u, z.v, 1e-6, side, t));
            }
        }
        let out = baseline_inverse_depth_ekf(
            &rig,
            &obs,
            &InverseDepthParams {
                disparity_prior: GaussianPrior::new(9.0, 1.0),
            },
        )
        .unwrap();
        assert_eq!(out.len(), 30);
        assert!((out.last().unwrap().1 - x).norm() < 1e-3);
    }
}

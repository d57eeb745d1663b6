//! Projective cameras and disparity spaces.
//!
//! A [`ProjectiveCamera`] maps world points (cm) to image points (px) through
//! a 3×4 matrix `P = K[R | t]`. A [`DisparityFrame`] is the 4×4 projective map
//! between world space and the `(u, v, d)` disparity space of a horizontally
//! rectified camera pair; in that space both images are linear (orthographic)
//! projections of the state.
//!
//! Orientation convention: a [`CameraPose`] rotates the camera body by yaw
//! about `y`, then pitch about `x`, then roll about `z` (intrinsic), giving the
//! camera-to-world rotation `R_cw = R_y(yaw) R_x(pitch) R_z(roll)`. A positive
//! yaw turns the optical axis from `+z` towards `+x`.

use nalgebra::{Matrix2x3, Matrix3, Matrix3x4, Matrix4, Point3, RowVector4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance on the homogeneous scale below which a point is treated as
/// lying on the camera plane (or at infinity).
pub const SINGULAR_TOL: f64 = 1e-12;

/// Translation parameter of the abstract camera that completes a physical
/// camera into a rectified pair. Negative, so the abstract camera sits 1 cm to
/// the camera's right; with a negative focal length this makes disparity
/// positive for points in front of the camera.
pub const DEFAULT_ABSTRACT_BASELINE: f64 = -1.0;

/// Which physical camera of the pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn index(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

/// Pinhole intrinsics. Focal length in mm, pixel pitch in µm, principal point
/// and image size in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraIntrinsics {
    pub focal_length: f64,
    pub pixel_size_u: f64,
    pub pixel_size_v: f64,
    pub principal_u: f64,
    pub principal_v: f64,
    #[serde(default = "default_width")]
    pub width: f64,
    #[serde(default = "default_height")]
    pub height: f64,
}

fn default_width() -> f64 {
    800.0
}

fn default_height() -> f64 {
    600.0
}

impl CameraIntrinsics {
    /// The simulated camera used throughout the experiments: f = −8 mm,
    /// 8.9 × 9.0 µm pixels, principal point (400, 300), 800 × 600 image.
    pub fn simulated() -> Self {
        Self {
            focal_length: -8.0,
            pixel_size_u: 8.9,
            pixel_size_v: 9.0,
            principal_u: 400.0,
            principal_v: 300.0,
            width: 800.0,
            height: 600.0,
        }
    }

    /// Unit calibration matrix (`K = I`), handy for hand-checkable geometry.
    pub fn canonical() -> Self {
        Self {
            focal_length: 1e-3,
            pixel_size_u: 1.0,
            pixel_size_v: 1.0,
            principal_u: 0.0,
            principal_v: 0.0,
            width: 1.0,
            height: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.focal_length,
            self.pixel_size_u,
            self.pixel_size_v,
            self.principal_u,
            self.principal_v,
            self.width,
            self.height,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("non-finite intrinsics".into()));
        }
        if self.pixel_size_u <= 0.0 || self.pixel_size_v <= 0.0 {
            return Err(Error::InvalidParameter(
                "pixel sizes must be strictly positive".into(),
            ));
        }
        if self.focal_length == 0.0 {
            return Err(Error::InvalidParameter(
                "focal length must be nonzero".into(),
            ));
        }
        if self.width <= 0.0 || self.height <= 0.0 {
            return Err(Error::InvalidParameter(
                "image size must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Focal length in pixels along `u` (mm / µm → px).
    pub fn fx(&self) -> f64 {
        self.focal_length * 1e3 / self.pixel_size_u
    }

    pub fn fy(&self) -> f64 {
        self.focal_length * 1e3 / self.pixel_size_v
    }

    pub fn calibration_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            self.fx(),
            0.0,
            self.principal_u,
            0.0,
            self.fy(),
            self.principal_v,
            0.0,
            0.0,
            1.0,
        )
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && u < self.width && v >= 0.0 && v < self.height
    }
}

/// Camera position (cm) and yaw/pitch/roll orientation (rad).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraPose {
    pub position: [f64; 3],
    #[serde(default)]
    pub yaw: f64,
    #[serde(default)]
    pub pitch: f64,
    #[serde(default)]
    pub roll: f64,
}

impl Default for CameraPose {
    fn default() -> Self {
        Self::identity()
    }
}

impl CameraPose {
    pub fn identity() -> Self {
        Self {
            position: [0.0; 3],
            yaw: 0.0,
            pitch: 0.0,
            roll: 0.0,
        }
    }

    pub fn new(position: [f64; 3], yaw: f64, pitch: f64, roll: f64) -> Self {
        Self {
            position,
            yaw,
            pitch,
            roll,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self
            .position
            .iter()
            .chain([self.yaw, self.pitch, self.roll].iter())
            .all(|v| v.is_finite())
        {
            Ok(())
        } else {
            Err(Error::InvalidParameter("non-finite camera pose".into()))
        }
    }

    /// Camera-to-world rotation `R_y(yaw) R_x(pitch) R_z(roll)`.
    pub fn rotation(&self) -> Matrix3<f64> {
        let (sy, cy) = self.yaw.sin_cos();
        let (sp, cp) = self.pitch.sin_cos();
        let (sr, cr) = self.roll.sin_cos();
        let ry = Matrix3::new(cy, 0.0, sy, 0.0, 1.0, 0.0, -sy, 0.0, cy);
        let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, cp, -sp, 0.0, sp, cp);
        let rz = Matrix3::new(cr, -sr, 0.0, sr, cr, 0.0, 0.0, 0.0, 1.0);
        ry * rx * rz
    }

    pub fn center(&self) -> Vector3<f64> {
        Vector3::from(self.position)
    }
}

/// Image point in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImagePoint {
    pub u: f64,
    pub v: f64,
}

impl ImagePoint {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }
}

/// Point `(u, v, d)` of a disparity space. `d` may be negative (behind the
/// pair) or zero (at infinity).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisparityPoint {
    pub u: f64,
    pub v: f64,
    pub d: f64,
}

impl DisparityPoint {
    pub fn new(u: f64, v: f64, d: f64) -> Self {
        Self { u, v, d }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.u, self.v, self.d]
    }
}

/// A pinhole camera with its cached projection matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveCamera {
    intrinsics: CameraIntrinsics,
    pose: CameraPose,
    matrix: Matrix3x4<f64>,
}

impl ProjectiveCamera {
    /// Assembles `P = K [R | t]` with `R = R_cwᵀ` and `t = −R c`.
    pub fn new(intrinsics: CameraIntrinsics, pose: CameraPose) -> Result<Self> {
        intrinsics.validate()?;
        pose.validate()?;
        let r = pose.rotation().transpose();
        let t = -(r * pose.center());
        let mut rt = Matrix3x4::zeros();
        rt.fixed_view_mut::<3, 3>(0, 0).copy_from(&r);
        rt.set_column(3, &t);
        let matrix = intrinsics.calibration_matrix() * rt;
        Ok(Self {
            intrinsics,
            pose,
            matrix,
        })
    }

    pub fn intrinsics(&self) -> &CameraIntrinsics {
        &self.intrinsics
    }

    pub fn pose(&self) -> &CameraPose {
        &self.pose
    }

    pub fn matrix(&self) -> &Matrix3x4<f64> {
        &self.matrix
    }

    /// Homogeneous image point `P x̄`.
    pub fn project_homogeneous(&self, x: &Point3<f64>) -> Vector3<f64> {
        self.matrix * x.to_homogeneous()
    }

    pub fn project(&self, x: &Point3<f64>) -> Result<ImagePoint> {
        self.project_raw(&[x.x, x.y, x.z])
            .map(|(u, v, _)| ImagePoint::new(u, v))
            .ok_or(Error::ProjectionSingular)
    }

    /// Projection returning `(u, v, w)` where `w` is the signed depth scale;
    /// `None` on the camera plane.
    #[inline]
    pub fn project_raw(&self, x: &[f64; 3]) -> Option<(f64, f64, f64)> {
        let m = &self.matrix;
        let w = m[(2, 0)] * x[0] + m[(2, 1)] * x[1] + m[(2, 2)] * x[2] + m[(2, 3)];
        if w.abs() <= SINGULAR_TOL {
            return None;
        }
        let u = m[(0, 0)] * x[0] + m[(0, 1)] * x[1] + m[(0, 2)] * x[2] + m[(0, 3)];
        let v = m[(1, 0)] * x[0] + m[(1, 1)] * x[1] + m[(1, 2)] * x[2] + m[(1, 3)];
        Some((u / w, v / w, w))
    }

    /// True when `x` is in front of the camera and projects inside the image.
    pub fn sees(&self, x: &[f64; 3]) -> bool {
        match self.project_raw(x) {
            Some((u, v, w)) => w > 0.0 && self.intrinsics.contains(u, v),
            None => false,
        }
    }
}

/// Convenience wrapper mirroring the camera constructor.
pub fn build_camera(intrinsics: CameraIntrinsics, pose: CameraPose) -> Result<ProjectiveCamera> {
    ProjectiveCamera::new(intrinsics, pose)
}

/// The projective map between world space and the disparity space of a
/// horizontally rectified pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityFrame {
    pd: Matrix4<f64>,
    pd_inv: Matrix4<f64>,
    owner: Side,
    baseline: f64,
}

impl DisparityFrame {
    /// Stacks the rows `(P_ℓ)₁, (P_ℓ)₂, (P_r)₁ − (P_ℓ)₁, (P_ℓ)₃`, rescales so
    /// the last row has unit norm, and inverts.
    pub fn from_rectified_matrices(
        left: &Matrix3x4<f64>,
        right: &Matrix3x4<f64>,
        owner: Side,
        baseline: f64,
    ) -> Result<Self> {
        let r1 = left.row(0).into_owned();
        let r2 = left.row(1).into_owned();
        let r3 = right.row(0) - left.row(0);
        let r4 = left.row(2).into_owned();
        let mut pd = Matrix4::from_rows(&[
            RowVector4::from(r1),
            RowVector4::from(r2),
            RowVector4::from(r3),
            RowVector4::from(r4),
        ]);
        let scale = pd.row(3).norm();
        if scale <= SINGULAR_TOL {
            return Err(Error::InvalidParameter("degenerate depth row".into()));
        }
        if scale != 1.0 {
            pd /= scale;
        }
        if pd.determinant().abs() <= SINGULAR_TOL {
            return Err(Error::InvalidParameter(
                "disparity transform is singular".into(),
            ));
        }
        let pd_inv = pd.try_inverse().ok_or_else(|| {
            Error::InvalidParameter("disparity transform is not invertible".into())
        })?;
        Ok(Self {
            pd,
            pd_inv,
            owner,
            baseline,
        })
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.pd
    }

    pub fn inverse_matrix(&self) -> &Matrix4<f64> {
        &self.pd_inv
    }

    pub fn owner(&self) -> Side {
        self.owner
    }

    pub fn baseline(&self) -> f64 {
        self.baseline
    }

    pub fn to_disparity(&self, x: &Point3<f64>) -> Result<DisparityPoint> {
        self.to_disparity_raw(&[x.x, x.y, x.z])
            .map(|y| DisparityPoint::new(y[0], y[1], y[2]))
            .ok_or(Error::ProjectionSingular)
    }

    pub fn from_disparity(&self, y: &DisparityPoint) -> Result<Point3<f64>> {
        self.from_disparity_raw(&y.to_array())
            .map(|(x, _)| Point3::new(x[0], x[1], x[2]))
            .ok_or(Error::PointAtInfinity)
    }

    #[inline]
    pub fn to_disparity_raw(&self, x: &[f64; 3]) -> Option<[f64; 3]> {
        let h = apply4(&self.pd, x);
        if h[3].abs() <= SINGULAR_TOL {
            return None;
        }
        Some([h[0] / h[3], h[1] / h[3], h[2] / h[3]])
    }

    /// Inverse map. Also returns the homogeneous scale, whose sign tells
    /// whether the point is in front of (`> 0`) or behind the owning camera.
    #[inline]
    pub fn from_disparity_raw(&self, y: &[f64; 3]) -> Option<([f64; 3], f64)> {
        let h = apply4(&self.pd_inv, y);
        if h[3].abs() <= SINGULAR_TOL {
            return None;
        }
        Some(([h[0] / h[3], h[1] / h[3], h[2] / h[3]], h[3]))
    }
}

#[inline]
fn apply4(m: &Matrix4<f64>, x: &[f64; 3]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (r, o) in out.iter_mut().enumerate() {
        *o = m[(r, 0)] * x[0] + m[(r, 1)] * x[1] + m[(r, 2)] * x[2] + m[(r, 3)];
    }
    out
}

/// Builds the right camera `P_r = P_ℓ + K (b, 0, 0)ᵀ e₄ᵀ` rectified with
/// `left`, and the disparity frame of the pair. Rows 2 and 3 of the two
/// projection matrices are shared exactly.
pub fn make_rectified_pair(
    left: &ProjectiveCamera,
    baseline: f64,
) -> Result<(ProjectiveCamera, DisparityFrame)> {
    if baseline == 0.0 || !baseline.is_finite() {
        return Err(Error::InvalidParameter(
            "baseline must be nonzero and finite".into(),
        ));
    }
    let mut matrix = left.matrix;
    matrix[(0, 3)] += left.intrinsics.fx() * baseline;
    // Same orientation; the centre moves by −R_cw (b, 0, 0).
    let r_cw = left.pose.rotation();
    let shift = r_cw * Vector3::new(baseline, 0.0, 0.0);
    let c = left.pose.center() - shift;
    let pose = CameraPose {
        position: [c.x, c.y, c.z],
        ..left.pose
    };
    let right = ProjectiveCamera {
        intrinsics: left.intrinsics,
        pose,
        matrix,
    };
    let frame =
        DisparityFrame::from_rectified_matrices(&left.matrix, &right.matrix, Side::Left, baseline)?;
    Ok((right, frame))
}

/// Disparity frame of `camera` completed by an abstract camera rectified
/// with it. The abstract camera produces no observations.
pub fn rectified_companion(
    camera: &ProjectiveCamera,
    abstract_baseline: f64,
    owner: Side,
) -> Result<DisparityFrame> {
    let (_, mut frame) = make_rectified_pair(camera, abstract_baseline)?;
    frame.owner = owner;
    Ok(frame)
}

/// Orthographic observation matrices `H_ℓ`, `H_r`, optionally padded with
/// three zero velocity columns.
pub fn disparity_observation_matrix(side: Side, dynamic: bool) -> nalgebra::DMatrix<f64> {
    let base = match side {
        Side::Left => Matrix2x3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0),
        Side::Right => Matrix2x3::new(1.0, 0.0, 1.0, 0.0, 1.0, 0.0),
    };
    let cols = if dynamic { 6 } else { 3 };
    let mut h = nalgebra::DMatrix::zeros(2, cols);
    h.view_mut((0, 0), (2, 3)).copy_from(&base);
    h
}

/// Two physical cameras plus the disparity frames in which their
/// observations are processed.
///
/// Rectified rigs have a single frame (that of the pair, tagged `Left`), and
/// both cameras update in it with `H_ℓ` / `H_r`. Non-rectified rigs carry one
/// companion frame per camera, and each camera updates in its own frame with
/// `H_ℓ`.
#[derive(Debug, Clone)]
pub struct StereoRig {
    cameras: [ProjectiveCamera; 2],
    frames: [DisparityFrame; 2],
    rectified: bool,
}

impl StereoRig {
    pub fn rectified(left: ProjectiveCamera, baseline: f64) -> Result<Self> {
        let (right, frame) = make_rectified_pair(&left, baseline)?;
        Ok(Self {
            cameras: [left, right],
            frames: [frame.clone(), frame],
            rectified: true,
        })
    }

    pub fn non_rectified(
        left: ProjectiveCamera,
        right: ProjectiveCamera,
        abstract_baseline: f64,
    ) -> Result<Self> {
        let fl = rectified_companion(&left, abstract_baseline, Side::Left)?;
        let fr = rectified_companion(&right, abstract_baseline, Side::Right)?;
        Ok(Self {
            cameras: [left, right],
            frames: [fl, fr],
            rectified: false,
        })
    }

    pub fn is_rectified(&self) -> bool {
        self.rectified
    }

    pub fn camera(&self, side: Side) -> &ProjectiveCamera {
        &self.cameras[side.index()]
    }

    /// Identifier of the frame in which observations from `camera` are used.
    pub fn frame_id(&self, camera: Side) -> Side {
        if self.rectified {
            Side::Left
        } else {
            camera
        }
    }

    pub fn frame(&self, id: Side) -> &DisparityFrame {
        &self.frames[id.index()]
    }

    /// Which orthographic projection maps the state to `camera`'s image.
    pub fn observation_side(&self, camera: Side) -> Side {
        if self.rectified {
            camera
        } else {
            Side::Left
        }
    }

    /// Physical camera whose image plane anchors frame `id`.
    pub fn frame_camera(&self, id: Side) -> &ProjectiveCamera {
        &self.cameras[self.frames[id.index()].owner().index()]
    }
}

/// Max absolute deviation of `R Rᵀ` from identity and `det R`.
pub fn rotation_check(r: &Matrix3<f64>) -> (f64, f64) {
    let dev = (r * r.transpose() - Matrix3::identity()).abs().max();
    (dev, r.determinant())
}

/// Point at the homogeneous representation used by tests and oracles.
pub fn homogeneous(x: &Point3<f64>) -> Vector4<f64> {
    x.to_homogeneous()
}

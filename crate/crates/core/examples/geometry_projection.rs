//! Disparity frames of a rectified and a non-rectified rig: world points
//! map to `(u, v, d)` and back, and `H · P_d` reproduces each camera's
//! pixel coordinates.

use disparity_fusion::geometry::{disparity_observation_matrix, DEFAULT_ABSTRACT_BASELINE};
use disparity_fusion::{CameraIntrinsics, CameraPose, ProjectiveCamera, Side, StereoRig};
use nalgebra::{Point3, Vector3};

fn main() -> disparity_fusion::Result<()> {
    let k = CameraIntrinsics::simulated();
    let left = ProjectiveCamera::new(k, CameraPose::identity())?;
    let rectified = StereoRig::rectified(left.clone(), -10.0)?;
    let x = Point3::new(12.0, -7.0, 150.0);

    let frame = rectified.frame(Side::Left);
    let y = frame.to_disparity(&x)?;
    println!("rectified rig, X = {x:?}");
    println!(
        "  disparity point (u, v, d) = ({:.4}, {:.4}, {:.4})",
        y.u, y.v, y.d
    );
    println!("  back to world: {:?}", frame.from_disparity(&y)?);
    for side in [Side::Left, Side::Right] {
        let h = disparity_observation_matrix(side, false);
        let z = &h * Vector3::new(y.u, y.v, y.d);
        let p = rectified.camera(side).project(&x)?;
        println!(
            "  {:>5}: H·y = ({:.6}, {:.6}), camera projection = ({:.6}, {:.6})",
            side.label(),
            z[0],
            z[1],
            p.u,
            p.v
        );
    }

    let l = ProjectiveCamera::new(k, CameraPose::new([-20.0, 0.0, 0.0], 0.26, 0.0, 0.0))?;
    let r = ProjectiveCamera::new(k, CameraPose::new([20.0, 0.0, 0.0], -0.26, 0.0, 0.0))?;
    let rig = StereoRig::non_rectified(l, r, DEFAULT_ABSTRACT_BASELINE)?;
    println!("\ntoe-in rig, each camera has its own companion frame");
    for side in [Side::Left, Side::Right] {
        let y = rig.frame(side).to_disparity(&x)?;
        let p = rig.camera(side).project(&x)?;
        println!(
            "  {:>5}: (u, v, d) = ({:.4}, {:.4}, {:.4}); image ({:.4}, {:.4})",
            side.label(),
            y.u,
            y.v,
            y.d,
            p.u,
            p.v
        );
    }
    Ok(())
}

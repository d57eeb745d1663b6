//! One noisy stereo pair of a static point seen by a toe-in rig: Kalman
//! update in the left disparity frame, particle move into the right
//! camera's frame, second Kalman update, then back to world space.

use disparity_fusion::sim::preset;
use disparity_fusion::single_object::{
    initialise, kalman_update, particle_move, GaussianPrior, Observation,
};
use disparity_fusion::{DisparityPoint, Side};
use nalgebra::Point3;

fn main() -> disparity_fusion::Result<()> {
    let cfg = preset("localise_s1")?;
    let rig = cfg.rig.build()?;
    let truth = Point3::new(0.0, 0.0, 100.0);
    let zl = rig.camera(Side::Left).project(&truth)?;
    let zr = rig.camera(Side::Right).project(&truth)?;
    println!("true point {truth:?}");
    println!(
        "  left pixel ({:.3}, {:.3}), right pixel ({:.3}, {:.3})",
        zl.u, zl.v, zr.u, zr.v
    );

    // Fixed pixel errors of about one standard deviation.
    let left = Observation::isotropic(zl.u + 1.2, zl.v - 0.8, 2.0, Side::Left, 0);
    let right = Observation::isotropic(zr.u - 1.0, zr.v + 1.4, 2.0, Side::Right, 0);

    let prior = GaussianPrior::new(7.0, 5.4);
    let s0 = initialise(&left, prior, None, Side::Left)?;
    let moved = particle_move(
        &s0,
        rig.frame(Side::Left),
        rig.frame(Side::Right),
        None,
        10_000,
        Some(rig.camera(Side::Right)),
        7,
    )?;
    let post = kalman_update(&moved, &right, Side::Left)?;
    let m = &post.posterior.mean;
    let est = rig
        .frame(Side::Right)
        .from_disparity(&DisparityPoint::new(m[0], m[1], m[2]))?;
    println!(
        "posterior in the right frame: (u, v, d) = ({:.3}, {:.3}, {:.4}), var d {:.2e}",
        m[0],
        m[1],
        m[2],
        post.posterior.cov[(2, 2)]
    );
    println!("estimate {est:?}, error {:.3} cm", (est - truth).norm());
    Ok(())
}

//! Bayesian estimation from camera pairs in disparity space.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: projective cameras, disparity frames and the maps between
//!   world space, disparity space and image planes.
//! * [`single_object`]: Gaussian localisation and tracking in disparity space
//!   (Kalman update, particle prediction and particle move), plus a bootstrap
//!   particle filter and an inverse-depth EKF used as baselines.
//! * [`phd`]: a Gaussian-mixture PHD filter over disparity space with
//!   observation-driven birth and field-of-view dependent detection.
//! * [`calibration`]: joint multi-object tracking and right-camera extrinsic
//!   calibration with a particle population over sensor states, each particle
//!   carrying its own conditional PHD.
//! * [`metrics`]: OSPA and RMSE.
//! * [`sim`]: scenario configuration, ground truth, observation synthesis and
//!   the Monte-Carlo harness.
//! * [`cli`]: the experiment runner behind the `dfusion` binary.
//!
//! World coordinates are centimetres; image coordinates are pixels.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod cli;
mod error;
pub mod geometry;
pub mod metrics;
pub mod phd;
pub mod resampling;
pub mod rng;
pub mod sim;
pub mod single_object;

pub use error::{Error, Result};
pub use geometry::{
    CameraIntrinsics, CameraPose, DisparityFrame, DisparityPoint, ImagePoint, ProjectiveCamera,
    Side, StereoRig,
};

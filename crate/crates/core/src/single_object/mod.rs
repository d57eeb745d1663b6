//! Single-object localisation and tracking in disparity space.
//!
//! The belief is a Gaussian over `(u, v, d)` (static) or
//! `(u, v, d, u̇, v̇, ḋ)` (dynamic) in the disparity frame of the camera that
//! last observed the object. Between observations the belief is carried by
//! particles through world space ([`particle_prediction`], [`particle_move`])
//! and refitted; each observation is then a linear Kalman update.

mod idekf;
mod kalman;
mod particle;
mod pf;
mod state;
mod tracker;

pub use idekf::{baseline_inverse_depth_ekf, InverseDepthParams};
pub use kalman::{kalman_update, KalmanOutcome, UpdateTerms};
pub use particle::{
    fit_gaussian, fit_weighted_gaussian, particle_move, particle_prediction, transport,
    transport_particles, GaussianSampler, TransportSpec, MAX_DIM,
};
pub use pf::{baseline_pf, ParticleFilterParams, PfOutput};
pub use state::{initialise, GaussianPrior, GaussianState, MotionKind, MotionModel, Observation};
pub use tracker::{
    initialise_on_rig, track_single, SingleObjectParams, SingleObjectTracker, TrackOutput,
    TrackStats, TrackStep,
};

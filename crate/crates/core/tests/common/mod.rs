//! Independent oracles and acceptance checks shared by the integration
//! tests. Nothing here calls the library routine it is checking.

#![allow(dead_code)]

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, Matrix3x4, Matrix4, Point3, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use disparity_fusion::calibration::SensorState;
use disparity_fusion::cli::experiments::{
    calibration_run, localisation_case, phd_run, single_run, CalibrationRun, PhdRun, SingleRun,
};
use disparity_fusion::geometry::{
    make_rectified_pair, rectified_companion, CameraIntrinsics, CameraPose, DisparityFrame,
    ProjectiveCamera, Side, StereoRig,
};
use disparity_fusion::metrics::{mean_std, ospa, rmse, OspaParams};
use disparity_fusion::phd::{
    phd_update, predict_and_split, ClutterModel, DetectionModel, GaussianMixture, GmPhdFilter,
    PhdParams, Scan, WeightedGaussian,
};
use disparity_fusion::sim::{
    generate_observations, generate_truth, par_runs, preset, ObjectConfig, ScenarioConfig,
};
use disparity_fusion::single_object::{
    initialise, kalman_update, particle_move, particle_prediction, GaussianPrior, GaussianState,
    MotionModel, Observation,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Result of one acceptance check.
pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

/// Runs a criterion, prints its single pass/fail line and returns whether
/// it passed, the runtime budget included.
pub fn criterion(n: u32, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = f();
    let elapsed = start.elapsed();
    let in_time = elapsed < budget;
    let pass = o.pass && in_time;
    println!(
        "criterion {n} ({name}): {} | {} | {:.1} s of {:.0} s budget",
        if pass { "PASS" } else { "FAIL" },
        o.detail,
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
    pass
}

// ---------------------------------------------------------------- geometry

pub fn camera(pose: CameraPose) -> ProjectiveCamera {
    ProjectiveCamera::new(CameraIntrinsics::simulated(), pose).unwrap()
}

pub fn random_pose<R: Rng>(r: &mut R) -> CameraPose {
    CameraPose::new(
        [
            r.random_range(-100.0..100.0),
            r.random_range(-50.0..50.0),
            r.random_range(-50.0..50.0),
        ],
        r.random_range(-PI / 3.0..PI / 3.0),
        r.random_range(-0.3..0.3),
        r.random_range(-0.3..0.3),
    )
}

/// A world point seen by `cam` at depth in `[20, 1000)` cm, drawn by
/// back-projecting a random pixel.
pub fn frustum_point<R: Rng>(cam: &ProjectiveCamera, r: &mut R) -> Point3<f64> {
    let k = cam.intrinsics();
    let fx = k.focal_length * 1e3 / k.pixel_size_u;
    let fy = k.focal_length * 1e3 / k.pixel_size_v;
    let u = r.random_range(0.0..k.width);
    let v = r.random_range(0.0..k.height);
    let z = r.random_range(20.0..1000.0);
    let xc = nalgebra::Vector3::new(
        (u - k.principal_u) / fx * z,
        (v - k.principal_v) / fy * z,
        z,
    );
    let w = cam.pose().rotation() * xc + cam.pose().center();
    Point3::from(w)
}

/// Dehomogenised `P x̄` by plain array arithmetic.
pub fn naive_project(p: &Matrix3x4<f64>, x: &Point3<f64>) -> (f64, f64) {
    let xs = [x.x, x.y, x.z, 1.0];
    let mut h = [0.0; 3];
    for (r, hr) in h.iter_mut().enumerate() {
        for (c, xc) in xs.iter().enumerate() {
            *hr += p[(r, c)] * xc;
        }
    }
    (h[0] / h[2], h[1] / h[2])
}

pub fn apply_homogeneous(m: &Matrix4<f64>, x: [f64; 3]) -> [f64; 3] {
    let h = m * Vector4::new(x[0], x[1], x[2], 1.0);
    [h[0] / h[3], h[1] / h[3], h[2] / h[3]]
}

/// Worst relative round-trip error, worst `H·P_d x` vs projection error
/// (px) and whether rows 2 and 3 are shared exactly, over `n` random
/// rectified pairs and companions.
pub fn geometry_suite(n: usize, seed: u64) -> (f64, f64, bool) {
    let mut r = rng(seed);
    let mut worst_rt: f64 = 0.0;
    let mut worst_px: f64 = 0.0;
    let mut shared = true;
    for _ in 0..n {
        let left = camera(random_pose(&mut r));
        let b: f64 = r.random_range(-60.0..60.0);
        let b = if b.abs() < 1.0 { 1.0 } else { b };
        let (right, frame) = make_rectified_pair(&left, b).unwrap();
        let (pl, pr) = (left.matrix(), right.matrix());
        shared &= pl.row(1) == pr.row(1) && pl.row(2) == pr.row(2);
        let x = frustum_point(&left, &mut r);
        let y = frame.to_disparity(&x).unwrap();
        let back = frame.from_disparity(&y).unwrap();
        worst_rt = worst_rt.max((back - x).norm() / x.coords.norm().max(1.0));
        let (ul, vl) = naive_project(pl, &x);
        let (ur, vr) = naive_project(pr, &x);
        // H_ℓ y = (u, v), H_r y = (u + d, v)
        worst_px = worst_px
            .max((y.u - ul).abs())
            .max((y.v - vl).abs())
            .max((y.u + y.d - ur).abs())
            .max((y.v - vr).abs());
        let comp = rectified_companion(&left, -1.0, Side::Left).unwrap();
        let yc = comp.to_disparity(&x).unwrap();
        worst_px = worst_px.max((yc.u - ul).abs()).max((yc.v - vl).abs());
        let xc = comp.from_disparity(&yc).unwrap();
        worst_rt = worst_rt.max((xc - x).norm() / x.coords.norm().max(1.0));
    }
    (worst_rt, worst_px, shared)
}

// ----------------------------------------------------- Gaussian utilities

pub fn cholesky(c: &DMatrix<f64>) -> DMatrix<f64> {
    c.clone().cholesky().expect("SPD").l()
}

pub fn draw<R: Rng>(m: &DVector<f64>, l: &DMatrix<f64>, r: &mut R) -> DVector<f64> {
    let z = DVector::from_fn(m.len(), |_, _| r.sample::<f64, _>(StandardNormal));
    m + l * z
}

/// Streaming mean and unbiased covariance.
pub struct Moments {
    n: f64,
    mean: DVector<f64>,
    m2: DMatrix<f64>,
}

impl Moments {
    pub fn new(dim: usize) -> Self {
        Self {
            n: 0.0,
            mean: DVector::zeros(dim),
            m2: DMatrix::zeros(dim, dim),
        }
    }

    pub fn push(&mut self, x: &DVector<f64>) {
        self.n += 1.0;
        let d = x - &self.mean;
        self.mean += &d / self.n;
        let d2 = x - &self.mean;
        self.m2 += &d * d2.transpose();
    }

    pub fn count(&self) -> f64 {
        self.n
    }

    pub fn mean(&self) -> DVector<f64> {
        self.mean.clone()
    }

    pub fn cov(&self) -> DMatrix<f64> {
        &self.m2 / (self.n - 1.0)
    }
}

// ------------------------------------------------ dense-particle transport

/// Constant-velocity motion as the oracle understands it: the world-space
/// velocity is the finite difference of the disparity velocity over `dt`,
/// a velocity perturbation `w ~ N(0, q)` acts over the step with the
/// position taking half of it.
#[derive(Clone, Copy)]
pub struct OracleMotion {
    pub q: f64,
    pub dt: f64,
}

/// Samples the Gaussian, maps each sample through world space into `to`
/// (applying one motion step when given) and returns the sample moments.
pub fn dense_transport(
    state: &GaussianState,
    from: &DisparityFrame,
    to: &DisparityFrame,
    motion: Option<OracleMotion>,
    n: usize,
    seed: u64,
) -> Moments {
    let mut r = rng(seed);
    let l = cholesky(&state.cov);
    let dim = state.dim();
    let inv = from.inverse_matrix();
    let fwd = to.matrix();
    let h = motion.map(|m| m.dt).unwrap_or(1.0);
    let mut acc = Moments::new(dim);
    let mut out = DVector::zeros(dim);
    for _ in 0..n {
        let s = draw(&state.mean, &l, &mut r);
        let x = apply_homogeneous(inv, [s[0], s[1], s[2]]);
        if dim == 3 {
            let y = apply_homogeneous(fwd, x);
            out.copy_from_slice(&y);
            acc.push(&out);
            continue;
        }
        let xh = apply_homogeneous(inv, [s[0] + s[3] * h, s[1] + s[4] * h, s[2] + s[5] * h]);
        let mut p = x;
        let mut v = [0.0; 3];
        for k in 0..3 {
            v[k] = (xh[k] - x[k]) / h;
        }
        if let Some(m) = motion {
            for k in 0..3 {
                let w = m.q.sqrt() * r.sample::<f64, _>(StandardNormal);
                p[k] += (v[k] + 0.5 * w) * m.dt;
                v[k] += w;
            }
        }
        let y = apply_homogeneous(fwd, p);
        let yh = apply_homogeneous(fwd, [p[0] + v[0] * h, p[1] + v[1] * h, p[2] + v[2] * h]);
        for k in 0..3 {
            out[k] = y[k];
            out[k + 3] = (yh[k] - y[k]) / h;
        }
        acc.push(&out);
    }
    acc
}

/// Disparity-space state of a world point moving with `vel`, in `frame`,
/// with the given covariance diagonal.
pub fn dynamic_state(
    frame: &DisparityFrame,
    id: Side,
    x: [f64; 3],
    vel: [f64; 3],
    dt: f64,
    diag: [f64; 6],
) -> GaussianState {
    let y = apply_homogeneous(frame.matrix(), x);
    let yh = apply_homogeneous(
        frame.matrix(),
        [x[0] + vel[0] * dt, x[1] + vel[1] * dt, x[2] + vel[2] * dt],
    );
    let mean = DVector::from_vec(vec![
        y[0],
        y[1],
        y[2],
        (yh[0] - y[0]) / dt,
        (yh[1] - y[1]) / dt,
        (yh[2] - y[2]) / dt,
    ]);
    GaussianState::new(
        mean,
        DMatrix::from_diagonal(&DVector::from_row_slice(&diag)),
        id,
    )
    .unwrap()
}

/// Prediction setup with `ẋ = ẏ = 2`, `ż = 0.5` cm/s and noise variance
/// 0.08, in the companion frame of the simulated left camera.
pub fn prediction_setup() -> (DisparityFrame, GaussianState, MotionModel) {
    let cam = camera(CameraPose::identity());
    let frame = rectified_companion(&cam, -1.0, Side::Left).unwrap();
    let state = dynamic_state(
        &frame,
        Side::Left,
        [10.0, 5.0, 100.0],
        [2.0, 2.0, 0.5],
        1.0,
        [2.0, 2.0, 0.5, 1.0, 1.0, 0.001],
    );
    (frame, state, MotionModel::constant_velocity(0.08, 1.0))
}

/// Frame-change setup: 800×600, f = 8 mm cameras 200 cm apart, toed in by
/// π/8 each, zero-mean velocity with variance 0.03.
pub fn move_setup() -> (DisparityFrame, DisparityFrame, GaussianState, MotionModel) {
    let left = camera(CameraPose::new([-100.0, 0.0, 0.0], PI / 8.0, 0.0, 0.0));
    let right = camera(CameraPose::new([100.0, 0.0, 0.0], -PI / 8.0, 0.0, 0.0));
    let fl = rectified_companion(&left, -1.0, Side::Left).unwrap();
    let fr = rectified_companion(&right, -1.0, Side::Right).unwrap();
    let y = apply_homogeneous(fl.matrix(), [0.0, 0.0, 240.0]);
    let mean = DVector::from_vec(vec![y[0], y[1], y[2], 0.0, 0.0, 0.0]);
    let cov = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 2.0, 0.3, 0.03, 0.03, 0.03]));
    let state = GaussianState::new(mean, cov, Side::Left).unwrap();
    (fl, fr, state, MotionModel::constant_velocity(0.08, 1.0))
}

/// Mean within 3 combined standard errors per component and relative
/// Frobenius covariance error; returns (mean ok, worst z-score, cov rel).
pub fn compare_fit(fit: &GaussianState, n_fit: usize, oracle: &Moments) -> (bool, f64, f64) {
    let oc = oracle.cov();
    let om = oracle.mean();
    let mut worst: f64 = 0.0;
    for k in 0..fit.dim() {
        let se = (oc[(k, k)] * (1.0 / n_fit as f64 + 1.0 / oracle.count())).sqrt();
        worst = worst.max((fit.mean[k] - om[k]).abs() / se);
    }
    let rel = (&fit.cov - &oc).norm() / oc.norm();
    (worst < 3.0, worst, rel)
}

pub const ORACLE_N: usize = 1_000_000;
pub const FIT_N: usize = 100_000;

pub fn prediction_vs_oracle() -> (bool, f64, f64) {
    let (frame, state, model) = prediction_setup();
    let fit = particle_prediction(&state, &frame, &model, FIT_N, 11).unwrap();
    let oracle = dense_transport(
        &state,
        &frame,
        &frame,
        Some(OracleMotion { q: 0.08, dt: 1.0 }),
        ORACLE_N,
        0x0a,
    );
    compare_fit(&fit, FIT_N, &oracle)
}

pub fn move_vs_oracle() -> (bool, f64, f64) {
    let (fl, fr, state, model) = move_setup();
    let fit = particle_move(&state, &fl, &fr, Some(&model), FIT_N, None, 12).unwrap();
    let fit = GaussianState {
        frame: Side::Right,
        ..fit
    };
    let oracle = dense_transport(
        &state,
        &fl,
        &fr,
        Some(OracleMotion { q: 0.08, dt: 1.0 }),
        ORACLE_N,
        0x0b,
    );
    compare_fit(&fit, FIT_N, &oracle)
}

/// Log-log slope of the standardised mean error of `particle_move` against
/// the dense oracle over n ∈ {10², 10³, 10⁴}, averaged over `reps` seeds.
pub fn convergence_slope(reps: usize) -> f64 {
    let (fl, fr, state, model) = move_setup();
    let oracle = dense_transport(
        &state,
        &fl,
        &fr,
        Some(OracleMotion { q: 0.08, dt: 1.0 }),
        ORACLE_N,
        0x0c,
    );
    let (om, oc) = (oracle.mean(), oracle.cov());
    let ns = [100usize, 1000, 10000];
    let errs: Vec<f64> = ns
        .iter()
        .map(|&n| {
            (0..reps)
                .map(|s| {
                    let fit =
                        particle_move(&state, &fl, &fr, Some(&model), n, None, 1000 + s as u64)
                            .unwrap();
                    (0..6)
                        .map(|k| (fit.mean[k] - om[k]).powi(2) / oc[(k, k)])
                        .sum::<f64>()
                        .sqrt()
                })
                .sum::<f64>()
                / reps as f64
        })
        .collect();
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    slope(&xs, &ys)
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

// ------------------------------------------------------- dense-Bayes oracle

/// Posterior mean of a linear-Gaussian problem by importance sampling from
/// the prior with `n` samples; the observation picks `u` (plus `d` for the
/// right camera of a rectified pair) and `v`.
pub fn dense_bayes_mean(
    prior: &GaussianState,
    z: [f64; 2],
    r: [f64; 2],
    right: bool,
    n: usize,
    seed: u64,
) -> DVector<f64> {
    let mut g = rng(seed);
    let l = cholesky(&prior.cov);
    let mut num = DVector::zeros(prior.dim());
    let mut den = 0.0;
    for _ in 0..n {
        let s = draw(&prior.mean, &l, &mut g);
        let u = if right { s[0] + s[2] } else { s[0] };
        let e = [z[0] - u, z[1] - s[1]];
        let w = (-0.5 * (e[0] * e[0] / r[0] + e[1] * e[1] / r[1])).exp();
        num += &s * w;
        den += w;
    }
    num / den
}

/// Worst relative posterior-mean error of `kalman_update` against the
/// dense-Bayes oracle over `cases` random problems.
pub fn kalman_vs_dense_bayes(cases: usize) -> f64 {
    let mut g = rng(0x4b);
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let a = DMatrix::from_fn(3, 3, |_, _| g.random_range(-1.0..1.0));
        let cov = &a * a.transpose() + DMatrix::identity(3, 3) * 0.5;
        let mean = DVector::from_fn(3, |_, _| g.random_range(-5.0..5.0));
        let prior = GaussianState::new(mean, cov, Side::Left).unwrap();
        let r = [g.random_range(0.5..3.0), g.random_range(0.5..3.0)];
        let right = g.random_bool(0.5);
        let h_u = if right {
            prior.mean[0] + prior.mean[2]
        } else {
            prior.mean[0]
        };
        let z = [
            h_u + g.random_range(-2.0..2.0),
            prior.mean[1] + g.random_range(-2.0..2.0),
        ];
        let obs = Observation::new(
            disparity_fusion::geometry::ImagePoint::new(z[0], z[1]),
            nalgebra::Matrix2::new(r[0], 0.0, 0.0, r[1]),
            if right { Side::Right } else { Side::Left },
            1,
        );
        let side = if right { Side::Right } else { Side::Left };
        let post = kalman_update(&prior, &obs, side).unwrap().posterior;
        let oracle = dense_bayes_mean(&prior, z, r, right, 1_000_000, 100 + case as u64);
        let rel = (&post.mean - &oracle).norm() / post.mean.norm().max(1.0);
        worst = worst.max(rel);
    }
    worst
}

// ------------------------------------------------------------------- OSPA

/// OSPA by exhaustive search over injections of the smaller set.
pub fn ospa_brute(x: &[Point3<f64>], y: &[Point3<f64>], c: f64, p: f64) -> f64 {
    let (small, large) = if x.len() <= y.len() { (x, y) } else { (y, x) };
    let (m, n) = (small.len(), large.len());
    if n == 0 {
        return 0.0;
    }
    #[allow(clippy::too_many_arguments)]
    fn search(
        i: usize,
        small: &[Point3<f64>],
        large: &[Point3<f64>],
        used: &mut Vec<bool>,
        acc: f64,
        best: &mut f64,
        c: f64,
        p: f64,
    ) {
        if i == small.len() {
            *best = best.min(acc);
            return;
        }
        for j in 0..large.len() {
            if used[j] {
                continue;
            }
            used[j] = true;
            let d = (small[i] - large[j]).norm().min(c).powf(p);
            search(i + 1, small, large, used, acc + d, best, c, p);
            used[j] = false;
        }
    }
    let mut best = f64::INFINITY;
    search(0, small, large, &mut vec![false; n], 0.0, &mut best, c, p);
    ((best + c.powf(p) * (n - m) as f64) / n as f64).powf(1.0 / p)
}

pub fn random_set<R: Rng>(g: &mut R, n: usize, spread: f64) -> Vec<Point3<f64>> {
    (0..n)
        .map(|_| {
            Point3::new(
                g.random_range(-spread..spread),
                g.random_range(-spread..spread),
                g.random_range(-spread..spread),
            )
        })
        .collect()
}

/// Worst |library − brute force| over random set pairs of size ≤ 6.
pub fn ospa_brute_force_gap(cases: usize, seed: u64) -> f64 {
    let mut g = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let (m, n) = (g.random_range(0..=6), g.random_range(0..=6));
        let x = random_set(&mut g, m, 15.0);
        let y = random_set(&mut g, n, 15.0);
        let c = g.random_range(1.0..30.0);
        let p = [1.0, 2.0, 3.0][g.random_range(0..3)];
        let lib = ospa(&x, &y, &OspaParams::euclidean(c, p)).unwrap();
        worst = worst.max((lib - ospa_brute(&x, &y, c, p)).abs());
    }
    worst
}

/// Count of metric-axiom violations over random triples.
pub fn ospa_axiom_violations(triples: usize, seed: u64) -> usize {
    let mut g = rng(seed);
    let mut bad = 0;
    for _ in 0..triples {
        let sets: Vec<Vec<Point3<f64>>> = (0..3)
            .map(|_| {
                let n = g.random_range(0..=5);
                random_set(&mut g, n, 20.0)
            })
            .collect();
        let prm =
            OspaParams::euclidean(g.random_range(1.0..40.0), [1.0, 2.0][g.random_range(0..2)]);
        let d = |a: &[Point3<f64>], b: &[Point3<f64>]| ospa(a, b, &prm).unwrap();
        let (x, y, z) = (&sets[0], &sets[1], &sets[2]);
        let (xy, yx, xz, yz) = (d(x, y), d(y, x), d(x, z), d(y, z));
        let tol = 1e-9;
        if d(x, x).abs() > tol || xy < 0.0 || (xy - yx).abs() > tol || xz > xy + yz + tol {
            bad += 1;
        }
        if xy == 0.0 && x != y && !(x.is_empty() && y.is_empty()) {
            let mut xs = x.clone();
            let mut ys = y.clone();
            let key = |p: &Point3<f64>| (p.x, p.y, p.z);
            xs.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
            ys.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
            if xs != ys {
                bad += 1;
            }
        }
    }
    bad
}

pub fn ospa_examples_exact() -> bool {
    let e = OspaParams::euclidean(10.0, 1.0);
    let p = |x: f64| Point3::new(x, 0.0, 0.0);
    let set = vec![p(1.0), p(4.0), Point3::new(2.0, 3.0, 4.0)];
    ospa(&set, &set, &e).unwrap() == 0.0
        && ospa(&[], &[p(1.0)], &e).unwrap() == 10.0
        && ospa(&[p(0.0)], &[p(3.0)], &e).unwrap() == 3.0
        && ospa(&[p(0.0)], &[p(3.0)], &OspaParams::euclidean(2.0, 1.0)).unwrap() == 2.0
}

// -------------------------------------------------------------------- PHD

pub fn simulated_rig(preset_name: &str) -> (ScenarioConfig, StereoRig) {
    let cfg = preset(preset_name).unwrap();
    let rig = cfg.rig.build().unwrap();
    (cfg, rig)
}

/// Worst weight-bookkeeping residual over random mixtures and scans:
/// `w∘ + w• = p_S w` per split and `Σw_post = w∘ + Σ_z (1 − clutter share)`
/// per update.
pub fn phd_bookkeeping_residual(cases: usize, seed: u64) -> f64 {
    let (cfg, rig) = simulated_rig("phd");
    let params = cfg.phd_params().unwrap();
    let mut g = rng(seed);
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let camera = if g.random_bool(0.5) {
            Side::Left
        } else {
            Side::Right
        };
        let mut mix = GaussianMixture::empty(Side::Left);
        let n = g.random_range(1..6);
        for _ in 0..n {
            let x = [
                g.random_range(-40.0..40.0),
                g.random_range(-30.0..30.0),
                g.random_range(120.0..260.0),
            ];
            let frame_id = if g.random_bool(0.5) {
                Side::Left
            } else {
                Side::Right
            };
            let s = dynamic_state(
                rig.frame(frame_id),
                frame_id,
                x,
                [g.random_range(-1.0..1.0), 0.0, 0.5],
                1.0,
                [4.0, 4.0, 0.2, 0.05, 0.05, 0.01],
            );
            mix.components
                .push(WeightedGaussian::new(g.random_range(0.01..1.5), s));
        }
        let det = DetectionModel {
            p_d_inside: params.p_detection,
            width: 800.0,
            height: 600.0,
        };
        let (missed, detected) = predict_and_split(
            &mix,
            &rig,
            rig.frame_id(camera),
            rig.observation_side(camera),
            params.p_survival,
            &params.motion,
            1,
            &det,
            100,
            case as u64,
        )
        .unwrap();
        let expect = params.p_survival * mix.total_weight();
        worst = worst.max((missed.total_weight() + detected.total_weight() - expect).abs());
        let obs: Vec<Observation> = (0..g.random_range(0..8))
            .map(|_| {
                Observation::isotropic(
                    g.random_range(0.0..800.0),
                    g.random_range(0.0..600.0),
                    2.0,
                    camera,
                    1,
                )
            })
            .collect();
        let clutter = ClutterModel {
            lambda: 10.0,
            width: 800.0,
            height: 600.0,
        };
        let upd = phd_update(
            &missed,
            &detected,
            &obs,
            &clutter,
            rig.observation_side(camera),
        )
        .unwrap();
        let expect =
            missed.total_weight() + upd.clutter_shares.iter().map(|c| 1.0 - c).sum::<f64>();
        worst = worst.max((upd.posterior.total_weight() - expect).abs());
    }
    worst
}

/// PHD with one component, `p_D = 1` and no clutter against the plain
/// Kalman recursion on a rectified rig; true when every step matches
/// bit for bit.
pub fn single_target_degeneracy() -> bool {
    let left = camera(CameraPose::identity());
    let rig = StereoRig::rectified(left, -10.0).unwrap();
    let prior = GaussianPrior::new(9.0, 4.0);
    let first = Observation::isotropic(410.0, 295.0, 2.0, Side::Left, 0);
    let mut state = initialise(&first, prior, None, Side::Left).unwrap();
    let mut mix = GaussianMixture::empty(Side::Left);
    mix.components
        .push(WeightedGaussian::new(1.0, state.clone()));
    let det = DetectionModel {
        p_d_inside: 1.0,
        width: 800.0,
        height: 600.0,
    };
    let clutter = ClutterModel {
        lambda: 0.0,
        width: 800.0,
        height: 600.0,
    };
    let zs = [
        (Side::Right, 419.0, 296.0),
        (Side::Left, 409.0, 294.5),
        (Side::Right, 420.5, 295.2),
        (Side::Left, 410.4, 295.1),
    ];
    for (i, &(cam, u, v)) in zs.iter().enumerate() {
        let obs = Observation::isotropic(u, v, 2.0, cam, 1 + i);
        let (missed, detected) = predict_and_split(
            &mix,
            &rig,
            Side::Left,
            cam,
            1.0,
            &MotionModel::stationary(),
            1,
            &det,
            50,
            i as u64,
        )
        .unwrap();
        if missed.total_weight() != 0.0 && !missed.is_empty() {
            return false;
        }
        let upd = phd_update(&missed, &detected, &[obs], &clutter, cam).unwrap();
        let kf = kalman_update(&state, &obs, cam).unwrap().posterior;
        let comps: Vec<&WeightedGaussian> = upd
            .posterior
            .components
            .iter()
            .filter(|c| c.weight > 0.0)
            .collect();
        if comps.len() != 1 || comps[0].weight != 1.0 || comps[0].state != kf {
            return false;
        }
        state = kf;
        mix = GaussianMixture {
            components: vec![WeightedGaussian::new(1.0, state.clone())],
            frame: Side::Left,
        };
    }
    true
}

pub struct PhdSummary {
    pub card_fraction: f64,
    pub early_ospa: f64,
    pub late_ospa: f64,
    pub failures: usize,
}

/// Fraction of steps after step 10 whose cardinality equals the number of
/// true objects, and mean OSPA over steps 1–5 and after step 10.
pub fn phd_summary(cfg: &ScenarioConfig) -> PhdSummary {
    let runs: Vec<_> = par_runs(cfg.runs, cfg.seed, |_, s| phd_run(cfg, s));
    let ok: Vec<&PhdRun> = runs.iter().filter_map(|r| r.as_ref().ok()).collect();
    let mut hits = 0usize;
    let mut total = 0usize;
    let (mut early, mut late) = (Vec::new(), Vec::new());
    for r in &ok {
        for (i, s) in r.steps.iter().enumerate() {
            let step = i + 1;
            if step > 10 {
                total += 1;
                hits += (s.cardinality == r.truth.positions[s.time].len()) as usize;
                late.push(r.ospa[i]);
            }
            if step <= 5 {
                early.push(r.ospa[i]);
            }
        }
    }
    PhdSummary {
        card_fraction: hits as f64 / total.max(1) as f64,
        early_ospa: mean_std(&early).0,
        late_ospa: mean_std(&late).0,
        failures: runs.len() - ok.len(),
    }
}

// ----------------------------------------------------- single-object runs

pub fn single_runs(cfg: &ScenarioConfig) -> Vec<SingleRun> {
    par_runs(cfg.runs, cfg.seed, |_, s| single_run(cfg, s))
        .into_iter()
        .map(|r| r.expect("run succeeds"))
        .collect()
}

/// Mean-over-runs RMSE of the disparity filter and of the baseline.
pub fn rmse_pair(runs: &[SingleRun]) -> (f64, f64) {
    let ds: Vec<_> = runs
        .iter()
        .map(|r| (r.estimates.clone(), r.truth_trajectory()))
        .collect();
    let bl: Vec<_> = runs
        .iter()
        .map(|r| {
            (
                r.baseline.as_ref().expect("baseline").estimates.clone(),
                r.truth_trajectory(),
            )
        })
        .collect();
    (rmse(&ds).unwrap().mean, rmse(&bl).unwrap().mean)
}

pub fn localisation_rmse(distance: f64, prior: GaussianPrior) -> (f64, f64) {
    let cfg = preset("localise_s1").unwrap();
    let case = localisation_case(&cfg, distance, prior);
    rmse_pair(&single_runs(&case))
}

/// Mean error per step over runs, disparity filter and baseline.
pub fn mean_errors(runs: &[SingleRun]) -> (Vec<f64>, Vec<f64>) {
    let n = runs[0].estimates.len();
    let ds: Vec<Vec<f64>> = runs.iter().map(|r| r.errors()).collect();
    let bl: Vec<Vec<f64>> = runs.iter().map(|r| r.baseline_errors().unwrap()).collect();
    let avg = |e: &[Vec<f64>]| {
        (0..n)
            .map(|t| e.iter().map(|s| s[t]).sum::<f64>() / e.len() as f64)
            .collect()
    };
    (avg(&ds), avg(&bl))
}

// ------------------------------------------------------------ calibration

pub fn calibration_runs(cfg: &ScenarioConfig) -> Vec<CalibrationRun> {
    par_runs(cfg.runs, cfg.seed, |_, s| calibration_run(cfg, s))
        .into_iter()
        .map(|r| r.expect("calibration run succeeds"))
        .collect()
}

/// Whether the final estimate is within half the prior σ on every position
/// axis and within π/48 in yaw.
pub fn calibration_run_ok(run: &CalibrationRun, prior_std: &[f64; 6]) -> (bool, bool) {
    let e = run.errors.last().expect("steps");
    let pos = (0..3).all(|i| e[i].abs() < 0.5 * prior_std[i]);
    let yaw = e[3].abs() < PI / 48.0;
    (pos, yaw)
}

/// Slope of the mean (over runs) Euclidean position error per step.
pub fn calibration_trend(runs: &[CalibrationRun]) -> f64 {
    let n = runs[0].errors.len();
    let ys: Vec<f64> = (0..n)
        .map(|t| {
            runs.iter()
                .map(|r| (0..3).map(|i| r.errors[t][i].powi(2)).sum::<f64>().sqrt())
                .sum::<f64>()
                / runs.len() as f64
        })
        .collect();
    let xs: Vec<f64> = (0..n).map(|t| t as f64).collect();
    slope(&xs, &ys)
}

pub fn state_error(a: &SensorState, b: &SensorState) -> [f64; 6] {
    let (x, y) = (a.to_array(), b.to_array());
    std::array::from_fn(|i| x[i] - y[i])
}

// ------------------------------------------------------------------- misc

/// A scenario without objects for clutter-only checks.
pub fn clutter_only(mut cfg: ScenarioConfig, runs: usize) -> ScenarioConfig {
    cfg.objects = Vec::<ObjectConfig>::new();
    cfg.runs = runs;
    cfg
}

/// Fraction of steps with zero extracted targets.
pub fn clutter_only_empty_fraction(cfg: &ScenarioConfig) -> f64 {
    let runs: Vec<PhdRun> = par_runs(cfg.runs, cfg.seed, |_, s| phd_run(cfg, s))
        .into_iter()
        .map(|r| r.unwrap())
        .collect();
    let steps: Vec<usize> = runs
        .iter()
        .flat_map(|r| r.steps.iter().map(|s| s.cardinality))
        .collect();
    steps.iter().filter(|&&c| c == 0).count() as f64 / steps.len() as f64
}

/// Runs the GM-PHD filter directly over simulated scans of `cfg`.
pub fn filter_over(
    cfg: &ScenarioConfig,
    params: &PhdParams,
    seed: u64,
) -> (GmPhdFilter, Vec<Scan>) {
    let rig = cfg.rig.build().unwrap();
    let truth = generate_truth(cfg, &rig, seed);
    let scans = generate_observations(&truth, cfg, &rig, seed + 1);
    let mut f = GmPhdFilter::new();
    for s in &scans {
        f.process(&rig, s, params, seed).unwrap();
    }
    (f, scans)
}

/// Runs the CLI in-process and returns its exit code.
pub fn dfusion(args: &[&str]) -> i32 {
    let mut v = vec!["dfusion"];
    v.extend_from_slice(args);
    disparity_fusion::cli::run(v)
}

pub const CSV_FILES: [&str; 4] = [
    "truth.csv",
    "observations.csv",
    "estimates.csv",
    "metrics.csv",
];

/// True when every CSV of two output directories is byte-identical.
pub fn same_csvs(a: &std::path::Path, b: &std::path::Path) -> bool {
    CSV_FILES.iter().all(|f| {
        let x = std::fs::read(a.join(f));
        let y = std::fs::read(b.join(f));
        matches!((x, y), (Ok(x), Ok(y)) if x == y)
    })
}

//! Gaussian-mixture PHD filter over disparity space.
//!
//! The mixture lives in the disparity frame of the camera that produced the
//! latest scan. Each scan runs: move/predict every component into the
//! camera's frame, split it into missed and detected parts according to the
//! field of view, update the detected parts, prune and merge, extract, and
//! finally append observation-driven births.
//!
//! A component whose transport fails keeps its old state and frame tag; such
//! a component is treated as undetected until a later move succeeds.

use nalgebra::{DMatrix, DVector, Matrix2, Point3};
use serde::{Deserialize, Serialize};

use crate::geometry::{DisparityFrame, DisparityPoint, Side, StereoRig};
use crate::rng::{derive_seed, rng_from_seed};
use crate::single_object::{
    fit_gaussian, fit_weighted_gaussian, initialise_on_rig, transport_particles, GaussianPrior,
    GaussianSampler, GaussianState, MotionModel, Observation, TransportSpec, UpdateTerms, MAX_DIM,
};
use crate::{Error, Result};

/// Fraction of particles on one side of the image border above which the
/// split uses the weight-only fast path.
pub const FAST_PATH_FRACTION: f64 = 0.999;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGaussian {
    pub weight: f64,
    pub state: GaussianState,
}

impl WeightedGaussian {
    pub fn new(weight: f64, state: GaussianState) -> Self {
        Self { weight, state }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    pub components: Vec<WeightedGaussian>,
    pub frame: Side,
}

impl GaussianMixture {
    pub fn empty(frame: Side) -> Self {
        Self {
            components: Vec::new(),
            frame,
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

/// Poisson clutter, uniform over the image rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClutterModel {
    pub lambda: f64,
    pub width: f64,
    pub height: f64,
}

impl ClutterModel {
    pub fn density(&self) -> f64 {
        1.0 / (self.width * self.height)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !(self.width > 0.0) || !(self.height > 0.0) {
            return Err(Error::InvalidParameter(
                "clutter needs λ ≥ 0 and a positive image area".into(),
            ));
        }
        Ok(())
    }
}

/// Constant detection probability inside `[0, W) × [0, H)` and in front of
/// the camera, zero elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionModel {
    pub p_d_inside: f64,
    pub width: f64,
    pub height: f64,
}

impl DetectionModel {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_d_inside) || !(self.width > 0.0) || !(self.height > 0.0) {
            return Err(Error::InvalidParameter(
                "p_D must lie in [0, 1] with a positive image area".into(),
            ));
        }
        Ok(())
    }

    #[inline]
    fn inside(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && u < self.width && v >= 0.0 && v < self.height
    }
}

/// Whether a disparity-space point is seen by the camera observing through
/// `h_side` in `frame`.
#[inline]
fn visible(frame: &DisparityFrame, h_side: Side, det: &DetectionModel, y: &[f64]) -> bool {
    let u = if h_side == Side::Right {
        y[0] + y[2]
    } else {
        y[0]
    };
    if !det.inside(u, y[1]) {
        return false;
    }
    matches!(frame.from_disparity_raw(&[y[0], y[1], y[2]]), Some((_, h)) if h > 0.0)
}

/// Splits particles of one component by detection probability. Returns the
/// missed and detected parts; a part whose weight or fit vanishes is folded
/// into the other so that `w∘ + w• = w` exactly.
fn split_particles(
    weight: f64,
    particles: &[[f64; MAX_DIM]],
    dim: usize,
    frame_id: Side,
    seen: &[bool],
    p_in: f64,
    fitted: Option<&GaussianState>,
) -> Result<(Option<WeightedGaussian>, Option<WeightedGaussian>)> {
    let n = particles.len();
    let n_in = seen.iter().filter(|&&s| s).count();
    let frac_in = n_in as f64 / n as f64;
    let whole = || -> Result<GaussianState> {
        match fitted {
            Some(s) => Ok(s.clone()),
            None => fit_gaussian(particles, dim, frame_id),
        }
    };
    let wrap = |w: f64, s: GaussianState| (w > 0.0).then(|| WeightedGaussian::new(w, s));
    if frac_in >= FAST_PATH_FRACTION {
        let s = whole()?;
        let det = p_in * weight;
        return Ok((wrap(weight - det, s.clone()), wrap(det, s)));
    }
    if 1.0 - frac_in >= FAST_PATH_FRACTION || p_in == 0.0 {
        return Ok((wrap(weight, whole()?), None));
    }
    let pd: Vec<f64> = seen.iter().map(|&s| if s { p_in } else { 0.0 }).collect();
    let det = weight * pd.iter().sum::<f64>() / n as f64;
    let missed = weight - det;
    let det_fit = fit_weighted_gaussian(particles, &pd, dim, frame_id).ok();
    let q: Vec<f64> = pd.iter().map(|p| 1.0 - p).collect();
    let miss_fit = fit_weighted_gaussian(particles, &q, dim, frame_id).ok();
    Ok(match (miss_fit, det_fit) {
        (Some(m), Some(d)) => (wrap(missed, m), wrap(det, d)),
        (Some(m), None) => (wrap(weight, m), None),
        (None, Some(d)) => (None, wrap(weight, d)),
        (None, None) => (wrap(weight, whole()?), None),
    })
}

fn survival(p_s: f64, elapsed: usize) -> f64 {
    if elapsed == 0 {
        1.0
    } else {
        p_s.powi(elapsed as i32)
    }
}

/// Moves every component into frame `target` (composing `elapsed` steps of
/// motion), scales weights by `p_S` per elapsed step and appends `birth`.
/// Components whose move fails keep their state and old frame tag.
#[allow(clippy::too_many_arguments)]
pub fn phd_predict(
    mix: &GaussianMixture,
    rig: &StereoRig,
    target: Side,
    p_s: f64,
    model: &MotionModel,
    elapsed: usize,
    birth: &GaussianMixture,
    n_particles: usize,
    seed: u64,
) -> Result<GaussianMixture> {
    if !(0.0..=1.0).contains(&p_s) {
        return Err(Error::InvalidParameter("p_S must lie in [0, 1]".into()));
    }
    let ps = survival(p_s, elapsed);
    let mut out = GaussianMixture::empty(target);
    for (k, c) in mix.components.iter().enumerate() {
        let moving = !model.is_static() && c.state.is_dynamic() && elapsed > 0;
        let state = if c.state.frame == target && !moving {
            c.state.clone()
        } else {
            let spec = TransportSpec {
                from: rig.frame(c.state.frame),
                to: rig.frame(target),
                motion: moving.then_some(*model),
                elapsed_steps: elapsed as f64,
                fov: None,
            };
            let mut rng = rng_from_seed(derive_seed(seed, &[k as u64]));
            match transport_particles(&c.state, &spec, n_particles, &mut rng)
                .and_then(|p| fit_gaussian(&p, c.state.dim(), target))
            {
                Ok(s) => s,
                Err(_) => c.state.clone(),
            }
        };
        out.components
            .push(WeightedGaussian::new(c.weight * ps, state));
    }
    out.components.extend(birth.components.iter().cloned());
    Ok(out)
}

/// Splits each component into its missed-detection and detection parts for
/// the camera observing `frame` through `h_side`.
pub fn split_detection(
    mix: &GaussianMixture,
    frame: &DisparityFrame,
    h_side: Side,
    det: &DetectionModel,
    n_particles: usize,
    seed: u64,
) -> Result<(GaussianMixture, GaussianMixture)> {
    det.validate()?;
    if n_particles < 2 {
        return Err(Error::InvalidParameter(
            "at least two particles are required".into(),
        ));
    }
    let mut missed = GaussianMixture::empty(mix.frame);
    let mut detected = GaussianMixture::empty(mix.frame);
    for (k, c) in mix.components.iter().enumerate() {
        if c.state.frame != mix.frame {
            missed.components.push(c.clone());
            continue;
        }
        let sampler = GaussianSampler::new(&c.state)?;
        let mut rng = rng_from_seed(derive_seed(seed, &[k as u64]));
        let particles: Vec<[f64; MAX_DIM]> =
            (0..n_particles).map(|_| sampler.sample(&mut rng)).collect();
        let seen: Vec<bool> = particles
            .iter()
            .map(|p| visible(frame, h_side, det, p))
            .collect();
        let (m, d) = split_particles(
            c.weight,
            &particles,
            c.state.dim(),
            mix.frame,
            &seen,
            det.p_d_inside,
            Some(&c.state),
        )?;
        missed.components.extend(m);
        detected.components.extend(d);
    }
    Ok((missed, detected))
}

/// Prediction and detection split from one particle cloud per component:
/// the transported particles are both refitted and weighted by `p_D`.
/// Components that need no transport are sampled in place.
#[allow(clippy::too_many_arguments)]
pub fn predict_and_split(
    mix: &GaussianMixture,
    rig: &StereoRig,
    target: Side,
    h_side: Side,
    p_s: f64,
    model: &MotionModel,
    elapsed: usize,
    det: &DetectionModel,
    n_particles: usize,
    seed: u64,
) -> Result<(GaussianMixture, GaussianMixture)> {
    let ps = survival(p_s, elapsed);
    let frame = rig.frame(target);
    let mut missed = GaussianMixture::empty(target);
    let mut detected = GaussianMixture::empty(target);
    for (k, c) in mix.components.iter().enumerate() {
        let w = c.weight * ps;
        let moving = !model.is_static() && c.state.is_dynamic() && elapsed > 0;
        let mut rng = rng_from_seed(derive_seed(seed, &[k as u64]));
        let dim = c.state.dim();
        let (particles, fitted) = if c.state.frame == target && !moving {
            let sampler = GaussianSampler::new(&c.state)?;
            let p: Vec<[f64; MAX_DIM]> =
                (0..n_particles).map(|_| sampler.sample(&mut rng)).collect();
            (p, Some(c.state.clone()))
        } else {
            let spec = TransportSpec {
                from: rig.frame(c.state.frame),
                to: frame,
                motion: moving.then_some(*model),
                elapsed_steps: elapsed as f64,
                fov: None,
            };
            match transport_particles(&c.state, &spec, n_particles, &mut rng) {
                Ok(p) => (p, None),
                Err(_) => {
                    missed
                        .components
                        .push(WeightedGaussian::new(w, c.state.clone()));
                    continue;
                }
            }
        };
        let seen: Vec<bool> = particles
            .iter()
            .map(|p| visible(frame, h_side, det, p))
            .collect();
        match split_particles(
            w,
            &particles,
            dim,
            target,
            &seen,
            det.p_d_inside,
            fitted.as_ref(),
        ) {
            Ok((m, d)) => {
                missed.components.extend(m);
                detected.components.extend(d);
            }
            Err(_) => missed
                .components
                .push(WeightedGaussian::new(w, c.state.clone())),
        }
    }
    Ok((missed, detected))
}

/// Result of a PHD update against one scan.
#[derive(Debug, Clone)]
pub struct UpdateOutcome {
    pub posterior: GaussianMixture,
    /// `λc(z) / (λc(z) + Σ w q(z))` per observation.
    pub clutter_shares: Vec<f64>,
    /// Per observation, the association weight of each detected component.
    pub target_shares: Vec<Vec<f64>>,
    /// `ln(λc(z) + Σ w q(z))` per observation.
    pub log_terms: Vec<f64>,
    pub detected_weight: f64,
}

impl UpdateOutcome {
    /// `ln L = −λ − Σ w• + Σ_z ln(λc(z) + Σ w q(z))`.
    pub fn log_likelihood(&self, clutter: &ClutterModel) -> f64 {
        -clutter.lambda - self.detected_weight + self.log_terms.iter().sum::<f64>()
    }
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// GM-PHD update: missed components pass through; each detected component
/// is updated against every observation with weight
/// `w q(z) / (λc(z) + Σ_k w_k q_k(z))`.
pub fn phd_update(
    missed: &GaussianMixture,
    detected: &GaussianMixture,
    observations: &[Observation],
    clutter: &ClutterModel,
    h_side: Side,
) -> Result<UpdateOutcome> {
    clutter.validate()?;
    let mut posterior = missed.clone();
    let detected_weight = detected.total_weight();
    let log_lc = (clutter.lambda * clutter.density()).ln();
    let mut cache: Vec<(Matrix2<f64>, Vec<UpdateTerms>)> = Vec::new();
    let mut clutter_shares = Vec::with_capacity(observations.len());
    let mut target_shares = Vec::with_capacity(observations.len());
    let mut log_terms = Vec::with_capacity(observations.len());
    for obs in observations {
        let idx = match cache.iter().position(|(r, _)| *r == obs.cov) {
            Some(i) => i,
            None => {
                let terms = detected
                    .components
                    .iter()
                    .map(|c| UpdateTerms::new(&c.state, &obs.cov, h_side))
                    .collect::<Result<Vec<_>>>()?;
                cache.push((obs.cov, terms));
                cache.len() - 1
            }
        };
        let terms = &cache[idx].1;
        let log_wq: Vec<f64> = detected
            .components
            .iter()
            .zip(terms)
            .map(|(c, t)| c.weight.ln() + t.log_likelihood(&obs.z))
            .collect();
        let log_den = log_sum_exp(std::iter::once(log_lc).chain(log_wq.iter().copied()));
        log_terms.push(log_den);
        if log_den == f64::NEG_INFINITY {
            clutter_shares.push(f64::NAN);
            target_shares.push(vec![0.0; terms.len()]);
            continue;
        }
        clutter_shares.push((log_lc - log_den).exp());
        let shares: Vec<f64> = log_wq.iter().map(|l| (l - log_den).exp()).collect();
        for (t, &w) in terms.iter().zip(&shares) {
            if w > 0.0 {
                posterior
                    .components
                    .push(WeightedGaussian::new(w, t.posterior(&obs.z)));
            }
        }
        target_shares.push(shares);
    }
    Ok(UpdateOutcome {
        posterior,
        clutter_shares,
        target_shares,
        log_terms,
        detected_weight,
    })
}

/// One component per observation, initialised as a single-object belief
/// and given weight `birth_weight`.
pub fn birth_from_observations(
    rig: &StereoRig,
    observations: &[Observation],
    disparity_prior: GaussianPrior,
    velocity_prior: Option<GaussianPrior>,
    birth_weight: f64,
) -> Result<GaussianMixture> {
    let frame = observations
        .first()
        .map(|o| rig.frame_id(o.camera))
        .unwrap_or(Side::Left);
    let mut out = GaussianMixture::empty(frame);
    for obs in observations {
        let s = initialise_on_rig(rig, obs, disparity_prior, velocity_prior)?;
        out.components.push(WeightedGaussian::new(birth_weight, s));
    }
    Ok(out)
}

/// Drops components below `prune_threshold`, greedily merges (by moment
/// matching) every component within squared Mahalanobis distance
/// `merge_distance` of the heaviest remaining one, under that one's
/// covariance, and keeps the `max_components` heaviest results.
pub fn prune_merge(
    mix: &GaussianMixture,
    prune_threshold: f64,
    merge_distance: f64,
    max_components: usize,
) -> GaussianMixture {
    let mut pool: Vec<&WeightedGaussian> = mix
        .components
        .iter()
        .filter(|c| c.weight >= prune_threshold)
        .collect();
    pool.sort_by(|a, b| b.weight.total_cmp(&a.weight));
    let mut alive = vec![true; pool.len()];
    let mut out = GaussianMixture::empty(mix.frame);
    for j in 0..pool.len() {
        if !alive[j] {
            continue;
        }
        alive[j] = false;
        let lead = pool[j];
        let Some(p_inv) = lead.state.cov.clone().try_inverse() else {
            out.components.push(lead.clone());
            continue;
        };
        let mut group = vec![lead];
        for i in j + 1..pool.len() {
            if !alive[i] {
                continue;
            }
            let c = pool[i];
            if c.state.frame != lead.state.frame || c.state.dim() != lead.state.dim() {
                continue;
            }
            let e = &c.state.mean - &lead.state.mean;
            let d2 = (e.transpose() * &p_inv * &e)[0];
            if d2 < merge_distance {
                group.push(c);
                alive[i] = false;
            }
        }
        out.components.push(if group.len() == 1 {
            lead.clone()
        } else {
            moment_match(&group)
        });
    }
    out.components.truncate(max_components);
    out
}

fn moment_match(group: &[&WeightedGaussian]) -> WeightedGaussian {
    let w: f64 = group.iter().map(|c| c.weight).sum();
    let n = group[0].state.dim();
    let mut mean = DVector::zeros(n);
    for c in group {
        mean += &c.state.mean * c.weight;
    }
    mean /= w;
    let mut cov = DMatrix::zeros(n, n);
    for c in group {
        let e = &c.state.mean - &mean;
        cov += (&c.state.cov + &e * e.transpose()) * c.weight;
    }
    cov /= w;
    cov = (&cov + cov.transpose()) * 0.5;
    WeightedGaussian::new(
        w,
        GaussianState {
            mean,
            cov,
            frame: group[0].state.frame,
        },
    )
}

/// Components with weight above `weight_threshold`, and the cardinality
/// estimate `round(Σ w)`.
pub fn extract_targets(
    mix: &GaussianMixture,
    weight_threshold: f64,
) -> (Vec<(GaussianState, f64)>, usize) {
    let targets = mix
        .components
        .iter()
        .filter(|c| c.weight > weight_threshold)
        .map(|c| (c.state.clone(), c.weight))
        .collect();
    (targets, mix.total_weight().round().max(0.0) as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhdParams {
    pub p_survival: f64,
    pub p_detection: f64,
    pub clutter_lambda: f64,
    pub birth_weight: f64,
    pub disparity_prior: GaussianPrior,
    pub velocity_prior: Option<GaussianPrior>,
    pub motion: MotionModel,
    pub n_particles: usize,
    pub prune_threshold: f64,
    pub merge_distance: f64,
    pub max_components: usize,
    pub extract_threshold: f64,
    /// Remove components whose mean lies outside every camera's image.
    #[serde(default = "enabled")]
    pub drop_unobservable: bool,
}

fn enabled() -> bool {
    true
}

impl PhdParams {
    pub fn validate(&self) -> Result<()> {
        let unit = 0.0..=1.0;
        if !unit.contains(&self.p_survival) || !unit.contains(&self.p_detection) {
            return Err(Error::InvalidParameter(
                "p_S and p_D must lie in [0, 1]".into(),
            ));
        }
        if !(self.clutter_lambda >= 0.0) || !(self.birth_weight >= 0.0) {
            return Err(Error::InvalidParameter(
                "λ and birth weight must be non-negative".into(),
            ));
        }
        if self.n_particles < 2 || self.max_components == 0 {
            return Err(Error::InvalidParameter(
                "need ≥ 2 particles and ≥ 1 component".into(),
            ));
        }
        if !(self.prune_threshold > 0.0) || !(self.merge_distance > 0.0) {
            return Err(Error::InvalidParameter(
                "prune and merge thresholds must be positive".into(),
            ));
        }
        self.motion.validate()
    }

    fn clutter(&self, rig: &StereoRig, camera: Side) -> ClutterModel {
        let i = rig.camera(camera).intrinsics();
        ClutterModel {
            lambda: self.clutter_lambda,
            width: i.width,
            height: i.height,
        }
    }

    fn detection(&self, rig: &StereoRig, camera: Side) -> DetectionModel {
        let i = rig.camera(camera).intrinsics();
        DetectionModel {
            p_d_inside: self.p_detection,
            width: i.width,
            height: i.height,
        }
    }
}

/// Observations from one camera at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct Scan {
    pub time: usize,
    pub camera: Side,
    pub observations: Vec<Observation>,
}

/// What one [`GmPhdFilter::process`] call produced.
#[derive(Debug, Clone)]
pub struct ScanReport {
    pub log_likelihood: f64,
    pub targets: Vec<(GaussianState, f64)>,
    pub cardinality: usize,
    pub total_weight: f64,
}

/// Recursive GM-PHD filter processing one scan at a time.
#[derive(Debug, Clone)]
pub struct GmPhdFilter {
    mixture: GaussianMixture,
    last_time: Option<usize>,
    scans: u64,
}

impl Default for GmPhdFilter {
    fn default() -> Self {
        Self::new()
    }
}

impl GmPhdFilter {
    pub fn new() -> Self {
        Self {
            mixture: GaussianMixture::empty(Side::Left),
            last_time: None,
            scans: 0,
        }
    }

    pub fn mixture(&self) -> &GaussianMixture {
        &self.mixture
    }

    /// Predict, split, update, prune/merge and extract for one scan, then
    /// append births from its observations. The returned log-likelihood is
    /// the multi-object likelihood of the scan given the rig.
    pub fn process(
        &mut self,
        rig: &StereoRig,
        scan: &Scan,
        params: &PhdParams,
        seed: u64,
    ) -> Result<ScanReport> {
        let elapsed = match self.last_time {
            Some(t) if scan.time < t => {
                return Err(Error::InvalidInput("scans must be time-ordered".into()))
            }
            Some(t) => scan.time - t,
            None => 0,
        };
        let target = rig.frame_id(scan.camera);
        let h_side = rig.observation_side(scan.camera);
        let det = params.detection(rig, scan.camera);
        let clutter = params.clutter(rig, scan.camera);
        let step_seed = derive_seed(seed, &[self.scans]);
        let (missed, detected) = predict_and_split(
            &self.mixture,
            rig,
            target,
            h_side,
            params.p_survival,
            &params.motion,
            elapsed,
            &det,
            params.n_particles,
            step_seed,
        )?;
        let upd = phd_update(&missed, &detected, &scan.observations, &clutter, h_side)?;
        let log_likelihood = upd.log_likelihood(&clutter);
        let posterior = if params.drop_unobservable {
            drop_unobservable(rig, &upd.posterior)
        } else {
            upd.posterior
        };
        let mut mix = prune_merge(
            &posterior,
            params.prune_threshold,
            params.merge_distance,
            params.max_components,
        );
        let (targets, cardinality) = extract_targets(&mix, params.extract_threshold);
        let total_weight = mix.total_weight();
        let births = birth_from_observations(
            rig,
            &scan.observations,
            params.disparity_prior,
            params.velocity_prior,
            params.birth_weight,
        )?;
        mix.components.extend(births.components);
        self.mixture = mix;
        self.last_time = Some(scan.time);
        self.scans += 1;
        Ok(ScanReport {
            log_likelihood,
            targets,
            cardinality,
            total_weight,
        })
    }
}

/// Whether the component mean lies in front of some camera and inside its
/// image.
pub fn observable(rig: &StereoRig, state: &GaussianState) -> bool {
    let Ok(p) = component_position(rig, state) else {
        return false;
    };
    [Side::Left, Side::Right].iter().any(|&s| {
        let cam = rig.camera(s);
        matches!(cam.project_raw(&[p.x, p.y, p.z]), Some((u, v, w)) if w > 0.0 && cam.intrinsics().contains(u, v))
    })
}

/// Keeps the components that are [`observable`]; the others have left the
/// surveillance region.
pub fn drop_unobservable(rig: &StereoRig, mix: &GaussianMixture) -> GaussianMixture {
    GaussianMixture {
        components: mix
            .components
            .iter()
            .filter(|c| observable(rig, &c.state))
            .cloned()
            .collect(),
        frame: mix.frame,
    }
}

/// Maps an extracted component to world space through its own frame.
pub fn component_position(rig: &StereoRig, state: &GaussianState) -> Result<Point3<f64>> {
    let p = state.position();
    rig.frame(state.frame)
        .from_disparity(&DisparityPoint::new(p[0], p[1], p[2]))
}

#[derive(Debug, Clone)]
pub struct PhdStep {
    pub time: usize,
    pub estimates: Vec<Point3<f64>>,
    pub cardinality: usize,
}

/// Runs the filter over time-ordered scans and records, at the last scan of
/// each time step, the extracted targets in world space.
pub fn phd_track(
    rig: &StereoRig,
    scans: &[Scan],
    params: &PhdParams,
    seed: u64,
) -> Result<Vec<PhdStep>> {
    params.validate()?;
    let mut filter = GmPhdFilter::new();
    let mut out = Vec::new();
    for (i, scan) in scans.iter().enumerate() {
        let report = filter.process(rig, scan, params, seed)?;
        if scans.get(i + 1).is_none_or(|n| n.time != scan.time) {
            let estimates = report
                .targets
                .iter()
                .filter_map(|(s, _)| component_position(rig, s).ok())
                .collect();
            out.push(PhdStep {
                time: scan.time,
                estimates,
                cardinality: report.cardinality,
            });
        }
    }
    Ok(out)
}

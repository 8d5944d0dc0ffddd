//! Monte Carlo verification engine.
//!
//! Everything here exists to cross-examine closed forms by a second,
//! independent route: exact state draws where possible, discretized paths
//! with bias-removing devices (the Brownian-bridge crossing test) where not,
//! and a martingale drift statistic that flags tampered curves.  Every
//! sampler draws from [`RngStream`]s keyed by `(seed, path, purpose)`, so
//! estimates are bit-for-bit reproducible across runs and independent of
//! scheduling.

use serde::{Deserialize, Serialize};

use crate::affine::CirParams;
use crate::blackcox::BlackCoxParams;
use crate::curves::DefaultStatus;
use crate::error::{Error, Result};
use crate::measure::RiskyMeasure;
use crate::merton::{self, MertonParams};
use crate::numerics::grid::Grid;
use crate::numerics::rng::RngStream;

/// Purpose tags for the per-path random streams: state increments, bridge
/// crossing uniforms, and the default-threshold draw.
const PURPOSE_INCREMENTS: u64 = 0;
const PURPOSE_BRIDGE: u64 = 1;
const PURPOSE_THRESHOLD: u64 = 2;

/// Simulation configuration shared by the samplers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub horizon: f64,
    #[serde(default)]
    pub antithetic: bool,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 100 {
            return Err(Error::invalid(format!(
                "n_paths = {} is too small for stable error bars; need at least 100",
                self.n_paths
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::invalid(format!(
                "horizon = {} must be positive",
                self.horizon
            )));
        }
        if self.dt > self.horizon {
            return Err(Error::invalid(format!(
                "dt = {} exceeds the horizon {}",
                self.dt, self.horizon
            )));
        }
        Ok(())
    }

    /// Additionally checks that every atom of `measure` inside the horizon
    /// sits on the step lattice, so discrete mass lands on sample points.
    pub fn validate_for(&self, measure: &RiskyMeasure) -> Result<()> {
        self.validate()?;
        for a in measure.atoms() {
            if a.time > self.horizon + 1e-12 {
                continue;
            }
            let k = (a.time / self.dt).round();
            if (a.time - k * self.dt).abs() > 1e-9 * a.time.max(1.0) {
                return Err(Error::invalid(format!(
                    "dt = {} does not divide the atom time {}",
                    self.dt, a.time
                )));
            }
        }
        Ok(())
    }

    /// The sample grid on `[0, horizon]` with the atoms of `measure` as
    /// exact grid points.
    pub fn grid(&self, measure: &RiskyMeasure) -> Result<Grid> {
        let events: Vec<f64> = measure.atoms().iter().map(|a| a.time).collect();
        Grid::with_events(0.0, self.horizon, self.dt, &events)
    }
}

/// Sum by pairwise splitting: error grows like `log n` rather than `n`, and
/// the result is independent of chunking choices made elsewhere.
fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 32 {
        return x.iter().sum();
    }
    let mid = x.len() / 2;
    pairwise_sum(&x[..mid]) + pairwise_sum(&x[mid..])
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

impl Estimate {
    /// Sample mean and standard error of the mean.  Sums are pairwise, so
    /// the estimate is a deterministic function of the sample values.
    pub fn from_samples(samples: &[f64]) -> Estimate {
        assert!(!samples.is_empty(), "estimate needs at least one sample");
        let n = samples.len();
        let mean = pairwise_sum(samples) / n as f64;
        if n == 1 {
            return Estimate {
                mean,
                std_error: 0.0,
                n,
            };
        }
        let sq: Vec<f64> = samples.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = pairwise_sum(&sq) / (n as f64 - 1.0);
        Estimate {
            mean,
            std_error: (var / n as f64).sqrt(),
            n,
        }
    }

    /// True when `target` lies within `k` standard errors of the mean.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error
    }
}

/// A batch of paths sampled on a common time grid, stored flat.
pub struct PathBundle {
    times: Vec<f64>,
    values: Vec<f64>,
    n_paths: usize,
}

impl PathBundle {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    /// The samples of path `i`, aligned with `times()`.
    pub fn path(&self, i: usize) -> &[f64] {
        let m = self.times.len();
        &self.values[i * m..(i + 1) * m]
    }
}

/// Stream index and increment sign for path `p`: antithetic sampling pairs
/// path `2k+1` with the mirrored increments of path `2k`'s stream.
fn path_stream(p: usize, antithetic: bool) -> (u64, f64) {
    if antithetic {
        ((p / 2) as u64, if p % 2 == 1 { -1.0 } else { 1.0 })
    } else {
        (p as u64, 1.0)
    }
}

/// Fills `buf` with one Brownian path on `times`, starting at `w0`.
fn brownian_path_into(buf: &mut [f64], times: &[f64], w0: f64, rng: &mut RngStream, sign: f64) {
    buf[0] = w0;
    for k in 1..times.len() {
        let dt = times[k] - times[k - 1];
        buf[k] = buf[k - 1] + dt.sqrt() * sign * rng.standard_normal();
    }
}

/// Samples Brownian paths from `w0` on `times`.
pub fn simulate_brownian(
    times: &[f64],
    w0: f64,
    n_paths: usize,
    seed: u64,
    antithetic: bool,
) -> PathBundle {
    let m = times.len();
    let mut values = vec![0.0; n_paths * m];
    for p in 0..n_paths {
        let (stream, sign) = path_stream(p, antithetic);
        let mut rng = RngStream::with_purpose(seed, stream, PURPOSE_INCREMENTS);
        brownian_path_into(&mut values[p * m..(p + 1) * m], times, w0, &mut rng, sign);
    }
    PathBundle {
        times: times.to_vec(),
        values,
        n_paths,
    }
}

/// Fills `buf` with one square-root-diffusion path by the full-truncation
/// Euler scheme: coefficients read the positive part of the state, and the
/// emitted samples are truncated at zero so downstream intensities stay
/// nonnegative.
fn cir_path_into(
    buf: &mut [f64],
    times: &[f64],
    p: &CirParams,
    x0: f64,
    rng: &mut RngStream,
    sign: f64,
) {
    let mut x = x0;
    buf[0] = x.max(0.0);
    for k in 1..times.len() {
        let dt = times[k] - times[k - 1];
        let xp = x.max(0.0);
        x += (p.mu0 + p.mu1 * xp) * dt
            + p.sigma * xp.sqrt() * dt.sqrt() * sign * rng.standard_normal();
        buf[k] = x.max(0.0);
    }
}

/// Samples square-root-diffusion paths from `x0` on `times`.
pub fn simulate_cir(
    times: &[f64],
    p: &CirParams,
    x0: f64,
    n_paths: usize,
    seed: u64,
    antithetic: bool,
) -> Result<PathBundle> {
    p.validate()?;
    if x0 < 0.0 {
        return Err(Error::invalid(format!("x0 = {x0} must be nonnegative")));
    }
    let m = times.len();
    let mut values = vec![0.0; n_paths * m];
    for path in 0..n_paths {
        let (stream, sign) = path_stream(path, antithetic);
        let mut rng = RngStream::with_purpose(seed, stream, PURPOSE_INCREMENTS);
        cir_path_into(
            &mut values[path * m..(path + 1) * m],
            times,
            p,
            x0,
            &mut rng,
            sign,
        );
    }
    Ok(PathBundle {
        times: times.to_vec(),
        values,
        n_paths,
    })
}

/// Draws a default time for one accumulated-hazard path: the first sample
/// time at which the accumulated hazard reaches an independent unit
/// exponential.  Returns `None` if the path survives its horizon.
///
/// Because the threshold is compared against the *accumulated* hazard,
/// crossings at an atom receive exactly the discrete mass `1 - e^{-kappa}`.
pub fn sample_default_doubly_stochastic(
    hazard: &crate::affine::HazardPath,
    rng: &mut RngStream,
) -> Result<Option<f64>> {
    let values = hazard.times();
    let k = hazard;
    let mut prev = 0.0;
    for i in 0..values.len() {
        let v = k.value(i);
        if v < prev - 1e-12 {
            return Err(Error::domain(format!(
                "accumulated hazard decreases at t = {}",
                values[i]
            )));
        }
        prev = v;
    }
    let zeta = rng.exponential();
    for i in 0..values.len() {
        if k.value(i) >= zeta {
            return Ok(Some(values[i]));
        }
    }
    Ok(None)
}

/// First-passage default check for one Brownian path against a barrier that
/// steps from `d0` to `du` at the announcement date.
///
/// Endpoint breaches default immediately.  With `use_bridge` set, interior
/// crossings between samples are resolved by the exact Brownian-bridge
/// crossing probability `exp(-2 (w_k - D)(w_{k+1} - D) / dt)`, which makes
/// the survival indicator exact in distribution for the piecewise-constant
/// barrier even on a coarse grid; without it the estimator carries the
/// classic discretization bias (kept available as a negative control).
/// At the announcement date itself the path must clear the post-announcement
/// level `du`.
pub fn first_passage_default(
    p: &BlackCoxParams,
    times: &[f64],
    path: &[f64],
    use_bridge: bool,
    bridge_rng: &mut RngStream,
) -> Result<Option<f64>> {
    p.validate()?;
    if times.len() != path.len() || times.len() < 2 {
        return Err(Error::invalid(
            "times and path must match and hold at least two samples",
        ));
    }
    crate::blackcox::check_alive(p, path[0], times[0])?;
    for k in 1..times.len() {
        let (t, w) = (times[k - 1], path[k - 1]);
        let (t_next, w_next) = (times[k], path[k]);
        let dt = t_next - t;
        // Barrier on the open interval (t, t_next): the pre-announcement
        // level until the announcement, the post level after it.
        let seg_barrier = if t_next <= p.u + 1e-12 { p.d0 } else { p.du };
        if w_next <= seg_barrier {
            return Ok(Some(t_next));
        }
        if use_bridge {
            let a = w - seg_barrier;
            let b = w_next - seg_barrier;
            let p_cross = (-2.0 * a * b / dt).exp();
            if bridge_rng.uniform() < p_cross {
                return Ok(Some(t_next));
            }
        }
        if (t_next - p.u).abs() <= 1e-12 * p.u.max(1.0) && w_next <= p.du {
            // Announcement check: the barrier is right-continuous, so the
            // level at the announcement date itself is already `du`.
            return Ok(Some(t_next));
        }
    }
    Ok(None)
}

/// Monte Carlo survival probability for the stepped-barrier first-passage
/// model, conditional on being alive at `t` with state `w`.
pub fn black_cox_survival_mc(
    p: &BlackCoxParams,
    w: f64,
    t: f64,
    tt: f64,
    cfg: &SimConfig,
    use_bridge: bool,
) -> Result<Estimate> {
    p.validate()?;
    cfg.validate()?;
    if !(t >= 0.0 && tt > t) {
        return Err(Error::invalid(format!(
            "need 0 <= t < T, got t = {t}, T = {tt}"
        )));
    }
    crate::blackcox::check_alive(p, w, t)?;
    let grid = Grid::with_events(t, tt, cfg.dt, &[p.u])?;
    let times = grid.points();
    let mut buf = vec![0.0; times.len()];
    let mut samples = vec![0.0; cfg.n_paths];
    for (path, sample) in samples.iter_mut().enumerate() {
        let (stream, sign) = path_stream(path, cfg.antithetic);
        let mut rng_inc = RngStream::with_purpose(cfg.seed, stream, PURPOSE_INCREMENTS);
        let mut rng_bridge = RngStream::with_purpose(cfg.seed, path as u64, PURPOSE_BRIDGE);
        brownian_path_into(&mut buf, times, w, &mut rng_inc, sign);
        let hit = first_passage_default(p, times, &buf, use_bridge, &mut rng_bridge)?;
        *sample = if hit.is_none() { 1.0 } else { 0.0 };
    }
    Ok(Estimate::from_samples(&samples))
}

/// Doubly stochastic Monte Carlo price at `t = 0` of the survival claim
/// under a square-root intensity with one hazard atom: simulate the
/// intensity path, accumulate its hazard (trapezoid plus the atom exponent),
/// and compare with an independent exponential threshold.
pub fn cir_price_mc(p: &CirParams, x0: f64, r: f64, tt: f64, cfg: &SimConfig) -> Result<Estimate> {
    p.validate()?;
    cfg.validate()?;
    if !(tt > 0.0) {
        return Err(Error::invalid(format!("maturity {tt} must be positive")));
    }
    if x0 < 0.0 {
        return Err(Error::invalid(format!("x0 = {x0} must be nonnegative")));
    }
    let grid = Grid::with_events(0.0, tt, cfg.dt, &[p.u1])?;
    let times = grid.points();
    let atom_index = if p.u1 <= tt + 1e-12 {
        grid.index_of(p.u1)
    } else {
        None
    };
    let disc = (-r * tt).exp();
    let mut samples = vec![0.0; cfg.n_paths];
    for (path, sample) in samples.iter_mut().enumerate() {
        let (stream, sign) = path_stream(path, cfg.antithetic);
        let mut rng_inc = RngStream::with_purpose(cfg.seed, stream, PURPOSE_INCREMENTS);
        let mut rng_thresh = RngStream::with_purpose(cfg.seed, path as u64, PURPOSE_THRESHOLD);
        let mut x = x0;
        let mut xp_prev = x0.max(0.0);
        let mut hazard = 0.0;
        if atom_index == Some(0) {
            hazard += p.psi1 * xp_prev;
        }
        for k in 1..times.len() {
            let dt = times[k] - times[k - 1];
            x += (p.mu0 + p.mu1 * xp_prev) * dt
                + p.sigma * xp_prev.sqrt() * dt.sqrt() * sign * rng_inc.standard_normal();
            let xp = x.max(0.0);
            hazard += 0.5 * (xp_prev + xp) * dt;
            if atom_index == Some(k) {
                hazard += p.psi1 * xp;
            }
            xp_prev = xp;
        }
        let zeta = rng_thresh.exponential();
        *sample = if zeta > hazard { disc } else { 0.0 };
    }
    Ok(Estimate::from_samples(&samples))
}

/// One checkpoint pair of the martingale drift test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftPair {
    pub t1: f64,
    pub t2: f64,
    pub estimate: Estimate,
}

/// Result of the martingale drift test: per-pair erosion estimates and the
/// overall verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftTestReport {
    pub pairs: Vec<DriftPair>,
    pub passed: bool,
}

/// Tests whether discounted prices sampled at consecutive checkpoints are
/// driftless: for each adjacent pair the per-path erosion
/// `Y(t_1) - Y(t_2)` must have mean within three standard errors of zero.
/// A curve that drops scheduled discrete mass erodes *positively* — the
/// early quote is too rich relative to what the later one realizes.
pub fn martingale_drift_test(
    checkpoint_times: &[f64],
    discounted: &[Vec<f64>],
) -> Result<DriftTestReport> {
    if checkpoint_times.len() != discounted.len() || checkpoint_times.len() < 2 {
        return Err(Error::invalid(
            "need at least two checkpoints with matching sample columns",
        ));
    }
    let n = discounted[0].len();
    if discounted.iter().any(|col| col.len() != n) || n == 0 {
        return Err(Error::invalid(
            "checkpoint sample columns must be non-empty and of equal length",
        ));
    }
    let mut pairs = Vec::new();
    let mut passed = true;
    for j in 0..checkpoint_times.len() - 1 {
        let erosion: Vec<f64> = (0..n)
            .map(|p| discounted[j][p] - discounted[j + 1][p])
            .collect();
        let estimate = Estimate::from_samples(&erosion);
        if (estimate.mean).abs() > 3.0 * estimate.std_error {
            passed = false;
        }
        pairs.push(DriftPair {
            t1: checkpoint_times[j],
            t2: checkpoint_times[j + 1],
            estimate,
        });
    }
    Ok(DriftTestReport { pairs, passed })
}

/// Runs the drift test on simulated announcement-model paths: per path,
/// discounted bond prices are recorded at each checkpoint and adjacent
/// erosions are tested for zero mean.  With `tampered` set, the quoted
/// curve drops the announcement-date forward rate, which any checkpoint
/// pair straddling the announcement flags as positive drift.
pub fn merton_drift_experiment(
    p: &MertonParams,
    w0: f64,
    tt: f64,
    checkpoints: &[f64],
    cfg: &SimConfig,
    tampered: bool,
) -> Result<DriftTestReport> {
    p.validate()?;
    cfg.validate()?;
    if checkpoints.len() < 2 {
        return Err(Error::invalid("need at least two checkpoints"));
    }
    for w in checkpoints.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::invalid("checkpoints must be strictly increasing"));
        }
    }
    let last = *checkpoints.last().unwrap();
    if !(checkpoints[0] >= 0.0 && last <= tt && tt <= p.t_star) {
        return Err(Error::invalid(
            "checkpoints must lie in [0, maturity] within the horizon",
        ));
    }
    let mut events = vec![p.u];
    events.extend_from_slice(checkpoints);
    let grid = Grid::with_events(0.0, last.max(p.u), cfg.dt, &events)?;
    let times = grid.points();
    let u_index = grid
        .index_of(p.u)
        .ok_or_else(|| Error::invalid("announcement date missing from grid"))?;
    let checkpoint_indices: Vec<usize> = checkpoints
        .iter()
        .map(|&c| {
            grid.index_of(c)
                .ok_or_else(|| Error::invalid(format!("checkpoint {c} missing from grid")))
        })
        .collect::<Result<_>>()?;

    let mut buf = vec![0.0; times.len()];
    let mut columns = vec![vec![0.0; cfg.n_paths]; checkpoints.len()];
    for path in 0..cfg.n_paths {
        let (stream, sign) = path_stream(path, cfg.antithetic);
        let mut rng = RngStream::with_purpose(cfg.seed, stream, PURPOSE_INCREMENTS);
        brownian_path_into(&mut buf, times, w0, &mut rng, sign);
        let status = if buf[u_index] > p.k {
            DefaultStatus::no_default()
        } else {
            DefaultStatus::defaulted_at(p.u)?
        };
        for (j, &ci) in checkpoint_indices.iter().enumerate() {
            let t = times[ci];
            let quoted = if tampered && t < p.u {
                // A curve that drops the announcement forward rate quotes
                // the bond as riskless before the announcement.
                (-p.r * (tt - t)).exp()
            } else {
                merton::price(p, buf[ci], t, tt, &status)?
            };
            columns[j][path] = quoted * (-p.r * t).exp();
        }
    }
    martingale_drift_test(checkpoints, &columns)
}

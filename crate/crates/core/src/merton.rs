//! Structural model defaulting only at a single announcement date.
//!
//! A Brownian state `W` drives the firm; default happens at the announced
//! date `u` exactly when `W_u <= k`, and never at any other time.  The
//! pricing measure therefore carries a single unit-weight atom at `u`, and
//! the whole credit content of the curve is the forward rate on that atom:
//! `f(t, u) = -log Phi(z)` with `z = (W_t - k) / sqrt(u - t)`.  Everything
//! else — drift, volatility, compensator — follows in closed form, which
//! makes the model the canonical end-to-end check for the drift-condition
//! audit.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::curves::{FnCurve, ForwardCurveModel, ShortRateModel};
use crate::error::{Error, Result};
use crate::mc::Estimate;
use crate::measure::{Atom, BaseJump, CompensatorSpec, RiskyMeasure};
use crate::noarb::HjmCoefficients;
use crate::numerics::dist::{log_norm_cdf, norm_cdf};
use crate::numerics::rng::RngStream;

/// Parameters: default threshold `k` for the state at the announcement date
/// `u`, constant short rate `r`, trading horizon `t_star >= u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MertonParams {
    pub k: f64,
    pub u: f64,
    pub r: f64,
    pub t_star: f64,
}

impl MertonParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.u > 0.0 && self.u.is_finite()) {
            return Err(Error::invalid(format!(
                "announcement date {} must be positive",
                self.u
            )));
        }
        if !(self.t_star >= self.u) {
            return Err(Error::invalid(format!(
                "horizon {} must not precede the announcement date {}",
                self.t_star, self.u
            )));
        }
        if !(self.k.is_finite() && self.r.is_finite()) {
            return Err(Error::invalid("k and r must be finite"));
        }
        Ok(())
    }

    /// The pricing measure: one unit-weight atom at the announcement date.
    pub fn measure(&self) -> RiskyMeasure {
        RiskyMeasure::new(vec![Atom {
            time: self.u,
            weight: 1.0,
        }])
        .expect("validated announcement date")
    }

    fn z(&self, w: f64, t: f64) -> Result<f64> {
        if !(0.0 <= t && t < self.u) {
            return Err(Error::domain(format!(
                "state-dependent quantities exist only before the announcement \
                 date {}, requested t = {t}",
                self.u
            )));
        }
        Ok((w - self.k) / (self.u - t).sqrt())
    }
}

/// Conditional survival probability of the announcement, `Phi(z)`.
pub fn survival_prob(p: &MertonParams, w: f64, t: f64) -> Result<f64> {
    Ok(norm_cdf(p.z(w, t)?))
}

/// Forward rate on the announcement atom, `-log Phi(z)`.  Finite for every
/// state thanks to the asymptotic tail of the log-CDF.
pub fn forward_atom(p: &MertonParams, w: f64, t: f64) -> Result<f64> {
    Ok(-log_norm_cdf(p.z(w, t)?))
}

/// Volatility loading of the atom forward rate:
/// `b = -(phi(z)/Phi(z)) / sqrt(u - t)`.  Strictly negative: good news
/// (higher `w`) always lowers the credit-spread content of the curve.
pub fn vol_b(p: &MertonParams, w: f64, t: f64) -> Result<f64> {
    let z = p.z(w, t)?;
    // phi(z)/Phi(z) through logs: stable even where Phi underflows.
    let ratio = (-0.5 * z * z - 0.918_938_533_204_672_7 - log_norm_cdf(z)).exp();
    Ok(-ratio / (p.u - t).sqrt())
}

/// Drift coefficient of the atom forward rate.  Equals half the squared
/// volatility loading — the curve satisfies the quadratic drift restriction
/// identically, which is exactly what the audit verifies numerically.
pub fn drift_a(p: &MertonParams, w: f64, t: f64) -> Result<f64> {
    let b = vol_b(p, w, t)?;
    Ok(0.5 * b * b)
}

/// Bond price at `(t, w)` for maturity `tt`, given the default status.
///
/// Before the announcement with `tt` at or past it, the survival discount
/// `Phi(z)` applies on top of riskless discounting; if `tt` falls before the
/// announcement, or once the announcement has passed without default, the
/// bond is riskless.
pub fn price(
    p: &MertonParams,
    w: f64,
    t: f64,
    tt: f64,
    status: &crate::curves::DefaultStatus,
) -> Result<f64> {
    p.validate()?;
    if t > tt {
        return Err(Error::invalid(format!(
            "maturity interval is reversed: t = {t} > T = {tt}"
        )));
    }
    if tt > p.t_star {
        return Err(Error::invalid(format!(
            "maturity {tt} lies beyond the horizon {}",
            p.t_star
        )));
    }
    if status.is_defaulted_by(t) {
        return Ok(0.0);
    }
    let riskless = (-p.r * (tt - t)).exp();
    if t < p.u && p.u <= tt {
        Ok((-p.r * (tt - t) + log_norm_cdf(p.z(w, t)?)).exp())
    } else {
        // Either the bond matures before the announcement or the holder has
        // already survived it.
        Ok(riskless)
    }
}

/// Monte Carlo price at `t = 0` by sampling the state at the announcement
/// date directly: `E[e^{-r tt} 1{W_u > k}]`.  One exact normal draw per
/// path, so the estimate carries no discretization bias at all.
pub fn price_mc(p: &MertonParams, w0: f64, tt: f64, n_paths: usize, seed: u64) -> Result<Estimate> {
    p.validate()?;
    if !(p.u <= tt && tt <= p.t_star) {
        return Err(Error::invalid(format!(
            "maturity {tt} must lie in [{}, {}]",
            p.u, p.t_star
        )));
    }
    let disc = (-p.r * tt).exp();
    let sqrt_u = p.u.sqrt();
    let payoffs: Vec<f64> = (0..n_paths)
        .map(|i| {
            let mut s = RngStream::new(seed, i as u64);
            let w_u = w0 + sqrt_u * s.standard_normal();
            if w_u > p.k {
                disc
            } else {
                0.0
            }
        })
        .collect();
    Ok(Estimate::from_samples(&payoffs))
}

/// A Merton model bound to one simulated state path, exposing the curve,
/// coefficient functions and compensator that the drift-condition audit
/// consumes.
///
/// The path is sampled at `times` (which must bracket the announcement
/// date); quantities quoted at or after the announcement use the last
/// sample strictly before it — the discrete-time stand-in for the
/// predictable left limit.
pub struct MertonOnPath {
    params: MertonParams,
    measure: RiskyMeasure,
    times: Arc<Vec<f64>>,
    levels: Arc<Vec<f64>>,
    tampered_atom: bool,
}

impl MertonOnPath {
    pub fn new(params: MertonParams, times: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        params.validate()?;
        if times.len() != levels.len() || times.len() < 2 {
            return Err(Error::invalid(
                "path needs matching times/levels with at least two samples",
            ));
        }
        if times[0] != 0.0 {
            return Err(Error::invalid("path must start at t = 0"));
        }
        if !times.iter().any(|&t| t < params.u) {
            return Err(Error::invalid(
                "path must contain a sample before the announcement date",
            ));
        }
        let measure = params.measure();
        Ok(MertonOnPath {
            params,
            measure,
            times: Arc::new(times),
            levels: Arc::new(levels),
            tampered_atom: false,
        })
    }

    /// Returns a copy whose curve carries *no* forward rate on the
    /// announcement atom while the compensator still places default mass
    /// there — a deliberately arbitrageable input for negative tests.
    pub fn with_tampered_atom(mut self) -> Self {
        self.tampered_atom = true;
        self
    }

    pub fn params(&self) -> &MertonParams {
        &self.params
    }

    pub fn measure(&self) -> &RiskyMeasure {
        &self.measure
    }

    /// Path value at the effective quote time: `t` itself before the
    /// announcement, else the last sample strictly before it.
    fn state(times: &[f64], levels: &[f64], u: f64, t: f64) -> (f64, f64) {
        let t_eff = if t < u {
            t
        } else {
            let mut last = times[0];
            for &s in times.iter() {
                if s < u {
                    last = s;
                } else {
                    break;
                }
            }
            last
        };
        (t_eff, interp(times, levels, t_eff))
    }

    fn state_at(&self, t: f64) -> (f64, f64) {
        Self::state(&self.times, &self.levels, self.params.u, t)
    }

    /// The state-bound forward curve.
    pub fn curve(&self) -> impl ForwardCurveModel + '_ {
        let p = self.params;
        let times = Arc::clone(&self.times);
        let levels = Arc::clone(&self.levels);
        let tampered = self.tampered_atom;
        FnCurve::new(
            self.measure.clone(),
            move |_t, _m| p.r,
            move |t, _atom| {
                if tampered {
                    return 0.0;
                }
                let (t_eff, w) = Self::state(&times, &levels, p.u, t);
                forward_atom(&p, w, t_eff).expect("t_eff < u by construction")
            },
        )
    }

    /// The state-bound coefficient functions of the curve dynamics.
    pub fn coefficients(&self) -> impl HjmCoefficients + '_ {
        MertonCoeffs { model: self }
    }

    /// The state-bound compensator: zero running intensity, and at the
    /// announcement the conditional default probability of the state.
    pub fn compensator(&self) -> CompensatorSpec {
        let p = self.params;
        let times = Arc::clone(&self.times);
        let levels = Arc::clone(&self.levels);
        CompensatorSpec::new(
            move |s: f64| {
                if (s - p.u).abs() <= 1e-12 * p.u.max(1.0) {
                    let (t_eff, w) = Self::state(&times, &levels, p.u, p.u);
                    // P(default at u | state) = 1 - Phi(z) = Phi(-z).
                    norm_cdf(-(w - p.k) / (p.u - t_eff).sqrt())
                } else {
                    0.0
                }
            },
            vec![BaseJump {
                time: p.u,
                size: 1.0,
            }],
        )
        .expect("single base jump")
    }

    pub fn short_rate(&self) -> ShortRateModel {
        ShortRateModel::constant(self.params.r)
    }
}

struct MertonCoeffs<'a> {
    model: &'a MertonOnPath,
}

impl HjmCoefficients for MertonCoeffs<'_> {
    fn dim(&self) -> usize {
        1
    }

    fn drift(&self, t: f64, m: f64) -> f64 {
        let p = self.model.params();
        if (m - p.u).abs() > 1e-12 * p.u.max(1.0) || t >= p.u {
            return 0.0;
        }
        let (t_eff, w) = self.model.state_at(t);
        drift_a(p, w, t_eff).expect("t_eff < u")
    }

    fn vol(&self, t: f64, m: f64) -> Vec<f64> {
        let p = self.model.params();
        if (m - p.u).abs() > 1e-12 * p.u.max(1.0) || t >= p.u {
            return vec![0.0];
        }
        let (t_eff, w) = self.model.state_at(t);
        vec![vol_b(p, w, t_eff).expect("t_eff < u")]
    }
}

fn interp(times: &[f64], values: &[f64], t: f64) -> f64 {
    match times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
        Ok(i) => values[i],
        Err(0) => values[0],
        Err(i) if i >= times.len() => values[times.len() - 1],
        Err(i) => {
            let (t0, t1) = (times[i - 1], times[i]);
            let a = (t - t0) / (t1 - t0);
            values[i - 1] * (1.0 - a) + values[i] * a
        }
    }
}

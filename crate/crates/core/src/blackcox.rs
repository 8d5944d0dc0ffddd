//! First-passage model with a barrier that jumps at an announced date.
//!
//! The firm state is a Brownian motion `W`; default is the first time `W`
//! touches a barrier that equals `d0` before the announcement date `u` and
//! `du >= d0` from `u` on.  Because the barrier is right-continuous, the
//! date `u` itself can carry positive default probability: the event
//! `W_u <= du` with the path still above `d0` beforehand.  The pricing
//! measure thus has an atom at `u` even though default can also arrive
//! continuously on either side.
//!
//! Survival probabilities are closed-form.  Before the jump they follow
//! from the reflection principle; across the jump, conditioning on the
//! surviving density at `u` leaves one Gaussian band integral per
//! reflection term, evaluated by [`halfplane_band_prob`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::dist::{halfplane_band_prob, norm_cdf, norm_pdf};
use crate::numerics::quad::integrate_adaptive;

/// Barrier levels and the announcement date: `d0 < 0` before `u`, `du >= d0`
/// from `u` on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlackCoxParams {
    pub d0: f64,
    pub du: f64,
    pub u: f64,
}

impl BlackCoxParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.d0 < 0.0 && self.d0.is_finite()) {
            return Err(Error::invalid(format!(
                "pre-announcement barrier {} must be negative",
                self.d0
            )));
        }
        if !(self.du >= self.d0 && self.du.is_finite()) {
            return Err(Error::invalid(format!(
                "post-announcement barrier {} must not lie below {}",
                self.du, self.d0
            )));
        }
        if !(self.u > 0.0 && self.u.is_finite()) {
            return Err(Error::invalid(format!(
                "announcement date {} must be positive",
                self.u
            )));
        }
        Ok(())
    }
}

/// Barrier level at time `t` (right-continuous: the jump applies at `u`).
pub fn barrier(p: &BlackCoxParams, t: f64) -> f64 {
    if t < p.u {
        p.d0
    } else {
        p.du
    }
}

/// Errors unless the state sits strictly above the barrier at `t`.
pub fn check_alive(p: &BlackCoxParams, w: f64, t: f64) -> Result<()> {
    let b = barrier(p, t);
    if w <= b {
        return Err(Error::domain(format!(
            "state {w} at t = {t} is not above the barrier {b}"
        )));
    }
    Ok(())
}

/// Survival probability of the barrier on `(t, tt]` from state `w` at `t`.
///
/// Three regimes: both times before the announcement (single reflection),
/// both at or after it (single reflection at the new level), and straddling
/// it, where the pre-announcement surviving density is pushed through the
/// reflection bound after the jump.  The raw value is clamped to `[0, 1]`;
/// excursions beyond roundoff are reported on stderr because they indicate
/// a quadrature problem, not a modeling one.
pub fn survival_prob(p: &BlackCoxParams, w: f64, t: f64, tt: f64) -> Result<f64> {
    p.validate()?;
    if !(tt > t) {
        return Err(Error::invalid(format!(
            "need a nondegenerate interval, got t = {t}, T = {tt}"
        )));
    }
    if t < 0.0 {
        return Err(Error::invalid(format!(
            "quote time {t} must be nonnegative"
        )));
    }
    check_alive(p, w, t)?;

    let raw = if tt < p.u {
        // Entirely before the announcement: constant barrier d0.
        1.0 - 2.0 * norm_cdf((p.d0 - w) / (tt - t).sqrt())
    } else if t >= p.u {
        // Entirely after: constant barrier du.
        1.0 - 2.0 * norm_cdf((p.du - w) / (tt - t).sqrt())
    } else if tt == p.u {
        // Up to the announcement inclusive: no touch of d0 before u and
        // W_u above the new barrier.
        let b = (p.u - t).sqrt();
        norm_cdf((w - p.du) / b) - norm_cdf((2.0 * p.d0 - w - p.du) / b)
    } else {
        // Straddling the announcement.  Start from the t = u edge and
        // subtract, for each reflection term of the surviving density, the
        // mass killed by the post-announcement barrier:
        //   2 * int_{du}^inf Phi((du - x)/a) f_t(x) dx,
        // which is a Gaussian band probability per term.
        let a = (tt - p.u).sqrt();
        let b = (p.u - t).sqrt();
        let direct = norm_cdf((w - p.du) / b) - norm_cdf((2.0 * p.d0 - w - p.du) / b);
        let c1 = p.du - w;
        let c2 = p.du - 2.0 * p.d0 + w;
        let killed =
            halfplane_band_prob(a, b, c1, c1 / b)? - halfplane_band_prob(a, b, c2, c2 / b)?;
        direct - 2.0 * killed
    };

    if !(-1e-9..=1.0 + 1e-9).contains(&raw) {
        eprintln!(
            "survival_prob: raw value {raw} outside [0, 1] at \
             (w = {w}, t = {t}, T = {tt}); check quadrature accuracy"
        );
    }
    Ok(raw.clamp(0.0, 1.0))
}

/// Density at `x` of the state at the announcement date, restricted to
/// paths that have not touched `d0` on `[t, u)`; zero at or below `d0`.
pub fn surviving_density(p: &BlackCoxParams, w: f64, t: f64, x: f64) -> Result<f64> {
    p.validate()?;
    if !(t < p.u) {
        return Err(Error::domain(format!(
            "surviving density exists only before the announcement date {}",
            p.u
        )));
    }
    check_alive(p, w, t)?;
    if x <= p.d0 {
        return Ok(0.0);
    }
    let b = (p.u - t).sqrt();
    Ok((norm_pdf((x - w) / b) - norm_pdf((x - (2.0 * p.d0 - w)) / b)) / b)
}

/// Probability, from state `w` at `t < u`, that default happens exactly at
/// the announcement date: the path survives `d0` and lands in `(d0, du]`.
///
/// Evaluated by quadrature of the surviving density, which is also how the
/// pricing atom's mass is defined; the closed Gaussian difference is used
/// as a cross-check in the tests.
pub fn default_prob_at_announcement(p: &BlackCoxParams, w: f64, t: f64) -> Result<f64> {
    p.validate()?;
    if !(t < p.u) {
        return Err(Error::domain(format!(
            "the announcement atom is in the past at t = {t}"
        )));
    }
    check_alive(p, w, t)?;
    if p.du <= p.d0 {
        return Ok(0.0);
    }
    let f = |x: f64| {
        let b = (p.u - t).sqrt();
        (norm_pdf((x - w) / b) - norm_pdf((x - (2.0 * p.d0 - w)) / b)) / b
    };
    Ok(integrate_adaptive(&f, p.d0, p.du, 1e-12).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(actual: f64, expected: f64, tol: f64, what: &str) {
        assert!(
            (actual - expected).abs() <= tol,
            "{what}: got {actual}, want {expected} (|diff| = {:.3e})",
            (actual - expected).abs()
        );
    }

    fn p(d0: f64, du: f64) -> BlackCoxParams {
        BlackCoxParams { d0, du, u: 1.0 }
    }

    #[test]
    fn survival_reference_grid() {
        // Independently computed reference values (exact-in-distribution
        // simulation plus high-precision quadrature), w = 0, u = 1.
        #[rustfmt::skip]
        let cases: [(f64, f64, f64, f64, f64); 24] = [
            (-1.0, -1.0, 0.0, 1.5, 0.585_783_821_8),
            (-1.0, -1.0, 0.0, 2.0, 0.520_499_877_8),
            (-1.0, -1.0, 0.5, 1.5, 0.682_689_492_1),
            (-1.0, -1.0, 0.5, 2.0, 0.585_783_821_8),
            (-1.0, -0.7, 0.0, 1.5, 0.512_392_934_4),
            (-1.0, -0.7, 0.0, 2.0, 0.443_637_961_8),
            (-1.0, -0.7, 0.5, 1.5, 0.565_248_770_7),
            (-1.0, -0.7, 0.5, 2.0, 0.469_629_921_3),
            (-1.0, -0.3, 0.0, 1.5, 0.390_281_567_7),
            (-1.0, -0.3, 0.0, 2.0, 0.327_905_362_4),
            (-1.0, -0.3, 0.5, 1.5, 0.379_828_445_2),
            (-1.0, -0.3, 0.5, 2.0, 0.304_383_446_6),
            (-0.5, -0.5, 0.0, 1.5, 0.316_908_601_7),
            (-0.5, -0.5, 0.0, 2.0, 0.276_326_390_2),
            (-0.5, -0.5, 0.5, 1.5, 0.382_924_922_5),
            (-0.5, -0.5, 0.5, 2.0, 0.316_908_601_7),
            (-0.5, -0.2, 0.0, 1.5, 0.268_507_397_1),
            (-0.5, -0.2, 0.0, 2.0, 0.227_709_609_9),
            (-0.5, -0.2, 0.5, 1.5, 0.290_659_101_1),
            (-0.5, -0.2, 0.5, 2.0, 0.232_968_104_6),
            (-0.5, 0.2, 0.0, 1.5, 0.191_741_025_1),
            (-0.5, 0.2, 0.0, 2.0, 0.157_698_019_7),
            (-0.5, 0.2, 0.5, 1.5, 0.163_781_363_1),
            (-0.5, 0.2, 0.5, 2.0, 0.127_170_125_1),
        ];
        for &(d0, du, t, tt, want) in cases.iter() {
            let got = survival_prob(&p(d0, du), 0.0, t, tt).unwrap();
            assert_close(got, want, 5e-10, &format!("survival({d0},{du},{t},{tt})"));
        }
    }

    #[test]
    fn constant_barrier_reduces_to_single_reflection() {
        // du = d0: the jump is vacuous and the straddling formula must
        // collapse to the plain reflection answer on the whole interval.
        for &(d0, t, tt) in &[(-1.0, 0.0, 2.0), (-0.5, 0.25, 1.75), (-2.0, 0.0, 1.2)] {
            let got = survival_prob(&p(d0, d0), 0.0, t, tt).unwrap();
            let reflection = 1.0 - 2.0 * norm_cdf(d0 / (tt - t).sqrt());
            assert_close(got, reflection, 1e-8, "reduction at du = d0");
        }
    }

    #[test]
    fn survival_is_nonincreasing_in_maturity() {
        let params = p(-0.8, -0.4);
        let mut prev = 1.0;
        for k in 1..=40 {
            let tt = 2.0 * k as f64 / 40.0;
            let s = survival_prob(&params, 0.0, 0.0, tt).unwrap();
            assert!(
                s <= prev + 1e-9,
                "survival increased at T = {tt}: {s} > {prev}"
            );
            prev = s;
        }
    }

    #[test]
    fn regimes_join_up() {
        let params = p(-1.0, -0.3);
        // Before the announcement only d0 matters, after it only du.
        let pre = survival_prob(&params, 0.0, 0.0, 0.9).unwrap();
        assert_close(
            pre,
            1.0 - 2.0 * norm_cdf(-1.0 / 0.9_f64.sqrt()),
            1e-12,
            "pre-announcement regime",
        );
        let post = survival_prob(&params, 0.0, 1.2, 2.0).unwrap();
        assert_close(
            post,
            1.0 - 2.0 * norm_cdf(-0.3 / 0.8_f64.sqrt()),
            1e-12,
            "post-announcement regime",
        );
        // The straddling formula at T just past u approaches the T = u edge.
        let edge = survival_prob(&params, 0.0, 0.0, 1.0).unwrap();
        let just_past = survival_prob(&params, 0.0, 0.0, 1.0 + 1e-6).unwrap();
        assert!(
            (edge - just_past).abs() < 2e-3,
            "edge {edge}, past {just_past}"
        );
        assert!(just_past < edge);
    }

    #[test]
    fn surviving_density_integrates_to_barrier_survival() {
        for &(d0, w, t) in &[(-1.0, 0.0, 0.0), (-0.5, 0.3, 0.25), (-1.5, -0.2, 0.5)] {
            let params = p(d0, d0 + 0.4);
            let mass = integrate_adaptive(
                &|x| surviving_density(&params, w, t, x).unwrap(),
                d0,
                w + 10.0,
                1e-12,
            );
            let survival = 1.0 - 2.0 * norm_cdf((d0 - w) / (1.0 - t).sqrt());
            assert_close(mass, survival, 1e-8, "density mass");
        }
    }

    #[test]
    fn announcement_default_mass_matches_gaussian_difference() {
        let params = p(-1.0, -0.3);
        let got = default_prob_at_announcement(&params, 0.0, 0.0).unwrap();
        // Independently computed reference value.
        assert_close(got, 0.109_343_532_707, 1e-9, "atom mass");
        // Closed Gaussian difference for the same integral.
        let b = 1.0_f64;
        let closed = (norm_cdf((params.du - 0.0) / b) - norm_cdf((params.du + 2.0 - 0.0) / b))
            - (norm_cdf((params.d0 - 0.0) / b) - norm_cdf((params.d0 + 2.0) / b));
        assert_close(got, closed, 1e-10, "quadrature vs closed form");
        // Degenerate barrier jump carries no atom.
        let flat = p(-1.0, -1.0);
        assert_eq!(default_prob_at_announcement(&flat, 0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn domain_errors() {
        let params = p(-0.5, -0.2);
        assert!(
            survival_prob(&params, -0.6, 0.0, 1.5).is_err(),
            "below barrier"
        );
        assert!(
            survival_prob(&params, -0.3, 1.5, 2.0).is_err(),
            "below post barrier"
        );
        assert!(
            survival_prob(&params, 0.0, 1.5, 1.5).is_err(),
            "empty interval"
        );
        assert!(
            survival_prob(&params, 0.0, 1.5, 1.0).is_err(),
            "reversed interval"
        );
        assert!(BlackCoxParams {
            d0: 0.5,
            du: 0.6,
            u: 1.0
        }
        .validate()
        .is_err());
        assert!(BlackCoxParams {
            d0: -0.5,
            du: -0.6,
            u: 1.0
        }
        .validate()
        .is_err());
        assert!(BlackCoxParams {
            d0: -0.5,
            du: 0.0,
            u: -1.0
        }
        .validate()
        .is_err());
    }

    #[test]
    fn barrier_is_right_continuous() {
        let params = p(-1.0, -0.3);
        assert_eq!(barrier(&params, 0.999), -1.0);
        assert_eq!(barrier(&params, 1.0), -0.3);
        assert_eq!(barrier(&params, 1.5), -0.3);
    }
}

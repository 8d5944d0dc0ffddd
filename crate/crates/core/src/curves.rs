//! Forward curves against the risky measure, bond prices and the numeraire.
//!
//! A risky forward curve has an absolutely continuous part `f(t, u)` for the
//! Lebesgue direction of the measure and a separate value on each atom; the
//! zero-recovery bond price is the survival indicator times the exponential
//! of minus the curve's measure integral over the remaining life `(t, T]`.

use crate::error::{Error, Result};
use crate::measure::{integrate_ac, RiskyMeasure};
use crate::numerics::quad::composite_simpson;

/// A forward-curve model at a fixed observation state.
///
/// `ac_part(t, u)` is the instantaneous forward rate quoted at `t` for
/// maturity `u` in the Lebesgue direction; `atom_value(t, i)` is the forward
/// rate the curve assigns to atom `i` of its measure.  Atom values enter
/// prices only through the atom weights, never through the Lebesgue
/// integral.
pub trait ForwardCurveModel {
    fn measure(&self) -> &RiskyMeasure;
    fn ac_part(&self, t: f64, u: f64) -> f64;
    fn atom_value(&self, t: f64, atom: usize) -> f64;
}

/// Forward curve defined by closures; the common way for model families to
/// hand a state-bound curve to the pricing and audit routines.
pub struct FnCurve<F, G> {
    measure: RiskyMeasure,
    ac: F,
    atom: G,
}

impl<F, G> FnCurve<F, G>
where
    F: Fn(f64, f64) -> f64,
    G: Fn(f64, usize) -> f64,
{
    pub fn new(measure: RiskyMeasure, ac: F, atom: G) -> Self {
        FnCurve { measure, ac, atom }
    }
}

impl<F, G> ForwardCurveModel for FnCurve<F, G>
where
    F: Fn(f64, f64) -> f64,
    G: Fn(f64, usize) -> f64,
{
    fn measure(&self) -> &RiskyMeasure {
        &self.measure
    }

    fn ac_part(&self, t: f64, u: f64) -> f64 {
        (self.ac)(t, u)
    }

    fn atom_value(&self, t: f64, atom: usize) -> f64 {
        (self.atom)(t, atom)
    }
}

/// Deterministic short-rate model.
pub struct ShortRateModel {
    rate: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl ShortRateModel {
    pub fn new(rate: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ShortRateModel {
            rate: Box::new(rate),
        }
    }

    pub fn constant(r: f64) -> Self {
        ShortRateModel::new(move |_| r)
    }

    pub fn rate(&self, s: f64) -> f64 {
        (self.rate)(s)
    }
}

/// Whether and when default has occurred.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefaultStatus {
    tau: Option<f64>,
}

impl DefaultStatus {
    /// No default on the whole horizon.
    pub fn no_default() -> Self {
        DefaultStatus { tau: None }
    }

    /// Default at time `tau > 0`.
    pub fn defaulted_at(tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::invalid(format!(
                "default time {tau} must be positive"
            )));
        }
        Ok(DefaultStatus { tau: Some(tau) })
    }

    pub fn default_time(&self) -> Option<f64> {
        self.tau
    }

    /// True if default happened at or before `t`.
    pub fn is_defaulted_by(&self, t: f64) -> bool {
        matches!(self.tau, Some(tau) if tau <= t)
    }
}

/// Measure integral of the curve quoted at `t` over maturities in `(t, tt]`:
/// the Lebesgue integral of `ac_part(t, .)` plus the weighted atom values.
pub fn forward_integral<C: ForwardCurveModel + ?Sized>(curve: &C, t: f64, tt: f64) -> Result<f64> {
    if t > tt {
        return Err(Error::invalid(format!(
            "maturity interval is reversed: t = {t} > T = {tt}"
        )));
    }
    let atom_times: Vec<f64> = curve.measure().atoms().iter().map(|a| a.time).collect();
    let mut total = integrate_ac(&|u| curve.ac_part(t, u), t, tt, &atom_times);
    for (i, a) in curve.measure().atoms_in(t, tt) {
        total += a.weight * curve.atom_value(t, i);
    }
    Ok(total)
}

/// Zero-recovery bond price at `t` for maturity `tt`: zero after default,
/// otherwise `exp(-forward_integral)`.
pub fn bond_price<C: ForwardCurveModel + ?Sized>(
    curve: &C,
    status: &DefaultStatus,
    t: f64,
    tt: f64,
) -> Result<f64> {
    if t > tt {
        return Err(Error::invalid(format!(
            "maturity interval is reversed: t = {t} > T = {tt}"
        )));
    }
    if status.is_defaulted_by(t) {
        return Ok(0.0);
    }
    Ok((-forward_integral(curve, t, tt)?).exp())
}

/// Money-market numeraire `exp(integral of r over [0, t])`.
pub fn numeraire(short_rate: &ShortRateModel, t: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let n = (t.abs() * 1000.0).ceil().max(2.0) as usize;
    composite_simpson(&|s| short_rate.rate(s), 0.0, t, n).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Atom;

    fn flat_curve(measure: RiskyMeasure, rate: f64, atom_rate: f64) -> impl ForwardCurveModel {
        FnCurve::new(measure, move |_t, _u| rate, move |_t, _i| atom_rate)
    }

    #[test]
    fn flat_curve_prices_by_plain_discounting() {
        let c = flat_curve(RiskyMeasure::lebesgue(), 0.03, 0.0);
        let p = bond_price(&c, &DefaultStatus::no_default(), 0.0, 2.0).unwrap();
        assert!((p - (-0.06_f64).exp()).abs() < 1e-12, "got {p}");
    }

    #[test]
    fn maturity_now_is_par_and_default_kills_the_bond() {
        let c = flat_curve(RiskyMeasure::lebesgue(), 0.03, 0.0);
        let p = bond_price(&c, &DefaultStatus::no_default(), 1.0, 1.0).unwrap();
        assert_eq!(p, 1.0);
        let dead = DefaultStatus::defaulted_at(0.5).unwrap();
        let p = bond_price(&c, &dead, 1.0, 2.0).unwrap();
        assert_eq!(p, 0.0);
        // Defaulted exactly at t counts as gone.
        let p = bond_price(&c, &dead, 0.5, 2.0).unwrap();
        assert_eq!(p, 0.0);
        // But before tau the bond is alive.
        let p = bond_price(&c, &dead, 0.25, 2.0).unwrap();
        assert!(p > 0.0);
    }

    #[test]
    fn atom_only_curve_integrates_to_weighted_atom_value() {
        let m = RiskyMeasure::new(vec![Atom {
            time: 1.0,
            weight: 2.0,
        }])
        .unwrap();
        let c = flat_curve(m, 0.0, 0.5);
        let v = forward_integral(&c, 0.0, 1.5).unwrap();
        assert!((v - 1.0).abs() < 1e-12, "got {v}");
        // The atom sits at the boundary: included when maturity reaches it...
        let v = forward_integral(&c, 0.0, 1.0).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        // ...excluded when quoting starts on it.
        let v = forward_integral(&c, 1.0, 1.5).unwrap();
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn price_drops_by_atom_discount_across_the_atom() {
        let m = RiskyMeasure::new(vec![Atom {
            time: 1.0,
            weight: 2.0,
        }])
        .unwrap();
        let c = flat_curve(m, 0.03, 0.5);
        let s = DefaultStatus::no_default();
        let just_before = bond_price(&c, &s, 0.0, 1.0 - 1e-9).unwrap();
        let at_atom = bond_price(&c, &s, 0.0, 1.0).unwrap();
        let ratio = at_atom / just_before;
        assert!(
            (ratio - (-2.0 * 0.5_f64).exp()).abs() < 1e-8,
            "price must jump by exp(-w * f) across the atom, ratio {ratio}"
        );
    }

    #[test]
    fn reversed_interval_is_rejected() {
        let c = flat_curve(RiskyMeasure::lebesgue(), 0.03, 0.0);
        assert!(bond_price(&c, &DefaultStatus::no_default(), 2.0, 1.0).is_err());
    }

    #[test]
    fn numeraire_compounds_the_short_rate() {
        let linear = ShortRateModel::new(|s| s);
        let v = numeraire(&linear, 1.0);
        assert!((v - 0.5_f64.exp()).abs() < 1e-12, "got {v}");
        assert_eq!(numeraire(&linear, 0.0), 1.0);
        let flat = ShortRateModel::constant(0.04);
        assert!((numeraire(&flat, 2.5) - (0.1_f64).exp()).abs() < 1e-12);
    }
}

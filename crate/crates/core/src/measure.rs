//! The risky forward measure and default compensators.
//!
//! Prices and forward rates are integrated against a measure `nu` equal to
//! Lebesgue measure plus finitely many weighted atoms at candidate default
//! dates.  The default indicator's compensator has an absolutely continuous
//! intensity and may also charge those dates through jumps of the time
//! change; structural compatibility between the two is what
//! [`validate_structure`] checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::quad::composite_simpson;

/// Target number of Simpson subintervals per unit of time for the Lebesgue
/// parts of measure integrals.
const STEPS_PER_UNIT: f64 = 1000.0;

/// One atom of the pricing measure: a candidate default date `time` carrying
/// weight `weight > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub time: f64,
    pub weight: f64,
}

/// Lebesgue measure plus finitely many positive-weight atoms, strictly
/// ordered in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskyMeasure {
    atoms: Vec<Atom>,
}

impl RiskyMeasure {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        for a in &atoms {
            if !(a.time.is_finite() && a.time > 0.0) {
                return Err(Error::invalid(format!(
                    "atom time {} must be positive",
                    a.time
                )));
            }
            if !(a.weight.is_finite() && a.weight > 0.0) {
                return Err(Error::invalid(format!(
                    "atom weight {} at t = {} must be positive",
                    a.weight, a.time
                )));
            }
        }
        for w in atoms.windows(2) {
            if w[0].time >= w[1].time {
                return Err(Error::invalid(format!(
                    "atom times must be strictly increasing near t = {}",
                    w[0].time
                )));
            }
        }
        Ok(RiskyMeasure { atoms })
    }

    /// Pure Lebesgue measure: no candidate default dates.
    pub fn lebesgue() -> Self {
        RiskyMeasure { atoms: Vec::new() }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Atoms with time in the half-open interval `(t, tt]`, with their
    /// indices.
    pub fn atoms_in(&self, t: f64, tt: f64) -> impl Iterator<Item = (usize, &Atom)> {
        self.atoms
            .iter()
            .enumerate()
            .filter(move |(_, a)| a.time > t && a.time <= tt)
    }

    /// Index of the atom at `time`, if any (1e-12 tolerance).
    pub fn atom_index(&self, time: f64) -> Option<usize> {
        self.atoms
            .iter()
            .position(|a| (a.time - time).abs() <= 1e-12 * time.abs().max(1.0))
    }
}

/// The trading horizon.  All atoms and all cash flows live in `[0, t_star]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Horizon {
    pub t_star: f64,
}

impl Horizon {
    pub fn new(t_star: f64) -> Result<Self> {
        if !(t_star.is_finite() && t_star > 0.0) {
            return Err(Error::invalid(format!("horizon {t_star} must be positive")));
        }
        Ok(Horizon { t_star })
    }

    /// Checks that every atom of `measure` lies within the horizon.
    pub fn admits(&self, measure: &RiskyMeasure) -> Result<()> {
        if let Some(a) = measure.atoms().iter().find(|a| a.time > self.t_star) {
            return Err(Error::invalid(format!(
                "atom at t = {} lies beyond the horizon {}",
                a.time, self.t_star
            )));
        }
        Ok(())
    }
}

/// A jump of the compensator's base time change: at `time` the base clock
/// jumps by `size`, so the compensator itself jumps by `lambda(time) * size`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseJump {
    pub time: f64,
    pub size: f64,
}

/// Specification of the default compensator: an intensity `lambda` running
/// against `dt` plus jumps of the base clock at discrete times.
///
/// `lambda` is a point function of time; its value *at* a base-jump time is
/// the intensity charged to that jump, which may differ from the running
/// intensity on either side.  Integration routines therefore never let the
/// point value at a jump time leak into the Lebesgue part.
pub struct CompensatorSpec {
    lambda: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    base_jumps: Vec<BaseJump>,
}

impl CompensatorSpec {
    pub fn new(
        lambda: impl Fn(f64) -> f64 + Send + Sync + 'static,
        base_jumps: Vec<BaseJump>,
    ) -> Result<Self> {
        for w in base_jumps.windows(2) {
            if w[0].time >= w[1].time {
                return Err(Error::invalid(format!(
                    "base jump times must be strictly increasing near t = {}",
                    w[0].time
                )));
            }
        }
        Ok(CompensatorSpec {
            lambda: Box::new(lambda),
            base_jumps,
        })
    }

    /// Purely absolutely continuous compensator.
    pub fn absolutely_continuous(lambda: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        CompensatorSpec {
            lambda: Box::new(lambda),
            base_jumps: Vec::new(),
        }
    }

    /// Intensity at time `s`.
    pub fn lambda(&self, s: f64) -> f64 {
        (self.lambda)(s)
    }

    pub fn base_jumps(&self) -> &[BaseJump] {
        &self.base_jumps
    }

    /// The compensator's jump at base-jump index `i`: `lambda(u_i) * size_i`.
    pub fn jump_increment(&self, i: usize) -> f64 {
        let j = self.base_jumps[i];
        self.lambda(j.time) * j.size
    }
}

/// Integrates the absolutely continuous part of a measure integral over
/// `[lo, hi]` by composite Simpson on segments split at `breaks`.
///
/// Nodes that coincide with a break are evaluated just inside the open
/// segment: break times are exactly where integrands carry point values
/// (atom rates, jump intensities) that belong to the discrete part of the
/// measure, and a quadrature node must see the one-sided limit instead.
pub(crate) fn integrate_ac<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, breaks: &[f64]) -> f64 {
    if lo >= hi {
        return 0.0;
    }
    let mut cuts: Vec<f64> = vec![lo];
    cuts.extend(breaks.iter().copied().filter(|&u| u > lo && u < hi));
    cuts.push(hi);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let is_break = |x: f64| {
        breaks
            .iter()
            .any(|&u| (u - x).abs() <= 1e-12 * x.abs().max(1.0))
    };

    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        // The nudge must exceed the break-matching tolerance or point values
        // would still leak through on very short segments.
        let eps = ((b - a) * 1e-9).max(2.0e-12).min(0.25 * (b - a));
        let a_eval = if is_break(a) { a + eps } else { a };
        let b_eval = if is_break(b) { b - eps } else { b };
        let n = ((b - a) * STEPS_PER_UNIT).ceil().max(2.0) as usize;
        let g = |x: f64| f(x.clamp(a_eval, b_eval));
        total += composite_simpson(&g, a, b, n);
    }
    total
}

/// Integral of `g` against the risky measure over the half-open interval
/// `(t, tt]`: the Lebesgue integral of `g` plus `sum of w_i * g(u_i)` over
/// atoms with `u_i` in `(t, tt]`.  Errors if `t > tt`.
pub fn nu_integrate<F: Fn(f64) -> f64>(
    g: &F,
    t: f64,
    tt: f64,
    measure: &RiskyMeasure,
) -> Result<f64> {
    if t > tt {
        return Err(Error::invalid(format!(
            "integration interval is reversed: t = {t} > T = {tt}"
        )));
    }
    let atom_times: Vec<f64> = measure.atoms().iter().map(|a| a.time).collect();
    let mut total = integrate_ac(g, t, tt, &atom_times);
    for (_, a) in measure.atoms_in(t, tt) {
        total += a.weight * g(a.time);
    }
    Ok(total)
}

/// Accumulated compensator on `[0, t]`: the integral of `lambda` plus every
/// jump `lambda(u_i) * size_i` with `u_i <= t`.  Nondecreasing and
/// right-continuous in `t` for admissible specifications.
pub fn compensator_accumulate(spec: &CompensatorSpec, t: f64) -> f64 {
    let jump_times: Vec<f64> = spec.base_jumps().iter().map(|j| j.time).collect();
    let mut total = integrate_ac(&|s| spec.lambda(s), 0.0, t, &jump_times);
    for (i, j) in spec.base_jumps().iter().enumerate() {
        if j.time <= t {
            total += spec.jump_increment(i);
        }
    }
    total
}

/// Structural compatibility of a compensator with the pricing measure over
/// a horizon.  Returns human-readable violations; an empty list means the
/// pair is structurally admissible:
///
/// * every base-clock jump sits on an atom of the measure,
/// * each atom's hazard `lambda(u_i) * size_i` lies in `[0, w_i)`,
/// * the running intensity is nonnegative on the horizon,
/// * all atoms lie within the horizon.
pub fn validate_structure(
    measure: &RiskyMeasure,
    spec: &CompensatorSpec,
    horizon: &Horizon,
) -> Vec<String> {
    let mut violations = Vec::new();

    if let Err(e) = horizon.admits(measure) {
        violations.push(e.to_string());
    }

    for (i, j) in spec.base_jumps().iter().enumerate() {
        if j.size == 0.0 {
            continue;
        }
        match measure.atom_index(j.time) {
            None => violations.push(format!(
                "base jump of size {} at t = {} is not an atom of the pricing measure",
                j.size, j.time
            )),
            Some(k) => {
                let w = measure.atoms()[k].weight;
                let inc = spec.jump_increment(i);
                if inc < 0.0 {
                    violations.push(format!(
                        "compensator jump {inc} at t = {} is negative",
                        j.time
                    ));
                } else if inc >= w {
                    violations.push(format!(
                        "compensator jump {inc} at t = {} reaches the atom weight {w}; \
                         the forward rate there would be infinite or undefined",
                        j.time
                    ));
                }
            }
        }
    }

    // Sample the running intensity at segment midpoints, away from jump
    // times where the point value is the atom intensity instead.
    let n = 512;
    for k in 0..n {
        let s = horizon.t_star * (k as f64 + 0.5) / n as f64;
        if spec.base_jumps().iter().any(|j| (j.time - s).abs() <= 1e-9) {
            continue;
        }
        let l = spec.lambda(s);
        if l < 0.0 {
            violations.push(format!("intensity {l} at t = {s} is negative"));
            break;
        }
    }

    violations
}

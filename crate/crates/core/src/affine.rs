//! Affine intensity models with hazard atoms.
//!
//! The state follows an affine diffusion on the canonical domain
//! `R_+^m x R^n`; the default hazard loads the state affinely and may place
//! discrete mass at announced dates through hazard atoms.  Survival-contingent
//! prices are exponential-affine, `exp(-A(t,T) - B(t,T).X_t)`, where `(A, B)`
//! solve a backward Riccati system between atoms and jump by the weighted
//! atom loadings across them.  [`solve_riccati`] integrates that system
//! numerically; [`cir_closed_form`] provides the independent closed form for
//! the one-dimensional Cox–Ingersoll–Ross specification used throughout the
//! verification suites.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::curves::{FnCurve, ForwardCurveModel, ShortRateModel};
use crate::error::{Error, Result};
use crate::measure::{Atom, BaseJump, CompensatorSpec, RiskyMeasure};
use crate::noarb::BarSource;
use crate::numerics::diff::deriv4_on_grid;
use crate::numerics::grid::Grid;
use crate::numerics::ode::{rk4_backward_with_jumps, JumpedPath};

/// Coefficients of an affine diffusion `dX = mu(X) dt + sigma_sde(X) dW` on
/// `R_+^m x R^n`:
///
/// * drift `mu(x) = mu0 + sum_i x_i * mu[i]`;
/// * *half* the instantaneous covariance,
///   `(1/2) sigma_sde sigma_sde^T (x) = sigma0 + sum_i x_i * sigma[i]`.
///
/// Storing half-covariances makes the Riccati quadratic terms read exactly
/// as `B^T sigma B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineParams {
    pub m: usize,
    pub n: usize,
    pub mu0: Vec<f64>,
    pub mu: Vec<Vec<f64>>,
    pub sigma0: Vec<Vec<f64>>,
    pub sigma: Vec<Vec<Vec<f64>>>,
}

impl AffineParams {
    pub fn dim(&self) -> usize {
        self.m + self.n
    }

    /// Drift vector at state `x`.
    pub fn drift(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut v = self.mu0.clone();
        for i in 0..d {
            for (k, item) in v.iter_mut().enumerate() {
                *item += x[i] * self.mu[i][k];
            }
        }
        v
    }

    /// Half-covariance matrix at state `x`, flattened row-major.
    pub fn half_cov(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut v = vec![0.0; d * d];
        for k in 0..d {
            for l in 0..d {
                let mut s = self.sigma0[k][l];
                for i in 0..d {
                    s += x[i] * self.sigma[i][k][l];
                }
                v[k * d + l] = s;
            }
        }
        v
    }
}

/// Checks whether a symmetric matrix is positive semidefinite by attempting
/// a Cholesky factorization of `A + tol*I`.
fn is_psd(a: &[Vec<f64>], tol: f64) -> bool {
    let d = a.len();
    let mut l = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = a[i][j] + if i == j { tol } else { 0.0 };
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 0.0 {
                    return false;
                }
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    true
}

fn is_symmetric(a: &[Vec<f64>]) -> bool {
    let d = a.len();
    if a.iter().any(|row| row.len() != d) {
        return false;
    }
    for i in 0..d {
        for j in 0..i {
            if (a[i][j] - a[j][i]).abs() > 1e-12 {
                return false;
            }
        }
    }
    true
}

/// Admissibility of affine coefficients on the canonical domain, as
/// human-readable violations (empty means admissible):
///
/// * covariance blocks symmetric and positive semidefinite, with the
///   constant part vanishing on the positive coordinates and each positive
///   coordinate driving only its own row/column;
/// * free coordinates contributing no state-dependent covariance;
/// * drift pointing inward at the boundary of every positive coordinate.
pub fn validate_admissible(p: &AffineParams) -> Vec<String> {
    let d = p.dim();
    let mut v = Vec::new();

    if p.mu0.len() != d
        || p.mu.len() != d
        || p.mu.iter().any(|r| r.len() != d)
        || p.sigma0.len() != d
        || p.sigma.len() != d
    {
        v.push(format!(
            "coefficient dimensions are inconsistent with d = {d}"
        ));
        return v;
    }

    if !is_symmetric(&p.sigma0) {
        v.push("sigma0 not symmetric".into());
    } else if !is_psd(&p.sigma0, 1e-10) {
        v.push("sigma0 not PSD".into());
    }
    for i in 0..p.m {
        for l in 0..d {
            if p.sigma0[i][l].abs() > 1e-12 {
                v.push(format!(
                    "sigma0 must vanish on positive coordinate {i} (entry ({i}, {l}))"
                ));
                break;
            }
        }
    }

    for (i, s) in p.sigma.iter().enumerate() {
        if !is_symmetric(s) {
            v.push(format!("sigma[{i}] not symmetric"));
            continue;
        }
        if i >= p.m {
            // Free coordinate: no state-dependent covariance allowed.
            if s.iter().flatten().any(|e| e.abs() > 1e-12) {
                v.push(format!("sigma[{i}] must vanish for free coordinate {i}"));
            }
            continue;
        }
        if !is_psd(s, 1e-10) {
            v.push(format!("sigma[{i}] not PSD"));
        }
        for k in 0..d {
            for l in 0..d {
                let touches_foreign_positive = (k < p.m && k != i) || (l < p.m && l != i);
                if touches_foreign_positive && s[k][l].abs() > 1e-12 {
                    v.push(format!(
                        "sigma[{i}] couples foreign positive coordinates (entry ({k}, {l}))"
                    ));
                }
            }
        }
    }

    for i in 0..p.m {
        if p.mu0.len() == d && p.mu0[i] < 0.0 {
            v.push(format!(
                "drift points outward at boundary of coordinate {i}: mu0[{i}] = {}",
                p.mu0[i]
            ));
        }
        for j in 0..d {
            if j == i {
                continue;
            }
            let e = p.mu[j][i];
            if j < p.m && e < 0.0 {
                v.push(format!(
                    "drift points outward at boundary of coordinate {i}: mu[{j}][{i}] = {e}"
                ));
            }
            if j >= p.m && e.abs() > 1e-12 {
                v.push(format!(
                    "free coordinate {j} must not drive positive coordinate {i}"
                ));
            }
        }
    }

    v
}

/// Errors if the coefficients are not admissible.
pub fn ensure_admissible(p: &AffineParams) -> Result<()> {
    let v = validate_admissible(p);
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "affine coefficients inadmissible: {}",
            v.join("; ")
        )))
    }
}

/// One hazard atom: at `time`, against pricing-measure weight `weight`, the
/// accumulated hazard jumps by `phi + psi.X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardAtom {
    pub time: f64,
    pub weight: f64,
    pub phi: f64,
    pub psi: Vec<f64>,
}

/// Affine hazard specification: running intensity
/// `lambda_s = phi0(s) + psi0(s).X_s` plus hazard atoms.
pub struct HazardSpec {
    phi0: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    psi0: Box<dyn Fn(f64) -> Vec<f64> + Send + Sync>,
    atoms: Vec<HazardAtom>,
}

impl HazardSpec {
    pub fn new(
        phi0: impl Fn(f64) -> f64 + Send + Sync + 'static,
        psi0: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static,
        atoms: Vec<HazardAtom>,
    ) -> Result<Self> {
        for a in &atoms {
            if !(a.time > 0.0 && a.weight > 0.0) {
                return Err(Error::invalid(format!(
                    "hazard atom at t = {} needs positive time and weight",
                    a.time
                )));
            }
        }
        for w in atoms.windows(2) {
            if w[0].time >= w[1].time {
                return Err(Error::invalid(
                    "hazard atom times must be strictly increasing",
                ));
            }
        }
        Ok(HazardSpec {
            phi0: Box::new(phi0),
            psi0: Box::new(psi0),
            atoms,
        })
    }

    pub fn phi0(&self, s: f64) -> f64 {
        (self.phi0)(s)
    }

    pub fn psi0(&self, s: f64) -> Vec<f64> {
        (self.psi0)(s)
    }

    pub fn atoms(&self) -> &[HazardAtom] {
        &self.atoms
    }

    /// Running intensity at `(s, x)`.
    pub fn intensity(&self, s: f64, x: &[f64]) -> f64 {
        self.phi0(s) + dot(&self.psi0(s), x)
    }

    /// Hazard jump exponent of atom `i` at state `x`.
    pub fn atom_exponent(&self, i: usize, x: &[f64]) -> f64 {
        let a = &self.atoms[i];
        a.phi + dot(&a.psi, x)
    }

    /// The pricing measure induced by the hazard atoms.
    pub fn measure(&self) -> RiskyMeasure {
        RiskyMeasure::new(
            self.atoms
                .iter()
                .map(|a| Atom {
                    time: a.time,
                    weight: a.weight,
                })
                .collect(),
        )
        .expect("validated atoms")
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solution of the backward Riccati system for one maturity, stored
/// right-continuously on its grid with one-sided limits at the atoms.
pub struct PiecewiseRiccatiSolution {
    maturity: f64,
    dim: usize,
    path: JumpedPath,
}

impl PiecewiseRiccatiSolution {
    pub fn maturity(&self) -> f64 {
        self.maturity
    }

    /// State dimension (length of `B`).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn times(&self) -> &[f64] {
        self.path.times()
    }

    /// Right-continuous `A` at grid index `i`.
    pub fn a_at(&self, i: usize) -> f64 {
        self.path.value(i)[0]
    }

    /// Right-continuous `B` at grid index `i`.
    pub fn b_at(&self, i: usize) -> &[f64] {
        &self.path.value(i)[1..]
    }

    /// Left limit of `A` at grid index `i` (differs from `a_at` exactly at
    /// atoms, by the weighted atom loading).
    pub fn a_pre(&self, i: usize) -> f64 {
        self.path.left_limit(i)[0]
    }

    /// Left limit of `B` at grid index `i`.
    pub fn b_pre(&self, i: usize) -> &[f64] {
        &self.path.left_limit(i)[1..]
    }

    /// True if an atom jump is recorded at grid index `i`.
    pub fn has_event(&self, i: usize) -> bool {
        self.path.has_event(i)
    }

    /// `(A, B)` at quote time `t`, interpolating linearly inside grid cells
    /// of the smooth branch (branch ends use the one-sided limits, so
    /// interpolation never crosses an atom).
    pub fn eval(&self, t: f64) -> Result<(f64, Vec<f64>)> {
        let times = self.path.times();
        if t < times[0] - 1e-12 || t > self.maturity + 1e-12 {
            return Err(Error::invalid(format!(
                "quote time {t} outside the solved range [{}, {}]",
                times[0], self.maturity
            )));
        }
        let i = times.partition_point(|&s| s <= t);
        if i == 0 {
            let v = self.path.value(0);
            return Ok((v[0], v[1..].to_vec()));
        }
        let lo = i - 1;
        if (times[lo] - t).abs() <= 1e-12 * t.abs().max(1.0) || lo + 1 == times.len() {
            let v = self.path.value(lo);
            return Ok((v[0], v[1..].to_vec()));
        }
        let (t0, t1) = (times[lo], times[lo + 1]);
        let weight = (t - t0) / (t1 - t0);
        let v0 = self.path.value(lo);
        let v1 = self.path.left_limit(lo + 1);
        let mut out = vec![0.0; v0.len()];
        for k in 0..v0.len() {
            out[k] = v0[k] * (1.0 - weight) + v1[k] * weight;
        }
        Ok((out[0], out[1..].to_vec()))
    }
}

/// Integrates the backward Riccati system for maturity `grid.last()`.
///
/// Between atoms, with `d = dim` and `B` a `d`-vector,
///
/// ```text
///   -dA/dt  = phi0(t)  + mu0.B        - B^T sigma0  B,      A(T, T) = 0
///   -dB_k/dt = psi0_k(t) + mu[k].B    - B^T sigma[k] B,     B(T, T) = 0
/// ```
///
/// and across atom `i` (also when it sits exactly at the maturity) the left
/// limits pick up the weighted loadings: `A(u-) = A(u) + w_i phi_i`,
/// `B(u-) = B(u) + w_i psi_i`.  The hazard atoms must agree with the atoms
/// of `measure`, which supplies the weights the pricing side uses.
pub fn solve_riccati(
    params: &AffineParams,
    hazard: &HazardSpec,
    measure: &RiskyMeasure,
    grid: &Grid,
) -> Result<PiecewiseRiccatiSolution> {
    ensure_admissible(params)?;
    let d = params.dim();
    let maturity = grid.last();

    // The hazard atoms and the pricing measure must agree.
    let active: Vec<&HazardAtom> = hazard
        .atoms()
        .iter()
        .filter(|a| a.time <= maturity + 1e-12)
        .collect();
    for a in &active {
        if a.psi.len() != d {
            return Err(Error::invalid(format!(
                "hazard atom at t = {} has psi of length {}, state dimension is {d}",
                a.time,
                a.psi.len()
            )));
        }
        let k = measure.atom_index(a.time).ok_or_else(|| {
            Error::invalid(format!(
                "hazard atom at t = {} has no matching atom in the pricing measure",
                a.time
            ))
        })?;
        let w = measure.atoms()[k].weight;
        if (w - a.weight).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "atom weight mismatch at t = {}: hazard {}, measure {w}",
                a.time, a.weight
            )));
        }
    }

    let jumps: Vec<(f64, Vec<f64>)> = active
        .iter()
        .map(|a| {
            let mut inc = vec![a.weight * a.phi];
            inc.extend(a.psi.iter().map(|p| a.weight * p));
            (a.time, inc)
        })
        .collect();

    let terminal = vec![0.0; d + 1];
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let b = &y[1..];
        let psi0 = hazard.psi0(t);
        // dA/dt = -(phi0 + mu0.B - B sigma0 B)
        let mut quad0 = 0.0;
        for k in 0..d {
            for l in 0..d {
                quad0 += b[k] * params.sigma0[k][l] * b[l];
            }
        }
        dy[0] = -(hazard.phi0(t) + dot(&params.mu0, b) - quad0);
        for k in 0..d {
            let mut quad = 0.0;
            for p in 0..d {
                for q in 0..d {
                    quad += b[p] * params.sigma[k][p][q] * b[q];
                }
            }
            dy[1 + k] = -(psi0[k] + dot(&params.mu[k], b) - quad);
        }
    };

    let path = rk4_backward_with_jumps(rhs, &terminal, maturity, &jumps, grid)?;
    Ok(PiecewiseRiccatiSolution {
        maturity,
        dim: d,
        path,
    })
}

/// Survival-contingent price `exp(-A - B.x)` read off a Riccati solution;
/// zero once defaulted.
pub fn bond_price_affine(
    sol: &PiecewiseRiccatiSolution,
    x: &[f64],
    t: f64,
    status: &crate::curves::DefaultStatus,
) -> Result<f64> {
    if x.len() != sol.dim() {
        return Err(Error::invalid(format!(
            "state has dimension {}, solution expects {}",
            x.len(),
            sol.dim()
        )));
    }
    if status.is_defaulted_by(t) {
        return Ok(0.0);
    }
    let (a, b) = sol.eval(t)?;
    Ok((-a - dot(&b, x)).exp())
}

/// Accumulated hazard along a sampled state path: the time integral of the
/// running intensity (trapezoid on the path grid) plus the atom exponents
/// `phi_i + psi_i.X_{u_i}` at every atom time reached.
///
/// Errors if any atom exponent is negative on the realized path — such a
/// specification assigns the atom a negative default mass.
#[derive(Debug, Clone)]
pub struct HazardPath {
    times: Vec<f64>,
    values: Vec<f64>,
    atom_events: Vec<(usize, f64)>,
}

impl HazardPath {
    /// Right-continuous accumulated hazard at sample index `i`.
    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `(sample index, exponent)` of each atom on the path.
    pub fn atom_events(&self) -> &[(usize, f64)] {
        &self.atom_events
    }
}

/// Builds the accumulated-hazard path for a sampled state trajectory.
/// `states[j]` is the state at `times[j]`; atom times must be sample points.
pub fn accumulate_hazard(
    hazard: &HazardSpec,
    times: &[f64],
    states: &[Vec<f64>],
) -> Result<HazardPath> {
    if times.len() != states.len() || times.is_empty() {
        return Err(Error::invalid(
            "times and states must match and be non-empty",
        ));
    }
    let mut atom_at = vec![None; times.len()];
    for (i, a) in hazard.atoms().iter().enumerate() {
        if a.time > *times.last().unwrap() + 1e-12 {
            continue;
        }
        let j = times
            .iter()
            .position(|&t| (t - a.time).abs() <= 1e-9 * a.time.max(1.0))
            .ok_or_else(|| Error::invalid(format!("atom time {} is not a sample point", a.time)))?;
        atom_at[j] = Some(i);
    }

    let mut values = Vec::with_capacity(times.len());
    let mut atom_events = Vec::new();
    let mut acc = 0.0;
    let mut prev_intensity = hazard.intensity(times[0], &states[0]);
    for j in 0..times.len() {
        if j > 0 {
            let intensity = hazard.intensity(times[j], &states[j]);
            acc += 0.5 * (prev_intensity + intensity) * (times[j] - times[j - 1]);
            prev_intensity = intensity;
        }
        if let Some(i) = atom_at[j] {
            let kappa = hazard.atom_exponent(i, &states[j]);
            if kappa < 0.0 {
                return Err(Error::domain(format!(
                    "hazard atom at t = {} has negative exponent {kappa} on the realized state",
                    times[j]
                )));
            }
            acc += kappa;
            atom_events.push((j, kappa));
        }
        values.push(acc);
    }
    Ok(HazardPath {
        times: times.to_vec(),
        values,
        atom_events,
    })
}

/// Accumulated hazard at time `t` (a sample point) for a sampled path.
pub fn hazard_eval(hazard: &HazardSpec, times: &[f64], states: &[Vec<f64>], t: f64) -> Result<f64> {
    let path = accumulate_hazard(hazard, times, states)?;
    let j = times
        .iter()
        .position(|&s| (s - t).abs() <= 1e-9 * t.abs().max(1.0))
        .ok_or_else(|| Error::invalid(format!("t = {t} is not a sample point")))?;
    Ok(path.value(j))
}

// ---------------------------------------------------------------------------
// Cox–Ingersoll–Ross specification
// ---------------------------------------------------------------------------

/// One-dimensional square-root diffusion
/// `dX = (mu0 + mu1 X) dt + sigma sqrt(X) dW` with unit running hazard
/// loading (`lambda_s = X_s`) and one hazard atom of loading `psi1 >= 0` and
/// unit weight at `u1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CirParams {
    pub mu0: f64,
    pub mu1: f64,
    pub sigma: f64,
    pub psi1: f64,
    pub u1: f64,
}

impl CirParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) {
            return Err(Error::invalid(format!(
                "sigma {} must be positive",
                self.sigma
            )));
        }
        if self.psi1 < 0.0 {
            return Err(Error::invalid(format!(
                "psi1 {} must be nonnegative",
                self.psi1
            )));
        }
        if !(self.u1 > 0.0) {
            return Err(Error::invalid(format!("u1 {} must be positive", self.u1)));
        }
        if self.mu0 < 0.0 {
            return Err(Error::invalid(format!(
                "mu0 {} must be nonnegative for the state to stay positive",
                self.mu0
            )));
        }
        Ok(())
    }

    /// `sqrt(mu1^2 + 2 sigma^2)`: the discriminant rate of the linearized
    /// Riccati flow.
    pub fn theta(&self) -> f64 {
        (self.mu1 * self.mu1 + 2.0 * self.sigma * self.sigma).sqrt()
    }

    /// The general affine coefficients of this specification.
    pub fn affine_params(&self) -> AffineParams {
        AffineParams {
            m: 1,
            n: 0,
            mu0: vec![self.mu0],
            mu: vec![vec![self.mu1]],
            sigma0: vec![vec![0.0]],
            sigma: vec![vec![vec![0.5 * self.sigma * self.sigma]]],
        }
    }

    /// The hazard specification: unit state loading plus the atom.
    pub fn hazard(&self) -> HazardSpec {
        let atom = HazardAtom {
            time: self.u1,
            weight: 1.0,
            phi: 0.0,
            psi: vec![self.psi1],
        };
        HazardSpec::new(|_| 0.0, |_| vec![1.0], vec![atom]).expect("valid atom")
    }

    /// The pricing measure: one unit-weight atom at `u1`.
    pub fn measure(&self) -> RiskyMeasure {
        RiskyMeasure::new(vec![Atom {
            time: self.u1,
            weight: 1.0,
        }])
        .expect("valid atom")
    }
}

/// The four auxiliary functions of the CIR flow at elapsed time `s`.
fn cir_l(p: &CirParams, s: f64) -> (f64, f64, f64, f64) {
    let theta = p.theta();
    let e = (theta * s).exp();
    let l1 = 2.0 * (e - 1.0);
    let l2 = theta * (e + 1.0) + p.mu1 * (e - 1.0);
    let l3 = theta * (e + 1.0) - p.mu1 * (e - 1.0);
    let l4 = p.sigma * p.sigma * (e - 1.0);
    (l1, l2, l3, l4)
}

/// `(A0, B0)` over an atom-free stretch of length `s` with zero terminal
/// condition.
fn cir_base(p: &CirParams, s: f64) -> (f64, f64) {
    let theta = p.theta();
    let (l1, _, l3, _) = cir_l(p, s);
    let b = l1 / l3;
    let a = -(2.0 * p.mu0 / (p.sigma * p.sigma))
        * ((2.0 * theta * ((theta - p.mu1) * s / 2.0).exp()) / l3).ln();
    (a, b)
}

/// Flows `(A, B)` backward over an atom-free stretch of length `s` from the
/// initial value `B = b_init` (and `A = 0`); the Möbius action of the
/// linearized system.  Errors when the flow leaves its domain (finite-time
/// blow-up of the Riccati solution).
fn cir_flow(p: &CirParams, s: f64, b_init: f64) -> Result<(f64, f64)> {
    let theta = p.theta();
    let (l1, l2, l3, l4) = cir_l(p, s);
    let den = l3 + l4 * b_init;
    if den <= 0.0 {
        return Err(Error::domain(format!(
            "Riccati flow leaves its domain over a stretch of {s} from B = {b_init}"
        )));
    }
    let b = (l1 + l2 * b_init) / den;
    let a = -(2.0 * p.mu0 / (p.sigma * p.sigma))
        * ((2.0 * theta * ((theta - p.mu1) * s / 2.0).exp()) / den).ln();
    Ok((a, b))
}

/// Closed-form `(A(t, T), B(t, T))` for the CIR specification, piecewise
/// across the hazard atom: the atom-free solution from the maturity back to
/// `u1`, a jump of `psi1` in `B`, then the Möbius flow down to `t`.
pub fn cir_closed_form(p: &CirParams, t: f64, tt: f64) -> Result<(f64, f64)> {
    p.validate()?;
    if !(0.0 <= t && t <= tt) {
        return Err(Error::invalid(format!(
            "need 0 <= t <= T, got t = {t}, T = {tt}"
        )));
    }
    if t < p.u1 && p.u1 <= tt {
        let (a_tail, b_tail) = cir_base(p, tt - p.u1);
        let b_pre = b_tail + p.psi1;
        let (a_head, b) = cir_flow(p, p.u1 - t, b_pre)?;
        Ok((a_tail + a_head, b))
    } else {
        Ok(cir_base(p, tt - t))
    }
}

/// Stationary mean `-mu0 / mu1` of a mean-reverting specification
/// (`mu1 < 0`).
pub fn cir_stationary_mean(p: &CirParams) -> Option<f64> {
    if p.mu1 < 0.0 {
        Some(-p.mu0 / p.mu1)
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// State-bound audit inputs
// ---------------------------------------------------------------------------

/// A CIR model bound to one sampled state path, exposing the curve,
/// aggregated-coefficient source and compensator for the drift audit.
///
/// The quadratic-restriction side differentiates the *stored* Riccati
/// solution in quote time with high-order stencils and adds the generator
/// terms — an evaluation route independent of the closed form, so the audit
/// genuinely cross-examines the model rather than restating it.
pub struct CirOnPath {
    cir: CirParams,
    r: f64,
    measure: RiskyMeasure,
    times: Arc<Vec<f64>>,
    states: Arc<Vec<f64>>,
    tampered_atom: bool,
}

impl CirOnPath {
    pub fn new(cir: CirParams, r: f64, times: Vec<f64>, states: Vec<f64>) -> Result<Self> {
        cir.validate()?;
        if times.len() != states.len() || times.len() < 2 {
            return Err(Error::invalid(
                "path needs matching times/states with at least two samples",
            ));
        }
        if !times.iter().any(|&t| (t - cir.u1).abs() <= 1e-9) {
            return Err(Error::invalid(
                "path must sample the state at the atom time",
            ));
        }
        Ok(CirOnPath {
            cir,
            r,
            measure: cir.measure(),
            times: Arc::new(times),
            states: Arc::new(states),
            tampered_atom: false,
        })
    }

    /// Copy whose curve drops the atom forward rate (negative-test input).
    pub fn with_tampered_atom(mut self) -> Self {
        self.tampered_atom = true;
        self
    }

    pub fn measure(&self) -> &RiskyMeasure {
        &self.measure
    }

    pub fn short_rate(&self) -> ShortRateModel {
        ShortRateModel::constant(self.r)
    }

    fn state_at(times: &[f64], states: &[f64], t: f64) -> f64 {
        match times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => states[i],
            Err(0) => states[0],
            Err(i) if i >= times.len() => states[times.len() - 1],
            Err(i) => {
                let a = (t - times[i - 1]) / (times[i] - times[i - 1]);
                states[i - 1] * (1.0 - a) + states[i] * a
            }
        }
    }

    /// Forward rate on the atom quoted at `t`: the multiplicative price gap
    /// across the atom maturity, `[A(t, u1) - A0(u1 - t)] + [B(t, u1) -
    /// B0(u1 - t)] X_t`; from `u1` on it settles at the realized exponent
    /// `psi1 X_{u1}`.
    fn atom_rate(cir: &CirParams, times: &[f64], states: &[f64], t: f64) -> f64 {
        if t < cir.u1 {
            let x = Self::state_at(times, states, t);
            let (a_with, b_with) =
                cir_closed_form(cir, t, cir.u1).expect("flow valid before the atom");
            let (a_without, b_without) = cir_base(cir, cir.u1 - t);
            (a_with - a_without) + (b_with - b_without) * x
        } else {
            cir.psi1 * Self::state_at(times, states, cir.u1)
        }
    }

    /// The state-bound forward curve.  Off-diagonal rates differentiate the
    /// closed form in maturity; the diagonal is the running rate
    /// `r + lambda_t` the short-rate condition constrains.
    pub fn curve(&self) -> impl ForwardCurveModel + '_ {
        let cir = self.cir;
        let r = self.r;
        let times = Arc::clone(&self.times);
        let states = Arc::clone(&self.states);
        let atom_times = Arc::clone(&self.times);
        let atom_states = Arc::clone(&self.states);
        let tampered = self.tampered_atom;
        FnCurve::new(
            self.measure.clone(),
            move |t, m| {
                let x = Self::state_at(&times, &states, t);
                if m <= t + 1e-12 {
                    return r + x;
                }
                // d/dm of A(t, m) + B(t, m) x by a five-point stencil; the
                // piecewise boundary at the atom is approached one-sidedly.
                let h = 1e-4_f64.min(0.1 * (m - t));
                let log_price = |mm: f64| {
                    let (a, b) = cir_closed_form(&cir, t, mm).expect("flow valid");
                    a + b * x
                };
                let d = if (m - cir.u1).abs() < 3.0 * h {
                    // Fourth-order one-sided stencil pointing away from the
                    // piecewise boundary at the atom.
                    let dir = if m < cir.u1 { -1.0 } else { 1.0 };
                    let c = [-25.0, 48.0, -36.0, 16.0, -3.0];
                    let mut num = 0.0;
                    for (k, ck) in c.iter().enumerate() {
                        num += ck * log_price(m + dir * k as f64 * h);
                    }
                    dir * num / (12.0 * h)
                } else {
                    (log_price(m - 2.0 * h) - 8.0 * log_price(m - h) + 8.0 * log_price(m + h)
                        - log_price(m + 2.0 * h))
                        / (12.0 * h)
                };
                r + d
            },
            move |t, _atom| {
                if tampered {
                    0.0
                } else {
                    Self::atom_rate(&cir, &atom_times, &atom_states, t)
                }
            },
        )
    }

    /// The state-bound compensator: running intensity `X_s`, and at the
    /// atom the default mass `1 - exp(-psi1 X_{u1})` of the realized state.
    pub fn compensator(&self) -> CompensatorSpec {
        let cir = self.cir;
        let times = Arc::clone(&self.times);
        let states = Arc::clone(&self.states);
        CompensatorSpec::new(
            move |s: f64| {
                if (s - cir.u1).abs() <= 1e-12 * cir.u1.max(1.0) {
                    let x = Self::state_at(&times, &states, cir.u1);
                    -(-cir.psi1 * x).exp_m1()
                } else {
                    Self::state_at(&times, &states, s)
                }
            },
            vec![BaseJump {
                time: cir.u1,
                size: 1.0,
            }],
        )
        .expect("single base jump")
    }

    /// Aggregated-coefficient source built on a stored Riccati solution for
    /// the audited horizon.
    pub fn bar_source<'a>(&'a self, sol: &'a PiecewiseRiccatiSolution) -> CirBar<'a> {
        CirBar { model: self, sol }
    }
}

/// [`BarSource`] for the CIR model: quote-time stencils on the stored
/// Riccati solution plus the generator terms of the state.
pub struct CirBar<'a> {
    model: &'a CirOnPath,
    sol: &'a PiecewiseRiccatiSolution,
}

impl BarSource for CirBar<'_> {
    fn dim(&self) -> usize {
        1
    }

    fn bar(&self, t: f64, tt: f64) -> Result<Option<(f64, Vec<f64>)>> {
        let sol = self.sol;
        if (tt - sol.maturity()).abs() > 1e-9 {
            return Err(Error::Unsupported(format!(
                "stored Riccati solution is for maturity {}, not {tt}",
                sol.maturity()
            )));
        }
        let times = sol.times();
        let i = match times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-9 * t.abs().max(1.0))
        {
            Some(i) => i,
            None => return Ok(None),
        };
        if i < 2 || i + 2 >= times.len() {
            return Ok(None);
        }
        let h = times[i + 1] - times[i];
        // The five-point window must stay on one smooth branch: interior
        // atoms invalidate it, edge atoms contribute their one-sided limit.
        for j in [i - 1, i, i + 1] {
            if sol.has_event(j) {
                return Ok(None);
            }
        }
        for j in i - 2..=i + 1 {
            if (times[j + 1] - times[j] - h).abs() > 1e-9 * h {
                return Ok(None); // non-uniform spacing near a segment seam
            }
        }
        let sample = |j: usize, k: usize| -> f64 {
            if j > i && sol.has_event(j) {
                sol.path_left(j)[k]
            } else {
                sol.path_value(j)[k]
            }
        };
        let window_a: Vec<f64> = (i - 2..=i + 2).map(|j| sample(j, 0)).collect();
        let window_b: Vec<f64> = (i - 2..=i + 2).map(|j| sample(j, 1)).collect();
        let da = deriv4_on_grid(&window_a, 2, h).expect("window has five points");
        let db = deriv4_on_grid(&window_b, 2, h).expect("window has five points");

        let cir = &self.model.cir;
        let x = CirOnPath::state_at(&self.model.times, &self.model.states, t);
        let b = sol.path_value(i)[1];
        let drift_x = cir.mu0 + cir.mu1 * x;
        // Generator terms plus the running intensity (unit state loading).
        let a_bar = da + db * x + b * drift_x + x;
        let vol = cir.sigma * x.max(0.0).sqrt() * b;
        Ok(Some((a_bar, vec![vol])))
    }
}

impl PiecewiseRiccatiSolution {
    fn path_value(&self, i: usize) -> &[f64] {
        self.path.value(i)
    }

    fn path_left(&self, i: usize) -> &[f64] {
        self.path.left_limit(i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{forward_integral, DefaultStatus};

    fn reference_cir(psi1: f64) -> CirParams {
        CirParams {
            mu0: 0.1,
            mu1: -0.5,
            sigma: 0.3,
            psi1,
            u1: 1.0,
        }
    }

    #[test]
    fn closed_form_matches_frozen_values() {
        // Frozen against an independent high-order integration of the
        // scalar Riccati system (dense output, tolerance 1e-13).
        let cases: [(f64, f64, f64, f64, f64); 6] = [
            (0.0, 0.5, 0.0, 0.011_501_120_482_628, 0.440_939_534_080_615),
            (0.0, 2.0, 0.0, 0.144_418_359_346_077, 1.219_969_104_176_662),
            (0.0, 2.0, 0.4, 0.174_503_443_695_926, 1.438_313_614_384_571),
            (0.5, 2.0, 0.4, 0.105_200_429_804_517, 1.328_077_605_200_223),
            (0.0, 1.0, 0.4, 0.073_259_016_804_992, 1.008_171_749_878_889),
            (
                0.25,
                1.75,
                0.9,
                0.142_173_641_112_108,
                1.601_711_161_310_775,
            ),
        ];
        for (t, tt, psi1, a_ref, b_ref) in cases {
            let p = reference_cir(psi1);
            let (a, b) = cir_closed_form(&p, t, tt).unwrap();
            assert!(
                (a - a_ref).abs() < 1e-12 && (b - b_ref).abs() < 1e-12,
                "({t}, {tt}, psi1 = {psi1}): got ({a}, {b}), expected ({a_ref}, {b_ref})"
            );
        }
    }

    #[test]
    fn atom_free_tail_matches_frozen_values() {
        let p = reference_cir(0.4);
        let (a0, b0) = cir_base(&p, 1.0);
        assert!((a0 - 0.042_360_446_344_175).abs() < 1e-12);
        assert!((b0 - 0.777_859_547_832_319).abs() < 1e-12);
    }

    #[test]
    fn flow_composes_like_a_semigroup() {
        // A zero-loading atom must be invisible: flowing through it in two
        // stretches equals one uninterrupted stretch.
        let p = reference_cir(0.0);
        let (a, b) = cir_closed_form(&p, 0.0, 2.0).unwrap();
        let no_atom = CirParams { u1: 5.0, ..p };
        let (a_plain, b_plain) = cir_closed_form(&no_atom, 0.0, 2.0).unwrap();
        assert!((a - a_plain).abs() < 1e-13);
        assert!((b - b_plain).abs() < 1e-13);
    }

    fn reference_grid(tt: f64, dt: f64, u1: f64) -> Grid {
        Grid::with_events(0.0, tt, dt, &[u1]).unwrap()
    }

    #[test]
    fn riccati_integration_matches_the_closed_form_everywhere() {
        let p = reference_cir(0.4);
        let grid = reference_grid(2.0, 1e-3, p.u1);
        let sol = solve_riccati(&p.affine_params(), &p.hazard(), &p.measure(), &grid).unwrap();
        let mut worst = 0.0_f64;
        for (i, &t) in sol.times().iter().enumerate() {
            let (a_cf, b_cf) = cir_closed_form(&p, t, 2.0).unwrap();
            worst = worst.max((sol.a_at(i) - a_cf).abs());
            worst = worst.max((sol.b_at(i)[0] - b_cf).abs());
        }
        assert!(worst < 1e-9, "sup deviation {worst}");
    }

    #[test]
    fn riccati_atom_jump_is_machine_exact() {
        let p = reference_cir(0.4);
        let grid = reference_grid(2.0, 1e-3, p.u1);
        let sol = solve_riccati(&p.affine_params(), &p.hazard(), &p.measure(), &grid).unwrap();
        let i = sol
            .times()
            .iter()
            .position(|&t| (t - 1.0).abs() < 1e-12)
            .unwrap();
        assert!(sol.has_event(i));
        assert!(((sol.b_pre(i)[0] - sol.b_at(i)[0]) - 0.4).abs() < 5e-16);
        assert!((sol.a_pre(i) - sol.a_at(i)).abs() < 5e-16);
    }

    #[test]
    fn pure_jump_system_is_reproduced_exactly() {
        // Zero dynamics, zero running hazard: the solution is a pure step
        // function the integrator must reproduce without any drift.
        let params = AffineParams {
            m: 1,
            n: 0,
            mu0: vec![0.0],
            mu: vec![vec![0.0]],
            sigma0: vec![vec![0.0]],
            sigma: vec![vec![vec![0.0]]],
        };
        let hazard = HazardSpec::new(
            |_| 0.0,
            |_| vec![0.0],
            vec![HazardAtom {
                time: 0.5,
                weight: 2.0,
                phi: 0.3,
                psi: vec![0.1],
            }],
        )
        .unwrap();
        let grid = Grid::with_events(0.0, 1.0, 0.125, &[0.5]).unwrap();
        let sol = solve_riccati(&params, &hazard, &hazard.measure(), &grid).unwrap();
        for (i, &t) in sol.times().iter().enumerate() {
            let (a_expect, b_expect) = if t < 0.5 { (0.6, 0.2) } else { (0.0, 0.0) };
            assert_eq!(sol.a_at(i), a_expect, "A at t = {t}");
            assert_eq!(sol.b_at(i)[0], b_expect, "B at t = {t}");
        }
    }

    #[test]
    fn atom_at_the_maturity_is_the_terminal_jump() {
        let p = reference_cir(0.4);
        let grid = reference_grid(1.0, 1e-3, p.u1);
        let sol = solve_riccati(&p.affine_params(), &p.hazard(), &p.measure(), &grid).unwrap();
        let last = sol.times().len() - 1;
        assert_eq!(sol.a_at(last), 0.0);
        assert_eq!(sol.b_at(last)[0], 0.0);
        assert_eq!(sol.b_pre(last)[0], 0.4);
        let (a_cf, b_cf) = cir_closed_form(&p, 0.0, 1.0).unwrap();
        assert!((sol.a_at(0) - a_cf).abs() < 1e-9);
        assert!((sol.b_at(0)[0] - b_cf).abs() < 1e-9);
    }

    #[test]
    fn price_matches_frozen_value_and_jumps_up_across_the_atom() {
        let p = reference_cir(0.4);
        let grid = reference_grid(2.0, 1e-3, p.u1);
        let sol = solve_riccati(&p.affine_params(), &p.hazard(), &p.measure(), &grid).unwrap();
        let alive = DefaultStatus::no_default();
        let price = bond_price_affine(&sol, &[0.2], 0.0, &alive).unwrap();
        assert!(
            (price - 0.629_917_659_986_267).abs() < 1e-9,
            "price {price}"
        );

        // Crossing the atom releases its discount: the quote jumps up by
        // exactly the atom exponent of the loading.
        let i = sol
            .times()
            .iter()
            .position(|&t| (t - 1.0).abs() < 1e-12)
            .unwrap();
        let x = 0.17;
        let post = (-sol.a_at(i) - sol.b_at(i)[0] * x).exp();
        let pre = (-sol.a_pre(i) - sol.b_pre(i)[0] * x).exp();
        assert!((post / pre - (0.4 * x).exp()).abs() < 1e-12);

        let defaulted = DefaultStatus::defaulted_at(0.3).unwrap();
        assert_eq!(
            bond_price_affine(&sol, &[0.2], 0.5, &defaulted).unwrap(),
            0.0
        );
    }

    #[test]
    fn interpolated_evaluation_stays_close_to_the_closed_form() {
        let p = reference_cir(0.4);
        let grid = reference_grid(2.0, 1e-3, p.u1);
        let sol = solve_riccati(&p.affine_params(), &p.hazard(), &p.measure(), &grid).unwrap();
        for &t in &[0.1234567, 0.9995, 1.0005, 1.777] {
            let (a, b) = sol.eval(t).unwrap();
            let (a_cf, b_cf) = cir_closed_form(&p, t, 2.0).unwrap();
            assert!((a - a_cf).abs() < 1e-6, "A at t = {t}");
            assert!((b[0] - b_cf).abs() < 1e-6, "B at t = {t}");
        }
        assert!(sol.eval(-0.1).is_err());
        assert!(sol.eval(2.1).is_err());
    }

    #[test]
    fn bond_price_formula_is_exponential_affine() {
        // Direct check of the quoting convention on a synthetic solution:
        // A = 0.1 and B = 0.4 at x = 1 must price to e^{-1/2}.
        let params = AffineParams {
            m: 1,
            n: 0,
            mu0: vec![0.0],
            mu: vec![vec![0.0]],
            sigma0: vec![vec![0.0]],
            sigma: vec![vec![vec![0.0]]],
        };
        let hazard = HazardSpec::new(
            |_| 0.0,
            |_| vec![0.0],
            vec![HazardAtom {
                time: 1.0,
                weight: 1.0,
                phi: 0.1,
                psi: vec![0.4],
            }],
        )
        .unwrap();
        let grid = Grid::with_events(0.0, 1.0, 0.25, &[1.0]).unwrap();
        let sol = solve_riccati(&params, &hazard, &hazard.measure(), &grid).unwrap();
        // Below the terminal atom the pure-jump solution is exactly
        // (A, B) = (0.1, 0.4).
        let alive = DefaultStatus::no_default();
        let price = bond_price_affine(&sol, &[1.0], 0.5, &alive).unwrap();
        assert!((price - (-0.5_f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn admissibility_screens_the_coefficients() {
        let p = reference_cir(0.4).affine_params();
        assert!(validate_admissible(&p).is_empty());

        let bad_psd = AffineParams {
            m: 0,
            n: 1,
            mu0: vec![0.0],
            mu: vec![vec![0.0]],
            sigma0: vec![vec![-1.0]],
            sigma: vec![vec![vec![0.0]]],
        };
        let v = validate_admissible(&bad_psd);
        assert!(v.iter().any(|s| s.contains("sigma0 not PSD")), "{v:?}");

        let outward = AffineParams {
            mu0: vec![-0.1],
            ..reference_cir(0.0).affine_params()
        };
        let v = validate_admissible(&outward);
        assert!(
            v.iter()
                .any(|s| s.contains("drift points outward at boundary")),
            "{v:?}"
        );

        let free_drives_positive = AffineParams {
            m: 1,
            n: 1,
            mu0: vec![0.1, 0.0],
            mu: vec![vec![-0.5, 0.0], vec![0.1, -0.2]],
            sigma0: vec![vec![0.0, 0.0], vec![0.0, 1.0]],
            sigma: vec![
                vec![vec![0.045, 0.0], vec![0.0, 0.0]],
                vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            ],
        };
        let v = validate_admissible(&free_drives_positive);
        assert!(
            v.iter()
                .any(|s| s.contains("must not drive positive coordinate")),
            "{v:?}"
        );
    }

    #[test]
    fn parameter_validation_rejects_degenerate_inputs() {
        assert!(CirParams {
            sigma: 0.0,
            ..reference_cir(0.4)
        }
        .validate()
        .is_err());
        assert!(CirParams {
            psi1: -0.1,
            ..reference_cir(0.4)
        }
        .validate()
        .is_err());
        assert!(CirParams {
            u1: 0.0,
            ..reference_cir(0.4)
        }
        .validate()
        .is_err());
        assert!(CirParams {
            mu0: -0.1,
            ..reference_cir(0.4)
        }
        .validate()
        .is_err());
        assert!(cir_closed_form(&reference_cir(0.4), 1.5, 1.0).is_err());
    }

    #[test]
    fn stationary_mean_is_the_drift_balance_point() {
        let p = reference_cir(0.0);
        assert_eq!(cir_stationary_mean(&p), Some(0.2));
        let divergent = CirParams { mu1: 0.1, ..p };
        assert_eq!(cir_stationary_mean(&divergent), None);
    }

    #[test]
    fn accumulated_hazard_of_a_constant_path_is_linear() {
        let hazard = HazardSpec::new(|_| 0.0, |_| vec![1.0], vec![]).unwrap();
        let times: Vec<f64> = (0..=4).map(|k| k as f64 * 0.25).collect();
        let states: Vec<Vec<f64>> = times.iter().map(|_| vec![0.04]).collect();
        let k = hazard_eval(&hazard, &times, &states, 1.0).unwrap();
        assert!((k - 0.04).abs() < 1e-15);
    }

    #[test]
    fn hazard_atoms_enter_the_accumulation_once() {
        let p = reference_cir(0.4);
        let hazard = p.hazard();
        let times: Vec<f64> = vec![0.0, 0.5, 1.0, 1.5, 2.0];
        let states: Vec<Vec<f64>> = times.iter().map(|_| vec![0.2]).collect();
        let path = accumulate_hazard(&hazard, &times, &states).unwrap();
        // Trapezoid of the constant intensity 0.2 plus the atom exponent
        // 0.4 * 0.2 once time passes the atom.
        assert!((path.value(1) - 0.1).abs() < 1e-15);
        assert!((path.value(2) - (0.2 + 0.08)).abs() < 1e-15);
        assert!((path.value(4) - (0.4 + 0.08)).abs() < 1e-15);
        assert_eq!(path.atom_events().len(), 1);
        assert_eq!(path.atom_events()[0].0, 2);
    }

    #[test]
    fn negative_atom_exponent_is_rejected() {
        let hazard = HazardSpec::new(
            |_| 0.0,
            |_| vec![1.0],
            vec![HazardAtom {
                time: 1.0,
                weight: 1.0,
                phi: -0.5,
                psi: vec![0.1],
            }],
        )
        .unwrap();
        let times = vec![0.0, 1.0];
        let states = vec![vec![0.2], vec![0.2]];
        let err = accumulate_hazard(&hazard, &times, &states).unwrap_err();
        assert!(err.to_string().contains("negative exponent"));
    }

    fn wavy_path(n: usize, tt: f64) -> (Vec<f64>, Vec<f64>) {
        let times: Vec<f64> = (0..=n).map(|k| k as f64 * tt / n as f64).collect();
        let states: Vec<f64> = times
            .iter()
            .map(|&t| 0.2 + 0.05 * (2.0 * t).sin())
            .collect();
        (times, states)
    }

    #[test]
    fn state_bound_curve_integrates_to_the_riccati_exponent() {
        // The maturity derivative route must reassemble the log-price:
        // integral of the curve over (0, T] plus the weighted atom value
        // equals A + B x plus the riskless part.
        let p = reference_cir(0.4);
        let r = 0.03;
        let (times, states) = wavy_path(8, 2.0);
        let x0 = states[0];
        let model = CirOnPath::new(p, r, times, states).unwrap();
        let curve = model.curve();
        let total = forward_integral(&curve, 0.0, 2.0).unwrap();
        let (a, b) = cir_closed_form(&p, 0.0, 2.0).unwrap();
        let expected = a + b * x0 + r * 2.0;
        assert!(
            (total - expected).abs() < 1e-7,
            "integral {total} vs {expected}"
        );
    }

    #[test]
    fn state_bound_curve_diagonal_is_the_running_rate() {
        let p = reference_cir(0.4);
        let (times, states) = wavy_path(8, 2.0);
        let model = CirOnPath::new(p, 0.03, times.clone(), states.clone()).unwrap();
        let curve = model.curve();
        let x = CirOnPath::state_at(&times, &states, 0.7);
        assert!((curve.ac_part(0.7, 0.7) - (0.03 + x)).abs() < 1e-15);
    }

    #[test]
    fn atom_rate_settles_at_the_realized_exponent() {
        let p = reference_cir(0.4);
        let (times, states) = wavy_path(8, 2.0);
        let model = CirOnPath::new(p, 0.0, times.clone(), states.clone()).unwrap();
        let curve = model.curve();
        let x_u = CirOnPath::state_at(&times, &states, 1.0);
        // At and after the atom the curve quotes the realized exponent.
        assert!((curve.atom_value(1.0, 0) - 0.4 * x_u).abs() < 1e-14);
        assert!((curve.atom_value(1.5, 0) - 0.4 * x_u).abs() < 1e-14);
        // Just before, continuity in the quote time.
        assert!((curve.atom_value(1.0 - 1e-9, 0) - 0.4 * x_u).abs() < 1e-6);
    }

    #[test]
    fn aggregated_coefficients_satisfy_the_quadratic_identity() {
        let p = reference_cir(0.4);
        let (times, states) = wavy_path(8, 2.0);
        let model = CirOnPath::new(p, 0.03, times.clone(), states.clone()).unwrap();
        let grid = reference_grid(2.0, 1e-3, p.u1);
        let sol = solve_riccati(&p.affine_params(), &p.hazard(), &p.measure(), &grid).unwrap();
        let bar = model.bar_source(&sol);
        use crate::noarb::BarSource;
        for &t in &[0.25, 0.5, 0.75, 1.25, 1.5] {
            let (a_bar, b_bar) = bar.bar(t, 2.0).unwrap().expect("interior point");
            let half_norm = 0.5 * b_bar.iter().map(|v| v * v).sum::<f64>();
            assert!(
                (a_bar - half_norm).abs() < 1e-8,
                "residual {} at t = {t}",
                (a_bar - half_norm).abs()
            );
        }
        // The window refuses to straddle the atom or the edges.
        assert!(bar.bar(1.0, 2.0).unwrap().is_none());
        assert!(bar.bar(0.0, 2.0).unwrap().is_none());
        assert!(bar.bar(0.001, 2.0).unwrap().is_none());
        // And it serves only the maturity it was solved for.
        assert!(bar.bar(0.5, 1.9).is_err());
    }

    #[test]
    fn compensator_carries_the_atom_mass_of_the_realized_state() {
        let p = reference_cir(0.4);
        let (times, states) = wavy_path(8, 2.0);
        let model = CirOnPath::new(p, 0.0, times.clone(), states.clone()).unwrap();
        let spec = model.compensator();
        let x_u = CirOnPath::state_at(&times, &states, 1.0);
        let expected_mass = -(-0.4 * x_u).exp_m1();
        assert!((spec.lambda(1.0) - expected_mass).abs() < 1e-15);
        // Away from the atom the intensity is the state itself.
        let x = CirOnPath::state_at(&times, &states, 0.6);
        assert!((spec.lambda(0.6) - x).abs() < 1e-15);
    }
}

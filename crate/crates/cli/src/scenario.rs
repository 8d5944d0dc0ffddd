//! Scenario files: the JSON schema, load-time validation, and builders that
//! turn a scenario into the model objects the commands run.
//!
//! A scenario names one model family and carries its parameters, the pricing
//! measure, the simulation configuration, and optional pricing / status /
//! drift-test sections.  Everything a command does is a deterministic
//! function of this file, including every random draw (the seed lives in
//! `sim`).

use std::fs;
use std::path::Path;

use serde::Deserialize;

use riskytimes::affine::{CirParams, HazardAtom, HazardSpec};
use riskytimes::blackcox::BlackCoxParams;
use riskytimes::curves::{DefaultStatus, FnCurve, ForwardCurveModel, ShortRateModel};
use riskytimes::mc::SimConfig;
use riskytimes::measure::{BaseJump, CompensatorSpec, RiskyMeasure};
use riskytimes::merton::MertonParams;
use riskytimes::noarb::{atom_target_rate, FnCoefficients, HjmCoefficients};

use crate::output::fnv1a64;
use crate::Failure;

/// Model families a scenario can name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Merton,
    Blackcox,
    CirAffine,
    CustomCurve,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Merton => "merton",
            ModelKind::Blackcox => "blackcox",
            ModelKind::CirAffine => "cir_affine",
            ModelKind::CustomCurve => "custom_curve",
        }
    }
}

/// Announcement-date structural model parameters plus the observed state.
/// `w0` is the asset log-distance at time 0 for simulation commands and at
/// the quote time for pricing.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MertonSection {
    pub k: f64,
    pub u: f64,
    pub r: f64,
    pub t_star: f64,
    pub w0: f64,
}

/// Stepped-barrier first-passage model parameters plus the observed state.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlackcoxSection {
    pub d0: f64,
    pub du: f64,
    pub u: f64,
    pub w0: f64,
}

/// Square-root intensity model with one hazard atom, plus the short rate and
/// the observed intensity state.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CirSection {
    pub mu0: f64,
    pub mu1: f64,
    pub sigma: f64,
    pub psi1: f64,
    pub u1: f64,
    pub x0: f64,
    pub r: f64,
}

/// Deterministic flat-intensity curve: short rate `r`, running intensity
/// `lambda`, and per-atom default masses.  `atom_values` overrides the
/// forward rate quoted on each atom; omitted entries default to the
/// no-arbitrage target, so leaving the field out yields a certified curve
/// and zeroing an entry yields a deliberately mispriced one.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomCurveSection {
    pub r: f64,
    pub lambda: f64,
    pub atom_masses: Vec<f64>,
    #[serde(default)]
    pub atom_values: Option<Vec<f64>>,
}

/// Quote time and maturities for the pricing command (also the maturities
/// the simulate command compares against closed forms).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceSection {
    pub t: f64,
    pub maturities: Vec<f64>,
}

/// Marks the scenario as already defaulted at the given time.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatusSection {
    pub defaulted_at: f64,
}

/// Martingale drift test request (merton simulate only): discounted bond
/// prices for the `maturity` bond are sampled at the checkpoints and
/// adjacent erosions are tested for zero mean.  `tampered` quotes the bond
/// off a curve that drops the announcement-date forward rate — a negative
/// control that any checkpoint pair straddling the announcement flags.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftSection {
    pub maturity: f64,
    pub checkpoints: Vec<f64>,
    #[serde(default)]
    pub tampered: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub model: ModelKind,
    pub measure: RiskyMeasure,
    pub sim: SimConfig,
    #[serde(default)]
    pub outputs: Vec<String>,
    #[serde(default)]
    pub merton: Option<MertonSection>,
    #[serde(default)]
    pub blackcox: Option<BlackcoxSection>,
    #[serde(default)]
    pub cir_affine: Option<CirSection>,
    #[serde(default)]
    pub custom_curve: Option<CustomCurveSection>,
    #[serde(default)]
    pub price: Option<PriceSection>,
    #[serde(default)]
    pub status: Option<StatusSection>,
    #[serde(default)]
    pub drift: Option<DriftSection>,
}

/// A parsed scenario together with the hash of its exact file bytes.
pub struct Loaded {
    pub scenario: Scenario,
    pub config_hash: String,
}

const ARTIFACT_NAMES: [&str; 5] = ["prices", "drift_report", "estimates", "summary", "riccati"];

pub fn load(path: &Path) -> Result<Loaded, Failure> {
    let bytes = fs::read(path)
        .map_err(|e| Failure::Invalid(format!("cannot read {}: {e}", path.display())))?;
    let scenario: Scenario = serde_json::from_slice(&bytes).map_err(|e| {
        Failure::Invalid(format!("{} is not a valid scenario: {e}", path.display()))
    })?;
    scenario.validate()?;
    Ok(Loaded {
        scenario,
        config_hash: format!("{:016x}", fnv1a64(&bytes)),
    })
}

impl Scenario {
    /// Structural validation beyond what serde enforces.  Every violation is
    /// an invalid-input failure (exit code 2): the file itself is the
    /// problem, not the arbitrage content.
    fn validate(&self) -> Result<(), Failure> {
        // Deserialization bypasses the measure constructor, so re-run it.
        let measure = RiskyMeasure::new(self.measure.atoms().to_vec())?;
        self.sim.validate_for(&measure)?;
        for name in &self.outputs {
            if !ARTIFACT_NAMES.contains(&name.as_str()) {
                return Err(Failure::Invalid(format!(
                    "unknown output artifact {name:?}; known: {}",
                    ARTIFACT_NAMES.join(", ")
                )));
            }
        }
        match self.model {
            ModelKind::Merton => {
                let (p, _) = self.merton_model()?;
                self.require_single_atom(p.u, "the announcement date u")?;
                if self.sim.horizon > p.t_star {
                    return Err(Failure::Invalid(format!(
                        "sim.horizon = {} quotes past the trading horizon t_star = {}",
                        self.sim.horizon, p.t_star
                    )));
                }
                if let Some(price) = &self.price {
                    for &tt in &price.maturities {
                        if tt > p.t_star {
                            return Err(Failure::Invalid(format!(
                                "maturity {tt} lies beyond the trading horizon t_star = {}",
                                p.t_star
                            )));
                        }
                    }
                }
            }
            ModelKind::Blackcox => {
                let (p, w0) = self.blackcox_model()?;
                self.require_single_atom(p.u, "the announcement date u")?;
                if w0 <= p.d0 {
                    return Err(Failure::Invalid(format!(
                        "w0 = {w0} starts at or below the barrier d0 = {}",
                        p.d0
                    )));
                }
            }
            ModelKind::CirAffine => {
                let (p, x0, _) = self.cir_model()?;
                self.require_single_atom(p.u1, "the hazard atom time u1")?;
                if x0 < 0.0 {
                    return Err(Failure::Invalid(format!("x0 = {x0} must be nonnegative")));
                }
            }
            ModelKind::CustomCurve => {
                self.custom_model()?;
            }
        }
        if let Some(price) = &self.price {
            if price.maturities.is_empty() {
                return Err(Failure::Invalid("price.maturities is empty".into()));
            }
            if !(price.t >= 0.0 && price.t.is_finite()) {
                return Err(Failure::Invalid(format!(
                    "price.t = {} must be a nonnegative time",
                    price.t
                )));
            }
            for &tt in &price.maturities {
                if !(tt.is_finite() && tt >= price.t) {
                    return Err(Failure::Invalid(format!(
                        "maturity {tt} precedes the quote time {}",
                        price.t
                    )));
                }
            }
        }
        if let Some(s) = &self.status {
            DefaultStatus::defaulted_at(s.defaulted_at)?;
        }
        if let Some(d) = &self.drift {
            if self.model != ModelKind::Merton {
                return Err(Failure::Invalid(
                    "the drift test section requires the merton model".into(),
                ));
            }
            if d.checkpoints.len() < 2 {
                return Err(Failure::Invalid(
                    "drift.checkpoints needs at least two entries".into(),
                ));
            }
        }
        Ok(())
    }

    fn require_single_atom(&self, time: f64, what: &str) -> Result<(), Failure> {
        let atoms = self.measure.atoms();
        let ok = atoms.len() == 1
            && (atoms[0].time - time).abs() <= 1e-12 * time.max(1.0)
            && atoms[0].weight == 1.0;
        if ok {
            return Ok(());
        }
        Err(Failure::Invalid(format!(
            "the {} model requires measure.atoms = [{{time: {time}, weight: 1}}] ({what})",
            self.model.name()
        )))
    }

    fn section_missing(&self, section: &str) -> Failure {
        Failure::Invalid(format!(
            "model is {:?} but the {section} section is missing",
            self.model.name()
        ))
    }

    /// The model's own parameter struct plus the observed state `w0`.
    pub fn merton_model(&self) -> Result<(MertonParams, f64), Failure> {
        let s = self
            .merton
            .as_ref()
            .ok_or_else(|| self.section_missing("merton"))?;
        let p = MertonParams {
            k: s.k,
            u: s.u,
            r: s.r,
            t_star: s.t_star,
        };
        p.validate()?;
        Ok((p, s.w0))
    }

    pub fn blackcox_model(&self) -> Result<(BlackCoxParams, f64), Failure> {
        let s = self
            .blackcox
            .as_ref()
            .ok_or_else(|| self.section_missing("blackcox"))?;
        let p = BlackCoxParams {
            d0: s.d0,
            du: s.du,
            u: s.u,
        };
        p.validate()?;
        Ok((p, s.w0))
    }

    /// Parameters, observed state and short rate of the square-root model.
    pub fn cir_model(&self) -> Result<(CirParams, f64, f64), Failure> {
        let s = self
            .cir_affine
            .as_ref()
            .ok_or_else(|| self.section_missing("cir_affine"))?;
        let p = CirParams {
            mu0: s.mu0,
            mu1: s.mu1,
            sigma: s.sigma,
            psi1: s.psi1,
            u1: s.u1,
        };
        p.validate()?;
        if !s.r.is_finite() {
            return Err(Failure::Invalid(format!("r = {} must be finite", s.r)));
        }
        Ok((p, s.x0, s.r))
    }

    pub fn custom_model(&self) -> Result<CustomModel, Failure> {
        let s = self
            .custom_curve
            .as_ref()
            .ok_or_else(|| self.section_missing("custom_curve"))?;
        let measure = RiskyMeasure::new(self.measure.atoms().to_vec())?;
        let atoms = measure.atoms();
        if s.atom_masses.len() != atoms.len() {
            return Err(Failure::Invalid(format!(
                "atom_masses has {} entries for {} measure atoms",
                s.atom_masses.len(),
                atoms.len()
            )));
        }
        if let Some(values) = &s.atom_values {
            if values.len() != atoms.len() {
                return Err(Failure::Invalid(format!(
                    "atom_values has {} entries for {} measure atoms",
                    values.len(),
                    atoms.len()
                )));
            }
        }
        if !(s.lambda >= 0.0 && s.lambda.is_finite()) {
            return Err(Failure::Invalid(format!(
                "lambda = {} must be a nonnegative intensity",
                s.lambda
            )));
        }
        if !s.r.is_finite() {
            return Err(Failure::Invalid(format!("r = {} must be finite", s.r)));
        }
        // Targets double as defaults for the quoted values and as the
        // compliance reference; computing them validates each mass against
        // its atom weight.
        let mut targets = Vec::with_capacity(atoms.len());
        for (atom, &mass) in atoms.iter().zip(&s.atom_masses) {
            targets.push(atom_target_rate(atom.weight, mass, 1.0)?);
        }
        let values = match &s.atom_values {
            Some(v) => v.clone(),
            None => targets.clone(),
        };
        Ok(CustomModel {
            r: s.r,
            lambda: s.lambda,
            masses: s.atom_masses.clone(),
            values,
            targets,
            measure,
        })
    }

    pub fn default_status(&self) -> Result<DefaultStatus, Failure> {
        match &self.status {
            Some(s) => Ok(DefaultStatus::defaulted_at(s.defaulted_at)?),
            None => Ok(DefaultStatus::no_default()),
        }
    }
}

/// A deterministic flat-intensity model: short rate `r`, running default
/// intensity `lambda`, and atoms carrying explicit default masses and quoted
/// forward rates.  The quoted values may disagree with the no-arbitrage
/// targets — that is the point of the model: it is the audit's test bench.
pub struct CustomModel {
    pub r: f64,
    pub lambda: f64,
    pub masses: Vec<f64>,
    pub values: Vec<f64>,
    pub targets: Vec<f64>,
    pub measure: RiskyMeasure,
}

impl CustomModel {
    /// Flat curve: every maturity quotes `r + lambda`, atoms quote the
    /// configured values.
    pub fn curve(&self) -> impl ForwardCurveModel + '_ {
        let rate = self.r + self.lambda;
        let values = self.values.clone();
        FnCurve::new(
            self.measure.clone(),
            move |_t, _m| rate,
            move |_t, i| values[i],
        )
    }

    /// The curve is deterministic, so its dynamics carry no drift and no
    /// volatility.
    pub fn coefficients(&self) -> impl HjmCoefficients {
        FnCoefficients::new(1, |_t, _m| 0.0, |_t, _m| vec![0.0])
    }

    pub fn compensator(&self) -> Result<CompensatorSpec, Failure> {
        let lambda = self.lambda;
        let masses: Vec<(f64, f64)> = self
            .measure
            .atoms()
            .iter()
            .zip(&self.masses)
            .map(|(a, &m)| (a.time, m))
            .collect();
        let jumps: Vec<BaseJump> = masses
            .iter()
            .map(|&(time, _)| BaseJump { time, size: 1.0 })
            .collect();
        let spec = CompensatorSpec::new(
            move |s: f64| {
                for &(time, mass) in &masses {
                    if (s - time).abs() <= 1e-12 * time.max(1.0) {
                        return mass;
                    }
                }
                lambda
            },
            jumps,
        )?;
        Ok(spec)
    }

    pub fn short_rate(&self) -> ShortRateModel {
        ShortRateModel::constant(self.r)
    }

    /// Hazard accumulation view for the doubly stochastic sampler: constant
    /// running intensity and, at each atom, the jump exponent implied by its
    /// default mass (`log` of the inverse conditional survival).
    pub fn hazard(&self) -> Result<HazardSpec, Failure> {
        let lambda = self.lambda;
        let atoms: Vec<HazardAtom> = self
            .measure
            .atoms()
            .iter()
            .zip(&self.targets)
            .map(|(a, &kappa)| HazardAtom {
                time: a.time,
                weight: a.weight,
                phi: kappa,
                psi: Vec::new(),
            })
            .collect();
        Ok(HazardSpec::new(move |_s| lambda, |_s| Vec::new(), atoms)?)
    }

    /// Conditional survival through atom `i`: `1 - mass_i / w_i`.
    fn atom_survival(&self, i: usize) -> f64 {
        1.0 - self.masses[i] / self.measure.atoms()[i].weight
    }

    /// Model-implied survival probability past `t`.
    pub fn survival(&self, t: f64) -> f64 {
        let mut s = (-self.lambda * t).exp();
        for (i, atom) in self.measure.atoms().iter().enumerate() {
            if atom.time <= t {
                s *= self.atom_survival(i);
            }
        }
        s
    }

    /// Model-implied probability of defaulting exactly at atom `i`.
    pub fn atom_default_prob(&self, i: usize) -> f64 {
        let u = self.measure.atoms()[i].time;
        let mut s = (-self.lambda * u).exp();
        for (j, atom) in self.measure.atoms().iter().enumerate() {
            if atom.time < u {
                s *= self.atom_survival(j);
            }
        }
        s * (self.masses[i] / self.measure.atoms()[i].weight)
    }
}

//! The four batch commands.  Each one loads everything it needs from the
//! scenario, prints a human-readable result to stdout, and (with `--out`)
//! writes its artifacts.  Exit codes: 0 success or certified, 1 violation
//! evidence, 2 invalid input, 3 operation unsupported for the model.

use serde::Serialize;

use riskytimes::affine::CirOnPath;
use riskytimes::affine::{accumulate_hazard, cir_closed_form, solve_riccati};
use riskytimes::blackcox;
use riskytimes::curves::bond_price;
use riskytimes::mc::{
    self, black_cox_survival_mc, cir_price_mc, merton_drift_experiment,
    sample_default_doubly_stochastic, DriftTestReport, Estimate,
};
use riskytimes::measure::RiskyMeasure;
use riskytimes::merton::{self, MertonOnPath};
use riskytimes::noarb::{audit, DriftReport, IntegratedBar};
use riskytimes::numerics::RngStream;

use crate::output::{csv, fmt, Artifacts};
use crate::scenario::{Loaded, ModelKind, PriceSection, Scenario};
use crate::Failure;

/// Stream purpose tag for default-threshold draws; kept distinct from the
/// increment streams the path samplers burn.
const PURPOSE_THRESHOLD: u64 = 2;

fn price_section(s: &Scenario) -> Result<&PriceSection, Failure> {
    s.price
        .as_ref()
        .ok_or_else(|| Failure::Invalid("this command needs a price section".into()))
}

// ---------------------------------------------------------------------------
// price

pub fn price(loaded: &Loaded, artifacts: &Artifacts) -> Result<u8, Failure> {
    let s = &loaded.scenario;
    let sec = price_section(s)?;
    let status = s.default_status()?;
    let t = sec.t;

    let mut rows: Vec<(f64, f64, String)> = Vec::new();
    match s.model {
        ModelKind::Merton => {
            let (p, w0) = s.merton_model()?;
            for &tt in &sec.maturities {
                let v = merton::price(&p, w0, t, tt, &status)?;
                let regime = if status.is_defaulted_by(t) {
                    "defaulted"
                } else if t < p.u && p.u <= tt {
                    "spans_announcement"
                } else if tt < p.u {
                    "riskless"
                } else {
                    "post_announcement"
                };
                rows.push((tt, v, regime.into()));
            }
        }
        ModelKind::Blackcox => {
            // Zero recovery and zero rates: the bond price is the survival
            // probability itself.
            let (p, w0) = s.blackcox_model()?;
            for &tt in &sec.maturities {
                let (v, regime) = if status.is_defaulted_by(t) {
                    (0.0, "defaulted")
                } else if tt == t {
                    (1.0, "at_quote_time")
                } else {
                    let v = blackcox::survival_prob(&p, w0, t, tt)?;
                    let regime = if t >= p.u {
                        "post_announcement"
                    } else if tt <= p.u {
                        "pre_announcement"
                    } else {
                        "spans_announcement"
                    };
                    (v, regime)
                };
                rows.push((tt, v, regime.into()));
            }
        }
        ModelKind::CirAffine => {
            let (p, x0, r) = s.cir_model()?;
            for &tt in &sec.maturities {
                let (v, regime) = if status.is_defaulted_by(t) {
                    (0.0, "defaulted")
                } else {
                    let (a, b) = cir_closed_form(&p, t, tt)?;
                    let v = (-r * (tt - t)).exp() * (-a - b * x0).exp();
                    let regime = if t >= p.u1 {
                        "post_atom"
                    } else if tt < p.u1 {
                        "pre_atom"
                    } else {
                        "spans_atom"
                    };
                    (v, regime)
                };
                rows.push((tt, v, regime.into()));
            }
        }
        ModelKind::CustomCurve => {
            let m = s.custom_model()?;
            let curve = m.curve();
            for &tt in &sec.maturities {
                let v = bond_price(&curve, &status, t, tt)?;
                let regime = if status.is_defaulted_by(t) {
                    "defaulted".to_string()
                } else {
                    let k = m.measure.atoms_in(t, tt).count();
                    format!("atoms_in_window={k}")
                };
                rows.push((tt, v, regime));
            }
        }
    }

    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|(tt, v, regime)| vec![fmt(*tt), fmt(*v), regime.clone()])
        .collect();
    artifacts.write("prices", "prices.csv", &csv("T,price,regime", &csv_rows))?;
    for (tt, v, regime) in &rows {
        println!(
            "price t={} T={} -> {} ({regime})",
            fmt(t),
            fmt(*tt),
            fmt(*v)
        );
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// audit

pub fn run_audit(loaded: &Loaded, tolerance: f64, artifacts: &Artifacts) -> Result<u8, Failure> {
    let s = &loaded.scenario;
    let measure = RiskyMeasure::new(s.measure.atoms().to_vec())?;
    let grid = s.sim.grid(&measure)?;

    let report: DriftReport = match s.model {
        ModelKind::Blackcox => {
            return Err(Failure::Unsupported(
                "the blackcox model exposes no drift coefficients to audit; \
                 run the simulate command for Monte Carlo evidence instead"
                    .into(),
            ));
        }
        ModelKind::Merton => {
            // The drift conditions are state-by-state identities, so the
            // audit binds the model to one simulated path of the asset state.
            let (p, w0) = s.merton_model()?;
            let bundle = mc::simulate_brownian(grid.points(), w0, 1, s.sim.seed, false);
            let model = MertonOnPath::new(p, grid.points().to_vec(), bundle.path(0).to_vec())?;
            let curve = model.curve();
            let coeffs = model.coefficients();
            let bar = IntegratedBar::new(&coeffs, model.measure());
            audit(
                &curve,
                &bar,
                &model.compensator(),
                &model.short_rate(),
                &grid,
                tolerance,
            )?
        }
        ModelKind::CirAffine => {
            let (p, x0, r) = s.cir_model()?;
            if s.sim.horizon < p.u1 {
                return Err(Failure::Invalid(format!(
                    "sim.horizon = {} must reach the hazard atom u1 = {} to audit it",
                    s.sim.horizon, p.u1
                )));
            }
            let bundle = mc::simulate_cir(grid.points(), &p, x0, 1, s.sim.seed, false)?;
            let model = CirOnPath::new(p, r, grid.points().to_vec(), bundle.path(0).to_vec())?;
            let sol = solve_riccati(&p.affine_params(), &p.hazard(), &measure, &grid)?;
            let curve = model.curve();
            let bar = model.bar_source(&sol);
            audit(
                &curve,
                &bar,
                &model.compensator(),
                &model.short_rate(),
                &grid,
                tolerance,
            )?
        }
        ModelKind::CustomCurve => {
            let m = s.custom_model()?;
            let curve = m.curve();
            let coeffs = m.coefficients();
            let bar = IntegratedBar::new(&coeffs, &m.measure);
            audit(
                &curve,
                &bar,
                &m.compensator()?,
                &m.short_rate(),
                &grid,
                tolerance,
            )?
        }
    };

    let mut text = serde_json::to_string_pretty(&report)
        .map_err(|e| Failure::Invalid(format!("cannot serialize the report: {e}")))?;
    text.push('\n');
    artifacts.write("drift_report", "drift_report.json", &text)?;

    let certified = report.certified(tolerance);
    println!(
        "audit {}: ac {} atom {} short-rate {} structural {} (tolerance {})",
        if certified { "certified" } else { "VIOLATED" },
        fmt(report.max_ac_residual),
        fmt(report.max_atom_residual),
        fmt(report.max_short_rate_residual),
        report.structural_violations.len(),
        fmt(tolerance),
    );
    for v in &report.structural_violations {
        println!("  structural: {v}");
    }
    Ok(if certified { 0 } else { 1 })
}

// ---------------------------------------------------------------------------
// simulate

#[derive(Serialize)]
struct Comparison {
    label: String,
    closed_form: f64,
    mc_mean: f64,
    mc_std_error: f64,
    /// Omitted when the standard error is zero.
    z_score: Option<f64>,
    /// Whether the closed form lies within three standard errors.
    pass: bool,
}

#[derive(Serialize)]
struct SimulateSummary {
    command: &'static str,
    model: &'static str,
    config_hash: String,
    comparisons: Vec<Comparison>,
    martingale: Option<DriftTestReport>,
    passed: bool,
}

fn compare(label: String, closed: f64, est: &Estimate) -> Comparison {
    let diff = est.mean - closed;
    let z = if est.std_error > 0.0 {
        Some(diff / est.std_error)
    } else {
        None
    };
    Comparison {
        label,
        closed_form: closed,
        mc_mean: est.mean,
        mc_std_error: est.std_error,
        z_score: z,
        pass: est.within(closed, 3.0),
    }
}

pub fn simulate(loaded: &Loaded, artifacts: &Artifacts) -> Result<u8, Failure> {
    let s = &loaded.scenario;
    let cfg = s.sim;
    let mut estimates: Vec<(String, Estimate)> = Vec::new();
    let mut comparisons: Vec<Comparison> = Vec::new();
    let mut martingale: Option<DriftTestReport> = None;

    match s.model {
        ModelKind::CustomCurve => {
            // Doubly stochastic sampling against the model's accumulated
            // hazard, which is deterministic here; only the threshold draw
            // varies across paths.
            let m = s.custom_model()?;
            let hazard = m.hazard()?;
            let grid = cfg.grid(&m.measure)?;
            let states = vec![Vec::new(); grid.len()];
            let path = accumulate_hazard(&hazard, grid.points(), &states)?;
            let atoms = m.measure.atoms().to_vec();
            let mut at_atom = vec![vec![0.0; cfg.n_paths]; atoms.len()];
            let mut defaulted = vec![0.0; cfg.n_paths];
            for p in 0..cfg.n_paths {
                let mut rng = RngStream::with_purpose(cfg.seed, p as u64, PURPOSE_THRESHOLD);
                let tau = sample_default_doubly_stochastic(&path, &mut rng)?;
                if let Some(tau) = tau {
                    defaulted[p] = 1.0;
                    for (i, a) in atoms.iter().enumerate() {
                        if (tau - a.time).abs() <= 1e-12 * a.time.max(1.0) {
                            at_atom[i][p] = 1.0;
                        }
                    }
                }
            }
            for (i, a) in atoms.iter().enumerate() {
                let est = Estimate::from_samples(&at_atom[i]);
                comparisons.push(compare(
                    format!("default_at_t={}", fmt(a.time)),
                    m.atom_default_prob(i),
                    &est,
                ));
                estimates.push((format!("default_at_t={}", fmt(a.time)), est));
            }
            let est = Estimate::from_samples(&defaulted);
            estimates.push(("default_by_horizon".into(), est));
            let survived: Vec<f64> = defaulted.iter().map(|d| 1.0 - d).collect();
            let est = Estimate::from_samples(&survived);
            comparisons.push(compare(
                "survival_to_horizon".into(),
                m.survival(cfg.horizon),
                &est,
            ));
            estimates.push(("survival_to_horizon".into(), est));
        }
        ModelKind::Merton => {
            let (p, w0) = s.merton_model()?;
            if let Some(sec) = &s.price {
                for &tt in &sec.maturities {
                    // The exact sampler needs the announcement inside the
                    // bond's life; earlier maturities are riskless anyway.
                    if tt < p.u {
                        continue;
                    }
                    let est = merton::price_mc(&p, w0, tt, cfg.n_paths, cfg.seed)?;
                    let closed = merton::price(
                        &p,
                        w0,
                        0.0,
                        tt,
                        &riskytimes::curves::DefaultStatus::no_default(),
                    )?;
                    comparisons.push(compare(format!("price_T={}", fmt(tt)), closed, &est));
                    estimates.push((format!("price_T={}", fmt(tt)), est));
                }
            }
            if let Some(d) = &s.drift {
                let report =
                    merton_drift_experiment(&p, w0, d.maturity, &d.checkpoints, &cfg, d.tampered)?;
                for pair in &report.pairs {
                    estimates.push((
                        format!("drift_{}_to_{}", fmt(pair.t1), fmt(pair.t2)),
                        pair.estimate,
                    ));
                }
                martingale = Some(report);
            }
        }
        ModelKind::Blackcox => {
            let (p, w0) = s.blackcox_model()?;
            let sec = price_section(s)?;
            for &tt in &sec.maturities {
                let est = black_cox_survival_mc(&p, w0, 0.0, tt, &cfg, true)?;
                let closed = blackcox::survival_prob(&p, w0, 0.0, tt)?;
                comparisons.push(compare(format!("survival_T={}", fmt(tt)), closed, &est));
                estimates.push((format!("survival_mc_T={}", fmt(tt)), est));
            }
        }
        ModelKind::CirAffine => {
            let (p, x0, r) = s.cir_model()?;
            let sec = price_section(s)?;
            for &tt in &sec.maturities {
                let est = cir_price_mc(&p, x0, r, tt, &cfg)?;
                let (a, b) = cir_closed_form(&p, 0.0, tt)?;
                let closed = (-r * tt).exp() * (-a - b * x0).exp();
                comparisons.push(compare(format!("price_T={}", fmt(tt)), closed, &est));
                estimates.push((format!("price_T={}", fmt(tt)), est));
            }
        }
    }

    let rows: Vec<Vec<String>> = estimates
        .iter()
        .map(|(label, e)| {
            vec![
                label.clone(),
                fmt(e.mean),
                fmt(e.std_error),
                e.n.to_string(),
                loaded.config_hash.clone(),
            ]
        })
        .collect();
    artifacts.write(
        "estimates",
        "estimates.csv",
        &csv("estimator,mean,std_error,n,config_hash", &rows),
    )?;

    let passed =
        comparisons.iter().all(|c| c.pass) && martingale.as_ref().map_or(true, |m| m.passed);
    let summary = SimulateSummary {
        command: "simulate",
        model: s.model.name(),
        config_hash: loaded.config_hash.clone(),
        comparisons,
        martingale,
        passed,
    };
    let mut text = serde_json::to_string_pretty(&summary)
        .map_err(|e| Failure::Invalid(format!("cannot serialize the summary: {e}")))?;
    text.push('\n');
    artifacts.write("summary", "summary.json", &text)?;

    for (label, e) in &estimates {
        println!(
            "estimate {label}: mean {} se {} n {}",
            fmt(e.mean),
            fmt(e.std_error),
            e.n
        );
    }
    for c in &summary.comparisons {
        println!(
            "check {} closed {} mc {} -> {}",
            c.label,
            fmt(c.closed_form),
            fmt(c.mc_mean),
            if c.pass { "PASS" } else { "FAIL" }
        );
    }
    if let Some(m) = &summary.martingale {
        println!(
            "martingale drift test: {}",
            if m.passed { "PASS" } else { "FAIL" }
        );
    }
    Ok(if summary.passed { 0 } else { 1 })
}

// ---------------------------------------------------------------------------
// riccati

pub fn riccati(loaded: &Loaded, tolerance: f64, artifacts: &Artifacts) -> Result<u8, Failure> {
    let s = &loaded.scenario;
    if s.model != ModelKind::CirAffine {
        return Err(Failure::Unsupported(format!(
            "the riccati command needs an affine model, got {}",
            s.model.name()
        )));
    }
    let (p, _, _) = s.cir_model()?;
    let measure = RiskyMeasure::new(s.measure.atoms().to_vec())?;
    let grid = s.sim.grid(&measure)?;
    let sol = solve_riccati(&p.affine_params(), &p.hazard(), &measure, &grid)?;
    let maturity = sol.maturity();

    // One row per grid point; atom times first print the approach limit,
    // then the value the solution continues with.  Closed-form columns sit
    // alongside for comparison; on approach-limit rows they carry the jump.
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut max_gap: f64 = 0.0;
    for (i, &t) in sol.times().iter().enumerate() {
        let (ca, cb) = cir_closed_form(&p, t, maturity)?;
        if sol.has_event(i) {
            let (pa, pb) = (ca, cb + p.psi1);
            max_gap = max_gap
                .max((sol.a_pre(i) - pa).abs())
                .max((sol.b_pre(i)[0] - pb).abs());
            rows.push(vec![
                fmt(t),
                fmt(sol.a_pre(i)),
                fmt(sol.b_pre(i)[0]),
                "true".into(),
                fmt(pa),
                fmt(pb),
            ]);
        }
        max_gap = max_gap
            .max((sol.a_at(i) - ca).abs())
            .max((sol.b_at(i)[0] - cb).abs());
        rows.push(vec![
            fmt(t),
            fmt(sol.a_at(i)),
            fmt(sol.b_at(i)[0]),
            "false".into(),
            fmt(ca),
            fmt(cb),
        ]);
    }
    artifacts.write(
        "riccati",
        "riccati.csv",
        &csv("t,A,B_1,is_pre_atom_limit,A_closed,B_closed_1", &rows),
    )?;

    println!(
        "riccati: solved to T = {} on {} points; max closed-form gap {} (within {}: {})",
        fmt(maturity),
        sol.times().len(),
        fmt(max_gap),
        fmt(tolerance),
        max_gap <= tolerance,
    );
    Ok(0)
}

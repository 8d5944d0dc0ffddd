//! Browser bindings for the defaultable-bond models: term structures in
//! which one calendar date carries a lump of default probability, so the
//! price is not continuous in the maturity.
//!
//! Each export takes plain numbers, runs the closed-form pricers from the
//! core crate, and returns a JSON curve ready for a canvas plot.  Errors
//! come back as strings (thrown as exceptions on the wasm side).  The
//! maturity grid always contains a pair of points straddling the special
//! date so the discontinuity renders as a vertical drop instead of being
//! interpolated away.
//!
//! Build for the browser with `wasm-pack build --target web`; the same
//! functions compile natively for the unit tests below.

use serde::Serialize;

use riskytimes::affine::{cir_closed_form, CirParams};
use riskytimes::blackcox::{self, BlackCoxParams};
use riskytimes::curves::DefaultStatus;
use riskytimes::merton::{self, MertonParams};

#[cfg(target_arch = "wasm32")]
use wasm_bindgen::prelude::wasm_bindgen;

/// A plottable term structure: `values[i]` quoted at maturity
/// `maturities[i]`, with the date of the jump (if any) called out so the
/// page can mark it.
#[derive(Serialize)]
struct Curve {
    label: &'static str,
    jump_at: Option<f64>,
    maturities: Vec<f64>,
    values: Vec<f64>,
}

/// Uniform maturities on `[0, horizon]` plus a pair straddling `date`, so
/// a one-sided limit sits right next to the value at the date itself.
fn maturity_grid(horizon: f64, n: usize, date: f64) -> Result<Vec<f64>, String> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err("horizon must be positive and finite".into());
    }
    if !(2..=2001).contains(&n) {
        return Err("the number of points must be between 2 and 2001".into());
    }
    let mut ts: Vec<f64> = (0..n)
        .map(|i| horizon * i as f64 / (n - 1) as f64)
        .collect();
    if date > 0.0 && date <= horizon {
        ts.push(date - 1e-9);
        ts.push(date);
    }
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ts.dedup();
    Ok(ts)
}

fn render(curve: &Curve) -> String {
    serde_json::to_string(curve).expect("curve serializes")
}

/// Prices of a zero-recovery bond on a firm whose solvency is revealed on
/// one announcement date: the state must sit above `k` at time `u` for the
/// bond to survive.  Riskless before the announcement, a lump of default
/// probability exactly at it.
#[cfg_attr(target_arch = "wasm32", wasm_bindgen)]
pub fn announcement_prices(
    k: f64,
    u: f64,
    r: f64,
    t_star: f64,
    w0: f64,
    horizon: f64,
    n: usize,
) -> Result<String, String> {
    let p = MertonParams { k, u, r, t_star };
    if horizon > t_star {
        return Err("horizon must not exceed the quoting horizon t_star".into());
    }
    let alive = DefaultStatus::no_default();
    let maturities = maturity_grid(horizon, n, u)?;
    let values = maturities
        .iter()
        .map(|&tt| merton::price(&p, w0, 0.0, tt, &alive))
        .collect::<Result<Vec<f64>, _>>()
        .map_err(|e| e.to_string())?;
    Ok(render(&Curve {
        label: "bond price",
        jump_at: (u <= horizon).then_some(u),
        maturities,
        values,
    }))
}

/// Survival probabilities of a firm defaulting when its distance to
/// default first touches a barrier that steps from `d0` to `du` at time
/// `u`.  An upward step swallows every path sitting between the two levels,
/// so the curve drops at `T = u`.
#[cfg_attr(target_arch = "wasm32", wasm_bindgen)]
pub fn survival_curve(d0: f64, du: f64, u: f64, horizon: f64, n: usize) -> Result<String, String> {
    let p = BlackCoxParams { d0, du, u };
    let maturities = maturity_grid(horizon, n, u)?;
    let values = maturities
        .iter()
        .map(|&tt| {
            if tt == 0.0 {
                p.validate().map(|()| 1.0)
            } else {
                blackcox::survival_prob(&p, 0.0, 0.0, tt)
            }
        })
        .collect::<Result<Vec<f64>, _>>()
        .map_err(|e| e.to_string())?;
    Ok(render(&Curve {
        label: "survival probability",
        jump_at: (du > d0 && u <= horizon).then_some(u),
        maturities,
        values,
    }))
}

/// Prices of a zero-recovery bond under a square-root default intensity
/// with one extra hazard atom at `u1`: surviving that date costs a lump
/// `psi1 * X`, so bonds maturing just past it are visibly cheaper.
#[cfg_attr(target_arch = "wasm32", wasm_bindgen)]
#[allow(clippy::too_many_arguments)]
pub fn affine_prices(
    mu0: f64,
    mu1: f64,
    sigma: f64,
    psi1: f64,
    u1: f64,
    x0: f64,
    r: f64,
    horizon: f64,
    n: usize,
) -> Result<String, String> {
    let p = CirParams {
        mu0,
        mu1,
        sigma,
        psi1,
        u1,
    };
    if !(x0 >= 0.0 && x0.is_finite() && r.is_finite()) {
        return Err("x0 must be nonnegative and r finite".into());
    }
    let maturities = maturity_grid(horizon, n, u1)?;
    let values = maturities
        .iter()
        .map(|&tt| cir_closed_form(&p, 0.0, tt).map(|(a, b)| (-r * tt).exp() * (-a - b * x0).exp()))
        .collect::<Result<Vec<f64>, _>>()
        .map_err(|e| e.to_string())?;
    Ok(render(&Curve {
        label: "bond price",
        jump_at: (u1 <= horizon).then_some(u1),
        maturities,
        values,
    }))
}

//! Classical Runge–Kutta integration backward in time, with prescribed
//! state jumps at event times.

use crate::error::{Error, Result};
use crate::numerics::grid::Grid;

/// Solution of a backward ODE with jumps, stored right-continuously.
///
/// `values[i]` is the solution *at* `times[i]` under the right-continuous
/// convention.  At an event time the solution also has a distinct left
/// limit, stored in `pre_event[i]`: it equals the right-continuous value
/// plus the prescribed jump increment, and it is the state from which the
/// integration continues backward below the event.
#[derive(Debug, Clone)]
pub struct JumpedPath {
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
    pre_event: Vec<Option<Vec<f64>>>,
}

impl JumpedPath {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    /// Right-continuous value at grid index `i`.
    pub fn value(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    /// Left limit at grid index `i`.  Away from events the path is
    /// continuous and this coincides with `value(i)`.
    pub fn left_limit(&self, i: usize) -> &[f64] {
        self.pre_event[i].as_deref().unwrap_or(&self.values[i])
    }

    /// True if an event (jump) is recorded at grid index `i`.
    pub fn has_event(&self, i: usize) -> bool {
        self.pre_event[i].is_some()
    }
}

/// Integrates `dy/dt = rhs(t, y)` *backward* from `terminal` at
/// `terminal_time` down to the start of `grid`, applying the prescribed
/// state jumps.
///
/// `terminal_time` must be the last grid point.  Each jump `(u, inc)` must
/// sit exactly on a grid point with `u <= terminal_time`; when the backward
/// sweep reaches `u`, the left limit `y(u-) = y(u) + inc` is recorded and
/// integration continues from it.  A jump at `terminal_time` itself adjusts
/// the terminal state the same way.  Blow-up is reported with the time at
/// which the state first became non-finite.
pub fn rk4_backward_with_jumps<F>(
    mut rhs: F,
    terminal: &[f64],
    terminal_time: f64,
    jumps: &[(f64, Vec<f64>)],
    grid: &Grid,
) -> Result<JumpedPath>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let dim = terminal.len();
    if dim == 0 {
        return Err(Error::invalid("terminal state must be non-empty"));
    }
    let last = grid.len() - 1;
    match grid.index_of(terminal_time) {
        Some(i) if i == last => {}
        _ => {
            return Err(Error::invalid(format!(
                "terminal_time {terminal_time} must be the last grid point {}",
                grid.last()
            )))
        }
    }
    // Map each jump onto its grid index up front.
    let mut jump_at: Vec<Option<&[f64]>> = vec![None; grid.len()];
    for (u, inc) in jumps {
        let i = grid
            .index_of(*u)
            .ok_or_else(|| Error::invalid(format!("jump time {u} is not a grid point")))?;
        if inc.len() != dim {
            return Err(Error::invalid(format!(
                "jump at {u} has dimension {}, state has {dim}",
                inc.len()
            )));
        }
        if jump_at[i].is_some() {
            return Err(Error::invalid(format!("duplicate jump time {u}")));
        }
        jump_at[i] = Some(inc.as_slice());
    }

    let times = grid.points().to_vec();
    let mut values = vec![vec![0.0; dim]; grid.len()];
    let mut pre_event: Vec<Option<Vec<f64>>> = vec![None; grid.len()];

    let mut y = terminal.to_vec();
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];

    for i in (0..=last).rev() {
        let t = times[i];
        values[i].copy_from_slice(&y);
        if let Some(inc) = jump_at[i] {
            let pre: Vec<f64> = y.iter().zip(inc).map(|(a, b)| a + b).collect();
            pre_event[i] = Some(pre.clone());
            y = pre;
        }
        if i == 0 {
            break;
        }
        // One RK4 step from times[i] down to times[i-1] (negative h).
        let h = times[i - 1] - t;
        rhs(t, &y, &mut k1);
        for j in 0..dim {
            tmp[j] = y[j] + 0.5 * h * k1[j];
        }
        rhs(t + 0.5 * h, &tmp, &mut k2);
        for j in 0..dim {
            tmp[j] = y[j] + 0.5 * h * k2[j];
        }
        rhs(t + 0.5 * h, &tmp, &mut k3);
        for j in 0..dim {
            tmp[j] = y[j] + h * k3[j];
        }
        rhs(t + h, &tmp, &mut k4);
        for j in 0..dim {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { time: times[i - 1] });
        }
    }

    Ok(JumpedPath {
        times,
        values,
        pre_event,
    })
}

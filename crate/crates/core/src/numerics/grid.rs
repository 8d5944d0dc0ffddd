//! Time grids with exactly-representable event times.

use crate::error::{Error, Result};

/// A strictly increasing grid of times.
///
/// Event times (atom dates, barrier jump dates) must be grid points *exactly*
/// so that jump handling never depends on floating-point coincidence.  The
/// constructors therefore build each segment between events by affine
/// interpolation of its endpoints rather than by accumulating steps.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    /// Builds a grid from explicit points; they must be finite and strictly
    /// increasing.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::invalid("grid needs at least two points"));
        }
        for w in points.windows(2) {
            if !(w[0].is_finite() && w[1].is_finite() && w[0] < w[1]) {
                return Err(Error::invalid(format!(
                    "grid points must be finite and strictly increasing near {} -> {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Grid { points })
    }

    /// Uniform grid with `n_steps` steps over `[a, b]`.
    pub fn uniform(a: f64, b: f64, n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::invalid("grid needs at least one step"));
        }
        let points = (0..=n_steps)
            .map(|k| a + (b - a) * (k as f64 / n_steps as f64))
            .collect();
        Grid::from_points(points)
    }

    /// Grid over `[a, b]` whose steps are at most `target_dt`, containing
    /// every event in `events` that falls strictly inside `(a, b)` as an
    /// exact grid point.  Events outside the interval are ignored.
    pub fn with_events(a: f64, b: f64, target_dt: f64, events: &[f64]) -> Result<Self> {
        if !(target_dt > 0.0) {
            return Err(Error::invalid("target_dt must be positive"));
        }
        if !(a < b) {
            return Err(Error::invalid(format!("need a < b, got [{a}, {b}]")));
        }
        let mut breaks: Vec<f64> = vec![a];
        let mut inner: Vec<f64> = events.iter().copied().filter(|&u| u > a && u < b).collect();
        inner.sort_by(|x, y| x.partial_cmp(y).unwrap());
        inner.dedup();
        breaks.extend(inner);
        breaks.push(b);

        let mut points = Vec::new();
        for w in breaks.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let n = ((hi - lo) / target_dt).ceil().max(1.0) as usize;
            for k in 0..n {
                points.push(lo + (hi - lo) * (k as f64 / n as f64));
            }
        }
        points.push(b);
        Grid::from_points(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.points[0]
    }

    pub fn last(&self) -> f64 {
        *self.points.last().unwrap()
    }

    /// Index of the grid point equal to `t` (within a 1e-9 absolute-or-
    /// relative tolerance), if any.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let i = self.points.partition_point(|&p| p < t - Self::tol(t));
        if i < self.points.len() && (self.points[i] - t).abs() <= Self::tol(t) {
            Some(i)
        } else {
            None
        }
    }

    /// True if `t` is a grid point.
    pub fn contains(&self, t: f64) -> bool {
        self.index_of(t).is_some()
    }

    fn tol(t: f64) -> f64 {
        1e-9 * t.abs().max(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unordered_points() {
        assert!(Grid::from_points(vec![0.0, 1.0, 1.0]).is_err());
        assert!(Grid::from_points(vec![0.0, 2.0, 1.0]).is_err());
        assert!(Grid::from_points(vec![0.0]).is_err());
    }

    #[test]
    fn events_are_exact_grid_points() {
        // 0.3 is not representable as a multiple of any binary step, so this
        // only passes if the constructor honors events exactly.
        let g = Grid::with_events(0.0, 2.0, 0.07, &[0.3, 1.0]).unwrap();
        let i = g.index_of(0.3).expect("0.3 must be on the grid");
        assert_eq!(g.points()[i], 0.3);
        let j = g.index_of(1.0).expect("1.0 must be on the grid");
        assert_eq!(g.points()[j], 1.0);
        assert_eq!(g.first(), 0.0);
        assert_eq!(g.last(), 2.0);
        for w in g.points().windows(2) {
            assert!(w[1] - w[0] <= 0.07 + 1e-12);
        }
    }

    #[test]
    fn events_outside_range_are_ignored() {
        let g = Grid::with_events(0.0, 1.0, 0.25, &[1.5, -0.2]).unwrap();
        assert!(!g.contains(1.5));
        assert_eq!(g.last(), 1.0);
    }

    #[test]
    fn uniform_endpoints_are_exact() {
        let g = Grid::uniform(0.0, 1.0, 3).unwrap();
        assert_eq!(g.points().len(), 4);
        assert_eq!(g.first(), 0.0);
        assert_eq!(g.last(), 1.0);
    }

    #[test]
    fn index_lookup_tolerates_roundoff() {
        let g = Grid::uniform(0.0, 1.0, 10).unwrap();
        assert_eq!(g.index_of(0.3 + 1e-12), g.index_of(0.3));
        assert!(g.index_of(0.35).is_none());
    }
}

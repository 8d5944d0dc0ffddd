//! Finite-difference stencils, both on closures and on stored grid values.

/// Second-order central first derivative: `(f(x+h) - f(x-h)) / (2h)`.
pub fn central<F: Fn(f64) -> f64>(f: &F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Second-order central second derivative.
pub fn second<F: Fn(f64) -> f64>(f: &F, x: f64, h: f64) -> f64 {
    (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
}

/// Fourth-order central first derivative (five-point stencil).
pub fn central4<F: Fn(f64) -> f64>(f: &F, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

/// Fourth-order first derivative at index `i` of uniformly spaced samples
/// `values` with spacing `h`.  Returns `None` when the centered five-point
/// window does not fit.
pub fn deriv4_on_grid(values: &[f64], i: usize, h: f64) -> Option<f64> {
    if i < 2 || i + 2 >= values.len() {
        return None;
    }
    Some((values[i - 2] - 8.0 * values[i - 1] + 8.0 * values[i + 1] - values[i + 2]) / (12.0 * h))
}

//! Pricing and no-arbitrage analysis for defaultable bonds whose default time
//! may be announced in advance (predictable) or arrive totally inaccessibly.
//!
//! The framework prices zero-recovery bonds against a *risky forward measure*:
//! Lebesgue measure plus finitely many weighted atoms at candidate default
//! dates.  Forward curves have an absolutely continuous part and discrete
//! values sitting on the atoms; the compensator of the default indicator may
//! likewise charge the atoms.  No-arbitrage pins the curve down through two
//! drift conditions — a short-rate consistency condition (with a distinct
//! atom form) and a quadratic Heath–Jarrow–Morton-type restriction on the
//! absolutely continuous dynamics — and [`noarb`] audits both numerically.
//!
//! Three concrete model families are implemented: a Merton-style structural
//! model defaulting only at a single announcement date ([`merton`]), a
//! Black–Cox first-passage model with a barrier that jumps at the
//! announcement date ([`blackcox`]), and affine intensity models with hazard
//! atoms, including a Cox–Ingersoll–Ross specification with a piecewise
//! closed form ([`affine`]).  [`mc`] provides the Monte Carlo machinery used
//! to verify every closed form against a simulation of the same object.

// Validations spell `!(x > 0.0)` rather than `x <= 0.0` so that NaN fails
// them; the matrix kernels index several arrays per iteration; published
// approximation coefficients and independently computed reference values
// keep their source digits verbatim.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::excessive_precision
)]

pub mod affine;
pub mod blackcox;
pub mod curves;
pub mod error;
pub mod mc;
pub mod measure;
pub mod merton;
pub mod noarb;
pub mod numerics;

pub use error::{Error, Result};

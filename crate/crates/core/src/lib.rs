//! Auditing differential privacy from a single run of a mechanism.
//!
//! The auditor randomly includes or excludes `m` canaries, runs the mechanism
//! once, guesses which canaries were included, and converts the number of
//! correct guesses into a p-value for an `(ε, δ)`-DP null hypothesis. Inverting
//! that test gives a statistically valid lower bound on `ε`.
//!
//! * [`bounds`]: binomial tails, the dual-LP `δ` correction, p-values and the
//!   `ε` lower-bound search, plus the generalization and mutual-information
//!   bounds that share the same machinery.
//! * [`mechanisms`]: simulated mechanisms (randomized response, Gaussian
//!   report, the pathological worst case) and closed-form accounting.
//! * [`auditor`]: the one-run pipeline: selection, guesses, counting, sweeps.
//! * [`dpsgd`]: a small DP-SGD trainer with Dirac canaries and white-box or
//!   black-box scoring.

// `!(x > 0.0)` is deliberate: it rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod auditor;
pub mod bounds;
pub mod dpsgd;
mod error;
mod numeric;
pub mod mechanisms;

pub use error::{AuditError, Result};

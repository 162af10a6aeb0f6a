//! Blow-up criteria and a priori growth estimates for quasilinear elliptic
//! inequalities of the form
//!
//! ```text
//! div A(x, Du) + b(x) |Du|^(p-1) >= q(x) g(u)
//! ```
//!
//! The crate classifies a problem (every solution trivial, or which growth
//! estimate on `M(r; u)` holds), evaluates those estimates numerically and
//! symbolically, and checks closed-form radial solutions against the radial
//! form of the inequality.
//!
//! Module map:
//!
//! * [`powerlog`]: exact algebra on `c r^a log^b r (log log r)^d`.
//! * [`envelopes`]: annulus envelopes `f_sigma`, `q_sigma` and `g_theta`.
//! * [`quadrature`]: adaptive quadrature and tail-convergence classification.
//! * [`criteria`]: theorem dispatch producing a [`criteria::Verdict`].
//! * [`estimates`]: growth bounds on `M(r; u)` and their symbolic rates.
//! * [`radial`]: residuals, witness verification and shooting.
//! * [`cli`]: scenario runner behind the `osserman-lab` binary.

// `!(x >= y)` is used on purpose throughout: NaN must fail the check.
// Index loops mirror the quadrature tables and elimination they implement.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod config;
pub mod criteria;
pub mod envelopes;
pub mod estimates;
pub mod par;
pub mod powerlog;
pub mod quadrature;
pub mod radial;

pub use criteria::{evaluate, Outcome, Verdict};
pub use envelopes::{Nonlinearity, Profile, ProblemSpec};
pub use powerlog::{PowerLogTerm, Rational};

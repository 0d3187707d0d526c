//! Tail bounds and simulation for perpetuities R = q + M R with a
//! constant payment q > 0 and a multiplier M supported in [0, 1].
//!
//! The library brackets ln P(R >= x) between a survival-path lower
//! bound ([`survpath`]) and a Chernoff upper bound certified through an
//! iteration inequality on moment generating functions ([`chernoff`]),
//! simulates the stationary law by Monte Carlo ([`engine`]), and checks
//! when two multiplier laws share tail asymptotics ([`equiv`]).

// `!(x > 0.0)` is the NaN-rejecting form of every domain check here, and
// guards like `if alpha == 1.0` stand in for float-literal patterns,
// which carry a future-compatibility lint of their own.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::redundant_guards)]

pub mod chernoff;
pub mod engine;
pub mod equiv;
pub mod error;
pub mod mlaw;
pub mod numerics;
pub mod phi;
pub mod special;
pub mod survpath;

pub use chernoff::{
    bernoulli_domination_margin, chernoff_upper_log, default_b_grid, find_min_b, geometric_grid,
    geometric_mgf, iteration_lhs_log, iteration_margin, verify_iteration, BoundReport,
};
pub use engine::{
    empirical_log_tail, ensemble, Ensemble, PerpetuityConfig, TailEstimate, DEFAULT_DEPTH,
};
pub use equiv::{check_equivalence, EquivReport, EquivVerdict};
pub use error::{Error, Result};
pub use mlaw::{Law, MLaw};
pub use phi::PhiFamily;
pub use survpath::{
    c0_constant, c0_root, default_c_grid, hosp_ratio, lower_bound_log, optimize_c,
    tail_ratio_curve, LowerBound, LowerBoundQuery, Normalizer, TailCurve,
};

//! Two-way fixed-effects regressions with state-clustered inference.

pub mod design;
pub mod estimate;
pub mod linalg;
pub mod ols;
pub mod placebo;
pub mod table;
pub mod vcov;

pub use design::{build_design, Design, EventWindow, GroupInteraction, RegressionSpec, SubsetFilter, TermKind};
pub use estimate::{
    critical_value, estimate_ddd, estimate_did, estimate_event_study, fit, AbsorbedCounts, CoefficientRow,
    Diagnostics, RegressionResult,
};
pub use linalg::{DenseMatrix, GreedyQr};
pub use ols::{ols, OlsFit};
pub use placebo::{placebo_suite, replicate, wilson_interval, PlaceboConfig, PlaceboReport};
pub use table::{Column, Factor, Table};
pub use vcov::{cluster_vcov, Adjustment};

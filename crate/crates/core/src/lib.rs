//! Psychometric validity screening for verbalised confidence signals.
//!
//! The crate ingests per-trial `(correctness, confidence)` records, runs the
//! ordered validity screen (degeneracy pre-check, cell counts, TRIN, F_p, L,
//! RBS, point-biserial), computes the accompanying metric suite (ceiling
//! rate, AUROC₂ with bootstrap interval, cross-validated ridge R², rank
//! correlations, split-half stability, parse-failure diagnostics) and emits
//! tiered reports.
//!
//! The numerical kernels in [`stats`] are generic over [`Real`]; the domain
//! layer works in `f64` via the aliases below.

pub mod error;
pub mod ingest;
pub mod metrics;
pub mod report;
pub mod scalar;
pub mod screening;
pub mod stats;
pub mod synth;
pub mod trial;

pub use error::{Error, Result};
pub use scalar::Real;

/// Binomial / bootstrap interval in the domain precision.
pub type Interval = stats::Interval<f64>;
/// Correlation estimate with p-value in the domain precision.
pub type Correlation = stats::Correlation<f64>;
/// Ridge cross-validation summary in the domain precision.
pub type RidgeCv = stats::RidgeCv<f64>;

pub use ingest::{evaluate_all, group_cells, read_trials, write_trials, CellResult, EvalConfig, TrialFormat};
pub use metrics::MetricsReport;
pub use report::{emit_report, ReportFormat};
pub use screening::{screen_cell, ScreeningConfig, ScreeningReport, Tier};
pub use synth::{generate_cell, GenSpec, SyntheticCell};
pub use trial::{binarize, build_contingency, Binary, Cell, Condition, ContingencyTable, ParseStatus, TrialRecord};

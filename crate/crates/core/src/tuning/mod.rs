//! Hyperparameter selection under three constraints.
//!
//! - held-out samples must lie inside the boundary
//! - at most a few support vectors may be interior to the data (overfit check)
//! - points just past the observed joint limits must lie outside (underfit check)

mod constraints;
mod edge;
mod grid;

pub use constraints::{
    constraint_negative_exclusion, constraint_test_inclusion, make_negative_samples, ConstraintResult,
    DEFAULT_NEGATIVE_OFFSET,
};
pub use edge::{
    edge_sv_test, m_esv_check, median_nearest_neighbor_distance, EdgeKind, EdgeTestConfig, EdgeVerdict,
    InteriorLimit, MEsvConfig, MEsvReport,
};
pub use grid::{
    evaluation_lattice, grid_search, AxisRange, CellReport, FailureHistogram, GridConfig, RoundAxes, SelectedPair,
    TuningReport, REPORT_VERSION,
};

//! Distant representatives for axis-aligned rectangles under L1, L2 and L∞.
//!
//! Given rectangles `R_1, …, R_n`, choose a point in each so that the
//! minimum pairwise distance is as large as possible. [`placement`] decides
//! approximately whether a separation δ is achievable: it either returns
//! points at least δ apart or certifies that the optimum is below `f·δ`
//! (`f` = 5, √34, 6 for L1, L2, L∞). The optimizers turn this into
//! constant-factor approximation algorithms. Arithmetic is exact throughout.
//!
//! Instances are stored with doubled coordinates so that rectangle centres
//! are integral; every δ inside the library is in these scaled units.

pub mod generate;
pub mod geometry;
pub mod grid;
pub mod matching;
pub mod numeric;
pub mod optimizer;
pub mod oracle;
pub mod placement;

pub use geometry::{
    distance, rect_center, verify_representatives, IngestError, Instance, Norm, Point, Rect, ShapeKind, Violation,
};
pub use grid::{BlockerShape, GridContext, GridError, Probe};
pub use matching::{hopcroft_karp, Bipartite, Matching};
pub use numeric::{format_rational, parse_rational, Dual, Field, QuadScalar, Rational};
pub use placement::{critical_probe, placement, CriticalProbe, PlacementFailure, PlacementOutcome};
pub use optimizer::{
    candidate_set_explicit, fallback_one_over_n, matrix_select, optimize, optimize_l1_l2, optimize_linf,
    CandidateMatrix, Certificate, OptimizeError, OptimizeResult,
};
pub use oracle::{exact_linf_optimum, lower_bound_search, next_event, OracleError, OracleResult};

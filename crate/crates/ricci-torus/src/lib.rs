//! Conformal Ricci flow on the square torus.
//!
//! The library evolves metrics g(t) = u(t) g_flat on R^2/Z^2 under the
//! conformal Ricci flow, builds the thick-skeleton initial data whose flows
//! converge to the flat metric of area two, measures intrinsic distances with
//! lattice shortest paths, and checks the quantitative curvature and distance
//! estimates along the way.

pub mod diagnostics;
pub mod error;
pub mod fft;
pub mod field;
pub mod flow;
pub mod metric;
pub mod skeleton;

pub use diagnostics::{
    attach_distances, convergence_to_double, fit_beta, fit_c0, gauss_curvature, record,
    ConvergenceRow, DiagnosticsRecord, DistanceInputs, FitResult,
};
pub use error::{Error, Result};
pub use flow::{
    evolve, init_state, stable_dt, step_imex, step_rk4, FlowState, FlowTrace, Scheme,
    SchemeConfig, GUARD_TOL,
};
pub use field::{GridSpec, LaplacianScheme, ScalarField};
pub use metric::{
    conformal_distance_matrix, flat_distance, sample_points, DistanceMatrix, PointSet,
    StencilSpec, TorusPoint,
};
pub use skeleton::{
    build_initial_factor, build_skeleton, calibrate_width, distance_to_skeleton,
    skeleton_distance_field, Alignment, CalibrationResult, GeodesicSegment, Skeleton,
    SkeletonMode,
};

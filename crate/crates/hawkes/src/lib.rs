//! Multivariate spatio-temporal Hawkes point-process models: triggering
//! kernels with optional cross-mark spatial shifts and covariate-driven
//! nonstationarity, grid-quadrature maximum likelihood, stability-preserving
//! parametrization of the productivity matrix, asymptotic standard errors,
//! information criteria, simulation, and diagnostics.

pub mod background;
pub mod catalog;
pub mod constraints;
pub mod covariate;
pub mod error;
pub mod geo;
pub mod kernel;
pub mod likelihood;
pub mod model;
pub mod numeric;
pub mod quadrature;

pub use background::BackgroundSpec;
pub use catalog::{jitter_duplicates, EventCatalog, EventRecord};
pub use constraints::{
    build_branching_matrix, spectral_radius2, spectral_radius_general, BranchingBlock,
    ProductivityMatrix2, Transform, TransformBlock, TransformLayer,
};
pub use covariate::{
    apply_standardization, standardize_covariate, CovariateField, CovariateLookup,
    StandardizeMode, Standardization,
};
pub use error::{HawkesError, Result};
pub use geo::{Projection, SpatialWindow};
pub use kernel::{
    eval_g1, eval_g1_nonstationary, eval_g2, eval_g3, kernel_sum, Kernel, KernelMatrix,
    NonstatVariant, TemporalFamily,
};
pub use likelihood::{
    conditional_intensity, expected_counts, expected_daily_series, holdout_log_likelihood,
    log_likelihood, penalized_neg_log_likelihood, ExpectedCounts, LikelihoodReport,
};
pub use model::ModelSpec;
pub use quadrature::{
    build_quadrature, build_quadrature_interval, QuadratureGrid, SpatialNode, TemporalNode,
};
pub mod optimize;
pub mod template;

pub use template::{preset, BackgroundDef, BackgroundForm, EntryDef, InternalParam, KernelForm, ModelTemplate, ReportedParam, Role, Shift};
pub mod estimation;

pub use estimation::{
    asymptotic_ses, compare_models, fit, information_criteria, ComparisonRow, FitOptions,
    FitResult, FitSummary, ParamEstimate,
};
pub mod simulate;

pub use simulate::{simulate_branching, simulate_thinning, EdgePolicy, SimConfig};
pub mod diagnostics;
pub mod io;

pub use diagnostics::{daily_counts, lag_summary, pair_lag_histogram, LagSummary, PairLagHistogram};
pub use io::{
    assemble_catalog, read_covariate_csv, read_events_csv, read_polygon_json, write_events_csv,
    DateOrDay, Ingest, IngestOptions, RawEvent,
};

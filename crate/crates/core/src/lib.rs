//! A desk-scale numerical laboratory for the occupation-time and local-time
//! identities of continuous semimartingales.
//!
//! The crate simulates paths with exact transition laws, estimates local-time
//! fields and sheets by occupation density, computes grid p-variations and
//! sliding-average mollifiers, and compares difference-quotient estimators
//! against Stieltjes integrals over local time across epsilon ladders. All
//! randomness is seed-derived per path, so every experiment is reproducible
//! bit-for-bit at any thread count.

// validations use `!(x > 0.0)` so that NaN parameters are rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod functions;
pub mod grid;
pub mod integrals;
pub mod local_time;
pub mod report;
pub mod rng;
pub mod runner;
pub mod simulate;
pub mod sum;
pub mod variation;

pub use config::{parse_config, render_config, Experiment, ExperimentConfig};
pub use error::{Error, Result};
pub use functions::{SpaceFn, TestFunction, TimeFn};
pub use grid::{make_time_grid, realized_qv, Path, SpaceGrid, TimeGrid};
pub use integrals::{
    identity_check, lhs_backward, lhs_forward, lhs_symmetric, occupation_formula_check,
    occupation_formula_dense, stieltjes_space_integral, theorem_convergence, two_param_integral,
    two_param_integral_dense, EstimatorResult, SignConvention, Variant,
};
pub use local_time::{
    conservation_defect, local_time_sheet, occupation_local_time, tanaka_local_time,
    LocalTimeField, LocalTimeSheet,
};
pub use report::{summarize, to_csv, to_json, ReportRow, SummaryRow, CSV_HEADER};
pub use rng::SeedPolicy;
pub use runner::{run_experiment, run_with_threads, selftest};
pub use simulate::{deterministic_path, simulate, DeterministicName, ProcessSpec, QvMode};
pub use variation::{mollifier_contraction_check, mollify_1d, mollify_2d, p_variation, pq_variation_grid};

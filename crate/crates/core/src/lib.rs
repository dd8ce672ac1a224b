//! Relaxations, rounding procedures and verification oracles for the Nash
//! social welfare problem with matroid-based submodular valuations.

pub mod analysis;
pub mod contention;
pub mod error;
pub mod instance;
pub mod matroid;
pub mod relaxation;
pub mod report;
pub mod rng;
pub mod rounding;
pub mod saddle;
pub mod stats;
pub mod valuation;

pub use analysis::{
    brute_force_opt, count_constrained_mappings, distinct_tuple_sum, expected_product_coverage,
    gurvits_check, mc_expected_product, GurvitsReport, MappingProblem, OptResult,
};
pub use contention::{Crs, CrsSpec, Scheme};
pub use error::{NswError, Result};
pub use instance::{generate, parse_instance, Family, GenParams, Instance, Metadata};
pub use matroid::{Matroid, MatroidKind, MatroidSpec, PolytopeCheck};
pub use relaxation::{
    build_program, build_program_as, dual_separation, feasible, log_objective, DualPoint,
    FractionalSolution, ProgramKind, ProgramSpec,
};
pub use report::{run_pipeline, BoundCheck, CheckStatus, PipelineConfig, RunReport};
pub use rounding::{
    coupled_round, nsw_value, round, Allocation, Procedure, Rounder, RoundingTrace,
};
pub use saddle::{
    inner_inf, inner_inf_matrix, primal_supergradient, solve, SolveConfig, SolveResult,
};
pub use stats::MCEstimate;
pub use valuation::{Valuation, ValuationClass, ValuationSpec};

//! Sharp bounds on long-term treatment effects when short-term outcomes are
//! observed in a randomized experiment and both short- and long-term
//! outcomes are observed in an observational sample.
//!
//! The identified set is parametrized by the law `gamma` of the short-term
//! potential outcomes and the temporal link `m_d(s) = E[Y(d) | S(d) = s]`.

pub mod assumptions;
pub mod dgp;
pub mod diagnostics;
pub mod error;
pub mod estimation;
pub mod fixtures;
pub mod identified;
pub mod lp;
pub mod moments;
pub mod oracle;
pub mod solver;

pub use assumptions::{fiber_bounds, maximal_selector, minimal_selector, AssumptionSpec, Direction, FiberDescription, LinearSystem};
pub use error::{Error, Result};
pub use identified::{
    constraint_count, gamma_lower_bound, gamma_lower_bounds, latent_propensity, lte_functional, m_data_bounds,
    membership, validate_moments, ValidationReport,
};
pub use lp::Sense;
pub use moments::{
    Arm, ExperimentalMoments, Interval, ObservationalMoments, PerArm, ProblemMoments, ShortTermLaw, Slack,
    SupportSpec, TemporalLink,
};
pub use solver::{solve_bounds, BoundsResult, Scope, SolveStatus, SolverConfig, Witness};
pub use dgp::DgpSpec;
pub use diagnostics::{amplification_report, luc_trivial_mean_check, manski_formula_bounds, misspecification_distance};
pub use estimation::{
    empirical_moments, feasibility_relaxation, plug_in_bounds, ExperimentalRecord, ObservationalRecord,
};
pub use oracle::{grid_identified_set, oracle_compare, CertificationReport, OracleResult};

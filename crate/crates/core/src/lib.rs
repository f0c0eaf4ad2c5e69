//! Verification engine for entropy-based tests of multipartite correlations
//! and state-independent contextuality.
//!
//! The crate is organized around a small calculus: products of binary ±1
//! variables compose by parity ([`dist::ProductTerm`]), the distance of a
//! product is the entropy (or one minus the expectation) of its outcome
//! ([`dist::JointDistribution::delta`]), and inequalities between such
//! distances are certified by triangle-inequality chains ([`chain`]).
//! Quantum scenarios are evaluated exactly with a dense few-qubit simulator
//! ([`qsim`]), classical bounds by exhaustive enumeration ([`classical`]),
//! and maximal violations recovered by derivative-free search
//! ([`optimize`]).

pub mod chain;
pub mod classical;
pub mod dist;
mod families;
pub mod inequality;
pub mod optimize;
pub mod qsim;
pub mod scenario;

pub use dist::{
    binary_entropy, DistanceKind, JointDistribution, ProductTerm, VariableId,
};
pub use inequality::{
    build_cabello_correlation, build_mermin_correlation, build_multipartite_entropic,
    build_pm_entropic, build_tripartite_entropic, canonical_distribution, evaluate,
    parse_inequality, pm_mixing_violation, standard_multipartite_angles, CanonicalDistribution,
    EntropicInequality, EvaluationReport,
};
pub use scenario::{AngleConfig, PartySettingLayout, Scenario};

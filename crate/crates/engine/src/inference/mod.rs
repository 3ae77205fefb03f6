pub mod brute;
pub mod eliminate;
pub mod enumerate;
pub mod pairs;
pub mod policy;
pub mod propagate;
pub mod solve;

use thiserror::Error;

use crate::diagram::DiagramError;
use crate::factor::FactorError;

pub use brute::{joint_brute_force, JOINT_GUARD};
pub use eliminate::sum_product;
pub use enumerate::{enumerate_policies, policy_count, POLICY_GUARD};
pub use policy::{DecisionRule, Policy, SolveResult};
pub use propagate::{JunctionTree, Posterior};
pub use solve::{expected_utility_of_policy, solve_id, solve_id_with_evidence, TIE_TOLERANCE};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InferenceError {
    #[error(transparent)]
    Diagram(#[from] DiagramError),
    #[error(transparent)]
    Factor(#[from] FactorError),
    #[error("evidence has zero probability")]
    ContradictoryEvidence,
    #[error("state space of {size} exceeds the limit of {limit}")]
    StateSpaceTooLarge { size: f64, limit: f64 },
    #[error("policy space of {size} exceeds the limit of {limit}")]
    PolicySpaceTooLarge { size: f64, limit: f64 },
    #[error("policy has no rule for decision `{0}`")]
    IncompletePolicy(String),
    #[error("network still contains decision `{0}`")]
    HasDecisions(String),
    #[error("evidence on `{0}`, which is not observed before the first decision")]
    EvidenceNotObservable(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
}

pub type Result<T> = std::result::Result<T, InferenceError>;

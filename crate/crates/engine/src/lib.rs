//! Discrete factor algebra, influence diagrams, junction-tree propagation
//! and decision optimization by strong-order variable elimination.

pub mod diagram;
pub mod factor;
pub mod graph;
pub mod inference;
pub mod random;
pub mod sampling;

pub use diagram::{DiagramBuilder, DiagramError, InfluenceDiagram, NodeId, NodeKind};
pub use factor::{ArgMax, DiscreteVariable, Evidence, Factor, FactorError, Table, Var};
pub use inference::{InferenceError, JunctionTree, Policy, Posterior, SolveResult};

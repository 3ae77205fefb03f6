pub mod dsep;
pub mod junction;
pub mod order;
pub mod triangulate;

pub use dsep::{d_separated, Dag};
pub use junction::{build_junction_tree, CliqueEdge, CliqueTree};
pub use order::{information_blocks, is_strong_order, strong_order, strong_triangulation, InformationBlocks};
pub use triangulate::{
    filled_graph, moralize, moralize_for_decisions, triangulate, triangulate_in_blocks, EliminationOrder,
    Heuristic, OrderKind, Triangulation, UGraph,
};

//! Forward (ancestral) sampling.

use rand::Rng;

use crate::diagram::{InfluenceDiagram, NodeId, NodeKind};

/// Draws one joint configuration in topological order. Decisions take the
/// value returned by `decide(node, states)`, where `states` holds every
/// node sampled so far (indexed by node id). Utility entries stay 0.
pub fn sample_forward<R: Rng + ?Sized>(
    id: &InfluenceDiagram,
    rng: &mut R,
    mut decide: impl FnMut(NodeId, &[usize]) -> usize,
) -> Vec<usize> {
    let mut states = vec![0usize; id.len()];
    for v in id.topological_order() {
        match id.kind(v) {
            NodeKind::Chance => {
                let row = row_index(id, v, &states);
                states[v] = sample_row(rng, row);
            }
            NodeKind::Decision => states[v] = decide(v, &states),
            NodeKind::Utility => {}
        }
    }
    states
}

/// The conditional distribution of chance node `v` given its parents'
/// states in `states`.
pub fn row_index<'a>(id: &'a InfluenceDiagram, v: NodeId, states: &[usize]) -> &'a [f64] {
    let cpt = id.cpt(v).expect("chance CPT");
    let k = id.cardinality(v);
    let row = id.parents(v).iter().fold(0, |acc, &p| acc * id.cardinality(p) + states[p]);
    &cpt.values()[row * k..(row + 1) * k]
}

/// Inverse-CDF draw from a normalized row.
pub fn sample_row<R: Rng + ?Sized>(rng: &mut R, row: &[f64]) -> usize {
    let x: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in row.iter().enumerate() {
        acc += p;
        if x < acc {
            return i;
        }
    }
    row.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

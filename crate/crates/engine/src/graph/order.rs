//! Strong elimination orders for influence diagrams.
//!
//! With decisions `D_1 < … < D_m`, let `I_0` be the chance variables
//! observed before `D_1`, `I_j` those first observed between `D_j` and
//! `D_{j+1}`, and `I_m` the chance variables never observed. A strong order
//! eliminates `I_m, D_m, I_{m-1}, …, D_1, I_0`. No-forgetting is implicit:
//! whatever is known at `D_j` stays known at every later decision.

use std::collections::BTreeSet;

use crate::diagram::{topo_sort, DiagramError, InfluenceDiagram, NodeId, NodeKind, Result};

use super::triangulate::{
    moralize_for_decisions, triangulate_in_blocks, EliminationOrder, Heuristic, OrderKind,
    Triangulation,
};

/// Temporal partition of the non-utility nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InformationBlocks {
    /// Decisions in temporal order.
    pub decisions: Vec<NodeId>,
    /// `observed[j]` is `I_j` for `j = 0..=m`; `observed[m]` is never observed.
    pub observed: Vec<Vec<NodeId>>,
}

impl InformationBlocks {
    /// Every chance or decision node known when `decisions[j]` is taken.
    pub fn known_at(&self, j: usize) -> Vec<NodeId> {
        let mut out: BTreeSet<NodeId> = BTreeSet::new();
        for block in &self.observed[..=j] {
            out.extend(block.iter().copied());
        }
        out.extend(self.decisions[..j].iter().copied());
        out.into_iter().collect()
    }

    /// Blocks in elimination order, first eliminated first.
    pub fn elimination_blocks(&self) -> Vec<Vec<NodeId>> {
        let m = self.decisions.len();
        let mut out = vec![self.observed[m].clone()];
        for j in (0..m).rev() {
            out.push(vec![self.decisions[j]]);
            out.push(self.observed[j].clone());
        }
        out
    }
}

/// Partitions the chance nodes by the first decision that observes them.
/// Fails when the information constraints cannot be met by any temporal
/// order (an observation of `D_j` that depends on a later decision).
pub fn information_blocks(id: &InfluenceDiagram) -> Result<InformationBlocks> {
    let decisions = id.decision_order().to_vec();
    let m = decisions.len();
    let mut parents: Vec<Vec<NodeId>> = (0..id.len()).map(|i| id.parents(i).to_vec()).collect();
    for w in decisions.windows(2) {
        parents[w[1]].push(w[0]);
    }
    if let Err(at) = topo_sort(&parents) {
        let name = decisions
            .iter()
            .find(|&&d| is_on_cycle(&parents, d))
            .map_or_else(|| id.name(at).to_string(), |&d| id.name(d).to_string());
        return Err(DiagramError::CyclicInformation(name));
    }
    let mut assigned = vec![false; id.len()];
    let mut observed = vec![Vec::new(); m + 1];
    for (j, &d) in decisions.iter().enumerate() {
        for &p in id.parents(d) {
            if id.kind(p) == NodeKind::Chance && !assigned[p] {
                assigned[p] = true;
                observed[j].push(p);
            }
        }
    }
    for c in id.chance_nodes() {
        if !assigned[c] {
            observed[m].push(c);
        }
    }
    for block in &mut observed {
        block.sort_unstable();
    }
    Ok(InformationBlocks { decisions, observed })
}

fn is_on_cycle(parents: &[Vec<NodeId>], start: NodeId) -> bool {
    let mut seen = vec![false; parents.len()];
    let mut stack: Vec<NodeId> = parents[start].clone();
    while let Some(v) = stack.pop() {
        if v == start {
            return true;
        }
        if !std::mem::replace(&mut seen[v], true) {
            stack.extend(parents[v].iter().copied());
        }
    }
    false
}

/// Strong elimination order with min-fill inside each block, computed on
/// the moral graph without information arcs.
pub fn strong_order(id: &InfluenceDiagram) -> Result<EliminationOrder> {
    Ok(strong_triangulation(id)?.order)
}

/// The strong order together with the cliques it induces.
pub fn strong_triangulation(id: &InfluenceDiagram) -> Result<Triangulation> {
    let blocks = information_blocks(id)?;
    let g = moralize_for_decisions(id);
    let local: Vec<Vec<usize>> = blocks
        .elimination_blocks()
        .into_iter()
        .map(|b| b.into_iter().map(|n| g.vertex_of(n).expect("non-utility node")).collect())
        .collect();
    Ok(triangulate_in_blocks(&g, &local, Heuristic::MinFill, OrderKind::Strong))
}

/// Checks the defining constraints of a strong order for `id`.
pub fn is_strong_order(id: &InfluenceDiagram, order: &[NodeId]) -> Result<bool> {
    let blocks = information_blocks(id)?;
    let pos = |n: NodeId| order.iter().position(|&o| o == n);
    let members: Vec<NodeId> = (0..id.len()).filter(|&i| id.kind(i) != NodeKind::Utility).collect();
    if order.len() != members.len() || members.iter().any(|&n| pos(n).is_none()) {
        return Ok(false);
    }
    for (j, &d) in blocks.decisions.iter().enumerate() {
        let known: BTreeSet<NodeId> = blocks.known_at(j).into_iter().collect();
        let pd = pos(d).expect("member");
        for &v in &members {
            if v == d {
                continue;
            }
            let pv = pos(v).expect("member");
            if known.contains(&v) && pv < pd {
                return Ok(false);
            }
            if !known.contains(&v) && pv > pd {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::DiscreteVariable;

    #[test]
    fn observation_block_is_eliminated_last() {
        let h = DiscreteVariable::indexed("H", 2).unwrap();
        let o = DiscreteVariable::indexed("O", 2).unwrap();
        let d = DiscreteVariable::indexed("D", 2).unwrap();
        let mut b = InfluenceDiagram::builder();
        b.chance(&h, &[], vec![0.5, 0.5]).unwrap();
        b.chance(&o, &[&h], vec![0.9, 0.1, 0.2, 0.8]).unwrap();
        b.decision(&d, &[&o]).unwrap();
        b.utility("U", &[&d, &h], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let id = b.build().unwrap();
        let order = strong_order(&id).unwrap();
        assert_eq!(order.order, vec![0, 2, 1]);
        assert!(is_strong_order(&id, &order.order).unwrap());
        assert!(!is_strong_order(&id, &[2, 0, 1]).unwrap());
    }

    #[test]
    fn cyclic_information_is_rejected() {
        let x = DiscreteVariable::indexed("X", 2).unwrap();
        let d1 = DiscreteVariable::indexed("D1", 2).unwrap();
        let d2 = DiscreteVariable::indexed("D2", 2).unwrap();
        let mut b = InfluenceDiagram::builder();
        b.decision(&d1, &[&x]).unwrap();
        b.decision(&d2, &[]).unwrap();
        b.chance(&x, &[&d2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let id = b.build().unwrap();
        assert!(matches!(strong_order(&id), Err(DiagramError::CyclicInformation(_))));
    }
}

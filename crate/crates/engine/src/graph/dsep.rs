//! Directed acyclic graphs and d-separation by reachability ("Bayes ball").

use std::collections::{BTreeSet, VecDeque};

use crate::diagram::{DiagramError, InfluenceDiagram, NodeId, Result};

/// Parent/child adjacency of a DAG. Node ids match the source diagram.
#[derive(Debug, Clone)]
pub struct Dag {
    parents: Vec<Vec<NodeId>>,
    children: Vec<Vec<NodeId>>,
}

impl Dag {
    pub fn new(parents: Vec<Vec<NodeId>>) -> Self {
        let mut children = vec![Vec::new(); parents.len()];
        for (c, ps) in parents.iter().enumerate() {
            for &p in ps {
                children[p].push(c);
            }
        }
        Self { parents, children }
    }

    /// Every arc of the diagram, information arcs into decisions included.
    pub fn from_diagram(id: &InfluenceDiagram) -> Self {
        Self::new((0..id.len()).map(|i| id.parents(i).to_vec()).collect())
    }

    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    pub fn parents(&self, v: NodeId) -> &[NodeId] {
        &self.parents[v]
    }

    pub fn children(&self, v: NodeId) -> &[NodeId] {
        &self.children[v]
    }

    /// `z` together with all of its ancestors.
    pub fn ancestral_closure(&self, z: &BTreeSet<NodeId>) -> BTreeSet<NodeId> {
        let mut out = z.clone();
        let mut stack: Vec<NodeId> = z.iter().copied().collect();
        while let Some(v) = stack.pop() {
            for &p in &self.parents[v] {
                if out.insert(p) {
                    stack.push(p);
                }
            }
        }
        out
    }

    /// Nodes d-connected to some node of `x` given `z` (excluding `z`).
    pub fn reachable(&self, x: &BTreeSet<NodeId>, z: &BTreeSet<NodeId>) -> BTreeSet<NodeId> {
        let anc = self.ancestral_closure(z);
        // (node, arrived_from_child)
        let mut queue: VecDeque<(NodeId, bool)> = x.iter().map(|&v| (v, true)).collect();
        let mut visited = BTreeSet::new();
        let mut reach = BTreeSet::new();
        while let Some((v, up)) = queue.pop_front() {
            if !visited.insert((v, up)) {
                continue;
            }
            let observed = z.contains(&v);
            if !observed {
                reach.insert(v);
            }
            if up {
                if !observed {
                    queue.extend(self.parents[v].iter().map(|&p| (p, true)));
                    queue.extend(self.children[v].iter().map(|&c| (c, false)));
                }
            } else {
                if !observed {
                    queue.extend(self.children[v].iter().map(|&c| (c, false)));
                }
                if anc.contains(&v) {
                    queue.extend(self.parents[v].iter().map(|&p| (p, true)));
                }
            }
        }
        reach
    }

    pub fn d_separated(&self, x: &BTreeSet<NodeId>, y: &BTreeSet<NodeId>, z: &BTreeSet<NodeId>) -> bool {
        let reach = self.reachable(x, z);
        y.iter().all(|v| !reach.contains(v))
    }
}

/// d-separation test on a diagram, with node sets given by name.
pub fn d_separated(id: &InfluenceDiagram, x: &[&str], y: &[&str], z: &[&str]) -> Result<bool> {
    let resolve = |names: &[&str]| -> Result<BTreeSet<NodeId>> {
        names.iter().map(|n| id.id(n)).collect()
    };
    let (xs, ys, zs) = (resolve(x)?, resolve(y)?, resolve(z)?);
    if xs.iter().any(|v| zs.contains(v) || ys.contains(v)) || ys.iter().any(|v| zs.contains(v)) {
        return Err(DiagramError::WrongKind("d-separation sets must be disjoint".into()));
    }
    Ok(Dag::from_diagram(id).d_separated(&xs, &ys, &zs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[usize]) -> BTreeSet<usize> {
        v.iter().copied().collect()
    }

    #[test]
    fn chain_is_blocked_by_middle() {
        let g = Dag::new(vec![vec![], vec![0], vec![1]]);
        assert!(!g.d_separated(&set(&[0]), &set(&[2]), &set(&[])));
        assert!(g.d_separated(&set(&[0]), &set(&[2]), &set(&[1])));
    }

    #[test]
    fn collider_opens_when_observed() {
        let g = Dag::new(vec![vec![], vec![0, 2], vec![]]);
        assert!(g.d_separated(&set(&[0]), &set(&[2]), &set(&[])));
        assert!(!g.d_separated(&set(&[0]), &set(&[2]), &set(&[1])));
    }

    #[test]
    fn collider_opens_through_observed_descendant() {
        // 0 -> 1 <- 2, 1 -> 3
        let g = Dag::new(vec![vec![], vec![0, 2], vec![], vec![1]]);
        assert!(!g.d_separated(&set(&[0]), &set(&[2]), &set(&[3])));
    }

    #[test]
    fn fork_is_blocked_by_root() {
        let g = Dag::new(vec![vec![], vec![0], vec![0]]);
        assert!(!g.d_separated(&set(&[1]), &set(&[2]), &set(&[])));
        assert!(g.d_separated(&set(&[1]), &set(&[2]), &set(&[0])));
    }
}

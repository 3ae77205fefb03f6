//! Junction-tree structure: a maximum-weight spanning tree over cliques.

use std::collections::BTreeSet;

use crate::diagram::NodeId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliqueEdge {
    pub a: usize,
    pub b: usize,
    pub separator: Vec<NodeId>,
}

/// Cliques (sorted node-id sets) joined into a tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliqueTree {
    pub cliques: Vec<Vec<NodeId>>,
    pub edges: Vec<CliqueEdge>,
}

impl CliqueTree {
    pub fn neighbors(&self, c: usize) -> Vec<(usize, usize)> {
        self.edges
            .iter()
            .enumerate()
            .filter_map(|(e, edge)| {
                if edge.a == c {
                    Some((edge.b, e))
                } else if edge.b == c {
                    Some((edge.a, e))
                } else {
                    None
                }
            })
            .collect()
    }

    /// Running intersection: for every node, the cliques containing it
    /// induce a connected subtree.
    pub fn has_running_intersection(&self) -> bool {
        let all: BTreeSet<NodeId> = self.cliques.iter().flatten().copied().collect();
        all.into_iter().all(|v| {
            let holders: Vec<usize> = (0..self.cliques.len()).filter(|&c| self.cliques[c].contains(&v)).collect();
            let mut seen = BTreeSet::from([holders[0]]);
            let mut stack = vec![holders[0]];
            while let Some(c) = stack.pop() {
                for (n, _) in self.neighbors(c) {
                    if self.cliques[n].contains(&v) && seen.insert(n) {
                        stack.push(n);
                    }
                }
            }
            seen.len() == holders.len()
        })
    }

    /// Sum over cliques of the product of member cardinalities.
    pub fn total_clique_size(&self, card: impl Fn(NodeId) -> usize) -> u128 {
        self.cliques.iter().map(|c| c.iter().map(|&v| card(v) as u128).product::<u128>()).sum()
    }

    /// Index of the smallest clique (by state count) covering `vars`.
    pub fn covering_clique(&self, vars: &[NodeId], card: impl Fn(NodeId) -> usize) -> Option<usize> {
        (0..self.cliques.len())
            .filter(|&c| vars.iter().all(|v| self.cliques[c].contains(v)))
            .min_by_key(|&c| self.cliques[c].iter().map(|&v| card(v) as u128).product::<u128>())
    }
}

/// Kruskal over all clique pairs weighted by intersection size; heavier
/// edges first, ties by clique indices. Components that share no variable
/// are joined by empty separators, so the result is always one tree.
pub fn build_junction_tree(cliques: Vec<Vec<NodeId>>) -> CliqueTree {
    let n = cliques.len();
    let mut candidates = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let sep: Vec<NodeId> = cliques[a].iter().copied().filter(|v| cliques[b].contains(v)).collect();
            candidates.push((sep.len(), a, b, sep));
        }
    }
    candidates.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut root: Vec<usize> = (0..n).collect();
    fn find(root: &mut [usize], mut x: usize) -> usize {
        while root[x] != x {
            root[x] = root[root[x]];
            x = root[x];
        }
        x
    }
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    for (_, a, b, separator) in candidates {
        let (ra, rb) = (find(&mut root, a), find(&mut root, b));
        if ra != rb {
            root[ra] = rb;
            edges.push(CliqueEdge { a, b, separator });
        }
    }
    CliqueTree { cliques, edges }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_cliques_share_their_separator() {
        let t = build_junction_tree(vec![vec![0, 1], vec![1, 2]]);
        assert_eq!(t.edges, vec![CliqueEdge { a: 0, b: 1, separator: vec![1] }]);
        assert!(t.has_running_intersection());
    }

    #[test]
    fn clique_sizes_sum() {
        let t = build_junction_tree(vec![vec![0, 1]]);
        assert_eq!(t.total_clique_size(|_| 2), 4);
        let t = build_junction_tree(vec![vec![0, 1], vec![1, 2]]);
        assert_eq!(t.total_clique_size(|_| 3), 18);
    }

    #[test]
    fn chain_of_three_and_disconnected_components() {
        let t = build_junction_tree(vec![vec![0, 1], vec![1, 2], vec![2, 3]]);
        assert_eq!(t.edges.len(), 2);
        assert!(t.has_running_intersection());
        let t = build_junction_tree(vec![vec![0], vec![1]]);
        assert_eq!(t.edges.len(), 1);
        assert!(t.edges[0].separator.is_empty());
    }
}

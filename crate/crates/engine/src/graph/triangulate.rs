//! Undirected graphs, moralization and elimination-based triangulation.

use std::collections::BTreeSet;

use crate::diagram::{InfluenceDiagram, NodeId, NodeKind};

/// Undirected graph whose vertices carry a node id of the source diagram
/// (`labels`) and a cardinality used as clique weight.
#[derive(Debug, Clone, PartialEq)]
pub struct UGraph {
    labels: Vec<NodeId>,
    weights: Vec<f64>,
    adj: Vec<BTreeSet<usize>>,
}

impl UGraph {
    pub fn new(labels: Vec<NodeId>, weights: Vec<f64>) -> Self {
        assert_eq!(labels.len(), weights.len());
        let n = labels.len();
        Self { labels, weights, adj: vec![BTreeSet::new(); n] }
    }

    /// Graph on `n` vertices labelled `0..n`, unit weights.
    pub fn with_vertices(n: usize) -> Self {
        Self::new((0..n).collect(), vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, v: usize) -> NodeId {
        self.labels[v]
    }

    pub fn labels(&self) -> &[NodeId] {
        &self.labels
    }

    pub fn vertex_of(&self, label: NodeId) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    pub fn weight(&self, v: usize) -> f64 {
        self.weights[v]
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        if a != b {
            self.adj[a].insert(b);
            self.adj[b].insert(a);
        }
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].contains(&b)
    }

    pub fn neighbors(&self, v: usize) -> &BTreeSet<usize> {
        &self.adj[v]
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.len() {
            for &b in &self.adj[a] {
                if a < b {
                    out.push((a, b));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|s| s.len()).sum::<usize>() / 2
    }

    /// Connects every pair of vertices in `clique`.
    pub fn add_clique(&mut self, clique: &[usize]) {
        for (i, &a) in clique.iter().enumerate() {
            for &b in &clique[i + 1..] {
                self.add_edge(a, b);
            }
        }
    }

    /// True iff a perfect elimination ordering exists (repeatedly removing
    /// simplicial vertices empties the graph).
    pub fn is_chordal(&self) -> bool {
        let mut adj = self.adj.clone();
        let mut alive: BTreeSet<usize> = (0..self.len()).collect();
        while !alive.is_empty() {
            let simplicial = alive.iter().copied().find(|&v| {
                let nb: Vec<usize> = adj[v].iter().copied().collect();
                nb.iter().enumerate().all(|(i, &a)| nb[i + 1..].iter().all(|b| adj[a].contains(b)))
            });
            let Some(v) = simplicial else { return false };
            alive.remove(&v);
            for n in adj[v].clone() {
                adj[n].remove(&v);
            }
            adj[v].clear();
        }
        true
    }
}

/// Moral graph of a diagram over its chance and decision nodes. Every
/// family (node plus parents) is married, including decisions with their
/// information parents; each utility node's parent set becomes a clique
/// and the utility node itself is dropped.
pub fn moralize(id: &InfluenceDiagram) -> UGraph {
    moral_graph(id, false)
}

/// Moral graph used for decision elimination: like [`moralize`] but the
/// information arcs into decisions are removed first.
pub fn moralize_for_decisions(id: &InfluenceDiagram) -> UGraph {
    moral_graph(id, true)
}

fn moral_graph(id: &InfluenceDiagram, drop_information_arcs: bool) -> UGraph {
    let members: Vec<NodeId> = (0..id.len()).filter(|&i| id.kind(i) != NodeKind::Utility).collect();
    let weights = members.iter().map(|&i| id.cardinality(i) as f64).collect();
    let mut g = UGraph::new(members.clone(), weights);
    let local = |n: NodeId| members.iter().position(|&m| m == n).expect("non-utility node");
    for i in 0..id.len() {
        let family: Vec<usize> = match id.kind(i) {
            NodeKind::Chance => {
                let mut f: Vec<usize> = id.parents(i).iter().map(|&p| local(p)).collect();
                f.push(local(i));
                f
            }
            NodeKind::Decision if drop_information_arcs => vec![local(i)],
            NodeKind::Decision => {
                let mut f: Vec<usize> = id.parents(i).iter().map(|&p| local(p)).collect();
                f.push(local(i));
                f
            }
            NodeKind::Utility => id.parents(i).iter().map(|&p| local(p)).collect(),
        };
        g.add_clique(&family);
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderKind {
    Plain,
    Strong,
}

/// A permutation of diagram node ids (first entry eliminated first).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EliminationOrder {
    pub order: Vec<NodeId>,
    pub kind: OrderKind,
}

impl EliminationOrder {
    pub fn position(&self, node: NodeId) -> Option<usize> {
        self.order.iter().position(|&n| n == node)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Heuristic {
    /// Fewest fill edges; ties by smallest clique weight, then lowest node id.
    #[default]
    MinFill,
}

/// Result of eliminating every vertex of a graph.
#[derive(Debug, Clone)]
pub struct Triangulation {
    pub order: EliminationOrder,
    /// Maximal cliques of the filled graph, as sorted diagram node ids.
    pub cliques: Vec<Vec<NodeId>>,
    /// Fill edges as pairs of diagram node ids.
    pub fill_edges: Vec<(NodeId, NodeId)>,
}

impl Triangulation {
    pub fn total_clique_size(&self, card: impl Fn(NodeId) -> usize) -> u128 {
        self.cliques.iter().map(|c| c.iter().map(|&v| card(v) as u128).product::<u128>()).sum()
    }
}

/// Greedy triangulation of the whole graph.
pub fn triangulate(g: &UGraph, heuristic: Heuristic) -> Triangulation {
    let all: Vec<usize> = (0..g.len()).collect();
    triangulate_in_blocks(g, &[all], heuristic, OrderKind::Plain)
}

/// Eliminates the vertices of `blocks[0]` first, then `blocks[1]`, and so
/// on, choosing greedily within each block. Blocks hold vertex indices of
/// `g` and must partition its vertex set.
pub fn triangulate_in_blocks(
    g: &UGraph,
    blocks: &[Vec<usize>],
    heuristic: Heuristic,
    kind: OrderKind,
) -> Triangulation {
    let Heuristic::MinFill = heuristic;
    let mut adj = g.adj.clone();
    let mut eliminated = vec![false; g.len()];
    let mut order = Vec::with_capacity(g.len());
    let mut raw_cliques: Vec<Vec<usize>> = Vec::with_capacity(g.len());
    let mut fill = Vec::new();
    for block in blocks {
        let mut remaining: BTreeSet<usize> = block.iter().copied().filter(|&v| !eliminated[v]).collect();
        while !remaining.is_empty() {
            let v = *remaining
                .iter()
                .min_by(|&&a, &&b| {
                    let ka = score(&adj, &g.weights, a);
                    let kb = score(&adj, &g.weights, b);
                    ka.0.cmp(&kb.0)
                        .then(ka.1.total_cmp(&kb.1))
                        .then(g.labels[a].cmp(&g.labels[b]))
                })
                .expect("nonempty");
            remaining.remove(&v);
            let nb: Vec<usize> = adj[v].iter().copied().collect();
            for (i, &a) in nb.iter().enumerate() {
                for &b in &nb[i + 1..] {
                    if adj[a].insert(b) {
                        adj[b].insert(a);
                        fill.push((g.labels[a], g.labels[b]));
                    }
                }
            }
            for &n in &nb {
                adj[n].remove(&v);
            }
            let mut clique = nb;
            clique.push(v);
            raw_cliques.push(clique);
            adj[v].clear();
            eliminated[v] = true;
            order.push(g.labels[v]);
        }
    }
    let cliques = maximal_cliques(raw_cliques.into_iter().map(|c| {
        let mut ids: Vec<NodeId> = c.into_iter().map(|v| g.labels[v]).collect();
        ids.sort_unstable();
        ids
    }));
    Triangulation { order: EliminationOrder { order, kind }, cliques, fill_edges: fill }
}

fn score(adj: &[BTreeSet<usize>], weights: &[f64], v: usize) -> (usize, f64) {
    let nb: Vec<usize> = adj[v].iter().copied().collect();
    let mut missing = 0;
    for (i, &a) in nb.iter().enumerate() {
        for &b in &nb[i + 1..] {
            if !adj[a].contains(&b) {
                missing += 1;
            }
        }
    }
    let weight = nb.iter().fold(weights[v], |acc, &n| acc * weights[n]);
    (missing, weight)
}

/// Keeps only sets not contained in another (first occurrence of duplicates).
pub(crate) fn maximal_cliques(cliques: impl IntoIterator<Item = Vec<NodeId>>) -> Vec<Vec<NodeId>> {
    let all: Vec<Vec<NodeId>> = cliques.into_iter().collect();
    let sets: Vec<BTreeSet<NodeId>> = all.iter().map(|c| c.iter().copied().collect()).collect();
    let mut out = Vec::new();
    for i in 0..all.len() {
        let dominated = (0..all.len()).any(|j| {
            j != i
                && sets[i].is_subset(&sets[j])
                && (sets[i].len() < sets[j].len() || j < i)
        });
        if !dominated {
            out.push(all[i].clone());
        }
    }
    out
}

/// Applies the fill edges of a triangulation to `g`.
pub fn filled_graph(g: &UGraph, t: &Triangulation) -> UGraph {
    let mut out = g.clone();
    for &(a, b) in &t.fill_edges {
        let (va, vb) = (g.vertex_of(a).expect("label"), g.vertex_of(b).expect("label"));
        out.add_edge(va, vb);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_needs_no_fill() {
        let mut g = UGraph::with_vertices(5);
        for (a, b) in [(0, 1), (1, 2), (1, 3), (3, 4)] {
            g.add_edge(a, b);
        }
        let t = triangulate(&g, Heuristic::MinFill);
        assert!(t.fill_edges.is_empty());
        let mut cliques = t.cliques.clone();
        cliques.sort();
        assert_eq!(cliques, vec![vec![0, 1], vec![1, 2], vec![1, 3], vec![3, 4]]);
    }

    #[test]
    fn four_cycle_gets_one_chord() {
        let mut g = UGraph::with_vertices(4);
        for (a, b) in [(0, 1), (1, 2), (2, 3), (3, 0)] {
            g.add_edge(a, b);
        }
        let t = triangulate(&g, Heuristic::MinFill);
        assert_eq!(t.fill_edges.len(), 1);
        assert_eq!(t.cliques.len(), 2);
        assert!(t.cliques.iter().all(|c| c.len() == 3));
        assert!(filled_graph(&g, &t).is_chordal());
        assert!(!g.is_chordal());
    }

    #[test]
    fn blocks_constrain_order() {
        let mut g = UGraph::with_vertices(3);
        g.add_edge(0, 1);
        g.add_edge(1, 2);
        let t = triangulate_in_blocks(&g, &[vec![1], vec![0, 2]], Heuristic::MinFill, OrderKind::Strong);
        assert_eq!(t.order.order[0], 1);
        assert_eq!(t.fill_edges, vec![(0, 2)]);
    }
}

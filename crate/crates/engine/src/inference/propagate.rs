//! Shafer–Shenoy propagation on a junction tree compiled from a Bayesian
//! network (a diagram whose decisions have been replaced by chance nodes).

use crate::diagram::{InfluenceDiagram, NodeId, NodeKind};
use crate::factor::{Evidence, Factor, Table, Var};
use crate::graph::{build_junction_tree, moralize, triangulate, CliqueTree, Heuristic};

use super::{InferenceError, Result};

#[derive(Debug, Clone)]
pub struct JunctionTree {
    tree: CliqueTree,
    /// Variables of each clique, aligned with `tree.cliques`.
    clique_vars: Vec<Vec<Var>>,
    /// Product of the CPTs assigned to each clique.
    potentials: Vec<Table>,
    /// Chance node ids and variables of the source network.
    vars: Vec<(NodeId, Var)>,
    cards: Vec<usize>,
}

/// Result of one propagation.
#[derive(Debug, Clone)]
pub struct Posterior {
    /// `P(e)`.
    pub likelihood: f64,
    names: Vec<String>,
    marginals: Vec<Factor>,
    beliefs: Vec<Table>,
}

impl Posterior {
    /// `P(v | e)`.
    pub fn marginal(&self, name: &str) -> Option<&Factor> {
        self.names.iter().position(|n| n == name).map(|i| &self.marginals[i])
    }

    pub fn marginals(&self) -> impl Iterator<Item = (&str, &Factor)> {
        self.names.iter().map(String::as_str).zip(&self.marginals)
    }

    /// Joint posterior of variables that share a clique.
    pub fn joint(&self, names: &[&str]) -> Option<Factor> {
        let clique = self
            .beliefs
            .iter()
            .filter(|b| names.iter().all(|n| b.contains(n)))
            .min_by_key(|b| b.len())?;
        let t = clique.sum_to(names).reordered(names).ok()?;
        Factor::try_from_table(t).ok()?.normalize().ok()
    }
}

impl JunctionTree {
    /// Moralizes, triangulates by min-fill and assigns every CPT to the
    /// smallest clique containing its family. Utility nodes are ignored.
    pub fn compile(bn: &InfluenceDiagram) -> Result<Self> {
        if let Some(&d) = bn.decision_nodes().first() {
            return Err(InferenceError::HasDecisions(bn.name(d).to_string()));
        }
        let g = moralize(bn);
        let tri = triangulate(&g, Heuristic::MinFill);
        let tree = build_junction_tree(tri.cliques);
        let cards: Vec<usize> = (0..bn.len()).map(|i| bn.cardinality(i)).collect();
        let clique_vars: Vec<Vec<Var>> = tree
            .cliques
            .iter()
            .map(|c| c.iter().map(|&v| bn.var_of(v).expect("chance node").clone()).collect())
            .collect();
        let mut potentials: Vec<Table> = clique_vars
            .iter()
            .map(|vs| Table::filled(vs.clone(), 1.0))
            .collect::<std::result::Result<_, _>>()?;
        let mut vars = Vec::new();
        for i in 0..bn.len() {
            if bn.kind(i) != NodeKind::Chance {
                continue;
            }
            vars.push((i, bn.var_of(i).expect("chance var").clone()));
            let mut family = bn.parents(i).to_vec();
            family.push(i);
            let c = tree.covering_clique(&family, |v| cards[v]).expect("moral family lies in a clique");
            potentials[c] = potentials[c].product(bn.cpt(i).expect("cpt").table())?.reordered(
                &clique_vars[c].iter().map(|v| v.name()).collect::<Vec<_>>(),
            )?;
        }
        Ok(Self { tree, clique_vars, potentials, vars, cards })
    }

    pub fn cliques(&self) -> &CliqueTree {
        &self.tree
    }

    pub fn total_clique_size(&self) -> u128 {
        self.tree.total_clique_size(|v| self.cards[v])
    }

    pub fn propagate(&self, evidence: &Evidence) -> Result<Posterior> {
        for (name, _) in evidence.iter() {
            if !self.vars.iter().any(|(_, v)| v.name() == name) {
                return Err(InferenceError::UnknownVariable(name.to_string()));
            }
        }
        let n = self.tree.cliques.len();
        let local: Vec<Table> = self.potentials.iter().map(|p| p.reduce(evidence)).collect();
        let adjacency: Vec<Vec<(usize, usize)>> = (0..n).map(|c| self.tree.neighbors(c)).collect();
        // messages[e][0]: edge.a -> edge.b, messages[e][1]: edge.b -> edge.a
        let mut messages: Vec<[Option<Table>; 2]> = vec![[None, None]; self.tree.edges.len()];
        let mut order = Vec::with_capacity(n);
        let mut parent = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        if n > 0 {
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(c) = stack.pop() {
                order.push(c);
                for &(nb, _) in &adjacency[c] {
                    if !seen[nb] {
                        seen[nb] = true;
                        parent[nb] = c;
                        stack.push(nb);
                    }
                }
            }
        }
        let send = |from: usize, to: usize, messages: &Vec<[Option<Table>; 2]>| -> Result<Table> {
            let mut acc = local[from].clone();
            for &(nb, e) in &adjacency[from] {
                if nb == to {
                    continue;
                }
                let dir = if self.tree.edges[e].a == nb { 0 } else { 1 };
                acc = acc.product(messages[e][dir].as_ref().expect("scheduled"))?;
            }
            let edge = adjacency[from].iter().find(|&&(nb, _)| nb == to).expect("neighbor").1;
            let sep: Vec<&str> =
                self.tree.edges[edge].separator.iter().map(|&v| self.var_name(v)).collect();
            Ok(acc.sum_to(&sep))
        };
        let dir_of = |e: usize, from: usize| if self.tree.edges[e].a == from { 0 } else { 1 };
        for &c in order.iter().rev() {
            if parent[c] != usize::MAX {
                let e = adjacency[c].iter().find(|&&(nb, _)| nb == parent[c]).expect("tree edge").1;
                let m = send(c, parent[c], &messages)?;
                messages[e][dir_of(e, c)] = Some(m);
            }
        }
        for &c in &order {
            for &(nb, e) in &adjacency[c] {
                if parent[nb] == c {
                    let m = send(c, nb, &messages)?;
                    messages[e][dir_of(e, c)] = Some(m);
                }
            }
        }
        let mut beliefs = Vec::with_capacity(n);
        for c in 0..n {
            let mut b = local[c].clone();
            for &(nb, e) in &adjacency[c] {
                b = b.product(messages[e][dir_of(e, nb)].as_ref().expect("sent"))?;
            }
            let names: Vec<&str> = self.clique_vars[c].iter().map(|v| v.name()).collect();
            beliefs.push(b.reordered(&names)?);
        }
        let likelihood = if n == 0 { 1.0 } else { beliefs[0].sum() };
        if !(likelihood > 0.0) {
            return Err(InferenceError::ContradictoryEvidence);
        }
        let mut names = Vec::with_capacity(self.vars.len());
        let mut marginals = Vec::with_capacity(self.vars.len());
        for (id, var) in &self.vars {
            let c = self.tree.covering_clique(&[*id], |v| self.cards[v]).expect("every variable is in a clique");
            let m = beliefs[c].sum_to(&[var.name()]);
            let f = Factor::try_from_table(m)?.normalize().map_err(|_| InferenceError::ContradictoryEvidence)?;
            names.push(var.name().to_string());
            marginals.push(f);
        }
        Ok(Posterior { likelihood, names, marginals, beliefs })
    }

    fn var_name(&self, node: NodeId) -> &str {
        self.vars.iter().find(|(i, _)| *i == node).expect("chance node").1.name()
    }
}

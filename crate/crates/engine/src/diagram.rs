//! Influence diagrams: chance, decision and utility nodes over discrete
//! variables. A diagram without decision nodes is an ordinary Bayesian
//! network and is what the junction tree compiles.

use std::collections::HashMap;

use thiserror::Error;

use crate::factor::{DiscreteVariable, Factor, FactorError, Table, Var};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Chance,
    Decision,
    Utility,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagramError {
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("utility node `{0}` cannot be a parent")]
    UtilityParent(String),
    #[error("graph contains a cycle through `{0}`")]
    Cyclic(String),
    #[error("conditional distribution of `{node}` sums to {sum} for parent configuration {row}")]
    NotNormalized { node: String, row: usize, sum: f64 },
    #[error("decision order must list every decision exactly once")]
    BadDecisionOrder,
    #[error("information constraints are cyclic at decision `{0}`")]
    CyclicInformation(String),
    #[error("node `{0}` has the wrong kind for this operation")]
    WrongKind(String),
    #[error(transparent)]
    Factor(#[from] FactorError),
}

pub type Result<T> = std::result::Result<T, DiagramError>;

#[derive(Debug, Clone)]
pub struct Node {
    pub name: String,
    pub kind: NodeKind,
    /// `None` for utility nodes.
    pub var: Option<Var>,
    pub parents: Vec<NodeId>,
}

/// A discrete influence diagram.
///
/// Chance nodes carry a CPT whose scope is `[parents..., node]`; decision
/// nodes carry their information parents (variables observed before the
/// decision is taken); utility nodes carry a real table over their parents.
#[derive(Debug, Clone)]
pub struct InfluenceDiagram {
    nodes: Vec<Node>,
    index: HashMap<String, NodeId>,
    cpts: Vec<Option<Factor>>,
    utilities: Vec<Option<Table>>,
    decision_order: Vec<NodeId>,
}

impl InfluenceDiagram {
    pub fn builder() -> DiagramBuilder {
        DiagramBuilder::default()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn id(&self, name: &str) -> Result<NodeId> {
        self.index.get(name).copied().ok_or_else(|| DiagramError::UnknownNode(name.to_string()))
    }

    pub fn var(&self, name: &str) -> Result<&Var> {
        let id = self.id(name)?;
        self.nodes[id].var.as_ref().ok_or_else(|| DiagramError::WrongKind(name.to_string()))
    }

    pub fn var_of(&self, id: NodeId) -> Option<&Var> {
        self.nodes[id].var.as_ref()
    }

    pub fn cardinality(&self, id: NodeId) -> usize {
        self.nodes[id].var.as_ref().map_or(1, |v| v.cardinality())
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        self.nodes[id].kind
    }

    pub fn parents(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id].parents
    }

    pub fn children(&self, id: NodeId) -> Vec<NodeId> {
        (0..self.nodes.len()).filter(|&c| self.nodes[c].parents.contains(&id)).collect()
    }

    pub fn cpt(&self, id: NodeId) -> Option<&Factor> {
        self.cpts[id].as_ref()
    }

    pub fn utility(&self, id: NodeId) -> Option<&Table> {
        self.utilities[id].as_ref()
    }

    pub fn decision_order(&self) -> &[NodeId] {
        &self.decision_order
    }

    pub fn ids_of(&self, kind: NodeKind) -> Vec<NodeId> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].kind == kind).collect()
    }

    pub fn chance_nodes(&self) -> Vec<NodeId> {
        self.ids_of(NodeKind::Chance)
    }

    pub fn decision_nodes(&self) -> Vec<NodeId> {
        self.ids_of(NodeKind::Decision)
    }

    pub fn utility_nodes(&self) -> Vec<NodeId> {
        self.ids_of(NodeKind::Utility)
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.nodes[id].name
    }

    /// Topological order of all nodes (parents first, ties by id).
    pub fn topological_order(&self) -> Vec<NodeId> {
        topo_sort(&self.nodes.iter().map(|n| n.parents.clone()).collect::<Vec<_>>())
            .expect("diagram validated acyclic at build time")
    }

    /// Variables with states, in id order, for every non-utility node.
    pub fn variables(&self) -> Vec<Var> {
        self.nodes.iter().filter_map(|n| n.var.clone()).collect()
    }

    /// Replaces a chance node's CPT (and parents, taken from the CPT scope).
    pub fn with_cpt(&self, name: &str, cpt: Factor) -> Result<InfluenceDiagram> {
        let id = self.id(name)?;
        if self.nodes[id].kind != NodeKind::Chance {
            return Err(DiagramError::WrongKind(name.to_string()));
        }
        let mut b = self.to_builder();
        b.entries[id].parents = scope_parents(&cpt);
        b.entries[id].cpt = Some(cpt);
        b.build()
    }

    /// Converts decision nodes into chance nodes using `rule`, which returns
    /// a CPT (scope `[parents..., decision]`) for every decision. Utility
    /// nodes are kept; the result has no decisions.
    pub fn with_decisions_as_chance(
        &self,
        mut rule: impl FnMut(&InfluenceDiagram, NodeId) -> Result<Factor>,
    ) -> Result<InfluenceDiagram> {
        let mut b = self.to_builder();
        for id in self.decision_nodes() {
            let cpt = rule(self, id)?;
            b.entries[id].kind = NodeKind::Chance;
            b.entries[id].parents = scope_parents(&cpt);
            b.entries[id].cpt = Some(cpt);
        }
        b.decision_order = Vec::new();
        b.build()
    }

    /// Decisions become chance nodes with a uniform distribution that ignores
    /// their information parents. Evidence on such a node then acts like an
    /// intervention.
    pub fn with_uniform_decisions(&self) -> Result<InfluenceDiagram> {
        self.with_decisions_as_chance(|id, d| {
            let var = id.nodes[d].var.clone().expect("decision has a variable");
            let k = var.cardinality() as f64;
            Ok(Factor::new(vec![var], vec![1.0 / k; id.cardinality(d)])?)
        })
    }

    /// Turns one decision into a chance node with the given CPT.
    pub fn with_decision_as_chance(&self, name: &str, cpt: Factor) -> Result<InfluenceDiagram> {
        let id = self.id(name)?;
        if self.nodes[id].kind != NodeKind::Decision {
            return Err(DiagramError::WrongKind(name.to_string()));
        }
        let mut b = self.to_builder();
        b.entries[id].kind = NodeKind::Chance;
        b.entries[id].parents = scope_parents(&cpt);
        b.entries[id].cpt = Some(cpt);
        b.decision_order.retain(|d| d != name);
        b.build()
    }

    /// Replaces a decision's information parents.
    pub fn with_info(&self, decision: &str, info: &[&str]) -> Result<InfluenceDiagram> {
        let id = self.id(decision)?;
        if self.nodes[id].kind != NodeKind::Decision {
            return Err(DiagramError::WrongKind(decision.to_string()));
        }
        let mut b = self.to_builder();
        b.entries[id].parents = info.iter().map(|s| s.to_string()).collect();
        b.build()
    }

    /// Adds a chance node whose variable is the last in `cpt`'s scope.
    pub fn with_chance(&self, cpt: Factor) -> Result<InfluenceDiagram> {
        let mut b = self.to_builder();
        b.chance_cpt(cpt)?;
        b.build()
    }

    /// Drops all utility nodes.
    pub fn without_utilities(&self) -> Result<InfluenceDiagram> {
        let mut b = DiagramBuilder::default();
        for (id, e) in self.to_builder().entries.into_iter().enumerate() {
            if self.nodes[id].kind != NodeKind::Utility {
                b.push(e)?;
            }
        }
        b.decision_order = self.decision_order.iter().map(|&d| self.nodes[d].name.clone()).collect();
        b.build()
    }

    fn to_builder(&self) -> DiagramBuilder {
        let entries = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| Entry {
                name: n.name.clone(),
                kind: n.kind,
                var: n.var.clone(),
                parents: n.parents.iter().map(|&p| self.nodes[p].name.clone()).collect(),
                cpt: self.cpts[i].clone(),
                utility: self.utilities[i].clone(),
            })
            .collect::<Vec<_>>();
        let names = entries.iter().enumerate().map(|(i, e)| (e.name.clone(), i)).collect();
        DiagramBuilder {
            entries,
            names,
            decision_order: self.decision_order.iter().map(|&d| self.nodes[d].name.clone()).collect(),
        }
    }
}

fn scope_parents(cpt: &Factor) -> Vec<String> {
    let s = cpt.scope();
    s[..s.len().saturating_sub(1)].iter().map(|v| v.name().to_string()).collect()
}

#[derive(Debug, Clone)]
struct Entry {
    name: String,
    kind: NodeKind,
    var: Option<Var>,
    parents: Vec<String>,
    cpt: Option<Factor>,
    utility: Option<Table>,
}

/// Incremental construction of an [`InfluenceDiagram`]. Parents may be
/// referenced before they are added; everything is resolved in
/// [`DiagramBuilder::build`].
#[derive(Debug, Clone, Default)]
pub struct DiagramBuilder {
    entries: Vec<Entry>,
    names: HashMap<String, usize>,
    decision_order: Vec<String>,
}

impl DiagramBuilder {
    fn push(&mut self, e: Entry) -> Result<()> {
        if self.names.contains_key(&e.name) {
            return Err(DiagramError::DuplicateNode(e.name));
        }
        self.names.insert(e.name.clone(), self.entries.len());
        self.entries.push(e);
        Ok(())
    }

    /// Adds a chance node; its parents are the CPT scope minus the last
    /// variable, which must be `cpt`'s own variable.
    pub fn chance_cpt(&mut self, cpt: Factor) -> Result<&mut Self> {
        let var = cpt.scope().last().cloned().ok_or(DiagramError::Factor(FactorError::NoStates(
            "<empty scope>".into(),
        )))?;
        let parents = cpt.scope()[..cpt.scope().len() - 1].iter().map(|v| v.name().to_string()).collect();
        self.push(Entry {
            name: var.name().to_string(),
            kind: NodeKind::Chance,
            var: Some(var),
            parents,
            cpt: Some(cpt),
            utility: None,
        })?;
        Ok(self)
    }

    /// Adds a chance node from parent variables and a table laid out over
    /// `[parents..., var]`.
    pub fn chance(&mut self, var: &Var, parents: &[&Var], table: Vec<f64>) -> Result<&mut Self> {
        let mut scope: Vec<Var> = parents.iter().map(|p| (*p).clone()).collect();
        scope.push(var.clone());
        self.chance_cpt(Factor::new(scope, table)?)
    }

    /// Adds a decision node observing `info` before it is taken.
    pub fn decision(&mut self, var: &Var, info: &[&Var]) -> Result<&mut Self> {
        self.push(Entry {
            name: var.name().to_string(),
            kind: NodeKind::Decision,
            var: Some(var.clone()),
            parents: info.iter().map(|p| p.name().to_string()).collect(),
            cpt: None,
            utility: None,
        })?;
        self.decision_order.push(var.name().to_string());
        Ok(self)
    }

    /// Adds a utility node over `parents` (table in parent order).
    pub fn utility(&mut self, name: &str, parents: &[&Var], table: Vec<f64>) -> Result<&mut Self> {
        let scope: Vec<Var> = parents.iter().map(|p| (*p).clone()).collect();
        let t = Table::new(scope, table)?;
        self.utility_table(name, t)
    }

    pub fn utility_table(&mut self, name: &str, table: Table) -> Result<&mut Self> {
        self.push(Entry {
            name: name.to_string(),
            kind: NodeKind::Utility,
            var: None,
            parents: table.scope().iter().map(|v| v.name().to_string()).collect(),
            cpt: None,
            utility: Some(table),
        })?;
        Ok(self)
    }

    /// Overrides the temporal order of decisions (defaults to insertion order).
    pub fn decision_order(&mut self, order: &[&str]) -> &mut Self {
        self.decision_order = order.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn build(&self) -> Result<InfluenceDiagram> {
        let mut nodes = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            let mut parents = Vec::with_capacity(e.parents.len());
            for p in &e.parents {
                let pid = *self.names.get(p).ok_or_else(|| DiagramError::UnknownNode(p.clone()))?;
                if self.entries[pid].kind == NodeKind::Utility {
                    return Err(DiagramError::UtilityParent(p.clone()));
                }
                // shared variable handles must agree with the parent's own
                if let (Some(pv), Some(scope)) = (
                    &self.entries[pid].var,
                    e.cpt.as_ref().map(|c| c.scope().to_vec()).or_else(|| e.utility.as_ref().map(|u| u.scope().to_vec())),
                ) {
                    if let Some(sv) = scope.iter().find(|v| v.name() == pv.name()) {
                        if sv.states() != pv.states() {
                            return Err(DiagramError::Factor(FactorError::StateMismatch(p.clone())));
                        }
                    }
                }
                parents.push(pid);
            }
            nodes.push(Node { name: e.name.clone(), kind: e.kind, var: e.var.clone(), parents });
        }
        let parent_lists: Vec<Vec<usize>> = nodes.iter().map(|n| n.parents.clone()).collect();
        if let Err(at) = topo_sort(&parent_lists) {
            return Err(DiagramError::Cyclic(nodes[at].name.clone()));
        }
        for e in &self.entries {
            if let Some(cpt) = &e.cpt {
                let child: &DiscreteVariable = cpt.scope().last().expect("nonempty");
                let card = child.cardinality();
                for (row, chunk) in cpt.values().chunks(card).enumerate() {
                    let sum: f64 = chunk.iter().sum();
                    if (sum - 1.0).abs() > 1e-9 {
                        return Err(DiagramError::NotNormalized { node: e.name.clone(), row, sum });
                    }
                }
            }
        }
        let decisions: Vec<usize> =
            (0..nodes.len()).filter(|&i| nodes[i].kind == NodeKind::Decision).collect();
        let mut order = Vec::with_capacity(self.decision_order.len());
        for name in &self.decision_order {
            let id = *self.names.get(name).ok_or_else(|| DiagramError::UnknownNode(name.clone()))?;
            if nodes[id].kind != NodeKind::Decision || order.contains(&id) {
                return Err(DiagramError::BadDecisionOrder);
            }
            order.push(id);
        }
        if order.len() != decisions.len() {
            return Err(DiagramError::BadDecisionOrder);
        }
        let index = nodes.iter().enumerate().map(|(i, n)| (n.name.clone(), i)).collect();
        Ok(InfluenceDiagram {
            cpts: self.entries.iter().map(|e| e.cpt.clone()).collect(),
            utilities: self.entries.iter().map(|e| e.utility.clone()).collect(),
            nodes,
            index,
            decision_order: order,
        })
    }
}

/// Kahn's algorithm with smallest-id-first tie breaking. On a cycle returns
/// a node on it.
pub(crate) fn topo_sort(parents: &[Vec<usize>]) -> std::result::Result<Vec<usize>, usize> {
    let n = parents.len();
    let mut indeg: Vec<usize> = parents.iter().map(|p| p.len()).collect();
    let mut children = vec![Vec::new(); n];
    for (c, ps) in parents.iter().enumerate() {
        for &p in ps {
            children[p].push(c);
        }
    }
    let mut ready: std::collections::BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut out = Vec::with_capacity(n);
    while let Some(&next) = ready.iter().next() {
        ready.remove(&next);
        out.push(next);
        for &c in &children[next] {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                ready.insert(c);
            }
        }
    }
    if out.len() == n {
        Ok(out)
    } else {
        Err((0..n).find(|&i| indeg[i] > 0).expect("cycle node"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_umbrella_style_diagram() {
        let h = DiscreteVariable::indexed("H", 2).unwrap();
        let o = DiscreteVariable::indexed("O", 2).unwrap();
        let d = DiscreteVariable::indexed("D", 2).unwrap();
        let mut b = InfluenceDiagram::builder();
        b.chance(&h, &[], vec![0.5, 0.5]).unwrap();
        b.chance(&o, &[&h], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        b.decision(&d, &[&o]).unwrap();
        b.utility("U", &[&d, &h], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let id = b.build().unwrap();
        assert_eq!(id.chance_nodes().len(), 2);
        assert_eq!(id.decision_order(), &[2]);
        assert_eq!(id.parents(id.id("O").unwrap()), &[0]);
    }

    #[test]
    fn rejects_cycles_and_unnormalized_cpts() {
        let a = DiscreteVariable::indexed("A", 2).unwrap();
        let b_ = DiscreteVariable::indexed("B", 2).unwrap();
        let mut b = InfluenceDiagram::builder();
        b.chance(&a, &[&b_], vec![0.5; 4]).unwrap();
        b.chance(&b_, &[&a], vec![0.5; 4]).unwrap();
        assert!(matches!(b.build(), Err(DiagramError::Cyclic(_))));

        let mut b = InfluenceDiagram::builder();
        b.chance(&a, &[], vec![0.5, 0.6]).unwrap();
        assert!(matches!(b.build(), Err(DiagramError::NotNormalized { .. })));
    }

    #[test]
    fn utility_nodes_have_no_children() {
        let a = DiscreteVariable::indexed("A", 2).unwrap();
        let mut b = InfluenceDiagram::builder();
        b.utility("U", &[], vec![1.0]).unwrap();
        b.chance_cpt(Factor::new(vec![a], vec![0.5, 0.5]).unwrap()).unwrap();
        let mut e = b.entries[1].clone();
        e.name = "A2".into();
        e.parents = vec!["U".into()];
        b.push(e).unwrap();
        assert!(matches!(b.build(), Err(DiagramError::UtilityParent(_))));
    }
}

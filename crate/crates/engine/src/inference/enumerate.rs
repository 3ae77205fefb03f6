//! Exhaustive policy enumeration, used as a testing oracle for the
//! elimination solver. Every deterministic no-forgetting policy is scored
//! by summing over all chance configurations directly.

use crate::diagram::{InfluenceDiagram, NodeId, NodeKind};
use crate::factor::Evidence;
use crate::graph::information_blocks;

use super::policy::{DecisionRule, Policy, SolveResult};
use super::solve::TIE_TOLERANCE;
use super::{InferenceError, Result};

/// Largest number of policies `enumerate_policies` will score.
pub const POLICY_GUARD: f64 = 1e6;

struct Lookup {
    nodes: Vec<NodeId>,
    cards: Vec<usize>,
}

impl Lookup {
    fn index(&self, states: &[usize]) -> usize {
        self.nodes.iter().zip(&self.cards).fold(0, |acc, (&n, &c)| acc * c + states[n])
    }
}

/// Best policy by exhaustive search. Policies are visited in lexicographic
/// order of their decision tables (first decision most significant) and a
/// later policy replaces the incumbent only when strictly better beyond the
/// tie tolerance, so ties resolve to the lexicographically smallest policy.
pub fn enumerate_policies(id: &InfluenceDiagram, evidence: &Evidence) -> Result<SolveResult> {
    let blocks = information_blocks(id)?;
    let decisions = blocks.decisions.clone();
    let scenarios: Vec<Lookup> = (0..decisions.len())
        .map(|j| {
            let nodes = blocks.known_at(j);
            let cards = nodes.iter().map(|&n| id.cardinality(n)).collect();
            Lookup { nodes, cards }
        })
        .collect();
    let entries: Vec<usize> = scenarios.iter().map(|s| s.cards.iter().product()).collect();
    let count = policy_count(id)?;
    if count > POLICY_GUARD {
        return Err(InferenceError::PolicySpaceTooLarge { size: count, limit: POLICY_GUARD });
    }
    let chance: Vec<NodeId> = id.chance_nodes();
    let cpts: Vec<(NodeId, Lookup, &[f64])> = chance
        .iter()
        .map(|&i| {
            let mut nodes = id.parents(i).to_vec();
            nodes.push(i);
            let cards = nodes.iter().map(|&n| id.cardinality(n)).collect();
            (i, Lookup { nodes, cards }, id.cpt(i).expect("chance CPT").values())
        })
        .collect();
    let utilities: Vec<(Lookup, &[f64])> = id
        .ids_of(NodeKind::Utility)
        .into_iter()
        .map(|u| {
            let nodes = id.parents(u).to_vec();
            let cards = nodes.iter().map(|&n| id.cardinality(n)).collect();
            (Lookup { nodes, cards }, id.utility(u).expect("utility table").values())
        })
        .collect();
    let configs = chance_configurations(id, &chance, evidence)?;

    let mut choice: Vec<Vec<usize>> = entries.iter().map(|&e| vec![0; e]).collect();
    let mut best: Option<(f64, Vec<Vec<usize>>)> = None;
    let first_card = decisions.first().map_or(0, |&d| id.cardinality(d));
    let mut forced: Vec<Option<f64>> = vec![None; first_card];
    let mut states = vec![0usize; id.len()];
    loop {
        let (mut total_p, mut total_u) = (0.0, 0.0);
        for config in &configs {
            for (&c, &s) in chance.iter().zip(config) {
                states[c] = s;
            }
            for (j, &d) in decisions.iter().enumerate() {
                states[d] = choice[j][scenarios[j].index(&states)];
            }
            let p: f64 = cpts.iter().map(|(_, l, v)| v[l.index(&states)]).product();
            if p == 0.0 {
                continue;
            }
            let u: f64 = utilities.iter().map(|(l, v)| v[l.index(&states)]).sum();
            total_p += p;
            total_u += p * u;
        }
        if total_p <= 0.0 {
            return Err(InferenceError::ContradictoryEvidence);
        }
        let eu = total_u / total_p;
        let better = |incumbent: f64| eu > incumbent + TIE_TOLERANCE * incumbent.abs().max(eu.abs());
        if best.as_ref().is_none_or(|(b, _)| better(*b)) {
            best = Some((eu, choice.clone()));
        }
        if let Some(first) = choice.first() {
            if first.iter().all(|&c| c == first[0]) {
                let slot = &mut forced[first[0]];
                if slot.is_none_or(better) {
                    *slot = Some(eu);
                }
            }
        }
        if !advance(&mut choice, &decisions, id) {
            break;
        }
    }
    let (meu, table) = best.expect("at least one policy");
    let rules = decisions
        .iter()
        .enumerate()
        .map(|(j, &d)| {
            let scope = scenarios[j].nodes.iter().map(|&n| id.var_of(n).expect("var").clone()).collect();
            DecisionRule::new(id.var_of(d).expect("decision var").clone(), scope, table[j].clone())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SolveResult {
        meu,
        policy: Policy { rules },
        per_alternative: forced.into_iter().map(|f| f.expect("constant policies are visited")).collect(),
        order: None,
    })
}

/// Number of deterministic no-forgetting policies of `id`.
pub fn policy_count(id: &InfluenceDiagram) -> Result<f64> {
    let blocks = information_blocks(id)?;
    Ok(blocks
        .decisions
        .iter()
        .enumerate()
        .map(|(j, &d)| {
            let entries: f64 = blocks.known_at(j).iter().map(|&n| id.cardinality(n) as f64).product();
            (id.cardinality(d) as f64).powf(entries)
        })
        .product())
}

/// Mixed-radix increment with the last entry of the last decision fastest.
fn advance(choice: &mut [Vec<usize>], decisions: &[NodeId], id: &InfluenceDiagram) -> bool {
    for j in (0..choice.len()).rev() {
        let k = id.cardinality(decisions[j]);
        for e in (0..choice[j].len()).rev() {
            choice[j][e] += 1;
            if choice[j][e] < k {
                return true;
            }
            choice[j][e] = 0;
        }
    }
    false
}

fn chance_configurations(id: &InfluenceDiagram, chance: &[NodeId], evidence: &Evidence) -> Result<Vec<Vec<usize>>> {
    let size: f64 = chance.iter().map(|&c| id.cardinality(c) as f64).product();
    if size > super::JOINT_GUARD {
        return Err(InferenceError::StateSpaceTooLarge { size, limit: super::JOINT_GUARD });
    }
    let fixed: Vec<Option<usize>> = chance.iter().map(|&c| evidence.get(id.name(c))).collect();
    let mut out = Vec::new();
    let mut s = vec![0usize; chance.len()];
    for _ in 0..size as usize {
        if fixed.iter().zip(&s).all(|(f, &x)| f.is_none_or(|v| v == x)) {
            out.push(s.clone());
        }
        for k in (0..chance.len()).rev() {
            s[k] += 1;
            if s[k] < id.cardinality(chance[k]) {
                break;
            }
            s[k] = 0;
        }
    }
    Ok(out)
}

//! Influence-diagram solution by variable elimination along a strong order.

use std::collections::BTreeSet;

use crate::diagram::{InfluenceDiagram, NodeId, NodeKind};
use crate::factor::{Evidence, Table};
use crate::graph::{information_blocks, moralize, strong_triangulation, triangulate, Heuristic};

use super::pairs::Pair;
use super::policy::{DecisionRule, Policy, SolveResult};
use super::{InferenceError, Result};

/// Relative tolerance under which two expected utilities count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

pub fn solve_id(id: &InfluenceDiagram) -> Result<SolveResult> {
    solve_id_with_evidence(id, &Evidence::new())
}

/// Solves `id` with evidence on variables observed before the first
/// decision. The MEU and per-alternative utilities are conditional on the
/// evidence.
pub fn solve_id_with_evidence(id: &InfluenceDiagram, evidence: &Evidence) -> Result<SolveResult> {
    let blocks = information_blocks(id)?;
    check_evidence(id, evidence, &blocks.observed[0], blocks.decisions.is_empty())?;
    let tri = strong_triangulation(id)?;
    let mut pairs = initial_pairs(id, evidence);
    let first = blocks.decisions.first().copied();
    let mut rules: Vec<DecisionRule> = Vec::new();
    let mut per_alternative = Vec::new();
    for &v in &tri.order.order {
        let var = id.var_of(v).expect("non-utility node").clone();
        let name = var.name().to_string();
        if Some(v) == first {
            let all = Pair::combine_all(&pairs)?;
            pairs = vec![all];
            per_alternative = forced_alternatives(&pairs[0], &var)?;
        }
        let (bucket, rest): (Vec<Pair>, Vec<Pair>) = pairs.into_iter().partition(|p| p.mentions(&name));
        pairs = rest;
        let combined = Pair::combine_all(&bucket)?;
        match id.kind(v) {
            NodeKind::Decision => {
                let (reduced, arg) = combined.max_out(&var, TIE_TOLERANCE)?;
                rules.push(DecisionRule::new(var, arg.scope, arg.winners)?);
                pairs.push(reduced);
            }
            _ => pairs.push(combined.sum_out(&name, var.cardinality())?),
        }
    }
    let (p, u) = scalar_parts(&Pair::combine_all(&pairs)?);
    if p <= 0.0 {
        return Err(InferenceError::ContradictoryEvidence);
    }
    rules.sort_by_key(|r| blocks.decisions.iter().position(|&d| id.name(d) == r.decision.name()));
    Ok(SolveResult { meu: u / p, policy: Policy { rules }, per_alternative, order: Some(tri.order) })
}

/// Expected utility, given `evidence`, when decisions follow `policy`.
pub fn expected_utility_of_policy(id: &InfluenceDiagram, policy: &Policy, evidence: &Evidence) -> Result<f64> {
    for d in id.decision_nodes() {
        if policy.rule(id.name(d)).is_none() {
            return Err(InferenceError::IncompletePolicy(id.name(d).to_string()));
        }
    }
    let bn = id.with_decisions_as_chance(|id, d| {
        Ok(policy.rule(id.name(d)).expect("checked above").as_cpt()?)
    })?;
    let (p, u) = sum_all(&bn, evidence)?;
    if p <= 0.0 {
        return Err(InferenceError::ContradictoryEvidence);
    }
    Ok(u / p)
}

/// Sums every variable out of a decision-free diagram; returns
/// `(P(e), P(e) · E[U | e])`.
pub(crate) fn sum_all(bn: &InfluenceDiagram, evidence: &Evidence) -> Result<(f64, f64)> {
    let g = moralize(bn);
    let order = triangulate(&g, Heuristic::MinFill).order.order;
    let mut pairs = initial_pairs(bn, evidence);
    for v in order {
        let var = bn.var_of(v).expect("non-utility node");
        let (bucket, rest): (Vec<Pair>, Vec<Pair>) = pairs.into_iter().partition(|p| p.mentions(var.name()));
        pairs = rest;
        pairs.push(Pair::combine_all(&bucket)?.sum_out(var.name(), var.cardinality())?);
    }
    Ok(scalar_parts(&Pair::combine_all(&pairs)?))
}

fn initial_pairs(id: &InfluenceDiagram, evidence: &Evidence) -> Vec<Pair> {
    let mut pairs = Vec::new();
    for i in 0..id.len() {
        match id.kind(i) {
            NodeKind::Chance => {
                pairs.push(Pair::probability(id.cpt(i).expect("chance CPT").table().reduce(evidence)))
            }
            NodeKind::Utility => pairs.push(Pair::utility(id.utility(i).expect("utility table").clone())),
            NodeKind::Decision => {}
        }
    }
    pairs
}

fn scalar_parts(pair: &Pair) -> (f64, f64) {
    let p = pair.p.as_ref().map_or(1.0, |t| t.values()[0]);
    let u = pair.u.as_ref().map_or(0.0, |t| t.values()[0]);
    (p, u)
}

fn forced_alternatives(all: &Pair, decision: &crate::factor::Var) -> Result<Vec<f64>> {
    let k = decision.cardinality();
    let p = all.p.clone().unwrap_or_else(|| Table::scalar(1.0));
    let u = all.u.clone().unwrap_or_else(|| Table::scalar(0.0));
    let base = Table::filled(vec![decision.clone()], 1.0)?;
    let p = p.product(&base)?.sum_to(&[decision.name()]);
    let u = u.product(&base)?.sum_to(&[decision.name()]);
    Ok((0..k)
        .map(|d| {
            let pd = p.values()[d];
            if pd > 0.0 {
                u.values()[d] / pd
            } else {
                0.0
            }
        })
        .collect())
}

fn check_evidence(id: &InfluenceDiagram, evidence: &Evidence, observable: &[NodeId], no_decisions: bool) -> Result<()> {
    let allowed: BTreeSet<&str> = observable.iter().map(|&n| id.name(n)).collect();
    for (name, state) in evidence.iter() {
        let node = id.id(name).map_err(|_| InferenceError::UnknownVariable(name.to_string()))?;
        if id.kind(node) != NodeKind::Chance || (!no_decisions && !allowed.contains(name)) {
            return Err(InferenceError::EvidenceNotObservable(name.to_string()));
        }
        if state >= id.cardinality(node) {
            return Err(InferenceError::UnknownVariable(name.to_string()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::DiscreteVariable;

    fn umbrella(informative: bool) -> InfluenceDiagram {
        let h = DiscreteVariable::indexed("H", 2).unwrap();
        let o = DiscreteVariable::indexed("O", 2).unwrap();
        let d = DiscreteVariable::indexed("D", 2).unwrap();
        let mut b = InfluenceDiagram::builder();
        b.chance(&h, &[], vec![0.5, 0.5]).unwrap();
        let obs = if informative { vec![1.0, 0.0, 0.0, 1.0] } else { vec![0.5; 4] };
        b.chance(&o, &[&h], obs).unwrap();
        b.decision(&d, &[&o]).unwrap();
        b.utility("U", &[&d, &h], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        b.build().unwrap()
    }

    #[test]
    fn direct_max_without_chance_nodes() {
        let d = DiscreteVariable::indexed("D", 3).unwrap();
        let mut b = InfluenceDiagram::builder();
        b.decision(&d, &[]).unwrap();
        b.utility("U", &[&d], vec![10.0, 5.0, 7.0]).unwrap();
        let r = solve_id(&b.build().unwrap()).unwrap();
        assert_eq!(r.meu, 10.0);
        assert_eq!(r.policy.rules[0].choices, vec![0]);
        assert_eq!(r.per_alternative, vec![10.0, 5.0, 7.0]);
    }

    #[test]
    fn zero_utilities_tie_to_lowest() {
        let d = DiscreteVariable::indexed("D", 3).unwrap();
        let mut b = InfluenceDiagram::builder();
        b.decision(&d, &[]).unwrap();
        b.utility("U", &[&d], vec![0.0; 3]).unwrap();
        let r = solve_id(&b.build().unwrap()).unwrap();
        assert_eq!(r.meu, 0.0);
        assert_eq!(r.policy.rules[0].choices, vec![0]);
    }

    #[test]
    fn umbrella_follows_observation() {
        let id = umbrella(true);
        let r = solve_id(&id).unwrap();
        assert!((r.meu - 1.0).abs() < 1e-12);
        let rule = r.policy.rule("D").unwrap().expanded(&[id.var("O").unwrap().clone()]).unwrap();
        assert_eq!(rule.choices, vec![0, 1]);
        let r = solve_id(&umbrella(false)).unwrap();
        assert!((r.meu - 0.5).abs() < 1e-12);
    }

    #[test]
    fn anti_optimal_policy_scores_zero() {
        let id = umbrella(true);
        let o = id.var("O").unwrap().clone();
        let d = id.var("D").unwrap().clone();
        let anti = Policy { rules: vec![DecisionRule::new(d, vec![o], vec![1, 0]).unwrap()] };
        assert_eq!(expected_utility_of_policy(&id, &anti, &Evidence::new()).unwrap(), 0.0);
    }

    #[test]
    fn evidence_must_precede_first_decision() {
        let id = umbrella(true);
        let h = id.var("H").unwrap().clone();
        let e = Evidence::new().with(&h, 0).unwrap();
        assert!(matches!(solve_id_with_evidence(&id, &e), Err(InferenceError::EvidenceNotObservable(_))));
        let o = id.var("O").unwrap().clone();
        let r = solve_id_with_evidence(&id, &Evidence::new().with(&o, 1).unwrap()).unwrap();
        assert!((r.meu - 1.0).abs() < 1e-12);
        assert_eq!(r.best_alternative(TIE_TOLERANCE), Some(1));
    }
}

//! Backward induction over the blocked season model.
//!
//! Once blocking holds, the decision-relevant state at step `k` is
//! `(DiseaseObserv_k, PrevTreatment_k, PrevDose_k)`, so the season is a
//! finite-horizon Markov decision process. Each step's reward and
//! transition are obtained by eliminating that step's hidden variables.

use midas_engine::inference::{sum_product, DecisionRule, Policy, SolveResult, TIE_TOLERANCE};
use midas_engine::{Evidence, Table};

use crate::assembly::{check_blocking, DecisionModel, Structure};
use crate::error::{CoreError, Result};
use crate::schema::{cost_node, loss_node, Node};

/// Per-step quantities of the induction.
#[derive(Debug, Clone)]
pub struct ChainStep {
    pub k: usize,
    /// `Q_k(s, d)`, state-major with the dose fastest.
    pub q: Vec<f64>,
    /// `V_k(s)`.
    pub value: Vec<f64>,
    pub choice: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct ChainSolution {
    pub result: SolveResult,
    /// Steps n down to 1.
    pub steps: Vec<ChainStep>,
    /// `P(s_n | e)` over the first step's states.
    pub initial: Vec<f64>,
}

fn better(v: f64, best: f64) -> bool {
    v > best + TIE_TOLERANCE * best.abs().max(v.abs())
}

fn state_names(k: usize) -> [String; 3] {
    [Node::DiseaseObserv.at(k), Node::PrevTreatment.at(k), Node::PrevDose.at(k)]
}

/// Solves a blocked model by backward induction. Evidence may fix the
/// first step's observation and treatment history only.
pub fn solve_chain(model: &DecisionModel, evidence: &Evidence) -> Result<ChainSolution> {
    if model.structure != Structure::Blocked {
        return Err(CoreError::Invalid("backward induction needs the blocked structure".into()));
    }
    check_blocking(model)?;
    let id = &model.id;
    let n = model.n;
    let first = state_names(n);
    for (name, _) in evidence.iter() {
        if !first.iter().any(|f| f == name) {
            return Err(midas_engine::InferenceError::EvidenceNotObservable(name.to_string()).into());
        }
    }
    let table_of = |name: &str| -> Result<Table> {
        let node = id.id(name)?;
        Ok(match id.cpt(node) {
            Some(f) => f.table().clone(),
            None => id.utility(node).expect("chance or utility node").clone(),
        })
    };
    let nd = id.var(&Node::Treatment.at(n))?.cardinality();

    let mut value: Option<Vec<f64>> = None;
    let mut steps = Vec::with_capacity(n);
    for k in 1..=n {
        let names = state_names(k);
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let t = Node::Treatment.at(k);
        let module = model.module(k);
        let observation = Node::DiseaseObserv.at(k);
        let local: Vec<Table> = module
            .cpts
            .iter()
            .filter(|f| f.scope().last().is_some_and(|v| v.name() != observation))
            .map(|f| f.table().clone())
            .collect();
        let rewards = vec![
            table_of(&Node::DiseaseLevelA.at(k))?,
            table_of(&Node::YieldLossPct.at(k))?,
            table_of(&loss_node(k))?,
        ];
        let loss = sum_product(rewards, &[&observation, &t])?;
        let cost = table_of(&cost_node(k))?;
        let reward = loss.add(&cost)?.reordered(&[&observation, &t])?;
        let sizes: Vec<usize> = refs.iter().map(|r| id.var(r).map(|v| v.cardinality())).collect::<std::result::Result<_, _>>()?;
        let ns: usize = sizes.iter().product();
        let mut q = vec![0.0; ns * nd];
        let hist = sizes[1] * sizes[2];
        for s in 0..ns {
            let o = s / hist;
            for d in 0..nd {
                q[s * nd + d] = reward.get(&[o, d]);
            }
        }
        if let Some(next_value) = &value {
            let next = state_names(k - 1);
            let mut tables = local;
            tables.push(table_of(&next[0])?);
            let keep: Vec<&str> = refs.iter().copied().chain([t.as_str()]).chain(next.iter().map(String::as_str)).collect();
            let trans = sum_product(tables, &keep)?;
            let ns_next = next_value.len();
            let vals = trans.values();
            for s in 0..ns {
                for d in 0..nd {
                    let base = (s * nd + d) * ns_next;
                    let ev: f64 = vals[base..base + ns_next].iter().zip(next_value).map(|(p, v)| p * v).sum();
                    q[s * nd + d] += ev;
                }
            }
        }
        let mut v = vec![0.0; ns];
        let mut choice = vec![0usize; ns];
        for s in 0..ns {
            let row = &q[s * nd..(s + 1) * nd];
            let mut best = 0;
            for d in 1..nd {
                if better(row[d], row[best]) {
                    best = d;
                }
            }
            v[s] = row[best];
            choice[s] = best;
        }
        value = Some(v.clone());
        steps.push(ChainStep { k, q, value: v, choice });
    }
    steps.reverse();

    let mut tables = vec![table_of(&Node::DiseaseLevelB.at(n))?, table_of(&first[0])?, table_of(&first[1])?, table_of(&first[2])?];
    for t in tables.iter_mut() {
        *t = t.reduce(evidence);
    }
    let refs: Vec<&str> = first.iter().map(String::as_str).collect();
    let joint = sum_product(tables, &refs)?;
    let mut initial = joint.values().to_vec();
    let mass: f64 = initial.iter().sum();
    if !(mass > 0.0) {
        return Err(CoreError::Contradictory);
    }
    initial.iter_mut().for_each(|p| *p /= mass);
    let top = &steps[0];
    let meu = initial.iter().zip(&top.value).map(|(p, v)| p * v).sum();
    let per_alternative = (0..nd)
        .map(|d| initial.iter().enumerate().map(|(s, p)| p * top.q[s * nd + d]).sum())
        .collect();
    let rules = steps
        .iter()
        .map(|st| {
            let names = state_names(st.k);
            let scope = names.iter().map(|n| id.var(n).cloned()).collect::<std::result::Result<Vec<_>, _>>()?;
            let decision = id.var(&Node::Treatment.at(st.k))?.clone();
            Ok(DecisionRule::new(decision, scope, st.choice.clone())?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChainSolution {
        result: SolveResult { meu, policy: Policy { rules }, per_alternative, order: None },
        steps,
        initial,
    })
}

use crate::factor::{Factor, Var};
use crate::graph::EliminationOrder;

use super::{InferenceError, Result};

/// Decision function for one decision: a chosen state for every
/// configuration of `scope` (first scope variable slowest).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionRule {
    pub decision: Var,
    pub scope: Vec<Var>,
    pub choices: Vec<usize>,
}

impl DecisionRule {
    pub fn new(decision: Var, scope: Vec<Var>, choices: Vec<usize>) -> Result<Self> {
        let size: usize = scope.iter().map(|v| v.cardinality()).product();
        if choices.len() != size || choices.iter().any(|&c| c >= decision.cardinality()) {
            return Err(InferenceError::IncompletePolicy(decision.name().to_string()));
        }
        Ok(Self { decision, scope, choices })
    }

    pub fn constant(decision: Var, choice: usize) -> Result<Self> {
        Self::new(decision, Vec::new(), vec![choice])
    }

    /// Chosen state given a lookup of the scope variables' states.
    pub fn choose(&self, state_of: impl Fn(&str) -> usize) -> usize {
        let idx = self.scope.iter().fold(0, |acc, v| acc * v.cardinality() + state_of(v.name()));
        self.choices[idx]
    }

    /// Deterministic CPT with scope `[scope..., decision]`.
    pub fn as_cpt(&self) -> crate::factor::Result<Factor> {
        let k = self.decision.cardinality();
        let mut values = vec![0.0; self.choices.len() * k];
        for (row, &c) in self.choices.iter().enumerate() {
            values[row * k + c] = 1.0;
        }
        let mut scope = self.scope.clone();
        scope.push(self.decision.clone());
        Factor::new(scope, values)
    }

    /// The same rule re-expressed over a superset scope.
    pub fn expanded(&self, scope: &[Var]) -> Result<DecisionRule> {
        for v in &self.scope {
            if !scope.iter().any(|w| w.name() == v.name()) {
                return Err(InferenceError::UnknownVariable(v.name().to_string()));
            }
        }
        let size: usize = scope.iter().map(|v| v.cardinality()).product();
        let mut choices = Vec::with_capacity(size);
        let mut states = vec![0usize; scope.len()];
        for _ in 0..size {
            choices.push(self.choose(|n| states[scope.iter().position(|w| w.name() == n).expect("checked")]));
            for d in (0..scope.len()).rev() {
                states[d] += 1;
                if states[d] < scope[d].cardinality() {
                    break;
                }
                states[d] = 0;
            }
        }
        Ok(DecisionRule { decision: self.decision.clone(), scope: scope.to_vec(), choices })
    }
}

/// One rule per decision in temporal order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Policy {
    pub rules: Vec<DecisionRule>,
}

impl Policy {
    pub fn rule(&self, decision: &str) -> Option<&DecisionRule> {
        self.rules.iter().find(|r| r.decision.name() == decision)
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub meu: f64,
    pub policy: Policy,
    /// Expected utility of each alternative of the first decision, given the
    /// evidence, with every later decision optimal.
    pub per_alternative: Vec<f64>,
    pub order: Option<EliminationOrder>,
}

impl SolveResult {
    /// Lowest-index argmax of `per_alternative` under `rel_tol`.
    pub fn best_alternative(&self, rel_tol: f64) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &v) in self.per_alternative.iter().enumerate() {
            match best {
                Some((_, b)) if v <= b + rel_tol * b.abs().max(v.abs()) => {}
                _ => best = Some((i, v)),
            }
        }
        best.map(|(i, _)| i)
    }
}

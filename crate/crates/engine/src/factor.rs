//! Discrete variables, real-valued tables and the potential operations used
//! by every inference routine in the crate.
//!
//! Tables are stored densely with the FIRST scope variable varying slowest
//! and the LAST varying fastest. A conditional probability table for `X`
//! given parents `P1, P2` is therefore laid out over the scope
//! `[P1, P2, X]`, so each contiguous run of `|X|` entries is one conditional
//! distribution.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Errors raised by factor construction and factor operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FactorError {
    #[error("variable `{0}` has no states")]
    NoStates(String),
    #[error("variable `{var}` has duplicate state label `{label}`")]
    DuplicateState { var: String, label: String },
    #[error("variable `{0}` appears more than once in a scope")]
    DuplicateScopeVariable(String),
    #[error("table has {actual} entries but scope requires {expected}")]
    TableLength { expected: usize, actual: usize },
    #[error("table entry {index} is negative ({value})")]
    NegativeEntry { index: usize, value: f64 },
    #[error("table entry {index} is not finite")]
    NonFinite { index: usize },
    #[error("variable `{0}` is shared with different state lists")]
    StateMismatch(String),
    #[error("variable `{0}` is not in scope")]
    NotInScope(String),
    #[error("cannot normalize an all-zero table (contradictory evidence)")]
    ZeroSum,
    #[error("state index {state} out of range for `{var}` with {cardinality} states")]
    StateOutOfRange { var: String, state: usize, cardinality: usize },
    #[error("unknown state label `{label}` for `{var}`")]
    UnknownLabel { var: String, label: String },
}

pub type Result<T> = std::result::Result<T, FactorError>;

/// A named discrete variable with an ordered list of state labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DiscreteVariable {
    name: String,
    states: Vec<String>,
}

/// Shared handle to a variable; factors hold these rather than copies.
pub type Var = Arc<DiscreteVariable>;

impl DiscreteVariable {
    pub fn new<S: Into<String>>(name: S, states: Vec<String>) -> Result<Self> {
        let name = name.into();
        if states.is_empty() {
            return Err(FactorError::NoStates(name));
        }
        for (i, s) in states.iter().enumerate() {
            if states[..i].contains(s) {
                return Err(FactorError::DuplicateState { var: name, label: s.clone() });
            }
        }
        Ok(Self { name, states })
    }

    /// Convenience constructor wrapping the variable in an [`Arc`].
    pub fn shared<S: Into<String>, L: ToString>(name: S, labels: &[L]) -> Result<Var> {
        Self::new(name, labels.iter().map(|l| l.to_string()).collect()).map(Arc::new)
    }

    /// A variable with states `"0"`, `"1"`, ... `cardinality - 1`.
    pub fn indexed<S: Into<String>>(name: S, cardinality: usize) -> Result<Var> {
        Self::new(name, (0..cardinality).map(|i| i.to_string()).collect()).map(Arc::new)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn cardinality(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, label: &str) -> Result<usize> {
        self.states.iter().position(|s| s == label).ok_or_else(|| FactorError::UnknownLabel {
            var: self.name.clone(),
            label: label.to_string(),
        })
    }
}

impl fmt::Display for DiscreteVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{{{}}}", self.name, self.states.join(","))
    }
}

/// Observed states, keyed by variable name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Evidence {
    assignments: BTreeMap<String, usize>,
}

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records `var = state`, replacing any earlier observation of `var`.
    pub fn set(&mut self, var: &DiscreteVariable, state: usize) -> Result<()> {
        if state >= var.cardinality() {
            return Err(FactorError::StateOutOfRange {
                var: var.name.clone(),
                state,
                cardinality: var.cardinality(),
            });
        }
        self.assignments.insert(var.name.clone(), state);
        Ok(())
    }

    pub fn with(mut self, var: &DiscreteVariable, state: usize) -> Result<Self> {
        self.set(var, state)?;
        Ok(self)
    }

    pub fn set_label(&mut self, var: &DiscreteVariable, label: &str) -> Result<()> {
        let idx = var.state_index(label)?;
        self.set(var, idx)
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.assignments.get(name).copied()
    }

    pub fn remove(&mut self, name: &str) -> Option<usize> {
        self.assignments.remove(name)
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.assignments.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Union of two evidence sets; `other` wins on conflicts.
    pub fn merged(&self, other: &Evidence) -> Evidence {
        let mut out = self.clone();
        for (k, v) in &other.assignments {
            out.assignments.insert(k.clone(), *v);
        }
        out
    }
}

/// Dense real-valued table over an ordered scope. No sign constraint, so it
/// serves both as the backing store of [`Factor`] and for utility tables.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    scope: Vec<Var>,
    values: Vec<f64>,
}

fn check_scope(scope: &[Var]) -> Result<usize> {
    let mut size = 1usize;
    for (i, v) in scope.iter().enumerate() {
        if scope[..i].iter().any(|w| w.name == v.name) {
            return Err(FactorError::DuplicateScopeVariable(v.name.clone()));
        }
        size *= v.cardinality();
    }
    Ok(size)
}

fn strides(scope: &[Var]) -> Vec<usize> {
    let mut s = vec![1usize; scope.len()];
    for i in (0..scope.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * scope[i + 1].cardinality();
    }
    s
}

fn same_states(a: &Var, b: &Var) -> bool {
    Arc::ptr_eq(a, b) || a.states == b.states
}

impl Table {
    pub fn new(scope: Vec<Var>, values: Vec<f64>) -> Result<Self> {
        let size = check_scope(&scope)?;
        if values.len() != size {
            return Err(FactorError::TableLength { expected: size, actual: values.len() });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(FactorError::NonFinite { index });
        }
        Ok(Self { scope, values })
    }

    pub fn filled(scope: Vec<Var>, value: f64) -> Result<Self> {
        let size = check_scope(&scope)?;
        Ok(Self { scope, values: vec![value; size] })
    }

    pub fn scalar(value: f64) -> Self {
        Self { scope: Vec::new(), values: vec![value] }
    }

    pub fn scope(&self) -> &[Var] {
        &self.scope
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.position(name).is_some()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.scope.iter().position(|v| v.name == name)
    }

    pub fn scope_names(&self) -> Vec<&str> {
        self.scope.iter().map(|v| v.name.as_str()).collect()
    }

    /// Entry for a full assignment given in scope order.
    pub fn get(&self, states: &[usize]) -> f64 {
        self.values[self.flat_index(states)]
    }

    pub fn flat_index(&self, states: &[usize]) -> usize {
        debug_assert_eq!(states.len(), self.scope.len());
        states
            .iter()
            .zip(&self.scope)
            .fold(0, |acc, (&s, v)| acc * v.cardinality() + s)
    }

    /// Decodes a flat index into per-variable states (scope order).
    pub fn assignment(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.scope.len()];
        for (i, v) in self.scope.iter().enumerate().rev() {
            out[i] = index % v.cardinality();
            index /= v.cardinality();
        }
        out
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Table {
        Table { scope: self.scope.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Elementwise binary operation over the union of both scopes.
    /// The result scope is `self`'s scope followed by the variables of
    /// `other` not already present.
    pub fn combine(&self, other: &Table, op: impl Fn(f64, f64) -> f64) -> Result<Table> {
        let mut scope = self.scope.clone();
        for v in &other.scope {
            match self.scope.iter().find(|w| w.name == v.name) {
                Some(w) if !same_states(w, v) => return Err(FactorError::StateMismatch(v.name.clone())),
                Some(_) => {}
                None => scope.push(v.clone()),
            }
        }
        let size: usize = scope.iter().map(|v| v.cardinality()).product();
        let sa = strides(&self.scope);
        let sb = strides(&other.scope);
        let step_a: Vec<usize> = scope
            .iter()
            .map(|v| self.position(&v.name).map_or(0, |i| sa[i]))
            .collect();
        let step_b: Vec<usize> = scope
            .iter()
            .map(|v| other.position(&v.name).map_or(0, |i| sb[i]))
            .collect();
        let cards: Vec<usize> = scope.iter().map(|v| v.cardinality()).collect();
        let mut values = Vec::with_capacity(size);
        let mut counter = vec![0usize; scope.len()];
        let (mut ia, mut ib) = (0usize, 0usize);
        for _ in 0..size {
            values.push(op(self.values[ia], other.values[ib]));
            for d in (0..cards.len()).rev() {
                counter[d] += 1;
                ia += step_a[d];
                ib += step_b[d];
                if counter[d] < cards[d] {
                    break;
                }
                ia -= step_a[d] * cards[d];
                ib -= step_b[d] * cards[d];
                counter[d] = 0;
            }
        }
        Ok(Table { scope, values })
    }

    pub fn product(&self, other: &Table) -> Result<Table> {
        self.combine(other, |a, b| a * b)
    }

    pub fn add(&self, other: &Table) -> Result<Table> {
        self.combine(other, |a, b| a + b)
    }

    /// Sums out every variable not listed in `keep`. The result scope keeps
    /// the relative order of `self`.
    pub fn sum_to(&self, keep: &[&str]) -> Table {
        let kept: Vec<usize> = (0..self.scope.len())
            .filter(|&i| keep.contains(&self.scope[i].name.as_str()))
            .collect();
        self.sum_over_kept(&kept)
    }

    /// Sums out the listed variables (unknown names are an error).
    pub fn sum_out(&self, names: &[&str]) -> Result<Table> {
        for n in names {
            if !self.contains(n) {
                return Err(FactorError::NotInScope(n.to_string()));
            }
        }
        let kept: Vec<usize> = (0..self.scope.len())
            .filter(|&i| !names.contains(&self.scope[i].name.as_str()))
            .collect();
        Ok(self.sum_over_kept(&kept))
    }

    fn sum_over_kept(&self, kept: &[usize]) -> Table {
        let out_scope: Vec<Var> = kept.iter().map(|&i| self.scope[i].clone()).collect();
        let out_strides = strides(&out_scope);
        let mut step = vec![0usize; self.scope.len()];
        for (k, &i) in kept.iter().enumerate() {
            step[i] = out_strides[k];
        }
        let size: usize = out_scope.iter().map(|v| v.cardinality()).product();
        let mut values = vec![0.0; size];
        let cards: Vec<usize> = self.scope.iter().map(|v| v.cardinality()).collect();
        let mut counter = vec![0usize; cards.len()];
        let mut io = 0usize;
        for &x in &self.values {
            values[io] += x;
            for d in (0..cards.len()).rev() {
                counter[d] += 1;
                io += step[d];
                if counter[d] < cards[d] {
                    break;
                }
                io -= step[d] * cards[d];
                counter[d] = 0;
            }
        }
        Table { scope: out_scope, values }
    }

    /// Max-eliminates `name`. Among states whose value is within
    /// `rel_tol * max(|a|, |b|)` of each other the lowest index wins; a
    /// tolerance of zero gives exact comparison.
    pub fn max_out(&self, name: &str, rel_tol: f64) -> Result<(Table, ArgMax)> {
        let pos = self.position(name).ok_or_else(|| FactorError::NotInScope(name.to_string()))?;
        let card = self.scope[pos].cardinality();
        let s = strides(&self.scope)[pos];
        let out_scope: Vec<Var> =
            self.scope.iter().enumerate().filter(|(i, _)| *i != pos).map(|(_, v)| v.clone()).collect();
        let size = self.values.len() / card;
        let mut values = Vec::with_capacity(size);
        let mut winners = Vec::with_capacity(size);
        // input index = outer * (card * s) + state * s + inner
        for out in 0..size {
            let outer = out / s;
            let inner = out % s;
            let base = outer * card * s + inner;
            let mut best = self.values[base];
            let mut arg = 0usize;
            for k in 1..card {
                let v = self.values[base + k * s];
                if v > best + rel_tol * best.abs().max(v.abs()) {
                    best = v;
                    arg = k;
                }
            }
            values.push(best);
            winners.push(arg);
        }
        let scope = out_scope;
        Ok((
            Table { scope: scope.clone(), values },
            ArgMax { variable: self.scope[pos].clone(), scope, winners },
        ))
    }

    /// Picks, for every configuration of the remaining scope, the entry at
    /// the state recorded in `choice` (which must range over the same
    /// remaining scope in the same order).
    pub fn select(&self, name: &str, choice: &ArgMax) -> Result<Table> {
        let pos = self.position(name).ok_or_else(|| FactorError::NotInScope(name.to_string()))?;
        let card = self.scope[pos].cardinality();
        let s = strides(&self.scope)[pos];
        let out_scope: Vec<Var> =
            self.scope.iter().enumerate().filter(|(i, _)| *i != pos).map(|(_, v)| v.clone()).collect();
        let size = self.values.len() / card;
        debug_assert_eq!(choice.winners.len(), size);
        let values = (0..size)
            .map(|out| {
                let base = (out / s) * card * s + out % s;
                self.values[base + choice.winners[out] * s]
            })
            .collect();
        Ok(Table { scope: out_scope, values })
    }

    /// Zeroes entries inconsistent with the evidence; variables in the
    /// evidence but not in scope are ignored.
    pub fn reduce(&self, evidence: &Evidence) -> Table {
        let st = strides(&self.scope);
        let checks: Vec<(usize, usize, usize)> = self
            .scope
            .iter()
            .enumerate()
            .filter_map(|(i, v)| evidence.get(&v.name).map(|s| (st[i], v.cardinality(), s)))
            .collect();
        if checks.is_empty() {
            return self.clone();
        }
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(idx, &x)| {
                if checks.iter().all(|&(stride, card, s)| (idx / stride) % card == s) {
                    x
                } else {
                    0.0
                }
            })
            .collect();
        Table { scope: self.scope.clone(), values }
    }

    /// Restricts `name` to one state and drops it from the scope.
    pub fn slice(&self, name: &str, state: usize) -> Result<Table> {
        let pos = self.position(name).ok_or_else(|| FactorError::NotInScope(name.to_string()))?;
        let card = self.scope[pos].cardinality();
        if state >= card {
            return Err(FactorError::StateOutOfRange { var: name.to_string(), state, cardinality: card });
        }
        let s = strides(&self.scope)[pos];
        let out_scope: Vec<Var> =
            self.scope.iter().enumerate().filter(|(i, _)| *i != pos).map(|(_, v)| v.clone()).collect();
        let size = self.values.len() / card;
        let values = (0..size).map(|out| self.values[(out / s) * card * s + state * s + out % s]).collect();
        Ok(Table { scope: out_scope, values })
    }

    /// Same table with its scope permuted to `order` (which must be a
    /// permutation of the current scope names).
    pub fn reordered(&self, order: &[&str]) -> Result<Table> {
        if order.len() != self.scope.len() {
            return Err(FactorError::TableLength { expected: self.scope.len(), actual: order.len() });
        }
        let mut scope = Vec::with_capacity(order.len());
        for n in order {
            let i = self.position(n).ok_or_else(|| FactorError::NotInScope(n.to_string()))?;
            scope.push(self.scope[i].clone());
        }
        let unit = Table::filled(scope, 1.0)?;
        let out = unit.product(self)?;
        Ok(out)
    }

    /// Largest absolute difference to `other` after aligning scopes.
    pub fn max_abs_diff(&self, other: &Table) -> Result<f64> {
        let names = self.scope_names();
        let aligned = other.reordered(&names)?;
        Ok(self
            .values
            .iter()
            .zip(&aligned.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Winning state per configuration of the remaining scope after a max
/// elimination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArgMax {
    pub variable: Var,
    pub scope: Vec<Var>,
    pub winners: Vec<usize>,
}

impl ArgMax {
    pub fn get(&self, states: &[usize]) -> usize {
        let idx = states
            .iter()
            .zip(&self.scope)
            .fold(0, |acc, (&s, v)| acc * v.cardinality() + s);
        self.winners[idx]
    }
}

/// A nonnegative, finite table: conditional probability tables, clique
/// potentials, messages and evidence-reduced joints.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor(Table);

impl Factor {
    pub fn new(scope: Vec<Var>, values: Vec<f64>) -> Result<Self> {
        Self::try_from_table(Table::new(scope, values)?)
    }

    pub fn try_from_table(table: Table) -> Result<Self> {
        if let Some(index) = table.values.iter().position(|&v| v < 0.0) {
            return Err(FactorError::NegativeEntry { index, value: table.values[index] });
        }
        Ok(Factor(table))
    }

    /// All-ones factor over `scope`.
    pub fn unit(scope: Vec<Var>) -> Result<Self> {
        Table::filled(scope, 1.0).map(Factor)
    }

    pub fn scalar(value: f64) -> Result<Self> {
        Self::try_from_table(Table::scalar(value))
    }

    pub fn table(&self) -> &Table {
        &self.0
    }

    pub fn into_table(self) -> Table {
        self.0
    }

    pub fn scope(&self) -> &[Var] {
        self.0.scope()
    }

    pub fn values(&self) -> &[f64] {
        self.0.values()
    }

    pub fn multiply(&self, other: &Factor) -> Result<Factor> {
        self.0.product(&other.0).map(Factor)
    }

    pub fn marginalize_sum(&self, name: &str) -> Result<Factor> {
        self.0.sum_out(&[name]).map(Factor)
    }

    /// Max-eliminates `name`; exact ties go to the lowest state index.
    pub fn marginalize_max(&self, name: &str) -> Result<(Factor, ArgMax)> {
        let (t, a) = self.0.max_out(name, 0.0)?;
        Ok((Factor(t), a))
    }

    pub fn marginal(&self, keep: &[&str]) -> Factor {
        Factor(self.0.sum_to(keep))
    }

    pub fn reduce(&self, evidence: &Evidence) -> Factor {
        Factor(self.0.reduce(evidence))
    }

    pub fn normalize(&self) -> Result<Factor> {
        let total = self.0.sum();
        if total <= 0.0 {
            return Err(FactorError::ZeroSum);
        }
        Ok(Factor(self.0.map(|v| v / total)))
    }

    /// Maximum deviation of any conditional distribution (contiguous run of
    /// `|last scope variable|` entries) from summing to one.
    pub fn conditional_normalization_error(&self) -> f64 {
        let Some(child) = self.0.scope.last() else {
            return (self.0.values[0] - 1.0).abs();
        };
        self.0
            .values
            .chunks(child.cardinality())
            .map(|row| (row.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Deref for Factor {
    type Target = Table;
    fn deref(&self) -> &Table {
        &self.0
    }
}

impl From<Factor> for Table {
    fn from(f: Factor) -> Table {
        f.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bin(name: &str) -> Var {
        DiscreteVariable::indexed(name, 2).unwrap()
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn variable_invariants() {
        assert!(DiscreteVariable::new("x", vec![]).is_err());
        assert!(DiscreteVariable::new("x", vec!["a".into(), "a".into()]).is_err());
        let v = DiscreteVariable::shared("x", &["lo", "hi"]).unwrap();
        assert_eq!(v.state_index("hi").unwrap(), 1);
    }

    #[test]
    fn factor_rejects_bad_tables() {
        let x = bin("x");
        assert!(matches!(Factor::new(vec![x.clone()], vec![1.0]), Err(FactorError::TableLength { .. })));
        assert!(matches!(Factor::new(vec![x.clone()], vec![1.0, -0.1]), Err(FactorError::NegativeEntry { .. })));
        assert!(matches!(Factor::new(vec![x.clone()], vec![1.0, f64::NAN]), Err(FactorError::NonFinite { .. })));
        assert!(matches!(
            Factor::new(vec![x.clone(), x], vec![1.0; 4]),
            Err(FactorError::DuplicateScopeVariable(_))
        ));
    }

    #[test]
    fn multiply_by_unit_is_identity() {
        let x = bin("x");
        let y = bin("y");
        let f = Factor::new(vec![x.clone(), y.clone()], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let g = f.multiply(&Factor::unit(vec![x, y]).unwrap()).unwrap();
        assert!(close(g.values(), f.values()));
    }

    #[test]
    fn multiply_same_variable_elementwise() {
        let x = bin("x");
        let a = Factor::new(vec![x.clone()], vec![0.3, 0.7]).unwrap();
        let b = Factor::new(vec![x], vec![0.5, 0.5]).unwrap();
        assert!(close(a.multiply(&b).unwrap().values(), &[0.15, 0.35]));
    }

    #[test]
    fn multiply_disjoint_is_outer_product() {
        let (x, y) = (bin("x"), bin("y"));
        let a = Factor::new(vec![x.clone()], vec![0.2, 0.8]).unwrap();
        let b = Factor::new(vec![y.clone()], vec![0.4, 0.6]).unwrap();
        let p = a.multiply(&b).unwrap();
        // nested-loop oracle over (x, y), y fastest
        let mut oracle = Vec::new();
        for i in 0..2 {
            for j in 0..2 {
                oracle.push(a.values()[i] * b.values()[j]);
            }
        }
        assert_eq!(p.scope_names(), vec!["x", "y"]);
        assert!(close(p.values(), &oracle));
        assert!(close(p.values(), &[0.08, 0.12, 0.32, 0.48]));
    }

    #[test]
    fn multiply_rejects_state_mismatch() {
        let a = Factor::new(vec![bin("x")], vec![0.5, 0.5]).unwrap();
        let x3 = DiscreteVariable::indexed("x", 3).unwrap();
        let b = Factor::new(vec![x3], vec![1.0; 3]).unwrap();
        assert_eq!(a.multiply(&b), Err(FactorError::StateMismatch("x".into())));
    }

    #[test]
    fn sum_marginalization() {
        let (x, y) = (bin("x"), bin("y"));
        let u = Factor::new(vec![x.clone(), y.clone()], vec![0.5; 4]).unwrap();
        assert!(close(u.marginalize_sum("x").unwrap().values(), &[1.0, 1.0]));
        assert!(close(u.marginalize_sum("y").unwrap().values(), &[1.0, 1.0]));
        let f = Factor::new(vec![x.clone(), y], vec![0.08, 0.12, 0.32, 0.48]).unwrap();
        // oracle: for each x, add the y entries
        let v = f.values();
        let oracle = [v[0] + v[1], v[2] + v[3]];
        assert!(close(f.marginalize_sum("y").unwrap().values(), &oracle));
        assert!(close(&oracle, &[0.2, 0.8]));
        let single = Factor::new(vec![x], vec![0.3, 0.9]).unwrap();
        let s = single.marginalize_sum("x").unwrap();
        assert!(s.scope().is_empty());
        assert!((s.values()[0] - 1.2).abs() < 1e-12);
        assert_eq!(f.marginalize_sum("z"), Err(FactorError::NotInScope("z".into())));
    }

    #[test]
    fn max_marginalization_and_ties() {
        let d = DiscreteVariable::indexed("d", 3).unwrap();
        let flat = Factor::new(vec![d.clone()], vec![2.0; 3]).unwrap();
        let (_, a) = flat.marginalize_max("d").unwrap();
        assert_eq!(a.winners, vec![0]);
        let f = Factor::new(vec![d.clone()], vec![1.0, 3.0, 2.0]).unwrap();
        let (m, a) = f.marginalize_max("d").unwrap();
        assert_eq!(m.values(), &[3.0]);
        assert_eq!(a.winners, vec![1]);

        let x = bin("x");
        let vals = vec![0.1, 0.5, 0.2, 0.9, 0.3, 0.9];
        let g = Factor::new(vec![x, d], vals.clone()).unwrap();
        let (m, a) = g.marginalize_max("d").unwrap();
        for xi in 0..2 {
            let row = &vals[xi * 3..xi * 3 + 3];
            let mut best = 0;
            for k in 0..3 {
                if row[k] > row[best] {
                    best = k;
                }
            }
            assert_eq!(a.winners[xi], best);
            assert_eq!(m.values()[xi], row[best]);
        }
        assert_eq!(a.winners, vec![1, 0]);
    }

    #[test]
    fn max_out_middle_variable() {
        let a = bin("a");
        let d = DiscreteVariable::indexed("d", 3).unwrap();
        let c = bin("c");
        let vals: Vec<f64> = (0..12).map(|i| ((i * 7) % 5) as f64).collect();
        let t = Table::new(vec![a, d, c], vals.clone()).unwrap();
        let (m, arg) = t.max_out("d", 0.0).unwrap();
        for ai in 0..2 {
            for ci in 0..2 {
                let cands: Vec<f64> = (0..3).map(|di| vals[ai * 6 + di * 2 + ci]).collect();
                let best = cands.iter().cloned().fold(f64::MIN, f64::max);
                let arg_oracle = cands.iter().position(|&v| v == best).unwrap();
                assert_eq!(m.get(&[ai, ci]), best);
                assert_eq!(arg.get(&[ai, ci]), arg_oracle);
            }
        }
        let picked = t.select("d", &arg).unwrap();
        assert_eq!(picked.values(), m.values());
    }

    #[test]
    fn reduce_cases() {
        let x = bin("x");
        let f = Factor::new(vec![x.clone()], vec![0.3, 0.7]).unwrap();
        assert_eq!(f.reduce(&Evidence::new()), f);
        let e = Evidence::new().with(&x, 1).unwrap();
        assert!(close(f.reduce(&e).values(), &[0.0, 0.7]));

        let (y, z) = (DiscreteVariable::indexed("y", 3).unwrap(), bin("z"));
        let vals: Vec<f64> = (1..=12).map(|i| i as f64).collect();
        let g = Factor::new(vec![x.clone(), y.clone(), z.clone()], vals.clone()).unwrap();
        let e = Evidence::new().with(&x, 0).unwrap().with(&z, 1).unwrap();
        let r = g.reduce(&e);
        // index-filter oracle
        for xi in 0..2 {
            for yi in 0..3 {
                for zi in 0..2 {
                    let expect = if xi == 0 && zi == 1 { vals[xi * 6 + yi * 2 + zi] } else { 0.0 };
                    assert_eq!(r.get(&[xi, yi, zi]), expect);
                }
            }
        }
        assert!(Evidence::new().with(&x, 2).is_err());
    }

    #[test]
    fn normalize_cases() {
        let x = bin("x");
        let f = Factor::new(vec![x.clone()], vec![2.0, 2.0]).unwrap();
        assert!(close(f.normalize().unwrap().values(), &[0.5, 0.5]));
        let n = Factor::new(vec![x.clone()], vec![0.25, 0.75]).unwrap();
        assert!(close(n.normalize().unwrap().values(), n.values()));
        let z = Factor::new(vec![x], vec![0.0, 0.0]).unwrap();
        assert_eq!(z.normalize(), Err(FactorError::ZeroSum));
    }

    #[test]
    fn slice_and_reorder() {
        let (x, y) = (bin("x"), DiscreteVariable::indexed("y", 3).unwrap());
        let t = Table::new(vec![x, y], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(t.slice("x", 1).unwrap().values(), &[4.0, 5.0, 6.0]);
        assert_eq!(t.slice("y", 2).unwrap().values(), &[3.0, 6.0]);
        let r = t.reordered(&["y", "x"]).unwrap();
        assert_eq!(r.values(), &[1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
        assert_eq!(t.max_abs_diff(&r).unwrap(), 0.0);
    }
}

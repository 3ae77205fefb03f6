//! Probability/utility potential pairs for division-free expected-utility
//! elimination. A pair `(p, u)` stands for the weighted utility `u = p · EU`;
//! a missing `p` is the constant 1 and a missing `u` the constant 0.

use crate::factor::{ArgMax, Table, Var};

use super::Result;

#[derive(Debug, Clone, Default)]
pub struct Pair {
    pub p: Option<Table>,
    pub u: Option<Table>,
}

impl Pair {
    pub fn probability(p: Table) -> Self {
        Self { p: Some(p), u: None }
    }

    pub fn utility(u: Table) -> Self {
        Self { p: None, u: Some(u) }
    }

    pub fn mentions(&self, name: &str) -> bool {
        self.p.as_ref().is_some_and(|t| t.contains(name)) || self.u.as_ref().is_some_and(|t| t.contains(name))
    }

    /// `(p1, u1) ⊗ (p2, u2) = (p1 p2, p1 u2 + p2 u1)`.
    pub fn combine(&self, other: &Pair) -> Result<Pair> {
        let p = match (&self.p, &other.p) {
            (Some(a), Some(b)) => Some(a.product(b)?),
            (Some(a), None) | (None, Some(a)) => Some(a.clone()),
            (None, None) => None,
        };
        let left = weighted(&self.p, &other.u)?;
        let right = weighted(&other.p, &self.u)?;
        let u = match (left, right) {
            (Some(a), Some(b)) => Some(a.add(&b)?),
            (Some(a), None) | (None, Some(a)) => Some(a),
            (None, None) => None,
        };
        Ok(Pair { p, u })
    }

    pub fn combine_all(pairs: &[Pair]) -> Result<Pair> {
        let mut acc = Pair::default();
        for pair in pairs {
            acc = acc.combine(pair)?;
        }
        Ok(acc)
    }

    /// Sums `name` out of both parts; a part that does not mention `name`
    /// is multiplied by its cardinality.
    pub fn sum_out(&self, name: &str, card: usize) -> Result<Pair> {
        let sum = |t: &Option<Table>, default_one: bool| -> Result<Option<Table>> {
            Ok(match t {
                Some(t) if t.contains(name) => Some(t.sum_out(&[name])?),
                Some(t) => Some(t.map(|x| x * card as f64)),
                None if default_one => Some(Table::scalar(card as f64)),
                None => None,
            })
        };
        Ok(Pair { p: sum(&self.p, true)?, u: sum(&self.u, false)? })
    }

    /// Max-eliminates a decision on the utility part and takes the
    /// probability part at the winning state. Both parts are first brought
    /// onto a common scope that includes the decision, so the recorded
    /// argmax covers every variable of the pair.
    pub fn max_out(&self, decision: &Var, rel_tol: f64) -> Result<(Pair, ArgMax)> {
        let name = decision.name();
        let base = Table::filled(vec![decision.clone()], 1.0)?;
        let p = self.p.clone().unwrap_or_else(|| Table::scalar(1.0));
        let u = self.u.clone().unwrap_or_else(|| Table::scalar(0.0));
        let p_full = p.combine(&u, |a, _| a)?.product(&base)?;
        let names = p_full.scope_names();
        let u_full = p_full.combine(&u, |_, b| b)?.reordered(&names)?;
        let (u_max, arg) = u_full.max_out(name, rel_tol)?;
        let p_sel = p_full.select(name, &arg)?;
        Ok((Pair { p: Some(p_sel), u: Some(u_max) }, arg))
    }
}

fn weighted(p: &Option<Table>, u: &Option<Table>) -> Result<Option<Table>> {
    Ok(match (p, u) {
        (_, None) => None,
        (None, Some(u)) => Some(u.clone()),
        (Some(p), Some(u)) => Some(p.product(u)?),
    })
}

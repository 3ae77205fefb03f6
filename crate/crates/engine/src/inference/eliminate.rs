//! Plain sum-product elimination over a bag of tables.

use crate::factor::{FactorError, Table, Var};

use super::Result;

/// Multiplies `tables` and sums out every variable not in `keep`, choosing
/// at each step the variable whose elimination creates the smallest table
/// (ties by name). The result is laid out in `keep` order; kept variables
/// absent from every table are an error.
pub fn sum_product(mut tables: Vec<Table>, keep: &[&str]) -> Result<Table> {
    loop {
        let mut candidates: Vec<(u128, String)> = Vec::new();
        for t in &tables {
            for v in t.scope() {
                if keep.contains(&v.name()) || candidates.iter().any(|(_, n)| n == v.name()) {
                    continue;
                }
                let mut union: Vec<&Var> = Vec::new();
                for u in tables.iter().filter(|u| u.contains(v.name())) {
                    for w in u.scope() {
                        if !union.iter().any(|x| x.name() == w.name()) {
                            union.push(w);
                        }
                    }
                }
                let size = union.iter().map(|w| w.cardinality() as u128).product();
                candidates.push((size, v.name().to_string()));
            }
        }
        let Some((_, name)) = candidates.into_iter().min() else { break };
        let (bucket, rest): (Vec<Table>, Vec<Table>) = tables.into_iter().partition(|t| t.contains(&name));
        tables = rest;
        let mut acc = Table::scalar(1.0);
        for t in &bucket {
            acc = acc.product(t)?;
        }
        tables.push(acc.sum_out(&[name.as_str()])?);
    }
    let mut acc = Table::scalar(1.0);
    for t in &tables {
        acc = acc.product(t)?;
    }
    for k in keep {
        if !acc.contains(k) {
            return Err(FactorError::NotInScope(k.to_string()).into());
        }
    }
    Ok(acc.reordered(keep)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::DiscreteVariable;

    #[test]
    fn chain_marginal() {
        let a = DiscreteVariable::indexed("A", 2).unwrap();
        let b = DiscreteVariable::indexed("B", 2).unwrap();
        let pa = Table::new(vec![a.clone()], vec![0.2, 0.8]).unwrap();
        let pb = Table::new(vec![a, b], vec![0.9, 0.1, 0.3, 0.7]).unwrap();
        let m = sum_product(vec![pa, pb], &["B"]).unwrap();
        assert!((m.values()[0] - (0.2 * 0.9 + 0.8 * 0.3)).abs() < 1e-15);
    }
}

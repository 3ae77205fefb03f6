//! Full-joint enumeration, used as a testing oracle. Entries are computed
//! by direct CPT lookup per assignment, without any factor operation.

use crate::diagram::{InfluenceDiagram, NodeKind};
use crate::factor::{Evidence, Factor};

use super::{InferenceError, Result};

/// Largest joint state space `joint_brute_force` will enumerate.
pub const JOINT_GUARD: f64 = 1e7;

/// Joint over all chance variables (scope in node-id order), with entries
/// inconsistent with `evidence` set to zero.
pub fn joint_brute_force(bn: &InfluenceDiagram, evidence: &Evidence) -> Result<Factor> {
    if let Some(&d) = bn.decision_nodes().first() {
        return Err(InferenceError::HasDecisions(bn.name(d).to_string()));
    }
    let chance: Vec<usize> = (0..bn.len()).filter(|&i| bn.kind(i) == NodeKind::Chance).collect();
    let size: f64 = chance.iter().map(|&i| bn.cardinality(i) as f64).product();
    if size > JOINT_GUARD {
        return Err(InferenceError::StateSpaceTooLarge { size, limit: JOINT_GUARD });
    }
    let observed: Vec<Option<usize>> = (0..bn.len()).map(|i| evidence.get(bn.name(i))).collect();
    let mut states = vec![0usize; bn.len()];
    let mut values = Vec::with_capacity(size as usize);
    for _ in 0..size as usize {
        let consistent = chance.iter().all(|&i| observed[i].is_none_or(|s| s == states[i]));
        let mut p = if consistent { 1.0 } else { 0.0 };
        if consistent {
            for &i in &chance {
                let cpt = bn.cpt(i).expect("chance CPT");
                let mut idx = 0usize;
                for (k, v) in cpt.scope().iter().enumerate() {
                    let node = if k + 1 == cpt.scope().len() { i } else { bn.parents(i)[k] };
                    idx = idx * v.cardinality() + states[node];
                }
                p *= cpt.values()[idx];
            }
        }
        values.push(p);
        for &i in chance.iter().rev() {
            states[i] += 1;
            if states[i] < bn.cardinality(i) {
                break;
            }
            states[i] = 0;
        }
    }
    let scope = chance.iter().map(|&i| bn.var_of(i).expect("chance var").clone()).collect();
    Ok(Factor::new(scope, values)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::DiscreteVariable;

    #[test]
    fn collider_matches_hand_expansion() {
        let a = DiscreteVariable::indexed("A", 2).unwrap();
        let c = DiscreteVariable::indexed("C", 2).unwrap();
        let b_ = DiscreteVariable::indexed("B", 2).unwrap();
        let mut b = InfluenceDiagram::builder();
        b.chance(&a, &[], vec![0.4, 0.6]).unwrap();
        b.chance(&c, &[], vec![0.7, 0.3]).unwrap();
        b.chance(&b_, &[&a, &c], vec![0.9, 0.1, 0.5, 0.5, 0.2, 0.8, 0.1, 0.9]).unwrap();
        let j = joint_brute_force(&b.build().unwrap(), &Evidence::new()).unwrap();
        // scope (A, C, B)
        let expected = [
            0.4 * 0.7 * 0.9,
            0.4 * 0.7 * 0.1,
            0.4 * 0.3 * 0.5,
            0.4 * 0.3 * 0.5,
            0.6 * 0.7 * 0.2,
            0.6 * 0.7 * 0.8,
            0.6 * 0.3 * 0.1,
            0.6 * 0.3 * 0.9,
        ];
        for (x, y) in j.values().iter().zip(expected) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn single_node_is_its_prior() {
        let a = DiscreteVariable::indexed("A", 3).unwrap();
        let mut b = InfluenceDiagram::builder();
        b.chance(&a, &[], vec![0.2, 0.3, 0.5]).unwrap();
        let j = joint_brute_force(&b.build().unwrap(), &Evidence::new()).unwrap();
        assert_eq!(j.values(), &[0.2, 0.3, 0.5]);
    }
}

use midas_engine::factor::{DiscreteVariable, Evidence, Factor, Var};
use proptest::prelude::*;

fn pool() -> Vec<Var> {
    (0..5)
        .map(|i| DiscreteVariable::indexed(format!("V{i}"), 2 + i % 3).unwrap())
        .collect()
}

prop_compose! {
    fn factor_over(max_vars: usize)(mask in prop::collection::vec(any::<bool>(), 5), seed in any::<u64>()) -> Factor {
        let vars = pool();
        let scope: Vec<Var> = vars.into_iter().zip(mask).filter(|(_, m)| *m).map(|(v, _)| v).take(max_vars).collect();
        let size: usize = scope.iter().map(|v| v.cardinality()).product();
        let mut x = seed | 1;
        let values = (0..size).map(|_| {
            x ^= x << 13; x ^= x >> 7; x ^= x << 17;
            (x % 1000) as f64 / 997.0
        }).collect();
        Factor::new(scope, values).unwrap()
    }
}

fn diff(a: &Factor, b: &Factor) -> f64 {
    a.table().max_abs_diff(b.table()).unwrap()
}

proptest! {
    #[test]
    fn multiply_commutes(a in factor_over(5), b in factor_over(5)) {
        prop_assert!(diff(&a.multiply(&b).unwrap(), &b.multiply(&a).unwrap()) <= 1e-12);
    }

    #[test]
    fn multiply_associates(a in factor_over(3), b in factor_over(3), c in factor_over(3)) {
        let l = a.multiply(&b).unwrap().multiply(&c).unwrap();
        let r = a.multiply(&b.multiply(&c).unwrap()).unwrap();
        prop_assert!(diff(&l, &r) <= 1e-12);
    }

    #[test]
    fn sum_elimination_commutes(f in factor_over(5)) {
        let names: Vec<String> = f.scope().iter().map(|v| v.name().to_string()).collect();
        if names.len() >= 2 {
            let (v, w) = (&names[0], &names[names.len() - 1]);
            let a = f.marginalize_sum(v).unwrap().marginalize_sum(w).unwrap();
            let b = f.marginalize_sum(w).unwrap().marginalize_sum(v).unwrap();
            prop_assert!(diff(&a, &b) <= 1e-12);
        }
    }

    #[test]
    fn sum_distributes_over_product(a in factor_over(4), b in factor_over(4)) {
        if let Some(v) = a.scope().iter().find(|v| !b.contains(v.name())) {
            let lhs = a.multiply(&b).unwrap().marginalize_sum(v.name()).unwrap();
            let rhs = a.marginalize_sum(v.name()).unwrap().multiply(&b).unwrap();
            prop_assert!(diff(&lhs, &rhs) <= 1e-12);
        }
    }

    #[test]
    fn reduce_then_sum_keeps_only_consistent_entries(f in factor_over(4), pick in 0usize..5, state in 0usize..4) {
        if f.scope().is_empty() { return Ok(()); }
        let v = f.scope()[pick % f.scope().len()].clone();
        let s = state % v.cardinality();
        let e = Evidence::new().with(&v, s).unwrap();
        let reduced = f.reduce(&e);
        let pos = f.position(v.name()).unwrap();
        let expected: f64 = (0..f.len())
            .filter(|&i| f.assignment(i)[pos] == s)
            .map(|i| f.values()[i])
            .sum();
        prop_assert!((reduced.sum() - expected).abs() <= 1e-12);
    }

    #[test]
    fn max_tie_break_is_deterministic(f in factor_over(4)) {
        if let Some(v) = f.scope().first() {
            let (_, a1) = f.marginalize_max(v.name()).unwrap();
            let (_, a2) = f.marginalize_max(v.name()).unwrap();
            prop_assert_eq!(a1, a2);
        }
    }

    #[test]
    fn normalize_sums_to_one(f in factor_over(5)) {
        if f.sum() > 0.0 {
            prop_assert!((f.normalize().unwrap().sum() - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn max_out_matches_linear_scan() {
    let x = DiscreteVariable::indexed("X", 2).unwrap();
    let d = DiscreteVariable::indexed("D", 3).unwrap();
    let values = vec![0.2, 0.9, 0.4, 0.7, 0.1, 0.7];
    let f = Factor::new(vec![x, d], values.clone()).unwrap();
    let (m, arg) = f.marginalize_max("D").unwrap();
    for row in 0..2 {
        let slice = &values[row * 3..row * 3 + 3];
        let best = slice.iter().cloned().fold(f64::MIN, f64::max);
        let first = slice.iter().position(|&v| v == best).unwrap();
        assert_eq!(m.values()[row], best);
        assert_eq!(arg.winners[row], first);
    }
}

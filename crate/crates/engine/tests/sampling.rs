use midas_engine::random::random_network;
use midas_engine::sampling::sample_forward;
use midas_engine::{DiscreteVariable, InfluenceDiagram, JunctionTree};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn empirical_tv(bn: &InfluenceDiagram, draws: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = bn.chance_nodes();
    let mut counts: Vec<Vec<f64>> = nodes.iter().map(|&v| vec![0.0; bn.cardinality(v)]).collect();
    for _ in 0..draws {
        let s = sample_forward(bn, &mut rng, |_, _| unreachable!("no decisions"));
        for (c, &v) in counts.iter_mut().zip(&nodes) {
            c[s[v]] += 1.0 / draws as f64;
        }
    }
    let post = JunctionTree::compile(bn).unwrap().propagate(&Default::default()).unwrap();
    nodes
        .iter()
        .zip(&counts)
        .map(|(&v, c)| {
            let m = post.marginal(bn.name(v)).unwrap().values();
            m.iter().zip(c).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0
        })
        .fold(0.0, f64::max)
}

#[test]
fn two_node_samples_match_propagation() {
    let a = DiscreteVariable::indexed("A", 2).unwrap();
    let b = DiscreteVariable::indexed("B", 3).unwrap();
    let mut builder = InfluenceDiagram::builder();
    builder.chance(&a, &[], vec![0.3, 0.7]).unwrap();
    builder.chance(&b, &[&a], vec![0.6, 0.3, 0.1, 0.05, 0.15, 0.8]).unwrap();
    let bn = builder.build().unwrap();
    let tv = empirical_tv(&bn, 100_000, 1);
    assert!(tv <= 0.01, "{tv}");
}

#[test]
fn random_network_samples_match_propagation() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    for seed in 0..5 {
        let bn = random_network(&mut rng, 6, 3, 2);
        let tv = empirical_tv(&bn, 100_000, seed);
        assert!(tv <= 0.01, "{tv}");
    }
}

use midas_core::module::{build_time_step_module, Field};
use midas_core::params::Params;
use midas_core::quantify::disease_step;
use midas_core::schema::{bin_of, Node};
use midas_engine::inference::sum_product;
use midas_engine::Table;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cdf(row: &[f64]) -> Vec<f64> {
    row.iter()
        .scan(0.0, |s, x| {
            *s += x;
            Some(*s)
        })
        .collect()
}

/// `a` puts at least as much mass as `b` on every lower set of bins.
fn dominates(a: &[f64], b: &[f64]) -> bool {
    cdf(a).iter().zip(cdf(b)).all(|(x, y)| *x + 1e-12 >= y)
}

fn fields(p: &Params) -> Vec<Field> {
    (0..p.schema.basic_levels.len())
        .flat_map(|basic_protection| (0..3).map(move |crop_structure| Field { basic_protection, crop_structure }))
        .collect()
}

/// Mean-one lognormal draw by Box-Muller.
fn lognormal(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    let sigma = (1.0 + sd * sd).ln().sqrt();
    let (u1, u2): (f64, f64) = (rng.random::<f64>().max(f64::MIN_POSITIVE), rng.random());
    let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
    (sigma * z - 0.5 * sigma * sigma).exp()
}

#[test]
fn disease_step_rows_match_monte_carlo() {
    let p = Params::default();
    let s = &p.schema;
    let m = build_time_step_module(10, Field { basic_protection: 0, crop_structure: 1 }, &p, 1.0).unwrap();
    let cpt = m.cpt(&Node::DiseaseLevelB.at(9)).unwrap();
    let (sev, growth) = (&s.severity_edges, &s.growth_edges);
    let nb = sev.len() - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst: f64 = 0.0;
    for a in 0..nb {
        for g in 0..growth.len() - 1 {
            let mut hist = vec![0.0; nb];
            let draws = 100_000;
            for _ in 0..draws {
                let x = rng.random_range(sev[a]..sev[a + 1]);
                let r = rng.random_range(growth[g]..growth[g + 1]);
                let v = disease_step(x, r, 1.0) * lognormal(&mut rng, p.noise.disease_step);
                hist[bin_of(sev, v).0] += 1.0 / draws as f64;
            }
            let tv: f64 = (0..nb).map(|b| (hist[b] - cpt.table().get(&[a, g, b])).abs()).sum::<f64>() / 2.0;
            worst = worst.max(tv);
        }
    }
    eprintln!("largest total variation {worst:.4}");
    assert!(worst <= 0.02, "{worst}");
}

#[test]
fn higher_doses_shift_post_treatment_severity_down() {
    let p = Params::default();
    let nd = p.schema.doses.len();
    let nb = p.schema.cardinality(Node::DiseaseLevelB);
    for field in fields(&p) {
        for k in 1..=p.schema.max_steps {
            let m = build_time_step_module(k, field, &p, 1.0).unwrap();
            let t = m.cpt_of(Node::DiseaseLevelA).unwrap().table();
            for b in 0..nb {
                for d in 1..nd {
                    let row = |d: usize| (0..nb).map(|a| t.get(&[b, d, a])).collect::<Vec<_>>();
                    assert!(dominates(&row(d), &row(d - 1)), "step {k} field {field:?} severity {b} dose {d}");
                }
            }
        }
    }
}

#[test]
fn basic_protection_lowers_growth_rate() {
    let p = Params::default();
    let s = &p.schema;
    let levels = s.basic_levels.len();
    let k = 8;
    let keep = [
        Node::ClimateEffect.at(k),
        Node::CropStructure.at(k),
        Node::ProtectnLevel.at(k),
        Node::NewLeafFract.at(k),
        Node::GrowthRate.at(k),
    ];
    let names: Vec<&str> = keep.iter().map(String::as_str).collect();
    // P(GrowthRate | climate, structure, protection level, new leaves) at each basic level
    let by_level: Vec<Table> = (0..levels)
        .map(|basic| {
            let m = build_time_step_module(k, Field { basic_protection: basic, crop_structure: 0 }, &p, 1.0).unwrap();
            let tables = [Node::BasicProtection, Node::MeanProtectn, Node::GrowthRate]
                .iter()
                .map(|&n| m.cpt_of(n).unwrap().table().clone())
                .collect();
            sum_product(tables, &names).unwrap().reordered(&names).unwrap()
        })
        .collect();
    let ng = s.cardinality(Node::GrowthRate);
    let rows = by_level[0].len() / ng;
    for lvl in 1..levels {
        for r in 0..rows {
            let row = |t: &Table| t.values()[r * ng..(r + 1) * ng].to_vec();
            assert!(dominates(&row(&by_level[lvl]), &row(&by_level[lvl - 1])), "level {lvl} row {r}");
        }
    }
}

use std::time::Instant;

use midas_core::assembly::{assemble, BlockingPriors, InitialState, SeasonSetup, Structure};
use midas_core::chain::solve_chain;
use midas_core::cultivation::CultivationFactors;
use midas_core::economics::Economics;
use midas_core::module::Field;
use midas_core::params::Params;
use midas_core::thermal::ThermalCalendar;
use midas_engine::inference::solve_id;
use midas_engine::Evidence;

#[test]
fn chain_matches_solve_id() {
    let p = Params::default();
    for n in 1..=3 {
        let setup = SeasonSetup {
            field: Field::from_cultivation(&CultivationFactors::default(), &p),
            economics: Economics::default(),
            calendar: ThermalCalendar::uniform(n),
            initial: InitialState::untreated(p.priors.fixed.clone()),
        };
        let m = assemble(&setup, &p, Structure::Blocked, &BlockingPriors::Fixed(p.priors.fixed.clone())).unwrap();
        let t0 = Instant::now();
        let c = solve_chain(&m, &Evidence::new()).unwrap();
        let t1 = Instant::now();
        let s = solve_id(&m.id).unwrap();
        eprintln!("n={n} chain {:?} id {:?} meu {} vs {}", t1 - t0, t1.elapsed(), c.result.meu, s.meu);
        assert!((c.result.meu - s.meu).abs() <= 1e-6 * s.meu.abs().max(1.0));
    }
}

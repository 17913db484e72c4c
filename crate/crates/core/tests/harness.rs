use std::sync::Arc;

use herodraft_core::harness::{round_robin, simulate_draft, sweep_exploration, SimulationConfig};
use herodraft_core::rng::DraftRng;
use herodraft_core::strategy::{RandomStrategy, StrategyContext, StrategySpec};
use herodraft_core::{
    hero_stats, mine_rules, run_tournament, synth_generate, DraftSchedule, DraftState, Error,
    GroundTruthModel, HeroId, Result, Strategy, Team,
};

struct RepeatsFirstHero;

impl Strategy for RepeatsFirstHero {
    fn label(&self) -> String {
        "repeat".into()
    }

    fn recommend(&self, state: &DraftState, _rng: &mut DraftRng) -> Result<HeroId> {
        Ok(state.history()[0])
    }
}

fn config(captain_mode: bool) -> (SimulationConfig, StrategyContext) {
    let truth = Arc::new(GroundTruthModel::random(24, 0.3, 10, 1.0, 1.0, 3).unwrap());
    let data = synth_generate(&truth, 3000, 4).unwrap();
    let stats = Arc::new(hero_stats(&data));
    let schedule = if captain_mode {
        DraftSchedule::captain_mode(24)
    } else {
        DraftSchedule::all_pick(24)
    };
    let mut cfg = SimulationConfig::new(Arc::new(schedule.unwrap()), truth.clone());
    cfg.n_simulations = 40;
    cfg.base_seed = 17;
    cfg.first_action_weights = Some(stats.clone());
    let ctx = StrategyContext {
        model: truth,
        stats: Some(stats),
        rules: Some(Arc::new(mine_rules(&data, 0.01, 3).unwrap())),
    };
    (cfg, ctx)
}

fn build(spec: &str, ctx: &StrategyContext) -> Box<dyn Strategy> {
    spec.parse::<StrategySpec>().unwrap().build(ctx).unwrap()
}

#[test]
fn swapped_tournaments_are_exactly_complementary() {
    for cm in [false, true] {
        let (cfg, ctx) = config(cm);
        let specs = ["rd", "hwr", "ar", "uct:30:1"];
        for (i, a) in specs.iter().enumerate() {
            for b in &specs[i + 1..] {
                let (sa, sb) = (build(a, &ctx), build(b, &ctx));
                let ab = run_tournament(&*sa, &*sb, &cfg).unwrap();
                let ba = run_tournament(&*sb, &*sa, &cfg).unwrap();
                assert_eq!(ab.mean_win_rate + ba.mean_win_rate, 1.0, "{a} vs {b}");
                assert_eq!(ab.opponent_mean_win_rate, ba.mean_win_rate);
            }
        }
    }
}

#[test]
fn terminal_compositions() {
    for (cm, bans) in [(false, 0), (true, 12)] {
        let (cfg, ctx) = config(cm);
        let r = run_tournament(&*build("ar", &ctx), &*build("uct:20:0.5", &ctx), &cfg).unwrap();
        for sim in &r.per_simulation {
            assert_eq!(sim.radiant_picks.len(), 5);
            assert_eq!(sim.dire_picks.len(), 5);
            assert_eq!(sim.bans.len(), bans);
            let mut all = sim.actions.clone();
            all.sort();
            all.dedup();
            assert_eq!(all.len(), 10 + bans);
        }
    }
}

#[test]
fn simulation_is_seed_deterministic() {
    let (mut cfg, ctx) = config(true);
    let a = build("uct:40:0.5", &ctx);
    let b = build("ar", &ctx);
    let x = simulate_draft(&*a, &*b, &cfg, 99).unwrap();
    let y = simulate_draft(&*a, &*b, &cfg, 99).unwrap();
    assert_eq!(x.state, y.state);
    assert_eq!(x.radiant_win_probability, y.radiant_win_probability);

    let serial = {
        cfg.parallel = false;
        run_tournament(&*a, &*b, &cfg).unwrap()
    };
    cfg.parallel = true;
    let parallel = run_tournament(&*a, &*b, &cfg).unwrap();
    assert_eq!(serial.per_simulation, parallel.per_simulation);
    assert_eq!(serial.mean_win_rate, parallel.mean_win_rate);
}

#[test]
fn swapped_pair_shares_first_action() {
    let (cfg, ctx) = config(false);
    let r = run_tournament(&*build("hwr", &ctx), &RandomStrategy, &cfg).unwrap();
    let half = cfg.n_simulations / 2;
    for j in 0..half {
        let (x, y) = (&r.per_simulation[j], &r.per_simulation[half + j]);
        assert!(x.a_is_radiant && !y.a_is_radiant);
        assert_eq!(x.seed, y.seed);
        assert_eq!(x.actions[0], y.actions[0]);
    }
}

#[test]
fn illegal_strategy_action_voids_the_run() {
    let (cfg, _) = config(false);
    let err = simulate_draft(&RandomStrategy, &RepeatsFirstHero, &cfg, 1).unwrap_err();
    match err {
        Error::Protocol {
            strategy,
            team,
            step,
            ..
        } => {
            assert_eq!(strategy, "repeat");
            assert_eq!(team, Team::Dire);
            assert_eq!(step, 1);
        }
        other => panic!("unexpected error {other}"),
    }
    assert!(run_tournament(&RandomStrategy, &RepeatsFirstHero, &cfg).is_err());
}

#[test]
fn random_self_play_is_even() {
    let (mut cfg, _) = config(false);
    cfg.n_simulations = 1000;
    cfg.swap_sides = false;
    let r = run_tournament(&RandomStrategy, &RandomStrategy, &cfg).unwrap();
    assert!(
        (0.45..=0.55).contains(&r.mean_win_rate),
        "{}",
        r.mean_win_rate
    );
}

#[test]
fn round_robin_matrix_and_csv() {
    let (mut cfg, ctx) = config(false);
    cfg.n_simulations = 20;
    let strategies = [build("hwr", &ctx), build("rd", &ctx), build("ar", &ctx)];
    let refs: Vec<&dyn Strategy> = strategies.iter().map(|s| &**s).collect();
    let (m, results) = round_robin(&refs, &cfg).unwrap();
    assert_eq!(results.len(), 3);
    for i in 0..3 {
        assert_eq!(m.get(i, i), None);
        for j in 0..3 {
            if i != j {
                assert_eq!(m.get(i, j).unwrap() + m.get(j, i).unwrap(), 1.0);
            }
        }
    }
    let csv = m.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "strategy,hwr,rd,ar");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("hwr,,"));
}

#[test]
fn sweep_self_play_column_is_even() {
    let (mut cfg, _) = config(false);
    cfg.n_simulations = 10;
    let s = sweep_exploration(&[10, 30], &[0.25, 1.0], 1.0, &cfg).unwrap();
    assert_eq!(s.cells.len(), 2);
    for row in &s.cells {
        assert_eq!(row[1], 0.5);
    }
    assert!(s.to_csv().starts_with("iterations,c=0.25,c=1,best_c\n"));
    assert!(sweep_exploration(&[], &[1.0], 1.0, &cfg).is_err());
}

#[test]
fn timing_skips_harness_first_action() {
    let (cfg, ctx) = config(true);
    let r = run_tournament(&*build("uct:10:1", &ctx), &RandomStrategy, &cfg).unwrap();
    // Captain Mode has 22 actions; the first is sampled by the harness.
    assert_eq!(
        r.timing_a.calls + r.timing_b.calls,
        21 * cfg.n_simulations as u64
    );
    assert!(r.timing_a.max_millis >= r.timing_a.mean_millis);
    let json: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
    assert_eq!(
        json["per_simulation"].as_array().unwrap().len(),
        cfg.n_simulations
    );
}

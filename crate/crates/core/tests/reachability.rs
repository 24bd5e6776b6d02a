mod oracles;

use rand::Rng;
use sls_core::automata::parse_dra;
use sls_core::game::{induced_chain, parse_game, MixedPolicy, Owner, StochasticGame};
use sls_core::gamec::{compute_gamecs, winning_region};
use sls_core::ltl::parse_ltl;
use sls_core::product::build_product;
use sls_core::reachability::{
    best_response_adversary, extract_policy, max_reach_value_iteration, modify_game, modify_product, modify_product_winning,
    project_policy, worst_case_satisfaction, Mode, ReachGame, ViOptions,
};

const EVASION: &str = include_str!("../../../data/evasion.sg");
const F_TARGET: &str = include_str!("../../../data/eventually_target.dra");
const F_A: &str = include_str!("../../../data/eventually_a.dra");
const GF_A: &str = include_str!("../../../data/infinitely_often_a.dra");

fn tight() -> ViOptions {
    ViOptions {
        delta: 1e-12,
        ..ViOptions::default()
    }
}

fn one_player(rng: &mut rand_chacha::ChaCha8Rng) -> StochasticGame {
    let shape = oracles::GameShape {
        states: rng.random_range(2..=20),
        max_ctrl: 3,
        max_adv: 1,
        max_support: 3,
        alphabet: vec!["a"],
    };
    oracles::random_game(rng, &shape)
}

fn random_reach(rng: &mut rand_chacha::ChaCha8Rng, g: &StochasticGame) -> ReachGame {
    let n = g.num_states();
    let mut target: Vec<bool> = (0..n).map(|_| rng.random_bool(0.15)).collect();
    target[n - 1] = true;
    modify_game(g, &target, vec![None; n], &vec![true; n])
}

#[test]
fn evasion_mixes_evenly_and_pure_policies_fail() {
    let g = parse_game(EVASION).unwrap();
    let dra = parse_dra(F_TARGET).unwrap();
    let p = build_product(&g, &dra).unwrap();
    let rg = modify_product_winning(&p, &winning_region(&p.game, &p.pairs, &p.reachable));
    let vv = max_reach_value_iteration(&rg, &ViOptions::default()).unwrap();
    let start = p.start_of(g.initial());
    assert!(vv.v[start] >= 1.0 - 1e-6);
    let mu = project_policy(&rg, &extract_policy(&rg, &vv).unwrap());
    assert!((mu.dist[start][0] - 0.5).abs() <= 1e-6);
    assert!((mu.dist[start][1] - 0.5).abs() <= 1e-6);

    // Against pure policies the adversary keeps the robot from the goal,
    // both for reaching the GAMECs and for the formula itself.
    let by_gamecs = modify_product(&p, &compute_gamecs(&p));
    let (l, k): (Vec<_>, Vec<_>) = p.pairs.iter().map(|z| (z.l.clone(), z.k.clone())).unzip();
    for uc in 0..g.num_ctrl(g.initial()) {
        let mut choice = vec![0; by_gamecs.game.num_states()];
        choice[start] = uc;
        let pure = MixedPolicy::pure(&by_gamecs.game, Owner::Controller, &choice);
        let (_, v) = best_response_adversary(&by_gamecs.game, &pure, &by_gamecs.target()).unwrap();
        assert!(v[start].abs() <= 1e-9, "action {uc}: {}", v[start]);
        let (_, sat) = worst_case_satisfaction(&p.game, &project_policy(&by_gamecs, &pure), &l, &k).unwrap();
        assert!(sat[start].abs() <= 1e-9);
    }
}

#[test]
fn single_adversary_action_matches_mdp_oracle() {
    let mut rng = oracles::rng(31);
    for _ in 0..50 {
        let g = one_player(&mut rng);
        let rg = random_reach(&mut rng, &g);
        let vv = max_reach_value_iteration(&rg, &tight()).unwrap();
        let want = oracles::mdp_max_reach(&g, &rg.accepting[..g.num_states()]);
        for s in 0..g.num_states() {
            assert!((vv.v[s] - want[s]).abs() <= 1e-6, "state {s}: {} vs {}", vv.v[s], want[s]);
        }
    }
}

#[test]
fn values_rise_monotonically() {
    let mut rng = oracles::rng(32);
    for _ in 0..50 {
        let shape = oracles::GameShape {
            states: rng.random_range(2..=12),
            max_ctrl: 3,
            max_adv: 3,
            max_support: 3,
            alphabet: vec!["a"],
        };
        let g = oracles::random_game(&mut rng, &shape);
        let rg = random_reach(&mut rng, &g);
        let vv = max_reach_value_iteration(&rg, &tight()).unwrap();
        for sweep in &vv.trace {
            assert!(sweep.min_increment >= -1e-12);
        }
        assert!(vv.v.iter().all(|&x| (-1e-12..=1.0 + 1e-12).contains(&x)));
    }
}

#[test]
fn relaxed_mode_stays_within_sweep_bound() {
    let mut rng = oracles::rng(33);
    for eps in [1e-2, 1e-3, 1e-4] {
        for _ in 0..20 {
            let shape = oracles::GameShape {
                states: rng.random_range(2..=10),
                max_ctrl: 2,
                max_adv: 2,
                max_support: 2,
                alphabet: vec!["a"],
            };
            let g = oracles::random_game(&mut rng, &shape);
            let rg = random_reach(&mut rng, &g);
            let opts = ViOptions {
                mode: Mode::Epsilon(eps),
                ..ViOptions::default()
            };
            let vv = max_reach_value_iteration(&rg, &opts).unwrap();
            assert!(vv.iterations as f64 <= vv.sweep_bound.unwrap());
            // Relaxed values are reached by strict iteration too, so they
            // stay below the strict limit.
            let strict = max_reach_value_iteration(&rg, &ViOptions { delta: 1e-9, ..ViOptions::default() }).unwrap();
            for s in 0..g.num_states() {
                assert!(vv.v[s] <= strict.v[s] + 1e-6);
            }
        }
    }
}

/// Satisfaction of the extracted policy against its worst adversary,
/// estimated from sampled lassos, agrees with the computed value.
#[test]
fn sampled_lassos_agree_with_values() {
    let mut rng = oracles::rng(34);
    let mut checked = 0;
    let mut attempts = 0;
    while checked < 5 {
        attempts += 1;
        assert!(attempts < 5000, "too few games with an intermediate value");
        let (text, formula) = if checked % 2 == 0 { (F_A, "F a") } else { (GF_A, "G F a") };
        let shape = oracles::GameShape {
            states: rng.random_range(3..=8),
            max_ctrl: 2,
            max_adv: 2,
            max_support: 2,
            alphabet: vec!["a"],
        };
        let g = oracles::random_game(&mut rng, &shape);
        let dra = parse_dra(text).unwrap();
        let p = build_product(&g, &dra).unwrap();
        let rg = modify_product_winning(&p, &winning_region(&p.game, &p.pairs, &p.reachable));
        let vv = max_reach_value_iteration(&rg, &ViOptions { delta: 1e-10, ..ViOptions::default() }).unwrap();
        let start = p.start_of(g.initial());
        let v = vv.v[start];
        if !(0.01..=0.99).contains(&v) {
            continue;
        }
        let mu = project_policy(&rg, &extract_policy(&rg, &vv).unwrap());
        let l: Vec<Vec<bool>> = p.pairs.iter().map(|z| z.l.clone()).collect();
        let k: Vec<Vec<bool>> = p.pairs.iter().map(|z| z.k.clone()).collect();
        let (tau, sat) = worst_case_satisfaction(&p.game, &mu, &l, &k).unwrap();
        assert!((sat[start] - v).abs() <= 1e-6, "policy value {} vs {v}", sat[start]);

        let chain = induced_chain(&p.game, &mu, &tau).unwrap();
        let labels: Vec<_> = (0..p.num_states()).map(|i| p.game.label_set(i)).collect();
        let runs = 10_000;
        let hits = sls_core::game::lasso_satisfaction(&chain, &labels, start, &parse_ltl(formula).unwrap(), runs, 7);
        let (lo, hi) = oracles::clopper_pearson(hits as u64, runs as u64, 0.05);
        assert!(lo <= v && v <= hi, "{formula}: value {v}, sampled {hits}/{runs}");
        checked += 1;
    }
}

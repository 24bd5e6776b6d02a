mod oracles;

use rand::Rng;
use sls_core::gamec::{compute_gamecs_on, winning_region};
use sls_core::product::ProductPair;

fn random_pairs(rng: &mut rand_chacha::ChaCha8Rng, n: usize) -> Vec<ProductPair> {
    (0..rng.random_range(1..=2))
        .map(|_| ProductPair {
            l: (0..n).map(|_| rng.random_bool(0.2)).collect(),
            k: (0..n).map(|_| rng.random_bool(0.4)).collect(),
        })
        .collect()
}

#[test]
fn matches_exhaustive_enumeration() {
    let mut rng = oracles::rng(21);
    let mut nonempty = 0;
    for case in 0..200 {
        let shape = oracles::GameShape {
            states: rng.random_range(1..=4),
            max_ctrl: 2,
            max_adv: 2,
            // Deterministic kernels for half the cases.
            max_support: if case % 2 == 0 { 1 } else { 2 },
            alphabet: vec!["a"],
        };
        let g = oracles::random_game(&mut rng, &shape);
        let pairs = random_pairs(&mut rng, g.num_states());
        let got = compute_gamecs_on(&g, &pairs, &vec![true; g.num_states()]);
        let want = oracles::gamecs(&g, &pairs);
        let got_list: Vec<_> = got
            .components
            .iter()
            .map(|c| (c.states.clone(), c.enabled.clone(), c.pair))
            .collect();
        assert_eq!(got_list, want, "case {case}:\n{}", g.to_text());
        for s in 0..g.num_states() {
            assert_eq!(got.accepting[s], want.iter().any(|c| c.0.contains(&s)));
        }
        nonempty += usize::from(!want.is_empty());
    }
    assert!(nonempty >= 20, "only {nonempty} instances had a component");
}

#[test]
fn components_are_disjoint_and_closed() {
    let mut rng = oracles::rng(22);
    for _ in 0..100 {
        let shape = oracles::GameShape {
            states: 8,
            max_ctrl: 3,
            max_adv: 2,
            max_support: 2,
            alphabet: vec!["a"],
        };
        let g = oracles::random_game(&mut rng, &shape);
        let pairs = random_pairs(&mut rng, 8);
        let set = compute_gamecs_on(&g, &pairs, &[true; 8]);
        let mut owner = [None; 8];
        for (h, c) in set.components.iter().enumerate() {
            for (&s, d) in c.states.iter().zip(&c.enabled) {
                assert!(owner[s].replace(h).is_none());
                for &uc in d {
                    for ua in 0..g.num_adv(s) {
                        assert!(g.row(s, uc, ua).iter().all(|&(t, _)| c.contains(t)));
                    }
                }
            }
            assert!(c.states.iter().all(|&s| !pairs[c.pair].l[s]));
        }
    }
}

#[test]
fn winning_region_matches_enumeration_and_holds_the_gamecs() {
    let mut rng = oracles::rng(23);
    for case in 0..200 {
        let shape = oracles::GameShape {
            states: rng.random_range(1..=4),
            max_ctrl: 2,
            max_adv: 2,
            max_support: if case % 2 == 0 { 1 } else { 2 },
            alphabet: vec!["a"],
        };
        let g = oracles::random_game(&mut rng, &shape);
        let n = g.num_states();
        let pairs = random_pairs(&mut rng, n);
        let w = winning_region(&g, &pairs, &vec![true; n]);
        let per_pair: Vec<Vec<bool>> = pairs.iter().map(|p| oracles::winning_states(&g, p)).collect();
        for s in 0..n {
            let first = per_pair.iter().position(|won| won[s]);
            assert_eq!(w.pair[s], first, "case {case} state {s}:\n{}", g.to_text());
            assert_eq!(w.states[s], first.is_some());
        }
        for c in compute_gamecs_on(&g, &pairs, &vec![true; n]).components {
            assert!(c.states.iter().all(|&s| w.states[s]));
        }
    }
}

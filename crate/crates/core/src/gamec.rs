//! Generalized accepting maximal end components of a product game.
//!
//! A sub-game `(C, D)` is closed when every controller action in `D(s)`
//! keeps the play inside `C` against every adversary action. Its underlying
//! digraph has an edge `s → s'` when some action pair with the controller
//! action in `D(s)` reaches `s'` with positive probability.
//!
//! A maximal component is accepting for a pair `z` when it avoids `L(z)`
//! and the uniform policy over `D` visits `K(z)` almost surely whatever the
//! adversary does, i.e. the adversary cannot keep the play inside `C \ K`
//! forever.

use crate::game::StochasticGame;
use crate::product::{ProductGame, ProductPair};
use crate::scc::strongly_connected_components;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gamec {
    /// Sorted member states.
    pub states: Vec<usize>,
    /// Enabled controller actions, aligned with `states`.
    pub enabled: Vec<Vec<usize>>,
    /// Index (from 0) of a Rabin pair witnessing acceptance.
    pub pair: usize,
}

impl Gamec {
    pub fn contains(&self, s: usize) -> bool {
        self.states.binary_search(&s).is_ok()
    }

    pub fn enabled_at(&self, s: usize) -> Option<&[usize]> {
        self.states
            .binary_search(&s)
            .ok()
            .map(|i| self.enabled[i].as_slice())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GamecSet {
    pub components: Vec<Gamec>,
    /// `E`: union of all component states.
    pub accepting: Vec<bool>,
}

impl GamecSet {
    pub fn component_of(&self, s: usize) -> Option<usize> {
        self.components.iter().position(|c| c.contains(s))
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

/// A maximal closed, strongly connected sub-game before the Rabin filter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EndComponent {
    pub states: Vec<usize>,
    pub enabled: Vec<Vec<usize>>,
}

/// Underlying digraph edges of `(C, D)` from `s`, where `inside` marks `C`.
pub fn underlying_successors(
    g: &StochasticGame,
    s: usize,
    enabled: &[usize],
    inside: &dyn Fn(usize) -> bool,
) -> Vec<usize> {
    let mut out: Vec<usize> = enabled
        .iter()
        .flat_map(|&uc| (0..g.num_adv(s)).flat_map(move |ua| g.row(s, uc, ua).iter().map(|&(t, _)| t)))
        .filter(|&t| inside(t))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Whether the adversary can keep the play in `C \ K` forever while the
/// controller mixes over all of `D`.
pub fn adversary_avoids(g: &StochasticGame, ec: &EndComponent, k: &[bool]) -> bool {
    let mut keep: Vec<bool> = ec.states.iter().map(|&s| !k[s]).collect();
    let local = |t: usize| ec.states.binary_search(&t).ok();
    loop {
        let mut changed = false;
        for (i, &s) in ec.states.iter().enumerate() {
            if !keep[i] {
                continue;
            }
            let stays = (0..g.num_adv(s)).any(|ua| {
                ec.enabled[i]
                    .iter()
                    .all(|&uc| g.row(s, uc, ua).iter().all(|&(t, _)| local(t).is_some_and(|j| keep[j])))
            });
            if !stays {
                keep[i] = false;
                changed = true;
            }
        }
        if !changed {
            return keep.iter().any(|&b| b);
        }
    }
}

/// Maximal end components among the `active` states, ordered by smallest
/// member.
pub fn maximal_end_components(g: &StochasticGame, active: &[bool]) -> Vec<EndComponent> {
    const NONE: usize = usize::MAX;
    let n = g.num_states();
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
    for s in 0..n {
        let mut succ: Vec<usize> = (0..g.num_ctrl(s))
            .flat_map(|uc| (0..g.num_adv(s)).flat_map(move |ua| g.row(s, uc, ua).iter().map(|&(t, _)| t)))
            .collect();
        succ.sort_unstable();
        succ.dedup();
        for t in succ {
            pred[t].push(s);
        }
    }

    let mut enabled: Vec<Vec<usize>> = (0..n).map(|s| (0..g.num_ctrl(s)).collect()).collect();
    let mut comp = vec![NONE; n];
    let mut next_id = 0usize;
    let mut pending: Vec<Vec<usize>> = Vec::new();
    let first: Vec<usize> = (0..n).filter(|&s| active[s]).collect();
    if !first.is_empty() {
        pending.push(first);
    }
    let mut done: Vec<EndComponent> = Vec::new();
    let mut queued = vec![false; n];

    while let Some(cand) = pending.pop() {
        let cid = next_id;
        next_id += 1;
        for &s in &cand {
            comp[s] = cid;
        }
        // Prune actions that may leave the candidate, then states with none.
        let mut queue = cand.clone();
        for &s in &queue {
            queued[s] = true;
        }
        while let Some(s) = queue.pop() {
            queued[s] = false;
            if comp[s] != cid {
                continue;
            }
            enabled[s].retain(|&uc| {
                (0..g.num_adv(s)).all(|ua| g.row(s, uc, ua).iter().all(|&(t, _)| comp[t] == cid))
            });
            if enabled[s].is_empty() {
                comp[s] = NONE;
                for &p in &pred[s] {
                    if comp[p] == cid && !queued[p] {
                        queued[p] = true;
                        queue.push(p);
                    }
                }
            }
        }
        let members: Vec<usize> = cand.into_iter().filter(|&s| comp[s] == cid).collect();
        if members.is_empty() {
            continue;
        }
        let local = |s: usize| members.binary_search(&s).ok();
        let adj: Vec<Vec<usize>> = members
            .iter()
            .map(|&s| {
                underlying_successors(g, s, &enabled[s], &|t| comp[t] == cid)
                    .into_iter()
                    .filter_map(local)
                    .collect()
            })
            .collect();
        let sccs = strongly_connected_components(&adj);
        if sccs.len() == 1 {
            let enabled_here = members.iter().map(|&s| enabled[s].clone()).collect();
            done.push(EndComponent {
                states: members,
                enabled: enabled_here,
            });
        } else {
            for c in sccs.into_iter().rev() {
                pending.push(c.into_iter().map(|i| members[i]).collect());
            }
        }
    }
    done.sort_by_key(|c| c.states[0]);
    done
}

/// Keeps the end components accepted by some pair: `L ∩ C = ∅`, and `K`
/// cannot be avoided inside `C`.
pub fn filter_accepting(g: &StochasticGame, ecs: Vec<EndComponent>, pairs: &[ProductPair]) -> GamecSet {
    let n = g.num_states();
    let mut components = Vec::new();
    let mut accepting = vec![false; n];
    for ec in ecs {
        let witness = pairs.iter().position(|p| {
            ec.states.iter().all(|&s| !p.l[s]) && !adversary_avoids(g, &ec, &p.k)
        });
        if let Some(z) = witness {
            for &s in &ec.states {
                accepting[s] = true;
            }
            components.push(Gamec {
                states: ec.states,
                enabled: ec.enabled,
                pair: z,
            });
        }
    }
    GamecSet {
        components,
        accepting,
    }
}

/// States from which the uniform policy over safe actions satisfies some
/// Rabin pair with probability 1 against any adversary.
///
/// For each pair `z`, `W_z` is the largest set of `active` states outside
/// `L(z)` with a non-empty action set `D_z(s)` that keeps the play in `W_z`
/// against every adversary action, and in which the adversary cannot stay
/// inside `W_z \ K(z)` forever while the controller mixes over `D_z`.
/// Every GAMEC of pair `z` lies in `W_z`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WinningRegion {
    /// Union of the `W_z`.
    pub states: Vec<bool>,
    /// `D_z(s)` for the first pair `z` whose set holds `s`.
    pub enabled: Vec<Option<Vec<usize>>>,
    pub pair: Vec<Option<usize>>,
}

/// Largest `W ⊆ allowed` closed under `D` with `D(s) ≠ ∅`; returns `D`.
fn safe_core(g: &StochasticGame, w: &mut [bool]) -> Vec<Vec<usize>> {
    let n = g.num_states();
    let mut d: Vec<Vec<usize>> = vec![Vec::new(); n];
    loop {
        let mut changed = false;
        for s in 0..n {
            if !w[s] {
                continue;
            }
            d[s] = (0..g.num_ctrl(s))
                .filter(|&uc| (0..g.num_adv(s)).all(|ua| g.row(s, uc, ua).iter().all(|&(t, _)| w[t])))
                .collect();
            if d[s].is_empty() {
                w[s] = false;
                changed = true;
            }
        }
        if !changed {
            return d;
        }
    }
}

/// Largest set inside `w \ k` the adversary can keep the play in against
/// every action of `d`.
fn adversary_trap(g: &StochasticGame, w: &[bool], d: &[Vec<usize>], k: &[bool]) -> Vec<bool> {
    let n = g.num_states();
    let mut t: Vec<bool> = (0..n).map(|s| w[s] && !k[s]).collect();
    loop {
        let mut changed = false;
        for s in 0..n {
            if t[s]
                && !(0..g.num_adv(s))
                    .any(|ua| d[s].iter().all(|&uc| g.row(s, uc, ua).iter().all(|&(x, _)| t[x])))
            {
                t[s] = false;
                changed = true;
            }
        }
        if !changed {
            return t;
        }
    }
}

pub fn winning_region(g: &StochasticGame, pairs: &[ProductPair], active: &[bool]) -> WinningRegion {
    let n = g.num_states();
    let mut region = WinningRegion {
        states: vec![false; n],
        enabled: vec![None; n],
        pair: vec![None; n],
    };
    for (z, p) in pairs.iter().enumerate() {
        let mut w: Vec<bool> = (0..n).map(|s| active[s] && !p.l[s]).collect();
        let d = loop {
            let d = safe_core(g, &mut w);
            let trap = adversary_trap(g, &w, &d, &p.k);
            if !trap.iter().any(|&x| x) {
                break d;
            }
            for s in 0..n {
                if trap[s] {
                    w[s] = false;
                }
            }
        };
        for s in 0..n {
            if w[s] && region.pair[s].is_none() {
                region.states[s] = true;
                region.enabled[s] = Some(d[s].clone());
                region.pair[s] = Some(z);
            }
        }
    }
    region
}

/// GAMECs over all states of `g`, for any game with lifted pairs.
pub fn compute_gamecs_on(g: &StochasticGame, pairs: &[ProductPair], active: &[bool]) -> GamecSet {
    let ecs = maximal_end_components(g, active);
    filter_accepting(g, ecs, pairs)
}

/// GAMECs of a product, restricted to its reachable states.
pub fn compute_gamecs(p: &ProductGame) -> GamecSet {
    compute_gamecs_on(&p.game, &p.pairs, &p.reachable)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::parse_game;

    fn pair(n: usize, l: &[usize], k: &[usize]) -> ProductPair {
        ProductPair {
            l: (0..n).map(|i| l.contains(&i)).collect(),
            k: (0..n).map(|i| k.contains(&i)).collect(),
        }
    }

    #[test]
    fn absorbing_accepting_state() {
        let g = parse_game("sg v1\nalphabet\nstates s\ninitial s\nactions\ns C:a A:x\ntransitions\ns a x s 1\n").unwrap();
        let set = compute_gamecs_on(&g, &[pair(1, &[], &[0])], &[true]);
        assert_eq!(set.components.len(), 1);
        assert_eq!(set.components[0].states, vec![0]);
        assert_eq!(set.components[0].enabled, vec![vec![0]]);
    }

    #[test]
    fn adversary_can_push_out() {
        // s0 stays unless the adversary plays `out`; s1 is a sink.
        let text = "sg v1\nalphabet\nstates s0 s1\ninitial s0\nactions\ns0 C:a A:in,out\ns1 C:a A:x\ntransitions\ns0 a in s0 1\ns0 a out s1 1\ns1 a x s1 1\n";
        let g = parse_game(text).unwrap();
        let set = compute_gamecs_on(&g, &[pair(2, &[], &[0, 1])], &[true, true]);
        assert_eq!(set.components.len(), 1);
        assert_eq!(set.components[0].states, vec![1]);
        assert!(!set.accepting[0]);
    }

    #[test]
    fn l_states_reject_component() {
        let text = "sg v1\nalphabet\nstates s0 s1\ninitial s0\nactions\ns0 C:a A:x\ns1 C:a A:x\ntransitions\ns0 a x s1 1\ns1 a x s0 1\n";
        let g = parse_game(text).unwrap();
        let set = compute_gamecs_on(&g, &[pair(2, &[1], &[0])], &[true, true]);
        assert!(set.is_empty());
        let set = compute_gamecs_on(&g, &[pair(2, &[], &[0])], &[true, true]);
        assert_eq!(set.components[0].states, vec![0, 1]);
    }
}

//! Seeded random cores for property tests and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::coresg::{CoreBuilder, CoreSG, NodeKind};

/// Shape of a random core.
#[derive(Clone, Copy, Debug)]
pub struct Shape {
    /// Ego nodes with more than one action.
    pub ego_choices: usize,
    /// Env nodes with more than one action.
    pub env_choices: usize,
    /// Single-action nodes (pure chance steps).
    pub chance: usize,
    /// Maximum actions at a choice node.
    pub max_actions: usize,
    /// Maximum successors of one action.
    pub max_succ: usize,
}

impl Shape {
    /// MDP with about `nodes` nodes.
    pub fn mdp(nodes: usize) -> Shape {
        let ego = (nodes / 2).max(1);
        Shape { ego_choices: ego, env_choices: 0, chance: nodes.saturating_sub(ego + 2), max_actions: 3, max_succ: 2 }
    }

    /// Game small enough for the oracles: binary choices only.
    pub fn small_game(ego_choices: usize, env_choices: usize, chance: usize) -> Shape {
        Shape { ego_choices, env_choices, chance, max_actions: 2, max_succ: 2 }
    }
}

/// Random acyclic core. Node order is random; every action points to later
/// nodes or to a terminal, so nodes early in the order form deeper games.
pub fn random_core<R: Rng>(rng: &mut R, shape: &Shape) -> CoreSG {
    let mut kinds: Vec<(NodeKind, usize)> = Vec::new();
    kinds.extend((0..shape.ego_choices).map(|_| (NodeKind::Ego, rng.gen_range(2..=shape.max_actions.max(2)))));
    kinds.extend((0..shape.env_choices).map(|_| (NodeKind::Env, rng.gen_range(2..=shape.max_actions.max(2)))));
    kinds.extend((0..shape.chance).map(|_| (if rng.gen_bool(0.5) { NodeKind::Ego } else { NodeKind::Env }, 1)));
    kinds.shuffle(rng);
    if kinds.is_empty() {
        kinds.push((NodeKind::Ego, 2));
    }
    let mut b = CoreBuilder::new();
    let ids: Vec<usize> = kinds.iter().map(|(k, _)| b.node(*k)).collect();
    let (top, bot) = (b.top(), b.bot());
    let n = ids.len();
    for i in 0..n {
        for a in 0..kinds[i].1 {
            let k = rng.gen_range(1..=shape.max_succ.max(1));
            let mut succ: Vec<(usize, f64)> = Vec::with_capacity(k);
            for _ in 0..k {
                // later node with probability 3/4 while any remain
                let target = if i + 1 < n && rng.gen_bool(0.75) {
                    // favour near successors so games stay connected
                    let span = (n - i - 1).min(4);
                    ids[i + 1 + rng.gen_range(0..span)]
                } else if rng.gen_bool(0.5) {
                    top
                } else {
                    bot
                };
                let w: f64 = rng.gen_range(0.1..1.0);
                match succ.iter_mut().find(|s| s.0 == target) {
                    Some(s) => s.1 += w,
                    None => succ.push((target, w)),
                }
            }
            let z: f64 = succ.iter().map(|s| s.1).sum();
            succ.iter_mut().for_each(|s| s.1 /= z);
            b.action(ids[i], &format!("a{a}"), &succ);
        }
    }
    b.build(ids[0]).expect("random core is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shapes_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let c = random_core(&mut rng, &Shape::mdp(30));
            assert!(c.is_mdp() && c.len() <= 32);
            let g = random_core(&mut rng, &Shape::small_game(3, 6, 6));
            assert!(g.ego_choice_nodes().len() <= 3 && g.env_choice_nodes().len() <= 6);
        }
    }

    #[test]
    fn seeded() {
        let a = random_core(&mut ChaCha8Rng::seed_from_u64(9), &Shape::small_game(2, 2, 2));
        let b = random_core(&mut ChaCha8Rng::seed_from_u64(9), &Shape::small_game(2, 2, 2));
        assert_eq!(a, b);
    }
}

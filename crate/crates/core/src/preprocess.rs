//! Monitor-product unrolling and hard-constraint pruning.
//!
//! `unroll` builds the layered product of the game with the hard and soft
//! monitors up to the horizon. `prune_hard` removes every node from which env
//! can force a hard violation with positive probability, then merges the
//! surviving leaves into top/bot by soft-monitor classification.

use std::collections::HashMap;

use thiserror::Error;

use crate::coresg::{CoreBuilder, CoreError, CoreSG, NodeKind, Provenance};
use crate::game::{Owner, StochasticGame};
use crate::monitor::{Classification, Monitor};

#[derive(Debug, Error, PartialEq)]
pub enum PreprocessError {
    #[error("horizon must be at least one logical step")]
    HorizonZero,
    #[error("env can force a hard-constraint violation from the initial state")]
    UnrealizableHard,
    #[error(transparent)]
    Core(#[from] CoreError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LeafClass {
    pub hard: Classification,
    pub soft: Classification,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnrolledNode {
    pub state: usize,
    pub hard: usize,
    pub soft: usize,
    /// Half-steps from the initial node.
    pub depth: usize,
    pub owner: Owner,
    pub leaf: Option<LeafClass>,
    /// `(game action, successor distribution)`.
    pub actions: Vec<(usize, Vec<(usize, f64)>)>,
}

/// Layered product graph; nodes are in breadth-first (depth-major) order.
#[derive(Clone, Debug)]
pub struct Unrolled {
    pub nodes: Vec<UnrolledNode>,
    pub action_names: Vec<String>,
    pub state_ids: Vec<String>,
    pub hard_names: Vec<String>,
    pub soft_names: Vec<String>,
}

/// Product of `game` with both monitors. `horizon` counts logical steps (one
/// ego move plus one env move); paths are cut after `2 * horizon` half-steps
/// or at terminal game states.
pub fn unroll(game: &StochasticGame, hard: &Monitor, soft: &Monitor, horizon: usize) -> Result<Unrolled, PreprocessError> {
    if horizon == 0 {
        return Err(PreprocessError::HorizonZero);
    }
    let max_depth = 2 * horizon;
    let mut index: HashMap<(usize, usize, usize, usize), usize> = HashMap::new();
    let mut nodes: Vec<UnrolledNode> = Vec::new();
    let init = game.initial;
    let key = (init, hard.step_fast(hard.init, init), soft.step_fast(soft.init, init), 0);
    index.insert(key, 0);
    nodes.push(UnrolledNode {
        state: key.0,
        hard: key.1,
        soft: key.2,
        depth: 0,
        owner: game.owner(init),
        leaf: None,
        actions: Vec::new(),
    });
    let mut next = 0;
    while next < nodes.len() {
        let (s, hq, sq, d) = {
            let n = &nodes[next];
            (n.state, n.hard, n.soft, n.depth)
        };
        if game.is_terminal(s) || d == max_depth {
            nodes[next].leaf = Some(LeafClass { hard: hard.classify(hq), soft: soft.classify(sq) });
            next += 1;
            continue;
        }
        let mut actions = Vec::with_capacity(game.transitions[s].len());
        for t in &game.transitions[s] {
            let mut dist: Vec<(usize, f64)> = Vec::with_capacity(t.to.len());
            for (s2, p) in &t.to {
                let p = p.value();
                if p <= 0.0 {
                    continue;
                }
                let k = (*s2, hard.step_fast(hq, *s2), soft.step_fast(sq, *s2), d + 1);
                let id = *index.entry(k).or_insert_with(|| {
                    nodes.push(UnrolledNode {
                        state: k.0,
                        hard: k.1,
                        soft: k.2,
                        depth: k.3,
                        owner: game.owner(k.0),
                        leaf: None,
                        actions: Vec::new(),
                    });
                    nodes.len() - 1
                });
                match dist.iter_mut().find(|(m, _)| *m == id) {
                    Some(e) => e.1 += p,
                    None => dist.push((id, p)),
                }
            }
            actions.push((t.action, dist));
        }
        nodes[next].actions = actions;
        next += 1;
    }
    Ok(Unrolled {
        nodes,
        action_names: game.actions.clone(),
        state_ids: game.states.iter().map(|s| s.id.clone()).collect(),
        hard_names: hard.names.clone(),
        soft_names: soft.names.clone(),
    })
}

/// Marks nodes from which env can force reaching a hard-rejecting leaf with
/// positive probability.
pub fn losing_nodes(g: &Unrolled) -> Vec<bool> {
    let mut losing = vec![false; g.nodes.len()];
    for i in (0..g.nodes.len()).rev() {
        let n = &g.nodes[i];
        losing[i] = match n.leaf {
            Some(c) => c.hard == Classification::Reject,
            None => {
                let touches = |d: &Vec<(usize, f64)>| d.iter().any(|(m, _)| losing[*m]);
                match n.owner {
                    Owner::Env => n.actions.iter().any(|(_, d)| touches(d)),
                    Owner::Ego => n.actions.iter().all(|(_, d)| touches(d)),
                }
            }
        };
    }
    losing
}

/// Removes losing nodes and the ego actions that touch them, then merges the
/// leaves into top/bot.
pub fn prune_hard(g: &Unrolled) -> Result<CoreSG, PreprocessError> {
    let losing = losing_nodes(g);
    if losing[0] {
        return Err(PreprocessError::UnrealizableHard);
    }
    let mut b = CoreBuilder::new();
    let mut id = vec![usize::MAX; g.nodes.len()];
    for (i, n) in g.nodes.iter().enumerate() {
        if losing[i] {
            continue;
        }
        id[i] = match n.leaf {
            Some(c) if c.soft == Classification::Accept => b.top(),
            Some(_) => b.bot(),
            None => {
                let kind = match n.owner {
                    Owner::Ego => NodeKind::Ego,
                    Owner::Env => NodeKind::Env,
                };
                let v = b.node(kind);
                b.set_provenance(
                    v,
                    Provenance {
                        state: g.state_ids[n.state].clone(),
                        hard: g.hard_names[n.hard].clone(),
                        soft: g.soft_names[n.soft].clone(),
                        depth: n.depth,
                    },
                );
                v
            }
        };
    }
    for (i, n) in g.nodes.iter().enumerate() {
        if losing[i] || n.leaf.is_some() {
            continue;
        }
        for (a, dist) in &n.actions {
            if dist.iter().any(|(m, _)| losing[*m]) {
                continue;
            }
            let succ: Vec<(usize, f64)> = dist.iter().map(|(m, p)| (id[*m], *p)).collect();
            b.action(id[i], &g.action_names[*a], &succ);
        }
    }
    Ok(b.build(id[0])?)
}

/// `unroll` followed by `prune_hard`.
pub fn preprocess(game: &StochasticGame, hard: &Monitor, soft: &Monitor, horizon: usize) -> Result<CoreSG, PreprocessError> {
    prune_hard(&unroll(game, hard, soft, horizon)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::game::{GameBuilder, Prob};

    fn toy_monitors(g: &StochasticGame) -> (Monitor, Monitor) {
        (Monitor::trivial(g), Monitor::reach(g, &["top"]).unwrap())
    }

    #[test]
    fn toy_game_unrolls_to_itself() {
        let g = fixtures::toy_game();
        let (h, s) = toy_monitors(&g);
        let core = preprocess(&g, &h, &s, 4).unwrap();
        let reference = fixtures::toy_core();
        assert_eq!(core.stats(), reference.stats());
        // same kinds and transition structure under the shared numbering
        for (a, b) in core.nodes.iter().zip(&reference.nodes) {
            assert_eq!(a.kind, b.kind);
            assert_eq!(a.actions.len(), b.actions.len());
            for (x, y) in a.actions.iter().zip(&b.actions) {
                let mut xs = x.succ.clone();
                let mut ys = y.succ.clone();
                xs.sort_by(|p, q| p.0.cmp(&q.0));
                ys.sort_by(|p, q| p.0.cmp(&q.0));
                assert_eq!(xs.len(), ys.len());
                for (p, q) in xs.iter().zip(&ys) {
                    assert_eq!(p.0, q.0);
                    assert!((p.1 - q.1).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn horizon_zero_rejected() {
        let g = fixtures::toy_game();
        let (h, s) = toy_monitors(&g);
        assert_eq!(unroll(&g, &h, &s, 0).unwrap_err(), PreprocessError::HorizonZero);
    }

    #[test]
    fn one_step_cut() {
        let g = fixtures::toy_game();
        let (h, s) = toy_monitors(&g);
        let u = unroll(&g, &h, &s, 1).unwrap();
        assert!(u.nodes.iter().all(|n| n.depth <= 2));
        assert!(u.nodes.iter().filter(|n| n.depth == 2).all(|n| n.leaf.is_some()));
        // s3 at depth 2 is cut and rejected by the reach monitor
        let core = prune_hard(&u).unwrap();
        assert_eq!(core.stats().nodes, 5);
    }

    #[test]
    fn vacuous_hard_constraint_prunes_nothing() {
        let g = fixtures::toy_game();
        let (h, s) = toy_monitors(&g);
        let u = unroll(&g, &h, &s, 4).unwrap();
        assert!(losing_nodes(&u).iter().all(|l| !l));
    }

    #[test]
    fn risky_ego_action_is_removed() {
        // ego s0: `risky` hits crash with 1/2, `safe` goes to env e -> top.
        let mut b = GameBuilder::new();
        b.state("s0", Owner::Ego).unwrap();
        b.state("e", Owner::Env).unwrap();
        b.state("crash", Owner::Ego).unwrap();
        b.state("top", Owner::Ego).unwrap();
        let half = Prob::Exact { num: 1, den: 2 };
        b.transition("s0", "risky", &[("crash", half.clone()), ("e", half)]).unwrap();
        b.transition("s0", "safe", &[("e", Prob::one())]).unwrap();
        b.transition("e", "go", &[("top", Prob::one())]).unwrap();
        let g = b.build("s0").unwrap();
        let hard = Monitor::reach(&g, &["crash"]).unwrap();
        // hard accepts iff crash never seen: invert the reach monitor
        let hard = Monitor::from_fn(&g, hard.names.clone(), 0, vec![true, false], |q, s| hard.step(q, s).unwrap());
        let soft = Monitor::reach(&g, &["top"]).unwrap();
        let core = preprocess(&g, &hard, &soft, 3).unwrap();
        assert_eq!(core.nodes[core.initial].actions.len(), 1);
        assert_eq!(core.action_name(core.initial, 0), "safe");

        // with only the risky action the initial node is losing
        let mut b = GameBuilder::new();
        b.state("s0", Owner::Ego).unwrap();
        b.state("crash", Owner::Ego).unwrap();
        b.state("top", Owner::Ego).unwrap();
        let half = Prob::Exact { num: 1, den: 2 };
        b.transition("s0", "risky", &[("crash", half.clone()), ("top", half)]).unwrap();
        let g = b.build("s0").unwrap();
        let r = Monitor::reach(&g, &["crash"]).unwrap();
        let hard = Monitor::from_fn(&g, r.names.clone(), 0, vec![true, false], |q, s| r.step(q, s).unwrap());
        let soft = Monitor::reach(&g, &["top"]).unwrap();
        assert_eq!(preprocess(&g, &hard, &soft, 2).unwrap_err(), PreprocessError::UnrealizableHard);
    }
}

//! Exact evaluation of Markov policies on a core game.
//!
//! Entropy is measured in nats over ego's choices only (causal entropy);
//! chance and env moves contribute nothing.

use serde::{Deserialize, Serialize};

use crate::coresg::{CoreSG, NodeKind};
use crate::game::Owner;
use crate::par;

/// Shannon entropy in nats with `0 ln 0 = 0`.
pub fn entropy(dist: &[f64]) -> f64 {
    dist.iter().filter(|&&q| q > 0.0).map(|&q| -q * q.ln()).sum()
}

/// Per-node distribution over the node's enabled actions (by position).
/// Terminal rows are empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovPolicy {
    pub dist: Vec<Vec<f64>>,
}

impl MarkovPolicy {
    pub fn uniform(core: &CoreSG) -> MarkovPolicy {
        MarkovPolicy {
            dist: core
                .nodes
                .iter()
                .map(|n| {
                    let k = n.actions.len();
                    vec![1.0 / k as f64; k]
                })
                .collect(),
        }
    }

    /// Point mass on `choice[n]` at every non-terminal node.
    pub fn deterministic(core: &CoreSG, choice: &[usize]) -> MarkovPolicy {
        MarkovPolicy {
            dist: core
                .nodes
                .iter()
                .enumerate()
                .map(|(i, n)| (0..n.actions.len()).map(|a| if a == choice[i] { 1.0 } else { 0.0 }).collect())
                .collect(),
        }
    }

    /// Plays the named action wherever it is enabled and the first action
    /// elsewhere.
    pub fn prefer(core: &CoreSG, name: &str) -> MarkovPolicy {
        let choice: Vec<usize> = (0..core.len()).map(|n| core.action_position(n, name).unwrap_or(0)).collect();
        MarkovPolicy::deterministic(core, &choice)
    }

    pub fn at(&self, n: usize) -> &[f64] {
        &self.dist[n]
    }

    /// Checks shape and that every non-terminal row sums to one.
    pub fn is_valid_for(&self, core: &CoreSG, tol: f64) -> bool {
        self.dist.len() == core.len()
            && core.nodes.iter().zip(&self.dist).all(|(n, d)| {
                d.len() == n.actions.len()
                    && (n.kind.is_terminal() || (d.iter().all(|&q| q >= -tol) && (d.iter().sum::<f64>() - 1.0).abs() <= tol))
            })
    }
}

/// Performance `p` (probability of reaching top) and causal entropy `h`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub p: f64,
    pub h: f64,
}

impl Point {
    pub fn new(p: f64, h: f64) -> Point {
        Point { p, h }
    }

    /// Weakly better in both coordinates, up to `tol`.
    pub fn dominates(&self, other: &Point, tol: f64) -> bool {
        self.p >= other.p - tol && self.h >= other.h - tol
    }

    /// `w * a + (1 - w) * b`.
    pub fn mix(a: &Point, b: &Point, w: f64) -> Point {
        Point { p: w * a.p + (1.0 - w) * b.p, h: w * a.h + (1.0 - w) * b.h }
    }
}

fn expect(core: &CoreSG, n: usize, a: usize, v: &[f64]) -> f64 {
    core.nodes[n].actions[a].succ.iter().map(|(m, q)| q * v[*m]).sum()
}

fn owner_policy<'a>(core: &CoreSG, n: usize, ego: &'a MarkovPolicy, env: &'a MarkovPolicy) -> &'a [f64] {
    match core.kind(n).owner() {
        Some(Owner::Ego) => ego.at(n),
        _ => env.at(n),
    }
}

/// Value vectors `(p, h)` for every node under a fixed strategy profile.
pub fn evaluate_all(core: &CoreSG, ego: &MarkovPolicy, env: &MarkovPolicy) -> (Vec<f64>, Vec<f64>) {
    let len = core.len();
    let mut p = vec![0.0; len];
    let mut h = vec![0.0; len];
    for n in (0..len).rev() {
        match core.kind(n) {
            NodeKind::Top => p[n] = 1.0,
            NodeKind::Bot => {}
            kind => {
                let pi = owner_policy(core, n, ego, env);
                let mut pv = 0.0;
                let mut hv = if kind == NodeKind::Ego { entropy(pi) } else { 0.0 };
                for (a, &w) in pi.iter().enumerate() {
                    if w > 0.0 {
                        pv += w * expect(core, n, a, &p);
                        hv += w * expect(core, n, a, &h);
                    }
                }
                p[n] = pv;
                h[n] = hv;
            }
        }
    }
    (p, h)
}

pub fn evaluate(core: &CoreSG, ego: &MarkovPolicy, env: &MarkovPolicy) -> Point {
    let (p, h) = evaluate_all(core, ego, env);
    Point { p: p[core.initial], h: h[core.initial] }
}

pub fn performance(core: &CoreSG, ego: &MarkovPolicy, env: &MarkovPolicy) -> f64 {
    evaluate(core, ego, env).p
}

pub fn causal_entropy(core: &CoreSG, ego: &MarkovPolicy, env: &MarkovPolicy) -> f64 {
    evaluate(core, ego, env).h
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Objective {
    Performance,
    Entropy,
}

/// Env's best response minimizing one objective against a fixed ego policy.
/// Returns per-node values and the deterministic env policy attaining them.
pub fn min_pass(core: &CoreSG, ego: &MarkovPolicy, objective: Objective) -> (Vec<f64>, MarkovPolicy) {
    let len = core.len();
    let mut v = vec![0.0; len];
    let mut choice = vec![0usize; len];
    for n in (0..len).rev() {
        v[n] = match core.kind(n) {
            NodeKind::Top => f64::from(objective == Objective::Performance),
            NodeKind::Bot => 0.0,
            NodeKind::Ego => {
                let pi = ego.at(n);
                let own = if objective == Objective::Entropy { entropy(pi) } else { 0.0 };
                own + pi.iter().enumerate().filter(|(_, w)| **w > 0.0).map(|(a, w)| w * expect(core, n, a, &v)).sum::<f64>()
            }
            NodeKind::Env => {
                let mut best = f64::INFINITY;
                for a in 0..core.nodes[n].actions.len() {
                    let x = expect(core, n, a, &v);
                    if x < best {
                        best = x;
                        choice[n] = a;
                    }
                }
                best
            }
        };
    }
    (v, MarkovPolicy::deterministic(core, &choice))
}

/// Componentwise worst case over env: `(min_env p, min_env h)`. The two
/// minima may be attained by different env strategies.
pub fn guaranteed_point(core: &CoreSG, ego: &MarkovPolicy, parallel: bool) -> Point {
    let (p, h) = par::join(
        parallel,
        || min_pass(core, ego, Objective::Performance).0[core.initial],
        || min_pass(core, ego, Objective::Entropy).0[core.initial],
    );
    Point { p, h }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;

    /// Forward enumeration of every path with its probability.
    fn forward(core: &CoreSG, ego: &MarkovPolicy, env: &MarkovPolicy) -> Point {
        fn go(core: &CoreSG, ego: &MarkovPolicy, env: &MarkovPolicy, n: usize, w: f64, acc: &mut Point) {
            match core.kind(n) {
                NodeKind::Top => acc.p += w,
                NodeKind::Bot => {}
                kind => {
                    let pi = owner_policy(core, n, ego, env);
                    if kind == NodeKind::Ego {
                        acc.h += w * entropy(pi);
                    }
                    for (a, &q) in pi.iter().enumerate() {
                        for (m, r) in &core.nodes[n].actions[a].succ {
                            if q * r > 0.0 {
                                go(core, ego, env, *m, w * q * r, acc);
                            }
                        }
                    }
                }
            }
        }
        let mut acc = Point::new(0.0, 0.0);
        go(core, ego, env, core.initial, 1.0, &mut acc);
        acc
    }

    #[test]
    fn toy_uniform_against_a() {
        let core = fixtures::toy_core();
        let ego = MarkovPolicy::uniform(&core);
        let env = MarkovPolicy::prefer(&core, "a");
        let pt = evaluate(&core, &ego, &env);
        assert!((pt.p - 0.25).abs() < 1e-12);
        assert!((pt.h - 1.5 * 2f64.ln()).abs() < 1e-12);
        let f = forward(&core, &ego, &env);
        assert!((f.p - pt.p).abs() < 1e-12 && (f.h - pt.h).abs() < 1e-12);
    }

    #[test]
    fn guaranteed_point_is_min_of_profiles() {
        let core = fixtures::toy_core();
        let ego = MarkovPolicy::uniform(&core);
        let g = guaranteed_point(&core, &ego, true);
        assert_eq!(g, guaranteed_point(&core, &ego, false));
        // env at s1 plays b: s3 then reaches top with 1/6
        assert!((g.p - 1.0 / 6.0).abs() < 1e-12);
        // h: s1 a gives 0, s1 b gives ln 2; minimum is 0 at s1
        assert!((g.h - 1.5 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn policy_validation() {
        let core = fixtures::toy_core();
        assert!(MarkovPolicy::uniform(&core).is_valid_for(&core, 1e-12));
        let mut bad = MarkovPolicy::uniform(&core);
        bad.dist[0][0] = 0.9;
        assert!(!bad.is_valid_for(&core, 1e-12));
    }

    fn random_policy(core: &CoreSG, seeds: &[f64]) -> MarkovPolicy {
        let mut it = seeds.iter().cycle();
        MarkovPolicy {
            dist: core
                .nodes
                .iter()
                .map(|n| {
                    let raw: Vec<f64> = n.actions.iter().map(|_| it.next().unwrap() + 1e-3).collect();
                    let s: f64 = raw.iter().sum();
                    raw.into_iter().map(|x| x / s).collect()
                })
                .collect(),
        }
    }

    proptest! {
        #[test]
        fn backward_matches_forward(seeds in proptest::collection::vec(0.0f64..1.0, 8)) {
            let core = fixtures::matching_example();
            let ego = random_policy(&core, &seeds);
            let env = random_policy(&core, &seeds[3..]);
            let a = evaluate(&core, &ego, &env);
            let b = forward(&core, &ego, &env);
            prop_assert!((a.p - b.p).abs() < 1e-12 && (a.h - b.h).abs() < 1e-12);
            prop_assert!(a.p >= 0.0 && a.p <= 1.0);
            // ego decides at most twice along a path: ln 2 + ln 3 is an upper bound
            prop_assert!(a.h <= 2f64.ln() + 3f64.ln() + 1e-12);
            let g = guaranteed_point(&core, &ego, false);
            prop_assert!(g.p <= a.p + 1e-12 && g.h <= a.h + 1e-12);
        }
    }
}

//! Episode execution, exact evaluation and Monte-Carlo validation of
//! improvisers.
//!
//! An improviser carries a discrete mode fixed or updated during an episode:
//! the chosen component of a Markov mixture, or the grid index of the active
//! front sample for entropy matching. Matching improvisers update the mode
//! only after env moves at env nodes with a real choice: the owed entropy of
//! the node is re-matched on the branch env actually took.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coresg::{CoreSG, NodeKind};
use crate::eval::{entropy, MarkovPolicy, Point};
use crate::par;
use crate::sg::{match_rationality, FrontTables, HP};

#[derive(Debug, Error, PartialEq)]
pub enum RuntimeError {
    #[error("node {next} is not a successor of node {node} under action {action}")]
    OffSupportObservation { node: usize, action: usize, next: usize },
    #[error("step called at non-ego node {0}")]
    StepOnEnvNode(usize),
    #[error("action {action} is not enabled at node {node}")]
    BadAction { node: usize, action: usize },
    #[error("episode already ended")]
    EpisodeOver,
}

#[derive(Clone, Debug)]
pub enum Improviser {
    /// Coin at episode start picks one Markov policy.
    Markov { components: Vec<(f64, MarkovPolicy)> },
    /// Entropy matching over shared front tables; coin at episode start picks
    /// the initial grid index.
    Matching { tables: Arc<FrontTables>, start: Vec<(f64, usize)> },
}

/// Mode distribution after an env move.
pub type Transfer = Vec<(f64, usize)>;

impl Improviser {
    pub fn single(policy: MarkovPolicy) -> Improviser {
        Improviser::Markov { components: vec![(1.0, policy)] }
    }

    pub fn modes(&self) -> usize {
        match self {
            Improviser::Markov { components } => components.len(),
            Improviser::Matching { tables, .. } => tables.grid.len(),
        }
    }

    pub fn start(&self) -> Vec<(f64, usize)> {
        match self {
            Improviser::Markov { components } => components.iter().enumerate().map(|(i, (w, _))| (*w, i)).collect(),
            Improviser::Matching { start, .. } => start.clone(),
        }
    }

    /// Action distribution at ego node `n` in `mode`.
    pub fn ego_dist(&self, core: &CoreSG, n: usize, mode: usize) -> Vec<f64> {
        match self {
            Improviser::Markov { components } => components[mode].1.at(n).to_vec(),
            Improviser::Matching { tables, .. } => tables.ego_dist(core, n, mode),
        }
    }

    /// Rationality of the active sample, for matching improvisers.
    pub fn lambda(&self, mode: usize) -> Option<f64> {
        match self {
            Improviser::Markov { .. } => None,
            Improviser::Matching { tables, .. } => Some(tables.grid[mode]),
        }
    }

    /// Entropy still owed at node `n`, for matching improvisers.
    pub fn owed(&self, n: usize, mode: usize) -> Option<f64> {
        match self {
            Improviser::Markov { .. } => None,
            Improviser::Matching { tables, .. } => Some(tables.samples[n][mode].0),
        }
    }

    /// Mode distribution after env plays `a` at node `n`.
    pub fn transfer(&self, core: &CoreSG, n: usize, mode: usize, a: usize) -> Transfer {
        match self {
            Improviser::Matching { tables, .. } if core.nodes[n].actions.len() > 1 => {
                rematch(&tables.branch(core, n, a), tables.samples[n][mode].0)
            }
            _ => vec![(1.0, mode)],
        }
    }

    /// Transfers for every mode at env node `n` under action `a`.
    fn transfers(&self, core: &CoreSG, n: usize, a: usize) -> Vec<Transfer> {
        match self {
            Improviser::Matching { tables, .. } if core.nodes[n].actions.len() > 1 => {
                let b = tables.branch(core, n, a);
                tables.samples[n].iter().map(|s| rematch(&b, s.0)).collect()
            }
            _ => (0..self.modes()).map(|m| vec![(1.0, m)]).collect(),
        }
    }

    /// Exact `(p, h)` against a fixed env Markov policy.
    pub fn evaluate(&self, core: &CoreSG, env: &MarkovPolicy) -> Point {
        self.backward(core, |_, vals| {
            let mut acc = (0.0, 0.0);
            for (a, v) in vals.iter().enumerate() {
                let w = env.at(v.0)[a];
                acc.0 += w * v.1 .0;
                acc.1 += w * v.1 .1;
            }
            acc
        })
        .0
    }

    /// Worst case over env, taken separately per objective and allowed to
    /// depend on the mode. This lower-bounds every node-Markov and every
    /// history-dependent env.
    pub fn guaranteed_point(&self, core: &CoreSG) -> Point {
        self.backward(core, |_, vals| {
            let p = vals.iter().map(|v| v.1 .0).fold(f64::INFINITY, f64::min);
            let h = vals.iter().map(|v| v.1 .1).fold(f64::INFINITY, f64::min);
            (p, h)
        })
        .0
    }

    /// Mode-aware env policies minimizing performance and entropy.
    pub fn worst_env(&self, core: &CoreSG) -> (ModeEnv, ModeEnv) {
        let (_, pick_p, pick_h) = self.backward(core, |_, vals| {
            let p = vals.iter().map(|v| v.1 .0).fold(f64::INFINITY, f64::min);
            let h = vals.iter().map(|v| v.1 .1).fold(f64::INFINITY, f64::min);
            (p, h)
        });
        (ModeEnv { choice: pick_p }, ModeEnv { choice: pick_h })
    }

    /// Backward pass over `(node, mode)`. `combine` folds the per-action
    /// `(p, h)` values at env nodes. Returns the initial point and the
    /// per-`(node, mode)` argmin actions for performance and entropy.
    #[allow(clippy::type_complexity)]
    fn backward(
        &self,
        core: &CoreSG,
        combine: impl Fn(usize, &[(usize, HP)]) -> HP,
    ) -> (Point, Vec<Vec<usize>>, Vec<Vec<usize>>) {
        let m = self.modes();
        let len = core.len();
        let mut val: Vec<Vec<HP>> = vec![Vec::new(); len];
        let mut pick_p = vec![Vec::new(); len];
        let mut pick_h = vec![Vec::new(); len];
        let ex = |val: &Vec<Vec<HP>>, n: usize, a: usize, mode: usize| -> HP {
            core.nodes[n].actions[a].succ.iter().fold((0.0, 0.0), |acc, (c, q)| {
                let v = val[*c][mode];
                (acc.0 + q * v.0, acc.1 + q * v.1)
            })
        };
        for n in (0..len).rev() {
            val[n] = match core.kind(n) {
                NodeKind::Top => vec![(1.0, 0.0); m],
                NodeKind::Bot => vec![(0.0, 0.0); m],
                NodeKind::Ego => (0..m)
                    .map(|mode| {
                        let sigma = self.ego_dist(core, n, mode);
                        let mut acc = (0.0, entropy(&sigma));
                        for (a, w) in sigma.iter().enumerate() {
                            if *w > 0.0 {
                                let v = ex(&val, n, a, mode);
                                acc.0 += w * v.0;
                                acc.1 += w * v.1;
                            }
                        }
                        acc
                    })
                    .collect(),
                NodeKind::Env => {
                    let k = core.nodes[n].actions.len();
                    let tr: Vec<Vec<Transfer>> = (0..k).map(|a| self.transfers(core, n, a)).collect();
                    let mut out = Vec::with_capacity(m);
                    let mut pp = Vec::with_capacity(m);
                    let mut ph = Vec::with_capacity(m);
                    for mode in 0..m {
                        let vals: Vec<(usize, HP)> = (0..k)
                            .map(|a| {
                                let v = tr[a][mode].iter().fold((0.0, 0.0), |acc, (w, t)| {
                                    let v = ex(&val, n, a, *t);
                                    (acc.0 + w * v.0, acc.1 + w * v.1)
                                });
                                (n, v)
                            })
                            .collect();
                        out.push(combine(n, &vals));
                        pp.push(argmin(vals.iter().map(|v| v.1 .0)));
                        ph.push(argmin(vals.iter().map(|v| v.1 .1)));
                    }
                    pick_p[n] = pp;
                    pick_h[n] = ph;
                    out
                }
            };
        }
        let init = self.start().iter().fold(Point::new(0.0, 0.0), |acc, (w, mode)| {
            let v = val[core.initial][*mode];
            Point::new(acc.p + w * v.0, acc.h + w * v.1)
        });
        (init, pick_p, pick_h)
    }
}

fn argmin(xs: impl Iterator<Item = f64>) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (i, x) in xs.enumerate() {
        if x < best.0 {
            best = (x, i);
        }
    }
    best.1
}

fn rematch(branch: &[HP], owed: f64) -> Transfer {
    let (j1, j2, w) = match_rationality(branch, owed);
    if j1 == j2 || w >= 1.0 {
        vec![(1.0, j1)]
    } else if w <= 0.0 {
        vec![(1.0, j2)]
    } else {
        vec![(w, j1), (1.0 - w, j2)]
    }
}

/// Env policy that may depend on the improviser mode.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeEnv {
    /// `choice[n][mode]`, empty for non-env nodes.
    pub choice: Vec<Vec<usize>>,
}

#[derive(Clone, Debug)]
pub enum EnvStrategy {
    WorstPerformance,
    WorstEntropy,
    Scripted(MarkovPolicy),
    Uniform,
}

enum ResolvedEnv {
    Mode(ModeEnv),
    Markov(MarkovPolicy),
}

impl ResolvedEnv {
    fn dist(&self, n: usize, mode: usize, k: usize) -> Vec<f64> {
        match self {
            ResolvedEnv::Mode(m) => (0..k).map(|a| if a == m.choice[n][mode] { 1.0 } else { 0.0 }).collect(),
            ResolvedEnv::Markov(p) => p.at(n).to_vec(),
        }
    }
}

/// One half-step of an episode log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub node: usize,
    pub owner: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<Vec<f64>>,
    pub action: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub owed_h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::io::opt_lambda_serde")]
    pub lambda: Option<f64>,
}

fn sample_index(rng: &mut ChaCha8Rng, weights: impl Iterator<Item = f64>) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Episode RNG: one ChaCha stream per episode index.
pub fn episode_rng(seed: u64, episode: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(episode);
    rng
}

/// Running episode.
pub struct Episode<'a> {
    core: &'a CoreSG,
    imp: &'a Improviser,
    rng: ChaCha8Rng,
    pub node: usize,
    pub mode: usize,
    last_dist: Option<Vec<f64>>,
    /// Sum of `-ln sigma(action)` over ego steps.
    pub log_stat: f64,
    pub log: Vec<LogRecord>,
    pub record: bool,
}

impl<'a> Episode<'a> {
    pub fn reset(core: &'a CoreSG, imp: &'a Improviser, seed: u64, episode: u64) -> Episode<'a> {
        let mut rng = episode_rng(seed, episode);
        let start = imp.start();
        let mode = start[sample_index(&mut rng, start.iter().map(|s| s.0))].1;
        Episode { core, imp, rng, node: core.initial, mode, last_dist: None, log_stat: 0.0, log: Vec::new(), record: false }
    }

    pub fn is_over(&self) -> bool {
        self.core.kind(self.node).is_terminal()
    }

    /// Distribution and sampled action at the current ego node.
    pub fn step(&mut self) -> Result<(Vec<f64>, usize), RuntimeError> {
        if self.is_over() {
            return Err(RuntimeError::EpisodeOver);
        }
        if self.core.kind(self.node) != NodeKind::Ego {
            return Err(RuntimeError::StepOnEnvNode(self.node));
        }
        let dist = self.imp.ego_dist(self.core, self.node, self.mode);
        let a = sample_index(&mut self.rng, dist.iter().copied());
        self.last_dist = Some(dist.clone());
        Ok((dist, a))
    }

    /// Records that `action` was taken at the current node and chance moved
    /// to `next`. At env nodes this applies the mode transfer.
    pub fn observe(&mut self, action: usize, next: usize) -> Result<(), RuntimeError> {
        if self.is_over() {
            return Err(RuntimeError::EpisodeOver);
        }
        let n = self.node;
        let acts = &self.core.nodes[n].actions;
        let act = acts.get(action).ok_or(RuntimeError::BadAction { node: n, action })?;
        if !act.succ.iter().any(|(m, q)| *m == next && *q > 0.0) {
            return Err(RuntimeError::OffSupportObservation { node: n, action, next });
        }
        let kind = self.core.kind(n);
        let mut dist = None;
        if kind == NodeKind::Ego {
            let d = self.last_dist.take().unwrap_or_else(|| self.imp.ego_dist(self.core, n, self.mode));
            self.log_stat -= d[action].ln();
            dist = Some(d);
        }
        if self.record {
            self.log.push(LogRecord {
                node: n,
                owner: if kind == NodeKind::Ego { "ego".into() } else { "env".into() },
                dist,
                action: self.core.action_name(n, action).to_string(),
                owed_h: self.imp.owed(n, self.mode),
                lambda: self.imp.lambda(self.mode),
            });
        }
        if kind == NodeKind::Env {
            let t = self.imp.transfer(self.core, n, self.mode, action);
            self.mode = t[sample_index(&mut self.rng, t.iter().map(|x| x.0))].1;
        }
        self.node = next;
        Ok(())
    }

    /// Samples a chance outcome of `action` at the current node.
    pub fn chance(&mut self, action: usize) -> usize {
        let succ = &self.core.nodes[self.node].actions[action].succ;
        succ[sample_index(&mut self.rng, succ.iter().map(|s| s.1))].0
    }

    fn env_action(&mut self, env: &ResolvedEnv) -> usize {
        let k = self.core.nodes[self.node].actions.len();
        let d = env.dist(self.node, self.mode, k);
        sample_index(&mut self.rng, d.into_iter())
    }

    /// Plays to a terminal. Returns whether top was reached.
    fn run(&mut self, env: &ResolvedEnv) -> bool {
        while !self.is_over() {
            let a = match self.core.kind(self.node) {
                NodeKind::Ego => self.step().expect("ego node").1,
                _ => self.env_action(env),
            };
            let next = self.chance(a);
            self.observe(a, next).expect("sampled successor");
        }
        self.node == self.core.top
    }
}

/// Monte-Carlo estimates over `episodes` runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub episodes: usize,
    pub successes: usize,
    pub p_hat: f64,
    pub p_lo: f64,
    pub p_hi: f64,
    pub h_hat: f64,
    pub h_stderr: f64,
}

/// Wilson score interval at 95%.
pub fn wilson(successes: usize, n: usize) -> (f64, f64) {
    let z = 1.959964;
    let n = n as f64;
    let ph = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (ph + z * z / (2.0 * n)) / denom;
    let half = z * (ph * (1.0 - ph) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

fn resolve(core: &CoreSG, imp: &Improviser, env: &EnvStrategy) -> ResolvedEnv {
    match env {
        EnvStrategy::WorstPerformance => ResolvedEnv::Mode(imp.worst_env(core).0),
        EnvStrategy::WorstEntropy => ResolvedEnv::Mode(imp.worst_env(core).1),
        EnvStrategy::Scripted(p) => ResolvedEnv::Markov(p.clone()),
        EnvStrategy::Uniform => ResolvedEnv::Markov(MarkovPolicy::uniform(core)),
    }
}

/// Runs `n` seeded episodes. Results are identical with and without
/// `parallel`.
pub fn simulate(core: &CoreSG, imp: &Improviser, env: &EnvStrategy, n: usize, seed: u64, parallel: bool) -> SimulationReport {
    let env = resolve(core, imp, env);
    let runs = par::map_range(n, parallel, |i| {
        let mut ep = Episode::reset(core, imp, seed, i as u64);
        let ok = ep.run(&env);
        (ok, ep.log_stat)
    });
    report(&runs)
}

fn report(runs: &[(bool, f64)]) -> SimulationReport {
    let n = runs.len().max(1);
    let successes = runs.iter().filter(|r| r.0).count();
    let h_hat = runs.iter().map(|r| r.1).sum::<f64>() / n as f64;
    let var = runs.iter().map(|r| (r.1 - h_hat).powi(2)).sum::<f64>() / (n.max(2) - 1) as f64;
    let (p_lo, p_hi) = wilson(successes, n);
    SimulationReport {
        episodes: runs.len(),
        successes,
        p_hat: successes as f64 / n as f64,
        p_lo,
        p_hi,
        h_hat,
        h_stderr: (var / n as f64).sqrt(),
    }
}

/// Play of one episode: `(node, action)` steps and the terminal reached.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Play {
    pub steps: Vec<(usize, usize)>,
    pub end: usize,
}

/// Plays of `n` seeded episodes.
pub fn sample_plays(core: &CoreSG, imp: &Improviser, env: &EnvStrategy, n: usize, seed: u64, parallel: bool) -> Vec<Play> {
    let env = resolve(core, imp, env);
    par::map_range(n, parallel, |i| {
        let mut ep = Episode::reset(core, imp, seed, i as u64);
        let mut steps = Vec::new();
        while !ep.is_over() {
            let a = match core.kind(ep.node) {
                NodeKind::Ego => ep.step().expect("ego node").1,
                _ => ep.env_action(&env),
            };
            steps.push((ep.node, a));
            let next = ep.chance(a);
            ep.observe(a, next).expect("sampled successor");
        }
        Play { steps, end: ep.node }
    })
}

/// Logged episode (JSON-lines records) with the given env.
pub fn logged_episode(core: &CoreSG, imp: &Improviser, env: &EnvStrategy, seed: u64, episode: u64) -> Vec<LogRecord> {
    let env = resolve(core, imp, env);
    let mut ep = Episode::reset(core, imp, seed, episode);
    ep.record = true;
    ep.run(&env);
    ep.log
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::mdp::smooth_bellman;
    use crate::sg::{FrontTables, TableOptions};

    #[test]
    fn wilson_bounds() {
        let (lo, hi) = wilson(50, 100);
        assert!(lo < 0.5 && hi > 0.5 && (0.5 - lo - (hi - 0.5)).abs() < 1e-12);
        assert_eq!(wilson(0, 10).0, 0.0);
    }

    #[test]
    fn minimal_mdp_simulation() {
        let core = fixtures::minimal_mdp();
        let imp = Improviser::single(smooth_bellman(&core, 3f64.ln()).unwrap().sigma);
        let r = simulate(&core, &imp, &EnvStrategy::Uniform, 100_000, 7, true);
        assert!((r.p_hat - 0.75).abs() < 0.01);
        assert!((r.h_hat - 0.5623).abs() < 0.01);
        assert_eq!(r, simulate(&core, &imp, &EnvStrategy::Uniform, 100_000, 7, false));
    }

    #[test]
    fn deterministic_policy_has_zero_entropy_estimate() {
        let core = fixtures::toy_core();
        let imp = Improviser::single(MarkovPolicy::deterministic(&core, &vec![0; core.len()]));
        let r = simulate(&core, &imp, &EnvStrategy::Uniform, 1000, 1, true);
        assert_eq!(r.h_hat, 0.0);
    }

    #[test]
    fn toy_uniform_against_scripted_a() {
        let core = fixtures::toy_core();
        let imp = Improviser::single(MarkovPolicy::uniform(&core));
        let env = EnvStrategy::Scripted(MarkovPolicy::prefer(&core, "a"));
        let r = simulate(&core, &imp, &env, 100_000, 3, true);
        assert!((r.h_hat - 1.5 * 2f64.ln()).abs() < 0.01);
        assert!((r.p_hat - 0.25).abs() < 0.01);
    }

    #[test]
    fn step_and_observe_errors() {
        let core = fixtures::toy_core();
        let imp = Improviser::single(MarkovPolicy::uniform(&core));
        let mut ep = Episode::reset(&core, &imp, 0, 0);
        assert_eq!(ep.observe(0, 3), Err(RuntimeError::OffSupportObservation { node: 0, action: 0, next: 3 }));
        let (d, _) = ep.step().unwrap();
        assert_eq!(d, vec![0.5, 0.5]);
        ep.observe(0, 1).unwrap();
        assert_eq!(ep.step(), Err(RuntimeError::StepOnEnvNode(1)));
    }

    #[test]
    fn logs_are_seed_deterministic() {
        let core = fixtures::matching_example();
        let t = Arc::new(FrontTables::build(&core, &TableOptions::default()).unwrap());
        let imp = Improviser::Matching { tables: t, start: vec![(1.0, 2)] };
        let a = logged_episode(&core, &imp, &EnvStrategy::Uniform, 11, 4);
        let b = logged_episode(&core, &imp, &EnvStrategy::Uniform, 11, 4);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn matching_deviation_raises_rationality() {
        let core = fixtures::matching_example();
        let t = Arc::new(FrontTables::build(&core, &TableOptions::default()).unwrap());
        let j0 = 2;
        let imp = Improviser::Matching { tables: t.clone(), start: vec![(1.0, j0)] };
        // s2 is node 1; action b leads to the richer node s4
        for (w, j) in imp.transfer(&core, 1, j0, 1) {
            assert!(w > 0.0 && t.grid[j] >= t.grid[j0]);
        }
        let g = imp.guaranteed_point(&core);
        let s = t.samples[core.initial][j0];
        assert!(g.h >= s.0 - 1e-9 && g.p >= s.1 - 1e-9);
    }

    #[test]
    fn zero_rationality_matching_is_max_entropy() {
        let core = fixtures::toy_core();
        let t = Arc::new(FrontTables::build(&core, &TableOptions::default()).unwrap());
        let imp = Improviser::Matching { tables: t.clone(), start: vec![(1.0, 0)] };
        assert_eq!(imp.ego_dist(&core, 3, 0), vec![0.5, 0.5]);
        let g = imp.guaranteed_point(&core);
        assert!((g.h - t.samples[core.initial][0].0).abs() < 1e-9);
    }
}

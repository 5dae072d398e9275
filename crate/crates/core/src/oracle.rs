//! Brute-force reference computations for small cores.
//!
//! Everything here enumerates deterministic node-Markov env policies and
//! evaluates each profile exactly. Worst cases are literal loops over the
//! enumeration, independent of the solvers' backward minimization.

use thiserror::Error;

use crate::coresg::{CoreSG, NodeKind};
use crate::eval::{evaluate, MarkovPolicy, Point};
use crate::mdp::smooth_bellman;
use crate::par;
use crate::runtime::Improviser;
use crate::verdict::{Verdict, Witness, WITNESS_TOL};

/// Default bound on the number of enumerated env policies.
pub const ENV_CAP: usize = 4096;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("enumeration needs {count} items, cap is {cap}")]
    TooLarge { count: usize, cap: usize },
}

fn reachable_choice_nodes(core: &CoreSG, kind: NodeKind) -> Vec<usize> {
    let reach = core.reachable();
    (0..core.len()).filter(|&n| reach[n] && core.kind(n) == kind && core.nodes[n].actions.len() > 1).collect()
}

/// Every deterministic env policy over reachable env choice nodes, in
/// mixed-radix order with the first node varying fastest.
pub fn enumerate_env_policies(core: &CoreSG, cap: usize) -> Result<Vec<MarkovPolicy>, OracleError> {
    let nodes = reachable_choice_nodes(core, NodeKind::Env);
    let mut count: usize = 1;
    for &n in &nodes {
        count = count.saturating_mul(core.nodes[n].actions.len());
        if count > cap {
            return Err(OracleError::TooLarge { count, cap });
        }
    }
    let mut out = Vec::with_capacity(count);
    let mut choice = vec![0usize; core.len()];
    for _ in 0..count {
        out.push(MarkovPolicy::deterministic(core, &choice));
        for &n in &nodes {
            choice[n] += 1;
            if choice[n] < core.nodes[n].actions.len() {
                break;
            }
            choice[n] = 0;
        }
    }
    Ok(out)
}

/// Componentwise minimum over enumerated env policies.
pub fn oracle_guaranteed_point(core: &CoreSG, ego: &MarkovPolicy, cap: usize) -> Result<Point, OracleError> {
    let envs = enumerate_env_policies(core, cap)?;
    let mut best = Point::new(f64::INFINITY, f64::INFINITY);
    for env in &envs {
        let x = evaluate(core, ego, env);
        if x.p < best.p {
            best.p = x.p;
        }
        if x.h < best.h {
            best.h = x.h;
        }
    }
    Ok(best)
}

/// Componentwise minimum of an improviser's exact point over enumerated env
/// policies.
pub fn oracle_improviser_point(core: &CoreSG, imp: &Improviser, cap: usize, parallel: bool) -> Result<Point, OracleError> {
    let envs = enumerate_env_policies(core, cap)?;
    let pts = par::map_collect(&envs, parallel, |env| imp.evaluate(core, env));
    let mut best = Point::new(f64::INFINITY, f64::INFINITY);
    for x in pts {
        if x.p < best.p {
            best.p = x.p;
        }
        if x.h < best.h {
            best.h = x.h;
        }
    }
    Ok(best)
}

/// Limits for [`oracle_front_lower_bound`].
#[derive(Clone, Copy, Debug)]
pub struct FrontOracle {
    pub step: f64,
    pub max_ego_nodes: usize,
    pub max_actions: usize,
    pub env_cap: usize,
    pub parallel: bool,
}

impl Default for FrontOracle {
    fn default() -> Self {
        FrontOracle { step: 0.05, max_ego_nodes: 3, max_actions: 3, env_cap: ENV_CAP, parallel: true }
    }
}

/// All distributions over `k` actions with probabilities on the grid `1/steps`.
fn simplex(k: usize, steps: usize) -> Vec<Vec<f64>> {
    fn go(k: usize, left: usize, steps: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if k == 1 {
            cur.push(left);
            out.push(cur.iter().map(|&c| c as f64 / steps as f64).collect());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            go(k - 1, left - c, steps, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(k, steps, steps, &mut Vec::new(), &mut out);
    out
}

/// Keeps the points not strictly dominated by another.
pub fn non_dominated(mut pts: Vec<Point>) -> Vec<Point> {
    pts.sort_by(|a, b| b.h.total_cmp(&a.h).then(b.p.total_cmp(&a.p)));
    let mut out: Vec<Point> = Vec::new();
    let mut best_p = f64::NEG_INFINITY;
    for x in pts {
        if x.p > best_p {
            best_p = x.p;
            out.push(x);
        }
    }
    out
}

/// Guaranteed points of every grid ego Markov policy, reduced to the
/// non-dominated subset. Every returned point is achievable.
pub fn oracle_front_lower_bound(core: &CoreSG, o: &FrontOracle) -> Result<Vec<Point>, OracleError> {
    let ego = reachable_choice_nodes(core, NodeKind::Ego);
    if ego.len() > o.max_ego_nodes {
        return Err(OracleError::TooLarge { count: ego.len(), cap: o.max_ego_nodes });
    }
    if let Some(&n) = ego.iter().find(|&&n| core.nodes[n].actions.len() > o.max_actions) {
        return Err(OracleError::TooLarge { count: core.nodes[n].actions.len(), cap: o.max_actions });
    }
    let envs = enumerate_env_policies(core, o.env_cap)?;
    let steps = (1.0 / o.step).round().max(1.0) as usize;
    let grids: Vec<Vec<Vec<f64>>> = ego.iter().map(|&n| simplex(core.nodes[n].actions.len(), steps)).collect();
    let total: usize = grids.iter().map(|g| g.len()).product();
    let pts = par::map_range(total, o.parallel, |mut idx| {
        let mut pi = MarkovPolicy::uniform(core);
        for (g, &n) in grids.iter().zip(&ego) {
            pi.dist[n] = g[idx % g.len()].clone();
            idx /= g.len();
        }
        let mut best = Point::new(f64::INFINITY, f64::INFINITY);
        for env in &envs {
            let x = evaluate(core, &pi, env);
            best.p = best.p.min(x.p);
            best.h = best.h.min(x.h);
        }
        best
    });
    Ok(non_dominated(pts))
}

/// Options for [`check_witness`].
#[derive(Clone, Copy, Debug)]
pub struct WitnessCheck {
    /// Allowed shortfall of a realizable improviser's guaranteed point.
    pub tol: f64,
    /// Also compare scalarization bounds against the grid front.
    pub front: Option<FrontOracle>,
    pub env_cap: usize,
    pub parallel: bool,
}

impl Default for WitnessCheck {
    fn default() -> Self {
        WitnessCheck { tol: 1e-7, front: None, env_cap: ENV_CAP, parallel: true }
    }
}

/// Re-validates a verdict by brute force. Unknown verdicts carry no claim
/// and pass.
pub fn check_witness(core: &CoreSG, verdict: &Verdict, opts: &WitnessCheck) -> Result<bool, OracleError> {
    match verdict {
        Verdict::Realizable { target, improviser, .. } => {
            let x = oracle_improviser_point(core, improviser, opts.env_cap, opts.parallel)?;
            Ok(x.dominates(target, opts.tol))
        }
        Verdict::Unrealizable { target, witness } => {
            let Witness::Scalarization { sample, wp, wh, bound } = witness else {
                return Ok(false);
            };
            if !(wp * target.p + wh * target.h > *bound) {
                return Ok(false);
            }
            // the bound must be at least the sample's own scalarized value
            if wp * sample.p + wh * sample.h > bound + WITNESS_TOL {
                return Ok(false);
            }
            if core.is_mdp() {
                if let Ok(r) = smooth_bellman(core, sample.lambda) {
                    let x = r.point(core.initial);
                    if (x.p - sample.p).abs() > 1e-9 || (x.h - sample.h).abs() > 1e-9 {
                        return Ok(false);
                    }
                }
            }
            if let Some(fo) = opts.front {
                let pts = oracle_front_lower_bound(core, &fo)?;
                if pts.iter().any(|x| wp * x.p + wh * x.h > bound + 1e-9) {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Verdict::Unknown { .. } => Ok(true),
    }
}

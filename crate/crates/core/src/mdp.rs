//! Maximum-causal-entropy policies on MDP cores and Pareto exploration by
//! rationality search.

use crate::coresg::{CoreSG, NodeKind};
use crate::eval::{entropy, evaluate, MarkovPolicy, Point};
use crate::par;
use crate::runtime::Improviser;
use crate::verdict::{
    realizability_witness, unrealizability_witness, Endpoints, FrontSample, SolveError, Target, Verdict,
};

/// Actions whose performance is within this of the best count as optimal in
/// the infinite-rationality pass.
pub const ARGMAX_TOL: f64 = 1e-9;

/// Default doubling cap.
pub const LAMBDA_MAX: f64 = 100.0;

/// Default binary-search resolution on the rationality axis.
pub const DELTA: f64 = 1e-6;

/// Soft backup over per-action `(h, p)` continuation values. Returns the
/// action distribution and the node's `(h, p)`. For finite `lambda` this is
/// the softmax of `h + lambda * p`; for infinite `lambda` it is the softmax of
/// `h` restricted to the actions of maximal `p`.
pub fn ego_backup(children: &[(f64, f64)], lambda: f64) -> (Vec<f64>, f64, f64) {
    let score: Vec<f64> = if lambda.is_infinite() {
        let best = children.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
        children.iter().map(|&(h, p)| if p >= best - ARGMAX_TOL { h } else { f64::NEG_INFINITY }).collect()
    } else {
        children.iter().map(|&(h, p)| h + lambda * p).collect()
    };
    let shift = score.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sigma: Vec<f64> = score.iter().map(|&q| (q - shift).exp()).collect();
    let z: f64 = sigma.iter().sum();
    sigma.iter_mut().for_each(|x| *x /= z);
    let mut h = entropy(&sigma);
    let mut p = 0.0;
    for (w, (ch, cp)) in sigma.iter().zip(children) {
        if *w > 0.0 {
            h += w * ch;
            p += w * cp;
        }
    }
    (sigma, h, p)
}

/// `log sum exp` with max shift.
pub fn smax(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Soft value tables and the induced policy at one rationality.
#[derive(Clone, Debug)]
pub struct RationalityPolicy {
    pub lambda: f64,
    pub v: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    pub sigma: MarkovPolicy,
    /// Causal entropy to go under `sigma`.
    pub h: Vec<f64>,
    /// Performance to go under `sigma`.
    pub p: Vec<f64>,
}

impl RationalityPolicy {
    pub fn point(&self, n: usize) -> Point {
        Point::new(self.p[n], self.h[n])
    }
}

fn check_mdp(core: &CoreSG) -> Result<(), SolveError> {
    if core.is_mdp() {
        Ok(())
    } else {
        Err(SolveError::NotAnMdp)
    }
}

fn expect(core: &CoreSG, n: usize, a: usize, v: &[f64]) -> f64 {
    core.nodes[n].actions[a].succ.iter().map(|(m, q)| q * v[*m]).sum()
}

/// One backward pass of the soft Bellman equations. Infinite `lambda` gives
/// the max-performance limit; there `v` and `q` hold performance values.
pub fn smooth_bellman(core: &CoreSG, lambda: f64) -> Result<RationalityPolicy, SolveError> {
    check_mdp(core)?;
    if !(lambda >= 0.0) {
        return Err(SolveError::InvalidParameter(format!("rationality {lambda}")));
    }
    let len = core.len();
    let mut v = vec![0.0; len];
    let mut h = vec![0.0; len];
    let mut p = vec![0.0; len];
    let mut q = vec![Vec::new(); len];
    let mut dist = vec![Vec::new(); len];
    let top_value = if lambda.is_infinite() { 1.0 } else { lambda };
    for n in (0..len).rev() {
        match core.kind(n) {
            NodeKind::Top => {
                v[n] = top_value;
                p[n] = 1.0;
            }
            NodeKind::Bot => {}
            NodeKind::Env => {
                v[n] = expect(core, n, 0, &v);
                h[n] = expect(core, n, 0, &h);
                p[n] = expect(core, n, 0, &p);
                q[n] = vec![v[n]];
                dist[n] = vec![1.0];
            }
            NodeKind::Ego => {
                let k = core.nodes[n].actions.len();
                let children: Vec<(f64, f64)> = (0..k).map(|a| (expect(core, n, a, &h), expect(core, n, a, &p))).collect();
                q[n] = (0..k).map(|a| expect(core, n, a, &v)).collect();
                let (sigma, hn, pn) = ego_backup(&children, lambda);
                v[n] = if lambda.is_infinite() { pn } else { smax(&q[n]) };
                h[n] = hn;
                p[n] = pn;
                dist[n] = sigma;
            }
        }
    }
    Ok(RationalityPolicy { lambda, v, q, sigma: MarkovPolicy { dist }, h, p })
}

/// `(p, h)` of the rationality-`lambda` policy at the initial node.
pub fn rationality_point(core: &CoreSG, lambda: f64) -> Result<Point, SolveError> {
    Ok(smooth_bellman(core, lambda)?.point(core.initial))
}

/// Hard-max pass: the largest achievable performance together with the most
/// random policy attaining it.
pub fn limit_point_max_performance(core: &CoreSG) -> Result<(Point, MarkovPolicy), SolveError> {
    let r = smooth_bellman(core, f64::INFINITY)?;
    Ok((r.point(core.initial), r.sigma))
}

/// Episode-level mixture: one coin with bias `w` picks `a` or `b` for the
/// whole episode.
pub fn mix_policies(a: MarkovPolicy, b: MarkovPolicy, w: f64) -> Improviser {
    Improviser::Markov { components: vec![(w, a), (1.0 - w, b)] }
}

/// Exploration parameters.
#[derive(Clone, Copy, Debug)]
pub struct MdpSearch {
    pub delta: f64,
    pub lambda_max: f64,
    pub parallel: bool,
}

impl Default for MdpSearch {
    fn default() -> Self {
        MdpSearch { delta: DELTA, lambda_max: LAMBDA_MAX, parallel: true }
    }
}

/// Result of an exploration: the verdict and every sampled front point,
/// sorted by rationality.
#[derive(Clone, Debug)]
pub struct Exploration {
    pub verdict: Verdict,
    pub front: Vec<FrontSample>,
}

struct Sampler<'a> {
    core: &'a CoreSG,
    samples: Vec<(FrontSample, MarkovPolicy)>,
}

impl Sampler<'_> {
    fn add(&mut self, r: RationalityPolicy) -> FrontSample {
        let pt = r.point(self.core.initial);
        let s = FrontSample { lambda: r.lambda, p: pt.p, h: pt.h };
        let pos = self.samples.partition_point(|(x, _)| x.lambda < s.lambda);
        self.samples.insert(pos, (s, r.sigma));
        s
    }

    fn sample(&mut self, lambda: f64) -> Result<FrontSample, SolveError> {
        let r = smooth_bellman(self.core, lambda)?;
        Ok(self.add(r))
    }

    fn front(&self) -> Vec<FrontSample> {
        self.samples.iter().map(|(s, _)| *s).collect()
    }

    fn policy(&self, lambda: f64) -> MarkovPolicy {
        self.samples.iter().find(|(s, _)| s.lambda == lambda).map(|(_, p)| p.clone()).expect("sampled rationality")
    }

    fn decide(&self, target: &Point) -> Option<Verdict> {
        let front = self.front();
        if let Some(w) = realizability_witness(&front, target) {
            let improviser = match &w {
                crate::verdict::Witness::Point { sample } => {
                    Improviser::Markov { components: vec![(1.0, self.policy(sample.lambda))] }
                }
                crate::verdict::Witness::Pair { a, b, w } => mix_policies(self.policy(a.lambda), self.policy(b.lambda), *w),
                crate::verdict::Witness::Scalarization { .. } => unreachable!(),
            };
            return Some(Verdict::Realizable { target: *target, witness: w, improviser });
        }
        unrealizability_witness(&front, target, 0.0).map(|w| Verdict::Unrealizable { target: *target, witness: w })
    }
}

/// Endpoints of the front: rationality zero and infinity.
pub fn mdp_endpoints(core: &CoreSG, parallel: bool) -> Result<Endpoints, SolveError> {
    check_mdp(core)?;
    let (z, i) = par::join(parallel, || rationality_point(core, 0.0), || rationality_point(core, f64::INFINITY));
    Ok(Endpoints { zero: z?, inf: i? })
}

/// Endpoints, then doubling from 1 until the entropy drops to the target,
/// then bisection on the bracket. Every new sample is checked for a
/// dominating point, a dominating chord, or a separating scalarization.
pub fn pareto_explore_mdp(core: &CoreSG, target: &Target, opts: &MdpSearch) -> Result<Exploration, SolveError> {
    check_mdp(core)?;
    if !(opts.delta > 0.0) {
        return Err(SolveError::InvalidParameter(format!("resolution {}", opts.delta)));
    }
    let mut s = Sampler { core, samples: Vec::new() };
    let (r0, ri) = par::join(opts.parallel, || smooth_bellman(core, 0.0), || smooth_bellman(core, f64::INFINITY));
    let zero = s.add(r0?);
    let inf = s.add(ri?);
    let tgt = target.resolve(&Endpoints { zero: zero.point(), inf: inf.point() })?;
    let done = |s: &Sampler| s.decide(&tgt).map(|verdict| Exploration { verdict, front: s.front() });
    if let Some(e) = done(&s) {
        return Ok(e);
    }
    let mut lo = 0.0;
    let mut hi = f64::INFINITY;
    let mut lambda = 1.0;
    while lambda <= opts.lambda_max {
        let x = s.sample(lambda)?;
        if let Some(e) = done(&s) {
            return Ok(e);
        }
        if x.h <= tgt.h {
            hi = lambda;
            break;
        }
        lo = lambda;
        lambda *= 2.0;
    }
    if hi.is_finite() {
        while hi - lo >= opts.delta {
            let mid = 0.5 * (lo + hi);
            let x = s.sample(mid)?;
            if let Some(e) = done(&s) {
                return Ok(e);
            }
            if x.h > tgt.h {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let reason = if hi.is_finite() { "bracket below resolution" } else { "rationality cap reached" };
    Ok(Exploration { verdict: Verdict::Unknown { target: tgt, lo, hi, reason: reason.into() }, front: s.front() })
}

/// Exact point of a Markov mixture on an MDP core.
pub fn mixture_point(core: &CoreSG, components: &[(f64, MarkovPolicy)]) -> Point {
    let env = MarkovPolicy::uniform(core);
    components.iter().fold(Point::new(0.0, 0.0), |acc, (w, pi)| {
        let x = evaluate(core, pi, &env);
        Point::new(acc.p + w * x.p, acc.h + w * x.h)
    })
}

//! Pareto-front tables for stochastic games and entropy-matching synthesis.
//!
//! Every node carries a table of front samples, one per rationality of a
//! shared grid. Tables are filled bottom-up:
//!
//! - terminals are the single points `(0, 1)` and `(0, 0)`;
//! - a chance branch is the probability-weighted sum of its children;
//! - ego nodes apply the soft backup at the sample's rationality;
//! - env nodes take the lower envelope of their branch fronts (each the
//!   chord interpolation of its samples) and pick the envelope vertex that
//!   supports the envelope at the sample's rationality.
//!
//! The grid is refined until the gap between the chord and the two support
//! lines of every adjacent sample pair is at most `kappa`, on the initial
//! node and on every branch of every env node with a real choice.

use std::sync::Arc;

use crate::coresg::{CoreSG, NodeKind};
use crate::eval::{MarkovPolicy, Point};
use crate::mdp::{ego_backup, ARGMAX_TOL, LAMBDA_MAX};
use crate::par;
use crate::runtime::Improviser;
use crate::verdict::{
    realizability_witness, unrealizability_witness, Endpoints, FrontSample, SolveError, Target, Verdict, Witness,
};

/// Default initial refinement threshold.
pub const KAPPA0: f64 = 0.1;

/// Default bound on the number of grid rationalities.
pub const BUDGET: usize = 10_000;

/// Default number of threshold halvings before giving up.
pub const MAX_HALVINGS: usize = 20;

const H_EPS: f64 = 1e-12;

/// `(h, p)` pair.
pub type HP = (f64, f64);

/// Initial grid `{0, 1, 2, 4, ..., lambda_max, inf}`.
pub fn initial_grid(lambda_max: f64) -> Vec<f64> {
    let mut g = vec![0.0];
    let mut l = 1.0;
    while l < lambda_max {
        g.push(l);
        l *= 2.0;
    }
    g.push(lambda_max);
    g.push(f64::INFINITY);
    g
}

fn branch(core: &CoreSG, samples: &[Vec<HP>], n: usize, a: usize, len: usize) -> Vec<HP> {
    let mut out = vec![(0.0, 0.0); len];
    for (m, q) in &core.nodes[n].actions[a].succ {
        for (o, s) in out.iter_mut().zip(&samples[*m]) {
            o.0 += q * s.0;
            o.1 += q * s.1;
        }
    }
    out
}

/// Branch front as a chain ascending in `h`, with the largest `p` kept for
/// repeated `h`.
fn chain(samples: &[HP]) -> Vec<HP> {
    let mut c: Vec<HP> = Vec::with_capacity(samples.len());
    for &(h, p) in samples.iter().rev() {
        match c.last_mut() {
            Some(last) if (h - last.0).abs() <= H_EPS => last.1 = last.1.max(p),
            Some(last) if h < last.0 => {
                // h is nonincreasing in the rationality; tolerate noise
                last.1 = last.1.max(p);
            }
            _ => c.push((h, p)),
        }
    }
    c
}

/// Chord interpolation of a chain; flat below its lowest `h`.
fn chain_at(c: &[HP], h: f64) -> f64 {
    if h <= c[0].0 {
        return c[0].1;
    }
    let k = c.partition_point(|s| s.0 < h);
    if k >= c.len() {
        return c[c.len() - 1].1;
    }
    let (a, b) = (c[k - 1], c[k]);
    if b.0 - a.0 <= H_EPS {
        return b.1;
    }
    a.1 + (b.1 - a.1) * (h - a.0) / (b.0 - a.0)
}

/// Upper concave hull of points sorted by `h`.
fn upper_hull(points: &[HP]) -> Vec<HP> {
    let mut hull: Vec<HP> = Vec::with_capacity(points.len());
    for &pt in points {
        while hull.len() >= 2 {
            let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (a.0 - o.0) * (pt.1 - o.1) - (a.1 - o.1) * (pt.0 - o.0);
            if cross >= -1e-15 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    hull
}

/// Vertices (ascending `h`) of the lower envelope of several branch fronts
/// on the entropy range every branch can guarantee.
pub fn envelope(branches: &[Vec<HP>]) -> Vec<HP> {
    let chains: Vec<Vec<HP>> = branches.iter().map(|b| chain(b)).collect();
    let top = chains.iter().map(|c| c[c.len() - 1].0).fold(f64::INFINITY, f64::min).max(0.0);
    let mut xs: Vec<f64> = chains.iter().flat_map(|c| c.iter().map(|s| s.0)).filter(|&h| h > 0.0 && h < top).collect();
    xs.push(0.0);
    xs.push(top);
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() <= H_EPS);
    let vals: Vec<Vec<f64>> = xs.iter().map(|&x| chains.iter().map(|c| chain_at(c, x)).collect()).collect();
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let mut pts: Vec<HP> = Vec::with_capacity(xs.len() * 2);
    for i in 0..xs.len() {
        pts.push((xs[i], min(&vals[i])));
        if i + 1 == xs.len() {
            break;
        }
        let (l, r) = (&vals[i], &vals[i + 1]);
        let mut ts: Vec<f64> = Vec::new();
        for a in 0..chains.len() {
            for b in a + 1..chains.len() {
                let (d0, d1) = (l[a] - l[b], r[a] - r[b]);
                if d0 * d1 < 0.0 {
                    ts.push(d0 / (d0 - d1));
                }
            }
        }
        ts.sort_by(f64::total_cmp);
        for t in ts {
            let x = xs[i] + t * (xs[i + 1] - xs[i]);
            let g = l.iter().zip(r).map(|(u, v)| u + t * (v - u)).fold(f64::INFINITY, f64::min);
            pts.push((x, g));
        }
    }
    upper_hull(&pts)
}

/// Envelope vertex supporting each grid rationality.
fn env_samples(branches: &[Vec<HP>], grid: &[f64]) -> Vec<HP> {
    let v = envelope(branches);
    let score = |i: usize, l: f64| v[i].0 + l * v[i].1;
    let mut out = Vec::with_capacity(grid.len());
    let mut i = v.len() - 1;
    for &l in grid {
        if l.is_infinite() {
            let best = v.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
            let k = v.iter().rposition(|s| s.1 >= best - ARGMAX_TOL).unwrap_or(0);
            out.push(v[k]);
        } else {
            while i > 0 && score(i - 1, l) > score(i, l) {
                i -= 1;
            }
            out.push(v[i]);
        }
    }
    out
}

fn node_samples(core: &CoreSG, samples: &[Vec<HP>], grid: &[f64], n: usize) -> Vec<HP> {
    let m = grid.len();
    let node = &core.nodes[n];
    match node.kind {
        NodeKind::Top => vec![(0.0, 1.0); m],
        NodeKind::Bot => vec![(0.0, 0.0); m],
        NodeKind::Env if node.actions.len() == 1 => branch(core, samples, n, 0, m),
        NodeKind::Env => {
            let b: Vec<Vec<HP>> = (0..node.actions.len()).map(|a| branch(core, samples, n, a, m)).collect();
            env_samples(&b, grid)
        }
        NodeKind::Ego => {
            let b: Vec<Vec<HP>> = (0..node.actions.len()).map(|a| branch(core, samples, n, a, m)).collect();
            (0..m)
                .map(|j| {
                    let children: Vec<HP> = b.iter().map(|x| x[j]).collect();
                    let (_, h, p) = ego_backup(&children, grid[j]);
                    (h, p)
                })
                .collect()
        }
    }
}

/// Largest chord-below-support gap on the `p` axis between adjacent samples.
/// Returns `(gap, interval index)`.
pub fn max_gap(grid: &[f64], samples: &[HP]) -> (f64, usize) {
    let mut worst = (0.0, 0);
    for j in 0..samples.len().saturating_sub(1) {
        let g = pair_gap(grid[j], samples[j], grid[j + 1], samples[j + 1]);
        if g > worst.0 {
            worst = (g, j);
        }
    }
    worst
}

/// Gap between the two support lines' intersection and the chord from `a`
/// (lower rationality, larger `h`) to `b`.
pub fn pair_gap(la: f64, a: HP, lb: f64, b: HP) -> f64 {
    let (ha, pa) = a;
    let (hb, pb) = b;
    if ha - hb <= H_EPS {
        return 0.0;
    }
    let chord = |h: f64| pb + (pa - pb) * (h - hb) / (ha - hb);
    // intersection of the two support lines
    let (x, y) = if la == 0.0 {
        let y = if lb.is_infinite() { pb } else { pb + (hb - ha) / lb };
        (ha, y)
    } else if lb.is_infinite() {
        (ha - la * (pb - pa), pb)
    } else {
        let x = (pa - pb + ha / la - hb / lb) / (1.0 / la - 1.0 / lb);
        (x, pa + (ha - x) / la)
    };
    let x = x.clamp(hb, ha);
    (y - chord(x)).max(0.0)
}

/// Options for building and refining tables.
#[derive(Clone, Copy, Debug)]
pub struct TableOptions {
    pub kappa: f64,
    pub lambda_max: f64,
    pub budget: usize,
    pub parallel: bool,
}

impl Default for TableOptions {
    fn default() -> Self {
        TableOptions { kappa: KAPPA0, lambda_max: LAMBDA_MAX, budget: BUDGET, parallel: true }
    }
}

/// Per-node front samples on a shared rationality grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FrontTables {
    /// Strictly increasing, starting at 0 and ending at infinity.
    pub grid: Vec<f64>,
    /// `samples[n][j]` is the `(h, p)` sample of node `n` at `grid[j]`.
    pub samples: Vec<Vec<HP>>,
    /// Refinement threshold the tables were certified against.
    pub kappa: f64,
    /// Largest certified gap.
    pub gap: f64,
    /// Env choice nodes on the deepest path; error multiplier for `gap`.
    pub depth: usize,
}

impl FrontTables {
    /// Single bottom-up pass on a fixed grid.
    pub fn on_grid(core: &CoreSG, grid: Vec<f64>, parallel: bool) -> FrontTables {
        let mut samples: Vec<Vec<HP>> = vec![Vec::new(); core.len()];
        for level in core.levels() {
            let res = par::map_collect(&level, parallel, |&n| node_samples(core, &samples, &grid, n));
            for (n, s) in level.into_iter().zip(res) {
                samples[n] = s;
            }
        }
        FrontTables { grid, samples, kappa: f64::INFINITY, gap: f64::INFINITY, depth: core.choice_depth() }
    }

    /// Builds on the initial grid and refines until certified.
    pub fn build(core: &CoreSG, opts: &TableOptions) -> Result<FrontTables, SolveError> {
        Self::refine_from(core, initial_grid(opts.lambda_max), opts)
    }

    /// Refines starting from an existing grid.
    pub fn refine_from(core: &CoreSG, mut grid: Vec<f64>, opts: &TableOptions) -> Result<FrontTables, SolveError> {
        if !(opts.kappa > 0.0 && opts.kappa < 1.0) {
            return Err(SolveError::InvalidParameter(format!("kappa = {}", opts.kappa)));
        }
        loop {
            if grid.len() > opts.budget {
                return Err(SolveError::ResolutionExhausted(opts.budget));
            }
            let mut t = FrontTables::on_grid(core, grid.clone(), opts.parallel);
            let gaps = t.interval_gaps(core, opts.parallel);
            let worst = gaps.iter().copied().fold(0.0, f64::max);
            let split: Vec<usize> = (0..gaps.len()).filter(|&j| gaps[j] > opts.kappa).collect();
            if split.is_empty() {
                t.kappa = opts.kappa;
                t.gap = worst;
                log::debug!("tables certified: {} rationalities, gap {worst:.3e}", grid.len());
                return Ok(t);
            }
            let mut fresh: Vec<f64> = split
                .iter()
                .map(|&j| if grid[j + 1].is_infinite() { 2.0 * grid[j].max(1.0) } else { 0.5 * (grid[j] + grid[j + 1]) })
                .filter(|l| !grid.contains(l))
                .collect();
            if fresh.is_empty() {
                // floating-point resolution reached
                t.kappa = opts.kappa;
                t.gap = worst;
                return Ok(t);
            }
            grid.append(&mut fresh);
            grid.sort_by(f64::total_cmp);
            grid.dedup();
        }
    }

    /// Worst gap per grid interval over the initial node and all branches of
    /// env choice nodes.
    pub fn interval_gaps(&self, core: &CoreSG, parallel: bool) -> Vec<f64> {
        let m = self.grid.len();
        let mut tables: Vec<(usize, Option<usize>)> = vec![(core.initial, None)];
        for n in core.env_choice_nodes() {
            for a in 0..core.nodes[n].actions.len() {
                tables.push((n, Some(a)));
            }
        }
        let per = par::map_collect(&tables, parallel, |&(n, a)| {
            let s = match a {
                None => self.samples[n].clone(),
                Some(a) => self.branch(core, n, a),
            };
            (0..m - 1).map(|j| pair_gap(self.grid[j], s[j], self.grid[j + 1], s[j + 1])).collect::<Vec<f64>>()
        });
        let mut out = vec![0.0f64; m - 1];
        for g in per {
            for (o, x) in out.iter_mut().zip(g) {
                *o = o.max(x);
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Samples of the chance branch `(n, a)`.
    pub fn branch(&self, core: &CoreSG, n: usize, a: usize) -> Vec<HP> {
        branch(core, &self.samples, n, a, self.grid.len())
    }

    /// Ego distribution at node `n` for grid index `j`.
    pub fn ego_dist(&self, core: &CoreSG, n: usize, j: usize) -> Vec<f64> {
        let children: Vec<HP> = (0..core.nodes[n].actions.len())
            .map(|a| {
                core.nodes[n].actions[a].succ.iter().fold((0.0, 0.0), |acc, (m, q)| {
                    let s = self.samples[*m][j];
                    (acc.0 + q * s.0, acc.1 + q * s.1)
                })
            })
            .collect();
        ego_backup(&children, self.grid[j]).0
    }

    /// Front samples of node `n`.
    pub fn front(&self, n: usize) -> Vec<FrontSample> {
        self.grid.iter().zip(&self.samples[n]).map(|(&lambda, &(h, p))| FrontSample { lambda, p, h }).collect()
    }

    /// Chord-interpolated guaranteed performance of node `n` at entropy `h`.
    pub fn value_at(&self, n: usize, h: f64) -> f64 {
        let (j1, j2, w) = match_rationality(&self.samples[n], h);
        w * self.samples[n][j1].1 + (1.0 - w) * self.samples[n][j2].1
    }

    /// Certified bound on the `p`-error of the initial table.
    pub fn error_bound(&self) -> f64 {
        self.gap.min(self.kappa) * self.depth as f64
    }
}

/// Brackets `owed` on a table's `h` axis (nonincreasing in the index).
/// Returns `(j1, j2, w)` with `w * h[j1] + (1 - w) * h[j2] = owed`. Owed
/// values above the range clamp to the first sample, below it to the last.
pub fn match_rationality(samples: &[HP], owed: f64) -> (usize, usize, f64) {
    let last = samples.len() - 1;
    if owed >= samples[0].0 {
        return (0, 0, 1.0);
    }
    if owed <= samples[last].0 {
        return (last, last, 1.0);
    }
    let k = samples.partition_point(|s| s.0 >= owed);
    let (j1, j2) = (k - 1, k);
    if samples[j1].0 == owed {
        return (j1, j1, 1.0);
    }
    let w = (owed - samples[j2].0) / (samples[j1].0 - samples[j2].0);
    (j1, j2, w)
}

/// Backward pass where ego uses the soft backup and env picks the action of
/// least expected entropy, then least performance, then lowest position.
pub fn min_entropy_env(core: &CoreSG, lambda: f64) -> (MarkovPolicy, Vec<f64>, Vec<f64>) {
    let len = core.len();
    let mut h = vec![0.0; len];
    let mut p = vec![0.0; len];
    let mut choice = vec![0usize; len];
    let ex = |n: usize, a: usize, v: &[f64]| -> f64 { core.nodes[n].actions[a].succ.iter().map(|(m, q)| q * v[*m]).sum() };
    for n in (0..len).rev() {
        match core.kind(n) {
            NodeKind::Top => p[n] = 1.0,
            NodeKind::Bot => {}
            NodeKind::Ego => {
                let children: Vec<HP> = (0..core.nodes[n].actions.len()).map(|a| (ex(n, a, &h), ex(n, a, &p))).collect();
                let (_, hn, pn) = ego_backup(&children, lambda);
                h[n] = hn;
                p[n] = pn;
            }
            NodeKind::Env => {
                let mut best = (f64::INFINITY, f64::INFINITY);
                for a in 0..core.nodes[n].actions.len() {
                    let c = (ex(n, a, &h), ex(n, a, &p));
                    if c.0 < best.0 - H_EPS || ((c.0 - best.0).abs() <= H_EPS && c.1 < best.1 - H_EPS) {
                        best = c;
                        choice[n] = a;
                    }
                }
                h[n] = best.0;
                p[n] = best.1;
            }
        }
    }
    (MarkovPolicy::deterministic(core, &choice), h, p)
}

/// Improviser following the tables from a start distribution over grid
/// indices.
pub fn entropy_matching_policy(tables: Arc<FrontTables>, start: Vec<(f64, usize)>) -> Improviser {
    Improviser::Matching { tables, start }
}

/// Options for [`sg_pareto_explore`].
#[derive(Clone, Copy, Debug)]
pub struct SgSearch {
    pub kappa0: f64,
    pub lambda_max: f64,
    pub budget: usize,
    pub max_halvings: usize,
    pub parallel: bool,
}

impl Default for SgSearch {
    fn default() -> Self {
        SgSearch { kappa0: KAPPA0, lambda_max: LAMBDA_MAX, budget: BUDGET, max_halvings: MAX_HALVINGS, parallel: true }
    }
}

#[derive(Clone, Debug)]
pub struct SgExploration {
    pub verdict: Verdict,
    pub tables: Arc<FrontTables>,
}

impl SgExploration {
    pub fn front(&self, core: &CoreSG) -> Vec<FrontSample> {
        self.tables.front(core.initial)
    }
}

fn grid_index(t: &FrontTables, lambda: f64) -> usize {
    t.grid.iter().position(|&l| l == lambda).expect("sample from grid")
}

fn decide(core: &CoreSG, t: &Arc<FrontTables>, target: &Point) -> Option<Verdict> {
    let front = t.front(core.initial);
    let last = front.len() - 1;
    let ends = [front[0], front[last]];
    if let Some(w) = unrealizability_witness(&ends, target, 0.0) {
        return Some(Verdict::Unrealizable { target: *target, witness: w });
    }
    if let Some(w) = realizability_witness(&front, target) {
        let start = match &w {
            Witness::Point { sample } => vec![(1.0, grid_index(t, sample.lambda))],
            Witness::Pair { a, b, w } => vec![(*w, grid_index(t, a.lambda)), (1.0 - *w, grid_index(t, b.lambda))],
            Witness::Scalarization { .. } => unreachable!(),
        };
        return Some(Verdict::Realizable { target: *target, witness: w, improviser: entropy_matching_policy(t.clone(), start) });
    }
    let slack = t.error_bound();
    unrealizability_witness(&front[1..last], target, slack).map(|w| Verdict::Unrealizable { target: *target, witness: w })
}

/// Builds tables, decides from the initial node's front and halves `kappa`
/// while the target stays inside the error band.
pub fn sg_pareto_explore(core: &CoreSG, target: &Target, opts: &SgSearch) -> Result<SgExploration, SolveError> {
    let mut topts = TableOptions { kappa: opts.kappa0, lambda_max: opts.lambda_max, budget: opts.budget, parallel: opts.parallel };
    let mut tables = Arc::new(FrontTables::build(core, &topts)?);
    let front = tables.front(core.initial);
    let ends = Endpoints { zero: front[0].point(), inf: front[front.len() - 1].point() };
    let tgt = target.resolve(&ends)?;
    for round in 0..=opts.max_halvings {
        if let Some(verdict) = decide(core, &tables, &tgt) {
            return Ok(SgExploration { verdict, tables });
        }
        if round == opts.max_halvings {
            break;
        }
        topts.kappa *= 0.5;
        log::debug!("halving kappa to {:.3e}", topts.kappa);
        match FrontTables::refine_from(core, tables.grid.clone(), &topts) {
            Ok(t) => tables = Arc::new(t),
            Err(SolveError::ResolutionExhausted(_)) => break,
            Err(e) => return Err(e),
        }
    }
    let (j1, j2, _) = match_rationality(&tables.samples[core.initial], tgt.h);
    let reason = format!("target within error band {:.3e} at kappa {:.3e}", tables.error_bound(), tables.kappa);
    Ok(SgExploration {
        verdict: Verdict::Unknown { target: tgt, lo: tables.grid[j1], hi: tables.grid[j2.max(j1)], reason },
        tables,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::entropy;
    use crate::fixtures;

    #[test]
    fn terminal_tables() {
        let core = fixtures::toy_core();
        let t = FrontTables::on_grid(&core, initial_grid(100.0), false);
        assert!(t.samples[core.top].iter().all(|&s| s == (0.0, 1.0)));
        assert!(t.samples[core.bot].iter().all(|&s| s == (0.0, 0.0)));
    }

    #[test]
    fn minimal_mdp_table_matches_binary_entropy() {
        let core = fixtures::minimal_mdp();
        let opts = TableOptions { kappa: 0.05, ..Default::default() };
        let t = FrontTables::build(&core, &opts).unwrap();
        let s = &t.samples[core.initial];
        for i in 0..100 {
            let h = 2f64.ln() * i as f64 / 99.0;
            // closed form: the front p at entropy h solves H(p) = h, p >= 1/2
            let (mut lo, mut hi) = (0.5, 1.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if entropy(&[mid, 1.0 - mid]) > h {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let exact = 0.5 * (lo + hi);
            let got = t.value_at(core.initial, h);
            assert!(got <= exact + 1e-9 && exact - got <= 0.05, "h {h}: {got} vs {exact}");
        }
        assert!(s.windows(2).all(|w| w[0].0 >= w[1].0 - 1e-12 && w[0].1 <= w[1].1 + 1e-12));
    }

    #[test]
    fn matching_clamps_and_interpolates() {
        let s = vec![(1.0, 0.2), (0.5, 0.6), (0.0, 1.0)];
        assert_eq!(match_rationality(&s, 0.5), (1, 1, 1.0));
        assert_eq!(match_rationality(&s, 0.0), (2, 2, 1.0));
        assert_eq!(match_rationality(&s, 2.0), (0, 0, 1.0));
        let (j1, j2, w) = match_rationality(&s, 0.75);
        assert_eq!((j1, j2), (0, 1));
        assert!((w * s[j1].0 + (1.0 - w) * s[j2].0 - 0.75).abs() < 1e-15);
    }

    #[test]
    fn envelope_of_line_and_point() {
        // p = 1 - h on [0, 1] against the single point (0.7, 0.5)
        let a = vec![(1.0, 0.0), (0.0, 1.0)];
        let b = vec![(0.7, 0.5), (0.7, 0.5)];
        let v = envelope(&[a, b]);
        let g = |h: f64| chain_at(&v, h);
        assert!((g(0.5) - 0.5).abs() < 1e-12);
        assert!((g(0.7) - 0.3).abs() < 1e-12);
        assert!((v.last().unwrap().0 - 0.7).abs() < 1e-12);
    }

    #[test]
    fn min_entropy_env_on_matching_example() {
        let core = fixtures::matching_example();
        let (env, h, _) = min_entropy_env(&core, 0.0);
        // s2 is node 1: s3 has two actions, s4 three
        assert_eq!(env.at(1), &[1.0, 0.0]);
        assert!((h[1] - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn min_entropy_env_on_mdp_equals_bellman() {
        let core = fixtures::minimal_mdp();
        let (_, h, p) = min_entropy_env(&core, 3f64.ln());
        let r = crate::mdp::smooth_bellman(&core, 3f64.ln()).unwrap();
        assert_eq!(h, r.h);
        assert_eq!(p, r.p);
    }

    #[test]
    fn gap_formula() {
        // endpoints 0 and inf of the binary-entropy front
        let g = pair_gap(0.0, (2f64.ln(), 0.5), f64::INFINITY, (0.0, 1.0));
        assert!((g - 0.5).abs() < 1e-15);
        let g = pair_gap(1.0, (0.5, 0.5), 2.0, (0.5, 0.5));
        assert_eq!(g, 0.0);
    }

    #[test]
    fn toy_verdicts() {
        let core = fixtures::toy_core();
        let opts = SgSearch::default();
        let run = |p, h| sg_pareto_explore(&core, &Target::Absolute { p, h }, &opts).unwrap().verdict;
        // env can always hold performance to at most 1/3
        assert!(run(0.5, 0.0).is_unrealizable());
        assert!(run(0.1, 0.1).is_realizable());
        assert!(run(0.0, 10.0).is_unrealizable());
    }

    #[test]
    fn parallel_and_sequential_tables_agree() {
        let core = fixtures::matching_example();
        let a = FrontTables::build(&core, &TableOptions { parallel: true, ..Default::default() }).unwrap();
        let b = FrontTables::build(&core, &TableOptions { parallel: false, ..Default::default() }).unwrap();
        assert_eq!(a, b);
    }
}

//! Grid-world delivery benchmark.
//!
//! Ego flies on a `k x k` grid (4-neighbourhood plus stay) and must visit the
//! four houses at `{k/3, 2k/3}^2` without sharing a cell with an env drone.
//! The env drone patrols the perimeter of the square spanned by the houses,
//! starting clockwise at the top-right house, and may turn around when it
//! leaves a house: with probability `lo` in point mode, or with a
//! probability of env's choosing among `{lo, hi}` in interval mode.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{GameBuilder, Owner, Prob, StochasticGame};
use crate::monitor::Monitor;

#[derive(Debug, Error, PartialEq)]
pub enum BenchmarkError {
    #[error("invalid benchmark: {0}")]
    SpecInvalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SwitchMode {
    Point,
    Interval,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub k: usize,
    pub horizon: usize,
    /// Switch probability bounds as `(num, den)`.
    pub lo: (u64, u64),
    pub hi: (u64, u64),
}

impl BenchmarkSpec {
    pub fn new(k: usize, horizon: usize) -> BenchmarkSpec {
        BenchmarkSpec { k, horizon, lo: (1, 100), hi: (1, 50) }
    }

    pub fn houses(&self) -> [(usize, usize); 4] {
        let (a, b) = (self.k / 3, 2 * self.k / 3);
        [(a, a), (a, b), (b, a), (b, b)]
    }

    fn validate(&self) -> Result<(), BenchmarkError> {
        let bad = |m: &str| Err(BenchmarkError::SpecInvalid(m.into()));
        if self.k < 4 {
            return bad("k must be at least 4");
        }
        if self.horizon == 0 {
            return bad("horizon must be at least 1");
        }
        let q = |r: (u64, u64)| r.0 as f64 / r.1 as f64;
        if self.lo.1 == 0 || self.hi.1 == 0 || q(self.lo) > q(self.hi) || q(self.hi) > 1.0 {
            return bad("switch probabilities must satisfy 0 <= lo <= hi <= 1");
        }
        Ok(())
    }
}

/// Generated game with its monitors.
#[derive(Clone, Debug)]
pub struct DroneBenchmark {
    pub spec: BenchmarkSpec,
    pub game: StochasticGame,
    pub hard: Monitor,
    pub soft: Monitor,
}

type Cell = (usize, usize);

/// Perimeter cells of the house square, clockwise from the top-right house.
fn patrol_loop(spec: &BenchmarkSpec) -> Vec<Cell> {
    let (a, b) = (spec.k / 3, 2 * spec.k / 3);
    let mut cells = Vec::new();
    for y in (a + 1..=b).rev() {
        cells.push((b, y));
    }
    for x in (a + 1..=b).rev() {
        cells.push((x, a));
    }
    for y in a..b {
        cells.push((a, y));
    }
    for x in a..b {
        cells.push((x, b));
    }
    cells
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct Key {
    ego: Cell,
    env: usize,
    cw: bool,
    ego_turn: bool,
}

fn id(loop_: &[Cell], s: Key) -> String {
    let (ex, ey) = s.ego;
    let (dx, dy) = loop_[s.env];
    let turn = if s.ego_turn { "g" } else { "v" };
    let o = if s.cw { "cw" } else { "ccw" };
    format!("{turn}_{ex}_{ey}_{dx}_{dy}_{o}")
}

const MOVES: [(&str, i64, i64); 5] = [("N", 0, 1), ("S", 0, -1), ("E", 1, 0), ("W", -1, 0), ("stay", 0, 0)];

pub fn gen_drone_benchmark(spec: &BenchmarkSpec, mode: SwitchMode) -> Result<DroneBenchmark, BenchmarkError> {
    spec.validate()?;
    let loop_ = patrol_loop(spec);
    let houses = spec.houses();
    let len = loop_.len();
    let step_env = |i: usize, cw: bool| if cw { (i + 1) % len } else { (i + len - 1) % len };
    let start = Key { ego: (0, 0), env: 0, cw: true, ego_turn: true };

    // breadth-first over reachable states
    let mut order = vec![start];
    let mut seen: HashMap<Key, usize> = HashMap::from([(start, 0)]);
    let mut edges: Vec<Vec<(String, Vec<(Key, Prob)>)>> = Vec::new();
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        let mut acts: Vec<(String, Vec<(Key, Prob)>)> = Vec::new();
        if s.ego_turn {
            for (name, dx, dy) in MOVES {
                let (x, y) = (s.ego.0 as i64 + dx, s.ego.1 as i64 + dy);
                if x < 0 || y < 0 || x >= spec.k as i64 || y >= spec.k as i64 {
                    continue;
                }
                let t = Key { ego: (x as usize, y as usize), ego_turn: false, ..s };
                acts.push((name.to_string(), vec![(t, Prob::one())]));
            }
        } else {
            let keep = Key { env: step_env(s.env, s.cw), ego_turn: true, ..s };
            let flip = Key { env: step_env(s.env, !s.cw), cw: !s.cw, ego_turn: true, ..s };
            if houses.contains(&loop_[s.env]) {
                let dist = |(num, den): (u64, u64)| {
                    if num == 0 {
                        vec![(keep, Prob::one())]
                    } else {
                        vec![(keep, Prob::Exact { num: den - num, den }), (flip, Prob::Exact { num, den })]
                    }
                };
                match mode {
                    SwitchMode::Point => acts.push(("patrol".into(), dist(spec.lo))),
                    SwitchMode::Interval => {
                        acts.push(("patrol_lo".into(), dist(spec.lo)));
                        acts.push(("patrol_hi".into(), dist(spec.hi)));
                    }
                }
            } else {
                acts.push(("patrol".into(), vec![(keep, Prob::one())]));
            }
        }
        for (_, d) in &acts {
            for (t, _) in d {
                if !seen.contains_key(t) {
                    seen.insert(*t, order.len());
                    order.push(*t);
                    queue.push_back(*t);
                }
            }
        }
        edges.push(acts);
    }
    // edges were pushed in queue order, which equals `order`
    let mut b = GameBuilder::new();
    for s in &order {
        b.state(&id(&loop_, *s), if s.ego_turn { Owner::Ego } else { Owner::Env }).expect("unique ids");
    }
    for (s, acts) in order.iter().zip(&edges) {
        for (name, d) in acts {
            let to: Vec<(String, Prob)> = d.iter().map(|(t, p)| (id(&loop_, *t), p.clone())).collect();
            let refs: Vec<(&str, Prob)> = to.iter().map(|(t, p)| (t.as_str(), p.clone())).collect();
            b.transition(&id(&loop_, *s), name, &refs).expect("known states");
        }
    }
    let game = b.build(&id(&loop_, start)).expect("initial state exists");

    let info: Vec<Key> = order;
    let crash = 16;
    let mut names: Vec<String> = (0..16).map(|m| format!("m{m}")).collect();
    names.push("crash".into());
    let mut accepting = vec![false; 17];
    accepting[15] = true;
    let soft = Monitor::from_fn(&game, names, 0, accepting, |q, s| {
        if q == crash {
            return crash;
        }
        let k = info[s];
        if k.ego == loop_[k.env] {
            return crash;
        }
        match houses.iter().position(|h| *h == k.ego) {
            Some(i) => q | (1 << i),
            None => q,
        }
    });
    let hard = Monitor::trivial(&game);
    Ok(DroneBenchmark { spec: *spec, game, hard, soft })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::game_to_json;
    use crate::preprocess::preprocess;

    #[test]
    fn house_positions() {
        assert_eq!(BenchmarkSpec::new(4, 6).houses(), [(1, 1), (1, 2), (2, 1), (2, 2)]);
        assert_eq!(BenchmarkSpec::new(6, 6).houses(), [(2, 2), (2, 4), (4, 2), (4, 4)]);
    }

    #[test]
    fn patrol_is_a_cycle() {
        let l = patrol_loop(&BenchmarkSpec::new(6, 1));
        assert_eq!(l.len(), 8);
        assert_eq!(l[0], (4, 4));
        for i in 0..l.len() {
            let (a, b) = (l[i], l[(i + 1) % l.len()]);
            assert_eq!(a.0.abs_diff(b.0) + a.1.abs_diff(b.1), 1);
        }
    }

    #[test]
    fn small_instance_pipeline() {
        let spec = BenchmarkSpec::new(4, 6);
        for mode in [SwitchMode::Point, SwitchMode::Interval] {
            let d = gen_drone_benchmark(&spec, mode).unwrap();
            let report = d.game.validate();
            assert!(report.is_ok(), "{report:?}");
            let core = preprocess(&d.game, &d.hard, &d.soft, spec.horizon).unwrap();
            assert!(core.stats().top_reachable);
            assert_eq!(core.is_mdp(), mode == SwitchMode::Point);
        }
    }

    #[test]
    fn deterministic_output() {
        let spec = BenchmarkSpec::new(5, 3);
        let a = gen_drone_benchmark(&spec, SwitchMode::Interval).unwrap();
        let b = gen_drone_benchmark(&spec, SwitchMode::Interval).unwrap();
        assert_eq!(game_to_json(&a.game), game_to_json(&b.game));
    }

    #[test]
    fn invalid_specs() {
        assert!(gen_drone_benchmark(&BenchmarkSpec::new(3, 6), SwitchMode::Point).is_err());
        assert!(gen_drone_benchmark(&BenchmarkSpec::new(4, 0), SwitchMode::Point).is_err());
    }
}

//! Turn-based stochastic games with ego, env and embedded chance.
//!
//! States are addressed by dense indices; the string ids of the JSON format
//! are kept for I/O and diagnostics. Chance lives inside transitions: each
//! `(state, action)` pair maps to a distribution over successor states.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for distributions given as doubles.
pub const FLOAT_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum GameError {
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown action `{action}` at state `{state}`")]
    UnknownAction { state: String, action: String },
    #[error("duplicate state id `{0}`")]
    DuplicateState(String),
    #[error("probability for `{0}` has zero denominator")]
    ZeroDenominator(String),
    #[error("transition from `{0}` gives neither prob nor prob_num/prob_den")]
    MissingProbability(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Owner {
    Ego,
    Env,
}

impl Owner {
    pub fn other(self) -> Owner {
        match self {
            Owner::Ego => Owner::Env,
            Owner::Env => Owner::Ego,
        }
    }
}

impl fmt::Display for Owner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Owner::Ego => f.write_str("ego"),
            Owner::Env => f.write_str("env"),
        }
    }
}

/// A transition probability, either exact or a double.
#[derive(Clone, Debug, PartialEq)]
pub enum Prob {
    Exact { num: u64, den: u64 },
    Float(f64),
}

impl Prob {
    pub fn value(&self) -> f64 {
        match *self {
            Prob::Exact { num, den } => num as f64 / den as f64,
            Prob::Float(x) => x,
        }
    }

    pub fn one() -> Prob {
        Prob::Exact { num: 1, den: 1 }
    }

    fn exact(&self) -> Option<BigRational> {
        match *self {
            Prob::Exact { num, den } if den != 0 => {
                Some(BigRational::new(BigInt::from(num), BigInt::from(den)))
            }
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GameState {
    pub id: String,
    pub owner: Owner,
    /// Set on states inserted by [`StochasticGame::normalize_alternation`]:
    /// the id of the original state this pass-through leads to.
    pub pass_through_to: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub action: usize,
    pub to: Vec<(usize, Prob)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StochasticGame {
    pub states: Vec<GameState>,
    pub initial: usize,
    pub actions: Vec<String>,
    /// Per state, sorted by action index. Empty means terminal.
    pub transitions: Vec<Vec<Transition>>,
    index: HashMap<String, usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IssueCode {
    DistSum,
    NegativeProb,
    EmptyDist,
    DuplicateAction,
    InitOwner,
    Alternation,
    Unreachable,
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("issue code serializes");
        f.write_str(s.as_str().unwrap_or("?"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub code: IssueCode,
    pub state: String,
    pub action: Option<String>,
    pub message: String,
    #[serde(skip)]
    order: (usize, usize),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn has(&self, code: IssueCode) -> bool {
        self.errors.iter().any(|e| e.code == code)
    }
}

/// Incremental construction of a game from string ids.
#[derive(Debug, Default)]
pub struct GameBuilder {
    states: Vec<GameState>,
    index: HashMap<String, usize>,
    actions: Vec<String>,
    action_index: HashMap<String, usize>,
    edges: Vec<(usize, usize, Vec<(usize, Prob)>)>,
}

impl GameBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(&mut self, id: &str, owner: Owner) -> Result<usize, GameError> {
        if self.index.contains_key(id) {
            return Err(GameError::DuplicateState(id.to_string()));
        }
        let i = self.states.len();
        self.states.push(GameState { id: id.to_string(), owner, pass_through_to: None });
        self.index.insert(id.to_string(), i);
        Ok(i)
    }

    pub fn action(&mut self, name: &str) -> usize {
        if let Some(&i) = self.action_index.get(name) {
            return i;
        }
        let i = self.actions.len();
        self.actions.push(name.to_string());
        self.action_index.insert(name.to_string(), i);
        i
    }

    fn lookup(&self, id: &str) -> Result<usize, GameError> {
        self.index.get(id).copied().ok_or_else(|| GameError::UnknownState(id.to_string()))
    }

    pub fn transition(&mut self, from: &str, action: &str, to: &[(&str, Prob)]) -> Result<(), GameError> {
        let s = self.lookup(from)?;
        let a = self.action(action);
        let mut dist = Vec::with_capacity(to.len());
        for (t, p) in to {
            dist.push((self.lookup(t)?, p.clone()));
        }
        self.edges.push((s, a, dist));
        Ok(())
    }

    pub fn build(self, initial: &str) -> Result<StochasticGame, GameError> {
        let init = self.lookup(initial)?;
        let mut transitions: Vec<Vec<Transition>> = vec![Vec::new(); self.states.len()];
        for (s, a, to) in self.edges {
            transitions[s].push(Transition { action: a, to });
        }
        for ts in &mut transitions {
            ts.sort_by_key(|t| t.action);
        }
        Ok(StochasticGame {
            states: self.states,
            initial: init,
            actions: self.actions,
            transitions,
            index: self.index,
        })
    }
}

impl StochasticGame {
    pub fn from_parts(
        states: Vec<GameState>,
        initial: usize,
        actions: Vec<String>,
        transitions: Vec<Vec<Transition>>,
    ) -> Self {
        let index = states.iter().enumerate().map(|(i, s)| (s.id.clone(), i)).collect();
        StochasticGame { states, initial, actions, transitions, index }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|a| a == name)
    }

    pub fn owner(&self, s: usize) -> Owner {
        self.states[s].owner
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.transitions[s].is_empty()
    }

    /// Action indices enabled at `s`.
    pub fn enabled(&self, s: usize) -> impl Iterator<Item = usize> + '_ {
        self.transitions[s].iter().map(|t| t.action)
    }

    /// The distribution of `(s, action)` restricted to its support.
    pub fn successors(&self, state: &str, action: &str) -> Result<Vec<(usize, f64)>, GameError> {
        let s = self.state_index(state).ok_or_else(|| GameError::UnknownState(state.to_string()))?;
        let unknown = || GameError::UnknownAction { state: state.to_string(), action: action.to_string() };
        let a = self.action_index(action).ok_or_else(unknown)?;
        let t = self.transitions[s].iter().find(|t| t.action == a).ok_or_else(unknown)?;
        Ok(t.to.iter().map(|(n, p)| (*n, p.value())).filter(|(_, p)| *p > 0.0).collect())
    }

    /// States reachable from the initial state.
    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::from([self.initial]);
        seen[self.initial] = true;
        while let Some(s) = queue.pop_front() {
            for t in &self.transitions[s] {
                for (n, p) in &t.to {
                    if p.value() > 0.0 && !seen[*n] {
                        seen[*n] = true;
                        queue.push_back(*n);
                    }
                }
            }
        }
        seen
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let issue = |code, s: usize, a: Option<usize>, message: String| Issue {
            code,
            state: self.states[s].id.clone(),
            action: a.map(|a| self.actions[a].clone()),
            message,
            order: (s, a.map_or(0, |a| a + 1)),
        };
        if self.owner(self.initial) != Owner::Ego {
            report.errors.push(issue(
                IssueCode::InitOwner,
                self.initial,
                None,
                "initial state must be ego-owned".into(),
            ));
        }
        for (s, ts) in self.transitions.iter().enumerate() {
            for (k, t) in ts.iter().enumerate() {
                if k > 0 && ts[k - 1].action == t.action {
                    report.errors.push(issue(
                        IssueCode::DuplicateAction,
                        s,
                        Some(t.action),
                        "action defined twice".into(),
                    ));
                }
                if t.to.is_empty() {
                    report.errors.push(issue(IssueCode::EmptyDist, s, Some(t.action), "empty distribution".into()));
                    continue;
                }
                if t.to.iter().any(|(_, p)| p.value() < 0.0 || p.value().is_nan()) {
                    report.errors.push(issue(
                        IssueCode::NegativeProb,
                        s,
                        Some(t.action),
                        "negative or NaN probability".into(),
                    ));
                }
                if let Some(msg) = sum_violation(&t.to) {
                    report.errors.push(issue(IssueCode::DistSum, s, Some(t.action), msg));
                }
                for (n, p) in &t.to {
                    if p.value() > 0.0 && !self.is_terminal(*n) && self.owner(*n) == self.owner(s) {
                        report.errors.push(issue(
                            IssueCode::Alternation,
                            s,
                            Some(t.action),
                            format!("{} state leads to {} state `{}`", self.owner(s), self.owner(*n), self.states[*n].id),
                        ));
                    }
                }
            }
        }
        for (s, r) in self.reachable().into_iter().enumerate() {
            if !r {
                report.warnings.push(issue(IssueCode::Unreachable, s, None, "unreachable from initial".into()));
            }
        }
        report.errors.sort_by(|a, b| a.order.cmp(&b.order).then(a.code.cmp(&b.code)));
        report.warnings.sort_by(|a, b| a.order.cmp(&b.order));
        report
    }

    /// Copy of the game restricted to states reachable from the initial state.
    pub fn without_unreachable(&self) -> StochasticGame {
        let keep = self.reachable();
        let mut remap = vec![usize::MAX; self.len()];
        let mut states = Vec::new();
        for (s, k) in keep.iter().enumerate() {
            if *k {
                remap[s] = states.len();
                states.push(self.states[s].clone());
            }
        }
        let transitions = (0..self.len())
            .filter(|s| keep[*s])
            .map(|s| {
                self.transitions[s]
                    .iter()
                    .map(|t| Transition {
                        action: t.action,
                        to: t.to.iter().filter(|(n, _)| keep[*n]).map(|(n, p)| (remap[*n], p.clone())).collect(),
                    })
                    .collect()
            })
            .collect();
        StochasticGame::from_parts(states, remap[self.initial], self.actions.clone(), transitions)
    }

    /// Inserts single-action pass-through states so that ego and env strictly
    /// alternate. Edges into terminal states are left alone. One pass-through
    /// is shared by all same-owner edges into a given target.
    pub fn normalize_alternation(&self) -> StochasticGame {
        let mut states = self.states.clone();
        let mut transitions = self.transitions.clone();
        let mut actions = self.actions.clone();
        let mut pass_of: HashMap<usize, usize> = HashMap::new();
        let pass_action = match actions.iter().position(|a| a == PASS_ACTION) {
            Some(i) => i,
            None => {
                actions.push(PASS_ACTION.to_string());
                actions.len() - 1
            }
        };
        for s in 0..self.len() {
            for k in 0..self.transitions[s].len() {
                for j in 0..self.transitions[s][k].to.len() {
                    let (n, _) = self.transitions[s][k].to[j];
                    if self.is_terminal(n) || self.owner(n) != self.owner(s) {
                        continue;
                    }
                    let via = *pass_of.entry(n).or_insert_with(|| {
                        let mut id = format!("{}#pass", self.states[n].id);
                        while self.index.contains_key(&id) {
                            id.push('#');
                        }
                        states.push(GameState {
                            id,
                            owner: self.owner(n).other(),
                            pass_through_to: Some(self.states[n].id.clone()),
                        });
                        transitions.push(vec![Transition { action: pass_action, to: vec![(n, Prob::one())] }]);
                        states.len() - 1
                    });
                    transitions[s][k].to[j].0 = via;
                }
            }
        }
        if pass_of.is_empty() {
            return self.clone();
        }
        StochasticGame::from_parts(states, self.initial, actions, transitions)
    }
}

/// Action name used by inserted pass-through states.
pub const PASS_ACTION: &str = "pass";

fn sum_violation(to: &[(usize, Prob)]) -> Option<String> {
    let exact: Option<Vec<BigRational>> = to.iter().map(|(_, p)| p.exact()).collect();
    if let Some(ps) = exact {
        let total = ps.into_iter().fold(BigRational::zero(), |acc, p| acc + p);
        if total != BigRational::one() {
            return Some(format!("probabilities sum to {total}, not 1"));
        }
        return None;
    }
    let total: f64 = to.iter().map(|(_, p)| p.value()).sum();
    if (total - 1.0).abs() > FLOAT_SUM_TOL {
        return Some(format!("probabilities sum to {total}, not 1"));
    }
    None
}

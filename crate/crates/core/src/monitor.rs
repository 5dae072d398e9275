//! Deterministic finite monitors over observed game states.
//!
//! A monitor is compiled against a concrete game into a dense
//! `mstate x game-state` table. Pass-through states inserted by alternation
//! normalization are invisible to monitors: the monitor stutters on them.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::StochasticGame;

#[derive(Debug, Error, PartialEq)]
pub enum MonitorError {
    #[error("unknown monitor state `{0}`")]
    UnknownMonitorState(String),
    #[error("unknown game state `{0}`")]
    UnknownGameState(String),
    #[error("monitor has no states")]
    Empty,
}

/// JSON form of a monitor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorSpec {
    pub mstates: Vec<String>,
    pub init: String,
    pub accepting: Vec<String>,
    pub delta: Vec<DeltaEntry>,
    /// Target for unlisted `(from, obs)` pairs; when absent the monitor stays put.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaEntry {
    pub from: String,
    pub obs: String,
    pub to: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    Accept,
    Reject,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Monitor {
    pub names: Vec<String>,
    pub init: usize,
    pub accepting: Vec<bool>,
    table: Vec<Vec<u32>>,
}

impl Monitor {
    /// Builds a monitor from a step function over state indices.
    pub fn from_fn(
        game: &StochasticGame,
        names: Vec<String>,
        init: usize,
        accepting: Vec<bool>,
        step: impl Fn(usize, usize) -> usize,
    ) -> Monitor {
        let table = (0..names.len())
            .map(|q| {
                (0..game.len())
                    .map(|s| if game.states[s].pass_through_to.is_some() { q as u32 } else { step(q, s) as u32 })
                    .collect()
            })
            .collect();
        Monitor { names, init, accepting, table }
    }

    /// Single accepting state; used for vacuous hard constraints.
    pub fn trivial(game: &StochasticGame) -> Monitor {
        Monitor::from_fn(game, vec!["ok".into()], 0, vec![true], |_, _| 0)
    }

    /// Two states `seeking`/`seen`; accepts once any of `targets` is observed.
    pub fn reach(game: &StochasticGame, targets: &[&str]) -> Result<Monitor, MonitorError> {
        let mut hit = vec![false; game.len()];
        for t in targets {
            let s = game.state_index(t).ok_or_else(|| MonitorError::UnknownGameState(t.to_string()))?;
            hit[s] = true;
        }
        Ok(Monitor::from_fn(
            game,
            vec!["seeking".into(), "seen".into()],
            0,
            vec![false, true],
            |q, s| if q == 1 || hit[s] { 1 } else { 0 },
        ))
    }

    pub fn compile(spec: &MonitorSpec, game: &StochasticGame) -> Result<Monitor, MonitorError> {
        if spec.mstates.is_empty() {
            return Err(MonitorError::Empty);
        }
        let idx: HashMap<&str, usize> = spec.mstates.iter().enumerate().map(|(i, m)| (m.as_str(), i)).collect();
        let q = |name: &str| idx.get(name).copied().ok_or_else(|| MonitorError::UnknownMonitorState(name.to_string()));
        let init = q(&spec.init)?;
        let mut accepting = vec![false; spec.mstates.len()];
        for a in &spec.accepting {
            accepting[q(a)?] = true;
        }
        let default = spec.default.as_deref().map(q).transpose()?;
        let mut table: Vec<Vec<u32>> = (0..spec.mstates.len())
            .map(|m| vec![default.unwrap_or(m) as u32; game.len()])
            .collect();
        for d in &spec.delta {
            let s = game.state_index(&d.obs).ok_or_else(|| MonitorError::UnknownGameState(d.obs.clone()))?;
            table[q(&d.from)?][s] = q(&d.to)? as u32;
        }
        for (s, st) in game.states.iter().enumerate() {
            if st.pass_through_to.is_some() {
                for (m, row) in table.iter_mut().enumerate() {
                    row[s] = m as u32;
                }
            }
        }
        Ok(Monitor { names: spec.mstates.clone(), init, accepting, table })
    }

    /// Lists every transition that differs from "stay".
    pub fn to_spec(&self, game: &StochasticGame) -> MonitorSpec {
        let mut delta = Vec::new();
        for (q, row) in self.table.iter().enumerate() {
            for (s, &to) in row.iter().enumerate() {
                if to as usize != q && game.states[s].pass_through_to.is_none() {
                    delta.push(DeltaEntry {
                        from: self.names[q].clone(),
                        obs: game.states[s].id.clone(),
                        to: self.names[to as usize].clone(),
                    });
                }
            }
        }
        MonitorSpec {
            mstates: self.names.clone(),
            init: self.names[self.init].clone(),
            accepting: self.names.iter().zip(&self.accepting).filter(|(_, a)| **a).map(|(n, _)| n.clone()).collect(),
            delta,
            default: None,
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn step(&self, q: usize, s: usize) -> Result<usize, MonitorError> {
        let row = self.table.get(q).ok_or_else(|| MonitorError::UnknownMonitorState(q.to_string()))?;
        let to = row.get(s).ok_or_else(|| MonitorError::UnknownGameState(s.to_string()))?;
        Ok(*to as usize)
    }

    /// Unchecked step for the unrolling hot loop.
    pub(crate) fn step_fast(&self, q: usize, s: usize) -> usize {
        self.table[q][s] as usize
    }

    pub fn classify(&self, q: usize) -> Classification {
        if self.accepting[q] {
            Classification::Accept
        } else {
            Classification::Reject
        }
    }

    /// Monitor state after observing every state of `path`, starting from `q`.
    pub fn fold(&self, q: usize, path: &[usize]) -> Result<usize, MonitorError> {
        path.iter().try_fold(q, |q, &s| self.step(q, s))
    }
}

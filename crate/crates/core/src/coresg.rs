//! Acyclic alternating game with the two terminals top and bot.
//!
//! Nodes are numbered topologically: every edge goes from a lower to a
//! higher index, and the two terminals occupy the last two slots. A reverse
//! index sweep is therefore a valid backward pass.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::Owner;

/// Tolerance on distribution sums inside a core.
pub const CORE_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum CoreError {
    #[error("graph has a cycle through node {0}")]
    Cycle(usize),
    #[error("non-terminal node {0} has no actions")]
    NoActions(usize),
    #[error("distribution at node {node}, action {action} sums to {sum}")]
    BadDistribution { node: usize, action: String, sum: f64 },
    #[error("node index {0} out of range")]
    BadNode(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Ego,
    Env,
    Top,
    Bot,
}

impl NodeKind {
    pub fn is_terminal(self) -> bool {
        matches!(self, NodeKind::Top | NodeKind::Bot)
    }

    pub fn owner(self) -> Option<Owner> {
        match self {
            NodeKind::Ego => Some(Owner::Ego),
            NodeKind::Env => Some(Owner::Env),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoreAction {
    /// Index into [`CoreSG::action_names`].
    pub action: usize,
    pub succ: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoreNode {
    pub kind: NodeKind,
    pub actions: Vec<CoreAction>,
}

/// Where an unrolled node came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub state: String,
    pub hard: String,
    pub soft: String,
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoreSG {
    pub nodes: Vec<CoreNode>,
    pub initial: usize,
    pub top: usize,
    pub bot: usize,
    pub action_names: Vec<String>,
    pub provenance: Vec<Option<Provenance>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoreStats {
    pub nodes: usize,
    pub edges: usize,
    pub longest_path: usize,
    pub top_reachable: bool,
    pub bot_reachable: bool,
}

impl CoreSG {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn kind(&self, n: usize) -> NodeKind {
        self.nodes[n].kind
    }

    pub fn action_name(&self, n: usize, a: usize) -> &str {
        &self.action_names[self.nodes[n].actions[a].action]
    }

    /// Position of the named action among the enabled actions of `n`.
    pub fn action_position(&self, n: usize, name: &str) -> Option<usize> {
        self.nodes[n].actions.iter().position(|a| self.action_names[a.action] == name)
    }

    /// Every env node has at most one action.
    pub fn is_mdp(&self) -> bool {
        self.nodes.iter().all(|n| n.kind != NodeKind::Env || n.actions.len() <= 1)
    }

    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        seen[self.initial] = true;
        for n in self.initial..self.len() {
            if !seen[n] {
                continue;
            }
            for a in &self.nodes[n].actions {
                for (m, p) in &a.succ {
                    if *p > 0.0 {
                        seen[*m] = true;
                    }
                }
            }
        }
        seen
    }

    /// Longest path (in edges) from every node to a terminal.
    pub fn heights(&self) -> Vec<usize> {
        let mut h = vec![0usize; self.len()];
        for n in (0..self.len()).rev() {
            h[n] = self.nodes[n]
                .actions
                .iter()
                .flat_map(|a| a.succ.iter())
                .map(|(m, _)| h[*m] + 1)
                .max()
                .unwrap_or(0);
        }
        h
    }

    /// Nodes grouped by height: every successor of a node lies in an earlier group.
    pub fn levels(&self) -> Vec<Vec<usize>> {
        let h = self.heights();
        let max = h.iter().copied().max().unwrap_or(0);
        let mut levels = vec![Vec::new(); max + 1];
        for (n, &k) in h.iter().enumerate() {
            levels[k].push(n);
        }
        levels
    }

    pub fn longest_path(&self) -> usize {
        self.heights()[self.initial]
    }

    /// Largest number of env nodes with a real choice on any path from the
    /// initial node. Interpolation error in the front tables accumulates once
    /// per such node.
    pub fn choice_depth(&self) -> usize {
        let mut d = vec![0usize; self.len()];
        for n in (0..self.len()).rev() {
            let node = &self.nodes[n];
            let below = node.actions.iter().flat_map(|a| a.succ.iter()).map(|(m, _)| d[*m]).max().unwrap_or(0);
            d[n] = below + usize::from(node.kind == NodeKind::Env && node.actions.len() > 1);
        }
        d[self.initial]
    }

    pub fn stats(&self) -> CoreStats {
        let reach = self.reachable();
        CoreStats {
            nodes: reach.iter().filter(|r| **r).count(),
            edges: (0..self.len()).filter(|n| reach[*n]).map(|n| self.nodes[n].actions.len()).sum(),
            longest_path: self.longest_path(),
            top_reachable: reach[self.top],
            bot_reachable: reach[self.bot],
        }
    }

    /// Env nodes with more than one action, in index order.
    pub fn env_choice_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&n| self.kind(n) == NodeKind::Env && self.nodes[n].actions.len() > 1).collect()
    }

    pub fn ego_choice_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&n| self.kind(n) == NodeKind::Ego && self.nodes[n].actions.len() > 1).collect()
    }
}

/// Builds a [`CoreSG`] from nodes added in any order.
#[derive(Debug)]
pub struct CoreBuilder {
    kinds: Vec<NodeKind>,
    actions: Vec<Vec<(String, Vec<(usize, f64)>)>>,
    provenance: Vec<Option<Provenance>>,
}

impl Default for CoreBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl CoreBuilder {
    /// Starts with the two terminals already present.
    pub fn new() -> Self {
        CoreBuilder {
            kinds: vec![NodeKind::Top, NodeKind::Bot],
            actions: vec![Vec::new(), Vec::new()],
            provenance: vec![None, None],
        }
    }

    pub fn top(&self) -> usize {
        0
    }

    pub fn bot(&self) -> usize {
        1
    }

    pub fn node(&mut self, kind: NodeKind) -> usize {
        assert!(!kind.is_terminal(), "terminals are created by the builder");
        self.kinds.push(kind);
        self.actions.push(Vec::new());
        self.provenance.push(None);
        self.kinds.len() - 1
    }

    pub fn ego(&mut self) -> usize {
        self.node(NodeKind::Ego)
    }

    pub fn env(&mut self) -> usize {
        self.node(NodeKind::Env)
    }

    pub fn set_provenance(&mut self, n: usize, p: Provenance) {
        self.provenance[n] = Some(p);
    }

    pub fn action(&mut self, n: usize, name: &str, succ: &[(usize, f64)]) -> &mut Self {
        self.actions[n].push((name.to_string(), succ.to_vec()));
        self
    }

    /// Renumbers topologically (stable in insertion order), drops nodes that
    /// are unreachable from `initial`, and checks distributions.
    pub fn build(self, initial: usize) -> Result<CoreSG, CoreError> {
        let n = self.kinds.len();
        if initial >= n {
            return Err(CoreError::BadNode(initial));
        }
        for (v, acts) in self.actions.iter().enumerate() {
            if !self.kinds[v].is_terminal() && acts.is_empty() {
                return Err(CoreError::NoActions(v));
            }
            for (name, succ) in acts {
                let sum: f64 = succ.iter().map(|(_, p)| *p).sum();
                if (sum - 1.0).abs() > CORE_SUM_TOL || succ.iter().any(|(_, p)| *p < 0.0) {
                    return Err(CoreError::BadDistribution { node: v, action: name.clone(), sum });
                }
                if let Some((m, _)) = succ.iter().find(|(m, _)| *m >= n) {
                    return Err(CoreError::BadNode(*m));
                }
            }
        }
        // reachability from initial
        let mut reach = vec![false; n];
        let mut stack = vec![initial];
        reach[initial] = true;
        while let Some(v) = stack.pop() {
            for (_, succ) in &self.actions[v] {
                for (m, p) in succ {
                    if *p > 0.0 && !reach[*m] {
                        reach[*m] = true;
                        stack.push(*m);
                    }
                }
            }
        }
        reach[0] = true;
        reach[1] = true;
        // Kahn over reachable non-terminal nodes
        let mut indeg = vec![0usize; n];
        for v in 0..n {
            if !reach[v] {
                continue;
            }
            for (_, succ) in &self.actions[v] {
                for (m, p) in succ {
                    if *p > 0.0 {
                        indeg[*m] += 1;
                    }
                }
            }
        }
        let mut ready: BTreeSet<usize> =
            (2..n).filter(|&v| reach[v] && indeg[v] == 0).collect();
        let mut order = Vec::new();
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for (_, succ) in &self.actions[v] {
                for (m, p) in succ {
                    if *p > 0.0 {
                        indeg[*m] -= 1;
                        if indeg[*m] == 0 && *m >= 2 {
                            ready.insert(*m);
                        }
                    }
                }
            }
        }
        let expected = (2..n).filter(|&v| reach[v]).count();
        if order.len() != expected {
            let stuck = (2..n).find(|&v| reach[v] && indeg[v] > 0).unwrap_or(initial);
            return Err(CoreError::Cycle(stuck));
        }
        if initial < 2 {
            order.clear();
        }
        order.push(0);
        order.push(1);
        let mut remap = vec![usize::MAX; n];
        for (i, &v) in order.iter().enumerate() {
            remap[v] = i;
        }
        let mut names: Vec<String> = Vec::new();
        let mut name_idx: HashMap<String, usize> = HashMap::new();
        let mut nodes = Vec::with_capacity(order.len());
        let mut provenance = Vec::with_capacity(order.len());
        for &v in &order {
            let actions = self.actions[v]
                .iter()
                .map(|(name, succ)| {
                    let a = *name_idx.entry(name.clone()).or_insert_with(|| {
                        names.push(name.clone());
                        names.len() - 1
                    });
                    let mut merged: Vec<(usize, f64)> = Vec::new();
                    for (m, p) in succ {
                        if *p <= 0.0 {
                            continue;
                        }
                        match merged.iter_mut().find(|(x, _)| *x == remap[*m]) {
                            Some(e) => e.1 += p,
                            None => merged.push((remap[*m], *p)),
                        }
                    }
                    CoreAction { action: a, succ: merged }
                })
                .collect();
            nodes.push(CoreNode { kind: self.kinds[v], actions });
            provenance.push(self.provenance[v].clone());
        }
        let len = nodes.len();
        Ok(CoreSG {
            nodes,
            initial: remap[initial],
            top: len - 2,
            bot: len - 1,
            action_names: names,
            provenance,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn toy_core_stats() {
        let c = fixtures::toy_core();
        assert_eq!(
            c.stats(),
            CoreStats { nodes: 6, edges: 7, longest_path: 3, top_reachable: true, bot_reachable: true }
        );
        assert!(!c.is_mdp());
        assert_eq!(c.env_choice_nodes().len(), 1);
    }

    #[test]
    fn single_edge_core() {
        let mut b = CoreBuilder::new();
        let s = b.ego();
        let top = b.top();
        b.action(s, "a", &[(top, 1.0)]);
        let c = b.build(s).unwrap();
        let st = c.stats();
        assert_eq!((st.nodes, st.longest_path), (2, 1));
        assert!(!st.bot_reachable);
    }

    #[test]
    fn edges_point_forward() {
        let c = fixtures::toy_core();
        for (n, node) in c.nodes.iter().enumerate() {
            for a in &node.actions {
                assert!(a.succ.iter().all(|(m, _)| *m > n));
            }
        }
        assert_eq!(c.initial, 0);
    }

    #[test]
    fn builder_rejects_cycles_and_bad_sums() {
        let mut b = CoreBuilder::new();
        let x = b.ego();
        let y = b.env();
        b.action(x, "a", &[(y, 1.0)]);
        b.action(y, "a", &[(x, 1.0)]);
        assert!(matches!(b.build(x), Err(CoreError::Cycle(_))));

        let mut b = CoreBuilder::new();
        let x = b.ego();
        let top = b.top();
        b.action(x, "a", &[(top, 0.5)]);
        assert!(matches!(b.build(x), Err(CoreError::BadDistribution { .. })));
    }
}

//! JSON and CSV formats.
//!
//! Infinite rationality is written as the string `"inf"`. JSON keeps full
//! precision; human-facing text and CSV use 12 significant digits.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::coresg::{CoreBuilder, CoreError, CoreSG, NodeKind, Provenance};
use crate::eval::{MarkovPolicy, Point};
use crate::game::{GameError, GameState, Owner, Prob, StochasticGame, Transition};
use crate::runtime::Improviser;
use crate::sg::FrontTables;
use crate::verdict::{FrontSample, Verdict, Witness};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{0}")]
    Format(String),
}

fn bad(msg: impl Into<String>) -> IoError {
    IoError::Format(msg.into())
}

/// Serde adapter writing infinity as `"inf"`.
pub mod lambda_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*x)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(x),
            Raw::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("bad rationality `{s}`"))),
        }
    }
}

/// [`lambda_serde`] for optional values.
pub mod opt_lambda_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => super::lambda_serde::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        #[derive(Deserialize)]
        struct W(#[serde(with = "super::lambda_serde")] f64);
        Ok(Option::<W>::deserialize(d)?.map(|w| w.0))
    }
}

/// Rounds to 12 significant digits for display.
pub fn fmt12(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 || x.is_nan() {
        return format!("{x}");
    }
    let r: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    format!("{r}")
}

// ---------------------------------------------------------------- games

#[derive(Serialize, Deserialize)]
struct GameFile {
    states: Vec<StateFile>,
    initial: String,
    #[serde(default)]
    actions: Vec<String>,
    transitions: Vec<TransitionFile>,
}

#[derive(Serialize, Deserialize)]
struct StateFile {
    id: String,
    owner: Owner,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pass_through_to: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct TransitionFile {
    from: String,
    action: String,
    to: Vec<TargetFile>,
}

#[derive(Serialize, Deserialize)]
struct TargetFile {
    state: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prob_num: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prob_den: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prob: Option<f64>,
}

/// Parses a game. Structural problems (unknown ids, missing probabilities)
/// are errors; distribution and alternation problems are left to
/// [`StochasticGame::validate`].
pub fn game_from_json(text: &str) -> Result<StochasticGame, IoError> {
    let f: GameFile = serde_json::from_str(text)?;
    let states: Vec<GameState> =
        f.states.iter().map(|s| GameState { id: s.id.clone(), owner: s.owner, pass_through_to: s.pass_through_to.clone() }).collect();
    let index: HashMap<&str, usize> = f.states.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
    if index.len() != states.len() {
        let mut seen = std::collections::HashSet::new();
        let dup = f.states.iter().find(|s| !seen.insert(s.id.as_str())).map(|s| s.id.clone()).unwrap_or_default();
        return Err(GameError::DuplicateState(dup).into());
    }
    let sidx = |id: &str| index.get(id).copied().ok_or_else(|| IoError::Game(GameError::UnknownState(id.to_string())));
    let mut actions = f.actions.clone();
    let mut aidx: HashMap<String, usize> = actions.iter().enumerate().map(|(i, a)| (a.clone(), i)).collect();
    let mut transitions: Vec<Vec<Transition>> = vec![Vec::new(); states.len()];
    for t in &f.transitions {
        let from = sidx(&t.from)?;
        let a = *aidx.entry(t.action.clone()).or_insert_with(|| {
            actions.push(t.action.clone());
            actions.len() - 1
        });
        let mut to = Vec::with_capacity(t.to.len());
        for x in &t.to {
            let p = match (x.prob_num, x.prob_den, x.prob) {
                (Some(num), Some(den), _) => Prob::Exact { num, den },
                (None, None, Some(p)) => Prob::Float(p),
                _ => return Err(GameError::MissingProbability(t.from.clone()).into()),
            };
            to.push((sidx(&x.state)?, p));
        }
        transitions[from].push(Transition { action: a, to });
    }
    for ts in &mut transitions {
        ts.sort_by_key(|t| t.action);
    }
    let initial = sidx(&f.initial)?;
    Ok(StochasticGame::from_parts(states, initial, actions, transitions))
}

pub fn game_to_json(g: &StochasticGame) -> String {
    let f = GameFile {
        states: g
            .states
            .iter()
            .map(|s| StateFile { id: s.id.clone(), owner: s.owner, pass_through_to: s.pass_through_to.clone() })
            .collect(),
        initial: g.states[g.initial].id.clone(),
        actions: g.actions.clone(),
        transitions: g
            .transitions
            .iter()
            .enumerate()
            .flat_map(|(s, ts)| {
                ts.iter().map(move |t| TransitionFile {
                    from: g.states[s].id.clone(),
                    action: g.actions[t.action].clone(),
                    to: t
                        .to
                        .iter()
                        .map(|(m, p)| match p {
                            Prob::Exact { num, den } => {
                                TargetFile { state: g.states[*m].id.clone(), prob_num: Some(*num), prob_den: Some(*den), prob: None }
                            }
                            Prob::Float(x) => TargetFile { state: g.states[*m].id.clone(), prob_num: None, prob_den: None, prob: Some(*x) },
                        })
                        .collect(),
                })
            })
            .collect(),
    };
    serde_json::to_string_pretty(&f).expect("game serializes")
}

// ---------------------------------------------------------------- cores

#[derive(Serialize, Deserialize)]
struct CoreFile {
    #[serde(flatten)]
    game: GameFile,
    #[serde(default)]
    provenance: Vec<ProvenanceFile>,
}

#[derive(Serialize, Deserialize)]
struct ProvenanceFile {
    id: String,
    #[serde(flatten)]
    at: Provenance,
}

fn core_id(core: &CoreSG, n: usize) -> String {
    match core.kind(n) {
        NodeKind::Top => "top".into(),
        NodeKind::Bot => "bot".into(),
        _ => format!("n{n}"),
    }
}

/// Core in the game format (float probabilities, terminals `top`/`bot`)
/// plus a provenance section.
pub fn core_to_json(core: &CoreSG) -> String {
    let states = (0..core.len())
        .map(|n| StateFile {
            id: core_id(core, n),
            owner: core.kind(n).owner().unwrap_or(Owner::Ego),
            pass_through_to: None,
        })
        .collect();
    let mut transitions = Vec::new();
    for (n, node) in core.nodes.iter().enumerate() {
        for a in &node.actions {
            transitions.push(TransitionFile {
                from: core_id(core, n),
                action: core.action_names[a.action].clone(),
                to: a
                    .succ
                    .iter()
                    .map(|(m, p)| TargetFile { state: core_id(core, *m), prob_num: None, prob_den: None, prob: Some(*p) })
                    .collect(),
            });
        }
    }
    let provenance = core
        .provenance
        .iter()
        .enumerate()
        .filter_map(|(n, p)| p.as_ref().map(|p| ProvenanceFile { id: core_id(core, n), at: p.clone() }))
        .collect();
    let f = CoreFile {
        game: GameFile { states, initial: core_id(core, core.initial), actions: core.action_names.clone(), transitions },
        provenance,
    };
    serde_json::to_string_pretty(&f).expect("core serializes")
}

/// Loads a core. `top` and `bot` name the terminals; every other state
/// needs at least one action.
pub fn core_from_json(text: &str) -> Result<CoreSG, IoError> {
    let f: CoreFile = serde_json::from_str(text)?;
    let mut b = CoreBuilder::new();
    let mut idx: HashMap<String, usize> = HashMap::new();
    for s in &f.game.states {
        let id = match s.id.as_str() {
            "top" => b.top(),
            "bot" => b.bot(),
            _ => b.node(match s.owner {
                Owner::Ego => NodeKind::Ego,
                Owner::Env => NodeKind::Env,
            }),
        };
        if idx.insert(s.id.clone(), id).is_some() {
            return Err(bad(format!("duplicate state id {}", s.id)));
        }
    }
    let get = |id: &str| idx.get(id).copied().ok_or_else(|| bad(format!("unknown state {id}")));
    for p in &f.provenance {
        b.set_provenance(get(&p.id)?, p.at.clone());
    }
    for t in &f.game.transitions {
        let from = get(&t.from)?;
        let mut succ = Vec::with_capacity(t.to.len());
        for x in &t.to {
            let p = match (x.prob_num, x.prob_den, x.prob) {
                (Some(n), Some(d), _) if d > 0 => n as f64 / d as f64,
                (_, _, Some(p)) => p,
                _ => return Err(bad("missing probability")),
            };
            succ.push((get(&x.state)?, p));
        }
        b.action(from, &t.action, &succ);
    }
    Ok(b.build(get(&f.game.initial)?)?)
}

// ---------------------------------------------------------------- policies

#[derive(Serialize, Deserialize)]
struct PolicyFile {
    nodes: Vec<PolicyNode>,
}

#[derive(Serialize, Deserialize)]
struct PolicyNode {
    id: usize,
    dist: Vec<ActionProb>,
}

#[derive(Serialize, Deserialize)]
struct ActionProb {
    action: String,
    prob: f64,
}

fn policy_value(core: &CoreSG, pi: &MarkovPolicy) -> Value {
    let nodes = (0..core.len())
        .filter(|&n| core.kind(n) == NodeKind::Ego)
        .map(|n| PolicyNode {
            id: n,
            dist: pi.at(n).iter().enumerate().map(|(a, &prob)| ActionProb { action: core.action_name(n, a).into(), prob }).collect(),
        })
        .collect();
    serde_json::to_value(PolicyFile { nodes }).expect("policy serializes")
}

fn policy_from_value(core: &CoreSG, v: Value) -> Result<MarkovPolicy, IoError> {
    let f: PolicyFile = serde_json::from_value(v)?;
    let mut pi = MarkovPolicy::uniform(core);
    for node in f.nodes {
        if node.id >= core.len() {
            return Err(bad(format!("policy node {} out of range", node.id)));
        }
        let mut d = vec![0.0; core.nodes[node.id].actions.len()];
        for ap in node.dist {
            let a = core.action_position(node.id, &ap.action).ok_or_else(|| bad(format!("action {} not enabled at node {}", ap.action, node.id)))?;
            d[a] = ap.prob;
        }
        pi.dist[node.id] = d;
    }
    Ok(pi)
}

/// Ego rows of a Markov policy; env and terminal rows are not written.
pub fn policy_to_json(core: &CoreSG, pi: &MarkovPolicy) -> String {
    serde_json::to_string_pretty(&policy_value(core, pi)).expect("policy serializes")
}

/// Loads ego rows; rows not listed default to uniform.
pub fn policy_from_json(core: &CoreSG, text: &str) -> Result<MarkovPolicy, IoError> {
    policy_from_value(core, serde_json::from_str(text)?)
}

// ---------------------------------------------------------------- tables

#[derive(Serialize, Deserialize)]
struct TablesFile {
    #[serde(with = "grid_serde")]
    grid: Vec<f64>,
    kappa: f64,
    gap: f64,
    nodes: Vec<TableNode>,
}

#[derive(Serialize, Deserialize)]
struct TableNode {
    id: usize,
    samples: Vec<FrontSample>,
    kappa: f64,
}

mod grid_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct L(#[serde(with = "super::lambda_serde")] f64);

    pub fn serialize<S: Serializer>(g: &[f64], s: S) -> Result<S::Ok, S::Error> {
        g.iter().map(|&x| L(x)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Ok(Vec::<L>::deserialize(d)?.into_iter().map(|l| l.0).collect())
    }
}

pub fn tables_to_json(t: &FrontTables) -> String {
    let f = TablesFile {
        grid: t.grid.clone(),
        kappa: t.kappa,
        gap: t.gap,
        nodes: (0..t.samples.len()).map(|n| TableNode { id: n, samples: t.front(n), kappa: t.kappa }).collect(),
    };
    serde_json::to_string(&f).expect("tables serialize")
}

pub fn tables_from_json(core: &CoreSG, text: &str) -> Result<FrontTables, IoError> {
    let f: TablesFile = serde_json::from_str(text)?;
    if f.nodes.len() != core.len() {
        return Err(bad("table count does not match the core"));
    }
    let mut samples = vec![Vec::new(); core.len()];
    for node in f.nodes {
        if node.id >= core.len() || node.samples.len() != f.grid.len() {
            return Err(bad(format!("malformed table for node {}", node.id)));
        }
        samples[node.id] = node.samples.iter().map(|s| (s.h, s.p)).collect();
    }
    Ok(FrontTables { grid: f.grid, samples, kappa: f.kappa, gap: f.gap, depth: core.choice_depth() })
}

// ---------------------------------------------------------------- verdicts

fn improviser_value(core: &CoreSG, imp: &Improviser) -> Value {
    match imp {
        Improviser::Markov { components } => serde_json::json!({
            "kind": "markov",
            "components": components.iter().map(|(w, pi)| serde_json::json!({"weight": w, "policy": policy_value(core, pi)})).collect::<Vec<_>>(),
        }),
        Improviser::Matching { tables, start } => serde_json::json!({
            "kind": "matching",
            "grid": tables.grid.iter().map(|&l| lambda_value(l)).collect::<Vec<_>>(),
            "kappa": tables.kappa,
            "gap": tables.gap,
            "start": start.iter().map(|(w, j)| serde_json::json!({"weight": w, "index": j})).collect::<Vec<_>>(),
        }),
    }
}

fn lambda_value(l: f64) -> Value {
    if l.is_infinite() {
        Value::from("inf")
    } else {
        Value::from(l)
    }
}

fn f(v: &Value, key: &str) -> Result<f64, IoError> {
    match &v[key] {
        Value::String(s) if s == "inf" => Ok(f64::INFINITY),
        x => x.as_f64().ok_or_else(|| bad(format!("missing number `{key}`"))),
    }
}

fn improviser_from_value(core: &CoreSG, v: &Value, parallel: bool) -> Result<Improviser, IoError> {
    match v["kind"].as_str() {
        Some("markov") => {
            let comps = v["components"].as_array().ok_or_else(|| bad("missing components"))?;
            let components = comps
                .iter()
                .map(|c| Ok((f(c, "weight")?, policy_from_value(core, c["policy"].clone())?)))
                .collect::<Result<Vec<_>, IoError>>()?;
            Ok(Improviser::Markov { components })
        }
        Some("matching") => {
            let grid = v["grid"]
                .as_array()
                .ok_or_else(|| bad("missing grid"))?
                .iter()
                .map(|x| match x {
                    Value::String(s) if s == "inf" => Ok(f64::INFINITY),
                    x => x.as_f64().ok_or_else(|| bad("bad grid entry")),
                })
                .collect::<Result<Vec<f64>, IoError>>()?;
            let mut t = FrontTables::on_grid(core, grid, parallel);
            t.kappa = f(v, "kappa")?;
            t.gap = f(v, "gap")?;
            let start = v["start"]
                .as_array()
                .ok_or_else(|| bad("missing start"))?
                .iter()
                .map(|s| Ok((f(s, "weight")?, s["index"].as_u64().ok_or_else(|| bad("bad start index"))? as usize)))
                .collect::<Result<Vec<_>, IoError>>()?;
            if start.iter().any(|s| s.1 >= t.grid.len()) {
                return Err(bad("start index out of range"));
            }
            Ok(Improviser::Matching { tables: Arc::new(t), start })
        }
        _ => Err(bad("unknown improviser kind")),
    }
}

pub fn verdict_to_json(core: &CoreSG, v: &Verdict) -> String {
    let t = v.target();
    let mut out = serde_json::json!({"verdict": v.name(), "target": t});
    match v {
        Verdict::Realizable { witness, improviser, .. } => {
            out["witness"] = serde_json::to_value(witness).expect("witness serializes");
            out["improviser"] = improviser_value(core, improviser);
        }
        Verdict::Unrealizable { witness, .. } => {
            out["witness"] = serde_json::to_value(witness).expect("witness serializes");
        }
        Verdict::Unknown { lo, hi, reason, .. } => {
            out["lo"] = lambda_value(*lo);
            out["hi"] = lambda_value(*hi);
            out["reason"] = Value::from(reason.clone());
        }
    }
    serde_json::to_string_pretty(&out).expect("verdict serializes")
}

/// Loads a verdict. Matching improvisers rebuild their tables from the
/// recorded grid.
pub fn verdict_from_json(core: &CoreSG, text: &str, parallel: bool) -> Result<Verdict, IoError> {
    let v: Value = serde_json::from_str(text)?;
    let target: Point = serde_json::from_value(v["target"].clone())?;
    match v["verdict"].as_str() {
        Some("realizable") => Ok(Verdict::Realizable {
            target,
            witness: serde_json::from_value::<Witness>(v["witness"].clone())?,
            improviser: improviser_from_value(core, &v["improviser"], parallel)?,
        }),
        Some("unrealizable") => {
            Ok(Verdict::Unrealizable { target, witness: serde_json::from_value::<Witness>(v["witness"].clone())? })
        }
        Some("unknown") => Ok(Verdict::Unknown {
            target,
            lo: f(&v, "lo")?,
            hi: f(&v, "hi")?,
            reason: v["reason"].as_str().unwrap_or_default().to_string(),
        }),
        _ => Err(bad("unknown verdict kind")),
    }
}

// ---------------------------------------------------------------- csv

/// Front as CSV with header `lambda,p,h`.
pub fn front_to_csv(front: &[FrontSample]) -> Result<String, IoError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["lambda", "p", "h"])?;
    for s in front {
        w.write_record([fmt12(s.lambda), fmt12(s.p), fmt12(s.h)])?;
    }
    let bytes = w.into_inner().map_err(|e| bad(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("ascii csv"))
}

pub fn front_from_csv(text: &str) -> Result<Vec<FrontSample>, IoError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64, IoError> {
            let s = rec.get(i).ok_or_else(|| bad("short csv row"))?;
            if s == "inf" {
                Ok(f64::INFINITY)
            } else {
                s.parse().map_err(|_| bad(format!("bad number `{s}`")))
            }
        };
        out.push(FrontSample { lambda: num(0)?, p: num(1)?, h: num(2)? });
    }
    Ok(out)
}

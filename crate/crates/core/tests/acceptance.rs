//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use erci_core::coresg::{CoreBuilder, CoreSG};
use erci_core::drone::{gen_drone_benchmark, BenchmarkSpec, SwitchMode};
use erci_core::eval::{causal_entropy, entropy, guaranteed_point, MarkovPolicy, Point};
use erci_core::fixtures;
use erci_core::gen::{random_core, Shape};
use erci_core::mdp::{mix_policies, pareto_explore_mdp, smooth_bellman, MdpSearch};
use erci_core::oracle::{
    check_witness, oracle_front_lower_bound, oracle_guaranteed_point, oracle_improviser_point, FrontOracle, WitnessCheck,
    ENV_CAP,
};
use erci_core::preprocess::preprocess;
use erci_core::runtime::{sample_plays, simulate, EnvStrategy};
use erci_core::sg::{sg_pareto_explore, FrontTables, SgSearch, TableOptions};
use erci_core::verdict::{Target, Verdict, Witness, WITNESS_TOL};
use erci_core::Improviser;

const N_MC: usize = 100_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Random ego policy: fresh weights at ego nodes, some actions zeroed.
fn random_ego(core: &CoreSG, rng: &mut ChaCha8Rng) -> MarkovPolicy {
    let mut pi = MarkovPolicy::uniform(core);
    for n in core.ego_choice_nodes() {
        let k = core.nodes[n].actions.len();
        let mut w: Vec<f64> = (0..k).map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..1.0) }).collect();
        if w.iter().sum::<f64>() <= 0.0 {
            w[rng.gen_range(0..k)] = 1.0;
        }
        let z: f64 = w.iter().sum();
        pi.dist[n] = w.into_iter().map(|x| x / z).collect();
    }
    pi
}

fn minimal_mdp_front() -> Outcome {
    let core = fixtures::minimal_mdp();
    let t0 = Instant::now();
    let mut worst_h = 0.0f64;
    let mut worst_p = 0.0f64;
    for i in 0..50 {
        let lambda = 10f64.powf(-3.0 + 5.0 * i as f64 / 49.0);
        let x = smooth_bellman(&core, lambda).expect("mdp").point(core.initial);
        let p = lambda.exp() / (lambda.exp() + 1.0);
        worst_p = worst_p.max((x.p - p).abs());
        worst_h = worst_h.max((x.h - entropy(&[x.p, 1.0 - x.p])).abs());
    }
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        worst_p <= 1e-9 && worst_h <= 1e-9 && secs < 1.0,
        format!("max |dp| {worst_p:.1e}, max |dh| {worst_h:.1e}, {secs:.3}s"),
    )
}

fn toy_entropy() -> Outcome {
    let core = fixtures::toy_core();
    let ego = MarkovPolicy::uniform(&core);
    let env = MarkovPolicy::prefer(&core, "a");
    let exact = 1.5 * 2f64.ln();
    let h = causal_entropy(&core, &ego, &env);
    let r = simulate(&core, &Improviser::single(ego), &EnvStrategy::Scripted(env), N_MC, 2024, true);
    outcome(
        (h - exact).abs() <= 1e-12 && (r.h_hat - exact).abs() <= 0.01,
        format!("exact err {:.1e}, plug-in {:.4} vs {exact:.4}", (h - exact).abs(), r.h_hat),
    )
}

fn monotonicity() -> Outcome {
    let lambdas = [0.0, 0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0, f64::INFINITY];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut viol, mut worst_v) = (0usize, 0.0f64);
    for _ in 0..200 {
        let nodes = rng.gen_range(3..=60);
        let core = random_core(&mut rng, &Shape::mdp(nodes));
        let mut prev: Option<Point> = None;
        for &l in &lambdas {
            let r = smooth_bellman(&core, l).expect("mdp");
            let x = r.point(core.initial);
            if let Some(q) = prev {
                if x.p < q.p - 1e-10 || x.h > q.h + 1e-10 {
                    viol += 1;
                }
            }
            if l.is_finite() {
                worst_v = worst_v.max((r.v[core.initial] - (x.h + l * x.p)).abs());
            }
            prev = Some(x);
        }
    }
    outcome(viol == 0 && worst_v <= 1e-9, format!("200 MDPs, {viol} order violations, max |V - h - lp| {worst_v:.1e}"))
}

fn convexity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut checked, mut fails) = (0usize, 0usize);
    for _ in 0..200 {
        let shape = Shape::small_game(rng.gen_range(1..=4), rng.gen_range(0..=5), rng.gen_range(0..=6));
        let core = random_core(&mut rng, &shape);
        let a = random_ego(&core, &mut rng);
        let b = random_ego(&core, &mut rng);
        let ga = oracle_guaranteed_point(&core, &a, ENV_CAP).expect("small");
        let gb = oracle_guaranteed_point(&core, &b, ENV_CAP).expect("small");
        for _ in 0..5 {
            let w: f64 = rng.gen_range(0.0..=1.0);
            let mix = mix_policies(a.clone(), b.clone(), w);
            let g = oracle_improviser_point(&core, &mix, ENV_CAP, true).expect("small");
            let c = Point::mix(&ga, &gb, w);
            checked += 1;
            if g.p < c.p - 1e-9 || g.h < c.h - 1e-9 {
                fails += 1;
            }
        }
    }
    outcome(fails == 0, format!("{checked} mixtures, {fails} below the chord"))
}

/// Realizable instance kept for the simulation criterion.
struct Realized {
    core: CoreSG,
    target: Point,
    improviser: Improviser,
    slack: f64,
}

fn oracle_equivalence(realized: &mut Vec<Realized>) -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let fo = FrontOracle::default();
    let kappa = 0.01;
    let (mut a_fail, mut b_fail, mut c_fail) = (0usize, 0usize, 0usize);
    let (mut nr, mut nu, mut nk) = (0usize, 0usize, 0usize);
    let mut worst_a = 0.0f64;
    for _ in 0..200 {
        let shape = Shape::small_game(rng.gen_range(1..=3), rng.gen_range(0..=6), rng.gen_range(0..=6));
        let core = random_core(&mut rng, &shape);

        // (a) backward worst case against enumeration
        for _ in 0..3 {
            let ego = random_ego(&core, &mut rng);
            let x = guaranteed_point(&core, &ego, true);
            let y = oracle_guaranteed_point(&core, &ego, ENV_CAP).expect("small");
            let d = (x.p - y.p).abs().max((x.h - y.h).abs());
            worst_a = worst_a.max(d);
            if d > 1e-9 {
                a_fail += 1;
            }
        }

        // (b) solver front against the grid oracle
        let tau = core.longest_path() as f64;
        let tables = FrontTables::build(&core, &TableOptions { kappa, ..Default::default() }).expect("tables");
        let h0 = tables.samples[core.initial][0].0;
        let pts = oracle_front_lower_bound(&core, &fo).expect("small");
        for x in &pts {
            let h = (x.h - 1e-6).max(0.0);
            if h > h0 || tables.value_at(core.initial, h) < x.p - (kappa * tau + 0.05) {
                b_fail += 1;
            }
        }

        // (c) verdicts on perturbed oracle points
        for _ in 0..2 {
            let x = pts[rng.gen_range(0..pts.len())];
            let tgt = Point::new(
                (x.p + rng.gen_range(-0.15..0.1)).clamp(0.0, 1.0),
                (x.h + rng.gen_range(-0.3..0.2)).max(0.0),
            );
            let target = Target::Absolute { p: tgt.p, h: tgt.h };
            let ex = sg_pareto_explore(&core, &target, &SgSearch::default()).expect("explore");
            match &ex.verdict {
                Verdict::Realizable { improviser, .. } => {
                    nr += 1;
                    if !check_witness(&core, &ex.verdict, &WitnessCheck::default()).expect("small") {
                        c_fail += 1;
                    } else if realized.len() < 50 {
                        realized.push(Realized {
                            core: core.clone(),
                            target: tgt,
                            improviser: improviser.clone(),
                            slack: ex.tables.kappa * tau,
                        });
                    }
                }
                Verdict::Unrealizable { witness, .. } => {
                    nu += 1;
                    let ok = check_witness(&core, &ex.verdict, &WitnessCheck::default()).expect("small");
                    let Witness::Scalarization { wp, wh, bound, .. } = witness else { unreachable!() };
                    // no achievable grid point may exceed the certified bound
                    let sound = pts.iter().all(|y| wp * y.p + wh * y.h <= bound + WITNESS_TOL);
                    if !(ok && sound) {
                        c_fail += 1;
                    }
                }
                Verdict::Unknown { .. } => nk += 1,
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        a_fail + b_fail + c_fail == 0 && secs < 600.0,
        format!(
            "(a) {a_fail} fails, max err {worst_a:.1e}; (b) {b_fail} dominated oracle points; \
             (c) {nr} R / {nu} U / {nk} unknown, {c_fail} fails; {secs:.1}s"
        ),
    )
}

fn improviser_guarantee(realized: &[Realized]) -> Outcome {
    let mut fails = 0usize;
    let mut worst = (f64::INFINITY, f64::INFINITY);
    for (i, r) in realized.iter().enumerate() {
        for env in [EnvStrategy::WorstPerformance, EnvStrategy::WorstEntropy] {
            let s = simulate(&r.core, &r.improviser, &env, N_MC, 600 + i as u64, true);
            let half = 0.5 * (s.p_hi - s.p_lo);
            let mp = s.p_hat - (r.target.p - r.slack - 3.0 * half);
            let mh = s.h_hat - (r.target.h - 0.02);
            worst = (worst.0.min(mp), worst.1.min(mh));
            if mp < 0.0 || mh < 0.0 {
                fails += 1;
            }
        }
    }
    outcome(
        realized.len() == 50 && fails == 0,
        format!("{} instances x 2 envs, {fails} fails, min margins p {:.4} h {:.4}", realized.len(), worst.0, worst.1),
    )
}

/// Deterministic trees with `m` top paths guaranteeable against env.
fn rci_trees() -> Vec<(&'static str, CoreSG, usize)> {
    let mut out = Vec::new();

    let mut b = CoreBuilder::new();
    let (top, bot) = (b.top(), b.bot());
    let r = b.ego();
    for a in ["t1", "t2", "t3", "t4"] {
        b.action(r, a, &[(top, 1.0)]);
    }
    b.action(r, "x", &[(bot, 1.0)]);
    out.push(("flat", b.build(r).unwrap(), 4));

    let mut b = CoreBuilder::new();
    let (top, bot) = (b.top(), b.bot());
    let r = b.ego();
    let s = b.ego();
    b.action(r, "in", &[(s, 1.0)]).action(r, "t", &[(top, 1.0)]).action(r, "x", &[(bot, 1.0)]);
    b.action(s, "t1", &[(top, 1.0)]).action(s, "t2", &[(top, 1.0)]);
    out.push(("nested", b.build(r).unwrap(), 3));

    let mut b = CoreBuilder::new();
    let (top, bot) = (b.top(), b.bot());
    let r = b.ego();
    let e = b.env();
    let l = b.ego();
    let rr = b.ego();
    b.action(r, "t", &[(top, 1.0)]).action(r, "e", &[(e, 1.0)]);
    b.action(e, "L", &[(l, 1.0)]).action(e, "R", &[(rr, 1.0)]);
    b.action(l, "t1", &[(top, 1.0)]).action(l, "t2", &[(top, 1.0)]);
    for a in ["t1", "t2", "t3"] {
        b.action(rr, a, &[(top, 1.0)]);
    }
    b.action(rr, "x", &[(bot, 1.0)]);
    out.push(("env", b.build(r).unwrap(), 3));
    out
}

fn rci_degeneration() -> Outcome {
    let mut fails = 0usize;
    let mut notes = Vec::new();
    for (name, core, m) in rci_trees() {
        let target = Target::Absolute { p: 1.0, h: (m as f64).ln() };
        let ex = sg_pareto_explore(&core, &target, &SgSearch::default()).expect("explore");
        let Verdict::Realizable { improviser, .. } = &ex.verdict else {
            fails += 1;
            notes.push(format!("{name}: {}", ex.verdict.name()));
            continue;
        };
        let paths = sample_plays(&core, improviser, &EnvStrategy::WorstEntropy, N_MC, 77, true);
        let mut freq: HashMap<Vec<(usize, usize)>, usize> = HashMap::new();
        let mut to_bot = 0usize;
        for p in paths {
            if p.end != core.top {
                to_bot += 1;
            }
            *freq.entry(p.steps).or_default() += 1;
        }
        let u = 1.0 / m as f64;
        let tv = 0.5 * freq.values().map(|&c| (c as f64 / N_MC as f64 - u).abs()).sum::<f64>()
            + 0.5 * u * m.saturating_sub(freq.len()) as f64;
        if to_bot > 0 || freq.len() != m || tv > 0.01 {
            fails += 1;
        }
        notes.push(format!("{name} m={m} tv {tv:.4}"));
    }
    outcome(fails == 0, notes.join(", "))
}

/// Generate, preprocess and solve one drone instance single-threaded.
fn drone_run(horizon: usize) -> (usize, Duration, Verdict) {
    let t0 = Instant::now();
    let spec = BenchmarkSpec::new(4, horizon);
    let d = gen_drone_benchmark(&spec, SwitchMode::Interval).expect("spec");
    let core = preprocess(&d.game, &d.hard, &d.soft, spec.horizon).expect("preprocess");
    let target = Target::Regret { epsilon: 0.5, delta: 0.5 };
    let verdict = if core.is_mdp() {
        pareto_explore_mdp(&core, &target, &MdpSearch { parallel: false, ..Default::default() }).expect("solve").verdict
    } else {
        sg_pareto_explore(&core, &target, &SgSearch { parallel: false, ..Default::default() }).expect("solve").verdict
    };
    (core.stats().edges, t0.elapsed(), verdict)
}

fn drone_smoke() -> Outcome {
    let (size6, t6, v6) = drone_run(6);
    let ok6 = v6.is_realizable() && t6.as_secs_f64() < 60.0;
    // scaling: time ratio against size ratio, with a floor on short timings
    let floor = 0.002;
    let runs: Vec<(usize, f64)> = (4..=8)
        .map(|h| {
            let best = (0..3).map(|_| drone_run(h)).min_by_key(|r| r.1).expect("runs");
            (best.0, best.1.as_secs_f64())
        })
        .collect();
    let (s0, t0) = runs[0];
    let mut worst = 0.0f64;
    for &(s, t) in &runs[1..] {
        let size_ratio = s as f64 / s0 as f64;
        let time_ratio = t.max(floor) / t0.max(floor);
        worst = worst.max(time_ratio / (size_ratio * size_ratio));
    }
    let sizes: Vec<String> = runs.iter().map(|(s, t)| format!("{s}:{:.1}ms", t * 1e3)).collect();
    outcome(
        ok6 && worst <= 4.0,
        format!(
            "horizon 6: {} in {:.2}s, |G| {size6}; scaling [{}], worst time/size^2 ratio {worst:.2}",
            v6.name(),
            t6.as_secs_f64(),
            sizes.join(" ")
        ),
    )
}

fn main() {
    let mut realized = Vec::new();
    let results: Vec<(usize, &str, Outcome)> = vec![
        (1, "minimal MDP front", minimal_mdp_front()),
        (2, "toy game entropy", toy_entropy()),
        (3, "monotonicity", monotonicity()),
        (4, "convexity", convexity()),
        (5, "oracle equivalence", oracle_equivalence(&mut realized)),
        (6, "improviser guarantee", improviser_guarantee(&realized)),
        (7, "deterministic degeneration", rci_degeneration()),
        (8, "drone smoke test", drone_smoke()),
    ];
    let mut failed = 0;
    for (i, name, o) in &results {
        println!("criterion {i} {name}: {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

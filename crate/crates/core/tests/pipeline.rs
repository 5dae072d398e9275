use erci_core::drone::{gen_drone_benchmark, BenchmarkSpec, SwitchMode};
use erci_core::fixtures;
use erci_core::io::{core_from_json, core_to_json, game_from_json, game_to_json, verdict_from_json, verdict_to_json};
use erci_core::mdp::{pareto_explore_mdp, MdpSearch};
use erci_core::oracle::{check_witness, WitnessCheck};
use erci_core::preprocess::preprocess;
use erci_core::runtime::{simulate, EnvStrategy};
use erci_core::sg::{sg_pareto_explore, SgSearch};
use erci_core::{Monitor, Target, Verdict};

#[test]
fn toy_game_end_to_end() {
    let game = game_from_json(&game_to_json(&fixtures::toy_game())).unwrap();
    let hard = Monitor::trivial(&game);
    let soft = Monitor::reach(&game, &["top"]).unwrap();
    let core = preprocess(&game, &hard, &soft, 4).unwrap();
    let core = core_from_json(&core_to_json(&core)).unwrap();

    let ex = sg_pareto_explore(&core, &Target::Absolute { p: 0.1, h: 0.1 }, &SgSearch::default()).unwrap();
    assert!(ex.verdict.is_realizable());
    let text = verdict_to_json(&core, &ex.verdict);
    let back = verdict_from_json(&core, &text, true).unwrap();
    assert!(check_witness(&core, &back, &WitnessCheck::default()).unwrap());

    let Verdict::Realizable { improviser, target, .. } = back else { unreachable!() };
    let g = improviser.guaranteed_point(&core);
    let r = simulate(&core, &improviser, &EnvStrategy::WorstPerformance, 20_000, 3, true);
    assert!(g.dominates(&target, 1e-9));
    assert!(r.p_hi >= g.p - 1e-9);
}

#[test]
fn point_mode_drone_is_an_mdp_and_solves() {
    let spec = BenchmarkSpec::new(4, 5);
    let d = gen_drone_benchmark(&spec, SwitchMode::Point).unwrap();
    let core = preprocess(&d.game, &d.hard, &d.soft, spec.horizon).unwrap();
    assert!(core.is_mdp());
    let ex = pareto_explore_mdp(&core, &Target::Regret { epsilon: 0.5, delta: 0.5 }, &MdpSearch::default()).unwrap();
    assert!(ex.verdict.is_realizable());
}

#[test]
fn interval_mode_is_no_easier_than_point_mode() {
    let spec = BenchmarkSpec::new(4, 6);
    let solve = |mode| {
        let d = gen_drone_benchmark(&spec, mode).unwrap();
        let core = preprocess(&d.game, &d.hard, &d.soft, spec.horizon).unwrap();
        let ex = sg_pareto_explore(&core, &Target::Absolute { p: 0.0, h: 0.0 }, &SgSearch::default()).unwrap();
        ex.front(&core).last().unwrap().p
    };
    assert!(solve(SwitchMode::Interval) <= solve(SwitchMode::Point) + 1e-9);
}

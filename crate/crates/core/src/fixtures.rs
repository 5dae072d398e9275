//! Small hand-built instances used throughout the tests, the examples in the
//! README and the CLI smoke tests.

use crate::coresg::{CoreBuilder, CoreSG};
use crate::game::{GameBuilder, Owner, Prob, StochasticGame};

const THIRD: Prob = Prob::Exact { num: 1, den: 3 };
const TWO_THIRDS: Prob = Prob::Exact { num: 2, den: 3 };

/// Six-state running example: ego at s0 and s3, env at s1 and s2, terminals
/// `top` and `bot`. The a-actions at s1 and s3 reach `top` with 1/3.
pub fn toy_game() -> StochasticGame {
    let mut b = GameBuilder::new();
    b.state("s0", Owner::Ego).unwrap();
    b.state("s1", Owner::Env).unwrap();
    b.state("s2", Owner::Env).unwrap();
    b.state("s3", Owner::Ego).unwrap();
    b.state("top", Owner::Ego).unwrap();
    b.state("bot", Owner::Ego).unwrap();
    b.action("a");
    b.action("b");
    b.transition("s0", "a", &[("s1", Prob::one())]).unwrap();
    b.transition("s0", "b", &[("s2", Prob::one())]).unwrap();
    b.transition("s1", "a", &[("top", THIRD), ("bot", TWO_THIRDS)]).unwrap();
    b.transition("s1", "b", &[("s3", Prob::one())]).unwrap();
    b.transition("s2", "a", &[("s3", Prob::one())]).unwrap();
    b.transition("s3", "a", &[("top", THIRD), ("bot", TWO_THIRDS)]).unwrap();
    b.transition("s3", "b", &[("bot", Prob::one())]).unwrap();
    b.build("s0").unwrap()
}

/// One ego choice: `a` reaches `top`, `b` reaches `bot`.
pub fn minimal_mdp_game() -> StochasticGame {
    let mut b = GameBuilder::new();
    b.state("s0", Owner::Ego).unwrap();
    b.state("top", Owner::Ego).unwrap();
    b.state("bot", Owner::Ego).unwrap();
    b.transition("s0", "a", &[("top", Prob::one())]).unwrap();
    b.transition("s0", "b", &[("bot", Prob::one())]).unwrap();
    b.build("s0").unwrap()
}

/// Core of [`toy_game`]; node order s0, s1, s2, s3, top, bot.
pub fn toy_core() -> CoreSG {
    let mut b = CoreBuilder::new();
    let (top, bot) = (b.top(), b.bot());
    let s0 = b.ego();
    let s1 = b.env();
    let s2 = b.env();
    let s3 = b.ego();
    b.action(s0, "a", &[(s1, 1.0)]).action(s0, "b", &[(s2, 1.0)]);
    b.action(s1, "a", &[(top, 1.0 / 3.0), (bot, 2.0 / 3.0)]).action(s1, "b", &[(s3, 1.0)]);
    b.action(s2, "a", &[(s3, 1.0)]);
    b.action(s3, "a", &[(top, 1.0 / 3.0), (bot, 2.0 / 3.0)]).action(s3, "b", &[(bot, 1.0)]);
    b.build(s0).unwrap()
}

/// Core of [`minimal_mdp_game`]; node order s0, top, bot.
pub fn minimal_mdp() -> CoreSG {
    let mut b = CoreBuilder::new();
    let (top, bot) = (b.top(), b.bot());
    let s0 = b.ego();
    b.action(s0, "a", &[(top, 1.0)]).action(s0, "b", &[(bot, 1.0)]);
    b.build(s0).unwrap()
}

/// Entropy-matching illustration: env at s2 chooses between an ego node s3
/// with two actions (top/bot) and an ego node s4 with three (top/bot/top).
/// s4 has more entropy and dominates s3, so env's binding branch is s3.
/// Node order: s0, s2, s1, s3, s4, top, bot.
pub fn matching_example() -> CoreSG {
    let mut b = CoreBuilder::new();
    let (top, bot) = (b.top(), b.bot());
    let s0 = b.ego();
    let s2 = b.env();
    let s1 = b.env();
    let s3 = b.ego();
    let s4 = b.ego();
    b.action(s0, "a", &[(s2, 1.0)]).action(s0, "b", &[(s1, 1.0)]);
    b.action(s2, "a", &[(s3, 1.0)]).action(s2, "b", &[(s4, 1.0)]);
    b.action(s1, "a", &[(top, 0.5), (bot, 0.5)]);
    b.action(s3, "a", &[(top, 1.0)]).action(s3, "b", &[(bot, 1.0)]);
    b.action(s4, "a", &[(top, 1.0)]).action(s4, "b", &[(bot, 1.0)]).action(s4, "c", &[(top, 1.0)]);
    b.build(s0).unwrap()
}

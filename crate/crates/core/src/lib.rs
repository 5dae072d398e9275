//! Entropy-regularized reactive control improvisation over finite
//! turn-based stochastic games.
//!
//! Pipeline: a [`StochasticGame`] and two monitors are unrolled to a
//! horizon and pruned into a [`CoreSG`]; the solvers in [`mdp`] and [`sg`]
//! explore the performance/entropy Pareto front of the core and return a
//! [`Verdict`], whose improviser can be run and checked with [`runtime`] and
//! [`oracle`].

pub mod coresg;
pub mod drone;
pub mod eval;
pub mod fixtures;
pub mod game;
pub mod gen;
pub mod io;
pub mod mdp;
pub mod monitor;
pub mod oracle;
pub mod par;
pub mod preprocess;
pub mod runtime;
pub mod sg;
pub mod verdict;

pub use coresg::{CoreBuilder, CoreSG, NodeKind};
pub use eval::{MarkovPolicy, Point};
pub use game::{GameBuilder, Owner, Prob, StochasticGame};
pub use monitor::{Classification, Monitor, MonitorSpec};
pub use runtime::Improviser;
pub use verdict::{Target, Verdict, Witness};

//! Strong envelopes of adapted processes on finite probability trees.
//!
//! The strong envelope of an obstacle `X` is the smallest non-negative
//! supermartingale that dominates `X` almost everywhere in time. Time is
//! discrete with a weight per level; a level with zero weight carries no
//! domination constraint. The horizon is closed by a cemetery level where
//! obstacle and envelope vanish.
//!
//! Core math is generic over the scalar type: [`Scalar`] (ordered field,
//! including exact [`Rational`]s) for recursions and stopping rules, [`Real`]
//! for anything that takes roots. Aliases for the common `f64` case live at
//! the crate root.

// `!(x > 0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod error;
pub mod generate;
pub mod grid;
pub mod instance;
pub mod norms;
pub mod oracle;
pub mod process;
pub mod sampling;
pub mod scalar;
pub mod stopping;
pub mod suite;
pub mod tree;
pub mod verification;

pub use engine::{
    beta_sweep, direct_recursion, doob_meyer, epsilon_optimal_time, penalized_envelope, penalized_step, snell_envelope,
    strong_envelope, BetaSchedule, Decomposition, EnvelopeResult, SweepRow,
};
pub use error::{Error, Result};
pub use grid::TimeGrid;
pub use instance::Instance;
pub use process::{is_supermartingale, AdaptedProcess};
pub use scalar::{Rational, Real, Scalar};
pub use stopping::{RandomVariableAtStop, StoppingTime};
pub use tree::{FiltrationTree, NodeId};
pub use verification::CheckReport;

pub type Tree = FiltrationTree<f64>;
pub type Grid = TimeGrid<f64>;
pub type Process = AdaptedProcess<f64>;
pub type Problem = Instance<f64>;
pub type Envelope = EnvelopeResult<f64>;
pub type Schedule = BetaSchedule<f64>;

pub type ExactTree = FiltrationTree<Rational>;
pub type ExactGrid = TimeGrid<Rational>;
pub type ExactProcess = AdaptedProcess<Rational>;
pub type ExactProblem = Instance<Rational>;

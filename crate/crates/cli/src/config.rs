//! Instance configuration files.
//!
//! A config is a JSON object with a required `tree` and optional `grid` and
//! `schedule` sections:
//!
//! ```json
//! {
//!   "tree": { "kind": "explicit", "nodes": [
//!     { "parent": null, "obstacle": 1.0 },
//!     { "parent": 0, "prob": 1.0, "obstacle": 3.0 }
//!   ]},
//!   "grid": { "times": [0, 1, 2], "weights": [1, 1] },
//!   "schedule": { "beta_max": 1e6 }
//! }
//! ```
//!
//! Explicit nodes list the non-cemetery part of the tree with parents before
//! children; a cemetery child is appended below every leaf. `grid.times`
//! includes the cemetery time, so it has one more entry than `weights`.
//! Without a grid, steps and weights are all one.
//!
//! A binomial lattice (`"kind": "binomial"`) is expanded into the full
//! non-recombining tree: child 0 is the up move with probability `p`, child
//! 1 the down move.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use strong_envelope::generate::{random_instance, RandomSpec, NODE_GUARD};
use strong_envelope::{AdaptedProcess, Grid, NodeId, Problem, Schedule, Tree};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: field `{field}`: {message} (line {line}, column {column})")]
    Parse { path: String, field: String, message: String, line: usize, column: usize },
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("tree would have {nodes} nodes, above the guard of {guard}")]
    Guard { nodes: u128, guard: usize },
    #[error(transparent)]
    Model(#[from] strong_envelope::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    pub tree: TreeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "ScheduleOverrides::is_empty")]
    pub schedule: ScheduleOverrides,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TreeSpec {
    Explicit { nodes: Vec<NodeSpec> },
    Binomial(LatticeSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub parent: Option<NodeId>,
    /// Transition probability from the parent; ignored at the root.
    #[serde(default = "one")]
    pub prob: f64,
    pub obstacle: f64,
}

/// Parent links, transition probabilities and obstacle values.
type TreeParts = (Vec<Option<NodeId>>, Vec<f64>, Vec<f64>);

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    /// Number of moves; the lattice has `steps + 1` obstacle levels.
    pub steps: usize,
    pub p: f64,
    #[serde(default = "one")]
    pub initial: f64,
    #[serde(default = "one")]
    pub up: f64,
    #[serde(default = "one")]
    pub down: f64,
    pub payoff: Payoff,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Payoff {
    Call { strike: f64 },
    Put { strike: f64 },
    /// `values[k][j]`: obstacle at level `k` after `j` down moves.
    Table { values: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub times: Vec<f64>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_dom: Option<f64>,
}

impl ScheduleOverrides {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    /// `base` with every set field replaced.
    pub fn apply(&self, base: Schedule) -> Schedule {
        Schedule {
            beta_0: self.beta_0.unwrap_or(base.beta_0),
            growth: self.growth.unwrap_or(base.growth),
            beta_max: self.beta_max.unwrap_or(base.beta_max),
            tol_gap: self.tol_gap.unwrap_or(base.tol_gap),
            tol_dom: self.tol_dom.unwrap_or(base.tol_dom),
        }
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<InstanceConfig, ConfigError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    parse_config(&text, &path.display().to_string())
}

/// Parses config text; `origin` names the source in diagnostics.
pub fn parse_config(text: &str, origin: &str) -> Result<InstanceConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|err| {
        let field = err.path().to_string();
        let inner = err.into_inner();
        let (line, column) = (inner.line(), inner.column());
        let message = inner.to_string();
        let message = message.strip_suffix(&format!(" at line {line} column {column}")).unwrap_or(&message).to_string();
        ConfigError::Parse { path: origin.to_string(), field, message, line, column }
    })
}

impl InstanceConfig {
    pub fn resolve(&self) -> Result<Problem, ConfigError> {
        let (parents, probs, obstacle) = match &self.tree {
            TreeSpec::Explicit { nodes } => explicit_parts(nodes)?,
            TreeSpec::Binomial(spec) => spec.expand()?,
        };
        let tree = Tree::with_cemetery(&parents, &probs)?;
        let levels = tree.cemetery_level();
        let grid = match &self.grid {
            Some(g) => Grid::new(g.times.clone(), g.weights.clone())?,
            None => Grid::unit(levels)?,
        };
        let mut x = obstacle;
        x.resize(tree.len(), 0.0);
        let obstacle = AdaptedProcess::from_values(&tree, x)?;
        Ok(Problem::new(tree, grid, obstacle)?)
    }

    /// Explicit-tree config reproducing `inst` exactly.
    pub fn from_problem(inst: &Problem) -> Self {
        let tree = &inst.tree;
        let nodes = (0..tree.len())
            .filter(|&n| !tree.is_cemetery(n))
            .map(|n| NodeSpec { parent: tree.parent(n), prob: tree.node(n).prob, obstacle: inst.obstacle[n] })
            .collect();
        Self {
            tree: TreeSpec::Explicit { nodes },
            grid: Some(GridSpec { times: inst.grid.times().to_vec(), weights: inst.grid.weights().to_vec() }),
            schedule: ScheduleOverrides::default(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

fn explicit_parts(nodes: &[NodeSpec]) -> Result<TreeParts, ConfigError> {
    if nodes.len() > NODE_GUARD {
        return Err(ConfigError::Guard { nodes: nodes.len() as u128, guard: NODE_GUARD });
    }
    if let Some(i) = nodes.iter().position(|n| !n.prob.is_finite() || !n.obstacle.is_finite()) {
        return Err(ConfigError::Invalid(format!("node {i} has a non-finite value")));
    }
    Ok((
        nodes.iter().map(|n| n.parent).collect(),
        nodes.iter().map(|n| n.prob).collect(),
        nodes.iter().map(|n| n.obstacle).collect(),
    ))
}

impl LatticeSpec {
    /// Obstacle and cemetery node count of the expanded tree.
    pub fn node_count(&self) -> u128 {
        if self.steps >= 120 {
            return u128::MAX;
        }
        (1u128 << (self.steps + 1)) - 1 + (1u128 << self.steps)
    }

    fn payoff_at(&self, level: usize, downs: usize) -> f64 {
        let spot = || self.initial * self.up.powi((level - downs) as i32) * self.down.powi(downs as i32);
        match &self.payoff {
            Payoff::Call { strike } => (spot() - strike).max(0.0),
            Payoff::Put { strike } => (strike - spot()).max(0.0),
            Payoff::Table { values } => values[level][downs],
        }
    }

    fn expand(&self) -> Result<TreeParts, ConfigError> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(ConfigError::Invalid(format!("binomial p = {} outside (0, 1)", self.p)));
        }
        let nodes = self.node_count();
        if nodes > NODE_GUARD as u128 {
            return Err(ConfigError::Guard { nodes, guard: NODE_GUARD });
        }
        if let Payoff::Table { values } = &self.payoff {
            if values.len() != self.steps + 1 {
                return Err(ConfigError::Invalid(format!(
                    "payoff table has {} rows, expected {}",
                    values.len(),
                    self.steps + 1
                )));
            }
            if let Some(k) = (0..values.len()).find(|&k| values[k].len() != k + 1) {
                return Err(ConfigError::Invalid(format!(
                    "payoff table row {k} has {} entries, expected {}",
                    values[k].len(),
                    k + 1
                )));
            }
        }

        let mut parents = vec![None];
        let mut probs = vec![1.0];
        let mut obstacle = vec![self.payoff_at(0, 0)];
        // (node, downs so far)
        let mut frontier = vec![(0usize, 0usize)];
        for level in 1..=self.steps {
            let mut next = Vec::with_capacity(2 * frontier.len());
            for &(n, downs) in &frontier {
                for (d, prob) in [(downs, self.p), (downs + 1, 1.0 - self.p)] {
                    next.push((parents.len(), d));
                    parents.push(Some(n));
                    probs.push(prob);
                    obstacle.push(self.payoff_at(level, d));
                }
            }
            frontier = next;
        }
        if let Some(i) = obstacle.iter().position(|v| !v.is_finite()) {
            return Err(ConfigError::Invalid(format!("payoff at node {i} is not finite")));
        }
        Ok((parents, probs, obstacle))
    }
}

/// Uniform obstacle range for [`generate_random`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstacleRange {
    pub low: f64,
    pub high: f64,
}

impl Default for ObstacleRange {
    fn default() -> Self {
        Self { low: -1.0, high: 1.0 }
    }
}

/// Random explicit-tree config: `depth` obstacle levels, `1..=branching`
/// children per node, obstacle uniform on the range. Uses a ChaCha8 stream
/// seeded with `seed`.
pub fn generate_random(seed: u64, depth: usize, branching: usize, range: ObstacleRange) -> Result<InstanceConfig, ConfigError> {
    // full branching at every level, plus one cemetery per leaf
    let b = branching as u128;
    let worst = (0..depth as u32)
        .map(|k| b.saturating_pow(k))
        .fold(0u128, u128::saturating_add)
        .saturating_add(b.saturating_pow((depth as u32).saturating_sub(1)));
    if worst > NODE_GUARD as u128 {
        return Err(ConfigError::Guard { nodes: worst, guard: NODE_GUARD });
    }
    let spec = RandomSpec {
        levels: depth,
        max_branching: branching,
        obstacle_low: range.low,
        obstacle_high: range.high,
        ..RandomSpec::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inst: Problem = random_instance(&mut rng, &spec)?;
    Ok(InstanceConfig::from_problem(&inst))
}

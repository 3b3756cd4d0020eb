//! Seeded random instances.

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::instance::Instance;
use crate::process::AdaptedProcess;
use crate::scalar::Scalar;
use crate::tree::{FiltrationTree, NodeId};

/// Hard cap on expanded tree sizes.
pub const NODE_GUARD: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct RandomSpec {
    /// Number of obstacle levels; the cemetery sits one level below.
    pub levels: usize,
    /// Each non-final node gets between 1 and this many children.
    pub max_branching: usize,
    pub obstacle_low: f64,
    pub obstacle_high: f64,
    /// Probability that a level gets zero weight.
    pub zero_weight_prob: f64,
    /// Optional budget on the number of obstacle (non-cemetery) nodes.
    pub max_obstacle_nodes: Option<usize>,
}

impl Default for RandomSpec {
    fn default() -> Self {
        Self {
            levels: 3,
            max_branching: 2,
            obstacle_low: -1.0,
            obstacle_high: 1.0,
            zero_weight_prob: 0.2,
            max_obstacle_nodes: None,
        }
    }
}

impl RandomSpec {
    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.levels == 0 || self.max_branching == 0 {
            return bad("random instances need levels >= 1 and branching >= 1".into());
        }
        if !(self.obstacle_low <= self.obstacle_high) {
            return bad(format!("empty obstacle range [{}, {}]", self.obstacle_low, self.obstacle_high));
        }
        if !(0.0..=1.0).contains(&self.zero_weight_prob) {
            return bad(format!("zero-weight probability {} outside [0, 1]", self.zero_weight_prob));
        }
        let budget = match self.max_obstacle_nodes {
            Some(b) if b < self.levels => {
                return bad(format!("node budget {b} cannot hold {} levels", self.levels));
            }
            Some(b) => b,
            None => {
                let mut total = 0usize;
                let mut width = 1usize;
                for _ in 0..self.levels {
                    total = total.saturating_add(width);
                    width = width.saturating_mul(self.max_branching);
                }
                total
            }
        };
        // obstacle nodes plus one cemetery node per final-level node
        if budget.saturating_mul(2) > NODE_GUARD {
            return bad(format!("tree may exceed the node guard of {NODE_GUARD}"));
        }
        Ok(())
    }
}

/// Draws a tree, grid and obstacle. Deterministic in the RNG state.
///
/// Transition probabilities are positive and normalized; steps lie in
/// `[0.5, 1.5]`; a level has zero weight with probability
/// `zero_weight_prob`, otherwise a weight in `[0.5, 1.5]`. At least one level
/// is weighted.
pub fn random_instance<T: Scalar, R: Rng + ?Sized>(rng: &mut R, spec: &RandomSpec) -> Result<Instance<T>> {
    spec.validate()?;
    let budget = spec.max_obstacle_nodes.unwrap_or(usize::MAX);
    let mut parents: Vec<Option<NodeId>> = vec![None];
    let mut probs: Vec<f64> = vec![1.0];
    let mut frontier = vec![0usize];
    for k in 0..spec.levels - 1 {
        let per_child_cost = spec.levels - k - 1;
        let mut next = Vec::new();
        for (i, &n) in frontier.iter().enumerate() {
            let wanted = rng.gen_range(1..=spec.max_branching);
            let mut raw: Vec<f64> = Vec::with_capacity(wanted);
            for extra in 0..wanted {
                // nodes still owed a child after this one
                let owed = frontier.len() - i - 1;
                let settled = parents.len() - next.len();
                let committed = settled + (next.len() + raw.len() + 1 + owed) * per_child_cost;
                if extra > 0 && committed > budget {
                    break;
                }
                raw.push(rng.gen_range(0.2..1.0));
            }
            let total: f64 = raw.iter().sum();
            for r in raw {
                next.push(parents.len());
                parents.push(Some(n));
                probs.push(if total > 0.0 { r / total } else { 1.0 });
            }
        }
        frontier = next;
    }

    let mut steps: Vec<f64> = (0..spec.levels).map(|_| rng.gen_range(0.5..1.5)).collect();
    let mut weights: Vec<f64> = (0..spec.levels)
        .map(|_| if rng.gen_bool(spec.zero_weight_prob) { 0.0 } else { rng.gen_range(0.5..1.5) })
        .collect();
    if weights.iter().all(|w| *w == 0.0) {
        let k = rng.gen_range(0..spec.levels);
        weights[k] = 1.0;
    }
    let obstacle: Vec<f64> = (0..parents.len())
        .map(|_| {
            if spec.obstacle_low == spec.obstacle_high {
                spec.obstacle_low
            } else {
                rng.gen_range(spec.obstacle_low..spec.obstacle_high)
            }
        })
        .collect();

    let conv = |v: &[f64]| -> Vec<T> { v.iter().map(|&x| T::lit(x)).collect() };
    let tree = FiltrationTree::with_cemetery(&parents, &conv(&probs))?;
    let mut times = vec![0.0];
    for s in steps.drain(..) {
        times.push(times.last().copied().unwrap_or(0.0) + s);
    }
    let grid = TimeGrid::new(conv(&times), conv(&weights))?;
    let mut x = conv(&obstacle);
    x.resize(tree.len(), T::zero());
    let obstacle = AdaptedProcess::from_values(&tree, x)?;
    Instance::new(tree, grid, obstacle)
}

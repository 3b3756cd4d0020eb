//! An obstacle on a weighted filtration tree, plus the small reference
//! fixtures used throughout the tests.

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::process::AdaptedProcess;
use crate::scalar::Scalar;
use crate::tree::{FiltrationTree, NodeId};

#[derive(Debug, Clone, PartialEq)]
pub struct Instance<T> {
    pub tree: FiltrationTree<T>,
    pub grid: TimeGrid<T>,
    /// Obstacle `X`; zero at the cemetery.
    pub obstacle: AdaptedProcess<T>,
}

impl<T: Scalar> Instance<T> {
    /// Bundles the parts. Cemetery values of the obstacle are overwritten with
    /// zero.
    pub fn new(tree: FiltrationTree<T>, grid: TimeGrid<T>, mut obstacle: AdaptedProcess<T>) -> Result<Self> {
        if tree.cemetery_level() != grid.cemetery() {
            return Err(Error::GridMismatch { tree: tree.cemetery_level(), grid: grid.cemetery() });
        }
        obstacle.check_len(&tree)?;
        for &l in tree.leaves() {
            obstacle[l] = T::zero();
        }
        Ok(Self { tree, grid, obstacle })
    }

    /// Same tree and grid, different obstacle.
    pub fn with_obstacle(&self, obstacle: AdaptedProcess<T>) -> Result<Self> {
        Self::new(self.tree.clone(), self.grid.clone(), obstacle)
    }

    pub fn is_weighted(&self, n: NodeId) -> bool {
        self.grid.is_weighted(self.tree.level(n))
    }

    pub fn is_stoppable(&self, n: NodeId) -> bool {
        self.grid.is_stoppable(self.tree.level(n))
    }

    /// Nodes at positive-weight levels.
    pub fn weighted_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.tree.len()).filter(move |&n| self.is_weighted(n))
    }

    /// `sup |X|` over all nodes.
    pub fn obstacle_scale(&self) -> T {
        self.obstacle.sup_abs()
    }

    /// Largest obstacle value at a weighted node.
    pub fn weighted_obstacle_max(&self) -> T {
        self.weighted_nodes().map(|n| self.obstacle[n]).fold(T::zero(), T::max_of)
    }
}

/// Deterministic chain with unit steps, unit weights and obstacle
/// `(1, 3, 2)`.
pub fn fixture_f1<T: Scalar>() -> Instance<T> {
    chain_instance(&[1.0, 3.0, 2.0], &[1.0, 1.0, 1.0])
}

/// Deterministic chain with weights `(1, 0, 1)` and obstacle `(0, 5, 0)`:
/// the spike sits at a zero-weight time.
pub fn fixture_f2<T: Scalar>() -> Instance<T> {
    chain_instance(&[0.0, 5.0, 0.0], &[1.0, 0.0, 1.0])
}

/// One binary step with probabilities one half, `X_0 = 0` and leaf
/// obstacle `(2, 0)`.
pub fn fixture_one_step_binary<T: Scalar>() -> Instance<T> {
    let half = T::lit(0.5);
    let tree = FiltrationTree::with_cemetery(&[None, Some(0), Some(0)], &[T::one(), half, half])
        .expect("valid tree");
    let grid = TimeGrid::unit(2).expect("valid grid");
    let x = [0.0, 2.0, 0.0, 0.0, 0.0].iter().map(|&v| T::lit(v)).collect();
    let obstacle = AdaptedProcess::from_values(&tree, x).expect("length");
    Instance::new(tree, grid, obstacle).expect("consistent")
}

/// Deterministic chain with unit steps.
pub fn chain_instance<T: Scalar>(obstacle: &[f64], weights: &[f64]) -> Instance<T> {
    let tree = FiltrationTree::chain(obstacle.len()).expect("valid chain");
    let grid = TimeGrid::uniform(weights.iter().map(|&w| T::lit(w)).collect()).expect("valid grid");
    let mut x: Vec<T> = obstacle.iter().map(|&v| T::lit(v)).collect();
    x.push(T::zero());
    let obstacle = AdaptedProcess::from_values(&tree, x).expect("length");
    Instance::new(tree, grid, obstacle).expect("consistent")
}

//! Stopping times as first-hit rules and random variables sampled at them.
//!
//! A [`StoppingTime`] flags nodes; along a path it stops at the first flagged
//! node. Cemetery nodes are always flagged, so every path stops. A flag only
//! depends on its node, which makes the rule adapted.

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::process::AdaptedProcess;
use crate::scalar::Scalar;
use crate::tree::{FiltrationTree, NodeId};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StoppingTime {
    stop: Vec<bool>,
}

impl StoppingTime {
    /// Flags are taken as given except that cemetery nodes are forced on.
    pub fn from_flags<T: Scalar>(tree: &FiltrationTree<T>, mut flags: Vec<bool>) -> Result<Self> {
        if flags.len() != tree.len() {
            return Err(Error::LengthMismatch { expected: tree.len(), got: flags.len() });
        }
        for &l in tree.leaves() {
            flags[l] = true;
        }
        Ok(Self { stop: flags })
    }

    pub fn from_fn<T: Scalar>(tree: &FiltrationTree<T>, f: impl FnMut(NodeId) -> bool) -> Self {
        Self::from_flags(tree, (0..tree.len()).map(f).collect()).expect("length matches")
    }

    /// Deterministic time `level`.
    pub fn at_level<T: Scalar>(tree: &FiltrationTree<T>, level: usize) -> Self {
        Self::from_fn(tree, |n| tree.level(n) == level)
    }

    /// Stops at the root.
    pub fn immediate<T: Scalar>(tree: &FiltrationTree<T>) -> Self {
        Self::at_level(tree, 0)
    }

    /// Stops at the cemetery only.
    pub fn at_cemetery<T: Scalar>(tree: &FiltrationTree<T>) -> Self {
        Self::from_fn(tree, |_| false)
    }

    pub fn flags(&self) -> &[bool] {
        &self.stop
    }

    pub fn is_flagged(&self, n: NodeId) -> bool {
        self.stop[n]
    }

    /// `stopped_before[n]`: the rule stopped strictly above `n`.
    fn stopped_before<T: Scalar>(&self, tree: &FiltrationTree<T>) -> Vec<bool> {
        let mut before = vec![false; tree.len()];
        for n in 1..tree.len() {
            let p = tree.parent(n).expect("non-root has a parent");
            before[n] = before[p] || self.stop[p];
        }
        before
    }

    /// Nodes where the rule actually stops. They partition the sample space.
    pub fn stop_nodes<T: Scalar>(&self, tree: &FiltrationTree<T>) -> Vec<NodeId> {
        let before = self.stopped_before(tree);
        (0..tree.len()).filter(|&n| self.stop[n] && !before[n]).collect()
    }

    /// `reached[n]`: the rule has stopped at or above `n`, i.e. `n` lies at or
    /// after the stopping time.
    pub fn reached<T: Scalar>(&self, tree: &FiltrationTree<T>) -> Vec<bool> {
        let mut reached = vec![false; tree.len()];
        for n in 0..tree.len() {
            let above = tree.parent(n).is_some_and(|p| reached[p]);
            reached[n] = above || self.stop[n];
        }
        reached
    }

    /// The node where the rule stops on the path to `n`, if it stops at or
    /// above `n`.
    pub fn stop_on_path<T: Scalar>(&self, tree: &FiltrationTree<T>, n: NodeId) -> Option<NodeId> {
        tree.path_to(n).into_iter().find(|&m| self.stop[m])
    }

    /// Pathwise minimum of two stopping times.
    pub fn earliest(&self, other: &Self) -> Self {
        Self { stop: self.stop.iter().zip(&other.stop).map(|(a, b)| *a || *b).collect() }
    }

    /// Checks `self <= later` on every path.
    pub fn check_precedes<T: Scalar>(&self, later: &Self, tree: &FiltrationTree<T>) -> Result<()> {
        let reached = self.reached(tree);
        match later.stop_nodes(tree).into_iter().find(|&b| !reached[b]) {
            Some(node) => Err(Error::StoppingOrder { node }),
            None => Ok(()),
        }
    }

    /// Checks that the rule only stops at weighted levels or the cemetery.
    pub fn check_stoppable<T: Scalar>(&self, tree: &FiltrationTree<T>, grid: &TimeGrid<T>) -> Result<()> {
        match self.stop_nodes(tree).into_iter().find(|&n| !grid.is_stoppable(tree.level(n))) {
            Some(node) => Err(Error::UnweightedStop { node }),
            None => Ok(()),
        }
    }

    /// Human-readable list of stop nodes by path label.
    pub fn describe<T: Scalar>(&self, tree: &FiltrationTree<T>) -> String {
        let labels: Vec<_> = self.stop_nodes(tree).into_iter().map(|n| tree.path_label(n)).collect();
        format!("stops at {{{}}}", labels.join(", "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom<T> {
    pub node: NodeId,
    pub value: T,
    pub prob: T,
}

/// A process sampled at a stopping time: one atom per stop node.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomVariableAtStop<T> {
    pub atoms: Vec<Atom<T>>,
}

impl<T: Scalar> RandomVariableAtStop<T> {
    pub fn expectation(&self) -> T {
        self.atoms.iter().fold(T::zero(), |acc, a| acc + a.prob * a.value)
    }

    pub fn total_prob(&self) -> T {
        self.atoms.iter().fold(T::zero(), |acc, a| acc + a.prob)
    }

    pub fn min_value(&self) -> Option<T> {
        self.atoms.iter().map(|a| a.value).reduce(|a, b| a.min_of(b))
    }

    pub fn value_at(&self, node: NodeId) -> Option<T> {
        self.atoms.iter().find(|a| a.node == node).map(|a| a.value)
    }
}

/// Samples `y` at `tau` pathwise: one atom per stop node.
pub fn value_at_stopping_time<T: Scalar>(
    tree: &FiltrationTree<T>,
    y: &AdaptedProcess<T>,
    tau: &StoppingTime,
) -> RandomVariableAtStop<T> {
    let atoms = tau
        .stop_nodes(tree)
        .into_iter()
        .map(|node| Atom { node, value: y[node], prob: tree.path_prob(node) })
        .collect();
    RandomVariableAtStop { atoms }
}

/// `E[Y_tau]` by a backward sweep: a flagged node returns its own value, any
/// other node averages its children.
pub fn expectation_by_sweep<T: Scalar>(tree: &FiltrationTree<T>, y: &AdaptedProcess<T>, tau: &StoppingTime) -> T {
    let mut v = vec![T::zero(); tree.len()];
    for n in tree.backward() {
        v[n] = if tau.is_flagged(n) { y[n] } else { tree.expect_children(n, |c| v[c]) };
    }
    v[0]
}

/// Conditional expectation of `z` given the sigma-algebra at `tau1`, one
/// atom per stop node of `tau1`. `z` must be sampled at a stopping time that
/// is not earlier than `tau1`.
pub fn conditional_value_at<T: Scalar>(
    tree: &FiltrationTree<T>,
    z: &RandomVariableAtStop<T>,
    tau1: &StoppingTime,
) -> Result<RandomVariableAtStop<T>> {
    let mut fixed: Vec<Option<T>> = vec![None; tree.len()];
    for a in &z.atoms {
        fixed[a.node] = Some(a.value);
    }
    let mut w = vec![T::zero(); tree.len()];
    for n in tree.backward() {
        w[n] = match fixed[n] {
            Some(v) => v,
            None => tree.expect_children(n, |c| w[c]),
        };
    }
    let mut atoms = Vec::new();
    for node in tau1.stop_nodes(tree) {
        let mut up = tree.parent(node);
        while let Some(p) = up {
            if fixed[p].is_some() {
                return Err(Error::StoppingOrder { node });
            }
            up = tree.parent(p);
        }
        atoms.push(Atom { node, value: w[node], prob: tree.path_prob(node) });
    }
    Ok(RandomVariableAtStop { atoms })
}

//! Brute-force ground truth for small trees.
//!
//! Two routes that share nothing with the single backward pass of the
//! engine: exhaustive enumeration of stopping rules, and Jacobi value
//! iteration of the obstacle operator started from above.

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::process::AdaptedProcess;
use crate::scalar::Scalar;
use crate::stopping::{value_at_stopping_time, StoppingTime};
use crate::tree::{FiltrationTree, NodeId};

/// Lazily enumerates all stopping rules that differ on reachable nodes.
///
/// Labels below a stop node are irrelevant, so each rule is emitted once in
/// canonical form (unreachable nodes unflagged). Rules are produced in
/// lexicographic order of their flag strings, nodes ordered by index.
#[derive(Debug, Clone)]
pub struct StoppingTimeEnumeration<'a, T> {
    tree: &'a FiltrationTree<T>,
    allowed: Vec<bool>,
    flags: Vec<bool>,
    started: bool,
    done: bool,
    count: u128,
}

/// Number of distinct rules: a cemetery node contributes 1, any other node
/// `[allowed] + prod over children`.
pub fn count_stopping_times<T: Scalar>(tree: &FiltrationTree<T>, allowed: &[bool]) -> u128 {
    let mut count = vec![1u128; tree.len()];
    for n in tree.backward() {
        if tree.is_cemetery(n) {
            continue;
        }
        let below = tree.children(n).iter().fold(1u128, |acc, &c| acc.saturating_mul(count[c]));
        count[n] = below.saturating_add(u128::from(allowed[n]));
    }
    count[0]
}

impl<'a, T: Scalar> StoppingTimeEnumeration<'a, T> {
    /// All stopping rules.
    pub fn new(tree: &'a FiltrationTree<T>, cap: u128) -> Result<Self> {
        let allowed = (0..tree.len()).map(|n| !tree.is_cemetery(n)).collect();
        Self::restricted(tree, allowed, cap)
    }

    /// Rules that only stop at `allowed` nodes or the cemetery.
    pub fn restricted(tree: &'a FiltrationTree<T>, mut allowed: Vec<bool>, cap: u128) -> Result<Self> {
        if allowed.len() != tree.len() {
            return Err(Error::LengthMismatch { expected: tree.len(), got: allowed.len() });
        }
        for &l in tree.leaves() {
            allowed[l] = false;
        }
        let count = count_stopping_times(tree, &allowed);
        if count > cap {
            return Err(Error::CapExceeded { count, cap });
        }
        Ok(Self { tree, allowed, flags: vec![false; tree.len()], started: false, done: false, count })
    }

    /// Total number of rules this enumeration yields.
    pub fn total(&self) -> u128 {
        self.count
    }

    fn advance(&mut self) -> bool {
        let n = self.tree.len();
        let mut blocked = vec![false; n];
        let mut candidate: Option<NodeId> = None;
        for i in 0..n {
            if let Some(p) = self.tree.parent(i) {
                blocked[i] = blocked[p] || self.flags[p];
            }
            if !blocked[i] && self.allowed[i] && !self.flags[i] {
                candidate = Some(i);
            }
        }
        match candidate {
            Some(j) => {
                self.flags[j] = true;
                self.flags[j + 1..].iter_mut().for_each(|f| *f = false);
                true
            }
            None => false,
        }
    }
}

impl<T: Scalar> Iterator for StoppingTimeEnumeration<'_, T> {
    type Item = StoppingTime;

    fn next(&mut self) -> Option<StoppingTime> {
        if self.done {
            return None;
        }
        if self.started && !self.advance() {
            self.done = true;
            return None;
        }
        self.started = true;
        Some(StoppingTime::from_flags(self.tree, self.flags.clone()).expect("length matches"))
    }
}

/// `sup_tau E[X_tau]` over rules that stop at weighted levels or the
/// cemetery, where the obstacle pays zero.
pub fn root_value_by_enumeration<T: Scalar>(inst: &Instance<T>, cap: u128) -> Result<T> {
    let allowed = (0..inst.tree.len()).map(|n| inst.is_weighted(n)).collect();
    let rules = StoppingTimeEnumeration::restricted(&inst.tree, allowed, cap)?;
    let best = rules
        .map(|tau| value_at_stopping_time(&inst.tree, &inst.obstacle, &tau).expectation())
        .reduce(T::max_of)
        .expect("at least the cemetery rule exists");
    Ok(best)
}

/// One simultaneous sweep of the obstacle operator: zero at the cemetery,
/// `max(X, E[Y_{k+1} | n])` at weighted levels, `E[Y_{k+1} | n]` elsewhere.
pub fn obstacle_operator<T: Scalar>(inst: &Instance<T>, y: &AdaptedProcess<T>) -> AdaptedProcess<T> {
    let tree = &inst.tree;
    AdaptedProcess::from_fn(tree, |n| {
        if tree.is_cemetery(n) {
            return T::zero();
        }
        let m = tree.expect_children(n, |c| y[c]);
        if inst.is_weighted(n) {
            inst.obstacle[n].max_of(m)
        } else {
            m
        }
    })
}

/// Iterates [`obstacle_operator`] from the constant `start_level` until the
/// sup change is at most `tol`.
pub fn envelope_by_value_iteration<T: Scalar>(
    inst: &Instance<T>,
    start_level: T,
    tol: T,
) -> Result<AdaptedProcess<T>> {
    if start_level < T::zero() || start_level < inst.weighted_obstacle_max() {
        return Err(Error::InvalidParameter(format!(
            "start level {start_level} lies below the obstacle or zero"
        )));
    }
    let cap = 10 * inst.tree.cemetery_level();
    let mut y = AdaptedProcess::constant(&inst.tree, start_level);
    let mut change = T::zero();
    for _ in 0..cap {
        let next = obstacle_operator(inst, &y);
        change = next.max_abs_diff(&y);
        y = next;
        if change <= tol {
            return Ok(y);
        }
    }
    Err(Error::IterationCap { iterations: cap, change: change.as_f64() })
}

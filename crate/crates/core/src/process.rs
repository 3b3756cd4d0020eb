//! Adapted processes: one value per node.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tree::{FiltrationTree, NodeId};

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedProcess<T> {
    values: Vec<T>,
}

impl<T: Scalar> AdaptedProcess<T> {
    pub fn from_values(tree: &FiltrationTree<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != tree.len() {
            return Err(Error::LengthMismatch { expected: tree.len(), got: values.len() });
        }
        Ok(Self { values })
    }

    pub fn from_fn(tree: &FiltrationTree<T>, f: impl FnMut(NodeId) -> T) -> Self {
        Self { values: (0..tree.len()).map(f).collect() }
    }

    pub fn constant(tree: &FiltrationTree<T>, c: T) -> Self {
        Self { values: vec![c; tree.len()] }
    }

    pub fn zeros(tree: &FiltrationTree<T>) -> Self {
        Self::constant(tree, T::zero())
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert_eq!(self.len(), other.len(), "processes on different trees");
        Self { values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add_const(&self, c: T) -> Self {
        self.map(|v| v + c)
    }

    /// `sup_n |Y(n)|`.
    pub fn sup_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max_of(v.abs()))
    }

    /// `sup_n |Y(n) - Z(n)|`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.sub(other).sup_abs()
    }

    pub(crate) fn check_len(&self, tree: &FiltrationTree<T>) -> Result<()> {
        if self.values.len() != tree.len() {
            return Err(Error::LengthMismatch { expected: tree.len(), got: self.values.len() });
        }
        Ok(())
    }
}

impl<T> Index<NodeId> for AdaptedProcess<T> {
    type Output = T;

    fn index(&self, id: NodeId) -> &T {
        &self.values[id]
    }
}

impl<T> IndexMut<NodeId> for AdaptedProcess<T> {
    fn index_mut(&mut self, id: NodeId) -> &mut T {
        &mut self.values[id]
    }
}

/// Outcome of [`is_supermartingale`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupermartingaleCheck<T> {
    pub holds: bool,
    /// `max_n (E[Y_{k+1} | n] - Y(n))` over internal nodes.
    pub worst_violation: T,
    pub worst_node: NodeId,
}

/// Checks `Y(n) >= E[Y_{k+1} | n]` at every internal node, within `tol`.
pub fn is_supermartingale<T: Scalar>(
    tree: &FiltrationTree<T>,
    y: &AdaptedProcess<T>,
    tol: T,
) -> Result<SupermartingaleCheck<T>> {
    y.check_len(tree)?;
    let mut worst: Option<(T, NodeId)> = None;
    for n in tree.internal_nodes() {
        let v = tree.expect_children(n, |c| y[c]) - y[n];
        if worst.is_none_or(|(w, _)| v > w) {
            worst = Some((v, n));
        }
    }
    let (worst_violation, worst_node) = worst.expect("tree has at least one internal node");
    Ok(SupermartingaleCheck { holds: worst_violation <= tol, worst_violation, worst_node })
}

/// A martingale is a process that is a supermartingale together with its
/// negation.
pub fn is_martingale<T: Scalar>(tree: &FiltrationTree<T>, y: &AdaptedProcess<T>, tol: T) -> Result<bool> {
    Ok(is_supermartingale(tree, y, tol)?.holds && is_supermartingale(tree, &y.map(|v| -v), tol)?.holds)
}

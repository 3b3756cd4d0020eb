//! Finite filtration trees.
//!
//! A node identifies an atom of the sigma-algebra at its level; the
//! transition probabilities to its children define the measure. Every leaf
//! sits at the cemetery level, so every root-to-leaf path visits every level
//! exactly once.
//!
//! Nodes are stored so that a parent always precedes its children. Node 0 is
//! the root.

use crate::error::{Error, Result};
use crate::process::AdaptedProcess;
use crate::scalar::Scalar;

pub type NodeId = usize;

/// Tolerance on the sum of child probabilities.
pub const PROB_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Node<T> {
    pub level: usize,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// Transition probability from the parent; one at the root.
    pub prob: T,
    /// Probability of the atom, i.e. the product of transition
    /// probabilities along the path from the root.
    pub path_prob: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiltrationTree<T> {
    nodes: Vec<Node<T>>,
    levels: Vec<Vec<NodeId>>,
}

impl<T: Scalar> FiltrationTree<T> {
    /// Builds a tree from parent links and transition probabilities.
    ///
    /// `parents[0]` must be `None`; every other node's parent must have a
    /// smaller index. `probs[0]` is ignored.
    pub fn from_parents(parents: &[Option<NodeId>], probs: &[T]) -> Result<Self> {
        if parents.is_empty() {
            return Err(Error::InvalidTree("no nodes".into()));
        }
        if parents.len() != probs.len() {
            return Err(Error::InvalidTree(format!(
                "{} parent links but {} probabilities",
                parents.len(),
                probs.len()
            )));
        }
        if parents[0].is_some() {
            return Err(Error::InvalidTree("node 0 must be the root".into()));
        }
        let mut nodes: Vec<Node<T>> = Vec::with_capacity(parents.len());
        for (id, (parent, &prob)) in parents.iter().zip(probs).enumerate() {
            let node = match *parent {
                None if id == 0 => Node {
                    level: 0,
                    parent: None,
                    children: Vec::new(),
                    prob: T::one(),
                    path_prob: T::one(),
                },
                None => return Err(Error::InvalidTree(format!("node {id} has no parent"))),
                Some(p) if p >= id => {
                    return Err(Error::InvalidTree(format!(
                        "node {id} has parent {p}, parents must precede children"
                    )))
                }
                Some(p) => {
                    if prob <= T::zero() || prob > T::one() {
                        return Err(Error::InvalidTree(format!(
                            "node {id} has transition probability {prob} outside (0, 1]"
                        )));
                    }
                    nodes[p].children.push(id);
                    Node {
                        level: nodes[p].level + 1,
                        parent: Some(p),
                        children: Vec::new(),
                        prob,
                        path_prob: nodes[p].path_prob * prob,
                    }
                }
            };
            nodes.push(node);
        }

        let tol = T::lit(PROB_SUM_TOL);
        for (id, node) in nodes.iter().enumerate() {
            if node.children.is_empty() {
                continue;
            }
            let total = node.children.iter().fold(T::zero(), |acc, &c| acc + nodes[c].prob);
            if (total - T::one()).abs() > tol {
                return Err(Error::InvalidTree(format!(
                    "child probabilities of node {id} sum to {total}"
                )));
            }
        }

        let depth = nodes.iter().map(|n| n.level).max().unwrap_or(0);
        if depth == 0 {
            return Err(Error::InvalidTree("the root cannot be the cemetery".into()));
        }
        if let Some(id) = nodes.iter().position(|n| n.children.is_empty() && n.level != depth) {
            return Err(Error::InvalidTree(format!(
                "leaf {id} at level {} but the cemetery level is {depth}",
                nodes[id].level
            )));
        }

        let mut levels = vec![Vec::new(); depth + 1];
        for (id, node) in nodes.iter().enumerate() {
            levels[node.level].push(id);
        }
        Ok(Self { nodes, levels })
    }

    /// Builds a tree from the non-cemetery part and appends one cemetery child
    /// (probability one) below each of its leaves. All given leaves must sit
    /// on the same level.
    pub fn with_cemetery(parents: &[Option<NodeId>], probs: &[T]) -> Result<Self> {
        let mut has_child = vec![false; parents.len()];
        for p in parents.iter().flatten() {
            if *p < has_child.len() {
                has_child[*p] = true;
            }
        }
        let mut parents = parents.to_vec();
        let mut probs = probs.to_vec();
        for id in (0..has_child.len()).filter(|&i| !has_child[i]) {
            parents.push(Some(id));
            probs.push(T::one());
        }
        Self::from_parents(&parents, &probs)
    }

    /// Deterministic chain with `levels` obstacle levels plus the cemetery.
    pub fn chain(levels: usize) -> Result<Self> {
        let parents: Vec<_> = (0..=levels).map(|i| i.checked_sub(1)).collect();
        Self::from_parents(&parents, &vec![T::one(); levels + 1])
    }

    /// Every node at levels `0..levels-1` branches with `probs`; nodes at the
    /// last obstacle level get a single cemetery child.
    pub fn regular(levels: usize, probs: &[T]) -> Result<Self> {
        if levels == 0 || probs.is_empty() {
            return Err(Error::InvalidTree("regular tree needs levels >= 1 and a branching".into()));
        }
        let mut parents = vec![None];
        let mut pr = vec![T::one()];
        let mut frontier = vec![0usize];
        for _ in 1..levels {
            let mut next = Vec::with_capacity(frontier.len() * probs.len());
            for &n in &frontier {
                for &p in probs {
                    next.push(parents.len());
                    parents.push(Some(n));
                    pr.push(p);
                }
            }
            frontier = next;
        }
        Self::with_cemetery(&parents, &pr)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &Node<T> {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[Node<T>] {
        &self.nodes
    }

    pub fn level(&self, id: NodeId) -> usize {
        self.nodes[id].level
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id].parent
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id].children
    }

    pub fn path_prob(&self, id: NodeId) -> T {
        self.nodes[id].path_prob
    }

    pub fn cemetery_level(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn nodes_at(&self, level: usize) -> &[NodeId] {
        self.levels.get(level).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_cemetery(&self, id: NodeId) -> bool {
        self.nodes[id].level == self.cemetery_level()
    }

    pub fn leaves(&self) -> &[NodeId] {
        self.nodes_at(self.cemetery_level())
    }

    /// Nodes that are not at the cemetery level.
    pub fn internal_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).filter(move |&id| !self.nodes[id].children.is_empty())
    }

    /// Node ids level by level from the cemetery up to the root.
    pub fn backward(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.levels.iter().rev().flat_map(|l| l.iter().copied())
    }

    /// Root-to-node path, root first.
    pub fn path_to(&self, id: NodeId) -> Vec<NodeId> {
        let mut path = Vec::with_capacity(self.nodes[id].level + 1);
        let mut cur = Some(id);
        while let Some(n) = cur {
            path.push(n);
            cur = self.nodes[n].parent;
        }
        path.reverse();
        path
    }

    /// Child-index label from the root, e.g. `"0.1.0"` is the first child of
    /// the second child of the root. The root is `"0"`.
    pub fn path_label(&self, id: NodeId) -> String {
        let mut parts = vec!["0".to_string()];
        let path = self.path_to(id);
        for pair in path.windows(2) {
            let idx = self.nodes[pair[0]].children.iter().position(|&c| c == pair[1]).expect("child link");
            parts.push(idx.to_string());
        }
        parts.join(".")
    }

    /// `sum_c p(c | id) f(c)`.
    pub fn expect_children(&self, id: NodeId, mut f: impl FnMut(NodeId) -> T) -> T {
        self.nodes[id]
            .children
            .iter()
            .fold(T::zero(), |acc, &c| acc + self.nodes[c].prob * f(c))
    }

    /// Conditional expectation of the level-`level + 1` values of `z` given
    /// each level-`level` atom.
    pub fn conditional_expectation(
        &self,
        z: &AdaptedProcess<T>,
        level: usize,
    ) -> Result<Vec<(NodeId, T)>> {
        z.check_len(self)?;
        if level >= self.cemetery_level() {
            return Err(Error::LevelOutOfRange { level, cemetery: self.cemetery_level() });
        }
        Ok(self.nodes_at(level).iter().map(|&n| (n, self.expect_children(n, |c| z[c]))).collect())
    }

    /// Direct expectation of a process at the cemetery, weighting each leaf
    /// by its path probability.
    pub fn expect_leaves(&self, z: &AdaptedProcess<T>) -> T {
        self.leaves().iter().fold(T::zero(), |acc, &l| acc + self.path_prob(l) * z[l])
    }

    /// Number of nodes below the cemetery level.
    pub fn obstacle_node_count(&self) -> usize {
        self.nodes.len() - self.leaves().len()
    }
}

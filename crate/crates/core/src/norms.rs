//! Norms and brackets.

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::process::AdaptedProcess;
use crate::scalar::{Real, Scalar};
use crate::stopping::RandomVariableAtStop;
use crate::tree::FiltrationTree;

/// `(sum_i p_i |z_i|^p)^(1/p)`.
pub fn lp_norm<T: Real>(z: &RandomVariableAtStop<T>, p: T) -> Result<T> {
    if !(p >= T::one()) {
        return Err(Error::InvalidParameter(format!("L^p norm needs p >= 1, got {p}")));
    }
    let sum = z.atoms.iter().fold(T::zero(), |acc, a| acc + a.prob * a.value.abs().powf(p));
    Ok(sum.powf(p.recip()))
}

/// `(E[sup_k Y_k^2])^(1/2)` with the supremum over weighted levels and the
/// cemetery, taken pathwise.
pub fn s2_norm<T: Real>(tree: &FiltrationTree<T>, grid: &TimeGrid<T>, y: &AdaptedProcess<T>) -> Result<T> {
    y.check_len(tree)?;
    let mut running = vec![T::zero(); tree.len()];
    for n in 0..tree.len() {
        let above = tree.parent(n).map_or(T::zero(), |p| running[p]);
        running[n] = if grid.is_stoppable(tree.level(n)) { above.max(y[n] * y[n]) } else { above };
    }
    Ok(tree.expect_leaves(&AdaptedProcess::from_values(tree, running)?).sqrt())
}

/// Running sum of squared increments along the path to each node.
pub fn quadratic_variation<T: Scalar>(tree: &FiltrationTree<T>, y: &AdaptedProcess<T>) -> AdaptedProcess<T> {
    let mut qv = AdaptedProcess::zeros(tree);
    for n in 1..tree.len() {
        let p = tree.parent(n).expect("non-root has a parent");
        let d = y[n] - y[p];
        qv[n] = qv[p] + d * d;
    }
    qv
}

/// `|| [M]_inf^(1/2) + sum |dA| ||_{L^2}` for a given decomposition
/// `Y = M - A`. With the Doob-Meyer pair this bounds the H^2 norm (an
/// infimum over decompositions) from above.
pub fn h2_norm_canonical<T: Real>(
    tree: &FiltrationTree<T>,
    y: &AdaptedProcess<T>,
    m: &AdaptedProcess<T>,
    a: &AdaptedProcess<T>,
    tol: T,
) -> Result<T> {
    y.check_len(tree)?;
    m.check_len(tree)?;
    a.check_len(tree)?;
    for n in 0..tree.len() {
        let gap = (m[n] - a[n] - y[n]).abs();
        if gap > tol {
            return Err(Error::NotDecomposition { node: n, gap: gap.as_f64() });
        }
    }
    let qm = quadratic_variation(tree, m);
    let mut variation = AdaptedProcess::zeros(tree);
    for n in 1..tree.len() {
        let p = tree.parent(n).expect("non-root has a parent");
        variation[n] = variation[p] + (a[n] - a[p]).abs();
    }
    let sum = tree.leaves().iter().fold(T::zero(), |acc, &l| {
        let v = qm[l].sqrt() + variation[l];
        acc + tree.path_prob(l) * v * v
    });
    Ok(sum.sqrt())
}

//! Envelope construction.
//!
//! The penalized envelope `U^beta` solves, level by level backwards,
//! `y = beta * w_k * dt_k * (x - y)^+ + E[U^beta_{k+1} | n]`
//! (left-endpoint quadrature of the penalty integral). It increases with
//! `beta` and its limit is `max(x, m)` at weighted levels, which is the
//! single-pass [`direct_recursion`]. [`strong_envelope`] runs the `beta`
//! sweep as a convergence demonstration and ships the exact recursion.

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::process::{is_supermartingale, AdaptedProcess};
use crate::scalar::Scalar;
use crate::stopping::StoppingTime;
use crate::tree::FiltrationTree;

/// Geometric `beta` sweep and the tolerances that end it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaSchedule<T> {
    pub beta_0: T,
    pub growth: T,
    pub beta_max: T,
    /// Stop once consecutive sweeps differ by less than this (sup over nodes).
    pub tol_gap: T,
    /// Allowed `(X - U)^+` at weighted nodes.
    pub tol_dom: T,
}

impl<T: Scalar> Default for BetaSchedule<T> {
    fn default() -> Self {
        Self {
            beta_0: T::one(),
            growth: T::lit(10.0),
            beta_max: T::lit(1e8),
            tol_gap: T::lit(1e-9),
            tol_dom: T::lit(1e-6),
        }
    }
}

impl<T: Scalar> BetaSchedule<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(format!("beta schedule: {msg}")));
        if !(self.beta_0 > T::zero()) {
            return bad("beta_0 must be positive");
        }
        if !(self.growth > T::one()) {
            return bad("growth factor must exceed 1");
        }
        if !(self.beta_max >= self.beta_0) {
            return bad("beta_max must be at least beta_0");
        }
        if !(self.tol_gap > T::zero() && self.tol_dom > T::zero()) {
            return bad("tolerances must be positive");
        }
        Ok(())
    }

    /// `beta_0, beta_0 r, beta_0 r^2, ...` up to `beta_max`.
    pub fn betas(&self) -> Vec<T> {
        let mut out = Vec::new();
        let mut beta = self.beta_0;
        while beta <= self.beta_max {
            out.push(beta);
            beta = beta * self.growth;
        }
        out
    }
}

/// Solves `y = c (x - y)^+ + m` for `y`.
pub fn penalized_step<T: Scalar>(x: T, m: T, c: T) -> Result<T> {
    if c < T::zero() {
        return Err(Error::InvalidParameter(format!("penalty coefficient {c} is negative")));
    }
    Ok(if m >= x { m } else { (c * x + m) / (T::one() + c) })
}

/// Backward pass for `U^beta` with zero at the cemetery.
pub fn penalized_envelope<T: Scalar>(inst: &Instance<T>, beta: T) -> Result<AdaptedProcess<T>> {
    if !(beta > T::zero()) {
        return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    let tree = &inst.tree;
    let mut u = AdaptedProcess::zeros(tree);
    for n in tree.backward() {
        if tree.is_cemetery(n) {
            continue;
        }
        let k = tree.level(n);
        let m = tree.expect_children(n, |c| u[c]);
        let c = beta * inst.grid.weight(k) * inst.grid.step(k);
        u[n] = penalized_step(inst.obstacle[n], m, c)?;
    }
    Ok(u)
}

fn dominating_recursion<T: Scalar>(
    tree: &FiltrationTree<T>,
    obstacle: &AdaptedProcess<T>,
    active: impl Fn(usize) -> bool,
) -> AdaptedProcess<T> {
    let mut u = AdaptedProcess::zeros(tree);
    for n in tree.backward() {
        if tree.is_cemetery(n) {
            continue;
        }
        let m = tree.expect_children(n, |c| u[c]);
        u[n] = if active(tree.level(n)) { obstacle[n].max_of(m) } else { m };
    }
    u
}

/// Smallest non-negative supermartingale dominating the obstacle at weighted
/// levels: `max(X, E[U_{k+1} | n])` where the weight is positive, plain
/// continuation elsewhere, zero at the cemetery.
pub fn direct_recursion<T: Scalar>(inst: &Instance<T>) -> AdaptedProcess<T> {
    dominating_recursion(&inst.tree, &inst.obstacle, |k| inst.grid.is_weighted(k))
}

/// Snell envelope: domination at every non-cemetery level regardless of
/// the weights.
pub fn snell_envelope<T: Scalar>(tree: &FiltrationTree<T>, obstacle: &AdaptedProcess<T>) -> AdaptedProcess<T> {
    dominating_recursion(tree, obstacle, |_| true)
}

/// `U = M - A` with `M` a martingale and `A` predictable, non-decreasing,
/// `A(root) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition<T> {
    pub martingale: AdaptedProcess<T>,
    pub compensator: AdaptedProcess<T>,
}

/// Doob-Meyer decomposition of a supermartingale. The increment of `A` into
/// each child of `n` is `U(n) - E[U_{k+1} | n]`, the same for all children.
pub fn doob_meyer<T: Scalar>(
    tree: &FiltrationTree<T>,
    u: &AdaptedProcess<T>,
    tol: T,
) -> Result<Decomposition<T>> {
    let check = is_supermartingale(tree, u, tol)?;
    if !check.holds {
        return Err(Error::NotSupermartingale {
            node: check.worst_node,
            violation: check.worst_violation.as_f64(),
        });
    }
    let mut a = AdaptedProcess::zeros(tree);
    for n in tree.internal_nodes() {
        let inc = u[n] - tree.expect_children(n, |c| u[c]);
        for &c in tree.children(n) {
            a[c] = a[n] + inc;
        }
    }
    let m = u.zip_with(&a, |x, y| x + y);
    Ok(Decomposition { martingale: m, compensator: a })
}

/// `max (X - U)^+` over weighted nodes.
pub fn domination_violation<T: Scalar>(inst: &Instance<T>, u: &AdaptedProcess<T>) -> T {
    inst.weighted_nodes().map(|n| (inst.obstacle[n] - u[n]).pos_part()).fold(T::zero(), T::max_of)
}

/// One row of the `beta` sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow<T> {
    pub beta: T,
    /// Sup-node distance to the exact envelope.
    pub sup_gap: T,
    /// Sup-node distance to the previous sweep; `None` for the first one.
    pub gap_to_previous: Option<T>,
    pub domination_violation: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeResult<T> {
    pub envelope: AdaptedProcess<T>,
    pub martingale: AdaptedProcess<T>,
    pub compensator: AdaptedProcess<T>,
    pub sweeps: Vec<SweepRow<T>>,
    /// The sweep stopped on `tol_gap` before reaching `beta_max`.
    pub converged: bool,
    /// Sup-node distance between the last penalized sweep and the envelope.
    pub cross_check_distance: T,
    pub domination_violation: T,
}

/// Every `beta` of the schedule, without early stopping, measured against
/// the exact envelope.
pub fn beta_sweep<T: Scalar>(inst: &Instance<T>, schedule: &BetaSchedule<T>) -> Result<Vec<SweepRow<T>>> {
    schedule.validate()?;
    let exact = direct_recursion(inst);
    let mut last: Option<AdaptedProcess<T>> = None;
    let mut rows = Vec::new();
    for beta in schedule.betas() {
        let ub = penalized_envelope(inst, beta)?;
        rows.push(SweepRow {
            beta,
            sup_gap: ub.max_abs_diff(&exact),
            gap_to_previous: last.as_ref().map(|p| ub.max_abs_diff(p)),
            domination_violation: domination_violation(inst, &ub),
        });
        last = Some(ub);
    }
    Ok(rows)
}

/// Runs the `beta` sweep, cross-checks it against [`direct_recursion`] and
/// returns the exact envelope with its Doob-Meyer decomposition.
///
/// The cross-check accepts a distance up to
/// `max(10 tol_gap, tol_dom (1 + sup|X|))`. `NonConvergence` is returned
/// only when the sweep hits `beta_max` and the cross-check fails as well.
pub fn strong_envelope<T: Scalar>(inst: &Instance<T>, schedule: &BetaSchedule<T>) -> Result<EnvelopeResult<T>> {
    schedule.validate()?;
    let exact = direct_recursion(inst);
    assert!(
        exact.values().iter().all(|v| *v >= T::zero()),
        "envelope recursion produced a negative value"
    );

    let mut sweeps = Vec::new();
    let mut last: Option<AdaptedProcess<T>> = None;
    let mut converged = false;
    for beta in schedule.betas() {
        let ub = penalized_envelope(inst, beta)?;
        let gap_to_previous = last.as_ref().map(|p| ub.max_abs_diff(p));
        sweeps.push(SweepRow {
            beta,
            sup_gap: ub.max_abs_diff(&exact),
            gap_to_previous,
            domination_violation: domination_violation(inst, &ub),
        });
        last = Some(ub);
        if gap_to_previous.is_some_and(|g| g < schedule.tol_gap) {
            converged = true;
            break;
        }
    }

    let last = last.expect("schedule has at least one beta");
    let distance = last.max_abs_diff(&exact);
    let ten = T::lit(10.0);
    let tol_cross = (ten * schedule.tol_gap).max_of(schedule.tol_dom * (T::one() + inst.obstacle_scale()));
    if !converged && distance > tol_cross {
        let row = sweeps.last().expect("non-empty");
        return Err(Error::NonConvergence {
            beta: row.beta.as_f64(),
            gap: row.gap_to_previous.unwrap_or(row.sup_gap).as_f64(),
            distance: distance.as_f64(),
        });
    }

    let dm = doob_meyer(&inst.tree, &exact, T::zero())?;
    Ok(EnvelopeResult {
        domination_violation: domination_violation(inst, &exact),
        envelope: exact,
        martingale: dm.martingale,
        compensator: dm.compensator,
        sweeps,
        converged,
        cross_check_distance: distance,
    })
}

/// `tau^eps` after `start`: the first node at or after `start` at a weighted
/// level with `X >= U - eps`, or the cemetery.
pub fn epsilon_optimal_time<T: Scalar>(
    inst: &Instance<T>,
    envelope: &AdaptedProcess<T>,
    start: &StoppingTime,
    eps: T,
) -> Result<StoppingTime> {
    if !(eps > T::zero()) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {eps}")));
    }
    envelope.check_len(&inst.tree)?;
    let reached = start.reached(&inst.tree);
    let flags = (0..inst.tree.len())
        .map(|n| reached[n] && inst.is_weighted(n) && inst.obstacle[n] >= envelope[n] - eps)
        .collect();
    StoppingTime::from_flags(&inst.tree, flags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{fixture_f1, fixture_f2, fixture_one_step_binary};
    use crate::scalar::Rational;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn penalized_step_examples() {
        assert_eq!(penalized_step(2.0, 0.0, 1.0).unwrap(), 1.0);
        assert_eq!(penalized_step(2.0, 5.0, 10.0).unwrap(), 5.0);
        assert!((penalized_step(1.0_f64, 0.0, 999.0).unwrap() - 0.999).abs() < 1e-15);
        assert!(penalized_step(1.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn f1_penalized_envelopes_are_exact() {
        let f1 = fixture_f1::<Rational>();
        let u1 = penalized_envelope(&f1, Rational::from_integer(1)).unwrap();
        assert_eq!(u1.values(), &[r(2, 1), r(2, 1), r(1, 1), r(0, 1)]);
        let u3 = penalized_envelope(&f1, Rational::from_integer(3)).unwrap();
        assert_eq!(u3.values(), &[r(21, 8), r(21, 8), r(3, 2), r(0, 1)]);
    }

    #[test]
    fn nonpositive_obstacle_gives_zero() {
        let inst = crate::instance::chain_instance::<f64>(&[-1.0, 0.0, -3.0], &[1.0, 1.0, 1.0]);
        assert_eq!(penalized_envelope(&inst, 7.0).unwrap().sup_abs(), 0.0);
        assert_eq!(direct_recursion(&inst).sup_abs(), 0.0);
    }

    #[test]
    fn f1_strong_envelope() {
        let res = strong_envelope(&fixture_f1::<f64>(), &BetaSchedule::default()).unwrap();
        assert_eq!(res.envelope.values(), &[3.0, 3.0, 2.0, 0.0]);
        assert_eq!(res.compensator.values(), &[0.0, 0.0, 1.0, 3.0]);
        assert_eq!(res.martingale.values(), &[3.0; 4]);
        assert_eq!(res.domination_violation, 0.0);
        assert_eq!(res.sweeps[0].sup_gap, 1.0);
        assert_eq!(res.sweeps.len(), 9);
    }

    #[test]
    fn f2_spike_is_invisible() {
        let f2 = fixture_f2::<f64>();
        let res = strong_envelope(&f2, &BetaSchedule::default()).unwrap();
        assert_eq!(res.envelope.sup_abs(), 0.0);
        assert_eq!(snell_envelope(&f2.tree, &f2.obstacle).values(), &[5.0, 5.0, 0.0, 0.0]);
    }

    #[test]
    fn one_step_binary_continues() {
        let res = strong_envelope(&fixture_one_step_binary::<f64>(), &BetaSchedule::default()).unwrap();
        assert_eq!(res.envelope[0], 1.0);
    }

    #[test]
    fn doob_meyer_of_martingale_and_constant() {
        let b = fixture_one_step_binary::<f64>();
        let u = AdaptedProcess::from_values(&b.tree, vec![1.0, 2.0, 0.0, 2.0, 0.0]).unwrap();
        let dm = doob_meyer(&b.tree, &u, 0.0).unwrap();
        assert_eq!(dm.compensator.sup_abs(), 0.0);
        assert_eq!(dm.martingale, u);

        let c = AdaptedProcess::constant(&b.tree, 4.0);
        let dm = doob_meyer(&b.tree, &c, 0.0).unwrap();
        assert_eq!(dm.martingale, c);
        assert_eq!(dm.compensator.sup_abs(), 0.0);

        let up = AdaptedProcess::from_values(&b.tree, vec![0.0, 2.0, 0.0, 2.0, 0.0]).unwrap();
        assert!(matches!(doob_meyer(&b.tree, &up, 1e-10), Err(Error::NotSupermartingale { node: 0, .. })));
    }

    #[test]
    fn epsilon_optimal_time_examples() {
        let f1 = fixture_f1::<f64>();
        let u = direct_recursion(&f1);
        let root = StoppingTime::immediate(&f1.tree);
        let tau = epsilon_optimal_time(&f1, &u, &root, 0.5).unwrap();
        assert_eq!(tau.stop_nodes(&f1.tree), vec![1]);
        // eps above sup(U - X) stops immediately
        let tau = epsilon_optimal_time(&f1, &u, &root, 2.5).unwrap();
        assert_eq!(tau.stop_nodes(&f1.tree), vec![0]);
        assert!(epsilon_optimal_time(&f1, &u, &root, 0.0).is_err());
    }

    #[test]
    fn supermartingale_obstacle_stops_at_start() {
        let inst = crate::instance::chain_instance::<f64>(&[4.0, 3.0, 1.0], &[1.0, 1.0, 1.0]);
        let u = direct_recursion(&inst);
        assert_eq!(u, inst.obstacle);
        for level in 0..3 {
            let start = StoppingTime::at_level(&inst.tree, level);
            let tau = epsilon_optimal_time(&inst, &u, &start, 1e-6).unwrap();
            assert_eq!(tau.stop_nodes(&inst.tree), vec![level]);
        }
    }

    #[test]
    fn invalid_schedules() {
        let s = BetaSchedule { growth: 1.0, ..BetaSchedule::<f64>::default() };
        assert!(s.validate().is_err());
        let s = BetaSchedule { beta_max: 0.5, ..BetaSchedule::<f64>::default() };
        assert!(strong_envelope(&fixture_f1::<f64>(), &s).is_err());
    }

    #[test]
    fn runs_on_f32() {
        let res = strong_envelope(&fixture_f1::<f32>(), &BetaSchedule::default()).unwrap();
        assert_eq!(res.envelope.values(), &[3.0, 3.0, 2.0, 0.0]);
    }
}

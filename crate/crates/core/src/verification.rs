//! Executable checks of the envelope characterizations and estimates.
//!
//! Left limits `Y_{s-}` in sums against `dA_s` or `dU_s` are the values at the
//! previous level, so every integrand is measurable at the time the increment
//! is decided.

use std::fmt;

use crate::engine::{direct_recursion, epsilon_optimal_time};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::norms::{lp_norm, quadratic_variation};
use crate::process::AdaptedProcess;
use crate::scalar::{Real, Scalar};
use crate::stopping::{conditional_value_at, value_at_stopping_time, Atom, RandomVariableAtStop, StoppingTime};
use crate::tree::{FiltrationTree, NodeId};

/// Sandwich and admissibility precondition tolerance.
pub const PRECONDITION_TOL: f64 = 1e-10;
/// `dA` above this counts as an increase.
pub const INCREMENT_TOL: f64 = 1e-10;
/// `|U - X|` at or below this counts as touching the obstacle.
pub const TOUCH_TOL: f64 = 1e-9;
/// Slack for the a priori and stability inequalities.
pub const ESTIMATE_TOL: f64 = 1e-9;
/// Tolerance of the summation-by-parts identity, relative to `1 + sup|D|^2`.
pub const IDENTITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub worst_residual: f64,
    /// Where the worst residual occurs; set whenever the check fails.
    pub witness: Option<String>,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, passed: bool, worst_residual: f64, witness: Option<String>) -> Self {
        Self { name: name.into(), passed, worst_residual, witness }
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {} (worst residual {:e})", self.name, self.worst_residual)?;
        if let Some(w) = &self.witness {
            write!(f, ": {w}")?;
        }
        Ok(())
    }
}

/// Tracks the largest residual seen and where it happened.
#[derive(Debug, Clone)]
struct Worst {
    residual: f64,
    witness: Option<String>,
}

impl Worst {
    fn new() -> Self {
        Self { residual: f64::NEG_INFINITY, witness: None }
    }

    fn offer(&mut self, residual: f64, witness: impl FnOnce() -> String) {
        if residual > self.residual || self.witness.is_none() {
            self.residual = residual;
            self.witness = Some(witness());
        }
    }

    fn report(self, name: &str, limit: f64) -> CheckReport {
        let residual = if self.residual.is_finite() { self.residual } else { 0.0 };
        let passed = residual <= limit;
        CheckReport::new(name, passed, residual, if passed { None } else { self.witness })
    }
}

/// `E[A_{k+1} - A_k | n]` for an internal node.
fn increment<T: Scalar>(tree: &FiltrationTree<T>, a: &AdaptedProcess<T>, n: NodeId) -> T {
    tree.expect_children(n, |c| a[c]) - a[n]
}

fn check_sandwich<T: Scalar>(inst: &Instance<T>, u: &AdaptedProcess<T>, xstar: &AdaptedProcess<T>) -> Result<()> {
    let tol = T::lit(PRECONDITION_TOL);
    for n in inst.weighted_nodes() {
        if xstar[n] < inst.obstacle[n] - tol || xstar[n] > u[n] + tol {
            return Err(Error::Sandwich {
                node: n,
                detail: format!("X = {}, X* = {}, U = {}", inst.obstacle[n], xstar[n], u[n]),
            });
        }
    }
    Ok(())
}

/// `E[sum_k (U_k - X*_k) (A_{k+1} - A_k)]` for a process `X*` sandwiched
/// between the obstacle and `U` at weighted nodes.
pub fn skorohod_residual<T: Scalar>(
    inst: &Instance<T>,
    u: &AdaptedProcess<T>,
    a: &AdaptedProcess<T>,
    xstar: &AdaptedProcess<T>,
) -> Result<T> {
    let tree = &inst.tree;
    u.check_len(tree)?;
    a.check_len(tree)?;
    xstar.check_len(tree)?;
    check_sandwich(inst, u, xstar)?;
    Ok(tree
        .internal_nodes()
        .fold(T::zero(), |acc, n| acc + tree.path_prob(n) * (u[n] - xstar[n]) * increment(tree, a, n)))
}

/// Flat-off rule: `A` may only increase out of a weighted node where `U`
/// touches the obstacle. The residual is `|U - X|` at increasing weighted
/// nodes; any increase out of a zero-weight level fails outright.
pub fn complementarity_check<T: Scalar>(inst: &Instance<T>, u: &AdaptedProcess<T>, a: &AdaptedProcess<T>) -> CheckReport {
    let tree = &inst.tree;
    let inc_tol = T::lit(INCREMENT_TOL);
    let mut worst = Worst::new();
    let mut unweighted: Option<String> = None;
    for n in tree.internal_nodes() {
        let inc = increment(tree, a, n);
        if inc <= inc_tol {
            continue;
        }
        let label = || format!("node {} (level {})", tree.path_label(n), tree.level(n));
        if inst.is_weighted(n) {
            let gap = u[n] - inst.obstacle[n];
            worst.offer(gap.abs().as_f64(), || format!("{}: dA = {inc}, U - X = {gap}", label()));
        } else if unweighted.is_none() {
            unweighted = Some(format!("{}: dA = {inc} at a zero-weight level", label()));
        }
    }
    let report = worst.report("complementarity", TOUCH_TOL);
    match unweighted {
        Some(w) => CheckReport { passed: false, witness: Some(w), ..report },
        None => report,
    }
}

/// `max (X - U)^+` over weighted nodes, against `tol`.
pub fn domination_check<T: Scalar>(inst: &Instance<T>, u: &AdaptedProcess<T>, tol: T) -> CheckReport {
    let mut worst = Worst::new();
    for n in inst.weighted_nodes() {
        let v = (inst.obstacle[n] - u[n]).pos_part();
        worst.offer(v.as_f64(), || format!("node {}: X = {}, U = {}", inst.tree.path_label(n), inst.obstacle[n], u[n]));
    }
    worst.report("domination", tol.as_f64())
}

/// Per-atom values of the variational inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct SviResidual<T> {
    pub per_atom: RandomVariableAtStop<T>,
    pub min: T,
}

/// `E[sum_{s=tau1+1}^{tau2} (U_{s-1} - V_{s-1}) (U_s - U_{s-1}) | F_tau1]` for
/// each atom of `tau1`. `V` must dominate the obstacle at weighted nodes.
pub fn svi_residual<T: Scalar>(
    inst: &Instance<T>,
    u: &AdaptedProcess<T>,
    v: &AdaptedProcess<T>,
    tau1: &StoppingTime,
    tau2: &StoppingTime,
) -> Result<SviResidual<T>> {
    let tree = &inst.tree;
    u.check_len(tree)?;
    v.check_len(tree)?;
    let tol = T::lit(PRECONDITION_TOL);
    if let Some(n) = inst.weighted_nodes().find(|&n| v[n] < inst.obstacle[n] - tol) {
        return Err(Error::OutsideAdmissible { node: n, value: v[n].as_f64(), obstacle: inst.obstacle[n].as_f64() });
    }
    tau1.check_precedes(tau2, tree)?;
    let mut g = vec![T::zero(); tree.len()];
    for n in tree.backward() {
        if tau2.is_flagged(n) {
            continue;
        }
        let lead = u[n] - v[n];
        g[n] = tree.expect_children(n, |c| lead * (u[c] - u[n]) + g[c]);
    }
    let atoms: Vec<_> = tau1
        .stop_nodes(tree)
        .into_iter()
        .map(|node| Atom { node, value: g[node], prob: tree.path_prob(node) })
        .collect();
    let min = atoms.iter().map(|a| a.value).reduce(T::min_of).expect("at least one atom");
    Ok(SviResidual { per_atom: RandomVariableAtStop { atoms }, min })
}

/// For every path, the positions on `path_to(stop of tau2)` where `tau1` and
/// `tau2` stop.
fn stop_pairs<T: Scalar>(
    tree: &FiltrationTree<T>,
    tau1: &StoppingTime,
    tau2: &StoppingTime,
) -> Result<Vec<(Vec<NodeId>, usize)>> {
    tau1.check_precedes(tau2, tree)?;
    Ok(tau2
        .stop_nodes(tree)
        .into_iter()
        .map(|b| {
            let path = tree.path_to(b);
            let ia = path.iter().position(|&m| tau1.is_flagged(m)).expect("tau1 precedes tau2");
            (path, ia)
        })
        .collect())
}

/// Checks the discrete product rule pathwise for `D = Y - Y'`:
/// `D_{tau2}^2 - D_{tau1}^2 = 2 sum D_{s-1} dD_s + [D]_{tau2} - [D]_{tau1}`.
pub fn uniqueness_identity_check<T: Scalar>(
    tree: &FiltrationTree<T>,
    y: &AdaptedProcess<T>,
    y2: &AdaptedProcess<T>,
    tau1: &StoppingTime,
    tau2: &StoppingTime,
) -> Result<CheckReport> {
    y.check_len(tree)?;
    y2.check_len(tree)?;
    let d = y.sub(y2);
    let qv = quadratic_variation(tree, &d);
    let scale = T::one() + d.sup_abs() * d.sup_abs();
    let two = T::lit(2.0);
    let mut worst = Worst::new();
    for (path, ia) in stop_pairs(tree, tau1, tau2)? {
        let (a, b) = (path[ia], *path.last().expect("non-empty path"));
        let lhs = d[b] * d[b] - d[a] * d[a];
        let sum = path[ia..].windows(2).fold(T::zero(), |acc, w| acc + d[w[0]] * (d[w[1]] - d[w[0]]));
        let rhs = two * sum + qv[b] - qv[a];
        let residual = ((lhs - rhs).abs() / scale).as_f64();
        worst.offer(residual, || format!("path to {}: lhs {lhs}, rhs {rhs}", tree.path_label(b)));
    }
    Ok(worst.report("uniqueness_identity", IDENTITY_TOL))
}

fn check_estimate_times<T: Scalar>(inst: &Instance<T>, s1: &StoppingTime, s2: &StoppingTime) -> Result<()> {
    s1.check_precedes(s2, &inst.tree)?;
    s1.check_stoppable(&inst.tree, &inst.grid)?;
    s2.check_stoppable(&inst.tree, &inst.grid)
}

/// `E[A_{s2} - A_{s1} | F_{s1}] <= E[X_{tau^eps_{s1} ^ s2} - X_{s2} | F_{s1}] + eps`
/// on every atom of `s1`.
pub fn apriori_increment_check<T: Scalar>(
    inst: &Instance<T>,
    u: &AdaptedProcess<T>,
    a: &AdaptedProcess<T>,
    s1: &StoppingTime,
    s2: &StoppingTime,
    eps: T,
) -> Result<CheckReport> {
    check_estimate_times(inst, s1, s2)?;
    let tree = &inst.tree;
    let tau = epsilon_optimal_time(inst, u, s1, eps)?;
    let rho = tau.earliest(s2);
    let cond = |y: &AdaptedProcess<T>, at: &StoppingTime| conditional_value_at(tree, &value_at_stopping_time(tree, y, at), s1);
    let a_late = cond(a, s2)?;
    let x_rho = cond(&inst.obstacle, &rho)?;
    let x_late = cond(&inst.obstacle, s2)?;
    let mut worst = Worst::new();
    for (i, atom) in a_late.atoms.iter().enumerate() {
        let lhs = atom.value - a[atom.node];
        let rhs = x_rho.atoms[i].value - x_late.atoms[i].value + eps;
        worst.offer((lhs - rhs).as_f64(), || {
            format!("atom {}: lhs {lhs} > rhs {rhs}", tree.path_label(atom.node))
        });
    }
    Ok(worst.report("apriori_increment", ESTIMATE_TOL))
}

/// Pathwise `sup |X_{s2} - X_s|` over stoppable levels between the two stops
/// (both ends included).
fn sup_against_end<T: Scalar>(inst: &Instance<T>, x: &AdaptedProcess<T>, path: &[NodeId], from: usize) -> T {
    let end = x[*path.last().expect("non-empty path")];
    path[from..]
        .iter()
        .filter(|&&m| inst.is_stoppable(m))
        .fold(T::zero(), |acc, &m| acc.max_of((end - x[m]).abs()))
}

/// `||A_{s2} - A_{s1}||_p <= p || sup_{s1 <= s <= s2} |X_{s2} - X_s| ||_p`.
pub fn apriori_lp_check<T: Real>(
    inst: &Instance<T>,
    a: &AdaptedProcess<T>,
    s1: &StoppingTime,
    s2: &StoppingTime,
    p: T,
) -> Result<CheckReport> {
    if !(p >= T::one()) {
        return Err(Error::InvalidParameter(format!("L^p estimate needs p >= 1, got {p}")));
    }
    check_estimate_times(inst, s1, s2)?;
    let tree = &inst.tree;
    let mut inc = Vec::new();
    let mut osc = Vec::new();
    for (path, ia) in stop_pairs(tree, s1, s2)? {
        let b = *path.last().expect("non-empty path");
        let prob = tree.path_prob(b);
        inc.push(Atom { node: b, value: a[b] - a[path[ia]], prob });
        osc.push(Atom { node: b, value: sup_against_end(inst, &inst.obstacle, &path, ia), prob });
    }
    let lhs = lp_norm(&RandomVariableAtStop { atoms: inc }, p)?;
    let rhs = p * lp_norm(&RandomVariableAtStop { atoms: osc }, p)?;
    let residual = (lhs - rhs).as_f64();
    let witness = format!("p = {p}: ||dA||_p = {lhs}, bound {rhs}; {}, {}", s1.describe(tree), s2.describe(tree));
    Ok(CheckReport::new(
        format!("apriori_lp_p{p}"),
        residual <= ESTIMATE_TOL,
        residual,
        (residual > ESTIMATE_TOL).then_some(witness),
    ))
}

/// The pieces of the stability estimate for two obstacles on one tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityTerms<T> {
    /// `E[(U2 - U1)_{tau1}^2 + [U2 - U1]_{tau2} - [U2 - U1]_{tau1}]`.
    pub lhs: T,
    /// `E[(U2 - U1)_{tau2}^2]`, zero when `tau2` is the cemetery.
    pub terminal: T,
    /// `4 ||sup|X2 - X1| ||_2 (||sup|X1 - X1_{tau2}| ||_2 + ||sup|X2 - X2_{tau2}| ||_2)`.
    pub cross: T,
}

pub fn stability_terms<T: Real>(
    first: &Instance<T>,
    second: &Instance<T>,
    tau1: &StoppingTime,
    tau2: &StoppingTime,
) -> Result<StabilityTerms<T>> {
    if first.tree != second.tree || first.grid != second.grid {
        return Err(Error::InvalidParameter("stability needs both obstacles on the same tree and grid".into()));
    }
    // tau1 may start anywhere, e.g. at an unweighted root
    tau1.check_precedes(tau2, &first.tree)?;
    tau2.check_stoppable(&first.tree, &first.grid)?;
    let tree = &first.tree;
    let u1 = direct_recursion(first);
    let u2 = direct_recursion(second);
    let d = u2.sub(&u1);
    let qv = quadratic_variation(tree, &d);
    let x1 = &first.obstacle;
    let x2 = &second.obstacle;
    let dx = x2.sub(x1);

    let (mut lhs, mut terminal) = (T::zero(), T::zero());
    let (mut gap, mut osc1, mut osc2) = (Vec::new(), Vec::new(), Vec::new());
    for (path, ia) in stop_pairs(tree, tau1, tau2)? {
        let (a, b) = (path[ia], *path.last().expect("non-empty path"));
        let prob = tree.path_prob(b);
        lhs = lhs + prob * (d[a] * d[a] + qv[b] - qv[a]);
        terminal = terminal + prob * d[b] * d[b];
        let sup_gap = path[ia..]
            .iter()
            .filter(|&&m| first.is_stoppable(m))
            .fold(T::zero(), |acc, &m| acc.max_of(dx[m].abs()));
        gap.push(Atom { node: b, value: sup_gap, prob });
        osc1.push(Atom { node: b, value: sup_against_end(first, x1, &path, ia), prob });
        osc2.push(Atom { node: b, value: sup_against_end(first, x2, &path, ia), prob });
    }
    let two = T::lit(2.0);
    let l2 = |atoms: Vec<Atom<T>>| lp_norm(&RandomVariableAtStop { atoms }, two);
    let cross = T::lit(4.0) * l2(gap)? * (l2(osc1)? + l2(osc2)?);
    Ok(StabilityTerms { lhs, terminal, cross })
}

/// Checks the stability estimate between `tau1` and `tau2` (with the terminal term
/// `E[(U2 - U1)_{tau2}^2]` on the right) and its whole-horizon form
/// `E[U2 - U1]_T <= cross + E(X2_T - X1_T)^2` with `T` the cemetery.
pub fn stability_check<T: Real>(
    first: &Instance<T>,
    second: &Instance<T>,
    tau1: &StoppingTime,
    tau2: &StoppingTime,
) -> Result<CheckReport> {
    let tree = &first.tree;
    let local = stability_terms(first, second, tau1, tau2)?;
    let local_gap = local.lhs - local.terminal - local.cross;

    let whole = stability_terms(first, second, &StoppingTime::immediate(tree), &StoppingTime::at_cemetery(tree))?;
    let u1 = direct_recursion(first);
    let u2 = direct_recursion(second);
    let d = u2.sub(&u1);
    let bracket = tree.expect_leaves(&quadratic_variation(tree, &d));
    let end_gap = tree.expect_leaves(&second.obstacle.sub(&first.obstacle).map(|v| v * v));
    let whole_gap = bracket - whole.cross - end_gap;

    let residual = local_gap.max(whole_gap).as_f64();
    let passed = residual <= ESTIMATE_TOL;
    let witness = format!(
        "interval: lhs {} vs {} + {}; whole horizon: {bracket} vs {} + {end_gap}; {}, {}",
        local.lhs,
        local.terminal,
        local.cross,
        whole.cross,
        tau1.describe(tree),
        tau2.describe(tree)
    );
    Ok(CheckReport::new("stability", passed, residual, (!passed).then_some(witness)))
}

/// For `X^n = X - 1/n`, the envelopes increase with `n` and the last one is
/// within `1/n_max` of the envelope of `X`.
pub fn monotone_convergence_check<T: Scalar>(inst: &Instance<T>, n_max: usize) -> Result<CheckReport> {
    if n_max < 2 {
        return Err(Error::InvalidParameter(format!("n_max must be at least 2, got {n_max}")));
    }
    let target = direct_recursion(inst);
    let shifted = |n: usize| -> Result<AdaptedProcess<T>> {
        let shift = T::one() / T::from_usize(n).expect("n fits");
        Ok(direct_recursion(&inst.with_obstacle(inst.obstacle.add_const(-shift))?))
    };
    let mut drop = Worst::new();
    let mut prev = shifted(1)?;
    for n in 2..=n_max {
        let cur = shifted(n)?;
        for node in 0..inst.tree.len() {
            drop.offer((prev[node] - cur[node]).as_f64(), || {
                format!("n = {n}, node {}: envelope decreased", inst.tree.path_label(node))
            });
        }
        prev = cur;
    }
    let bound = T::one() / T::from_usize(n_max).expect("n fits");
    let mut excess = Worst::new();
    for node in 0..inst.tree.len() {
        excess.offer(((target[node] - prev[node]).abs() - bound).as_f64(), || {
            format!("n = {n_max}, node {}: distance to the limit exceeds 1/n", inst.tree.path_label(node))
        });
    }
    let drop = drop.report("monotone_convergence", 1e-12);
    let excess = excess.report("monotone_convergence", PRECONDITION_TOL);
    let passed = drop.passed && excess.passed;
    Ok(CheckReport {
        passed,
        worst_residual: drop.worst_residual.max(excess.worst_residual),
        witness: drop.witness.or(excess.witness),
        ..drop
    })
}

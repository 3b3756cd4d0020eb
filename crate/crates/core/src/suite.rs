//! The full check suite for one instance.
//!
//! Deterministic checks run once; sampled checks draw processes and stopping
//! times from a ChaCha8 stream seeded per run. Reports with the same name are
//! merged: a merged report fails if any part fails and keeps the worst
//! residual.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::{epsilon_optimal_time, penalized_envelope, strong_envelope, BetaSchedule, EnvelopeResult};
use crate::error::Result;
use crate::instance::Instance;
use crate::oracle::{count_stopping_times, envelope_by_value_iteration, root_value_by_enumeration};
use crate::process::{is_martingale, is_supermartingale, AdaptedProcess};
use crate::sampling::{canonical_sandwiched, random_admissible, random_process, random_sandwiched, random_stopping_pair};
use crate::scalar::Real;
use crate::stopping::{conditional_value_at, value_at_stopping_time, StoppingTime};
use crate::verification::{
    apriori_increment_check, apriori_lp_check, complementarity_check, domination_check, monotone_convergence_check,
    skorohod_residual, stability_check, svi_residual, uniqueness_identity_check, CheckReport,
};

/// Identifier of the random stream used by sampled checks and generators.
pub const RNG_ALGORITHM: &str = "chacha8";
pub const EPSILONS: [f64; 3] = [1e-3, 1e-1, 1.0];
pub const LP_EXPONENTS: [f64; 3] = [1.0, 2.0, 4.0];
pub const MONOTONE_N_MAX: usize = 64;
/// Enumeration oracle runs only below this many stopping rules.
pub const ORACLE_CAP: u128 = 1 << 16;
/// Absolute tolerance for the martingale and optional-sampling identities.
pub const IDENTITY_ABS_TOL: f64 = 1e-10;

/// Merges reports sharing a name, in order of first appearance.
pub fn merge_reports(reports: impl IntoIterator<Item = CheckReport>) -> Vec<CheckReport> {
    let mut out: Vec<CheckReport> = Vec::new();
    for r in reports {
        match out.iter_mut().find(|o| o.name == r.name) {
            Some(o) => {
                if !r.passed && o.passed {
                    o.witness = r.witness.clone();
                }
                o.passed &= r.passed;
                o.worst_residual = o.worst_residual.max(r.worst_residual);
            }
            None => out.push(r),
        }
    }
    out
}

fn bound(name: &str, residual: f64, limit: f64, witness: impl FnOnce() -> String) -> CheckReport {
    let passed = residual <= limit;
    CheckReport::new(name, passed, residual, (!passed).then(witness))
}

pub struct Suite<'a, T> {
    inst: &'a Instance<T>,
    schedule: BetaSchedule<T>,
    pub envelope: EnvelopeResult<T>,
}

impl<'a, T: Real> Suite<'a, T> {
    pub fn new(inst: &'a Instance<T>, schedule: BetaSchedule<T>) -> Result<Self> {
        let envelope = strong_envelope(inst, &schedule)?;
        Ok(Self { inst, schedule, envelope })
    }

    fn scale(&self) -> T {
        T::one() + self.inst.obstacle_scale()
    }

    pub fn deterministic_checks(&self) -> Result<Vec<CheckReport>> {
        let inst = self.inst;
        let tree = &inst.tree;
        let env = &self.envelope;
        let (u, m, a) = (&env.envelope, &env.martingale, &env.compensator);
        let tol = T::lit(IDENTITY_ABS_TOL);
        let mut out = vec![domination_check(inst, u, self.schedule.tol_dom)];

        let sm = is_supermartingale(tree, u, tol)?;
        let negative = u.values().iter().fold(T::zero(), |acc, v| acc.max_of(-*v));
        out.push(bound("supermartingale", sm.worst_violation.max(negative).as_f64(), IDENTITY_ABS_TOL, || {
            format!("node {}", tree.path_label(sm.worst_node))
        }));
        out.push(CheckReport::new("martingale", is_martingale(tree, m, tol)?, 0.0, None));

        let mut structure = u.sub(&m.sub(a)).sup_abs().max(a[0].abs());
        for n in tree.internal_nodes() {
            let incs: Vec<T> = tree.children(n).iter().map(|&c| a[c] - a[n]).collect();
            for &d in &incs {
                structure = structure.max(-d).max((d - incs[0]).abs());
            }
        }
        out.push(bound("doob_meyer", structure.as_f64(), 1e-12 * self.scale().as_f64(), || {
            "decomposition is not exact, A decreases, or A is not predictable".into()
        }));

        out.push(self.penalization_check()?);
        out.push(complementarity_check(inst, u, a));
        for (label, xs) in canonical_sandwiched(inst, u) {
            let r = skorohod_residual(inst, u, a, &xs)?;
            out.push(self.skorohod_report(r, || format!("X* = {label}")));
        }
        out.extend(self.epsilon_checks()?);
        out.push(monotone_convergence_check(inst, MONOTONE_N_MAX)?);

        let start = inst.weighted_obstacle_max().max(T::zero()) + T::one();
        let vi = envelope_by_value_iteration(inst, start, T::zero())?;
        let d = vi.max_abs_diff(u).as_f64();
        out.push(bound("oracle_value_iteration", d, 1e-11, || format!("sup distance {d}")));
        let allowed: Vec<bool> = (0..tree.len()).map(|n| inst.is_weighted(n)).collect();
        if count_stopping_times(tree, &allowed) <= ORACLE_CAP {
            let best = root_value_by_enumeration(inst, ORACLE_CAP)?;
            let d = (best - u[0]).abs().as_f64();
            out.push(bound("oracle_enumeration", d, 1e-12, || format!("enumeration {best}, envelope {}", u[0])));
        }
        Ok(merge_reports(out))
    }

    fn skorohod_report(&self, residual: T, witness: impl FnOnce() -> String) -> CheckReport {
        let limit = 1e-10 * self.scale().as_f64();
        bound("skorohod", residual.abs().as_f64(), limit, || format!("{} gives residual {residual}", witness()))
    }

    /// `U^beta` is non-decreasing along the schedule and its last sweep lies
    /// within `tol_dom (1 + sup|X|)` of the envelope.
    fn penalization_check(&self) -> Result<CheckReport> {
        let inst = self.inst;
        let mut worst_drop = T::zero();
        let mut prev: Option<AdaptedProcess<T>> = None;
        let mut witness = String::new();
        for beta in self.schedule.betas() {
            let cur = penalized_envelope(inst, beta)?;
            if let Some(p) = &prev {
                for n in 0..inst.tree.len() {
                    if p[n] - cur[n] > worst_drop {
                        worst_drop = p[n] - cur[n];
                        witness = format!("beta {beta}, node {}", inst.tree.path_label(n));
                    }
                }
            }
            prev = Some(cur);
        }
        let last = prev.expect("non-empty schedule");
        let distance = last.max_abs_diff(&self.envelope.envelope);
        let mono_ok = worst_drop <= T::lit(1e-12) * self.scale();
        let limit_ok = distance <= self.schedule.tol_dom * self.scale();
        let passed = mono_ok && limit_ok;
        let witness = if !mono_ok {
            format!("penalized envelope decreased at {witness}")
        } else {
            format!("last sweep {distance} away from the envelope")
        };
        Ok(CheckReport::new(
            "penalization",
            passed,
            worst_drop.max(distance).as_f64(),
            (!passed).then_some(witness),
        ))
    }

    /// Optimality of `tau^eps_t`, the optional-sampling identity at it, and
    /// flatness of `A` on `[t, tau^eps_t]`, for every deterministic start.
    fn epsilon_checks(&self) -> Result<Vec<CheckReport>> {
        let inst = self.inst;
        let tree = &inst.tree;
        let (u, a) = (&self.envelope.envelope, &self.envelope.compensator);
        let mut out = Vec::new();
        for &eps in &EPSILONS {
            let eps_t = T::lit(eps);
            for level in 0..tree.cemetery_level() {
                let start = StoppingTime::at_level(tree, level);
                let tau = epsilon_optimal_time(inst, u, &start, eps_t)?;
                let x_tau = value_at_stopping_time(tree, &inst.obstacle, &tau).expectation();
                let u_t = value_at_stopping_time(tree, u, &start).expectation();
                let shortfall = (u_t - eps_t - x_tau).as_f64();
                out.push(bound("epsilon_optimality", shortfall, IDENTITY_ABS_TOL, || {
                    format!("eps {eps}, t = {level}: E[X_tau] = {x_tau}, E[U_t] = {u_t}")
                }));

                let cond = conditional_value_at(tree, &value_at_stopping_time(tree, u, &tau), &start)?;
                let gap = cond.atoms.iter().map(|at| (at.value - u[at.node]).abs()).fold(T::zero(), T::max_of);
                out.push(bound("optional_sampling", gap.as_f64(), IDENTITY_ABS_TOL, || {
                    format!("eps {eps}, t = {level}: gap {gap}")
                }));

                let mut flat = T::zero();
                for b in tau.stop_nodes(tree) {
                    let path = tree.path_to(b);
                    flat = flat.max((a[b] - a[path[level]]).abs());
                }
                out.push(bound("compensator_flat", flat.as_f64(), IDENTITY_ABS_TOL, || {
                    format!("eps {eps}, t = {level}: A moves by {flat}")
                }));
            }
        }
        Ok(out)
    }

    pub fn sampled_checks(&self, seed: u64, draws: usize) -> Result<Vec<CheckReport>> {
        let inst = self.inst;
        let tree = &inst.tree;
        let (u, a) = (&self.envelope.envelope, &self.envelope.compensator);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = inst.obstacle_scale().as_f64() + 1.0;
        let mut out = Vec::new();
        for draw in 0..draws {
            let xs = random_sandwiched(inst, u, &mut rng);
            let r = skorohod_residual(inst, u, a, &xs)?;
            out.push(self.skorohod_report(r, || format!("seed {seed}, draw {draw}")));

            let v = random_admissible(inst, u, &mut rng);
            let (t1, t2) = random_stopping_pair(inst, u, &mut rng, false);
            let svi = svi_residual(inst, u, &v, &t1, &t2)?;
            out.push(bound("svi", (-svi.min).as_f64(), IDENTITY_ABS_TOL, || {
                format!("seed {seed}, draw {draw}: min {}; {}, {}", svi.min, t1.describe(tree), t2.describe(tree))
            }));

            let y = random_process(tree, &mut rng, -scale, scale);
            let y2 = random_process(tree, &mut rng, -scale, scale);
            let (t1, t2) = random_stopping_pair(inst, u, &mut rng, false);
            out.push(uniqueness_identity_check(tree, &y, &y2, &t1, &t2)?);

            let (s1, s2) = random_stopping_pair(inst, u, &mut rng, true);
            let eps = T::lit(rng.gen_range(1e-3..1.0));
            out.push(apriori_increment_check(inst, u, a, &s1, &s2, eps)?);
            for &p in &LP_EXPONENTS {
                let mut r = apriori_lp_check(inst, a, &s1, &s2, T::lit(p))?;
                r.name = "apriori_lp".into();
                out.push(r);
            }

            let noise = random_process(tree, &mut rng, -0.5 * scale, 0.5 * scale);
            let keep: Vec<bool> = (0..tree.len()).map(|_| rng.gen_bool(0.5)).collect();
            let other = inst.with_obstacle(AdaptedProcess::from_fn(tree, |n| {
                if keep[n] {
                    inst.obstacle[n]
                } else {
                    inst.obstacle[n] + noise[n]
                }
            }))?;
            let (t1, t2) = random_stopping_pair(inst, u, &mut rng, true);
            out.push(stability_check(inst, &other, &t1, &t2)?);
        }
        Ok(merge_reports(out))
    }
}

/// Envelope plus merged deterministic and sampled reports over `seeds`.
pub fn run_suite<T: Real>(
    inst: &Instance<T>,
    schedule: BetaSchedule<T>,
    seeds: Range<u64>,
    draws: usize,
) -> Result<(EnvelopeResult<T>, Vec<CheckReport>)> {
    let suite = Suite::new(inst, schedule)?;
    let mut reports = suite.deterministic_checks()?;
    for seed in seeds {
        reports.extend(suite.sampled_checks(seed, draws)?);
    }
    let reports = merge_reports(reports);
    Ok((suite.envelope, reports))
}

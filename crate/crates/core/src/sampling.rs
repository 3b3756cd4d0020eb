//! Random processes and stopping times for the property checks.

use rand::Rng;

use crate::instance::Instance;
use crate::process::AdaptedProcess;
use crate::scalar::Scalar;
use crate::stopping::StoppingTime;
use crate::tree::FiltrationTree;

fn uniform<T: Scalar, R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> T {
    T::lit(if lo < hi { rng.gen_range(lo..hi) } else { lo })
}

pub fn random_process<T: Scalar, R: Rng + ?Sized>(
    tree: &FiltrationTree<T>,
    rng: &mut R,
    lo: f64,
    hi: f64,
) -> AdaptedProcess<T> {
    AdaptedProcess::from_fn(tree, |_| uniform(rng, lo, hi))
}

/// Processes between the obstacle and `u` at weighted nodes that every check
/// family includes: the obstacle clipped below `u`, `u` itself, and the
/// midpoint of `u` and the obstacle extended by `u` off the weighted levels.
pub fn canonical_sandwiched<T: Scalar>(inst: &Instance<T>, u: &AdaptedProcess<T>) -> Vec<(&'static str, AdaptedProcess<T>)> {
    let extended =
        AdaptedProcess::from_fn(&inst.tree, |n| if inst.is_weighted(n) { inst.obstacle[n] } else { u[n] });
    let clipped = extended.zip_with(u, T::min_of);
    let half = T::lit(0.5);
    let mid = extended.zip_with(u, |x, y| (x + y) * half);
    vec![("clipped", clipped), ("envelope", u.clone()), ("midpoint", mid)]
}

/// A random process between the obstacle and `u` at weighted nodes and
/// below `u` elsewhere.
pub fn random_sandwiched<T: Scalar, R: Rng + ?Sized>(
    inst: &Instance<T>,
    u: &AdaptedProcess<T>,
    rng: &mut R,
) -> AdaptedProcess<T> {
    let scale = inst.obstacle_scale().as_f64() + 1.0;
    AdaptedProcess::from_fn(&inst.tree, |n| {
        let lambda: T = uniform(rng, 0.0, 1.0);
        if inst.is_weighted(n) {
            let x = inst.obstacle[n].min_of(u[n]);
            x + lambda * (u[n] - x)
        } else {
            u[n] - lambda * T::lit(scale)
        }
    })
}

/// A random element of the admissible set: at or above the obstacle at
/// weighted nodes, unconstrained elsewhere. Half of the draws perturb the
/// envelope upwards, the others perturb the obstacle upwards.
pub fn random_admissible<T: Scalar, R: Rng + ?Sized>(
    inst: &Instance<T>,
    u: &AdaptedProcess<T>,
    rng: &mut R,
) -> AdaptedProcess<T> {
    let scale = inst.obstacle_scale().as_f64() + 1.0;
    let around_envelope = rng.gen_bool(0.5);
    AdaptedProcess::from_fn(&inst.tree, |n| {
        let bump: T = uniform(rng, 0.0, scale);
        if inst.is_weighted(n) {
            let base = if around_envelope { u[n].max_of(inst.obstacle[n]) } else { inst.obstacle[n] };
            base + bump
        } else {
            u[n] + bump - T::lit(scale / 2.0)
        }
    })
}

/// Random ordered pair `tau1 <= tau2`, each flagging nodes where `U - X` falls
/// below a random threshold or with a random flip probability. With
/// `stoppable_only`, only weighted levels (and the cemetery) are flagged.
pub fn random_stopping_pair<T: Scalar, R: Rng + ?Sized>(
    inst: &Instance<T>,
    u: &AdaptedProcess<T>,
    rng: &mut R,
    stoppable_only: bool,
) -> (StoppingTime, StoppingTime) {
    let tree = &inst.tree;
    let spread = u.sub(&inst.obstacle).sup_abs().as_f64();
    let draw = |rng: &mut R| -> Vec<bool> {
        let theta: T = uniform(rng, 0.0, spread + 1e-3);
        let flip = rng.gen_range(0.0..0.5);
        (0..tree.len())
            .map(|n| {
                let hit = u[n] - inst.obstacle[n] <= theta;
                let coin = rng.gen_bool(flip);
                (!stoppable_only || inst.is_stoppable(n)) && (hit || coin)
            })
            .collect()
    };
    let f1 = draw(rng);
    let f2 = draw(rng);
    let tau1 = StoppingTime::from_flags(tree, f1).expect("length matches");
    let reached = tau1.reached(tree);
    let f2 = f2.iter().zip(&reached).map(|(&f, &r)| f && r).collect();
    let tau2 = StoppingTime::from_flags(tree, f2).expect("length matches");
    (tau1, tau2)
}

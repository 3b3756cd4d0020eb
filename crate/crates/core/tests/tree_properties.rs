mod common;

use proptest::prelude::*;
use rand::Rng;

use strong_envelope::process::is_martingale;
use strong_envelope::sampling::random_process;
use strong_envelope::stopping::{expectation_by_sweep, value_at_stopping_time};
use strong_envelope::{is_supermartingale, Process, StoppingTime, Tree};

/// Backward averaging of random cemetery values.
fn martingale_from_leaves(tree: &Tree, leaves: &Process) -> Process {
    let mut m = leaves.clone();
    for n in tree.backward() {
        if !tree.is_cemetery(n) {
            m[n] = tree.expect_children(n, |c| m[c]);
        }
    }
    m
}

#[test]
fn tower_property_on_random_trees() {
    for seed in 0..100 {
        let inst = common::problem(seed, 6, 3);
        let tree = &inst.tree;
        let mut rng = common::rng(seed + 1000);
        let mut z = random_process(tree, &mut rng, -5.0, 5.0);
        for level in (0..tree.cemetery_level()).rev() {
            for (n, v) in tree.conditional_expectation(&z, level).unwrap() {
                z[n] = v;
            }
        }
        let direct = tree.expect_leaves(&z);
        assert!((z[0] - direct).abs() < 1e-12, "seed {seed}: {} vs {direct}", z[0]);
    }
}

#[test]
fn stopped_expectation_two_ways() {
    for seed in 0..100 {
        let inst = common::problem(seed, 6, 3);
        let tree = &inst.tree;
        let mut rng = common::rng(seed + 2000);
        let y = random_process(tree, &mut rng, -5.0, 5.0);
        let p = rng.gen_range(0.0..1.0);
        let tau = StoppingTime::from_fn(tree, |_| rng.gen_bool(p));
        let rv = value_at_stopping_time(tree, &y, &tau);
        assert!((rv.total_prob() - 1.0).abs() < 1e-12);
        let sweep = expectation_by_sweep(tree, &y, &tau);
        assert!((rv.expectation() - sweep).abs() < 1e-12, "seed {seed}");
    }
}

#[test]
fn martingale_iff_super_and_sub() {
    for seed in 0..100 {
        let inst = common::problem(seed, 5, 3);
        let tree = &inst.tree;
        let mut rng = common::rng(seed + 3000);
        let m = martingale_from_leaves(tree, &random_process(tree, &mut rng, -1.0, 1.0));
        assert!(is_martingale(tree, &m, 1e-12).unwrap());
        for level in 0..tree.cemetery_level() {
            for (n, v) in tree.conditional_expectation(&m, level).unwrap() {
                assert!((m[n] - v).abs() < 1e-12);
            }
        }
        // a bump at an internal node breaks one of the two directions
        let mut bumped = m.clone();
        bumped[0] += 0.5;
        assert!(is_supermartingale(tree, &bumped, 1e-12).unwrap().holds);
        assert!(!is_martingale(tree, &bumped, 1e-12).unwrap());
    }
}

#[test]
fn min_of_supermartingales() {
    for seed in 0..100 {
        let inst = common::problem(seed, 5, 3);
        let tree = &inst.tree;
        let mut rng = common::rng(seed + 4000);
        let mut make = || {
            let mut s = random_process(tree, &mut rng, -1.0, 1.0);
            let drift = random_process(tree, &mut rng, 0.0, 1.0);
            for n in tree.backward() {
                if !tree.is_cemetery(n) {
                    s[n] = tree.expect_children(n, |c| s[c]) + drift[n];
                }
            }
            s
        };
        let (a, b) = (make(), make());
        assert!(is_supermartingale(tree, &a, 1e-12).unwrap().holds);
        let m = a.zip_with(&b, f64::min);
        assert!(is_supermartingale(tree, &m, 1e-12).unwrap().holds, "seed {seed}");
    }
}

proptest! {
    #[test]
    fn expectation_is_linear(seed in any::<u64>(), alpha in -3.0..3.0f64) {
        let inst = common::problem(seed, 4, 3);
        let tree = &inst.tree;
        let mut rng = common::rng(seed);
        let y = random_process(tree, &mut rng, -1.0, 1.0);
        let z = random_process(tree, &mut rng, -1.0, 1.0);
        let comb = y.zip_with(&z, |a, b| alpha * a + b);
        let lhs = tree.expect_leaves(&comb);
        let rhs = alpha * tree.expect_leaves(&y) + tree.expect_leaves(&z);
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }
}

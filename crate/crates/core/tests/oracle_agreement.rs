mod common;

use std::collections::HashSet;

use strong_envelope::oracle::{
    count_stopping_times, envelope_by_value_iteration, obstacle_operator, root_value_by_enumeration,
    StoppingTimeEnumeration,
};
use strong_envelope::sampling::random_process;
use strong_envelope::{direct_recursion, strong_envelope, Schedule};

#[test]
fn oracles_agree_with_engine_on_small_trees() {
    for seed in 0..1000 {
        let inst = common::small_problem(seed, 12);
        assert!(inst.tree.obstacle_node_count() <= 12);
        let res = strong_envelope(&inst, &Schedule::default()).unwrap();
        let best = root_value_by_enumeration(&inst, 1 << 12).unwrap();
        assert!((best - res.envelope[0]).abs() <= 1e-12, "seed {seed}: {best} vs {}", res.envelope[0]);
        let start = inst.weighted_obstacle_max().max(0.0) + 1.0;
        let vi = envelope_by_value_iteration(&inst, start, 0.0).unwrap();
        assert!(vi.max_abs_diff(&res.envelope) <= 1e-11, "seed {seed}");
    }
}

#[test]
fn enumeration_is_exhaustive_and_duplicate_free() {
    for seed in 0..200 {
        let inst = common::small_problem(seed, 10);
        let tree = &inst.tree;
        let rules: Vec<_> = StoppingTimeEnumeration::new(tree, 1 << 12).unwrap().collect();
        let all = (0..tree.len()).map(|n| !tree.is_cemetery(n)).collect::<Vec<_>>();
        assert_eq!(rules.len() as u128, count_stopping_times(tree, &all));
        let distinct: HashSet<_> = rules.iter().map(|r| r.stop_nodes(tree)).collect();
        assert_eq!(distinct.len(), rules.len(), "seed {seed}");
        assert!(rules.iter().all(|r| r.stop_nodes(tree).iter().map(|&n| tree.path_prob(n)).sum::<f64>() > 0.999));
    }
}

#[test]
fn obstacle_operator_is_monotone() {
    for seed in 0..200 {
        let inst = common::problem(seed, 5, 3);
        let mut rng = common::rng(seed + 77);
        let y = random_process(&inst.tree, &mut rng, -2.0, 2.0);
        let bump = random_process(&inst.tree, &mut rng, 0.0, 1.0);
        let y2 = y.zip_with(&bump, |a, b| a + b);
        let (ty, ty2) = (obstacle_operator(&inst, &y), obstacle_operator(&inst, &y2));
        assert!(ty.values().iter().zip(ty2.values()).all(|(a, b)| a <= b), "seed {seed}");
    }
}

#[test]
fn envelope_is_a_fixed_point() {
    for seed in 0..100 {
        let inst = common::problem(seed, 6, 3);
        let u = direct_recursion(&inst);
        assert_eq!(obstacle_operator(&inst, &u), u);
    }
}

mod common;

use proptest::prelude::*;

use strong_envelope::instance::{fixture_f1, fixture_f2, fixture_one_step_binary};
use strong_envelope::sampling::random_process;
use strong_envelope::{
    direct_recursion, doob_meyer, is_supermartingale, penalized_envelope, penalized_step, strong_envelope,
    BetaSchedule, ExactProblem, Problem, Process, Rational, Schedule,
};

const BETAS: [f64; 9] = [1.0, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8];

#[test]
fn penalized_envelopes_increase_with_beta() {
    for seed in 0..100 {
        let inst = common::problem(seed, 6, 3);
        let mut prev = penalized_envelope(&inst, BETAS[0]).unwrap();
        assert!(is_supermartingale(&inst.tree, &prev, 1e-12).unwrap().holds);
        assert!(prev.values().iter().all(|v| *v >= 0.0));
        for &beta in &BETAS[1..] {
            let cur = penalized_envelope(&inst, beta).unwrap();
            for n in 0..inst.tree.len() {
                assert!(cur[n] >= prev[n] - 1e-12, "seed {seed}, beta {beta}, node {n}");
            }
            prev = cur;
        }
    }
}

#[test]
fn penalized_limit_matches_direct_recursion() {
    for seed in 0..60 {
        let inst = common::problem(seed, 8, 2);
        let exact = direct_recursion(&inst);
        let gaps: Vec<f64> =
            BETAS.iter().map(|&b| penalized_envelope(&inst, b).unwrap().max_abs_diff(&exact)).collect();
        for w in gaps.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "seed {seed}: gaps {gaps:?}");
        }
        let scale = 1.0 + inst.obstacle_scale();
        assert!(gaps[8] < 1e-6 * scale, "seed {seed}: final gap {}", gaps[8]);
    }
}

#[test]
fn envelope_is_minimal() {
    for seed in 0..100 {
        let inst = common::problem(seed, 6, 3);
        let u = direct_recursion(&inst);
        let mut rng = common::rng(seed + 50);
        let noise = random_process(&inst.tree, &mut rng, 0.0, 1.0);
        let lifted = inst.with_obstacle(inst.obstacle.zip_with(&noise, |x, e| x + e)).unwrap();
        let s = direct_recursion(&lifted);
        assert!(is_supermartingale(&inst.tree, &s, 1e-12).unwrap().holds);
        for n in 0..inst.tree.len() {
            assert!(s[n] >= u[n], "seed {seed}, node {n}");
        }
    }
}

#[test]
fn envelope_result_invariants() {
    for seed in 0..100 {
        let inst = common::problem(seed, 6, 3);
        let res = strong_envelope(&inst, &Schedule::default()).unwrap();
        let tree = &inst.tree;
        let (u, m, a) = (&res.envelope, &res.martingale, &res.compensator);
        assert_eq!(a[0], 0.0);
        for n in 0..tree.len() {
            assert!((u[n] - (m[n] - a[n])).abs() <= 1e-12 * (1.0 + u[n].abs()));
            if let Some(p) = tree.parent(n) {
                assert!(a[n] >= a[p]);
                let first = tree.children(p)[0];
                assert_eq!(a[n], a[first], "A not predictable at node {n}");
            }
        }
        let neg = m.map(|v| -v);
        assert!(is_supermartingale(tree, m, 1e-10).unwrap().holds);
        assert!(is_supermartingale(tree, &neg, 1e-10).unwrap().holds);
        assert!(res.domination_violation <= 1e-6);
        let sweeps = &res.sweeps;
        assert!(sweeps.windows(2).all(|w| w[1].sup_gap <= w[0].sup_gap + 1e-12));
    }
}

fn shifted(inst: &Problem, shift: f64) -> Problem {
    inst.with_obstacle(inst.obstacle.add_const(-shift)).unwrap()
}

#[test]
fn envelopes_increase_along_increasing_obstacles() {
    for seed in 0..100 {
        let inst = common::problem(seed, 6, 3);
        let target = direct_recursion(&inst);

        let mut prev = direct_recursion(&shifted(&inst, 1.0));
        for n in 2..=64usize {
            let cur = direct_recursion(&shifted(&inst, 1.0 / n as f64));
            assert!(cur.values().iter().zip(prev.values()).all(|(c, p)| c >= p));
            prev = cur;
        }
        assert!(prev.max_abs_diff(&target) <= 1.0 / 64.0 + 1e-10);

        // truncations min(X, c) with c increasing to sup X
        let top = inst.obstacle_scale();
        let levels: Vec<f64> = (0..=8).map(|i| -1.0 + (top + 1.0) * i as f64 / 8.0).collect();
        let mut prev: Option<Process> = None;
        for c in levels {
            let cur = direct_recursion(&inst.with_obstacle(inst.obstacle.map(|x| x.min(c))).unwrap());
            if let Some(p) = &prev {
                assert!(cur.values().iter().zip(p.values()).all(|(c, p)| c >= p));
            }
            prev = Some(cur);
        }
        assert_eq!(prev.unwrap(), target);
    }
}

#[test]
fn fixtures_in_exact_arithmetic() {
    let r = |n: i64, d: i64| Rational::new(n, d);
    let f1: ExactProblem = fixture_f1();
    let u = direct_recursion(&f1);
    assert_eq!(u.values(), &[r(3, 1), r(3, 1), r(2, 1), r(0, 1)]);
    let dm = doob_meyer(&f1.tree, &u, Rational::from_integer(0)).unwrap();
    assert_eq!(dm.compensator.values(), &[r(0, 1), r(0, 1), r(1, 1), r(3, 1)]);
    assert_eq!(dm.martingale.values(), &[r(3, 1); 4]);

    let f2: ExactProblem = fixture_f2();
    assert!(direct_recursion(&f2).values().iter().all(|v| *v == r(0, 1)));

    let b: ExactProblem = fixture_one_step_binary();
    assert_eq!(direct_recursion(&b)[0], r(1, 1));

    // a short schedule stays within i64 rationals; it cannot reach tol_dom
    let schedule = BetaSchedule { beta_max: Rational::from_integer(1000), ..BetaSchedule::default() };
    assert!(matches!(strong_envelope(&f1, &schedule), Err(strong_envelope::Error::NonConvergence { .. })));
    let schedule = BetaSchedule { tol_dom: r(1, 100), ..schedule };
    let res = strong_envelope(&f1, &schedule).unwrap();
    assert_eq!(res.envelope, u);
    assert_eq!(res.sweeps[0].sup_gap, r(1, 1));
}

proptest! {
    #[test]
    fn penalized_step_is_monotone_and_lipschitz(
        x in -10.0..10.0f64,
        m in -10.0..10.0f64,
        c in 0.0..1e4f64,
        dx in 0.0..5.0f64,
        dm in 0.0..5.0f64,
        dc in 0.0..1e3f64,
    ) {
        let y = penalized_step(x, m, c).unwrap();
        // solves y = c (x - y)^+ + m
        prop_assert!((y - (c * (x - y).max(0.0) + m)).abs() <= 1e-9 * (1.0 + c) * (1.0 + x.abs() + m.abs()));
        prop_assert!(penalized_step(x + dx, m, c).unwrap() >= y - 1e-12);
        prop_assert!(penalized_step(x, m, c + dc).unwrap() >= y - 1e-12);
        let ym = penalized_step(x, m + dm, c).unwrap();
        prop_assert!(ym >= y - 1e-12);
        prop_assert!(ym - y <= dm + 1e-12);
    }
}

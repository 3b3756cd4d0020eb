use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use strong_envelope::generate::{random_instance, RandomSpec};
use strong_envelope::suite::run_suite;
use strong_envelope::{Problem, Schedule};

fn random_problem(seed: u64) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = RandomSpec {
        levels: rng.gen_range(1..=5),
        max_branching: rng.gen_range(1..=3),
        obstacle_low: -2.0,
        obstacle_high: 3.0,
        ..RandomSpec::default()
    };
    random_instance(&mut rng, &spec).unwrap()
}

#[test]
fn full_suite_passes_on_random_instances() {
    for seed in 0..60 {
        let inst = random_problem(seed);
        let (_, reports) = run_suite(&inst, Schedule::default(), seed..seed + 2, 5).unwrap();
        for r in &reports {
            assert!(r.passed, "seed {seed}: {r}");
        }
    }
}

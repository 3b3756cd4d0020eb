#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use strong_envelope::generate::{random_instance, RandomSpec};
use strong_envelope::Problem;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random instance with `1..=max_levels` levels and `1..=max_branching`
/// children per node.
pub fn problem(seed: u64, max_levels: usize, max_branching: usize) -> Problem {
    let mut rng = rng(seed);
    let spec = RandomSpec {
        levels: rng.gen_range(1..=max_levels),
        max_branching: rng.gen_range(1..=max_branching),
        obstacle_low: -1.0,
        obstacle_high: 2.0,
        ..RandomSpec::default()
    };
    random_instance(&mut rng, &spec).unwrap()
}

pub fn small_problem(seed: u64, max_nodes: usize) -> Problem {
    let mut rng = rng(seed);
    let spec = RandomSpec {
        levels: rng.gen_range(1..=6),
        max_branching: 3,
        max_obstacle_nodes: Some(max_nodes),
        ..RandomSpec::default()
    };
    random_instance(&mut rng, &spec).unwrap()
}

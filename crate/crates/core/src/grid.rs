//! Weighted time grids.
//!
//! A grid with `n` weights describes the obstacle-carrying levels
//! `0..n` and an appended cemetery level `n`. `times` has `n + 1` entries:
//! the last one is the cemetery time, which fixes the length of the final
//! step. A level is obstacle-active iff its weight is positive.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid<T> {
    times: Vec<T>,
    weights: Vec<T>,
}

impl<T: Scalar> TimeGrid<T> {
    pub fn new(times: Vec<T>, weights: Vec<T>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidGrid("at least one non-cemetery level is required".into()));
        }
        if times.len() != weights.len() + 1 {
            return Err(Error::InvalidGrid(format!(
                "expected {} times (including the cemetery time), got {}",
                weights.len() + 1,
                times.len()
            )));
        }
        if let Some(k) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "times not strictly increasing at index {}",
                k + 1
            )));
        }
        if let Some(k) = weights.iter().position(|w| *w < T::zero()) {
            return Err(Error::InvalidGrid(format!("negative weight at level {k}")));
        }
        if !weights.iter().any(|w| *w > T::zero()) {
            return Err(Error::InvalidGrid("all weights are zero".into()));
        }
        Ok(Self { times, weights })
    }

    /// Unit steps starting at 0 with the given weights.
    pub fn uniform(weights: Vec<T>) -> Result<Self> {
        let times = (0..=weights.len()).map(|k| T::from_usize(k).expect("level fits in T")).collect();
        Self::new(times, weights)
    }

    /// Unit steps, unit weights on `levels` obstacle levels.
    pub fn unit(levels: usize) -> Result<Self> {
        Self::uniform(vec![T::one(); levels])
    }

    /// Index of the cemetery level.
    pub fn cemetery(&self) -> usize {
        self.weights.len()
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Weight of level `k`; the cemetery carries none.
    pub fn weight(&self, k: usize) -> T {
        self.weights.get(k).copied().unwrap_or_else(T::zero)
    }

    /// `t_{k+1} - t_k`; zero at the cemetery.
    pub fn step(&self, k: usize) -> T {
        if k < self.weights.len() {
            self.times[k + 1] - self.times[k]
        } else {
            T::zero()
        }
    }

    pub fn is_weighted(&self, k: usize) -> bool {
        self.weight(k) > T::zero()
    }

    /// Levels where a stopping rule may stop: weighted levels and the cemetery.
    pub fn is_stoppable(&self, k: usize) -> bool {
        k == self.cemetery() || self.is_weighted(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_grid_shape() {
        let g = TimeGrid::<f64>::unit(3).unwrap();
        assert_eq!(g.cemetery(), 3);
        assert_eq!(g.times(), &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(g.step(2), 1.0);
        assert_eq!(g.step(3), 0.0);
        assert_eq!(g.weight(3), 0.0);
        assert!(g.is_stoppable(3));
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(TimeGrid::<f64>::new(vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(TimeGrid::<f64>::new(vec![0.0, 0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(TimeGrid::<f64>::new(vec![0.0, 1.0, 2.0], vec![1.0, -1.0]).is_err());
        assert!(TimeGrid::<f64>::uniform(vec![0.0, 0.0]).is_err());
        assert!(TimeGrid::<f64>::uniform(vec![]).is_err());
    }

    #[test]
    fn zero_weight_levels_are_not_stoppable() {
        let g = TimeGrid::<f64>::uniform(vec![1.0, 0.0, 1.0]).unwrap();
        assert!(g.is_weighted(0));
        assert!(!g.is_weighted(1));
        assert!(!g.is_stoppable(1));
        assert!(g.is_stoppable(3));
    }
}

//! Uniform time grids and seeded Brownian path bundles.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub horizon: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) || steps == 0 {
            return Err(Error::InvalidParam(format!(
                "time grid needs T > 0 and M >= 1, got T = {horizon}, M = {steps}"
            )));
        }
        Ok(TimeGrid { horizon, steps })
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// `t_i = i T / M`, with `t_M = T` exactly.
    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        if i == self.steps {
            self.horizon
        } else {
            i as f64 * self.horizon / self.steps as f64
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.steps).map(|i| self.node(i)).collect()
    }

    pub fn refined(&self, factor: usize) -> TimeGrid {
        TimeGrid { horizon: self.horizon, steps: self.steps * factor }
    }
}

/// Maps a 64-bit word to a uniform in `(0, 1)` and then to a standard normal.
#[inline]
fn normal_from_bits(bits: u64, std_normal: &Normal) -> f64 {
    let u = ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
    std_normal.inverse_cdf(u)
}

/// Brownian increments for `n_paths` paths on a grid, stored step-major:
/// the increment of path `p`, step `i`, component `k` sits at
/// `(i * n_paths + p) * d + k`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathBundle {
    pub seed: u64,
    pub n_paths: usize,
    pub d: usize,
    pub grid: TimeGrid,
    increments: Vec<f64>,
}

impl PathBundle {
    /// Path `p` draws from the ChaCha8 stream `p` of the key `seed`, consuming
    /// one 64-bit word per (step, component) in order. A path's increments
    /// therefore depend only on `(seed, p, step, component)`.
    pub fn generate(seed: u64, n_paths: usize, grid: TimeGrid, d: usize) -> Result<Self> {
        if n_paths == 0 || d == 0 {
            return Err(Error::InvalidParam("path bundle needs N >= 1 and d >= 1".into()));
        }
        let m = grid.steps;
        let sd = grid.dt().sqrt();
        let std_normal = Normal::standard();
        let mut path_major = vec![0.0; n_paths * m * d];
        path_major.par_chunks_mut(m * d).enumerate().for_each(|(p, chunk)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(p as u64);
            for v in chunk.iter_mut() {
                *v = sd * normal_from_bits(rng.next_u64(), &std_normal);
            }
        });
        let mut increments = vec![0.0; n_paths * m * d];
        increments.par_chunks_mut(n_paths * d).enumerate().for_each(|(i, row)| {
            for p in 0..n_paths {
                let src = (p * m + i) * d;
                row[p * d..(p + 1) * d].copy_from_slice(&path_major[src..src + d]);
            }
        });
        Ok(PathBundle { seed, n_paths, d, grid, increments })
    }

    /// Increments of step `i` for all paths, `n_paths * d` values.
    #[inline]
    pub fn step(&self, i: usize) -> &[f64] {
        let w = self.n_paths * self.d;
        &self.increments[i * w..(i + 1) * w]
    }

    #[inline]
    pub fn increment(&self, p: usize, i: usize, k: usize) -> f64 {
        self.increments[(i * self.n_paths + p) * self.d + k]
    }

    /// `B_T` per path, `n_paths * d` values.
    pub fn terminal(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.n_paths * self.d];
        for i in 0..self.grid.steps {
            for (acc, inc) in b.iter_mut().zip(self.step(i)) {
                *acc += inc;
            }
        }
        b
    }

    /// `B_{t_i}` per path.
    pub fn brownian_at(&self, i: usize) -> Vec<f64> {
        let mut b = vec![0.0; self.n_paths * self.d];
        for j in 0..i {
            for (acc, inc) in b.iter_mut().zip(self.step(j)) {
                *acc += inc;
            }
        }
        b
    }

    /// Sums consecutive groups of `factor` increments, giving the same paths
    /// on a grid with `M / factor` steps.
    pub fn coarsen(&self, factor: usize) -> Result<PathBundle> {
        if factor == 0 || self.grid.steps % factor != 0 {
            return Err(Error::GridMismatch(format!(
                "cannot coarsen {} steps by a factor {factor}",
                self.grid.steps
            )));
        }
        let grid = TimeGrid::new(self.grid.horizon, self.grid.steps / factor)?;
        let w = self.n_paths * self.d;
        let mut increments = vec![0.0; grid.steps * w];
        for i in 0..grid.steps {
            let row = &mut increments[i * w..(i + 1) * w];
            for j in 0..factor {
                for (acc, inc) in row.iter_mut().zip(self.step(i * factor + j)) {
                    *acc += inc;
                }
            }
        }
        Ok(PathBundle { seed: self.seed, n_paths: self.n_paths, d: self.d, grid, increments })
    }

    /// A bundle holding only the listed paths, in the given order.
    pub fn select_paths(&self, paths: &[usize]) -> PathBundle {
        let n = paths.len();
        let mut increments = vec![0.0; self.grid.steps * n * self.d];
        for i in 0..self.grid.steps {
            for (q, &p) in paths.iter().enumerate() {
                for k in 0..self.d {
                    increments[(i * n + q) * self.d + k] = self.increment(p, i, k);
                }
            }
        }
        PathBundle { seed: self.seed, n_paths: n, d: self.d, grid: self.grid, increments }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_nodes() {
        let g = TimeGrid::new(1.0, 3).unwrap();
        assert_eq!(g.node(0), 0.0);
        assert_eq!(g.node(3), 1.0);
        assert!((g.dt() - 1.0 / 3.0).abs() < 1e-16);
        assert!(TimeGrid::new(0.0, 3).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
    }

    #[test]
    fn regeneration_is_bit_identical() {
        let g = TimeGrid::new(1.0, 20).unwrap();
        let a = PathBundle::generate(42, 500, g, 2).unwrap();
        let b = PathBundle::generate(42, 500, g, 2).unwrap();
        assert_eq!(a, b);
        let c = PathBundle::generate(43, 500, g, 2).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn path_increments_do_not_depend_on_bundle_size() {
        let g = TimeGrid::new(1.0, 10).unwrap();
        let small = PathBundle::generate(7, 3, g, 2).unwrap();
        let big = PathBundle::generate(7, 1000, g, 2).unwrap();
        let dropped_first = big.select_paths(&[1, 2]);
        for i in 0..10 {
            for k in 0..2 {
                assert_eq!(small.increment(1, i, k), big.increment(1, i, k));
                assert_eq!(small.increment(2, i, k), dropped_first.increment(1, i, k));
            }
        }
    }

    #[test]
    fn one_step_moments() {
        let g = TimeGrid::new(1.0, 1).unwrap();
        let n = 100_000;
        let b = PathBundle::generate(1, n, g, 1).unwrap();
        let xs = b.step(0);
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() <= 4.0 * (1.0 / n as f64).sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() <= 0.02, "var {var}");
    }

    #[test]
    fn coarsening_preserves_terminal_values() {
        let g = TimeGrid::new(2.0, 12).unwrap();
        let b = PathBundle::generate(3, 50, g, 1).unwrap();
        let c = b.coarsen(3).unwrap();
        assert_eq!(c.grid.steps, 4);
        for (x, y) in b.terminal().iter().zip(c.terminal()) {
            assert!((x - y).abs() < 1e-14);
        }
        assert!(b.coarsen(5).is_err());
    }
}

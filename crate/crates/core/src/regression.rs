//! Least-squares conditional expectations on polynomial bases of the
//! Brownian state.
//!
//! Gram matrices and cross moments are accumulated over fixed row chunks and
//! summed pairwise in chunk order, so results do not depend on the number of
//! worker threads.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const CHUNK: usize = 1024;
const EIG_REL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    /// Monomials of the standardised state.
    PolynomialInState,
    /// Probabilists' Hermite polynomials of `B_t / √t`.
    PolynomialInBrownian,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionBasis {
    pub kind: BasisKind,
    pub degree: usize,
}

impl Default for RegressionBasis {
    fn default() -> Self {
        RegressionBasis { kind: BasisKind::PolynomialInState, degree: 3 }
    }
}

impl RegressionBasis {
    pub fn state(degree: usize) -> Self {
        RegressionBasis { kind: BasisKind::PolynomialInState, degree }
    }

    pub fn brownian(degree: usize) -> Self {
        RegressionBasis { kind: BasisKind::PolynomialInBrownian, degree }
    }
}

/// Multi-indices of total degree `<= degree` in `d` variables, by degree.
fn multi_indices(d: usize, degree: usize) -> Vec<Vec<usize>> {
    fn rec(d: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == d - 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for a in (0..=left).rev() {
            cur.push(a);
            rec(d, left - a, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    for total in 0..=degree {
        rec(d, total, &mut Vec::with_capacity(d), &mut out);
    }
    out
}

fn hermite(n: usize, x: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut a, mut b) = (1.0, x);
            for k in 1..n {
                let c = x * b - k as f64 * a;
                a = b;
                b = c;
            }
            b
        }
    }
}

fn pairwise_sum(mut parts: Vec<Vec<f64>>) -> Vec<f64> {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
            }
            next.push(a);
        }
        parts = next;
    }
    parts.pop().unwrap_or_default()
}

/// Least-squares projector onto the span of a basis evaluated at one time step.
#[derive(Clone, Debug)]
pub struct Projector {
    n: usize,
    p: usize,
    design: Vec<f64>,
    pinv: DMatrix<f64>,
    pub degree_used: usize,
    pub rank: usize,
}

impl Projector {
    /// Builds the projector, lowering the degree until the design has full
    /// column rank. `state` holds `n * d` values, path-major.
    pub fn new(state: &[f64], d: usize, basis: RegressionBasis, t: f64) -> Result<Self> {
        Self::build(state, d, basis, t, true)
    }

    /// Same as [`Projector::new`] but returns `RankDeficient` instead of
    /// lowering the degree.
    pub fn new_strict(state: &[f64], d: usize, basis: RegressionBasis, t: f64) -> Result<Self> {
        Self::build(state, d, basis, t, false)
    }

    fn build(state: &[f64], d: usize, basis: RegressionBasis, t: f64, fallback: bool) -> Result<Self> {
        if d == 0 || state.len() % d != 0 {
            return Err(Error::InvalidParam("state length must be a multiple of d".into()));
        }
        let n = state.len() / d;
        if n == 0 {
            return Err(Error::RankDeficient { rank: 0, needed: 1 });
        }
        let mut degree = basis.degree;
        loop {
            match Self::try_degree(state, n, d, basis.kind, degree, t) {
                Ok(p) => return Ok(p),
                Err(e) => {
                    if !fallback || degree == 0 {
                        return Err(e);
                    }
                    degree -= 1;
                }
            }
        }
    }

    fn try_degree(state: &[f64], n: usize, d: usize, kind: BasisKind, degree: usize, t: f64) -> Result<Self> {
        let idx = multi_indices(d, degree);
        let p = idx.len();
        // standardisation of each state component
        let (shift, scale): (Vec<f64>, Vec<f64>) = match kind {
            BasisKind::PolynomialInState => (0..d)
                .map(|k| {
                    let mean = (0..n).map(|i| state[i * d + k]).sum::<f64>() / n as f64;
                    let var = (0..n).map(|i| (state[i * d + k] - mean).powi(2)).sum::<f64>() / n as f64;
                    let sd = var.sqrt();
                    (mean, if sd > 0.0 { sd } else { 1.0 })
                })
                .unzip(),
            BasisKind::PolynomialInBrownian => {
                let s = if t > 0.0 { t.sqrt() } else { 1.0 };
                (vec![0.0; d], vec![s; d])
            }
        };
        let mut design = vec![0.0; n * p];
        design.par_chunks_mut(p).enumerate().for_each(|(i, row)| {
            let mut powers = vec![vec![0.0; degree + 1]; d];
            for k in 0..d {
                let x = (state[i * d + k] - shift[k]) / scale[k];
                for (e, slot) in powers[k].iter_mut().enumerate() {
                    *slot = match kind {
                        BasisKind::PolynomialInState => x.powi(e as i32),
                        BasisKind::PolynomialInBrownian => hermite(e, x),
                    };
                }
            }
            for (j, mi) in idx.iter().enumerate() {
                row[j] = mi.iter().enumerate().map(|(k, &e)| powers[k][e]).product();
            }
        });
        if n < p {
            return Err(Error::RankDeficient { rank: n, needed: p });
        }
        let parts: Vec<Vec<f64>> = design
            .par_chunks(CHUNK * p)
            .map(|rows| {
                let mut g = vec![0.0; p * p];
                for row in rows.chunks(p) {
                    for a in 0..p {
                        let ra = row[a];
                        for b in a..p {
                            g[a * p + b] += ra * row[b];
                        }
                    }
                }
                g
            })
            .collect();
        let g = pairwise_sum(parts);
        let gram = DMatrix::from_fn(p, p, |a, b| if a <= b { g[a * p + b] } else { g[b * p + a] });
        let eig = SymmetricEigen::new(gram);
        let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let thr = EIG_REL_TOL * lmax * p as f64;
        let rank = eig.eigenvalues.iter().filter(|&&l| l > thr).count();
        if rank < p || lmax <= 0.0 {
            return Err(Error::RankDeficient { rank, needed: p });
        }
        let inv = DVector::from_iterator(p, eig.eigenvalues.iter().map(|&l| 1.0 / l));
        let q = &eig.eigenvectors;
        let pinv = q * DMatrix::from_diagonal(&inv) * q.transpose();
        Ok(Projector { n, p, design, pinv, degree_used: degree, rank })
    }

    pub fn n_paths(&self) -> usize {
        self.n
    }

    /// Fitted values of `values` on the basis span.
    pub fn project(&self, values: &[f64]) -> Vec<f64> {
        assert_eq!(values.len(), self.n, "value count must match the design");
        let p = self.p;
        let parts: Vec<Vec<f64>> = self
            .design
            .par_chunks(CHUNK * p)
            .zip(values.par_chunks(CHUNK))
            .map(|(rows, vals)| {
                let mut acc = vec![0.0; p];
                for (row, v) in rows.chunks(p).zip(vals) {
                    for a in 0..p {
                        acc[a] += row[a] * v;
                    }
                }
                acc
            })
            .collect();
        let xtv = DVector::from_vec(pairwise_sum(parts));
        let coef = &self.pinv * xtv;
        let coef = coef.as_slice();
        self.design
            .par_chunks(p)
            .map(|row| row.iter().zip(coef).map(|(x, c)| x * c).sum())
            .collect()
    }
}

/// Fitted conditional expectation with the degree actually used.
#[derive(Clone, Debug, PartialEq)]
pub struct Fitted {
    pub values: Vec<f64>,
    pub degree_used: usize,
}

/// OLS regression of `values` on `basis(state)`.
pub fn conditional_expectation(values: &[f64], state: &[f64], d: usize, basis: RegressionBasis, t: f64) -> Result<Fitted> {
    let proj = Projector::new(state, d, basis, t)?;
    Ok(Fitted { values: proj.project(values), degree_used: proj.degree_used })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gaussian_state(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-3.0..3.0)).collect()
    }

    #[test]
    fn multi_index_counts() {
        assert_eq!(multi_indices(1, 3).len(), 4);
        assert_eq!(multi_indices(2, 2).len(), 6);
        assert_eq!(multi_indices(3, 3).len(), 20);
        assert_eq!(multi_indices(2, 1), vec![vec![0, 0], vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn constants_and_in_span_targets() {
        let x = gaussian_state(1000, 1);
        let c = conditional_expectation(&vec![7.0; 1000], &x, 1, RegressionBasis::state(3), 1.0).unwrap();
        assert!(c.values.iter().all(|v| (v - 7.0).abs() < 1e-10));
        for basis in [RegressionBasis::state(2), RegressionBasis::brownian(3)] {
            let f = conditional_expectation(&x, &x, 1, basis, 0.5).unwrap();
            for (a, b) in f.values.iter().zip(&x) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn degenerate_state_falls_back_to_constants() {
        let x = vec![0.0; 200];
        let v: Vec<f64> = (0..200).map(|i| i as f64).collect();
        let f = conditional_expectation(&v, &x, 1, RegressionBasis::state(3), 0.0).unwrap();
        assert_eq!(f.degree_used, 0);
        assert!(f.values.iter().all(|y| (y - 99.5).abs() < 1e-10));
        assert!(matches!(
            Projector::new_strict(&x, 1, RegressionBasis::state(3), 0.0),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn affine_rescaling_leaves_fit_unchanged() {
        let x = gaussian_state(5000, 2);
        let v: Vec<f64> = x.iter().map(|s| s.sin() + 0.1 * s * s).collect();
        let scaled: Vec<f64> = x.iter().map(|s| 3.0 * s - 1.5).collect();
        let a = conditional_expectation(&v, &x, 1, RegressionBasis::state(3), 1.0).unwrap();
        let b = conditional_expectation(&v, &scaled, 1, RegressionBasis::state(3), 1.0).unwrap();
        for (p, q) in a.values.iter().zip(&b.values) {
            assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn quadratic_plus_noise_is_recovered() {
        let n = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = gaussian_state(n, 3);
        let sigma = 0.5;
        let v: Vec<f64> = x.iter().map(|s| s * s + sigma * rng.random_range(-3f64.sqrt()..3f64.sqrt())).collect();
        let f = conditional_expectation(&v, &x, 1, RegressionBasis::state(2), 1.0).unwrap();
        // coefficient standard error of a 3-parameter fit is about sigma * sqrt(3/n)
        let se = sigma * (3.0 / n as f64).sqrt() * 10.0;
        for (fit, s) in f.values.iter().zip(&x).step_by(97) {
            assert!((fit - s * s).abs() <= 3.0 * se, "{fit} vs {}", s * s);
        }
    }

    #[test]
    fn two_dimensional_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 2000;
        let x: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let v: Vec<f64> = (0..n).map(|i| x[2 * i] * x[2 * i + 1] + x[2 * i + 1]).collect();
        let f = conditional_expectation(&v, &x, 2, RegressionBasis::brownian(2), 1.0).unwrap();
        for (a, b) in f.values.iter().zip(&v) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

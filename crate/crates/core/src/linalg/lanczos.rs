//! Lanczos with full reorthogonalization for the spectral radius of a
//! weighted-symmetric action. Used when the top of the spectrum is too
//! clustered for plain power iteration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::eigen::DenseSymmetricMatrix;
use super::sparse::wdot;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    pub tol: f64,
    pub max_steps: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_steps: 300,
            seed: 11,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosResult {
    /// Largest |Ritz value|.
    pub spectral_radius: f64,
    pub largest: f64,
    pub smallest: f64,
    pub steps: usize,
}

fn ritz_extremes(alpha: &[f64], beta: &[f64]) -> Result<(f64, f64)> {
    let m = alpha.len();
    let t = DenseSymmetricMatrix::from_fn(m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    })?;
    let ev = t.eigenvalues()?;
    Ok((ev[0], ev[m - 1]))
}

pub fn lanczos_extremes<F>(action: F, dim: usize, weights: &[f64], opts: &LanczosOptions) -> Result<LanczosResult>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    if dim == 0 || weights.len() != dim {
        return Err(Error::Contract("lanczos: weights must match dim".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut q: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let n0 = wdot(weights, &q, &q).sqrt();
    q.iter_mut().for_each(|v| *v /= n0);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    let mut prev = (f64::NAN, f64::NAN);
    let steps = opts.max_steps.min(dim);
    for step in 1..=steps {
        let mut w = action(&q);
        let a = wdot(weights, &w, &q);
        alpha.push(a);
        basis.push(q);
        // two passes of Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for b in &basis {
                let c = wdot(weights, &w, b);
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let (lo, hi) = ritz_extremes(&alpha, &beta)?;
        let scale = lo.abs().max(hi.abs());
        let b = wdot(weights, &w, &w).sqrt();
        let converged = (hi - prev.1).abs() <= opts.tol * scale && (lo - prev.0).abs() <= opts.tol * scale;
        if converged || b <= 1e-14 * scale.max(f64::MIN_POSITIVE) || step == dim {
            return Ok(LanczosResult {
                spectral_radius: scale,
                largest: hi,
                smallest: lo,
                steps: step,
            });
        }
        prev = (lo, hi);
        beta.push(b);
        q = w.into_iter().map(|x| x / b).collect();
    }
    Err(Error::Convergence {
        iterations: steps,
        residual: f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clustered_top_of_spectrum() {
        let n = 400;
        let d: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + 1e-3 * i as f64)).collect();
        let act = |x: &[f64]| x.iter().zip(&d).map(|(a, b)| a * b).collect::<Vec<_>>();
        let r = lanczos_extremes(act, n, &vec![1.0; n], &LanczosOptions::default()).unwrap();
        assert!((r.spectral_radius - 1.0).abs() < 1e-9);
    }

    #[test]
    fn weighted_symmetry() {
        // A = W⁻¹ S with S symmetric is self-adjoint in the W inner product
        let w = [1.0, 2.0, 4.0];
        let s = [[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 5.0]];
        let act = |x: &[f64]| (0..3).map(|i| (0..3).map(|j| s[i][j] * x[j]).sum::<f64>() / w[i]).collect::<Vec<_>>();
        let r = lanczos_extremes(act, 3, &w, &LanczosOptions::default()).unwrap();
        let m = DenseSymmetricMatrix::from_fn(3, |i, j| s[i][j] / (w[i] * w[j]).sqrt()).unwrap();
        let ev = m.eigenvalues().unwrap();
        assert!((r.largest - ev[2]).abs() < 1e-12 && (r.smallest - ev[0]).abs() < 1e-12);
    }
}

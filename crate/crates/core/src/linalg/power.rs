//! Power iteration for symmetric operators given only as an action.
//!
//! Symmetry is with respect to a diagonal weight (the lumped mass on a
//! grid); passing `None` means the Euclidean inner product.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sparse::wdot;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct PowerOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Relative bound on |(Ax, y) - (x, Ay)|.
    pub symmetry_tol: f64,
    pub symmetry_pairs: usize,
    pub seed: u64,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 5000,
            symmetry_tol: 1e-10,
            symmetry_pairs: 3,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PowerResult {
    /// Spectral radius estimate, i.e. the operator norm for a symmetric action.
    pub value: f64,
    /// Signed Rayleigh quotient of the returned vector.
    pub rayleigh: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
}

fn weighted(weights: Option<&[f64]>, a: &[f64], b: &[f64]) -> f64 {
    match weights {
        Some(w) => wdot(w, a, b),
        None => a.iter().zip(b).map(|(x, y)| x * y).sum(),
    }
}

fn random_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Checks `|(Ax, y) - (x, Ay)| <= tol * |Ax| |y|` on random pairs and
/// returns the worst relative defect observed.
pub fn symmetry_defect<F>(action: &F, dim: usize, weights: Option<&[f64]>, pairs: usize, seed: u64) -> f64
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa5a5);
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let x = random_vec(&mut rng, dim);
        let y = random_vec(&mut rng, dim);
        let ax = action(&x);
        let ay = action(&y);
        let lhs = weighted(weights, &ax, &y);
        let rhs = weighted(weights, &x, &ay);
        let scale = (weighted(weights, &ax, &ax) * weighted(weights, &y, &y)).sqrt()
            + (weighted(weights, &x, &x) * weighted(weights, &ay, &ay)).sqrt();
        if scale > 0.0 {
            worst = worst.max((lhs - rhs).abs() / scale);
        }
    }
    worst
}

pub fn power_iteration_sym<F>(
    action: F,
    dim: usize,
    weights: Option<&[f64]>,
    opts: &PowerOptions,
) -> Result<PowerResult>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut out = top_k_sym(action, dim, weights, 1, opts)?;
    Ok(out.remove(0))
}

/// Largest-magnitude eigenpairs by deflated power iteration, ordered by
/// decreasing magnitude. Intended for `k <= 10`.
pub fn top_k_sym<F>(
    action: F,
    dim: usize,
    weights: Option<&[f64]>,
    k: usize,
    opts: &PowerOptions,
) -> Result<Vec<PowerResult>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    if dim == 0 || k == 0 || k > dim {
        return Err(Error::Contract(format!("top_k_sym: k = {k}, dim = {dim}")));
    }
    if let Some(w) = weights {
        if w.len() != dim || w.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::Contract("weights must be positive and match dim".into()));
        }
    }
    let defect = symmetry_defect(&action, dim, weights, opts.symmetry_pairs, opts.seed);
    if defect > opts.symmetry_tol {
        return Err(Error::Contract(format!(
            "action is not symmetric: relative defect {defect:e}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut found: Vec<PowerResult> = Vec::with_capacity(k);
    let deflate = |x: &mut Vec<f64>, found: &[PowerResult]| {
        for p in found {
            let c = weighted(weights, x, &p.vector);
            for (xi, vi) in x.iter_mut().zip(&p.vector) {
                *xi -= c * vi;
            }
        }
    };
    let normalize = |x: &mut Vec<f64>| -> f64 {
        let n = weighted(weights, x, x).sqrt();
        if n > 0.0 {
            for xi in x.iter_mut() {
                *xi /= n;
            }
        }
        n
    };

    for _ in 0..k {
        let mut x = random_vec(&mut rng, dim);
        deflate(&mut x, &found);
        normalize(&mut x);
        let mut prev = f64::NAN;
        let mut converged = None;
        let mut last_change = f64::INFINITY;
        for it in 1..=opts.max_iter {
            let mut y = action(&x);
            deflate(&mut y, &found);
            let est = normalize(&mut y);
            if est == 0.0 {
                // the (deflated) operator annihilates x: the remaining spectrum is zero
                converged = Some((0.0, it));
                break;
            }
            x = y;
            if prev.is_finite() {
                last_change = (est - prev).abs() / est;
                if last_change <= opts.tol {
                    converged = Some((est, it));
                    break;
                }
            }
            prev = est;
        }
        let Some((value, iterations)) = converged else {
            return Err(Error::Convergence {
                iterations: opts.max_iter,
                residual: last_change,
            });
        };
        let mut ax = action(&x);
        deflate(&mut ax, &found);
        let rayleigh = weighted(weights, &ax, &x);
        found.push(PowerResult {
            value,
            rayleigh,
            vector: x,
            iterations,
        });
    }
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigen::DenseSymmetricMatrix;

    fn dense_action(n: usize, a: Vec<f64>) -> impl Fn(&[f64]) -> Vec<f64> {
        move |x: &[f64]| (0..n).map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum()).collect()
    }

    #[test]
    fn diagonal_dominant() {
        let act = |x: &[f64]| vec![3.0 * x[0], x[1], 0.5 * x[2]];
        let r = power_iteration_sym(act, 3, None, &PowerOptions::default()).unwrap();
        assert!((r.value - 3.0).abs() < 1e-9);
    }

    #[test]
    fn swap_matrix() {
        let act = |x: &[f64]| vec![x[1], x[0]];
        let r = power_iteration_sym(act, 2, None, &PowerOptions::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn agrees_with_dense() {
        let n = 100;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = rng.random_range(-1.0..1.0);
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        // separate the top eigenvalue so the test runs quickly
        a[0] += 20.0;
        let ev = DenseSymmetricMatrix::from_row_major(n, &a).unwrap().eigenvalues().unwrap();
        let top = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let r = power_iteration_sym(dense_action(n, a), n, None, &PowerOptions::default()).unwrap();
        assert!((r.value - top).abs() <= 1e-8 * top);
    }

    #[test]
    fn deflation_recovers_top_three() {
        let d = [5.0, 4.0, 3.0, 1.0, 0.5, 0.1];
        let act = move |x: &[f64]| x.iter().zip(d).map(|(a, b)| a * b).collect::<Vec<_>>();
        let w = vec![2.0; 6];
        let r = top_k_sym(act, 6, Some(&w), 3, &PowerOptions::default()).unwrap();
        for (p, want) in r.iter().zip([5.0, 4.0, 3.0]) {
            assert!((p.value - want).abs() < 1e-7, "{} vs {want}", p.value);
        }
    }

    #[test]
    fn nonsymmetric_rejected() {
        let act = |x: &[f64]| vec![x[0] + x[1], x[1]];
        let e = power_iteration_sym(act, 2, None, &PowerOptions::default());
        assert!(matches!(e, Err(Error::Contract(_))));
    }
}

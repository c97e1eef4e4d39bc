//! Dense symmetric eigensolver: Householder reduction to tridiagonal form
//! followed by implicit-shift QL (the EISPACK tred2/tql2 pair).
//!
//! Storage is column-major so the inner loops of both stages run over
//! contiguous memory.

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 4096;
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymmetricMatrix {
    n: usize,
    data: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `k` (entries `k*n .. (k+1)*n`) pairs with `values[k]`.
    pub vectors: Vec<f64>,
    pub n: usize,
}

impl EigenDecomposition {
    pub fn vector(&self, k: usize) -> &[f64] {
        &self.vectors[k * self.n..(k + 1) * self.n]
    }
}

impl DenseSymmetricMatrix {
    pub fn zeros(n: usize) -> Result<Self> {
        if n > MAX_DIM {
            return Err(Error::Resource(format!(
                "dense dimension {n} exceeds {MAX_DIM}"
            )));
        }
        Ok(Self {
            n,
            data: vec![0.0; n * n],
        })
    }

    /// Builds from a row-major buffer. Asymmetry beyond `SYMMETRY_TOL`
    /// (relative to the largest entry) is a contract error; anything
    /// smaller is averaged away.
    pub fn from_row_major(n: usize, a: &[f64]) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::Contract(format!(
                "buffer of length {} is not {n}x{n}",
                a.len()
            )));
        }
        let mut m = Self::zeros(n)?;
        let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(f64::MIN_POSITIVE);
        for i in 0..n {
            for j in 0..=i {
                let (x, y) = (a[i * n + j], a[j * n + i]);
                if !x.is_finite() || !y.is_finite() {
                    return Err(Error::Numeric(format!("non-finite entry at ({i}, {j})")));
                }
                if (x - y).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::Contract(format!(
                        "matrix not symmetric at ({i}, {j}): {x:e} vs {y:e}"
                    )));
                }
                m.set(i, j, 0.5 * (x + y));
            }
        }
        Ok(m)
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = f(i, j);
            }
        }
        Self::from_row_major(n, &a)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.n + i]
    }

    /// Sets both (i, j) and (j, i).
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.n + i] = v;
        self.data[i * self.n + j] = v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = vec![0.0; n];
        for (j, &xj) in x.iter().enumerate() {
            let col = &self.data[j * n..(j + 1) * n];
            for (yi, cij) in y.iter_mut().zip(col) {
                *yi += cij * xj;
            }
        }
        y
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Full decomposition, eigenvalues ascending.
    pub fn eigen(&self) -> Result<EigenDecomposition> {
        let n = self.n;
        let mut v = self.data.clone();
        let mut d = vec![0.0; n];
        let mut e = vec![0.0; n];
        if n == 0 {
            return Ok(EigenDecomposition {
                values: d,
                vectors: v,
                n,
            });
        }
        tred2(n, &mut v, &mut d, &mut e, true);
        tql2(n, Some(&mut v), &mut d, &mut e)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
        let values = order.iter().map(|&k| d[k]).collect();
        let mut vectors = vec![0.0; n * n];
        for (dst, &src) in order.iter().enumerate() {
            vectors[dst * n..(dst + 1) * n].copy_from_slice(&v[src * n..(src + 1) * n]);
        }
        Ok(EigenDecomposition { values, vectors, n })
    }

    /// Eigenvalues only, ascending. Skips the accumulation of transforms.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let n = self.n;
        if n == 0 {
            return Ok(Vec::new());
        }
        let mut v = self.data.clone();
        let mut d = vec![0.0; n];
        let mut e = vec![0.0; n];
        tred2(n, &mut v, &mut d, &mut e, false);
        tql2(n, None, &mut d, &mut e)?;
        d.sort_by(f64::total_cmp);
        Ok(d)
    }
}

pub fn dense_eigen(mat: &DenseSymmetricMatrix) -> Result<Vec<f64>> {
    mat.eigenvalues()
}

#[inline(always)]
fn at(n: usize, i: usize, j: usize) -> usize {
    j * n + i
}

fn tred2(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64], accumulate: bool) {
    for j in 0..n {
        d[j] = v[at(n, n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[at(n, i - 1, j)];
                v[at(n, i, j)] = 0.0;
                v[at(n, j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[at(n, j, i)] = f;
                g = e[j] + v[at(n, j, j)] * f;
                let col = j * n;
                for k in j + 1..i {
                    let vkj = v[col + k];
                    g += vkj * d[k];
                    e[k] += vkj * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                let col = j * n;
                for k in j..i {
                    v[col + k] -= f * e[k] + g * d[k];
                }
                d[j] = v[at(n, i - 1, j)];
                v[at(n, i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    if !accumulate {
        for j in 0..n {
            d[j] = v[at(n, j, j)];
        }
        e[0] = 0.0;
        return;
    }

    for i in 0..n - 1 {
        v[at(n, n - 1, i)] = v[at(n, i, i)];
        v[at(n, i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            let next = (i + 1) * n;
            for k in 0..=i {
                d[k] = v[next + k] / h;
            }
            for j in 0..=i {
                let col = j * n;
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[next + k] * v[col + k];
                }
                for k in 0..=i {
                    v[col + k] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[at(n, k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[at(n, n - 1, j)];
        v[at(n, n - 1, j)] = 0.0;
    }
    v[at(n, n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

fn tql2(n: usize, mut v: Option<&mut [f64]>, d: &mut [f64], e: &mut [f64]) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;
    let max_sweeps = 60;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > max_sweeps {
                    return Err(Error::Numeric(format!(
                        "QL iteration did not converge for eigenvalue {l}"
                    )));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(v) = v.as_deref_mut() {
                        let (lo, hi) = v.split_at_mut((i + 1) * n);
                        let ci = &mut lo[i * n..];
                        let ci1 = &mut hi[..n];
                        for (a, b) in ci.iter_mut().zip(ci1.iter_mut()) {
                            let hk = *b;
                            *b = s * *a + c * hk;
                            *a = c * *a - s * hk;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(n: usize, seed: u64) -> DenseSymmetricMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let x: f64 = rng.random_range(-1.0..1.0);
                a[i * n + j] = x;
                a[j * n + i] = x;
            }
        }
        DenseSymmetricMatrix::from_row_major(n, &a).unwrap()
    }

    #[test]
    fn diagonal_sorted() {
        let m = DenseSymmetricMatrix::from_fn(4, |i, j| if i == j { [3.0, -1.0, 2.0, 0.5][i] } else { 0.0 })
            .unwrap();
        assert_eq!(m.eigenvalues().unwrap(), vec![-1.0, 0.5, 2.0, 3.0]);
    }

    #[test]
    fn two_by_two() {
        let m = DenseSymmetricMatrix::from_row_major(2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        let ev = m.eigenvalues().unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn invariants_and_residuals() {
        let m = random_sym(120, 9);
        let dec = m.eigen().unwrap();
        let tr: f64 = dec.values.iter().sum();
        let fr: f64 = dec.values.iter().map(|x| x * x).sum();
        assert!((tr - m.trace()).abs() < 1e-10);
        assert!((fr - m.frobenius_sq()).abs() < 1e-10 * m.frobenius_sq());
        let norm = dec.values.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let k = rng.random_range(0..120);
            let v = dec.vector(k);
            let av = m.matvec(v);
            let res: f64 = av
                .iter()
                .zip(v)
                .map(|(a, x)| (a - dec.values[k] * x).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(res <= 1e-9 * norm);
        }
        let only = m.eigenvalues().unwrap();
        for (a, b) in only.iter().zip(&dec.values) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn asymmetric_rejected() {
        assert!(DenseSymmetricMatrix::from_row_major(2, &[1.0, 0.0, 1e-3, 1.0]).is_err());
    }

    #[test]
    fn too_large_rejected() {
        assert!(DenseSymmetricMatrix::zeros(MAX_DIM + 1).is_err());
    }
}

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Symmetric sparse matrix in compressed-row form. Both triangles are
/// stored so that products and row access need no special casing.
#[derive(Debug, Clone, PartialEq)]
pub struct SymSparse {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Triplet accumulator used during assembly. Duplicate entries are summed.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    n: usize,
    entries: BTreeMap<(usize, usize), f64>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            entries: BTreeMap::new(),
        }
    }

    /// Adds `v` at (i, j) and, when i != j, at (j, i).
    pub fn add_sym(&mut self, i: usize, j: usize, v: f64) {
        *self.entries.entry((i, j)).or_insert(0.0) += v;
        if i != j {
            *self.entries.entry((j, i)).or_insert(0.0) += v;
        }
    }

    /// Adds the 2x2 edge-coupling block `c * [[1, -1], [-1, 1]]`.
    pub fn add_edge(&mut self, i: usize, j: usize, c: f64) {
        self.add_sym(i, i, c);
        self.add_sym(j, j, c);
        self.add_sym(i, j, -c);
    }

    pub fn build(self) -> SymSparse {
        let n = self.n;
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(self.entries.len());
        let mut vals = Vec::with_capacity(self.entries.len());
        for (&(i, j), &v) in &self.entries {
            row_ptr[i + 1] += 1;
            cols.push(j);
            vals.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SymSparse {
            n,
            row_ptr,
            cols,
            vals,
        }
    }
}

impl SymSparse {
    pub fn zeros(n: usize) -> Self {
        TripletBuilder::new(n).build()
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut b = TripletBuilder::new(d.len());
        for (i, &v) in d.iter().enumerate() {
            b.add_sym(i, i, v);
        }
        b.build()
    }

    /// Builds from a dense row-major matrix, keeping nonzero entries.
    /// The input is symmetrized as (A + A^T)/2.
    pub fn from_dense(n: usize, a: &[f64]) -> Self {
        let mut b = TripletBuilder::new(n);
        for i in 0..n {
            for j in i..n {
                let v = 0.5 * (a[i * n + j] + a[j * n + i]);
                if v != 0.0 {
                    b.add_sym(i, j, v);
                }
            }
        }
        b.build()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *yi = s;
        }
    }

    /// Largest |i - j| over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    /// Max |a_ij - a_ji| relative to max |a_ij|.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                scale = scale.max(v.abs());
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    /// Principal submatrix on `idx` (in the given order).
    pub fn submatrix(&self, idx: &[usize]) -> SymSparse {
        let mut map = vec![usize::MAX; self.n];
        for (k, &i) in idx.iter().enumerate() {
            map[i] = k;
        }
        let mut b = TripletBuilder::new(idx.len());
        for (k, &i) in idx.iter().enumerate() {
            for (j, v) in self.row(i) {
                let l = map[j];
                if l != usize::MAX && l >= k {
                    b.add_sym(k, l, v);
                }
            }
        }
        b.build()
    }

    /// Rectangular block A[rows, cols] applied to `x` (indexed by `cols`).
    pub fn block_matvec(&self, rows: &[usize], cols: &[usize], x: &[f64]) -> Vec<f64> {
        let mut xf = vec![0.0; self.n];
        for (&c, &v) in cols.iter().zip(x) {
            xf[c] = v;
        }
        rows.iter()
            .map(|&i| self.row(i).map(|(j, v)| v * xf[j]).sum())
            .collect()
    }

    /// Entry-wise `self + alpha * other`.
    pub fn add_scaled(&self, other: &SymSparse, alpha: f64) -> Result<SymSparse> {
        if self.n != other.n {
            return Err(Error::Contract(format!(
                "dimension mismatch {} vs {}",
                self.n, other.n
            )));
        }
        let mut b = TripletBuilder::new(self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                if j >= i {
                    b.add_sym(i, j, v);
                }
            }
            for (j, v) in other.row(i) {
                if j >= i {
                    b.add_sym(i, j, alpha * v);
                }
            }
        }
        Ok(b.build())
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut a = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                a[i * self.n + j] = v;
            }
        }
        a
    }

    /// Coordinate text dump: one `row col value` line per stored entry.
    pub fn to_coordinate_text(&self) -> String {
        let mut s = String::new();
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                let _ = writeln!(s, "{} {} {:.17e}", i, j, v);
            }
        }
        s
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn wdot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

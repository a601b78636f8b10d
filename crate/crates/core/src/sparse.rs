//! Compressed-row complex matrices for superoperators and jump Hamiltonians.

use ndarray::Array2;

use crate::operators::{C64, ZERO};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Duplicates are summed; exact zeros after summation are dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, mut trip: Vec<(usize, usize, C64)>) -> Self {
        trip.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(trip.len());
        let mut values: Vec<C64> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        let mut row_counts = vec![0usize; nrows];
        for (i, j, v) in trip {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) out of bounds");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                values.push(v);
                row_counts[i] += 1;
                last = Some((i, j));
            }
        }
        // drop cancellations
        let mut k = 0;
        let mut keep_i = Vec::with_capacity(indices.len());
        let mut keep_v = Vec::with_capacity(values.len());
        for (i, &count) in row_counts.iter().enumerate() {
            let mut kept = 0;
            for _ in 0..count {
                if values[k] != ZERO {
                    keep_i.push(indices[k]);
                    keep_v.push(values[k]);
                    kept += 1;
                }
                k += 1;
            }
            indptr[i + 1] = indptr[i] + kept;
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices: keep_i,
            values: keep_v,
        }
    }

    pub fn from_dense(a: &Array2<C64>) -> Self {
        let trip = a
            .indexed_iter()
            .filter(|(_, z)| **z != ZERO)
            .map(|((i, j), z)| (i, j, *z))
            .collect();
        Self::from_triplets(a.nrows(), a.ncols(), trip)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    /// y = A x.
    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            *yi = acc;
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    /// y = xᵀ A, i.e. the action on row vectors.
    pub fn vecmat(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == ZERO {
                continue;
            }
            for (j, v) in self.row(i) {
                y[j] += xi * v;
            }
        }
        y
    }

    pub fn add(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let trip = self.triplets().chain(other.triplets()).collect();
        CsrMatrix::from_triplets(self.nrows, self.ncols, trip)
    }

    pub fn scaled(&self, c: C64) -> CsrMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let mut a = Array2::zeros((self.nrows, self.ncols));
        for (i, j, v) in self.triplets() {
            a[[i, j]] = v;
        }
        a
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Max absolute row sum, ‖A‖∞.
    pub fn inf_norm(&self) -> f64 {
        (0..self.nrows)
            .map(|i| self.row(i).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Same matrix with rows and columns renumbered: entry (i, j) moves to
    /// (perm[i], perm[j]).
    pub fn permuted(&self, perm: &[usize]) -> CsrMatrix {
        assert_eq!(self.nrows, self.ncols);
        let trip = self.triplets().map(|(i, j, v)| (perm[i], perm[j], v)).collect();
        CsrMatrix::from_triplets(self.nrows, self.ncols, trip)
    }

    /// (lower, upper) bandwidths.
    pub fn bandwidths(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for (i, j, _) in self.triplets() {
            if i > j {
                kl = kl.max(i - j);
            } else {
                ku = ku.max(j - i);
            }
        }
        (kl, ku)
    }
}

//! LU factorization with partial pivoting for banded complex matrices.
//!
//! Row i keeps the column window [i−kl, i+kl+ku], wide enough for the fill
//! produced by row interchanges. Multipliers are stored in place and applied
//! in elimination order, as in LAPACK's gbtf2.

use crate::error::{Error, Result};
use crate::operators::{C64, ZERO};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<C64>,
    piv: Vec<usize>,
    small_pivots: usize,
    min_pivot: f64,
}

impl BandedLu {
    /// Factorizes `a`. Pivots below `tol·max|a_ij|` are counted as small; an
    /// exactly zero pivot leaves its column uneliminated.
    pub fn factor(a: &CsrMatrix, tol: f64) -> BandedLu {
        assert_eq!(a.nrows(), a.ncols());
        let n = a.nrows();
        let (kl, ku) = a.bandwidths();
        let width = 2 * kl + ku + 1;
        let mut lu = BandedLu {
            n,
            kl,
            ku,
            width,
            data: vec![ZERO; n * width],
            piv: (0..n).collect(),
            small_pivots: 0,
            min_pivot: f64::INFINITY,
        };
        for (i, j, v) in a.triplets() {
            let o = lu.offset(i, j);
            lu.data[o] = v;
        }
        let threshold = tol * a.max_abs();
        lu.eliminate(threshold);
        lu
    }

    fn start(&self, i: usize) -> usize {
        i.saturating_sub(self.kl)
    }

    fn offset(&self, i: usize, j: usize) -> usize {
        let s = self.start(i);
        debug_assert!(j >= s && j - s < self.width, "({i}, {j}) outside band");
        i * self.width + (j - s)
    }

    fn eliminate(&mut self, threshold: f64) {
        let n = self.n;
        for k in 0..n {
            let last = (k + self.kl).min(n - 1);
            let jmax = (k + self.kl + self.ku).min(n - 1);

            let mut p = k;
            let mut best = self.data[self.offset(k, k)].norm();
            for i in k + 1..=last {
                let v = self.data[self.offset(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            self.piv[k] = p;
            if p != k {
                for j in k..=jmax {
                    let a = self.offset(k, j);
                    let b = self.offset(p, j);
                    self.data.swap(a, b);
                }
            }
            self.min_pivot = self.min_pivot.min(best);
            if best <= threshold {
                self.small_pivots += 1;
            }
            if best == 0.0 {
                continue;
            }

            let pivot = self.data[self.offset(k, k)];
            let inv = pivot.inv();
            let len = jmax - k;
            let krow_from = self.offset(k, k) + 1;
            for i in k + 1..=last {
                let oik = self.offset(i, k);
                let l = self.data[oik] * inv;
                self.data[oik] = l;
                if l == ZERO {
                    continue;
                }
                let irow_from = oik + 1;
                let (head, tail) = self.data.split_at_mut(irow_from);
                let src = &head[krow_from..krow_from + len];
                let dst = &mut tail[..len];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d -= l * s;
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    pub fn small_pivots(&self) -> usize {
        self.small_pivots
    }

    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    /// Solves A x = b in place.
    pub fn solve_in_place(&self, b: &mut [C64]) -> Result<()> {
        let n = self.n;
        assert_eq!(b.len(), n);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk == ZERO {
                continue;
            }
            for i in k + 1..=(k + self.kl).min(n - 1) {
                b[i] -= self.data[self.offset(i, k)] * bk;
            }
        }
        for k in (0..n).rev() {
            let jmax = (k + self.kl + self.ku).min(n - 1);
            let base = self.offset(k, k);
            let mut acc = b[k];
            for (t, j) in (k + 1..=jmax).enumerate() {
                acc -= self.data[base + 1 + t] * b[j];
            }
            let d = self.data[base];
            if d == ZERO {
                return Err(Error::SolverFailure(format!("zero pivot in column {k}")));
            }
            b[k] = acc / d;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{Array1, Array2};
    use ndarray_linalg::Solve;

    fn banded_test_matrix(n: usize, kl: usize, ku: usize, seed: u64) -> Array2<C64> {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut a = Array2::zeros((n, n));
        for i in 0..n {
            for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                // weak diagonal forces row interchanges
                let scale = if i == j { 0.05 } else { 1.0 };
                a[[i, j]] = C64::new(next() * scale, next() * scale);
            }
        }
        a
    }

    #[test]
    fn matches_dense_solve_with_pivoting() {
        for (n, kl, ku) in [(40, 3, 2), (57, 1, 6), (30, 0, 0), (25, 7, 7)] {
            let a = banded_test_matrix(n, kl, ku, n as u64);
            let b: Array1<C64> = (0..n).map(|i| C64::new(i as f64, 1.0)).collect();
            let want = a.solve(&b).unwrap();
            let lu = BandedLu::factor(&CsrMatrix::from_dense(&a), 1e-14);
            let mut x = b.to_vec();
            lu.solve_in_place(&mut x).unwrap();
            let err = x.iter().zip(want.iter()).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
            let scale = want.iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(err < 1e-9 * scale, "n={n} kl={kl} ku={ku} err={err}");
        }
    }

    #[test]
    fn singular_matrix_reports_small_pivot() {
        let mut a = banded_test_matrix(10, 2, 2, 3);
        for j in 0..10 {
            a[[4, j]] = ZERO;
        }
        let lu = BandedLu::factor(&CsrMatrix::from_dense(&a), 1e-10);
        assert!(lu.small_pivots() >= 1);
    }
}

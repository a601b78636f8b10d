//! Dense operators on tensor-product spaces and the truncated oscillator.

use std::ops::{Add, Mul, Sub};

use ndarray::{Array1, Array2, ShapeBuilder};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Dense complex matrix together with the factor dimensions of its space.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    dims: Vec<usize>,
    data: Array2<C64>,
}

impl OperatorMatrix {
    pub fn new(dims: Vec<usize>, data: Array2<C64>) -> Self {
        let dim: usize = dims.iter().product();
        assert_eq!(data.dim(), (dim, dim), "matrix shape does not match dims {dims:?}");
        Self { dims, data }
    }

    pub fn zeros(dims: Vec<usize>) -> Self {
        let dim = dims.iter().product();
        Self::new(dims, Array2::zeros((dim, dim)))
    }

    pub fn identity(dims: Vec<usize>) -> Self {
        let dim = dims.iter().product();
        Self::new(dims, Array2::eye(dim))
    }

    /// Single-factor operator.
    pub fn from_matrix(data: Array2<C64>) -> Self {
        let d = data.nrows();
        Self::new(vec![d], data)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn data(&self) -> &Array2<C64> {
        &self.data
    }

    pub fn into_data(self) -> Array2<C64> {
        self.data
    }

    pub fn kron(&self, other: &OperatorMatrix) -> OperatorMatrix {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        OperatorMatrix::new(dims, kron(&self.data, &other.data))
    }

    pub fn dagger(&self) -> OperatorMatrix {
        OperatorMatrix::new(self.dims.clone(), dagger(&self.data))
    }

    pub fn matmul(&self, other: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.dims, other.dims);
        OperatorMatrix::new(self.dims.clone(), self.data.dot(&other.data))
    }

    pub fn apply(&self, psi: &Array1<C64>) -> Array1<C64> {
        self.data.dot(psi)
    }

    /// max |M − M†| over entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.data[[i, j]] - self.data[[j, i]].conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| *z == ZERO)
    }

    /// Nonzero entries as (row, col, value).
    pub fn nonzeros(&self) -> Vec<(usize, usize, C64)> {
        self.data
            .indexed_iter()
            .filter(|(_, z)| **z != ZERO)
            .map(|((i, j), z)| (i, j, *z))
            .collect()
    }

    pub fn expectation(&self, psi: &Array1<C64>) -> C64 {
        psi.iter().zip(self.apply(psi).iter()).map(|(a, b)| a.conj() * b).sum()
    }
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.dims, rhs.dims);
        OperatorMatrix::new(self.dims.clone(), &self.data + &rhs.data)
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.dims, rhs.dims);
        OperatorMatrix::new(self.dims.clone(), &self.data - &rhs.data)
    }
}

impl Mul<C64> for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: C64) -> OperatorMatrix {
        OperatorMatrix::new(self.dims.clone(), &self.data * rhs)
    }
}

impl Mul<f64> for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: f64) -> OperatorMatrix {
        self * C64::new(rhs, 0.0)
    }
}

pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for ((i, j), &x) in a.indexed_iter() {
        if x == ZERO {
            continue;
        }
        for ((k, l), &y) in b.indexed_iter() {
            out[[i * br + k, j * bc + l]] = x * y;
        }
    }
    out
}

pub fn dagger(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

/// |i⟩⟨j| on a d-dimensional space.
pub fn ket_bra(d: usize, i: usize, j: usize) -> Array2<C64> {
    let mut m = Array2::zeros((d, d));
    m[[i, j]] = ONE;
    m
}

/// Annihilation operator b on Fock states 0..n_fock.
pub fn destroy(n_fock: usize) -> Array2<C64> {
    let mut b = Array2::zeros((n_fock, n_fock));
    for n in 1..n_fock {
        b[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
    }
    b
}

pub fn number(n_fock: usize) -> Array2<C64> {
    Array2::from_diag(&Array1::from_iter((0..n_fock).map(|n| C64::new(n as f64, 0.0))))
}

/// q̂ = (b + b†)/√2.
pub fn position(n_fock: usize) -> Array2<C64> {
    let b = destroy(n_fock);
    (&b + &dagger(&b)) * C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)
}

/// p̂ = i(b − b†), the Raman-appendix normalization.
pub fn momentum(n_fock: usize) -> Array2<C64> {
    let b = destroy(n_fock);
    (&b - &dagger(&b)) * I
}

/// b + b†, the quadrature that pairs with [`momentum`].
pub fn quadrature(n_fock: usize) -> Array2<C64> {
    let b = destroy(n_fock);
    &b + &dagger(&b)
}

pub fn fock_state(n_fock: usize, n: usize) -> Array1<C64> {
    let mut v = Array1::zeros(n_fock);
    v[n] = ONE;
    v
}

pub fn kron_vec(a: &Array1<C64>, b: &Array1<C64>) -> Array1<C64> {
    Array1::from_iter(a.iter().flat_map(|x| b.iter().map(move |y| x * y)))
}

/// Lower-triangle-free Hermitian check for raw matrices.
pub fn hermiticity_defect(a: &Array2<C64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    worst
}

/// Eigenvalues (ascending) and eigenvector columns of a Hermitian matrix.
///
/// The input is copied to column-major order first: for row-major complex
/// input the LAPACK wrapper returns the eigenvectors of the conjugate.
pub fn hermitian_eigh(a: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>), String> {
    let n = a.nrows();
    let mut f = Array2::zeros((n, n).f());
    f.assign(a);
    f.eigh(UPLO::Upper).map_err(|e| e.to_string())
}

pub fn trace(a: &Array2<C64>) -> C64 {
    a.diag().sum()
}

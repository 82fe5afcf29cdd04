//! Dense complex operator algebra.
//!
//! [`HermitianOperator`] is the workhorse type: shield operators, assembled
//! density matrices and their partial transposes all live in it. Hermiticity
//! is checked on construction against [`Scalar::tolerance`] and the stored
//! matrix is then symmetrized as `(A + A†)/2`, so downstream eigen-solvers
//! always see an exactly Hermitian input.

mod named;
mod serial;
mod subsystems;

use std::cmp::Ordering;
use std::ops::{Add, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;

use crate::error::{validation, Error, Result};
use crate::scalar::Scalar;

pub use named::{bell_basis, sym_antisym_projectors};
pub use subsystems::{
    is_ppt, partial_trace, partial_transpose, permute_subsystems, tensor, tensor_with_limit,
};

/// General dense complex matrix (unitaries, off-diagonal blocks).
pub type CMatrix<T> = DMatrix<Complex<T>>;

/// Default cap on the dimension of any matrix the crate materializes.
pub const DEFAULT_MAX_DIM: usize = 4096;

pub(crate) fn c<T: Scalar>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator<T: Scalar> {
    m: CMatrix<T>,
}

impl<T: Scalar> HermitianOperator<T> {
    /// Validates Hermiticity within tolerance and symmetrizes.
    pub fn from_matrix(m: CMatrix<T>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(validation(format!(
                "operator must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(validation("operator dimension must be at least 1"));
        }
        let dev = hermiticity_defect(&m);
        if dev > T::tolerance() {
            return Err(validation(format!(
                "operator is not Hermitian: max |A - A^dagger| = {dev}"
            )));
        }
        Ok(Self::symmetrized(m))
    }

    /// Builds from an entry function; the result is validated like [`Self::from_matrix`].
    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> Complex<T>) -> Result<Self> {
        Self::from_matrix(CMatrix::from_fn(dim, dim, f))
    }

    /// Skips validation; callers guarantee the input is Hermitian up to rounding.
    pub(crate) fn symmetrized(m: CMatrix<T>) -> Self {
        let half = T::lit(0.5);
        let adj = m.adjoint();
        let m = (m + adj).map(|z| z * half);
        Self { m }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: CMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            m: CMatrix::zeros(dim, dim),
        }
    }

    pub fn diagonal(values: &[T]) -> Self {
        let n = values.len();
        Self {
            m: CMatrix::from_fn(n, n, |i, j| if i == j { c(values[i]) } else { c(T::zero()) }),
        }
    }

    /// `|v⟩⟨v|`.
    pub fn projector(v: &KetVector<T>) -> Self {
        let a = v.amplitudes();
        Self::symmetrized(a * a.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex<T> {
        self.m[(i, j)]
    }

    pub fn trace(&self) -> T {
        self.m.diagonal().iter().fold(T::zero(), |acc, z| acc + z.re)
    }

    pub fn scale(&self, factor: T) -> Self {
        Self {
            m: self.m.map(|z| z * factor),
        }
    }

    /// `Re tr(A B)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> T {
        assert_eq!(self.dim(), other.dim(), "trace_product dimension mismatch");
        let n = self.dim();
        let mut acc = T::zero();
        for i in 0..n {
            for j in 0..n {
                acc += (self.m[(i, j)] * other.m[(j, i)]).re;
            }
        }
        acc
    }

    /// True when every imaginary part is exactly zero.
    pub fn is_real(&self) -> bool {
        self.m.iter().all(|z| z.im == T::zero())
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<T> {
        let ev = if self.is_real() {
            self.m.map(|z| z.re).symmetric_eigenvalues()
        } else {
            self.m.symmetric_eigenvalues()
        };
        let mut ev: Vec<T> = ev.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        ev
    }

    /// Eigenvalues with the matching unit eigenvectors as columns.
    pub fn eigh(&self) -> (Vec<T>, CMatrix<T>) {
        let eig = SymmetricEigen::new(self.m.clone());
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalues()[0]
    }

    /// `f(A)` applied through the spectral decomposition.
    pub fn map_spectrum(&self, f: impl Fn(T) -> T) -> Self {
        let (vals, vecs) = self.eigh();
        let scaled = DMatrix::from_fn(vecs.nrows(), vecs.ncols(), |i, k| vecs[(i, k)] * f(vals[k]));
        Self::symmetrized(scaled * vecs.adjoint())
    }

    /// Square root of the positive part. Eigenvalues below the solver's
    /// resolution `n·ε·max|λ|` are treated as zero; their square roots would
    /// otherwise turn rounding noise of order ε into errors of order √ε.
    pub fn sqrt_psd(&self) -> Self {
        let (vals, vecs) = self.eigh();
        let radius = vals.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
        let cutoff = T::from_usize(self.dim()).unwrap() * T::default_epsilon() * radius;
        let scaled = DMatrix::from_fn(vecs.nrows(), vecs.ncols(), |i, k| {
            let x = vals[k];
            vecs[(i, k)] * if x > cutoff { x.sqrt() } else { T::zero() }
        });
        Self::symmetrized(scaled * vecs.adjoint())
    }

    /// `U A U†` for a caller-supplied unitary `U`.
    pub fn conjugate_by(&self, u: &CMatrix<T>) -> Self {
        Self::symmetrized(u * &self.m * u.adjoint())
    }

    /// `Aᵀ` (equivalently the complex conjugate, for Hermitian `A`).
    pub fn transpose(&self) -> Self {
        Self {
            m: self.m.transpose(),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.dim(), other.dim());
        max_abs(&(&self.m - &other.m))
    }
}

impl<T: Scalar> Add for &HermitianOperator<T> {
    type Output = HermitianOperator<T>;

    fn add(self, rhs: Self) -> HermitianOperator<T> {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        HermitianOperator {
            m: &self.m + &rhs.m,
        }
    }
}

impl<T: Scalar> Sub for &HermitianOperator<T> {
    type Output = HermitianOperator<T>;

    fn sub(self, rhs: Self) -> HermitianOperator<T> {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        HermitianOperator {
            m: &self.m - &rhs.m,
        }
    }
}

/// Pure state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct KetVector<T: Scalar> {
    amps: DVector<Complex<T>>,
}

impl<T: Scalar> KetVector<T> {
    pub fn new(amplitudes: Vec<Complex<T>>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(validation("ket dimension must be at least 1"));
        }
        Ok(Self {
            amps: DVector::from_vec(amplitudes),
        })
    }

    /// Like [`Self::new`] but requires unit norm within `1e-12` (scaled for `f32`).
    pub fn normalized(amplitudes: Vec<Complex<T>>) -> Result<Self> {
        let v = Self::new(amplitudes)?;
        let tol = T::lit(1e-12).max(T::default_epsilon() * T::lit(16.0));
        if (v.norm_sqr() - T::one()).abs() > tol {
            return Err(validation(format!(
                "ket is not normalized: squared norm {}",
                v.norm_sqr()
            )));
        }
        Ok(v)
    }

    pub(crate) fn from_dvector(amps: DVector<Complex<T>>) -> Self {
        Self { amps }
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amps = DVector::zeros(dim);
        amps[index] = c(T::one());
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex<T>> {
        &self.amps
    }

    pub fn amplitude(&self, i: usize) -> Complex<T> {
        self.amps[i]
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.amps.dotc(&other.amps)
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            amps: self.amps.kronecker(&other.amps),
        }
    }
}

/// Sum of absolute eigenvalues.
pub fn trace_norm<T: Scalar>(a: &HermitianOperator<T>) -> T {
    a.eigenvalues()
        .into_iter()
        .fold(T::zero(), |acc, x| acc + x.abs())
}

/// [`trace_norm`] for a raw matrix, rejecting non-Hermitian input.
pub fn trace_norm_checked<T: Scalar>(m: &CMatrix<T>) -> Result<T> {
    HermitianOperator::from_matrix(m.clone()).map(|h| trace_norm(&h))
}

/// Sum of singular values; valid for any square or rectangular matrix.
pub fn schatten_one<T: Scalar>(m: &CMatrix<T>) -> T {
    m.clone()
        .singular_values()
        .iter()
        .fold(T::zero(), |acc, &s| acc + s)
}

pub(crate) fn max_abs<T: Scalar>(m: &CMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc.max(z.norm_sqr().sqrt()))
}

fn hermiticity_defect<T: Scalar>(m: &CMatrix<T>) -> T {
    let n = m.nrows();
    let mut dev = T::zero();
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm_sqr().sqrt());
        }
    }
    dev
}

pub(crate) fn check_limit(required: usize, limit: usize) -> Result<()> {
    if required > limit {
        Err(Error::Resource { required, limit })
    } else {
        Ok(())
    }
}

//! Dense complex linear algebra used throughout the crate.
//!
//! Operators act on column vectors by left multiplication, so the entry
//! `M[(j, i)]` is `⟨j|M|i⟩`. Bipartite indices are flattened with the first
//! factor most significant: `|a b⟩ ↦ a·dim_b + b`.
//!
//! Decompositions (SVD, QR, Hermitian eigen, Schur) are delegated to
//! `nalgebra`; this module wraps them with the contracts the rest of the
//! crate relies on (sorted singular values, unitary completions, validated
//! state types).

mod random;
mod state;

use std::ops::{Add, Index, Mul, Sub};

use nalgebra::DMatrix;
pub use num_complex::Complex64;

use crate::error::{Error, Result};

pub use random::{haar_unitary, random_density_matrix, random_pure_state, Rng};
pub use state::{DensityMatrix, Ensemble, PureState};

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A dense, finite-valued complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<Complex64>);

/// Which factor of a bipartite space to trace out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: &[Complex64]) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::ZeroDimension);
        }
        if data.len() != rows * cols {
            return Err(Error::BadLength {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(DMatrix::from_row_slice(rows, cols, data)))
    }

    /// Wraps an `nalgebra` matrix, rejecting empty or non-finite input.
    pub fn from_nalgebra(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(Error::ZeroDimension);
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(m))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Self(DMatrix::from_fn(rows, cols, f))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { diag[i] } else { ZERO })
    }

    /// Outer product `|a⟩⟨b|`.
    pub fn outer(a: &[Complex64], b: &[Complex64]) -> Self {
        Self::from_fn(a.len(), b.len(), |i, j| a[i] * b[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn as_nalgebra(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_nalgebra(self) -> DMatrix<Complex64> {
        self.0
    }

    /// Entries in row-major order.
    pub fn to_row_major(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn dagger(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn conj(&self) -> Self {
        Self(self.0.map(|z| z.conj()))
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self(&self.0 * factor)
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        Self(self.0.map(|z| z * factor))
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `M v` for a column vector `v`.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(
            v.len(),
            self.cols(),
            "vector length must match column count"
        );
        (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| self.0[(i, j)] * v[j]).sum())
            .collect()
    }

    /// `max |(M†M − I)_{ij}|`; zero for an exact unitary.
    pub fn unitarity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let g = self.0.adjoint() * &self.0;
        let n = self.rows();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((g[(i, j)] - target).norm());
            }
        }
        worst
    }

    /// `‖M − M†‖_F`.
    pub fn hermiticity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (&self.0 - self.0.adjoint())
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Hermitian part `(M + M†)/2`.
    pub fn hermitian_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()).map(|z| z * 0.5))
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, idx: (usize, usize)) -> &Complex64 {
        &self.0[idx]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

/// Kronecker product; entry `(i·rb + k, j·cb + l)` equals `a_ij · b_kl`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix(a.0.kronecker(&b.0))
}

/// Kronecker product of vectors.
pub fn tensor_vec(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| x * y))
        .collect()
}

/// Traces out one factor of an operator on a `dim_a × dim_b` bipartite space.
pub fn partial_trace(
    m: &ComplexMatrix,
    dim_a: usize,
    dim_b: usize,
    which: Subsystem,
) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    if dim_a == 0 || dim_b == 0 {
        return Err(Error::ZeroDimension);
    }
    if m.rows() != dim_a * dim_b {
        return Err(Error::DimensionMismatch {
            context: "partial_trace",
            expected: dim_a * dim_b,
            found: m.rows(),
        });
    }
    Ok(match which {
        Subsystem::Second => ComplexMatrix::from_fn(dim_a, dim_a, |i, j| {
            (0..dim_b).map(|k| m[(i * dim_b + k, j * dim_b + k)]).sum()
        }),
        Subsystem::First => ComplexMatrix::from_fn(dim_b, dim_b, |i, j| {
            (0..dim_a).map(|k| m[(k * dim_b + i, k * dim_b + j)]).sum()
        }),
    })
}

/// Singular value decomposition `M = U · diag(s) · V†`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    /// Non-negative, sorted in descending order.
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let s: Vec<Complex64> = self
            .singular_values
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .collect();
        let middle = ComplexMatrix::from_diagonal(&s);
        &(&self.u * &middle) * &self.v.dagger()
    }
}

/// Thin SVD with singular values sorted in descending order.
///
/// For square input both factors are full unitaries.
pub fn svd(m: &ComplexMatrix) -> Svd {
    let decomposition = m.0.clone().svd(true, true);
    let u = decomposition.u.expect("left singular vectors requested");
    let v_t = decomposition.v_t.expect("right singular vectors requested");
    let s = decomposition.singular_values;

    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));

    let u_sorted = DMatrix::from_fn(u.nrows(), order.len(), |i, k| u[(i, order[k])]);
    let v_sorted = DMatrix::from_fn(v_t.ncols(), order.len(), |i, k| v_t[(order[k], i)].conj());
    Svd {
        u: ComplexMatrix(u_sorted),
        singular_values: order.iter().map(|&k| s[k]).collect(),
        v: ComplexMatrix(v_sorted),
    }
}

/// Unitary factor `U·V†` of the polar decomposition; the maximizer of
/// `Re tr(W† m)` over unitaries `W`.
///
/// Fails with [`Error::DegeneratePolar`] when the smallest singular value is
/// below `rank_tol`, since the maximizer is then not unique.
pub fn polar_unitary(m: &ComplexMatrix, rank_tol: f64) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let d = svd(m);
    let smallest = d.singular_values.last().copied().unwrap_or(0.0);
    if smallest <= rank_tol {
        return Err(Error::DegeneratePolar { smallest });
    }
    Ok(&d.u * &d.v.dagger())
}

/// Polar unitary factor that is always defined: on the null space of `m` the
/// completion is the identity in the SVD frame (left and right null vectors
/// are paired in order).
pub fn polar_unitary_completed(m: &ComplexMatrix) -> ComplexMatrix {
    assert!(m.is_square(), "polar factor needs a square matrix");
    let d = svd(m);
    &d.u * &d.v.dagger()
}

/// Eigen-decomposition of a Hermitian matrix; eigenvalues ascending, eigenvectors
/// as the columns of the returned matrix.
pub fn hermitian_eigen(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let eig = m.hermitian_part().0.symmetric_eigen();
    let vals = eig.eigenvalues;
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let vecs = DMatrix::from_fn(m.rows(), order.len(), |i, k| {
        eig.eigenvectors[(i, order[k])]
    });
    (
        order.iter().map(|&k| vals[k]).collect(),
        ComplexMatrix(vecs),
    )
}

pub fn min_hermitian_eigenvalue(m: &ComplexMatrix) -> f64 {
    let (vals, _) = hermitian_eigen(m);
    vals.first().copied().unwrap_or(0.0)
}

/// `U^τ` along the geodesic from `I` to the unitary `u`, i.e. `exp(τ · log u)`
/// with the principal branch of the logarithm.
pub fn unitary_power(u: &ComplexMatrix, tau: f64) -> Result<ComplexMatrix> {
    let n = u.rows();
    let schur = nalgebra::Schur::try_new(u.0.clone(), 1e-15, 10_000)
        .ok_or(Error::NoConvergence("Schur decomposition"))?;
    let (q, t) = schur.unpack();
    // A unitary is normal, so its Schur form is diagonal up to rounding.
    let diag: Vec<Complex64> = (0..n)
        .map(|i| {
            let lambda = t[(i, i)];
            let phase = lambda.arg();
            Complex64::from_polar(1.0, tau * phase)
        })
        .collect();
    let d = DMatrix::from_fn(n, n, |i, j| if i == j { diag[i] } else { ZERO });
    Ok(ComplexMatrix(&q * d * q.adjoint()))
}

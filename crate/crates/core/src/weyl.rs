//! Weyl–Heisenberg operator basis and generalized Bell states.
//!
//! With the shift `h|j⟩ = |j+1 mod n⟩` and clock `g|j⟩ = ωʲ|j⟩`,
//! `ω = exp(−2πi/n)`, the basis elements are `U_st = hᵗ gˢ`, stored at flat
//! index `n·s + t`. The Bell vectors are `|Φ_st⟩ = (1 ⊗ U*_st)|Φ⟩` with
//! `|Φ⟩ = n^{-1/2} Σ_i |ii⟩`; in the column convention used here the
//! amplitude of `|ij⟩` is `conj(U_st)_{ji} / √n`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{partial_trace, Complex64, ComplexMatrix, PureState, Rng, Subsystem};

/// Largest local dimension accepted; channel sums grow like `n⁴`.
pub const MAX_LOCAL_DIM: usize = 16;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn check_dim(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    if n > MAX_LOCAL_DIM {
        return Err(Error::DimensionOutOfRange {
            n,
            min: 1,
            max: MAX_LOCAL_DIM,
        });
    }
    Ok(())
}

/// Local dimension `n` of a bipartite space of total dimension `n²`.
pub fn local_dim(total: usize) -> Result<usize> {
    let n = (total as f64).sqrt().round() as usize;
    if n * n != total || n == 0 {
        return Err(Error::NotPerfectSquare(total));
    }
    Ok(n)
}

/// `ω^k` with `ω = exp(−2πi/n)`, reduced mod `n` before exponentiating.
pub fn omega_pow(n: usize, k: i64) -> Complex64 {
    let r = k.rem_euclid(n as i64) as f64;
    Complex64::from_polar(1.0, -2.0 * PI * r / n as f64)
}

/// Cyclic shift `h`.
pub fn shift(n: usize) -> Result<ComplexMatrix> {
    check_dim(n)?;
    Ok(ComplexMatrix::from_fn(n, n, |i, j| {
        if i == (j + 1) % n {
            ONE
        } else {
            ZERO
        }
    }))
}

/// Clock `g = diag(ω⁰, …, ω^{n−1})`.
pub fn clock(n: usize) -> Result<ComplexMatrix> {
    check_dim(n)?;
    let diag: Vec<Complex64> = (0..n).map(|j| omega_pow(n, j as i64)).collect();
    Ok(ComplexMatrix::from_diagonal(&diag))
}

/// The `n²` unitaries `U_st = hᵗ gˢ`.
#[derive(Debug, Clone)]
pub struct OperatorBasis {
    n: usize,
    omega: Complex64,
    ops: Vec<ComplexMatrix>,
}

impl OperatorBasis {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn omega(&self) -> Complex64 {
        self.omega
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn index(&self, s: usize, t: usize) -> usize {
        self.n * s + t
    }

    /// Inverse of [`index`](Self::index).
    pub fn pair(&self, flat: usize) -> (usize, usize) {
        (flat / self.n, flat % self.n)
    }

    pub fn get(&self, s: usize, t: usize) -> &ComplexMatrix {
        &self.ops[self.index(s, t)]
    }

    pub fn ops(&self) -> &[ComplexMatrix] {
        &self.ops
    }
}

/// Builds `{U_st}` for local dimension `n`.
pub fn weyl_basis(n: usize) -> Result<OperatorBasis> {
    check_dim(n)?;
    let mut ops = Vec::with_capacity(n * n);
    for s in 0..n {
        for t in 0..n {
            // (hᵗ gˢ)|j⟩ = ω^{sj} |j + t⟩
            let u = ComplexMatrix::from_fn(n, n, |i, j| {
                if i == (j + t) % n {
                    omega_pow(n, (s * j) as i64)
                } else {
                    ZERO
                }
            });
            ops.push(u);
        }
    }
    Ok(OperatorBasis {
        n,
        omega: omega_pow(n, 1),
        ops,
    })
}

/// Coefficients `c_st = tr(U†_st W)/n`, so that `W = Σ c_st U_st`.
pub fn decompose(w: &ComplexMatrix, basis: &OperatorBasis) -> Result<Vec<Complex64>> {
    let n = basis.n();
    if w.rows() != n || w.cols() != n {
        return Err(Error::DimensionMismatch {
            context: "decompose",
            expected: n,
            found: w.rows().max(w.cols()),
        });
    }
    Ok(basis
        .ops()
        .iter()
        .map(|u| (&u.dagger() * w).trace() / n as f64)
        .collect())
}

/// `Σ c_st U_st`.
pub fn reconstruct(coefficients: &[Complex64], basis: &OperatorBasis) -> Result<ComplexMatrix> {
    if coefficients.len() != basis.len() {
        return Err(Error::DimensionMismatch {
            context: "reconstruct",
            expected: basis.len(),
            found: coefficients.len(),
        });
    }
    let n = basis.n();
    let mut acc = ComplexMatrix::zeros(n, n);
    for (c, u) in coefficients.iter().zip(basis.ops()) {
        acc = &acc + &u.scale(*c);
    }
    Ok(acc)
}

/// The `n²` generalized Bell states, indexed like [`OperatorBasis`].
#[derive(Debug, Clone)]
pub struct BellBasis {
    n: usize,
    vectors: Vec<PureState>,
}

impl BellBasis {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vectors(&self) -> &[PureState] {
        &self.vectors
    }

    pub fn get(&self, s: usize, t: usize) -> &PureState {
        &self.vectors[self.n * s + t]
    }

    /// The canonical `|Φ⟩ = |Φ_00⟩`.
    pub fn phi(&self) -> &PureState {
        &self.vectors[0]
    }
}

/// `|Φ⟩ = n^{-1/2} Σ_i |ii⟩`.
pub fn max_entangled(n: usize) -> Result<PureState> {
    check_dim(n)?;
    let amp = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
    let mut v = vec![ZERO; n * n];
    for i in 0..n {
        v[i * n + i] = amp;
    }
    PureState::new(v)
}

/// Builds the generalized Bell basis from the Weyl basis.
pub fn bell_basis(n: usize) -> Result<BellBasis> {
    let basis = weyl_basis(n)?;
    Ok(bell_basis_from(&basis))
}

pub fn bell_basis_from(basis: &OperatorBasis) -> BellBasis {
    let n = basis.n();
    let norm = 1.0 / (n as f64).sqrt();
    let vectors = basis
        .ops()
        .iter()
        .map(|u| {
            let mut v = vec![ZERO; n * n];
            for i in 0..n {
                for j in 0..n {
                    v[i * n + j] = u[(j, i)].conj() * norm;
                }
            }
            PureState::with_tolerance(v, 1e-12).expect("Bell vector has unit norm")
        })
        .collect();
    BellBasis { n, vectors }
}

/// Largest violation of each defining identity of the Weyl and Bell bases.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize)]
pub struct IdentityViolations {
    /// `U_st U_s't' = ω^{st'−ts'} U_s't' U_st`.
    pub commutation: f64,
    /// `tr U_st = n δ_s0 δ_t0`.
    pub trace: f64,
    /// `tr(U_st U†_s't') = n δ_ss' δ_tt'`.
    pub orthogonality: f64,
    /// `U_st U†_st = I`.
    pub unitarity: f64,
    /// Frobenius error of decompose-then-reconstruct on random matrices.
    pub decomposition: f64,
    /// `Σ_st U†_st A U_st = n tr(A) I` on random matrices.
    pub twirl_sum: f64,
    pub bell_orthonormality: f64,
    /// Deviation of both Bell-state marginals from `I/n`.
    pub bell_marginals: f64,
    /// `Σ_st |Φ_st⟩⟨Φ_st| = I`.
    pub bell_completeness: f64,
}

impl IdentityViolations {
    pub fn max(&self) -> f64 {
        [
            self.commutation,
            self.trace,
            self.orthogonality,
            self.unitarity,
            self.decomposition,
            self.twirl_sum,
            self.bell_orthonormality,
            self.bell_marginals,
            self.bell_completeness,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Evaluates every identity in [`IdentityViolations`] for local dimension `n`,
/// using `round_trips` random matrices for the decomposition checks.
pub fn check_identities(n: usize, round_trips: usize, rng: &mut Rng) -> Result<IdentityViolations> {
    let basis = weyl_basis(n)?;
    let bell = bell_basis_from(&basis);
    let mut v = IdentityViolations::default();
    let nf = n as f64;
    let eye = ComplexMatrix::identity(n);

    for s in 0..n {
        for t in 0..n {
            let u = basis.get(s, t);
            let expected_trace = if s == 0 && t == 0 { nf } else { 0.0 };
            v.trace = v.trace.max((u.trace() - expected_trace).norm());
            v.unitarity = v.unitarity.max((&(u * &u.dagger()) - &eye).max_abs());
            for s2 in 0..n {
                for t2 in 0..n {
                    let u2 = basis.get(s2, t2);
                    let phase = omega_pow(n, (s * t2) as i64 - (t * s2) as i64);
                    let lhs = u * u2;
                    let rhs = (u2 * u).scale(phase);
                    v.commutation = v.commutation.max((&lhs - &rhs).max_abs());
                    let expected = if s == s2 && t == t2 { nf } else { 0.0 };
                    let overlap = (u * &u2.dagger()).trace();
                    v.orthogonality = v.orthogonality.max((overlap - expected).norm());
                }
            }
        }
    }

    for _ in 0..round_trips {
        let w = ComplexMatrix::from_fn(n, n, |_, _| rng.complex_normal());
        let coeffs = decompose(&w, &basis)?;
        let back = reconstruct(&coeffs, &basis)?;
        v.decomposition = v.decomposition.max((&back - &w).frobenius_norm());

        let mut sum = ComplexMatrix::zeros(n, n);
        for u in basis.ops() {
            sum = &sum + &(&(&u.dagger() * &w) * u);
        }
        let target = eye.scale(w.trace() * nf);
        v.twirl_sum = v.twirl_sum.max((&sum - &target).max_abs());
    }

    let mut completeness = ComplexMatrix::zeros(n * n, n * n);
    let mixed = eye.scale_real(1.0 / nf);
    for (a, phi_a) in bell.vectors().iter().enumerate() {
        for (b, phi_b) in bell.vectors().iter().enumerate() {
            let expected = if a == b { 1.0 } else { 0.0 };
            v.bell_orthonormality = v
                .bell_orthonormality
                .max((phi_a.inner(phi_b) - expected).norm());
        }
        let proj = ComplexMatrix::outer(phi_a.amplitudes(), phi_a.amplitudes());
        for which in [Subsystem::First, Subsystem::Second] {
            let marginal = partial_trace(&proj, n, n, which)?;
            v.bell_marginals = v.bell_marginals.max((&marginal - &mixed).max_abs());
        }
        completeness = &completeness + &proj;
    }
    v.bell_completeness = (&completeness - &ComplexMatrix::identity(n * n)).max_abs();
    Ok(v)
}

use super::{hermitian_eigen, tensor_vec, Complex64, ComplexMatrix, ZERO};
use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

/// A normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Validates that `amplitudes` has unit Euclidean norm.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        Self::with_tolerance(amplitudes, Tolerances::default().unit_norm)
    }

    pub fn with_tolerance(amplitudes: Vec<Complex64>, tol: f64) -> Result<Self> {
        check_vector(&amplitudes)?;
        let norm = norm(&amplitudes);
        if (norm - 1.0).abs() > tol {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amplitudes })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        check_vector(&amplitudes)?;
        let norm = norm(&amplitudes);
        if norm == 0.0 {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self {
            amplitudes: amplitudes.into_iter().map(|z| z / norm).collect(),
        })
    }

    /// Computational basis vector `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if index >= dim {
            return Err(Error::DimensionMismatch {
                context: "basis index",
                expected: dim,
                found: index,
            });
        }
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn tensor(&self, other: &PureState) -> PureState {
        PureState {
            amplitudes: tensor_vec(&self.amplitudes, &other.amplitudes),
        }
    }

    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix {
            mat: ComplexMatrix::outer(&self.amplitudes, &self.amplitudes),
        }
    }
}

fn check_vector(v: &[Complex64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::ZeroDimension);
    }
    if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        Self::with_tolerances(mat, &Tolerances::default())
    }

    pub fn with_tolerances(mat: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::NotSquare {
                rows: mat.rows(),
                cols: mat.cols(),
            });
        }
        if !mat.is_finite() {
            return Err(Error::NonFinite);
        }
        let dim = mat.rows();
        let deviation = mat.hermiticity_deviation();
        if deviation > tol.hermitian * dim as f64 {
            return Err(Error::NotHermitian { deviation });
        }
        let trace = mat.trace();
        if (trace.re - 1.0).abs() > tol.trace || trace.im.abs() > tol.trace {
            return Err(Error::BadTrace { trace: trace.re });
        }
        let min_eigenvalue = super::min_hermitian_eigenvalue(&mat);
        if min_eigenvalue < tol.min_eigenvalue {
            return Err(Error::NotPositive { min_eigenvalue });
        }
        Ok(Self { mat })
    }

    /// `I / dim`.
    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        Ok(Self {
            mat: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
        })
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    /// `tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        (&self.mat * &self.mat).trace().re
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn expectation(&self, psi: &[Complex64]) -> f64 {
        let rho_psi = self.mat.apply(psi);
        psi.iter()
            .zip(&rho_psi)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .re
    }

    /// Spectral decomposition into a pure-state ensemble. Eigenvalues below
    /// `cutoff` are dropped and the remaining weights renormalized.
    pub fn spectral_ensemble(&self, cutoff: f64) -> Ensemble {
        let (vals, vecs) = hermitian_eigen(&self.mat);
        let dim = self.dim();
        let mut members = Vec::new();
        for (k, &w) in vals.iter().enumerate() {
            if w <= cutoff {
                continue;
            }
            let v: Vec<Complex64> = (0..dim).map(|i| vecs[(i, k)]).collect();
            // Eigenvectors come back normalized; renormalize against rounding.
            let state = PureState::normalized(v).expect("eigenvector is nonzero");
            members.push((w, state));
        }
        let total: f64 = members.iter().map(|(w, _)| w).sum();
        for m in &mut members {
            m.0 /= total;
        }
        Ensemble { members }
    }
}

/// A finite ensemble `{(p_α, |Ψ_α⟩)}` of pure states of equal dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    members: Vec<(f64, PureState)>,
}

impl Ensemble {
    pub fn new(members: Vec<(f64, PureState)>) -> Result<Self> {
        Self::with_tolerance(members, Tolerances::default().weight_sum)
    }

    pub fn with_tolerance(members: Vec<(f64, PureState)>, tol: f64) -> Result<Self> {
        let Some((_, first)) = members.first() else {
            return Err(Error::InvalidEnsemble("no members".into()));
        };
        let dim = first.dim();
        for (w, s) in &members {
            if !(0.0..=1.0).contains(w) {
                return Err(Error::InvalidEnsemble(format!("weight {w} outside [0, 1]")));
            }
            if s.dim() != dim {
                return Err(Error::InvalidEnsemble(format!(
                    "member dimension {} differs from {dim}",
                    s.dim()
                )));
            }
        }
        let total: f64 = members.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > tol {
            return Err(Error::InvalidEnsemble(format!("weights sum to {total}")));
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[(f64, PureState)] {
        &self.members
    }

    pub fn dim(&self) -> usize {
        self.members[0].1.dim()
    }

    /// `Σ p_α |Ψ_α⟩⟨Ψ_α|`.
    pub fn to_density(&self) -> DensityMatrix {
        let dim = self.dim();
        let mut acc = ComplexMatrix::zeros(dim, dim);
        for (w, s) in &self.members {
            let proj = ComplexMatrix::outer(s.amplitudes(), s.amplitudes()).scale_real(*w);
            acc = &acc + &proj;
        }
        DensityMatrix { mat: acc }
    }
}

//! Optimal Bell-measurement protocol: corrections `T_γβ = W·U_γβ` built from
//! the FEF maximizer `W`, with fidelity `(n·FEF + 1)/(n + 1)`.

use serde::Serialize;

use crate::channel::{rotated_protocol, standard_protocol, Protocol};
use crate::error::{Error, Result};
use crate::fef::{fef_optimize, singlet_fraction, FefOptions, FefResult};
use crate::fidelity::transmission_fidelity;
use crate::linalg::DensityMatrix;
use crate::weyl::{local_dim, weyl_basis};

/// Tolerance for the report invariants.
pub const REPORT_TOLERANCE: f64 = 1e-7;

fn check_result_dim(chi: &DensityMatrix, fef: &FefResult) -> Result<usize> {
    let n = local_dim(chi.dim())?;
    if fef.maximizer.rows() != n || !fef.maximizer.is_square() {
        return Err(Error::DimensionMismatch {
            context: "FEF maximizer vs resource",
            expected: n,
            found: fef.maximizer.rows(),
        });
    }
    Ok(n)
}

/// Protocol with `T_γβ = W·U_γβ` where `W` is the FEF maximizer.
pub fn optimal_protocol(chi: &DensityMatrix, fef: &FefResult) -> Result<Protocol> {
    let n = check_result_dim(chi, fef)?;
    rotated_protocol(&fef.maximizer, &weyl_basis(n)?)
}

/// `f_max = (n·FEF + 1)/(n + 1)`.
pub fn optimal_fidelity(chi: &DensityMatrix, fef: &FefResult) -> Result<f64> {
    let n = check_result_dim(chi, fef)? as f64;
    Ok((n * fef.value + 1.0) / (n + 1.0))
}

/// Standard vs optimal protocol on one resource.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub n: usize,
    pub singlet_fraction: f64,
    pub fef: f64,
    pub f_standard: f64,
    pub f_optimal_formula: f64,
    /// Closed-form fidelity of the optimal protocol, evaluated directly.
    pub f_optimal_direct: f64,
    /// `f_optimal_direct − f_standard`.
    pub advantage: f64,
    pub fef_diagnostics: FefResult,
}

impl ComparisonReport {
    /// Human-readable descriptions of every broken invariant.
    pub fn violations(&self) -> Vec<String> {
        self.violations_with(REPORT_TOLERANCE)
    }

    /// As [`violations`](Self::violations) with a custom tolerance for the
    /// fidelity comparisons.
    pub fn violations_with(&self, tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        let nf = self.n as f64;
        let formula = (nf * self.fef + 1.0) / (nf + 1.0);
        if (formula - self.f_optimal_formula).abs() > 1e-12 {
            out.push(format!(
                "f_optimal_formula {} disagrees with (n·fef+1)/(n+1) = {formula}",
                self.f_optimal_formula
            ));
        }
        if self.f_optimal_direct < self.f_standard - tol {
            out.push(format!(
                "optimal fidelity {} below standard {}",
                self.f_optimal_direct, self.f_standard
            ));
        }
        let gap = (self.f_optimal_direct - self.f_optimal_formula).abs();
        if gap > tol {
            out.push(format!("direct and formula fidelities differ by {gap:e}"));
        }
        out
    }

    pub fn is_consistent(&self) -> bool {
        self.violations().is_empty()
    }
}

/// Runs the FEF optimizer and evaluates both protocols on `chi`.
pub fn compare(chi: &DensityMatrix, opts: &FefOptions) -> Result<ComparisonReport> {
    let n = local_dim(chi.dim())?;
    let fef = fef_optimize(chi, opts)?;
    let f_standard = transmission_fidelity(chi, &standard_protocol(n)?)?;
    let f_optimal_direct = transmission_fidelity(chi, &optimal_protocol(chi, &fef)?)?;
    let f_optimal_formula = optimal_fidelity(chi, &fef)?;
    Ok(ComparisonReport {
        n,
        singlet_fraction: singlet_fraction(chi)?,
        fef: fef.value,
        f_standard,
        f_optimal_formula,
        f_optimal_direct,
        advantage: f_optimal_direct - f_standard,
        fef_diagnostics: fef,
    })
}

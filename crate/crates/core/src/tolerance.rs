//! Numerical tolerances shared by every module.
//!
//! Each validated type and each checked post-condition reads its threshold
//! from a [`Tolerances`] record, so the whole crate can be tightened or relaxed
//! in one place (the CLI exposes this through `--tol`).

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Hermiticity slack per unit of dimension: `‖m − m†‖_F ≤ hermitian · dim`.
    pub hermitian: f64,
    /// Allowed deviation of a density-matrix trace from 1.
    pub trace: f64,
    /// Most negative eigenvalue still accepted as positive semidefinite.
    pub min_eigenvalue: f64,
    /// Allowed deviation of a pure-state norm from 1.
    pub unit_norm: f64,
    /// Unitarity slack, `max |(U†U − I)_{ij}|`.
    pub unitary: f64,
    /// Ensemble weights must sum to one within this.
    pub weight_sum: f64,
    /// Singular values below this make the polar factor degenerate.
    pub polar_rank: f64,
    /// Trace slack for channel outputs.
    pub channel_trace: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: 1e-12,
            trace: 1e-12,
            min_eigenvalue: -1e-10,
            unit_norm: 1e-12,
            unitary: 1e-10,
            weight_sum: 1e-12,
            polar_rank: 1e-12,
            channel_trace: 1e-9,
        }
    }
}

impl Tolerances {
    /// Slack used when loading states from disk.
    pub fn file_input() -> Self {
        Self {
            hermitian: 1e-9,
            trace: 1e-9,
            min_eigenvalue: -1e-9,
            unit_norm: 1e-9,
            unitary: 1e-9,
            weight_sum: 1e-9,
            ..Self::default()
        }
    }

    /// Slack for matrices produced by long floating-point pipelines
    /// (channel outputs, ensemble mixtures).
    pub fn computed() -> Self {
        Self {
            hermitian: 1e-10,
            trace: 1e-9,
            min_eigenvalue: -1e-8,
            unit_norm: 1e-10,
            ..Self::default()
        }
    }
}

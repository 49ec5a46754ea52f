//! Singlet fraction and fully entangled fraction.
//!
//! The fully entangled fraction of `χ` is the largest overlap
//! `⟨Φ|(1 ⊗ U†) χ (1 ⊗ U)|Φ⟩` over unitaries `U`. It is found by a projected
//! ascent: with `v(U) = (1 ⊗ U)|Φ⟩` the objective `v†χv` is a convex quadratic
//! in `U`, so replacing `U` by the polar factor of the gradient `χ v(U)`
//! (reshaped to `n × n`) never decreases it. Restarts from the identity and
//! from Haar-random unitaries guard against local maxima; no global
//! certificate is claimed.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    haar_unitary, polar_unitary_completed, svd, unitary_power, Complex64, ComplexMatrix,
    DensityMatrix, PureState, Rng,
};
use crate::weyl::local_dim;

/// `(1 ⊗ W)|Φ⟩`; entry `i·n + k` is `W_ki / √n`.
fn rotated_phi(w: &ComplexMatrix) -> Vec<Complex64> {
    let n = w.rows();
    let scale = 1.0 / (n as f64).sqrt();
    let mut v = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for k in 0..n {
            v[i * n + k] = w[(k, i)] * scale;
        }
    }
    v
}

fn quadratic_form(chi: &DensityMatrix, v: &[Complex64]) -> (f64, Vec<Complex64>) {
    let chi_v = chi.matrix().apply(v);
    let value = v
        .iter()
        .zip(&chi_v)
        .map(|(a, b)| a.conj() * b)
        .sum::<Complex64>()
        .re;
    (value, chi_v)
}

fn check_unitary_dim(chi: &DensityMatrix, w: &ComplexMatrix) -> Result<usize> {
    let n = local_dim(chi.dim())?;
    if w.rows() != n || w.cols() != n {
        return Err(Error::DimensionMismatch {
            context: "rotation unitary",
            expected: n,
            found: w.rows().max(w.cols()),
        });
    }
    Ok(n)
}

/// `⟨Φ|(1 ⊗ W†) χ (1 ⊗ W)|Φ⟩`.
pub fn objective(chi: &DensityMatrix, w: &ComplexMatrix) -> Result<f64> {
    check_unitary_dim(chi, w)?;
    Ok(quadratic_form(chi, &rotated_phi(w)).0)
}

/// `F = ⟨Φ|χ|Φ⟩`.
pub fn singlet_fraction(chi: &DensityMatrix) -> Result<f64> {
    let n = local_dim(chi.dim())?;
    objective(chi, &ComplexMatrix::identity(n))
}

/// Closed form for a pure resource: `(Σ_i s_i)² / n`, with `s_i` the singular
/// values of the coefficient matrix `A_kj = ⟨jk|ψ⟩`. The maximizer is the
/// (completed) polar factor of `A`.
pub fn fef_pure(psi: &PureState) -> Result<(f64, ComplexMatrix)> {
    let n = local_dim(psi.dim())?;
    let amps = psi.amplitudes();
    let a = ComplexMatrix::from_fn(n, n, |k, j| amps[j * n + k]);
    let nuclear: f64 = svd(&a).singular_values.iter().sum();
    let w = normalize_phase(&polar_unitary_completed(&a));
    Ok((nuclear * nuclear / n as f64, w))
}

/// Multiplies `w` by the global phase that makes its first entry (row-major)
/// with modulus above `1e-12` real and non-negative.
pub fn normalize_phase(w: &ComplexMatrix) -> ComplexMatrix {
    let first = w.to_row_major().into_iter().find(|z| z.norm() > 1e-12);
    match first {
        Some(z) => w.scale(z.conj() / z.norm()),
        None => w.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FefOptions {
    /// Total starts; the first is the identity, the rest Haar-random.
    pub restarts: usize,
    pub max_iterations: usize,
    /// A restart stops once one step improves the objective by less than this.
    pub objective_tolerance: f64,
    pub seed: u64,
}

impl Default for FefOptions {
    fn default() -> Self {
        Self {
            restarts: 24,
            max_iterations: 500,
            objective_tolerance: 1e-11,
            seed: 0,
        }
    }
}

impl FefOptions {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_iterations == 0 || self.objective_tolerance <= 0.0 {
            return Err(Error::InvalidOptions(
                "restarts, iterations and tolerance must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One ascent run from a fixed start.
#[derive(Debug, Clone)]
pub struct Ascent {
    pub unitary: ComplexMatrix,
    pub value: f64,
    /// Objective at the start and after every accepted step.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Steps that needed geodesic damping to avoid a decrease.
    pub damped_steps: usize,
}

/// Runs the polar fixed-point ascent from `start`.
pub fn ascend(chi: &DensityMatrix, start: &ComplexMatrix, opts: &FefOptions) -> Result<Ascent> {
    let n = check_unitary_dim(chi, start)?;
    let scale = 1.0 / (n as f64).sqrt();
    let mut u = start.clone();
    let (mut value, mut chi_v) = quadratic_form(chi, &rotated_phi(&u));
    let mut history = vec![value];
    let mut converged = false;
    let mut iterations = 0;
    let mut damped_steps = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let gradient = ComplexMatrix::from_fn(n, n, |k, i| chi_v[i * n + k] * scale);
        let mut candidate = polar_unitary_completed(&gradient);
        let (mut cand_value, mut cand_chi_v) = quadratic_form(chi, &rotated_phi(&candidate));

        if cand_value < value {
            // Only reachable through rounding; fall back along the geodesic.
            damped_steps += 1;
            let step = &u.dagger() * &candidate;
            let mut accepted = false;
            let mut tau = 0.5;
            for _ in 0..30 {
                let trial = &u * &unitary_power(&step, tau)?;
                let (tv, tcv) = quadratic_form(chi, &rotated_phi(&trial));
                if tv >= value {
                    candidate = trial;
                    cand_value = tv;
                    cand_chi_v = tcv;
                    accepted = true;
                    break;
                }
                tau *= 0.5;
            }
            if !accepted {
                converged = true;
                break;
            }
        }

        let improvement = cand_value - value;
        u = candidate;
        value = cand_value;
        chi_v = cand_chi_v;
        history.push(value);
        if improvement < opts.objective_tolerance {
            converged = true;
            break;
        }
    }
    Ok(Ascent {
        unitary: u,
        value,
        history,
        iterations,
        converged,
        damped_steps,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FefResult {
    pub value: f64,
    /// The maximizing unitary, phase-normalized by [`normalize_phase`].
    #[serde(skip)]
    pub maximizer: ComplexMatrix,
    pub restarts_used: usize,
    /// Iterations taken by the winning restart.
    pub iterations: usize,
    /// Whether the winning restart met the objective tolerance.
    pub converged: bool,
    /// Final value of each restart, in start order.
    pub best_restart_values: Vec<f64>,
}

/// Fully entangled fraction by multi-start ascent.
///
/// Restarts run in parallel, each with its own generator split from
/// `opts.seed`; the best value wins with ties going to the earliest start, so
/// the result is bit-reproducible for a given seed.
pub fn fef_optimize(chi: &DensityMatrix, opts: &FefOptions) -> Result<FefResult> {
    opts.validate()?;
    let n = local_dim(chi.dim())?;
    let root = Rng::from_seed(opts.seed);
    let runs: Vec<Result<Ascent>> = (0..opts.restarts)
        .into_par_iter()
        .map(|k| {
            let start = if k == 0 {
                ComplexMatrix::identity(n)
            } else {
                haar_unitary(n, &mut root.split(k as u64))?
            };
            ascend(chi, &start, opts)
        })
        .collect();
    let runs: Vec<Ascent> = runs.into_iter().collect::<Result<_>>()?;

    let mut best = 0;
    for (k, run) in runs.iter().enumerate() {
        if run.value > runs[best].value {
            best = k;
        }
    }
    let winner = &runs[best];
    let maximizer = normalize_phase(&winner.unitary);
    let value = objective(chi, &maximizer)?;
    Ok(FefResult {
        value,
        maximizer,
        restarts_used: runs.len(),
        iterations: winner.iterations,
        converged: winner.converged,
        best_restart_values: runs.iter().map(|r| r.value).collect(),
    })
}

/// Lower bound on the fully entangled fraction: the best objective over
/// `samples` Haar-random unitaries.
pub fn fef_sample_oracle(chi: &DensityMatrix, samples: usize, rng: &mut Rng) -> Result<f64> {
    if samples < 1 {
        return Err(Error::TooFewSamples {
            got: samples,
            min: 1,
        });
    }
    let n = local_dim(chi.dim())?;
    let mut best = f64::NEG_INFINITY;
    for _ in 0..samples {
        let u = haar_unitary(n, rng)?;
        best = best.max(quadratic_form(chi, &rotated_phi(&u)).0);
    }
    Ok(best)
}

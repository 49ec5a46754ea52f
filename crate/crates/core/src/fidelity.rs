//! Transmission fidelity: the exact closed form, the Schur twirl it rests on,
//! and Monte Carlo estimates over Haar-random pure inputs.

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{Protocol, TeleportationChannel};
use crate::error::{Error, Result};
use crate::fef::objective;
use crate::linalg::{
    haar_unitary, random_pure_state, tensor, Complex64, ComplexMatrix, DensityMatrix, Rng,
};
use crate::weyl::{local_dim, weyl_basis};

/// Samples handled by one parallel work unit.
const CHUNK: usize = 4096;

/// Minimum sample count accepted by [`monte_carlo_fidelity`].
pub const MIN_FIDELITY_SAMPLES: usize = 100;

/// Swap operator `P|ij⟩ = |ji⟩` on `n × n`.
pub fn flip_operator(n: usize) -> Result<ComplexMatrix> {
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    Ok(ComplexMatrix::from_fn(n * n, n * n, |r, c| {
        let (i, j) = (c / n, c % n);
        if r == j * n + i {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }))
}

/// `∫ dU (U† ⊗ U†) σ (U ⊗ U) = α₁ I⊗I + α₂ P`.
#[derive(Debug, Clone)]
pub struct TwirlResult {
    pub alpha1: f64,
    pub alpha2: f64,
    pub matrix: ComplexMatrix,
}

fn twirl_dim(sigma: &ComplexMatrix) -> Result<usize> {
    if !sigma.is_square() {
        return Err(Error::NotSquare {
            rows: sigma.rows(),
            cols: sigma.cols(),
        });
    }
    let n = local_dim(sigma.rows())?;
    if n < 2 {
        return Err(Error::TwirlDegenerate(n));
    }
    Ok(n)
}

/// Exact twirl by Schur's lemma:
/// `α₁ = (n² tr σ − n tr σP) / (n²(n²−1))`,
/// `α₂ = (n² tr σP − n tr σ) / (n²(n²−1))`.
///
/// The coefficients are real when `tr σ` and `tr σP` are (e.g. Hermitian σ);
/// imaginary parts are dropped.
pub fn twirl(sigma: &ComplexMatrix) -> Result<TwirlResult> {
    let n = twirl_dim(sigma)?;
    let nf = n as f64;
    let p = flip_operator(n)?;
    let tr = sigma.trace().re;
    let tr_p = (sigma * &p).trace().re;
    let denom = nf * nf * (nf * nf - 1.0);
    let alpha1 = (nf * nf * tr - nf * tr_p) / denom;
    let alpha2 = (nf * nf * tr_p - nf * tr) / denom;
    let matrix = &ComplexMatrix::identity(n * n).scale_real(alpha1) + &p.scale_real(alpha2);
    Ok(TwirlResult {
        alpha1,
        alpha2,
        matrix,
    })
}

/// Running mean and second central moment of complex vectors, mergeable
/// (Chan et al.) so that chunked parallel sums stay order-deterministic.
#[derive(Debug, Clone)]
struct Moments {
    count: usize,
    mean: Vec<Complex64>,
    m2: Vec<f64>,
}

impl Moments {
    fn new(len: usize) -> Self {
        Self {
            count: 0,
            mean: vec![Complex64::new(0.0, 0.0); len],
            m2: vec![0.0; len],
        }
    }

    fn push(&mut self, x: &[Complex64]) {
        self.count += 1;
        let k = self.count as f64;
        for ((m, q), &v) in self.mean.iter_mut().zip(&mut self.m2).zip(x) {
            let delta = v - *m;
            *m += delta / k;
            *q += (delta.conj() * (v - *m)).re;
        }
    }

    fn merge(mut self, other: &Moments) -> Self {
        if other.count == 0 {
            return self;
        }
        if self.count == 0 {
            return other.clone();
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let total = na + nb;
        for i in 0..self.mean.len() {
            let delta = other.mean[i] - self.mean[i];
            self.mean[i] += delta * (nb / total);
            self.m2[i] += other.m2[i] + delta.norm_sqr() * na * nb / total;
        }
        self.count += other.count;
        self
    }

    /// Standard error of each mean entry; the complex variance `E|x − x̄|²`
    /// is used for complex entries.
    fn std_errors(&self) -> Vec<f64> {
        let n = self.count as f64;
        self.m2
            .iter()
            .map(|&q| {
                if self.count < 2 {
                    0.0
                } else {
                    (q / (n - 1.0)).max(0.0).sqrt() / n.sqrt()
                }
            })
            .collect()
    }
}

/// Draws `samples` vectors of length `len` in parallel chunks. Chunk `k` uses
/// the `k`-th split of a generator seeded from one draw of `rng`.
fn sample_moments<F>(samples: usize, len: usize, rng: &mut Rng, draw: F) -> Result<Moments>
where
    F: Fn(&mut Rng) -> Result<Vec<Complex64>> + Sync,
{
    let root = Rng::from_seed(rng.next_u64());
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<Result<Moments>> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut local = root.split(k as u64);
            let size = CHUNK.min(samples - k * CHUNK);
            let mut m = Moments::new(len);
            for _ in 0..size {
                m.push(&draw(&mut local)?);
            }
            Ok(m)
        })
        .collect();
    let mut total = Moments::new(len);
    for part in parts {
        total = total.merge(&part?);
    }
    Ok(total)
}

/// Monte Carlo twirl with per-entry standard errors.
#[derive(Debug, Clone)]
pub struct TwirlEstimate {
    pub mean: ComplexMatrix,
    /// Row-major standard error of each entry of `mean`.
    pub std_error: Vec<f64>,
    pub samples: usize,
}

impl TwirlEstimate {
    /// Largest `|mean − exact| / std_error` over entries. Deviations below
    /// `1e-12` count as exact agreement whatever the spread.
    pub fn max_z(&self, exact: &ComplexMatrix) -> f64 {
        let mean = self.mean.to_row_major();
        let exact = exact.to_row_major();
        mean.iter()
            .zip(&exact)
            .zip(&self.std_error)
            .map(|((m, e), &se)| {
                let dev = (m - e).norm();
                if dev <= 1e-12 {
                    0.0
                } else if se > 0.0 {
                    dev / se
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn max_abs_deviation(&self, exact: &ComplexMatrix) -> f64 {
        (&self.mean - exact).max_abs()
    }
}

/// Average of `(U† ⊗ U†) σ (U ⊗ U)` over Haar-random `U`.
pub fn monte_carlo_twirl(
    sigma: &ComplexMatrix,
    samples: usize,
    rng: &mut Rng,
) -> Result<TwirlEstimate> {
    let n = twirl_dim(sigma)?;
    if samples < 2 {
        return Err(Error::TooFewSamples {
            got: samples,
            min: 2,
        });
    }
    let m = n * n;
    let moments = sample_moments(samples, m * m, rng, |r| {
        let u = haar_unitary(n, r)?;
        let k = tensor(&u, &u);
        Ok((&(&k.dagger() * sigma) * &k).to_row_major())
    })?;
    let mean = ComplexMatrix::from_row_major(m, m, &moments.mean)?;
    Ok(TwirlEstimate {
        mean,
        std_error: moments.std_errors(),
        samples,
    })
}

/// Exact transmission fidelity of a protocol:
/// `f = Σ_γβ ⟨Φ|(1 ⊗ W†_γβ) χ (1 ⊗ W_γβ)|Φ⟩ / (n(n+1)) + 1/(n+1)` with
/// `W_γβ = T_γβ U†_γβ`.
pub fn transmission_fidelity(chi: &DensityMatrix, protocol: &Protocol) -> Result<f64> {
    let n = local_dim(chi.dim())?;
    if protocol.n() != n {
        return Err(Error::DimensionMismatch {
            context: "protocol vs resource",
            expected: n,
            found: protocol.n(),
        });
    }
    if n < 2 {
        return Err(Error::TrivialDimension(n));
    }
    let basis = weyl_basis(n)?;
    let mut overlap_sum = 0.0;
    for (t, u) in protocol.corrections().iter().zip(basis.ops()) {
        overlap_sum += objective(chi, &(t * &u.dagger()))?;
    }
    let nf = n as f64;
    Ok(overlap_sum / (nf * (nf + 1.0)) + 1.0 / (nf + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FidelityEstimate {
    pub mean: f64,
    /// Sample standard deviation over `√samples`.
    pub std_error: f64,
    pub samples: usize,
}

impl FidelityEstimate {
    /// `|mean − reference|` in units of the standard error; `0` when the
    /// deviation is below `1e-12`.
    pub fn z_score(&self, reference: f64) -> f64 {
        let dev = (self.mean - reference).abs();
        if dev <= 1e-12 {
            0.0
        } else if self.std_error > 0.0 {
            dev / self.std_error
        } else {
            f64::INFINITY
        }
    }
}

/// Average of `⟨φ|Λ(|φ⟩⟨φ|)|φ⟩` over uniformly random pure inputs `φ`.
pub fn monte_carlo_fidelity(
    chi: &DensityMatrix,
    protocol: &Protocol,
    samples: usize,
    rng: &mut Rng,
) -> Result<FidelityEstimate> {
    if samples < MIN_FIDELITY_SAMPLES {
        return Err(Error::TooFewSamples {
            got: samples,
            min: MIN_FIDELITY_SAMPLES,
        });
    }
    let channel = TeleportationChannel::new(chi, protocol)?;
    let n = channel.n();
    if n < 2 {
        return Err(Error::TrivialDimension(n));
    }
    let moments = sample_moments(samples, 1, rng, |r| {
        let phi = random_pure_state(n, r)?;
        Ok(vec![Complex64::new(
            channel.pure_fidelity(phi.amplitudes()),
            0.0,
        )])
    })?;
    Ok(FidelityEstimate {
        mean: moments.mean[0].re,
        std_error: moments.std_errors()[0],
        samples,
    })
}

/// Same estimate as [`monte_carlo_fidelity`], but every sample runs the
/// literal Bell-measurement simulation instead of the closed-form channel.
pub fn simulated_fidelity(
    ensemble: &crate::linalg::Ensemble,
    protocol: &Protocol,
    samples: usize,
    rng: &mut Rng,
) -> Result<FidelityEstimate> {
    if samples < MIN_FIDELITY_SAMPLES {
        return Err(Error::TooFewSamples {
            got: samples,
            min: MIN_FIDELITY_SAMPLES,
        });
    }
    let n = protocol.n();
    if n < 2 {
        return Err(Error::TrivialDimension(n));
    }
    let moments = sample_moments(samples, 1, rng, |r| {
        let phi = random_pure_state(n, r)?;
        let mut f = 0.0;
        for (p, member) in ensemble.members() {
            let sim = crate::channel::simulate_protocol_pure(member, protocol, &phi)?;
            f += p * sim.aggregate.expectation(phi.amplitudes());
        }
        Ok(vec![Complex64::new(f, 0.0)])
    })?;
    Ok(FidelityEstimate {
        mean: moments.mean[0].re,
        std_error: moments.std_errors()[0],
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::standard_protocol;
    use crate::linalg::random_density_matrix;
    use crate::weyl::max_entangled;

    fn random_hermitian(dim: usize, rng: &mut Rng) -> ComplexMatrix {
        ComplexMatrix::from_fn(dim, dim, |_, _| rng.complex_normal()).hermitian_part()
    }

    fn random_protocol(n: usize, rng: &mut Rng) -> Protocol {
        Protocol::new(
            n,
            (0..n * n).map(|_| haar_unitary(n, rng).unwrap()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn flip_operator_properties() {
        let p = flip_operator(2).unwrap();
        let mut expected = ComplexMatrix::identity(4).to_row_major();
        expected.swap(4 + 1, 4 + 2);
        expected.swap(2 * 4 + 2, 2 * 4 + 1);
        assert_eq!(p, ComplexMatrix::from_row_major(4, 4, &expected).unwrap());
        let p3 = flip_operator(3).unwrap();
        assert!((p3.trace() - 3.0).norm() < 1e-15);
        assert!((&(&p3 * &p3) - &ComplexMatrix::identity(9)).max_abs() < 1e-15);
        assert!(p3.hermiticity_deviation() < 1e-15);
        assert_eq!(flip_operator(0), Err(Error::ZeroDimension));
    }

    #[test]
    fn flip_trace_identity() {
        let mut rng = Rng::from_seed(50);
        let a = ComplexMatrix::from_fn(3, 3, |_, _| rng.complex_normal());
        let b = ComplexMatrix::from_fn(3, 3, |_, _| rng.complex_normal());
        let lhs = (&tensor(&a, &b) * &flip_operator(3).unwrap()).trace();
        let rhs = (&a * &b).trace();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn twirl_of_schur_components() {
        let id = twirl(&ComplexMatrix::identity(4)).unwrap();
        assert_eq!((id.alpha1, id.alpha2), (1.0, 0.0));
        let p = twirl(&flip_operator(2).unwrap()).unwrap();
        assert_eq!((p.alpha1, p.alpha2), (0.0, 1.0));
        assert!(matches!(
            twirl(&ComplexMatrix::identity(1)),
            Err(Error::TwirlDegenerate(1))
        ));
        assert!(twirl(&ComplexMatrix::identity(5)).is_err());
    }

    #[test]
    fn twirl_is_idempotent_and_commutes() {
        let mut rng = Rng::from_seed(51);
        for n in [2, 3] {
            let sigma = random_hermitian(n * n, &mut rng);
            let t = twirl(&sigma).unwrap();
            let tt = twirl(&t.matrix).unwrap();
            assert!((&tt.matrix - &t.matrix).max_abs() < 1e-14);
            let tr = t.matrix.trace().re;
            let nf = n as f64;
            assert!((tr - (nf * nf * t.alpha1 + nf * t.alpha2)).abs() < 1e-12);
            let u = haar_unitary(n, &mut rng).unwrap();
            let k = tensor(&u, &u);
            let comm = &(&k * &t.matrix) - &(&t.matrix * &k);
            assert!(comm.max_abs() < 1e-9);
        }
    }

    #[test]
    fn twirl_matches_haar_average() {
        let mut rng = Rng::from_seed(52);
        let sigma = random_hermitian(4, &mut rng);
        let exact = twirl(&sigma).unwrap();
        let est = monte_carlo_twirl(&sigma, 100_000, &mut rng).unwrap();
        assert!(
            est.max_z(&exact.matrix) < 3.0 * 1.5,
            "z = {}",
            est.max_z(&exact.matrix)
        );
        assert!(est.max_abs_deviation(&exact.matrix) < 0.05);
    }

    #[test]
    fn fidelity_examples() {
        for n in [2, 3] {
            let phi = max_entangled(n).unwrap().projector();
            let f = transmission_fidelity(&phi, &standard_protocol(n).unwrap()).unwrap();
            assert!((f - 1.0).abs() < 1e-14);
        }
        let mut rng = Rng::from_seed(53);
        let mixed = DensityMatrix::maximally_mixed(4).unwrap();
        let f = transmission_fidelity(&mixed, &random_protocol(2, &mut rng)).unwrap();
        assert!((f - 0.5).abs() < 1e-14);
        let mixed3 = DensityMatrix::maximally_mixed(9).unwrap();
        let f = transmission_fidelity(&mixed3, &random_protocol(3, &mut rng)).unwrap();
        assert!((f - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn fidelity_rejects_trivial_dimension() {
        let chi = DensityMatrix::maximally_mixed(1).unwrap();
        let p = standard_protocol(1).unwrap();
        assert_eq!(
            transmission_fidelity(&chi, &p),
            Err(Error::TrivialDimension(1))
        );
    }

    #[test]
    fn fidelity_bounds_and_affinity() {
        let mut rng = Rng::from_seed(54);
        for n in [2, 3] {
            let p = random_protocol(n, &mut rng);
            let c1 = random_density_matrix(n * n, 2, &mut rng).unwrap();
            let c2 = random_density_matrix(n * n, n * n, &mut rng).unwrap();
            let lambda = 0.37;
            let mix = DensityMatrix::with_tolerances(
                &c1.matrix().scale_real(lambda) + &c2.matrix().scale_real(1.0 - lambda),
                &crate::Tolerances::computed(),
            )
            .unwrap();
            let f1 = transmission_fidelity(&c1, &p).unwrap();
            let f2 = transmission_fidelity(&c2, &p).unwrap();
            let fm = transmission_fidelity(&mix, &p).unwrap();
            assert!((fm - (lambda * f1 + (1.0 - lambda) * f2)).abs() < 1e-10);
            for f in [f1, f2, fm] {
                assert!(f >= 1.0 / (n as f64 + 1.0) - 1e-12 && f <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn monte_carlo_perfect_channel() {
        let mut rng = Rng::from_seed(55);
        let phi = max_entangled(2).unwrap().projector();
        let est =
            monte_carlo_fidelity(&phi, &standard_protocol(2).unwrap(), 1000, &mut rng).unwrap();
        assert!((est.mean - 1.0).abs() < 1e-12);
        assert!(est.std_error < 1e-12);
        assert_eq!(est.samples, 1000);
    }

    #[test]
    fn monte_carlo_maximally_mixed() {
        let mut rng = Rng::from_seed(56);
        let chi = DensityMatrix::maximally_mixed(4).unwrap();
        let est =
            monte_carlo_fidelity(&chi, &standard_protocol(2).unwrap(), 10_000, &mut rng).unwrap();
        assert!(est.z_score(0.5) < 3.0);
    }

    #[test]
    fn monte_carlo_qutrit_matches_closed_form() {
        let mut rng = Rng::from_seed(57);
        let chi = random_density_matrix(9, 3, &mut rng).unwrap();
        let p = random_protocol(3, &mut rng);
        let exact = transmission_fidelity(&chi, &p).unwrap();
        let est = monte_carlo_fidelity(&chi, &p, 100_000, &mut rng).unwrap();
        assert!(est.z_score(exact) < 3.0, "z = {}", est.z_score(exact));
    }

    #[test]
    fn monte_carlo_reproducible_and_validated() {
        let chi = DensityMatrix::maximally_mixed(4).unwrap();
        let p = standard_protocol(2).unwrap();
        let a = monte_carlo_fidelity(&chi, &p, 5000, &mut Rng::from_seed(9)).unwrap();
        let b = monte_carlo_fidelity(&chi, &p, 5000, &mut Rng::from_seed(9)).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            monte_carlo_fidelity(&chi, &p, 99, &mut Rng::from_seed(9)),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn simulated_fidelity_agrees_with_closed_form() {
        let mut rng = Rng::from_seed(58);
        let chi = random_density_matrix(4, 2, &mut rng).unwrap();
        let p = random_protocol(2, &mut rng);
        let exact = transmission_fidelity(&chi, &p).unwrap();
        let ens = chi.spectral_ensemble(1e-14);
        let est = simulated_fidelity(&ens, &p, 20_000, &mut rng).unwrap();
        assert!(est.z_score(exact) < 3.0, "z = {}", est.z_score(exact));
    }
}

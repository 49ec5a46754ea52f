//! Seeded sampling: Gaussian vectors, Haar unitaries, random states.
//!
//! The generator is ChaCha20 (`rand_chacha`) keyed by a 64-bit seed, so a
//! given seed yields the same stream on every platform. Parallel workers never
//! share an `Rng`; they each take [`Rng::split`] with a distinct index.

use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use super::{partial_trace, Complex64, ComplexMatrix, DensityMatrix, PureState, Subsystem};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    inner: ChaCha20Rng,
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Rng {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Child generator for worker `index`. Depends only on the parent seed and
    /// the index, never on how much of the parent stream was consumed.
    pub fn split(&self, index: u64) -> Rng {
        let child = mix(self.seed ^ 0x9e37_79b9_7f4a_7c15u64.wrapping_mul(index.wrapping_add(1)));
        Rng::from_seed(child)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Standard complex Gaussian, `E|z|² = 1`.
    pub fn complex_normal(&mut self) -> Complex64 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Complex64::new(s * self.normal(), s * self.normal())
    }
}

/// Haar-distributed `n × n` unitary: QR of a complex Ginibre matrix with the
/// phases of `R`'s diagonal moved into `Q`.
pub fn haar_unitary(n: usize, rng: &mut Rng) -> Result<ComplexMatrix> {
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    let ginibre = ComplexMatrix::from_fn(n, n, |_, _| rng.complex_normal());
    let qr = ginibre.into_nalgebra().qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    ComplexMatrix::from_nalgebra(q)
}

/// Uniformly random pure state: a normalized complex Gaussian vector.
pub fn random_pure_state(n: usize, rng: &mut Rng) -> Result<PureState> {
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    let v: Vec<Complex64> = (0..n).map(|_| rng.complex_normal()).collect();
    PureState::normalized(v)
}

/// Random density matrix of the given rank: the marginal of a random pure
/// state on `n × rank`.
pub fn random_density_matrix(n: usize, rank: usize, rng: &mut Rng) -> Result<DensityMatrix> {
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    if rank < 1 || rank > n {
        return Err(Error::InvalidRank { rank, n });
    }
    let psi = random_pure_state(n * rank, rng)?;
    let proj = ComplexMatrix::outer(psi.amplitudes(), psi.amplitudes());
    let reduced = partial_trace(&proj, n, rank, Subsystem::Second)?;
    // Rounding can leave a ~1e-17 anti-Hermitian part.
    DensityMatrix::new(reduced.hermitian_part())
}

//! Teleportation protocols and the channel they induce.
//!
//! Particles are ordered (input, Alice's half, Bob's half). Alice measures the
//! first two in the Bell basis of [`crate::weyl`]; on outcome `(s, t)` Bob
//! applies `T†_st`, so the closed-form channel is
//!
//! ```text
//! Λ(ρ) = n⁻² Σ_{st,s't'} c[st, s't'] Σ_γβ T†_γβ U_st U_γβ ρ U†_γβ U†_s't' T_γβ
//! ```
//!
//! For a pure resource `|Ψ⟩ = Σ_j |j⟩ ⊗ A|j⟩` (so `A_kj = ⟨jk|Ψ⟩`), Bob holds
//! `n^{-1/2} A U_st |φ⟩` after outcome `(s, t)`. Writing `A = Σ a_st U_st`, the
//! coefficients are `c[st, s't'] = n a_st conj(a_s't')`, which equals
//! `⟨Φ̄_st|χ|Φ̄_s't'⟩` where `Φ̄_st = (1 ⊗ U_st)|Φ⟩` is the complex conjugate
//! of the measured Bell vector. The two coincide for qubits, where every
//! `U_st` is real, but not for `n ≥ 3`.
//!
//! [`simulate_protocol_pure`] and [`simulate_protocol_mixed`] run the protocol
//! literally and serve as an independent check on [`apply_channel`].

use crate::error::{Error, Result};
use crate::linalg::{tensor, Complex64, ComplexMatrix, DensityMatrix, Ensemble, PureState};
use crate::tolerance::Tolerances;
use crate::weyl::{bell_basis_from, local_dim, weyl_basis, BellBasis, OperatorBasis};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Bob's correction unitaries `T_st`, indexed like the Weyl basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Protocol {
    n: usize,
    corrections: Vec<ComplexMatrix>,
}

impl Protocol {
    pub fn new(n: usize, corrections: Vec<ComplexMatrix>) -> Result<Self> {
        Self::with_tolerance(n, corrections, Tolerances::default().unitary)
    }

    pub fn with_tolerance(n: usize, corrections: Vec<ComplexMatrix>, tol: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::ZeroDimension);
        }
        if corrections.len() != n * n {
            return Err(Error::DimensionMismatch {
                context: "protocol corrections",
                expected: n * n,
                found: corrections.len(),
            });
        }
        for t in &corrections {
            if t.rows() != n || t.cols() != n {
                return Err(Error::DimensionMismatch {
                    context: "protocol correction size",
                    expected: n,
                    found: t.rows().max(t.cols()),
                });
            }
            let deviation = t.unitarity_deviation();
            if deviation > tol {
                return Err(Error::NotUnitary { deviation });
            }
        }
        Ok(Self { n, corrections })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn corrections(&self) -> &[ComplexMatrix] {
        &self.corrections
    }

    pub fn get(&self, s: usize, t: usize) -> &ComplexMatrix {
        &self.corrections[self.n * s + t]
    }
}

/// `T_st = U_st`.
pub fn standard_protocol(n: usize) -> Result<Protocol> {
    let basis = weyl_basis(n)?;
    Ok(Protocol {
        n,
        corrections: basis.ops().to_vec(),
    })
}

/// `T_st = W U_st` for a unitary `W`.
pub fn rotated_protocol(w: &ComplexMatrix, basis: &OperatorBasis) -> Result<Protocol> {
    let corrections = basis.ops().iter().map(|u| w * u).collect();
    Protocol::new(basis.n(), corrections)
}

/// The `n² × n²` coefficient matrix entering the closed-form channel.
#[derive(Debug, Clone)]
pub struct BellCoefficients {
    n: usize,
    c: ComplexMatrix,
}

impl BellCoefficients {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.c
    }

    /// Largest violation among Hermiticity, diagonal reality/positivity and
    /// unit trace.
    pub fn invariant_violation(&self) -> f64 {
        let herm = self.c.hermiticity_deviation();
        let mut diag = 0.0_f64;
        for a in 0..self.c.rows() {
            let d = self.c[(a, a)];
            diag = diag.max(d.im.abs()).max((-d.re).max(0.0));
        }
        let trace = (self.c.trace() - 1.0).norm();
        herm.max(diag).max(trace)
    }
}

/// Computes `c[st, s't']` for a resource `χ` on `n × n`.
pub fn bell_coefficients(chi: &DensityMatrix, bell: &BellBasis) -> Result<BellCoefficients> {
    let n = bell.n();
    if chi.dim() != n * n {
        return Err(Error::DimensionMismatch {
            context: "bell_coefficients",
            expected: n * n,
            found: chi.dim(),
        });
    }
    let conj_vectors: Vec<Vec<Complex64>> = bell
        .vectors()
        .iter()
        .map(|v| v.amplitudes().iter().map(|z| z.conj()).collect())
        .collect();
    let chi_cols: Vec<Vec<Complex64>> =
        conj_vectors.iter().map(|v| chi.matrix().apply(v)).collect();
    let m = n * n;
    let c = ComplexMatrix::from_fn(m, m, |a, b| {
        conj_vectors[a]
            .iter()
            .zip(&chi_cols[b])
            .map(|(x, y)| x.conj() * y)
            .sum()
    });
    Ok(BellCoefficients { n, c })
}

/// Precomputed `Y_a = Σ_b c[a, b] U†_b`, so the inner double sum of the
/// closed form collapses to `Σ_a U_a X Y_a`.
fn contracted_coefficients(coeffs: &BellCoefficients, basis: &OperatorBasis) -> Vec<ComplexMatrix> {
    let n = basis.n();
    let daggers: Vec<ComplexMatrix> = basis.ops().iter().map(|u| u.dagger()).collect();
    (0..n * n)
        .map(|a| {
            let mut y = ComplexMatrix::zeros(n, n);
            for (b, ub) in daggers.iter().enumerate() {
                let w = coeffs.c[(a, b)];
                if w != ZERO {
                    y = &y + &ub.scale(w);
                }
            }
            y
        })
        .collect()
}

fn check_dims(chi: &DensityMatrix, protocol: &Protocol) -> Result<usize> {
    let n = local_dim(chi.dim())?;
    if protocol.n() != n {
        return Err(Error::DimensionMismatch {
            context: "protocol vs resource",
            expected: n,
            found: protocol.n(),
        });
    }
    Ok(n)
}

/// Output of the teleportation channel for input `ρ`, evaluated directly from
/// the closed form.
pub fn apply_channel(
    chi: &DensityMatrix,
    protocol: &Protocol,
    rho: &DensityMatrix,
) -> Result<DensityMatrix> {
    let n = check_dims(chi, protocol)?;
    if rho.dim() != n {
        return Err(Error::DimensionMismatch {
            context: "channel input",
            expected: n,
            found: rho.dim(),
        });
    }
    let basis = weyl_basis(n)?;
    let bell = bell_basis_from(&basis);
    let coeffs = bell_coefficients(chi, &bell)?;
    let out = closed_form_output(&coeffs, &basis, protocol, rho.matrix());
    DensityMatrix::with_tolerances(out.hermitian_part(), &Tolerances::computed())
}

fn closed_form_output(
    coeffs: &BellCoefficients,
    basis: &OperatorBasis,
    protocol: &Protocol,
    rho: &ComplexMatrix,
) -> ComplexMatrix {
    let n = basis.n();
    let ys = contracted_coefficients(coeffs, basis);
    let mut out = ComplexMatrix::zeros(n, n);
    for (u_gb, t_gb) in basis.ops().iter().zip(protocol.corrections()) {
        let x = &(u_gb * rho) * &u_gb.dagger();
        let mut inner = ComplexMatrix::zeros(n, n);
        for (u_a, y_a) in basis.ops().iter().zip(&ys) {
            inner = &inner + &(&(u_a * &x) * y_a);
        }
        out = &out + &(&(&t_gb.dagger() * &inner) * t_gb);
    }
    out.scale_real(1.0 / (n * n) as f64)
}

/// The channel as a linear map on row-major `vec(ρ)`.
///
/// Built from the same closed form as [`apply_channel`], using
/// `vec(A X B) = (A ⊗ Bᵀ) vec(X)`.
#[derive(Debug, Clone)]
pub struct TeleportationChannel {
    n: usize,
    superop: ComplexMatrix,
}

impl TeleportationChannel {
    pub fn new(chi: &DensityMatrix, protocol: &Protocol) -> Result<Self> {
        let n = check_dims(chi, protocol)?;
        let basis = weyl_basis(n)?;
        let bell = bell_basis_from(&basis);
        let coeffs = bell_coefficients(chi, &bell)?;
        let ys = contracted_coefficients(&coeffs, &basis);

        let mut inner = ComplexMatrix::zeros(n * n, n * n);
        for (u_a, y_a) in basis.ops().iter().zip(&ys) {
            inner = &inner + &tensor(u_a, &y_a.transpose());
        }
        let mut superop = ComplexMatrix::zeros(n * n, n * n);
        for (u_gb, t_gb) in basis.ops().iter().zip(protocol.corrections()) {
            let pre = tensor(u_gb, &u_gb.conj());
            let post = tensor(&t_gb.dagger(), &t_gb.transpose());
            superop = &superop + &(&(&post * &inner) * &pre);
        }
        Ok(Self {
            n,
            superop: superop.scale_real(1.0 / (n * n) as f64),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn superoperator(&self) -> &ComplexMatrix {
        &self.superop
    }

    /// `Λ(ρ)` for an arbitrary `n × n` matrix.
    pub fn apply_matrix(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let n = self.n;
        let v = self.superop.apply(&rho.to_row_major());
        ComplexMatrix::from_fn(n, n, |i, j| v[i * n + j])
    }

    /// `⟨φ|Λ(|φ⟩⟨φ|)|φ⟩`.
    pub fn pure_fidelity(&self, phi: &[Complex64]) -> f64 {
        let n = self.n;
        let m = n * n;
        let mut total = ZERO;
        for row in 0..m {
            let (k, l) = (row / n, row % n);
            let weight = phi[k].conj() * phi[l];
            let mut acc = ZERO;
            for col in 0..m {
                let (i, j) = (col / n, col % n);
                acc += self.superop[(row, col)] * phi[i] * phi[j].conj();
            }
            total += weight * acc;
        }
        total.re
    }

    /// Choi matrix `Σ_ij |i⟩⟨j| ⊗ Λ(|i⟩⟨j|)`; positive semidefinite iff the map
    /// is completely positive.
    pub fn choi(&self) -> ComplexMatrix {
        let n = self.n;
        ComplexMatrix::from_fn(n * n, n * n, |r, c| {
            let (i, k) = (r / n, r % n);
            let (j, l) = (c / n, c % n);
            self.superop[(k * n + l, i * n + j)]
        })
    }
}

/// One branch of Alice's Bell measurement.
#[derive(Debug, Clone)]
pub struct OutcomeRecord {
    pub outcome: (usize, usize),
    pub probability: f64,
    /// Bob's normalized state after correction; `I/n` for a zero-probability
    /// branch.
    pub bob_state: DensityMatrix,
}

#[derive(Debug, Clone)]
pub struct PureSimulation {
    pub outcomes: Vec<OutcomeRecord>,
    /// `Σ_st p_st × bob_state_st`.
    pub aggregate: DensityMatrix,
    /// Largest difference between Bob's corrected (unnormalized) vector from
    /// the literal projection and from the `n^{-1/2} T† A U_st φ` formula.
    pub route_gap: f64,
}

/// Runs the protocol on pure resource and input states by projecting
/// particles 1 and 2 of `|φ⟩ ⊗ |Ψ⟩` onto each Bell vector.
pub fn simulate_protocol_pure(
    resource: &PureState,
    protocol: &Protocol,
    input: &PureState,
) -> Result<PureSimulation> {
    let n = protocol.n();
    if resource.dim() != n * n {
        return Err(Error::DimensionMismatch {
            context: "resource state",
            expected: n * n,
            found: resource.dim(),
        });
    }
    if input.dim() != n {
        return Err(Error::DimensionMismatch {
            context: "input state",
            expected: n,
            found: input.dim(),
        });
    }
    let basis = weyl_basis(n)?;
    let bell = bell_basis_from(&basis);
    let joint = input.tensor(resource);
    let psi = resource.amplitudes();
    let a = ComplexMatrix::from_fn(n, n, |k, j| psi[j * n + k]);
    let scale = 1.0 / (n as f64).sqrt();

    let mut outcomes = Vec::with_capacity(n * n);
    let mut aggregate = ComplexMatrix::zeros(n, n);
    let mut route_gap = 0.0_f64;
    for (idx, phi_st) in bell.vectors().iter().enumerate() {
        let (s, t) = basis.pair(idx);
        let b = phi_st.amplitudes();
        let mut bob = vec![ZERO; n];
        for (ij, amp) in b.iter().enumerate() {
            let w = amp.conj();
            if w == ZERO {
                continue;
            }
            for (k, slot) in bob.iter_mut().enumerate() {
                *slot += w * joint.amplitudes()[ij * n + k];
            }
        }
        let t_dag = protocol.corrections()[idx].dagger();
        let corrected = t_dag.apply(&bob);

        let formula: Vec<Complex64> = t_dag
            .apply(&(&a * basis.get(s, t)).apply(input.amplitudes()))
            .into_iter()
            .map(|z| z * scale)
            .collect();
        let gap = corrected
            .iter()
            .zip(&formula)
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        route_gap = route_gap.max(gap);

        let probability: f64 = corrected.iter().map(|z| z.norm_sqr()).sum();
        let unnormalized = ComplexMatrix::outer(&corrected, &corrected);
        aggregate = &aggregate + &unnormalized;
        let bob_state = if probability > 1e-14 {
            DensityMatrix::with_tolerances(
                unnormalized.scale_real(1.0 / probability).hermitian_part(),
                &Tolerances::computed(),
            )?
        } else {
            DensityMatrix::maximally_mixed(n)?
        };
        outcomes.push(OutcomeRecord {
            outcome: (s, t),
            probability,
            bob_state,
        });
    }
    let aggregate =
        DensityMatrix::with_tolerances(aggregate.hermitian_part(), &Tolerances::computed())?;
    Ok(PureSimulation {
        outcomes,
        aggregate,
        route_gap,
    })
}

#[derive(Debug, Clone)]
pub struct MixedSimulation {
    /// Probability of each Bell outcome, flat `(s, t)` order.
    pub probabilities: Vec<f64>,
    pub aggregate: DensityMatrix,
    /// Worst pure-simulation route gap encountered.
    pub route_gap: f64,
}

/// Runs the protocol for every ensemble member and every eigenvector of
/// `ρ_in`, and mixes the results with the corresponding weights.
pub fn simulate_protocol_mixed_detailed(
    ensemble: &Ensemble,
    protocol: &Protocol,
    rho_in: &DensityMatrix,
) -> Result<MixedSimulation> {
    let n = protocol.n();
    if ensemble.dim() != n * n {
        return Err(Error::DimensionMismatch {
            context: "ensemble state",
            expected: n * n,
            found: ensemble.dim(),
        });
    }
    if rho_in.dim() != n {
        return Err(Error::DimensionMismatch {
            context: "input state",
            expected: n,
            found: rho_in.dim(),
        });
    }
    let (vals, vecs) = crate::linalg::hermitian_eigen(rho_in.matrix());
    let mut probabilities = vec![0.0; n * n];
    let mut aggregate = ComplexMatrix::zeros(n, n);
    let mut route_gap = 0.0_f64;
    for (k, &lambda) in vals.iter().enumerate() {
        if lambda == 0.0 {
            continue;
        }
        let v: Vec<Complex64> = (0..n).map(|i| vecs[(i, k)]).collect();
        let input = PureState::normalized(v)?;
        for (p, member) in ensemble.members() {
            if *p == 0.0 {
                continue;
            }
            let sim = simulate_protocol_pure(member, protocol, &input)?;
            let w = p * lambda;
            for (slot, rec) in probabilities.iter_mut().zip(&sim.outcomes) {
                *slot += w * rec.probability;
            }
            aggregate = &aggregate + &sim.aggregate.matrix().scale_real(w);
            route_gap = route_gap.max(sim.route_gap);
        }
    }
    let aggregate =
        DensityMatrix::with_tolerances(aggregate.hermitian_part(), &Tolerances::computed())?;
    Ok(MixedSimulation {
        probabilities,
        aggregate,
        route_gap,
    })
}

/// Bob's final state for a mixed resource given as an ensemble.
pub fn simulate_protocol_mixed(
    ensemble: &Ensemble,
    protocol: &Protocol,
    rho_in: &DensityMatrix,
) -> Result<DensityMatrix> {
    Ok(simulate_protocol_mixed_detailed(ensemble, protocol, rho_in)?.aggregate)
}

//! Incompatible extremal decompositions of a process and the finite-model
//! support checks built on them.
//!
//! The fully depolarizing channel between two qubit regions mixes evenly
//! over the four Pauli-conjugation channels, and equally well over the four
//! channels conjugated by any fixed unitary `U`. Each part is an extremal
//! (rank-one) process, so a finite ontic candidate that decomposes the
//! mixture must put every supporting point in proportion to a part of *each*
//! decomposition simultaneously. For suitable `U` (Hadamard, for instance)
//! no part of one decomposition is proportional to any part of the other,
//! which no candidate can survive; [`support_partition_check`] makes that
//! argument executable against a concrete candidate.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linprog::{solve_nonnegative, Feasibility};
use crate::matrix::{pauli_basis, proportionality, psd_rank, ComplexMatrix};
use crate::process::{convex_mix, OnticModelCandidate, ProcessMatrix};

/// Weights below this threshold count as zero when reading supports off an
/// LP solution; separates true zeros from simplex round-off at these scales.
pub const SUPPORT_TOL: f64 = 1e-8;

/// A claimed convex decomposition of some target process into extremal
/// parts.
#[derive(Debug, Clone, Serialize)]
pub struct Decomposition {
    pub weights: Vec<f64>,
    pub parts: Vec<ProcessMatrix>,
}

impl Decomposition {
    pub fn mix(&self) -> Result<ProcessMatrix> {
        convex_mix(&self.parts, &self.weights)
    }
}

/// The two decompositions of a common target together with the outcome of
/// all cross proportionality tests. The witness exhibits a contradiction
/// exactly when `proportional_pairs` is empty while both decompositions
/// reproduce the target.
#[derive(Debug, Clone, Serialize)]
pub struct ContradictionWitness {
    pub target: ProcessMatrix,
    pub decomposition_a: Decomposition,
    pub decomposition_b: Decomposition,
    /// `(j, k, c)` with part `j` of A equal to `c` times part `k` of B.
    pub proportional_pairs: Vec<(usize, usize, Complex64)>,
    /// Frobenius distance between the two mixtures.
    pub mix_distance: f64,
}

impl ContradictionWitness {
    pub fn confirms_contradiction(&self) -> bool {
        self.proportional_pairs.is_empty()
    }
}

/// Builds the two even mixtures of unitary-channel processes: conjugation by
/// the four Paulis, and conjugation by `u` times the four Paulis. Each part
/// is normalized as a channel process and checked to be extremal (rank-one).
pub fn build_pauli_decompositions(u: &ComplexMatrix) -> Result<(Decomposition, Decomposition)> {
    if u.rows() != 2 || u.cols() != 2 {
        return Err(Error::Dimension("decompositions are built from a 2x2 unitary".into()));
    }
    if !u.is_unitary(crate::matrix::DEFAULT_TOL) {
        return Err(Error::Validation("matrix is not unitary".into()));
    }
    let paulis = pauli_basis();
    let mut parts_a = Vec::with_capacity(4);
    let mut parts_b = Vec::with_capacity(4);
    for p in &paulis {
        parts_a.push(ProcessMatrix::unitary_channel("A", "B", p)?);
        let up = u.matmul(p)?;
        parts_b.push(ProcessMatrix::unitary_channel("A", "B", &up)?);
    }
    for part in parts_a.iter().chain(&parts_b) {
        if psd_rank(part.matrix(), 1e-9)? != 1 {
            return Err(Error::Validation(
                "decomposition part is not rank one, hence not extremal".into(),
            ));
        }
    }
    let weights = vec![0.25; 4];
    Ok((
        Decomposition { weights: weights.clone(), parts: parts_a },
        Decomposition { weights, parts: parts_b },
    ))
}

/// Builds both decompositions for `u`, checks they mix to the same target
/// (the maximally depolarizing channel process, proportional to the
/// identity), and runs all 16 cross proportionality tests.
pub fn find_contradiction(u: &ComplexMatrix, tol: f64) -> Result<ContradictionWitness> {
    let (dec_a, dec_b) = build_pauli_decompositions(u)?;
    let mix_a = dec_a.mix()?;
    let mix_b = dec_b.mix()?;
    let mix_distance = mix_a.matrix().sub(mix_b.matrix())?.frobenius_norm();
    if mix_distance > tol {
        return Err(Error::Numerical(format!(
            "decompositions mix to different targets (Frobenius distance {mix_distance:.3e})"
        )));
    }
    let mut proportional_pairs = Vec::new();
    for (j, pa) in dec_a.parts.iter().enumerate() {
        for (k, pb) in dec_b.parts.iter().enumerate() {
            if let Some(c) = proportionality(pa.matrix(), pb.matrix(), tol.max(1e-12))? {
                proportional_pairs.push((j, k, c));
            }
        }
    }
    Ok(ContradictionWitness {
        target: mix_a,
        decomposition_a: dec_a,
        decomposition_b: dec_b,
        proportional_pairs,
        mix_distance,
    })
}

/// Real coordinates of a Hermitian matrix in an orthonormal Hermitian basis:
/// diagonal entries, then sqrt(2) times the real and imaginary parts of each
/// strictly-upper entry. Equality of these vectors is equality of matrices.
fn hermitian_coordinates(m: &ComplexMatrix) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::Dimension("coordinate expansion of non-square matrix".into()));
    }
    if !m.is_hermitian(1e-9) {
        return Err(Error::Validation("coordinate expansion requires a Hermitian matrix".into()));
    }
    let n = m.rows();
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        out.push(m[(i, i)].re);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            out.push(sqrt2 * m[(i, j)].re);
            out.push(sqrt2 * m[(i, j)].im);
        }
    }
    Ok(out)
}

/// Linear feasibility of `target = sum_i g_i * dictionary[i]` with `g >= 0`,
/// solved over the real coordinate expansion. Returns the weights when
/// feasible (the reconstruction is verified before reporting success).
pub fn lp_decompose(
    target: &ProcessMatrix,
    dictionary: &[ProcessMatrix],
    tol: f64,
) -> Result<Option<Vec<f64>>> {
    if dictionary.is_empty() {
        return Err(Error::Validation("decomposition dictionary is empty".into()));
    }
    let dim = target.matrix().rows();
    if dictionary.iter().any(|d| d.matrix().rows() != dim) {
        return Err(Error::Dimension("dictionary entries must match the target's space".into()));
    }
    lp_decompose_matrices(
        target.matrix(),
        &dictionary.iter().map(|d| d.matrix().clone()).collect::<Vec<_>>(),
        tol,
    )
}

fn lp_decompose_matrices(
    target: &ComplexMatrix,
    dictionary: &[ComplexMatrix],
    tol: f64,
) -> Result<Option<Vec<f64>>> {
    let b = hermitian_coordinates(target)?;
    let rows = b.len();
    let cols = dictionary.len();
    let mut a = vec![0.0f64; rows * cols];
    for (c, d) in dictionary.iter().enumerate() {
        let coords = hermitian_coordinates(d)?;
        for (r, v) in coords.into_iter().enumerate() {
            a[r * cols + c] = v;
        }
    }
    match solve_nonnegative(&a, rows, cols, &b, tol)? {
        Feasibility::Infeasible => Ok(None),
        Feasibility::Feasible(g) => {
            // Certificate: the reported weights must actually reconstruct
            // the target.
            let mut recon = ComplexMatrix::zeros(target.rows(), target.cols());
            for (d, &gi) in dictionary.iter().zip(&g) {
                recon = recon.add(&d.scale_re(gi))?;
            }
            if recon.sub(target)?.frobenius_norm() <= tol.max(1e-9) {
                Ok(Some(g))
            } else {
                Ok(None)
            }
        }
    }
}

/// Per-ontic-point conflict: the point carries target weight but admits no
/// proportional part pair across the two decompositions.
#[derive(Debug, Clone, Serialize)]
pub struct SupportViolation {
    pub omega: usize,
    /// Parts of decomposition A proportional to this point's sigma.
    pub proportional_a: Vec<usize>,
    /// Parts of decomposition B proportional to this point's sigma.
    pub proportional_b: Vec<usize>,
}

/// Outcome of checking a finite candidate against a contradiction witness.
#[derive(Debug, Clone, Serialize)]
pub struct SupportPartitionReport {
    /// Weights decomposing the target over the candidate, if any.
    pub target_weights: Option<Vec<f64>>,
    /// Support of the target decomposition (indices with weight above
    /// [`SUPPORT_TOL`]).
    pub target_support: Vec<usize>,
    /// Feasibility of each part of decomposition A over the candidate.
    pub parts_a_feasible: Vec<bool>,
    pub parts_b_feasible: Vec<bool>,
    /// Points in the target support with no proportional pair.
    pub violations: Vec<SupportViolation>,
    /// Whether the target remains representable once the dictionary is
    /// restricted to points proportional to a part on *both* sides. This is
    /// the decisive test: any valid assignment must live on that set.
    pub restricted_target_feasible: bool,
    /// Human-readable obstructions (unrepresentable target or parts).
    pub model_failures: Vec<String>,
    /// True when the candidate cannot consistently reproduce the witness:
    /// no instrument- and process-non-contextual reading of it exists.
    pub refuted: bool,
}

/// Runs the support-partition argument against a finite candidate model.
///
/// Every process the model covers must decompose over the candidate's sigma
/// dictionary with nonnegative weights. Extremal parts force any supporting
/// point into proportionality with them, so a point can carry target weight
/// only if it is proportional to a part of each decomposition; with the
/// witness reporting no proportional pair across decompositions, no point
/// qualifies and the candidate is refuted.
pub fn support_partition_check(
    witness: &ContradictionWitness,
    candidate: &OnticModelCandidate,
    tol: f64,
) -> Result<SupportPartitionReport> {
    let dim = witness.target.matrix().rows();
    for p in candidate.points() {
        if p.sigma.matrix().rows() != dim {
            return Err(Error::Dimension(
                "candidate sigma dimensions do not match the witness target".into(),
            ));
        }
    }
    let sigmas: Vec<ComplexMatrix> = candidate
        .points()
        .iter()
        .map(|p| p.sigma.matrix().clone())
        .collect();

    let mut model_failures = Vec::new();

    let target_weights = lp_decompose_matrices(witness.target.matrix(), &sigmas, tol)?;
    if target_weights.is_none() {
        model_failures.push("target process is not representable over the candidate".into());
    }
    let target_support: Vec<usize> = target_weights
        .as_ref()
        .map(|g| {
            g.iter()
                .enumerate()
                .filter(|(_, &w)| w > SUPPORT_TOL)
                .map(|(i, _)| i)
                .collect()
        })
        .unwrap_or_default();

    let check_parts = |dec: &Decomposition, name: &str, failures: &mut Vec<String>| -> Result<Vec<bool>> {
        let mut feasible = Vec::with_capacity(dec.parts.len());
        for (j, part) in dec.parts.iter().enumerate() {
            let ok = lp_decompose_matrices(part.matrix(), &sigmas, tol)?.is_some();
            if !ok {
                failures.push(format!(
                    "part {j} of decomposition {name} is not representable over the candidate"
                ));
            }
            feasible.push(ok);
        }
        Ok(feasible)
    };
    let parts_a_feasible = check_parts(&witness.decomposition_a, "A", &mut model_failures)?;
    let parts_b_feasible = check_parts(&witness.decomposition_b, "B", &mut model_failures)?;

    // Proportionality of every candidate point against every part.
    let prop_tol = tol.max(1e-9);
    let mut prop_a: Vec<Vec<usize>> = Vec::with_capacity(sigmas.len());
    let mut prop_b: Vec<Vec<usize>> = Vec::with_capacity(sigmas.len());
    for sigma in &sigmas {
        let a: Vec<usize> = witness
            .decomposition_a
            .parts
            .iter()
            .enumerate()
            .filter_map(|(j, p)| {
                proportionality(sigma, p.matrix(), prop_tol)
                    .ok()
                    .flatten()
                    .map(|_| j)
            })
            .collect();
        let b: Vec<usize> = witness
            .decomposition_b
            .parts
            .iter()
            .enumerate()
            .filter_map(|(k, p)| {
                proportionality(sigma, p.matrix(), prop_tol)
                    .ok()
                    .flatten()
                    .map(|_| k)
            })
            .collect();
        prop_a.push(a);
        prop_b.push(b);
    }

    let violations: Vec<SupportViolation> = target_support
        .iter()
        .filter(|&&omega| prop_a[omega].is_empty() || prop_b[omega].is_empty())
        .map(|&omega| SupportViolation {
            omega,
            proportional_a: prop_a[omega].clone(),
            proportional_b: prop_b[omega].clone(),
        })
        .collect();

    // Restrict the dictionary to points allowed on both sides and retry the
    // target. Infeasibility here refutes every possible assignment, not just
    // the particular solution the solver happened to return.
    let allowed: Vec<usize> = (0..sigmas.len())
        .filter(|&i| !prop_a[i].is_empty() && !prop_b[i].is_empty())
        .collect();
    let restricted_target_feasible = if allowed.is_empty() {
        false
    } else {
        let restricted: Vec<ComplexMatrix> = allowed.iter().map(|&i| sigmas[i].clone()).collect();
        lp_decompose_matrices(witness.target.matrix(), &restricted, tol)?.is_some()
    };

    let refuted = target_weights.is_none()
        || parts_a_feasible.iter().any(|ok| !ok)
        || parts_b_feasible.iter().any(|ok| !ok)
        || !restricted_target_feasible;

    Ok(SupportPartitionReport {
        target_weights,
        target_support,
        parts_a_feasible,
        parts_b_feasible,
        violations,
        restricted_target_feasible,
        model_failures,
        refuted,
    })
}

//! Quantum events, instruments and process matrices, together with the trace
//! pairing that maps them to probabilities.
//!
//! # Conventions
//!
//! Every other module inherits the choices fixed here:
//!
//! * **Tensor order.** A process lives on the product of all region input and
//!   output spaces. Regions are ordered by their (ascending) labels, and for
//!   each region the input factor immediately precedes the output factor:
//!   `A_in (x) A_out (x) B_in (x) B_out (x) ...`.
//! * **Choi representation of events.** A CP map `M: L(in) -> L(out)` is
//!   stored as the matrix
//!   `choi(M) = [sum_rs |r><s| (x) M(|r><s|)]^T`
//!   (input factor first, unnormalized, then a transpose in the product
//!   basis). Consequences: a destructive POVM event carries the POVM element
//!   itself (`dim_out = 1` gives `choi = E`); a preparation carries the
//!   transposed state (`dim_in = 1` gives `choi = rho^T`); a trace-preserving
//!   map has `choi` of trace `dim_in` with the partial trace over the output
//!   factor equal to the input identity.
//! * **Processes.** With the event convention above, the pairing
//!   `p = tr[(choi^A (x) choi^B (x) ...) W]` reproduces `tr(rho E)` for a
//!   single region holding a state, when `W` is the state itself, and
//!   reproduces channel composition when `W` is the *untransposed* Choi
//!   matrix `sum_rs |r><s| (x) C(|r><s|)` of the channel. In particular the
//!   process of a unitary channel `V` is [`proj_unitary`]`(V)`, the rank-one
//!   matrix `sum_rs |r><s| (x) V|r><s|V^dag` of trace `d`.
//!
//! Probabilistic mixtures of processes are finite convex combinations; see
//! [`convex_mix`].

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{
    is_psd, kron, partial_trace, ComplexMatrix, DEFAULT_TOL,
};

/// One local region: a label plus input/output dimensions. Dimension 1
/// encodes a trivial (absent) boundary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub label: String,
    pub dim_in: usize,
    pub dim_out: usize,
}

impl RegionSpec {
    pub fn new(label: impl Into<String>, dim_in: usize, dim_out: usize) -> Result<Self> {
        if dim_in == 0 || dim_out == 0 {
            return Err(Error::Validation("region dimensions must be at least 1".into()));
        }
        Ok(Self { label: label.into(), dim_in, dim_out })
    }

    pub fn dim(&self) -> usize {
        self.dim_in * self.dim_out
    }
}

/// A completely positive trace-non-increasing map in Choi form; the quantum
/// representation of an event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CpMapRepr", into = "CpMapRepr")]
pub struct CpMap {
    choi: ComplexMatrix,
    dim_in: usize,
    dim_out: usize,
}

#[derive(Serialize, Deserialize)]
struct CpMapRepr {
    dim_in: usize,
    dim_out: usize,
    choi: ComplexMatrix,
}

impl TryFrom<CpMapRepr> for CpMap {
    type Error = Error;
    fn try_from(r: CpMapRepr) -> Result<Self> {
        CpMap::new(r.choi, r.dim_in, r.dim_out)
    }
}

impl From<CpMap> for CpMapRepr {
    fn from(m: CpMap) -> Self {
        CpMapRepr { dim_in: m.dim_in, dim_out: m.dim_out, choi: m.choi }
    }
}

impl CpMap {
    /// Validates complete positivity (the Choi matrix is PSD) and the
    /// trace-non-increasing condition (partial trace over the output factor
    /// bounded by the input identity), both within [`DEFAULT_TOL`].
    pub fn new(choi: ComplexMatrix, dim_in: usize, dim_out: usize) -> Result<Self> {
        if dim_in == 0 || dim_out == 0 {
            return Err(Error::Validation("map dimensions must be at least 1".into()));
        }
        let d = dim_in * dim_out;
        if choi.rows() != d || choi.cols() != d {
            return Err(Error::Dimension(format!(
                "Choi matrix must be {d}x{d} for dims ({dim_in}, {dim_out}), got {}x{}",
                choi.rows(),
                choi.cols()
            )));
        }
        if !is_psd(&choi, DEFAULT_TOL)? {
            return Err(Error::Validation("Choi matrix is not positive semidefinite".into()));
        }
        let reduced = partial_trace(&choi, &[dim_in, dim_out], &[0])?;
        let slack = ComplexMatrix::identity(dim_in).sub(&reduced)?;
        if !is_psd(&slack, DEFAULT_TOL)? {
            return Err(Error::Validation(
                "Choi matrix is trace-increasing: partial trace exceeds the input identity".into(),
            ));
        }
        Ok(Self { choi, dim_in, dim_out })
    }

    /// The event realized by conjugation with a unitary `u` (an outcome-free
    /// reversible operation). Errors when `u` is not unitary within
    /// [`DEFAULT_TOL`].
    pub fn from_unitary(u: &ComplexMatrix) -> Result<Self> {
        if !u.is_unitary(DEFAULT_TOL) {
            return Err(Error::Validation("matrix is not unitary".into()));
        }
        let d = u.rows();
        Ok(Self {
            choi: proj_unitary(u).transpose(),
            dim_in: d,
            dim_out: d,
        })
    }

    /// Destructive measurement event for the POVM element `e`
    /// (`dim_out = 1`). Requires `0 <= e <= 1`.
    pub fn povm_element(e: &ComplexMatrix) -> Result<Self> {
        if !e.is_square() {
            return Err(Error::Dimension("POVM element must be square".into()));
        }
        if !is_psd(e, DEFAULT_TOL)? {
            return Err(Error::Validation("POVM element is not positive semidefinite".into()));
        }
        let slack = ComplexMatrix::identity(e.rows()).sub(e)?;
        if !is_psd(&slack, DEFAULT_TOL)? {
            return Err(Error::Validation("POVM element exceeds the identity".into()));
        }
        let d = e.rows();
        Ok(Self { choi: e.clone(), dim_in: d, dim_out: 1 })
    }

    /// Deterministic preparation of the state `rho` (`dim_in = 1`).
    pub fn preparation(rho: &ComplexMatrix) -> Result<Self> {
        if !rho.is_square() {
            return Err(Error::Dimension("state must be square".into()));
        }
        if !is_psd(rho, DEFAULT_TOL)? {
            return Err(Error::Validation("state is not positive semidefinite".into()));
        }
        let tr = rho.trace()?;
        if (tr.re - 1.0).abs() > DEFAULT_TOL || tr.im.abs() > DEFAULT_TOL {
            return Err(Error::Validation(format!("state trace {} is not 1", tr.re)));
        }
        let d = rho.rows();
        Ok(Self { choi: rho.transpose(), dim_in: 1, dim_out: d })
    }

    /// The discard map on a `d`-dimensional input (the unique deterministic
    /// event with trivial output).
    pub fn trace_map(d: usize) -> Self {
        Self { choi: ComplexMatrix::identity(d), dim_in: d, dim_out: 1 }
    }

    pub fn choi(&self) -> &ComplexMatrix {
        &self.choi
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    /// True when the map preserves trace within `tol` (the partial trace of
    /// the Choi matrix over the output factor equals the input identity).
    pub fn is_trace_preserving(&self, tol: f64) -> Result<bool> {
        let reduced = partial_trace(&self.choi, &[self.dim_in, self.dim_out], &[0])?;
        Ok(reduced.approx_eq(&ComplexMatrix::identity(self.dim_in), tol))
    }
}

/// The unnormalized Choi projector of a unitary:
/// `sum_rs |r><s| (x) v |r><s| v^dag`, input factor first. Rank one with
/// trace `d`; the process matrix of the channel that conjugates by `v`.
pub fn proj_unitary(v: &ComplexMatrix) -> ComplexMatrix {
    let d = v.rows();
    let mut out = ComplexMatrix::zeros(d * d, d * d);
    for r in 0..d {
        for i in 0..d {
            for s in 0..d {
                for j in 0..d {
                    out[(r * d + i, s * d + j)] = v[(i, r)] * v[(j, s)].conj();
                }
            }
        }
    }
    out
}

/// A finite set of events summing to a trace-preserving map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstrumentRepr", into = "InstrumentRepr")]
pub struct Instrument {
    events: Vec<CpMap>,
}

#[derive(Serialize, Deserialize)]
struct InstrumentRepr {
    events: Vec<CpMap>,
}

impl TryFrom<InstrumentRepr> for Instrument {
    type Error = Error;
    fn try_from(r: InstrumentRepr) -> Result<Self> {
        Instrument::new(r.events)
    }
}

impl From<Instrument> for InstrumentRepr {
    fn from(i: Instrument) -> Self {
        InstrumentRepr { events: i.events }
    }
}

impl Instrument {
    pub fn new(events: Vec<CpMap>) -> Result<Self> {
        let Some(first) = events.first() else {
            return Err(Error::Validation("instrument needs at least one event".into()));
        };
        let (din, dout) = (first.dim_in, first.dim_out);
        if events.iter().any(|e| e.dim_in != din || e.dim_out != dout) {
            return Err(Error::Dimension("instrument events must share dimensions".into()));
        }
        let mut total = ComplexMatrix::zeros(din * dout, din * dout);
        for e in &events {
            total = total.add(&e.choi)?;
        }
        let reduced = partial_trace(&total, &[din, dout], &[0])?;
        if !reduced.approx_eq(&ComplexMatrix::identity(din), DEFAULT_TOL) {
            return Err(Error::Validation(
                "instrument events do not sum to a trace-preserving map".into(),
            ));
        }
        Ok(Self { events })
    }

    pub fn events(&self) -> &[CpMap] {
        &self.events
    }

    pub fn dim_in(&self) -> usize {
        self.events[0].dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.events[0].dim_out
    }
}

/// Positive operator on the joint region space, pairing with event tensor
/// products to give probabilities.
///
/// Construction checks positivity and factor bookkeeping; the normalization
/// condition (unit probability for every trace-preserving event tuple) is a
/// separate, semi-numerical check performed by [`validate_process`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProcessMatrixRepr", into = "ProcessMatrixRepr")]
pub struct ProcessMatrix {
    regions: Vec<RegionSpec>,
    matrix: ComplexMatrix,
}

#[derive(Serialize, Deserialize)]
struct ProcessMatrixRepr {
    regions: Vec<RegionSpec>,
    matrix: ComplexMatrix,
}

impl TryFrom<ProcessMatrixRepr> for ProcessMatrix {
    type Error = Error;
    fn try_from(r: ProcessMatrixRepr) -> Result<Self> {
        ProcessMatrix::new(r.regions, r.matrix)
    }
}

impl From<ProcessMatrix> for ProcessMatrixRepr {
    fn from(p: ProcessMatrix) -> Self {
        ProcessMatrixRepr { regions: p.regions, matrix: p.matrix }
    }
}

impl ProcessMatrix {
    pub fn new(regions: Vec<RegionSpec>, matrix: ComplexMatrix) -> Result<Self> {
        if regions.is_empty() {
            return Err(Error::Validation("process needs at least one region".into()));
        }
        for r in &regions {
            if r.dim_in == 0 || r.dim_out == 0 {
                return Err(Error::Validation("region dimensions must be at least 1".into()));
            }
        }
        if regions.windows(2).any(|w| w[0].label >= w[1].label) {
            return Err(Error::Validation(
                "regions must be listed in strictly ascending label order".into(),
            ));
        }
        let dim: usize = regions.iter().map(RegionSpec::dim).product();
        if matrix.rows() != dim || matrix.cols() != dim {
            return Err(Error::Dimension(format!(
                "process matrix must be {dim}x{dim} for these regions, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        if !is_psd(&matrix, DEFAULT_TOL)? {
            return Err(Error::Validation("process matrix is not positive semidefinite".into()));
        }
        Ok(Self { regions, matrix })
    }

    /// Single region holding the state `rho` (measure-only scenario).
    pub fn from_state(label: impl Into<String>, rho: &ComplexMatrix) -> Result<Self> {
        let tr = rho.trace()?;
        if (tr.re - 1.0).abs() > DEFAULT_TOL || tr.im.abs() > DEFAULT_TOL {
            return Err(Error::Validation(format!("state trace {} is not 1", tr.re)));
        }
        let region = RegionSpec::new(label, rho.rows(), 1)?;
        Self::new(vec![region], rho.clone())
    }

    /// Two measure-only regions sharing the bipartite state `rho_ab`
    /// (factor order: first region's input, then second region's input).
    pub fn from_bipartite_state(
        label_a: impl Into<String>,
        dim_a: usize,
        label_b: impl Into<String>,
        dim_b: usize,
        rho_ab: &ComplexMatrix,
    ) -> Result<Self> {
        let tr = rho_ab.trace()?;
        if (tr.re - 1.0).abs() > DEFAULT_TOL || tr.im.abs() > DEFAULT_TOL {
            return Err(Error::Validation(format!("state trace {} is not 1", tr.re)));
        }
        let regions = vec![RegionSpec::new(label_a, dim_a, 1)?, RegionSpec::new(label_b, dim_b, 1)?];
        Self::new(regions, rho_ab.clone())
    }

    /// A channel from the first region's output to the second region's input
    /// (trivial first input and second output). The process matrix is the
    /// untransposed Choi matrix of the channel.
    pub fn from_channel(
        label_a: impl Into<String>,
        label_b: impl Into<String>,
        channel: &CpMap,
    ) -> Result<Self> {
        if !channel.is_trace_preserving(DEFAULT_TOL)? {
            return Err(Error::Validation("channel process requires a trace-preserving map".into()));
        }
        let regions = vec![
            RegionSpec::new(label_a, 1, channel.dim_in)?,
            RegionSpec::new(label_b, channel.dim_out, 1)?,
        ];
        Self::new(regions, channel.choi.transpose())
    }

    /// The process of a unitary channel `u` between two regions; the
    /// rank-one matrix [`proj_unitary`]`(u)` of trace `d`.
    pub fn unitary_channel(
        label_a: impl Into<String>,
        label_b: impl Into<String>,
        u: &ComplexMatrix,
    ) -> Result<Self> {
        if !u.is_unitary(DEFAULT_TOL) {
            return Err(Error::Validation("matrix is not unitary".into()));
        }
        let d = u.rows();
        let regions = vec![RegionSpec::new(label_a, 1, d)?, RegionSpec::new(label_b, d, 1)?];
        Self::new(regions, proj_unitary(u))
    }

    /// Single region fed the state `rho` with its output discarded.
    pub fn state_then_discard(
        label: impl Into<String>,
        rho: &ComplexMatrix,
        dim_out: usize,
    ) -> Result<Self> {
        let tr = rho.trace()?;
        if (tr.re - 1.0).abs() > DEFAULT_TOL || tr.im.abs() > DEFAULT_TOL {
            return Err(Error::Validation(format!("state trace {} is not 1", tr.re)));
        }
        let region = RegionSpec::new(label, rho.rows(), dim_out)?;
        Self::new(vec![region], kron(rho, &ComplexMatrix::identity(dim_out)))
    }

    pub fn regions(&self) -> &[RegionSpec] {
        &self.regions
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Flat list of tensor-factor dimensions, input before output per region.
    pub fn factor_dims(&self) -> Vec<usize> {
        self.regions
            .iter()
            .flat_map(|r| [r.dim_in, r.dim_out])
            .collect()
    }

    pub fn same_regions(&self, other: &Self) -> bool {
        self.regions == other.regions
    }
}

/// Joint probability of one event per region: the real part of
/// `tr[(choi^A (x) choi^B (x) ...) W]`, with events listed in region order.
///
/// Errors on dimension mismatch, and reports a numerical-consistency error
/// when the trace has an imaginary part at or above [`DEFAULT_TOL`].
pub fn born_probability(events: &[CpMap], w: &ProcessMatrix) -> Result<f64> {
    if events.len() != w.regions.len() {
        return Err(Error::Dimension(format!(
            "{} events supplied for {} regions",
            events.len(),
            w.regions.len()
        )));
    }
    for (e, r) in events.iter().zip(&w.regions) {
        if e.dim_in != r.dim_in || e.dim_out != r.dim_out {
            return Err(Error::Dimension(format!(
                "event dims ({}, {}) do not match region {} dims ({}, {})",
                e.dim_in, e.dim_out, r.label, r.dim_in, r.dim_out
            )));
        }
    }
    let mats: Vec<&ComplexMatrix> = events.iter().map(|e| &e.choi).collect();
    let z = pairing(&mats, &w.matrix)?;
    if z.im.abs() >= DEFAULT_TOL {
        return Err(Error::Numerical(format!(
            "probability has imaginary part {:.3e}",
            z.im
        )));
    }
    Ok(z.re)
}

/// tr[(m_1 (x) m_2 (x) ...) w] without assumptions about the factors.
fn pairing(mats: &[&ComplexMatrix], w: &ComplexMatrix) -> Result<Complex64> {
    let big = crate::matrix::kron_all(mats);
    big.trace_product(w)
}

/// Convex combination of processes over the same regions. Weights must be
/// nonnegative and sum to one within 1e-12.
pub fn convex_mix(processes: &[ProcessMatrix], weights: &[f64]) -> Result<ProcessMatrix> {
    if processes.is_empty() || processes.len() != weights.len() {
        return Err(Error::Validation(format!(
            "{} processes against {} weights",
            processes.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|&p| p < 0.0) {
        return Err(Error::Validation("mixture weights must be nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Validation(format!("mixture weights sum to {total}, not 1")));
    }
    let first = &processes[0];
    if processes.iter().any(|p| !p.same_regions(first)) {
        return Err(Error::Validation("mixture components must share region structure".into()));
    }
    let mut acc = ComplexMatrix::zeros(first.matrix.rows(), first.matrix.cols());
    for (p, &wgt) in processes.iter().zip(weights) {
        acc = acc.add(&p.matrix.scale_re(wgt))?;
    }
    ProcessMatrix::new(first.regions.clone(), acc)
}

/// Result of the semi-numerical process-normalization check.
#[derive(Debug, Clone, Serialize)]
pub struct ProcessValidationReport {
    pub psd_ok: bool,
    pub min_eigenvalue: f64,
    /// Largest `|p - 1|` over the deterministic spanning family of
    /// trace-preserving event tuples.
    pub spanning_max_residual: f64,
    /// Largest `|p - 1|` over the seeded random trace-preserving tuples.
    pub sampled_max_residual: f64,
    pub max_residual: f64,
    pub tuples_checked: usize,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub pass: bool,
}

/// Checks positivity and normalization of `w`: the probability assigned to
/// every tuple of trace-preserving maps must be 1.
///
/// By linearity it suffices to test a family spanning the affine hull of
/// trace-preserving Choi matrices per region; measure-and-reprepare maps
/// built from a tomographically spanning POVM/state set do exactly that;
/// unitary (Weyl) conjugations are included when dimensions permit, plus
/// `samples` extra random trace-preserving tuples (seeded).
pub fn validate_process(
    w: &ProcessMatrix,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<ProcessValidationReport> {
    let eigs = crate::matrix::hermitian_eigenvalues(&w.matrix)?;
    let min_eigenvalue = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    let psd_ok = w.matrix.is_hermitian(tol) && min_eigenvalue >= -tol;

    let families: Vec<Vec<ComplexMatrix>> = w
        .regions
        .iter()
        .map(|r| cptp_spanning_family(r.dim_in, r.dim_out))
        .collect();

    let mut spanning_max = 0.0f64;
    let mut tuples = 0usize;
    let mut index = vec![0usize; families.len()];
    loop {
        let mats: Vec<&ComplexMatrix> = families
            .iter()
            .zip(&index)
            .map(|(f, &i)| &f[i])
            .collect();
        let z = pairing(&mats, &w.matrix)?;
        spanning_max = spanning_max.max((z - Complex64::new(1.0, 0.0)).norm());
        tuples += 1;

        let mut pos = families.len();
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            index[pos] += 1;
            if index[pos] < families[pos].len() {
                break;
            }
            index[pos] = 0;
            if pos == 0 {
                pos = usize::MAX;
                break;
            }
        }
        if pos == usize::MAX {
            break;
        }
    }

    let mut rng = sampling::seeded_rng(seed);
    let mut sampled_max = 0.0f64;
    for _ in 0..samples {
        let mats: Vec<ComplexMatrix> = w
            .regions
            .iter()
            .map(|r| sampling::random_cptp_choi(r.dim_in, r.dim_out, &mut rng))
            .collect::<Result<_>>()?;
        let refs: Vec<&ComplexMatrix> = mats.iter().collect();
        let z = pairing(&refs, &w.matrix)?;
        sampled_max = sampled_max.max((z - Complex64::new(1.0, 0.0)).norm());
        tuples += 1;
    }

    let max_residual = spanning_max.max(sampled_max);
    Ok(ProcessValidationReport {
        psd_ok,
        min_eigenvalue,
        spanning_max_residual: spanning_max,
        sampled_max_residual: sampled_max,
        max_residual,
        tuples_checked: tuples,
        samples,
        seed,
        tol,
        pass: psd_ok && max_residual < tol,
    })
}

/// Rank-one projectors that span the Hermitian operators on dimension `d`:
/// the basis projectors plus the `+` and `+i` superposition projectors for
/// every pair. All are valid POVM elements and valid (pure) states.
fn tomography_projectors(d: usize) -> Vec<ComplexMatrix> {
    if d == 1 {
        return vec![ComplexMatrix::identity(1)];
    }
    let mut out = Vec::with_capacity(d * d);
    for j in 0..d {
        let mut m = ComplexMatrix::zeros(d, d);
        m[(j, j)] = Complex64::new(1.0, 0.0);
        out.push(m);
    }
    for j in 0..d {
        for k in (j + 1)..d {
            let mut plus = ComplexMatrix::zeros(d, d);
            plus[(j, j)] = Complex64::new(0.5, 0.0);
            plus[(k, k)] = Complex64::new(0.5, 0.0);
            plus[(j, k)] = Complex64::new(0.5, 0.0);
            plus[(k, j)] = Complex64::new(0.5, 0.0);
            out.push(plus);

            let mut plus_i = ComplexMatrix::zeros(d, d);
            plus_i[(j, j)] = Complex64::new(0.5, 0.0);
            plus_i[(k, k)] = Complex64::new(0.5, 0.0);
            plus_i[(j, k)] = Complex64::new(0.0, -0.5);
            plus_i[(k, j)] = Complex64::new(0.0, 0.5);
            out.push(plus_i);
        }
    }
    out
}

/// Generalized shift and clock unitaries `X^a Z^b` for one factor.
fn weyl_unitaries(d: usize) -> Vec<ComplexMatrix> {
    let mut shift = ComplexMatrix::zeros(d, d);
    for j in 0..d {
        shift[((j + 1) % d, j)] = Complex64::new(1.0, 0.0);
    }
    let mut clock = ComplexMatrix::zeros(d, d);
    for j in 0..d {
        let angle = 2.0 * std::f64::consts::PI * j as f64 / d as f64;
        clock[(j, j)] = Complex64::new(angle.cos(), angle.sin());
    }
    let mut out = Vec::with_capacity(d * d);
    let mut xa = ComplexMatrix::identity(d);
    for _a in 0..d {
        let mut u = xa.clone();
        for _b in 0..d {
            out.push(u.clone());
            u = u.matmul(&clock).unwrap();
        }
        xa = xa.matmul(&shift).unwrap();
    }
    out
}

/// Trace-preserving Choi matrices (event convention) affinely spanning the
/// trace-preserving set at dimensions `(d_in, d_out)`.
fn cptp_spanning_family(d_in: usize, d_out: usize) -> Vec<ComplexMatrix> {
    let states = tomography_projectors(d_out);
    let effects = tomography_projectors(d_in);
    let id_in = ComplexMatrix::identity(d_in);

    // Measure-and-reprepare maps: choi = F (x) rho_a^T + (1 - F) (x) rho_b^T.
    // Varying F over a spanning effect set and rho_a against a fixed rho_b
    // spans every direction tangent to the trace-preserving affine space.
    let base_state_t = states[0].transpose();
    let mut family = vec![kron(&id_in, &base_state_t)];
    for f in &effects {
        let complement = id_in.sub(f).unwrap();
        for s in states.iter().skip(1) {
            let member = kron(f, &s.transpose())
                .add(&kron(&complement, &base_state_t))
                .unwrap();
            family.push(member);
        }
    }
    if d_in == d_out && d_in > 1 {
        for u in weyl_unitaries(d_in) {
            family.push(proj_unitary(&u).transpose());
        }
    }
    family
}

/// One hypothesized ontic point: a process matrix responding to events and a
/// positive operator responding to processes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OnticPoint {
    pub sigma: ProcessMatrix,
    pub eta: ComplexMatrix,
}

/// A finite candidate ontological model: a list of ontic points whose
/// `sigma` matrices answer event queries and whose `eta` operators are meant
/// to form an instrument over the process space.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OnticModelCandidate {
    points: Vec<OnticPoint>,
}

impl OnticModelCandidate {
    pub fn new(points: Vec<OnticPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Validation("candidate needs at least one ontic point".into()));
        }
        let first = &points[0].sigma;
        if points.iter().any(|p| !p.sigma.same_regions(first)) {
            return Err(Error::Validation("ontic points must share region structure".into()));
        }
        let dim = first.matrix().rows();
        if points.iter().any(|p| p.eta.rows() != dim || p.eta.cols() != dim) {
            return Err(Error::Dimension("eta operators must live on the process space".into()));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[OnticPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Model prediction for an event tuple under the distribution `weights`
    /// over ontic points: `sum_i weights[i] * tr[sigma_i M]`.
    pub fn predict(&self, events: &[CpMap], weights: &[f64]) -> Result<f64> {
        if weights.len() != self.points.len() {
            return Err(Error::Dimension(format!(
                "{} weights for {} ontic points",
                weights.len(),
                self.points.len()
            )));
        }
        let mut acc = 0.0;
        for (p, &g) in self.points.iter().zip(weights) {
            if g != 0.0 {
                acc += g * born_probability(events, &p.sigma)?;
            }
        }
        Ok(acc)
    }

    /// Identity-indicator weights: 1 on the points whose `sigma` equals `w`
    /// entrywise within `tol`, 0 elsewhere.
    pub fn indicator_weights(&self, w: &ProcessMatrix, tol: f64) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| {
                if p.sigma.same_regions(w) && p.sigma.matrix().approx_eq(w.matrix(), tol) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Weights obtained from the eta instrument: `tr[eta_i W]`.
    pub fn eta_weights(&self, w: &ProcessMatrix) -> Result<Vec<f64>> {
        self.points
            .iter()
            .map(|p| Ok(p.eta.trace_product(w.matrix())?.re))
            .collect()
    }
}

/// Verifies that the candidate's eta operators form an instrument over the
/// process space: every eta is PSD, and `sum_i tr[eta_i W] = 1` within `tol`
/// for each supplied test process.
pub fn check_eta_instrument(
    candidate: &OnticModelCandidate,
    test_processes: &[ProcessMatrix],
    tol: f64,
) -> Result<bool> {
    for p in candidate.points() {
        if !is_psd(&p.eta, tol.max(DEFAULT_TOL))? {
            return Ok(false);
        }
    }
    for w in test_processes {
        if w.matrix().rows() != candidate.points()[0].eta.rows() {
            return Err(Error::Dimension(
                "test process does not live on the candidate's process space".into(),
            ));
        }
        let total: f64 = candidate
            .eta_weights(w)?
            .iter()
            .sum();
        if (total - 1.0).abs() >= tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Builds the trivial process-contextual model over a finite set of
/// processes: one ontic point per process, `sigma` the process itself, and
/// the process-to-ontic distribution realized by the identity indicator.
/// The eta operators split the depolarizing event tuple evenly, which pairs
/// to 1 with every normalized process.
pub fn crude_model(processes: &[ProcessMatrix]) -> Result<OnticModelCandidate> {
    if processes.is_empty() {
        return Err(Error::Validation("crude model needs at least one process".into()));
    }
    let first = &processes[0];
    if processes.iter().any(|p| !p.same_regions(first)) {
        return Err(Error::Validation("crude model processes must share regions".into()));
    }
    for i in 0..processes.len() {
        for j in (i + 1)..processes.len() {
            if processes[i].matrix().approx_eq(processes[j].matrix(), 1e-12) {
                return Err(Error::Validation(format!(
                    "crude model processes must be pairwise distinct (found duplicates at {i} and {j})"
                )));
            }
        }
    }
    let dim = first.matrix().rows();
    let dout_product: usize = first.regions().iter().map(|r| r.dim_out).product();
    let eta = ComplexMatrix::identity(dim)
        .scale_re(1.0 / (processes.len() as f64 * dout_product as f64));
    let points = processes
        .iter()
        .map(|p| OnticPoint { sigma: p.clone(), eta: eta.clone() })
        .collect();
    OnticModelCandidate::new(points)
}

/// Seeded random constructions of states, POVMs, channels and instruments.
pub mod sampling {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn standard_normal(rng: &mut impl Rng) -> f64 {
        // Box-Muller transform.
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    fn random_gaussian(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
        let entries = (0..dim * dim)
            .map(|_| Complex64::new(standard_normal(rng), standard_normal(rng)))
            .collect();
        ComplexMatrix::new(dim, dim, entries).unwrap()
    }

    pub fn random_psd(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
        let g = random_gaussian(dim, rng);
        g.dagger().matmul(&g).unwrap()
    }

    pub fn random_state(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
        let m = random_psd(dim, rng);
        let tr = m.trace().unwrap().re;
        m.scale_re(1.0 / tr)
    }

    pub fn random_unitary(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
        let g = random_gaussian(dim, rng);
        let herm = g.add(&g.dagger()).unwrap().scale_re(0.5);
        let (_, v) = crate::matrix::hermitian_eigen(&herm).unwrap();
        v
    }

    /// POVM with `n` elements: random PSD operators renormalized by the
    /// inverse square root of their sum.
    pub fn random_povm(dim: usize, n: usize, rng: &mut impl Rng) -> Result<Vec<ComplexMatrix>> {
        let parts: Vec<ComplexMatrix> = (0..n).map(|_| random_psd(dim, rng)).collect();
        let mut total = ComplexMatrix::zeros(dim, dim);
        for p in &parts {
            total = total.add(p)?;
        }
        let corr = inverse_sqrt(&total)?;
        parts
            .iter()
            .map(|p| corr.matmul(p)?.matmul(&corr))
            .collect()
    }

    /// Inverse square root of a Hermitian positive-definite matrix.
    pub(crate) fn inverse_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
        let (vals, vecs) = crate::matrix::hermitian_eigen(m)?;
        let top = vals.iter().cloned().fold(0.0f64, f64::max);
        if vals.iter().any(|&v| v <= 1e-12 * top.max(1.0)) {
            return Err(Error::Numerical("matrix is too close to singular for inverse sqrt".into()));
        }
        let n = m.rows();
        let mut d = ComplexMatrix::zeros(n, n);
        for (i, &v) in vals.iter().enumerate() {
            d[(i, i)] = Complex64::new(1.0 / v.sqrt(), 0.0);
        }
        vecs.matmul(&d)?.matmul(&vecs.dagger())
    }

    /// Random trace-preserving Choi matrix (event convention) at the given
    /// dimensions: a random PSD operator corrected on its input factor.
    pub fn random_cptp_choi(d_in: usize, d_out: usize, rng: &mut impl Rng) -> Result<ComplexMatrix> {
        loop {
            let t = random_psd(d_in * d_out, rng);
            let s = partial_trace(&t, &[d_in, d_out], &[0])?;
            let Ok(a) = inverse_sqrt(&s) else { continue };
            let corr = kron(&a, &ComplexMatrix::identity(d_out));
            let lit = corr.matmul(&t)?.matmul(&corr.dagger())?;
            return Ok(lit.transpose());
        }
    }

    /// Random instrument with `n_events` events: random CP pieces sharing a
    /// single trace-preserving correction.
    pub fn random_instrument(
        d_in: usize,
        d_out: usize,
        n_events: usize,
        rng: &mut impl Rng,
    ) -> Result<Instrument> {
        loop {
            let parts: Vec<ComplexMatrix> =
                (0..n_events).map(|_| random_psd(d_in * d_out, rng)).collect();
            let mut total = ComplexMatrix::zeros(d_in * d_out, d_in * d_out);
            for p in &parts {
                total = total.add(p)?;
            }
            let s = partial_trace(&total, &[d_in, d_out], &[0])?;
            let Ok(a) = inverse_sqrt(&s) else { continue };
            let corr = kron(&a, &ComplexMatrix::identity(d_out));
            let events: Vec<CpMap> = parts
                .iter()
                .map(|p| {
                    let lit = corr.matmul(p)?.matmul(&corr.dagger())?;
                    CpMap::new(lit.transpose(), d_in, d_out)
                })
                .collect::<Result<_>>()?;
            return Instrument::new(events);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{hadamard, pauli_basis, pauli_x, pauli_y, pauli_z};

    fn ket0_proj() -> ComplexMatrix {
        ComplexMatrix::from_real(&[&[1.0, 0.0], &[0.0, 0.0]])
    }

    fn ket1_proj() -> ComplexMatrix {
        ComplexMatrix::from_real(&[&[0.0, 0.0], &[0.0, 1.0]])
    }

    /// The four processes of the channel family, in the doubled convention
    /// used when comparing against hand-written Pauli expansions.
    fn pauli_expansion(signs: [f64; 3]) -> ComplexMatrix {
        let [i2, x, y, z] = pauli_basis();
        let mut m = kron(&i2, &i2);
        m = m.add(&kron(&x, &x).scale_re(signs[0])).unwrap();
        m = m.add(&kron(&y, &y).scale_re(signs[1])).unwrap();
        m = m.add(&kron(&z, &z).scale_re(signs[2])).unwrap();
        m
    }

    #[test]
    fn proj_of_identity_matches_pauli_expansion() {
        // sum_rs |r><s| (x) |r><s| equals (1 + XX - YY + ZZ) / 2.
        let got = proj_unitary(&ComplexMatrix::identity(2));
        let expected = pauli_expansion([1.0, -1.0, 1.0]).scale_re(0.5);
        assert!(got.approx_eq(&expected, 1e-15));
        assert!((got.trace().unwrap().re - 2.0).abs() < 1e-15);
    }

    #[test]
    fn proj_of_x_matches_pauli_expansion() {
        let got = proj_unitary(&pauli_x());
        let expected = pauli_expansion([1.0, 1.0, -1.0]).scale_re(0.5);
        assert!(got.approx_eq(&expected, 1e-15));
    }

    #[test]
    fn proj_of_z_matches_pauli_expansion() {
        let got = proj_unitary(&pauli_z());
        let expected = pauli_expansion([-1.0, 1.0, 1.0]).scale_re(0.5);
        assert!(got.approx_eq(&expected, 1e-15));
    }

    #[test]
    fn proj_of_y_matches_pauli_expansion() {
        let got = proj_unitary(&pauli_y());
        let expected = pauli_expansion([-1.0, -1.0, -1.0]).scale_re(0.5);
        assert!(got.approx_eq(&expected, 1e-15));
    }

    #[test]
    fn unitary_event_requires_unitary_input() {
        let not_unitary = ComplexMatrix::from_real(&[&[1.0, 0.0], &[0.0, 2.0]]);
        assert!(matches!(
            CpMap::from_unitary(&not_unitary),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn unitary_event_is_trace_preserving() {
        let e = CpMap::from_unitary(&hadamard()).unwrap();
        assert!(e.is_trace_preserving(1e-12).unwrap());
        assert!((e.choi().trace().unwrap().re - 2.0).abs() < 1e-12);
    }

    #[test]
    fn born_rule_reduces_to_state_measurement() {
        let w = ProcessMatrix::from_state("A", &ket0_proj()).unwrap();
        let hit = CpMap::povm_element(&ket0_proj()).unwrap();
        let miss = CpMap::povm_element(&ket1_proj()).unwrap();
        assert!((born_probability(&[hit], &w).unwrap() - 1.0).abs() < 1e-12);
        assert!(born_probability(&[miss], &w).unwrap().abs() < 1e-12);
    }

    #[test]
    fn born_rule_composes_identity_channel() {
        // Prepare |0> at A, identity channel to B, measure |0>: probability 1.
        // Oracle: direct state-vector propagation is the identity.
        let w = ProcessMatrix::unitary_channel("A", "B", &ComplexMatrix::identity(2)).unwrap();
        let prep = CpMap::preparation(&ket0_proj()).unwrap();
        let meas = CpMap::povm_element(&ket0_proj()).unwrap();
        assert!((born_probability(&[prep.clone(), meas], &w).unwrap() - 1.0).abs() < 1e-12);
        let meas1 = CpMap::povm_element(&ket1_proj()).unwrap();
        assert!(born_probability(&[prep, meas1], &w).unwrap().abs() < 1e-12);
    }

    #[test]
    fn born_rule_composes_unitary_channel() {
        // Prepare |0>, apply H as the channel, measure in the computational
        // basis: both outcomes at probability 1/2.
        let w = ProcessMatrix::unitary_channel("A", "B", &hadamard()).unwrap();
        let prep = CpMap::preparation(&ket0_proj()).unwrap();
        let m0 = CpMap::povm_element(&ket0_proj()).unwrap();
        let m1 = CpMap::povm_element(&ket1_proj()).unwrap();
        assert!((born_probability(&[prep.clone(), m0], &w).unwrap() - 0.5).abs() < 1e-12);
        assert!((born_probability(&[prep, m1], &w).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn born_rule_composes_three_region_comb() {
        // Prepare rho at A, let B act with a (complex) unitary event, measure
        // E at C, with identity links A->B and B->C. The pairing must give
        // tr(E V rho V^dag) for every rho, V, E; oracle by direct matrix
        // algebra.
        let mut rng = sampling::seeded_rng(37);
        let link = proj_unitary(&ComplexMatrix::identity(2));
        let comb = kron(&link, &link);
        let w = ProcessMatrix::new(
            vec![
                RegionSpec::new("A", 1, 2).unwrap(),
                RegionSpec::new("B", 2, 2).unwrap(),
                RegionSpec::new("C", 2, 1).unwrap(),
            ],
            comb,
        )
        .unwrap();
        for _ in 0..10 {
            let rho = sampling::random_state(2, &mut rng);
            let v = sampling::random_unitary(2, &mut rng);
            let povm = sampling::random_povm(2, 2, &mut rng).unwrap();
            let events = [
                CpMap::preparation(&rho).unwrap(),
                CpMap::from_unitary(&v).unwrap(),
                CpMap::povm_element(&povm[0]).unwrap(),
            ];
            let p = born_probability(&events, &w).unwrap();
            let evolved = v.matmul(&rho).unwrap().matmul(&v.dagger()).unwrap();
            let expected = evolved.trace_product(&povm[0]).unwrap().re;
            assert!((p - expected).abs() < 1e-12, "{p} vs {expected}");
        }
        let report = validate_process(&w, 8, 1e-9, 31).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn instrument_json_round_trip() {
        let i = Instrument::new(vec![
            CpMap::povm_element(&ket0_proj()).unwrap(),
            CpMap::povm_element(&ket1_proj()).unwrap(),
        ])
        .unwrap();
        let json = serde_json::to_string(&i).unwrap();
        assert!(json.starts_with("{\"events\":["));
        let back: Instrument = serde_json::from_str(&json).unwrap();
        assert_eq!(back.events().len(), 2);
        // Re-validation on the way in: a tampered event set must be rejected.
        let bad = json.replace("1.0", "0.5");
        assert!(serde_json::from_str::<Instrument>(&bad).is_err());
    }

    #[test]
    fn born_rule_dimension_mismatch() {
        let w = ProcessMatrix::from_state("A", &ket0_proj()).unwrap();
        let bad = CpMap::povm_element(&ComplexMatrix::identity(3)).unwrap();
        assert!(matches!(born_probability(&[bad], &w), Err(Error::Dimension(_))));
    }

    #[test]
    fn event_probability_is_instrument_independent() {
        // The same event placed in two different instruments: the pairing
        // never sees the instrument, only the event.
        let w = ProcessMatrix::from_state("A", &random_fixture_state()).unwrap();
        let e = CpMap::povm_element(&ket0_proj()).unwrap();
        let complement = CpMap::povm_element(&ket1_proj()).unwrap();
        let half = CpMap::povm_element(&ket1_proj().scale_re(0.5)).unwrap();
        let other_half = half.clone();
        let i1 = Instrument::new(vec![e.clone(), complement]).unwrap();
        let i2 = Instrument::new(vec![e.clone(), half, other_half]).unwrap();
        let p1 = born_probability(&[i1.events()[0].clone()], &w).unwrap();
        let p2 = born_probability(&[i2.events()[0].clone()], &w).unwrap();
        assert_eq!(p1, p2);
    }

    fn random_fixture_state() -> ComplexMatrix {
        let mut rng = sampling::seeded_rng(11);
        sampling::random_state(2, &mut rng)
    }

    #[test]
    fn instrument_rejects_subnormalized_events() {
        let half = CpMap::povm_element(&ket0_proj().scale_re(0.5)).unwrap();
        assert!(matches!(Instrument::new(vec![half]), Err(Error::Validation(_))));
    }

    #[test]
    fn validate_process_accepts_trivial_region() {
        let w = ProcessMatrix::new(
            vec![RegionSpec::new("A", 1, 1).unwrap()],
            ComplexMatrix::identity(1),
        )
        .unwrap();
        let report = validate_process(&w, 4, 1e-9, 3).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn validate_process_accepts_identity_channel() {
        let w = ProcessMatrix::unitary_channel("A", "B", &ComplexMatrix::identity(2)).unwrap();
        let report = validate_process(&w, 16, 1e-9, 5).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn validate_process_rejects_doubled_channel() {
        // Same channel matrix scaled by 2: every tuple now pairs to 2.
        let doubled = proj_unitary(&ComplexMatrix::identity(2));
        let w = ProcessMatrix::new(
            vec![
                RegionSpec::new("A", 1, 2).unwrap(),
                RegionSpec::new("B", 2, 1).unwrap(),
            ],
            doubled.scale_re(2.0),
        )
        .unwrap();
        let report = validate_process(&w, 8, 1e-9, 5).unwrap();
        assert!(!report.pass);
        assert!((report.max_residual - 1.0).abs() < 1e-9, "{report:?}");
    }

    #[test]
    fn validate_process_accepts_state_then_discard() {
        let mut rng = sampling::seeded_rng(19);
        let rho = sampling::random_state(2, &mut rng);
        let w = ProcessMatrix::state_then_discard("A", &rho, 2).unwrap();
        let report = validate_process(&w, 8, 1e-9, 7).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn validate_process_accepts_bipartite_state() {
        let mut rng = sampling::seeded_rng(23);
        let rho = sampling::random_state(4, &mut rng);
        let w = ProcessMatrix::from_bipartite_state("A", 2, "B", 2, &rho).unwrap();
        let report = validate_process(&w, 8, 1e-9, 7).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn validate_process_detects_polarized_perturbation() {
        // W = (1/2) I + eps * Z (x) 1 stays PSD but picks up a residual of
        // 2 eps against a Z-polarized preparation.
        let eps = 0.05;
        let mut m = ComplexMatrix::identity(4).scale_re(0.5);
        m = m.add(&kron(&crate::matrix::pauli_z(), &ComplexMatrix::identity(2)).scale_re(eps))
            .unwrap();
        let w = ProcessMatrix::new(
            vec![
                RegionSpec::new("A", 1, 2).unwrap(),
                RegionSpec::new("B", 2, 1).unwrap(),
            ],
            m,
        )
        .unwrap();
        let report = validate_process(&w, 8, 1e-9, 7).unwrap();
        assert!(!report.pass);
        assert!((report.max_residual - 2.0 * eps).abs() < 1e-12, "{report:?}");
    }

    #[test]
    fn validate_process_accepts_random_channel() {
        let mut rng = sampling::seeded_rng(17);
        let choi = sampling::random_cptp_choi(2, 2, &mut rng).unwrap();
        let ch = CpMap::new(choi, 2, 2).unwrap();
        let w = ProcessMatrix::from_channel("A", "B", &ch).unwrap();
        let report = validate_process(&w, 16, 1e-9, 23).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn convex_mix_reproduces_single_process() {
        let w = ProcessMatrix::unitary_channel("A", "B", &pauli_x()).unwrap();
        let mixed = convex_mix(std::slice::from_ref(&w), &[1.0]).unwrap();
        assert!(mixed.matrix().approx_eq(w.matrix(), 0.0));
    }

    #[test]
    fn convex_mix_averages_two_processes() {
        let w1 = ProcessMatrix::unitary_channel("A", "B", &ComplexMatrix::identity(2)).unwrap();
        let w2 = ProcessMatrix::unitary_channel("A", "B", &pauli_x()).unwrap();
        let mixed = convex_mix(&[w1.clone(), w2.clone()], &[0.5, 0.5]).unwrap();
        let expected = w1.matrix().add(w2.matrix()).unwrap().scale_re(0.5);
        assert!(mixed.matrix().approx_eq(&expected, 1e-15));
    }

    #[test]
    fn convex_mix_of_pauli_channels_is_identity_matrix() {
        // In the doubled (hand-expansion) convention the four channel
        // matrices average to the plain 4x4 identity: the Pauli terms cancel
        // pairwise. Oracle: direct matrix sum.
        let regions = vec![
            RegionSpec::new("A", 1, 2).unwrap(),
            RegionSpec::new("B", 2, 1).unwrap(),
        ];
        let parts: Vec<ProcessMatrix> = [
            pauli_expansion([1.0, -1.0, 1.0]),
            pauli_expansion([1.0, 1.0, -1.0]),
            pauli_expansion([-1.0, -1.0, -1.0]),
            pauli_expansion([-1.0, 1.0, 1.0]),
        ]
        .into_iter()
        .map(|m| ProcessMatrix::new(regions.clone(), m).unwrap())
        .collect();
        let mixed = convex_mix(&parts, &[0.25; 4]).unwrap();
        assert!(mixed.matrix().approx_eq(&ComplexMatrix::identity(4), 1e-14));
    }

    #[test]
    fn convex_mix_rejects_bad_weights() {
        let w = ProcessMatrix::unitary_channel("A", "B", &pauli_x()).unwrap();
        assert!(matches!(
            convex_mix(std::slice::from_ref(&w), &[0.9]),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            convex_mix(&[w.clone(), w], &[1.5, -0.5]),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn crude_model_rejects_duplicates() {
        let w = ProcessMatrix::unitary_channel("A", "B", &pauli_x()).unwrap();
        assert!(matches!(crude_model(&[w.clone(), w]), Err(Error::Validation(_))));
    }

    #[test]
    fn crude_model_reproduces_born_probabilities() {
        let w = ProcessMatrix::unitary_channel("A", "B", &hadamard()).unwrap();
        let model = crude_model(std::slice::from_ref(&w)).unwrap();
        let weights = model.indicator_weights(&w, 1e-12);
        assert_eq!(weights, vec![1.0]);
        let prep = CpMap::preparation(&ket0_proj()).unwrap();
        let meas = CpMap::povm_element(&ket0_proj()).unwrap();
        let events = [prep, meas];
        let direct = born_probability(&events, &w).unwrap();
        let modelled = model.predict(&events, &weights).unwrap();
        assert!((direct - modelled).abs() < 1e-14);
    }

    #[test]
    fn crude_model_mixture_weights_are_convex_linear() {
        let w1 = ProcessMatrix::unitary_channel("A", "B", &ComplexMatrix::identity(2)).unwrap();
        let w2 = ProcessMatrix::unitary_channel("A", "B", &pauli_z()).unwrap();
        let mixed = convex_mix(&[w1.clone(), w2.clone()], &[0.5, 0.5]).unwrap();
        let model = crude_model(&[w1, w2]).unwrap();
        let prep = CpMap::preparation(&ComplexMatrix::from_real(&[&[0.5, 0.5], &[0.5, 0.5]])).unwrap();
        let meas = CpMap::povm_element(&ComplexMatrix::from_real(&[&[0.5, 0.5], &[0.5, 0.5]])).unwrap();
        let events = [prep, meas];
        let direct = born_probability(&events, &mixed).unwrap();
        let modelled = model.predict(&events, &[0.5, 0.5]).unwrap();
        assert!((direct - modelled).abs() < 1e-12);
    }

    #[test]
    fn eta_instrument_accepts_crude_model() {
        let w1 = ProcessMatrix::unitary_channel("A", "B", &ComplexMatrix::identity(2)).unwrap();
        let w2 = ProcessMatrix::unitary_channel("A", "B", &hadamard()).unwrap();
        let model = crude_model(&[w1.clone(), w2.clone()]).unwrap();
        assert!(check_eta_instrument(&model, &[w1, w2], 1e-9).unwrap());
    }

    #[test]
    fn eta_instrument_rejects_scaled_etas() {
        let w1 = ProcessMatrix::unitary_channel("A", "B", &ComplexMatrix::identity(2)).unwrap();
        let w2 = ProcessMatrix::unitary_channel("A", "B", &hadamard()).unwrap();
        let model = crude_model(&[w1.clone(), w2.clone()]).unwrap();
        let scaled = OnticModelCandidate::new(
            model
                .points()
                .iter()
                .map(|p| OnticPoint { sigma: p.sigma.clone(), eta: p.eta.scale_re(0.9) })
                .collect(),
        )
        .unwrap();
        assert!(!check_eta_instrument(&scaled, &[w1, w2], 1e-9).unwrap());
    }

    #[test]
    fn eta_instrument_accepts_projector_split_on_state_space() {
        // Single measure-only region: eta projectors summing to the identity
        // pair to 1 with every state.
        let rho = ket0_proj();
        let sigma = ProcessMatrix::from_state("A", &rho).unwrap();
        let candidate = OnticModelCandidate::new(vec![
            OnticPoint {
                sigma: sigma.clone(),
                eta: ket0_proj(),
            },
            OnticPoint {
                sigma,
                eta: ket1_proj(),
            },
        ])
        .unwrap();
        let mut rng = sampling::seeded_rng(29);
        let tests: Vec<ProcessMatrix> = (0..5)
            .map(|_| ProcessMatrix::from_state("A", &sampling::random_state(2, &mut rng)).unwrap())
            .collect();
        assert!(check_eta_instrument(&candidate, &tests, 1e-9).unwrap());
    }

    #[test]
    fn region_order_is_enforced() {
        let m = ComplexMatrix::identity(4);
        let out_of_order = vec![
            RegionSpec::new("B", 2, 1).unwrap(),
            RegionSpec::new("A", 1, 2).unwrap(),
        ];
        assert!(matches!(
            ProcessMatrix::new(out_of_order, m),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn process_json_round_trip() {
        let w = ProcessMatrix::unitary_channel("A", "B", &hadamard()).unwrap();
        let json = serde_json::to_string(&w).unwrap();
        let back: ProcessMatrix = serde_json::from_str(&json).unwrap();
        assert!(back.matrix().approx_eq(w.matrix(), 0.0));
        assert_eq!(back.regions(), w.regions());
    }

    #[test]
    fn random_instrument_is_trace_preserving() {
        let mut rng = sampling::seeded_rng(41);
        for &(din, dout) in &[(2usize, 1usize), (2, 2), (1, 2)] {
            let inst = sampling::random_instrument(din, dout, 3, &mut rng).unwrap();
            let mut total = ComplexMatrix::zeros(din * dout, din * dout);
            for e in inst.events() {
                total = total.add(e.choi()).unwrap();
            }
            let reduced = partial_trace(&total, &[din, dout], &[0]).unwrap();
            assert!(reduced.approx_eq(&ComplexMatrix::identity(din), 1e-9));
        }
    }
}

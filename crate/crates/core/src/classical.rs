//! Deterministic classical processes over finite state spaces: local
//! operations map region inputs to outputs, the process feeds every region's
//! outputs back into the other regions' inputs, and an outcome assignment is
//! consistent when it is the unique global fixed point of that loop.
//!
//! State values are small integers and all searches are exhaustive; the
//! interesting sizes (bits, up to three regions) stay far below the
//! enumeration guards.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard ceiling on exhaustive enumeration work.
const ENUMERATION_GUARD: u128 = 10_000_000;

/// Finite input/output state spaces for a set of labelled regions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSpaceSpec {
    pub regions: Vec<ClassicalRegion>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalRegion {
    pub label: String,
    /// Cardinality of the input (past-boundary) state space.
    pub inputs: usize,
    /// Cardinality of the output (future-boundary) state space.
    pub outputs: usize,
}

impl StateSpaceSpec {
    pub fn new(regions: Vec<ClassicalRegion>) -> Result<Self> {
        if regions.is_empty() {
            return Err(Error::Validation("state space needs at least one region".into()));
        }
        if regions.iter().any(|r| r.inputs == 0 || r.outputs == 0) {
            return Err(Error::Validation("state cardinalities must be at least 1".into()));
        }
        Ok(Self { regions })
    }

    /// Uniform spec: `n` regions with `k` input and output states each.
    pub fn uniform(n: usize, k: usize) -> Result<Self> {
        let regions = (1..=n)
            .map(|i| ClassicalRegion {
                label: format!("R{i}"),
                inputs: k,
                outputs: k,
            })
            .collect();
        Self::new(regions)
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    /// Size of the domain of region `x`'s process component: the product of
    /// every other region's output space.
    fn other_outputs(&self, x: usize) -> usize {
        self.regions
            .iter()
            .enumerate()
            .filter(|(y, _)| *y != x)
            .map(|(_, r)| r.outputs)
            .product()
    }

    /// Mixed-radix encoding of the outputs of all regions except `x`,
    /// ascending region order, last region least significant.
    fn encode_other_outputs(&self, x: usize, outputs: &[usize]) -> usize {
        let mut idx = 0;
        for (y, r) in self.regions.iter().enumerate() {
            if y == x {
                continue;
            }
            idx = idx * r.outputs + outputs[y];
        }
        idx
    }
}

/// A deterministic local operation: a total lookup table from the region's
/// input states to its output states.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalOperation {
    pub region: String,
    pub table: Vec<usize>,
}

impl LocalOperation {
    pub fn new(region: impl Into<String>, table: Vec<usize>) -> Self {
        Self { region: region.into(), table }
    }
}

/// Per-region lookup tables feeding the other regions' outputs back into
/// this region's input. Validity (a unique fixed point for every choice of
/// local operations) is a property to check, not an invariant of the type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterministicProcess {
    spec: StateSpaceSpec,
    /// `tables[x][encoded other outputs] = input state of region x`.
    tables: Vec<Vec<usize>>,
}

impl DeterministicProcess {
    pub fn new(spec: StateSpaceSpec, tables: Vec<Vec<usize>>) -> Result<Self> {
        if tables.len() != spec.len() {
            return Err(Error::Dimension(format!(
                "{} tables for {} regions",
                tables.len(),
                spec.len()
            )));
        }
        for (x, table) in tables.iter().enumerate() {
            let domain = spec.other_outputs(x);
            if table.len() != domain {
                return Err(Error::Dimension(format!(
                    "region {} table has {} entries, expected {}",
                    spec.regions[x].label,
                    table.len(),
                    domain
                )));
            }
            if table.iter().any(|&v| v >= spec.regions[x].inputs) {
                return Err(Error::Validation(format!(
                    "region {} table maps outside its input space",
                    spec.regions[x].label
                )));
            }
        }
        Ok(Self { spec, tables })
    }

    pub fn spec(&self) -> &StateSpaceSpec {
        &self.spec
    }

    pub fn tables(&self) -> &[Vec<usize>] {
        &self.tables
    }

    /// Whether component `x` returns the same input regardless of the other
    /// regions' outputs.
    pub fn component_is_constant(&self, x: usize) -> bool {
        self.tables[x].windows(2).all(|w| w[0] == w[1])
    }

    pub fn has_constant_component(&self) -> bool {
        (0..self.tables.len()).any(|x| self.component_is_constant(x))
    }

    fn order_operations<'a>(&self, ops: &'a [LocalOperation]) -> Result<Vec<&'a LocalOperation>> {
        if ops.len() != self.spec.len() {
            return Err(Error::Validation(format!(
                "{} operations for {} regions",
                ops.len(),
                self.spec.len()
            )));
        }
        let mut ordered = Vec::with_capacity(ops.len());
        for (x, r) in self.spec.regions.iter().enumerate() {
            let op = ops
                .iter()
                .find(|o| o.region == r.label)
                .ok_or_else(|| Error::Validation(format!("no operation for region {}", r.label)))?;
            if op.table.len() != r.inputs {
                return Err(Error::Dimension(format!(
                    "operation for region {} covers {} inputs, expected {}",
                    r.label,
                    op.table.len(),
                    r.inputs
                )));
            }
            if op.table.iter().any(|&v| v >= r.outputs) {
                return Err(Error::Validation(format!(
                    "operation for region {} maps outside its output space",
                    r.label
                )));
            }
            let _ = x;
            ordered.push(op);
        }
        Ok(ordered)
    }

    /// Fixed points of `inputs -> process(ops(inputs))`, enumerated over all
    /// joint input tuples in lexicographic order.
    fn fixed_points(&self, ordered_ops: &[&LocalOperation]) -> Vec<Vec<usize>> {
        let n = self.spec.len();
        let mut found = Vec::new();
        let mut inputs = vec![0usize; n];
        loop {
            let outputs: Vec<usize> = (0..n).map(|x| ordered_ops[x].table[inputs[x]]).collect();
            let consistent = (0..n).all(|x| {
                let idx = self.spec.encode_other_outputs(x, &outputs);
                self.tables[x][idx] == inputs[x]
            });
            if consistent {
                found.push(inputs.clone());
            }
            // Odometer over joint inputs.
            let mut pos = n;
            loop {
                if pos == 0 {
                    return found;
                }
                pos -= 1;
                inputs[pos] += 1;
                if inputs[pos] < self.spec.regions[pos].inputs {
                    break;
                }
                inputs[pos] = 0;
            }
        }
    }

    /// Runs the process against one operation per region. Returns the event
    /// list `(input, output)` per region when the composed map has exactly
    /// one fixed point, and `None` otherwise.
    pub fn run(&self, ops: &[LocalOperation]) -> Result<Option<Vec<(usize, usize)>>> {
        let ordered = self.order_operations(ops)?;
        let fixed = self.fixed_points(&ordered);
        if fixed.len() != 1 {
            return Ok(None);
        }
        let inputs = &fixed[0];
        Ok(Some(
            (0..self.spec.len())
                .map(|x| (inputs[x], ordered[x].table[inputs[x]]))
                .collect(),
        ))
    }

    /// Number of deterministic operation tuples for this state space;
    /// `None` when it does not even fit in the counter.
    fn operation_tuple_count(&self) -> Option<u128> {
        self.spec
            .regions
            .iter()
            .try_fold(1u128, |acc, r| {
                let per = (r.outputs as u128).checked_pow(r.inputs as u32)?;
                acc.checked_mul(per)
            })
    }

    /// True iff every tuple of deterministic local operations yields a
    /// unique fixed point. Exhaustive; guarded against oversized spaces.
    pub fn is_valid(&self) -> Result<bool> {
        match self.operation_tuple_count() {
            Some(count) if count <= ENUMERATION_GUARD => {}
            _ => {
                return Err(Error::Resource(
                    "operation tuples exceed the enumeration guard".into(),
                ))
            }
        }
        Ok(for_each_operation_tuple(&self.spec, |ops| {
            let ordered: Vec<&LocalOperation> = ops.iter().collect();
            self.fixed_points(&ordered).len() == 1
        }))
    }
}

/// Calls `check` for every deterministic operation tuple; returns true when
/// every call returns true (short-circuits on the first failure).
fn for_each_operation_tuple(
    spec: &StateSpaceSpec,
    mut check: impl FnMut(&[LocalOperation]) -> bool,
) -> bool {
    let n = spec.len();
    let counts: Vec<usize> = spec
        .regions
        .iter()
        .map(|r| r.outputs.pow(r.inputs as u32))
        .collect();
    let mut indices = vec![0usize; n];
    loop {
        let ops: Vec<LocalOperation> = (0..n)
            .map(|x| {
                LocalOperation::new(
                    spec.regions[x].label.clone(),
                    decode_function(indices[x], spec.regions[x].inputs, spec.regions[x].outputs),
                )
            })
            .collect();
        if !check(&ops) {
            return false;
        }
        let mut pos = n;
        loop {
            if pos == 0 {
                return true;
            }
            pos -= 1;
            indices[pos] += 1;
            if indices[pos] < counts[pos] {
                break;
            }
            indices[pos] = 0;
        }
    }
}

/// Decodes function number `index` from the `outputs^inputs` functions
/// `inputs -> outputs` into a lookup table.
fn decode_function(mut index: usize, inputs: usize, outputs: usize) -> Vec<usize> {
    let mut table = Vec::with_capacity(inputs);
    for _ in 0..inputs {
        table.push(index % outputs);
        index /= outputs;
    }
    table
}

/// Exhaustive classification of every process-function tuple over a state
/// space.
#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    pub regions: usize,
    pub total_processes: u64,
    pub operation_tuples: u64,
    pub valid_count: u64,
    pub valid_with_constant_component: u64,
    pub valid_without_constant_component: u64,
    /// Tables of the first valid process with no constant component, when
    /// one exists.
    pub example_without_constant: Option<Vec<Vec<usize>>>,
}

/// Enumerates all deterministic processes over `spec`, counts the valid
/// ones, and splits them by whether some component is constant. Discovery of
/// the no-constant examples for three regions happens here by search.
pub fn classify_processes(spec: &StateSpaceSpec) -> Result<ClassificationReport> {
    let n = spec.len();
    let guard_err = || Error::Resource("process enumeration exceeds the guard".into());
    let process_counts: Vec<u128> = (0..n)
        .map(|x| {
            (spec.regions[x].inputs as u128)
                .checked_pow(spec.other_outputs(x) as u32)
                .ok_or_else(guard_err)
        })
        .collect::<Result<_>>()?;
    let total_processes = process_counts
        .iter()
        .try_fold(1u128, |acc, &c| acc.checked_mul(c))
        .ok_or_else(guard_err)?;
    let op_tuples = spec
        .regions
        .iter()
        .try_fold(1u128, |acc, r| {
            let per = (r.outputs as u128).checked_pow(r.inputs as u32)?;
            acc.checked_mul(per)
        })
        .ok_or_else(guard_err)?;
    let work = total_processes.checked_mul(op_tuples).ok_or_else(guard_err)?;
    if work > ENUMERATION_GUARD {
        return Err(Error::Resource(format!(
            "{total_processes} processes x {op_tuples} operation tuples exceed the enumeration guard"
        )));
    }
    let total = total_processes as u64;

    let classified: Vec<(bool, bool, u64)> = (0..total)
        .into_par_iter()
        .map(|pi| {
            let mut rem = pi as u128;
            let tables: Vec<Vec<usize>> = (0..n)
                .map(|x| {
                    let count = process_counts[x];
                    let idx = (rem % count) as usize;
                    rem /= count;
                    decode_function(idx, spec.other_outputs(x), spec.regions[x].inputs)
                })
                .collect();
            let process = DeterministicProcess::new(spec.clone(), tables).expect("enumerated table");
            let valid = process.is_valid().expect("guard already checked");
            (valid, process.has_constant_component(), pi)
        })
        .collect();

    let valid_count = classified.iter().filter(|(v, _, _)| *v).count() as u64;
    let with_const = classified.iter().filter(|(v, c, _)| *v && *c).count() as u64;
    let without_const = valid_count - with_const;
    let example_without_constant = classified
        .iter()
        .filter(|(v, c, _)| *v && !*c)
        .map(|(_, _, pi)| *pi)
        .min()
        .map(|pi| {
            let mut rem = pi as u128;
            (0..n)
                .map(|x| {
                    let count = process_counts[x];
                    let idx = (rem % count) as usize;
                    rem /= count;
                    decode_function(idx, spec.other_outputs(x), spec.regions[x].inputs)
                })
                .collect()
        });

    Ok(ClassificationReport {
        regions: n,
        total_processes: total,
        operation_tuples: op_tuples as u64,
        valid_count,
        valid_with_constant_component: with_const,
        valid_without_constant_component: without_const,
        example_without_constant,
    })
}

/// An instrument as a bare set of admissible input-output pairs, generalizing
/// function-type operations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneralInstrumentSet {
    pub region: String,
    pub allowed: Vec<(usize, usize)>,
}

impl GeneralInstrumentSet {
    pub fn new(region: impl Into<String>, allowed: Vec<(usize, usize)>) -> Result<Self> {
        if allowed.is_empty() {
            return Err(Error::Validation("instrument set must be nonempty".into()));
        }
        Ok(Self { region: region.into(), allowed })
    }

    /// The instrument of a total function.
    pub fn from_operation(op: &LocalOperation) -> Result<Self> {
        Self::new(
            op.region.clone(),
            op.table.iter().enumerate().map(|(i, &o)| (i, o)).collect(),
        )
    }
}

/// All joint `(input, output)` assignments, one pair per region, that are
/// admitted by the instruments and globally consistent with the process
/// (`input_x = w_x(other outputs)` for every region). Returned in
/// lexicographic order of the per-region pair choices.
pub fn run_general_instruments(
    process: &DeterministicProcess,
    instruments: &[GeneralInstrumentSet],
) -> Result<Vec<Vec<(usize, usize)>>> {
    let spec = process.spec();
    if instruments.len() != spec.len() {
        return Err(Error::Validation(format!(
            "{} instruments for {} regions",
            instruments.len(),
            spec.len()
        )));
    }
    let mut ordered: Vec<&GeneralInstrumentSet> = Vec::with_capacity(spec.len());
    for r in &spec.regions {
        let inst = instruments
            .iter()
            .find(|i| i.region == r.label)
            .ok_or_else(|| Error::Validation(format!("no instrument for region {}", r.label)))?;
        for &(i, o) in &inst.allowed {
            if i >= r.inputs || o >= r.outputs {
                return Err(Error::Validation(format!(
                    "instrument pair ({i}, {o}) outside region {} state spaces",
                    r.label
                )));
            }
        }
        ordered.push(inst);
    }

    let n = spec.len();
    let mut consistent = Vec::new();
    let mut choice = vec![0usize; n];
    loop {
        let pairs: Vec<(usize, usize)> = (0..n).map(|x| ordered[x].allowed[choice[x]]).collect();
        let outputs: Vec<usize> = pairs.iter().map(|&(_, o)| o).collect();
        let ok = (0..n).all(|x| {
            let idx = spec.encode_other_outputs(x, &outputs);
            process.tables()[x][idx] == pairs[x].0
        });
        if ok {
            consistent.push(pairs);
        }
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(consistent);
            }
            pos -= 1;
            choice[pos] += 1;
            if choice[pos] < ordered[pos].allowed.len() {
                break;
            }
            choice[pos] = 0;
        }
    }
}

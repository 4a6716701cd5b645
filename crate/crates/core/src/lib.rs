//! Operational models of experiments in labelled local regions: quantum
//! events as completely positive maps, instruments, process matrices and the
//! trace pairing that turns them into probabilities, plus the exactly
//! solvable classical counterparts (fixed-point processes over finite state
//! spaces and thermal hypergraph models) and machinery to test whether a
//! finite ontological candidate can decompose a given process
//! non-contextually.

pub mod classical;
pub mod contradiction;
pub mod error;
pub mod linprog;
pub mod matrix;
pub mod process;
pub mod thermal;

pub use error::{Error, Result};
pub use matrix::ComplexMatrix;
pub use process::{born_probability, CpMap, Instrument, ProcessMatrix, RegionSpec};

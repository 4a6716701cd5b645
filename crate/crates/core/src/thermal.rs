//! Classical systems on a fixed hypergraph geometry in a thermal state.
//!
//! Every site carries a finite state set containing the distinguished value
//! `0`, the "empty site"; each hyperedge carries an interaction term that
//! vanishes whenever one of its sites is empty, so inserting or removing
//! sites is just a choice of states within one fixed geometry. The only
//! controls are the two instruments per site (remove: `{0}`, insert:
//! everything else), and the environment is summarized by the inverse
//! temperature.
//!
//! All probabilities are computed by exact enumeration; the deterministic
//! ontic model (one configuration per instrument choice) is enumerated in
//! full when checking that it reproduces the operational probabilities.
//!
//! JSON form of a model:
//!
//! ```json
//! {
//!   "sites": ["s1", "s2"],
//!   "state_sets": {"s1": [0, 1, -1], "s2": [0, 1, -1]},
//!   "hyperedges": [{"sites": ["s1", "s2"], "table": {"1,1": -1.0, "1,-1": 1.0, "-1,1": 1.0, "-1,-1": -1.0}}],
//!   "beta": 1.0
//! }
//! ```
//!
//! Hyperedge tables are keyed by comma-joined site values in the edge's site
//! order; tuples absent from the table contribute zero energy (entries with
//! an empty site are forced to zero and may simply be omitted).

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ceiling on exact-enumeration work (configuration and assignment spaces).
const ENUMERATION_GUARD: u128 = 10_000_000;

/// Sites plus the hyperedges (site-index subsets) carrying interactions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hypergraph {
    pub sites: Vec<String>,
    pub edges: Vec<Vec<usize>>,
}

impl Hypergraph {
    pub fn new(sites: Vec<String>, edges: Vec<Vec<usize>>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::Validation("hypergraph needs at least one site".into()));
        }
        for e in &edges {
            if e.is_empty() {
                return Err(Error::Validation("empty hyperedge".into()));
            }
            if e.iter().any(|&j| j >= sites.len()) {
                return Err(Error::Validation("hyperedge references a missing site".into()));
            }
        }
        Ok(Self { sites, edges })
    }
}

/// Per-site binary instrument choice: `false` removes the site (state set
/// `{0}`), `true` inserts it (every nonzero state).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InstrumentChoice {
    pub bits: Vec<bool>,
}

impl InstrumentChoice {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Lexicographic index over `(x_1, ..., x_N)`, first site most
    /// significant: `(0,..,0) -> 0`, `(0,..,1) -> 1`, ...
    pub fn index(&self) -> usize {
        self.bits.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b))
    }

    pub fn from_index(index: usize, n: usize) -> Self {
        let bits = (0..n).map(|j| (index >> (n - 1 - j)) & 1 == 1).collect();
        Self { bits }
    }

    /// All `2^n` choices in lexicographic order.
    pub fn all(n: usize) -> Vec<Self> {
        (0..1usize << n).map(|i| Self::from_index(i, n)).collect()
    }

    pub fn label(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

/// A deterministic ontic process: one configuration per instrument choice,
/// indexed by [`InstrumentChoice::index`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OnticProcessAssignment {
    pub configs: Vec<Vec<i64>>,
}

/// Hypergraph geometry, per-site state sets, interaction tables and the
/// inverse temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ThermalModelRepr", into = "ThermalModelRepr")]
pub struct ThermalModel {
    graph: Hypergraph,
    state_sets: Vec<Vec<i64>>,
    terms: Vec<HashMap<Vec<i64>, f64>>,
    beta: f64,
}

#[derive(Serialize, Deserialize)]
struct EdgeRepr {
    sites: Vec<String>,
    table: BTreeMap<String, f64>,
}

#[derive(Serialize, Deserialize)]
struct ThermalModelRepr {
    sites: Vec<String>,
    state_sets: BTreeMap<String, Vec<i64>>,
    hyperedges: Vec<EdgeRepr>,
    beta: f64,
}

impl TryFrom<ThermalModelRepr> for ThermalModel {
    type Error = Error;

    fn try_from(r: ThermalModelRepr) -> Result<Self> {
        let site_index: HashMap<&str, usize> = r
            .sites
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        if site_index.len() != r.sites.len() {
            return Err(Error::Validation("duplicate site labels".into()));
        }
        let mut state_sets = Vec::with_capacity(r.sites.len());
        for s in &r.sites {
            let set = r
                .state_sets
                .get(s)
                .ok_or_else(|| Error::Validation(format!("no state set for site {s}")))?;
            state_sets.push(set.clone());
        }
        let mut edges = Vec::with_capacity(r.hyperedges.len());
        let mut terms = Vec::with_capacity(r.hyperedges.len());
        for e in &r.hyperedges {
            let idx: Vec<usize> = e
                .sites
                .iter()
                .map(|s| {
                    site_index
                        .get(s.as_str())
                        .copied()
                        .ok_or_else(|| Error::Validation(format!("hyperedge references unknown site {s}")))
                })
                .collect::<Result<_>>()?;
            let mut table = HashMap::new();
            for (key, &value) in &e.table {
                let tuple: Vec<i64> = key
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<i64>()
                            .map_err(|_| Error::Validation(format!("bad table key component {t:?}")))
                    })
                    .collect::<Result<_>>()?;
                table.insert(tuple, value);
            }
            edges.push(idx);
            terms.push(table);
        }
        ThermalModel::new(Hypergraph::new(r.sites, edges)?, state_sets, terms, r.beta)
    }
}

impl From<ThermalModel> for ThermalModelRepr {
    fn from(m: ThermalModel) -> Self {
        let state_sets = m
            .graph
            .sites
            .iter()
            .zip(&m.state_sets)
            .map(|(s, set)| (s.clone(), set.clone()))
            .collect();
        let hyperedges = m
            .graph
            .edges
            .iter()
            .zip(&m.terms)
            .map(|(e, table)| EdgeRepr {
                sites: e.iter().map(|&j| m.graph.sites[j].clone()).collect(),
                table: table
                    .iter()
                    .map(|(tuple, &v)| {
                        let key = tuple
                            .iter()
                            .map(i64::to_string)
                            .collect::<Vec<_>>()
                            .join(",");
                        (key, v)
                    })
                    .collect(),
            })
            .collect();
        ThermalModelRepr {
            sites: m.graph.sites,
            state_sets,
            hyperedges,
            beta: m.beta,
        }
    }
}

impl ThermalModel {
    /// Validates the empty-site convention on construction: every table
    /// entry whose tuple contains a `0` must be zero, all tuple values must
    /// belong to the respective state sets, and every state set contains the
    /// empty value.
    pub fn new(
        graph: Hypergraph,
        state_sets: Vec<Vec<i64>>,
        terms: Vec<HashMap<Vec<i64>, f64>>,
        beta: f64,
    ) -> Result<Self> {
        if state_sets.len() != graph.sites.len() {
            return Err(Error::Dimension(format!(
                "{} state sets for {} sites",
                state_sets.len(),
                graph.sites.len()
            )));
        }
        for (j, set) in state_sets.iter().enumerate() {
            if !set.contains(&0) {
                return Err(Error::Validation(format!(
                    "state set of site {} lacks the empty value 0",
                    graph.sites[j]
                )));
            }
            let mut sorted = set.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != set.len() {
                return Err(Error::Validation(format!(
                    "state set of site {} has duplicates",
                    graph.sites[j]
                )));
            }
        }
        if terms.len() != graph.edges.len() {
            return Err(Error::Dimension(format!(
                "{} interaction tables for {} hyperedges",
                terms.len(),
                graph.edges.len()
            )));
        }
        if beta.is_nan() || beta < 0.0 {
            return Err(Error::Validation(format!("inverse temperature {beta} must be nonnegative")));
        }
        for (e, table) in graph.edges.iter().zip(&terms) {
            for (tuple, &value) in table {
                if tuple.len() != e.len() {
                    return Err(Error::Validation(format!(
                        "table tuple {tuple:?} has arity {} on a {}-site hyperedge",
                        tuple.len(),
                        e.len()
                    )));
                }
                for (&v, &site) in tuple.iter().zip(e) {
                    if !state_sets[site].contains(&v) {
                        return Err(Error::Validation(format!(
                            "table tuple {tuple:?} uses value {v} outside site {}'s states",
                            graph.sites[site]
                        )));
                    }
                }
                if tuple.contains(&0) && value != 0.0 {
                    return Err(Error::Validation(format!(
                        "interaction term must vanish on empty sites, got {value} at {tuple:?}"
                    )));
                }
            }
        }
        Ok(Self { graph, state_sets, terms, beta })
    }

    /// Nearest-neighbour chain with states `{0, +1, -1}` per site and the
    /// two-site coupling `-(a * b)` on each edge.
    pub fn ising_chain(n: usize, beta: f64) -> Result<Self> {
        let sites: Vec<String> = (1..=n).map(|i| format!("s{i}")).collect();
        let edges: Vec<Vec<usize>> = (0..n.saturating_sub(1)).map(|j| vec![j, j + 1]).collect();
        let state_sets = vec![vec![0, 1, -1]; n];
        let mut table = HashMap::new();
        for a in [-1i64, 1] {
            for b in [-1i64, 1] {
                table.insert(vec![a, b], -((a * b) as f64));
            }
        }
        let terms = vec![table; edges.len()];
        Self::new(Hypergraph::new(sites, edges)?, state_sets, terms, beta)
    }

    pub fn graph(&self) -> &Hypergraph {
        &self.graph
    }

    pub fn state_sets(&self) -> &[Vec<i64>] {
        &self.state_sets
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn site_count(&self) -> usize {
        self.graph.sites.len()
    }

    fn check_config(&self, config: &[i64]) -> Result<()> {
        if config.len() != self.site_count() {
            return Err(Error::Dimension(format!(
                "configuration of length {} for {} sites",
                config.len(),
                self.site_count()
            )));
        }
        for (j, &v) in config.iter().enumerate() {
            if !self.state_sets[j].contains(&v) {
                return Err(Error::Validation(format!(
                    "value {v} outside the state set of site {}",
                    self.graph.sites[j]
                )));
            }
        }
        Ok(())
    }

    /// Total energy: the sum of hyperedge terms at `config`.
    pub fn hamiltonian(&self, config: &[i64]) -> Result<f64> {
        self.check_config(config)?;
        let mut total = 0.0;
        for (e, table) in self.graph.edges.iter().zip(&self.terms) {
            let tuple: Vec<i64> = e.iter().map(|&j| config[j]).collect();
            total += table.get(&tuple).copied().unwrap_or(0.0);
        }
        Ok(total)
    }

    /// Every joint configuration, lexicographic in the declared state-set
    /// orders.
    pub fn all_configs(&self) -> Result<Vec<Vec<i64>>> {
        let size = self
            .state_sets
            .iter()
            .try_fold(1u128, |acc, s| acc.checked_mul(s.len() as u128))
            .filter(|&s| s <= ENUMERATION_GUARD)
            .ok_or_else(|| {
                Error::Resource("configuration space exceeds the enumeration guard".into())
            })?;
        let mut out = Vec::with_capacity(size as usize);
        let mut idx = vec![0usize; self.site_count()];
        loop {
            out.push(
                idx.iter()
                    .enumerate()
                    .map(|(j, &i)| self.state_sets[j][i])
                    .collect(),
            );
            let mut pos = self.site_count();
            loop {
                if pos == 0 {
                    return Ok(out);
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < self.state_sets[pos].len() {
                    break;
                }
                idx[pos] = 0;
            }
        }
    }

    /// Thermal probability of `config` over the whole configuration space.
    pub fn gibbs_probability(&self, config: &[i64]) -> Result<f64> {
        self.check_config(config)?;
        let z: f64 = self
            .all_configs()?
            .iter()
            .map(|c| (-self.beta * self.hamiltonian(c).unwrap()).exp())
            .sum();
        Ok((-self.beta * self.hamiltonian(config)?).exp() / z)
    }

    /// The instrument choice a configuration belongs to: site `j` is
    /// inserted exactly when its state is nonzero. Instruments are disjoint,
    /// so this is total and single-valued.
    pub fn choice_of_config(&self, config: &[i64]) -> Result<InstrumentChoice> {
        self.check_config(config)?;
        Ok(InstrumentChoice::new(config.iter().map(|&v| v != 0).collect()))
    }

    /// Configurations compatible with an instrument choice, lexicographic.
    pub fn choice_configs(&self, choice: &InstrumentChoice) -> Result<Vec<Vec<i64>>> {
        if choice.bits.len() != self.site_count() {
            return Err(Error::Dimension(format!(
                "choice over {} sites for a {}-site model",
                choice.bits.len(),
                self.site_count()
            )));
        }
        let per_site: Vec<Vec<i64>> = self
            .state_sets
            .iter()
            .zip(&choice.bits)
            .map(|(set, &inserted)| {
                if inserted {
                    set.iter().copied().filter(|&v| v != 0).collect()
                } else {
                    vec![0]
                }
            })
            .collect();
        if per_site.iter().any(|s| s.is_empty()) {
            return Err(Error::Validation(
                "a site with no nonzero states cannot be inserted".into(),
            ));
        }
        let mut out = Vec::new();
        let mut idx = vec![0usize; self.site_count()];
        loop {
            out.push(idx.iter().enumerate().map(|(j, &i)| per_site[j][i]).collect());
            let mut pos = self.site_count();
            loop {
                if pos == 0 {
                    return Ok(out);
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < per_site[pos].len() {
                    break;
                }
                idx[pos] = 0;
            }
        }
    }

    /// Frame function: the Boltzmann weight of `config` normalized over
    /// exactly the configurations sharing its zero pattern.
    pub fn frame_function(&self, config: &[i64]) -> Result<f64> {
        let choice = self.choice_of_config(config)?;
        let z: f64 = self
            .choice_configs(&choice)?
            .iter()
            .map(|c| (-self.beta * self.hamiltonian(c).unwrap()).exp())
            .sum();
        Ok((-self.beta * self.hamiltonian(config)?).exp() / z)
    }

    /// Probability of observing `config` given the instrument choice: the
    /// frame function when the zero pattern matches the choice, else zero.
    pub fn operational_probability(&self, choice: &InstrumentChoice, config: &[i64]) -> Result<f64> {
        let actual = self.choice_of_config(config)?;
        if actual != *choice {
            return Ok(0.0);
        }
        self.frame_function(config)
    }

    fn check_assignment(&self, assignment: &OnticProcessAssignment) -> Result<()> {
        let n = self.site_count();
        if n >= 24 {
            return Err(Error::Resource(format!(
                "{n} sites give too many instrument choices to enumerate"
            )));
        }
        if assignment.configs.len() != 1 << n {
            return Err(Error::Dimension(format!(
                "assignment covers {} choices, expected {}",
                assignment.configs.len(),
                1usize << n
            )));
        }
        for (i, cfg) in assignment.configs.iter().enumerate() {
            let choice = InstrumentChoice::from_index(i, n);
            let actual = self.choice_of_config(cfg)?;
            if actual != choice {
                return Err(Error::Validation(format!(
                    "assignment gives choice {} the configuration {cfg:?}, whose zero pattern is {}",
                    choice.label(),
                    actual.label()
                )));
            }
        }
        Ok(())
    }

    /// Probability the thermal ontic model gives to one deterministic
    /// process: the product of frame-function values over all instrument
    /// choices.
    pub fn ontic_process_probability(&self, assignment: &OnticProcessAssignment) -> Result<f64> {
        self.check_assignment(assignment)?;
        let mut p = 1.0;
        for cfg in &assignment.configs {
            p *= self.frame_function(cfg)?;
        }
        Ok(p)
    }

    /// Checks that averaging the deterministic ontic conditional over the
    /// ontic-process distribution reproduces the operational probabilities,
    /// cell by cell, by exhaustive enumeration of the assignment space.
    pub fn verify_omega_mediation(&self, tol: f64) -> Result<OmegaMediationReport> {
        let n = self.site_count();
        if n >= 24 {
            return Err(Error::Resource(format!(
                "{n} sites give too many instrument choices to enumerate"
            )));
        }
        let choices = InstrumentChoice::all(n);

        // Slot data per instrument choice: compatible configs and their
        // frame values.
        let slot_configs: Vec<Vec<Vec<i64>>> = choices
            .iter()
            .map(|c| self.choice_configs(c))
            .collect::<Result<_>>()?;
        let slot_frames: Vec<Vec<f64>> = slot_configs
            .iter()
            .map(|cfgs| cfgs.iter().map(|c| self.frame_function(c)).collect::<Result<_>>())
            .collect::<Result<_>>()?;

        let assignment_count = slot_configs
            .iter()
            .try_fold(1u128, |acc, c| acc.checked_mul(c.len() as u128))
            .filter(|&s| s <= ENUMERATION_GUARD)
            .ok_or_else(|| {
                Error::Resource("ontic assignment space exceeds the enumeration guard".into())
            })?;

        let all = self.all_configs()?;
        if (choices.len() as u128)
            .checked_mul(assignment_count.max(all.len() as u128))
            .is_none_or(|w| w > ENUMERATION_GUARD)
        {
            return Err(Error::Resource(
                "mediation table exceeds the enumeration guard".into(),
            ));
        }
        let config_index: HashMap<Vec<i64>, usize> =
            all.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();

        // For each choice slot, the total ontic weight landing on each
        // configuration: sum over assignments of prod_x f(a_x), bucketed by
        // the assignment's configuration at that slot. Cells are independent,
        // so slots are processed in parallel.
        let buckets: Vec<Vec<f64>> = (0..choices.len())
            .into_par_iter()
            .map(|slot| {
                let mut bucket = vec![0.0f64; all.len()];
                let mut idx = vec![0usize; choices.len()];
                loop {
                    let weight: f64 = idx
                        .iter()
                        .enumerate()
                        .map(|(x, &i)| slot_frames[x][i])
                        .product();
                    let cfg = &slot_configs[slot][idx[slot]];
                    bucket[config_index[cfg]] += weight;
                    let mut pos = choices.len();
                    loop {
                        if pos == 0 {
                            return bucket;
                        }
                        pos -= 1;
                        idx[pos] += 1;
                        if idx[pos] < slot_configs[pos].len() {
                            break;
                        }
                        idx[pos] = 0;
                    }
                }
            })
            .collect();

        let mut cells = Vec::with_capacity(choices.len() * all.len());
        let mut max_residual = 0.0f64;
        for (ci, choice) in choices.iter().enumerate() {
            for (cfg_i, cfg) in all.iter().enumerate() {
                let operational = self.operational_probability(choice, cfg)?;
                let matches = self.choice_of_config(cfg)? == *choice;
                let ontic = if matches { buckets[ci][cfg_i] } else { 0.0 };
                let residual = (operational - ontic).abs();
                max_residual = max_residual.max(residual);
                cells.push(MediationCell {
                    choice: choice.label(),
                    config: cfg.clone(),
                    operational,
                    ontic,
                    residual,
                });
            }
        }
        Ok(OmegaMediationReport {
            assignments: assignment_count as u64,
            max_residual,
            tol,
            pass: max_residual < tol,
            cells,
        })
    }

    /// Distribution of one site's state under an instrument choice,
    /// optionally conditioned on observed values at other sites. Returned
    /// over the site's full state set, in declared order.
    pub fn conditional_site_distribution(
        &self,
        choice: &InstrumentChoice,
        target_site: usize,
        observations: &[(usize, i64)],
    ) -> Result<Vec<(i64, f64)>> {
        if target_site >= self.site_count() {
            return Err(Error::Dimension(format!("no site {target_site}")));
        }
        let configs = self.choice_configs(choice)?;
        let mut totals: BTreeMap<i64, f64> = self.state_sets[target_site]
            .iter()
            .map(|&v| (v, 0.0))
            .collect();
        let mut norm = 0.0;
        for cfg in &configs {
            if observations.iter().any(|&(site, v)| cfg[site] != v) {
                continue;
            }
            let f = self.frame_function(cfg)?;
            norm += f;
            *totals.get_mut(&cfg[target_site]).unwrap() += f;
        }
        if norm <= 0.0 {
            return Err(Error::Validation(
                "conditioning event has probability zero under this choice".into(),
            ));
        }
        Ok(self.state_sets[target_site]
            .iter()
            .map(|&v| (v, totals[&v] / norm))
            .collect())
    }
}

/// One `(instrument choice, configuration)` cell of the mediation check.
#[derive(Debug, Clone, Serialize)]
pub struct MediationCell {
    pub choice: String,
    pub config: Vec<i64>,
    pub operational: f64,
    pub ontic: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OmegaMediationReport {
    pub assignments: u64,
    pub max_residual: f64,
    pub tol: f64,
    pub pass: bool,
    pub cells: Vec<MediationCell>,
}

/// Total variation distance between two distributions given as aligned
/// `(value, probability)` lists.
pub fn total_variation(p: &[(i64, f64)], q: &[(i64, f64)]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    0.5 * p
        .iter()
        .zip(q)
        .map(|(&(_, a), &(_, b))| (a - b).abs())
        .sum::<f64>()
}

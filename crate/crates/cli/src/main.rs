//! `procmat` command line: validation, Born-rule evaluation, decomposition
//! demos, classical process search and thermal-model verification.
//!
//! Every subcommand emits a UTF-8 JSON report with sorted keys that echoes
//! its inputs, the seed and the tolerances used, so identical invocations
//! produce byte-identical reports. Exit status: 0 when the run's verdict is
//! the expected/passing one, 1 on a verified failure verdict, 2 on input or
//! resource errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use procmat_core::classical::{classify_processes, StateSpaceSpec};
use procmat_core::contradiction::{find_contradiction, ContradictionWitness};
use procmat_core::matrix::{hadamard, pauli_x, pauli_y, pauli_z, two_qubit_pauli_coefficients, ComplexMatrix};
use procmat_core::process::{
    born_probability, check_eta_instrument, crude_model, sampling, validate_process, CpMap,
    ProcessMatrix,
};
use procmat_core::thermal::ThermalModel;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "procmat", version, about = "Process-matrix toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Tolerance override for the subcommand's checks.
    #[arg(long)]
    tol: Option<f64>,
    /// Seed for any sampled checks; echoed into the report.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for parallel search/verification (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Check positivity and normalization of a process matrix.
    ValidateProcess {
        #[command(flatten)]
        common: CommonArgs,
        /// Process JSON file ({"regions": [...], "matrix": {...}}).
        #[arg(long)]
        process: PathBuf,
        /// Number of random trace-preserving tuples beyond the spanning family.
        #[arg(long, default_value_t = 64)]
        samples: usize,
    },
    /// Evaluate the probability of one event per region against a process.
    Born {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        process: PathBuf,
        /// JSON array of CP maps ({"dim_in": ..., "dim_out": ..., "choi": {...}}),
        /// one per region in region order.
        #[arg(long)]
        events: PathBuf,
    },
    /// Build the two Pauli-conjugation decompositions for a unitary and run
    /// all cross proportionality tests.
    ContradictionDemo {
        #[command(flatten)]
        common: CommonArgs,
        /// Named unitary (identity|x|y|z|hadamard) or a matrix JSON file.
        #[arg(long)]
        unitary: String,
    },
    /// Exhaustively classify deterministic classical processes.
    ClassicalSearch {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        regions: usize,
        #[arg(long)]
        cardinality: usize,
    },
    /// Verify that the thermal model's deterministic ontic processes
    /// reproduce its operational probabilities, cell by cell.
    WhartonVerify {
        #[command(flatten)]
        common: CommonArgs,
        /// Thermal model JSON file.
        #[arg(long)]
        model: PathBuf,
    },
    /// Check that the identity-indicator ontic model over a process set
    /// reproduces the trace rule on random event tuples.
    CrudeModelCheck {
        #[command(flatten)]
        common: CommonArgs,
        /// Process JSON files forming the model's dictionary; defaults to the
        /// four Pauli-conjugation channel processes.
        #[arg(long, num_args = 1..)]
        process: Vec<PathBuf>,
        /// Number of random event tuples per process.
        #[arg(long, default_value_t = 50)]
        tuples: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("procmat: error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let common = match &cli.command {
        Command::ValidateProcess { common, .. }
        | Command::Born { common, .. }
        | Command::ContradictionDemo { common, .. }
        | Command::ClassicalSearch { common, .. }
        | Command::WhartonVerify { common, .. }
        | Command::CrudeModelCheck { common, .. } => common,
    };
    if let Some(tol) = common.tol {
        if tol.is_nan() || tol <= 0.0 {
            return Err(anyhow!("--tol must be a positive number, got {tol}"));
        }
    }
    if let Some(jobs) = common.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring the thread pool")?;
    }

    let (name, inputs, result, verdict, pass, meta, extra_csv) = match cli.command {
        Command::ValidateProcess { common, process, samples } => {
            let tol = common.tol.unwrap_or(1e-9);
            let w: ProcessMatrix = read_json(&process)?;
            let report = validate_process(&w, samples, tol, common.seed)?;
            let pass = report.pass;
            let verdict = if pass { "valid" } else { "invalid" };
            (
                "validate-process",
                json!({ "process": serde_json::to_value(&w)?, "samples": samples }),
                serde_json::to_value(&report)?,
                verdict.to_string(),
                pass,
                ReportMeta { tol: Some(tol), common },
                None,
            )
        }
        Command::Born { common, process, events } => {
            let tol = common.tol.unwrap_or(1e-9);
            let w: ProcessMatrix = read_json(&process)?;
            let evs: Vec<CpMap> = read_json(&events)?;
            let p = born_probability(&evs, &w)?;
            (
                "born",
                json!({ "process": serde_json::to_value(&w)?, "events": serde_json::to_value(&evs)? }),
                json!({ "probability": p }),
                "evaluated".to_string(),
                true,
                ReportMeta { tol: Some(tol), common },
                None,
            )
        }
        Command::ContradictionDemo { common, unitary } => {
            let tol = common.tol.unwrap_or(1e-10);
            let (label, u) = resolve_unitary(&unitary)?;
            let witness = find_contradiction(&u, tol)?;
            let confirmed = witness.confirms_contradiction();
            let verdict = if confirmed { "contradiction-confirmed" } else { "no-contradiction" };
            (
                "contradiction-demo",
                json!({ "unitary": label, "matrix": serde_json::to_value(&u)? }),
                witness_report(&witness)?,
                verdict.to_string(),
                confirmed,
                ReportMeta { tol: Some(tol), common },
                None,
            )
        }
        Command::ClassicalSearch { common, regions, cardinality } => {
            let spec = StateSpaceSpec::uniform(regions, cardinality)?;
            let report = classify_processes(&spec)?;
            // Exhaustively established facts about the valid set.
            let constancy_holds = report.valid_without_constant_component == 0;
            let nonconstant_exists = report.valid_without_constant_component > 0;
            let (verdict, pass) = if regions <= 2 {
                if constancy_holds {
                    ("constancy-confirmed", true)
                } else {
                    ("constancy-violated", false)
                }
            } else if nonconstant_exists {
                ("nonconstant-found", true)
            } else {
                ("nonconstant-missing", false)
            };
            (
                "classical-search",
                json!({ "regions": regions, "cardinality": cardinality }),
                serde_json::to_value(&report)?,
                verdict.to_string(),
                pass,
                ReportMeta { tol: None, common },
                None,
            )
        }
        Command::WhartonVerify { common, model } => {
            let tol = common.tol.unwrap_or(1e-12);
            let m: ThermalModel = read_json(&model)?;
            let report = m.verify_omega_mediation(tol)?;
            let pass = report.pass;
            let verdict = if pass { "mediation-verified" } else { "mediation-violated" };
            let mut csv = String::from("choice,config,operational,ontic,residual\n");
            for cell in &report.cells {
                let cfg = cell
                    .config
                    .iter()
                    .map(i64::to_string)
                    .collect::<Vec<_>>()
                    .join(" ");
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    cell.choice, cfg, cell.operational, cell.ontic, cell.residual
                ));
            }
            (
                "wharton-verify",
                json!({ "model": serde_json::to_value(&m)? }),
                serde_json::to_value(&report)?,
                verdict.to_string(),
                pass,
                ReportMeta { tol: Some(tol), common },
                Some(csv),
            )
        }
        Command::CrudeModelCheck { common, process, tuples } => {
            let tol = common.tol.unwrap_or(1e-10);
            let processes: Vec<ProcessMatrix> = if process.is_empty() {
                let paulis = [
                    ComplexMatrix::identity(2),
                    pauli_x(),
                    pauli_y(),
                    pauli_z(),
                ];
                paulis
                    .iter()
                    .map(|p| ProcessMatrix::unitary_channel("A", "B", p))
                    .collect::<procmat_core::Result<_>>()?
            } else {
                process
                    .iter()
                    .map(|p| read_json::<ProcessMatrix>(p))
                    .collect::<anyhow::Result<_>>()?
            };
            let result = crude_model_report(&processes, tuples, tol, common.seed)?;
            let pass = result["max_deviation"].as_f64().unwrap() < tol
                && result["eta_instrument_ok"].as_bool().unwrap();
            let verdict = if pass { "reproduces-born-rule" } else { "mismatch" };
            (
                "crude-model-check",
                json!({
                    "processes": serde_json::to_value(&processes)?,
                    "tuples": tuples,
                }),
                result,
                verdict.to_string(),
                pass,
                ReportMeta { tol: Some(tol), common },
                None,
            )
        }
    };

    let report = json!({
        "inputs": inputs,
        "jobs": meta.common.jobs,
        "result": result,
        "seed": meta.common.seed,
        "subcommand": name,
        "tolerance": meta.tol,
        "tool": "procmat",
        "verdict": verdict,
        "version": VERSION,
    });
    let rendered = serde_json::to_string_pretty(&report)? + "\n";
    match &meta.common.out {
        Some(path) => {
            fs::write(path, rendered).with_context(|| format!("writing {}", path.display()))?;
            if let Some(csv) = extra_csv {
                let csv_path = path.with_extension("csv");
                fs::write(&csv_path, csv)
                    .with_context(|| format!("writing {}", csv_path.display()))?;
            }
        }
        None => print!("{rendered}"),
    }
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

struct ReportMeta {
    common: CommonArgs,
    tol: Option<f64>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn resolve_unitary(name: &str) -> anyhow::Result<(String, ComplexMatrix)> {
    let u = match name.to_ascii_lowercase().as_str() {
        "identity" | "i" => ComplexMatrix::identity(2),
        "x" => pauli_x(),
        "y" => pauli_y(),
        "z" => pauli_z(),
        "hadamard" | "h" => hadamard(),
        _ => {
            let path = PathBuf::from(name);
            if !path.exists() {
                return Err(anyhow!(
                    "unknown unitary {name:?}: expected identity|x|y|z|hadamard or a matrix JSON file"
                ));
            }
            let m: ComplexMatrix = read_json(&path)?;
            return Ok((name.to_string(), m));
        }
    };
    Ok((name.to_ascii_lowercase(), u))
}

fn pauli_coefficient_table(m: &ComplexMatrix) -> anyhow::Result<Value> {
    const LABELS: [&str; 4] = ["I", "X", "Y", "Z"];
    let coeffs = two_qubit_pauli_coefficients(m)?;
    let mut map = serde_json::Map::new();
    for ((p, q), c) in coeffs {
        let key = format!("{}{}", LABELS[p], LABELS[q]);
        map.insert(key, json!([c.re, c.im]));
    }
    Ok(Value::Object(map))
}

fn witness_report(witness: &ContradictionWitness) -> anyhow::Result<Value> {
    let decomposition = |parts: &[ProcessMatrix], weights: &[f64]| -> anyhow::Result<Value> {
        let entries: Vec<Value> = parts
            .iter()
            .zip(weights)
            .map(|(p, &w)| {
                Ok(json!({
                    "weight": w,
                    "matrix": serde_json::to_value(p)?,
                    "pauli_coefficients": pauli_coefficient_table(p.matrix())?,
                }))
            })
            .collect::<anyhow::Result<_>>()?;
        Ok(Value::Array(entries))
    };
    let pairs: Vec<Value> = witness
        .proportional_pairs
        .iter()
        .map(|&(j, k, c)| json!({ "part_a": j, "part_b": k, "scalar": [c.re, c.im] }))
        .collect();
    Ok(json!({
        "target": serde_json::to_value(&witness.target)?,
        "target_pauli_coefficients": pauli_coefficient_table(witness.target.matrix())?,
        "mix_distance": witness.mix_distance,
        "decomposition_a": decomposition(&witness.decomposition_a.parts, &witness.decomposition_a.weights)?,
        "decomposition_b": decomposition(&witness.decomposition_b.parts, &witness.decomposition_b.weights)?,
        "proportional_pairs": pairs,
        "cross_tests": 16,
    }))
}

fn crude_model_report(
    processes: &[ProcessMatrix],
    tuples: usize,
    tol: f64,
    seed: u64,
) -> anyhow::Result<Value> {
    let model = crude_model(processes)?;
    let eta_ok = check_eta_instrument(&model, processes, 1e-9)?;
    let mut rng = sampling::seeded_rng(seed);
    let mut max_dev = 0.0f64;
    let mut checked = 0usize;
    for w in processes {
        let weights = model.indicator_weights(w, 1e-12);
        for _ in 0..tuples {
            let events: Vec<CpMap> = w
                .regions()
                .iter()
                .map(|r| {
                    let inst = sampling::random_instrument(r.dim_in, r.dim_out, 2, &mut rng)?;
                    Ok(inst.events()[0].clone())
                })
                .collect::<procmat_core::Result<_>>()?;
            let direct = born_probability(&events, w)?;
            let modelled = model.predict(&events, &weights)?;
            max_dev = max_dev.max((direct - modelled).abs());
            checked += 1;
        }
    }
    let _ = tol;
    Ok(json!({
        "eta_instrument_ok": eta_ok,
        "event_tuples_checked": checked,
        "max_deviation": max_dev,
        "ontic_points": model.len(),
    }))
}

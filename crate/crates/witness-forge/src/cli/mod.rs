//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 on schema or validation problems (malformed
//! JSON, mismatched mode counts, bad flags), 1 on runtime failures and on
//! missed reproduction targets.

mod reproduce;

pub use reproduce::{run_case, CheckRow, ReproduceCase};

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use crate::baselines;
use crate::error::{Error, Result};
use crate::fock::{self, FockCutoff};
use crate::measurement::{self, SimOptions};
use crate::optimizer::{self, Ansatz, GaConfig, SweepAxis};
use crate::states::StateModel;
use crate::witness::{self, PartitionSpec, SevOptions, WitnessSpec};

#[derive(Parser)]
#[command(
    name = "witness-forge",
    version,
    about = "Entanglement tests from displaced photon-number correlations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// RNG seed; every subcommand is deterministic given it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (falls back to WITNESS_FORGE_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Fock cutoff override for simulation and covariance extraction.
    #[arg(long, global = true)]
    cutoff: Option<usize>,
    /// Write the primary output to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format where both make sense (sweeps default to csv).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a witness against a state: expectation, bound, verdict.
    Eval {
        #[arg(long)]
        witness: PathBuf,
        #[arg(long)]
        state: PathBuf,
        /// Multistart count for the separability bound.
        #[arg(long, default_value_t = 64)]
        starts: usize,
    },
    /// Solve the separability eigenvalue problem of a witness.
    Sev {
        #[arg(long)]
        witness: PathBuf,
        #[arg(long, default_value_t = 64)]
        starts: usize,
        /// Use the exact collinear m=3 path with phases "phi,theta".
        #[arg(long)]
        collinear: Option<String>,
    },
    /// Genetic optimization of a witness for a state.
    Optimize {
        #[arg(long)]
        state: PathBuf,
        /// Partition blocks of 1-based mode indices, e.g. "1|2" or "1,2|3,4".
        #[arg(long)]
        partition: String,
        /// Number of displacement configurations.
        #[arg(long, default_value_t = 3)]
        m: usize,
        /// GA configuration JSON; flags below override its entries.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        population: Option<usize>,
        #[arg(long)]
        generations: Option<usize>,
        #[arg(long, value_enum)]
        ansatz: Option<AnsatzArg>,
    },
    /// One-parameter study: expectation and bound along a grid.
    Sweep {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        witness: Option<PathBuf>,
        #[arg(long, value_enum)]
        param: ParamArg,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 21)]
        steps: usize,
    },
    /// Shot-level Monte Carlo estimate of the witness expectation.
    Simulate {
        #[arg(long)]
        witness: PathBuf,
        #[arg(long)]
        state: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        shots: u64,
        /// Per-mode detection efficiencies, e.g. "0.8,0.9".
        #[arg(long)]
        etas: Option<String>,
    },
    /// Covariance-matrix comparison criteria.
    Baseline {
        #[arg(long, value_enum)]
        criterion: CriterionArg,
        #[arg(long)]
        state: PathBuf,
    },
    /// Re-derive the bundled reference values and check them.
    Reproduce {
        #[arg(long, value_enum, default_value_t = ReproduceCase::All)]
        case: ReproduceCase,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ParamArg {
    Sigma,
    Kappa,
    Xi,
    Radius,
}

impl From<ParamArg> for SweepAxis {
    fn from(p: ParamArg) -> Self {
        match p {
            ParamArg::Sigma => SweepAxis::Sigma,
            ParamArg::Kappa => SweepAxis::Kappa,
            ParamArg::Xi => SweepAxis::XiMagnitude,
            ParamArg::Radius => SweepAxis::CircleRadius,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AnsatzArg {
    Free,
    Circle,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CriterionArg {
    Simon,
    Duan,
}

/// Parses the argument vector and runs one command, returning the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints its own help/error text
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    init_threads(cli.threads);
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Json(_)
                | Error::InvalidWitness(_)
                | Error::InvalidState(_)
                | Error::ModelMismatch { .. } => 2,
                _ => 1,
            }
        }
    }
}

fn init_threads(cli_threads: Option<usize>) {
    let n = cli_threads.or_else(|| {
        std::env::var("WITNESS_FORGE_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    });
    if let Some(n) = n {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Eval {
            witness,
            state,
            starts,
        } => {
            let w = load_witness(witness)?;
            let s = load_state(state)?;
            let opts = SevOptions {
                n_starts: *starts,
                seed: cli.seed,
                ..SevOptions::default()
            };
            let report = witness::evaluate_with(&w, &s, &opts)?;
            emit(cli, &serde_json::to_string_pretty(&report)?)?;
            Ok(0)
        }
        Command::Sev {
            witness,
            starts,
            collinear,
        } => {
            let w = load_witness(witness)?;
            let solution = match collinear {
                Some(phases) => {
                    let (phi, theta) = parse_pair(phases)?;
                    witness::solve_sev_collinear_m3(&w, phi, theta)?
                }
                None => witness::solve_sev_multistart(&w, *starts, cli.seed)?,
            };
            emit(cli, &serde_json::to_string_pretty(&solution)?)?;
            Ok(0)
        }
        Command::Optimize {
            state,
            partition,
            m,
            config,
            population,
            generations,
            ansatz,
        } => {
            let s = load_state(state)?;
            let part = parse_partition(partition, s.n_modes())?;
            let mut ga: GaConfig = match config {
                Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
                None => GaConfig::default(),
            };
            ga.seed = cli.seed;
            if let Some(p) = population {
                ga.population = *p;
            }
            if let Some(g) = generations {
                ga.generations = *g;
            }
            if let Some(a) = ansatz {
                ga.ansatz = match a {
                    AnsatzArg::Free => Ansatz::Free,
                    AnsatzArg::Circle => Ansatz::ConjugateCircle,
                };
            }
            let result = optimizer::ga_optimize(&s, &part, *m, &ga)?;
            let payload = serde_json::json!({
                "witness": result.witness,
                "report": result.report,
                "history": result.history,
            });
            emit(cli, &serde_json::to_string_pretty(&payload)?)?;
            Ok(0)
        }
        Command::Sweep {
            state,
            witness,
            param,
            from,
            to,
            steps,
        } => {
            let s = load_state(state)?;
            let w = witness.as_ref().map(|p| load_witness(p)).transpose()?;
            if *steps < 1 || to <= from {
                return Err(Error::InvalidState(
                    "sweep needs steps >= 1 and to > from".into(),
                ));
            }
            let grid: Vec<f64> = if *steps == 1 {
                vec![*from]
            } else {
                (0..*steps)
                    .map(|i| from + (to - from) * i as f64 / (*steps as f64 - 1.0))
                    .collect()
            };
            let opts = SevOptions {
                seed: cli.seed,
                ..SevOptions::default()
            };
            let result = optimizer::sweep(&s, w.as_ref(), (*param).into(), &grid, &opts)?;
            match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => emit(cli, &result.to_csv())?,
                Format::Json => emit(cli, &serde_json::to_string_pretty(&result)?)?,
            }
            Ok(0)
        }
        Command::Simulate {
            witness,
            state,
            shots,
            etas,
        } => {
            let w = load_witness(witness)?;
            let s = load_state(state)?;
            let opts = SimOptions {
                cutoff: cli.cutoff.map(FockCutoff::new).transpose()?,
                etas: etas.as_ref().map(|e| parse_f64_list(e)).transpose()?,
                chunks: None,
            };
            let est = measurement::simulate(&w, &s, *shots, cli.seed, &opts)?;
            emit(cli, &serde_json::to_string_pretty(&est)?)?;
            Ok(0)
        }
        Command::Baseline { criterion, state } => {
            let s = load_state(state)?;
            let cutoff = match cli.cutoff {
                Some(n) => FockCutoff::new(n)?,
                None => fock::default_cutoff(&s, 1.0)?,
            };
            let rho = fock::state_to_fock(&s, cutoff)?;
            let cov = fock::covariance_matrix(&rho)?;
            let result = match criterion {
                CriterionArg::Simon => baselines::simon_criterion(&cov)?,
                CriterionArg::Duan => baselines::duan_criterion(&cov)?,
            };
            emit(cli, &serde_json::to_string_pretty(&result)?)?;
            Ok(0)
        }
        Command::Reproduce { case } => {
            let rows = run_case(*case, cli.seed)?;
            let mut failed = 0usize;
            let mut table = String::new();
            table.push_str(&format!(
                "{:<22} {:<38} {:>14} {:>20} {:>6}\n",
                "case", "quantity", "computed", "target", "check"
            ));
            for row in &rows {
                if !row.pass {
                    failed += 1;
                }
                table.push_str(&format!(
                    "{:<22} {:<38} {:>14} {:>20} {:>6}\n",
                    row.case,
                    row.quantity,
                    format_sig(row.computed, 6),
                    row.target,
                    if row.pass { "pass" } else { "FAIL" }
                ));
            }
            table.push_str(&format!("{} checks, {} failed\n", rows.len(), failed));
            if cli.format == Some(Format::Json) {
                emit(cli, &serde_json::to_string_pretty(&rows)?)?;
            } else {
                emit(cli, &table)?;
            }
            Ok(if failed == 0 { 0 } else { 1 })
        }
    }
}

/// Six significant digits for human-facing tables.
pub(crate) fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

fn emit(cli: &Cli, payload: &str) -> Result<()> {
    match &cli.out {
        Some(path) => {
            let mut f = std::fs::File::create(path)?;
            f.write_all(payload.as_bytes())?;
            if !payload.ends_with('\n') {
                f.write_all(b"\n")?;
            }
        }
        None => {
            if payload.ends_with('\n') {
                print!("{payload}");
            } else {
                println!("{payload}");
            }
        }
    }
    Ok(())
}

fn load_witness(path: &Path) -> Result<WitnessSpec> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn load_state(path: &Path) -> Result<StateModel> {
    let text = std::fs::read_to_string(path)?;
    let state: StateModel = serde_json::from_str(&text)?;
    state.validate()?;
    Ok(state)
}

fn parse_pair(s: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::InvalidWitness(format!(
            "expected \"phi,theta\", got {s:?}"
        )));
    }
    let phi = parts[0]
        .trim()
        .parse()
        .map_err(|_| Error::InvalidWitness(format!("bad phase {:?}", parts[0])))?;
    let theta = parts[1]
        .trim()
        .parse()
        .map_err(|_| Error::InvalidWitness(format!("bad phase {:?}", parts[1])))?;
    Ok((phi, theta))
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| Error::InvalidWitness(format!("bad number {p:?}")))
        })
        .collect()
}

fn parse_partition(s: &str, n_modes: usize) -> Result<PartitionSpec> {
    let blocks: Vec<Vec<usize>> =
        s.split('|')
            .map(|block| {
                block
                    .split(',')
                    .map(|idx| {
                        let one_based: usize = idx.trim().parse().map_err(|_| {
                            Error::InvalidWitness(format!("bad mode index {idx:?}"))
                        })?;
                        if one_based == 0 {
                            return Err(Error::InvalidWitness(
                                "partition indices are 1-based".into(),
                            ));
                        }
                        Ok(one_based - 1)
                    })
                    .collect::<Result<Vec<usize>>>()
            })
            .collect::<Result<_>>()?;
    PartitionSpec::new(n_modes, blocks)
}

/// Shared helper for tests and the reproduce module.
pub(crate) fn complex(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

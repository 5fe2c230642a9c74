//! Command-line orchestration for the sglab checks: configuration loading,
//! deterministic runs, JSON records and CSV plot series.
//!
//! Exit codes are `0` when every verdict passes, `1` when a verdict fails or a
//! computation errors, and `2` for configuration errors.

pub mod commands;
pub mod config;
pub mod record;

use clap::{Args, Parser, Subcommand};
use commands::{execute, Pipeline};
use config::{KernelKind, PerturbationKind, RunConfig};
use record::{config_hash, unix_ms, write_outputs, ErrorField, ResultRecord, ARTIFACT_VERSION};
use serde_json::json;
use sglab::SgError;
use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "sglab", version, about = "Numerical checks for the massless scalar field, sine-Gordon and Thirring models")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML or JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides the config file and SGLAB_OUTPUT_DIR.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo samples per estimate.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Two-point kernels.
    #[command(subcommand)]
    Propagator(PropagatorCmd),
    /// Reference-state checks.
    #[command(subcommand)]
    State(StateCmd),
    /// Perturbative S-matrix.
    #[command(subcommand)]
    Smatrix(SmatrixCmd),
    /// Causal factorization at order k.
    Bogoliubov {
        #[arg(long)]
        k: Option<usize>,
        /// Swap f and h and skip the causal precondition.
        #[arg(long)]
        control: bool,
    },
    /// Massive/massless comparison on an interval.
    #[command(subcommand)]
    Quasiequiv(QuasiequivCmd),
    /// Dual fields and the Thirring model.
    #[command(subcommand)]
    Thirring(ThirringCmd),
    /// Summarize every record in the output directory.
    Report,
}

#[derive(Debug, Subcommand)]
pub enum PropagatorCmd {
    /// Evaluate one kernel at (dt, dx) relative to the origin.
    Eval {
        #[arg(long, value_enum)]
        kernel: Option<KernelKind>,
        #[arg(long, allow_negative_numbers = true)]
        dt: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        dx: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
    },
    /// Imaginary parts of W and Δ_F on random pairs.
    Identities {
        #[arg(long)]
        pairs: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
pub enum StateCmd {
    /// Positivity of the dominance matrix on random density pairs.
    Dominance {
        #[arg(long)]
        pairs: Option<usize>,
    },
    /// Charge probes and their Fock norms.
    Charge,
}

#[derive(Debug, Subcommand)]
pub enum SmatrixCmd {
    /// Power series of the vertex pair kernel against its closed form.
    Series {
        #[arg(long)]
        pairs: Option<usize>,
    },
    /// Order-k unitarity defect.
    Unitarity {
        #[arg(long)]
        k: Option<usize>,
    },
    /// Factorial growth of the order-n norm bounds.
    Growth {
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Relative S-matrix coefficients.
    Relative {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_enum)]
        perturbation: Option<PerturbationKind>,
    },
}

#[derive(Debug, Subcommand)]
pub enum QuasiequivCmd {
    /// Generalized spectra of A and B for each basis size.
    Spectra,
    /// Hilbert-Schmidt integrals under cutoff doubling.
    Hs,
    /// Minimum of ⟨h, |k| h⟩/‖h‖² against interval length.
    Airy {
        #[arg(long)]
        trials: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
pub enum ThirringCmd {
    /// Exchange signs, free point, γ algebra and scalar consistency.
    Identities {
        #[arg(long)]
        pairs: Option<usize>,
    },
    /// Short-distance coefficients by Richardson extrapolation.
    Ope {
        #[arg(long)]
        alpha: Vec<f64>,
    },
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

/// Applies flag overrides and returns the selected pipeline.
pub fn apply_overrides(command: Command, g: &GlobalArgs, c: &mut RunConfig) -> Pipeline {
    set(&mut c.quadrature.seed, g.seed);
    set(&mut c.quadrature.samples, g.samples);
    match command {
        Command::Propagator(PropagatorCmd::Eval { kernel, dt, dx, mu }) => {
            set(&mut c.propagator.kernel, kernel);
            set(&mut c.propagator.dt, dt);
            set(&mut c.propagator.dx, dx);
            set(&mut c.propagator.mu, mu);
            Pipeline::PropagatorEval
        }
        Command::Propagator(PropagatorCmd::Identities { pairs }) => {
            set(&mut c.propagator.pairs, pairs);
            Pipeline::PropagatorIdentities
        }
        Command::State(StateCmd::Dominance { pairs }) => {
            set(&mut c.state.pairs, pairs);
            Pipeline::StateDominance
        }
        Command::State(StateCmd::Charge) => Pipeline::StateCharge,
        Command::Smatrix(SmatrixCmd::Series { pairs }) => {
            set(&mut c.smatrix.series_pairs, pairs);
            Pipeline::SmatrixSeries
        }
        Command::Smatrix(SmatrixCmd::Unitarity { k }) => {
            set(&mut c.smatrix.k, k);
            Pipeline::SmatrixUnitarity
        }
        Command::Smatrix(SmatrixCmd::Growth { n_max }) => {
            set(&mut c.smatrix.n_max, n_max);
            Pipeline::SmatrixGrowth
        }
        Command::Smatrix(SmatrixCmd::Relative { k, perturbation }) => {
            set(&mut c.smatrix.k, k);
            set(&mut c.smatrix.perturbation, perturbation);
            Pipeline::SmatrixRelative
        }
        Command::Bogoliubov { k, control } => {
            set(&mut c.bogoliubov.k, k);
            c.bogoliubov.control |= control;
            Pipeline::Bogoliubov
        }
        Command::Quasiequiv(QuasiequivCmd::Spectra) => Pipeline::QuasiequivSpectra,
        Command::Quasiequiv(QuasiequivCmd::Hs) => Pipeline::QuasiequivHs,
        Command::Quasiequiv(QuasiequivCmd::Airy { trials }) => {
            set(&mut c.quasiequiv.airy_trials, trials);
            Pipeline::QuasiequivAiry
        }
        Command::Thirring(ThirringCmd::Identities { pairs }) => {
            set(&mut c.thirring.pairs, pairs);
            Pipeline::ThirringIdentities
        }
        Command::Thirring(ThirringCmd::Ope { alpha }) => {
            if !alpha.is_empty() {
                c.thirring.alphas = alpha;
            }
            Pipeline::ThirringOpe
        }
        Command::Report => Pipeline::Report,
    }
}

/// Errors that stem from the configuration rather than the computation.
pub fn is_config_error(e: &SgError) -> bool {
    matches!(
        e,
        SgError::ConfigInvalid(_)
            | SgError::RegimeViolation { .. }
            | SgError::PsiNotNormalized { .. }
            | SgError::NotNeutral { .. }
            | SgError::CausalPreconditionViolated(_)
    )
}

/// Runs one pipeline and assembles its record without writing anything.
pub fn run(pipeline: Pipeline, config: &RunConfig, output_dir: &std::path::Path) -> (ResultRecord, Vec<record::Series>, i32) {
    let started = unix_ms();
    let clock = Instant::now();
    let result = execute(pipeline, config, output_dir);
    let mut record = ResultRecord {
        command: pipeline.name().to_string(),
        artifact_version: ARTIFACT_VERSION.to_string(),
        config_hash: config_hash(config),
        started_unix_ms: started,
        finished_unix_ms: 0,
        wall_time_s: 0.0,
        values: json!(null),
        verdicts: Vec::new(),
        passed: false,
        error: None,
        series: Vec::new(),
    };
    let (series, code) = match result {
        Ok(out) => {
            record.passed = !out.verdicts.is_empty() && out.verdicts.iter().all(|v| v.passed);
            record.values = out.values;
            record.verdicts = out.verdicts;
            (out.series, if record.passed { EXIT_PASS } else { EXIT_FAIL })
        }
        Err(e) => {
            record.error = Some(ErrorField::from(&e));
            (Vec::new(), if is_config_error(&e) { EXIT_CONFIG } else { EXIT_FAIL })
        }
    };
    record.finished_unix_ms = unix_ms();
    record.wall_time_s = clock.elapsed().as_secs_f64();
    (record, series, code)
}

fn config_error(message: String) -> i32 {
    let e = ErrorField { kind: "ConfigInvalid".into(), message };
    println!("{}", json!({ "error": e }));
    EXIT_CONFIG
}

/// Parses arguments, runs the command, writes its outputs and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_PASS;
            }
            return config_error(e.render().to_string());
        }
    };
    let mut config = match &cli.global.config {
        Some(path) => match RunConfig::load(path) {
            Ok(c) => c,
            Err(e) => return config_error(e.to_string()),
        },
        None => RunConfig::default(),
    };
    let pipeline = apply_overrides(cli.command, &cli.global, &mut config);
    let dir = cli.global.output_dir.clone().unwrap_or_else(|| config.resolved_output_dir());
    let (mut record, series, code) = run(pipeline, &config, &dir);
    if let Err(e) = write_outputs(&dir, &mut record, &series) {
        return config_error(format!("cannot write to {}: {e}", dir.display()));
    }
    println!("{}", serde_json::to_string_pretty(&record).expect("record serializes"));
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> (Pipeline, RunConfig) {
        let cli = Cli::try_parse_from(args).unwrap();
        let mut c = RunConfig::default();
        let p = apply_overrides(cli.command, &cli.global, &mut c);
        (p, c)
    }

    #[test]
    fn flags_override_the_config() {
        let (p, c) = parse(&["sglab", "smatrix", "unitarity", "--k", "1", "--seed", "7", "--samples", "500"]);
        assert_eq!(p, Pipeline::SmatrixUnitarity);
        assert_eq!((c.smatrix.k, c.quadrature.seed, c.quadrature.samples), (1, 7, 500));
        let (p, c) = parse(&["sglab", "propagator", "eval", "--kernel", "wightman", "--dt", "-2", "--dx", "1"]);
        assert_eq!(p, Pipeline::PropagatorEval);
        assert_eq!((c.propagator.kernel, c.propagator.dt), (KernelKind::Wightman, -2.0));
        let (_, c) = parse(&["sglab", "thirring", "ope", "--alpha", "1", "--alpha", "2"]);
        assert_eq!(c.thirring.alphas, vec![1.0, 2.0]);
    }

    #[test]
    fn unknown_command_is_a_config_error() {
        assert_eq!(main_with_args(["sglab", "frobnicate"]), EXIT_CONFIG);
    }

    #[test]
    fn records_carry_hash_and_version() {
        let c = RunConfig::default();
        let (r, _, code) = run(Pipeline::PropagatorEval, &c, std::path::Path::new("."));
        assert_eq!(code, EXIT_PASS);
        assert_eq!(r.config_hash, config_hash(&c));
        assert_eq!(r.artifact_version, ARTIFACT_VERSION);
        // Feynman at (dt, dx) = (2, 1): timelike, imaginary part -1/4.
        assert!((r.values["value"]["im"].as_f64().unwrap() + 0.25).abs() < 1e-15);
    }

    #[test]
    fn module_errors_map_to_exit_codes() {
        let mut c = RunConfig::default();
        c.model.a = 4.0;
        let (r, _, code) = run(Pipeline::SmatrixUnitarity, &c, std::path::Path::new("."));
        assert_eq!(code, EXIT_CONFIG);
        assert_eq!(r.error.unwrap().kind, "RegimeViolation");
        let mut c = RunConfig::default();
        c.propagator.kernel = KernelKind::DualHadamard;
        c.propagator.dt = 1.0;
        c.propagator.dx = 1.0;
        let (r, _, code) = run(Pipeline::PropagatorEval, &c, std::path::Path::new("."));
        assert_eq!(code, EXIT_FAIL);
        assert_eq!(r.error.unwrap().kind, "SingularPoint");
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mvk_core::error::{Error, Result};
use mvk_core::knapsack::{
    evaluate_subset, solve_exhaustive, solve_stochastic, Ensemble, SolveRequest, StopRule,
    DEFAULT_WEIGHT_EXPONENT,
};
use mvk_core::pnk::{
    format_rational, pnk_closed_form, pnk_monte_carlo, profile_from_pnk, GenerativeModel, PnkRequest,
};
use mvk_core::report::{
    emit_report, parse_experiment_spec, parse_pool, parse_scheme, read_file, EvaluationReport,
    Format, PnkReport, PnkReportRow, SimulationReport, TheoryReport,
};
use mvk_core::sim::{ensemble_vote_simulate, run_experiment};
use mvk_core::theory::{asymptotic_accuracy, expected_accuracy, variance_bound, CdfSpec};
use mvk_core::derive_seed;

const EXIT_USAGE: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_SIZE_LIMIT: u8 = 4;

/// Multiclass voting ensembles: accuracy evaluation, ensemble selection
/// under a time budget, and simulation experiments.
#[derive(Debug, Parser)]
#[command(name = "mvk", version)]
struct Cli {
    /// Number of worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Json => Format::Json,
            OutputFormat::Csv => Format::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SolveMethod {
    Exhaustive,
    Stochastic,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PnkMethod {
    Formula,
    Mc,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Accuracy of a fixed subset of the pool.
    Evaluate {
        #[arg(long)]
        pool: PathBuf,
        /// Comma-separated classifier ids.
        #[arg(long)]
        subset: String,
        #[arg(long)]
        scheme: String,
    },
    /// Pick the most accurate ensemble whose total time fits the budget.
    Solve {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        budget: f64,
        #[arg(long)]
        scheme: String,
        #[arg(long, value_enum)]
        method: SolveMethod,
        #[arg(long, default_value_t = 100)]
        restarts: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// `fixed` or `improve:<eps>`.
        #[arg(long, default_value = "fixed")]
        stop: String,
        #[arg(long, default_value_t = DEFAULT_WEIGHT_EXPONENT)]
        weight_exponent: f64,
    },
    /// Probability that the true class wins with k of n votes among d classes.
    Pnk {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        /// Restrict the table to one value of k.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_enum, default_value_t = PnkMethod::Formula)]
        method: PnkMethod,
        /// `wrong` or `all`.
        #[arg(long, default_value = "wrong")]
        model: String,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Expected and limiting ensemble accuracy for a profile CDF.
    Theory {
        #[arg(long)]
        cdf: String,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        n: usize,
    },
    /// Monte-Carlo plurality vote of the whole pool.
    Simulate {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value = "wrong")]
        model: String,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run an experiment described by a JSON spec.
    Experiment {
        #[arg(long)]
        spec: PathBuf,
    },
}

fn require_seed(seed: Option<u64>, command: &str) -> Result<u64> {
    seed.ok_or_else(|| Error::Usage(format!("{command} needs an explicit --seed")))
}

fn parse_cdf(text: &str) -> Result<CdfSpec> {
    text.strip_prefix("cdf:").unwrap_or(text).parse()
}

fn run(cli: Cli) -> Result<u8> {
    let format = Format::from(cli.format);
    let out = cli.out.as_deref();
    match cli.command {
        Command::Evaluate { pool, subset, scheme } => {
            let pool = parse_pool(&read_file(&pool)?)?;
            let scheme = parse_scheme(&scheme)?;
            let subset = Ensemble::new(subset.split(',').map(str::trim).filter(|s| !s.is_empty()))?;
            let accuracy = evaluate_subset(&pool, &subset, &scheme)?;
            let total_time = subset
                .indices(&pool)?
                .iter()
                .map(|&i| pool.members()[i].time)
                .sum();
            let report = EvaluationReport {
                size: subset.len(),
                subset,
                scheme,
                total_time,
                accuracy,
            };
            emit_report(&report, format, out)?;
        }
        Command::Solve {
            pool,
            budget,
            scheme,
            method,
            restarts,
            seed,
            stop,
            weight_exponent,
        } => {
            let pool = parse_pool(&read_file(&pool)?)?;
            let mut req = SolveRequest::new(pool, budget, parse_scheme(&scheme)?);
            req.restarts = restarts;
            req.weight_exponent = weight_exponent;
            req.stop_rule = stop.parse::<StopRule>()?;
            let report = match method {
                SolveMethod::Exhaustive => solve_exhaustive(&req)?,
                SolveMethod::Stochastic => {
                    req.seed = require_seed(seed, "stochastic solve")?;
                    solve_stochastic(&req)?
                }
            };
            emit_report(&report, format, out)?;
            if report.infeasible {
                eprintln!("no nonempty ensemble fits within budget {budget}");
                return Ok(EXIT_INFEASIBLE);
            }
        }
        Command::Pnk { n, d, k, method, model, trials, seed } => {
            let ks: Vec<usize> = match k {
                Some(k) => vec![k],
                None => (0..=n).collect(),
            };
            let report = match method {
                PnkMethod::Formula => {
                    let mut warnings = Vec::new();
                    let rows = if k.is_none() {
                        let table = profile_from_pnk(n, d)?;
                        warnings = table.warnings;
                        table
                            .exact
                            .iter()
                            .zip(table.profile.coefficients())
                            .enumerate()
                            .map(|(k, (exact, &value))| formula_row(n, d, k, format_rational(exact), value))
                            .collect()
                    } else {
                        ks.iter()
                            .map(|&k| {
                                let v = pnk_closed_form(PnkRequest::new(n, k, d)?)?;
                                Ok(formula_row(n, d, k, format_rational(&v.exact), v.value))
                            })
                            .collect::<Result<Vec<_>>>()?
                    };
                    for w in &warnings {
                        eprintln!("warning: {w}");
                    }
                    PnkReport { seed: None, rows, warnings }
                }
                PnkMethod::Mc => {
                    let seed = require_seed(seed, "pnk --method mc")?;
                    let model: GenerativeModel = model.parse()?;
                    let rows = ks
                        .iter()
                        .map(|&k| {
                            let est = pnk_monte_carlo(
                                PnkRequest::new(n, k, d)?,
                                model,
                                trials,
                                derive_seed(seed, k as u64),
                            )?;
                            Ok(PnkReportRow {
                                n,
                                d,
                                k,
                                method: "mc",
                                model: Some(model.label()),
                                exact: None,
                                value: est.estimate,
                                std_error: Some(est.std_error),
                                trials: Some(est.trials),
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    PnkReport { seed: Some(seed), rows, warnings: Vec::new() }
                }
            };
            emit_report(&report, format, out)?;
        }
        Command::Theory { cdf, mu, n } => {
            let spec = parse_cdf(&cdf)?;
            let report = TheoryReport {
                expected_accuracy: expected_accuracy(&spec, mu, n)?,
                asymptotic_accuracy: asymptotic_accuracy(&spec, mu)?,
                variance_bound: variance_bound(&spec, mu)?,
                cdf: spec.to_string(),
                mu,
                n,
            };
            emit_report(&report, format, out)?;
        }
        Command::Simulate { pool, d, model, trials, seed } => {
            let seed = require_seed(seed, "simulate")?;
            let pool = parse_pool(&read_file(&pool)?)?;
            let model: GenerativeModel = model.parse()?;
            let est = ensemble_vote_simulate(&pool, d, model, trials, seed)?;
            let report = SimulationReport {
                pool_size: pool.len(),
                d,
                model: model.label(),
                trials: est.trials,
                seed,
                estimate: est.estimate,
                std_error: est.std_error,
            };
            emit_report(&report, format, out)?;
        }
        Command::Experiment { spec } => {
            let spec = parse_experiment_spec(&read_file(&spec)?)?;
            let result = run_experiment(&spec)?;
            emit_report(&result, format, out)?;
        }
    }
    Ok(0)
}

fn formula_row(n: usize, d: usize, k: usize, exact: String, value: f64) -> PnkReportRow {
    PnkReportRow {
        n,
        d,
        k,
        method: "formula",
        model: None,
        exact: Some(exact),
        value,
        std_error: None,
        trials: None,
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::SizeLimit { .. } => EXIT_SIZE_LIMIT,
        _ => EXIT_USAGE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.workers {
        Some(0) => Err(Error::Usage("--workers must be at least 1".into())),
        Some(workers) => rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Usage(format!("cannot start {workers} workers: {e}")))
            .and_then(|pool| pool.install(|| run(cli))),
        None => run(cli),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("mvk: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

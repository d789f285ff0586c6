//! Command-line front end: config files, calibration and scenario reports.
//!
//! Exit codes: 0 success, 2 config or I/O error, 3 model error (invalid
//! parameters, nonexistent moments, size guards), 4 numeric non-convergence.

pub mod config;
pub mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dist::{
    centred_regression, conditional_ddf_eq, conditional_ddf_gt, correlation, joint_ddf,
    marginal_ddf, marginal_mean, marginal_var, JointDensity,
};
use crate::error::{Error, Result};
use crate::extremes::{minima_ddf, MaximaLaw};
use crate::risk::{risk_report, RiskTarget};
use crate::sim::{sample, Representation};

pub use config::{parse_config, parse_config_str, ConfigError, Output, ScenarioConfig};
pub use report::{fmt_num, run_scenario};

/// Scale `sigma` such that a Pareto-II margin with tail index `gamma_star`
/// falls below `horizon` with probability `p_default`.
pub fn calibrate_sigma(p_default: f64, horizon: f64, gamma_star: f64) -> Result<f64> {
    if !(p_default > 0.0 && p_default < 1.0) {
        return Err(Error::invalid(format!(
            "default probability {p_default} must lie in (0, 1)"
        )));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::invalid(format!(
            "horizon {horizon} must be positive"
        )));
    }
    if !(gamma_star > 0.0 && gamma_star.is_finite()) {
        return Err(Error::invalid(format!(
            "tail index {gamma_star} must be positive"
        )));
    }
    // (1 - p)^(-1/g) - 1, accurate for tiny p
    let growth = (-(-p_default).ln_1p() / gamma_star).exp_m1();
    Ok(horizon / growth)
}

/// Failure of a CLI invocation.
#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Io(String),
    Model { stage: String, error: Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Model { error, .. } => match error {
                Error::NonConvergence(_) => 4,
                _ => 3,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "config error: {e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::Model { stage, error } => write!(f, "{stage}: {error}"),
        }
    }
}

fn model(stage: &str) -> impl Fn(Error) -> CliError + '_ {
    move |error| CliError::Model {
        stage: stage.to_string(),
        error,
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "mvpareto",
    version,
    about = "Multivariate Pareto-II portfolios: closed forms, risk measures, simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Overrides shared by the config-driven commands.
#[derive(Args, Debug, Clone, Default)]
pub struct Overrides {
    /// Random seed for Monte Carlo work.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of Monte Carlo replicates.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Quantile grid: a list like `0,0.5,0.9` or `linspace(0,0.99,100)`.
    #[arg(long, global = true)]
    pub grid: Option<String>,
    /// Directory for CSV output.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the portfolio, its tail indices, moments and correlations.
    Describe {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Evaluate a survival function, density or conditional quantity.
    Eval {
        config: PathBuf,
        #[arg(long, value_enum)]
        quantity: Quantity,
        /// Point, comma separated. Joint quantities take n values; the
        /// others take one (`x_k` and `x_l` for the conditionals).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        at: Vec<f64>,
        /// Coordinate (`margin`) or pair `k,l` (conditionals, regression).
        #[arg(long, value_delimiter = ',')]
        index: Vec<usize>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// VaR and CTE over the quantile grid.
    Risk {
        config: PathBuf,
        /// `margin:<i>`, `minima`, `maxima` or `economic:<k>,<l>`.
        #[arg(long, default_value = "minima")]
        target: String,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Draw samples and write them as CSV.
    Simulate {
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = Repr::CommonShock)]
        representation: Repr,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Scale that matches a default probability at a horizon.
    Calibrate {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        horizon: f64,
        #[arg(long)]
        gamma_star: f64,
    },
    /// Write every configured report for a scenario.
    Scenario {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Ddf,
    Pdf,
    Margin,
    Minima,
    Maxima,
    CondEq,
    CondGt,
    Regression,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Repr {
    BackgroundRisk,
    CommonShock,
}

fn load(path: &std::path::Path, o: &Overrides) -> std::result::Result<ScenarioConfig, CliError> {
    let mut cfg = parse_config(path).map_err(|e| {
        if e.line == 0 {
            CliError::Io(e.message)
        } else {
            CliError::Config(ConfigError {
                message: format!("{}: {}", path.display(), e.message),
                ..e
            })
        }
    })?;
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(m) = o.samples {
        cfg.samples = m;
        if m > 0 && !cfg.outputs.contains(&Output::MonteCarlo) {
            cfg.outputs.push(Output::MonteCarlo);
        }
    }
    if let Some(g) = &o.grid {
        cfg.grid = config::parse_grid(g).map_err(|m| {
            CliError::Config(ConfigError {
                line: 0,
                column: 0,
                message: format!("--grid: {m}"),
            })
        })?;
    }
    Ok(cfg)
}

fn parse_target(s: &str) -> std::result::Result<RiskTarget, CliError> {
    let bad = || {
        CliError::Config(ConfigError {
            line: 0,
            column: 0,
            message: format!(
                "--target '{s}' (expected margin:<i>, minima, maxima or economic:<k>,<l>)"
            ),
        })
    };
    let (head, tail) = s.split_once(':').unwrap_or((s, ""));
    let nums = || -> std::result::Result<Vec<usize>, CliError> {
        tail.split(',')
            .map(|v| v.trim().parse::<usize>().map_err(|_| bad()))
            .collect()
    };
    match head {
        "minima" => Ok(RiskTarget::Minima(Vec::new())),
        "maxima" => Ok(RiskTarget::Maxima),
        "margin" => match nums()?.as_slice() {
            [i] => Ok(RiskTarget::Margin(*i)),
            _ => Err(bad()),
        },
        "economic" => match nums()?.as_slice() {
            [k, l] => Ok(RiskTarget::Economic { k: *k, l: *l }),
            _ => Err(bad()),
        },
        _ => Err(bad()),
    }
}

/// Runs a parsed command, writing human output to `out`.
pub fn execute(cli: Cli, out: &mut dyn std::io::Write) -> std::result::Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    match cli.command {
        Command::Describe { config, overrides } => {
            let cfg = load(&config, &overrides)?;
            let p = &cfg.portfolio;
            writeln!(out, "name: {}", cfg.name).map_err(io)?;
            writeln!(
                out,
                "exposure matrix ({} risks, {} factors):",
                p.n(),
                p.n() + 1
            )
            .map_err(io)?;
            write!(out, "{}", p.exposure()).map_err(io)?;
            let list = |v: &[f64]| v.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(" ");
            writeln!(out, "sigma: {}", list(p.sigma())).map_err(io)?;
            writeln!(out, "gamma: {}", list(p.gamma())).map_err(io)?;
            writeln!(out, "risk,tail_index,mean,variance").map_err(io)?;
            for i in 1..=p.n() {
                let show = |r: Result<f64>| r.map(fmt_num).unwrap_or_else(|_| "inf".into());
                writeln!(
                    out,
                    "{i},{},{},{}",
                    fmt_num(p.marginal_index(i).map_err(model("describe"))?),
                    show(marginal_mean(p, i)),
                    show(marginal_var(p, i))
                )
                .map_err(io)?;
            }
            for k in 1..=p.n() {
                for l in k + 1..=p.n() {
                    match correlation(p, k, l) {
                        Ok(r) => writeln!(out, "corr({k},{l}) = {}", fmt_num(r)).map_err(io)?,
                        Err(e) => writeln!(out, "corr({k},{l}) undefined: {e}").map_err(io)?,
                    }
                }
            }
        }
        Command::Eval {
            config,
            quantity,
            at,
            index,
            overrides,
        } => {
            let cfg = load(&config, &overrides)?;
            let value =
                eval_quantity(&cfg.portfolio, quantity, &at, &index).map_err(model("eval"))?;
            writeln!(out, "{}", fmt_num(value)).map_err(io)?;
        }
        Command::Risk {
            config,
            target,
            overrides,
        } => {
            let cfg = load(&config, &overrides)?;
            let mut target = parse_target(&target)?;
            if let RiskTarget::Minima(s) = &mut target {
                *s = (1..=cfg.portfolio.n()).collect();
            }
            let rep = risk_report(&cfg.portfolio, &target, &cfg.grid).map_err(model("risk"))?;
            let csv = report::report_csv(&rep);
            match overrides.out_dir {
                Some(dir) => {
                    std::fs::create_dir_all(&dir).map_err(io)?;
                    let path = dir.join(format!("{}_{}.csv", cfg.name, target.label()));
                    std::fs::write(&path, csv).map_err(io)?;
                    writeln!(out, "{}", path.display()).map_err(io)?;
                }
                None => write!(out, "{csv}").map_err(io)?,
            }
        }
        Command::Simulate {
            config,
            representation,
            overrides,
        } => {
            let cfg = load(&config, &overrides)?;
            let m = if cfg.samples == 0 {
                10_000
            } else {
                cfg.samples
            };
            let rep = match representation {
                Repr::BackgroundRisk => Representation::BackgroundRisk,
                Repr::CommonShock => Representation::CommonShock,
            };
            let batch = sample(&cfg.portfolio, rep, m, cfg.seed).map_err(model("simulate"))?;
            let mut csv = (1..=batch.n())
                .map(|i| format!("x{i}"))
                .collect::<Vec<_>>()
                .join(",");
            csv.push('\n');
            for r in batch.rows() {
                csv.push_str(&r.iter().map(|v| fmt_num(*v)).collect::<Vec<_>>().join(","));
                csv.push('\n');
            }
            match overrides.out_dir {
                Some(dir) => {
                    std::fs::create_dir_all(&dir).map_err(io)?;
                    let path = dir.join(format!("{}_{}_samples.csv", cfg.name, rep.name()));
                    std::fs::write(&path, csv).map_err(io)?;
                    writeln!(out, "{}", path.display()).map_err(io)?;
                }
                None => write!(out, "{csv}").map_err(io)?,
            }
        }
        Command::Calibrate {
            p,
            horizon,
            gamma_star,
        } => {
            let sigma = calibrate_sigma(p, horizon, gamma_star).map_err(model("calibrate"))?;
            writeln!(out, "{}", fmt_num(sigma)).map_err(io)?;
        }
        Command::Scenario { config, overrides } => {
            let cfg = load(&config, &overrides)?;
            let dir = overrides.out_dir.unwrap_or_else(|| PathBuf::from("."));
            let written = run_scenario(&cfg, &dir).map_err(|e| CliError::Model {
                stage: e.stage,
                error: e.error,
            })?;
            for path in written {
                writeln!(out, "{}", path.display()).map_err(io)?;
            }
        }
    }
    Ok(())
}

fn expect_len(values: &[f64], len: usize, what: &str) -> Result<()> {
    if values.len() == len {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "{what} needs {len} value(s) in --at, got {}",
            values.len()
        )))
    }
}

fn pair(index: &[usize]) -> Result<(usize, usize)> {
    match index {
        [k, l] => Ok((*k, *l)),
        _ => Err(Error::Dimension(format!(
            "--index needs a pair k,l, got {index:?}"
        ))),
    }
}

fn eval_quantity(
    p: &crate::ExposurePortfolio,
    quantity: Quantity,
    at: &[f64],
    index: &[usize],
) -> Result<f64> {
    match quantity {
        Quantity::Ddf => joint_ddf(p, at),
        Quantity::Pdf => JointDensity::new(p)?.pdf(at),
        Quantity::Margin => {
            expect_len(at, 1, "margin")?;
            let [i] = index else {
                return Err(Error::Dimension("--index needs one coordinate".into()));
            };
            marginal_ddf(p, *i, at[0])
        }
        Quantity::Minima => {
            expect_len(at, 1, "minima")?;
            let subset: Vec<usize> = if index.is_empty() {
                (1..=p.n()).collect()
            } else {
                index.to_vec()
            };
            minima_ddf(p, &subset, at[0])
        }
        Quantity::Maxima => {
            expect_len(at, 1, "maxima")?;
            Ok(MaximaLaw::new(p)?.ddf(at[0]))
        }
        Quantity::CondEq => {
            expect_len(at, 2, "conditional")?;
            let (k, l) = pair(index)?;
            conditional_ddf_eq(p, k, l, at[0], at[1])
        }
        Quantity::CondGt => {
            expect_len(at, 2, "conditional")?;
            let (k, l) = pair(index)?;
            conditional_ddf_gt(p, k, l, at[0], at[1])
        }
        Quantity::Regression => {
            expect_len(at, 1, "regression")?;
            let (k, l) = pair(index)?;
            centred_regression(p, k, l, at[0])
        }
    }
}

/// Entry point shared by the binary: parses `args`, runs, prints errors to
/// stderr and maps them to exit codes.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(cli, &mut lock) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wasslab::harness::{
    constants_report, gmu_table, lowerbound_runs, parse_grid, run_rate_experiment,
    run_verification_suite, with_threads, write_json, write_table, ConfigPatch, ExperimentConfig,
    ExperimentKind, LowerBoundRow, OutputFormat, Suite, SuiteReport,
};
use wasslab::Error;

/// Convergence-rate experiments for empirical measures under smoothed Wasserstein distances.
#[derive(Parser, Debug)]
#[command(name = "wasslab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print every closed-form constant for one parameter set.
    Constants(Flags),
    /// Monte Carlo estimate of the smoothed rate on an N grid, with bounds and slope fit.
    Rate(Flags),
    /// Sharp-rate lower-bound experiment on the binary-comb measure.
    Lowerbound(Flags),
    /// Tabulate H_mu and the canonical calibration function G_mu.
    Gmu(Flags),
    /// Run a verification suite (or `all`); exits with 1 if any inequality fails.
    Verify {
        /// carlson, mz, bound_lemma, transport_metric, neighborhood, truncation, gmu_properties, sharp_chain, all
        suite: String,
        #[command(flatten)]
        flags: Flags,
    },
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// TOML file with the same keys as the flags; flags override it.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    /// Comma-separated sample sizes, e.g. 32,64,128.
    #[arg(long, value_name = "LIST")]
    n_grid: Option<String>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    m_plugin: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// exponential, laplace[:b=..], gaussian, uniform[:h=..], sharp_rate, zygmund:p=..,alpha=..
    #[arg(long)]
    measure: Option<String>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Constant in front of the unsmoothed-rate shape.
    #[arg(long)]
    c_fg: Option<f64>,
    /// Weight the log-log fit by inverse relative variance.
    #[arg(long)]
    weighted_fit: bool,
    /// Upper end of the G_mu table.
    #[arg(long)]
    t_max: Option<f64>,
}

impl Flags {
    fn patch(&self) -> wasslab::Result<ConfigPatch> {
        Ok(ConfigPatch {
            p: self.p,
            q: self.q,
            d: self.d,
            sigma: self.sigma,
            beta: self.beta,
            eps: self.eps,
            n_grid: self.n_grid.as_deref().map(parse_grid).transpose()?,
            reps: self.reps,
            m_plugin: self.m_plugin,
            seed: self.seed,
            measure: self.measure.clone(),
            out: self.out.clone(),
            format: self
                .format
                .as_deref()
                .map(str::parse::<OutputFormat>)
                .transpose()?,
            threads: self.threads,
            c_fg: self.c_fg,
            weighted_fit: self.weighted_fit.then_some(true),
            t_max: self.t_max,
            ..Default::default()
        })
    }

    fn resolve(
        &self,
        kind: ExperimentKind,
        suite: Option<Suite>,
    ) -> wasslab::Result<ExperimentConfig> {
        let file = match &self.config {
            Some(path) => ConfigPatch::from_file(path)?,
            None => ConfigPatch::default(),
        };
        let mut flags = self.patch()?;
        flags.suite = suite;
        if kind == ExperimentKind::Verify && suite.is_none() {
            // `all`: validate as if a suite were named
            flags.suite = Some(Suite::Carlson);
        }
        ExperimentConfig::resolve(kind, &[&file, &flags])
    }
}

fn sink(cfg: &ExperimentConfig) -> wasslab::Result<Box<dyn Write>> {
    Ok(match &cfg.out {
        Some(path) => {
            let f = File::create(path)
                .map_err(|e| Error::Config(format!("cannot create {}: {e}", path.display())))?;
            Box::new(BufWriter::new(f))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> wasslab::Result<bool> {
    match cli.command {
        Command::Constants(flags) => {
            let cfg = flags.resolve(ExperimentKind::Constants, None)?;
            let row = constants_report(&cfg)?;
            write_table(cfg.format, std::slice::from_ref(&row), &row, sink(&cfg)?)?;
        }
        Command::Rate(flags) => {
            let cfg = flags.resolve(ExperimentKind::Rate, None)?;
            let exp = with_threads(cfg.threads, || run_rate_experiment(&cfg))??;
            write_table(cfg.format, &exp.rows, &exp, sink(&cfg)?)?;
            eprintln!(
                "slope {:.4} +- {:.4} (R^2 = {:.4})",
                exp.fit.slope, exp.fit.slope_stderr, exp.fit.r_squared
            );
        }
        Command::Lowerbound(flags) => {
            let cfg = flags.resolve(ExperimentKind::Lowerbound, None)?;
            let out = with_threads(cfg.threads, || lowerbound_runs(&cfg))??;
            let rows: Vec<LowerBoundRow> = out.reports.iter().map(LowerBoundRow::from).collect();
            write_table(cfg.format, &rows, &out, sink(&cfg)?)?;
        }
        Command::Gmu(flags) => {
            let cfg = flags.resolve(ExperimentKind::Gmu, None)?;
            let rows = gmu_table(&cfg)?;
            write_table(cfg.format, &rows, &rows, sink(&cfg)?)?;
        }
        Command::Verify { suite, flags } => {
            let suites: Vec<Suite> = if suite == "all" {
                Suite::ALL.to_vec()
            } else {
                vec![suite.parse()?]
            };
            let cfg = flags.resolve(
                ExperimentKind::Verify,
                (suites.len() == 1).then(|| suites[0]),
            )?;
            let reports = match with_threads(cfg.threads, || {
                suites
                    .iter()
                    .map(|&s| run_verification_suite(s, cfg.seed))
                    .collect::<wasslab::Result<Vec<SuiteReport>>>()
            })? {
                Ok(r) => r,
                // a suite that cannot finish counts as failed verification
                Err(e) => {
                    eprintln!("verification aborted: {e}");
                    return Ok(false);
                }
            };
            let mut w = sink(&cfg)?;
            match cfg.format {
                OutputFormat::Json => write_json(&reports, &mut w)?,
                OutputFormat::Csv => {
                    let cases: Vec<_> = reports
                        .iter()
                        .flat_map(|r| r.cases.iter().cloned())
                        .collect();
                    write_table(cfg.format, &cases, &cases, &mut w)?;
                }
            }
            w.flush()?;
            for r in &reports {
                eprintln!("{}: {} passed, {} failed", r.suite, r.passed, r.failed);
            }
            return Ok(reports.iter().all(|r| r.ok));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ Error::Config(_)) => {
            eprintln!("configuration error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

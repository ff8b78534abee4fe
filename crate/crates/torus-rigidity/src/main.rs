//! Command-line front end. All logic lives in the library; this binary
//! parses flags, dispatches, and writes CSV/JSON.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage/config error,
//! 3 i/o error.

use clap::{Parser, Subcommand, ValueEnum};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use torus_rigidity::bounds::Dim;
use torus_rigidity::error::Error;
use torus_rigidity::harness::config::{ExperimentConfig, ExperimentKind, OutputFormat};
use torus_rigidity::harness::experiments::{
    bounds_row, chord_verify_rows, moment_verify_rows, run_scaling, run_theorem_verify, OscRow,
};
use torus_rigidity::harness::records::{to_csv_string, write_json};
use torus_rigidity::harness::run_battery;
use torus_rigidity::morrey::PathMode;
use torus_rigidity::oscillation::{grid_osc, refine_osc};
use torus_rigidity::sampling::{sample_subtorus, SeedSpec};
use torus_rigidity::torus::SubtorusSpec;
use torus_rigidity::zoo::{family_catalog, FunctionSpec};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "torus-rigidity",
    version,
    about = "Oscillation rigidity of Lipschitz functions on the flat torus: \
             certified oscillation experiments, projection moments, and \
             chaining-bound verification"
)]
struct Cli {
    /// Master seed threaded to every experiment
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// JSON experiment config; replaces the inline flags of
    /// theorem-verify and scaling
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output file (stdout when omitted)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format for machine-readable results
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: FormatArg,

    /// Worker threads (defaults to the core count)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parameter arithmetic: admissible k, p, the coordinate threshold
    /// delta, and the log-scale slack of each inequality
    Bounds {
        /// Ambient dimension, exact (`1000000`) or log-space (`log:2500`)
        #[arg(long)]
        n: String,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Evaluate the chain at this k (default: max admissible, at least 1)
        #[arg(long)]
        k: Option<u64>,
    },

    /// Function zoo
    Zoo {
        #[command(subcommand)]
        cmd: ZooCommand,
    },

    /// Certified oscillation enclosure on one subtorus
    Osc {
        /// Function record, e.g. 'family=sawtooth n=8 axis=0 offset=0'
        #[arg(long)]
        function: String,
        /// Subtorus record 'n=8 free=1,3 base=...'; omit for a random one
        #[arg(long)]
        subtorus: Option<String>,
        /// Dimension of the random subtorus when --subtorus is omitted
        #[arg(long)]
        k: Option<usize>,
        /// Grid points per axis
        #[arg(long, default_value_t = 32)]
        m: usize,
        /// Branch-and-bound refinement after the grid
        #[arg(long)]
        refine: bool,
        #[arg(long, default_value_t = 1e-3)]
        gap: f64,
        #[arg(long, default_value_t = 200_000)]
        budget: u64,
    },

    /// Success-fraction experiment over uniform random subtori
    TheoremVerify {
        /// Function record; repeatable
        #[arg(long = "function")]
        functions: Vec<String>,
        /// Comma-separated ambient dimensions
        #[arg(long, value_delimiter = ',')]
        n_values: Vec<u64>,
        #[arg(long, value_delimiter = ',')]
        k_values: Vec<u64>,
        #[arg(long = "eps", value_delimiter = ',')]
        eps_values: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long, default_value_t = 32)]
        grid_m: usize,
    },

    /// Empirical largest nearly-constant subtorus dimension k*(n)
    Scaling {
        #[arg(long = "function")]
        functions: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        n_values: Vec<u64>,
        #[arg(long, value_delimiter = ',')]
        k_values: Vec<u64>,
        #[arg(long = "eps", value_delimiter = ',')]
        eps_values: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long, default_value_t = 32)]
        grid_m: usize,
    },

    /// Projected-moment verification: exact enumeration vs Monte Carlo vs
    /// the closed-form bound, one CSV row per tested vector
    Lemma4Verify {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// Moment order; defaults to 2k (alpha = 1)
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        /// Number of random unit vectors beyond e1 and the uniform vector
        #[arg(long, default_value_t = 3)]
        vectors: usize,
    },

    /// Chord-sampling verification of the chaining bound on random
    /// polygonal paths over a random subtorus
    MorreyVerify {
        #[arg(long)]
        function: String,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        /// Random point pairs whose path segments get verified
        #[arg(long, default_value_t = 3)]
        pairs: usize,
        /// Path construction: 'equal' subdivision or the exact-half 'paper'
        /// construction with an isosceles closing pair
        #[arg(long, default_value = "equal")]
        mode: String,
    },

    /// Full verification battery; exit 1 if any check fails
    Battery {
        /// Perturb the coordinate threshold by 10% (the battery must fail)
        #[arg(long)]
        inject_delta_bug: bool,
    },
}

#[derive(Subcommand)]
enum ZooCommand {
    /// List the function families and example records
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: cannot configure {threads} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Io(_) => 3,
                Error::Config(_) | Error::Parse(_) | Error::InvalidInput(_) => 2,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}

/// Write rows as CSV or JSON to --out or stdout.
fn emit<T: serde::Serialize>(
    rows: &[T],
    out: &Option<PathBuf>,
    format: OutputFormat,
) -> torus_rigidity::Result<()> {
    let payload = match format {
        OutputFormat::Csv => to_csv_string(rows)?,
        OutputFormat::Json => {
            let mut buf = Vec::new();
            write_json(rows, &mut buf)?;
            String::from_utf8(buf).expect("json is utf8")
        }
    };
    match out {
        Some(path) => std::fs::write(path, payload)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(payload.as_bytes())?;
        }
    }
    Ok(())
}

fn load_config(
    path: &PathBuf,
    expected: ExperimentKind,
) -> torus_rigidity::Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    let cfg = ExperimentConfig::from_json(&text)?;
    if cfg.experiment != expected {
        return Err(Error::Config(format!(
            "config declares experiment '{}', expected '{}'",
            cfg.experiment, expected
        )));
    }
    Ok(cfg)
}

fn run(cli: Cli) -> torus_rigidity::Result<ExitCode> {
    let format: OutputFormat = cli.format.into();
    match cli.command {
        Command::Bounds { n, eps, alpha, k } => {
            let dim = Dim::parse(&n)?;
            let row = bounds_row(dim, eps, alpha, k)?;
            println!("n               {}", row.n);
            println!("eps             {}", row.eps);
            println!("alpha           {}", row.alpha);
            println!("k (evaluated)   {}", row.k);
            println!("k_max           {}", row.k_max_admissible);
            println!("k_guaranteed    {}", row.k_guaranteed);
            println!("p               {}", row.p);
            println!("delta           {:e}", row.delta);
            println!("log-scale slack (>= 0 means the inequality holds):");
            println!("  tail balance      {:+.4}", row.tail_balance_slack);
            println!("  k <= n/2          {:+.4}", row.k_half_n_slack);
            println!("  growth (2p+8)     {:+.4}", row.growth_2p_plus_8_slack);
            println!("  growth (12k)      {:+.4}", row.growth_12k_slack);
            println!("admissible      {}", row.holds);
            emit(&[row], &cli.out, format)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Zoo { cmd: ZooCommand::List } => {
            println!("function families:");
            for (name, desc) in family_catalog() {
                println!("  {name:<14} {desc}");
            }
            println!();
            println!("example records:");
            println!("  family=dist-to-point n=4 center=0.1,0.2,0.3,0.4");
            println!("  family=sawtooth n=8 axis=0 offset=0");
            println!("  family=max-sawtooth n=8 axes=0,3 offsets=0,0.25");
            println!("  family=trig-poly n=4 terms=0.25:0:1,0,0,0;0.1:1.57:0,2,0,-1");
            println!("  family=smoothed-dist n=4 center=0,0,0,0 c=0.1 amp=1");
            Ok(ExitCode::SUCCESS)
        }

        Command::Osc {
            function,
            subtorus,
            k,
            m,
            refine,
            gap,
            budget,
        } => {
            let f = FunctionSpec::from_record(&function)?;
            let sub = match (subtorus, k) {
                (Some(record), _) => SubtorusSpec::from_record(&record)?,
                (None, Some(k)) => {
                    sample_subtorus(f.ambient_dim(), k, SeedSpec::new(cli.seed, 0, 0))?
                }
                (None, None) => {
                    return Err(Error::Config(
                        "provide --subtorus <record> or --k <dim> for a random one".into(),
                    ))
                }
            };
            let mut rows = Vec::new();
            let cert = grid_osc(&f, &sub, m)?;
            rows.push(OscRow::from_certificate(&f, &sub, "grid", Some(m), &cert));
            if refine {
                let cert = refine_osc(&f, &sub, gap, budget)?;
                rows.push(OscRow::from_certificate(&f, &sub, "refine", None, &cert));
            }
            eprintln!("subtorus: {}", sub.to_record());
            emit(&rows, &cli.out, format)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::TheoremVerify {
            functions,
            n_values,
            k_values,
            eps_values,
            trials,
            grid_m,
        } => {
            let cfg = match &cli.config {
                Some(path) => load_config(path, ExperimentKind::TheoremVerify)?,
                None => {
                    let mut cfg = ExperimentConfig::new(ExperimentKind::TheoremVerify);
                    cfg.functions = functions;
                    cfg.n_values = n_values;
                    cfg.k_values = k_values;
                    cfg.eps = eps_values;
                    cfg.trials = trials;
                    cfg.grid_m = grid_m;
                    cfg.master_seed = cli.seed;
                    cfg
                }
            };
            let records = run_theorem_verify(&cfg)?;
            emit(&records, &cli.out, format)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Scaling {
            functions,
            n_values,
            k_values,
            eps_values,
            trials,
            grid_m,
        } => {
            let cfg = match &cli.config {
                Some(path) => load_config(path, ExperimentKind::Scaling)?,
                None => {
                    let mut cfg = ExperimentConfig::new(ExperimentKind::Scaling);
                    cfg.functions = functions;
                    cfg.n_values = n_values;
                    cfg.k_values = k_values;
                    cfg.eps = eps_values;
                    cfg.trials = trials;
                    cfg.grid_m = grid_m;
                    cfg.master_seed = cli.seed;
                    cfg
                }
            };
            let records = run_scaling(&cfg)?;
            emit(&records, &cli.out, format)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::Lemma4Verify {
            n,
            k,
            p,
            eps,
            samples,
            vectors,
        } => {
            let p = p.unwrap_or(2.0 * k as f64);
            let rows = moment_verify_rows(
                n,
                k,
                p,
                eps,
                samples,
                vectors,
                SeedSpec::new(cli.seed, 0, 0),
            )?;
            emit(&rows, &cli.out, format)?;
            Ok(ExitCode::SUCCESS)
        }

        Command::MorreyVerify {
            function,
            k,
            alpha,
            samples,
            pairs,
            mode,
        } => {
            let f = FunctionSpec::from_record(&function)?;
            let mode: PathMode = mode.parse()?;
            let rows = chord_verify_rows(
                &f,
                k,
                alpha,
                samples,
                pairs,
                mode,
                SeedSpec::new(cli.seed, 0, 0),
            )?;
            let all_ok = rows.iter().all(|r| r.satisfied && r.triangle_ok);
            emit(&rows, &cli.out, format)?;
            if all_ok {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("chord bound violated beyond the Monte Carlo margin");
                Ok(ExitCode::from(1))
            }
        }

        Command::Battery { inject_delta_bug } => {
            let mut cfg = match &cli.config {
                Some(path) => load_config(path, ExperimentKind::Battery)?,
                None => ExperimentConfig::new(ExperimentKind::Battery),
            };
            cfg.master_seed = cli.seed;
            cfg.inject_delta_bug = cfg.inject_delta_bug || inject_delta_bug;
            let report = run_battery(&cfg)?;
            for line in report.summary_lines() {
                println!("{line}");
            }
            if report.passed {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(1))
            }
        }
    }
}

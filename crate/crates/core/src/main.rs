use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use avgopt::bench::{
    aggregate, emit_csv, emit_svg, parse_config, run_benchmark, sweep_ratios, AggregateRow, ConfigOverrides, EdgeSource,
    Experiment, MethodName,
};
use avgopt::problem::DiskMode;
use avgopt::rates::{predictions, write_predictions_csv};
use avgopt::recurrence::{disk_recurrence, disk_weights, mp_coefficients};
use avgopt::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_DIVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "avgopt", version, about = "Average-case optimal methods for affine operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded multi-method experiment.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Print method coefficient tables as CSV.
    #[command(subcommand)]
    Coeffs(CoeffsCommand),
    /// Print closed-form rate predictions as CSV.
    #[command(subcommand)]
    Rates(RatesCommand),
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Bilinear games with a Marchenko–Pastur spectrum.
    Bilinear {
        #[arg(long)]
        d1: Option<usize>,
        #[arg(long)]
        d2: Option<usize>,
        #[arg(long)]
        sigma2: Option<f64>,
        /// Sweep d1/d2 over the default ratios at fixed d2.
        #[arg(long, conflicts_with = "ratios")]
        sweep: bool,
        /// Sweep these d1/d2 ratios at fixed d2.
        #[arg(long, value_delimiter = ',')]
        ratios: Option<Vec<f64>>,
        /// Take the spectral edges from the ensemble law or from each instance.
        #[arg(long, value_enum)]
        edge_source: Option<EdgeSource>,
        /// Extragradient step (default 1/sqrt(L)).
        #[arg(long)]
        eg_step: Option<f64>,
        /// Choose the extragradient step from a grid over 1/sqrt(L).
        #[arg(long)]
        eg_grid: bool,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Operators with spectrum on the disk D(C, R).
    Disk {
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        center: Option<f64>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long, value_enum)]
        mode: Option<DiskMode>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Flat JSON config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    init_scale: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long, value_enum, value_delimiter = ',')]
    methods: Option<Vec<MethodName>>,
    /// Output prefix: writes <PREFIX>.csv and, with --svg, <PREFIX>.svg.
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    svg: bool,
    /// Exit with status 3 if any run diverged.
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand)]
enum CoeffsCommand {
    /// Step sizes and momenta for the Marchenko–Pastur method.
    Mp {
        #[arg(long, default_value_t = 1.0)]
        sigma2: f64,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        horizon: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recurrence and averaging weights for the disk method.
    Disk {
        #[arg(long)]
        center: f64,
        #[arg(long)]
        radius: f64,
        #[arg(long)]
        horizon: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum RatesCommand {
    /// Expected squared distance of the disk methods.
    Disk {
        #[arg(long)]
        center: f64,
        #[arg(long)]
        radius: f64,
        #[arg(long)]
        iters: usize,
        #[arg(long, default_value_t = 1.0)]
        init_scale: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn run_bench(experiment: Experiment, mut overrides: ConfigOverrides, common: CommonArgs) -> Result<u8, Error> {
    overrides.init_scale = common.init_scale;
    overrides.iters = common.iters;
    overrides.n_seeds = common.seeds;
    overrides.base_seed = common.base_seed;
    overrides.methods = common.methods;
    overrides.output = common.out;
    if common.svg {
        overrides.emit_svg = Some(true);
    }
    let cfg = parse_config(experiment, common.config.as_deref(), overrides)?;
    let out = run_benchmark(&cfg)?;

    let csv_path = format!("{}.csv", cfg.output);
    emit_csv(&out.rows, BufWriter::new(File::create(&csv_path)?))?;
    let agg = aggregate(&out.rows);
    if cfg.emit_svg {
        let svg_path = format!("{}.svg", cfg.output);
        emit_svg(&agg, BufWriter::new(File::create(&svg_path)?))?;
        eprintln!("wrote {csv_path} and {svg_path}");
    } else {
        eprintln!("wrote {csv_path}");
    }
    for (experiment, step) in &out.eg_steps {
        eprintln!("{experiment}: extragradient step {step}/sqrt(L)");
    }
    summarize(&agg, cfg.iters);

    let diverged = out.rows.iter().filter(|r| r.diverged).count();
    if diverged > 0 {
        eprintln!("{diverged} run(s) diverged");
        if common.strict {
            return Ok(EXIT_DIVERGED);
        }
    }
    Ok(0)
}

fn summarize(agg: &[AggregateRow], iters: usize) {
    eprintln!("{:<16} {:<24} {:>6} {:>12} {:>12} {:>12}", "experiment", "method", "runs", "mean", "stderr", "predicted");
    let show = |v: Option<f64>| v.map(|x| format!("{x:.4e}")).unwrap_or_else(|| "-".into());
    for a in agg.iter().filter(|a| a.t == iters) {
        eprintln!(
            "{:<16} {:<24} {:>6} {:>12} {:>12} {:>12}",
            a.experiment,
            a.method,
            a.runs,
            show(a.mean),
            show(a.std_error),
            show(a.predicted)
        );
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Bench(BenchCommand::Bilinear {
            d1,
            d2,
            sigma2,
            sweep,
            ratios,
            edge_source,
            eg_step,
            eg_grid,
            common,
        }) => {
            let overrides = ConfigOverrides {
                d1,
                d2,
                sigma2,
                ratios: if sweep { Some(sweep_ratios()) } else { ratios },
                edge_source,
                eg_step,
                eg_grid: eg_grid.then_some(true),
                ..Default::default()
            };
            run_bench(Experiment::Bilinear, overrides, common)
        }
        Command::Bench(BenchCommand::Disk {
            d,
            center,
            radius,
            mode,
            common,
        }) => {
            let overrides = ConfigOverrides {
                d,
                center,
                radius,
                mode,
                ..Default::default()
            };
            run_bench(Experiment::Disk, overrides, common)
        }
        Command::Coeffs(CoeffsCommand::Mp { sigma2, r, horizon, out }) => {
            mp_coefficients(sigma2, r, horizon)?.write_csv(sink(out.as_deref())?)?;
            Ok(0)
        }
        Command::Coeffs(CoeffsCommand::Disk {
            center,
            radius,
            horizon,
            out,
        }) => {
            let weights = disk_weights(center, radius, horizon)?;
            weights.write_csv(&disk_recurrence(center)?, sink(out.as_deref())?)?;
            Ok(0)
        }
        Command::Rates(RatesCommand::Disk {
            center,
            radius,
            iters,
            init_scale,
            out,
        }) => {
            if !(init_scale.is_finite() && init_scale > 0.0) {
                return Err(Error::Config(format!("init_scale: must be positive, got {init_scale}")));
            }
            write_predictions_csv("disk", &predictions(center, radius, iters)?, init_scale, sink(out.as_deref())?)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::InvalidParameter { .. } | Error::Json(_) => ExitCode::from(EXIT_CONFIG),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

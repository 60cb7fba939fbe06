use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hanova::export::render;
use hanova::run::{run, Method, OutputFormat, RunConfig};
use hanova_core::bayes::{SamplerConfig, DEFAULT_JOINT_LIMIT};
use hanova_core::classical::DEFAULT_DRAWS;

#[derive(Parser)]
#[command(name = "hanova", version, about = "Hierarchical analysis of variance")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model and print the ANOVA table and variance-component display.
    Fit(FitArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Classical,
    Moments,
    Bayes,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
    Csv,
    Svg,
}

#[derive(clap::Args)]
struct FitArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Model formula, e.g. "y ~ row + col + trt + row:col".
    #[arg(long)]
    model: String,
    #[arg(long, value_enum, default_value = "moments")]
    method: MethodArg,
    /// Simulation draws for the moments intervals.
    #[arg(long, default_value_t = DEFAULT_DRAWS)]
    draws: usize,
    #[arg(long, default_value_t = 4)]
    chains: usize,
    #[arg(long, default_value_t = 2000)]
    iters: usize,
    #[arg(long, default_value_t = 1000)]
    warmup: usize,
    #[arg(long, default_value_t = 1)]
    thin: usize,
    #[arg(long, env = "HANOVA_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
    /// Write here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Extra alias declaration `coarse=fine`, e.g. "trt=row:col". Repeatable.
    #[arg(long = "alias")]
    aliases: Vec<String>,
    /// Worker threads for the chains.
    #[arg(long)]
    threads: Option<usize>,
    /// Plain Gibbs instead of the parameter-expanded sampler.
    #[arg(long)]
    plain: bool,
    /// Upper bound on sd draws for one-df batches (default 100 × sd(y)).
    #[arg(long)]
    sigma_max: Option<f64>,
}

fn config(args: FitArgs) -> RunConfig {
    RunConfig {
        data: args.data,
        model: args.model,
        aliases: args.aliases,
        method: match args.method {
            MethodArg::Classical => Method::Classical,
            MethodArg::Moments => Method::Moments,
            MethodArg::Bayes => Method::Bayes,
            MethodArg::All => Method::All,
        },
        n_draws: args.draws,
        sampler: SamplerConfig {
            chains: args.chains,
            iters: args.iters,
            warmup: args.warmup,
            thin: args.thin,
            seed: args.seed,
            px: !args.plain,
            keep_beta: false,
            sigma_max: args.sigma_max,
            joint_limit: DEFAULT_JOINT_LIMIT,
        },
        threads: args.threads,
        format: match args.format {
            FormatArg::Text => OutputFormat::Text,
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Svg => OutputFormat::Svg,
        },
        out: args.out,
    }
}

fn main() -> ExitCode {
    let Command::Fit(args) = Cli::parse().command;
    let cfg = config(args);
    let results = match run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    for w in &results.warnings {
        eprintln!("warning: {w}");
    }
    let bytes = match render(&results, cfg.format) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let written = match &cfg.out {
        Some(path) => std::fs::write(path, &bytes),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&bytes)
        }
    };
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}

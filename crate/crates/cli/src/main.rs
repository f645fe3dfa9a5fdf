//! `renorm-lab run <command>`: numerical experiments on renormalized
//! single-site potentials, with CSV tables, SVG plots and pass/fail verdicts.
//!
//! Exit codes: 0 all verdicts hold, 1 a verdict failed, 2 configuration
//! error, 3 numerical or i/o failure.

mod config;
mod error;
mod output;
mod plot;
mod suites;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Command, RunConfig};
use error::CliError;

#[derive(Parser)]
#[command(name = "renorm-lab", version, about = "Renormalization experiments for log-Sobolev and spectral-gap constants")]
struct Cli {
    #[command(subcommand)]
    action: Action,
}

#[derive(Subcommand)]
enum Action {
    /// Run one experiment suite.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(value_enum)]
    command: Command,
    /// JSON configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    potential: Option<String>,
    /// Shorthand for `--param beta=<value>`.
    #[arg(long)]
    beta: Option<f64>,
    /// Potential parameter as `name=value`; repeatable.
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, f64)>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, allow_negative_numbers = true)]
    sigma: Option<f64>,
    /// Comma-separated sample sizes for the CLT sweep.
    #[arg(long = "Ks", value_delimiter = ',')]
    ks: Option<Vec<usize>>,
    /// Comma-separated macroscopic means.
    #[arg(long = "m-grid", value_delimiter = ',', allow_negative_numbers = true)]
    m_grid: Option<Vec<f64>>,
    /// Comma-separated system sizes N.
    #[arg(long, value_delimiter = ',')]
    ns: Option<Vec<usize>>,
    #[arg(long)]
    generations: Option<usize>,
    /// Half-width of the renormalization window.
    #[arg(long)]
    window: Option<f64>,
    /// Knots per renormalized table.
    #[arg(long)]
    knots: Option<usize>,
    #[arg(long)]
    cases: Option<usize>,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("`{v}`: {e}"))?;
    Ok((k.trim().to_string(), v))
}

fn resolve(args: RunArgs) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::defaults(args.command);
    if let Some(path) = &args.config {
        let file = RunConfig::load(path)?;
        if let Some(c) = file.command {
            if c != args.command {
                return Err(CliError::Config(format!(
                    "config file is for `{}`, command line asks for `{}`",
                    c.name(),
                    args.command.name()
                )));
            }
        }
        cfg.overlay(file);
    }
    macro_rules! flag {
        ($($field:ident),*) => { $( if let Some(v) = args.$field { cfg.$field = v; } )* };
    }
    flag!(potential, seed, sigma, ks, m_grid, ns, generations, cases);
    if let Some(out) = args.out {
        cfg.output_dir = out;
    }
    if let Some(b) = args.beta {
        cfg.params.insert("beta".into(), b);
    }
    cfg.params.extend(args.params);
    if let Some(w) = args.window {
        cfg.windows.insert("renorm".into(), w);
    }
    if let Some(k) = args.knots {
        cfg.grids.insert("knots".into(), k as f64);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("RENORM_LSI_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("RENORM_LSI_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn main() -> ExitCode {
    let Action::Run(args) = Cli::parse().action;
    let outcome = init_threads().and_then(|()| resolve(args)).and_then(|cfg| suites::run(&cfg));
    match outcome {
        Ok(o) => {
            for line in &o.summary {
                println!("{line}");
            }
            for f in &o.files {
                println!("wrote {}", f.display());
            }
            if o.ok { ExitCode::SUCCESS } else { ExitCode::from(1) }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! Experiment runner: exponent curves, exact error integrals, Monte Carlo
//! estimation, capacity maps, and the self-validation suite, driven by JSON
//! configs and emitting CSV or JSON with a provenance sidecar.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use palmlab::acceptance::{run_tier, Tier};
use serde_json::{json, Value};

use config::CliError;
use run::{Cell, Table};

#[derive(Parser)]
#[command(
    name = "palmlab",
    version,
    about = "Coding over random point sets: exponents, exact error integrals, simulation"
)]
struct Cli {
    /// JSON experiment configuration (required by every command except
    /// validate).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; overrides /output/path from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Base RNG seed; overrides /mc/seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = automatic).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Error exponents over a density sweep
    Exponent,
    /// Error probabilities by quadrature, bound, or closed form
    PeExact,
    /// Monte Carlo error-probability estimation
    PeMc,
    /// Entropy rate, capacity, and the power-constrained sandwich
    Capacity,
    /// Rate/exponent transfer map for the power-constrained channel
    ShannonMap,
    /// Run the self-validation suite
    Validate {
        #[arg(long, value_enum, default_value_t = TierArg::Fast)]
        tier: TierArg,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TierArg {
    Fast,
    Full,
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Exponent => "exponent",
            Cmd::PeExact => "pe-exact",
            Cmd::PeMc => "pe-mc",
            Cmd::Capacity => "capacity",
            Cmd::ShannonMap => "shannon-map",
            Cmd::Validate { .. } => "validate",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("error: could not set up {} threads: {e}", cli.threads);
            return ExitCode::from(1);
        }
    }
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<ExitCode, CliError> {
    if let Cmd::Validate { tier } = cli.command {
        return run_validate(cli, tier);
    }
    let config_path = cli.config.as_deref().ok_or_else(|| CliError::Config {
        pointer: String::new(),
        message: "--config is required for this command".to_string(),
    })?;
    let root = config::load_config(config_path)?;
    let (out, format) = config::parse_output(&root, cli.out.as_deref())?;
    let start = Instant::now();
    let table = match cli.command {
        Cmd::Exponent => run::cmd_exponent(&root)?,
        Cmd::PeExact => run::cmd_pe_exact(&root)?,
        Cmd::PeMc => run::cmd_pe_mc(&root, cli.seed)?,
        Cmd::Capacity => run::cmd_capacity(&root)?,
        Cmd::ShannonMap => run::cmd_shannon_map(&root)?,
        Cmd::Validate { .. } => unreachable!("handled above"),
    };
    let total = start.elapsed().as_secs_f64();
    run::write_outputs(
        &out,
        format,
        cli.command.name(),
        &table,
        &root,
        cli.seed,
        cli.threads,
        total,
    )?;
    println!(
        "wrote {} rows to {} (sidecar {})",
        table.rows.len(),
        out.display(),
        run::sidecar_path(&out).display()
    );
    Ok(ExitCode::SUCCESS)
}

fn run_validate(cli: &Cli, tier: TierArg) -> Result<ExitCode, CliError> {
    let start = Instant::now();
    let results = run_tier(match tier {
        TierArg::Fast => Tier::Fast,
        TierArg::Full => Tier::Full,
    });
    let total = start.elapsed();
    for r in &results {
        println!("{r}");
    }
    println!("total: {total:.2?}");
    if let Some(out) = &cli.out {
        let mut table = Table::new(&[
            "name",
            "pass",
            "measured",
            "tolerance",
            "runtime_seconds",
            "seed",
        ]);
        for r in &results {
            table.push(
                vec![
                    Cell::Text(r.name.to_string()),
                    Cell::Text(if r.pass { "pass" } else { "fail" }.to_string()),
                    Cell::Num(r.measured),
                    Cell::Num(r.tolerance),
                    Cell::Num(r.runtime.as_secs_f64()),
                    r.seed.map_or(Cell::Empty, Cell::Int),
                ],
                r.runtime.as_secs_f64(),
                r.seed,
            );
        }
        let tier_name: Value = json!({
            "tier": match tier { TierArg::Fast => "fast", TierArg::Full => "full" }
        });
        run::write_outputs(
            out,
            config::OutputFormat::Csv,
            "validate",
            &table,
            &tier_name,
            None,
            cli.threads,
            total.as_secs_f64(),
        )?;
        println!("wrote report to {}", out.display());
    }
    if results.iter().all(|r| r.pass) {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

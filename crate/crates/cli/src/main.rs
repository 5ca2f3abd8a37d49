use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cogrelay_cli::{
    load_scenario, pa_compare, run_sweep, validate, write_compare_csv, write_sweep_csv, CompareSpec, Range, SweepSpec,
    SweepVariable,
};
use cogrelay_core::allocation::find_r_min;
use cogrelay_core::montecarlo::SearchObjective;
use cogrelay_core::{
    allocate, asymptotic_coefficients, asymptotic_total_outage, compute_g, total_outage, AllocationMode, Error,
    SelectionMode, M_MAX,
};
use serde_json::json;

#[derive(Parser)]
#[command(name = "cogrelay", version, about = "Outage analysis of a cognitive two-way relay network")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Uniform,
    Lemma,
}

impl From<Mode> for AllocationMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Uniform => AllocationMode::Uniform,
            Mode::Lemma => AllocationMode::Lemma,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Select {
    Statistical,
    Opportunistic,
}

impl From<Select> for SelectionMode {
    fn from(s: Select) -> Self {
        match s {
            Select::Statistical => SelectionMode::Statistical,
            Select::Opportunistic => SelectionMode::Opportunistic,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Objective {
    /// Total secondary outage over powers and a common ratio
    Total,
    /// Worst relay outage for powers, then per-relay forward outage for ratios
    Staged,
}

#[derive(Subcommand)]
enum Command {
    /// Outage versus one parameter, as CSV
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "gamma_u_dB")]
        var: SweepVariable,
        /// start:stop:step (defaults: gamma_u_dB 0:60:1, P_th 0.002:0.2:0.002, N0_dB -10:10:1)
        #[arg(long, allow_hyphen_values = true)]
        range: Option<Range>,
        /// Relay counts, comma separated (default: the scenario's M)
        #[arg(long, value_delimiter = ',')]
        relays: Vec<usize>,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "uniform")]
        mode: Vec<Mode>,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "opportunistic")]
        select: Vec<Select>,
        /// Monte Carlo trials per row; 0 skips simulation
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// CSV destination (default: stdout)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check every closed form against simulation, quadrature and grid search
    Validate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "lemma")]
        mode: Mode,
        #[arg(long, default_value_t = 10_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Lemma allocation versus exhaustive search over the noise power, as CSV
    PaCompare {
        #[arg(long)]
        scenario: PathBuf,
        /// Noise power range in dB
        #[arg(long, default_value = "-5:3:1", allow_hyphen_values = true)]
        range: Range,
        #[arg(long, default_value_t = 400)]
        resolution: usize,
        #[arg(long, default_value_t = 10_000)]
        alpha_points: usize,
        #[arg(long, value_enum, default_value = "total")]
        objective: Objective,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the allocation for one scenario as JSON
    Allocate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "lemma")]
        mode: Mode,
    },
}

fn output(path: &Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn allocate_report(path: &Path, mode: AllocationMode) -> anyhow::Result<serde_json::Value> {
    let file = load_scenario(path)?;
    let cfg = file.to_config()?;
    let alloc = allocate(&cfg, mode)?;
    let mut report = json!({
        "mode": mode.as_str(),
        "g": compute_g(&cfg)?,
        "allocation": alloc,
    });
    if mode == AllocationMode::Lemma && cfg.relay_count() > 0 && !alloc.forbidden {
        let (r_min, candidates) = find_r_min(&cfg)?;
        report["r_min"] = json!(format!("r{}", r_min + 1));
        report["candidates"] = json!(candidates);
    }
    if cfg.relay_count() <= M_MAX {
        report["p_total"] = json!(total_outage(&cfg, &alloc)?.p_total);
        let coeffs = asymptotic_coefficients(&cfg, mode)?;
        report["p_asymptotic"] = json!(asymptotic_total_outage(&cfg, &coeffs)?.p_total);
        report["asymptotic"] = json!(coeffs);
    }
    Ok(report)
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Sweep { scenario, var, range, relays, mode, select, trials, seed, out } => {
            let file = load_scenario(&scenario)?;
            let ms = if relays.is_empty() { vec![file.m] } else { relays };
            let mut scenarios = Vec::new();
            for &m in &ms {
                for &a in &mode {
                    for &s in &select {
                        scenarios.push((m, a.into(), s.into()));
                    }
                }
            }
            let spec = SweepSpec {
                variable: var,
                range: range.unwrap_or_else(|| var.default_range()),
                scenarios,
                mc_trials: trials,
                seed,
            };
            let rows = run_sweep(&spec, &file)?;
            write_sweep_csv(&rows, output(&out)?)?;
            Ok(true)
        }
        Command::Validate { scenario, mode, trials, seed } => {
            let file = load_scenario(&scenario)?;
            let report = validate(&file, mode.into(), trials, seed)?;
            writeln!(io::stdout().lock(), "{report}")?;
            Ok(report.passed())
        }
        Command::PaCompare { scenario, range, resolution, alpha_points, objective, out } => {
            let file = load_scenario(&scenario)?;
            let objective = match objective {
                Objective::Total => SearchObjective::TotalOutage,
                Objective::Staged => SearchObjective::Staged,
            };
            let spec = CompareSpec { range, resolution, alpha_points, objective };
            let rows = pa_compare(&file, &spec)?;
            write_compare_csv(&rows, output(&out)?)?;
            Ok(true)
        }
        Command::Allocate { scenario, mode } => {
            let report = allocate_report(&scenario, mode.into())?;
            writeln!(io::stdout().lock(), "{}", serde_json::to_string_pretty(&report)?)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e)
            if e.chain()
                .any(|c| c.downcast_ref::<io::Error>().is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe)) =>
        {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let numerical = e.chain().any(|c| matches!(c.downcast_ref::<Error>(), Some(Error::Numerical { .. })));
            ExitCode::from(if numerical { 1 } else { 2 })
        }
    }
}

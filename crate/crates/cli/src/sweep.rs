//! One-dimensional parameter sweeps producing the outage curves.

use std::io::Write;

use anyhow::{bail, Context};
use cogrelay_core::asymptotic::{asymptotic_coefficients, asymptotic_total_outage};
use cogrelay_core::montecarlo::{self, MIN_TRIALS};
use cogrelay_core::{
    allocate, compute_g, total_outage, AllocationMode, PowerAllocation, ScenarioConfig, ScenarioFile, SelectionMode,
    Target, M_MAX,
};
use rayon::prelude::*;

use crate::{cell, Range};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepVariable {
    /// Primary transmit SNR in dB (noise power held fixed).
    #[value(name = "gamma_u_dB")]
    GammaUDb,
    /// Primary outage threshold.
    #[value(name = "P_th")]
    PTh,
    /// Noise power in dB (primary transmit power held fixed).
    #[value(name = "N0_dB")]
    N0Db,
}

impl SweepVariable {
    pub fn default_range(self) -> Range {
        match self {
            SweepVariable::GammaUDb => Range { start: 0.0, stop: 60.0, step: 1.0 },
            SweepVariable::PTh => Range { start: 0.002, stop: 0.2, step: 0.002 },
            SweepVariable::N0Db => Range { start: -10.0, stop: 10.0, step: 1.0 },
        }
    }

    /// Scenario with the swept value substituted.
    pub fn apply(self, file: &ScenarioFile, x: f64, m: usize) -> cogrelay_core::Result<ScenarioConfig> {
        let mut f = file.clone();
        match self {
            SweepVariable::GammaUDb => {
                f.gamma_u_db = Some(x);
                f.p_u_db = None;
            }
            SweepVariable::PTh => f.p_th = x,
            SweepVariable::N0Db => {
                if let Some(g) = f.gamma_u_db.take() {
                    f.p_u_db = Some(g + f.n0_db);
                }
                f.n0_db = x;
            }
        }
        f.to_config_with_relays(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub range: Range,
    /// `(M, allocation, selection)` combinations evaluated at every point.
    pub scenarios: Vec<(usize, AllocationMode, SelectionMode)>,
    /// Monte Carlo trials per row; zero skips simulation.
    pub mc_trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub x: f64,
    pub m: usize,
    pub alloc: AllocationMode,
    pub select: SelectionMode,
    pub p_analytic: Option<f64>,
    pub p_asymptotic: Option<f64>,
    pub p_mc: Option<f64>,
    pub mc_se: Option<f64>,
    pub g: f64,
    pub forbidden: bool,
    pub allocation: PowerAllocation,
}

pub fn run_sweep(spec: &SweepSpec, file: &ScenarioFile) -> anyhow::Result<Vec<SweepRow>> {
    if spec.mc_trials != 0 && spec.mc_trials < MIN_TRIALS {
        bail!("trials must be 0 (skip simulation) or at least {MIN_TRIALS}");
    }
    if spec.scenarios.is_empty() {
        bail!("no scenarios to evaluate");
    }
    let mut scenarios = spec.scenarios.clone();
    scenarios.sort();
    scenarios.dedup();
    let jobs: Vec<(f64, (usize, AllocationMode, SelectionMode))> =
        spec.range.points().into_iter().flat_map(|x| scenarios.iter().map(move |&s| (x, s))).collect();
    jobs.par_iter()
        .map(|&(x, (m, alloc, select))| {
            let cfg = spec.variable.apply(file, x, m).with_context(|| format!("{:?} = {x}, M = {m}", spec.variable))?;
            sweep_row(&cfg, x, alloc, select, spec.mc_trials, spec.seed).with_context(|| {
                format!("{:?} = {x}, M = {m}, {} / {}", spec.variable, alloc.as_str(), select.as_str())
            })
        })
        .collect()
}

fn sweep_row(
    cfg: &ScenarioConfig,
    x: f64,
    alloc_mode: AllocationMode,
    select: SelectionMode,
    trials: u64,
    seed: u64,
) -> anyhow::Result<SweepRow> {
    let m = cfg.relay_count();
    let g = compute_g(cfg)?;
    let allocation = allocate(cfg, alloc_mode)?;
    let (p_analytic, p_asymptotic) = if m <= M_MAX {
        let floor = asymptotic_total_outage(cfg, &asymptotic_coefficients(cfg, alloc_mode)?)?.p_total;
        (Some(total_outage(cfg, &allocation)?.p_total), Some(floor))
    } else {
        (None, None)
    };
    let (p_mc, mc_se) = if trials > 0 {
        let est = montecarlo::estimate(cfg, &allocation, trials, seed, select, Target::SecondaryOutage)?;
        (Some(est.p_hat), Some(est.std_err))
    } else {
        (None, None)
    };
    Ok(SweepRow {
        x,
        m,
        alloc: alloc_mode,
        select,
        p_analytic,
        p_asymptotic,
        p_mc,
        mc_se,
        g,
        forbidden: allocation.forbidden,
        allocation,
    })
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> anyhow::Result<()> {
    let width = rows.iter().map(|r| r.m).max().unwrap_or(0);
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> =
        ["x", "M", "alloc", "select", "p_analytic", "p_asymptotic", "p_mc", "mc_se", "g", "forbidden", "P_s", "P_d"]
            .iter()
            .map(|s| s.to_string())
            .collect();
    header.extend((1..=width).map(|i| format!("P_r{i}")));
    header.extend((1..=width).map(|i| format!("alpha{i}")));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            format!("{}", r.x),
            r.m.to_string(),
            r.alloc.as_str().to_string(),
            r.select.as_str().to_string(),
            cell(r.p_analytic),
            cell(r.p_asymptotic),
            cell(r.p_mc),
            cell(r.mc_se),
            format!("{}", r.g),
            r.forbidden.to_string(),
            format!("{}", r.allocation.p_s),
            format!("{}", r.allocation.p_d),
        ];
        rec.extend((0..width).map(|i| cell(r.allocation.p_r.get(i).copied())));
        rec.extend((0..width).map(|i| cell(r.allocation.alpha.get(i).copied())));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

//! Closed forms checked against simulation, quadrature and grid search for
//! one scenario.

use std::fmt;

use anyhow::bail;
use cogrelay_core::analytic::{relay_outage_prob, st_outage_given_relay};
use cogrelay_core::montecarlo::{self, McEstimate, Tally};
use cogrelay_core::oracle::{alpha_grid_argmin, out_given_set_quadrature, relay_outage_quadrature};
use cogrelay_core::{
    allocate, compute_g, total_outage, AllocationMode, Error, RatioTerms, RelaySet, ScenarioConfig, ScenarioFile,
    SelectionMode, Target, M_MAX,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    /// Within this many Monte Carlo standard errors.
    StdErrs(f64),
    Absolute(f64),
}

impl fmt::Display for Tolerance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tolerance::StdErrs(k) => write!(f, "{k} SE"),
            Tolerance::Absolute(x) => write!(f, "{x:e} abs"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub reference: f64,
    pub tolerance: Tolerance,
    /// Standard error or absolute gap, matching the tolerance kind.
    pub spread: f64,
    pub pass: bool,
}

impl Check {
    fn mc(name: String, est: &McEstimate, reference: f64) -> Check {
        let pass = est.z_score(reference) < 3.0;
        Check { name, value: est.p_hat, reference, tolerance: Tolerance::StdErrs(3.0), spread: est.std_err, pass }
    }

    fn abs(name: String, value: f64, reference: f64, tol: f64) -> Check {
        let gap = (value - reference).abs();
        Check { name, value, reference, tolerance: Tolerance::Absolute(tol), spread: gap, pass: gap <= tol }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub checks: Vec<Check>,
    /// Checks that could not run, with the reason.
    pub skipped: Vec<(String, String)>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<44} {:>14} {:>14} {:>12} {:>10}  result",
            "check", "value", "reference", "spread", "tolerance"
        )?;
        for c in &self.checks {
            writeln!(
                f,
                "{:<44} {:>14.8} {:>14.8} {:>12.3e} {:>10}  {}",
                c.name,
                c.value,
                c.reference,
                c.spread,
                c.tolerance.to_string(),
                if c.pass { "PASS" } else { "FAIL" }
            )?;
        }
        for (name, why) in &self.skipped {
            writeln!(f, "{name:<44} skipped: {why}")?;
        }
        let failed = self.checks.iter().filter(|c| !c.pass).count();
        write!(f, "{} checks, {} failed, {} skipped", self.checks.len(), failed, self.skipped.len())
    }
}

fn conditional(report: &mut Report, tally: &Tally, name: String, set: RelaySet, reference: f64) -> anyhow::Result<()> {
    match tally.estimate(Target::OutGivenSet(set)) {
        Ok(est) => report.checks.push(Check::mc(name, &est, reference)),
        Err(e @ Error::InsufficientConditioning { .. }) => report.skipped.push((name, e.to_string())),
        Err(e) => return Err(e.into()),
    }
    Ok(())
}

pub fn validate(file: &ScenarioFile, mode: AllocationMode, trials: u64, seed: u64) -> anyhow::Result<Report> {
    let cfg = file.to_config()?;
    let m = cfg.relay_count();
    if m > M_MAX {
        bail!(Error::Capacity { relays: m, max: M_MAX });
    }
    let alloc = allocate(&cfg, mode)?;
    let breakdown = total_outage(&cfg, &alloc)?;
    let th = cfg.thresholds();
    let mut report = Report::default();

    let opp = montecarlo::run(&cfg, &alloc, trials, seed, SelectionMode::Opportunistic)?;
    for i in 0..m {
        let exact = relay_outage_prob(&cfg, i, alloc.p_s, alloc.p_d)?;
        report.checks.push(Check::mc(
            format!("relay outage r{} vs simulation", i + 1),
            &opp.estimate(Target::RelayOutage(i))?,
            exact,
        ));
    }
    report.checks.push(Check::mc(
        "no relay decodes vs simulation".into(),
        &opp.estimate(Target::DecodeSet(RelaySet::EMPTY))?,
        breakdown.p_empty,
    ));
    conditional(
        &mut report,
        &opp,
        "direct retransmission vs simulation".into(),
        RelaySet::EMPTY,
        breakdown.p_out_given_empty,
    )?;
    for s in &breakdown.per_subset {
        report.checks.push(Check::mc(
            format!("decoding set {} vs simulation", s.set),
            &opp.estimate(Target::DecodeSet(s.set))?,
            s.p_set,
        ));
        conditional(&mut report, &opp, format!("outage given {} vs simulation", s.set), s.set, s.p_out)?;
    }
    report.checks.push(Check::mc(
        "total outage vs simulation".into(),
        &opp.estimate(Target::SecondaryOutage)?,
        breakdown.p_total,
    ));
    report.checks.push(Check::abs(
        "decoding-set probabilities sum to one".into(),
        breakdown.set_probability_mass(),
        1.0,
        1e-9,
    ));

    if compute_g(&cfg)? > 1.0 {
        report.checks.push(Check::mc(
            "primary outage, transceiver phase".into(),
            &opp.estimate(Target::PrimaryP1)?,
            cfg.p_th,
        ));
        report.checks.push(Check::mc(
            "primary outage, relay phase".into(),
            &opp.estimate(Target::PrimaryP2)?,
            cfg.p_th,
        ));
    } else {
        report.skipped.push(("primary protection".into(), "secondary transmission forbidden (g = 1)".into()));
    }

    let powered = !alloc.forbidden && alloc.p_s > 0.0 && alloc.p_d > 0.0;
    if powered && th.source > 0.0 && th.dest > 0.0 {
        for i in 0..m {
            let q = relay_outage_quadrature(&cfg, i, alloc.p_s, alloc.p_d)?;
            let exact = relay_outage_prob(&cfg, i, alloc.p_s, alloc.p_d)?;
            report.checks.push(Check::abs(format!("relay outage r{} vs quadrature", i + 1), exact, q, 1e-8));
        }
        for s in breakdown.per_subset.iter().filter(|s| s.set.len() <= 3) {
            let q = out_given_set_quadrature(&cfg, s.set, &alloc)?;
            report.checks.push(Check::abs(format!("outage given {} vs quadrature", s.set), s.p_out, q, 1e-6));
        }
        for i in 0..m {
            let terms = RatioTerms::new(&cfg, i, alloc.p_s, alloc.p_d, alloc.p_r[i])?;
            let (_, grid) = alpha_grid_argmin(&terms, 10_000);
            let closed = terms.outage(terms.optimal_alpha());
            let name = format!("ratio r{} vs 10^4-point grid", i + 1);
            let gap = (closed - grid).max(0.0);
            report.checks.push(Check {
                name,
                value: closed,
                reference: grid,
                tolerance: Tolerance::Absolute(1e-8),
                spread: gap,
                pass: gap <= 1e-8,
            });
        }
        interference_limited(&mut report, &cfg, mode, trials, seed)?;
    } else {
        report.skipped.push(("quadrature and ratio checks".into(), "need positive powers and D_s, D_d > 0".into()));
    }
    Ok(report)
}

/// Forward outage with noise 60 dB below the primary power.
fn interference_limited(
    report: &mut Report,
    cfg: &ScenarioConfig,
    mode: AllocationMode,
    trials: u64,
    seed: u64,
) -> anyhow::Result<()> {
    let quiet = cfg.with_n0(cfg.p_u * 1e-6)?;
    let alloc = allocate(&quiet, mode)?;
    if alloc.forbidden {
        return Ok(());
    }
    let stat = montecarlo::run(&quiet, &alloc, trials, seed ^ 0x5eed, SelectionMode::Statistical)?;
    for i in 0..quiet.relay_count() {
        let exact = st_outage_given_relay(&quiet, i, &alloc)?;
        report.checks.push(Check::mc(
            format!("forward outage r{} at N0/P_u = 1e-6", i + 1),
            &stat.estimate(Target::StOutageGivenRelay(i))?,
            exact,
        ));
    }
    Ok(())
}

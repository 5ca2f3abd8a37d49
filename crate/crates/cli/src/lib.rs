//! Experiment runner: parameter sweeps, the validation battery, allocation
//! comparisons against brute force, and single-scenario allocation reports.

pub mod compare;
pub mod sweep;
pub mod validate;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context};
use cogrelay_core::ScenarioFile;

pub use compare::{pa_compare, write_compare_csv, CompareRow, CompareSpec};
pub use sweep::{run_sweep, write_sweep_csv, SweepRow, SweepSpec, SweepVariable};
pub use validate::{validate, Check, Report};

/// Inclusive arithmetic range `start:stop:step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Range {
    pub fn new(start: f64, stop: f64, step: f64) -> anyhow::Result<Self> {
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            bail!("range bounds must be finite");
        }
        if step <= 0.0 {
            bail!("range step must be > 0, got {step}");
        }
        if stop < start {
            bail!("range is empty: {start} > {stop}");
        }
        Ok(Range { start, stop, step })
    }

    /// Points `start + k step` up to `stop`, computed without accumulation.
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|k| self.start + k as f64 * self.step).collect()
    }
}

impl FromStr for Range {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts.as_slice() else {
            bail!("expected start:stop:step, got '{s}'");
        };
        let num = |x: &str| x.trim().parse::<f64>().with_context(|| format!("bad number '{x}' in range '{s}'"));
        Range::new(num(a)?, num(b)?, num(c)?)
    }
}

impl fmt::Display for Range {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

pub fn load_scenario(path: &Path) -> anyhow::Result<ScenarioFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading scenario {}", path.display()))?;
    let file = ScenarioFile::from_json(&text).with_context(|| format!("parsing scenario {}", path.display()))?;
    file.to_config().with_context(|| format!("scenario {}", path.display()))?;
    Ok(file)
}

/// Shortest round-trip text for a float; empty for a missing value.
pub(crate) fn cell(x: Option<f64>) -> String {
    x.map(|v| format!("{v}")).unwrap_or_default()
}

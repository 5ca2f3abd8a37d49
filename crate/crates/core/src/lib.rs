//! Outage analysis, power allocation and relay selection for a cognitive
//! two-way decode-and-forward relay network sharing spectrum with a primary link.
//!
//! Mean channel gains are linear and `σ²` always denotes the mean of the
//! exponential power gain `|h|²`.

pub mod allocation;
pub mod analytic;
pub mod asymptotic;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod numeric;
pub mod oracle;
pub mod presets;

pub use allocation::{
    allocate, full_allocation, uniform_allocation, AllocationMode, Branch, RatioTerms, StPowerCandidates,
};
pub use analytic::{compute_g, total_outage, MeansCase, RelayOutageTerms, SubsetTerms, M_MAX};
pub use asymptotic::{asymptotic_coefficients, asymptotic_total_outage, AsymptoticCoefficients};
pub use error::{Error, Result};
pub use model::{
    db_to_linear, linear_to_db, LinkStats, Node, OutageBreakdown, PowerAllocation, Rates, RelayLinks, RelaySet,
    ScenarioConfig, ScenarioFile, SubsetOutage, Thresholds,
};
pub use montecarlo::{McEstimate, SelectionMode, Target};

//! Limits as `gamma_u -> inf` with every secondary power growing in proportion
//! to `P_u` (`P_x = rho_x P_u`). Noise drops out, `g -> g' = 1 / (1 - P_th)`,
//! and the outage settles on a floor that depends only on the `rho`s.

use serde::Serialize;

use crate::allocation::{
    alpha_with_conventions, boundary_pairs, choose_branch, coefficients_for, symmetric_split, AllocationMode, Branch,
    RatioTerms,
};
use crate::analytic::{
    assemble, conditional_outage_kernel, decoding_set_probability, direct_success, relay_outage_kernel, ForwardMeans,
    RelayMeans, Side, M_MAX,
};
use crate::error::{Error, Result};
use crate::model::{OutageBreakdown, PowerAllocation, RelaySet, ScenarioConfig, SubsetOutage};
use crate::numeric::checked_probability;

/// Power scalings relative to `P_u` in the high primary SNR limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticCoefficients {
    pub g_prime: f64,
    pub rho_s: f64,
    pub rho_d: f64,
    /// Equal-mean boundary pair `(rho_s', rho_d')`.
    pub branch1: (f64, f64),
    /// Stationary boundary pair `(rho_s'', rho_d'')`.
    pub branch2: (f64, f64),
    pub chosen: Branch,
    pub rho_r: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl AsymptoticCoefficients {
    /// Concrete powers for primary power `cfg.p_u`.
    pub fn to_allocation(&self, cfg: &ScenarioConfig) -> PowerAllocation {
        PowerAllocation {
            p_s: self.rho_s * cfg.p_u,
            p_d: self.rho_d * cfg.p_u,
            p_r: self.rho_r.iter().map(|r| r * cfg.p_u).collect(),
            alpha: self.alpha.clone(),
            beta: self.beta.clone(),
            forbidden: false,
        }
    }
}

pub fn g_prime(cfg: &ScenarioConfig) -> Result<f64> {
    if !(cfg.p_th > 0.0 && cfg.p_th < 1.0) {
        return Err(Error::Validation(format!("P_th must lie in (0, 1), got {}", cfg.p_th)));
    }
    Ok(1.0 / (1.0 - cfg.p_th))
}

/// Limit of the lemma allocation.
pub fn asymptotic_allocation(cfg: &ScenarioConfig) -> Result<AsymptoticCoefficients> {
    asymptotic_coefficients(cfg, AllocationMode::Lemma)
}

pub fn asymptotic_coefficients(cfg: &ScenarioConfig, mode: AllocationMode) -> Result<AsymptoticCoefficients> {
    let th = cfg.thresholds();
    if th.primary == 0.0 {
        return Err(Error::UndefinedPowerCap);
    }
    let gp = g_prime(cfg)?;
    let l = &cfg.links;
    let (a, b) = coefficients_for(th.primary, l, 1.0);
    let m = cfg.relay_count();
    let rho_r: Vec<f64> = l.relays.iter().map(|r| l.uv * (gp - 1.0) / (th.primary * r.rv)).collect();

    let symmetric = symmetric_split(a, b, gp);
    let (branch1, branch2, chosen) = match mode {
        AllocationMode::Uniform => ((symmetric, symmetric), (symmetric, symmetric), Branch::Branch1),
        AllocationMode::Lemma if m == 0 => ((symmetric, symmetric), (symmetric, symmetric), Branch::Branch1),
        AllocationMode::Lemma => {
            let mut best = None;
            for j in 0..m {
                let r = l.relays[j];
                let pairs = boundary_pairs(a, b, gp, r.sr, r.dr, th);
                let cand = choose_branch(pairs, |s, d| asymptotic_relay_outage(cfg, j, s, d))?;
                let (s, d) = cand.chosen_pair();
                let mut worst = 0.0f64;
                for i in 0..m {
                    worst = worst.max(asymptotic_relay_outage(cfg, i, s, d)?);
                }
                if best.as_ref().is_none_or(|(_, w)| worst < *w) {
                    best = Some((cand, worst));
                }
            }
            let (cand, _) = best.expect("m >= 1");
            (cand.branch1, cand.branch2, cand.chosen)
        }
    };
    let (rho_s, rho_d) = match chosen {
        Branch::Branch1 => branch1,
        Branch::Branch2 => branch2,
    };
    let alpha: Vec<f64> = match mode {
        AllocationMode::Uniform => vec![0.5; m],
        AllocationMode::Lemma => l
            .relays
            .iter()
            .zip(&rho_r)
            .map(|(r, &pr)| alpha_with_conventions(th, || RatioTerms::for_powers(th, l, *r, 1.0, rho_s, rho_d, pr)))
            .collect(),
    };
    let beta = alpha.iter().map(|a| 1.0 - a).collect();
    Ok(AsymptoticCoefficients { g_prime: gp, rho_s, rho_d, branch1, branch2, chosen, rho_r, alpha, beta })
}

/// Relay decoding failure in the limit, for power scalings `rho_s`, `rho_d`.
pub fn asymptotic_relay_outage(cfg: &ScenarioConfig, relay: usize, rho_s: f64, rho_d: f64) -> Result<f64> {
    if !(rho_s >= 0.0 && rho_d >= 0.0 && rho_s.is_finite() && rho_d.is_finite()) {
        return Err(Error::Validation(format!("power scalings must be finite and >= 0, got {rho_s}, {rho_d}")));
    }
    let r = cfg.links.relays.get(relay).ok_or_else(|| Error::Domain(format!("relay index {relay} out of range")))?;
    let th = cfg.thresholds();
    let means = RelayMeans { from_s: rho_s * r.sr, from_d: rho_d * r.dr, interference: r.ur };
    checked_probability(relay_outage_kernel(th.sum, th.source, th.dest, means, false), "asymptotic_relay_outage")
}

/// Direct-retransmission outage in the limit.
pub fn asymptotic_out_given_empty(cfg: &ScenarioConfig, rho_s: f64, rho_d: f64) -> Result<f64> {
    let th = cfg.thresholds();
    let l = &cfg.links;
    let to_s = direct_success(th.dest, rho_d * l.sd, l.us, false);
    let to_d = direct_success(th.source, rho_s * l.sd, l.ud, false);
    checked_probability(1.0 - to_s * to_d, "asymptotic_out_given_empty")
}

/// Outage floor for the given coefficients; independent of `P_u` and `N0`.
pub fn asymptotic_total_outage(cfg: &ScenarioConfig, coeffs: &AsymptoticCoefficients) -> Result<OutageBreakdown> {
    let m = cfg.relay_count();
    if m > M_MAX {
        return Err(Error::Capacity { relays: m, max: M_MAX });
    }
    if coeffs.rho_r.len() != m || coeffs.alpha.len() != m || coeffs.beta.len() != m {
        return Err(Error::Validation(format!("coefficients must cover {m} relays")));
    }
    let th = cfg.thresholds();
    let l = &cfg.links;
    let outs =
        (0..m).map(|i| asymptotic_relay_outage(cfg, i, coeffs.rho_s, coeffs.rho_d)).collect::<Result<Vec<_>>>()?;
    let p_empty = outs.iter().product::<f64>();
    let p_out_given_empty = asymptotic_out_given_empty(cfg, coeffs.rho_s, coeffs.rho_d)?;
    let side_s = Side { offset: 0.0, interference: th.dest * l.us, direct: coeffs.rho_d * l.sd };
    let side_d = Side { offset: 0.0, interference: th.source * l.ud, direct: coeffs.rho_s * l.sd };
    let to_s: Vec<f64> = l.relays.iter().enumerate().map(|(i, r)| coeffs.beta[i] * coeffs.rho_r[i] * r.sr).collect();
    let to_d: Vec<f64> = l.relays.iter().enumerate().map(|(i, r)| coeffs.alpha[i] * coeffs.rho_r[i] * r.dr).collect();
    let fwd = ForwardMeans { to_s: &to_s, to_d: &to_d };
    let per_subset = RelaySet::full(m)
        .nonempty_subsets()
        .map(|set| {
            let p_out = checked_probability(
                conditional_outage_kernel(set, &side_s, &side_d, &fwd),
                "asymptotic_out_given_set",
            )?;
            Ok(SubsetOutage { set, p_set: decoding_set_probability(&outs, set), p_out })
        })
        .collect::<Result<Vec<_>>>()?;
    assemble(p_empty, p_out_given_empty, per_subset)
}

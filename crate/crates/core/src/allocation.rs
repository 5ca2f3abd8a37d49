//! Secondary power allocation under the primary QoS constraint
//! `(1 + A P_s)(1 + B P_d) <= g`, relay power caps, forward power ratios and
//! statistical relay selection.

use serde::Serialize;

use crate::analytic::{compute_g, relay_outage_prob, st_outage_given_relay};
use crate::error::{Error, Result};
use crate::model::{LinkStats, PowerAllocation, RelaySet, ScenarioConfig, Thresholds};

/// Which closed-form pair on the constraint boundary was selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    /// Equal mean received SNR at `r_min`: `P_d / P_s = s_{s,r} / s_{d,r}`.
    Branch1,
    /// Stationary point of the high-SNR relay outage on the boundary.
    Branch2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StPowerCandidates {
    pub branch1: (f64, f64),
    pub branch2: (f64, f64),
    pub chosen: Branch,
    /// Exact relay outage of `r_min` at the chosen pair.
    pub achieved: f64,
}

impl StPowerCandidates {
    pub fn chosen_pair(&self) -> (f64, f64) {
        match self.chosen {
            Branch::Branch1 => self.branch1,
            Branch::Branch2 => self.branch2,
        }
    }
}

/// Constraint coefficients `A = D_u s_sv / (P_u s_uv)` and `B = D_u s_dv / (P_u s_uv)`.
pub fn constraint_coefficients(cfg: &ScenarioConfig) -> (f64, f64) {
    coefficients_for(cfg.thresholds().primary, &cfg.links, cfg.p_u)
}

pub(crate) fn coefficients_for(du: f64, links: &LinkStats, p_u: f64) -> (f64, f64) {
    (du * links.sv / (p_u * links.uv), du * links.dv / (p_u * links.uv))
}

/// Both boundary pairs for relay means `sr`, `dr`.
pub(crate) fn boundary_pairs(a: f64, b: f64, g: f64, sr: f64, dr: f64, th: Thresholds) -> [(f64, f64); 2] {
    let budget = g - 1.0;
    let k = sr / dr;
    let lin = a + b * k;
    let p1 = 2.0 * budget / (lin + (lin * lin + 4.0 * a * b * k * budget).sqrt());
    let branch1 = (p1, k * p1);
    let branch2 = match (th.source > 0.0, th.dest > 0.0) {
        (false, false) => branch1,
        (false, true) => (0.0, budget / b),
        (true, false) => (budget / a, 0.0),
        (true, true) => {
            let skew = th.dest * sr / (th.source * dr);
            let abg = a * b * g;
            (budget / ((skew * abg).sqrt() + a), budget / ((abg / skew).sqrt() + b))
        }
    };
    [branch1, branch2]
}

/// Picks the pair with the lower `outage`; ties go to branch 1.
pub(crate) fn choose_branch(
    pairs: [(f64, f64); 2],
    outage: impl Fn(f64, f64) -> Result<f64>,
) -> Result<StPowerCandidates> {
    let [branch1, branch2] = pairs;
    let o1 = outage(branch1.0, branch1.1)?;
    let o2 = outage(branch2.0, branch2.1)?;
    let (chosen, achieved) = if o2 < o1 { (Branch::Branch2, o2) } else { (Branch::Branch1, o1) };
    Ok(StPowerCandidates { branch1, branch2, chosen, achieved })
}

fn budget_checks(cfg: &ScenarioConfig) -> Result<f64> {
    if cfg.thresholds().primary == 0.0 {
        return Err(Error::UndefinedPowerCap);
    }
    let g = compute_g(cfg)?;
    if g <= 1.0 {
        return Err(Error::SecondaryForbidden);
    }
    Ok(g)
}

/// Transceiver powers minimizing the outage of relay `r_min`.
pub fn optimal_st_powers(cfg: &ScenarioConfig, r_min: usize) -> Result<StPowerCandidates> {
    let g = budget_checks(cfg)?;
    let r = cfg.links.relays.get(r_min).ok_or_else(|| Error::Domain(format!("relay index {r_min} out of range")))?;
    let (a, b) = constraint_coefficients(cfg);
    let pairs = boundary_pairs(a, b, g, r.sr, r.dr, cfg.thresholds());
    choose_branch(pairs, |p_s, p_d| relay_outage_prob(cfg, r_min, p_s, p_d))
}

/// Resolves `r_min` by trying every relay as the bottleneck and keeping the
/// allocation whose worst relay outage is smallest.
pub fn find_r_min(cfg: &ScenarioConfig) -> Result<(usize, StPowerCandidates)> {
    let m = cfg.relay_count();
    if m == 0 {
        return Err(Error::Domain("r_min needs at least one relay".into()));
    }
    let mut best: Option<(usize, StPowerCandidates, f64)> = None;
    for j in 0..m {
        let cand = optimal_st_powers(cfg, j)?;
        let (p_s, p_d) = cand.chosen_pair();
        let mut worst = 0.0f64;
        for i in 0..m {
            worst = worst.max(relay_outage_prob(cfg, i, p_s, p_d)?);
        }
        if best.as_ref().is_none_or(|b| worst < b.2) {
            best = Some((j, cand, worst));
        }
    }
    let (j, cand, _) = best.expect("m >= 1");
    Ok((j, cand))
}

/// Relay power saturating the primary QoS during the relay phase.
pub fn optimal_relay_power(cfg: &ScenarioConfig, relay: usize) -> Result<f64> {
    let du = cfg.thresholds().primary;
    if du == 0.0 {
        return Err(Error::UndefinedPowerCap);
    }
    let r = cfg.links.relays.get(relay).ok_or_else(|| Error::Domain(format!("relay index {relay} out of range")))?;
    let g = compute_g(cfg)?;
    Ok(cfg.p_u * cfg.links.uv / (du * r.rv) * (g - 1.0))
}

/// Constants of the interference-limited forward outage
/// `AA + BB - AA BB`, `AA = 1 / (a (1 + beta b))`, `BB = 1 / (c (1 + alpha d))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioTerms {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl RatioTerms {
    /// Requires `D_s, D_d > 0`.
    pub fn new(cfg: &ScenarioConfig, relay: usize, p_s: f64, p_d: f64, p_r: f64) -> Result<Self> {
        let th = cfg.thresholds();
        if th.source == 0.0 || th.dest == 0.0 {
            return Err(Error::Domain("ratio terms need D_s > 0 and D_d > 0".into()));
        }
        let r =
            cfg.links.relays.get(relay).ok_or_else(|| Error::Domain(format!("relay index {relay} out of range")))?;
        Ok(Self::for_powers(th, &cfg.links, *r, cfg.p_u, p_s, p_d, p_r))
    }

    pub(crate) fn for_powers(
        th: Thresholds,
        l: &LinkStats,
        r: crate::model::RelayLinks,
        p_u: f64,
        p_s: f64,
        p_d: f64,
        p_r: f64,
    ) -> Self {
        let to_s = p_u * th.dest * l.us;
        let to_d = p_u * th.source * l.ud;
        RatioTerms {
            a: 1.0 + p_d * l.sd / to_s,
            b: p_r * r.sr / to_s,
            c: 1.0 + p_s * l.sd / to_d,
            d: p_r * r.dr / to_d,
        }
    }

    pub fn outage(&self, alpha: f64) -> f64 {
        let aa = 1.0 / (self.a * (1.0 + (1.0 - alpha) * self.b));
        let bb = 1.0 / (self.c * (1.0 + alpha * self.d));
        aa + bb - aa * bb
    }

    /// Minimizer of [`RatioTerms::outage`] over `alpha` in `[0, 1]`.
    pub fn optimal_alpha(&self) -> f64 {
        let RatioTerms { a, b, c, d } = *self;
        let (ab, cd) = (a * b, c * d);
        let stationary = if (ab - cd).abs() <= 1e-12 * ab.max(cd) {
            (b * d + d - b) / (2.0 * b * d)
        } else {
            let sbd = (b * d).sqrt();
            let x = (ab + a + c - 1.0) * sbd;
            let y = ((ab - d + a * d + ab * d) * (b * c - b + cd + b * cd)).sqrt();
            (ab * b * d + 2.0 * ab * d + a * d - b * c - b * d + b - d) / (sbd * (x + y))
        };
        // The objective is unimodal in alpha; a stationary point outside the
        // unit interval puts the minimum on the nearer edge.
        stationary.clamp(0.0, 1.0)
    }
}

pub(crate) fn alpha_with_conventions(th: Thresholds, terms: impl FnOnce() -> RatioTerms) -> f64 {
    match (th.source > 0.0, th.dest > 0.0) {
        (false, false) => 0.5,
        // nothing to deliver to s: every watt goes towards d
        (true, false) => 1.0,
        (false, true) => 0.0,
        (true, true) => terms().optimal_alpha(),
    }
}

/// Forward power ratios `(alpha, beta)` for relay `relay`.
pub fn optimal_ratios(cfg: &ScenarioConfig, relay: usize, p_s: f64, p_d: f64, p_r: f64) -> Result<(f64, f64)> {
    if !(p_r > 0.0 && p_r.is_finite()) {
        return Err(Error::Domain(format!("relay power must be finite and > 0, got {p_r}")));
    }
    let r = *cfg.links.relays.get(relay).ok_or_else(|| Error::Domain(format!("relay index {relay} out of range")))?;
    let th = cfg.thresholds();
    let alpha = alpha_with_conventions(th, || RatioTerms::for_powers(th, &cfg.links, r, cfg.p_u, p_s, p_d, p_r));
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Numerical { context: "optimal_ratios", value: alpha });
    }
    Ok((alpha, 1.0 - alpha))
}

/// Relay of `set` with the smallest forward outage from statistics alone.
pub fn select_relay(cfg: &ScenarioConfig, set: RelaySet, alloc: &PowerAllocation) -> Result<usize> {
    if set.is_empty() {
        return Err(Error::Domain("cannot select from an empty decoding set".into()));
    }
    let mut best = (usize::MAX, f64::INFINITY);
    for i in set.iter() {
        let p = st_outage_given_relay(cfg, i, alloc)?;
        if p < best.1 || best.0 == usize::MAX {
            best = (i, p);
        }
    }
    Ok(best.0)
}

/// `P_s = P_d` on the constraint boundary.
pub(crate) fn symmetric_split(a: f64, b: f64, g: f64) -> f64 {
    let budget = g - 1.0;
    let lin = a + b;
    2.0 * budget / (lin + (lin * lin + 4.0 * a * b * budget).sqrt())
}

/// Complete allocation: `r_min` powers for the transceivers, capped relay
/// powers and optimal ratios for every relay.
pub fn full_allocation(cfg: &ScenarioConfig) -> Result<PowerAllocation> {
    let m = cfg.relay_count();
    let g = match budget_checks(cfg) {
        Err(Error::SecondaryForbidden) => return Ok(PowerAllocation::forbidden(m)),
        other => other?,
    };
    let (p_s, p_d) = if m == 0 {
        let (a, b) = constraint_coefficients(cfg);
        let p = symmetric_split(a, b, g);
        (p, p)
    } else {
        find_r_min(cfg)?.1.chosen_pair()
    };
    let mut alloc = PowerAllocation {
        p_s,
        p_d,
        p_r: Vec::with_capacity(m),
        alpha: Vec::with_capacity(m),
        beta: Vec::with_capacity(m),
        forbidden: false,
    };
    for i in 0..m {
        let p_r = optimal_relay_power(cfg, i)?;
        let (alpha, beta) = optimal_ratios(cfg, i, p_s, p_d, p_r)?;
        alloc.p_r.push(p_r);
        alloc.alpha.push(alpha);
        alloc.beta.push(beta);
    }
    Ok(alloc)
}

/// Baseline: `P_s = P_d` on the constraint boundary, relays at their caps,
/// even forward split.
pub fn uniform_allocation(cfg: &ScenarioConfig) -> Result<PowerAllocation> {
    let m = cfg.relay_count();
    let g = match budget_checks(cfg) {
        Err(Error::SecondaryForbidden) => return Ok(PowerAllocation::forbidden(m)),
        other => other?,
    };
    let (a, b) = constraint_coefficients(cfg);
    let p = symmetric_split(a, b, g);
    let p_r = (0..m).map(|i| optimal_relay_power(cfg, i)).collect::<Result<Vec<_>>>()?;
    Ok(PowerAllocation { p_s: p, p_d: p, p_r, alpha: vec![0.5; m], beta: vec![0.5; m], forbidden: false })
}

/// How secondary powers are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AllocationMode {
    Uniform,
    Lemma,
}

impl AllocationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AllocationMode::Uniform => "uniform",
            AllocationMode::Lemma => "lemma",
        }
    }
}

pub fn allocate(cfg: &ScenarioConfig, mode: AllocationMode) -> Result<PowerAllocation> {
    match mode {
        AllocationMode::Uniform => uniform_allocation(cfg),
        AllocationMode::Lemma => full_allocation(cfg),
    }
}

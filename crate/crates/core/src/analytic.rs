//! Exact outage probabilities of the cognitive two-way DF relay network.
//!
//! Phase 1: `s` and `d` transmit simultaneously; relay `r_i` decodes both
//! streams unless
//!
//! ```text
//! g_s + g_d < D   or   g_s < D_s   or   g_d < D_d,
//! g_x = gamma_x |h_{x,r}|^2 / (gamma_u |h_{u,r}|^2 + 1)
//! ```
//!
//! Phase 2: if no relay decoded, the transceivers repeat over the direct link
//! (MRC doubles the SNR); otherwise a decoding relay forwards with power
//! split `alpha` (towards `d`) and `beta` (towards `s`). Primary interference
//! `gamma_u |h_u|^2` enters every SINR denominator.
//!
//! `P(out | D = D_S)` assumes the best relay in `D_S` is used per channel
//! realization; outage requires every relay of the set to fail.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{OutageBreakdown, PowerAllocation, RelaySet, ScenarioConfig, SubsetOutage};
use crate::numeric::{checked_probability, exp_divided_difference, threshold_ratio, CompensatedSum};

/// Relative gap below which the two phase-1 mean SNRs are treated as equal.
pub const CASE_EPSILON: f64 = 1e-9;

/// Largest relay count accepted by exact subset enumeration.
pub const M_MAX: usize = 16;

/// `g = max(exp(-D_u / (gamma_u s_uv)) / (1 - P_th), 1)`.
///
/// `g == 1` means the primary QoS leaves no interference budget.
pub fn compute_g(cfg: &ScenarioConfig) -> Result<f64> {
    if !(cfg.p_th > 0.0 && cfg.p_th < 1.0) {
        return Err(Error::Validation(format!("P_th must lie in (0, 1), got {}", cfg.p_th)));
    }
    let du = cfg.thresholds().primary;
    let e = (-du / (cfg.gamma_u() * cfg.links.uv)).exp();
    Ok((e / (1.0 - cfg.p_th)).max(1.0))
}

/// Primary outage while `s` and `d` transmit with powers `p_s`, `p_d`.
pub fn primary_outage_phase1(cfg: &ScenarioConfig, p_s: f64, p_d: f64) -> Result<f64> {
    check_powers(&[p_s, p_d])?;
    let du = cfg.thresholds().primary;
    let l = &cfg.links;
    let m = cfg.gamma_u() * l.uv;
    let (gs, gd) = (p_s / cfg.n0, p_d / cfg.n0);
    let p = 1.0 - m * m * (-du / m).exp() / ((m + du * gs * l.sv) * (m + du * gd * l.dv));
    checked_probability(p, "primary_outage_phase1")
}

/// Primary outage while relay `relay` forwards with power `p_r`.
pub fn primary_outage_phase2(cfg: &ScenarioConfig, relay: usize, p_r: f64) -> Result<f64> {
    check_powers(&[p_r])?;
    let r = relay_links(cfg, relay)?;
    let du = cfg.thresholds().primary;
    let l = &cfg.links;
    let p = 1.0 - (-du * cfg.n0 / (cfg.p_u * l.uv)).exp() / (1.0 + du * p_r * r.rv / (cfg.p_u * l.uv));
    checked_probability(p, "primary_outage_phase2")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MeansCase {
    EqualMeans,
    DistinctMeans,
}

/// Constants of the relay-outage closed form for one relay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelayOutageTerms {
    pub case_tag: MeansCase,
    pub t: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Mean received SNRs seen by one relay in phase 1.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RelayMeans {
    /// mean of gamma_s |h_{s,r}|^2
    pub from_s: f64,
    /// mean of gamma_d |h_{d,r}|^2
    pub from_d: f64,
    /// mean of gamma_u |h_{u,r}|^2
    pub interference: f64,
}

pub(crate) fn means_case(from_s: f64, from_d: f64) -> MeansCase {
    if (from_s - from_d).abs() <= CASE_EPSILON * from_s.max(from_d) {
        MeansCase::EqualMeans
    } else {
        MeansCase::DistinctMeans
    }
}

fn relay_means(cfg: &ScenarioConfig, relay: usize, p_s: f64, p_d: f64) -> Result<RelayMeans> {
    let r = relay_links(cfg, relay)?;
    Ok(RelayMeans { from_s: p_s / cfg.n0 * r.sr, from_d: p_d / cfg.n0 * r.dr, interference: cfg.gamma_u() * r.ur })
}

pub fn relay_outage_terms(cfg: &ScenarioConfig, relay: usize, p_s: f64, p_d: f64) -> Result<RelayOutageTerms> {
    check_powers(&[p_s, p_d])?;
    let th = cfg.thresholds();
    let m = relay_means(cfg, relay, p_s, p_d)?;
    let case_tag = means_case(m.from_s, m.from_d);
    let t = 1.0 / (threshold_ratio(th.sum, m.from_d) + 1.0 / m.interference);
    let a = threshold_ratio(th.sum - th.dest, m.from_s) + threshold_ratio(th.dest, m.from_d);
    let b = threshold_ratio(th.source, m.from_s) + threshold_ratio(th.sum - th.source, m.from_d);
    let c = m.from_s / (m.from_s - m.from_d);
    Ok(RelayOutageTerms { case_tag, t, a, b, c })
}

/// Probability that relay `relay` fails to decode both phase-1 streams.
pub fn relay_outage_prob(cfg: &ScenarioConfig, relay: usize, p_s: f64, p_d: f64) -> Result<f64> {
    check_powers(&[p_s, p_d])?;
    let th = cfg.thresholds();
    let m = relay_means(cfg, relay, p_s, p_d)?;
    checked_probability(relay_outage_kernel(th.sum, th.source, th.dest, m, true), "relay_outage_prob")
}

/// Relay decoding failure for mean SNRs `m`.
///
/// With `with_noise` false the unit noise term is dropped, which is the
/// `gamma_u -> inf` limit when every mean is expressed relative to `gamma_u`.
pub(crate) fn relay_outage_kernel(sum: f64, source: f64, dest: f64, m: RelayMeans, with_noise: bool) -> f64 {
    if sum == 0.0 {
        return 0.0;
    }
    if (source > 0.0 && m.from_s == 0.0) || (dest > 0.0 && m.from_d == 0.0) || (m.from_s == 0.0 && m.from_d == 0.0) {
        return 1.0;
    }
    let w = m.interference;
    match means_case(m.from_s, m.from_d) {
        MeansCase::EqualMeans => {
            let mean = m.from_d;
            if with_noise {
                let t = 1.0 / (sum / mean + 1.0 / w);
                1.0 - t / w * (-sum / mean).exp() * (1.0 + source * dest * (1.0 + t) / mean)
            } else {
                let (p, q) = (w, mean);
                (sum * sum * p * p + (source + dest) * p * q) / (sum * p + q).powi(2)
            }
        }
        MeansCase::DistinctMeans => {
            let a = threshold_ratio(sum - dest, m.from_s) + threshold_ratio(dest, m.from_d);
            let b = threshold_ratio(source, m.from_s) + threshold_ratio(sum - source, m.from_d);
            // C e^{-A}/(1+wA) + (1-C) e^{-B}/(1+wB), rewritten around the divided
            // difference of e^{-x}/(1+wx) so that the large C never multiplies a
            // cancelling difference.
            let (eb, dd) = if with_noise { ((-b).exp(), exp_divided_difference(a, b)) } else { (1.0, 0.0) };
            let fb = eb / (1.0 + w * b);
            // -(F(A) - F(B)) / (A - B) for F(x) = e^{-x} / (1 + w x)
            let neg_slope = (dd * (1.0 + w * b) + w * eb) / ((1.0 + w * a) * (1.0 + w * b));
            let coupling = source * dest / m.from_d;
            let success = if coupling == 0.0 { fb } else { fb + coupling * neg_slope };
            1.0 - success
        }
    }
}

/// Outage of the secondary exchange when relay `relay` forwards, valid as `N0 -> 0`:
/// `AA + BB - AA BB` with `AA`, `BB` the per-direction failure probabilities.
pub fn st_outage_given_relay(cfg: &ScenarioConfig, relay: usize, alloc: &PowerAllocation) -> Result<f64> {
    alloc.validate_shape(cfg.relay_count())?;
    let r = relay_links(cfg, relay)?;
    let th = cfg.thresholds();
    let l = &cfg.links;
    let p_r = alloc.p_r[relay];
    let to_s =
        interference_limited_failure(th.dest, cfg.p_u * l.us, &[alloc.p_d * l.sd, alloc.beta[relay] * p_r * r.sr]);
    let to_d =
        interference_limited_failure(th.source, cfg.p_u * l.ud, &[alloc.p_s * l.sd, alloc.alpha[relay] * p_r * r.dr]);
    checked_probability(to_s + to_d - to_s * to_d, "st_outage_given_relay")
}

/// `P(sum_k X_k < threshold * W)` for independent exponentials `X_k` with the
/// given means and an exponential interferer `W` with mean `interference`.
fn interference_limited_failure(threshold: f64, interference: f64, signal_means: &[f64]) -> f64 {
    if threshold == 0.0 {
        return 0.0;
    }
    signal_means.iter().map(|&s| 1.0 / (1.0 + s / (threshold * interference))).product()
}

/// `P(D = {})`: every relay fails to decode.
pub fn p_empty_set(cfg: &ScenarioConfig, p_s: f64, p_d: f64) -> Result<f64> {
    let outs = relay_outages(cfg, p_s, p_d)?;
    Ok(outs.iter().product())
}

/// Outage of the direct retransmission used when no relay decoded.
pub fn p_out_given_empty(cfg: &ScenarioConfig, p_s: f64, p_d: f64) -> Result<f64> {
    check_powers(&[p_s, p_d])?;
    let th = cfg.thresholds();
    let l = &cfg.links;
    let gu = cfg.gamma_u();
    let to_s = direct_success(th.dest, p_d / cfg.n0 * l.sd, gu * l.us, true);
    let to_d = direct_success(th.source, p_s / cfg.n0 * l.sd, gu * l.ud, true);
    checked_probability(1.0 - to_s * to_d, "p_out_given_empty")
}

/// `P(2 X > threshold (W + 1))` with `X`, `W` exponential of the given means
/// (the `+ 1` noise term is dropped when `with_noise` is false).
pub(crate) fn direct_success(threshold: f64, signal: f64, interference: f64, with_noise: bool) -> f64 {
    if threshold == 0.0 {
        return 1.0;
    }
    if signal == 0.0 {
        return 0.0;
    }
    let noise = if with_noise { (-threshold / (2.0 * signal)).exp() } else { 1.0 };
    2.0 * signal * noise / (2.0 * signal + threshold * interference)
}

/// `P(D = D_S)` for decoding set `set`.
pub fn p_decoding_set(cfg: &ScenarioConfig, set: RelaySet, p_s: f64, p_d: f64) -> Result<f64> {
    check_set(cfg, set)?;
    let outs = relay_outages(cfg, p_s, p_d)?;
    Ok(decoding_set_probability(&outs, set))
}

pub(crate) fn decoding_set_probability(outs: &[f64], set: RelaySet) -> f64 {
    outs.iter().enumerate().map(|(i, &p)| if set.contains(i) { 1.0 - p } else { p }).product()
}

fn relay_outages(cfg: &ScenarioConfig, p_s: f64, p_d: f64) -> Result<Vec<f64>> {
    (0..cfg.relay_count()).map(|i| relay_outage_prob(cfg, i, p_s, p_d)).collect()
}

/// One side of the phase-2 exchange as seen by the receiving transceiver.
///
/// The failure margin is `X = offset + U - V`, where `U` is the scaled primary
/// interference (mean `interference`) and `V` the direct-link contribution
/// (mean `direct`); relay `i` rescues the side when its forward SNR exceeds `X`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Side {
    pub offset: f64,
    pub interference: f64,
    pub direct: f64,
}

/// Closed-form terms of one non-empty sub-subset `D_C` of the decoding set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubsetTerms {
    pub set: RelaySet,
    pub omega: f64,
    pub xi: f64,
    pub lambda: f64,
    pub psi: f64,
}

impl SubsetTerms {
    /// Cardinality `E` of the sub-subset.
    pub fn size(&self) -> usize {
        self.set.len()
    }
}

impl Side {
    /// `(Omega, Lambda)` for total forward rate `rate = sum_i 1 / (forward mean)_i`.
    fn terms(&self, rate: f64) -> (f64, f64) {
        let Side { offset, interference: mu_u, direct: mu_v } = *self;
        let decay = threshold_ratio(offset, mu_v);
        let lambda = if mu_v == 0.0 { 0.0 } else { mu_v * (-decay).exp() };
        let rate_offset = if offset == 0.0 { 0.0 } else { rate * offset };
        let first = if offset == 0.0 { 0.0 } else { offset * exp_divided_difference(decay, rate_offset) };
        let second = if mu_u == 0.0 { 0.0 } else { (-rate_offset).exp() / (rate + 1.0 / mu_u) };
        (first + second, lambda)
    }

    fn normaliser(&self) -> f64 {
        self.interference + self.direct
    }

    /// `E[exp(-rate * max(X, 0))]`.
    fn laplace_positive_part(&self, rate: f64) -> f64 {
        let total = self.normaliser();
        if total == 0.0 {
            // X = offset almost surely
            return if self.offset == 0.0 { 1.0 } else { (-rate * self.offset).exp() };
        }
        let (omega, lambda) = self.terms(rate);
        (omega + lambda) / total
    }
}

/// Per-relay forward means `(towards s, towards d)` restricted to the decoding set.
pub(crate) struct ForwardMeans<'a> {
    pub to_s: &'a [f64],
    pub to_d: &'a [f64],
}

fn rate_over(set: RelaySet, means: &[f64]) -> f64 {
    set.iter().map(|i| 1.0 / means[i]).sum()
}

pub(crate) fn subset_terms_kernel(dc: RelaySet, side_s: &Side, side_d: &Side, fwd: &ForwardMeans) -> SubsetTerms {
    let (omega, lambda) = side_s.terms(rate_over(dc, fwd.to_s));
    let (xi, psi) = side_d.terms(rate_over(dc, fwd.to_d));
    SubsetTerms { set: dc, omega, xi, lambda, psi }
}

/// `1 + sum_{D_C} (-1)^E E[e^{-S_s X+}] E[e^{-S_d Y+}]`, accumulated in ascending
/// mask order with compensation.
pub(crate) fn conditional_outage_kernel(set: RelaySet, side_s: &Side, side_d: &Side, fwd: &ForwardMeans) -> f64 {
    let mut acc = CompensatedSum::new();
    acc.add(1.0);
    for dc in set.nonempty_subsets() {
        let ex = side_s.laplace_positive_part(rate_over(dc, fwd.to_s));
        let ey = side_d.laplace_positive_part(rate_over(dc, fwd.to_d));
        let sign = if dc.len() % 2 == 1 { -1.0 } else { 1.0 };
        acc.add(sign * ex * ey);
    }
    acc.value()
}

struct Phase2 {
    side_s: Side,
    side_d: Side,
    to_s: Vec<f64>,
    to_d: Vec<f64>,
}

impl Phase2 {
    fn new(cfg: &ScenarioConfig, alloc: &PowerAllocation) -> Result<Self> {
        alloc.validate_shape(cfg.relay_count())?;
        let th = cfg.thresholds();
        let l = &cfg.links;
        let gu = cfg.gamma_u();
        let side_s = Side { offset: th.dest, interference: th.dest * gu * l.us, direct: alloc.p_d / cfg.n0 * l.sd };
        let side_d = Side { offset: th.source, interference: th.source * gu * l.ud, direct: alloc.p_s / cfg.n0 * l.sd };
        let to_s = l.relays.iter().enumerate().map(|(i, r)| alloc.beta[i] * alloc.p_r[i] / cfg.n0 * r.sr).collect();
        let to_d = l.relays.iter().enumerate().map(|(i, r)| alloc.alpha[i] * alloc.p_r[i] / cfg.n0 * r.dr).collect();
        Ok(Self { side_s, side_d, to_s, to_d })
    }

    fn forward(&self) -> ForwardMeans<'_> {
        ForwardMeans { to_s: &self.to_s, to_d: &self.to_d }
    }

    fn out_given_set(&self, set: RelaySet) -> Result<f64> {
        let p = conditional_outage_kernel(set, &self.side_s, &self.side_d, &self.forward());
        checked_probability(p, "p_out_given_set")
    }
}

/// `Omega, Xi, Lambda, Psi` for every non-empty sub-subset of `set`, ascending.
pub fn subset_terms(cfg: &ScenarioConfig, set: RelaySet, alloc: &PowerAllocation) -> Result<Vec<SubsetTerms>> {
    check_set(cfg, set)?;
    let p2 = Phase2::new(cfg, alloc)?;
    let fwd = p2.forward();
    Ok(set.nonempty_subsets().map(|dc| subset_terms_kernel(dc, &p2.side_s, &p2.side_d, &fwd)).collect())
}

/// Secondary outage given that exactly the relays in `set` decoded.
pub fn p_out_given_set(cfg: &ScenarioConfig, set: RelaySet, alloc: &PowerAllocation) -> Result<f64> {
    check_set(cfg, set)?;
    if set.is_empty() {
        return Err(Error::Domain("empty decoding set: use p_out_given_empty".into()));
    }
    Phase2::new(cfg, alloc)?.out_given_set(set)
}

/// Total secondary outage over all decoding sets.
pub fn total_outage(cfg: &ScenarioConfig, alloc: &PowerAllocation) -> Result<OutageBreakdown> {
    let m = cfg.relay_count();
    if m > M_MAX {
        return Err(Error::Capacity { relays: m, max: M_MAX });
    }
    let phase2 = Phase2::new(cfg, alloc)?;
    let outs = relay_outages(cfg, alloc.p_s, alloc.p_d)?;
    let p_empty = outs.iter().product::<f64>();
    let p_out_given_empty = p_out_given_empty(cfg, alloc.p_s, alloc.p_d)?;
    let per_subset = RelaySet::full(m)
        .nonempty_subsets()
        .map(|set| {
            Ok(SubsetOutage { set, p_set: decoding_set_probability(&outs, set), p_out: phase2.out_given_set(set)? })
        })
        .collect::<Result<Vec<_>>>()?;
    assemble(p_empty, p_out_given_empty, per_subset)
}

pub(crate) fn assemble(p_empty: f64, p_out_given_empty: f64, per_subset: Vec<SubsetOutage>) -> Result<OutageBreakdown> {
    let mut acc = CompensatedSum::new();
    acc.add(p_empty * p_out_given_empty);
    for s in &per_subset {
        acc.add(s.p_set * s.p_out);
    }
    let p_total = checked_probability(acc.value(), "total_outage")?;
    Ok(OutageBreakdown { p_empty, p_out_given_empty, per_subset, p_total })
}

fn relay_links(cfg: &ScenarioConfig, relay: usize) -> Result<crate::model::RelayLinks> {
    cfg.links
        .relays
        .get(relay)
        .copied()
        .ok_or_else(|| Error::Domain(format!("relay index {relay} out of range for M = {}", cfg.relay_count())))
}

fn check_set(cfg: &ScenarioConfig, set: RelaySet) -> Result<()> {
    if set.is_subset_of(RelaySet::full(cfg.relay_count())) {
        Ok(())
    } else {
        Err(Error::Domain(format!("decoding set {set} not within M = {} relays", cfg.relay_count())))
    }
}

fn check_powers(powers: &[f64]) -> Result<()> {
    if powers.iter().all(|p| p.is_finite() && *p >= 0.0) {
        Ok(())
    } else {
        Err(Error::Validation(format!("powers must be finite and >= 0, got {powers:?}")))
    }
}

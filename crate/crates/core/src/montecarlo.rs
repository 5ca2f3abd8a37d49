//! Event-level Monte Carlo over Rayleigh block fading.
//!
//! Each trial draws every channel gain once and replays the whole protocol:
//! relay decoding, direct retransmission or relay forwarding, and the primary
//! receiver's SINR in both phases. Trial `t` uses its own ChaCha stream keyed
//! by `(seed, t)`, so results do not depend on thread count and trials pair up
//! across selection modes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use crate::allocation::{constraint_coefficients, RatioTerms};
use crate::analytic::{compute_g, st_outage_given_relay, total_outage, M_MAX};
use crate::error::{Error, Result};
use crate::model::{PowerAllocation, RelaySet, ScenarioConfig, Thresholds};

pub const MIN_TRIALS: u64 = 1_000;
pub const MIN_CONDITIONING: u64 = 100;
const CHUNK: u64 = 1 << 14;

/// How the forwarding relay is picked from the decoding set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMode {
    /// Fixed ranking from statistics: the decoder with the smallest
    /// interference-limited forward outage.
    Statistical,
    /// Per realization: outage only if every decoder fails.
    Opportunistic,
}

impl SelectionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SelectionMode::Statistical => "statistical",
            SelectionMode::Opportunistic => "opportunistic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Target {
    SecondaryOutage,
    PrimaryP1,
    PrimaryP2,
    RelayOutage(usize),
    DecodeSet(RelaySet),
    /// Secondary outage conditioned on the decoding set; the empty set selects
    /// the direct-retransmission case.
    OutGivenSet(RelaySet),
    /// Forward failure when relay `i` forwards, regardless of whether it decoded.
    StOutageGivenRelay(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub p_hat: f64,
    /// Samples behind `p_hat` (the conditioning count for conditional targets).
    pub trials: u64,
    pub std_err: f64,
    pub seed: u64,
    pub mode: SelectionMode,
}

impl McEstimate {
    fn from_counts(hits: u64, trials: u64, seed: u64, mode: SelectionMode) -> Self {
        let p_hat = hits as f64 / trials as f64;
        let std_err = (p_hat * (1.0 - p_hat) / trials as f64).sqrt();
        McEstimate { p_hat, trials, std_err, seed, mode }
    }

    /// `|p_hat - reference|` in standard errors; exact agreement with a zero SE counts as 0.
    pub fn z_score(&self, reference: f64) -> f64 {
        let gap = (self.p_hat - reference).abs();
        if gap == 0.0 {
            0.0
        } else {
            gap / self.std_err
        }
    }
}

/// One realization of every channel power gain.
///
/// Links that carry signals in both directions are drawn once per direction,
/// so `s -> d` and `d -> s` (and a relay's receive and forward links) fade
/// independently. Interference links are single draws shared by both phases.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDraw {
    gains: Vec<f64>,
}

const UV: usize = 0;
const SV: usize = 1;
const DV: usize = 2;
const US: usize = 3;
const UD: usize = 4;
const SD: usize = 5;
const DS: usize = 6;
const PER_RELAY: usize = 6;
const RELAY_BASE: usize = 7;

impl ChannelDraw {
    pub fn link_count(m: usize) -> usize {
        RELAY_BASE + PER_RELAY * m
    }

    /// Draws every gain from an exponential with the configured mean.
    pub fn sample<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Self {
        let mut gains = Vec::with_capacity(Self::link_count(cfg.relay_count()));
        Self::fill(cfg, rng, &mut gains);
        ChannelDraw { gains }
    }

    fn fill<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R, gains: &mut Vec<f64>) {
        let l = &cfg.links;
        gains.clear();
        let mut push = |mean: f64| {
            let e: f64 = rng.sample(Exp1);
            gains.push(e * mean);
        };
        for mean in [l.uv, l.sv, l.dv, l.us, l.ud, l.sd, l.sd] {
            push(mean);
        }
        for r in &l.relays {
            for mean in [r.sr, r.dr, r.ur, r.rv, r.sr, r.dr] {
                push(mean);
            }
        }
    }

    pub fn uv(&self) -> f64 {
        self.gains[UV]
    }
    pub fn sv(&self) -> f64 {
        self.gains[SV]
    }
    pub fn dv(&self) -> f64 {
        self.gains[DV]
    }
    pub fn us(&self) -> f64 {
        self.gains[US]
    }
    pub fn ud(&self) -> f64 {
        self.gains[UD]
    }
    /// `s -> d`
    pub fn sd(&self) -> f64 {
        self.gains[SD]
    }
    /// `d -> s`
    pub fn ds(&self) -> f64 {
        self.gains[DS]
    }
    /// `s -> r_i`, `d -> r_i`, `u -> r_i`, `r_i -> v`, `r_i -> s`, `r_i -> d`
    pub fn relay(&self, i: usize) -> [f64; 6] {
        let b = RELAY_BASE + PER_RELAY * i;
        [self.gains[b], self.gains[b + 1], self.gains[b + 2], self.gains[b + 3], self.gains[b + 4], self.gains[b + 5]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrialOutcome {
    pub secondary_outage: bool,
    pub primary_outage_phase1: bool,
    pub primary_outage_phase2: bool,
    pub decode_mask: RelaySet,
    /// Relays whose forwarding would leave the exchange in outage.
    pub forward_failures: RelaySet,
}

/// Precomputed SNRs and selection order for one `(cfg, alloc, mode)`.
#[derive(Debug, Clone)]
pub struct Simulator {
    th: Thresholds,
    gamma_u: f64,
    gamma_s: f64,
    gamma_d: f64,
    gamma_r: Vec<f64>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    mode: SelectionMode,
    /// Relay indices sorted by statistical preference.
    ranking: Vec<usize>,
}

impl Simulator {
    pub fn new(cfg: &ScenarioConfig, alloc: &PowerAllocation, mode: SelectionMode) -> Result<Self> {
        let m = cfg.relay_count();
        if m > 32 {
            return Err(Error::Capacity { relays: m, max: 32 });
        }
        alloc.validate_shape(m)?;
        let scores = (0..m).map(|i| st_outage_given_relay(cfg, i, alloc)).collect::<Result<Vec<_>>>()?;
        let mut ranking: Vec<usize> = (0..m).collect();
        ranking.sort_by(|&x, &y| scores[x].total_cmp(&scores[y]).then(x.cmp(&y)));
        Ok(Simulator {
            th: cfg.thresholds(),
            gamma_u: cfg.gamma_u(),
            gamma_s: alloc.p_s / cfg.n0,
            gamma_d: alloc.p_d / cfg.n0,
            gamma_r: alloc.p_r.iter().map(|p| p / cfg.n0).collect(),
            alpha: alloc.alpha.clone(),
            beta: alloc.beta.clone(),
            mode,
            ranking,
        })
    }

    pub fn relay_count(&self) -> usize {
        self.gamma_r.len()
    }

    /// Replays one realization of the protocol.
    pub fn simulate_trial(&self, draw: &ChannelDraw) -> TrialOutcome {
        let th = self.th;
        let m = self.relay_count();
        let noise_s = self.gamma_u * draw.us() + 1.0;
        let noise_d = self.gamma_u * draw.ud() + 1.0;

        let mut decode_mask = RelaySet::EMPTY;
        let mut forward_failures = RelaySet::EMPTY;
        for i in 0..m {
            let [sr, dr, ur, _, rs, rd] = draw.relay(i);
            let noise_r = self.gamma_u * ur + 1.0;
            let gs = self.gamma_s * sr / noise_r;
            let gd = self.gamma_d * dr / noise_r;
            if !(gs + gd < th.sum || gs < th.source || gd < th.dest) {
                decode_mask = decode_mask.with(i);
            }
            let at_s = self.gamma_d * draw.ds() + self.beta[i] * self.gamma_r[i] * rs;
            let at_d = self.gamma_s * draw.sd() + self.alpha[i] * self.gamma_r[i] * rd;
            if at_s < th.dest * noise_s || at_d < th.source * noise_d {
                forward_failures = forward_failures.with(i);
            }
        }

        let interference_v = self.gamma_s * draw.sv() + self.gamma_d * draw.dv() + 1.0;
        let primary_outage_phase1 = self.gamma_u * draw.uv() < th.primary * interference_v;

        let (secondary_outage, primary_outage_phase2) = if decode_mask.is_empty() {
            let fail_s = 2.0 * self.gamma_d * draw.ds() < th.dest * noise_s;
            let fail_d = 2.0 * self.gamma_s * draw.sd() < th.source * noise_d;
            (fail_s || fail_d, primary_outage_phase1)
        } else {
            let forwarder = match self.mode {
                SelectionMode::Statistical => {
                    *self.ranking.iter().find(|&&i| decode_mask.contains(i)).expect("mask is non-empty")
                }
                SelectionMode::Opportunistic => decode_mask
                    .iter()
                    .find(|&i| !forward_failures.contains(i))
                    .unwrap_or_else(|| decode_mask.iter().next().expect("mask is non-empty")),
            };
            let rv = draw.relay(forwarder)[3];
            let p2 = self.gamma_u * draw.uv() < th.primary * (self.gamma_r[forwarder] * rv + 1.0);
            (forward_failures.contains(forwarder), p2)
        };

        TrialOutcome { secondary_outage, primary_outage_phase1, primary_outage_phase2, decode_mask, forward_failures }
    }
}

/// Event counts from one simulation run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tally {
    pub trials: u64,
    pub secondary: u64,
    pub primary_p1: u64,
    pub primary_p2: u64,
    pub relay_out: Vec<u64>,
    pub forward_fail: Vec<u64>,
    /// Per decode mask: (occurrences, secondary outages). Empty when M > [`M_MAX`].
    pub masks: Vec<(u64, u64)>,
    pub seed: u64,
    pub mode: SelectionMode,
}

impl Tally {
    fn empty(m: usize, seed: u64, mode: SelectionMode) -> Self {
        let masks = if m <= M_MAX { vec![(0, 0); 1 << m] } else { Vec::new() };
        Tally {
            trials: 0,
            secondary: 0,
            primary_p1: 0,
            primary_p2: 0,
            relay_out: vec![0; m],
            forward_fail: vec![0; m],
            masks,
            seed,
            mode,
        }
    }

    fn record(&mut self, o: &TrialOutcome) {
        self.trials += 1;
        self.secondary += o.secondary_outage as u64;
        self.primary_p1 += o.primary_outage_phase1 as u64;
        self.primary_p2 += o.primary_outage_phase2 as u64;
        for i in 0..self.relay_out.len() {
            self.relay_out[i] += !o.decode_mask.contains(i) as u64;
            self.forward_fail[i] += o.forward_failures.contains(i) as u64;
        }
        if let Some(slot) = self.masks.get_mut(o.decode_mask.0 as usize) {
            slot.0 += 1;
            slot.1 += o.secondary_outage as u64;
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.trials += other.trials;
        self.secondary += other.secondary;
        self.primary_p1 += other.primary_p1;
        self.primary_p2 += other.primary_p2;
        for (a, b) in self.relay_out.iter_mut().zip(other.relay_out) {
            *a += b;
        }
        for (a, b) in self.forward_fail.iter_mut().zip(other.forward_fail) {
            *a += b;
        }
        for (a, b) in self.masks.iter_mut().zip(other.masks) {
            a.0 += b.0;
            a.1 += b.1;
        }
        self
    }

    fn relay_count(&self) -> usize {
        self.relay_out.len()
    }

    fn mask_slot(&self, set: RelaySet) -> Result<(u64, u64)> {
        let m = self.relay_count();
        if m > M_MAX {
            return Err(Error::Capacity { relays: m, max: M_MAX });
        }
        if !set.is_subset_of(RelaySet::full(m)) {
            return Err(Error::Domain(format!("decoding set {set} not within M = {m} relays")));
        }
        Ok(self.masks[set.0 as usize])
    }

    fn relay_index(&self, i: usize) -> Result<usize> {
        if i < self.relay_count() {
            Ok(i)
        } else {
            Err(Error::Domain(format!("relay index {i} out of range for M = {}", self.relay_count())))
        }
    }

    pub fn estimate(&self, target: Target) -> Result<McEstimate> {
        let n = self.trials;
        let (hits, trials) = match target {
            Target::SecondaryOutage => (self.secondary, n),
            Target::PrimaryP1 => (self.primary_p1, n),
            Target::PrimaryP2 => (self.primary_p2, n),
            Target::RelayOutage(i) => (self.relay_out[self.relay_index(i)?], n),
            Target::StOutageGivenRelay(i) => (self.forward_fail[self.relay_index(i)?], n),
            Target::DecodeSet(set) => (self.mask_slot(set)?.0, n),
            Target::OutGivenSet(set) => {
                let (seen, out) = self.mask_slot(set)?;
                if seen < MIN_CONDITIONING {
                    return Err(Error::InsufficientConditioning { observed: seen, required: MIN_CONDITIONING });
                }
                (out, seen)
            }
        };
        Ok(McEstimate::from_counts(hits, trials, self.seed, self.mode))
    }
}

/// Runs `n_trials` trials and counts every event of interest in one pass.
pub fn run(
    cfg: &ScenarioConfig,
    alloc: &PowerAllocation,
    n_trials: u64,
    seed: u64,
    mode: SelectionMode,
) -> Result<Tally> {
    if n_trials < MIN_TRIALS {
        return Err(Error::Validation(format!("need at least {MIN_TRIALS} trials, got {n_trials}")));
    }
    let sim = Simulator::new(cfg, alloc, mode)?;
    let m = cfg.relay_count();
    let base = ChaCha8Rng::seed_from_u64(seed);
    let chunks = n_trials.div_ceil(CHUNK);
    let tally = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut t = Tally::empty(m, seed, mode);
            let mut draw = ChannelDraw { gains: Vec::with_capacity(ChannelDraw::link_count(m)) };
            let end = ((c + 1) * CHUNK).min(n_trials);
            for trial in c * CHUNK..end {
                let mut rng = base.clone();
                rng.set_stream(trial);
                ChannelDraw::fill(cfg, &mut rng, &mut draw.gains);
                t.record(&sim.simulate_trial(&draw));
            }
            t
        })
        .reduce(|| Tally::empty(m, seed, mode), Tally::merge);
    Ok(tally)
}

/// Single-target convenience over [`run`].
pub fn estimate(
    cfg: &ScenarioConfig,
    alloc: &PowerAllocation,
    n_trials: u64,
    seed: u64,
    mode: SelectionMode,
    target: Target,
) -> Result<McEstimate> {
    run(cfg, alloc, n_trials, seed, mode)?.estimate(target)
}

/// What the exhaustive search minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SearchObjective {
    /// Total secondary outage over the joint (power, common ratio) grid.
    TotalOutage,
    /// Worst relay outage for the powers, then each relay's forward outage for its ratio.
    Staged,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub p_s: f64,
    pub p_d: f64,
    pub alpha: Vec<f64>,
    /// Total secondary outage at the returned point.
    pub outage: f64,
    /// Spacing of the `P_s` and `P_d` boundary samples.
    pub cell_p_s: f64,
    pub cell_p_d: f64,
    pub cell_alpha: f64,
}

/// Points `k = 0..=resolution` on the constraint boundary, uniformly spaced in `P_s`.
pub fn boundary_grid(cfg: &ScenarioConfig, resolution: usize) -> Result<Vec<(f64, f64)>> {
    let g = compute_g(cfg)?;
    if g <= 1.0 {
        return Err(Error::SecondaryForbidden);
    }
    let (a, b) = constraint_coefficients(cfg);
    if a == 0.0 || b == 0.0 {
        return Err(Error::UndefinedPowerCap);
    }
    let ps_max = (g - 1.0) / a;
    Ok((0..=resolution)
        .map(|k| {
            let p_s = ps_max * k as f64 / resolution as f64;
            let p_d = ((g / (1.0 + a * p_s) - 1.0) / b).max(0.0);
            (p_s, p_d)
        })
        .collect())
}

/// Brute-force minimizer over the constraint boundary and forward ratios.
///
/// Relay powers sit at their caps in every candidate.
pub fn exhaustive_power_search(
    cfg: &ScenarioConfig,
    resolution: usize,
    alpha_points: usize,
    objective: SearchObjective,
) -> Result<SearchResult> {
    if resolution < 50 || alpha_points < 2 {
        return Err(Error::Validation(format!(
            "grid too coarse: {resolution} power points (>= 50), {alpha_points} ratio points (>= 2)"
        )));
    }
    let m = cfg.relay_count();
    let grid = boundary_grid(cfg, resolution)?;
    let p_r = (0..m).map(|i| crate::allocation::optimal_relay_power(cfg, i)).collect::<Result<Vec<_>>>()?;
    let alphas: Vec<f64> = (0..alpha_points).map(|k| k as f64 / (alpha_points - 1) as f64).collect();
    let with = |p_s: f64, p_d: f64, alpha: Vec<f64>| PowerAllocation {
        p_s,
        p_d,
        p_r: p_r.clone(),
        beta: alpha.iter().map(|a| 1.0 - a).collect(),
        alpha,
        forbidden: false,
    };

    let (p_s, p_d, alpha) = match objective {
        SearchObjective::TotalOutage => {
            let scores = grid
                .par_iter()
                .map(|&(p_s, p_d)| {
                    let mut best = (f64::INFINITY, 0usize);
                    for (j, &a) in alphas.iter().enumerate() {
                        let o = total_outage(cfg, &with(p_s, p_d, vec![a; m]))?.p_total;
                        if o < best.0 {
                            best = (o, j);
                        }
                    }
                    Ok(best)
                })
                .collect::<Result<Vec<_>>>()?;
            let k = argmin(scores.iter().map(|s| s.0));
            let (p_s, p_d) = grid[k];
            (p_s, p_d, vec![alphas[scores[k].1]; m])
        }
        SearchObjective::Staged => {
            let worst = grid
                .par_iter()
                .map(|&(p_s, p_d)| {
                    (0..m).try_fold(0.0f64, |w, i| Ok(w.max(crate::analytic::relay_outage_prob(cfg, i, p_s, p_d)?)))
                })
                .collect::<Result<Vec<_>>>()?;
            let (p_s, p_d) = grid[argmin(worst.into_iter())];
            let th = cfg.thresholds();
            let alpha = (0..m)
                .map(|i| {
                    if th.source == 0.0 || th.dest == 0.0 || p_r[i] == 0.0 {
                        return Ok(crate::allocation::optimal_ratios(cfg, i, p_s, p_d, p_r[i])?.0);
                    }
                    let terms = RatioTerms::new(cfg, i, p_s, p_d, p_r[i])?;
                    Ok(alphas[argmin(alphas.iter().map(|&a| terms.outage(a)))])
                })
                .collect::<Result<Vec<_>>>()?;
            (p_s, p_d, alpha)
        }
    };
    let outage = total_outage(cfg, &with(p_s, p_d, alpha.clone()))?.p_total;
    let cell_p_s = grid[1].0 - grid[0].0;
    let cell_p_d = grid[0].1 / resolution as f64;
    Ok(SearchResult { p_s, p_d, alpha, outage, cell_p_s, cell_p_d, cell_alpha: 1.0 / (alpha_points - 1) as f64 })
}

/// First index of the smallest value.
fn argmin(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, v) in values.enumerate() {
        if v < best.1 {
            best = (i, v);
        }
    }
    best.0
}

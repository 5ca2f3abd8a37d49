//! Network description: link statistics, scenario configuration, allocations
//! and the outage breakdown shared by the analysis modules.
//!
//! Mean channel gains are stored linearly. A link's gain `|h|^2` is
//! exponential with mean `sigma^2`, so `gamma * sigma^2` is a mean received SNR.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used by the allocation predicates.
pub const CONSTRAINT_TOLERANCE: f64 = 1e-9;

pub fn db_to_linear(x_db: f64) -> Result<f64> {
    if !x_db.is_finite() {
        return Err(Error::Validation(format!("non-finite dB value {x_db}")));
    }
    Ok(10f64.powf(x_db / 10.0))
}

pub fn linear_to_db(x: f64) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::Validation(format!("cannot express {x} in dB")));
    }
    Ok(10.0 * x.log10())
}

/// A node of the network: primary pair `u -> v`, secondary transceivers `s`, `d`,
/// and relays `r1..rM` (stored zero-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    U,
    V,
    S,
    D,
    Relay(usize),
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::U => f.write_str("u"),
            Node::V => f.write_str("v"),
            Node::S => f.write_str("s"),
            Node::D => f.write_str("d"),
            Node::Relay(i) => write!(f, "r{}", i + 1),
        }
    }
}

impl FromStr for Node {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "u" => Ok(Node::U),
            "v" => Ok(Node::V),
            "s" => Ok(Node::S),
            "d" => Ok(Node::D),
            other => other
                .strip_prefix('r')
                .and_then(|n| n.parse::<usize>().ok())
                .filter(|&n| n >= 1)
                .map(|n| Node::Relay(n - 1))
                .ok_or_else(|| Error::Validation(format!("unknown node label '{other}'"))),
        }
    }
}

/// Mean gains of the links attached to one relay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelayLinks {
    /// s <-> r_i
    pub sr: f64,
    /// d <-> r_i
    pub dr: f64,
    /// u <-> r_i (primary interference at the relay)
    pub ur: f64,
    /// r_i <-> v (relay interference at the primary receiver)
    pub rv: f64,
}

/// Mean channel gains for every link of the network. Links are reciprocal:
/// one value per unordered pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkStats {
    pub uv: f64,
    pub sv: f64,
    pub dv: f64,
    pub us: f64,
    pub ud: f64,
    pub sd: f64,
    pub relays: Vec<RelayLinks>,
}

impl LinkStats {
    pub fn relay_count(&self) -> usize {
        self.relays.len()
    }

    /// Mean gain of the link between `a` and `b`, in either order.
    pub fn mean(&self, a: Node, b: Node) -> Option<f64> {
        use Node::*;
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        match (a, b) {
            (U, V) => Some(self.uv),
            (U, S) => Some(self.us),
            (U, D) => Some(self.ud),
            (V, S) => Some(self.sv),
            (V, D) => Some(self.dv),
            (S, D) => Some(self.sd),
            (U, Relay(i)) => self.relays.get(i).map(|r| r.ur),
            (V, Relay(i)) => self.relays.get(i).map(|r| r.rv),
            (S, Relay(i)) => self.relays.get(i).map(|r| r.sr),
            (D, Relay(i)) => self.relays.get(i).map(|r| r.dr),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fixed = [
            ("u,v", self.uv),
            ("s,v", self.sv),
            ("d,v", self.dv),
            ("s,u", self.us),
            ("d,u", self.ud),
            ("d,s", self.sd),
        ];
        for (name, x) in fixed {
            check_gain(name, x)?;
        }
        for (i, r) in self.relays.iter().enumerate() {
            for (name, x) in [("s", r.sr), ("d", r.dr), ("u", r.ur), ("v", r.rv)] {
                check_gain(&format!("r{},{name}", i + 1), x)?;
            }
        }
        Ok(())
    }

    /// Same statistics restricted to (or replicated up to) `m` relays.
    ///
    /// Extending requires every relay to share the same statistics.
    pub fn with_relay_count(&self, m: usize) -> Result<LinkStats> {
        let mut out = self.clone();
        if m <= self.relays.len() {
            out.relays.truncate(m);
            return Ok(out);
        }
        let template = match self.relays.first() {
            Some(t) if self.relays.iter().all(|r| r == t) => *t,
            _ => {
                return Err(Error::Validation(format!(
                    "cannot extend {} heterogeneous relays to {m}",
                    self.relays.len()
                )))
            }
        };
        out.relays.resize(m, template);
        Ok(out)
    }
}

fn check_gain(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::Validation(format!("link {name}: mean gain must be finite and > 0, got {x}")))
    }
}

/// Target rates in bits/s/Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    #[serde(rename = "Ru")]
    pub ru: f64,
    #[serde(rename = "Rs")]
    pub rs: f64,
    #[serde(rename = "Rd")]
    pub rd: f64,
}

/// SINR thresholds derived from the rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// primary: 2^{R_u} - 1
    pub primary: f64,
    /// relay sum-rate: 2^{2(R_s + R_d)} - 1
    pub sum: f64,
    /// s -> d stream: 2^{2 R_s} - 1
    pub source: f64,
    /// d -> s stream: 2^{2 R_d} - 1
    pub dest: f64,
}

pub fn thresholds(rates: Rates) -> Result<Thresholds> {
    for (name, r) in [("R_u", rates.ru), ("R_s", rates.rs), ("R_d", rates.rd)] {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::Validation(format!("{name} must be finite and >= 0, got {r}")));
        }
    }
    let source = (2.0 * rates.rs).exp2() - 1.0;
    let dest = (2.0 * rates.rd).exp2() - 1.0;
    Ok(Thresholds { primary: rates.ru.exp2() - 1.0, sum: (source + 1.0) * (dest + 1.0) - 1.0, source, dest })
}

/// Everything the closed forms need about one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub rates: Rates,
    /// Primary transmit power (linear).
    pub p_u: f64,
    /// Noise power (linear).
    pub n0: f64,
    /// Primary outage threshold.
    pub p_th: f64,
    pub links: LinkStats,
    thresholds: Thresholds,
}

impl ScenarioConfig {
    pub fn new(rates: Rates, p_u: f64, n0: f64, p_th: f64, links: LinkStats) -> Result<Self> {
        let thresholds = thresholds(rates)?;
        if !(p_u.is_finite() && p_u > 0.0) {
            return Err(Error::Validation(format!("P_u must be finite and > 0, got {p_u}")));
        }
        if !(n0.is_finite() && n0 > 0.0) {
            return Err(Error::Validation(format!("N0 must be finite and > 0, got {n0}")));
        }
        if !(p_th > 0.0 && p_th < 1.0) {
            return Err(Error::Validation(format!("P_th must lie in (0, 1), got {p_th}")));
        }
        links.validate()?;
        let gamma_u = p_u / n0;
        if !(gamma_u.is_finite() && gamma_u > 0.0) {
            return Err(Error::Validation(format!("gamma_u = P_u/N0 = {gamma_u} is not usable")));
        }
        Ok(Self { rates, p_u, n0, p_th, links, thresholds })
    }

    pub fn relay_count(&self) -> usize {
        self.links.relay_count()
    }

    pub fn thresholds(&self) -> Thresholds {
        self.thresholds
    }

    /// Primary transmit SNR `P_u / N0`.
    pub fn gamma_u(&self) -> f64 {
        self.p_u / self.n0
    }

    pub fn with_p_u(&self, p_u: f64) -> Result<Self> {
        Self::new(self.rates, p_u, self.n0, self.p_th, self.links.clone())
    }

    pub fn with_n0(&self, n0: f64) -> Result<Self> {
        Self::new(self.rates, self.p_u, n0, self.p_th, self.links.clone())
    }

    pub fn with_p_th(&self, p_th: f64) -> Result<Self> {
        Self::new(self.rates, self.p_u, self.n0, p_th, self.links.clone())
    }

    pub fn with_relay_count(&self, m: usize) -> Result<Self> {
        Self::new(self.rates, self.p_u, self.n0, self.p_th, self.links.with_relay_count(m)?)
    }

    pub fn with_rates(&self, rates: Rates) -> Result<Self> {
        Self::new(rates, self.p_u, self.n0, self.p_th, self.links.clone())
    }

    pub fn with_links(&self, links: LinkStats) -> Result<Self> {
        Self::new(self.rates, self.p_u, self.n0, self.p_th, links)
    }
}

/// Transmit powers of the secondary nodes and the relay forward ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub p_s: f64,
    pub p_d: f64,
    /// Per-relay transmit power.
    pub p_r: Vec<f64>,
    /// Share of relay power spent forwarding s's message towards d.
    pub alpha: Vec<f64>,
    /// Share of relay power spent forwarding d's message towards s.
    pub beta: Vec<f64>,
    /// True when the primary QoS leaves no budget and every power is zero.
    pub forbidden: bool,
}

impl PowerAllocation {
    pub fn forbidden(m: usize) -> Self {
        Self { p_s: 0.0, p_d: 0.0, p_r: vec![0.0; m], alpha: vec![0.5; m], beta: vec![0.5; m], forbidden: true }
    }

    pub fn relay_count(&self) -> usize {
        self.p_r.len()
    }

    /// Left-hand side of the primary QoS constraint,
    /// `(1 + D_u P_s s_sv / (P_u s_uv)) (1 + D_u P_d s_dv / (P_u s_uv))`.
    pub fn constraint_product(&self, cfg: &ScenarioConfig) -> f64 {
        let du = cfg.thresholds().primary;
        let l = &cfg.links;
        let a = du * l.sv / (cfg.p_u * l.uv);
        let b = du * l.dv / (cfg.p_u * l.uv);
        (1.0 + a * self.p_s) * (1.0 + b * self.p_d)
    }

    pub fn satisfies_primary_constraint(&self, cfg: &ScenarioConfig, g: f64) -> bool {
        self.constraint_product(cfg) <= g * (1.0 + CONSTRAINT_TOLERANCE)
    }

    /// Relay powers stay under `P_u s_uv (g - 1) / (D_u s_{r_i,v})`.
    pub fn satisfies_relay_caps(&self, cfg: &ScenarioConfig, g: f64) -> bool {
        let du = cfg.thresholds().primary;
        self.p_r.iter().zip(&cfg.links.relays).all(|(&p, r)| {
            let cap = if du == 0.0 { f64::INFINITY } else { cfg.p_u * cfg.links.uv / (du * r.rv) * (g - 1.0) };
            p <= cap * (1.0 + CONSTRAINT_TOLERANCE) + f64::MIN_POSITIVE
        })
    }

    pub fn ratios_valid(&self) -> bool {
        self.alpha.len() == self.p_r.len()
            && self.beta.len() == self.p_r.len()
            && self.alpha.iter().zip(&self.beta).all(|(&a, &b)| {
                (0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b) && (a + b - 1.0).abs() <= CONSTRAINT_TOLERANCE
            })
    }

    pub fn validate_shape(&self, m: usize) -> Result<()> {
        let powers_ok = [self.p_s, self.p_d].iter().chain(&self.p_r).all(|p| p.is_finite() && *p >= 0.0);
        if !powers_ok {
            return Err(Error::Validation("powers must be finite and >= 0".into()));
        }
        if self.p_r.len() != m || !self.ratios_valid() {
            return Err(Error::Validation(format!(
                "allocation must carry {m} relay powers and ratios with alpha + beta = 1"
            )));
        }
        Ok(())
    }
}

/// A set of relays as a bitmask; bit `i` is relay `r_{i+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RelaySet(pub u32);

impl RelaySet {
    pub const EMPTY: RelaySet = RelaySet(0);

    pub fn full(m: usize) -> Self {
        RelaySet(if m >= 32 { u32::MAX } else { (1u32 << m) - 1 })
    }

    pub fn singleton(i: usize) -> Self {
        RelaySet(1 << i)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, i: usize) -> bool {
        i < 32 && self.0 >> i & 1 == 1
    }

    pub fn with(self, i: usize) -> Self {
        RelaySet(self.0 | 1 << i)
    }

    pub fn is_subset_of(self, other: RelaySet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Relay indices in ascending order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..32).filter(move |i| bits >> i & 1 == 1)
    }

    /// Non-empty subsets in ascending bitmask order.
    pub fn nonempty_subsets(self) -> impl Iterator<Item = RelaySet> {
        let full = self.0;
        let mut sub = 0u32;
        std::iter::from_fn(move || {
            // next submask above `sub` in increasing order
            sub = (sub.wrapping_sub(full)) & full;
            (sub != 0).then_some(RelaySet(sub))
        })
    }
}

impl fmt::Display for RelaySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.iter().map(|i| format!("r{}", i + 1)).collect();
        write!(f, "{{{}}}", names.join(","))
    }
}

/// P(D = D_S) and P(out | D = D_S) for one non-empty decoding set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubsetOutage {
    pub set: RelaySet,
    pub p_set: f64,
    pub p_out: f64,
}

/// Total secondary outage with its decomposition over decoding sets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutageBreakdown {
    pub p_empty: f64,
    pub p_out_given_empty: f64,
    pub per_subset: Vec<SubsetOutage>,
    pub p_total: f64,
}

impl OutageBreakdown {
    /// Outage of 1 with all mass on the empty decoding set.
    pub fn certain(m: usize) -> Self {
        Self {
            p_empty: 1.0,
            p_out_given_empty: 1.0,
            per_subset: RelaySet::full(m)
                .nonempty_subsets()
                .map(|set| SubsetOutage { set, p_set: 0.0, p_out: 1.0 })
                .collect(),
            p_total: 1.0,
        }
    }

    pub fn set_probability_mass(&self) -> f64 {
        self.p_empty + self.per_subset.iter().map(|s| s.p_set).sum::<f64>()
    }
}

/// On-disk scenario description. Channel coefficients and powers are in dB.
///
/// Link keys are unordered pairs such as `"u,v"` or `"r2,s"`; `r*` applies a
/// value to every relay and is overridden by indexed keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub rates: Rates,
    #[serde(rename = "P_u_dB", default, skip_serializing_if = "Option::is_none")]
    pub p_u_db: Option<f64>,
    #[serde(rename = "gamma_u_dB", default, skip_serializing_if = "Option::is_none")]
    pub gamma_u_db: Option<f64>,
    #[serde(rename = "N0_dB", default)]
    pub n0_db: f64,
    #[serde(rename = "P_th")]
    pub p_th: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub links: BTreeMap<String, f64>,
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::Validation(format!("scenario JSON, line {} column {}: {e}", e.line(), e.column())))
    }

    pub fn to_config(&self) -> Result<ScenarioConfig> {
        self.to_config_with_relays(self.m)
    }

    /// Builds the configuration for `m` relays, using `r*` entries for relays
    /// without indexed keys.
    pub fn to_config_with_relays(&self, m: usize) -> Result<ScenarioConfig> {
        let n0 = db_to_linear(self.n0_db)?;
        let p_u = match (self.p_u_db, self.gamma_u_db) {
            (Some(p), None) => db_to_linear(p)?,
            (None, Some(g)) => db_to_linear(g)? * n0,
            _ => return Err(Error::Validation("scenario must give exactly one of P_u_dB and gamma_u_dB".into())),
        };
        let table = normalized_links(&self.links)?;
        let fixed = |a: &str, b: &str| -> Result<f64> {
            let key = link_key(a, b);
            let db = table.get(&key).ok_or_else(|| Error::Validation(format!("missing link '{key}'")))?;
            db_to_linear(*db)
        };
        let relay = |i: usize, other: &str| -> Result<f64> {
            let name = format!("r{}", i + 1);
            let db = table
                .get(&link_key(&name, other))
                .or_else(|| table.get(&link_key("r*", other)))
                .ok_or_else(|| Error::Validation(format!("missing link '{}'", link_key(&name, other))))?;
            db_to_linear(*db)
        };
        let relays = (0..m)
            .map(|i| Ok(RelayLinks { sr: relay(i, "s")?, dr: relay(i, "d")?, ur: relay(i, "u")?, rv: relay(i, "v")? }))
            .collect::<Result<Vec<_>>>()?;
        let links = LinkStats {
            uv: fixed("u", "v")?,
            sv: fixed("s", "v")?,
            dv: fixed("d", "v")?,
            us: fixed("u", "s")?,
            ud: fixed("u", "d")?,
            sd: fixed("s", "d")?,
            relays,
        };
        ScenarioConfig::new(self.rates, p_u, n0, self.p_th, links)
    }
}

/// Canonical `"a,b"` key with the two labels in lexicographic order.
pub fn link_key(a: &str, b: &str) -> String {
    let (a, b) = (a.trim(), b.trim());
    if a <= b {
        format!("{a},{b}")
    } else {
        format!("{b},{a}")
    }
}

fn normalized_links(raw: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for (key, &db) in raw {
        let (a, b) =
            key.split_once(',').ok_or_else(|| Error::Validation(format!("link key '{key}' must look like \"a,b\"")))?;
        for label in [a.trim(), b.trim()] {
            if label != "r*" {
                label.parse::<Node>()?;
            }
        }
        if a.trim() == b.trim() {
            return Err(Error::Validation(format!("link key '{key}' joins a node to itself")));
        }
        if !db.is_finite() {
            return Err(Error::Validation(format!("link '{key}' has non-finite gain")));
        }
        let k = link_key(a, b);
        if out.insert(k.clone(), db).is_some() {
            return Err(Error::Validation(format!("link '{k}' given twice")));
        }
    }
    Ok(out)
}

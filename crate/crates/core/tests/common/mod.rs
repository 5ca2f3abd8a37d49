#![allow(dead_code)]

use cogrelay_core::{LinkStats, PowerAllocation, Rates, RelayLinks, ScenarioConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn db(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.random_range(lo..hi) / 10.0)
}

/// Random heterogeneous scenario with `m` relays.
pub fn random_scenario(rng: &mut ChaCha8Rng, m: usize) -> ScenarioConfig {
    let rates =
        Rates { ru: rng.random_range(0.1..1.0), rs: rng.random_range(0.05..0.6), rd: rng.random_range(0.05..0.6) };
    let relays = (0..m)
        .map(|_| RelayLinks {
            sr: db(rng, -3.0, 10.0),
            dr: db(rng, -3.0, 10.0),
            ur: db(rng, -10.0, 0.0),
            rv: db(rng, -10.0, 0.0),
        })
        .collect();
    let links = LinkStats {
        uv: db(rng, 0.0, 8.0),
        sv: db(rng, -10.0, 0.0),
        dv: db(rng, -10.0, 0.0),
        us: db(rng, -10.0, 0.0),
        ud: db(rng, -10.0, 0.0),
        sd: db(rng, -5.0, 5.0),
        relays,
    };
    ScenarioConfig::new(rates, db(rng, 10.0, 30.0), 1.0, rng.random_range(0.01..0.2), links).unwrap()
}

/// Random allocation with positive powers, independent of any constraint.
pub fn random_allocation(rng: &mut ChaCha8Rng, m: usize) -> PowerAllocation {
    let alpha: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..0.95)).collect();
    PowerAllocation {
        p_s: db(rng, 0.0, 20.0),
        p_d: db(rng, 0.0, 20.0),
        p_r: (0..m).map(|_| db(rng, 0.0, 20.0)).collect(),
        beta: alpha.iter().map(|a| 1.0 - a).collect(),
        alpha,
        forbidden: false,
    }
}

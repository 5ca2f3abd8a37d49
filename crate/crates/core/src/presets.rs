//! The two reference configurations used throughout the experiments.
//!
//! Both use `R_u = 0.6`, `R_s = 0.2`, `R_d = 0.3` bits/s/Hz and `P_th = 0.02`.

use crate::error::Result;
use crate::model::{db_to_linear, LinkStats, Rates, RelayLinks, ScenarioConfig};

pub const RATES: Rates = Rates { ru: 0.6, rs: 0.2, rd: 0.3 };
pub const P_TH: f64 = 0.02;

fn db(x: f64) -> f64 {
    db_to_linear(x).expect("finite preset")
}

/// Symmetric setup: strong `u-v`, `s-d` and relay receive links (5 dB), every
/// interference link at -5 dB, `N0 = 0 dB`, `M` identical relays.
pub fn symmetric_links(m: usize) -> LinkStats {
    let (strong, weak) = (db(5.0), db(-5.0));
    LinkStats {
        uv: strong,
        sv: weak,
        dv: weak,
        us: weak,
        ud: weak,
        sd: strong,
        relays: vec![RelayLinks { sr: strong, dr: strong, ur: weak, rv: weak }; m],
    }
}

/// Symmetric setup at primary SNR `gamma_u_db`.
pub fn symmetric(m: usize, gamma_u_db: f64) -> Result<ScenarioConfig> {
    ScenarioConfig::new(RATES, db_to_linear(gamma_u_db)?, 1.0, P_TH, symmetric_links(m))
}

/// Asymmetric setup: `s-r` 5 dB, `d-r` 8 dB, `s-d` 0 dB, `u-d` -8 dB, other
/// interference links -5 dB.
pub fn asymmetric_links(m: usize) -> LinkStats {
    let weak = db(-5.0);
    LinkStats {
        uv: db(5.0),
        sv: weak,
        dv: weak,
        us: weak,
        ud: db(-8.0),
        sd: db(0.0),
        relays: vec![RelayLinks { sr: db(5.0), dr: db(8.0), ur: weak, rv: weak }; m],
    }
}

/// Asymmetric setup with `P_u = 10 dB` and noise power `n0_db`.
pub fn asymmetric(m: usize, n0_db: f64) -> Result<ScenarioConfig> {
    ScenarioConfig::new(RATES, db_to_linear(10.0)?, db_to_linear(n0_db)?, P_TH, asymmetric_links(m))
}

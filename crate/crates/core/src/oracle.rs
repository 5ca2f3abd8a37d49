//! Numerical-integration and grid references for the closed forms.
//!
//! These evaluate the same probabilities straight from the channel
//! distributions, with no shared algebra, and are meant for testing and the
//! `validate` battery rather than for speed.

use quadrature::double_exponential::integrate;

use crate::allocation::RatioTerms;
use crate::error::{Error, Result};
use crate::model::{PowerAllocation, RelaySet, ScenarioConfig};

const TOL: f64 = 1e-12;

/// `int_0^inf e^{-s} h(s) ds` through `u = e^{-s}`.
fn exp_weighted(h: impl Fn(f64) -> f64) -> f64 {
    integrate(|u: f64| if u <= 0.0 { 0.0 } else { h(-u.ln()) }, 0.0, 1.0, TOL).integral
}

/// Relay decoding failure by integrating the conditional success over the
/// primary interference gain.
pub fn relay_outage_quadrature(cfg: &ScenarioConfig, relay: usize, p_s: f64, p_d: f64) -> Result<f64> {
    let r = cfg.links.relays.get(relay).ok_or_else(|| Error::Domain(format!("relay index {relay} out of range")))?;
    let th = cfg.thresholds();
    let a_s = p_s / cfg.n0 * r.sr;
    let a_d = p_d / cfg.n0 * r.dr;
    if !(a_s > 0.0 && a_d > 0.0) {
        return Err(Error::Domain("quadrature reference needs positive transceiver powers".into()));
    }
    let m = cfg.gamma_u() * r.ur;
    // P(X >= D_s z, Y >= D_d z, X + Y >= D z) for X, Y exponential with means a_s, a_d
    let success_given = |z: f64| {
        let lo = th.source * z;
        let hi = (th.sum - th.dest) * z;
        let body = if hi > lo {
            integrate(|x: f64| (-x / a_s - (th.sum * z - x) / a_d).exp() / a_s, lo, hi, TOL).integral
        } else {
            0.0
        };
        body + (-hi / a_s - th.dest * z / a_d).exp()
    };
    let success = exp_weighted(|s| success_given(1.0 + m * s));
    Ok(1.0 - success)
}

/// Law of `X = offset + U - V` with `U`, `V` exponential of means `mu_u`, `mu_v`.
#[derive(Debug, Clone, Copy)]
struct Margin {
    offset: f64,
    mu_u: f64,
    mu_v: f64,
}

impl Margin {
    fn density(&self, x: f64) -> f64 {
        let t = x - self.offset;
        let e = if t >= 0.0 { (-t / self.mu_u).exp() } else { (t / self.mu_v).exp() };
        e / (self.mu_u + self.mu_v)
    }

    /// `E[h(max(X, 0))]`.
    fn expect_positive_part(&self, h: impl Fn(f64) -> f64) -> f64 {
        let total = self.mu_u + self.mu_v;
        let at_or_below_zero = self.mu_v * (-self.offset / self.mu_v).exp() / total;
        let middle = if self.offset > 0.0 {
            integrate(|x: f64| self.density(x) * h(x), 0.0, self.offset, TOL).integral
        } else {
            0.0
        };
        let tail = self.mu_u / total
            * integrate(|u: f64| if u <= 0.0 { 0.0 } else { h(self.offset - self.mu_u * u.ln()) }, 0.0, 1.0, TOL)
                .integral;
        at_or_below_zero * h(0.0) + middle + tail
    }
}

/// Outage given decoding set `set` (every relay in it fails a forward link),
/// as a two-dimensional integral over the failure margins at `s` and `d`.
pub fn out_given_set_quadrature(cfg: &ScenarioConfig, set: RelaySet, alloc: &PowerAllocation) -> Result<f64> {
    let m = cfg.relay_count();
    if set.is_empty() || !set.is_subset_of(RelaySet::full(m)) {
        return Err(Error::Domain(format!("decoding set {set} must be non-empty and within M = {m}")));
    }
    alloc.validate_shape(m)?;
    let th = cfg.thresholds();
    if th.source == 0.0 || th.dest == 0.0 {
        return Err(Error::Domain("quadrature reference needs D_s > 0 and D_d > 0".into()));
    }
    let l = &cfg.links;
    let gu = cfg.gamma_u();
    let at_s = Margin { offset: th.dest, mu_u: th.dest * gu * l.us, mu_v: alloc.p_d / cfg.n0 * l.sd };
    let at_d = Margin { offset: th.source, mu_u: th.source * gu * l.ud, mu_v: alloc.p_s / cfg.n0 * l.sd };
    let fwd: Vec<(f64, f64)> = set
        .iter()
        .map(|i| {
            let r = l.relays[i];
            let to_s = alloc.beta[i] * alloc.p_r[i] / cfg.n0 * r.sr;
            let to_d = alloc.alpha[i] * alloc.p_r[i] / cfg.n0 * r.dr;
            (to_s, to_d)
        })
        .collect();
    if fwd.iter().any(|&(s, d)| s <= 0.0 || d <= 0.0) || at_s.mu_v <= 0.0 || at_d.mu_v <= 0.0 {
        return Err(Error::Domain("quadrature reference needs positive powers on every link".into()));
    }
    let p = at_s.expect_positive_part(|x| {
        at_d.expect_positive_part(|y| fwd.iter().map(|&(s, d)| 1.0 - (-x / s - y / d).exp()).product())
    });
    Ok(p)
}

/// Grid minimizer of the forward outage over `points` evenly spaced ratios.
pub fn alpha_grid_argmin(terms: &RatioTerms, points: usize) -> (f64, f64) {
    let mut best = (0.0, f64::INFINITY);
    for k in 0..points {
        let alpha = k as f64 / (points - 1) as f64;
        let v = terms.outage(alpha);
        if v < best.1 {
            best = (alpha, v);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margin_density_integrates_to_one() {
        let mg = Margin { offset: 0.7, mu_u: 2.0, mu_v: 0.5 };
        assert!((mg.expect_positive_part(|_| 1.0) - 1.0).abs() < 1e-10);
        let below = integrate(|x: f64| mg.density(x), -60.0, 0.0, 1e-13).integral;
        assert!((below - mg.mu_v * (-mg.offset / mg.mu_v).exp() / (mg.mu_u + mg.mu_v)).abs() < 1e-10);
    }

    #[test]
    fn exp_weighted_moments() {
        assert!((exp_weighted(|s| s) - 1.0).abs() < 1e-10);
        assert!((exp_weighted(|s| s * s) - 2.0).abs() < 1e-9);
    }
}

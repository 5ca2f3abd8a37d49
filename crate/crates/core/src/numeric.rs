//! Small numerical kernels shared by the closed forms.

use crate::error::{Error, Result};

/// Slack allowed before an out-of-range probability is treated as a bug.
pub const PROBABILITY_SLACK: f64 = 1e-12;

/// Neumaier-compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// `expm1(t) / t`, continuous at zero.
pub fn exprel(t: f64) -> f64 {
    if t.abs() < 1e-5 {
        1.0 + t / 2.0 + t * t / 6.0
    } else {
        t.exp_m1() / t
    }
}

/// Divided difference `(e^{-a} - e^{-b}) / (b - a)` of the decaying exponential.
///
/// Non-negative for all inputs, equal to `e^{-a}` when `a == b`, and zero
/// when either argument is `+inf` and the other is not smaller.
pub fn exp_divided_difference(a: f64, b: f64) -> f64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    if hi.is_infinite() {
        return 0.0;
    }
    let h = hi - lo;
    if h < 0.5 {
        // e^{-lo} - e^{-hi} = e^{-hi} expm1(h)
        (-hi).exp() * exprel(h)
    } else {
        ((-lo).exp() - (-hi).exp()) / h
    }
}

/// `numerator / denominator`, with the convention that a zero numerator gives zero
/// (a zero threshold is met by any channel, including a dead one).
pub fn threshold_ratio(threshold: f64, mean: f64) -> f64 {
    if threshold == 0.0 {
        0.0
    } else if mean == 0.0 {
        f64::INFINITY
    } else {
        threshold / mean
    }
}

/// Checks that `p` is a probability, clamping round-off within [`PROBABILITY_SLACK`].
pub fn checked_probability(p: f64, context: &'static str) -> Result<f64> {
    if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&p) {
        return Err(Error::Numerical { context, value: p });
    }
    Ok(p.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancelled_terms() {
        let terms = [1e16, 1.0, -1e16, 1.0];
        let naive: f64 = terms.iter().sum();
        let acc: CompensatedSum = terms.iter().copied().collect();
        assert_eq!(acc.value(), 2.0);
        assert_ne!(naive, 2.0);
    }

    #[test]
    fn divided_difference_limits() {
        assert!((exp_divided_difference(0.7, 0.7) - (-0.7f64).exp()).abs() < 1e-15);
        let direct = ((-0.3f64).exp() - (-2.0f64).exp()) / 1.7;
        assert!((exp_divided_difference(0.3, 2.0) - direct).abs() < 1e-15);
        assert_eq!(exp_divided_difference(2.0, 0.3), exp_divided_difference(0.3, 2.0));
        let near = exp_divided_difference(1.0, 1.0 + 1e-9);
        assert!((near - (-1.0f64).exp()).abs() < 1e-9);
        assert_eq!(exp_divided_difference(1.0, f64::INFINITY), 0.0);
    }

    #[test]
    fn exprel_is_smooth_at_zero() {
        assert_eq!(exprel(0.0), 1.0);
        assert!((exprel(1e-6) - (1e-6f64).exp_m1() / 1e-6).abs() < 1e-12);
        assert!((exprel(1.0) - (std::f64::consts::E - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn probability_check() {
        assert_eq!(checked_probability(-1e-13, "t").unwrap(), 0.0);
        assert_eq!(checked_probability(1.0 + 1e-13, "t").unwrap(), 1.0);
        assert!(checked_probability(-1e-6, "t").is_err());
        assert!(checked_probability(f64::NAN, "t").is_err());
    }
}

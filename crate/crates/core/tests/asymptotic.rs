mod common;

use cogrelay_core::analytic::{p_out_given_empty, relay_outage_prob};
use cogrelay_core::asymptotic::*;
use cogrelay_core::{full_allocation, presets, total_outage, AllocationMode, Rates, ScenarioConfig};
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn g_prime_example() {
    let cfg = presets::symmetric(1, 20.0).unwrap();
    assert!((g_prime(&cfg).unwrap() - 1.0 / 0.98).abs() < 1e-15);
}

#[test]
fn symmetric_coefficients() {
    let cfg = ScenarioConfig::new(Rates { ru: 0.6, rs: 0.25, rd: 0.25 }, 1e3, 1.0, 0.02, presets::symmetric_links(2))
        .unwrap();
    let c = asymptotic_allocation(&cfg).unwrap();
    assert!(rel(c.rho_s, c.rho_d) < 1e-12);
    assert!(c.alpha.iter().all(|a| (a - 0.5).abs() < 1e-12));
    assert!(c.alpha.iter().zip(&c.beta).all(|(a, b)| a + b == 1.0));
}

#[test]
fn coefficients_are_the_limit_of_the_lemma_allocation() {
    for m in [1, 3] {
        let c = asymptotic_allocation(&presets::asymmetric(m, 0.0).unwrap()).unwrap();
        let cfg = presets::asymmetric(m, -50.0).unwrap(); // gamma_u = 60 dB
        let a = full_allocation(&cfg).unwrap();
        assert!(rel(a.p_s / cfg.p_u, c.rho_s) < 0.01);
        assert!(rel(a.p_d / cfg.p_u, c.rho_d) < 0.01);
        for i in 0..m {
            assert!(rel(a.p_r[i] / cfg.p_u, c.rho_r[i]) < 0.01);
            assert!((a.alpha[i] - c.alpha[i]).abs() < 0.01);
        }
    }
}

#[test]
fn relay_outage_examples() {
    let cfg = presets::symmetric(1, 20.0).unwrap();
    let zero = cfg.with_rates(Rates { ru: 0.6, rs: 0.0, rd: 0.0 }).unwrap();
    assert_eq!(asymptotic_relay_outage(&zero, 0, 1.0, 1.0).unwrap(), 0.0);
    assert!(asymptotic_relay_outage(&cfg, 0, 1e12, 1e12).unwrap() < 1e-10);
}

#[test]
fn relay_outage_matches_exact_at_high_snr() {
    for (s, d) in [(0.3, 0.3), (0.3, 0.5), (2.0, 0.1)] {
        let hi = presets::asymmetric(1, -60.0).unwrap(); // gamma_u = 70 dB
        let exact = relay_outage_prob(&hi, 0, s * hi.p_u, d * hi.p_u).unwrap();
        let limit = asymptotic_relay_outage(&hi, 0, s, d).unwrap();
        assert!(rel(exact, limit) < 0.005, "{exact} vs {limit}");
    }
}

#[test]
fn total_outage_examples() {
    let cfg = presets::symmetric(0, 20.0).unwrap();
    let c = asymptotic_coefficients(&cfg, AllocationMode::Uniform).unwrap();
    let t = asymptotic_total_outage(&cfg, &c).unwrap();
    assert_eq!(t.p_total, asymptotic_out_given_empty(&cfg, c.rho_s, c.rho_d).unwrap());

    let zero = presets::symmetric(2, 20.0).unwrap().with_rates(Rates { ru: 0.6, rs: 0.0, rd: 0.0 }).unwrap();
    let c = asymptotic_allocation(&zero).unwrap();
    assert_eq!(asymptotic_total_outage(&zero, &c).unwrap().p_total, 0.0);
}

#[test]
fn empty_set_limit() {
    let cfg = presets::asymmetric(0, -60.0).unwrap();
    let exact = p_out_given_empty(&cfg, 0.4 * cfg.p_u, 0.2 * cfg.p_u).unwrap();
    assert!(rel(exact, asymptotic_out_given_empty(&cfg, 0.4, 0.2).unwrap()) < 1e-4);
}

#[test]
fn exact_outage_converges_to_the_floor() {
    for mode in [AllocationMode::Uniform, AllocationMode::Lemma] {
        for m in [0, 1, 2, 3] {
            let base = presets::symmetric(m, 0.0).unwrap();
            let c = asymptotic_coefficients(&base, mode).unwrap();
            let floor = asymptotic_total_outage(&base, &c).unwrap().p_total;
            let mut prev = f64::INFINITY;
            for g_db in [40.0, 50.0, 60.0, 70.0] {
                let cfg = presets::symmetric(m, g_db).unwrap();
                let exact = total_outage(&cfg, &c.to_allocation(&cfg)).unwrap().p_total;
                let gap = (exact - floor).abs();
                assert!(gap <= prev, "{mode:?} M={m} at {g_db} dB: gap {gap} after {prev}");
                prev = gap;
            }
            assert!(prev / floor < 0.01);
        }
    }
}

#[test]
fn floor_matches_exact_at_70_db() {
    let cfg = presets::symmetric(2, 70.0).unwrap();
    let exact = total_outage(&cfg, &cogrelay_core::uniform_allocation(&cfg).unwrap()).unwrap().p_total;
    let c = asymptotic_coefficients(&cfg, AllocationMode::Uniform).unwrap();
    let floor = asymptotic_total_outage(&cfg, &c).unwrap().p_total;
    assert!(rel(exact, floor) < 0.01, "{exact} vs {floor}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn floor_ignores_primary_snr(seed in any::<u64>(), m in 0usize..4, p_u in 1e-3f64..1e9, n0 in 1e-6f64..1e3) {
        let mut rng = common::rng(seed);
        let cfg = common::random_scenario(&mut rng, m);
        let other = ScenarioConfig::new(cfg.rates, p_u, n0, cfg.p_th, cfg.links.clone()).unwrap();
        for mode in [AllocationMode::Uniform, AllocationMode::Lemma] {
            let a = asymptotic_coefficients(&cfg, mode).unwrap();
            let b = asymptotic_coefficients(&other, mode).unwrap();
            prop_assert_eq!(&a, &b);
            let fa = asymptotic_total_outage(&cfg, &a).unwrap();
            let fb = asymptotic_total_outage(&other, &b).unwrap();
            prop_assert_eq!(fa.p_total.to_bits(), fb.p_total.to_bits());
            prop_assert!((0.0..=1.0).contains(&fa.p_total));
        }
    }
}

mod common;

use cogrelay_core::allocation::*;
use cogrelay_core::analytic::{relay_outage_prob, st_outage_given_relay};
use cogrelay_core::oracle::alpha_grid_argmin;
use cogrelay_core::{presets, Error, LinkStats, PowerAllocation, Rates, RelayLinks, RelaySet, ScenarioConfig};
use proptest::prelude::*;
use rand::Rng;

fn boundary_gap(cfg: &ScenarioConfig, p_s: f64, p_d: f64) -> f64 {
    let g = cogrelay_core::compute_g(cfg).unwrap();
    let (a, b) = constraint_coefficients(cfg);
    ((1.0 + a * p_s) * (1.0 + b * p_d) - g).abs() / g
}

fn heterogeneous(dr_db: &[f64], n0_db: f64) -> ScenarioConfig {
    let base = presets::asymmetric_links(1).relays[0];
    let relays = dr_db.iter().map(|&d| RelayLinks { dr: 10f64.powf(d / 10.0), ..base }).collect();
    let links = LinkStats { relays, ..presets::asymmetric_links(0) };
    ScenarioConfig::new(presets::RATES, 10.0, 10f64.powf(n0_db / 10.0), 0.02, links).unwrap()
}

#[test]
fn both_branches_lie_on_the_boundary() {
    let mut rng = common::rng(21);
    for _ in 0..50 {
        let cfg = common::random_scenario(&mut rng, 1);
        if cogrelay_core::compute_g(&cfg).unwrap() <= 1.0 {
            continue;
        }
        let c = optimal_st_powers(&cfg, 0).unwrap();
        assert!(boundary_gap(&cfg, c.branch1.0, c.branch1.1) < 1e-6);
        assert!(boundary_gap(&cfg, c.branch2.0, c.branch2.1) < 1e-6);
        let r = cfg.links.relays[0];
        assert!((c.branch1.1 / c.branch1.0 - r.sr / r.dr).abs() <= 1e-12 * r.sr / r.dr);
        let (p_s, p_d) = c.chosen_pair();
        assert_eq!(c.achieved, relay_outage_prob(&cfg, 0, p_s, p_d).unwrap());
        let other = match c.chosen {
            Branch::Branch1 => c.branch2,
            Branch::Branch2 => c.branch1,
        };
        assert!(c.achieved <= relay_outage_prob(&cfg, 0, other.0, other.1).unwrap());
    }
}

#[test]
fn forbidden_when_g_is_one() {
    let cfg = presets::symmetric(2, -10.0).unwrap();
    assert_eq!(optimal_st_powers(&cfg, 0), Err(Error::SecondaryForbidden));
    let a = full_allocation(&cfg).unwrap();
    assert!(a.forbidden && a.p_s == 0.0 && a.p_d == 0.0 && a.p_r.iter().all(|&p| p == 0.0));
    assert_eq!(optimal_relay_power(&cfg, 0).unwrap(), 0.0);
}

#[test]
fn symmetric_scenario_gives_equal_powers() {
    let rates = Rates { ru: 0.6, rs: 0.25, rd: 0.25 };
    let cfg = ScenarioConfig::new(rates, 100.0, 1.0, 0.02, presets::symmetric_links(1)).unwrap();
    let c = optimal_st_powers(&cfg, 0).unwrap();
    assert!((c.branch1.0 - c.branch1.1).abs() < 1e-12 * c.branch1.0);
    assert!((c.branch2.0 - c.branch2.1).abs() < 1e-12 * c.branch2.0);
    let a = full_allocation(&cfg).unwrap();
    assert!((a.alpha[0] - 0.5).abs() < 1e-12);
}

#[test]
fn branches_agree_when_equal_means_is_stationary() {
    // With D_s = D_d and A = B s_sr / s_dr, branch 2 has P_d / P_s = s_sr / s_dr.
    let rates = Rates { ru: 0.6, rs: 0.25, rd: 0.25 };
    let mut links = presets::asymmetric_links(1);
    links.dv = links.sv * links.relays[0].dr / links.relays[0].sr;
    let cfg = ScenarioConfig::new(rates, 100.0, 1.0, 0.02, links).unwrap();
    let c = optimal_st_powers(&cfg, 0).unwrap();
    assert!((c.branch1.0 - c.branch2.0).abs() < 1e-6 * c.branch1.0);
    assert!((c.branch1.1 - c.branch2.1).abs() < 1e-6 * c.branch1.1);
}

#[test]
fn r_min_examples() {
    let one = presets::asymmetric(1, 0.0).unwrap();
    assert_eq!(find_r_min(&one).unwrap().0, 0);
    let twins = presets::asymmetric(2, 0.0).unwrap();
    let (j, c) = find_r_min(&twins).unwrap();
    assert_eq!(j, 0);
    assert_eq!(c, optimal_st_powers(&twins, 1).unwrap());
    assert!(matches!(find_r_min(&presets::asymmetric(0, 0.0).unwrap()), Err(Error::Domain(_))));
}

#[test]
fn r_min_against_dense_boundary_grid() {
    let cfg = heterogeneous(&[5.0, 8.0, 11.0], -3.0);
    let (j, c) = find_r_min(&cfg).unwrap();
    let worst = |p_s: f64, p_d: f64| (0..3).map(|i| relay_outage_prob(&cfg, i, p_s, p_d).unwrap()).fold(0.0, f64::max);
    let (p_s, p_d) = c.chosen_pair();
    let chosen = worst(p_s, p_d);
    // the chosen hypothesis is the best among all hypotheses
    for h in 0..3 {
        let (s, d) = optimal_st_powers(&cfg, h).unwrap().chosen_pair();
        assert!(chosen <= worst(s, d));
    }
    // and close to the best boundary point overall
    let grid = cogrelay_core::montecarlo::boundary_grid(&cfg, 4000).unwrap();
    let best = grid.iter().map(|&(s, d)| worst(s, d)).fold(f64::INFINITY, f64::min);
    assert!(chosen <= best * 1.02, "r_min {j}: {chosen} vs grid {best}");
}

#[test]
fn relay_power_examples() {
    let cfg = presets::symmetric(1, 15.0).unwrap();
    let p = optimal_relay_power(&cfg, 0).unwrap();
    let mut links = cfg.links.clone();
    links.relays[0].rv *= 2.0;
    let doubled = cfg.with_links(links).unwrap();
    assert!((optimal_relay_power(&doubled, 0).unwrap() - p / 2.0).abs() < 1e-12 * p);

    let free = ScenarioConfig::new(Rates { ru: 0.0, rs: 0.2, rd: 0.3 }, 10.0, 1.0, 0.02, cfg.links.clone()).unwrap();
    assert_eq!(optimal_relay_power(&free, 0), Err(Error::UndefinedPowerCap));
    assert_eq!(full_allocation(&free), Err(Error::UndefinedPowerCap));
}

#[test]
fn lemma3_examples() {
    let t = RatioTerms { a: 2.0, b: 3.0, c: 2.0, d: 3.0 };
    assert!((t.optimal_alpha() - 0.5).abs() < 1e-15);
    let t = RatioTerms { a: 1.5, b: 0.7, c: 1.5, d: 0.7 };
    assert!((t.optimal_alpha() - 0.5).abs() < 1e-15);

    let cfg = presets::asymmetric(1, 0.0).unwrap();
    let a = full_allocation(&cfg).unwrap();
    let terms = RatioTerms::new(&cfg, 0, a.p_s, a.p_d, a.p_r[0]).unwrap();
    let (grid_alpha, _) = alpha_grid_argmin(&terms, 100_001);
    assert!((a.alpha[0] - grid_alpha).abs() < 1e-4, "{} vs {grid_alpha}", a.alpha[0]);
}

#[test]
fn lemma3_beats_grid_on_random_tuples() {
    let mut rng = common::rng(4);
    for _ in 0..1000 {
        let t = RatioTerms {
            a: 1.0 + rng.random_range(0.0..10.0f64).powi(2),
            b: rng.random_range(1e-3..100.0),
            c: 1.0 + rng.random_range(0.0..10.0f64).powi(2),
            d: rng.random_range(1e-3..100.0),
        };
        let alpha = t.optimal_alpha();
        assert!((0.0..=1.0).contains(&alpha));
        let (_, grid) = alpha_grid_argmin(&t, 10_000);
        assert!(t.outage(alpha) <= grid + 1e-8, "{t:?}");
    }
}

#[test]
fn ratio_conventions_for_zero_rates() {
    let cfg = presets::asymmetric(1, 0.0).unwrap();
    let only_s = cfg.with_rates(Rates { ru: 0.6, rs: 0.3, rd: 0.0 }).unwrap();
    assert_eq!(optimal_ratios(&only_s, 0, 1.0, 1.0, 1.0).unwrap(), (1.0, 0.0));
    let only_d = cfg.with_rates(Rates { ru: 0.6, rs: 0.0, rd: 0.3 }).unwrap();
    assert_eq!(optimal_ratios(&only_d, 0, 1.0, 1.0, 1.0).unwrap(), (0.0, 1.0));
    assert!(optimal_ratios(&cfg, 0, 1.0, 1.0, 0.0).is_err());
}

#[test]
fn select_relay_examples() {
    let cfg = heterogeneous(&[5.0, 8.0, 11.0], -3.0);
    let a = full_allocation(&cfg).unwrap();
    let values: Vec<f64> = (0..3).map(|i| st_outage_given_relay(&cfg, i, &a).unwrap()).collect();
    let expect = (0..3).min_by(|&x, &y| values[x].total_cmp(&values[y])).unwrap();
    assert_eq!(select_relay(&cfg, RelaySet::full(3), &a).unwrap(), expect);
    assert_eq!(select_relay(&cfg, RelaySet::singleton(1), &a).unwrap(), 1);
    assert!(select_relay(&cfg, RelaySet::EMPTY, &a).is_err());

    let twins = presets::asymmetric(3, -3.0).unwrap();
    let a = full_allocation(&twins).unwrap();
    assert_eq!(select_relay(&twins, RelaySet::full(3), &a).unwrap(), 0);
    assert_eq!(select_relay(&twins, RelaySet(0b110), &a).unwrap(), 1);
}

#[test]
fn no_relay_fallback_is_symmetric() {
    let cfg = presets::asymmetric(0, 0.0).unwrap();
    let a = full_allocation(&cfg).unwrap();
    assert_eq!(a.p_s, a.p_d);
    assert!(a.p_r.is_empty());
    assert!(boundary_gap(&cfg, a.p_s, a.p_d) < 1e-12);
}

fn assert_invariants(cfg: &ScenarioConfig, a: &PowerAllocation) {
    let g = cogrelay_core::compute_g(cfg).unwrap();
    assert!(a.satisfies_primary_constraint(cfg, g));
    assert!(a.satisfies_relay_caps(cfg, g));
    assert!(a.ratios_valid());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn allocations_respect_every_constraint(seed in any::<u64>(), m in 0usize..5) {
        let mut rng = common::rng(seed);
        let cfg = common::random_scenario(&mut rng, m);
        assert_invariants(&cfg, &full_allocation(&cfg).unwrap());
        assert_invariants(&cfg, &uniform_allocation(&cfg).unwrap());
    }

    #[test]
    fn selection_ignores_common_scaling(seed in any::<u64>()) {
        // scaling every forward outage by the same factor keeps the argmin
        let mut rng = common::rng(seed);
        let cfg = common::random_scenario(&mut rng, 4);
        let a = full_allocation(&cfg).unwrap();
        prop_assume!(!a.forbidden);
        let vals: Vec<f64> = (0..4).map(|i| st_outage_given_relay(&cfg, i, &a).unwrap()).collect();
        let pick = select_relay(&cfg, RelaySet::full(4), &a).unwrap();
        let scaled: Vec<f64> = vals.iter().map(|v| v * 0.37).collect();
        let first_min = (0..4).fold(0, |b, i| if scaled[i] < scaled[b] { i } else { b });
        prop_assert_eq!(pick, first_min);
    }
}

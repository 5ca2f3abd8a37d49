mod common;

use cogrelay_core::analytic::*;
use cogrelay_core::montecarlo::*;
use cogrelay_core::{
    full_allocation, presets, uniform_allocation, Error, PowerAllocation, Rates, RelaySet, ScenarioConfig,
};

const N: u64 = 1_000_000;

fn within(est: &McEstimate, exact: f64, what: &str) {
    let z = est.z_score(exact);
    assert!(z < 3.0, "{what}: mc {} +- {} vs closed {exact} (z = {z:.2})", est.p_hat, est.std_err);
}

#[test]
fn trivial_trials() {
    let cfg = presets::symmetric(2, 20.0).unwrap();
    let silent = PowerAllocation::forbidden(2);
    let sim = Simulator::new(&cfg, &silent, SelectionMode::Statistical).unwrap();
    let mut rng = common::rng(1);
    for _ in 0..100 {
        let o = sim.simulate_trial(&ChannelDraw::sample(&cfg, &mut rng));
        assert!(o.secondary_outage);
    }

    let free = cfg.with_rates(Rates { ru: 0.6, rs: 0.0, rd: 0.0 }).unwrap();
    let a = uniform_allocation(&free).unwrap();
    let sim = Simulator::new(&free, &a, SelectionMode::Opportunistic).unwrap();
    for _ in 0..100 {
        let o = sim.simulate_trial(&ChannelDraw::sample(&free, &mut rng));
        assert!(!o.secondary_outage);
        assert_eq!(o.decode_mask, RelaySet::full(2));
    }
}

#[test]
fn golden_trial_is_pinned() {
    let cfg = presets::symmetric(2, 20.0).unwrap();
    let a = uniform_allocation(&cfg).unwrap();
    let t = run(&cfg, &a, 1000, 42, SelectionMode::Statistical).unwrap();
    assert_eq!((t.secondary, t.primary_p1, t.primary_p2), (85, 26, 24));
    assert_eq!(t.masks, vec![(111, 22), (221, 17), (236, 12), (432, 34)]);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let cfg = presets::symmetric(3, 25.0).unwrap();
    let a = uniform_allocation(&cfg).unwrap();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let serial = one.install(|| run(&cfg, &a, 100_000, 9, SelectionMode::Statistical).unwrap());
    let parallel = run(&cfg, &a, 100_000, 9, SelectionMode::Statistical).unwrap();
    assert_eq!(serial, parallel);
    let again = run(&cfg, &a, 100_000, 9, SelectionMode::Statistical).unwrap();
    assert_eq!(parallel, again);
    assert_ne!(parallel, run(&cfg, &a, 100_000, 10, SelectionMode::Statistical).unwrap());
}

#[test]
fn gains_are_exponential_with_configured_means() {
    let cfg = presets::asymmetric(1, 0.0).unwrap();
    let mut rng = common::rng(77);
    let n = 100_000;
    let draws: Vec<ChannelDraw> = (0..n).map(|_| ChannelDraw::sample(&cfg, &mut rng)).collect();
    let r = cfg.links.relays[0];
    type Getter = fn(&ChannelDraw) -> f64;
    let links: [(&str, f64, Getter); 5] = [
        ("uv", cfg.links.uv, |d| d.uv()),
        ("sd", cfg.links.sd, |d| d.sd()),
        ("ds", cfg.links.sd, |d| d.ds()),
        ("dr", r.dr, |d| d.relay(0)[1]),
        ("rd", r.dr, |d| d.relay(0)[5]),
    ];
    // 1% critical value of the one-sample Kolmogorov-Smirnov statistic
    let critical = 1.628 / (n as f64).sqrt();
    for (name, mean, get) in &links {
        let mut xs: Vec<f64> = draws.iter().map(get).collect();
        let avg = xs.iter().sum::<f64>() / n as f64;
        assert!((avg - mean).abs() < 3.0 * mean / (n as f64).sqrt(), "{name}: mean {avg} vs {mean}");
        xs.sort_by(f64::total_cmp);
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = 1.0 - (-x / mean).exp();
                (f - i as f64 / n as f64).max((i + 1) as f64 / n as f64 - f)
            })
            .fold(0.0, f64::max);
        assert!(ks < critical, "{name}: KS {ks} vs {critical}");
    }
}

#[test]
fn closed_forms_agree_with_simulation() {
    let cfg = presets::symmetric(2, 25.0).unwrap();
    let a = uniform_allocation(&cfg).unwrap();
    let t = run(&cfg, &a, N, 2024, SelectionMode::Opportunistic).unwrap();
    let b = total_outage(&cfg, &a).unwrap();
    for i in 0..2 {
        within(
            &t.estimate(Target::RelayOutage(i)).unwrap(),
            relay_outage_prob(&cfg, i, a.p_s, a.p_d).unwrap(),
            "relay",
        );
    }
    within(&t.estimate(Target::DecodeSet(RelaySet::EMPTY)).unwrap(), b.p_empty, "empty set");
    within(&t.estimate(Target::OutGivenSet(RelaySet::EMPTY)).unwrap(), b.p_out_given_empty, "direct");
    for s in &b.per_subset {
        within(&t.estimate(Target::DecodeSet(s.set)).unwrap(), s.p_set, "decode set");
        within(&t.estimate(Target::OutGivenSet(s.set)).unwrap(), s.p_out, "conditional");
    }
    within(&t.estimate(Target::SecondaryOutage).unwrap(), b.p_total, "total");
    within(&t.estimate(Target::PrimaryP1).unwrap(), cfg.p_th, "primary phase 1");
    within(&t.estimate(Target::PrimaryP2).unwrap(), cfg.p_th, "primary phase 2");
}

#[test]
fn decode_set_frequencies_partition_the_trials() {
    let cfg = presets::symmetric(3, 15.0).unwrap();
    let a = uniform_allocation(&cfg).unwrap();
    let t = run(&cfg, &a, 20_000, 5, SelectionMode::Statistical).unwrap();
    let total: u64 =
        RelaySet::full(3).nonempty_subsets().chain([RelaySet::EMPTY]).map(|s| t.masks[s.0 as usize].0).sum();
    assert_eq!(total, t.trials);
    let freq: f64 = (0..8).map(|k| t.estimate(Target::DecodeSet(RelaySet(k))).unwrap().p_hat).sum();
    assert_eq!(freq, 1.0);
}

#[test]
fn interference_limited_forward_outage() {
    // N0 / P_u = 1e-6 puts the transceivers deep in the interference-limited regime.
    let cfg = ScenarioConfig::new(presets::RATES, 1.0, 1e-6, 0.02, presets::asymmetric_links(1)).unwrap();
    let a = full_allocation(&cfg).unwrap();
    let est = estimate(&cfg, &a, N, 8, SelectionMode::Statistical, Target::StOutageGivenRelay(0)).unwrap();
    within(&est, st_outage_given_relay(&cfg, 0, &a).unwrap(), "forward outage");
}

#[test]
fn opportunistic_never_loses_to_statistical() {
    let mut rng = common::rng(99);
    let cfg = common::random_scenario(&mut rng, 4);
    let a = full_allocation(&cfg).unwrap();
    let stat = run(&cfg, &a, N, 3, SelectionMode::Statistical).unwrap();
    let opp = run(&cfg, &a, N, 3, SelectionMode::Opportunistic).unwrap();
    assert!(stat.secondary >= opp.secondary);
    assert_eq!(stat.masks.iter().map(|m| m.0).collect::<Vec<_>>(), opp.masks.iter().map(|m| m.0).collect::<Vec<_>>());
}

#[test]
fn primary_is_protected_under_lemma_allocation() {
    let cfg = presets::asymmetric(3, -3.0).unwrap();
    let a = full_allocation(&cfg).unwrap();
    let t = run(&cfg, &a, N, 17, SelectionMode::Statistical).unwrap();
    within(&t.estimate(Target::PrimaryP1).unwrap(), cfg.p_th, "primary phase 1");
    within(&t.estimate(Target::PrimaryP2).unwrap(), cfg.p_th, "primary phase 2");
}

#[test]
fn estimate_errors() {
    let cfg = presets::symmetric(2, 40.0).unwrap().with_rates(Rates { ru: 0.6, rs: 0.01, rd: 0.01 }).unwrap();
    let a = uniform_allocation(&cfg).unwrap();
    assert!(matches!(
        estimate(&cfg, &a, 999, 1, SelectionMode::Statistical, Target::SecondaryOutage),
        Err(Error::Validation(_))
    ));
    // low rates: both relays almost always decode, so the empty set is rare
    let err =
        estimate(&cfg, &a, 1000, 1, SelectionMode::Statistical, Target::OutGivenSet(RelaySet::EMPTY)).unwrap_err();
    assert!(matches!(err, Error::InsufficientConditioning { required: 100, .. }));
    assert!(estimate(&cfg, &a, 1000, 1, SelectionMode::Statistical, Target::RelayOutage(2)).is_err());
}

#[test]
fn exhaustive_search_examples() {
    let off = presets::asymmetric(1, 5.0).unwrap();
    assert_eq!(exhaustive_power_search(&off, 100, 11, SearchObjective::TotalOutage), Err(Error::SecondaryForbidden));
    assert!(matches!(exhaustive_power_search(&off, 10, 11, SearchObjective::TotalOutage), Err(Error::Validation(_))));

    let rates = Rates { ru: 0.6, rs: 0.25, rd: 0.25 };
    let cfg = ScenarioConfig::new(rates, 100.0, 1.0, 0.02, presets::symmetric_links(1)).unwrap();
    let r = exhaustive_power_search(&cfg, 100, 101, SearchObjective::TotalOutage).unwrap();
    assert!((r.p_s - r.p_d).abs() <= r.cell_p_s.max(r.cell_p_d));
    assert!((r.alpha[0] - 0.5).abs() <= r.cell_alpha);
}

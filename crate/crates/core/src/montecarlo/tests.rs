use super::*;
use proptest::prelude::*;

fn point_cloud_config(theta_deg: f64, epsilon: f64, n_trials: u64, seed: u64) -> RunConfig {
    let basis = PoincareBasis::from_degrees(theta_deg, 180.0).unwrap();
    let mut cfg = RunConfig::paper(basis, n_trials, seed);
    cfg.geometry = cfg.geometry.with_sigma_axial(0.0).unwrap();
    cfg.noise = NoiseParams::new(epsilon, 0.3, 0.0).unwrap();
    cfg
}

fn record(trial: u64, herald: bool, background: bool, signal: bool) -> TrialRecord {
    TrialRecord {
        trial,
        y_sample: 0.0,
        eta: 4.3,
        signal_excited: signal,
        ancilla_click: herald,
        click_is_background: background,
        perp_click: !herald,
        signal_click: signal,
        reference_phase_bin: 0,
        fringe_counts: 0,
    }
}

#[test]
fn fixed_seed_is_reproducible() {
    let cfg = RunConfig::paper(PoincareBasis::from_degrees(64.0, 180.0).unwrap(), 50_000, 7);
    let a = run(&cfg).unwrap();
    let b = run(&cfg).unwrap();
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
    let records = simulate(&cfg).unwrap();
    assert_eq!(summarize(&records, &cfg).unwrap(), a);
    let other = run(&RunConfig { seed: 8, ..cfg }).unwrap();
    assert_ne!(other, a);
}

#[test]
fn trials_are_independent_of_chunking() {
    let cfg = RunConfig::paper(PoincareBasis::from_degrees(118.0, 180.0).unwrap(), 40_000, 3);
    let records = simulate(&cfg).unwrap();
    let sampler = Sampler::new(&cfg);
    for i in [0u64, 1, 16_383, 16_384, 39_999] {
        let alone = sampler.sample(&mut trial_rng(cfg.seed, i), i);
        assert_eq!(records[i as usize], alone);
        assert_eq!(sample_trial(&mut trial_rng(cfg.seed, i), &cfg, i), alone);
    }
}

#[test]
fn background_implies_herald() {
    let cfg = RunConfig {
        noise: NoiseParams::new(0.3, 0.5, 0.0).unwrap(),
        ..RunConfig::paper(PoincareBasis::from_degrees(90.0, 180.0).unwrap(), 20_000, 1)
    };
    let records = simulate(&cfg).unwrap();
    assert!(records.iter().any(|r| r.click_is_background));
    for r in &records {
        assert!(!r.click_is_background || r.ancilla_click);
        assert!(!(r.ancilla_click && r.perp_click));
        assert!(!r.signal_click || r.signal_excited);
        assert!(r.ancilla_click || r.fringe_counts == 0);
    }
}

#[test]
fn vacuum_signal_has_no_gain() {
    let mut cfg = RunConfig::paper(PoincareBasis::from_degrees(64.0, 180.0).unwrap(), 20_000, 5);
    cfg.signal = SignalMode::from_mean_photon_number(0.0).unwrap();
    let s = run(&cfg).unwrap();
    assert!(s.gain_hat.is_none());
    assert!(s.g2_hat.is_none());
    assert_eq!(s.conditional_signal_rate, Some(0.0));
    assert_eq!(s.unconditional_signal_rate, 0.0);
}

#[test]
fn sigma_minus_basis_is_uncorrelated() {
    let cfg = point_cloud_config(0.0, 0.0, 1_000_000, 11);
    let s = run(&cfg).unwrap();
    let c = CouplingParams::resonant(cfg.geometry.eta0() / 2.0).unwrap();
    let p1 = project(&build_joint_state(&cfg.signal, &c), &cfg.basis).p1;
    let rate = s.herald_rate;
    assert!((rate.value - 0.3 * p1).abs() < 3.0 * rate.se.unwrap(), "{rate:?} vs {}", 0.3 * p1);
    let g2 = s.g2_hat.unwrap();
    assert!((g2.value - 1.0).abs() < 3.0 * g2.se.unwrap(), "{g2:?}");
    let phase = s.phase_hat.unwrap();
    assert!(wrap_phase(phase.value).abs() < 3.0 * phase.se.unwrap());
}

#[test]
fn no_detector_no_heralds() {
    let mut cfg = point_cloud_config(64.0, 0.02, 1_000, 2);
    cfg.noise = NoiseParams::new(0.02, 0.0, 0.0).unwrap();
    match run(&cfg) {
        Err(MonteCarloError::NoHeralds(summary)) => {
            assert_eq!(summary.n_trials, 1_000);
            assert!(summary.p1_hat.is_none());
            assert!(summary.phase_hat.is_none());
        }
        other => panic!("expected NoHeralds, got {other:?}"),
    }
}

#[test]
fn empty_records() {
    let cfg = point_cloud_config(0.0, 0.0, 1, 0);
    assert_eq!(summarize(&[], &cfg), Err(MonteCarloError::EmptyRecords));
}

#[test]
fn single_herald_flags_errors() {
    let cfg = point_cloud_config(0.0, 0.0, 1, 0);
    let records = [record(0, true, false, true), record(1, false, false, true), record(2, false, false, false)];
    let s = summarize(&records, &cfg).unwrap();
    assert_eq!(s.n_heralds, 1);
    assert!(s.herald_rate.se.is_none());
    assert!(s.p1_hat.unwrap().se.is_none());
    assert!(s.g2_hat.unwrap().se.is_none());
    assert!(s.phase_hat.is_none());
}

#[test]
fn background_dominated_records_give_unit_gain() {
    let cfg = point_cloud_config(0.0, 0.0, 1, 0);
    // Every fifth trial has a signal click whether or not it heralded.
    let records: Vec<TrialRecord> = (0..10_000u64)
        .map(|i| record(i, i % 2 == 0, i % 2 == 0, i % 5 == 0))
        .collect();
    let s = summarize(&records, &cfg).unwrap();
    assert_eq!(s.n_background_heralds, s.n_heralds);
    let gain = s.gain_hat.unwrap();
    assert!((gain.value - 1.0).abs() < 1e-12);
    assert!(gain.se.unwrap() > 0.0);
}

#[test]
fn invalid_configs() {
    let mut cfg = point_cloud_config(0.0, 0.0, 0, 0);
    assert!(matches!(run(&cfg), Err(MonteCarloError::InvalidConfig(_))));
    cfg.n_trials = 10;
    cfg.reference_phases = vec![1.0, 0.5];
    assert!(matches!(run(&cfg), Err(MonteCarloError::InvalidConfig(_))));
    cfg.reference_phases.clear();
    assert!(matches!(run(&cfg), Err(MonteCarloError::InvalidConfig(_))));
}

#[test]
fn event_log_format() {
    let records = [record(0, true, true, false), record(1, false, false, true)];
    let mut out = Vec::new();
    write_event_log(&mut out, &records).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], EVENT_LOG_COLUMNS);
    assert_eq!(lines[1], "0,0.0,4.3,0,1,1,0,0,0,0");
    assert_eq!(lines[2], "1,0.0,4.3,1,0,0,1,0,1,0");
}

#[test]
fn standard_errors_shrink_as_inverse_sqrt() {
    let basis = PoincareBasis::from_degrees(64.0, 180.0).unwrap();
    let small = run(&RunConfig::paper(basis, 100_000, 21)).unwrap();
    let large = run(&RunConfig::paper(basis, 10_000_000, 22)).unwrap();
    let ratios = [
        small.p1_hat.unwrap().se.unwrap() / large.p1_hat.unwrap().se.unwrap(),
        small.g2_hat.unwrap().se.unwrap() / large.g2_hat.unwrap().se.unwrap(),
        small.herald_rate.se.unwrap() / large.herald_rate.se.unwrap(),
    ];
    for r in ratios {
        assert!((r / 10.0 - 1.0).abs() < 0.2, "ratio {r}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn summaries_merge_over_any_split(split in 0usize..=3_000, seed in 0u64..50) {
        let cfg = RunConfig {
            noise: NoiseParams::new(0.1, 0.6, 0.0).unwrap(),
            ..RunConfig::paper(PoincareBasis::from_degrees(70.0, 180.0).unwrap(), 3_000, seed)
        };
        let records = simulate(&cfg).unwrap();
        let (a, b) = records.split_at(split);
        let mut merged = Tally::from_records(cfg.n_bins(), a);
        merged.merge(&Tally::from_records(cfg.n_bins(), b));
        prop_assert_eq!(&merged, &Tally::from_records(cfg.n_bins(), &records));
        prop_assert_eq!(&merged, &run_tally(&cfg).unwrap());
        let mut reversed = Tally::from_records(cfg.n_bins(), b);
        reversed.merge(&Tally::from_records(cfg.n_bins(), a));
        prop_assert_eq!(reversed, merged);
    }
}

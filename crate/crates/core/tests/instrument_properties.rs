use mmi_lab::config::ExperimentConfig;
use mmi_lab::instrument::{expected_g2_zero, simulate_run, DetectorConfig, Layout, SourceConfig};
use mmi_lab::tagstream::{cross_correlate, g2_zero, TimeTagStream};
use std::path::Path;

fn profile(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(
        &Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("data")
            .join(name),
    )
    .unwrap()
}

fn setup(name: &str, rate: f64) -> (SourceConfig, Layout, DetectorConfig) {
    let cfg = profile(name);
    let source = SourceConfig {
        atom_transit_rate: rate,
        ..cfg.source.clone()
    };
    (source, cfg.build_layout().unwrap(), cfg.detectors.clone())
}

#[test]
fn identical_seeds_give_identical_streams() {
    let (s, l, d) = setup("mmi.toml", 10.0);
    let a = simulate_run(&s, &l, &d, 200.0, 42).unwrap();
    let b = simulate_run(&s, &l, &d, 200.0, 42).unwrap();
    assert_eq!(a.stream.to_bytes(), b.stream.to_bytes());
    assert_eq!(a.truth, b.truth);
    let c = simulate_run(&s, &l, &d, 200.0, 43).unwrap();
    assert_ne!(a.stream.tags(), c.stream.tags());
}

#[test]
fn zero_duration_is_empty() {
    let (s, l, d) = setup("mmi.toml", 10.0);
    let out = simulate_run(&s, &l, &d, 0.0, 1).unwrap();
    assert!(out.stream.is_empty());
    assert_eq!(out.stream.n_channels(), 4);
    assert!(simulate_run(&s, &l, &d, -1.0, 1).is_err());
}

fn check_order_and_dead_time(stream: &TimeTagStream, dead_time_ns: f64) {
    let tags = stream.tags();
    assert!(tags
        .windows(2)
        .all(|w| (w[0].tick, w[0].channel) <= (w[1].tick, w[1].channel)));
    let mut last: Vec<Option<u64>> = vec![None; stream.n_channels() as usize];
    // Dead time is applied before quantization: allow one tick of rounding.
    let min_gap = stream.ticks_for(dead_time_ns).saturating_sub(1);
    for t in tags {
        if let Some(prev) = last[t.channel as usize] {
            assert!(
                t.tick - prev >= min_gap,
                "channel {} gap {}",
                t.channel,
                t.tick - prev
            );
        }
        last[t.channel as usize] = Some(t.tick);
    }
}

#[test]
fn streams_are_sorted_and_respect_dead_time() {
    for (name, dead) in [("mmi.toml", 50.0), ("hbt.toml", 50.0), ("hom.toml", 400.0)] {
        let (s, l, mut d) = setup(name, 50.0);
        d.dead_time = dead;
        d.dark_rate = 3.6e6;
        let out = simulate_run(&s, &l, &d, 200.0, 9).unwrap();
        assert!(out.truth.dead_time_losses > 0, "{name}");
        check_order_and_dead_time(&out.stream, dead);
        assert_eq!(
            out.stream.len() as u64 + out.truth.dead_time_losses,
            out.pre_dead_time.len() as u64,
            "{name}"
        );
    }
}

#[test]
fn hbt_g2_converges_to_two_photon_fraction() {
    // Without the dark state the side peaks fall off linearly with order
    // (finite transit length only), so the linear extrapolation is unbiased.
    // A low transit rate keeps accidentals between transits negligible.
    let (mut s, l, d) = setup("hbt.toml", 2.0);
    s.dark_state_prob = 0.0;
    let out = simulate_run(&s, &l, &d, 500_000.0, 5).unwrap();
    let hist = cross_correlate(&out.stream, 0, 1, 8.0 * s.duty_cycle, 100.0, 100.0).unwrap();
    let report = g2_zero(&hist, s.duty_cycle).unwrap();
    let expected_central = expected_g2_zero(&s) * report.reference_area;
    assert!(
        report.central_area >= 1e4 || report.reference_area >= 1e4,
        "{report:?}"
    );
    let chi = (report.central_area - expected_central) / expected_central.sqrt();
    assert!(
        chi.abs() <= 3.0,
        "g2 {} vs {}: chi {chi}",
        report.g2_zero,
        expected_g2_zero(&s)
    );
}

#[test]
fn dark_counts_are_poissonian() {
    let (mut s, l, mut d) = setup("mmi.toml", 1.0);
    s.emission_prob = 0.0;
    s.two_photon_prob = 0.0;
    d.dark_rate = 36_000.0;
    let out = simulate_run(&s, &l, &d, 1000.0, 3).unwrap();
    let counts = out.stream.counts_per_channel();
    let expected = 10.0 * 1000.0;
    for c in counts {
        assert!((c as f64 - expected).abs() <= 4.0 * expected.sqrt(), "{c}");
    }
    assert_eq!(out.truth.detected_photons, 0);
}

use mmi_lab::mmi::{coincidence_classical, coincidence_quantum, Normalization, TransferMatrix};
use mmi_lab::stats::similarity;
use mmi_lab::temporal::{joint_density, CoherenceModel, Wavepacket};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn envelope() -> Wavepacket {
    Wavepacket::sin2_envelope(300.0, 1.0).unwrap()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn integrated_limits_match_closed_forms(seed in any::<u64>(), n in 2usize..5) {
        let m = TransferMatrix::random_unitary(n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let z = envelope();
        let q = coincidence_quantum(&m, 0, 1, Normalization::Raw).unwrap();
        let c = coincidence_classical(&m, 0, 1, Normalization::Raw).unwrap();
        let jq = joint_density(&m, 0, 1, &z, &z, CoherenceModel::Perfect, 0.0).unwrap().integrated();
        let jc = joint_density(&m, 0, 1, &z, &z, CoherenceModel::Distinguishable, 0.0).unwrap().integrated();
        prop_assert!(max_diff(jq.values(), q.values()) <= 1e-6);
        prop_assert!(max_diff(jc.values(), c.values()) <= 1e-6);
    }

    #[test]
    fn densities_are_non_negative_and_marginals_symmetric(seed in any::<u64>(), jitter in 0.0f64..0.1) {
        let m = TransferMatrix::random_unitary(3, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let z = envelope();
        let coherence = CoherenceModel::gaussian(jitter).unwrap();
        let j = joint_density(&m, 0, 2, &z, &z, coherence, 0.0).unwrap();
        for &pair in j.pairs() {
            prop_assert!(j.density(pair).unwrap().iter().all(|&p| p >= 0.0));
            let marginal = j.separation_marginal(pair).unwrap();
            let reversed: Vec<f64> = marginal.iter().rev().copied().collect();
            prop_assert!(max_diff(&marginal, &reversed) <= 1e-12);
        }
    }
}

#[test]
fn similarity_to_quantum_falls_with_separation() {
    let m = TransferMatrix::measured_chip();
    let z = envelope();
    let j = joint_density(
        &m,
        0,
        1,
        &z,
        &z,
        CoherenceModel::gaussian(0.012752).unwrap(),
        0.0,
    )
    .unwrap();
    let q = coincidence_quantum(&m, 0, 1, Normalization::Renormalized)
        .unwrap()
        .cross_detector();
    let mut previous = f64::INFINITY;
    for k in 0..11 {
        let w = j
            .windowed_distribution_at(25.0 * k as f64, 25.0)
            .unwrap()
            .cross_detector();
        let s = similarity(w.values(), q.values()).unwrap();
        assert!(s <= previous + 1e-12, "window {k}: {s} > {previous}");
        previous = s;
    }
}

//! Bulk statistical checks of the samplers against the exact pmfs.

use bpve_core::offspring::OffspringLaw;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Empirical pmf over a million draws must sit within 4 sigma of the exact
/// pmf in every cell k <= 20 with a meaningful expected count.
fn check_empirical_pmf(law: &OffspringLaw, seed: u64) {
    const N: u64 = 1_000_000;
    let sampler = law.sampler();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = [0u64; 21];
    for _ in 0..N {
        let k = sampler.sample(&mut rng);
        if k <= 20 {
            counts[k as usize] += 1;
        }
    }
    for k in 0..=20u64 {
        let p = law.pmf(k);
        let expected = N as f64 * p;
        if expected < 5.0 {
            continue;
        }
        let sigma = (N as f64 * p * (1.0 - p)).sqrt();
        let diff = (counts[k as usize] as f64 - expected).abs();
        assert!(
            diff <= 4.0 * sigma,
            "{law}: cell k={k} off by {diff:.1} (4 sigma = {:.1})",
            4.0 * sigma
        );
    }
}

#[test]
fn empirical_pmf_finite() {
    check_empirical_pmf(&OffspringLaw::finite(vec![0.1, 0.3, 0.2, 0.4]).unwrap(), 2024);
}

#[test]
fn empirical_pmf_geometric() {
    check_empirical_pmf(&OffspringLaw::geometric(2.0).unwrap(), 2025);
}

#[test]
fn empirical_pmf_power_tail() {
    check_empirical_pmf(&OffspringLaw::power_tail(0.5, 1.5).unwrap(), 2026);
}

#[test]
fn empirical_pmf_thinned_power_tail() {
    let law = OffspringLaw::power_tail(0.5, 1.5)
        .unwrap()
        .thin(2.0 / 3.0)
        .unwrap();
    check_empirical_pmf(&law, 2027);
}

#[test]
fn empirical_pmf_thinned_finite() {
    let law = OffspringLaw::finite(vec![0.0, 0.0, 0.5, 0.5])
        .unwrap()
        .thin(0.4)
        .unwrap();
    check_empirical_pmf(&law, 2028);
}

#[test]
fn power_tail_tail_mass_reached() {
    // the lazily grown table must extend far into the tail without bias:
    // P(X > 100) = sum_{k>100} c k^-2.5 ~ c * 100^-1.5 / 1.5
    let law = OffspringLaw::power_tail(0.5, 1.5).unwrap();
    let sampler = law.sampler();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 1_000_000u64;
    let big = (0..n).filter(|_| sampler.sample(&mut rng) > 100).count() as f64;
    let p: f64 = (101..100_000u64).map(|k| law.pmf(k)).sum();
    let sigma = (n as f64 * p * (1.0 - p)).sqrt();
    assert!(
        (big - n as f64 * p).abs() < 4.0 * sigma,
        "tail mass: saw {big}, expected {}",
        n as f64 * p
    );
}

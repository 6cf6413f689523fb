mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smfft_core::numtheory::ModulusPair;
use smfft_core::signal::{make_noise, NoiseModel, NoiseSource};
use smfft_core::{md_sfft, MdSpectrum, RankOneLattice, SparseSpectrum, SupportParams};

use common::{random_md, random_spectrum};

#[test]
fn sample_counts_do_not_depend_on_dimension() {
    // Same flattened spectrum and seed seen as 1-D, 2-D and 3-D.
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let flat = random_spectrum(1 << 18, 12, &mut rng);
    let params = SupportParams::new(12);
    let mut counts = Vec::new();
    for (d, m) in [(1usize, 1u64 << 18), (2, 1 << 9), (3, 1 << 6)] {
        let lat = RankOneLattice::new(d, m).unwrap();
        let spectrum = MdSpectrum::from_flat(lat.clone(), &flat).unwrap();
        let mut run_rng = ChaCha8Rng::seed_from_u64(5);
        let out = md_sfft(&spectrum.flatten(), NoiseSource::silent(), &lat, &params, &mut run_rng).unwrap();
        assert_eq!(out.spectrum.flatten().support(), flat.support());
        counts.push((out.unique_samples, out.total_requests));
    }
    assert!(counts.windows(2).all(|w| w[0] == w[1]), "{counts:?}");
}

#[test]
fn seeded_runs_are_reproducible() {
    let lat = RankOneLattice::new(3, 64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let truth = random_md(&lat, 20, &mut rng);
    let params = SupportParams { eta: 1e-2, ..SupportParams::new(20) };
    let run = || {
        let noise = make_noise(&NoiseModel::gaussian(1e-2, 9)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        md_sfft(&truth.flatten(), noise, &lat, &params, &mut rng).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.spectrum, b.spectrum);
    assert_eq!(a.unique_samples, b.unique_samples);
    assert_eq!(a.draws, b.draws);
}

#[test]
fn billion_point_cube_with_noise() {
    // 3-D, M = 2^10, R = 50, η = 1e-2.
    let lat = RankOneLattice::new(3, 1 << 10).unwrap();
    let params = SupportParams { eta: 1e-2, ..SupportParams::new(50) };
    for seed in 0..3 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth = random_md(&lat, 50, &mut rng);
        let noise = make_noise(&NoiseModel::gaussian(1e-2, seed)).unwrap();
        let out = md_sfft(&truth.flatten(), noise, &lat, &params, &mut rng).unwrap();
        let err = out.spectrum.flatten().relative_error(&truth.flatten());
        assert!(err <= 3e-2, "seed {seed}: relative error {err}");
    }
}

#[test]
fn padding_never_leaks_into_output() {
    // 10^3 is not a multiple of K, so the ladder pads past M^d.
    let lat = RankOneLattice::new(3, 10).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..10 {
        let truth = random_md(&lat, 6, &mut rng);
        let out = md_sfft(&truth.flatten(), NoiseSource::silent(), &lat, &SupportParams::new(6), &mut rng).unwrap();
        assert_eq!(out.spectrum.entries().keys().collect::<Vec<_>>(), truth.entries().keys().collect::<Vec<_>>());
    }
}

proptest! {
    #[test]
    fn flatten_round_trips(d in 1usize..=4, m in 1u64..=40, seed in any::<u64>()) {
        let lat = RankOneLattice::new(d, m).unwrap();
        let flat = seed % lat.total();
        let multi = lat.unflatten_index(flat).unwrap();
        prop_assert_eq!(lat.flatten_index(&multi).unwrap(), flat);
        let point = lat.lattice_point(flat);
        prop_assert!(point.iter().all(|&x| x < lat.total()));
    }

    #[test]
    fn shuffle_round_trips(m in 2u64..1_000_000, q_seed in any::<u64>(), n in any::<u64>()) {
        let q = (1 + q_seed % (m - 1)..m).chain(1..m).find(|&q| smfft_core::numtheory::gcd(q, m) == 1).unwrap();
        let pair = ModulusPair::new(q, m).unwrap();
        prop_assert_eq!(pair.unshuffle(pair.shuffle(n)), n % m);
    }

    #[test]
    fn aliasing_preserves_mass(entries in prop::collection::btree_map(0u64..5000, 0.5f64..1.5, 0..30), m in 1u64..200) {
        let s = SparseSpectrum::new(5000, entries.clone()).unwrap();
        let total: f64 = entries.values().sum();
        let aliased: f64 = s.aliased(m).values().sum();
        prop_assert!((total - aliased).abs() < 1e-9);
        prop_assert!(s.aliased(m).keys().all(|&k| k < m));
    }
}

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::Rng;
use smfft_core::{MdSpectrum, RankOneLattice, SparseSpectrum};

/// `r` distinct indices in `[0, n)` with amplitudes uniform in `[0.5, 1.5]`.
pub fn random_spectrum<R: Rng + ?Sized>(n: u64, r: usize, rng: &mut R) -> SparseSpectrum {
    let mut entries = BTreeMap::new();
    if n <= usize::MAX as u64 && (r as u64) * 4 > n {
        for i in sample(rng, n as usize, r) {
            entries.insert(i as u64, rng.random_range(0.5..1.5));
        }
    } else {
        while entries.len() < r {
            entries.insert(rng.random_range(0..n), rng.random_range(0.5..1.5));
        }
    }
    SparseSpectrum::new(n, entries).unwrap()
}

pub fn random_md<R: Rng + ?Sized>(lattice: &RankOneLattice, r: usize, rng: &mut R) -> MdSpectrum {
    let flat = random_spectrum(lattice.total(), r, rng);
    MdSpectrum::from_flat(lattice.clone(), &flat).unwrap()
}

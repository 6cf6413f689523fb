//! End-to-end sparse transform: support recovery followed by value recovery,
//! in 1-D and through the rank-1 lattice in `d` dimensions.

use std::time::{Duration, Instant};

use rand::Rng;

use crate::error::Result;
use crate::lattice::{MdSpectrum, RankOneLattice};
use crate::signal::{NoiseSource, Oracle, Sampler, SparseSpectrum};
use crate::support::{find_support, SupportParams, SupportRecovery};
use crate::values::{compute_values, ValueRecovery};

/// Target accuracy of the Neumann series when samples are exact.
pub const NOISELESS_ACCURACY: f64 = 1e-12;

/// Full output of a 1-D run.
#[derive(Debug, Clone)]
pub struct SfftOutput {
    pub spectrum: SparseSpectrum,
    pub support: SupportRecovery,
    pub values: ValueRecovery,
}

/// Recovers the nonnegative sparse spectrum on `[0, n)` behind `sampler`.
///
/// Support indices the ladder reports beyond `n` (possible only because of
/// padding) are discarded, and recovered amplitudes below the detection
/// threshold `δμ/2` are dropped as they cannot belong to a spectrum whose
/// smallest entry is at least `μ`.
pub fn sfft_1d<R: Rng + ?Sized>(
    sampler: &mut Sampler<'_>,
    n: u64,
    params: &SupportParams,
    rng: &mut R,
) -> Result<SfftOutput> {
    let mut support = find_support(sampler, n, params, rng)?;
    support.support.retain(|&j| j < n);
    let accuracy = if params.eta > 0.0 { params.eta } else { NOISELESS_ACCURACY };
    let values = compute_values(&support.support, params.r_bound, n, params.p_fail, accuracy, sampler, rng)?;
    let floor = params.delta * params.mu / 2.0;
    let spectrum = SparseSpectrum::new(
        n,
        values.values.iter().filter(|(_, v)| v.re >= floor).map(|&(j, v)| (j, v.re)),
    )?;
    Ok(SfftOutput { spectrum, support, values })
}

/// Output of a `d`-dimensional run with the bookkeeping reports need.
#[derive(Debug, Clone)]
pub struct MdOutput {
    pub spectrum: MdSpectrum,
    pub unique_samples: u64,
    pub total_requests: u64,
    pub ladder_steps: usize,
    pub draws: usize,
    /// Wall time of the whole run.
    pub elapsed: Duration,
    /// Portion of `elapsed` spent producing samples (see [`Sampler`]).
    pub oracle_time: Duration,
}

impl MdOutput {
    /// Wall time excluding sample production.
    pub fn solver_time(&self) -> Duration {
        self.elapsed.saturating_sub(self.oracle_time)
    }
}

/// Sparse transform of a `d`-dimensional signal given by its 1-D restriction
/// to the rank-1 line (`oracle`), with recovered indices mapped back to
/// `[0, M)^d`.
pub fn md_sfft<R: Rng + ?Sized>(
    oracle: &dyn Oracle,
    noise: NoiseSource,
    lattice: &RankOneLattice,
    params: &SupportParams,
    rng: &mut R,
) -> Result<MdOutput> {
    let start = Instant::now();
    let mut sampler = Sampler::new(oracle, noise);
    let out = sfft_1d(&mut sampler, lattice.total(), params, rng)?;
    let elapsed = start.elapsed();
    let spectrum = MdSpectrum::from_flat(lattice.clone(), &out.spectrum)?;
    Ok(MdOutput {
        spectrum,
        unique_samples: sampler.ledger().unique(),
        total_requests: sampler.ledger().total_requests(),
        ladder_steps: out.support.steps.len(),
        draws: out.values.draws,
        elapsed,
        oracle_time: sampler.oracle_time(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{make_noise, NoiseModel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn three_spike_end_to_end() {
        let s = SparseSpectrum::new(40, [(1, 1.0), (23, 1.0), (35, 1.0)]).unwrap();
        let params = SupportParams::new(3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut sampler = Sampler::noiseless(&s);
        let out = sfft_1d(&mut sampler, 40, &params, &mut rng).unwrap();
        assert_eq!(out.spectrum.support(), vec![1, 23, 35]);
        assert!(out.spectrum.relative_error(&s) < 1e-9);
    }

    #[test]
    fn empty_md_signal() {
        let lat = RankOneLattice::new(2, 16).unwrap();
        let s = MdSpectrum::empty(lat.clone());
        let flat = s.flatten();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = md_sfft(&flat, NoiseSource::silent(), &lat, &SupportParams::new(5), &mut rng).unwrap();
        assert!(out.spectrum.is_empty());
        assert_eq!(out.draws, 0);
    }

    #[test]
    fn noisy_run_is_close() {
        let lat = RankOneLattice::new(3, 32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let entries: Vec<(Vec<u64>, f64)> = (0..10)
            .map(|_| ((0..3).map(|_| rng.random_range(0..32)).collect(), rng.random_range(0.5..1.5)))
            .collect::<std::collections::BTreeMap<_, _>>()
            .into_iter()
            .collect();
        let s = MdSpectrum::new(lat.clone(), entries).unwrap();
        let params = SupportParams { eta: 1e-2, ..SupportParams::new(10) };
        let noise = make_noise(&NoiseModel::gaussian(1e-2, 5)).unwrap();
        let out = md_sfft(&s.flatten(), noise, &lat, &params, &mut rng).unwrap();
        let err = out.spectrum.flatten().relative_error(&s.flatten());
        assert!(err < 3e-2, "err = {err}");
        assert_eq!(out.spectrum.entries().keys().collect::<Vec<_>>(), s.entries().keys().collect::<Vec<_>>());
    }
}

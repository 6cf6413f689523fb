//! Ground-truth sparse spectra and the sampling oracle.
//!
//! Spectra live in frequency space and time-domain samples are synthesized on
//! demand in `O(R)` each, so ambient sizes up to `2⁶⁰` never get materialized.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dft::{dft, Direction};
use crate::error::{Error, Result};
use crate::numtheory::{gcd, mul_mod};

/// Largest ambient size the dense oracles will materialize.
pub const DENSE_LIMIT: u64 = 1 << 20;

/// An `R`-sparse nonnegative spectrum on `[0, N)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseSpectrum {
    ambient_size: u64,
    entries: BTreeMap<u64, f64>,
}

impl SparseSpectrum {
    pub fn new(ambient_size: u64, entries: impl IntoIterator<Item = (u64, f64)>) -> Result<Self> {
        if ambient_size == 0 {
            return Err(Error::InvalidSignal("ambient size must be positive".into()));
        }
        let mut map = BTreeMap::new();
        for (j, v) in entries {
            if j >= ambient_size {
                return Err(Error::InvalidSignal(format!("index {j} outside [0, {ambient_size})")));
            }
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidSignal(format!("amplitude {v} at {j} is not nonnegative")));
            }
            if v > 0.0 && map.insert(j, v).is_some() {
                return Err(Error::InvalidSignal(format!("duplicate index {j}")));
            }
        }
        Ok(Self { ambient_size, entries: map })
    }

    pub fn empty(ambient_size: u64) -> Self {
        Self { ambient_size, entries: BTreeMap::new() }
    }

    pub fn ambient_size(&self) -> u64 {
        self.ambient_size
    }

    pub fn entries(&self) -> &BTreeMap<u64, f64> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn support(&self) -> Vec<u64> {
        self.entries.keys().copied().collect()
    }

    pub fn get(&self, j: u64) -> f64 {
        self.entries.get(&j).copied().unwrap_or(0.0)
    }

    pub fn l2_norm(&self) -> f64 {
        self.entries.values().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `‖self − other‖₂` over the union of both supports.
    pub fn l2_distance(&self, other: &SparseSpectrum) -> f64 {
        let keys: BTreeSet<u64> = self.entries.keys().chain(other.entries.keys()).copied().collect();
        keys.iter().map(|&j| (self.get(j) - other.get(j)).powi(2)).sum::<f64>().sqrt()
    }

    /// Relative ℓ₂ error of `self` against `truth`; zero when both vanish.
    pub fn relative_error(&self, truth: &SparseSpectrum) -> f64 {
        let norm = truth.l2_norm();
        let dist = self.l2_distance(truth);
        if norm == 0.0 {
            dist
        } else {
            dist / norm
        }
    }

    /// `f̂^(M)_l = Σ_{j ≡ l mod M} f̂_j`.
    pub fn aliased(&self, modulus: u64) -> BTreeMap<u64, f64> {
        let mut out = BTreeMap::new();
        for (&j, &v) in &self.entries {
            *out.entry(j % modulus).or_insert(0.0) += v;
        }
        out
    }

    /// Noiseless `f(numerator/denominator) = Σ_j exp(−2πi·(numerator·j mod denominator)/denominator)·f̂_j`.
    pub fn evaluate(&self, numerator: u64, denominator: u64) -> Complex64 {
        let num = numerator % denominator;
        let scale = 2.0 * PI / denominator as f64;
        self.entries
            .iter()
            .map(|(&j, &v)| {
                let r = mul_mod(num, j % denominator, denominator);
                let (s, c) = (-(r as f64) * scale).sin_cos();
                Complex64::new(v * c, v * s)
            })
            .sum()
    }
}

/// Noise injection model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub eta: f64,
    pub kind: NoiseKind,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    None,
    Gaussian,
}

impl NoiseModel {
    pub const NONE: NoiseModel = NoiseModel { eta: 0.0, kind: NoiseKind::None, seed: 0 };

    pub fn gaussian(eta: f64, seed: u64) -> Self {
        Self { eta, kind: NoiseKind::Gaussian, seed }
    }
}

/// Per-request noise stream: i.i.d. complex Gaussian with `E|ν|² = η²`.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    draw: Option<(ChaCha8Rng, Normal<f64>)>,
}

impl NoiseSource {
    pub fn silent() -> Self {
        Self { draw: None }
    }

    #[inline]
    pub fn next_draw(&mut self) -> Complex64 {
        match &mut self.draw {
            None => Complex64::new(0.0, 0.0),
            Some((rng, normal)) => Complex64::new(normal.sample(rng), normal.sample(rng)),
        }
    }
}

/// Builds the noise stream for `model`.
pub fn make_noise(model: &NoiseModel) -> Result<NoiseSource> {
    match model.kind {
        NoiseKind::None => Ok(NoiseSource::silent()),
        NoiseKind::Gaussian => {
            if !(model.eta > 0.0 && model.eta.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "gaussian noise needs eta > 0, got {}",
                    model.eta
                )));
            }
            let normal = Normal::new(0.0, model.eta / 2f64.sqrt())
                .map_err(|e| Error::InvalidParameter(e.to_string()))?;
            Ok(NoiseSource { draw: Some((ChaCha8Rng::seed_from_u64(model.seed), normal)) })
        }
    }
}

/// Sample-location accounting keyed by reduced fraction.
#[derive(Debug, Clone, Default)]
pub struct SampleLedger {
    unique_points: HashSet<(u64, u64)>,
    total_requests: u64,
}

impl SampleLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, numerator: u64, denominator: u64) {
        self.total_requests += 1;
        self.unique_points.insert(reduce(numerator, denominator));
    }

    pub fn unique(&self) -> u64 {
        self.unique_points.len() as u64
    }

    pub fn total_requests(&self) -> u64 {
        self.total_requests
    }
}

/// `numerator/denominator` in lowest terms with the numerator reduced into `[0, denominator)`.
pub fn reduce(numerator: u64, denominator: u64) -> (u64, u64) {
    let num = numerator % denominator;
    if num == 0 {
        return (0, 1);
    }
    let g = gcd(num, denominator);
    (num / g, denominator / g)
}

/// Anything that can be evaluated at rational points of the unit period.
pub trait Oracle {
    fn evaluate(&self, numerator: u64, denominator: u64) -> Complex64;
}

impl Oracle for SparseSpectrum {
    fn evaluate(&self, numerator: u64, denominator: u64) -> Complex64 {
        SparseSpectrum::evaluate(self, numerator, denominator)
    }
}

impl<F: Fn(u64, u64) -> Complex64> Oracle for F {
    fn evaluate(&self, numerator: u64, denominator: u64) -> Complex64 {
        self(numerator, denominator)
    }
}

/// Noisy, accounted access to an [`Oracle`].
///
/// Time spent producing samples (oracle evaluation, noise and accounting) is
/// tracked separately so solver cost can be reported apart from the cost of
/// synthesizing test signals.
pub struct Sampler<'a> {
    oracle: &'a dyn Oracle,
    noise: NoiseSource,
    ledger: SampleLedger,
    oracle_time: Duration,
}

impl<'a> Sampler<'a> {
    pub fn new(oracle: &'a dyn Oracle, noise: NoiseSource) -> Self {
        Self { oracle, noise, ledger: SampleLedger::new(), oracle_time: Duration::ZERO }
    }

    pub fn noiseless(oracle: &'a dyn Oracle) -> Self {
        Self::new(oracle, NoiseSource::silent())
    }

    pub fn sample(&mut self, numerator: u64, denominator: u64) -> Complex64 {
        assert!(denominator >= 1);
        let start = Instant::now();
        let value = self.oracle.evaluate(numerator % denominator, denominator);
        self.ledger.record(numerator, denominator);
        let value = value + self.noise.next_draw();
        self.oracle_time += start.elapsed();
        value
    }

    /// Samples at `numerators[i] / denominator` for every `i`.
    pub fn sample_many(&mut self, denominator: u64, numerators: &[u64]) -> Vec<Complex64> {
        let start = Instant::now();
        let out = numerators
            .iter()
            .map(|&n| {
                self.ledger.record(n, denominator);
                self.oracle.evaluate(n % denominator, denominator) + self.noise.next_draw()
            })
            .collect();
        self.oracle_time += start.elapsed();
        out
    }

    pub fn ledger(&self) -> &SampleLedger {
        &self.ledger
    }

    pub fn oracle_time(&self) -> Duration {
        self.oracle_time
    }
}

/// One noisy sample of `spectrum` at `numerator/denominator`, recorded in `ledger`.
pub fn sample_at(
    spectrum: &SparseSpectrum,
    noise: &mut NoiseSource,
    numerator: u64,
    denominator: u64,
    ledger: &mut SampleLedger,
) -> Complex64 {
    ledger.record(numerator, denominator);
    spectrum.evaluate(numerator, denominator) + noise.next_draw()
}

/// The `M` samples at `(n·multiplier mod M)/M` for `n = 0..M`.
pub fn batch_subsampled(sampler: &mut Sampler<'_>, modulus: u64, multiplier: u64) -> Vec<Complex64> {
    let points: Vec<u64> = (0..modulus).map(|n| mul_mod(n, multiplier, modulus)).collect();
    sampler.sample_many(modulus, &points)
}

/// Materializes `f_{n;N}` for all `n` via a dense transform of the spectrum.
pub fn dense_oracle_dft(spectrum: &SparseSpectrum) -> Result<Vec<Complex64>> {
    let n = spectrum.ambient_size();
    if n > DENSE_LIMIT {
        return Err(Error::OracleTooLarge { size: n, limit: DENSE_LIMIT });
    }
    let mut dense = vec![Complex64::new(0.0, 0.0); n as usize];
    for (&j, &v) in spectrum.entries() {
        dense[j as usize] = Complex64::new(v, 0.0);
    }
    Ok(dft(&dense, Direction::Forward))
}

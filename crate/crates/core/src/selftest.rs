//! Property suites that can be run outside `cargo test`, e.g. from the CLI.
//!
//! Each suite checks one structural fact the algorithms rely on, at a size
//! where the check is exhaustive or cheap enough for many random draws.
//! [`Hooks`] lets callers swap in a deliberately broken primitive to confirm
//! the suites actually catch mistakes.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dft::{dft, Direction};
use crate::error::Result;
use crate::filter::{gaussian_filter_weight, FilterSpec};
use crate::lattice::{dense_grid_samples, dense_md_coefficients, rank1_coefficients, MdSpectrum, RankOneLattice};
use crate::numtheory::{gcd, mod_inverse, mul_mod, sample_coprime};
use crate::signal::{Sampler, SparseSpectrum};
use crate::support::SupportParams;
use crate::transform::sfft_1d;
use crate::values::{dense_perturbation_norm, draw_measurement, prime_pool, BLOCKS};

/// Replaceable primitives.
#[derive(Clone, Copy)]
pub struct Hooks {
    pub mod_inverse: fn(u64, u64) -> Result<u64>,
}

impl Default for Hooks {
    fn default() -> Self {
        Self { mod_inverse }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    #[serde(skip)]
    pub elapsed: Duration,
}

type Suite = fn(&Hooks, u64) -> std::result::Result<String, String>;

const SUITES: &[(&str, Suite)] = &[
    ("isomorphism", isomorphism),
    ("hash-identity", hash_identity),
    ("shuffle-spread", shuffle_spread),
    ("filter-wrap", filter_wrap),
    ("crt-separation", crt_separation),
    ("contraction", contraction),
    ("rank1-exactness", rank1_exactness),
    ("oracle-equivalence", oracle_equivalence),
];

pub fn suite_names() -> Vec<&'static str> {
    SUITES.iter().map(|(n, _)| *n).collect()
}

/// Runs every suite with the given hooks and seed.
pub fn run_all(hooks: &Hooks, seed: u64) -> Vec<SuiteResult> {
    SUITES
        .iter()
        .map(|&(name, suite)| {
            let start = Instant::now();
            let outcome = suite(hooks, seed);
            let elapsed = start.elapsed();
            match outcome {
                Ok(detail) => SuiteResult { name, passed: true, detail, elapsed },
                Err(detail) => SuiteResult { name, passed: false, detail, elapsed },
            }
        })
        .collect()
}

/// `n ↦ nQ mod M` is a bijection undone by `[Q]⁻¹`, for every `M ≤ 200`
/// and every unit `Q`.
pub fn isomorphism(hooks: &Hooks, _seed: u64) -> std::result::Result<String, String> {
    let mut checked = 0u64;
    for m in 2..=200u64 {
        let mut seen = vec![false; m as usize];
        for q in (1..m).filter(|&q| gcd(q, m) == 1) {
            let inv = (hooks.mod_inverse)(q, m).map_err(|e| format!("M={m} Q={q}: {e}"))?;
            seen.iter_mut().for_each(|s| *s = false);
            for n in 0..m {
                let image = mul_mod(n, q, m);
                if std::mem::replace(&mut seen[image as usize], true) {
                    return Err(format!("M={m} Q={q}: {image} hit twice"));
                }
                if mul_mod(image, inv, m) != n {
                    return Err(format!("M={m} Q={q}: inverse {inv} does not undo the shuffle"));
                }
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} (M, Q) pairs"))
}

/// `(1/M) Σ_n exp(2πi mn/M) f_{nQ mod M} = f̂_{m[Q]⁻¹ mod M}` for random
/// spectra with `M ≤ 64`.
pub fn hash_identity(hooks: &Hooks, seed: u64) -> std::result::Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4841_5348);
    let mut worst = 0.0f64;
    for m in 2..=64u64 {
        for _ in 0..4 {
            let spectrum: Vec<Complex64> =
                (0..m).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let samples = dft(&spectrum, Direction::Forward);
            let q = sample_coprime(m, &mut rng);
            let inv = (hooks.mod_inverse)(q, m).map_err(|e| format!("M={m} Q={q}: {e}"))?;
            let shuffled: Vec<Complex64> = (0..m).map(|n| samples[mul_mod(n, q, m) as usize]).collect();
            let coeffs = dft(&shuffled, Direction::Inverse);
            for (k, c) in coeffs.iter().enumerate() {
                let err = (c - spectrum[mul_mod(k as u64, inv, m) as usize]).norm();
                worst = worst.max(err);
            }
        }
    }
    if worst <= 1e-10 {
        Ok(format!("max deviation {worst:.2e}"))
    } else {
        Err(format!("max deviation {worst:.2e} exceeds 1e-10"))
    }
}

/// For fixed `j`, the fraction of units `Q` with `|jQ mod M| ≤ C` (signed
/// distance to 0) stays within a small multiple of `C/M·log log M`.
pub fn shuffle_spread(_hooks: &Hooks, seed: u64) -> std::result::Result<String, String> {
    const SLACK: f64 = 4.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5350_5244);
    let mut worst_ratio = 0.0f64;
    for m in [256u64, 1000, 1024, 4096, 4099] {
        let units: Vec<u64> = (1..m).filter(|&q| gcd(q, m) == 1).collect();
        let c = 8u64;
        let bound = SLACK * (2 * c + 1) as f64 / m as f64 * (m as f64).ln().ln().max(1.0);
        for _ in 0..20 {
            let j = rng.random_range(1..m);
            let hits = units
                .iter()
                .filter(|&&q| {
                    let r = mul_mod(j, q, m);
                    r.min(m - r) <= c
                })
                .count();
            let freq = hits as f64 / units.len() as f64;
            worst_ratio = worst_ratio.max(freq / bound);
            if freq > bound {
                return Err(format!("M={m} j={j}: frequency {freq:.4} above {bound:.4}"));
            }
        }
    }
    Ok(format!("worst frequency at {:.0}% of the bound", 100.0 * worst_ratio))
}

/// The truncated wrapped Gaussian matches a wide reference sum.
pub fn filter_wrap(_hooks: &Hooks, _seed: u64) -> std::result::Result<String, String> {
    let mut worst = 0.0f64;
    for (sigma, m) in [(0.05, 64u64), (0.3, 100), (2.0, 12), (0.1, 1 << 20), (500.0, 1 << 20)] {
        let spec = FilterSpec::new(sigma, m, 1).map_err(|e| e.to_string())?;
        for k in [0, 1, m / 3, m / 2, m - 1] {
            let x = k as f64 / m as f64;
            let reference: f64 = PI.sqrt()
                * sigma
                * (-200i64..=200).map(|l| (-(PI * sigma * (x + l as f64)).powi(2)).exp()).sum::<f64>();
            let got = gaussian_filter_weight(k, &spec);
            let dev = if reference > 1e-290 { (got - reference).abs() / reference } else { got.abs() };
            worst = worst.max(dev);
        }
    }
    if worst <= 1e-12 {
        Ok(format!("max relative deviation {worst:.2e}"))
    } else {
        Err(format!("max relative deviation {worst:.2e}"))
    }
}

/// With `T > log_R N` distinct primes above `R`, residues modulo every prime
/// separate all of `[0, N)`. Checked exhaustively over differences.
pub fn crt_separation(_hooks: &Hooks, seed: u64) -> std::result::Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4352_5453);
    let mut draws = 0;
    for (r, n) in [(2usize, 1u64 << 10), (4, 1 << 12), (8, 1 << 14), (16, 1 << 14)] {
        let pool = prime_pool(r, n);
        let t = ((n as f64).ln() / (r as f64).ln()).floor() as usize + 1;
        for _ in 0..10 {
            let primes: Vec<u64> = sample_indices(&mut rng, pool.len(), t).into_iter().map(|i| pool[i]).collect();
            // i ≡ j mod every prime iff every prime divides i − j
            if let Some(diff) = (1..n).find(|d| primes.iter().all(|&p| d % p == 0)) {
                return Err(format!("R={r} N={n} primes {primes:?}: difference {diff} is not separated"));
            }
            draws += 1;
        }
    }
    Ok(format!("{draws} prime sets"))
}

/// `‖I − (1/T)B*B‖ ≥ 1/2` happens in at most half the draws, with a 3σ
/// binomial allowance, measured with a dense eigenvalue oracle.
pub fn contraction(_hooks: &Hooks, seed: u64) -> std::result::Result<String, String> {
    const DRAWS: usize = 200;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x434f_4e54);
    let (r, n) = (32usize, 1u64 << 20);
    let pool = prime_pool(r, n);
    let mut bad = 0usize;
    for _ in 0..DRAWS {
        let support: Vec<u64> = {
            let mut s: Vec<u64> =
                sample_indices(&mut rng, n as usize, r).into_iter().map(|i| i as u64).collect();
            s.sort_unstable();
            s
        };
        let empty = SparseSpectrum::empty(n);
        let mut sampler = Sampler::noiseless(&empty);
        let system = draw_measurement(&support, &pool, BLOCKS, &mut rng, &mut sampler);
        if dense_perturbation_norm(&system) >= 0.5 {
            bad += 1;
        }
    }
    let limit = 0.5 + 3.0 * (0.25 / DRAWS as f64).sqrt();
    let rate = bad as f64 / DRAWS as f64;
    if rate <= limit {
        Ok(format!("failure rate {rate:.3} (limit {limit:.3})"))
    } else {
        Err(format!("failure rate {rate:.3} above {limit:.3}"))
    }
}

/// Rank-1 quadrature reproduces the dense `d`-dimensional transform for every
/// coefficient, `M ≤ 8`, `d ≤ 3`.
pub fn rank1_exactness(_hooks: &Hooks, seed: u64) -> std::result::Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x524b_3145);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for d in 1..=3usize {
        for m in 1..=8u64 {
            let lat = RankOneLattice::new(d, m).map_err(|e| e.to_string())?;
            let spectrum = random_md(&lat, 4, &mut rng);
            let grid = dense_grid_samples(&spectrum).map_err(|e| e.to_string())?;
            let dense = dense_md_coefficients(&grid, &lat).map_err(|e| e.to_string())?;
            let line = line_samples(&spectrum);
            let rank1 = rank1_coefficients(&line, &lat).map_err(|e| e.to_string())?;
            for (a, b) in dense.iter().zip(&rank1) {
                worst = worst.max((a - b).norm());
            }
            cases += 1;
        }
    }
    if worst <= 1e-10 {
        Ok(format!("{cases} grids, max deviation {worst:.2e}"))
    } else {
        Err(format!("max deviation {worst:.2e} exceeds 1e-10"))
    }
}

/// A handful of small noiseless transforms checked against the dense oracle.
pub fn oracle_equivalence(_hooks: &Hooks, seed: u64) -> std::result::Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4f52_434c);
    let mut worst = 0.0f64;
    for (d, m, r) in [(1usize, 4096u64, 4usize), (2, 64, 8), (3, 16, 8)] {
        let lat = RankOneLattice::new(d, m).map_err(|e| e.to_string())?;
        for _ in 0..5 {
            let truth = random_md(&lat, r, &mut rng);
            let grid = dense_grid_samples(&truth).map_err(|e| e.to_string())?;
            let dense = dense_md_coefficients(&grid, &lat).map_err(|e| e.to_string())?;
            let flat = truth.flatten();
            let mut sampler = Sampler::noiseless(&flat);
            let params = SupportParams { p_fail: 1e-2, ..SupportParams::new(r) };
            let out = sfft_1d(&mut sampler, lat.total(), &params, &mut rng).map_err(|e| e.to_string())?;
            let recovered = MdSpectrum::from_flat(lat.clone(), &out.spectrum).map_err(|e| e.to_string())?;
            let err_sq: f64 = dense
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    let idx = lat.unflatten_index(k as u64).expect("in range");
                    let got = recovered.entries().get(&idx).copied().unwrap_or(0.0);
                    (c - Complex64::new(got, 0.0)).norm_sqr()
                })
                .sum();
            let rel = err_sq.sqrt() / truth.flatten().l2_norm();
            worst = worst.max(rel);
        }
    }
    if worst <= 1e-8 {
        Ok(format!("15 transforms, max relative error {worst:.2e}"))
    } else {
        Err(format!("relative error {worst:.2e} exceeds 1e-8"))
    }
}

fn random_md<R: Rng + ?Sized>(lat: &RankOneLattice, r: usize, rng: &mut R) -> MdSpectrum {
    let count = r.min(lat.total() as usize);
    let entries: BTreeMap<Vec<u64>, f64> = sample_indices(rng, lat.total() as usize, count)
        .into_iter()
        .map(|f| (lat.unflatten_index(f as u64).expect("in range"), rng.random_range(0.5..1.5)))
        .collect();
    MdSpectrum::new(lat.clone(), entries).expect("valid by construction")
}

/// `f(x_n)` evaluated geometrically at each lattice point.
fn line_samples(spectrum: &MdSpectrum) -> Vec<Complex64> {
    let lat = spectrum.lattice();
    let total = lat.total();
    (0..total)
        .map(|n| {
            let x = lat.lattice_point(n);
            spectrum
                .entries()
                .iter()
                .map(|(j, &v)| {
                    let num: u128 = j.iter().zip(&x).map(|(&a, &b)| a as u128 * b as u128).sum();
                    let phase = (num % total as u128) as f64 / total as f64;
                    v * Complex64::from_polar(1.0, -2.0 * PI * phase)
                })
                .sum()
        })
        .collect()
}

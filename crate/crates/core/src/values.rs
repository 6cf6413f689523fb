//! Value recovery on a known support.
//!
//! Each measurement block samples the signal on a prime grid `n/P`, which
//! aliases the support modulo `P`. Stacking `T` blocks gives the system
//! `FB·f̂ = f₀`; its normal operator `(1/T)B*B` is the identity plus a
//! perturbation coming from residue collisions, so a truncated Neumann series
//! inverts it whenever the perturbation is a contraction.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::dft::{dft, Direction};
use crate::error::{Error, Result};
use crate::numtheory::{mul_mod, primes_greater_than};
use crate::signal::Sampler;

/// Number of prime blocks per draw.
pub const BLOCKS: usize = 4;

/// Residuals below this fraction of the back-projection count as converged.
const CONVERGED: f64 = 1e-15;

/// One draw of the stacked prime-grid measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSystem {
    pub primes: Vec<u64>,
    pub support: Vec<u64>,
    /// `residues[t][i] = support[i] mod primes[t]`
    pub residues: Vec<Vec<u64>>,
    /// `rhs[t][n] = f(n / primes[t])`
    pub rhs: Vec<Vec<Complex64>>,
}

/// Iterates and residual history of the Neumann solve.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NeumannState {
    pub iterate: Vec<Complex64>,
    pub residual_norms: Vec<f64>,
    pub terms_used: usize,
}

/// `⌈4R·log_R N⌉` primes above `R`, the pool measurement moduli are drawn from.
///
/// The logarithm base is clamped to 2 so that `R = 1` still yields a pool.
pub fn prime_pool(r_bound: usize, n_total: u64) -> Vec<u64> {
    let r = r_bound.max(1) as f64;
    let base = r.max(2.0);
    // The tolerance keeps exact powers such as log_5 125 from rounding up.
    let size = (4.0 * r * (n_total.max(2) as f64).ln() / base.ln() - 1e-9).ceil().max(1.0) as usize;
    primes_greater_than(r_bound as u64, size)
}

/// Draws `t_blocks` primes uniformly with replacement from `pool` and samples
/// the signal on each prime grid.
pub fn draw_measurement<R: Rng + ?Sized>(
    support: &[u64],
    pool: &[u64],
    t_blocks: usize,
    rng: &mut R,
    sampler: &mut Sampler<'_>,
) -> MeasurementSystem {
    let primes: Vec<u64> = (0..t_blocks).map(|_| pool[rng.random_range(0..pool.len())]).collect();
    let residues = primes.iter().map(|&p| support.iter().map(|&j| j % p).collect()).collect();
    let rhs = primes
        .iter()
        .map(|&p| {
            let points: Vec<u64> = (0..p).collect();
            sampler.sample_many(p, &points)
        })
        .collect();
    MeasurementSystem { primes, support: support.to_vec(), residues, rhs }
}

impl MeasurementSystem {
    pub fn blocks(&self) -> usize {
        self.primes.len()
    }

    /// Sample count of this draw, `Σ_t P^(t)`.
    pub fn sample_count(&self) -> u64 {
        self.primes.iter().sum()
    }
}

/// `(1/T)·B*B·x`, computed one residue class at a time.
pub fn apply_normal(system: &MeasurementSystem, x: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(x.len(), system.support.len());
    let scale = 1.0 / system.blocks() as f64;
    let mut out = vec![Complex64::new(0.0, 0.0); x.len()];
    let mut class_sums: HashMap<u64, Complex64> = HashMap::with_capacity(x.len());
    for residues in &system.residues {
        class_sums.clear();
        for (&r, &v) in residues.iter().zip(x) {
            *class_sums.entry(r).or_default() += v;
        }
        for (o, r) in out.iter_mut().zip(residues) {
            *o += class_sums[r] * scale;
        }
    }
    out
}

/// `(1/T)(FB)*f₀` with each `F^(t)` scaled to be unitary, i.e. the average
/// over blocks of the aliased coefficients `(1/P)Σ_n exp(+2πi n r/P) f^(t)_n`
/// read off at each support residue `r`.
pub fn back_project(system: &MeasurementSystem) -> Vec<Complex64> {
    let r_len = system.support.len();
    let scale = 1.0 / system.blocks() as f64;
    let mut out = vec![Complex64::new(0.0, 0.0); r_len];
    for ((&p, residues), block) in system.primes.iter().zip(&system.residues).zip(&system.rhs) {
        // A full transform only pays off once R exceeds log P.
        if (r_len as f64) < (p as f64).log2() {
            let step = 2.0 * PI / p as f64;
            for (o, &r) in out.iter_mut().zip(residues) {
                let acc: Complex64 = block
                    .iter()
                    .enumerate()
                    .map(|(n, &v)| v * Complex64::from_polar(1.0, step * mul_mod(n as u64, r, p) as f64))
                    .sum();
                *o += acc * (scale / p as f64);
            }
        } else {
            let coeffs = dft(block, Direction::Inverse);
            for (o, &r) in out.iter_mut().zip(residues) {
                *o += coeffs[r as usize] * scale;
            }
        }
    }
    out
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Outcome of one Neumann solve.
#[derive(Debug, Clone, PartialEq)]
pub enum NeumannOutcome {
    Accepted(NeumannState),
    /// The residuals failed to halve; the draw is discarded.
    Rejected(NeumannState),
}

/// `Σ_{n=0}^{Z} (I − A)ⁿ b` for `A = (1/T)B*B`, `b = (1/T)(FB)*f₀`.
///
/// The draw is accepted only while residuals `r_n = (I − A)^{n+1} b` halve at
/// every step until they reach round-off; the first two ratios act as the
/// contraction certificate.
pub fn neumann_solve(system: &MeasurementSystem, b: &[Complex64], max_terms: usize) -> NeumannOutcome {
    let b_norm = norm(b);
    let floor = CONVERGED * b_norm;
    let mut state = NeumannState { iterate: b.to_vec(), residual_norms: Vec::new(), terms_used: 1 };
    let residual = |x: &[Complex64]| -> Vec<Complex64> {
        apply_normal(system, x).iter().zip(b).map(|(ax, bi)| bi - ax).collect()
    };
    let mut r = residual(&state.iterate);
    state.residual_norms.push(norm(&r));
    for _ in 0..max_terms {
        let last = *state.residual_norms.last().unwrap();
        if last <= floor {
            break;
        }
        for (x, ri) in state.iterate.iter_mut().zip(&r) {
            *x += ri;
        }
        state.terms_used += 1;
        r = residual(&state.iterate);
        let next = norm(&r);
        state.residual_norms.push(next);
        if next > floor && next > 0.5 * last {
            return NeumannOutcome::Rejected(state);
        }
    }
    NeumannOutcome::Accepted(state)
}

/// Recovered values on the support.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueRecovery {
    /// `(index, value)` pairs in support order.
    pub values: Vec<(u64, Complex64)>,
    /// Draws consumed, including the accepted one.
    pub draws: usize,
    pub state: NeumannState,
}

/// Number of Neumann terms for accuracy `eta`, `⌈log₂(1/η)⌉`.
pub fn neumann_terms(eta: f64) -> usize {
    ((1.0 / eta).log2().ceil().max(0.0)) as usize
}

/// Number of measurement draws for failure probability `p`, `⌈log₂(1/p)⌉`.
pub fn redraw_budget(p_fail: f64) -> usize {
    ((1.0 / p_fail).log2().ceil() as usize).max(1)
}

/// Recovers `f̂` on `support` to accuracy `eta`, redrawing the prime blocks
/// until the Neumann series contracts.
#[allow(clippy::too_many_arguments)]
pub fn compute_values<R: Rng + ?Sized>(
    support: &[u64],
    r_bound: usize,
    n_total: u64,
    p_fail: f64,
    eta: f64,
    sampler: &mut Sampler<'_>,
    rng: &mut R,
) -> Result<ValueRecovery> {
    if support.is_empty() {
        return Ok(ValueRecovery { values: Vec::new(), draws: 0, state: NeumannState::default() });
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidParameter(format!("accuracy must lie in (0, 1), got {eta}")));
    }
    let pool = prime_pool(r_bound.max(support.len()), n_total);
    let max_terms = neumann_terms(eta);
    let attempts = redraw_budget(p_fail);
    for attempt in 1..=attempts {
        let system = draw_measurement(support, &pool, BLOCKS, rng, sampler);
        let b = back_project(&system);
        if let NeumannOutcome::Accepted(state) = neumann_solve(&system, &b, max_terms) {
            let values = support.iter().copied().zip(state.iterate.iter().copied()).collect();
            return Ok(ValueRecovery { values, draws: attempt, state });
        }
    }
    Err(Error::ContractionFailure { attempts })
}

/// Dense `(1/T)B*B` for small systems.
pub fn dense_normal_matrix(system: &MeasurementSystem) -> DMatrix<f64> {
    let r = system.support.len();
    let t = system.blocks() as f64;
    DMatrix::from_fn(r, r, |i, j| {
        system.residues.iter().filter(|res| res[i] == res[j]).count() as f64 / t
    })
}

/// `‖I − (1/T)B*B‖₂` by symmetric eigendecomposition.
pub fn dense_perturbation_norm(system: &MeasurementSystem) -> f64 {
    let r = system.support.len();
    let m = DMatrix::<f64>::identity(r, r) - dense_normal_matrix(system);
    m.symmetric_eigen().eigenvalues.iter().fold(0.0f64, |acc, &e| acc.max(e.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::SparseSpectrum;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn system_for(spectrum: &SparseSpectrum, primes: &[u64]) -> MeasurementSystem {
        let support = spectrum.support();
        let mut sampler = Sampler::noiseless(spectrum);
        MeasurementSystem {
            primes: primes.to_vec(),
            residues: primes.iter().map(|&p| support.iter().map(|&j| j % p).collect()).collect(),
            rhs: primes
                .iter()
                .map(|&p| (0..p).map(|n| sampler.sample(n, p)).collect())
                .collect(),
            support,
        }
    }

    /// Explicit `B^(t)` as dense 0/1 matrices of shape `P × R`.
    fn explicit_b(system: &MeasurementSystem) -> Vec<DMatrix<f64>> {
        system
            .primes
            .iter()
            .zip(&system.residues)
            .map(|(&p, res)| DMatrix::from_fn(p as usize, res.len(), |q, j| f64::from(res[j] == q as u64)))
            .collect()
    }

    fn random_spectrum(n: u64, r: usize, seed: u64) -> SparseSpectrum {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = std::collections::BTreeSet::new();
        while idx.len() < r {
            idx.insert(rng.random_range(0..n));
        }
        SparseSpectrum::new(n, idx.into_iter().map(|j| (j, rng.random_range(0.5..1.5)))).unwrap()
    }

    #[test]
    fn pool_size_follows_formula() {
        let pool = prime_pool(5, 125);
        assert_eq!(pool.len(), 60);
        assert_eq!(pool[..3], [7, 11, 13]);
        assert!(!prime_pool(1, 1 << 16).is_empty());
    }

    #[test]
    fn dc_blocks_are_constant() {
        let s = SparseSpectrum::new(1000, [(0, 0.8)]).unwrap();
        let pool = prime_pool(1, 1000);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut sampler = Sampler::noiseless(&s);
        let sys = draw_measurement(&[0], &pool, BLOCKS, &mut rng, &mut sampler);
        for block in &sys.rhs {
            assert!(block.iter().all(|z| (z - Complex64::new(0.8, 0.0)).norm() < 1e-14));
        }
        assert_eq!(sampler.ledger().total_requests(), sys.sample_count());
    }

    #[test]
    fn rhs_matches_dense_oracle() {
        let s = SparseSpectrum::new(40, [(1, 1.0), (23, 1.0), (35, 1.0)]).unwrap();
        let sys = system_for(&s, &[7, 11]);
        for (&p, block) in sys.primes.iter().zip(&sys.rhs) {
            for (n, &v) in block.iter().enumerate() {
                let want: Complex64 = [1u64, 23, 35]
                    .iter()
                    .map(|&j| Complex64::from_polar(1.0, -2.0 * PI * (n as u64 * (j % p)) as f64 / p as f64))
                    .sum();
                assert!((v - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn normal_operator_is_identity_without_collisions() {
        let s = SparseSpectrum::new(100, [(1, 1.0), (2, 1.0), (3, 1.0)]).unwrap();
        let sys = system_for(&s, &[7, 11, 13, 17]);
        let x = vec![Complex64::new(1.0, 2.0), Complex64::new(-3.0, 0.5), Complex64::new(0.0, 1.0)];
        assert_eq!(apply_normal(&sys, &x), x);
        let zero = vec![Complex64::new(0.0, 0.0); 3];
        assert_eq!(apply_normal(&sys, &zero), zero);
        let b = back_project(&sys);
        for (bi, j) in b.iter().zip([1, 2, 3]) {
            assert!((bi - Complex64::new(s.get(j), 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn normal_operator_matches_explicit_matrices() {
        let n = 1 << 9;
        let s = random_spectrum(n, 6, 17);
        let sys = system_for(&s, &[7, 11, 7, 13]);
        let bs = explicit_b(&sys);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x: Vec<Complex64> =
            (0..6).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let got = apply_normal(&sys, &x);
        let mut want = vec![Complex64::new(0.0, 0.0); 6];
        for b in &bs {
            let btb = b.transpose() * b;
            for i in 0..6 {
                for j in 0..6 {
                    want[i] += x[j] * btb[(i, j)] / 4.0;
                }
            }
        }
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).norm() < 1e-12);
        }
        let dense = dense_normal_matrix(&sys);
        for i in 0..6 {
            for j in 0..6 {
                let w: f64 = bs.iter().map(|b| (b.transpose() * b)[(i, j)]).sum::<f64>() / 4.0;
                assert_eq!(dense[(i, j)], w);
            }
        }
    }

    #[test]
    fn back_projection_matches_explicit_adjoint() {
        let n = 1 << 9;
        let s = random_spectrum(n, 6, 23);
        // 3 < log2(P) < 6 exercises both the direct and transform paths.
        for primes in [[7u64, 11, 13, 7], [71, 73, 79, 83]] {
            let sys = system_for(&s, &primes);
            let bs = explicit_b(&sys);
            let got = back_project(&sys);
            let mut want = vec![Complex64::new(0.0, 0.0); 6];
            for ((b, &p), block) in bs.iter().zip(&sys.primes).zip(&sys.rhs) {
                // F* with unitary scaling, then B^T.
                let scale = 1.0 / p as f64;
                let fstar: Vec<Complex64> = (0..p)
                    .map(|q| {
                        block
                            .iter()
                            .enumerate()
                            .map(|(m, &v)| v * Complex64::from_polar(1.0, 2.0 * PI * (q * m as u64) as f64 / p as f64))
                            .sum::<Complex64>()
                            * scale
                    })
                    .collect();
                for j in 0..6 {
                    for q in 0..p as usize {
                        want[j] += fstar[q] * b[(q, j)] / 4.0;
                    }
                }
            }
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).norm() < 1e-10, "{primes:?}");
            }
            // Noiseless data: the back-projection is the normal operator applied to the truth.
            let truth: Vec<Complex64> = sys.support.iter().map(|&j| Complex64::new(s.get(j), 0.0)).collect();
            for (g, w) in got.iter().zip(apply_normal(&sys, &truth)) {
                assert!((g - w).norm() < 1e-10);
            }
        }
        let mut zero = system_for(&s, &[7, 11, 13, 17]);
        zero.rhs.iter_mut().for_each(|b| b.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0)));
        assert!(back_project(&zero).iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn recovers_three_spike_signal() {
        let s = SparseSpectrum::new(40, [(1, 1.0), (23, 1.0), (35, 1.0)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut sampler = Sampler::noiseless(&s);
        let out = compute_values(&[1, 23, 35], 3, 40, 1e-4, 1e-10, &mut sampler, &mut rng).unwrap();
        for (j, v) in out.values {
            assert!((v - Complex64::new(s.get(j), 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn single_frequency_needs_one_term() {
        let s = SparseSpectrum::new(1 << 20, [(777_777, 1.25)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut sampler = Sampler::noiseless(&s);
        let out = compute_values(&[777_777], 1, 1 << 20, 1e-4, 1e-10, &mut sampler, &mut rng).unwrap();
        assert_eq!(out.state.terms_used, 1);
        assert_eq!(out.draws, 1);
        assert!((out.values[0].1 - Complex64::new(1.25, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn residuals_halve_on_accepted_runs() {
        let n = 1 << 14;
        for seed in 0..30 {
            let s = random_spectrum(n, 16, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut sampler = Sampler::noiseless(&s);
            let out = compute_values(&s.support(), 16, n, 1e-4, 1e-12, &mut sampler, &mut rng).unwrap();
            let res = &out.state.residual_norms;
            let floor = CONVERGED * res[0].max(1e-300) * 10.0;
            for w in res.windows(2) {
                assert!(w[1] <= 0.5 * w[0] || w[1] <= floor || w[0] <= floor, "{res:?}");
            }
            assert!(out.values.iter().all(|&(j, v)| (v.re - s.get(j)).abs() < 1e-9));
        }
    }

    #[test]
    fn error_bounded_under_rhs_perturbation() {
        let n = 1 << 12;
        let s = random_spectrum(n, 10, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pool = prime_pool(10, n);
        for _ in 0..20 {
            let mut sampler = Sampler::noiseless(&s);
            let mut sys = draw_measurement(&s.support(), &pool, BLOCKS, &mut rng, &mut sampler);
            if dense_perturbation_norm(&sys) > 0.5 {
                continue;
            }
            // Unit-norm perturbation of the (unitarily scaled) data.
            let total: u64 = sys.sample_count();
            let per = 1e-3 / (total as f64).sqrt();
            let mut noise_norm = 0.0;
            for (block, &p) in sys.rhs.iter_mut().zip(&sys.primes) {
                for z in block.iter_mut() {
                    let e = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * per;
                    // Rescale to the unitary convention used by the back-projection.
                    noise_norm += e.norm_sqr() / p as f64;
                    *z += e;
                }
            }
            let noise_norm = noise_norm.sqrt();
            let b = back_project(&sys);
            let NeumannOutcome::Accepted(state) = neumann_solve(&sys, &b, 60) else {
                continue;
            };
            let err: f64 = state
                .iterate
                .iter()
                .zip(&sys.support)
                .map(|(v, &j)| (v - Complex64::new(s.get(j), 0.0)).norm_sqr())
                .sum::<f64>()
                .sqrt();
            // ‖B‖₂ ≤ √(T·max collisions) and the inverse is bounded by 2.
            let b_norm = dense_normal_matrix(&sys).symmetric_eigen().eigenvalues.max().sqrt();
            assert!(err <= 2.0 * b_norm * noise_norm + 1e-12, "err {err} noise {noise_norm}");
        }
    }
}

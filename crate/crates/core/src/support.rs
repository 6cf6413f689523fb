//! Support recovery: the dealiasing ladder and the shuffle/filter/threshold
//! test that prunes candidate sets at each rung.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dft::{backward_unnormalized, dft, Direction};
use crate::error::{Error, Result};
use crate::filter::{alias_window, window_offset, FilterSpec};
use crate::numtheory::{mul_mod, sample_modulus_pair, ModulusPair};
use crate::signal::Sampler;

/// Tunables for support and value recovery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportParams {
    /// Upper bound `R` on the support size.
    pub r_bound: usize,
    /// Gaussian filter parameter; also the per-round false-positive rate.
    pub alpha: f64,
    /// Threshold parameter of the statistical test.
    pub delta: f64,
    /// Largest dealiasing factor per ladder step.
    pub rho: u64,
    /// Target failure probability.
    pub p_fail: f64,
    /// Estimate of the smallest nonzero amplitude.
    pub mu: f64,
    /// Estimate of the dynamic range `‖f̂‖_∞ / μ`.
    pub delta_ratio: f64,
    /// Noise level; zero for exact samples.
    pub eta: f64,
}

impl SupportParams {
    /// Defaults for everything except the sparsity bound.
    pub fn new(r_bound: usize) -> Self {
        Self {
            r_bound,
            alpha: 0.15,
            delta: 0.1,
            rho: 2,
            p_fail: 1e-4,
            mu: 0.5,
            delta_ratio: 3.0,
            eta: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if self.rho < 2 {
            return bad(format!("rho must be at least 2, got {}", self.rho));
        }
        if !(self.p_fail > 0.0 && self.p_fail < 1.0) {
            return bad(format!("p must lie in (0, 1), got {}", self.p_fail));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return bad(format!("mu must be positive, got {}", self.mu));
        }
        if !(self.delta_ratio >= 1.0 && self.delta_ratio.is_finite()) {
            return bad(format!("delta ratio must be at least 1, got {}", self.delta_ratio));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return bad(format!("eta must be nonnegative, got {}", self.eta));
        }
        if self.eta > self.delta * self.mu / 2.0 {
            return bad(format!(
                "eta = {} exceeds delta*mu/2 = {}; the threshold test cannot separate noise",
                self.eta,
                self.delta * self.mu / 2.0
            ));
        }
        Ok(())
    }

    fn r(&self) -> f64 {
        self.r_bound.max(1) as f64
    }

    /// `ln(2RΔ/δ)`
    pub fn log_spread(&self) -> f64 {
        (2.0 * self.r() * self.delta_ratio / self.delta).ln()
    }

    /// `ln(2Δ/δ)`
    pub fn log_range(&self) -> f64 {
        (2.0 * self.delta_ratio / self.delta).ln()
    }

    /// Base FFT size `K = ⌈max(8, 2/α)/π · R · √(ln(2RΔ/δ)·ln(2Δ/δ))⌉`.
    pub fn k_base(&self) -> u64 {
        let c = (2.0 / self.alpha).max(8.0) / PI;
        (c * self.r() * (self.log_spread() * self.log_range()).sqrt()).ceil() as u64
    }

    /// Filter width at modulus `m_k`: `σ = α·(M_k/2R)/√ln(2RΔ/δ)`.
    pub fn sigma(&self, m_k: u64) -> f64 {
        self.alpha * (m_k as f64 / (2.0 * self.r())) / self.log_spread().sqrt()
    }

    /// Probe rounds per rung, `⌈ln p / ln α⌉`.
    pub fn rounds(&self) -> usize {
        ((self.p_fail.ln() / self.alpha.ln()).ceil() as usize).max(1)
    }

    /// Magnitude below which a probe rejects a candidate.
    pub fn threshold(&self) -> f64 {
        if self.eta > 0.0 {
            self.delta * self.mu / 4.0
        } else {
            self.delta * self.mu / 2.0
        }
    }

    /// Threshold used on the directly computed aliased coefficients at the first rung.
    pub fn initial_threshold(&self) -> f64 {
        self.delta * self.mu / 2.0
    }

    /// Largest candidate set tolerated before declaring the parameters wrong.
    pub fn candidate_cap(&self) -> usize {
        (8 * self.rho * self.k_base()) as usize
    }
}

/// The sequence of moduli `M_1 = K, M_{k+1} = ρ_k·M_k` ending at the padded size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LadderPlan {
    pub k_base: u64,
    pub factors: Vec<u64>,
    pub n_padded: u64,
    pub moduli: Vec<u64>,
}

/// Plans the ladder for `requested_n` with the base size from `params`.
pub fn plan_ladder(requested_n: u64, params: &SupportParams) -> Result<LadderPlan> {
    plan_ladder_with_base(requested_n, params.k_base(), params.rho)
}

/// Plans `N = K·∏ρ_i ≥ requested_n` with each `ρ_i ∈ [2, ρ]`.
///
/// The number of factors is the fewest that can reach `requested_n`; among
/// those, the product is the smallest that does. Factors are non-increasing.
pub fn plan_ladder_with_base(requested_n: u64, k_base: u64, rho: u64) -> Result<LadderPlan> {
    if k_base == 0 || rho < 2 {
        return Err(Error::InvalidParameter(format!("bad ladder base K={k_base}, rho={rho}")));
    }
    let target = requested_n.div_ceil(k_base).max(1) as u128;
    let mut steps = 0u32;
    while (rho as u128).pow(steps) < target {
        steps += 1;
    }
    let factors = if steps == 0 { Vec::new() } else { best_factors(target, steps as usize, rho) };
    let mut moduli = vec![k_base];
    for &f in &factors {
        let next = *moduli.last().unwrap() as u128 * f as u128;
        if next > u64::MAX as u128 / 4 {
            return Err(Error::InvalidParameter(format!("padded size overflows for N={requested_n}")));
        }
        moduli.push(next as u64);
    }
    Ok(LadderPlan { k_base, n_padded: *moduli.last().unwrap(), factors, moduli })
}

fn best_factors(target: u128, steps: usize, rho: u64) -> Vec<u64> {
    fn search(
        target: u128,
        remaining: usize,
        max_factor: u64,
        product: u128,
        current: &mut Vec<u64>,
        best: &mut Option<(u128, Vec<u64>)>,
    ) {
        if remaining == 0 {
            if product >= target && best.as_ref().is_none_or(|(p, _)| product < *p) {
                *best = Some((product, current.clone()));
            }
            return;
        }
        let rem = remaining as u32;
        for f in (2..=max_factor).rev() {
            // Can this branch still reach the target, and still beat the incumbent?
            if product * (f as u128).pow(rem) < target {
                break;
            }
            let floor = product * f as u128 * 2u128.pow(rem - 1);
            if best.as_ref().is_some_and(|(p, _)| floor >= *p) {
                continue;
            }
            current.push(f);
            search(target, remaining - 1, f, product * f as u128, current, best);
            current.pop();
        }
    }
    let mut best = None;
    search(target, steps, rho, 1, &mut Vec::new(), &mut best);
    best.expect("rho^steps reaches the target").1
}

/// Aliased support together with the candidate set it was extracted from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SupportSets {
    pub modulus: u64,
    pub aliased: Vec<u64>,
    pub candidate: Vec<u64>,
}

/// First rung: the aliased coefficients at `modulus` come straight out of a
/// size-`modulus` transform of the subsampled signal.
pub fn initial_aliased_support(sampler: &mut Sampler<'_>, modulus: u64, threshold: f64) -> SupportSets {
    let points: Vec<u64> = (0..modulus).collect();
    let samples = sampler.sample_many(modulus, &points);
    let coeffs = dft(&samples, Direction::Inverse);
    let aliased = (0..modulus).filter(|&l| coeffs[l as usize].norm() > threshold).collect();
    SupportSets { modulus, aliased, candidate: points }
}

/// `∪_{m<ρ_k} (aliased + m·M_k)`, ascending.
pub fn dealias_candidates(aliased: &[u64], m_k: u64, rho_k: u64) -> Vec<u64> {
    let mut out: Vec<u64> =
        (0..rho_k).flat_map(|m| aliased.iter().map(move |&a| a + m * m_k)).collect();
    out.sort_unstable();
    out
}

/// Window weights `g_σ(s/M_k)/M_k` indexed by `|s|` for `|s| <= K/2`.
pub fn scaled_window_weights(m_k: u64, k_base: u64, sigma: f64) -> Result<Vec<f64>> {
    let spec = FilterSpec::new(sigma, m_k, k_base)?;
    Ok(spec.window_weights().into_iter().map(|w| w / m_k as f64).collect())
}

/// The probe values `φ_{jM_k/K}` for `j = 0..K`.
///
/// Samples are gathered at `(m·Q mod M_k)/M_k` for `m ∈ 𝒜(K;M_k)` only, so
/// frequency `l` of the aliased signal lands at `l·Q mod M_k`. They are
/// weighted by the filter, folded modulo `K`, and a size-`K` transform with
/// kernel `exp(+2πi jm/K)` evaluates the filtered spectrum on the coarse grid.
pub fn compute_phi(
    sampler: &mut Sampler<'_>,
    m_k: u64,
    k_base: u64,
    q: &ModulusPair,
    sigma: f64,
) -> Result<Vec<Complex64>> {
    let weights = scaled_window_weights(m_k, k_base, sigma)?;
    Ok(compute_phi_weighted(sampler, m_k, k_base, q, &weights))
}

pub(crate) fn compute_phi_weighted(
    sampler: &mut Sampler<'_>,
    m_k: u64,
    k_base: u64,
    q: &ModulusPair,
    weights: &[f64],
) -> Vec<Complex64> {
    debug_assert_eq!(q.m, m_k);
    let window = alias_window(k_base, m_k);
    // Consecutive window indices differ by one, so their images differ by Q.
    let step = q.q % m_k;
    let mut points = Vec::with_capacity(window.len());
    let mut prev: Option<(u64, u64)> = None;
    for &m in &window {
        let image = match prev {
            Some((pm, pi)) if pm + 1 == m => {
                let next = pi + step;
                if next >= m_k { next - m_k } else { next }
            }
            _ => q.shuffle(m),
        };
        points.push(image);
        prev = Some((m, image));
    }
    let samples = sampler.sample_many(m_k, &points);
    let mut folded = vec![Complex64::new(0.0, 0.0); k_base as usize];
    for (&m, sample) in window.iter().zip(samples) {
        let offset = window_offset(m, m_k);
        let slot = offset.rem_euclid(k_base as i64) as usize;
        folded[slot] = sample * weights[offset.unsigned_abs() as usize];
    }
    backward_unnormalized(&mut folded);
    folded
}

/// Grid index `[y·K/M_k]` nearest to position `y`, ties rounded up, modulo `K`.
#[inline]
pub fn probe_index(position: u64, m_k: u64, k_base: u64) -> usize {
    let num = 2 * position as u128 * k_base as u128 + m_k as u128;
    ((num / (2 * m_k as u128)) % k_base as u128) as usize
}

/// Prunes `candidate ⊆ [0, M_k)` down to the aliased support at `m_k`.
///
/// Every round draws a fresh multiplier, computes the probes, and drops each
/// candidate whose shuffled position sees a probe below the threshold. True
/// aliased support elements always pass in the noiseless case; any other
/// candidate survives a round with probability at most about `α`.
pub fn find_aliased_support<R: Rng + ?Sized>(
    candidate: &[u64],
    m_k: u64,
    k_base: u64,
    params: &SupportParams,
    sampler: &mut Sampler<'_>,
    rng: &mut R,
) -> Result<Vec<u64>> {
    let weights = scaled_window_weights(m_k, k_base, params.sigma(m_k))?;
    let threshold = params.threshold();
    let mut survivors = candidate.to_vec();
    for _ in 0..params.rounds() {
        if survivors.is_empty() {
            break;
        }
        let q = sample_modulus_pair(m_k, rng);
        let phi = compute_phi_weighted(sampler, m_k, k_base, &q, &weights);
        survivors.retain(|&n| {
            let shuffled = mul_mod(n, q.q, m_k);
            phi[probe_index(shuffled, m_k, k_base)].norm() >= threshold
        });
    }
    Ok(survivors)
}

/// What happened at one rung of the ladder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRecord {
    pub modulus: u64,
    pub candidates: usize,
    pub survivors: Vec<u64>,
}

/// Output of [`find_support`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportRecovery {
    /// Recovered support in `[0, plan.n_padded)`, ascending.
    pub support: Vec<u64>,
    pub plan: LadderPlan,
    pub steps: Vec<StepRecord>,
}

/// Recovers the support of the signal behind `sampler` on `[0, N)` with
/// `N >= requested_n` chosen by [`plan_ladder`].
pub fn find_support<R: Rng + ?Sized>(
    sampler: &mut Sampler<'_>,
    requested_n: u64,
    params: &SupportParams,
    rng: &mut R,
) -> Result<SupportRecovery> {
    params.validate()?;
    let plan = plan_ladder(requested_n, params)?;
    let k_base = plan.k_base;
    let cap = params.candidate_cap();

    let first = initial_aliased_support(sampler, k_base, params.initial_threshold());
    let mut steps = vec![StepRecord {
        modulus: k_base,
        candidates: first.candidate.len(),
        survivors: first.aliased.clone(),
    }];
    let mut aliased = first.aliased;
    for (&m_k, &rho_k) in plan.moduli.iter().zip(&plan.factors) {
        if aliased.is_empty() {
            break;
        }
        let next = m_k * rho_k;
        let candidate = dealias_candidates(&aliased, m_k, rho_k);
        if candidate.len() > cap {
            return Err(Error::CandidateBlowup { size: candidate.len(), cap, modulus: next });
        }
        aliased = find_aliased_support(&candidate, next, k_base, params, sampler, rng)?;
        steps.push(StepRecord { modulus: next, candidates: candidate.len(), survivors: aliased.clone() });
    }
    Ok(SupportRecovery { support: aliased, plan, steps })
}

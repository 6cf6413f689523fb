//! The periodized Gaussian filter and the low-frequency sample window.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Parameters of the wrapped Gaussian `g_σ(m/M)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    pub sigma: f64,
    pub modulus: u64,
    /// The periodization sum runs over `|h| <= wrap_terms`.
    pub wrap_terms: u64,
    pub bandwidth: u64,
}

impl FilterSpec {
    pub fn new(sigma: f64, modulus: u64, bandwidth: u64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
        }
        if bandwidth == 0 || bandwidth > modulus || !modulus.is_multiple_of(bandwidth) {
            return Err(Error::InvalidParameter(format!(
                "bandwidth {bandwidth} must divide modulus {modulus}"
            )));
        }
        Ok(Self { sigma, modulus, wrap_terms: wrap_terms(sigma, modulus), bandwidth })
    }

    /// `g_σ(m/M)` for `0 <= m < M`.
    pub fn weight(&self, m: u64) -> f64 {
        gaussian_filter_weight(m, self)
    }

    /// Weights for the signed offsets `0, 1, …, K/2` of the window; the
    /// filter is even so negative offsets reuse the same values.
    pub fn window_weights(&self) -> Vec<f64> {
        (0..=self.bandwidth / 2).map(|s| self.weight(s)).collect()
    }
}

/// Truncation for the periodization sum keeping the tail below 1e-15 relative.
pub fn wrap_terms(sigma: f64, modulus: u64) -> u64 {
    let t = modulus as f64 / (PI * sigma) * (35.0 / std::f64::consts::LN_10).sqrt();
    (t.ceil() as u64).max(2)
}

/// `g_σ(m/M) = √π σ Σ_{|h| ≤ H} exp(−π²σ²((m + hM)/M)²)`.
///
/// Terms decay monotonically away from the nearest period, so the sum stops
/// early once both directions are below one ulp of the running total; the
/// result equals the full `|h| ≤ H` sum.
pub fn gaussian_filter_weight(m: u64, spec: &FilterSpec) -> f64 {
    let big_m = spec.modulus;
    debug_assert!(m < big_m);
    // Symmetric representative so that g(m) and g(M − m) are bit-identical.
    let folded = m.min(big_m - m) as f64 / big_m as f64;
    let a = PI * PI * spec.sigma * spec.sigma;
    let term = |x: f64| (-a * x * x).exp();
    let mut sum = term(folded);
    for h in 1..=spec.wrap_terms {
        let h = h as f64;
        let up = term(folded + h);
        let down = term(folded - h);
        sum += up + down;
        if up <= f64::EPSILON * 1e-3 * sum && down <= f64::EPSILON * 1e-3 * sum {
            break;
        }
    }
    PI.sqrt() * spec.sigma * sum
}

/// The window `𝒜(K;M) = { n ∈ [0, M) : n ≤ K/2 or |n − M| < K/2 }`, ascending.
pub fn alias_window(k: u64, m: u64) -> Vec<u64> {
    assert!(1 <= k && k <= m, "alias_window needs 1 <= k <= m");
    // n ≤ K/2  ⇔  2n ≤ K;   M − n < K/2  ⇔  2(M − n) < K.
    let low = k / 2;
    let mut out: Vec<u64> = (0..=low.min(m - 1)).collect();
    let high_start = (m - (k - 1) / 2).max(low + 1);
    out.extend(high_start..m);
    out
}

/// Signed representative of a window index: `n` for the low part, `n − M`
/// for the wrapped part.
#[inline]
pub fn window_offset(n: u64, m: u64) -> i64 {
    if 2 * n <= m {
        n as i64
    } else {
        n as i64 - m as i64
    }
}

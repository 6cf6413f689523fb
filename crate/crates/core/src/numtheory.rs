//! Modular arithmetic and prime generation.

use rand::Rng;

use crate::error::{Error, Result};

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `(a * b) mod m` without overflow.
#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    // 128-bit division is several times slower; most products fit in 64 bits.
    match a.checked_mul(b) {
        Some(p) => p % m,
        None => ((a as u128 * b as u128) % m as u128) as u64,
    }
}

/// Inverse of `q` modulo `m` by the extended Euclidean algorithm.
///
/// Returns the unique `r` in `(0, m)` with `q * r ≡ 1 (mod m)`. For `m == 1`
/// every residue is zero and there is no such `r`; callers never ask for it.
pub fn mod_inverse(q: u64, m: u64) -> Result<u64> {
    if m < 2 || q == 0 || q >= m {
        return Err(Error::NotCoprime { q, m });
    }
    let (mut old_r, mut r) = (q as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let quotient = old_r / r;
        (old_r, r) = (r, old_r - quotient * r);
        (old_s, s) = (s, old_s - quotient * s);
    }
    if old_r != 1 {
        return Err(Error::NotCoprime { q, m });
    }
    Ok(old_s.rem_euclid(m as i128) as u64)
}

/// A multiplier together with its inverse modulo `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModulusPair {
    pub q: u64,
    pub m: u64,
    pub q_inv: u64,
}

impl ModulusPair {
    pub fn new(q: u64, m: u64) -> Result<Self> {
        let q_inv = mod_inverse(q, m)?;
        Ok(Self { q, m, q_inv })
    }

    /// Image of `n` under the shuffle `n ↦ n·q mod m`.
    #[inline]
    pub fn shuffle(&self, n: u64) -> u64 {
        mul_mod(n % self.m, self.q, self.m)
    }

    #[inline]
    pub fn unshuffle(&self, n: u64) -> u64 {
        mul_mod(n % self.m, self.q_inv, self.m)
    }
}

/// Draws `q` uniformly from the units of `ℤ/mℤ` by rejection.
///
/// The acceptance rate is `φ(m)/m`, which is `Ω(1/log log m)`, so the expected
/// number of draws stays small even for `m` near `2⁶⁰`.
pub fn sample_coprime<R: Rng + ?Sized>(m: u64, rng: &mut R) -> u64 {
    assert!(m >= 2, "sample_coprime needs m >= 2");
    loop {
        let q = rng.random_range(1..m);
        if gcd(q, m) == 1 {
            return q;
        }
    }
}

/// Draws a [`ModulusPair`] with `q` uniform over the units modulo `m`.
pub fn sample_modulus_pair<R: Rng + ?Sized>(m: u64, rng: &mut R) -> ModulusPair {
    let q = sample_coprime(m, rng);
    ModulusPair::new(q, m).expect("sampled multiplier is coprime")
}

/// The `count` smallest primes strictly greater than `r`, ascending.
///
/// Uses a segmented sieve over windows above `r`, seeded with the base primes
/// up to the square root of the window end.
pub fn primes_greater_than(r: u64, count: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    let mut lo = r + 1;
    // Prime density near x is 1/ln x; size the first window for the whole request.
    let density = ((lo.max(3) as f64).ln() * 1.3).ceil() as u64;
    let mut width = (count as u64 * density).clamp(1 << 10, 1 << 22);
    while out.len() < count {
        let hi = lo + width;
        let base = small_primes(isqrt(hi) + 1);
        let mut composite = vec![false; width as usize];
        for &p in &base {
            let start = (lo.div_ceil(p) * p).max(p * p);
            let mut k = start;
            while k < hi {
                composite[(k - lo) as usize] = true;
                k += p;
            }
        }
        for (i, &c) in composite.iter().enumerate() {
            let n = lo + i as u64;
            if !c && n >= 2 {
                out.push(n);
                if out.len() == count {
                    break;
                }
            }
        }
        lo = hi;
        width = width.saturating_mul(2).min(1 << 24);
    }
    out
}

fn small_primes(limit: u64) -> Vec<u64> {
    let limit = limit as usize;
    let mut sieve = vec![true; limit + 1];
    let mut out = Vec::new();
    for i in 2..=limit {
        if sieve[i] {
            out.push(i as u64);
            let mut k = i * i;
            while k <= limit {
                sieve[k] = false;
                k += i;
            }
        }
    }
    out
}

pub(crate) fn isqrt(n: u64) -> u64 {
    let mut x = (n as f64).sqrt() as u64;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn inverse_matches_exhaustive_search() {
        let brute = (1..40u64).find(|r| 13 * r % 40 == 1).unwrap();
        assert_eq!(brute, 37);
        assert_eq!(mod_inverse(13, 40), Ok(37));
        for m in 2..10 {
            assert_eq!(mod_inverse(1, m), Ok(1));
        }
    }

    #[test]
    fn inverse_rejects_shared_factor() {
        assert_eq!(mod_inverse(2, 4), Err(Error::NotCoprime { q: 2, m: 4 }));
        assert!(mod_inverse(0, 5).is_err());
        assert!(ModulusPair::new(6, 9).is_err());
    }

    #[test]
    fn inverse_near_u64_limits() {
        let m = (1u64 << 61) - 1; // prime
        let q = 0x1234_5678_9abc_def1 % m;
        let r = mod_inverse(q, m).unwrap();
        assert_eq!(mul_mod(q, r, m), 1);
    }

    #[test]
    fn coprime_draws_stay_in_unit_group() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            assert!([1, 3].contains(&sample_coprime(4, &mut rng)));
            let q = sample_coprime(7, &mut rng);
            assert!((1..7).contains(&q));
        }
    }

    #[test]
    fn coprime_draws_are_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 100_000;
        let mut counts = std::collections::BTreeMap::new();
        for _ in 0..draws {
            *counts.entry(sample_coprime(12, &mut rng)).or_insert(0u64) += 1;
        }
        assert_eq!(counts.keys().copied().collect::<Vec<_>>(), vec![1, 5, 7, 11]);
        let expected = draws as f64 / 4.0;
        let sd = (draws as f64 * 0.25 * 0.75).sqrt();
        let mut chi2 = 0.0;
        for &c in counts.values() {
            assert!((c as f64 - expected).abs() <= 3.0 * sd, "count {c}");
            chi2 += (c as f64 - expected).powi(2) / expected;
        }
        // 3 degrees of freedom, 0.999 quantile.
        assert!(chi2 < 16.27, "chi2 = {chi2}");
    }

    #[test]
    fn primes_above() {
        assert_eq!(primes_greater_than(5, 4), vec![7, 11, 13, 17]);
        assert_eq!(primes_greater_than(1, 3), vec![2, 3, 5]);
        assert_eq!(primes_greater_than(50, 1), vec![53]);
        assert_eq!(primes_greater_than(7, 1), vec![11]);
        let many = primes_greater_than(5, 60);
        assert_eq!(many.len(), 60);
        assert_eq!(many[..3], [7, 11, 13]);
        assert!(many.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn primes_match_trial_division() {
        let is_prime = |n: u64| n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d));
        for r in [0u64, 1, 2, 100, 9973, 1_000_000] {
            let got = primes_greater_than(r, 300);
            let want: Vec<u64> = (r + 1..).filter(|&n| is_prime(n)).take(300).collect();
            assert_eq!(got, want, "r = {r}");
        }
    }

    #[test]
    fn shuffle_round_trips() {
        let pair = ModulusPair::new(13, 40).unwrap();
        for n in 0..40 {
            assert_eq!(pair.unshuffle(pair.shuffle(n)), n);
        }
        let shuffled: Vec<u64> = [1, 23, 35].iter().map(|&j| pair.shuffle(j)).collect();
        assert_eq!(shuffled, vec![13, 19, 15]);
    }
}

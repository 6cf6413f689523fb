//! Arbitrary-length discrete Fourier transforms.
//!
//! Lengths that show up here are either primes (value recovery) or smooth
//! products of the ladder factors. Smooth lengths go to `rustfft` directly;
//! lengths with a large prime factor are reduced to power-of-two convolutions
//! (chirp-z), which keeps planning cost flat when every call sees a fresh
//! prime. Short transforms go through the direct sum.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Below this length the O(L²) direct sum beats planning a transform.
pub const DIRECT_CUTOFF: usize = 64;

/// Largest prime factor handed to `rustfft` as is.
const SMOOTH_BOUND: usize = 13;

/// Chirp spectra kept per thread before the cache is flushed.
const CHIRP_CACHE: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `X_n = Σ_j exp(−2πi nj/L) x_j`
    Forward,
    /// `x_j = (1/L) Σ_n exp(+2πi nj/L) X_n`
    Inverse,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
    static CHIRPS: RefCell<HashMap<(usize, bool), Arc<Chirp>>> = RefCell::new(HashMap::new());
}

struct Chirp {
    /// `exp(s·iπ k²/L)` for `k < L`, `s` the transform sign.
    weights: Vec<Complex64>,
    /// Power-of-two transform of the conjugate chirp laid out circularly.
    kernel: Vec<Complex64>,
}

fn is_smooth(mut len: usize) -> bool {
    for p in (2..=SMOOTH_BOUND).filter(|&p| (2..p).all(|q| p % q != 0)) {
        while len.is_multiple_of(p) {
            len /= p;
        }
    }
    len == 1
}

fn with_plan(len: usize, forward: bool, values: &mut [Complex64]) {
    PLANNER.with(|planner| {
        let mut planner = planner.borrow_mut();
        let plan = if forward { planner.plan_fft_forward(len) } else { planner.plan_fft_inverse(len) };
        plan.process(values);
    });
}

fn chirp(len: usize, forward: bool) -> Arc<Chirp> {
    let key = (len, forward);
    if let Some(c) = CHIRPS.with(|m| m.borrow().get(&key).cloned()) {
        return c;
    }
    let sign = if forward { -1.0 } else { 1.0 };
    let two_len = 2 * len as u64;
    let weights: Vec<Complex64> = (0..len as u64)
        .map(|k| {
            // k² mod 2L keeps the phase exact for large k.
            let phase = ((k as u128 * k as u128) % two_len as u128) as f64;
            Complex64::from_polar(1.0, sign * PI * phase / len as f64)
        })
        .collect();
    let size = (2 * len - 1).next_power_of_two();
    let mut kernel = vec![Complex64::new(0.0, 0.0); size];
    kernel[0] = weights[0].conj();
    for k in 1..len {
        kernel[k] = weights[k].conj();
        kernel[size - k] = weights[k].conj();
    }
    with_plan(size, true, &mut kernel);
    let c = Arc::new(Chirp { weights, kernel });
    CHIRPS.with(|m| {
        let mut m = m.borrow_mut();
        if m.len() >= CHIRP_CACHE {
            m.clear();
        }
        m.insert(key, c.clone());
    });
    c
}

/// Unnormalized transform with sign `forward` via chirp-z.
fn bluestein(values: &mut [Complex64], forward: bool) {
    let len = values.len();
    let c = chirp(len, forward);
    let size = c.kernel.len();
    let mut buf = vec![Complex64::new(0.0, 0.0); size];
    for (b, (v, w)) in buf.iter_mut().zip(values.iter().zip(&c.weights)) {
        *b = v * w;
    }
    with_plan(size, true, &mut buf);
    buf.iter_mut().zip(&c.kernel).for_each(|(b, k)| *b *= k);
    with_plan(size, false, &mut buf);
    let scale = 1.0 / size as f64;
    for (v, (b, w)) in values.iter_mut().zip(buf.iter().zip(&c.weights)) {
        *v = b * w * scale;
    }
}

/// Transforms `values` in place.
pub fn dft_in_place(values: &mut [Complex64], direction: Direction) {
    let len = values.len();
    if len <= 1 {
        return;
    }
    if len < DIRECT_CUTOFF {
        let out = direct(values, direction);
        values.copy_from_slice(&out);
    } else {
        let forward = direction == Direction::Forward;
        if is_smooth(len) {
            with_plan(len, forward, values);
        } else {
            bluestein(values, forward);
        }
        if direction == Direction::Inverse {
            let scale = 1.0 / len as f64;
            values.iter_mut().for_each(|v| *v *= scale);
        }
    }
}

/// Returns the transform of `values`.
pub fn dft(values: &[Complex64], direction: Direction) -> Vec<Complex64> {
    let mut out = values.to_vec();
    dft_in_place(&mut out, direction);
    out
}

/// Unnormalized transform with kernel `exp(+2πi nj/L)`.
pub fn backward_unnormalized(values: &mut [Complex64]) {
    let len = values.len();
    dft_in_place(values, Direction::Inverse);
    values.iter_mut().for_each(|v| *v *= len as f64);
}

fn direct(values: &[Complex64], direction: Direction) -> Vec<Complex64> {
    let len = values.len();
    let sign = match direction {
        Direction::Forward => -1.0,
        Direction::Inverse => 1.0,
    };
    // Twiddles indexed by (n·j mod L) keep the phases exact.
    let twiddles: Vec<Complex64> = (0..len)
        .map(|k| Complex64::from_polar(1.0, sign * 2.0 * PI * k as f64 / len as f64))
        .collect();
    let scale = match direction {
        Direction::Forward => 1.0,
        Direction::Inverse => 1.0 / len as f64,
    };
    (0..len)
        .map(|n| {
            let acc: Complex64 = values
                .iter()
                .enumerate()
                .map(|(j, &v)| twiddles[(n * j) % len] * v)
                .sum();
            acc * scale
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive(values: &[Complex64]) -> Vec<Complex64> {
        let len = values.len() as f64;
        (0..values.len())
            .map(|n| {
                values
                    .iter()
                    .enumerate()
                    .map(|(j, v)| v * Complex64::from_polar(1.0, -2.0 * PI * (n * j) as f64 / len))
                    .sum()
            })
            .collect()
    }

    fn random(len: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    fn max_rel(a: &[Complex64], b: &[Complex64]) -> f64 {
        let scale = b.iter().map(|v| v.norm()).fold(1e-300, f64::max);
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
    }

    #[test]
    fn delta_transforms_to_ones() {
        let v = [1.0, 0.0, 0.0, 0.0].map(|x| Complex64::new(x, 0.0));
        let out = dft(&v, Direction::Forward);
        assert!(out.iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn round_trip_prime_and_composite() {
        for (len, seed) in [(7, 1), (40, 2), (97, 3), (1009, 4), (2 * 3 * 5 * 7 * 11, 5), (6826, 6), (65537, 7)] {
            let v = random(len, seed);
            let back = dft(&dft(&v, Direction::Forward), Direction::Inverse);
            assert!(max_rel(&back, &v) < 1e-12, "len {len}");
        }
    }

    #[test]
    fn matches_naive_sum() {
        for (len, seed) in [(6, 9), (63, 10), (64, 11), (127, 12), (360, 13), (3 * 17, 14), (2 * 1021, 15)] {
            let v = random(len, seed);
            assert!(max_rel(&dft(&v, Direction::Forward), &naive(&v)) < 1e-12, "len {len}");
        }
    }

    #[test]
    fn backward_kernel_sign() {
        let mut v = vec![Complex64::new(0.0, 0.0); 8];
        v[1] = Complex64::new(1.0, 0.0);
        backward_unnormalized(&mut v);
        for (n, z) in v.iter().enumerate() {
            let want = Complex64::from_polar(1.0, 2.0 * PI * n as f64 / 8.0);
            assert!((z - want).norm() < 1e-14);
        }
    }
}

//! Rank-1 lattice reduction of the `d`-dimensional problem.
//!
//! With generator `g = (1, M, …, M^{d−1})` and `N = M^d`, the lattice points
//! `x_n = (n·g mod N)/N` integrate every trigonometric polynomial with
//! frequencies in `[0, M)^d` exactly, and `j ↦ j·g` is a bijection onto
//! `[0, N)`. A `d`-dimensional sparse spectrum is therefore a 1-D sparse
//! spectrum after re-indexing.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::dft::{dft, dft_in_place, Direction};
use crate::error::{Error, Result};
use crate::signal::{SparseSpectrum, DENSE_LIMIT};

/// Largest total size accepted; leaves headroom for ladder padding.
pub const MAX_TOTAL: u64 = 1 << 60;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankOneLattice {
    dims: usize,
    axis_size: u64,
    generator: Vec<u64>,
    total: u64,
}

impl RankOneLattice {
    pub fn new(dims: usize, axis_size: u64) -> Result<Self> {
        if dims == 0 || axis_size == 0 {
            return Err(Error::InvalidParameter(format!("bad lattice shape d={dims}, M={axis_size}")));
        }
        let mut generator = Vec::with_capacity(dims);
        let mut power: u128 = 1;
        for _ in 0..dims {
            generator.push(power as u64);
            power *= axis_size as u128;
            if power > MAX_TOTAL as u128 {
                return Err(Error::InvalidParameter(format!(
                    "M^d = {axis_size}^{dims} exceeds 2^60"
                )));
            }
        }
        Ok(Self { dims, axis_size, generator, total: power as u64 })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn axis_size(&self) -> u64 {
        self.axis_size
    }

    pub fn generator(&self) -> &[u64] {
        &self.generator
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// `Σ multi[i]·M^i`.
    pub fn flatten_index(&self, multi: &[u64]) -> Result<u64> {
        if multi.len() != self.dims || multi.iter().any(|&c| c >= self.axis_size) {
            return Err(Error::IndexOutOfRange { index: multi.to_vec(), axis_size: self.axis_size });
        }
        Ok(multi.iter().zip(&self.generator).map(|(c, g)| c * g).sum())
    }

    /// Base-`M` digits of `flat`, least significant first.
    pub fn unflatten_index(&self, flat: u64) -> Result<Vec<u64>> {
        if flat >= self.total {
            return Err(Error::IndexOutOfRange { index: vec![flat], axis_size: self.axis_size });
        }
        let mut rest = flat;
        Ok((0..self.dims)
            .map(|_| {
                let digit = rest % self.axis_size;
                rest /= self.axis_size;
                digit
            })
            .collect())
    }

    /// Numerators of `x_n = (n·g mod N)/N`; the common denominator is `N`.
    pub fn lattice_point(&self, n: u64) -> Vec<u64> {
        self.generator
            .iter()
            .map(|&g| ((n as u128 * g as u128) % self.total as u128) as u64)
            .collect()
    }
}

/// A sparse nonnegative spectrum on `[0, M)^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct MdSpectrum {
    lattice: RankOneLattice,
    entries: BTreeMap<Vec<u64>, f64>,
}

impl MdSpectrum {
    pub fn new(lattice: RankOneLattice, entries: impl IntoIterator<Item = (Vec<u64>, f64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (idx, v) in entries {
            lattice.flatten_index(&idx)?;
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidSignal(format!("amplitude {v} at {idx:?} is not nonnegative")));
            }
            if v > 0.0 {
                if map.contains_key(&idx) {
                    return Err(Error::InvalidSignal(format!("duplicate index {idx:?}")));
                }
                map.insert(idx, v);
            }
        }
        Ok(Self { lattice, entries: map })
    }

    pub fn empty(lattice: RankOneLattice) -> Self {
        Self { lattice, entries: BTreeMap::new() }
    }

    /// Re-indexes a flattened spectrum back onto the grid.
    pub fn from_flat(lattice: RankOneLattice, flat: &SparseSpectrum) -> Result<Self> {
        let entries = flat
            .entries()
            .iter()
            .map(|(&j, &v)| Ok((lattice.unflatten_index(j)?, v)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(lattice, entries)
    }

    pub fn lattice(&self) -> &RankOneLattice {
        &self.lattice
    }

    pub fn entries(&self) -> &BTreeMap<Vec<u64>, f64> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The 1-D spectrum seen along the rank-1 line.
    pub fn flatten(&self) -> SparseSpectrum {
        md_sample_adapter(self)
    }
}

/// 1-D signal whose samples at `q/P` equal `f` on the rank-1 line: the same
/// amplitudes re-indexed by [`RankOneLattice::flatten_index`].
pub fn md_sample_adapter(spectrum: &MdSpectrum) -> SparseSpectrum {
    let lattice = &spectrum.lattice;
    SparseSpectrum::new(
        lattice.total(),
        spectrum
            .entries
            .iter()
            .map(|(idx, &v)| (lattice.flatten_index(idx).expect("validated on construction"), v)),
    )
    .expect("flattening preserves validity")
}

/// Grid samples `f(n/M)` for `n ∈ [0, M)^d`, axis 0 fastest, computed by
/// transforming the dense coefficient array one axis at a time.
pub fn dense_grid_samples(spectrum: &MdSpectrum) -> Result<Vec<Complex64>> {
    let lattice = &spectrum.lattice;
    check_dense(lattice)?;
    let mut grid = vec![Complex64::new(0.0, 0.0); lattice.total() as usize];
    for (idx, &v) in &spectrum.entries {
        grid[lattice.flatten_index(idx)? as usize] = Complex64::new(v, 0.0);
    }
    transform_axes(&mut grid, lattice, Direction::Forward);
    Ok(grid)
}

/// Coefficients `(1/N) Σ_n exp(+2πi j·n/M) f(n/M)` from grid samples (the
/// trapezoid rule applied dimension by dimension), indexed like the grid.
pub fn dense_md_coefficients(samples: &[Complex64], lattice: &RankOneLattice) -> Result<Vec<Complex64>> {
    check_dense(lattice)?;
    assert_eq!(samples.len() as u64, lattice.total());
    let mut out = samples.to_vec();
    transform_axes(&mut out, lattice, Direction::Inverse);
    Ok(out)
}

/// Coefficients from samples on the rank-1 line:
/// `(1/N) Σ_n exp(+2πi j·x_n) f(x_n)` for every `j`, indexed by flatten.
pub fn rank1_coefficients(line_samples: &[Complex64], lattice: &RankOneLattice) -> Result<Vec<Complex64>> {
    check_dense(lattice)?;
    assert_eq!(line_samples.len() as u64, lattice.total());
    Ok(dft(line_samples, Direction::Inverse))
}

fn check_dense(lattice: &RankOneLattice) -> Result<()> {
    if lattice.total() > DENSE_LIMIT {
        return Err(Error::OracleTooLarge { size: lattice.total(), limit: DENSE_LIMIT });
    }
    Ok(())
}

fn transform_axes(data: &mut [Complex64], lattice: &RankOneLattice, direction: Direction) {
    let m = lattice.axis_size() as usize;
    let mut line = vec![Complex64::new(0.0, 0.0); m];
    for &stride in lattice.generator() {
        let stride = stride as usize;
        let block = stride * m;
        for base in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let start = base + offset;
                for (k, slot) in line.iter_mut().enumerate() {
                    *slot = data[start + k * stride];
                }
                dft_in_place(&mut line, direction);
                for (k, &v) in line.iter().enumerate() {
                    data[start + k * stride] = v;
                }
            }
        }
    }
}

//! Sparse multidimensional FFT for signals whose Fourier coefficients are
//! real, nonnegative and `R`-sparse.
//!
//! The transform only queries the signal at `O(R log R log N)` rational points
//! (up to log-log factors), so the ambient size `N = M^d` can be far beyond
//! anything a dense FFT could hold. Recovery runs in two stages:
//!
//! 1. [`support::find_support`] climbs a ladder of moduli `K = M_1 | M_2 | … | N`,
//!    pruning the candidate support at each rung with randomly shuffled,
//!    Gaussian-filtered short FFTs.
//! 2. [`values::compute_values`] samples on a few random prime grids and solves
//!    the resulting aliasing system with a truncated Neumann series.
//!
//! Multidimensional signals are reduced to 1-D through a rank-1 lattice
//! ([`lattice`]), and [`transform::md_sfft`] ties everything together.

pub mod dft;
pub mod error;
pub mod filter;
pub mod lattice;
pub mod numtheory;
pub mod selftest;
pub mod signal;
pub mod support;
pub mod transform;
pub mod values;

pub use error::{Error, Result};
pub use lattice::{MdSpectrum, RankOneLattice};
pub use numtheory::ModulusPair;
pub use signal::{NoiseKind, NoiseModel, Oracle, SampleLedger, Sampler, SparseSpectrum};
pub use support::{LadderPlan, SupportParams};
pub use transform::{md_sfft, sfft_1d, MdOutput};

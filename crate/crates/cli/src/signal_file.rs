//! The JSON signal description read by `--signal`.
//!
//! ```json
//! { "dims": 2, "axis_size": 16, "support": [[1, 2], [3, 0]], "values": [1.0, 0.7],
//!   "noise": { "kind": "gaussian", "eta": 0.01, "seed": 4 } }
//! ```
//!
//! One-dimensional signals may list scalar indices. `noise` is optional.

use std::path::Path;

use serde::{Deserialize, Serialize};
use smfft_core::{MdSpectrum, NoiseKind, NoiseModel, RankOneLattice};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Index {
    Scalar(u64),
    Multi(Vec<u64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKindSpec {
    None,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKindSpec,
    #[serde(default)]
    pub eta: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSpec {
    pub dims: usize,
    pub axis_size: u64,
    pub support: Vec<Index>,
    pub values: Vec<f64>,
    #[serde(default)]
    pub noise: Option<NoiseSpec>,
}

/// A parsed signal: ground-truth spectrum plus noise model.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub spectrum: MdSpectrum,
    pub noise: NoiseModel,
}

impl SignalSpec {
    pub fn into_signal(self) -> Result<Signal, String> {
        if self.support.len() != self.values.len() {
            return Err(format!(
                "{} support entries but {} values",
                self.support.len(),
                self.values.len()
            ));
        }
        let lattice = RankOneLattice::new(self.dims, self.axis_size).map_err(|e| e.to_string())?;
        let entries = self
            .support
            .into_iter()
            .zip(self.values)
            .map(|(idx, v)| match idx {
                Index::Scalar(j) => (vec![j], v),
                Index::Multi(js) => (js, v),
            });
        let spectrum = MdSpectrum::new(lattice, entries).map_err(|e| e.to_string())?;
        let noise = match self.noise {
            None | Some(NoiseSpec { kind: NoiseKindSpec::None, .. }) => NoiseModel::NONE,
            Some(NoiseSpec { kind: NoiseKindSpec::Gaussian, eta, seed }) => {
                if !(eta >= 0.0 && eta.is_finite()) {
                    return Err(format!("noise eta must be nonnegative, got {eta}"));
                }
                NoiseModel::gaussian(eta, seed)
            }
        };
        Ok(Signal { spectrum, noise })
    }

    pub fn from_signal(signal: &Signal) -> Self {
        let lattice = signal.spectrum.lattice();
        let (support, values) = signal
            .spectrum
            .entries()
            .iter()
            .map(|(idx, &v)| {
                let index = if lattice.dims() == 1 { Index::Scalar(idx[0]) } else { Index::Multi(idx.clone()) };
                (index, v)
            })
            .unzip();
        let noise = match signal.noise.kind {
            NoiseKind::None => None,
            NoiseKind::Gaussian => {
                Some(NoiseSpec { kind: NoiseKindSpec::Gaussian, eta: signal.noise.eta, seed: signal.noise.seed })
            }
        };
        Self { dims: lattice.dims(), axis_size: lattice.axis_size(), support, values, noise }
    }
}

pub fn parse_signal(text: &str) -> Result<Signal, String> {
    let spec: SignalSpec = serde_json::from_str(text).map_err(|e| e.to_string())?;
    spec.into_signal()
}

pub fn read_signal(path: &Path) -> Result<Signal, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Parse { path: path.to_owned(), message: e.to_string() })?;
    parse_signal(&text).map_err(|message| CliError::Parse { path: path.to_owned(), message })
}

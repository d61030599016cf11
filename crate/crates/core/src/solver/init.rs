use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::eigenbasis::{EigenBasis, SpectralField};
use crate::error::{Error, Result};

/// Reproducible initial data.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// θ0 ≡ 0.
    Zero,
    /// Unit-amplitude eigenmode with the given index.
    SingleMode { index: usize },
    /// Random coefficients on modes with √λ ≤ `kmax`, rescaled to the given L² norm.
    RandomBandLimited { kmax: f64, l2: f64 },
    /// amplitude·(1 − |x−c|²/r²)₊³ projected to the basis.
    Bump { center: [f64; 2], radius: f64, amplitude: f64 },
}

impl InitialData {
    pub fn build(&self, basis: &Arc<EigenBasis>, seed: u64) -> Result<SpectralField> {
        match *self {
            InitialData::Zero => Ok(SpectralField::zeros(basis)),
            InitialData::SingleMode { index } => {
                if index >= basis.len() {
                    return Err(Error::InvalidArgument(format!(
                        "mode index {index} outside basis of size {}",
                        basis.len()
                    )));
                }
                Ok(SpectralField::unit(basis, index))
            }
            InitialData::RandomBandLimited { kmax, l2 } => {
                let f = SpectralField::random_band_limited(basis, seed, kmax);
                let n = f.l2_norm();
                if n == 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "no modes with sqrt(lambda) <= {kmax} (sqrt(lambda0) = {})",
                        basis.lambda0().sqrt()
                    )));
                }
                Ok(f.scaled(l2 / n))
            }
            InitialData::Bump { center, radius, amplitude } => {
                if !(radius > 0.0) {
                    return Err(Error::InvalidArgument(format!("bump radius must be positive, got {radius}")));
                }
                Ok(basis.project_fn(|p| {
                    let r2 = ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)) / (radius * radius);
                    amplitude * (1.0 - r2).max(0.0).powi(3)
                }))
            }
        }
    }
}

//! Full model specification: one background per mark plus the kernel matrix.

use serde::{Deserialize, Serialize};

use crate::background::BackgroundSpec;
use crate::error::{HawkesError, Result};
use crate::kernel::KernelMatrix;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSpec {
    pub backgrounds: Vec<BackgroundSpec>,
    pub kernels: KernelMatrix,
}

impl ModelSpec {
    /// Build and validate: one background per mark, every kernel entry
    /// well-formed, and the productivity matrix stable (spectral radius < 1).
    pub fn new(backgrounds: Vec<BackgroundSpec>, kernels: KernelMatrix) -> Result<Self> {
        if backgrounds.len() != kernels.n_marks() {
            return Err(HawkesError::Domain(format!(
                "{} backgrounds for {} marks",
                backgrounds.len(),
                kernels.n_marks()
            )));
        }
        for b in &backgrounds {
            b.validate()?;
        }
        kernels.validate()?;
        Ok(Self { backgrounds, kernels })
    }

    pub fn n_marks(&self) -> usize {
        self.kernels.n_marks()
    }

    pub fn needs_covariate(&self) -> bool {
        self.kernels.needs_covariate() || self.backgrounds.iter().any(|b| b.needs_covariate())
    }

    /// Default history truncation horizon for likelihood sums.
    pub fn default_horizon(&self) -> f64 {
        self.kernels.default_horizon()
    }
}

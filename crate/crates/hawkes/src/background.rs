//! Background (immigrant) intensity components.

use serde::{Deserialize, Serialize};

use crate::covariate::CovariateLookup;
use crate::error::{HawkesError, Result};
use crate::quadrature::QuadratureGrid;

/// Background intensity for one mark, in events per km^2 per day. Values are
/// stored scaled by 1e-5 externally in some reports; here everything is in
/// raw intensity units.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum BackgroundSpec {
    /// mu(s, t) = mu0.
    Constant { mu0: f64 },
    /// mu(s, t) = mu0 + mu1 * X(s, t), with X a standardized covariate field.
    CovariateLinear {
        mu0: f64,
        mu1: f64,
        cov: CovariateLookup,
    },
    /// mu(s, t) = mu0 + mu1 * (t / t_end); linear drift over the study window.
    TimeLinear { mu0: f64, mu1: f64, t_end: f64 },
}

impl BackgroundSpec {
    /// Intensity at projected coordinates (x, y) km and time t days.
    pub fn eval(&self, x: f64, y: f64, t: f64) -> f64 {
        match self {
            BackgroundSpec::Constant { mu0 } => *mu0,
            BackgroundSpec::CovariateLinear { mu0, mu1, cov } => mu0 + mu1 * cov.value_km(x, y, t),
            BackgroundSpec::TimeLinear { mu0, mu1, t_end } => mu0 + mu1 * (t / t_end),
        }
    }

    /// Number of free parameters this background contributes.
    pub fn n_params(&self) -> usize {
        match self {
            BackgroundSpec::Constant { .. } => 1,
            BackgroundSpec::CovariateLinear { .. } | BackgroundSpec::TimeLinear { .. } => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |v: f64, name: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(HawkesError::Domain(format!("background {name} must be finite, got {v}")))
            }
        };
        match self {
            BackgroundSpec::Constant { mu0 } => {
                check(*mu0, "mu0")?;
                if *mu0 < 0.0 {
                    return Err(HawkesError::Infeasible(format!(
                        "constant background must be nonnegative, got {mu0}"
                    )));
                }
            }
            BackgroundSpec::CovariateLinear { mu0, mu1, .. } => {
                check(*mu0, "mu0")?;
                check(*mu1, "mu1")?;
            }
            BackgroundSpec::TimeLinear { mu0, mu1, t_end } => {
                check(*mu0, "mu0")?;
                check(*mu1, "mu1")?;
                if !(*t_end > 0.0) {
                    return Err(HawkesError::Domain(format!("t_end must be positive, got {t_end}")));
                }
            }
        }
        Ok(())
    }

    /// Integral of mu over the space-time window, by quadrature. Exact for
    /// constant backgrounds since the grid's total measure is exact.
    pub fn grid_integral(&self, grid: &QuadratureGrid) -> f64 {
        match self {
            BackgroundSpec::Constant { mu0 } => mu0 * grid.total_measure(),
            BackgroundSpec::TimeLinear { mu0, mu1, t_end } => {
                // spatially constant: only the temporal sum is needed
                let temporal: f64 = grid
                    .temporal
                    .iter()
                    .map(|tn| (mu0 + mu1 * (tn.t / t_end)) * tn.dt)
                    .sum();
                temporal * grid.window_area
            }
            BackgroundSpec::CovariateLinear { .. } => {
                let mut terms = Vec::with_capacity(grid.spatial.len());
                for sn in &grid.spatial {
                    let mut acc = 0.0;
                    for tn in &grid.temporal {
                        acc += self.eval(sn.x, sn.y, tn.t) * tn.dt;
                    }
                    terms.push(acc * sn.area);
                }
                crate::numeric::pairwise_sum(&terms)
            }
        }
    }

    /// Total mass of the negative part of mu over the grid; zero when mu is
    /// nonnegative everywhere. Used by the fit objective to penalize signed
    /// backgrounds that dip below zero.
    pub fn negative_mass(&self, grid: &QuadratureGrid) -> f64 {
        match self {
            BackgroundSpec::Constant { mu0 } => {
                if *mu0 < 0.0 {
                    -mu0 * grid.total_measure()
                } else {
                    0.0
                }
            }
            BackgroundSpec::TimeLinear { mu0, mu1, t_end } => {
                let temporal: f64 = grid
                    .temporal
                    .iter()
                    .map(|tn| (mu0 + mu1 * (tn.t / t_end)).min(0.0) * tn.dt)
                    .sum();
                -temporal * grid.window_area
            }
            BackgroundSpec::CovariateLinear { .. } => {
                let mut acc = 0.0;
                for sn in &grid.spatial {
                    for tn in &grid.temporal {
                        let v = self.eval(sn.x, sn.y, tn.t);
                        if v < 0.0 {
                            acc -= v * tn.dt * sn.area;
                        }
                    }
                }
                acc
            }
        }
    }

    pub fn needs_covariate(&self) -> bool {
        matches!(self, BackgroundSpec::CovariateLinear { .. })
    }
}

//! Parametric spatio-temporal triggering kernels and their multivariate
//! matrix assembly.
//!
//! All variants factor as `alpha * f_time(dt) * f_space(ds | dt)` where the
//! temporal factor is a density on positive lags and the spatial factor is a
//! two-dimensional Gaussian density, so the space-time integral of every
//! kernel with constant parameters equals `alpha`.

use serde::{Deserialize, Serialize};

use crate::catalog::EventCatalog;
use crate::covariate::CovariateLookup;
use crate::error::{HawkesError, Result};
use crate::quadrature::QuadratureGrid;

pub const TWO_PI: f64 = std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TemporalFamily {
    Exponential,
    /// Half-normal density on positive lags with scale `beta`; keeps the
    /// temporal factor integrating to 1 so `alpha` stays a productivity.
    HalfNormal,
}

impl TemporalFamily {
    #[inline]
    pub fn density(self, dt: f64, beta: f64) -> f64 {
        match self {
            TemporalFamily::Exponential => (-dt / beta).exp() / beta,
            TemporalFamily::HalfNormal => {
                (2.0 / std::f64::consts::PI).sqrt() / beta * (-dt * dt / (2.0 * beta * beta)).exp()
            }
        }
    }

    /// Maximum of the density over positive lags (attained at dt -> 0+).
    #[inline]
    pub fn density_max(self, beta: f64) -> f64 {
        match self {
            TemporalFamily::Exponential => 1.0 / beta,
            TemporalFamily::HalfNormal => (2.0 / std::f64::consts::PI).sqrt() / beta,
        }
    }
}

#[inline]
fn gaussian2(dx: f64, dy: f64, var: f64) -> f64 {
    (-(dx * dx + dy * dy) / (2.0 * var)).exp() / (TWO_PI * var)
}

/// Separable kernel: exponential (or half-normal) in time, isotropic
/// Gaussian in space.
pub fn eval_g1(
    dt: f64,
    dx: f64,
    dy: f64,
    alpha: f64,
    beta: f64,
    phi: f64,
    temporal: TemporalFamily,
) -> Result<f64> {
    if dt <= 0.0 {
        return Err(HawkesError::Domain("g1 requires dt > 0".into()));
    }
    Ok(alpha * temporal.density(dt, beta) * gaussian2(dx, dy, phi * phi))
}

/// Cross-triggering kernel with a spatial shift `m`; the spatial factor is a
/// Gaussian density centered at `m`, so it still integrates to 1 and the
/// kernel is not monotone in spatial distance.
pub fn eval_g2(
    dt: f64,
    dx: f64,
    dy: f64,
    alpha: f64,
    beta: f64,
    phi: f64,
    m: (f64, f64),
) -> Result<f64> {
    if dt <= 0.0 {
        return Err(HawkesError::Domain("g2 requires dt > 0".into()));
    }
    Ok(alpha
        * TemporalFamily::Exponential.density(dt, beta)
        * gaussian2(dx - m.0, dy - m.1, phi * phi))
}

/// Nonseparable kernel: spatial dispersion grows with temporal lag through
/// the variance inflation factor `c(dt) = (1 + dt/beta)^gamma`. Each spatial
/// slice at fixed dt still integrates to 1.
pub fn eval_g3(
    dt: f64,
    dx: f64,
    dy: f64,
    alpha: f64,
    beta: f64,
    phi: f64,
    m: (f64, f64),
    gamma: f64,
) -> Result<f64> {
    if dt <= 0.0 {
        return Err(HawkesError::Domain("g3 requires dt > 0".into()));
    }
    let c = (1.0 + dt / beta).powf(gamma);
    Ok(alpha
        * TemporalFamily::Exponential.density(dt, beta)
        * gaussian2(dx - m.0, dy - m.1, phi * phi * c))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NonstatVariant {
    /// `phi~ = phi0 + phi1 * meanLP`, constant alpha.
    Phi,
    /// `alpha~ = alpha0 * meanLP`, constant phi.
    Alpha,
}

/// Separable kernel with covariate-dependent level or range: the kernel of
/// Eq-style nonstationary models, where the covariate enters through the
/// average of its values at the two endpoints.
#[allow(clippy::too_many_arguments)]
pub fn eval_g1_nonstationary(
    target: (f64, f64, f64),
    source: (f64, f64, f64),
    variant: NonstatVariant,
    alpha: f64,
    beta: f64,
    phi0: f64,
    phi1: f64,
    cov: &CovariateLookup,
) -> Result<f64> {
    let dt = target.2 - source.2;
    if dt <= 0.0 {
        return Err(HawkesError::Domain("nonstationary g1 requires t > u".into()));
    }
    let lp_t = cov.value_km(target.0, target.1, target.2);
    let lp_s = cov.value_km(source.0, source.1, source.2);
    let mean_lp = 0.5 * (lp_t + lp_s);
    let (a, p) = match variant {
        NonstatVariant::Phi => (alpha, phi0 + phi1 * mean_lp),
        NonstatVariant::Alpha => (alpha * mean_lp, phi0),
    };
    if p <= 0.0 {
        return Err(HawkesError::Infeasible(format!(
            "nonstationary spatial range {p} <= 0 at covariate mean {mean_lp}"
        )));
    }
    Ok(a * TemporalFamily::Exponential.density(dt, beta)
        * gaussian2(target.0 - source.0, target.1 - source.1, p * p))
}

/// One entry of the triggering matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Kernel {
    Zero,
    G1 {
        alpha: f64,
        beta: f64,
        phi: f64,
        temporal: TemporalFamily,
    },
    G2 {
        alpha: f64,
        beta: f64,
        phi: f64,
        m: (f64, f64),
    },
    G3 {
        alpha: f64,
        beta: f64,
        phi: f64,
        m: (f64, f64),
        gamma: f64,
    },
    G1NonstatPhi {
        alpha: f64,
        beta: f64,
        phi0: f64,
        phi1: f64,
        cov: CovariateLookup,
    },
    G1NonstatAlpha {
        alpha0: f64,
        beta: f64,
        phi: f64,
        cov: CovariateLookup,
    },
}

impl Kernel {
    /// Productivity bound used for stability checks (for the covariate-level
    /// variant this is `alpha0 * max observed covariate`).
    pub fn productivity(&self) -> f64 {
        match self {
            Kernel::Zero => 0.0,
            Kernel::G1 { alpha, .. } | Kernel::G2 { alpha, .. } | Kernel::G3 { alpha, .. } => {
                *alpha
            }
            Kernel::G1NonstatPhi { alpha, .. } => *alpha,
            Kernel::G1NonstatAlpha { alpha0, cov, .. } => {
                let (_, hi) = cov.observed_range();
                alpha0 * hi
            }
        }
    }

    pub fn beta(&self) -> Option<f64> {
        match self {
            Kernel::Zero => None,
            Kernel::G1 { beta, .. }
            | Kernel::G2 { beta, .. }
            | Kernel::G3 { beta, .. }
            | Kernel::G1NonstatPhi { beta, .. }
            | Kernel::G1NonstatAlpha { beta, .. } => Some(*beta),
        }
    }

    pub fn needs_covariate(&self) -> bool {
        matches!(
            self,
            Kernel::G1NonstatPhi { .. } | Kernel::G1NonstatAlpha { .. }
        )
    }

    /// Parameter feasibility: positive scales, `gamma` in (0, 1], `|alpha0| < 1`,
    /// and positivity of the nonstationary range over the observed covariate
    /// range (with the `phi1 > -phi0` constraint checked at the covariate
    /// value 1).
    pub fn validate(&self) -> Result<()> {
        let check_pos = |v: f64, name: &str| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(HawkesError::Infeasible(format!("{name} must be finite and > 0, got {v}")))
            }
        };
        match self {
            Kernel::Zero => Ok(()),
            Kernel::G1 { beta, phi, .. } | Kernel::G2 { beta, phi, .. } => {
                check_pos(*beta, "beta")?;
                check_pos(*phi, "phi")
            }
            Kernel::G3 {
                beta, phi, gamma, ..
            } => {
                check_pos(*beta, "beta")?;
                check_pos(*phi, "phi")?;
                if *gamma > 0.0 && *gamma <= 1.0 {
                    Ok(())
                } else {
                    Err(HawkesError::Infeasible(format!(
                        "gamma must lie in (0, 1], got {gamma}"
                    )))
                }
            }
            Kernel::G1NonstatPhi {
                beta,
                phi0,
                phi1,
                cov,
                ..
            } => {
                check_pos(*beta, "beta")?;
                let (lo, hi) = cov.observed_range();
                for u in [lo, hi, 1.0] {
                    if phi0 + phi1 * u <= 0.0 {
                        return Err(HawkesError::Infeasible(format!(
                            "phi0 + phi1*u = {} <= 0 at covariate value {u}",
                            phi0 + phi1 * u
                        )));
                    }
                }
                Ok(())
            }
            Kernel::G1NonstatAlpha { alpha0, beta, phi, .. } => {
                check_pos(*beta, "beta")?;
                check_pos(*phi, "phi")?;
                if alpha0.abs() < 1.0 {
                    Ok(())
                } else {
                    Err(HawkesError::Infeasible(format!("|alpha0| must be < 1, got {alpha0}")))
                }
            }
        }
    }

    /// Kernel value for target point `(tx, ty, tt)` triggered by source
    /// `(sx, sy, st)`; zero for nonpositive lags.
    #[inline]
    pub fn eval(&self, tx: f64, ty: f64, tt: f64, sx: f64, sy: f64, st: f64) -> f64 {
        let dt = tt - st;
        if dt <= 0.0 {
            return 0.0;
        }
        let dx = tx - sx;
        let dy = ty - sy;
        match self {
            Kernel::Zero => 0.0,
            Kernel::G1 {
                alpha,
                beta,
                phi,
                temporal,
            } => alpha * temporal.density(dt, *beta) * gaussian2(dx, dy, phi * phi),
            Kernel::G2 { alpha, beta, phi, m } => {
                alpha
                    * TemporalFamily::Exponential.density(dt, *beta)
                    * gaussian2(dx - m.0, dy - m.1, phi * phi)
            }
            Kernel::G3 {
                alpha,
                beta,
                phi,
                m,
                gamma,
            } => {
                let c = (1.0 + dt / beta).powf(*gamma);
                alpha
                    * TemporalFamily::Exponential.density(dt, *beta)
                    * gaussian2(dx - m.0, dy - m.1, phi * phi * c)
            }
            Kernel::G1NonstatPhi {
                alpha,
                beta,
                phi0,
                phi1,
                cov,
            } => {
                let mean_lp =
                    0.5 * (cov.value_km(tx, ty, tt) + cov.value_km(sx, sy, st));
                let p = phi0 + phi1 * mean_lp;
                if p <= 0.0 {
                    return 0.0; // excluded by validate() over the observed range
                }
                alpha * TemporalFamily::Exponential.density(dt, *beta) * gaussian2(dx, dy, p * p)
            }
            Kernel::G1NonstatAlpha {
                alpha0,
                beta,
                phi,
                cov,
            } => {
                let mean_lp =
                    0.5 * (cov.value_km(tx, ty, tt) + cov.value_km(sx, sy, st));
                alpha0
                    * mean_lp
                    * TemporalFamily::Exponential.density(dt, *beta)
                    * gaussian2(dx, dy, phi * phi)
            }
        }
    }

    /// Integral of the kernel over the quadrature grid for a source event at
    /// `(sx, sy, st)`, honoring the temporal truncation horizon.
    ///
    /// Separable variants factor the double sum into a spatial sum times a
    /// temporal sum; nonseparable and covariate-dependent variants fall back
    /// to the full node loop.
    pub fn grid_mass(&self, sx: f64, sy: f64, st: f64, grid: &QuadratureGrid, horizon: f64) -> f64 {
        let mut per_t = vec![0.0; grid.temporal.len()];
        self.grid_mass_per_temporal(sx, sy, st, grid, horizon, &mut per_t);
        crate::numeric::pairwise_sum(&per_t)
    }

    /// Same integral, resolved per temporal node (index-aligned with
    /// `grid.temporal`). Used by the expected daily-count decomposition.
    pub fn grid_mass_per_temporal(
        &self,
        sx: f64,
        sy: f64,
        st: f64,
        grid: &QuadratureGrid,
        horizon: f64,
        out: &mut [f64],
    ) {
        debug_assert_eq!(out.len(), grid.temporal.len());
        match self {
            Kernel::Zero => out.fill(0.0),
            Kernel::G1 {
                alpha,
                beta,
                phi,
                temporal,
            } => {
                let var = phi * phi;
                let spatial: f64 = crate::numeric::pairwise_sum_iter(
                    grid.spatial
                        .iter()
                        .map(|n| n.area * gaussian2(n.x - sx, n.y - sy, var)),
                );
                for (o, n) in out.iter_mut().zip(&grid.temporal) {
                    let dt = n.t - st;
                    *o = if dt > 0.0 && dt <= horizon {
                        alpha * spatial * temporal.density(dt, *beta) * n.dt
                    } else {
                        0.0
                    };
                }
            }
            Kernel::G2 { alpha, beta, phi, m } => {
                let var = phi * phi;
                let cx = sx + m.0;
                let cy = sy + m.1;
                let spatial: f64 = crate::numeric::pairwise_sum_iter(
                    grid.spatial
                        .iter()
                        .map(|n| n.area * gaussian2(n.x - cx, n.y - cy, var)),
                );
                for (o, n) in out.iter_mut().zip(&grid.temporal) {
                    let dt = n.t - st;
                    *o = if dt > 0.0 && dt <= horizon {
                        alpha * spatial * TemporalFamily::Exponential.density(dt, *beta) * n.dt
                    } else {
                        0.0
                    };
                }
            }
            Kernel::G3 {
                alpha,
                beta,
                phi,
                m,
                gamma,
            } => {
                let cx = sx + m.0;
                let cy = sy + m.1;
                // distances are lag-invariant; cache them once per event
                let d2: Vec<(f64, f64)> = grid
                    .spatial
                    .iter()
                    .map(|n| {
                        let dx = n.x - cx;
                        let dy = n.y - cy;
                        (dx * dx + dy * dy, n.area)
                    })
                    .collect();
                for (o, n) in out.iter_mut().zip(&grid.temporal) {
                    let dt = n.t - st;
                    if dt > 0.0 && dt <= horizon {
                        let c = (1.0 + dt / beta).powf(*gamma);
                        let var = phi * phi * c;
                        let norm = 1.0 / (TWO_PI * var);
                        let spatial: f64 = crate::numeric::pairwise_sum_iter(
                            d2.iter().map(|&(r2, a)| a * norm * (-r2 / (2.0 * var)).exp()),
                        );
                        *o = alpha * spatial * TemporalFamily::Exponential.density(dt, *beta) * n.dt;
                    } else {
                        *o = 0.0;
                    }
                }
            }
            _ => {
                // covariate-dependent variants: full node loop
                for (o, n) in out.iter_mut().zip(&grid.temporal) {
                    let dt = n.t - st;
                    if dt > 0.0 && dt <= horizon {
                        let s: f64 = crate::numeric::pairwise_sum_iter(grid.spatial.iter().map(
                            |sn| sn.area * self.eval(sn.x, sn.y, n.t, sx, sy, st),
                        ));
                        *o = s * n.dt;
                    } else {
                        *o = 0.0;
                    }
                }
            }
        }
    }
}

/// `k x k` matrix of triggering kernels; entry `(l, k)` is the triggering of
/// target mark `k` by source events of mark `l`. Asymmetric entries are
/// allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelMatrix {
    n_marks: usize,
    entries: Vec<Kernel>,
}

impl KernelMatrix {
    pub fn new(n_marks: usize, entries: Vec<Kernel>) -> Result<Self> {
        if entries.len() != n_marks * n_marks {
            return Err(HawkesError::Domain(format!(
                "kernel matrix needs {} entries, got {}",
                n_marks * n_marks,
                entries.len()
            )));
        }
        let m = Self { n_marks, entries };
        m.validate()?;
        Ok(m)
    }

    pub fn univariate(kernel: Kernel) -> Result<Self> {
        Self::new(1, vec![kernel])
    }

    pub fn n_marks(&self) -> usize {
        self.n_marks
    }

    #[inline]
    pub fn entry(&self, source: usize, target: usize) -> &Kernel {
        &self.entries[source * self.n_marks + target]
    }

    pub fn entries(&self) -> &[Kernel] {
        &self.entries
    }

    /// Productivity matrix `A = (alpha_lk)`.
    pub fn productivity_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.n_marks)
            .map(|l| {
                (0..self.n_marks)
                    .map(|k| self.entry(l, k).productivity())
                    .collect()
            })
            .collect()
    }

    pub fn spectral_radius(&self) -> f64 {
        crate::constraints::spectral_radius_general(&self.productivity_matrix())
    }

    /// Per-entry feasibility plus the subcritical stability condition
    /// (spectral radius of the productivity matrix < 1).
    pub fn validate(&self) -> Result<()> {
        for e in &self.entries {
            e.validate()?;
        }
        let radius = self.spectral_radius();
        if radius >= 1.0 {
            return Err(HawkesError::Unstable { radius });
        }
        Ok(())
    }

    /// Largest temporal scale across entries; drives the default truncation
    /// horizon `20 * max(beta)`.
    pub fn max_beta(&self) -> f64 {
        self.entries
            .iter()
            .filter_map(|e| e.beta())
            .fold(0.0_f64, f64::max)
    }

    pub fn default_horizon(&self) -> f64 {
        let b = self.max_beta();
        if b > 0.0 {
            20.0 * b
        } else {
            f64::INFINITY
        }
    }

    pub fn needs_covariate(&self) -> bool {
        self.entries.iter().any(|e| e.needs_covariate())
    }
}

/// Triggering part of the conditional intensity of `target_mark` at `(x, y, t)`:
/// the sum of kernel values over all history events with `t_i < t`,
/// truncated at temporal lag `horizon`.
pub fn kernel_sum(
    target_mark: usize,
    x: f64,
    y: f64,
    t: f64,
    catalog: &EventCatalog,
    matrix: &KernelMatrix,
    horizon: f64,
) -> f64 {
    let events = catalog.events();
    let lo = if horizon.is_finite() {
        events.partition_point(|e| e.t < t - horizon)
    } else {
        0
    };
    let hi = events.partition_point(|e| e.t < t);
    let vals: Vec<f64> = events[lo..hi]
        .iter()
        .map(|e| matrix.entry(e.mark, target_mark).eval(x, y, t, e.x, e.y, e.t))
        .collect();
    crate::numeric::pairwise_sum(&vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{EventCatalog, EventRecord};
    use crate::geo::{Projection, SpatialWindow};
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn g1_normalizing_constants_at_origin() {
        // alpha=beta=phi=1, dt -> 0+, zero spatial lag: (1/beta)(1/2pi) = 1/(2pi)
        let v = eval_g1(1e-12, 0.0, 0.0, 1.0, 1.0, 1.0, TemporalFamily::Exponential).unwrap();
        assert_relative_eq!(v, 1.0 / TWO_PI, max_relative = 1e-9);
    }

    #[test]
    fn g1_rejects_nonpositive_lag() {
        assert!(eval_g1(0.0, 0.0, 0.0, 1.0, 1.0, 1.0, TemporalFamily::Exponential).is_err());
        assert!(eval_g2(-1.0, 0.0, 0.0, 1.0, 1.0, 1.0, (0.0, 0.0)).is_err());
        assert!(eval_g3(0.0, 0.0, 0.0, 1.0, 1.0, 1.0, (0.0, 0.0), 0.5).is_err());
    }

    #[test]
    fn g1_at_table3_m21_fit() {
        // alpha=0.43, beta=137.83, phi=30.78 at dt=beta, |ds|=phi:
        // 0.43 * e^{-1}/137.83 * e^{-1/2}/(2 pi 30.78^2)
        let v = eval_g1(
            137.83,
            30.78,
            0.0,
            0.43,
            137.83,
            30.78,
            TemporalFamily::Exponential,
        )
        .unwrap();
        let expect = 0.43 * (-1.0_f64).exp() / 137.83
            * (-0.5_f64).exp()
            / (TWO_PI * 30.78 * 30.78);
        assert_relative_eq!(v, expect, max_relative = 1e-12);
        assert!((v - 1.17e-7).abs() / 1.17e-7 < 0.02);
    }

    #[test]
    fn g2_zero_shift_equals_g1() {
        for (dt, dx, dy) in [(0.5, 1.0, -2.0), (3.0, 0.0, 0.0), (10.0, 5.0, 5.0)] {
            let a = eval_g1(dt, dx, dy, 0.7, 2.0, 3.0, TemporalFamily::Exponential).unwrap();
            let b = eval_g2(dt, dx, dy, 0.7, 2.0, 3.0, (0.0, 0.0)).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-15);
        }
    }

    #[test]
    fn g2_spatial_mode_at_shift() {
        let phi = 3.0;
        let at_shift = eval_g2(1.0, 4.0, -2.0, 1.0, 1.0, phi, (4.0, -2.0)).unwrap();
        let temporal = TemporalFamily::Exponential.density(1.0, 1.0);
        assert_relative_eq!(at_shift, temporal / (TWO_PI * phi * phi), max_relative = 1e-12);
        // non-monotone: larger at the shift than at zero lag
        let at_zero = eval_g2(1.0, 0.0, 0.0, 1.0, 1.0, phi, (4.0, -2.0)).unwrap();
        assert!(at_shift > at_zero);
    }

    #[test]
    fn g3_gamma_zero_limit_is_g2() {
        for (dt, dx, dy) in [(0.5, 1.0, -2.0), (7.0, 3.0, 0.0)] {
            let g2 = eval_g2(dt, dx, dy, 0.6, 4.0, 2.0, (1.0, 1.0)).unwrap();
            let g3 = eval_g3(dt, dx, dy, 0.6, 4.0, 2.0, (1.0, 1.0), 1e-14).unwrap();
            assert_relative_eq!(g2, g3, max_relative = 1e-9);
        }
    }

    #[test]
    fn g3_variance_doubles_at_dt_beta_gamma_one() {
        // c(beta) = 2 with gamma = 1: the spatial factor at zero lag halves
        let beta = 4.0;
        let phi = 2.0;
        let v = eval_g3(beta, 0.0, 0.0, 1.0, beta, phi, (0.0, 0.0), 1.0).unwrap();
        let temporal = TemporalFamily::Exponential.density(beta, beta);
        assert_relative_eq!(v, temporal / (TWO_PI * phi * phi * 2.0), max_relative = 1e-12);
    }

    #[test]
    fn g3_nonseparable_g1_separable() {
        // separability cross-product identity holds for g1, fails for g3
        let check = |f: &dyn Fn(f64, f64) -> f64| {
            let lhs = f(1.0, 2.0) * f(5.0, 7.0);
            let rhs = f(1.0, 7.0) * f(5.0, 2.0);
            (lhs - rhs).abs() / lhs.abs().max(1e-300)
        };
        let g1 = |dt: f64, ds: f64| {
            eval_g1(dt, ds, 0.0, 0.5, 3.0, 4.0, TemporalFamily::Exponential).unwrap()
        };
        let g3 = |dt: f64, ds: f64| eval_g3(dt, ds, 0.0, 0.5, 3.0, 4.0, (0.0, 0.0), 0.8).unwrap();
        assert!(check(&g1) < 1e-12);
        assert!(check(&g3) > 1e-3);
    }

    #[test]
    fn g1_monotone_in_spatial_lag() {
        let mut prev = f64::INFINITY;
        for i in 0..20 {
            let r = i as f64 * 0.5;
            let v = eval_g1(1.0, r, 0.0, 0.5, 2.0, 3.0, TemporalFamily::Exponential).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn nonstationary_constant_covariate_collapses_to_g1() {
        let cov = CovariateLookup::new(
            std::sync::Arc::new(crate::covariate::CovariateField::constant(1.0)),
            Projection::new(0.0, 0.0).unwrap(),
            None,
        );
        let target = (3.0, 4.0, 10.0);
        let source = (0.0, 0.0, 2.0);
        let v = eval_g1_nonstationary(
            target,
            source,
            NonstatVariant::Phi,
            0.8,
            5.0,
            2.0,
            3.0,
            &cov,
        )
        .unwrap();
        // phi~ = phi0 + phi1 * 1
        let direct = eval_g1(8.0, 3.0, 4.0, 0.8, 5.0, 5.0, TemporalFamily::Exponential).unwrap();
        assert_relative_eq!(v, direct, max_relative = 1e-12);
    }

    #[test]
    fn nonstationary_phi_mixes_endpoint_covariates() {
        // lP = 1 at target, 0 at source -> phi~ = phi0 + phi1/2
        let field = crate::covariate::CovariateField::new(
            vec![-1.0, 1.0],
            vec![0.0],
            vec![2000],
            vec![vec![0.0, 1.0]],
        )
        .unwrap();
        let proj = Projection::new(0.0, 0.0).unwrap();
        let cov = CovariateLookup::new(std::sync::Arc::new(field), proj, None);
        let (x1, _) = proj.project(1.0, 0.0).unwrap();
        let (x0, _) = proj.project(-1.0, 0.0).unwrap();
        let v = eval_g1_nonstationary(
            (x1, 0.0, 5.0),
            (x0, 0.0, 1.0),
            NonstatVariant::Phi,
            0.8,
            5.0,
            2.0,
            3.0,
            &cov,
        )
        .unwrap();
        let phi_eff = 2.0 + 3.0 * 0.5;
        let direct =
            eval_g1(4.0, x1 - x0, 0.0, 0.8, 5.0, phi_eff, TemporalFamily::Exponential).unwrap();
        assert_relative_eq!(v, direct, max_relative = 1e-12);
    }

    #[test]
    fn nonstationary_phi_guard_rejects_table2_pair_on_low_covariate() {
        // phi0 = -13.56, phi1 = 13.57 is infeasible unless the covariate
        // stays above 13.56/13.57 everywhere
        let low = CovariateLookup::new(
            std::sync::Arc::new(crate::covariate::CovariateField::constant(0.9)),
            Projection::new(0.0, 0.0).unwrap(),
            None,
        );
        let k = Kernel::G1NonstatPhi {
            alpha: 0.5,
            beta: 100.0,
            phi0: -13.56,
            phi1: 13.57,
            cov: low,
        };
        assert!(k.validate().is_err());
        let high = CovariateLookup::new(
            std::sync::Arc::new(crate::covariate::CovariateField::constant(0.9995)),
            Projection::new(0.0, 0.0).unwrap(),
            None,
        );
        let k = Kernel::G1NonstatPhi {
            alpha: 0.5,
            beta: 100.0,
            phi0: -13.56,
            phi1: 13.57,
            cov: high,
        };
        assert!(k.validate().is_ok());
    }

    fn toy_catalog(points: &[(usize, f64, f64, f64)]) -> EventCatalog {
        let proj = Projection::new(0.0, 0.0).unwrap();
        let window = SpatialWindow::rect(-200.0, 200.0, -200.0, 200.0).unwrap();
        let n_marks = points.iter().map(|p| p.0).max().unwrap_or(0) + 1;
        let events = points
            .iter()
            .map(|&(mark, x, y, t)| EventRecord {
                mark,
                lon: 0.0,
                lat: 0.0,
                t,
                specificity: None,
                x,
                y,
            })
            .collect();
        EventCatalog::new(events, n_marks, 1000.0, window, proj).unwrap()
    }

    #[test]
    fn kernel_sum_empty_history_and_single_event() {
        let k = Kernel::G1 {
            alpha: 0.5,
            beta: 3.0,
            phi: 2.0,
            temporal: TemporalFamily::Exponential,
        };
        let m = KernelMatrix::univariate(k.clone()).unwrap();
        let empty = toy_catalog(&[]);
        assert_eq!(kernel_sum(0, 0.0, 0.0, 5.0, &empty, &m, f64::INFINITY), 0.0);

        let single = toy_catalog(&[(0, 1.0, -1.0, 2.0)]);
        let s = kernel_sum(0, 3.0, 0.5, 5.0, &single, &m, f64::INFINITY);
        assert_relative_eq!(s, k.eval(3.0, 0.5, 5.0, 1.0, -1.0, 2.0), max_relative = 1e-15);
    }

    #[test]
    fn kernel_sum_truncation_tail_bound() {
        let beta = 2.0;
        let k = Kernel::G1 {
            alpha: 0.5,
            beta,
            phi: 5.0,
            temporal: TemporalFamily::Exponential,
        };
        let m = KernelMatrix::univariate(k).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<(usize, f64, f64, f64)> = (0..100)
            .map(|_| {
                (
                    0,
                    rng.gen_range(-50.0..50.0),
                    rng.gen_range(-50.0..50.0),
                    rng.gen_range(0.0..949.0),
                )
            })
            .collect();
        let mut pts = pts;
        pts.sort_by(|a, b| a.3.partial_cmp(&b.3).unwrap());
        let cat = toy_catalog(&pts);
        let full = kernel_sum(0, 0.0, 0.0, 950.0, &cat, &m, f64::INFINITY);
        let trunc = kernel_sum(0, 0.0, 0.0, 950.0, &cat, &m, 20.0 * beta);
        assert!((full - trunc).abs() <= 1e-8 * full.abs().max(1e-300));
    }

    #[test]
    fn matrix_rejects_unstable_productivity() {
        let g = |alpha: f64| Kernel::G1 {
            alpha,
            beta: 1.0,
            phi: 1.0,
            temporal: TemporalFamily::Exponential,
        };
        // radius of [[0.8, 0.5], [0.5, 0.8]] is 1.3
        let err = KernelMatrix::new(2, vec![g(0.8), g(0.5), g(0.5), g(0.8)]);
        assert!(matches!(err, Err(HawkesError::Unstable { .. })));
        // radius of [[0.8, 0.1], [0.1, 0.8]] is 0.9
        assert!(KernelMatrix::new(2, vec![g(0.8), g(0.1), g(0.1), g(0.8)]).is_ok());
    }

    #[test]
    fn grid_mass_fast_path_matches_node_loop() {
        let window = SpatialWindow::rect(-30.0, 30.0, -30.0, 30.0).unwrap();
        let grid = crate::quadrature::build_quadrature(&window, 50.0, 900, 80).unwrap();
        let kernels = [
            Kernel::G1 {
                alpha: 0.7,
                beta: 5.0,
                phi: 4.0,
                temporal: TemporalFamily::Exponential,
            },
            Kernel::G1 {
                alpha: 0.7,
                beta: 5.0,
                phi: 4.0,
                temporal: TemporalFamily::HalfNormal,
            },
            Kernel::G2 {
                alpha: 0.5,
                beta: 5.0,
                phi: 4.0,
                m: (3.0, -2.0),
            },
            Kernel::G3 {
                alpha: 0.5,
                beta: 5.0,
                phi: 4.0,
                m: (0.0, 0.0),
                gamma: 0.8,
            },
        ];
        for k in kernels {
            let fast = k.grid_mass(1.0, -2.0, 7.0, &grid, f64::INFINITY);
            let mut slow = 0.0;
            for tn in &grid.temporal {
                for sn in &grid.spatial {
                    slow += sn.area * tn.dt * k.eval(sn.x, sn.y, tn.t, 1.0, -2.0, 7.0);
                }
            }
            assert_relative_eq!(fast, slow, max_relative = 1e-10);
        }
    }
}

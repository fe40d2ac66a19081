//! Maximum-likelihood fitting with multi-start optimization, numeric-Hessian
//! asymptotic standard errors, information criteria, and model comparison.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::EventCatalog;
use crate::error::{HawkesError, Result};
use crate::likelihood::{log_likelihood, penalized_neg_log_likelihood};
use crate::optimize::minimize;
use crate::quadrature::QuadratureGrid;
use crate::template::ModelTemplate;

/// Penalty returned by the objective when a parameter point is infeasible
/// (an unstable branching block or an unbuildable model); scaled by how far
/// past the stability bound the point sits so the optimizer is pushed back.
const INFEASIBLE_PENALTY: f64 = 1e9;

/// Relative finite-difference step for Hessian entries, with [`FD_FLOOR`] as
/// the absolute floor.
const HESSIAN_REL_STEP: f64 = 1e-3;
const FD_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitOptions {
    /// Number of jittered starting points (the first start is unjittered).
    pub n_starts: usize,
    pub seed: u64,
    /// Relative improvement threshold between optimizer rounds.
    pub tol: f64,
    /// Maximum alternating simplex/quasi-Newton rounds per start.
    pub max_rounds: usize,
    /// Triggering truncation horizon; `None` uses the model default
    /// (20 x the largest temporal scale), `Some(f64::INFINITY)` disables it.
    pub horizon: Option<f64>,
    /// Additional starting points in internal natural scale (warm starts).
    pub extra_starts: Vec<Vec<f64>>,
    pub compute_ses: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            n_starts: 3,
            seed: 0,
            tol: 1e-6,
            max_rounds: 8,
            horizon: None,
            extra_starts: Vec::new(),
            compute_ses: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamEstimate {
    pub name: String,
    pub value: f64,
    pub se: Option<f64>,
    pub counted: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub template_name: String,
    /// Natural-scale estimates in reporting convention (branching blocks
    /// already mapped to productivity entries).
    pub params: Vec<ParamEstimate>,
    pub loglik: f64,
    pub k: usize,
    pub n: usize,
    pub aic: f64,
    pub bic: f64,
    pub hq: f64,
    pub converged: bool,
    /// Whether the negative Hessian at the optimum was positive definite.
    pub hessian_pd: bool,
    /// Names of parameters that ended within 1e-4 of a transform bound.
    pub boundary_flags: Vec<String>,
    pub n_evals: usize,
    pub n_starts: usize,
    pub seed: u64,
    pub catalog_hash: u64,
    /// Internal natural-scale optimum, reusable as a warm start.
    pub internal: Vec<f64>,
}

impl FitResult {
    pub fn summary(&self) -> FitSummary {
        FitSummary {
            name: self.template_name.clone(),
            loglik: self.loglik,
            k: self.k,
            n: self.n,
            catalog_hash: Some(self.catalog_hash),
        }
    }
}

/// AIC, BIC, and Hannan-Quinn from a maximized log-likelihood, parameter
/// count, and sample size. HQ needs `ln(ln n)`, hence n >= 3.
pub fn information_criteria(loglik: f64, k: usize, n: usize) -> Result<(f64, f64, f64)> {
    if n < 3 {
        return Err(HawkesError::Domain(format!(
            "information criteria need n >= 3 (ln ln n), got {n}"
        )));
    }
    let kf = k as f64;
    let nf = n as f64;
    let aic = -2.0 * loglik + 2.0 * kf;
    let bic = -2.0 * loglik + kf * nf.ln();
    let hq = -2.0 * loglik + 2.0 * kf * nf.ln().ln();
    Ok((aic, bic, hq))
}

/// Central finite-difference Hessian with relative steps.
pub fn fd_hessian<F: FnMut(&[f64]) -> Option<f64>>(
    f: &mut F,
    x: &[f64],
    rel_step: f64,
) -> Option<Vec<Vec<f64>>> {
    let n = x.len();
    let h: Vec<f64> = x.iter().map(|v| (rel_step * v.abs()).max(FD_FLOOR)).collect();
    let f0 = f(x)?;
    let mut hess = vec![vec![0.0; n]; n];
    let mut xp = x.to_vec();
    for i in 0..n {
        xp[i] = x[i] + h[i];
        let fp = f(&xp)?;
        xp[i] = x[i] - h[i];
        let fm = f(&xp)?;
        xp[i] = x[i];
        hess[i][i] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for j in (i + 1)..n {
            xp[i] = x[i] + h[i];
            xp[j] = x[j] + h[j];
            let fpp = f(&xp)?;
            xp[j] = x[j] - h[j];
            let fpm = f(&xp)?;
            xp[i] = x[i] - h[i];
            let fmm = f(&xp)?;
            xp[j] = x[j] + h[j];
            let fmp = f(&xp)?;
            xp[i] = x[i];
            xp[j] = x[j];
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    Some(hess)
}

/// Standard errors from the observed information: the Hessian of the
/// log-likelihood is taken with respect to the reported natural-scale
/// parameters directly (no transform Jacobians), and SEs are the square
/// roots of the diagonal of the inverse negative Hessian. Returns `None`
/// SEs with `pd = false` when the negative Hessian is not positive definite
/// or a perturbed point is infeasible.
pub fn asymptotic_ses(
    template: &ModelTemplate,
    reported: &[f64],
    catalog: &EventCatalog,
    grid: &QuadratureGrid,
    horizon: Option<f64>,
) -> (Vec<Option<f64>>, bool) {
    let n = reported.len();
    let mut f = |x: &[f64]| -> Option<f64> {
        let model = template.build_model(x, catalog.t_end()).ok()?;
        let h = horizon.unwrap_or_else(|| model.default_horizon());
        let rep = log_likelihood(&model, catalog, grid, h);
        if rep.loglik.is_finite() {
            Some(rep.loglik)
        } else {
            None
        }
    };
    let Some(hess) = fd_hessian(&mut f, reported, HESSIAN_REL_STEP) else {
        return (vec![None; n], false);
    };
    let neg = nalgebra::DMatrix::from_fn(n, n, |i, j| -hess[i][j]);
    let Some(chol) = neg.clone().cholesky() else {
        return (vec![None; n], false);
    };
    let inv = chol.inverse();
    let ses = (0..n)
        .map(|i| {
            let v = inv[(i, i)];
            if v > 0.0 {
                Some(v.sqrt())
            } else {
                None
            }
        })
        .collect();
    (ses, true)
}

fn boundary_flags(template: &ModelTemplate, internal: &[f64]) -> Vec<String> {
    use crate::constraints::TransformBlock;
    use std::f64::consts::FRAC_PI_2;
    let tol = 1e-4;
    let mut flags = Vec::new();
    let mut i = 0;
    let near = |x: f64, bound: f64| (x - bound).abs() <= tol * bound.abs().max(1.0);
    for block in &template.layer.blocks {
        match block {
            TransformBlock::Scalar(t) => {
                if let Some((lo, hi)) = t.bounds() {
                    let x = internal[i];
                    if (lo.is_finite() && near(x, lo)) || (hi.is_finite() && near(x, hi)) {
                        flags.push(template.internal[i].name.clone());
                    }
                }
                i += 1;
            }
            TransformBlock::Branching => {
                let (theta, lb, lf, b) = (internal[i], internal[i + 1], internal[i + 2], internal[i + 3]);
                let checks = [
                    (theta, -FRAC_PI_2, FRAC_PI_2, i),
                    (lb, 0.0, 1.0, i + 1),
                    (lf, 0.0, lb, i + 2),
                    (b, 0.0, 1.0 - lb, i + 3),
                ];
                for (x, lo, hi, idx) in checks {
                    if near(x, lo) || near(x, hi) {
                        flags.push(template.internal[idx].name.clone());
                    }
                }
                i += 4;
            }
            TransformBlock::PhiPair { .. } => {
                i += 2;
            }
        }
    }
    flags
}

/// Fit a model template to a catalog by penalized maximum likelihood over
/// the unconstrained parametrization, with multi-start. Deterministic for a
/// fixed (seed, data, grid, options).
pub fn fit(
    template: &ModelTemplate,
    catalog: &EventCatalog,
    grid: &QuadratureGrid,
    options: &FitOptions,
) -> Result<FitResult> {
    template.validate()?;
    if catalog.is_empty() {
        return Err(HawkesError::Domain("cannot fit an empty catalog".into()));
    }
    let t_end = catalog.t_end();
    let horizon = options.horizon;

    let objective = |z: &[f64]| -> f64 {
        let internal = template.layer.from_unconstrained(z);
        let reported = match template.reported_from_internal(&internal) {
            Ok(r) => r,
            Err(HawkesError::Unstable { radius }) => return INFEASIBLE_PENALTY * (1.0 + radius),
            Err(_) => return INFEASIBLE_PENALTY,
        };
        let model = match template.build_model(&reported, t_end) {
            Ok(m) => m,
            Err(HawkesError::Unstable { radius }) => return INFEASIBLE_PENALTY * (1.0 + radius),
            Err(_) => return INFEASIBLE_PENALTY,
        };
        let h = horizon.unwrap_or_else(|| model.default_horizon());
        penalized_neg_log_likelihood(&model, catalog, grid, h)
    };

    // starting points: default initials, jitters of them, then warm starts
    let base_internal = template.default_initials(catalog);
    let z0 = template.layer.to_unconstrained(&base_internal)?;
    let mut starts = vec![z0.clone()];
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    for _ in 1..options.n_starts.max(1) {
        starts.push(z0.iter().map(|v| v + rng.gen_range(-0.5..0.5)).collect());
    }
    for warm in &options.extra_starts {
        if let Ok(z) = template.layer.to_unconstrained(warm) {
            starts.push(z);
        }
    }

    let mut best: Option<crate::optimize::OptimResult> = None;
    let mut n_evals = 0;
    for s in &starts {
        let r = minimize(objective, s, options.tol, options.max_rounds);
        n_evals += r.n_evals;
        if r.value.is_finite() && best.as_ref().map_or(true, |b| r.value < b.value) {
            best = Some(r);
        }
    }
    let best = best.ok_or_else(|| {
        HawkesError::Optimizer(format!("all {} starts failed to produce a finite objective", starts.len()))
    })?;
    if best.value >= INFEASIBLE_PENALTY {
        return Err(HawkesError::Optimizer(
            "no start reached a feasible parameter point".into(),
        ));
    }

    let internal = template.layer.from_unconstrained(&best.x);
    let reported = template.reported_from_internal(&internal)?;
    let model = template.build_model(&reported, t_end)?;
    let h = horizon.unwrap_or_else(|| model.default_horizon());
    let report = log_likelihood(&model, catalog, grid, h);
    let loglik = report.loglik;
    if !loglik.is_finite() {
        return Err(HawkesError::Optimizer(
            "optimum has nonpositive intensity at an event".into(),
        ));
    }

    let (ses, hessian_pd) = if options.compute_ses {
        asymptotic_ses(template, &reported, catalog, grid, horizon)
    } else {
        (vec![None; reported.len()], false)
    };

    let k = template.k();
    let n = catalog.len();
    let (aic, bic, hq) = information_criteria(loglik, k, n)?;
    let params = template
        .reported
        .iter()
        .zip(&reported)
        .zip(&ses)
        .map(|((def, &value), &se)| ParamEstimate {
            name: def.name.clone(),
            value,
            se,
            counted: def.counted,
        })
        .collect();

    Ok(FitResult {
        template_name: template.name.clone(),
        params,
        loglik,
        k,
        n,
        aic,
        bic,
        hq,
        converged: best.converged && (!options.compute_ses || hessian_pd),
        hessian_pd,
        boundary_flags: boundary_flags(template, &internal),
        n_evals,
        n_starts: starts.len(),
        seed: options.seed,
        catalog_hash: catalog.content_hash(),
        internal,
    })
}

/// A fit reduced to what model comparison needs; `catalog_hash` is `None`
/// for externally supplied (loglik, k, n) triples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitSummary {
    pub name: String,
    pub loglik: f64,
    pub k: usize,
    pub n: usize,
    pub catalog_hash: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub name: String,
    pub loglik: f64,
    pub k: usize,
    pub n: usize,
    pub aic: f64,
    pub bic: f64,
    pub hq: f64,
    pub best_aic: bool,
    pub best_bic: bool,
    pub best_hq: bool,
}

/// Rank fits on the same data by AIC (ascending), flagging the best value
/// of each criterion. All summaries must share n, and those carrying a
/// catalog hash must agree on it.
pub fn compare_models(summaries: &[FitSummary]) -> Result<Vec<ComparisonRow>> {
    if summaries.is_empty() {
        return Err(HawkesError::Domain("nothing to compare".into()));
    }
    let n0 = summaries[0].n;
    let mut hash: Option<u64> = None;
    for s in summaries {
        if s.n != n0 {
            return Err(HawkesError::Domain(format!(
                "mixed sample sizes in comparison: {} vs {}",
                s.n, n0
            )));
        }
        if let Some(h) = s.catalog_hash {
            match hash {
                None => hash = Some(h),
                Some(h0) if h0 != h => {
                    return Err(HawkesError::Domain("fits come from different catalogs".into()))
                }
                _ => {}
            }
        }
    }
    let mut rows: Vec<ComparisonRow> = summaries
        .iter()
        .map(|s| {
            let (aic, bic, hq) = information_criteria(s.loglik, s.k, s.n)?;
            Ok(ComparisonRow {
                name: s.name.clone(),
                loglik: s.loglik,
                k: s.k,
                n: s.n,
                aic,
                bic,
                hq,
                best_aic: false,
                best_bic: false,
                best_hq: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.aic.partial_cmp(&b.aic).unwrap());
    let min_by = |rows: &[ComparisonRow], f: fn(&ComparisonRow) -> f64| {
        rows.iter().map(f).fold(f64::INFINITY, f64::min)
    };
    let (ma, mb, mh) = (min_by(&rows, |r| r.aic), min_by(&rows, |r| r.bic), min_by(&rows, |r| r.hq));
    for r in &mut rows {
        r.best_aic = r.aic == ma;
        r.best_bic = r.bic == mb;
        r.best_hq = r.hq == mh;
    }
    Ok(rows)
}

//! Exploratory diagnostics: pairwise lag histograms, daily count series, and
//! componentwise cross-lag summaries.

use serde::{Deserialize, Serialize};

use crate::catalog::EventCatalog;
use crate::error::{HawkesError, Result};

/// Two-dimensional histogram of (temporal lag, spatial lag magnitude) over
/// ordered event pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairLagHistogram {
    pub mark_from: usize,
    pub mark_to: usize,
    pub max_dt: f64,
    pub max_ds: f64,
    /// (temporal bins, spatial bins).
    pub bins: (usize, usize),
    /// Raw pair counts, row-major `[dt_bin * bins.1 + ds_bin]`.
    pub counts: Vec<u64>,
    /// Counts divided by the total number of in-range pairs (zeros when the
    /// histogram is empty).
    pub normalized: Vec<f64>,
    pub total_pairs: u64,
}

impl PairLagHistogram {
    pub fn count(&self, dt_bin: usize, ds_bin: usize) -> u64 {
        self.counts[dt_bin * self.bins.1 + ds_bin]
    }

    /// Spatial marginal: total count per spatial-lag bin.
    pub fn spatial_marginal(&self) -> Vec<u64> {
        let mut out = vec![0u64; self.bins.1];
        for it in 0..self.bins.0 {
            for is in 0..self.bins.1 {
                out[is] += self.counts[it * self.bins.1 + is];
            }
        }
        out
    }
}

/// Histogram of lags over ordered pairs (later event of `mark_to`, earlier
/// event of `mark_from`). Bins are left-closed/right-open and 0-based, so a
/// lag exactly at the maximum falls outside. The marginal case
/// `mark_from == mark_to` excludes self-pairs by construction (pairs need
/// strictly increasing times).
pub fn pair_lag_histogram(
    catalog: &EventCatalog,
    mark_from: usize,
    mark_to: usize,
    max_dt: f64,
    max_ds: f64,
    bins: (usize, usize),
) -> Result<PairLagHistogram> {
    if !(max_dt > 0.0 && max_ds > 0.0) {
        return Err(HawkesError::Domain("histogram bounds must be positive".into()));
    }
    if bins.0 < 1 || bins.1 < 1 {
        return Err(HawkesError::Domain("need at least one bin per axis".into()));
    }
    let wt = max_dt / bins.0 as f64;
    let ws = max_ds / bins.1 as f64;
    let mut counts = vec![0u64; bins.0 * bins.1];
    let events = catalog.events();
    let mut total = 0u64;
    for (j, later) in events.iter().enumerate() {
        if later.mark != mark_to {
            continue;
        }
        // earlier events only; ties in time are not ordered pairs
        for earlier in events[..j].iter() {
            if earlier.mark != mark_from || earlier.t >= later.t {
                continue;
            }
            let dt = later.t - earlier.t;
            if dt >= max_dt {
                continue;
            }
            let ds = ((later.x - earlier.x).powi(2) + (later.y - earlier.y).powi(2)).sqrt();
            if ds >= max_ds {
                continue;
            }
            let it = (dt / wt) as usize;
            let is = (ds / ws) as usize;
            counts[it.min(bins.0 - 1) * bins.1 + is.min(bins.1 - 1)] += 1;
            total += 1;
        }
    }
    let normalized = if total > 0 {
        counts.iter().map(|&c| c as f64 / total as f64).collect()
    } else {
        vec![0.0; counts.len()]
    };
    Ok(PairLagHistogram {
        mark_from,
        mark_to,
        max_dt,
        max_ds,
        bins,
        counts,
        normalized,
        total_pairs: total,
    })
}

/// Events of one mark per day bucket `floor(t)`, over `ceil(T)` days.
pub fn daily_counts(catalog: &EventCatalog, mark: usize) -> Vec<u64> {
    let n_days = (catalog.t_end().ceil() as usize).max(1);
    let mut out = vec![0u64; n_days];
    for e in catalog.events() {
        if e.mark == mark {
            let d = (e.t.floor() as usize).min(n_days - 1);
            out[d] += 1;
        }
    }
    out
}

/// Componentwise statistics of lags over ordered pairs: a later event of
/// `mark_a` minus an earlier event of `mark_b`, in km (projected) and
/// degrees (raw coordinates).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LagSummary {
    pub mark_a: usize,
    pub mark_b: usize,
    pub n_pairs: usize,
    pub median_dx_km: f64,
    pub median_dy_km: f64,
    pub mean_dx_km: f64,
    pub mean_dy_km: f64,
    pub median_dlon_deg: f64,
    pub median_dlat_deg: f64,
    pub mean_dlon_deg: f64,
    pub mean_dlat_deg: f64,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn lag_summary(catalog: &EventCatalog, mark_a: usize, mark_b: usize) -> Result<LagSummary> {
    let events = catalog.events();
    let mut dx = Vec::new();
    let mut dy = Vec::new();
    let mut dlon = Vec::new();
    let mut dlat = Vec::new();
    for (j, later) in events.iter().enumerate() {
        if later.mark != mark_a {
            continue;
        }
        for earlier in events[..j].iter() {
            if earlier.mark != mark_b || earlier.t >= later.t {
                continue;
            }
            dx.push(later.x - earlier.x);
            dy.push(later.y - earlier.y);
            dlon.push(later.lon - earlier.lon);
            dlat.push(later.lat - earlier.lat);
        }
    }
    if dx.is_empty() {
        return Err(HawkesError::Domain(format!(
            "no ordered pairs of marks ({mark_a} after {mark_b})"
        )));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(LagSummary {
        mark_a,
        mark_b,
        n_pairs: dx.len(),
        mean_dx_km: mean(&dx),
        mean_dy_km: mean(&dy),
        mean_dlon_deg: mean(&dlon),
        mean_dlat_deg: mean(&dlat),
        median_dx_km: median(&mut dx),
        median_dy_km: median(&mut dy),
        median_dlon_deg: median(&mut dlon),
        median_dlat_deg: median(&mut dlat),
    })
}

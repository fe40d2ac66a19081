//! Gridded covariate rasters (one layer per calendar year) and their
//! standardization.

use std::sync::Arc;

use chrono::{Datelike, Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{HawkesError, Result};
use crate::geo::Projection;

/// Record of the scaling applied to a raw raster, stored so the same scaling
/// can be reused on holdout data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Standardization {
    /// `log(1 + v) / max_log`; values in [0, 1] on the data that defined `max_log`.
    LogMax { max_log: f64 },
    ZScore { mean: f64, sd: f64 },
    /// Plain division by the maximum raw value.
    MaxScale { max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StandardizeMode {
    LogMax,
    ZScore,
    UnitTime,
}

/// A regular lon/lat raster with one layer per year. Lookup is
/// nearest-cell (no interpolation) and deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateField {
    lons: Vec<f64>,
    lats: Vec<f64>,
    years: Vec<i32>,
    /// `values[year_idx][lat_idx * lons.len() + lon_idx]`
    values: Vec<Vec<f64>>,
    pub standardization: Option<Standardization>,
}

impl CovariateField {
    pub fn new(
        lons: Vec<f64>,
        lats: Vec<f64>,
        years: Vec<i32>,
        values: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if lons.is_empty() || lats.is_empty() || years.is_empty() {
            return Err(HawkesError::Domain("empty covariate grid".into()));
        }
        for w in lons.windows(2) {
            if w[1] <= w[0] {
                return Err(HawkesError::Domain("lon axis not strictly increasing".into()));
            }
        }
        for w in lats.windows(2) {
            if w[1] <= w[0] {
                return Err(HawkesError::Domain("lat axis not strictly increasing".into()));
            }
        }
        for w in years.windows(2) {
            if w[1] <= w[0] {
                return Err(HawkesError::Domain("year axis not strictly increasing".into()));
            }
        }
        if values.len() != years.len() {
            return Err(HawkesError::Domain("one raster layer per year required".into()));
        }
        let cells = lons.len() * lats.len();
        if values.iter().any(|layer| layer.len() != cells) {
            return Err(HawkesError::Domain("raster layer size mismatch".into()));
        }
        Ok(Self {
            lons,
            lats,
            years,
            values,
            standardization: None,
        })
    }

    /// A spatially constant single-layer field; handy for tests and for
    /// collapsing the nonstationary kernels to their stationary forms.
    pub fn constant(value: f64) -> Self {
        Self {
            lons: vec![0.0],
            lats: vec![0.0],
            years: vec![2000],
            values: vec![vec![value]],
            standardization: None,
        }
    }

    fn nearest(axis: &[f64], v: f64) -> usize {
        match axis.binary_search_by(|a| a.partial_cmp(&v).unwrap()) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) if i == axis.len() => axis.len() - 1,
            Err(i) => {
                if (v - axis[i - 1]) <= (axis[i] - v) {
                    i - 1
                } else {
                    i
                }
            }
        }
    }

    /// Nearest-cell lookup; the year is clamped to the covered range.
    pub fn value(&self, lon: f64, lat: f64, year: i32) -> f64 {
        let ix = Self::nearest(&self.lons, lon);
        let iy = Self::nearest(&self.lats, lat);
        let iz = match self.years.binary_search(&year) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) if i == self.years.len() => self.years.len() - 1,
            Err(i) => i - 1, // annual layers are held constant within the year
        };
        self.values[iz][iy * self.lons.len() + ix]
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for layer in &self.values {
            for &v in layer {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (lo, hi)
    }
}

/// Standardize a raster, storing the record for reuse on holdout data
/// (values standardized with a stored record may exceed 1; that is allowed).
pub fn standardize_covariate(field: &CovariateField, mode: StandardizeMode) -> Result<CovariateField> {
    let (lo, hi) = field.min_max();
    let (record, apply): (Standardization, Box<dyn Fn(f64) -> f64>) = match mode {
        StandardizeMode::LogMax => {
            if lo < 0.0 {
                return Err(HawkesError::Domain(
                    "log_max standardization needs nonnegative raw values".into(),
                ));
            }
            let max_log = (1.0 + hi).ln();
            if max_log <= 0.0 {
                return Err(HawkesError::Domain("all-zero covariate field".into()));
            }
            (
                Standardization::LogMax { max_log },
                Box::new(move |v| (1.0 + v).ln() / max_log),
            )
        }
        StandardizeMode::ZScore => {
            let all: Vec<f64> = field.values.iter().flatten().copied().collect();
            let mean = all.iter().sum::<f64>() / all.len() as f64;
            let sd = (all.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
                / all.len().max(2) as f64)
                .sqrt();
            if sd <= 0.0 {
                return Err(HawkesError::Domain("constant field cannot be z-scored".into()));
            }
            (
                Standardization::ZScore { mean, sd },
                Box::new(move |v| (v - mean) / sd),
            )
        }
        StandardizeMode::UnitTime => {
            if hi <= 0.0 {
                return Err(HawkesError::Domain("all-zero covariate field".into()));
            }
            (
                Standardization::MaxScale { max: hi },
                Box::new(move |v| v / hi),
            )
        }
    };
    Ok(apply_standardization_fn(field, record, &apply))
}

/// Apply a previously stored standardization record to a (possibly holdout) raster.
pub fn apply_standardization(field: &CovariateField, record: Standardization) -> CovariateField {
    let f: Box<dyn Fn(f64) -> f64> = match record {
        Standardization::LogMax { max_log } => Box::new(move |v| (1.0 + v).ln() / max_log),
        Standardization::ZScore { mean, sd } => Box::new(move |v| (v - mean) / sd),
        Standardization::MaxScale { max } => Box::new(move |v| v / max),
    };
    apply_standardization_fn(field, record, &f)
}

fn apply_standardization_fn(
    field: &CovariateField,
    record: Standardization,
    f: &dyn Fn(f64) -> f64,
) -> CovariateField {
    let values = field
        .values
        .iter()
        .map(|layer| layer.iter().map(|&v| f(v)).collect())
        .collect();
    CovariateField {
        lons: field.lons.clone(),
        lats: field.lats.clone(),
        years: field.years.clone(),
        values,
        standardization: Some(record),
    }
}

/// A covariate field bound to a projection and a time epoch, so it can be
/// queried at projected km coordinates and catalog time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateLookup {
    pub field: Arc<CovariateField>,
    pub projection: Projection,
    /// Calendar epoch of t = 0; `None` treats the whole window as one year.
    pub epoch: Option<NaiveDate>,
}

impl CovariateLookup {
    pub fn new(field: Arc<CovariateField>, projection: Projection, epoch: Option<NaiveDate>) -> Self {
        Self {
            field,
            projection,
            epoch,
        }
    }

    pub fn value_km(&self, x: f64, y: f64, t: f64) -> f64 {
        let (lon, lat) = self.projection.invert(x, y);
        let year = match self.epoch {
            Some(epoch) => epoch
                .checked_add_days(Days::new(t.max(0.0) as u64))
                .map(|d| d.year())
                .unwrap_or_else(|| epoch.year()),
            None => self.field.years[0],
        };
        self.field.value(lon, lat, year)
    }

    /// Observed range of standardized values, used by the nonstationary-phi
    /// positivity guard.
    pub fn observed_range(&self) -> (f64, f64) {
        self.field.min_max()
    }
}

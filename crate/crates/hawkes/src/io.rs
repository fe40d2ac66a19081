//! File formats: event CSV, covariate raster CSV, and window polygon files.
//!
//! Event CSV schema: `group,date,lon,lat[,specificity]` where `date` is
//! either a calendar date (YYYY-MM-DD) or a plain real number of days, so
//! simulated catalogs round-trip through the same format.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;

use crate::catalog::{jitter_duplicates, EventCatalog, EventRecord};
use crate::covariate::CovariateField;
use crate::error::{HawkesError, Result};
use crate::geo::{Projection, SpatialWindow};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DateOrDay {
    Date(NaiveDate),
    Day(f64),
}

#[derive(Debug, Clone)]
pub struct RawEvent {
    pub group: String,
    pub date: DateOrDay,
    pub lon: f64,
    pub lat: f64,
    pub specificity: Option<u8>,
}

/// A row that failed to parse: (1-based data row number, message).
pub type RowError = (usize, String);

fn parse_date(field: &str) -> Result<DateOrDay> {
    let s = field.trim();
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(DateOrDay::Date(d));
    }
    if let Ok(v) = s.parse::<f64>() {
        if v.is_finite() && v >= 0.0 {
            return Ok(DateOrDay::Day(v));
        }
    }
    Err(HawkesError::Parse(format!("bad date '{s}' (want YYYY-MM-DD or nonnegative days)")))
}

fn parse_row(rec: &csv::StringRecord) -> Result<RawEvent> {
    if rec.len() < 4 {
        return Err(HawkesError::Parse(format!("expected >= 4 fields, got {}", rec.len())));
    }
    let group = rec[0].trim().to_string();
    if group.is_empty() {
        return Err(HawkesError::Parse("empty group".into()));
    }
    let date = parse_date(&rec[1])?;
    let lon: f64 = rec[2]
        .trim()
        .parse()
        .map_err(|_| HawkesError::Parse(format!("bad lon '{}'", &rec[2])))?;
    let lat: f64 = rec[3]
        .trim()
        .parse()
        .map_err(|_| HawkesError::Parse(format!("bad lat '{}'", &rec[3])))?;
    if !(lon.is_finite() && lat.is_finite() && lat.abs() <= 90.0) {
        return Err(HawkesError::Parse(format!("coordinates out of range ({lon}, {lat})")));
    }
    let specificity = if rec.len() > 4 && !rec[4].trim().is_empty() {
        let s: u8 = rec[4]
            .trim()
            .parse()
            .map_err(|_| HawkesError::Parse(format!("bad specificity '{}'", &rec[4])))?;
        if !(1..=5).contains(&s) {
            return Err(HawkesError::Parse(format!("specificity {s} outside 1..=5")));
        }
        Some(s)
    } else {
        None
    };
    Ok(RawEvent {
        group,
        date,
        lon,
        lat,
        specificity,
    })
}

/// Read raw event rows. A header line is detected by a non-parsing first
/// row. Bad rows are collected, not fatal; the caller decides whether any
/// row errors abort the run.
pub fn read_events_csv(path: &Path) -> Result<(Vec<RawEvent>, Vec<RowError>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut events = Vec::new();
    let mut errors = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        match parse_row(&rec) {
            Ok(ev) => events.push(ev),
            Err(e) => {
                // tolerate a single header line
                if i == 0 {
                    continue;
                }
                errors.push((i + 1, e.to_string()));
            }
        }
    }
    Ok((events, errors))
}

#[derive(Debug, Clone, Default)]
pub struct IngestOptions {
    /// Keep only events with specificity <= this (events lacking a
    /// specificity value always pass).
    pub specificity_max: Option<u8>,
    /// Window polygon ring in (lon, lat) degrees; bounding box of the
    /// events (inflated 5%) when absent.
    pub polygon_deg: Option<Vec<(f64, f64)>>,
    /// Jitter exact duplicate coordinates with this standard deviation in
    /// degrees.
    pub jitter_sd: Option<f64>,
    pub jitter_seed: u64,
    /// Horizon override in days; inferred from the data when absent.
    pub t_end: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Ingest {
    pub catalog: EventCatalog,
    /// Group label of each mark index.
    pub group_names: Vec<String>,
    pub n_filtered: usize,
}

/// Assemble a validated catalog from raw rows: map group labels to mark
/// indices (sorted order), convert dates to days since the earliest date,
/// project coordinates about the mean location, and build the window.
pub fn assemble_catalog(raw: &[RawEvent], options: &IngestOptions) -> Result<Ingest> {
    let mut rows: Vec<&RawEvent> = raw.iter().collect();
    let before = rows.len();
    if let Some(smax) = options.specificity_max {
        rows.retain(|r| r.specificity.map_or(true, |s| s <= smax));
    }
    let n_filtered = before - rows.len();
    if rows.is_empty() {
        return Err(HawkesError::Domain("no events after filtering".into()));
    }

    // group labels -> mark indices, lexicographic for determinism
    let mut marks: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &rows {
        let next = marks.len();
        marks.entry(r.group.as_str()).or_insert(next);
    }
    let mut marks_sorted: Vec<(&str, usize)> = marks.keys().map(|&k| (k, 0)).collect();
    marks_sorted.sort_by_key(|&(k, _)| k);
    let mark_of: BTreeMap<&str, usize> = marks_sorted
        .iter()
        .enumerate()
        .map(|(i, &(k, _))| (k, i))
        .collect();
    let group_names: Vec<String> = marks_sorted.iter().map(|&(k, _)| k.to_string()).collect();

    // time origin: earliest calendar date (calendar rows), day 0 (numeric)
    let epoch = rows
        .iter()
        .filter_map(|r| match r.date {
            DateOrDay::Date(d) => Some(d),
            DateOrDay::Day(_) => None,
        })
        .min();
    let t_of = |d: &DateOrDay| -> f64 {
        match d {
            DateOrDay::Date(date) => {
                (*date - epoch.expect("calendar date without epoch")).num_days() as f64
            }
            DateOrDay::Day(v) => *v,
        }
    };

    // projection about the mean location
    let n = rows.len() as f64;
    let lon_ref = rows.iter().map(|r| r.lon).sum::<f64>() / n;
    let lat_ref = rows.iter().map(|r| r.lat).sum::<f64>() / n;
    let projection = Projection::new(lon_ref, lat_ref)?;

    let mut events: Vec<EventRecord> = Vec::with_capacity(rows.len());
    for r in &rows {
        let (x, y) = projection.project(r.lon, r.lat)?;
        events.push(EventRecord {
            mark: mark_of[r.group.as_str()],
            lon: r.lon,
            lat: r.lat,
            t: t_of(&r.date),
            specificity: r.specificity,
            x,
            y,
        });
    }
    events.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap());

    let t_max = events.last().map(|e| e.t).unwrap_or(0.0);
    let t_end = options.t_end.unwrap_or(t_max + 1.0);
    if t_end <= t_max {
        return Err(HawkesError::Domain(format!(
            "t_end {t_end} does not cover the last event at t = {t_max}"
        )));
    }

    let window = match &options.polygon_deg {
        Some(ring) => {
            let mut ring_km = Vec::with_capacity(ring.len());
            for &(lo, la) in ring {
                ring_km.push(projection.project(lo, la)?);
            }
            SpatialWindow::polygon(ring_km)?
        }
        None => SpatialWindow::bbox_of_points(
            &events.iter().map(|e| (e.x, e.y)).collect::<Vec<_>>(),
        )?,
    };

    let n_marks = group_names.len();
    let mut catalog = EventCatalog::new(events, n_marks, t_end, window, projection)?;
    catalog.epoch = epoch;
    if let Some(sd) = options.jitter_sd {
        catalog = jitter_duplicates(&catalog, sd, options.jitter_seed)?;
    }
    Ok(Ingest {
        catalog,
        group_names,
        n_filtered,
    })
}

/// Write a catalog back to the event CSV schema. Calendar dates are used
/// when the catalog has an epoch and the time is a whole day; otherwise the
/// raw day number is written.
pub fn write_events_csv(catalog: &EventCatalog, group_names: &[String], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["group", "date", "lon", "lat", "specificity"])?;
    for e in catalog.events() {
        let group = group_names
            .get(e.mark)
            .cloned()
            .unwrap_or_else(|| e.mark.to_string());
        let date = match catalog.epoch {
            Some(epoch) if e.t.fract() == 0.0 => {
                (epoch + chrono::Duration::days(e.t as i64)).format("%Y-%m-%d").to_string()
            }
            _ => format!("{:.10}", e.t),
        };
        let spec = e.specificity.map(|s| s.to_string()).unwrap_or_default();
        w.write_record([
            group,
            date,
            format!("{:.8}", e.lon),
            format!("{:.8}", e.lat),
            spec,
        ])?;
    }
    w.flush().map_err(HawkesError::Io)?;
    Ok(())
}

/// Read a covariate raster from CSV rows `lon,lat,year,value`. Every
/// (lon, lat, year) combination of the observed axis values must be present.
pub fn read_covariate_csv(path: &Path) -> Result<CovariateField> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)?;
    let mut cells: Vec<(f64, f64, i32, f64)> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.len() < 4 {
            return Err(HawkesError::Parse(format!("covariate row {} has {} fields", i + 1, rec.len())));
        }
        let parse = |j: usize| -> Result<f64> {
            rec[j]
                .trim()
                .parse()
                .map_err(|_| HawkesError::Parse(format!("covariate row {}: bad number '{}'", i + 1, &rec[j])))
        };
        match (parse(0), parse(1), parse(2), parse(3)) {
            (Ok(lon), Ok(lat), Ok(year), Ok(value)) => {
                cells.push((lon, lat, year as i32, value));
            }
            _ if i == 0 => continue, // header line
            (a, b, c, d) => {
                a?;
                b?;
                c?;
                d?;
            }
        }
    }
    if cells.is_empty() {
        return Err(HawkesError::Parse("empty covariate file".into()));
    }
    let mut lons: Vec<f64> = cells.iter().map(|c| c.0).collect();
    let mut lats: Vec<f64> = cells.iter().map(|c| c.1).collect();
    let mut years: Vec<i32> = cells.iter().map(|c| c.2).collect();
    lons.sort_by(|a, b| a.partial_cmp(b).unwrap());
    lons.dedup();
    lats.sort_by(|a, b| a.partial_cmp(b).unwrap());
    lats.dedup();
    years.sort_unstable();
    years.dedup();
    let (nlon, nlat, nyear) = (lons.len(), lats.len(), years.len());
    if cells.len() != nlon * nlat * nyear {
        return Err(HawkesError::Covariate(format!(
            "incomplete raster: {} cells for a {}x{}x{} grid",
            cells.len(),
            nlon,
            nlat,
            nyear
        )));
    }
    let idx = |axis: &[f64], v: f64| axis.partition_point(|&a| a < v);
    let mut values = vec![vec![f64::NAN; nlat * nlon]; nyear];
    for (lon, lat, year, value) in cells {
        let iy = years.binary_search(&year).unwrap();
        let ilat = idx(&lats, lat);
        let ilon = idx(&lons, lon);
        values[iy][ilat * nlon + ilon] = value;
    }
    if values.iter().flatten().any(|v| v.is_nan()) {
        return Err(HawkesError::Covariate("duplicate or missing raster cells".into()));
    }
    CovariateField::new(lons, lats, years, values)
}

/// Read a polygon ring from a JSON file: an array of [lon, lat] pairs.
pub fn read_polygon_json(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path)?;
    let ring: Vec<(f64, f64)> = serde_json::from_str::<Vec<[f64; 2]>>(&text)
        .map_err(|e| HawkesError::Parse(format!("polygon file: {e}")))?
        .into_iter()
        .map(|p| (p[0], p[1]))
        .collect();
    if ring.len() < 3 {
        return Err(HawkesError::Parse("polygon needs at least 3 vertices".into()));
    }
    Ok(ring)
}

//! Event records and time-ordered multivariate point-pattern catalogs.

use chrono::NaiveDate;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{HawkesError, Result};
use crate::geo::{Projection, SpatialWindow};

/// A single marked event. `t` is in days since the catalog epoch, `(x, y)` are
/// projected planar coordinates in km.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub mark: usize,
    pub lon: f64,
    pub lat: f64,
    pub t: f64,
    pub specificity: Option<u8>,
    pub x: f64,
    pub y: f64,
}

/// A time-ordered multivariate marked point pattern on `window x [0, T)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventCatalog {
    events: Vec<EventRecord>,
    n_marks: usize,
    t_end: f64,
    window: SpatialWindow,
    projection: Projection,
    pub epoch: Option<NaiveDate>,
}

impl EventCatalog {
    /// Validates sort order, mark range, time range, and window containment.
    pub fn new(
        events: Vec<EventRecord>,
        n_marks: usize,
        t_end: f64,
        window: SpatialWindow,
        projection: Projection,
    ) -> Result<Self> {
        if t_end <= 0.0 {
            return Err(HawkesError::Domain("catalog needs T > 0".into()));
        }
        for (i, e) in events.iter().enumerate() {
            if i > 0 && e.t < events[i - 1].t {
                return Err(HawkesError::UnsortedCatalog(i));
            }
            if e.mark >= n_marks {
                return Err(HawkesError::MarkOutOfRange {
                    index: i,
                    mark: e.mark,
                    n_marks,
                });
            }
            if !(e.t >= 0.0 && e.t < t_end) {
                return Err(HawkesError::Domain(format!(
                    "event {i} has t={} outside [0, {t_end})",
                    e.t
                )));
            }
            if let Some(s) = e.specificity {
                if !(1..=5).contains(&s) {
                    return Err(HawkesError::Domain(format!(
                        "event {i} has specificity {s} outside 1..=5"
                    )));
                }
            }
            if !window.contains(e.x, e.y) {
                return Err(HawkesError::EventOutsideWindow { index: i });
            }
        }
        Ok(Self {
            events,
            n_marks,
            t_end,
            window,
            projection,
            epoch: None,
        })
    }

    pub fn events(&self) -> &[EventRecord] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn n_marks(&self) -> usize {
        self.n_marks
    }

    /// Window length T in days.
    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn window(&self) -> &SpatialWindow {
        &self.window
    }

    pub fn projection(&self) -> Projection {
        self.projection
    }

    pub fn count_by_mark(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_marks];
        for e in &self.events {
            counts[e.mark] += 1;
        }
        counts
    }

    /// A cheap content hash used to detect mixed-catalog model comparisons.
    pub fn content_hash(&self) -> u64 {
        // FNV-1a over the event bytes; stable across runs.
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |v: f64| {
            for b in v.to_le_bits_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        for e in &self.events {
            eat(e.t);
            eat(e.x);
            eat(e.y);
            eat(e.mark as f64);
        }
        eat(self.t_end);
        h
    }
}

trait ToLeBitsBytes {
    fn to_le_bits_bytes(self) -> [u8; 8];
}
impl ToLeBitsBytes for f64 {
    fn to_le_bits_bytes(self) -> [u8; 8] {
        self.to_bits().to_le_bytes()
    }
}

/// Perturb events that share identical `(lon, lat, t)` with independent
/// Normal(0, sd^2) noise on lon and lat, then re-project. Non-duplicated
/// events are untouched; deterministic given `seed`.
pub fn jitter_duplicates(catalog: &EventCatalog, sd: f64, seed: u64) -> Result<EventCatalog> {
    if sd < 0.0 {
        return Err(HawkesError::Domain("jitter sd must be >= 0".into()));
    }
    let mut events = catalog.events.clone();
    if sd > 0.0 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, sd).unwrap();
        // Count exact (lon, lat, t) collisions.
        let mut dup = vec![false; events.len()];
        for i in 0..events.len() {
            for j in (i + 1)..events.len() {
                if events[j].t > events[i].t {
                    break;
                }
                if events[i].lon == events[j].lon
                    && events[i].lat == events[j].lat
                    && events[i].t == events[j].t
                {
                    dup[i] = true;
                    dup[j] = true;
                }
            }
        }
        let proj = catalog.projection;
        for (i, e) in events.iter_mut().enumerate() {
            if dup[i] {
                e.lon += normal.sample(&mut rng);
                e.lat += normal.sample(&mut rng);
                let (x, y) = proj.project(e.lon, e.lat)?;
                e.x = x;
                e.y = y;
            }
        }
    }
    EventCatalog::new(
        events,
        catalog.n_marks,
        catalog.t_end,
        catalog.window.clone(),
        catalog.projection,
    )
}

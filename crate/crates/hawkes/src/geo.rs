//! Planar geometry: the lon/lat -> km projection and spatial windows.

use serde::{Deserialize, Serialize};

use crate::error::{HawkesError, Result};

/// Kilometres per degree of longitude at the equator.
pub const KM_PER_DEG_LON: f64 = 111.32;
/// Kilometres per degree of latitude.
pub const KM_PER_DEG_LAT: f64 = 110.57;

/// Equirectangular projection about a reference point (the window centroid).
///
/// `x = 111.32 * cos(lat_ref) * (lon - lon_ref)`, `y = 110.57 * (lat - lat_ref)`,
/// both in km. Exact inverse exists away from the poles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub lon_ref: f64,
    pub lat_ref: f64,
}

impl Projection {
    pub fn new(lon_ref: f64, lat_ref: f64) -> Result<Self> {
        if !(lat_ref.abs() < 89.0) {
            return Err(HawkesError::LatitudeOutOfRange(lat_ref));
        }
        Ok(Self { lon_ref, lat_ref })
    }

    pub fn project(&self, lon: f64, lat: f64) -> Result<(f64, f64)> {
        if !(lat.abs() < 89.0) {
            return Err(HawkesError::LatitudeOutOfRange(lat));
        }
        let x = KM_PER_DEG_LON * self.lat_ref.to_radians().cos() * (lon - self.lon_ref);
        let y = KM_PER_DEG_LAT * (lat - self.lat_ref);
        Ok((x, y))
    }

    pub fn invert(&self, x: f64, y: f64) -> (f64, f64) {
        let lon = self.lon_ref + x / (KM_PER_DEG_LON * self.lat_ref.to_radians().cos());
        let lat = self.lat_ref + y / KM_PER_DEG_LAT;
        (lon, lat)
    }
}

/// Observation window in projected km coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SpatialWindow {
    Rect {
        x0: f64,
        x1: f64,
        y0: f64,
        y1: f64,
    },
    /// Simple polygon given as a closed ring (first point need not be repeated).
    Polygon { ring: Vec<(f64, f64)> },
}

impl SpatialWindow {
    pub fn rect(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        if !(x1 > x0 && y1 > y0) {
            return Err(HawkesError::Domain(format!(
                "degenerate rectangle [{x0},{x1}]x[{y0},{y1}]"
            )));
        }
        Ok(SpatialWindow::Rect { x0, x1, y0, y1 })
    }

    pub fn polygon(ring: Vec<(f64, f64)>) -> Result<Self> {
        if ring.len() < 3 {
            return Err(HawkesError::Domain("polygon ring needs >= 3 vertices".into()));
        }
        let w = SpatialWindow::Polygon { ring };
        if w.area() <= 0.0 {
            return Err(HawkesError::Domain("polygon has nonpositive area".into()));
        }
        Ok(w)
    }

    /// Axis-aligned bounding box of the events, inflated by 5% on each side.
    pub fn bbox_of_points(points: &[(f64, f64)]) -> Result<Self> {
        if points.is_empty() {
            return Err(HawkesError::Domain("no points for bounding-box window".into()));
        }
        let mut x0 = f64::INFINITY;
        let mut x1 = f64::NEG_INFINITY;
        let mut y0 = f64::INFINITY;
        let mut y1 = f64::NEG_INFINITY;
        for &(x, y) in points {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        let dx = (x1 - x0).max(1e-6) * 0.05;
        let dy = (y1 - y0).max(1e-6) * 0.05;
        SpatialWindow::rect(x0 - dx, x1 + dx, y0 - dy, y1 + dy)
    }

    pub fn area(&self) -> f64 {
        match self {
            SpatialWindow::Rect { x0, x1, y0, y1 } => (x1 - x0) * (y1 - y0),
            SpatialWindow::Polygon { ring } => {
                // shoelace formula
                let n = ring.len();
                let mut s = 0.0;
                for i in 0..n {
                    let (xa, ya) = ring[i];
                    let (xb, yb) = ring[(i + 1) % n];
                    s += xa * yb - xb * ya;
                }
                0.5 * s.abs()
            }
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        match self {
            SpatialWindow::Rect { x0, x1, y0, y1 } => {
                x >= *x0 && x <= *x1 && y >= *y0 && y <= *y1
            }
            SpatialWindow::Polygon { ring } => {
                // even-odd rule
                let n = ring.len();
                let mut inside = false;
                let mut j = n - 1;
                for i in 0..n {
                    let (xi, yi) = ring[i];
                    let (xj, yj) = ring[j];
                    if (yi > y) != (yj > y) {
                        let x_cross = xj + (y - yj) / (yi - yj) * (xi - xj);
                        if x < x_cross {
                            inside = !inside;
                        }
                    }
                    j = i;
                }
                inside
            }
        }
    }

    pub fn bbox(&self) -> (f64, f64, f64, f64) {
        match self {
            SpatialWindow::Rect { x0, x1, y0, y1 } => (*x0, *x1, *y0, *y1),
            SpatialWindow::Polygon { ring } => {
                let mut x0 = f64::INFINITY;
                let mut x1 = f64::NEG_INFINITY;
                let mut y0 = f64::INFINITY;
                let mut y1 = f64::NEG_INFINITY;
                for &(x, y) in ring {
                    x0 = x0.min(x);
                    x1 = x1.max(x);
                    y0 = y0.min(y);
                    y1 = y1.max(y);
                }
                (x0, x1, y0, y1)
            }
        }
    }

    pub fn centroid(&self) -> (f64, f64) {
        let (x0, x1, y0, y1) = self.bbox();
        (0.5 * (x0 + x1), 0.5 * (y0 + y1))
    }
}

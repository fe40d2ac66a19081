//! Regular spatio-temporal quadrature grids for the likelihood integral.

use serde::{Deserialize, Serialize};

use crate::error::{HawkesError, Result};
use crate::geo::SpatialWindow;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialNode {
    pub x: f64,
    pub y: f64,
    pub area: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemporalNode {
    pub t: f64,
    pub dt: f64,
}

/// Spatial nodes with cell areas and temporal nodes with step widths. The
/// likelihood integral is the double sum over the product of the two sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub spatial: Vec<SpatialNode>,
    pub temporal: Vec<TemporalNode>,
    pub t_end: f64,
    pub window_area: f64,
}

impl QuadratureGrid {
    pub fn n_spatial(&self) -> usize {
        self.spatial.len()
    }

    pub fn n_temporal(&self) -> usize {
        self.temporal.len()
    }

    /// Total spatio-temporal measure represented by the grid.
    pub fn total_measure(&self) -> f64 {
        let a: f64 = self.spatial.iter().map(|n| n.area).sum();
        let t: f64 = self.temporal.iter().map(|n| n.dt).sum();
        a * t
    }
}

/// Build a regular lattice of about `n_s` spatial cells over the window's
/// bounding box, clipped to the window, times `n_t` temporal midpoints on
/// `[0, T)`. Clipped cell areas are renormalized so they sum to the exact
/// window area, which keeps the total measure at `area * T`.
pub fn build_quadrature(
    window: &SpatialWindow,
    t_end: f64,
    n_s: usize,
    n_t: usize,
) -> Result<QuadratureGrid> {
    if n_s < 1 || n_t < 1 {
        return Err(HawkesError::Domain("need n_s >= 1 and n_t >= 1".into()));
    }
    if t_end <= 0.0 {
        return Err(HawkesError::Domain("need T > 0".into()));
    }
    let area = window.area();
    if !(area > 0.0) {
        return Err(HawkesError::Domain("empty window".into()));
    }
    let (x0, x1, y0, y1) = window.bbox();
    let w = x1 - x0;
    let h = y1 - y0;
    // split n_s across the two axes in proportion to the bbox aspect ratio
    let nx = (((n_s as f64) * w / h).sqrt().round() as usize).max(1);
    let ny = ((n_s as f64 / nx as f64).round() as usize).max(1);
    let dx = w / nx as f64;
    let dy = h / ny as f64;
    let cell = dx * dy;
    let mut spatial = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            let x = x0 + (ix as f64 + 0.5) * dx;
            let y = y0 + (iy as f64 + 0.5) * dy;
            if window.contains(x, y) {
                spatial.push(SpatialNode { x, y, area: cell });
            }
        }
    }
    if spatial.is_empty() {
        return Err(HawkesError::Domain(
            "no lattice centers fell inside the window; increase n_s".into(),
        ));
    }
    let covered: f64 = spatial.iter().map(|n| n.area).sum();
    let scale = area / covered;
    for n in &mut spatial {
        n.area *= scale;
    }
    let dt = t_end / n_t as f64;
    let temporal = (0..n_t)
        .map(|j| TemporalNode {
            t: (j as f64 + 0.5) * dt,
            dt,
        })
        .collect();
    Ok(QuadratureGrid {
        spatial,
        temporal,
        t_end,
        window_area: area,
    })
}

/// Like [`build_quadrature`], but with temporal nodes covering only the
/// sub-interval `[t_start, t_end)`. Used for holdout evaluation, where the
/// intensity integral runs over the test period only.
pub fn build_quadrature_interval(
    window: &SpatialWindow,
    t_start: f64,
    t_end: f64,
    n_s: usize,
    n_t: usize,
) -> Result<QuadratureGrid> {
    if !(t_start >= 0.0 && t_start < t_end) {
        return Err(HawkesError::Domain(format!(
            "need 0 <= t_start < t_end, got [{t_start}, {t_end})"
        )));
    }
    let mut grid = build_quadrature(window, t_end - t_start, n_s, n_t)?;
    for node in &mut grid.temporal {
        node.t += t_start;
    }
    grid.t_end = t_end;
    Ok(grid)
}

//! User-uploaded auxiliary point datasets and the per-node scores they induce.
//!
//! Every auxiliary point contributes `1 - d / r` to each node within the
//! effective radius `r` (and nothing beyond it); a node's score is the sum
//! over all points.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::geodata::{great_circle_distance, LatLon, MapGraph, NodeIdx, EARTH_RADIUS_M};

pub const DEFAULT_RADIUS_M: f64 = 200.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AuxError {
    #[error("radius must be positive, got {0}")]
    NonpositiveRadius(f64),
    #[error("dataset `{0}` has no points")]
    EmptyDataset(String),
    #[error("point #{index} of dataset `{dataset}` has invalid coordinates")]
    InvalidPoint { dataset: String, index: usize },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuxDataset {
    pub id: String,
    pub name: String,
    pub points: Vec<LatLon>,
    pub default_radius: f64,
}

impl AuxDataset {
    pub fn new(
        id: impl Into<String>,
        name: impl Into<String>,
        points: Vec<LatLon>,
        default_radius: f64,
    ) -> Result<Self, AuxError> {
        let ds = AuxDataset {
            id: id.into(),
            name: name.into(),
            points,
            default_radius,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<(), AuxError> {
        check_radius(self.default_radius)?;
        if self.points.is_empty() {
            return Err(AuxError::EmptyDataset(self.name.clone()));
        }
        if let Some(index) = self.points.iter().position(|p| !p.is_valid()) {
            return Err(AuxError::InvalidPoint {
                dataset: self.name.clone(),
                index,
            });
        }
        Ok(())
    }
}

fn check_radius(radius: f64) -> Result<(), AuxError> {
    if radius.is_finite() && radius > 0.0 {
        Ok(())
    } else {
        Err(AuxError::NonpositiveRadius(radius))
    }
}

/// Contribution of one auxiliary point to one node.
pub fn point_score(node_pos: LatLon, aux_pos: LatLon, radius: f64) -> Result<f64, AuxError> {
    check_radius(radius)?;
    Ok(score_at_distance(great_circle_distance(node_pos, aux_pos), radius))
}

#[inline]
fn score_at_distance(distance: f64, radius: f64) -> f64 {
    if distance <= radius {
        1.0 - distance / radius
    } else {
        0.0
    }
}

/// Per-node scores of one dataset against one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxOverlay {
    pub dataset_id: String,
    pub dataset_name: String,
    pub radius: f64,
    node_scores: Vec<f64>,
}

impl AuxOverlay {
    /// Score of a node by index; panics if the overlay was built against a
    /// smaller graph.
    pub fn score(&self, node: NodeIdx) -> f64 {
        self.node_scores[node.index()]
    }

    pub fn scores(&self) -> &[f64] {
        &self.node_scores
    }

    pub fn node_score(&self, graph: &MapGraph, node: &str) -> Result<f64, AuxError> {
        graph
            .node_index(node)
            .and_then(|idx| self.node_scores.get(idx.index()).copied())
            .ok_or_else(|| AuxError::UnknownNode(node.into()))
    }

    pub fn is_for(&self, graph: &MapGraph) -> bool {
        self.node_scores.len() == graph.node_count()
    }
}

/// Free-function form of [`AuxOverlay::node_score`].
pub fn node_score(overlay: &AuxOverlay, graph: &MapGraph, node: &str) -> Result<f64, AuxError> {
    overlay.node_score(graph, node)
}

/// Scores every node of `graph` against `dataset` using a grid index over
/// the auxiliary points.
pub fn build_overlay(graph: &MapGraph, dataset: &AuxDataset, radius: f64) -> Result<AuxOverlay, AuxError> {
    check_radius(radius)?;
    let positions: Vec<LatLon> = graph.nodes().iter().map(|n| n.pos).collect();
    let node_scores = if dataset.points.is_empty() {
        alloc::vec![0.0; positions.len()]
    } else {
        let grid = PointGrid::new(&dataset.points, &positions, radius);
        positions
            .iter()
            .map(|&pos| {
                let mut total = 0.0;
                grid.for_each_candidate(pos, |p| {
                    total += score_at_distance(great_circle_distance(pos, dataset.points[p]), radius);
                });
                total
            })
            .collect()
    };
    Ok(AuxOverlay {
        dataset_id: dataset.id.clone(),
        dataset_name: dataset.name.clone(),
        radius,
        node_scores,
    })
}

/// Uniform lat/lon bucket grid whose cells are at least one radius wide, so
/// the 3x3 neighbourhood of a query cell holds every point within the radius.
struct PointGrid {
    lat_step: f64,
    lon_step: f64,
    // Number of longitude columns around the globe; `None` disables
    // longitude bucketing (cells wider than half the globe).
    lon_cols: Option<i64>,
    cells: BTreeMap<(i64, i64), Vec<usize>>,
}

impl PointGrid {
    fn new(points: &[LatLon], queries: &[LatLon], radius: f64) -> Self {
        // Slight widening absorbs rounding in the trigonometry below.
        let angle = radius / EARTH_RADIUS_M * 1.000_001;
        let lat_step = angle.to_degrees().max(1e-9);

        // A pair of points with longitude gap dl and both latitudes within
        // +-phi satisfies sin(d/2R) >= cos(phi) sin(dl/2), which bounds dl.
        let max_abs_lat = points
            .iter()
            .chain(queries)
            .map(|p| p.lat.abs())
            .fold(0.0_f64, f64::max);
        let cos_phi = libm::cos(max_abs_lat.to_radians());
        let ratio = libm::sin(angle / 2.0) / cos_phi;
        let (lon_step, lon_cols) = if cos_phi > 1e-12 && ratio < 1.0 {
            let step = (2.0 * libm::asin(ratio)).to_degrees().max(1e-9);
            let cols = libm::floor(360.0 / step) as i64;
            if cols >= 3 {
                (360.0 / cols as f64, Some(cols))
            } else {
                (360.0, None)
            }
        } else {
            (360.0, None)
        };

        let mut grid = PointGrid {
            lat_step,
            lon_step,
            lon_cols,
            cells: BTreeMap::new(),
        };
        for (i, &p) in points.iter().enumerate() {
            let key = grid.cell(p);
            grid.cells.entry(key).or_default().push(i);
        }
        grid
    }

    fn cell(&self, p: LatLon) -> (i64, i64) {
        let row = libm::floor((p.lat + 90.0) / self.lat_step) as i64;
        let col = match self.lon_cols {
            Some(cols) => (libm::floor((p.lon + 180.0) / self.lon_step) as i64).rem_euclid(cols),
            None => 0,
        };
        (row, col)
    }

    fn for_each_candidate(&self, pos: LatLon, mut f: impl FnMut(usize)) {
        let (row, col) = self.cell(pos);
        let cols: Vec<i64> = match self.lon_cols {
            Some(n) => {
                let mut cs: Vec<i64> = (-1..=1).map(|d| (col + d).rem_euclid(n)).collect();
                cs.sort_unstable();
                cs.dedup();
                cs
            }
            None => alloc::vec![0],
        };
        for r in row - 1..=row + 1 {
            for &c in &cols {
                if let Some(bucket) = self.cells.get(&(r, c)) {
                    bucket.iter().copied().for_each(&mut f);
                }
            }
        }
    }
}

use serde::{Deserialize, Serialize};

use super::{cross, norm, sub};
use crate::error::{Error, Result};
use crate::models::{Discretization, ModelManifold, PeriodicGrid, TriangleMesh};

/// One dividing hypersurface with the volumes of the two sides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutSample {
    pub threshold: f64,
    pub interface_measure: f64,
    pub inner_volume: f64,
    pub outer_volume: f64,
}

impl CutSample {
    /// `|H| / min(|O1|, |O2|)^(1/alpha)`.
    pub fn ratio(&self, alpha: f64) -> f64 {
        self.interface_measure / self.inner_volume.min(self.outer_volume).powf(1.0 / alpha)
    }
}

/// Dividing hypersurfaces for testing isoperimetric ratios.
///
/// Meshes use `count` level sets of the piecewise-linear `field` at evenly
/// spaced quantiles. Grids use the `count` coordinate slabs `{x1 < t}`, whose
/// boundary is two flat hypertori, and ignore `field`.
pub fn isoperimetric_cuts(model: &ModelManifold, field: &[f64], count: usize) -> Result<Vec<CutSample>> {
    if count == 0 {
        return Err(Error::Precondition("cut count must be positive".into()));
    }
    match &model.discretization {
        Discretization::Mesh(mesh) => {
            if field.len() != mesh.vertex_count() {
                return Err(Error::DimensionMismatch {
                    expected: mesh.vertex_count(),
                    got: field.len(),
                });
            }
            let mut sorted = field.to_vec();
            sorted.sort_by(f64::total_cmp);
            Ok((1..=count)
                .map(|i| {
                    let t = sorted[i * (sorted.len() - 1) / (count + 1)];
                    level_set_cut(mesh, field, t)
                })
                .filter(|c| c.inner_volume > 0.0 && c.outer_volume > 0.0)
                .collect())
        }
        Discretization::Grid(grid) => Ok(slab_cuts(grid, count)),
    }
}

fn slab_cuts(grid: &PeriodicGrid, count: usize) -> Vec<CutSample> {
    let side = grid.points_per_axis as f64 * grid.spacing;
    let face = side.powi(grid.dimension as i32 - 1);
    (1..=count)
        .map(|i| {
            let t = side * i as f64 / (count + 1) as f64;
            CutSample {
                threshold: t,
                interface_measure: 2.0 * face,
                inner_volume: t * face,
                outer_volume: (side - t) * face,
            }
        })
        .collect()
}

fn polygon_area(poly: &[[f64; 3]]) -> f64 {
    let mut acc = [0.0; 3];
    for i in 0..poly.len() {
        let c = cross(poly[i], poly[(i + 1) % poly.len()]);
        for k in 0..3 {
            acc[k] += c[k];
        }
    }
    0.5 * norm(acc)
}

/// Splits every triangle along the linear level line `u = t`.
fn level_set_cut(mesh: &TriangleMesh, u: &[f64], t: f64) -> CutSample {
    let (mut inner, mut total, mut length) = (0.0, 0.0, 0.0);
    for face in &mesh.faces {
        let p = face.map(|v| mesh.vertices[v]);
        let val = face.map(|v| u[v]);
        total += 0.5 * norm(cross(sub(p[1], p[0]), sub(p[2], p[0])));
        let below = val.map(|x| x < t);
        if below.iter().all(|&b| b) {
            inner += 0.5 * norm(cross(sub(p[1], p[0]), sub(p[2], p[0])));
            continue;
        }
        if !below.iter().any(|&b| b) {
            continue;
        }
        let mut clipped = Vec::with_capacity(4);
        let mut crossings = Vec::with_capacity(2);
        for i in 0..3 {
            let j = (i + 1) % 3;
            if below[i] {
                clipped.push(p[i]);
            }
            if below[i] != below[j] {
                let s = (t - val[i]) / (val[j] - val[i]);
                let q = [0, 1, 2].map(|k| p[i][k] + s * (p[j][k] - p[i][k]));
                clipped.push(q);
                crossings.push(q);
            }
        }
        inner += polygon_area(&clipped);
        length += norm(sub(crossings[0], crossings[1]));
    }
    CutSample {
        threshold: t,
        interface_measure: length,
        inner_volume: inner,
        outer_volume: (total - inner).max(0.0),
    }
}

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::{norm, sub, OperatorPair};
use crate::error::{Error, Result};
use crate::models::{Discretization, ModelManifold};

pub const DIAMETER_SOURCES: usize = 32;

/// Distance used to decide ball membership.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BallMetric {
    /// Shortest paths along mesh edges or axis-aligned grid steps.
    Graph,
    /// Exact distance of the smooth model evaluated at the vertex positions.
    /// Each vertex counts with the fraction of its cell inside the ball,
    /// modeled as a linear ramp of width `mass^(1/m)` across the sphere `d = r`.
    Intrinsic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallVolumeSample {
    pub center: usize,
    pub radius: f64,
    pub measured_volume: f64,
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn weighted_adjacency(model: &ModelManifold) -> Vec<Vec<(usize, f64)>> {
    match &model.discretization {
        Discretization::Mesh(mesh) => mesh
            .adjacency()
            .into_iter()
            .enumerate()
            .map(|(a, nb)| nb.into_iter().map(|b| (b, norm(sub(mesh.vertices[a], mesh.vertices[b])))).collect())
            .collect(),
        Discretization::Grid(grid) => (0..grid.vertex_count())
            .map(|v| grid.neighbors(v).into_iter().map(|b| (b, grid.spacing)).collect())
            .collect(),
    }
}

fn dijkstra(adj: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Entry(0.0, source));
    while let Some(Entry(d, v)) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(w, len) in &adj[v] {
            let nd = d + len;
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(Entry(nd, w));
            }
        }
    }
    dist
}

/// Shortest-path distances from `source` to every vertex.
pub fn graph_distances(model: &ModelManifold, source: usize) -> Result<Vec<f64>> {
    let dist = dijkstra(&weighted_adjacency(model), source);
    match dist.iter().position(|d| d.is_infinite()) {
        Some(vertex) => Err(Error::Disconnected {
            source_vertex: source,
            vertex,
        }),
        None => Ok(dist),
    }
}

/// Largest eccentricity over a fixed, evenly spread set of source vertices.
pub fn graph_diameter_estimate(model: &ModelManifold) -> Result<f64> {
    let n = model.vertex_count();
    if n < 2 {
        return Err(Error::Precondition(format!("model has {n} vertices")));
    }
    let adj = weighted_adjacency(model);
    let sources = n.min(DIAMETER_SOURCES);
    let mut best = 0f64;
    for i in 0..sources {
        let source = i * n / sources;
        let dist = dijkstra(&adj, source);
        if let Some(vertex) = dist.iter().position(|d| d.is_infinite()) {
            return Err(Error::Disconnected {
                source_vertex: source,
                vertex,
            });
        }
        best = dist.into_iter().fold(best, f64::max);
    }
    Ok(best)
}

/// Acceptable range for the graph diameter estimate.
///
/// Axis-aligned grid paths measure the L1 distance, which exceeds the
/// geodesic one by up to `sqrt(m)`.
pub fn diameter_window(model: &ModelManifold) -> (f64, f64) {
    let d = model.reference.diameter;
    let factor = match &model.discretization {
        Discretization::Mesh(_) => 1.6,
        Discretization::Grid(grid) => 1.6f64.max((grid.dimension as f64).sqrt()),
    };
    (d, factor * d)
}

/// Radii below this are resolved by too few cells for a ball volume to be
/// meaningful.
pub fn min_resolved_radius(model: &ModelManifold, ops: &OperatorPair) -> f64 {
    let m = model.dimension() as f64;
    4.0 * ops.mass.iter().map(|w| w.powf(1.0 / m)).fold(0.0, f64::max)
}

/// Mass of the vertices within distance `r` of `center`, for each radius.
pub fn ball_volume_profile(
    model: &ModelManifold,
    ops: &OperatorPair,
    center: usize,
    radii: &[f64],
    metric: BallMetric,
) -> Result<Vec<BallVolumeSample>> {
    let n = model.vertex_count();
    if center >= n {
        return Err(Error::Precondition(format!("center {center} out of range for {n} vertices")));
    }
    if ops.vertex_count != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: ops.vertex_count,
        });
    }
    if radii.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Precondition("radii must be ascending".into()));
    }
    let diameter = model.reference.diameter;
    if let Some(r) = radii.iter().find(|&&r| !(r > 0.0 && r <= diameter * (1.0 + 1e-12))) {
        return Err(Error::Precondition(format!("radius {r} outside (0, {diameter}]")));
    }
    let volumes: Vec<f64> = match metric {
        BallMetric::Graph => {
            let dist = graph_distances(model, center)?;
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
            let (mut cursor, mut volume) = (0, 0.0);
            radii
                .iter()
                .map(|&radius| {
                    while cursor < n && dist[order[cursor]] <= radius {
                        volume += ops.mass[order[cursor]];
                        cursor += 1;
                    }
                    volume
                })
                .collect()
        }
        BallMetric::Intrinsic => {
            let inv_m = 1.0 / model.dimension() as f64;
            let cells: Vec<(f64, f64, f64)> = (0..n)
                .map(|v| (model.intrinsic_distance(center, v), ops.mass[v], ops.mass[v].powf(inv_m)))
                .collect();
            radii
                .iter()
                .map(|&r| cells.iter().map(|&(d, mass, w)| mass * ((r - d) / w + 0.5).clamp(0.0, 1.0)).sum())
                .collect()
        }
    };
    let samples = radii
        .iter()
        .zip(volumes)
        .map(|(&radius, measured_volume)| BallVolumeSample {
            center,
            radius,
            measured_volume,
        })
        .collect();
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelSpec;
    use std::f64::consts::PI;

    fn sphere(s: u32) -> (ModelManifold, OperatorPair) {
        let model = ModelManifold::build(ModelSpec::Sphere { subdivisions: s }).unwrap();
        let ops = OperatorPair::for_model(&model).unwrap();
        (model, ops)
    }

    #[test]
    fn sphere_diameter_estimate() {
        for s in 3..=4 {
            let (model, _) = sphere(s);
            let d = graph_diameter_estimate(&model).unwrap();
            assert!((PI..=1.3 * PI).contains(&d), "s = {s}: {d}");
            let (lo, hi) = diameter_window(&model);
            assert!(lo <= d && d <= hi);
        }
    }

    #[test]
    fn torus_diameter_estimate() {
        let model = ModelManifold::build(ModelSpec::Torus { dimension: 2, points_per_axis: 64 }).unwrap();
        let d = graph_diameter_estimate(&model).unwrap();
        assert!(d >= PI * 2f64.sqrt() && d <= 2.0 * PI + 1e-12, "{d}");
        let m3 = ModelManifold::build(ModelSpec::Torus { dimension: 3, points_per_axis: 12 }).unwrap();
        let d3 = graph_diameter_estimate(&m3).unwrap();
        let (lo, hi) = diameter_window(&m3);
        assert!(lo <= d3 && d3 <= hi + 1e-12, "{d3} not in [{lo}, {hi}]");
    }

    #[test]
    fn ball_profile_sphere() {
        let (model, ops) = sphere(4);
        for metric in [BallMetric::Graph, BallMetric::Intrinsic] {
            let prof = ball_volume_profile(&model, &ops, 0, &[0.3, PI / 2.0, PI], metric).unwrap();
            assert!(prof.windows(2).all(|w| w[0].measured_volume <= w[1].measured_volume));
            assert!(prof[2].measured_volume <= ops.total_mass() + 1e-12);
        }
        let whole = ball_volume_profile(&model, &ops, 0, &[PI], BallMetric::Intrinsic).unwrap();
        assert!((whole[0].measured_volume - ops.total_mass()).abs() / ops.total_mass() < 1e-3);
        let half = ball_volume_profile(&model, &ops, 0, &[PI / 2.0], BallMetric::Intrinsic).unwrap();
        assert!((half[0].measured_volume - 2.0 * PI).abs() / (2.0 * PI) < 0.05);
    }

    #[test]
    fn graph_balls_underestimate_caps() {
        let (model, ops) = sphere(4);
        let radii = [0.3, 0.6, PI / 2.0, 3.0];
        let ratios = |metric| -> Vec<f64> {
            let prof = ball_volume_profile(&model, &ops, 0, &radii, metric).unwrap();
            prof.iter().map(|s| s.measured_volume / (2.0 * PI * (1.0 - s.radius.cos()))).collect()
        };
        assert!(ratios(BallMetric::Intrinsic).iter().all(|r| (r - 1.0).abs() < 0.01));
        assert!(ratios(BallMetric::Graph)[..3].iter().all(|&r| r < 0.9));
    }

    #[test]
    fn lattice_balls_above_resolution() {
        let model = ModelManifold::build(ModelSpec::Torus { dimension: 3, points_per_axis: 24 }).unwrap();
        let ops = OperatorPair::for_model(&model).unwrap();
        let r0 = min_resolved_radius(&model, &ops);
        assert!((r0 - 4.0 * 2.0 * PI / 24.0).abs() < 1e-12);
        let radii = [r0, 1.5 * r0, 2.0 * r0, 2.5];
        for s in ball_volume_profile(&model, &ops, 777, &radii, BallMetric::Intrinsic).unwrap() {
            let exact = 4.0 / 3.0 * PI * s.radius.powi(3);
            assert!((s.measured_volume / exact - 1.0).abs() < 0.02, "{s:?}");
        }
    }

    #[test]
    fn ball_profile_rejects_bad_radii() {
        let (model, ops) = sphere(2);
        assert!(ball_volume_profile(&model, &ops, 0, &[1.0, 0.5], BallMetric::Graph).is_err());
        assert!(ball_volume_profile(&model, &ops, 0, &[0.0], BallMetric::Graph).is_err());
        assert!(ball_volume_profile(&model, &ops, 0, &[4.0], BallMetric::Graph).is_err());
        assert!(ball_volume_profile(&model, &ops, 10_000, &[1.0], BallMetric::Graph).is_err());
    }

    #[test]
    fn disconnected_graph_is_reported() {
        let adj = vec![vec![(1, 1.0)], vec![(0, 1.0)], vec![]];
        let dist = dijkstra(&adj, 0);
        assert_eq!(dist[1], 1.0);
        assert!(dist[2].is_infinite());
    }
}

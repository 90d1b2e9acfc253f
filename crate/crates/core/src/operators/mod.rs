//! Discrete Laplacian (stiffness / lumped mass), vertex gradients, graph
//! distances, ball volumes and test cuts.

mod cuts;
mod distance;
mod sparse;

use crate::error::{Error, Result};
use crate::models::{Discretization, ModelManifold, PeriodicGrid, TriangleMesh};

pub use cuts::{isoperimetric_cuts, CutSample};
pub use distance::{
    ball_volume_profile, diameter_window, graph_diameter_estimate, graph_distances, min_resolved_radius, BallMetric,
    BallVolumeSample, DIAMETER_SOURCES,
};
pub use sparse::CsrMatrix;

pub const MIN_FACE_AREA: f64 = 1e-14;

/// Stiffness `S` (approximating `int |grad u|^2 = u^T S u`) and diagonal mass.
#[derive(Clone, Debug)]
pub struct OperatorPair {
    pub stiffness: CsrMatrix,
    pub mass: Vec<f64>,
    pub vertex_count: usize,
}

impl OperatorPair {
    pub fn for_model(model: &ModelManifold) -> Result<Self> {
        match &model.discretization {
            Discretization::Mesh(mesh) => stiffness_and_mass(mesh),
            Discretization::Grid(grid) => Ok(grid_laplacian(grid)),
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// `u^T S u`.
    pub fn energy(&self, u: &[f64]) -> f64 {
        self.stiffness.matvec(u).iter().zip(u).map(|(a, b)| a * b).sum()
    }

    /// `sum_i M_ii |u_i|^p`.
    pub fn integral_pow(&self, u: &[f64], p: f64) -> f64 {
        self.mass.iter().zip(u).map(|(m, x)| m * x.abs().powf(p)).sum()
    }

    /// `u^T M v`.
    pub fn mass_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.mass.iter().zip(u.iter().zip(v)).map(|(m, (a, b))| m * a * b).sum()
    }

    /// Neighbor lists taken from the off-diagonal pattern of the stiffness.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        (0..self.vertex_count)
            .map(|r| self.stiffness.row(r).filter(|&(c, v)| c != r && v != 0.0).map(|(c, _)| c).collect())
            .collect()
    }

    /// One pass of mass-weighted averaging over each closed 1-ring.
    pub fn smooth(&self, u: &[f64]) -> Vec<f64> {
        self.adjacency()
            .iter()
            .enumerate()
            .map(|(i, nb)| {
                let (mut num, mut den) = (self.mass[i] * u[i], self.mass[i]);
                for &j in nb {
                    num += self.mass[j] * u[j];
                    den += self.mass[j];
                }
                num / den
            })
            .collect()
    }
}

pub(crate) fn sub(p: [f64; 3], q: [f64; 3]) -> [f64; 3] {
    [p[0] - q[0], p[1] - q[1], p[2] - q[2]]
}

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Cotangent stiffness and barycentric lumped mass.
pub fn stiffness_and_mass(mesh: &TriangleMesh) -> Result<OperatorPair> {
    let n = mesh.vertex_count();
    let mut triplets = Vec::with_capacity(mesh.face_count() * 12);
    let mut mass = vec![0.0; n];
    for (fi, face) in mesh.faces.iter().enumerate() {
        let p = face.map(|v| mesh.vertices[v]);
        let double_area = norm(cross(sub(p[1], p[0]), sub(p[2], p[0])));
        if double_area / 2.0 < MIN_FACE_AREA {
            return Err(Error::DegenerateFace {
                face: fi,
                area: double_area / 2.0,
            });
        }
        for corner in 0..3 {
            let (i, j, k) = (corner, (corner + 1) % 3, (corner + 2) % 3);
            let u = sub(p[j], p[i]);
            let v = sub(p[k], p[i]);
            let half_cot = 0.5 * dot(u, v) / double_area;
            let (a, b) = (face[j], face[k]);
            triplets.push((a, b, -half_cot));
            triplets.push((b, a, -half_cot));
            triplets.push((a, a, half_cot));
            triplets.push((b, b, half_cot));
            mass[face[i]] += double_area / 6.0;
        }
    }
    Ok(OperatorPair {
        stiffness: CsrMatrix::from_triplets(n, n, triplets),
        mass,
        vertex_count: n,
    })
}

/// `2m`-point stencil with weight `1/h^2` per neighbor, integrated against the
/// cell volume `h^m` so that `u^T S u` approximates `int |grad u|^2`.
pub fn grid_laplacian(grid: &PeriodicGrid) -> OperatorPair {
    let n = grid.vertex_count();
    let cell = grid.spacing.powi(grid.dimension as i32);
    let w = cell / (grid.spacing * grid.spacing);
    let mut triplets = Vec::with_capacity(n * (2 * grid.dimension + 1));
    for v in 0..n {
        triplets.push((v, v, 2.0 * grid.dimension as f64 * w));
        for nb in grid.neighbors(v) {
            triplets.push((v, nb, -w));
        }
    }
    OperatorPair {
        stiffness: CsrMatrix::from_triplets(n, n, triplets),
        mass: vec![cell; n],
        vertex_count: n,
    }
}

/// Per-vertex `|grad u|^2`.
///
/// On meshes the per-face gradients of the piecewise-linear interpolant are
/// averaged onto vertices with area weights; on grids central differences
/// are used along each axis.
pub fn vertex_gradient_sq(model: &ModelManifold, field: &[f64]) -> Result<Vec<f64>> {
    if field.len() != model.vertex_count() {
        return Err(Error::DimensionMismatch {
            expected: model.vertex_count(),
            got: field.len(),
        });
    }
    match &model.discretization {
        Discretization::Mesh(mesh) => {
            let mut acc = vec![[0.0f64; 3]; mesh.vertex_count()];
            let mut weight = vec![0.0f64; mesh.vertex_count()];
            for face in &mesh.faces {
                let p = face.map(|v| mesh.vertices[v]);
                let normal = cross(sub(p[1], p[0]), sub(p[2], p[0]));
                let double_area = norm(normal);
                let unit = normal.map(|c| c / double_area);
                let mut grad = [0.0; 3];
                for corner in 0..3 {
                    // gradient of the hat function: opposite edge rotated into the face
                    let edge = sub(p[(corner + 2) % 3], p[(corner + 1) % 3]);
                    let hat = cross(unit, edge);
                    for c in 0..3 {
                        grad[c] += field[face[corner]] * hat[c] / double_area;
                    }
                }
                for &v in face {
                    for c in 0..3 {
                        acc[v][c] += double_area * grad[c];
                    }
                    weight[v] += double_area;
                }
            }
            Ok(acc.iter().zip(&weight).map(|(g, w)| dot(*g, *g) / (w * w)).collect())
        }
        Discretization::Grid(grid) => Ok((0..grid.vertex_count())
            .map(|v| {
                (0..grid.dimension)
                    .map(|axis| {
                        let d = (field[grid.neighbor(v, axis, true)] - field[grid.neighbor(v, axis, false)])
                            / (2.0 * grid.spacing);
                        d * d
                    })
                    .sum()
            })
            .collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{make_flat_torus_grid, make_icosphere, ModelSpec};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn icosphere_operator_invariants() {
        let mesh = make_icosphere(4).unwrap();
        let ops = stiffness_and_mass(&mesh).unwrap();
        assert!((ops.total_mass() - 4.0 * PI).abs() / (4.0 * PI) < 0.005);
        assert_eq!(ops.stiffness.max_asymmetry(), 0.0);
        let ones = vec![1.0; ops.vertex_count];
        assert!(ops.stiffness.matvec(&ones).iter().all(|x| x.abs() < 1e-10));
        assert!(ops.mass.iter().all(|&m| m > 0.0));
    }

    #[test]
    fn icosphere_mass_converges_for_s3_and_up() {
        for s in 3..=5 {
            let ops = stiffness_and_mass(&make_icosphere(s).unwrap()).unwrap();
            assert!((ops.total_mass() - 4.0 * PI).abs() / (4.0 * PI) < 0.005, "s = {s}");
        }
    }

    #[test]
    fn degenerate_face_is_named() {
        let mut mesh = make_icosphere(0).unwrap();
        let dup = mesh.vertices[mesh.faces[7][0]];
        mesh.vertices[mesh.faces[7][1]] = dup;
        match stiffness_and_mass(&mesh) {
            Err(Error::DegenerateFace { face, .. }) => assert!(face <= 7),
            other => panic!("expected degenerate face error, got {other:?}"),
        }
    }

    #[test]
    fn grid_operator_invariants() {
        let grid = make_flat_torus_grid(2, 64).unwrap();
        let ops = grid_laplacian(&grid);
        let h = grid.spacing;
        let m_inv = |r: usize, c: usize| ops.stiffness.get(r, c) / ops.mass[r];
        assert_relative_eq!(m_inv(0, 0), 4.0 / (h * h), max_relative = 1e-14);
        assert_relative_eq!(m_inv(0, 1), -1.0 / (h * h), max_relative = 1e-14);
        assert_relative_eq!(ops.total_mass(), 4.0 * PI * PI, max_relative = 1e-12);
        assert_eq!(ops.stiffness.max_asymmetry(), 0.0);
        assert!(ops.stiffness.row_sums().iter().all(|x| x.abs() < 1e-10));
    }

    #[test]
    fn grid_fourier_mode_is_eigenvector() {
        // cos(x1) is an exact eigenvector of the stencil with eigenvalue 4 sin^2(pi/n) / h^2
        let grid = make_flat_torus_grid(2, 64).unwrap();
        let ops = grid_laplacian(&grid);
        let u: Vec<f64> = (0..grid.vertex_count()).map(|v| grid.position(v)[0].cos()).collect();
        let su = ops.stiffness.matvec(&u);
        let h = grid.spacing;
        let lambda = 4.0 * (PI / 64.0).sin().powi(2) / (h * h);
        assert_relative_eq!(lambda, 0.999_197_067_539_231_2, max_relative = 1e-13);
        for (a, b) in su.iter().zip(&u) {
            assert!((a - lambda * ops.mass[0] * b).abs() < 1e-10);
        }
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        for spec in [ModelSpec::Sphere { subdivisions: 2 }, ModelSpec::Torus { dimension: 3, points_per_axis: 8 }] {
            let model = ModelManifold::build(spec).unwrap();
            let g = vertex_gradient_sq(&model, &vec![2.5; model.vertex_count()]).unwrap();
            assert!(g.iter().all(|x| x.abs() < 1e-20));
        }
    }

    #[test]
    fn gradient_of_sine_on_torus() {
        let model = ModelManifold::build(ModelSpec::Torus { dimension: 2, points_per_axis: 64 }).unwrap();
        let Discretization::Grid(grid) = &model.discretization else { unreachable!() };
        let u: Vec<f64> = (0..grid.vertex_count()).map(|v| grid.position(v)[0].sin()).collect();
        let g = vertex_gradient_sq(&model, &u).unwrap();
        let max = g.iter().cloned().fold(0.0, f64::max);
        let h = grid.spacing;
        // central difference of sin has amplitude sin(h)/h
        assert_relative_eq!(max, (h.sin() / h).powi(2), max_relative = 1e-12);
        assert!((max - 1.0).abs() < h * h);
    }

    #[test]
    fn gradient_of_height_on_sphere() {
        let model = ModelManifold::build(ModelSpec::Sphere { subdivisions: 4 }).unwrap();
        let Discretization::Mesh(mesh) = &model.discretization else { unreachable!() };
        let z: Vec<f64> = mesh.vertices.iter().map(|p| p[2]).collect();
        let g = vertex_gradient_sq(&model, &z).unwrap();
        let max = g.iter().cloned().fold(0.0, f64::max);
        assert!((max - 1.0).abs() < 0.02, "max |grad z|^2 = {max}");
        // |grad z|^2 = sin^2(theta) = 1 - z^2 pointwise
        for (gi, zi) in g.iter().zip(&z) {
            assert!((gi - (1.0 - zi * zi)).abs() < 0.02);
        }
    }

    #[test]
    fn gradient_length_mismatch() {
        let model = ModelManifold::build(ModelSpec::Sphere { subdivisions: 1 }).unwrap();
        assert!(matches!(vertex_gradient_sq(&model, &[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn smoothing_preserves_constants() {
        let model = ModelManifold::build(ModelSpec::Sphere { subdivisions: 2 }).unwrap();
        let ops = OperatorPair::for_model(&model).unwrap();
        let s = ops.smooth(&vec![3.0; ops.vertex_count]);
        assert!(s.iter().all(|x| (x - 3.0).abs() < 1e-14));
        assert!(ops.adjacency().iter().all(|nb| nb.len() == 5 || nb.len() == 6));
    }
}

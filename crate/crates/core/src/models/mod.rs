//! Model manifolds with closed-form spectra, diameters, volumes and
//! curvature certificates.
//!
//! The catalog is the unit sphere `S^2` (discretized as an icosphere) and the
//! flat torus `[0, 2 pi)^m` (discretized as a periodic lattice). Potentials
//! come from a two-entry catalog whose Bakry-Emery constants are exact.

mod grid;
mod mesh;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bounds::GeometricHypotheses;
use crate::error::{Error, Result};

pub use grid::{make_flat_torus_grid, PeriodicGrid, MAX_GRID_VERTICES};
pub use mesh::{make_icosphere, TriangleMesh, MAX_SUBDIVISIONS};

/// Number of reference eigenvalues (with multiplicity) kept per model.
pub const REFERENCE_EIGENVALUE_COUNT: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelSpec {
    Sphere { subdivisions: u32 },
    Torus { dimension: usize, points_per_axis: usize },
}

impl ModelSpec {
    pub fn dimension(&self) -> usize {
        match self {
            ModelSpec::Sphere { .. } => 2,
            ModelSpec::Torus { dimension, .. } => *dimension,
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Sphere { subdivisions } => write!(f, "sphere:{subdivisions}"),
            ModelSpec::Torus {
                dimension,
                points_per_axis,
            } => write!(f, "torus:{dimension}:{points_per_axis}"),
        }
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    /// `sphere:S` or `torus:M:N`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let int = |p: &str| -> Result<usize> {
            p.parse::<usize>()
                .map_err(|_| Error::Parse(format!("invalid integer {p:?} in model {s:?}")))
        };
        match parts.as_slice() {
            ["sphere", sub] => Ok(ModelSpec::Sphere {
                subdivisions: int(sub)? as u32,
            }),
            ["torus", m, n] => Ok(ModelSpec::Torus {
                dimension: int(m)?,
                points_per_axis: int(n)?,
            }),
            _ => Err(Error::Parse(format!(
                "unknown model {s:?}; expected sphere:S or torus:M:N"
            ))),
        }
    }
}

/// Exact data of the smooth model space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceData {
    /// Lowest eigenvalues, ascending, repeated by multiplicity.
    pub exact_eigenvalues: Vec<f64>,
    pub diameter: f64,
    pub volume: f64,
    /// Largest `rho` with `Ric >= rho g`.
    pub ricci_lower: f64,
}

pub fn analytic_reference(spec: &ModelSpec) -> Result<ReferenceData> {
    match *spec {
        ModelSpec::Sphere { .. } => {
            let mut exact_eigenvalues = Vec::with_capacity(REFERENCE_EIGENVALUE_COUNT);
            'outer: for l in 0.. {
                for _ in 0..(2 * l + 1) {
                    if exact_eigenvalues.len() == REFERENCE_EIGENVALUE_COUNT {
                        break 'outer;
                    }
                    exact_eigenvalues.push((l * (l + 1)) as f64);
                }
            }
            Ok(ReferenceData {
                exact_eigenvalues,
                diameter: PI,
                volume: 4.0 * PI,
                ricci_lower: 1.0,
            })
        }
        ModelSpec::Torus { dimension, .. } => {
            if dimension < 2 {
                return Err(Error::Precondition(format!("torus dimension {dimension} < 2")));
            }
            Ok(ReferenceData {
                exact_eigenvalues: lattice_spectrum(dimension, REFERENCE_EIGENVALUE_COUNT),
                diameter: PI * (dimension as f64).sqrt(),
                volume: (2.0 * PI).powi(dimension as i32),
                ricci_lower: 0.0,
            })
        }
    }
}

/// Squared norms of `Z^m` lattice vectors, ascending with multiplicity.
///
/// Multiplicities `r_m(N)` are obtained by convolving the one-dimensional
/// representation counts `m` times.
fn lattice_spectrum(dimension: usize, count: usize) -> Vec<f64> {
    let mut max_norm = 16usize;
    loop {
        let mut one_dim = vec![0u64; max_norm + 1];
        one_dim[0] = 1;
        let mut j = 1;
        while j * j <= max_norm {
            one_dim[j * j] = 2;
            j += 1;
        }
        let mut reps = one_dim.clone();
        for _ in 1..dimension {
            let mut next = vec![0u64; max_norm + 1];
            for (a, &ra) in reps.iter().enumerate().filter(|(_, &r)| r > 0) {
                for (b, &rb) in one_dim.iter().enumerate().take(max_norm + 1 - a) {
                    next[a + b] += ra * rb;
                }
            }
            reps = next;
        }
        let total: u64 = reps.iter().sum();
        if total as usize >= count {
            let mut out = Vec::with_capacity(count);
            for (norm, &r) in reps.iter().enumerate() {
                for _ in 0..r {
                    if out.len() == count {
                        return out;
                    }
                    out.push(norm as f64);
                }
            }
            return out;
        }
        max_norm *= 2;
    }
}

/// Geometry carrier of a model.
#[derive(Clone, Debug)]
pub enum Discretization {
    Mesh(TriangleMesh),
    Grid(PeriodicGrid),
}

/// A discretized model space together with its exact reference data.
#[derive(Clone, Debug)]
pub struct ModelManifold {
    pub spec: ModelSpec,
    pub discretization: Discretization,
    pub reference: ReferenceData,
}

impl ModelManifold {
    pub fn build(spec: ModelSpec) -> Result<Self> {
        let discretization = match spec {
            ModelSpec::Sphere { subdivisions } => Discretization::Mesh(make_icosphere(subdivisions)?),
            ModelSpec::Torus {
                dimension,
                points_per_axis,
            } => Discretization::Grid(make_flat_torus_grid(dimension, points_per_axis)?),
        };
        Ok(Self {
            spec,
            discretization,
            reference: analytic_reference(&spec)?,
        })
    }

    pub fn dimension(&self) -> usize {
        self.spec.dimension()
    }

    pub fn vertex_count(&self) -> usize {
        match &self.discretization {
            Discretization::Mesh(mesh) => mesh.vertex_count(),
            Discretization::Grid(grid) => grid.vertex_count(),
        }
    }

    /// Geodesic distance of the smooth model between the points carried by
    /// two vertices: great-circle distance on the sphere, distance to the
    /// nearest periodic image on the torus.
    pub fn intrinsic_distance(&self, a: usize, b: usize) -> f64 {
        match &self.discretization {
            Discretization::Mesh(mesh) => {
                let (p, q) = (mesh.vertices[a], mesh.vertices[b]);
                let cross = [
                    p[1] * q[2] - p[2] * q[1],
                    p[2] * q[0] - p[0] * q[2],
                    p[0] * q[1] - p[1] * q[0],
                ];
                let sin = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
                let cos = p[0] * q[0] + p[1] * q[1] + p[2] * q[2];
                sin.atan2(cos)
            }
            Discretization::Grid(grid) => {
                let n = grid.points_per_axis;
                grid.coords(a)
                    .into_iter()
                    .zip(grid.coords(b))
                    .map(|(i, j)| {
                        let d = i.abs_diff(j);
                        let steps = d.min(n - d) as f64 * grid.spacing;
                        steps * steps
                    })
                    .sum::<f64>()
                    .sqrt()
            }
        }
    }
}

/// Potential functions with exact Bakry-Emery certificates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PotentialSpec {
    Zero,
    /// `f = a cos(x_1)` on the flat torus.
    AxialCosine(f64),
}

impl fmt::Display for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialSpec::Zero => write!(f, "zero"),
            PotentialSpec::AxialCosine(a) => write!(f, "axcos:{a}"),
        }
    }
}

impl FromStr for PotentialSpec {
    type Err = Error;

    /// `zero` or `axcos:A`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().split_once(':') {
            None if s.trim() == "zero" => Ok(PotentialSpec::Zero),
            Some(("axcos", a)) => a
                .parse::<f64>()
                .ok()
                .filter(|a| a.is_finite())
                .map(PotentialSpec::AxialCosine)
                .ok_or_else(|| Error::Parse(format!("invalid amplitude in potential {s:?}"))),
            _ => Err(Error::Parse(format!("unknown potential {s:?}; expected zero or axcos:A"))),
        }
    }
}

/// A sampled potential with certified constants: `Ric + Hess f >= -k_eff g`
/// and `|grad f| <= l_eff`.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialField {
    pub spec: PotentialSpec,
    pub model: ModelSpec,
    pub samples: Vec<f64>,
    pub k_eff: f64,
    pub l_eff: f64,
}

pub fn sample_potential(model: &ModelManifold, spec: PotentialSpec) -> Result<PotentialField> {
    let (samples, hessian_floor, l_eff) = match (spec, &model.discretization) {
        (PotentialSpec::Zero, _) => (vec![0.0; model.vertex_count()], 0.0, 0.0),
        (PotentialSpec::AxialCosine(a), Discretization::Grid(grid)) => {
            let samples = (0..grid.vertex_count())
                .map(|v| a * (grid.coords(v)[0] as f64 * grid.spacing).cos())
                .collect();
            // Hess f = diag(-a cos x1, 0, ..., 0), |grad f| = |a sin x1|
            (samples, -a.abs(), a.abs())
        }
        (PotentialSpec::AxialCosine(_), Discretization::Mesh(_)) => {
            return Err(Error::Unsupported(format!(
                "potential {spec} on {}: the Hessian has no closed-form certificate on the sphere",
                model.spec
            )))
        }
    };
    Ok(PotentialField {
        spec,
        model: model.spec,
        samples,
        k_eff: (-(model.reference.ricci_lower + hessian_floor)).max(0.0),
        l_eff,
    })
}

pub fn hypotheses_for(model: &ModelManifold, potential: &PotentialField) -> Result<GeometricHypotheses> {
    if potential.model != model.spec {
        return Err(Error::Precondition(format!(
            "potential was sampled on {} but the model is {}",
            potential.model, model.spec
        )));
    }
    if potential.samples.len() != model.vertex_count() {
        return Err(Error::DimensionMismatch {
            expected: model.vertex_count(),
            got: potential.samples.len(),
        });
    }
    GeometricHypotheses::new(
        model.dimension() as u32,
        potential.k_eff,
        potential.l_eff,
        model.reference.diameter,
        Some(model.reference.volume),
    )
}

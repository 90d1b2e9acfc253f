use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const MAX_GRID_VERTICES: usize = 2_000_000;

/// Periodic lattice on the flat torus `[0, 2 pi)^m`, indexed lexicographically
/// with the first axis varying slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicGrid {
    pub dimension: usize,
    pub points_per_axis: usize,
    pub spacing: f64,
}

impl PeriodicGrid {
    pub fn vertex_count(&self) -> usize {
        self.points_per_axis.pow(self.dimension as u32)
    }

    fn stride(&self, axis: usize) -> usize {
        self.points_per_axis.pow((self.dimension - 1 - axis) as u32)
    }

    pub fn coords(&self, index: usize) -> Vec<usize> {
        (0..self.dimension)
            .map(|axis| (index / self.stride(axis)) % self.points_per_axis)
            .collect()
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .enumerate()
            .map(|(axis, &c)| (c % self.points_per_axis) * self.stride(axis))
            .sum()
    }

    /// Neighbor one step along `axis`, forward if `forward`, with wraparound.
    pub fn neighbor(&self, index: usize, axis: usize, forward: bool) -> usize {
        let n = self.points_per_axis;
        let stride = self.stride(axis);
        let c = (index / stride) % n;
        let next = if forward { (c + 1) % n } else { (c + n - 1) % n };
        index - c * stride + next * stride
    }

    pub fn neighbors(&self, index: usize) -> Vec<usize> {
        (0..self.dimension)
            .flat_map(|axis| [self.neighbor(index, axis, false), self.neighbor(index, axis, true)])
            .collect()
    }

    /// Coordinates in `[0, 2 pi)^m`.
    pub fn position(&self, index: usize) -> Vec<f64> {
        self.coords(index).into_iter().map(|c| c as f64 * self.spacing).collect()
    }

    pub fn validate(&self) -> Result<()> {
        for v in 0..self.vertex_count() {
            let mut nb = self.neighbors(v);
            nb.sort_unstable();
            nb.dedup();
            if nb.len() != 2 * self.dimension || nb.contains(&v) {
                return Err(Error::Precondition(format!("grid vertex {v} does not have {} distinct neighbors", 2 * self.dimension)));
            }
        }
        Ok(())
    }
}

pub fn make_flat_torus_grid(dimension: usize, points_per_axis: usize) -> Result<PeriodicGrid> {
    if !(2..=4).contains(&dimension) {
        return Err(Error::Precondition(format!("torus dimension {dimension} outside 2..=4")));
    }
    if points_per_axis < 8 {
        return Err(Error::Precondition(format!("points per axis {points_per_axis} < 8")));
    }
    let total = (points_per_axis as u128).pow(dimension as u32);
    if total > MAX_GRID_VERTICES as u128 {
        return Err(Error::ResourceGuard(format!(
            "grid has {points_per_axis}^{dimension} = {total} vertices, limit is {MAX_GRID_VERTICES}"
        )));
    }
    Ok(PeriodicGrid {
        dimension,
        points_per_axis,
        spacing: 2.0 * PI / points_per_axis as f64,
    })
}

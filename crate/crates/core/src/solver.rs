//! Lowest generalized eigenpairs of a stiffness/mass pair.
//!
//! The generalized problem `S v = lambda M v` is reduced to the symmetric
//! operator `A = M^(-1/2) S M^(-1/2)`. Small problems are solved densely;
//! larger ones by Chebyshev-filtered block subspace iteration with
//! Rayleigh-Ritz extraction, started from a seeded Gaussian block.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::OperatorPair;

pub const DENSE_LIMIT: usize = 600;
pub const MIN_TOL: f64 = 1e-12;
pub const MAX_TOL: f64 = 1e-4;
pub const DEFAULT_TOL: f64 = 1e-8;

const MAX_DEGREE: usize = 60;
const MIN_DEGREE: usize = 4;
const MAX_AMPLIFICATION: f64 = 1e8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    /// Dense when the vertex count is at most [`DENSE_LIMIT`], iterative otherwise.
    #[default]
    Auto,
    Dense,
    Iterative,
}

/// The `k + 1` lowest eigenpairs, including the constant mode.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Mass-orthonormal, one vector per eigenvalue.
    pub eigenvectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub k_requested: usize,
    pub k_converged: usize,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }

    /// `index,eigenvalue,residual` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "index,eigenvalue,residual")?;
        for (i, (l, r)) in self.eigenvalues.iter().zip(&self.residuals).enumerate() {
            writeln!(out, "{i},{l:.17e},{r:.6e}")?;
        }
        Ok(())
    }
}

pub fn lowest_eigenpairs(ops: &OperatorPair, k: usize, tol: f64, seed: u64) -> Result<Spectrum> {
    lowest_eigenpairs_with(ops, k, tol, seed, SolverMethod::Auto)
}

pub fn lowest_eigenpairs_with(
    ops: &OperatorPair,
    k: usize,
    tol: f64,
    seed: u64,
    method: SolverMethod,
) -> Result<Spectrum> {
    let n = ops.vertex_count;
    if k == 0 || k + 1 > n {
        return Err(Error::Precondition(format!("k = {k} must be in 1..={}", n.saturating_sub(1))));
    }
    if !(MIN_TOL..=MAX_TOL).contains(&tol) {
        return Err(Error::Precondition(format!("tolerance {tol:e} outside [{MIN_TOL:e}, {MAX_TOL:e}]")));
    }
    if ops.mass.len() != n || ops.mass.iter().any(|&m| !(m > 0.0)) {
        return Err(Error::Precondition("mass must have one positive entry per vertex".into()));
    }
    let op = Symmetrized::new(ops);
    let dense = match method {
        SolverMethod::Auto => n <= DENSE_LIMIT,
        SolverMethod::Dense => true,
        SolverMethod::Iterative => false,
    };
    let (values, y) = if dense {
        dense_solve(&op, k + 1)
    } else {
        subspace_iteration(&op, k, tol, seed)?
    };
    let mut spectrum = Spectrum {
        eigenvalues: values,
        eigenvectors: (0..k + 1)
            .map(|j| {
                let mut v: Vec<f64> = y.column(j).iter().zip(&op.inv_sqrt_mass).map(|(a, d)| a * d).collect();
                fix_sign(&mut v);
                v
            })
            .collect(),
        residuals: Vec::new(),
        k_requested: k,
        k_converged: 0,
    };
    spectrum.residuals = residuals(ops, &spectrum);
    spectrum.k_converged = spectrum.residuals.iter().take_while(|&&r| r <= tol).count();
    if spectrum.k_converged < k + 1 {
        return Err(Error::NotConverged {
            k_converged: spectrum.k_converged,
            worst: spectrum.max_residual(),
            best_residuals: spectrum.residuals,
        });
    }
    Ok(spectrum)
}

/// Recomputes `||S v - lambda M v|| / ||M v||` for every pair and returns the largest.
pub fn residual_report(ops: &OperatorPair, spectrum: &Spectrum) -> Result<f64> {
    if spectrum.eigenvectors.len() != spectrum.eigenvalues.len() {
        return Err(Error::DimensionMismatch {
            expected: spectrum.eigenvalues.len(),
            got: spectrum.eigenvectors.len(),
        });
    }
    if let Some(v) = spectrum.eigenvectors.iter().find(|v| v.len() != ops.vertex_count) {
        return Err(Error::DimensionMismatch {
            expected: ops.vertex_count,
            got: v.len(),
        });
    }
    Ok(residuals(ops, spectrum).into_iter().fold(0.0, f64::max))
}

fn residuals(ops: &OperatorPair, spectrum: &Spectrum) -> Vec<f64> {
    spectrum
        .eigenvalues
        .iter()
        .zip(&spectrum.eigenvectors)
        .map(|(&lambda, v)| {
            let sv = ops.stiffness.matvec(v);
            let (mut num, mut den) = (0.0, 0.0);
            for i in 0..v.len() {
                let mv = ops.mass[i] * v[i];
                num += (sv[i] - lambda * mv).powi(2);
                den += mv * mv;
            }
            (num / den).sqrt()
        })
        .collect()
}

fn fix_sign(v: &mut [f64]) {
    if let Some(&first) = v.iter().find(|x| x.abs() > 1e-6) {
        if first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

struct Symmetrized<'a> {
    ops: &'a OperatorPair,
    inv_sqrt_mass: Vec<f64>,
    sqrt_mass: Vec<f64>,
}

impl<'a> Symmetrized<'a> {
    fn new(ops: &'a OperatorPair) -> Self {
        Self {
            ops,
            inv_sqrt_mass: ops.mass.iter().map(|m| 1.0 / m.sqrt()).collect(),
            sqrt_mass: ops.mass.iter().map(|m| m.sqrt()).collect(),
        }
    }

    fn n(&self) -> usize {
        self.ops.vertex_count
    }

    fn apply(&self, x: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        for i in 0..x.len() {
            scratch[i] = x[i] * self.inv_sqrt_mass[i];
        }
        self.ops.stiffness.matvec_into(scratch, out);
        for i in 0..out.len() {
            out[i] *= self.inv_sqrt_mass[i];
        }
    }

    fn apply_block(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.n();
        let mut out = DMatrix::zeros(n, x.ncols());
        let mut scratch = vec![0.0; n];
        for j in 0..x.ncols() {
            let src = &x.as_slice()[j * n..(j + 1) * n];
            let dst = &mut out.as_mut_slice()[j * n..(j + 1) * n];
            self.apply(src, dst, &mut scratch);
        }
        out
    }

    fn dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut a = DMatrix::zeros(n, n);
        for r in 0..n {
            for (c, v) in self.ops.stiffness.row(r) {
                a[(r, c)] = v * self.inv_sqrt_mass[r] * self.inv_sqrt_mass[c];
            }
        }
        a
    }

    fn gershgorin_upper(&self) -> f64 {
        (0..self.n())
            .map(|r| {
                self.ops
                    .stiffness
                    .row(r)
                    .map(|(c, v)| v.abs() * self.inv_sqrt_mass[r] * self.inv_sqrt_mass[c])
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Generalized residual of the Ritz pair `(theta, x)` given `ax = A x`.
    fn residual(&self, theta: f64, x: &[f64], ax: &[f64]) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..x.len() {
            num += ((ax[i] - theta * x[i]) * self.sqrt_mass[i]).powi(2);
            den += (x[i] * self.sqrt_mass[i]).powi(2);
        }
        (num / den).sqrt()
    }
}

fn sorted_eigen(h: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

fn dense_solve(op: &Symmetrized, count: usize) -> (Vec<f64>, DMatrix<f64>) {
    let (values, vectors) = sorted_eigen(op.dense());
    (values[..count].to_vec(), vectors.columns(0, count).into_owned())
}

/// Block width for `want` wanted pairs. The guard band keeps degenerate
/// clusters from straddling the edge of the block.
pub fn block_size(want: usize, n: usize) -> usize {
    (want + 8.max(want.div_ceil(2))).min(n)
}

fn chebyshev_filter(op: &Symmetrized, x: &DMatrix<f64>, degree: usize, lower: f64, cut: f64, upper: f64) -> DMatrix<f64> {
    let e = (upper - cut) / 2.0;
    let c = (upper + cut) / 2.0;
    let mut sigma = e / (lower - c);
    let tau = 2.0 / sigma;
    let mut prev = x.clone();
    let mut cur = (op.apply_block(x) - x * c) * (sigma / e);
    for _ in 1..degree {
        let sigma_next = 1.0 / (tau - sigma);
        let next = (op.apply_block(&cur) - &cur * c) * (2.0 * sigma_next / e) - &prev * (sigma * sigma_next);
        prev = cur;
        cur = next;
        sigma = sigma_next;
    }
    cur
}

fn filter_degree(lower: f64, cut: f64, upper: f64) -> usize {
    let e = (upper - cut) / 2.0;
    let c = (upper + cut) / 2.0;
    let x0 = ((lower - c) / e).abs();
    if x0 <= 1.0 {
        return MAX_DEGREE;
    }
    let d = (MAX_AMPLIFICATION.acosh() / x0.acosh()).floor() as usize;
    d.clamp(MIN_DEGREE, MAX_DEGREE)
}

fn subspace_iteration(op: &Symmetrized, k: usize, tol: f64, seed: u64) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = op.n();
    let want = k + 1;
    let width = block_size(want, n);
    let budget = 50 * k;
    let upper = op.gershgorin_upper() * (1.0 + 1e-10) + 1e-12;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DMatrix::from_fn(n, width, |_, _| rng.sample::<f64, _>(StandardNormal));
    x = x.qr().q();
    let mut best: Option<(usize, f64, Vec<f64>)> = None;

    for _ in 0..=budget {
        let ax = op.apply_block(&x);
        let h = x.transpose() * &ax;
        let h = (&h + h.transpose()) * 0.5;
        let (theta, w) = sorted_eigen(h);
        x = &x * &w;
        let ax = ax * &w;
        let res: Vec<f64> = (0..want)
            .map(|j| op.residual(theta[j], &x.as_slice()[j * n..(j + 1) * n], &ax.as_slice()[j * n..(j + 1) * n]))
            .collect();
        let converged = res.iter().take_while(|&&r| r <= tol).count();
        let worst = res.iter().cloned().fold(0.0, f64::max);
        if converged == want {
            return Ok((theta[..want].to_vec(), x.columns(0, want).into_owned()));
        }
        if best.as_ref().is_none_or(|b| converged > b.0 || (converged == b.0 && worst < b.1)) {
            best = Some((converged, worst, res));
        }

        let lower = theta[0];
        let mut cut = theta[width - 1];
        if !(cut > lower && cut < upper) {
            cut = 0.5 * (lower + upper);
        }
        let degree = filter_degree(lower, cut, upper);
        x = chebyshev_filter(op, &x, degree, lower, cut, upper).qr().q();
    }
    let (k_converged, worst, best_residuals) = best.expect("at least one iteration ran");
    Err(Error::NotConverged {
        k_converged,
        worst,
        best_residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ModelManifold, ModelSpec};

    fn ops_for(spec: ModelSpec) -> OperatorPair {
        OperatorPair::for_model(&ModelManifold::build(spec).unwrap()).unwrap()
    }

    #[test]
    fn preconditions() {
        let ops = ops_for(ModelSpec::Sphere { subdivisions: 1 });
        assert!(matches!(lowest_eigenpairs(&ops, 0, 1e-8, 0), Err(Error::Precondition(_))));
        assert!(matches!(lowest_eigenpairs(&ops, 42, 1e-8, 0), Err(Error::Precondition(_))));
        assert!(matches!(lowest_eigenpairs(&ops, 3, 1e-3, 0), Err(Error::Precondition(_))));
        assert!(matches!(lowest_eigenpairs(&ops, 3, 1e-13, 0), Err(Error::Precondition(_))));
        assert!(lowest_eigenpairs(&ops, 41, 1e-8, 0).is_ok());
    }

    #[test]
    fn dense_and_iterative_agree() {
        let ops = ops_for(ModelSpec::Sphere { subdivisions: 3 });
        let dense = lowest_eigenpairs_with(&ops, 15, 1e-10, 3, SolverMethod::Dense).unwrap();
        let iter = lowest_eigenpairs_with(&ops, 15, 1e-10, 3, SolverMethod::Iterative).unwrap();
        for (a, b) in dense.eigenvalues.iter().zip(&iter.eigenvalues).skip(1) {
            assert!((a - b).abs() / a < 1e-8, "{a} vs {b}");
        }
        assert!(iter.eigenvalues[0].abs() < 1e-8);
    }

    #[test]
    fn zero_mode_and_orthonormality() {
        let ops = ops_for(ModelSpec::Torus { dimension: 2, points_per_axis: 32 });
        let spec = lowest_eigenpairs(&ops, 6, 1e-9, 1).unwrap();
        assert!(spec.eigenvalues[0].abs() < 1e-8);
        assert!(spec.eigenvalues[1] > 1e-3);
        for i in 0..spec.len() {
            for j in 0..spec.len() {
                let g = ops.mass_inner(&spec.eigenvectors[i], &spec.eigenvectors[j]);
                assert!((g - if i == j { 1.0 } else { 0.0 }).abs() < 1e-8);
            }
            let v = &spec.eigenvectors[i];
            let rq = ops.energy(v) / ops.mass_inner(v, v);
            assert!((rq - spec.eigenvalues[i]).abs() <= 1e-8 * spec.eigenvalues[i].abs().max(1.0));
            let first = v.iter().find(|x| x.abs() > 1e-6).unwrap();
            assert!(*first > 0.0);
        }
    }

    #[test]
    fn residual_report_detects_perturbation() {
        let ops = ops_for(ModelSpec::Sphere { subdivisions: 2 });
        let mut spec = lowest_eigenpairs(&ops, 4, 1e-9, 0).unwrap();
        assert!(residual_report(&ops, &spec).unwrap() <= 1e-9);
        spec.eigenvectors[2][5] += 1e-3;
        assert!(residual_report(&ops, &spec).unwrap() > 1e-9);
        spec.eigenvectors[1].pop();
        assert!(residual_report(&ops, &spec).is_err());
        let empty = Spectrum {
            eigenvalues: vec![],
            eigenvectors: vec![],
            residuals: vec![],
            k_requested: 0,
            k_converged: 0,
        };
        assert_eq!(residual_report(&ops, &empty).unwrap(), 0.0);
    }

    #[test]
    fn csv_export() {
        let ops = ops_for(ModelSpec::Sphere { subdivisions: 1 });
        let spec = lowest_eigenpairs(&ops, 3, 1e-9, 0).unwrap();
        let mut buf = Vec::new();
        spec.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.starts_with("index,eigenvalue,residual\n0,"));
    }

    #[test]
    fn block_size_guard_band() {
        assert_eq!(block_size(13, 10_000), 21);
        assert_eq!(block_size(51, 10_000), 77);
        assert_eq!(block_size(13, 16), 16);
    }
}

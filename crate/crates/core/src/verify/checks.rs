use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{
    fail, CheckRecord, RunResult, Slack, VerificationReport, Workspace, COMBINATION_TRIALS, ISOPERIMETRIC_CUTS,
    MAX_GRADIENT_K, MAX_K, MAX_SOBOLEV_TRIALS, VOLUME_CENTERS,
};
use crate::bounds::{
    cheeger_lambda1, combination_gradient_bound, eigenfunction_gradient_bound, eigenvalue_sum_bound,
    in_alpha_lower_bound, lambda_k_lower_bound, sobolev_constants, volume_ratio_bound, SobolevBranch,
    VolumeComparison,
};
use crate::error::{Error, Result};
use crate::models::{ModelManifold, PotentialSpec};
use crate::operators::{ball_volume_profile, isoperimetric_cuts, min_resolved_radius, vertex_gradient_sq, BallMetric};
use crate::solver::Spectrum;

fn ln(x: f64) -> f64 {
    x.ln()
}

fn fresh(model: &ModelManifold, potential: PotentialSpec) -> std::result::Result<(VerificationReport, Workspace<'_>), super::RunFailure> {
    let mut report = VerificationReport::new(None, None);
    match Workspace::new(model, potential, &mut report) {
        Ok(ws) => Ok((report, ws)),
        Err(e) => Err(fail(report, e)),
    }
}

/// Eigenvalue lower bounds, eigenvalue sums and the isoperimetric route to
/// the first eigenvalue.
pub fn run_bound_chain(model: &ModelManifold, potential: PotentialSpec, k_max: usize, tol: f64, seed: u64) -> RunResult {
    if k_max == 0 || k_max > MAX_K {
        return Err(fail(
            VerificationReport::new(None, None),
            Error::Precondition(format!("k_max = {k_max} outside 1..={MAX_K}")),
        ));
    }
    let (mut report, ws) = fresh(model, potential)?;
    let outcome = ws
        .solve(k_max, tol, seed, &mut report)
        .and_then(|spectrum| bound_chain_records(&ws, &spectrum, k_max, &mut report));
    match outcome {
        Ok(()) => {
            report.finalize();
            Ok(report)
        }
        Err(e) => Err(fail(report, e)),
    }
}

pub(crate) fn bound_chain_records(
    ws: &Workspace,
    spectrum: &Spectrum,
    k_max: usize,
    report: &mut VerificationReport,
) -> Result<()> {
    let start = std::time::Instant::now();
    let hyp = &ws.hyp;
    let lambda = &spectrum.eigenvalues;
    let volume = ws.volume();
    let m = hyp.dimension as f64;

    let cuts = isoperimetric_cuts(ws.model, &spectrum.eigenvectors[1], ISOPERIMETRIC_CUTS)?;
    if cuts.is_empty() {
        return Err(Error::Precondition("first eigenfunction produced no dividing level sets".into()));
    }
    for alpha in [1.0, m / (m - 1.0)] {
        let measured = cuts.iter().map(|c| c.ratio(alpha)).fold(f64::INFINITY, f64::min);
        let bound = in_alpha_lower_bound(hyp, alpha, hyp.diameter_upper, volume)?;
        report.push(CheckRecord::new(
            format!("isoperimetric_ratio[alpha={alpha}]"),
            "Theorem 2.3",
            ln(measured),
            bound.log_value(),
            Slack::Discretization,
        ));
    }

    let in1 = in_alpha_lower_bound(hyp, 1.0, hyp.diameter_upper, volume)?;
    report.push(CheckRecord::new(
        "cheeger_lambda1",
        "Lemma 2.2",
        ln(lambda[1]),
        cheeger_lambda1(in1).log_value(),
        Slack::Discretization,
    ));
    report.push(CheckRecord::new(
        "lambda1_lower_bound",
        "Theorem 2.9",
        ln(lambda[1]),
        lambda_k_lower_bound(hyp, 1)?.log_value(),
        Slack::Discretization,
    ));
    for k in 2..=k_max {
        report.push(CheckRecord::new(
            format!("lambda_k_growth[k={k}]"),
            "Theorem 3.6",
            ln(lambda[k]),
            lambda_k_lower_bound(hyp, k as u32)?.log_value(),
            Slack::Discretization,
        ));
    }
    let mut partial = 0.0;
    for k in 1..=k_max {
        partial += lambda[k];
        report.push(CheckRecord::new(
            format!("eigenvalue_sum[k={k}]"),
            "Lemma 3.4",
            eigenvalue_sum_bound(hyp, lambda[k])?.log_value(),
            ln(partial),
            Slack::Discretization,
        ));
    }
    *report.runtime_ms.entry("checks".into()).or_insert(0.0) += start.elapsed().as_secs_f64() * 1e3;
    Ok(())
}

/// Pointwise gradient bounds for single eigenfunctions and random
/// combinations of the first `k + 1` eigenfunctions.
pub fn check_gradient_estimates(model: &ModelManifold, potential: PotentialSpec, k: usize, tol: f64, seed: u64) -> RunResult {
    if k == 0 || k > MAX_GRADIENT_K {
        return Err(fail(
            VerificationReport::new(None, None),
            Error::Precondition(format!("k = {k} outside 1..={MAX_GRADIENT_K}")),
        ));
    }
    let (mut report, ws) = fresh(model, potential)?;
    let outcome = ws
        .solve(k, tol, seed, &mut report)
        .and_then(|spectrum| gradient_records(&ws, &spectrum, k, seed, &mut report));
    match outcome {
        Ok(()) => {
            report.finalize();
            Ok(report)
        }
        Err(e) => Err(fail(report, e)),
    }
}

pub(crate) fn gradient_records(
    ws: &Workspace,
    spectrum: &Spectrum,
    k: usize,
    seed: u64,
    report: &mut VerificationReport,
) -> Result<()> {
    let start = std::time::Instant::now();
    let hyp = &ws.hyp;
    let volume = ws.volume();
    let l2 = hyp.gradient_bound * hyp.gradient_bound;
    // with L = 0 the constant mode's bound is exactly zero, which roundoff cannot meet
    let first = if hyp.gradient_bound > 0.0 { 0 } else { 1 };
    for j in first..=k {
        let phi = &spectrum.eigenvectors[j];
        let grad = vertex_gradient_sq(ws.model, phi)?;
        let measured = grad.iter().cloned().fold(0.0, f64::max);
        let bound = eigenfunction_gradient_bound(hyp, spectrum.eigenvalues[j].max(0.0), volume, 1.0)?;
        report.push(CheckRecord::new(
            format!("gradient_eigenfunction[j={j}]"),
            "Prop 3.1",
            bound.log_value(),
            ln(measured),
            Slack::Discretization,
        ));
    }

    let bound = combination_gradient_bound(hyp, spectrum.eigenvalues[k], volume)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6772_6164);
    let n = ws.ops.vertex_count;
    for trial in 0..COMBINATION_TRIALS {
        let b = unit_ball_sample(&mut rng, k + 1);
        let mut w = vec![0.0; n];
        for (bj, phi) in b.iter().zip(&spectrum.eigenvectors) {
            for (wi, pi) in w.iter_mut().zip(phi) {
                *wi += bj * pi;
            }
        }
        let grad = vertex_gradient_sq(ws.model, &w)?;
        let measured = grad.iter().zip(&w).map(|(g, wi)| g + l2 * wi * wi).fold(0.0, f64::max);
        report.push(CheckRecord::new(
            format!("gradient_combination[trial={trial}]"),
            "Prop 3.3",
            bound.log_value(),
            ln(measured),
            Slack::Discretization,
        ));
    }
    *report.runtime_ms.entry("checks".into()).or_insert(0.0) += start.elapsed().as_secs_f64() * 1e3;
    Ok(())
}

/// Uniform sample from the closed unit ball in `dim` dimensions.
fn unit_ball_sample(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let g: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    let radius = rng.random::<f64>().powf(1.0 / dim as f64);
    g.into_iter().map(|x| x * radius / norm).collect()
}

/// Sobolev inequality on smoothed random fields, in the all-positive form
/// `int |grad u|^2 + C2 int u^2 >= C1 V^(2/m) ||u||_q^2`.
pub fn check_sobolev(model: &ModelManifold, potential: PotentialSpec, trials: usize, seed: u64) -> RunResult {
    if trials == 0 || trials > MAX_SOBOLEV_TRIALS {
        return Err(fail(
            VerificationReport::new(None, None),
            Error::Precondition(format!("trials = {trials} outside 1..={MAX_SOBOLEV_TRIALS}")),
        ));
    }
    let (mut report, ws) = fresh(model, potential)?;
    match sobolev_records(&ws, trials, seed, &mut report) {
        Ok(()) => {
            report.finalize();
            Ok(report)
        }
        Err(e) => Err(fail(report, e)),
    }
}

pub(crate) fn sobolev_records(ws: &Workspace, trials: usize, seed: u64, report: &mut VerificationReport) -> Result<()> {
    let start = std::time::Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x736f_626f);
    let n = ws.ops.vertex_count;
    for trial in 0..trials {
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let u = ws.ops.smooth(&raw);
        report.push(sobolev_record(ws, &u, format!("sobolev[trial={trial}]"))?);
    }
    *report.runtime_ms.entry("checks".into()).or_insert(0.0) += start.elapsed().as_secs_f64() * 1e3;
    Ok(())
}

fn sobolev_record(ws: &Workspace, u: &[f64], name: String) -> Result<CheckRecord> {
    let sob = sobolev_constants(&ws.hyp)?;
    let m = ws.hyp.dimension as f64;
    let volume = ws.ops.total_mass();
    let energy = ws.ops.energy(u).max(0.0);
    let l2 = ws.ops.integral_pow(u, 2.0);
    let (q, vol_power) = match sob.branch {
        SobolevBranch::HighDimensional => (2.0 * m / (m - 2.0), 2.0 / m),
        SobolevBranch::Surface => (4.0, 0.5),
    };
    let norm_sq_log = (2.0 / q) * ws.ops.integral_pow(u, q).ln();
    let larger = crate::LogScalar::from_value(energy).add(sob.c2 * crate::LogScalar::from_value(l2));
    let smaller = sob.c1.log_value() + vol_power * volume.ln() + norm_sq_log;
    Ok(CheckRecord::new(name, "Corollary 2.8", larger.log_value(), smaller, Slack::Discretization))
}

/// Ball-volume ratio comparison for every pair of radii around seeded centers.
pub fn check_volume_comparison(model: &ModelManifold, radii_count: usize, seed: u64) -> RunResult {
    if !(3..=20).contains(&radii_count) {
        return Err(fail(
            VerificationReport::new(None, None),
            Error::Precondition(format!("radii_count = {radii_count} outside 3..=20")),
        ));
    }
    let (mut report, ws) = fresh(model, PotentialSpec::Zero)?;
    match volume_records(&ws, radii_count, seed, &mut report) {
        Ok(()) => {
            report.finalize();
            Ok(report)
        }
        Err(e) => Err(fail(report, e)),
    }
}

pub(crate) fn volume_records(ws: &Workspace, radii_count: usize, seed: u64, report: &mut VerificationReport) -> Result<()> {
    let start = std::time::Instant::now();
    let n = ws.ops.vertex_count;
    let m = ws.hyp.dimension as f64;
    let diameter = ws.model.reference.diameter;
    let smallest = (diameter / radii_count as f64).max(min_resolved_radius(ws.model, &ws.ops));
    if smallest >= diameter {
        return Err(Error::Precondition(format!(
            "model too coarse for ball volumes: smallest resolved radius {smallest} >= diameter {diameter}"
        )));
    }
    let radii: Vec<f64> = (0..radii_count)
        .map(|i| smallest + (diameter - smallest) * i as f64 / (radii_count - 1) as f64)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x766f_6c75);
    let mut centers = sample(&mut rng, n, VOLUME_CENTERS.min(n)).into_vec();
    centers.sort_unstable();
    for center in centers {
        let profile = ball_volume_profile(ws.model, &ws.ops, center, &radii, BallMetric::Intrinsic)?;
        for (i, inner) in profile.iter().enumerate() {
            for outer in &profile[i + 1..] {
                let bound = volume_ratio_bound(&ws.hyp, inner.radius, outer.radius, VolumeComparison::BallVolume)?;
                report.push(CheckRecord::new(
                    format!("volume_ratio[center={center},r1={:.4},r2={:.4}]", inner.radius, outer.radius),
                    "Theorem 2.4",
                    bound.ln() + inner.measured_volume.ln() - m * inner.radius.ln(),
                    outer.measured_volume.ln() - m * outer.radius.ln(),
                    Slack::Discretization,
                ));
            }
        }
    }
    *report.runtime_ms.entry("checks".into()).or_insert(0.0) += start.elapsed().as_secs_f64() * 1e3;
    Ok(())
}

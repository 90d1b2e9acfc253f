//! Closed-form eigenvalue, isoperimetric and Sobolev constants for closed
//! manifolds with `Ric + Hess f >= -K g` and `|grad f| <= L`.
//!
//! Every quantity is evaluated in log-space. The `m = 2` and `m >= 3` branches
//! are selected by the dimension field alone.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{precondition, Result};
use crate::logscalar::LogScalar;

/// The tuple `(m, K, L, D, V)` every bound is parameterized by.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometricHypotheses {
    #[serde(rename = "m")]
    pub dimension: u32,
    /// `K` in `Ric + Hess f >= -K g`.
    #[serde(rename = "K")]
    pub curvature_bound: f64,
    /// `L` in `|grad f| <= L`.
    #[serde(rename = "L")]
    pub gradient_bound: f64,
    #[serde(rename = "D")]
    pub diameter_upper: f64,
    #[serde(rename = "V")]
    pub volume: Option<f64>,
}

impl GeometricHypotheses {
    pub fn new(
        dimension: u32,
        curvature_bound: f64,
        gradient_bound: f64,
        diameter_upper: f64,
        volume: Option<f64>,
    ) -> Result<Self> {
        let hyp = Self {
            dimension,
            curvature_bound,
            gradient_bound,
            diameter_upper,
            volume,
        };
        hyp.validate()?;
        Ok(hyp)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension < 2 {
            return Err(precondition(format!("dimension m = {} < 2", self.dimension)));
        }
        if !(self.curvature_bound >= 0.0 && self.curvature_bound.is_finite()) {
            return Err(precondition(format!("K = {} must be finite and >= 0", self.curvature_bound)));
        }
        if !(self.gradient_bound >= 0.0 && self.gradient_bound.is_finite()) {
            return Err(precondition(format!("L = {} must be finite and >= 0", self.gradient_bound)));
        }
        if !(self.diameter_upper > 0.0 && self.diameter_upper.is_finite()) {
            return Err(precondition(format!("D = {} must be finite and > 0", self.diameter_upper)));
        }
        if let Some(v) = self.volume {
            if !(v > 0.0 && v.is_finite()) {
                return Err(precondition(format!("V = {v} must be finite and > 0")));
            }
        }
        Ok(())
    }

    pub fn require_volume(&self) -> Result<f64> {
        self.volume
            .ok_or_else(|| precondition("this bound needs the manifold volume V"))
    }

    fn m(&self) -> f64 {
        self.dimension as f64
    }

    fn k(&self) -> f64 {
        self.curvature_bound
    }

    fn l(&self) -> f64 {
        self.gradient_bound
    }

    fn d(&self) -> f64 {
        self.diameter_upper
    }
}

/// Which Sobolev inequality applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SobolevBranch {
    /// `m >= 3`, exponent `2m/(m-2)`.
    HighDimensional,
    /// `m = 2`, exponent 4.
    Surface,
}

/// Sobolev constants with the geometric factor folded in.
///
/// `c1 = raw_dim_c1 * geometric_factor^2` and `c2 = c1 * raw_dim_c2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevConstants {
    pub branch: SobolevBranch,
    pub c1: LogScalar,
    pub c2: LogScalar,
    pub raw_dim_c1: f64,
    pub raw_dim_c2: f64,
    pub geometric_factor: LogScalar,
}

/// All constants of the lower-bound chain for one hypothesis tuple.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundChain {
    /// Lower bound of the Cheeger constant `IN_1`.
    pub in_alpha: LogScalar,
    pub c0: LogScalar,
    pub sobolev: SobolevConstants,
    /// Gradient bound for combinations of eigenfunctions evaluated at `c0`.
    pub gradient_bound: LogScalar,
    /// `C5` for `m >= 3`, `C6` for `m = 2`.
    pub growth_sum_constant: LogScalar,
    /// `c1` for `m >= 3`, `c2` for `m = 2`.
    pub growth_constant: LogScalar,
}

impl BoundChain {
    pub fn evaluate(hyp: &GeometricHypotheses) -> Result<Self> {
        hyp.validate()?;
        let volume = hyp.require_volume()?;
        let c0 = lambda1_lower_bound(hyp)?;
        let sobolev = sobolev_constants(hyp)?;
        let (growth_sum_constant, growth_constant) = growth_constants(hyp)?;
        Ok(Self {
            in_alpha: in_alpha_lower_bound(hyp, 1.0, hyp.d(), volume)?,
            c0,
            sobolev,
            gradient_bound: combination_gradient_bound_log(hyp, &sobolev, c0, volume),
            growth_sum_constant,
            growth_constant,
        })
    }
}

/// `d^-1 2^(-2m-1) 5^-m`, shared by the isoperimetric and Sobolev factors.
fn ln_isoperimetric_prefactor(m: f64, d: f64) -> f64 {
    -d.ln() - (2.0 * m + 1.0) * LN_2 - m * 5f64.ln()
}

/// Lower bound of the Neumann `alpha`-isoperimetric constant of a domain
/// with diameter `diam` and volume `volume`.
///
/// Returns zero for `alpha > m/(m-1)`, where the constant itself vanishes.
pub fn in_alpha_lower_bound(
    hyp: &GeometricHypotheses,
    alpha: f64,
    diam: f64,
    volume: f64,
) -> Result<LogScalar> {
    hyp.validate()?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(precondition(format!("alpha = {alpha} must be > 0")));
    }
    if !(diam > 0.0 && diam.is_finite()) {
        return Err(precondition(format!("diameter = {diam} must be > 0")));
    }
    if !(volume > 0.0 && volume.is_finite()) {
        return Err(precondition(format!("volume = {volume} must be > 0")));
    }
    let m = hyp.m();
    let critical = m / (m - 1.0);
    if alpha > critical {
        return Ok(LogScalar::ZERO);
    }
    let (l_coeff, k_coeff) = if alpha >= 1.0 {
        (24.0 - 2.0 / alpha, 104.0 - 1.0 / alpha)
    } else {
        (22.0, 103.0)
    };
    let log = ln_isoperimetric_prefactor(m, diam) - l_coeff * hyp.l() * diam
        - k_coeff * hyp.k() * diam * diam
        + (1.0 - 1.0 / alpha) * volume.ln();
    Ok(LogScalar::from_log(log))
}

/// Cheeger's inequality: `lambda_1 >= IN_1^2 / 4`.
pub fn cheeger_lambda1(in1: LogScalar) -> LogScalar {
    LogScalar::from_log(2.0 * in1.log_value() - 4f64.ln())
}

/// `c0 = (1/16) D^-2 400^-m exp(-44 L D - 206 K D^2)`.
pub fn lambda1_lower_bound(hyp: &GeometricHypotheses) -> Result<LogScalar> {
    hyp.validate()?;
    let (m, d) = (hyp.m(), hyp.d());
    Ok(LogScalar::from_log(
        -16f64.ln() - 2.0 * d.ln() - m * 400f64.ln() - 44.0 * hyp.l() * d - 206.0 * hyp.k() * d * d,
    ))
}

/// `C1(m)`, singular at `m = 2`.
pub fn dimensional_c1(m: u32) -> f64 {
    let m = m as f64;
    (m - 2.0).powi(2) / (4.0 * (m - 1.0).powi(2)) * 2f64.powf((2.0 - m) / (m * (m - 1.0)))
}

/// `C2(m)`, singular at `m = 2`.
pub fn dimensional_c2(m: u32) -> f64 {
    let m = m as f64;
    let exponent = (2.0 * m.powi(3) - 7.0 * m * m + 2.0 * m + 4.0) / (m * (m - 1.0) * (m - 2.0));
    2f64.powf(exponent)
}

/// `S1~ = 3^-2 2^(-1/6)`.
pub fn surface_s1() -> f64 {
    2f64.powf(-1.0 / 6.0) / 9.0
}

/// `S2~ = 2^(7/6)`.
pub fn surface_s2() -> f64 {
    2f64.powf(7.0 / 6.0)
}

pub fn sobolev_constants(hyp: &GeometricHypotheses) -> Result<SobolevConstants> {
    hyp.validate()?;
    let (m, d) = (hyp.m(), hyp.d());
    let (branch, raw_dim_c1, raw_dim_c2, l_coeff, k_coeff) = if hyp.dimension >= 3 {
        (
            SobolevBranch::HighDimensional,
            dimensional_c1(hyp.dimension),
            dimensional_c2(hyp.dimension),
            22.0 + 2.0 / m,
            103.0 + 1.0 / m,
        )
    } else {
        (SobolevBranch::Surface, surface_s1(), surface_s2(), 22.5, 103.25)
    };
    let geometric_factor = LogScalar::from_log(
        ln_isoperimetric_prefactor(m, d) - l_coeff * hyp.l() * d - k_coeff * hyp.k() * d * d,
    );
    let c1 = LogScalar::from_value(raw_dim_c1) * geometric_factor.powf(2.0);
    let c2 = c1 * LogScalar::from_value(raw_dim_c2);
    Ok(SobolevConstants {
        branch,
        c1,
        c2,
        raw_dim_c1,
        raw_dim_c2,
        geometric_factor,
    })
}

/// `2^m (m/(m-2))^(m(m-2)/2)` for `m >= 3`, `2^8` for `m = 2`.
fn ln_moser_prefactor(m: u32) -> f64 {
    if m >= 3 {
        let m = m as f64;
        m * LN_2 + 0.5 * m * (m - 2.0) * (m / (m - 2.0)).ln()
    } else {
        8.0 * LN_2
    }
}

/// `prefactor * ((c lambda + 2K + 2L^2 + C2) / C1)^(m/2) * (lambda + L^2)`,
/// the exponent being 2 for surfaces. Volume and L2 factors are left to callers.
fn moser_core(hyp: &GeometricHypotheses, sob: &SobolevConstants, lambda_multiplier: f64, lambda: LogScalar) -> LogScalar {
    let l2 = LogScalar::from_value(hyp.l() * hyp.l());
    let tail = lambda.add(l2);
    if tail.is_zero() {
        return LogScalar::ZERO;
    }
    let shifted = (LogScalar::from_value(lambda_multiplier) * lambda)
        .add(LogScalar::from_value(2.0 * hyp.k()))
        .add(LogScalar::from_value(2.0) * l2)
        .add(sob.c2);
    let power = if hyp.dimension >= 3 { hyp.m() / 2.0 } else { 2.0 };
    LogScalar::from_log(ln_moser_prefactor(hyp.dimension) + power * (shifted / sob.c1).log_value()) * tail
}

/// Pointwise bound on `|grad u|^2` for an eigenfunction `u` with eigenvalue
/// `lambda` and `int u^2 = l2_norm_sq`.
pub fn eigenfunction_gradient_bound(
    hyp: &GeometricHypotheses,
    lambda: f64,
    volume: f64,
    l2_norm_sq: f64,
) -> Result<LogScalar> {
    hyp.validate()?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(precondition(format!("eigenvalue {lambda} must be >= 0")));
    }
    if !(volume > 0.0) {
        return Err(precondition(format!("volume = {volume} must be > 0")));
    }
    if !(l2_norm_sq > 0.0) {
        return Err(precondition(format!("L2 norm squared = {l2_norm_sq} must be > 0")));
    }
    let core = moser_core(hyp, &sobolev_constants(hyp)?, 3.0, LogScalar::from_value(lambda));
    Ok(core * LogScalar::from_value(l2_norm_sq / volume))
}

/// Pointwise bound on `|grad w|^2 + L^2 w^2` for `w = sum b_j phi_j`,
/// `sum b_j^2 <= 1`, over eigenfunctions up to `lambda_k`.
pub fn combination_gradient_bound(hyp: &GeometricHypotheses, lambda_k: f64, volume: f64) -> Result<LogScalar> {
    hyp.validate()?;
    if !(lambda_k > 0.0 && lambda_k.is_finite()) {
        return Err(precondition(format!("lambda_k = {lambda_k} must be > 0")));
    }
    if !(volume > 0.0) {
        return Err(precondition(format!("volume = {volume} must be > 0")));
    }
    Ok(combination_gradient_bound_log(hyp, &sobolev_constants(hyp)?, LogScalar::from_value(lambda_k), volume))
}

fn combination_gradient_bound_log(hyp: &GeometricHypotheses, sob: &SobolevConstants, lambda_k: LogScalar, volume: f64) -> LogScalar {
    moser_core(hyp, sob, 6.0, lambda_k) / LogScalar::from_value(volume)
}

/// Upper bound on `lambda_1 + ... + lambda_k` in terms of `lambda_k`.
pub fn eigenvalue_sum_bound(hyp: &GeometricHypotheses, lambda_k: f64) -> Result<LogScalar> {
    hyp.validate()?;
    if !(lambda_k > 0.0 && lambda_k.is_finite()) {
        return Err(precondition(format!("lambda_k = {lambda_k} must be > 0")));
    }
    Ok(eigenvalue_sum_bound_log(hyp, &sobolev_constants(hyp)?, LogScalar::from_value(lambda_k)))
}

/// Works for `lambda_k` far below the double range (e.g. `c0`).
fn eigenvalue_sum_bound_log(hyp: &GeometricHypotheses, sob: &SobolevConstants, lambda_k: LogScalar) -> LogScalar {
    let count = if hyp.dimension >= 3 { hyp.m() } else { 2.0 };
    LogScalar::from_value(count) * moser_core(hyp, sob, 6.0, lambda_k)
}

/// `C4 = min{lambda_1, (m / (C3 (m + 2)))^(2/m)}`.
pub fn wz_recursion_constant(m: u32, c3: f64, lambda1: f64) -> Result<f64> {
    if m < 1 {
        return Err(precondition("m must be >= 1"));
    }
    if !(c3 > 0.0) || !(lambda1 > 0.0) {
        return Err(precondition(format!("C3 = {c3} and lambda_1 = {lambda1} must be > 0")));
    }
    Ok(wz_recursion_constant_log(m, LogScalar::from_value(c3), LogScalar::from_value(lambda1)).value())
}

fn wz_recursion_constant_log(m: u32, c3: LogScalar, lambda1: LogScalar) -> LogScalar {
    let m = m as f64;
    let growth = LogScalar::from_log((2.0 / m) * (m.ln() - c3.log_value() - (m + 2.0).ln()));
    lambda1.min(growth)
}

/// `(C5, c1)` for `m >= 3` or `(C6, c2)` for `m = 2`.
pub fn growth_constants(hyp: &GeometricHypotheses) -> Result<(LogScalar, LogScalar)> {
    hyp.validate()?;
    let c0 = lambda1_lower_bound(hyp)?;
    let sob = sobolev_constants(hyp)?;
    let (sum_constant, recursion_dim) = if hyp.dimension >= 3 {
        let m = hyp.m();
        let l2 = LogScalar::from_value(hyp.l() * hyp.l());
        let shifted = (LogScalar::from_value(6.0) * c0)
            .add(LogScalar::from_value(2.0 * hyp.k()))
            .add(LogScalar::from_value(2.0) * l2)
            .add(sob.c2);
        let c5 = m.ln() + ln_moser_prefactor(hyp.dimension) - (m / 2.0 + 1.0) * c0.log_value()
            + (m / 2.0) * (shifted / sob.c1).log_value()
            + c0.add(l2).log_value();
        (LogScalar::from_log(c5), hyp.dimension)
    } else {
        let l2 = LogScalar::from_value(hyp.l() * hyp.l());
        let shifted = (LogScalar::from_value(6.0) * c0)
            .add(LogScalar::from_value(2.0 * hyp.k()))
            .add(LogScalar::from_value(2.0) * l2)
            .add(sob.c2);
        let c6 = 9.0 * LN_2 - 3.0 * c0.log_value() + 2.0 * (shifted / sob.c1).log_value() + c0.add(l2).log_value();
        // sum <= C6 lambda_k^3 is the recursion hypothesis with exponent m'/2 + 1, m' = 4
        (LogScalar::from_log(c6), 4)
    };
    Ok((sum_constant, wz_recursion_constant_log(recursion_dim, sum_constant, c0)))
}

/// Lower bound on `lambda_k`: `c0` at `k = 1`, `c1 k^(2/m)` (`m >= 3`) or
/// `c2 k^(1/2)` (`m = 2`) for `k >= 2`.
pub fn lambda_k_lower_bound(hyp: &GeometricHypotheses, k: u32) -> Result<LogScalar> {
    hyp.validate()?;
    if k < 1 {
        return Err(precondition("k must be >= 1"));
    }
    if k == 1 {
        return lambda1_lower_bound(hyp);
    }
    let (_, c) = growth_constants(hyp)?;
    let exponent = if hyp.dimension >= 3 { 2.0 / hyp.m() } else { 0.5 };
    Ok(c * LogScalar::from_log(exponent * (k as f64).ln()))
}

/// Which comparison the ratio bound refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VolumeComparison {
    /// `(vol B_r2 / r2^m) / (vol B_r1 / r1^m) <= exp(K(r2^2 - r1^2) + 2L(r2 - r1))`.
    BallVolume,
    /// `A(r2, theta) / A(r1, theta) <= exp(2 L r2 + K r2^2) (r2/r1)^(m-1)`.
    AreaElement,
}

pub fn volume_ratio_bound(hyp: &GeometricHypotheses, r1: f64, r2: f64, kind: VolumeComparison) -> Result<f64> {
    hyp.validate()?;
    if !(r1 > 0.0 && r1 < r2 && r2.is_finite()) {
        return Err(precondition(format!("radii must satisfy 0 < r1 < r2, got r1 = {r1}, r2 = {r2}")));
    }
    let (k, l) = (hyp.k(), hyp.l());
    Ok(match kind {
        VolumeComparison::BallVolume => (k * (r2 * r2 - r1 * r1) + 2.0 * l * (r2 - r1)).exp(),
        VolumeComparison::AreaElement => {
            (2.0 * l * r2 + k * r2 * r2).exp() * (r2 / r1).powf(hyp.m() - 1.0)
        }
    })
}

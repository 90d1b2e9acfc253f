//! Confronts every inequality of the bound chain with discrete data and
//! collects the outcomes in a [`VerificationReport`].

mod checks;
mod wz;

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bounds::GeometricHypotheses;
use crate::error::{Error, Result};
use crate::models::{hypotheses_for, sample_potential, ModelManifold, PotentialSpec};
use crate::operators::OperatorPair;
use crate::solver::{lowest_eigenpairs, Spectrum};

pub use checks::{check_gradient_estimates, check_sobolev, check_volume_comparison, run_bound_chain};
pub use wz::{check_wz_lemma, wz_trials, WzStats, WZ_MAX_LENGTH};

pub const MAX_K: usize = 200;
pub const MAX_GRADIENT_K: usize = 30;
pub const MAX_SOBOLEV_TRIALS: usize = 1000;
pub const MAX_WZ_TRIALS: usize = 10_000;
pub const COMBINATION_TRIALS: usize = 20;
pub const VOLUME_CENTERS: usize = 8;
pub const ISOPERIMETRIC_CUTS: usize = 31;

/// Relative slack granted to checks whose data comes from a discretization.
pub const DISCRETIZATION_SLACK: f64 = 1.05;

pub const ANCHORS: [&str; 10] = [
    "Lemma 2.2",
    "Theorem 2.3",
    "Theorem 2.4",
    "Corollary 2.8",
    "Theorem 2.9",
    "Prop 3.1",
    "Prop 3.3",
    "Lemma 3.4",
    "Lemma 3.5",
    "Theorem 3.6",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slack {
    Discretization,
    Exact,
}

impl Slack {
    fn log_tolerance(self) -> f64 {
        match self {
            Slack::Discretization => DISCRETIZATION_SLACK.ln(),
            Slack::Exact => 0.0,
        }
    }
}

/// One inequality `lhs >= rhs`. `lhs` is always the side the inequality
/// asserts to be larger, so the margin is positive when there is room.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub anchor: String,
    pub lhs_log: f64,
    pub rhs_log: f64,
    pub margin_log: f64,
    pub pass: bool,
}

/// Logs of exact zeros (or overflowed infinities) become large finite values.
const LOG_CLAMP: f64 = 1e300;

fn finite_log(x: f64) -> f64 {
    if x.is_nan() {
        x
    } else {
        x.clamp(-LOG_CLAMP, LOG_CLAMP)
    }
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, anchor: &str, lhs_log: f64, rhs_log: f64, slack: Slack) -> Self {
        let (lhs_log, rhs_log) = (finite_log(lhs_log), finite_log(rhs_log));
        let margin_log = lhs_log - rhs_log;
        Self {
            name: name.into(),
            anchor: anchor.to_string(),
            lhs_log,
            rhs_log,
            margin_log,
            pass: margin_log >= -slack.log_tolerance(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDescriptor {
    pub spec: String,
    pub potential: String,
    pub vertex_count: usize,
    pub diameter: f64,
    pub volume: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub model: Option<ModelDescriptor>,
    pub hypotheses: Option<GeometricHypotheses>,
    pub checks: Vec<CheckRecord>,
    pub pass: bool,
    pub runtime_ms: BTreeMap<String, f64>,
}

impl VerificationReport {
    pub fn new(model: Option<ModelDescriptor>, hypotheses: Option<GeometricHypotheses>) -> Self {
        Self {
            model,
            hypotheses,
            checks: Vec::new(),
            pass: false,
            runtime_ms: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, record: CheckRecord) {
        self.checks.push(record);
    }

    /// Recomputes the overall flag; an empty report does not pass.
    pub fn finalize(&mut self) {
        self.pass = !self.checks.is_empty() && self.checks.iter().all(|c| c.pass);
    }

    pub fn first_failure(&self) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| !c.pass)
    }

    pub fn min_margin(&self) -> Option<f64> {
        self.checks.iter().map(|c| c.margin_log).min_by(f64::total_cmp)
    }

    pub fn anchors(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self.checks.iter().map(|c| c.anchor.as_str()).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn checks_with_anchor<'a>(&'a self, anchor: &'a str) -> impl Iterator<Item = &'a CheckRecord> + 'a {
        self.checks.iter().filter(move |c| c.anchor == anchor)
    }

    pub fn merge(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
        for (k, v) in other.runtime_ms {
            *self.runtime_ms.entry(k).or_insert(0.0) += v;
        }
        if self.model.is_none() {
            self.model = other.model;
        }
        if self.hypotheses.is_none() {
            self.hypotheses = other.hypotheses;
        }
    }

    fn time<T>(&mut self, key: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        *self.runtime_ms.entry(key.to_string()).or_insert(0.0) += start.elapsed().as_secs_f64() * 1e3;
        out
    }
}

/// A run that stopped early, with the checks completed so far.
#[derive(Debug)]
pub struct RunFailure {
    pub report: Box<VerificationReport>,
    pub error: Error,
}

impl fmt::Display for RunFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (after {} completed checks)", self.error, self.report.checks.len())
    }
}

impl std::error::Error for RunFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

pub type RunResult = std::result::Result<VerificationReport, RunFailure>;

fn fail(mut report: VerificationReport, error: Error) -> RunFailure {
    report.finalize();
    report.pass = false;
    RunFailure {
        report: Box::new(report),
        error,
    }
}

/// Operators, potential and certified hypotheses for one model.
pub(crate) struct Workspace<'a> {
    pub model: &'a ModelManifold,
    pub hyp: GeometricHypotheses,
    pub ops: OperatorPair,
}

impl<'a> Workspace<'a> {
    pub fn new(model: &'a ModelManifold, potential: PotentialSpec, report: &mut VerificationReport) -> Result<Self> {
        let potential = sample_potential(model, potential)?;
        let hyp = hypotheses_for(model, &potential)?;
        let ops = report.time("assemble", || OperatorPair::for_model(model))?;
        report.model = Some(ModelDescriptor {
            spec: model.spec.to_string(),
            potential: potential.spec.to_string(),
            vertex_count: model.vertex_count(),
            diameter: model.reference.diameter,
            volume: model.reference.volume,
        });
        report.hypotheses = Some(hyp);
        Ok(Self {
            model,
            hyp,
            ops,
        })
    }

    pub fn volume(&self) -> f64 {
        self.hyp.volume.expect("certified hypotheses carry the volume")
    }

    pub fn solve(&self, k: usize, tol: f64, seed: u64, report: &mut VerificationReport) -> Result<Spectrum> {
        report.time("solve", || lowest_eigenpairs(&self.ops, k, tol, seed))
    }
}

/// Everything at once: bound chain, gradient, Sobolev and volume checks on
/// the model, and the sequence lemma. The spectrum is computed once.
pub fn full_verification(model: &ModelManifold, potential: PotentialSpec, k_max: usize, tol: f64, seed: u64) -> RunResult {
    let mut report = VerificationReport::new(None, None);
    if k_max == 0 || k_max > MAX_K {
        return Err(fail(report, Error::Precondition(format!("k_max = {k_max} outside 1..={MAX_K}"))));
    }
    let ws = match Workspace::new(model, potential, &mut report) {
        Ok(ws) => ws,
        Err(e) => return Err(fail(report, e)),
    };
    let grad_k = k_max.min(10);
    let spectrum = match ws.solve(k_max, tol, seed, &mut report) {
        Ok(s) => s,
        Err(e) => return Err(fail(report, e)),
    };
    let steps: [&dyn Fn(&mut VerificationReport) -> Result<()>; 4] = [
        &|r| checks::bound_chain_records(&ws, &spectrum, k_max, r),
        &|r| checks::gradient_records(&ws, &spectrum, grad_k, seed, r),
        &|r| checks::sobolev_records(&ws, 100, seed, r),
        &|r| checks::volume_records(&ws, 10, seed, r),
    ];
    for step in steps {
        if let Err(e) = step(&mut report) {
            return Err(fail(report, e));
        }
    }
    match check_wz_lemma(1000, seed) {
        Ok(wz) => report.merge(wz),
        Err(f) => {
            report.merge(*f.report);
            return Err(fail(report, f.error));
        }
    }
    report.finalize();
    Ok(report)
}

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{fail, CheckRecord, RunResult, Slack, VerificationReport, MAX_WZ_TRIALS};
use crate::bounds::wz_recursion_constant;
use crate::error::{Error, Result};

pub const WZ_MAX_LENGTH: usize = 50;

/// Outcome counts of the brute-force sequence test.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WzStats {
    pub trials: usize,
    /// Sequences satisfying the sum hypothesis at every index.
    pub non_vacuous: usize,
    pub vacuous: usize,
    pub counterexamples: usize,
    pub min_margin_log: Option<f64>,
}

struct Trial {
    m: u32,
    c3: f64,
    lambda: Vec<f64>,
}

fn generate(rng: &mut ChaCha8Rng) -> Trial {
    let m = rng.random_range(1..=6u32);
    let len = rng.random_range(1..=WZ_MAX_LENGTH);
    let first = rng.random_range(-2.0f64..2.0).exp();
    let mut lambda = Vec::with_capacity(len);
    match rng.random_range(0..3) {
        0 => {
            let p = rng.random_range(0.0..2.0);
            let mut prev = 0.0f64;
            for k in 1..=len {
                let jitter = rng.random_range(0.8..1.25);
                prev = prev.max(first * (k as f64).powf(p) * jitter);
                lambda.push(prev);
            }
        }
        1 => {
            let mut cur = first;
            for _ in 0..len {
                lambda.push(cur);
                cur += first * 3.0 * rng.random::<f64>().powi(3);
            }
        }
        _ => lambda.resize(len, first),
    }
    // the smallest C3 for which the hypothesis holds, scaled by a factor in [1/2, 4]
    let exponent = m as f64 / 2.0 + 1.0;
    let mut sum = 0.0;
    let mut tight = 0f64;
    for &l in &lambda {
        sum += l;
        tight = tight.max(sum / l.powf(exponent));
    }
    let factor = rng.random_range(0.5f64.ln()..4f64.ln()).exp();
    Trial { m, c3: tight * factor, lambda }
}

fn hypothesis_holds(t: &Trial) -> bool {
    let exponent = t.m as f64 / 2.0 + 1.0;
    let mut sum = 0.0;
    t.lambda.iter().all(|&l| {
        sum += l;
        sum <= t.c3 * l.powf(exponent)
    })
}

fn run(trials: usize, seed: u64) -> Result<(WzStats, Vec<CheckRecord>)> {
    if trials == 0 || trials > MAX_WZ_TRIALS {
        return Err(Error::Precondition(format!("trials = {trials} outside 1..={MAX_WZ_TRIALS}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x777a_6c65);
    let mut stats = WzStats {
        trials,
        ..WzStats::default()
    };
    let mut records = Vec::new();
    for i in 0..trials {
        let t = generate(&mut rng);
        if !hypothesis_holds(&t) {
            stats.vacuous += 1;
            continue;
        }
        stats.non_vacuous += 1;
        let c4 = wz_recursion_constant(t.m, t.c3, t.lambda[0])?;
        let (lhs, rhs) = t
            .lambda
            .iter()
            .enumerate()
            .map(|(idx, &l)| (l.ln(), c4.ln() + 2.0 / t.m as f64 * ((idx + 1) as f64).ln()))
            .min_by(|a, b| (a.0 - a.1).total_cmp(&(b.0 - b.1)))
            .expect("sequences are nonempty");
        let record = CheckRecord::new(format!("wz_sequence[{i}]"), "Lemma 3.5", lhs, rhs, Slack::Exact);
        if !record.pass {
            stats.counterexamples += 1;
        }
        stats.min_margin_log = Some(stats.min_margin_log.map_or(record.margin_log, |m| m.min(record.margin_log)));
        records.push(record);
    }
    Ok((stats, records))
}

/// Counts for `trials` seeded sequences.
pub fn wz_trials(trials: usize, seed: u64) -> Result<WzStats> {
    run(trials, seed).map(|(stats, _)| stats)
}

/// One record per sequence that satisfies the hypothesis; vacuous sequences
/// are counted by [`wz_trials`] but carry no record.
pub fn check_wz_lemma(trials: usize, seed: u64) -> RunResult {
    let mut report = VerificationReport::new(None, None);
    let start = Instant::now();
    match run(trials, seed) {
        Ok((_, records)) => {
            report.checks = records;
            report.runtime_ms.insert("checks".into(), start.elapsed().as_secs_f64() * 1e3);
            report.finalize();
            Ok(report)
        }
        Err(e) => Err(fail(report, e)),
    }
}

//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use sbl_core::bounds::{cheeger_lambda1, in_alpha_lower_bound, lambda1_lower_bound, GeometricHypotheses};
use sbl_core::models::{ModelManifold, ModelSpec, PotentialSpec};
use sbl_core::operators::{ball_volume_profile, BallMetric, OperatorPair};
use sbl_core::solver::lowest_eigenpairs;
use sbl_core::verify::{
    check_gradient_estimates, check_sobolev, check_volume_comparison, run_bound_chain, wz_trials, VerificationReport,
};
use std::f64::consts::PI;
use std::panic::{self, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::Instant;

type Outcome = Result<String, String>;

const SPHERE: ModelSpec = ModelSpec::Sphere { subdivisions: 4 };
const TORUS2: ModelSpec = ModelSpec::Torus { dimension: 2, points_per_axis: 64 };
const TORUS3: ModelSpec = ModelSpec::Torus { dimension: 3, points_per_axis: 24 };

const CATALOG: [(ModelSpec, PotentialSpec, usize); 3] = [
    (SPHERE, PotentialSpec::Zero, 50),
    (TORUS2, PotentialSpec::AxialCosine(0.5), 50),
    (TORUS3, PotentialSpec::Zero, 30),
];

fn model(spec: ModelSpec) -> ModelManifold {
    ModelManifold::build(spec).expect("model builds")
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn report_ok(report: &VerificationReport) -> Result<(), String> {
    match report.first_failure() {
        None if report.pass => Ok(()),
        None => Err("report did not pass".into()),
        Some(c) => Err(format!("{} ({}) margin {:.4}", c.name, c.anchor, c.margin_log)),
    }
}

fn sphere_spectrum() -> Outcome {
    let start = Instant::now();
    let m = model(SPHERE);
    let ops = OperatorPair::for_model(&m).map_err(|e| e.to_string())?;
    let s = lowest_eigenpairs(&ops, 12, 1e-8, 0).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let exact: Vec<f64> = (1..=3u32).flat_map(|l| vec![(l * (l + 1)) as f64; 2 * l as usize + 1]).take(12).collect();
    let worst = s.eigenvalues[1..=12]
        .iter()
        .zip(&exact)
        .map(|(a, b)| (a - b).abs() / b)
        .fold(0.0, f64::max);
    let l1 = (s.eigenvalues[1] - 2.0).abs() / 2.0;
    ensure(
        l1 < 0.02 && worst < 0.05 && secs < 30.0,
        format!("lambda1 = {:.8} (rel err {l1:.2e}), worst of 12 rel err {worst:.4}, {secs:.2} s", s.eigenvalues[1]),
    )
}

fn torus_spectrum() -> Outcome {
    let start = Instant::now();
    let m = model(TORUS2);
    let ops = OperatorPair::for_model(&m).map_err(|e| e.to_string())?;
    let s = lowest_eigenpairs(&ops, 19, 1e-10, 0).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let n = 64i32;
    let h = 2.0 * PI / n as f64;
    let wave = |k: i32| 4.0 * (PI * k as f64 / n as f64).sin().powi(2) / (h * h);
    let mut stencil = Vec::new();
    let mut lattice = Vec::new();
    for a in -n / 2..n / 2 {
        for b in -n / 2..n / 2 {
            stencil.push(wave(a) + wave(b));
            lattice.push((a * a + b * b) as f64);
        }
    }
    stencil.sort_by(f64::total_cmp);
    lattice.sort_by(f64::total_cmp);
    let rel = |a: f64, b: f64| if b == 0.0 { a.abs() } else { (a - b).abs() / b };
    let vs_stencil = s.eigenvalues.iter().zip(&stencil).map(|(&a, &b)| rel(a, b)).fold(0.0, f64::max);
    let vs_lattice = s.eigenvalues.iter().zip(&lattice).skip(1).map(|(&a, &b)| rel(a, b)).fold(0.0, f64::max);
    ensure(
        s.len() == 20 && vs_stencil <= 1e-8 && vs_lattice <= 0.01 && secs < 10.0,
        format!("20 eigenvalues, stencil rel err {vs_stencil:.2e}, lattice rel err {vs_lattice:.4}, {secs:.2} s"),
    )
}

fn sphere_first_eigenvalue_bound(chains: &[VerificationReport]) -> Outcome {
    let rec = chains[0]
        .checks_with_anchor("Theorem 2.9")
        .next()
        .ok_or("no first-eigenvalue record")?;
    let c0 = rec.rhs_log.exp();
    let c0_ok = (c0 - 3.958e-8).abs() / 3.958e-8 < 1e-3;
    ensure(
        rec.pass && c0_ok && (rec.margin_log - 17.7).abs() <= 0.1,
        format!("c0 = {c0:.4e}, log margin {:.4}", rec.margin_log),
    )
}

fn chains_with_anchor(chains: &[VerificationReport], anchor: &str, secs: f64, limit: Option<f64>) -> Outcome {
    let mut parts = Vec::new();
    for ((spec, _, k_max), report) in CATALOG.iter().zip(chains) {
        let recs: Vec<_> = report.checks_with_anchor(anchor).collect();
        if recs.is_empty() || recs.iter().any(|c| !c.pass) {
            let bad = recs.iter().find(|c| !c.pass).map(|c| c.name.clone()).unwrap_or_default();
            return Err(format!("{spec}: {} records, failing {bad}", recs.len()));
        }
        let min = recs.iter().map(|c| c.margin_log).fold(f64::INFINITY, f64::min);
        parts.push(format!("{spec} k<={k_max}: {} ok, min margin {min:.3}", recs.len()));
    }
    if let Some(limit) = limit {
        parts.push(format!("{secs:.1} s"));
        return ensure(secs < limit, parts.join("; "));
    }
    Ok(parts.join("; "))
}

fn gradients() -> Outcome {
    let mut parts = Vec::new();
    let mut sphere_max = f64::NAN;
    for (spec, potential, _) in CATALOG {
        let report = check_gradient_estimates(&model(spec), potential, 10, 1e-8, 0).map_err(|f| f.error.to_string())?;
        report_ok(&report).map_err(|e| format!("{spec}: {e}"))?;
        if spec == SPHERE {
            let rec = report
                .checks
                .iter()
                .find(|c| c.name == "gradient_eigenfunction[j=1]")
                .ok_or("no j=1 record")?;
            if rec.rhs_log >= rec.lhs_log {
                return Err("sphere j=1 gradient not strictly below bound".into());
            }
            sphere_max = rec.rhs_log.exp();
        }
        parts.push(format!("{spec}: {} ok", report.checks.len()));
    }
    let target = 3.0 / (4.0 * PI);
    let err = (sphere_max - target).abs() / target;
    parts.push(format!("sphere max|grad phi1|^2 = {sphere_max:.5} (rel err {err:.4})"));
    ensure(err < 0.03, parts.join("; "))
}

fn sobolev() -> Outcome {
    let mut parts = Vec::new();
    for spec in [TORUS3, SPHERE] {
        let report = check_sobolev(&model(spec), PotentialSpec::Zero, 100, 0).map_err(|f| f.error.to_string())?;
        report_ok(&report).map_err(|e| format!("{spec}: {e}"))?;
        parts.push(format!("{spec}: {} fields, min margin {:.3}", report.checks.len(), report.min_margin().unwrap_or(f64::NAN)));
    }
    ensure(true, parts.join("; "))
}

fn volumes() -> Outcome {
    let mut parts = Vec::new();
    for spec in [SPHERE, TORUS2] {
        let report = check_volume_comparison(&model(spec), 10, 0).map_err(|f| f.error.to_string())?;
        report_ok(&report).map_err(|e| format!("{spec}: {e}"))?;
        parts.push(format!("{spec}: {} pairs, min margin {:.4}", report.checks.len(), report.min_margin().unwrap_or(f64::NAN)));
    }
    let m = model(SPHERE);
    let ops = OperatorPair::for_model(&m).map_err(|e| e.to_string())?;
    let half = ball_volume_profile(&m, &ops, 0, &[PI / 2.0], BallMetric::Intrinsic).map_err(|e| e.to_string())?;
    let err = (half[0].measured_volume - 2.0 * PI).abs() / (2.0 * PI);
    parts.push(format!("vol(B(pi/2)) = {:.4} (rel err {err:.4})", half[0].measured_volume));
    ensure(err < 0.05, parts.join("; "))
}

fn sequences() -> Outcome {
    let start = Instant::now();
    let stats = wz_trials(1000, 0).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    ensure(
        stats.trials == 1000 && stats.counterexamples == 0 && stats.non_vacuous >= 300 && secs < 5.0,
        format!(
            "{} sequences, {} non-vacuous, {} counterexamples, {secs:.2} s",
            stats.trials, stats.non_vacuous, stats.counterexamples
        ),
    )
}

fn composition() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let m = rng.random_range(2..=6u32);
        let hyp = GeometricHypotheses::new(
            m,
            rng.random_range(0.0..5.0),
            rng.random_range(0.0..5.0),
            rng.random_range(0.05..20.0),
            Some(rng.random_range(0.01..1000.0)),
        )
        .map_err(|e| e.to_string())?;
        let in1 = in_alpha_lower_bound(&hyp, 1.0, hyp.diameter_upper, hyp.volume.unwrap()).map_err(|e| e.to_string())?;
        let composed = cheeger_lambda1(in1).log_value();
        let direct = lambda1_lower_bound(&hyp).map_err(|e| e.to_string())?.log_value();
        worst = worst.max((composed - direct).abs() / direct.abs().max(f64::MIN_POSITIVE));
    }
    ensure(worst <= 1e-12, format!("1000 tuples, worst relative log difference {worst:.2e}"))
}

fn deterministic_cli() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for run in 0..2 {
        let path = dir.path().join(format!("run{run}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_sbl"))
            .args(["verify", "--model", "sphere:4", "--kmax", "50", "--seed", "7", "--out"])
            .arg(&path)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!("sbl verify exited with {}", status.status));
        }
        let mut json: serde_json::Value =
            serde_json::from_slice(&std::fs::read(&path).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        json.as_object_mut().ok_or("report is not an object")?.remove("runtime_ms");
        outputs.push(serde_json::to_vec(&json).map_err(|e| e.to_string())?);
    }
    ensure(outputs[0] == outputs[1], format!("two runs, {} bytes each after dropping timings", outputs[0].len()))
}

fn run(index: usize, title: &str, f: impl FnOnce() -> Outcome) -> bool {
    let result = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let (tag, detail) = match &result {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    println!("{tag} criterion {index:>2} {title}: {detail}");
    result.is_ok()
}

fn main() -> ExitCode {
    let mut ok = true;
    ok &= run(1, "sphere spectrum", sphere_spectrum);
    ok &= run(2, "torus spectrum", torus_spectrum);

    let start = Instant::now();
    let chains: Vec<VerificationReport> = CATALOG
        .iter()
        .filter_map(|&(spec, potential, k_max)| match run_bound_chain(&model(spec), potential, k_max, 1e-8, 0) {
            Ok(r) => Some(r),
            Err(f) => {
                println!("bound chain on {spec} errored: {}", f.error);
                None
            }
        })
        .collect();
    let chain_secs = start.elapsed().as_secs_f64();
    let have_chains = chains.len() == CATALOG.len();
    let missing = || Err::<String, String>("bound chain did not complete".into());

    ok &= run(3, "sphere first-eigenvalue bound", || {
        if have_chains { sphere_first_eigenvalue_bound(&chains) } else { missing() }
    });
    ok &= run(4, "eigenvalue growth bound", || {
        if have_chains { chains_with_anchor(&chains, "Theorem 3.6", chain_secs, Some(120.0)) } else { missing() }
    });
    ok &= run(5, "eigenvalue sum bound", || {
        if have_chains { chains_with_anchor(&chains, "Lemma 3.4", chain_secs, None) } else { missing() }
    });
    ok &= run(6, "gradient estimates", gradients);
    ok &= run(7, "Sobolev inequality", sobolev);
    ok &= run(8, "volume comparison", volumes);
    ok &= run(9, "sequence lemma", sequences);
    ok &= run(10, "isoperimetric-Cheeger composition", composition);
    ok &= run(11, "deterministic verify output", deterministic_cli);

    println!("acceptance: {}", if ok { "PASS" } else { "FAIL" });
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

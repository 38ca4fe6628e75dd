//! Acceptance run: one PASS/FAIL line per criterion, then a single assert.
//! Run with `cargo test -p argstab --test acceptance -- --nocapture`.

use std::time::Instant;

use argstab::critical::{self, sigma_from_crossing};
use argstab::model::{GridParams, TWO_PI};
use argstab::pipeline::{analyze_table, AnalysisOptions};
use argstab::sweep::{sweep, FrequencyPlan, SweepOptions};
use argstab::synth::{self, standard_grid, SuiteSystem, SUITE_SEED};
use argstab::trajectory::{DeterminantTrajectory, Form};
use argstab::verify::{self, gnc_from_table, oracle_rhp_zeros};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SUITE_SIZE: usize = 120;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn plan(step: f64) -> FrequencyPlan {
    FrequencyPlan::uniform(-1000.0, 1000.0, step, 50.0)
}

fn within(reference: Complex64, est: Complex64) -> bool {
    (est.re - reference.re).abs() <= (0.05 * reference.re.abs()).max(0.05)
        && (est.im - reference.im).abs() <= 1.0
}

fn table_v() -> Outcome {
    let rows = [
        (-1.051, -0.967, 1.715, -0.262),
        (3.327, -0.985, 1.131, 1.456),
        (4.397, -1.012, 0.772, 2.747),
    ];
    let t0 = Instant::now();
    let got: Vec<f64> = rows
        .iter()
        .map(|&(re, a, b, _)| sigma_from_crossing(re, a, b))
        .collect();
    let dt = t0.elapsed().as_secs_f64();
    let ok = rows.iter().zip(&got).all(|(r, g)| (g - r.3).abs() <= 0.005);
    outcome(
        ok && dt < 1e-3,
        format!(
            "sigma_o = {:.4}, {:.4}, {:.4} in {:.1} us",
            got[0],
            got[1],
            got[2],
            dt * 1e6
        ),
    )
}

struct SuiteRun {
    sys: SuiteSystem,
    oracle: usize,
    oracle_zero: Complex64,
    idta: i64,
    gnc: i64,
    estimate: Option<Complex64>,
}

fn run_suite(grid: &GridParams, systems: &[SuiteSystem]) -> Vec<SuiteRun> {
    let p = plan(1.0);
    systems
        .iter()
        .map(|s| {
            let y = s.device.admittance(grid).unwrap();
            let o = oracle_rhp_zeros(&y, grid).unwrap();
            let table = sweep(&y, &p, &SweepOptions::default()).unwrap();
            let a =
                analyze_table(grid, &table, Form::Admittance, &AnalysisOptions::default()).unwrap();
            let g = gnc_from_table(grid, &table).unwrap();
            SuiteRun {
                sys: s.clone(),
                oracle: o.rhp_zero_count,
                oracle_zero: o.critical_zero.unwrap(),
                idta: a.verdict.winding,
                gnc: g.winding,
                estimate: a.critical.map(|c| c.zero()),
            }
        })
        .collect()
}

fn oracle_agreement(runs: &[SuiteRun], secs: f64) -> Outcome {
    let bad: Vec<_> = runs
        .iter()
        .filter(|r| !(r.idta == r.gnc && r.gnc == r.oracle as i64))
        .map(|r| {
            format!(
                "{} idta {} gnc {} oracle {}",
                r.sys.id, r.idta, r.gnc, r.oracle
            )
        })
        .collect();
    let mix = [0, 1, 2].map(|n| runs.iter().filter(|r| r.oracle == n).count());
    outcome(
        bad.is_empty() && runs.len() >= 100 && secs < 60.0,
        format!(
            "{}/{} agree, rhp mix {:?}, {:.1} s {}",
            runs.len() - bad.len(),
            runs.len(),
            mix,
            secs,
            bad.join("; ")
        ),
    )
}

fn pole_accuracy(runs: &[SuiteRun]) -> Outcome {
    let eligible: Vec<_> = runs
        .iter()
        .filter(|r| {
            r.oracle_zero.re.abs() <= 5.0 && r.oracle_zero.im > 2.0 && r.oracle_zero.im < 6000.0
        })
        .collect();
    let mut worst: f64 = 0.0;
    let bad: Vec<_> = eligible
        .iter()
        .filter(|r| {
            let Some(e) = r.estimate else { return true };
            worst = worst.max((e.re - r.oracle_zero.re).abs());
            !within(r.oracle_zero, e)
        })
        .map(|r| {
            format!(
                "{} oracle {:.4} est {:?}",
                r.sys.id, r.oracle_zero, r.estimate
            )
        })
        .collect();
    outcome(
        bad.is_empty() && !eligible.is_empty(),
        format!(
            "{}/{} within tolerance, worst |dsigma| {:.4} {}",
            eligible.len() - bad.len(),
            eligible.len(),
            worst,
            bad.join("; ")
        ),
    )
}

fn local_model_recovery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let omegas: Vec<f64> = (-200..=200).map(|k| TWO_PI * k as f64).collect();
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..50 {
        let z = Complex64::new(
            rng.random_range(-3.0..3.0),
            rng.random_range(-1000.0..1000.0),
        );
        let slope = Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let t = DeterminantTrajectory::from_fn(&omegas, Form::Admittance, |w| {
            (Complex64::new(0.0, w) - z) * slope
        })
        .unwrap();
        match critical::estimate(&t, &Default::default()) {
            Ok(Some(e)) => worst = worst.max((e.zero() - z).norm()),
            _ => failures += 1,
        }
    }
    outcome(
        failures == 0 && worst < 1e-9,
        format!("max |dz| {worst:.2e}, {failures} failures"),
    )
}

fn estimate_at_step(
    grid: &GridParams,
    dev: &synth::FactoredDevice,
    step: f64,
) -> Option<Complex64> {
    let y = dev.admittance(grid).unwrap();
    let table = sweep(&y, &plan(step), &SweepOptions::default()).unwrap();
    analyze_table(grid, &table, Form::Admittance, &AnalysisOptions::default())
        .unwrap()
        .critical
        .map(|c| c.zero())
}

fn interval_monotonicity(grid: &GridParams) -> Outcome {
    let steps = [2.0, 1.0, 0.5];
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, dev) in [
        ("unstable", synth::interval_study(0.26)),
        ("stable", synth::interval_study_stable()),
    ] {
        let truth = dev.critical_zero();
        let est: Vec<Complex64> = steps
            .iter()
            .map(|&h| estimate_at_step(grid, &dev, h).unwrap())
            .collect();
        let err: Vec<f64> = est.iter().map(|e| (e.re - truth.re).abs()).collect();
        let monotone = err[0] > err[1] && err[1] >= err[2];
        let flip = est[0].re.signum() != truth.re.signum()
            && est[1].re.signum() == truth.re.signum()
            && est[2].re.signum() == truth.re.signum();
        ok &= monotone && flip;
        lines.push(format!(
            "{name}: sigma {:.3} -> {:.3}/{:.3}/{:.3}",
            truth.re, est[0].re, est[1].re, est[2].re
        ));
    }
    outcome(ok, lines.join(", "))
}

fn misjudgment(grid: &GridParams) -> Outcome {
    let y = synth::off_diagonal_misjudgment().admittance(grid).unwrap();
    let table = sweep(&y, &plan(1.0), &SweepOptions::default()).unwrap();
    let opts = AnalysisOptions::default();
    let full = analyze_table(grid, &table, Form::Admittance, &opts)
        .unwrap()
        .verdict;
    let trunc = analyze_table(grid, &table.diagonal_truncation(), Form::Admittance, &opts)
        .unwrap()
        .verdict;
    let of = oracle_rhp_zeros(&y, grid).unwrap().rhp_zero_count;
    let ot = oracle_rhp_zeros(&y.diagonal_truncation(), grid)
        .unwrap()
        .rhp_zero_count;
    outcome(
        !full.stable && trunc.stable && of == 1 && ot == 0,
        format!(
            "full stable={} (oracle {of}), truncated stable={} (oracle {ot})",
            full.stable, trunc.stable
        ),
    )
}

fn form_consistency(grid: &GridParams, systems: &[SuiteSystem]) -> Outcome {
    let p = plan(0.1);
    let opts = AnalysisOptions::default();
    let mut checked = 0;
    let mut bad = Vec::new();
    for s in systems {
        let y = s.device.admittance(grid).unwrap();
        let r = verify::consistency_check(&y, grid, &p, &opts, &Default::default()).unwrap();
        if !r.dropped.is_empty() || !r.det_y_rhp_zeros.is_empty() {
            continue;
        }
        checked += 1;
        let (a, z) = (&r.admittance, &r.impedance);
        let poles = match (&a.critical, &z.critical) {
            (Some(x), Some(y)) => within(x.zero(), y.zero()),
            (None, None) => true,
            _ => false,
        };
        if a.verdict.stable != z.verdict.stable || a.verdict.winding != z.verdict.winding || !poles
        {
            bad.push(s.id.clone());
        }
    }
    outcome(
        bad.is_empty() && checked > 0,
        format!("{}/{checked} agree {}", checked - bad.len(), bad.join(" ")),
    )
}

fn performance(grid: &GridParams, systems: &[SuiteSystem]) -> Outcome {
    let y = systems[1].device.admittance(grid).unwrap();
    let table = sweep(
        &y,
        &FrequencyPlan::uniform(-1249.75, 1249.75, 0.5, 50.0),
        &SweepOptions::default(),
    )
    .unwrap();
    let r = verify::compare_timing(grid, &table, 5).unwrap();
    outcome(
        r.points >= 5000
            && r.apsam_s < r.gnc_s
            && r.gnc_s < 1.0
            && r.apsam_winding == r.gnc_winding,
        format!(
            "{} points: apsam {:.2} ms, gnc {:.2} ms",
            r.points,
            r.apsam_s * 1e3,
            r.gnc_s * 1e3
        ),
    )
}

fn noise_robustness(grid: &GridParams, systems: &[SuiteSystem]) -> Outcome {
    let p = plan(1.0);
    let eligible: Vec<_> = systems
        .iter()
        .filter(|s| s.device.critical_zero().re.abs() >= 0.1)
        .collect();
    let trials = 200;
    let mut correct = 0;
    for k in 0..trials {
        let s = eligible[k % eligible.len()];
        let y = s.device.admittance(grid).unwrap();
        let opts = SweepOptions {
            noise: 0.01,
            seed: 1000 + k as u64,
            ..Default::default()
        };
        let table = sweep(&y, &p, &opts).unwrap();
        let stable = analyze_table(grid, &table, Form::Admittance, &AnalysisOptions::default())
            .map(|a| a.verdict.stable)
            .ok();
        if stable == Some(s.planted_rhp == 0) {
            correct += 1;
        }
    }
    let rate = correct as f64 / trials as f64;
    outcome(
        rate >= 0.95,
        format!("{correct}/{trials} correct ({:.1}%)", rate * 100.0),
    )
}

#[test]
fn acceptance() {
    let grid = standard_grid();
    let systems = synth::suite(SUITE_SIZE, SUITE_SEED);

    let t0 = Instant::now();
    let runs = run_suite(&grid, &systems);
    let suite_secs = t0.elapsed().as_secs_f64();

    let results = [
        ("1 closed-form damping rows", table_v()),
        ("2 oracle agreement", oracle_agreement(&runs, suite_secs)),
        ("3 critical-pole accuracy", pole_accuracy(&runs)),
        ("4 exact local-model recovery", local_model_recovery()),
        ("5 interval monotonicity", interval_monotonicity(&grid)),
        ("6 off-diagonal misjudgment", misjudgment(&grid)),
        (
            "7 admittance/impedance consistency",
            form_consistency(&grid, &systems),
        ),
        ("8 performance ordering", performance(&grid, &systems)),
        ("9 noise robustness", noise_robustness(&grid, &systems)),
    ];
    for (name, o) in &results {
        println!(
            "{} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    let failed: Vec<_> = results
        .iter()
        .filter(|(_, o)| !o.pass)
        .map(|(n, _)| *n)
        .collect();
    assert!(failed.is_empty(), "failed: {failed:?}");
}

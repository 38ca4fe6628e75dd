//! Command-line front end. Each subcommand is a library function returning
//! a typed report; [`run`] prints it and maps it to an exit code.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{AnalysisConfig, DeviceSource, DeviceSpec};
use crate::critical;
use crate::error::{Error, Result};
use crate::model::{GridParams, RationalMatrix2};
use crate::pipeline::{analyze_table, Analysis};
use crate::report::{
    error_exit_code, exit, BatchReport, BatchRow, ConsistencySummary, CriticalPoleReport,
    IntervalReport, IntervalRow, OracleSummary, StabilityReport, Timings, TruncationSummary,
    Verdict, VerifyRecord, VerifyReport,
};
use crate::sweep::{sweep, FrequencyResponseTable, SweepOptions};
use crate::table_io;
use crate::trajectory::Form;
use crate::verify::{self, EigenLoci};

#[derive(Debug, Parser)]
#[command(
    name = "argstab",
    version,
    about = "Argument-principle stability assessment of 2x2 grey-box systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormArg {
    Admittance,
    Impedance,
}

impl From<FormArg> for Form {
    fn from(f: FormArg) -> Form {
        match f {
            FormArg::Admittance => Form::Admittance,
            FormArg::Impedance => Form::Impedance,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep a closed-form device and write its response table (.csv or .json).
    Sweep {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Use this scenario instead of `[device]`.
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Assess stability from a response table.
    Analyze {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        table: PathBuf,
        #[arg(long, value_enum, default_value = "admittance")]
        form: FormArg,
        /// Write report.json, trajectory.csv and idta.csv here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Print the JSON report instead of the text summary.
        #[arg(long)]
        json: bool,
    },
    /// Cross-check APSAM against the GNC, the exact oracle, the impedance
    /// form and the diagonal truncation.
    Verify {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Critical-pole error against the oracle for several sweep steps.
    Intervals {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Assess every scenario and rank them by damping.
    Batch {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

fn cfg(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

fn closed_form(spec: &DeviceSpec, grid: &GridParams) -> Result<RationalMatrix2> {
    match spec.resolve(grid).map_err(cfg)? {
        DeviceSource::Closed(m) => Ok(m),
        DeviceSource::Table(p) => Err(Error::Config(format!(
            "{} is a measured table; a closed-form device is required",
            p.display()
        ))),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub path: PathBuf,
    pub points: usize,
    pub noise: f64,
    pub seed: u64,
}

pub fn cmd_sweep(
    config: &AnalysisConfig,
    out: &Path,
    scenario: Option<&str>,
    noise: Option<f64>,
    seed: Option<u64>,
) -> Result<SweepSummary> {
    let grid = config.grid_params();
    let device = closed_form(&config.pick_device(scenario)?, &grid)?;
    let mut opts = config.sweep_options();
    if let Some(n) = noise {
        if !(n >= 0.0 && n.is_finite()) {
            return Err(Error::Config("--noise must be >= 0".into()));
        }
        opts.noise = n;
    }
    if let Some(s) = seed {
        opts.seed = s;
    }
    let mut table = sweep(&device, &config.frequency_plan(), &opts)?;
    table.meta.device_id = Some(scenario.unwrap_or("device").to_string());
    table_io::save(&table, out)?;
    Ok(SweepSummary {
        path: out.to_path_buf(),
        points: table.len(),
        noise: opts.noise,
        seed: opts.seed,
    })
}

fn load_table(path: &Path) -> Result<FrequencyResponseTable> {
    let t = table_io::load(path).map_err(|e| match e {
        Error::Io(io) => Error::MalformedTable(format!("{}: {io}", path.display())),
        other => other,
    })?;
    t.check_spans_axis()?;
    Ok(t)
}

fn analyze(
    config: &AnalysisConfig,
    table: &FrequencyResponseTable,
    form: Form,
) -> Result<Analysis> {
    analyze_table(
        &config.grid_params(),
        table,
        form,
        &config.analysis.options(),
    )
}

pub fn cmd_analyze(
    config: &AnalysisConfig,
    table_path: &Path,
    form: Form,
    out_dir: Option<&Path>,
) -> Result<StabilityReport> {
    let table = load_table(table_path)?;
    let a = analyze(config, &table, form)?;
    let report = StabilityReport::from_analysis(&a);
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        write_json(&dir.join("report.json"), &report)?;
        a.trajectory
            .write_csv(BufWriter::new(File::create(dir.join("trajectory.csv"))?))?;
        a.curve
            .write_csv(BufWriter::new(File::create(dir.join("idta.csv"))?))?;
    }
    Ok(report)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

pub fn write_loci_csv<W: Write>(loci: &EigenLoci, mut w: W) -> Result<()> {
    writeln!(w, "omega_rad_s,l1_re,l1_im,l2_re,l2_im")?;
    for (k, om) in loci.omegas.iter().enumerate() {
        let (a, b) = (loci.traces[0][k], loci.traces[1][k]);
        writeln!(
            w,
            "{om:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            a.re, a.im, b.re, b.im
        )?;
    }
    Ok(())
}

fn verdict_of(a: &Analysis) -> Verdict {
    StabilityReport::from_analysis(a).verdict
}

fn verify_one(
    config: &AnalysisConfig,
    name: &str,
    device: &RationalMatrix2,
    out_dir: Option<&Path>,
) -> Result<VerifyRecord> {
    let grid = config.grid_params();
    let opts = config.analysis.options();
    let table = sweep(device, &config.frequency_plan(), &SweepOptions::default())?;
    let full = analyze(config, &table, Form::Admittance)?;
    let loci = verify::eigen_loci(&grid, &table)?;
    let gnc = verify::gnc_verdict(&loci)?;
    let oracle = verify::oracle_rhp_zeros(device, &grid)?;

    let det_y_rhp = verify::det_y_rhp_zeros(device)?;
    let not_applicable = |reason: String| ConsistencySummary {
        applicable: false,
        agree: true,
        impedance_verdict: None,
        impedance_winding: None,
        dropped_points: 0,
        mismatches: vec![reason],
    };
    let consistency = if !det_y_rhp.is_empty() {
        not_applicable(format!(
            "det Y has {} RHP zero(s); impedance form not comparable",
            det_y_rhp.len()
        ))
    } else {
        let plan = config
            .plan
            .with_step(config.verify.consistency_step_hz, config.grid.f1_hz);
        let r = verify::consistency_check(device, &grid, &plan, &opts, &config.tolerance)?;
        if !r.impedance_proper {
            not_applicable("impedance-form determinant grows without bound; not comparable".into())
        } else {
            ConsistencySummary {
                applicable: true,
                agree: r.agree,
                impedance_verdict: Some(if r.impedance.verdict.marginal {
                    Verdict::Marginal
                } else if r.impedance.verdict.stable {
                    Verdict::Stable
                } else {
                    Verdict::Unstable
                }),
                impedance_winding: Some(r.impedance.verdict.winding),
                dropped_points: r.dropped.len(),
                mismatches: r.mismatches,
            }
        }
    };

    let trunc = analyze(config, &table.diagonal_truncation(), Form::Admittance)?;
    let oracle_trunc = verify::oracle_rhp_zeros(&device.diagonal_truncation(), &grid)?;
    let truncation = TruncationSummary {
        full_stable: full.verdict.stable,
        truncated_stable: trunc.verdict.stable,
        oracle_full: oracle.rhp_zero_count,
        oracle_truncated: oracle_trunc.rhp_zero_count,
        misjudgment: full.verdict.stable != trunc.verdict.stable,
    };

    let t = verify::compare_timing(&grid, &table, config.verify.timing_repeats)?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        write_loci_csv(
            &loci,
            BufWriter::new(File::create(dir.join(format!("{name}.loci.csv")))?),
        )?;
        full.trajectory.write_csv(BufWriter::new(File::create(
            dir.join(format!("{name}.trajectory.csv")),
        )?))?;
    }

    let agreement = full.verdict.winding == gnc.winding
        && gnc.winding == oracle.rhp_zero_count as i64
        && consistency.agree
        && !full.verdict.marginal;
    Ok(VerifyRecord {
        name: name.to_string(),
        apsam_verdict: verdict_of(&full),
        apsam_winding: full.verdict.winding,
        gnc_winding: gnc.winding,
        gnc_undersampled: gnc.undersampled,
        oracle_count: oracle.rhp_zero_count,
        oracle: OracleSummary {
            rhp_zero_count: oracle.rhp_zero_count,
            rhp_zeros: oracle.zeros,
            critical_zero: oracle.critical_zero,
            warnings: oracle.warnings,
        },
        critical_pole: full.critical.as_ref().map(CriticalPoleReport::from),
        consistency,
        truncation,
        timings: Timings {
            points: t.points,
            apsam_s: t.apsam_s,
            gnc_s: t.gnc_s,
        },
        agreement,
    })
}

fn devices(config: &AnalysisConfig) -> Vec<(String, DeviceSpec)> {
    let mut out: Vec<(String, DeviceSpec)> = config
        .device
        .iter()
        .map(|d| ("device".to_string(), d.clone()))
        .collect();
    out.extend(
        config
            .all_scenarios()
            .into_iter()
            .map(|s| (s.name, s.device)),
    );
    out
}

pub fn cmd_verify(config: &AnalysisConfig, out_dir: Option<&Path>) -> Result<VerifyReport> {
    let grid = config.grid_params();
    let list = devices(config);
    if list.is_empty() {
        return Err(Error::Config(
            "nothing to verify: no [device], scenarios or suite".into(),
        ));
    }
    // resolve everything first so a raw table fails before any work is done
    let closed: Vec<(String, RationalMatrix2)> = list
        .iter()
        .map(|(n, d)| closed_form(d, &grid).map(|m| (n.clone(), m)))
        .collect::<Result<_>>()?;
    let records: Vec<VerifyRecord> = closed
        .iter()
        .map(|(n, m)| verify_one(config, n, m, out_dir))
        .collect::<Result<_>>()?;
    let agreement = records.iter().all(|r| r.agreement);
    Ok(VerifyReport { records, agreement })
}

pub fn cmd_intervals(config: &AnalysisConfig, scenario: Option<&str>) -> Result<IntervalReport> {
    let grid = config.grid_params();
    let device = closed_form(&config.pick_device(scenario)?, &grid)?;
    let reference = verify::oracle_rhp_zeros(&device, &grid)?.critical_zero;
    let mut steps = config.intervals.steps_hz.clone();
    steps.sort_by(|a, b| b.total_cmp(a));
    let mut rows = Vec::with_capacity(steps.len());
    for &h in &steps {
        let plan = config.plan.with_step(h, config.grid.f1_hz);
        let table = sweep(&device, &plan, &config.sweep_options())?;
        let a = analyze(config, &table, Form::Admittance)?;
        let unrefined = critical::estimate_unrefined(&a.trajectory)?;
        let est = a.critical.as_ref();
        let err = |f: fn(num_complex::Complex64) -> f64, v: Option<f64>| match (reference, v) {
            (Some(z), Some(v)) => Some((v - f(z)).abs()),
            _ => None,
        };
        rows.push(IntervalRow {
            step_hz: h,
            points: table.len(),
            verdict: verdict_of(&a),
            sigma_o: est.map(|e| e.sigma_o),
            omega_o_rad_s: est.map(|e| e.omega_o),
            sigma_error: err(|z| z.re, est.map(|e| e.sigma_o)),
            omega_error_rad_s: err(|z| z.im, est.map(|e| e.omega_o)),
            unrefined_sigma_o: unrefined.map(|e| e.sigma_o),
        });
    }
    let errors: Option<Vec<f64>> = rows.iter().map(|r| r.sigma_error).collect();
    let monotone = match errors {
        Some(e) if e.len() >= 2 => Some(
            e.windows(2)
                .all(|w| w[1] <= w[0] + config.intervals.monotone_tol),
        ),
        _ => None,
    };
    Ok(IntervalReport {
        reference_zero: reference,
        rows,
        monotone,
    })
}

fn batch_one(config: &AnalysisConfig, spec: &DeviceSpec) -> Result<Analysis> {
    let grid = config.grid_params();
    let table = match spec.resolve(&grid)? {
        DeviceSource::Closed(m) => sweep(&m, &config.frequency_plan(), &config.sweep_options())?,
        DeviceSource::Table(p) => load_table(&p)?,
    };
    analyze(config, &table, Form::Admittance)
}

pub fn cmd_batch(config: &AnalysisConfig) -> Result<BatchReport> {
    let scenarios = config.all_scenarios();
    if scenarios.is_empty() {
        return Err(Error::Config("batch needs at least one scenario".into()));
    }
    let results: Vec<Result<Analysis>> = std::thread::scope(|s| {
        let handles: Vec<_> = scenarios
            .iter()
            .map(|sc| s.spawn(|| batch_one(config, &sc.device)))
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Error::InvalidModel("scenario worker panicked".into())))
            })
            .collect()
    });
    let rows = scenarios
        .iter()
        .zip(results)
        .map(|(sc, r)| match r {
            Ok(a) => BatchRow {
                name: sc.name.clone(),
                verdict: Some(verdict_of(&a)),
                winding: Some(a.verdict.winding),
                critical_pole: a.critical.as_ref().map(CriticalPoleReport::from),
                error: None,
            },
            Err(e) => BatchRow {
                name: sc.name.clone(),
                verdict: None,
                winding: None,
                critical_pole: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    Ok(BatchReport::new(rows))
}

fn print_json<T: Serialize>(v: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(v).expect("report serializes")
    );
}

fn fmt_opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.prec$}"))
}

fn print_verify(r: &VerifyReport) {
    println!(
        "{:<28} {:>9} {:>5} {:>4} {:>6} {:>11} {:>11}  agree",
        "name", "verdict", "apsam", "gnc", "oracle", "impedance", "truncation"
    );
    for x in &r.records {
        let imp = match (x.consistency.applicable, x.consistency.agree) {
            (false, _) => "n/a",
            (true, true) => "agrees",
            (true, false) => "DIFFERS",
        };
        let tr = if x.truncation.misjudgment {
            "MISJUDGED"
        } else {
            "same"
        };
        println!(
            "{:<28} {:>9} {:>5} {:>4} {:>6} {:>11} {:>11}  {}",
            x.name,
            format!("{:?}", x.apsam_verdict).to_lowercase(),
            x.apsam_winding,
            x.gnc_winding,
            x.oracle_count,
            imp,
            tr,
            x.agreement
        );
    }
    println!("agreement: {}", r.agreement);
}

fn print_intervals(r: &IntervalReport) {
    match r.reference_zero {
        Some(z) => println!("oracle critical zero: {:.6} {:+.4}j (rad/s)", z.re, z.im),
        None => println!("oracle critical zero: none"),
    }
    println!(
        "{:>8} {:>7} {:>9} {:>11} {:>13} {:>11} {:>12}",
        "step_hz", "points", "verdict", "sigma_o", "omega_o_rad_s", "|dsigma|", "unrefined"
    );
    for row in &r.rows {
        match row.sigma_o {
            Some(_) => println!(
                "{:>8} {:>7} {:>9} {:>11} {:>13} {:>11} {:>12}",
                row.step_hz,
                row.points,
                format!("{:?}", row.verdict).to_lowercase(),
                fmt_opt(row.sigma_o, 5),
                fmt_opt(row.omega_o_rad_s, 3),
                fmt_opt(row.sigma_error, 5),
                fmt_opt(row.unrefined_sigma_o, 5)
            ),
            None => println!(
                "{:>8} {:>7} {:>9}  no critical zero",
                row.step_hz,
                row.points,
                format!("{:?}", row.verdict).to_lowercase()
            ),
        }
    }
    match r.monotone {
        Some(m) => println!("error non-increasing with finer step: {m}"),
        None => println!("monotonicity not assessed"),
    }
}

fn print_batch(r: &BatchReport) {
    println!(
        "{:<16} {:>9} {:>7} {:>11} {:>13} {:>9}",
        "scenario", "verdict", "winding", "sigma_o", "omega_o_rad_s", "omega_hz"
    );
    for row in &r.rows {
        match &row.error {
            Some(e) => println!("{:<16} error: {e}", row.name),
            None => {
                let c = row.critical_pole.as_ref();
                println!(
                    "{:<16} {:>9} {:>7} {:>11} {:>13} {:>9}",
                    row.name,
                    row.verdict
                        .map_or("-".into(), |v| format!("{v:?}").to_lowercase()),
                    row.winding.map_or("-".into(), |w| w.to_string()),
                    fmt_opt(c.map(|c| c.sigma_o), 5),
                    fmt_opt(c.map(|c| c.omega_o_rad_s), 3),
                    fmt_opt(c.map(|c| c.omega_o_hz), 3)
                );
            }
        }
    }
    println!("worst first: {}", r.worst_first.join(", "));
}

fn load_config(path: &Path) -> std::result::Result<AnalysisConfig, i32> {
    AnalysisConfig::load(path).map_err(|e| {
        eprintln!("error: {e}");
        exit::CONFIG
    })
}

fn fail(e: Error) -> i32 {
    eprintln!("error: {e}");
    error_exit_code(&e)
}

pub fn run(cli: Cli) -> i32 {
    let go = || -> std::result::Result<i32, i32> {
        Ok(match cli.command {
            Command::Sweep {
                config,
                out,
                scenario,
                noise,
                seed,
            } => {
                let c = load_config(&config)?;
                let s = cmd_sweep(&c, &out, scenario.as_deref(), noise, seed).map_err(fail)?;
                println!(
                    "wrote {} points to {} (noise {}, seed {})",
                    s.points,
                    s.path.display(),
                    s.noise,
                    s.seed
                );
                exit::STABLE
            }
            Command::Analyze {
                config,
                table,
                form,
                out_dir,
                json,
            } => {
                let c = load_config(&config)?;
                let r = cmd_analyze(&c, &table, form.into(), out_dir.as_deref()).map_err(fail)?;
                if json {
                    print_json(&r);
                } else {
                    print!("{}", r.summary());
                }
                r.exit_code()
            }
            Command::Verify {
                config,
                out_dir,
                json,
            } => {
                let c = load_config(&config)?;
                let r = cmd_verify(&c, out_dir.as_deref()).map_err(fail)?;
                if json {
                    print_json(&r);
                } else {
                    print_verify(&r);
                }
                r.exit_code()
            }
            Command::Intervals {
                config,
                scenario,
                json,
            } => {
                let c = load_config(&config)?;
                let r = cmd_intervals(&c, scenario.as_deref()).map_err(fail)?;
                if json {
                    print_json(&r);
                } else {
                    print_intervals(&r);
                }
                r.exit_code()
            }
            Command::Batch { config, json } => {
                let c = load_config(&config)?;
                let r = cmd_batch(&c).map_err(fail)?;
                if json {
                    print_json(&r);
                } else {
                    print_batch(&r);
                }
                r.exit_code()
            }
        })
    };
    go().unwrap_or_else(|code| code)
}

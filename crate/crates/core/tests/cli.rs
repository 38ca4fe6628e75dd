use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_argstab"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn sweep_to(config: &str, out: &Path, extra: &[&str]) -> Output {
    let cfg = fixture(config);
    let mut args = vec![
        "sweep",
        "-c",
        cfg.to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    run(&args)
}

fn analyze(config: &str, table: &Path, extra: &[&str]) -> Output {
    let cfg = fixture(config);
    let mut args = vec![
        "analyze",
        "-c",
        cfg.to_str().unwrap(),
        "-t",
        table.to_str().unwrap(),
        "--json",
    ];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn noiseless_sweep_has_planned_row_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = sweep_to("demo_stable.toml", &out, &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = std::fs::read_to_string(&out).unwrap().lines().count() - 1;
    assert_eq!(rows, 2001);
    assert!(String::from_utf8_lossy(&o.stdout).contains("2001 points"));
}

#[test]
fn seeded_noisy_sweeps_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        assert_eq!(
            code(&sweep_to(
                "demo_stable.toml",
                p,
                &["--noise", "0.01", "--seed", "42"]
            )),
            0
        );
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let c = dir.path().join("c.csv");
    sweep_to("demo_stable.toml", &c, &["--noise", "0.01", "--seed", "43"]);
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn sweep_without_device_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&sweep_to("suite.toml", &dir.path().join("x.csv"), &[])),
        2
    );
    let missing = dir.path().join("nope.toml");
    assert_eq!(
        code(&run(&[
            "sweep",
            "-c",
            missing.to_str().unwrap(),
            "-o",
            "x.csv"
        ])),
        2
    );
}

#[test]
fn analyze_stable_and_unstable_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let stable = dir.path().join("s.csv");
    sweep_to("demo_stable.toml", &stable, &[]);
    let o = analyze("demo_stable.toml", &stable, &[]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    assert_eq!(r["verdict"], "stable");
    assert_eq!(r["winding"], 0);

    let unstable = dir.path().join("u.json");
    sweep_to("demo_unstable.toml", &unstable, &[]);
    let o = analyze("demo_unstable.toml", &unstable, &[]);
    assert_eq!(code(&o), 10);
    let r = json(&o);
    assert_eq!(r["verdict"], "unstable");
    let c = &r["critical_pole"];
    assert!(c["sigma_o"].as_f64().unwrap() > 0.0);
    let (w, hz) = (
        c["omega_o_rad_s"].as_f64().unwrap(),
        c["omega_o_hz"].as_f64().unwrap(),
    );
    assert!((w / hz - std::f64::consts::TAU).abs() < 1e-9);
    for key in ["tau_s", "a", "b", "omega_star_rad_s", "omega_star_hz"] {
        assert!(!c[key].is_null(), "{key}");
    }
}

#[test]
fn csv_and_json_tables_give_the_same_report() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, js) = (dir.path().join("t.csv"), dir.path().join("t.json"));
    sweep_to(
        "demo_unstable.toml",
        &csv,
        &["--noise", "0.005", "--seed", "3"],
    );
    sweep_to(
        "demo_unstable.toml",
        &js,
        &["--noise", "0.005", "--seed", "3"],
    );
    assert_eq!(
        json(&analyze("demo_unstable.toml", &csv, &[])),
        json(&analyze("demo_unstable.toml", &js, &[]))
    );
}

#[test]
fn truncated_table_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let full = dir.path().join("full.csv");
    sweep_to("demo_stable.toml", &full, &[]);
    let text = std::fs::read_to_string(&full).unwrap();
    let short: Vec<&str> = text.lines().take(4).collect();
    let cut = dir.path().join("cut.csv");
    std::fs::write(&cut, short.join("\n")).unwrap();
    assert_eq!(code(&analyze("demo_stable.toml", &cut, &[])), 3);
    assert_eq!(
        code(&analyze(
            "demo_stable.toml",
            &fixture("corrupt_table.csv"),
            &[]
        )),
        3
    );
    assert_eq!(
        code(&analyze(
            "demo_stable.toml",
            &dir.path().join("absent.csv"),
            &[]
        )),
        3
    );
}

#[test]
fn analyze_writes_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.csv");
    sweep_to("demo_unstable.toml", &t, &[]);
    let out = dir.path().join("out");
    let o = analyze(
        "demo_unstable.toml",
        &t,
        &["--out-dir", out.to_str().unwrap()],
    );
    assert_eq!(code(&o), 10);
    let traj = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().count(), 2002);
    let idta = std::fs::read_to_string(out.join("idta.csv")).unwrap();
    assert!(idta.starts_with("seq,kind,extended_coordinate,omega_cross_rad_s,omega_cross_hz"));
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report, json(&o));
}

#[test]
fn impedance_form_agrees_on_dense_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.csv");
    let cfg = dir.path().join("dense.toml");
    std::fs::write(
        &cfg,
        "schema_version = 1\n[grid]\nrs = 0.05\nl_total = 0.002\n[plan]\nstep_hz = 0.1\n[device]\nkind = \"builtin\"\nname = \"cs-800uF\"\n",
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    assert_eq!(
        code(&run(&["sweep", "-c", c, "-o", t.to_str().unwrap()])),
        0
    );
    let t = t.to_str().unwrap();
    let a = run(&["analyze", "-c", c, "-t", t, "--json"]);
    let z = run(&["analyze", "-c", c, "-t", t, "--json", "--form", "impedance"]);
    assert_eq!(code(&a), 10);
    assert_eq!(code(&z), 10);
    assert_eq!(json(&z)["form"], "impedance");
    let sigma = |o: &Output| json(o)["critical_pole"]["sigma_o"].as_f64().unwrap();
    let (sa, sz) = (sigma(&a), sigma(&z));
    assert!((sa - sz).abs() < 0.05 * sa.abs() + 0.01, "{sa} vs {sz}");
}

#[test]
fn verify_skips_improper_impedance_form() {
    let cfg = fixture("demo_stable.toml");
    let o = run(&["verify", "-c", cfg.to_str().unwrap(), "--json"]);
    assert_eq!(code(&o), 0);
    let c = &json(&o)["records"][0]["consistency"];
    assert_eq!(c["applicable"], false);
    assert!(c["mismatches"][0]
        .as_str()
        .unwrap()
        .contains("grows without bound"));
}

#[test]
fn verify_demo_suite_agrees() {
    let cfg = fixture("suite.toml");
    let o = run(&["verify", "-c", cfg.to_str().unwrap(), "--json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let r = json(&o);
    assert_eq!(r["agreement"], true);
    let records = r["records"].as_array().unwrap();
    assert_eq!(records.len(), 12);
    for x in records {
        assert_eq!(x["apsam_winding"], x["gnc_winding"]);
        assert_eq!(
            x["apsam_winding"].as_i64().unwrap(),
            x["oracle_count"].as_i64().unwrap()
        );
        assert_eq!(x["consistency"]["applicable"], true);
        assert!(x["timings"]["apsam_s"].as_f64().unwrap() >= 0.0);
    }
}

#[test]
fn verify_reports_planted_misjudgment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("misjudgment.toml");
    let o = run(&[
        "verify",
        "-c",
        cfg.to_str().unwrap(),
        "--json",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let t = &json(&o)["records"][0]["truncation"];
    assert_eq!(t["misjudgment"], true);
    assert_eq!(t["full_stable"], false);
    assert_eq!(t["truncated_stable"], true);
    assert_eq!(t["oracle_full"], 1);
    assert_eq!(t["oracle_truncated"], 0);
    let loci = std::fs::read_to_string(dir.path().join("device.loci.csv")).unwrap();
    assert!(loci.starts_with("omega_rad_s,l1_re,l1_im,l2_re,l2_im"));
}

#[test]
fn verify_rejects_raw_tables() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.csv");
    sweep_to("demo_stable.toml", &t, &[]);
    let cfg = dir.path().join("raw.toml");
    std::fs::write(
        &cfg,
        format!(
            "schema_version = 1\n[grid]\nrs = 0.05\nl_total = 0.002\n[device]\nkind = \"table\"\npath = \"{}\"\n",
            t.display()
        ),
    )
    .unwrap();
    let o = run(&["verify", "-c", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("closed-form"));
}

#[test]
fn intervals_error_shrinks_with_step() {
    let cfg = fixture("intervals.toml");
    let o = run(&["intervals", "-c", cfg.to_str().unwrap(), "--json"]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    assert_eq!(r["monotone"], true);
    let err: Vec<f64> = r["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x["sigma_error"].as_f64().unwrap())
        .collect();
    assert!(err[0] > err[1] && err[1] >= err[2], "{err:?}");
    // the coarse sweep puts the unstable mode on the stable side
    assert_eq!(r["rows"][0]["verdict"], "stable");
    assert!(r["rows"][0]["sigma_o"].as_f64().unwrap() < 0.0);
}

#[test]
fn intervals_far_device_has_no_candidate() {
    let cfg = fixture("far_from_critical.toml");
    let o = run(&["intervals", "-c", cfg.to_str().unwrap(), "--json"]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    assert!(r["monotone"].is_null());
    for row in r["rows"].as_array().unwrap() {
        assert!(row["sigma_o"].is_null());
        assert_eq!(row["verdict"], "stable");
    }
}

#[test]
fn intervals_single_step_is_plain() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("one.toml");
    let text = std::fs::read_to_string(fixture("intervals.toml"))
        .unwrap()
        .replace("[2.0, 1.0, 0.5]", "[1.0]");
    std::fs::write(&cfg, text).unwrap();
    let o = run(&["intervals", "-c", cfg.to_str().unwrap(), "--json"]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    assert_eq!(r["rows"].as_array().unwrap().len(), 1);
    assert!(r["monotone"].is_null());
}

#[test]
fn batch_five_scenarios() {
    let cfg = fixture("batch.toml");
    let o = run(&["batch", "-c", cfg.to_str().unwrap(), "--json"]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    let verdicts: Vec<&str> = r["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x["verdict"].as_str().unwrap())
        .collect();
    assert_eq!(
        verdicts,
        ["stable", "stable", "stable", "unstable", "unstable"]
    );
    assert_eq!(r["worst_first"][0], "4 m/s");
    assert_eq!(r["worst_first"][4], "12 m/s");
}

#[test]
fn batch_with_corrupt_scenario_continues() {
    let cfg = fixture("batch_corrupt.toml");
    let o = run(&["batch", "-c", cfg.to_str().unwrap(), "--json"]);
    assert_eq!(code(&o), 0);
    let rows = json(&o)["rows"].as_array().unwrap().clone();
    assert_eq!(rows.iter().filter(|x| x["error"].is_null()).count(), 4);
    assert!(rows[2]["error"].as_str().unwrap().contains("malformed"));
}

#[test]
fn batch_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.toml");
    std::fs::write(
        &empty,
        "schema_version = 1\n[grid]\nrs = 0.05\nl_total = 0.002\n",
    )
    .unwrap();
    assert_eq!(code(&run(&["batch", "-c", empty.to_str().unwrap()])), 2);

    let bad = dir.path().join("bad.toml");
    std::fs::copy(
        fixture("corrupt_table.csv"),
        dir.path().join("corrupt_table.csv"),
    )
    .unwrap();
    std::fs::write(
        &bad,
        "schema_version = 1\n[grid]\nrs = 0.05\nl_total = 0.002\n[[scenarios]]\nname = \"x\"\ndevice = { kind = \"table\", path = \"corrupt_table.csv\" }\n",
    )
    .unwrap();
    assert_eq!(code(&run(&["batch", "-c", bad.to_str().unwrap()])), 7);
}

#[test]
fn wrong_schema_version_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("v2.toml");
    std::fs::write(
        &cfg,
        "schema_version = 2\n[grid]\nrs = 0.05\nl_total = 0.002\n",
    )
    .unwrap();
    assert_eq!(code(&run(&["batch", "-c", cfg.to_str().unwrap()])), 2);
}

#[test]
fn verdict_matches_oracle_for_every_bundled_fixture() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_str().unwrap().to_string();
        if path.extension().is_none_or(|e| e != "toml") || name == "batch_corrupt.toml" {
            continue;
        }
        let o = run(&["verify", "-c", path.to_str().unwrap(), "--json"]);
        assert_eq!(code(&o), 0, "{name}");
        for x in json(&o)["records"].as_array().unwrap() {
            assert_eq!(
                x["apsam_winding"].as_i64(),
                x["oracle_count"].as_i64(),
                "{name}"
            );
            seen += 1;
        }
    }
    assert!(seen >= 20, "{seen}");
}

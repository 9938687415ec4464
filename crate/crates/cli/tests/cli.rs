use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use impedance_sca::io::read_archive;
use impedance_sca::metrics::{EvaluationReport, Table};

fn impsca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_impsca"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// A small unprotected S-box campaign that debug builds attack quickly.
fn small_sbox_config(dir: &Path, seed: u64, count: usize) -> PathBuf {
    let path = dir.join(format!("sbox-{seed}-{count}.toml"));
    fs::write(
        &path,
        format!(
            r#"schema_version = 1
seed = {seed}

[grid]
start_hz = 1e9
stop_hz = 2e9
points = 120

[device]
seed = 7

[scenario]
kind = "unprotected-sbox"
byte = 0

[schedule]
kind = "random"
count = {count}

[key]
kind = "fixed"
key = "2b7e151628aed2a6abf7158809cf4f3c"

[campaign]
averaging = 50
"#
        ),
    )
    .unwrap();
    path
}

fn simulate(config: &Path, out: &Path) {
    ok(&impsca(&["simulate", "--config", p(config), "--out", p(out)]));
}

#[test]
fn simulate_writes_configured_trace_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_sbox_config(dir.path(), 1, 37);
    let arc = dir.path().join("t.arc");
    simulate(&cfg, &arc);
    let (batch, info) = read_archive(&arc).unwrap();
    assert_eq!(batch.len(), 37);
    assert_eq!(batch.grid().points(), 120);
    assert_eq!(info.campaign_seed, Some(1));
    assert!(info.device_fingerprint.is_some());
}

#[test]
fn identical_config_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_sbox_config(dir.path(), 5, 400);
    let mut outputs = Vec::new();
    for run in 0..2 {
        let arc = dir.path().join(format!("t{run}.arc"));
        let dom = dir.path().join(format!("dom{run}.csv"));
        let rep = dir.path().join(format!("r{run}.json"));
        simulate(&cfg, &arc);
        ok(&impsca(&[
            "dima", "--traces", p(&arc), "--band-report", p(&dom), "--report", p(&rep),
        ]));
        outputs.push([arc, dom, rep].map(|f| fs::read(f).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn dima_band_report_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let arc = dir.path().join("t.arc");
    simulate(&small_sbox_config(dir.path(), 2, 1500), &arc);
    let dom = dir.path().join("dom.csv");
    let out = impsca(&["dima", "--traces", p(&arc), "--band-report", p(&dom), "--expect-key", "2b"]);
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("best key 0x2b"));

    let t = Table::read_csv(&dom).unwrap();
    assert_eq!(t.rows.len(), 120);
    assert_eq!(t.columns.len(), 2 + 256);
    assert_eq!(t.columns[2], "k00");
    assert_eq!(t.columns[257], "kff");
    assert!(t.column("k2b").unwrap().iter().all(|v| *v >= 0.0));

    // Wrong expected key: analysis failure.
    let out = impsca(&["dima", "--traces", p(&arc), "--expect-key", "00"]);
    assert_eq!(out.status.code(), Some(1));
    // Usage and input errors.
    assert_eq!(impsca(&["dima", "--no-such-flag"]).status.code(), Some(2));
    let missing = dir.path().join("missing.arc");
    assert_eq!(impsca(&["dima", "--traces", p(&missing)]).status.code(), Some(2));
}

#[test]
fn cima_correlation_report() {
    let dir = tempfile::tempdir().unwrap();
    let arc = dir.path().join("t.arc");
    simulate(&small_sbox_config(dir.path(), 3, 1500), &arc);
    let corr = dir.path().join("corr.csv");
    let rep = dir.path().join("r.json");
    ok(&impsca(&[
        "cima", "--traces", p(&arc), "--correlation-report", p(&corr), "--report", p(&rep),
    ]));
    let t = Table::read_csv(&corr).unwrap();
    assert_eq!(t.rows.len(), 120);
    for k in ["k00", "k2b", "kff"] {
        assert!(t.column(k).unwrap().iter().all(|c| (-1.0..=1.0).contains(c)));
    }
    let r = EvaluationReport::from_json(&fs::read_to_string(rep).unwrap()).unwrap();
    assert_eq!(r.experiments[0].name, "cima");
}

#[test]
fn template_profile_then_single_trace_attack() {
    let dir = tempfile::tempdir().unwrap();
    let prof = dir.path().join("prof.arc");
    let atk = dir.path().join("atk.arc");
    simulate(&configs().join("tima-profile.toml"), &prof);
    simulate(&configs().join("tima-attack.toml"), &atk);
    let tpl = dir.path().join("tpl.bin");
    ok(&impsca(&[
        "tima-profile", "--traces", p(&prof), "--bits", "24", "--pois", "5", "--out", p(&tpl),
    ]));
    let rep = dir.path().join("r.json");
    let out = impsca(&[
        "tima-attack", "--templates", p(&tpl), "--traces", p(&atk), "--report", p(&rep),
        "--expect-key", "93",
    ]);
    ok(&out);
    let r = EvaluationReport::from_json(&fs::read_to_string(&rep).unwrap()).unwrap();
    let d = &r.experiments[0].details;
    assert_eq!(d["shares"], serde_json::json!(["c6", "30", "65"]));
    assert_eq!(d["key"], "93");
    assert_eq!(d["bits"].as_array().unwrap().len(), 24);

    let out = impsca(&[
        "tima-attack", "--templates", p(&tpl), "--traces", p(&atk), "--expect-key", "94",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn tl_model_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("tl.csv");
    ok(&impsca(&["tl-model", "--points", "50", "--eps-r", "1", "--out", p(&out)]));
    let t = Table::read_csv(&out).unwrap();
    assert_eq!(t.columns, ["frequency_hz", "s11_re", "s11_im", "mag_db", "phase_deg"]);
    assert_eq!(t.rows.len(), 50);
    // Matched medium reflects nothing.
    assert!(t.column("s11_re").unwrap().iter().all(|v| *v == 0.0));
}

#[test]
fn ingest_touchstone_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let s1p = dir.path().join("a.s1p");
    let csv = dir.path().join("b.csv");
    let mut ts = String::from("# MHz S RI R 50\n");
    let mut table = String::from("Freq(Hz),Re,Im\n");
    for i in 0..5 {
        let f = 1000.0 + 10.0 * i as f64;
        ts.push_str(&format!("{f} 0.{i} -0.5\n"));
        table.push_str(&format!("{},0.{i},-0.5\n", f * 1e6));
    }
    fs::write(&s1p, ts).unwrap();
    fs::write(&csv, table).unwrap();
    let arc = dir.path().join("m.arc");
    ok(&impsca(&["ingest", "--input", p(&s1p), p(&csv), "--out", p(&arc)]));
    let (batch, _) = read_archive(&arc).unwrap();
    assert_eq!(batch.len(), 2);
    assert_eq!(batch.traces()[0].samples(), batch.traces()[1].samples());
    assert_eq!(batch.grid().stamp(0), 1e9);

    let bad = dir.path().join("bad.s1p");
    fs::write(&bad, "1.0 0.5 0.0\n").unwrap();
    assert_eq!(impsca(&["ingest", "--input", p(&bad), "--out", p(&arc)]).status.code(), Some(2));
}

#[test]
fn report_figures_and_merge() {
    let dir = tempfile::tempdir().unwrap();
    let arc = dir.path().join("t.arc");
    simulate(&small_sbox_config(dir.path(), 4, 600), &arc);
    let top = dir.path().join("top.csv");
    ok(&impsca(&["report", "--figure", "top-keys", "--traces", p(&arc), "--top", "5", "--out", p(&top)]));
    assert_eq!(Table::read_csv(&top).unwrap().rows.len(), 5);

    let traj = dir.path().join("traj.csv");
    ok(&impsca(&[
        "report", "--figure", "rank-trajectory", "--traces", p(&arc), "--expect-key", "2b",
        "--steps", "100,300,600,5000", "--out", p(&traj),
    ]));
    assert_eq!(Table::read_csv(&traj).unwrap().column("traces").unwrap(), [100.0, 300.0, 600.0]);

    let bits = dir.path().join("bits.csv");
    ok(&impsca(&[
        "report", "--figure", "bit-dm", "--traces", p(&arc), "--bit", "sbox.0.0", "--bit", "sbox.0.7",
        "--out", p(&bits),
    ]));
    assert_eq!(Table::read_csv(&bits).unwrap().columns.len(), 4);

    let reps: Vec<PathBuf> = (0..2).map(|i| dir.path().join(format!("r{i}.json"))).collect();
    for r in &reps {
        ok(&impsca(&["dima", "--traces", p(&arc), "--report", p(r)]));
    }
    let merged = dir.path().join("all.json");
    ok(&impsca(&["report", "--merge", p(&reps[0]), p(&reps[1]), "--out", p(&merged)]));
    let m = EvaluationReport::from_json(&fs::read_to_string(merged).unwrap()).unwrap();
    assert_eq!(m.experiments.len(), 2);
    assert_eq!(impsca(&["report", "--figure", "fig9", "--traces", p(&arc), "--out", p(&top)]).status.code(), Some(2));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    let arc = dir.path().join("t.arc");
    fs::write(&cfg, "schema_version = 9\nseed = 1\n").unwrap();
    assert_eq!(impsca(&["simulate", "--config", p(&cfg), "--out", p(&arc)]).status.code(), Some(2));
    let text = fs::read_to_string(small_sbox_config(dir.path(), 1, 10)).unwrap();
    fs::write(&cfg, text.replace("seed = 1\n", "seed = 1\nunknown = 3\n")).unwrap();
    assert_eq!(impsca(&["simulate", "--config", p(&cfg), "--out", p(&arc)]).status.code(), Some(2));
}

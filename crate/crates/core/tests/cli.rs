use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sho_rake::closed_form_stats::{GscSpec, GscSum};
use sho_rake::pdp::{apply_distinctness_jitter, exponential_mip, DEFAULT_JITTER};
use sho_rake::table::{parse_csv, Table};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sho-rake")).args(args).output().unwrap()
}

fn run_to(dir: &Path, name: &str, args: &[&str]) -> (Output, String) {
    let out = dir.join(name);
    let mut all: Vec<&str> = args.to_vec();
    let out_str = out.to_str().unwrap().to_string();
    all.extend(["--out", &out_str]);
    let o = run(&all);
    let text = std::fs::read_to_string(&out).unwrap_or_default();
    (o, text)
}

fn column(t: &Table, name: &str) -> Vec<Option<f64>> {
    let c = t.column(name).unwrap();
    t.rows.iter().map(|r| r[c]).collect()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL: &str = "\
sho.l = 3
sho.n_paths = 4
sho.n_c = 3
sho.n_s = 1
sho.gamma_t = 1.0
pdp.kind = exponential
pdp.gamma_bar = 1.0
pdp.delta = 0.5
grid.start_db = -6
grid.stop_db = 6
grid.points = 7
";

#[test]
fn closed_form_only_run_writes_csv_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("four_station.cfg");
    let (o, text) = run_to(dir.path(), "cf.csv", &["outage", "--config", cfg.to_str().unwrap(), "--cf-only"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = parse_csv(&text).unwrap();
    assert_eq!(t.header, ["x_db", "x_linear", "closed_form", "mc_value", "mc_std_error"]);
    assert_eq!(t.rows.len(), 20);
    assert!(column(&t, "closed_form").iter().all(|v| v.is_some()));
    assert!(column(&t, "mc_value").iter().all(|v| v.is_none()));
    let meta = std::fs::read_to_string(dir.path().join("cf.csv.meta")).unwrap();
    assert!(meta.contains("command = outage") && meta.contains("sho.n_s = 2"));
}

#[test]
fn simulation_only_runs_repeat_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.cfg", SMALL);
    let args = ["outage", "--config", &cfg, "--mc-only", "--mc-samples", "50000", "--seed", "9"];
    let (a, ta) = run_to(dir.path(), "a.csv", &args);
    let (b, tb) = run_to(dir.path(), "b.csv", &args);
    assert!(a.status.success() && b.status.success());
    assert_eq!(ta, tb);
    let t = parse_csv(&ta).unwrap();
    assert!(column(&t, "closed_form").iter().all(|v| v.is_none()));
    let (_, other) = run_to(dir.path(), "c.csv", &["outage", "--config", &cfg, "--mc-only", "--mc-samples", "50000", "--seed", "10"]);
    assert_ne!(ta, other);
}

#[test]
fn stdout_carries_csv_when_no_output_is_given() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.cfg", SMALL);
    let o = run(&["outage", "--config", &cfg, "--cf-only"]);
    assert!(o.status.success());
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.starts_with("x_db,x_linear,closed_form"));
    assert_eq!(parse_csv(&stdout).unwrap().rows.len(), 7);
    assert!(String::from_utf8_lossy(&o.stderr).contains("command = outage"));
}

#[test]
fn config_errors_exit_2_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.cfg", &SMALL.replace("pdp.delta = 0.5", "pdp.detla = 0.5"));
    let o = run(&["outage", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 8") && err.contains("pdp.detla"), "{err}");

    let cfg = write_config(dir.path(), "bad2.cfg", &SMALL.replace("sho.n_c = 3", "sho.n_c = 4"));
    assert_eq!(run(&["outage", "--config", &cfg]).status.code(), Some(2));

    let missing = dir.path().join("nope.cfg");
    assert_eq!(run(&["outage", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn too_few_samples_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.cfg", SMALL);
    assert_eq!(run(&["outage", "--config", &cfg, "--mc-only", "--mc-samples", "100"]).status.code(), Some(2));
}

#[test]
fn coincident_means_without_jitter_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = "\
sho.l = 2
sho.n_paths = 6
sho.n_c = 5
sho.n_s = 2
sho.gamma_t = 1.0
pdp.kind = explicit
pdp.values = 1, 1, 1, 1, 1, 1
jitter.rel_epsilon = 1e-12
grid.start_db = 0
grid.stop_db = 0
grid.points = 1
";
    let cfg = write_config(dir.path(), "iid.cfg", text);
    let o = run(&["outage", "--config", &cfg, "--cf-only"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("near-degenerate"));
}

#[test]
fn zero_threshold_sweep_is_the_serving_gsc_cdf() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.cfg", SMALL);
    let (o, text) =
        run_to(dir.path(), "s.csv", &["sweep", "--config", &cfg, "--cf-only", "--parameter", "gamma_t", "--values", "0"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = parse_csv(&text).unwrap();
    let prof = apply_distinctness_jitter(&exponential_mip(1.0, 0.5, 4), DEFAULT_JITTER);
    let g = GscSum::new(&prof, GscSpec::new(4, 3).unwrap()).unwrap();
    for (x, cf) in column(&t, "x_linear").iter().zip(column(&t, "closed_form")) {
        let want = g.cdf(x.unwrap());
        // the CSV keeps 12 significant digits
        assert!((cf.unwrap() - want).abs() <= 1e-11 * want.max(1e-300), "{cf:?} vs {want}");
    }
}

#[test]
fn single_value_sweep_matches_plain_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.cfg", SMALL);
    let (_, plain) = run_to(dir.path(), "p.csv", &["outage", "--config", &cfg, "--cf-only"]);
    let (o, sweep) =
        run_to(dir.path(), "s.csv", &["sweep", "--config", &cfg, "--cf-only", "--parameter", "delta", "--values", "0.5"]);
    assert!(o.status.success());
    let (p, s) = (parse_csv(&plain).unwrap(), parse_csv(&sweep).unwrap());
    assert_eq!(p.rows.len(), s.rows.len());
    for (a, b) in p.rows.iter().zip(&s.rows) {
        assert_eq!(b[0], Some(0.5));
        assert_eq!(&b[1..], &a[..]);
    }
}

#[test]
fn sweep_rejects_more_than_ten_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.cfg", SMALL);
    let values = (0..11).map(|i| (0.1 * i as f64).to_string()).collect::<Vec<_>>().join(",");
    let o = run(&["sweep", "--config", &cfg, "--cf-only", "--parameter", "delta", "--values", &values]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn joint_statistics_mark_points_outside_support() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("joint_pdf.cfg");
    let (o, text) = run_to(dir.path(), "j.csv", &["stats", "--config", cfg.to_str().unwrap(), "--cf-only"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = parse_csv(&text).unwrap();
    let support = column(&t, "in_support");
    let cf = column(&t, "closed_form");
    assert_eq!(support, [Some(1.0), Some(1.0), Some(0.0)]);
    assert!(cf[0].unwrap() > 0.0 && cf[1].unwrap() > 0.0);
    assert_eq!(cf[2], Some(0.0));
}

#[test]
fn validate_rechecks_saved_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.cfg", SMALL);
    let (o, text) = run_to(dir.path(), "v.csv", &["outage", "--config", &cfg, "--validate", "--mc-samples", "200000"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(text.contains("# summary: max_normalized_deviation="));
    let saved = dir.path().join("v.csv");
    let o = run(&["validate", "--input", saved.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    // shift one simulated value by far more than its error bar
    let mut t = parse_csv(&text).unwrap();
    let (ci, vi) = (t.column("closed_form").unwrap(), t.column("mc_value").unwrap());
    let r = &mut t.rows[3];
    r[vi] = Some(r[ci].unwrap() + 0.05);
    let tampered = dir.path().join("bad.csv");
    std::fs::write(&tampered, t.to_csv()).unwrap();
    let o = run(&["validate", "--input", tampered.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn validate_runs_a_config_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.cfg", SMALL);
    let (o, text) = run_to(dir.path(), "v.csv", &["validate", "--config", &cfg, "--mc-samples", "200000", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let t = parse_csv(&text).unwrap();
    assert!(column(&t, "normalized_deviation").iter().all(|d| d.unwrap() <= 1.0));
}

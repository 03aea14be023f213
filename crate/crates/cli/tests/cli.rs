use std::fs;
use std::process::{Command, Output};

fn sqfn(args: &[&str], out: &std::path::Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqfn")).args(args).env("SQFN_OUT", out).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn spectral_identity_from_flags() {
    let dir = tempfile::tempdir().unwrap();
    let o = sqfn(&["run", "--check", "spectral_identity", "--operator", "laplacian", "--dim", "1", "--N", "256"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = fs::read_to_string(dir.path().join("report.jsonl")).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines.len(), 2);
    let rec: serde_json::Value = serde_json::from_str(lines[1]).unwrap();
    assert_eq!(rec["check"], "spectral_identity");
    assert_eq!(rec["passed"], true);
}

#[test]
fn empty_check_list_writes_a_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let o = sqfn(&["run"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let report = fs::read_to_string(dir.path().join("report.jsonl")).unwrap();
    assert_eq!(report.lines().count(), 1);
    assert!(report.contains("config_hash"));
}

#[test]
fn malformed_config_is_a_usage_error_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    fs::write(&cfg, "[operator]\nN = 64\nthis line is wrong\n").unwrap();
    let o = sqfn(&["run", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    fs::write(&cfg, "N = 64\nunknown_knob = 1\n").unwrap();
    let o = sqfn(&["run", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"));
}

#[test]
fn failing_check_exits_one_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    // sharp-maximal domination needs mu > 3
    let o = sqfn(&["run", "--check", "sharp_maximal", "--N", "64", "--family_size", "2", "--mu", "2"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("sharp_maximal"));
}

#[test]
fn identical_configs_give_identical_reports_after_the_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "[operator]\nN = 64\n[family]\nfamily_size = 8\n[checks]\nchecks = weighted_l2, growth_p\ntransforms = s_h\n").unwrap();
    let read = |sub: &str| {
        let out = dir.path().join(sub);
        let o = sqfn(&["run", cfg.to_str().unwrap()], &out);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let text = fs::read_to_string(out.join("report.jsonl")).unwrap();
        let dat = fs::read_to_string(out.join("growth_p_s_h.dat")).unwrap();
        (text.lines().skip(1).collect::<Vec<_>>().join("\n"), dat)
    };
    let (a, da) = read("a");
    let (b, db) = read("b");
    assert_eq!(a, b);
    assert_eq!(da, db);
    assert!(da.starts_with("# config_hash="));
}

#[test]
fn describe_and_list() {
    let dir = tempfile::tempdir().unwrap();
    let o = sqfn(&["describe", "growth_ap"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("beta_p"));
    let o = sqfn(&["describe", "nope"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("weak_1_1"));
    let o = sqfn(&["list-checks"], dir.path());
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 16);
    assert_eq!(sqfn(&["frobnicate"], dir.path()).status.code(), Some(2));
}

#[test]
fn dumps() {
    let dir = tempfile::tempdir().unwrap();
    let o = sqfn(&["dump-operator", "--N", "32", "--profile", "heat", "--t", "0.05"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let k = fs::read_to_string(dir.path().join("kernel.dat")).unwrap();
    assert_eq!(k.lines().filter(|l| !l.starts_with('#') && !l.is_empty()).count(), 32 * 32);

    let o = sqfn(&["dump-function", "--N", "64", "--member", "2", "--transform", "g_h"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let f = fs::read_to_string(dir.path().join("function.dat")).unwrap();
    let row: Vec<&str> = f.lines().find(|l| !l.starts_with('#')).unwrap().split(' ').collect();
    assert_eq!(row.len(), 3);

    let o = sqfn(&["dump-operator", "--profile", "sideways"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

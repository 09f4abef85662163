use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qkdsim(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qkdsim"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("scenario.toml");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn noiseless_nopab_gives_twenty_clean_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "scheme = \"nopab\"\nm = 10000\nseed = 1\n");
    let out = qkdsim(&["run", "--config", &cfg, "--reps", "20", "--csv", "out.csv"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "scheme,eve,m,N,qber,sifted_fraction,net_key_bits,aborted");
    let rows = rows(&csv);
    assert_eq!(rows.len(), 20);
    for r in rows {
        assert_eq!(r[4].parse::<f64>().unwrap(), 0.0);
        assert_eq!(r[5].parse::<f64>().unwrap(), 1.0);
        assert_eq!(r[7], "false");
    }
}

#[test]
fn bb84_random_tap_mean_qber_near_quarter() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "scheme = \"bb84\"\nm = 10000\nrepetitions = 5\nqber_abort_threshold = 0.49\n[eve]\nkind = \"intercept_random_zx\"\n",
    );
    let out = qkdsim(&["run", "--config", &cfg, "--seed", "21"], dir.path());
    assert!(out.status.success());
    let rows = rows(&String::from_utf8(out.stdout).unwrap());
    let mean = rows.iter().map(|r| r[4].parse::<f64>().unwrap()).sum::<f64>() / rows.len() as f64;
    assert!((mean - 0.25).abs() <= 0.013, "mean qber {mean}");
}

#[test]
fn same_seed_gives_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "scheme = \"nopab\"\nm = 2000\nrounds = 3\nnoise_p = 0.05\nrepetitions = 6\n[eve]\nkind = \"intercept_fixed\"\nbasis = 0.3\n",
    );
    for tag in ["a", "b"] {
        let out = qkdsim(
            &["run", "--config", &cfg, "--seed", "99", "--csv", &format!("{tag}.csv"), "--dump-transcript", &format!("{tag}.jsonl")],
            dir.path(),
        );
        assert!(out.status.success());
    }
    let read = |f: &str| fs::read(dir.path().join(f)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_eq!(read("a.jsonl"), read("b.jsonl"));
    assert!(!read("a.jsonl").is_empty());
}

#[test]
fn flags_override_file_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m = 500\nrepetitions = 7\nseed = 1\n");
    let base = qkdsim(&["run", "--config", &cfg], dir.path());
    let over = qkdsim(&["run", "--config", &cfg, "--reps", "2"], dir.path());
    assert_eq!(rows(&String::from_utf8_lossy(&base.stdout)).len(), 7);
    assert_eq!(rows(&String::from_utf8_lossy(&over.stdout)).len(), 2);
}

#[test]
fn report_and_output_paths_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "m = 1000\nrounds = 4\n[output]\ncsv = \"s.csv\"\nreport = \"r.json\"\n",
    );
    let out = qkdsim(&["run", "--config", &cfg], dir.path());
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(report["accounting"][0]["scheme"], "nopab");
    assert!(dir.path().join("s.csv").exists());
}

#[test]
fn config_errors_exit_two_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("check_fraction = 1.5\n", "check_fraction"),
        ("qber_abort_threshold = 0.7\n", "qber_abort_threshold"),
        ("noise_p = -0.1\n", "noise_p"),
        ("m = 0\n", "m"),
        ("[eve]\nkind = \"intercept_true_basis\"\n", "eve"),
        ("colour = 3\n", "colour"),
        ("scheme = \"b92\"\n", "scheme"),
    ];
    for (body, field) in cases {
        let cfg = write_config(dir.path(), body);
        let out = qkdsim(&["run", "--config", &cfg], dir.path());
        let err = String::from_utf8_lossy(&out.stderr);
        assert_eq!(out.status.code(), Some(2), "{body}: {err}");
        assert!(err.contains(field), "{body}: {err}");
    }
    let cfg = write_config(dir.path(), "repetitions = 3\n");
    let out = qkdsim(&["run", "--config", &cfg, "--reps", "0"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("repetitions"));
}

#[test]
fn io_failures_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = qkdsim(&["run", "--config", "missing.toml"], dir.path());
    assert!(!out.status.success());
    assert_ne!(out.status.code(), Some(2));
    let cfg = write_config(dir.path(), "m = 100\n");
    let out = qkdsim(&["run", "--config", &cfg, "--csv", "no/such/dir/out.csv"], dir.path());
    assert!(!out.status.success());
}

#[test]
fn verify_single_criterion_and_unknown_name() {
    let dir = tempfile::tempdir().unwrap();
    let out = qkdsim(&["verify", "--only", "density-identity"], dir.path());
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with('[')).count(), 1);
    assert!(stdout.contains("[PASS] density-identity"));

    let out = qkdsim(&["verify", "--only", "no-such-check"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_reports_failing_criterion_with_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = qkdsim(&["verify", "--only", "qber-signatures", "--mutate-born-rule"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("qber-signatures"));
}

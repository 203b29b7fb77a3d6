use std::path::Path;
use std::process::{Command, Output};

fn spincool(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spincool")).current_dir(dir).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn unknown_keys_are_configuration_errors() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "a.toml", "[bath]\nkind = \"ohmic\"\ngama = 1.0\n");
    write(d.path(), "b.toml", "[bath]\nkind = \"ohmic\"\ngamma_f = 1.0\n");
    for name in ["a.toml", "b.toml"] {
        let o = spincool(d.path(), &["kernels", "--config", name]);
        assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(spincool(d.path(), &["nonsense"]).status.code(), Some(1));
    assert_eq!(spincool(d.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn kernels_table() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "k.toml", "[bath]\nkind = \"ohmic\"\ngamma = 1.0\ncutoff = 1.0\ntemperature = 0.0\n[kernels.grid]\nvalues = [0.0, 1.0]\n");
    let o = spincool(d.path(), &["kernels", "--config", "k.toml", "--out", "run"]);
    assert!(o.status.success());
    let text = read(&d.path().join("run"), "kernels.csv");
    let rows = csv_rows(&text);
    assert!(text.starts_with("t,F,xi,exp_minus_xi\n"));
    assert_eq!(rows[0], ["0", "0", "0", "1"]);
    // Θ = 0, Γ = 1: F(1) = 1 - atan 1, ξ(1) = ln 2 / 2.
    let f: f64 = rows[1][1].parse().unwrap();
    let xi: f64 = rows[1][2].parse().unwrap();
    assert!((f - (1.0 - 1f64.atan())).abs() < 1e-12, "{f}");
    assert!((xi - 0.5 * 2f64.ln()).abs() < 1e-12, "{xi}");
    assert!(d.path().join("run/run_manifest.json").exists());
}

#[test]
fn fig1_curves_start_at_zero() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "f.toml", "[fig1]\nohmic_curves = [[1.0, 1.0]]\nratios = [0.1]\n[fig1.ohmic_grid]\nstart = 0.0\nstop = 2.0\ncount = 21\nlog = false\n");
    let o = spincool(d.path(), &["fig1", "--config", "f.toml"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = d.path().join("out");
    let ohmic = csv_rows(&read(&out, "fig1_ohmic_gamma1_theta1.csv"));
    assert_eq!(ohmic.len(), 21);
    assert_eq!(ohmic[0], ["0", "0"]);
    let one_over_f = csv_rows(&read(&out, "fig1_one_over_f_ratio0.1.csv"));
    assert_eq!(one_over_f[0], ["0", "0"]);
}

#[test]
fn table1_subset() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "t.toml", "[table1]\nrows = [\"2\"]\ncolumns = [[1.0, 1.0]]\n");
    let o = spincool(d.path(), &["table1", "--config", "t.toml"]);
    assert!(o.status.success());
    let rows = csv_rows(&read(&d.path().join("out"), "table1.csv"));
    assert_eq!(rows.len(), 1);
    let v: f64 = rows[0][3].parse().unwrap();
    assert!((v - 0.3516).abs() < 1e-3, "{v}");
    assert_eq!(rows[0][7], "true");
}

#[test]
fn outputs_are_deterministic() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "v.toml", "seed = 11\n[verify]\noracle_cases = 4\nsamples = 50\n");
    for (run, threads) in [("a", "1"), ("b", "3")] {
        let o = spincool(d.path(), &["verify", "--config", "v.toml", "--out", run, "--threads", threads]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
        let o = spincool(d.path(), &["optimize", "--config", "v.toml", "--out", run, "--threads", threads]);
        assert!(o.status.success());
    }
    for name in ["verify_report.json", "optimize_result.json", "optimize_trace.csv"] {
        assert_eq!(read(&d.path().join("a"), name), read(&d.path().join("b"), name), "{name}");
    }
}

#[test]
fn verify_reports_dimension_cap() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "v.toml", "[verify]\noracle_cases = 2\nsamples = 5\ndimension_cap = 2\n");
    let o = spincool(d.path(), &["verify", "--config", "v.toml"]);
    assert_eq!(o.status.code(), Some(3));
    let report = read(&d.path().join("out"), "verify_report.json");
    assert!(report.contains("exceeds cap 2"), "{report}");
    assert!(report.contains("\"passed\": false"));
}

#[test]
fn evolve_matches_library() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "e.toml", "[evolve]\nsequence = \"prep:ergodic half-pi-x wait:0.5 minus-half-pi-y\"\n");
    let o = spincool(d.path(), &["evolve", "--config", "e.toml"]);
    assert!(o.status.success());
    let rows = csv_rows(&read(&d.path().join("out"), "evolve.csv"));
    let sz: f64 = rows[0][0].parse().unwrap();
    let k = spincool::BathKernels::ohmic(1.0, 1.0, 0.1).unwrap();
    let want = spincool::dynamics::two_pulse_ergodic_sz(&k, 0.5).unwrap();
    assert!((sz - want).abs() < 1e-12, "{sz} vs {want}");

    write(d.path(), "bad.toml", "[evolve]\nsequence = \"prep:ergodic quarter-turn\"\n");
    assert_eq!(spincool(d.path(), &["evolve", "--config", "bad.toml"]).status.code(), Some(1));
}

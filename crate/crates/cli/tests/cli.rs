use std::path::Path;
use std::process::{Command, Output};

const PAIR: &str = r#"{"channels":[{"matrix":[[0.9,0.1],[0.1,0.9]]},{"matrix":[[0.7,0.3],[0.3,0.7]]}]}"#;
const TIED: &str = r#"{"channels":[{"matrix":[[0.9,0.1],[0.1,0.9]]},{"matrix":[[0.1,0.9],[0.9,0.1]]}]}"#;

fn dmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dmc-ident")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn capacity_prints_table() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "f.json", PAIR);
    let o = dmc(&["capacity", "--channels", &f]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("channel,capacity,duality_gap,iterations,converged\n0,3.68064207168497"));
}

#[test]
fn identify_writes_report_and_prints_seed() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "f.json", PAIR);
    let out = dir.path().join("rep.json");
    let o = dmc(&["identify", "--channels", &f, "--delta", "0.1", "--alg", "gap", "--seed", "7", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("seed: 7"));
    let rep: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(rep["output_channel"], 0);
}

#[test]
fn missing_seed_is_chosen_and_reported() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "f.json", PAIR);
    let o = dmc(&["estimate", "--channels", &f, "--samples", "100"]);
    assert!(o.status.success());
    let line = stderr(&o).lines().find(|l| l.starts_with("seed: ")).map(str::to_owned).unwrap();
    let seed = line.trim_start_matches("seed: ");
    // the printed seed reproduces the run
    let again = dmc(&["estimate", "--channels", &f, "--samples", "100", "--seed", seed]);
    assert_eq!(o.stdout, again.stdout);
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "f.json", PAIR);
    let args = ["pac", "--channels", &f, "--eps", "0.2", "--delta", "0.1", "--alg", "median", "--seed", "3", "--format", "csv"];
    let (a, b) = (dmc(&args), dmc(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "f.json", PAIR);
    let cfg = write(dir.path(), "cfg.json", &format!(r#"{{"channels":{{"file":{f:?}}},"deltas":[0.3],"format":"json"}}"#));
    let o = dmc(&["lower-bound", "--config", &cfg, "--delta", "0.05"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rep: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((rep["value"].as_f64().unwrap() - 32.025662).abs() < 1e-5);
}

#[test]
fn config_errors_exit_2_and_name_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "f.json", PAIR);
    let bad = write(dir.path(), "bad.json", r#"{"channels":[{"matrix":[[0.5,0.6],[0.1,0.9]]}]}"#);
    let cfg = write(dir.path(), "cfg.json", r#"{"unknown_key":1}"#);
    let cases: [(Vec<&str>, &str); 6] = [
        (vec!["lower-bound", "--channels", &f, "--delta", "0.9"], "--delta"),
        (vec!["identify", "--channels", &f, "--delta", "0.1", "--alg", "naive", "--seed", "1"], "--eps"),
        (vec!["capacity", "--channels", &bad], "--channels"),
        (vec!["capacity", "--channels", "no/such/file.json"], "--channels"),
        (vec!["capacity", "--config", &cfg], "--config"),
        (vec!["capacity", "--alg", "fastest"], "--alg"),
    ];
    for (args, flag) in cases {
        let o = dmc(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(stderr(&o).contains(flag), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn runtime_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "tied.json", TIED);
    let o = dmc(&["lower-bound", "--channels", &f, "--delta", "0.05"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

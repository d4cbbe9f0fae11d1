use std::process::Command;

use hardylab_cli::{run_to, RunRecord, EXIT_ERROR, EXIT_FAILED, EXIT_OK};

fn run(args: &[&str]) -> (i32, String, String) {
    let argv: Vec<&str> = std::iter::once("hardylab").chain(args.iter().copied()).collect();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_to(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn record(stdout: &str) -> RunRecord {
    serde_json::from_str(stdout.lines().next().expect("one record")).unwrap()
}

#[test]
fn constants_for_one_spec() {
    let (code, out, err) = run(&["constants", "--n", "3", "--k", "2"]);
    assert_eq!(code, EXIT_OK);
    assert!(err.contains("hardy constant 25/4, lambda1 = 6"), "{err}");
    let rec = record(&out);
    let row = &rec.payload["rows"][0];
    assert_eq!(row["hardy"], "25/4");
    assert_eq!(row["lambda1"], 6);
    assert_eq!(row["whole_space"], "1/4");
}

#[test]
fn usage_and_domain_errors_exit_one() {
    assert_eq!(run(&["nonsense"]).0, EXIT_ERROR);
    assert_eq!(run(&["constants", "--n", "two"]).0, EXIT_ERROR);
    let (code, _, err) = run(&["constants", "--n", "3", "--k", "4"]);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.starts_with("error:"), "{err}");
    assert_eq!(run(&["sharpness", "--eps-list", "0.1"]).0, EXIT_ERROR);
    assert_eq!(run(&["--help"]).0, EXIT_OK);
}

#[test]
fn failed_checks_exit_two() {
    let (code, out, err) = run(&["sharpness", "--n", "3", "--k", "1", "--tol", "1e-9"]);
    assert_eq!(code, EXIT_FAILED);
    assert!(!record(&out).passed);
    assert!(err.contains("sharpness: FAIL"));
}

#[test]
fn config_sections_override_top_level_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "tol = 1e-3\ncolour = \"red\"\n[sharpness]\ntol = 1e-9\n").unwrap();
    let cfg = path.to_str().unwrap();
    let base = ["sharpness", "--n", "3", "--k", "1", "--config", cfg];

    let (code, out, err) = run(&base);
    assert_eq!(code, EXIT_FAILED);
    let rec = record(&out);
    assert_eq!(rec.parameters["tol"], 1e-9);
    assert!(rec.warnings.iter().any(|w| w.contains("colour")));
    assert!(err.contains("warning: unknown config key `colour`"));

    let mut flagged = base.to_vec();
    flagged.extend(["--tol", "1e-3"]);
    let (code, out, _) = run(&flagged);
    assert_eq!(code, EXIT_OK);
    assert_eq!(record(&out).parameters["tol"], 1e-3);
}

#[test]
fn config_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "seed = 3\n\ntrials = = 4\n").unwrap();
    let (code, _, err) = run(&["constants", "--config", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("bad.toml:3"), "{err}");
    let (code, _, err) = run(&["constants", "--config", "/nonexistent/run.toml"]);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("cannot read config"));
}

#[test]
fn json_records_round_trip() {
    let (code, out, _) = run(&["identities", "--n", "3", "--k", "1"]);
    assert_eq!(code, EXIT_OK);
    let rec = record(&out);
    let again: RunRecord = serde_json::from_str(&serde_json::to_string(&rec).unwrap()).unwrap();
    assert_eq!(again, rec);
    assert_eq!(rec.command, "identities");
    assert_eq!(rec.version, env!("CARGO_PKG_VERSION"));
    assert!(rec.wall_time_s >= 0.0);
    assert!(rec.timestamp.ends_with('Z'));
}

#[test]
fn csv_output_goes_to_the_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let (code, out, _) = run(&["sharpness", "--quick", "--format", "csv", "--out", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(out.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# command: sharpness");
    assert!(lines.iter().any(|l| l.starts_with("# parameters: {")));
    let header = lines.iter().position(|l| *l == "n,k,epsilon,quotient,margin").unwrap();
    let rows: Vec<&str> = lines[header + 1..].iter().take_while(|l| !l.is_empty()).copied().collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("3,1,2e-1,"));
}

#[test]
fn all_emits_one_record_per_check() {
    let (code, out, _) = run(&["all", "--quick", "--trials", "2"]);
    assert_eq!(code, EXIT_OK);
    let commands: Vec<String> = out.lines().map(|l| record(l).command).collect();
    assert_eq!(
        commands,
        [
            "constants",
            "identities",
            "verify-hardy",
            "verify-weighted",
            "verify-ft",
            "sharpness",
            "eigen",
            "eigen",
            "decompose"
        ]
    );
}

fn binary(args: &[&str], threads: &str) -> (i32, Vec<RunRecord>, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_hardylab"))
        .args(args)
        .env("HARDYLAB_THREADS", threads)
        .output()
        .unwrap();
    let recs = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str::<RunRecord>(l).unwrap().without_timing())
        .collect();
    (out.status.code().unwrap(), recs, String::from_utf8(out.stderr).unwrap())
}

#[test]
fn results_do_not_depend_on_the_thread_count() {
    let args = ["verify-hardy", "--n", "4", "--k", "2", "--trials", "12", "--seed", "5"];
    let (c1, a, _) = binary(&args, "1");
    let (c3, b, _) = binary(&args, "3");
    assert_eq!((c1, c3), (EXIT_OK, EXIT_OK));
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let (code, _, err) = binary(&["constants", "--n", "3", "--k", "1"], "lots");
    assert_eq!(code, EXIT_OK);
    assert!(err.contains("HARDYLAB_THREADS"), "{err}");
}

#[test]
fn seeds_change_sampled_results() {
    let a = record(&run(&["verify-hardy", "--n", "3", "--k", "1", "--trials", "3", "--seed", "1"]).1);
    let b = record(&run(&["verify-hardy", "--n", "3", "--k", "1", "--trials", "3", "--seed", "2"]).1);
    assert_ne!(a.payload, b.payload);
}

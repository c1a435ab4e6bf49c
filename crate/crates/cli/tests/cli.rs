use std::fs;
use std::path::Path;

use mallows_cli::{run, EXIT_FAILURE, EXIT_USAGE};

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("mallows").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn ok(args: &[&str]) -> String {
    let (code, out, err) = call(args);
    assert_eq!(code, 0, "args {args:?} failed: {err}");
    out
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn version_and_help_exit_zero() {
    assert!(ok(&["version"]).starts_with("mallows "));
    assert!(ok(&["--help"]).contains("select-t"));
}

#[test]
fn bad_usage_exits_two() {
    let (code, _, err) = call(&["sample", "--model", "nope"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(!err.is_empty());
    let (code, _, _) = call(&["frobnicate"]);
    assert_eq!(code, EXIT_USAGE);
    let (code, _, err) = call(&["fit", "--data", "/nonexistent/file", "--model", "phi"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.starts_with("error:"));
    let (code, _, _) = call(&["verify", "--suite", "nope"]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn stochastic_commands_need_a_seed() {
    // the env var is read by clap, so only assert when it is absent
    if std::env::var_os("MALLOWS_SEED").is_none() {
        let (code, _, err) = call(&["sample", "--model", "phi", "--n", "3", "--theta", "1"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("seed"));
    }
}

#[test]
fn sampling_is_reproducible() {
    let args = [
        "sample", "--model", "igm", "--thetas", "1,0.8", "--count", "50", "--seed", "11",
    ];
    let a = ok(&args);
    assert_eq!(a, ok(&args));
    assert_eq!(a.lines().count(), 51);
    let other = ok(&[
        "sample", "--model", "igm", "--thetas", "1,0.8", "--count", "50", "--seed", "12",
    ]);
    assert_ne!(a, other);
}

#[test]
fn seed_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# defaults\nseed = 11\n").unwrap();
    let from_cfg = ok(&[
        "--config",
        path_str(&cfg),
        "sample",
        "--model",
        "phi",
        "--n",
        "5",
        "--theta",
        "0.7",
        "--count",
        "10",
    ]);
    let from_flag = ok(&[
        "sample", "--model", "phi", "--n", "5", "--theta", "0.7", "--count", "10", "--seed", "11",
    ]);
    assert_eq!(from_cfg, from_flag);
}

#[test]
fn sampled_permutations_respect_the_center() {
    let out = ok(&[
        "sample", "--model", "gm", "--n", "4", "--thetas", "40,40,40", "--center", "3|1|4|2", "--count", "5", "--seed",
        "1",
    ]);
    for line in out.lines().skip(1) {
        assert_eq!(line, "3|1|4|2");
    }
}

#[test]
fn counted_output_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("phi.txt");
    let text = ok(&[
        "sample", "--model", "phi", "--n", "5", "--theta", "1.5", "--count", "400", "--seed", "5", "--format",
        "counted",
    ]);
    fs::write(&data, text).unwrap();
    let csv = ok(&["fit", "--data", path_str(&data), "--model", "phi"]);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("model,t,thetas,clamped,center,log_likelihood"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "phi");
    assert_eq!(row[4], "1|2|3|4|5");
    let theta: f64 = row[2].parse().unwrap();
    assert!((theta - 1.5).abs() < 0.2, "theta {theta}");
}

#[test]
fn fit_auto_selects_and_reports_target() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("igm.txt");
    fs::write(
        &data,
        ok(&[
            "sample",
            "--model",
            "igm",
            "--thetas",
            "1,0.9,0.8,0.7,0.6,0.5",
            "--count",
            "800",
            "--seed",
            "21",
        ]),
    )
    .unwrap();
    let names = dir.path().join("names.tsv");
    fs::write(&names, "1\talpha\n2\tbeta\n").unwrap();
    let csv = ok(&[
        "fit",
        "--data",
        path_str(&data),
        "--model",
        "igm",
        "--t",
        "auto",
        "--target-item",
        "2",
        "--names",
        path_str(&names),
    ]);
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), row.len());
    let col = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
    let t: usize = col("t").parse().unwrap();
    assert_eq!(col("selected_t").parse::<usize>().unwrap(), t);
    assert_eq!(col("thetas").split('|').count(), t);
    assert_eq!(col("target_rank"), "2");
    assert!(col("center_names").starts_with("alpha|beta|3|"));

    let json = ok(&[
        "fit",
        "--data",
        path_str(&data),
        "--model",
        "igm",
        "--t",
        "2",
        "--single",
        "--output",
        "json",
    ]);
    let value: serde_json::Value = serde_json::from_str(json.trim()).unwrap();
    assert_eq!(value["t"], 2);
    assert_eq!(value["thetas"].as_array().unwrap().len(), 1);
}

#[test]
fn fit_rejects_t_for_full_models() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.txt");
    fs::write(&data, "1|2|3\n2|1|3\n").unwrap();
    let (code, _, _) = call(&["fit", "--data", path_str(&data), "--model", "phi", "--t", "2"]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn select_t_trace_matches_stdout_choice() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("igm.txt");
    fs::write(
        &data,
        ok(&[
            "sample",
            "--model",
            "igm",
            "--thetas",
            "1,0.9,0.8,0.7",
            "--count",
            "300",
            "--seed",
            "2",
        ]),
    )
    .unwrap();
    let inline = ok(&["select-t", "--data", path_str(&data)]);
    let mut lines = inline.lines();
    let chosen: usize = lines.next().unwrap().parse().unwrap();
    assert_eq!(lines.next(), Some("t,theta,effective_length,error,clamped,selected"));
    let selected: Vec<usize> = lines
        .filter(|l| l.ends_with(",true"))
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(selected, vec![chosen]);

    let trace = dir.path().join("trace.csv");
    let out = ok(&["select-t", "--data", path_str(&data), "--trace", path_str(&trace)]);
    assert_eq!(out.trim(), chosen.to_string());
    let written = fs::read_to_string(&trace).unwrap();
    assert_eq!(written, inline.split_once('\n').unwrap().1);

    let (code, _, _) = call(&["select-t", "--data", path_str(&data), "--lambda", "1.5"]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn regen_grid_is_monotone_and_consistent() {
    let out = ok(&["regen", "--theta-grid", "0:2:0.25"]);
    let rows: Vec<(f64, f64)> = out
        .lines()
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 9);
    assert!(rows[0].1.is_infinite());
    assert!(rows.windows(2).all(|w| w[1].1 < w[0].1));
    // a single-point grid gives the same value as the full one
    let single = ok(&["regen", "--theta-grid", "1:1:1"]);
    let one: f64 = single
        .lines()
        .nth(1)
        .unwrap()
        .split_once(',')
        .unwrap()
        .1
        .parse()
        .unwrap();
    assert_eq!(one, rows[4].1);
}

#[test]
fn regen_streams_and_laws() {
    let args = ["regen", "--theta", "1", "--components", "5000", "--seed", "9"];
    let out = ok(&args);
    assert_eq!(out, ok(&args));
    let row: Vec<f64> = out
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(row[3], 5000.0);
    assert!((row[2] - row[1]).abs() < 0.2);

    let law = ok(&["regen", "--row", "0.5,0.5", "--n-max", "3"]);
    assert_eq!(law, "n,u_n,p_len\n1,0.5,0.5\n2,0.5,0.25\n3,0.5,0.125\n");
    let (code, _, _) = call(&["regen"]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn verify_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("reports");
    let summary = ok(&["verify", "--suite", "mle-inverse", "--out", path_str(&out_dir)]);
    let csv = fs::read_to_string(out_dir.join("mle-inverse.csv")).unwrap();
    let txt = fs::read_to_string(out_dir.join("mle-inverse.txt")).unwrap();
    assert_eq!(txt, summary);
    assert!(csv.starts_with("experiment,check,measured,reference,rule,source,gating,passed\n"));
    // reports are deterministic
    let again = dir.path().join("again");
    ok(&["verify", "--suite", "mle-inverse", "--out", path_str(&again)]);
    assert_eq!(csv, fs::read_to_string(again.join("mle-inverse.csv")).unwrap());
}

#[test]
fn verify_failure_exit_code() {
    // the apa checks cannot hold on a tiny unrelated file
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("apa.txt");
    fs::write(&data, "universe=5\n1|2|3|4|5\n2|1|3|4|5\n1|2|3|5|4\n").unwrap();
    let (code, out, _) = call(&["verify", "--suite", "apa", "--apa-data", path_str(&data)]);
    assert_eq!(code, EXIT_FAILURE);
    assert!(out.contains("FAIL"));
}

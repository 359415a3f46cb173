//! End-to-end behavior of the `srs` binary: file formats, closed-form row
//! values, exit codes, config merging, and byte-level reproducibility.

use std::path::PathBuf;
use std::process::Command;

fn srs(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_srs"))
        .args(args)
        .output()
        .expect("binary should spawn");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).expect("stdout is utf-8"),
        String::from_utf8(out.stderr).expect("stderr is utf-8"),
    )
}

/// Split a CSV document into comment lines, column names, and data cells.
fn parse_csv(text: &str) -> (Vec<&str>, Vec<&str>, Vec<Vec<&str>>) {
    let mut comments = Vec::new();
    let mut lines = text.lines().peekable();
    while let Some(line) = lines.peek() {
        if line.starts_with('#') {
            comments.push(*line);
            lines.next();
        } else {
            break;
        }
    }
    let columns: Vec<&str> = lines.next().expect("column row").split(',').collect();
    let rows = lines.map(|l| l.split(',').collect()).collect();
    (comments, columns, rows)
}

fn cell(rows: &[Vec<&str>], row: usize, col: usize) -> f64 {
    rows[row][col].parse().expect("numeric cell")
}

fn temp_path(name: &str) -> PathBuf {
    let mut path = std::env::temp_dir();
    path.push(format!("srs-cli-test-{}-{name}", std::process::id()));
    path
}

#[test]
fn single_atom_rows_match_the_closed_forms() {
    let (code, stdout, _) = srs(&[
        "evolve", "--mode", "kraus", "--atoms", "1", "--coupling", "0.3",
        "--photons", "2", "--pattern", "L*",
    ]);
    assert_eq!(code, 0);
    let (comments, columns, rows) = parse_csv(&stdout);
    assert!(comments.iter().any(|c| c.starts_with("# version: ")));
    assert!(comments.iter().any(|c| *c == "# atoms: 1"));
    assert!(!comments.iter().any(|c| c.contains("threads")));
    assert_eq!(
        columns,
        vec!["n", "P_elastic", "P_stokes", "stderr_if_mc", "mean_excitation", "sector_entropy"]
    );
    assert_eq!(rows.len(), 2);

    let p = 0.3f64.cos().powi(2);
    assert!((cell(&rows, 0, 1) - p).abs() < 1e-12);
    assert!((cell(&rows, 1, 1) - (p * p + 1.0 - p)).abs() < 1e-12);
    // L input: the Stokes-exit column is the conversion probability.
    assert!((cell(&rows, 0, 2) - (1.0 - p)).abs() < 1e-12);
    // Exact mode leaves the sampling-error column empty.
    assert_eq!(rows[0][3], "");
}

#[test]
fn zero_coupling_is_fully_transparent() {
    let (code, stdout, _) = srs(&[
        "evolve", "--atoms", "5", "--coupling", "0", "--photons", "3", "--pattern", "L*",
    ]);
    assert_eq!(code, 0);
    let (_, _, rows) = parse_csv(&stdout);
    for row in &rows {
        assert_eq!(row[1].parse::<f64>().unwrap(), 1.0);
        assert_eq!(row[2].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn stokes_drive_on_an_excited_atom_depletes_it() {
    let (code, stdout, _) = srs(&[
        "evolve", "--atoms", "1", "--coupling", "0.4", "--initial", "excited",
        "--photons", "4", "--pattern", "S*",
    ]);
    assert_eq!(code, 0);
    let (_, _, rows) = parse_csv(&stdout);
    let p = 0.4f64.cos().powi(2);
    // S input: elastic means the photon stayed Stokes, so P_stokes equals
    // P_elastic here.
    assert!((cell(&rows, 0, 1) - p).abs() < 1e-12);
    assert_eq!(rows[0][1], rows[0][2]);
    // The excitation column is the survival probability, the geometric law
    // cos(J)^(2n) photon after photon.
    for (n, row) in rows.iter().enumerate() {
        let survival: f64 = row[4].parse().unwrap();
        assert!((survival - p.powi(n as i32 + 1)).abs() < 1e-12, "row {n}");
    }
}

#[test]
fn explicit_pattern_drives_mixed_spins() {
    let (code, stdout, _) = srs(&[
        "evolve", "--mode", "tree", "--atoms", "2", "--coupling", "0.35",
        "--pattern", "LS",
    ]);
    assert_eq!(code, 0);
    let (comments, _, rows) = parse_csv(&stdout);
    assert!(comments.iter().any(|c| *c == "# pattern: LS"));
    assert_eq!(rows.len(), 2);
    // First photon excites from the ground sector with the closed form.
    let p = 0.35f64.cos().powi(2);
    assert!((cell(&rows, 0, 1) - p.powi(2)).abs() < 1e-12);
}

#[test]
fn trajectory_outputs_are_identical_across_thread_counts() {
    let mut outputs = Vec::new();
    for threads in ["1", "2", "8"] {
        let path = temp_path(&format!("threads-{threads}.csv"));
        let (code, _, stderr) = srs(&[
            "evolve", "--mode", "mc", "--atoms", "4", "--coupling", "0.3",
            "--photons", "20", "--pattern", "L*", "--trials", "2000",
            "--seed", "11", "--threads", threads,
            "--out", path.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "stderr: {stderr}");
        outputs.push(std::fs::read(&path).unwrap());
        std::fs::remove_file(&path).ok();
        std::fs::remove_file(path.with_extension("json")).ok();
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn json_summary_lands_next_to_the_csv() {
    let csv = temp_path("summary.csv");
    let (code, _, _) = srs(&[
        "evolve", "--atoms", "3", "--coupling", "0.3", "--photons", "10",
        "--pattern", "L*", "--out", csv.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let json_path = csv.with_extension("json");
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(summary["command"], "evolve");
    assert_eq!(summary["params"]["atoms"], 3);
    assert_eq!(summary["totals"]["photons"], 10);
    assert!(summary["pulse"]["peak_value"].as_f64().unwrap() > 0.0);
    std::fs::remove_file(&csv).ok();
    std::fs::remove_file(&json_path).ok();
}

#[test]
fn plot_writes_a_self_contained_svg() {
    let csv = temp_path("plot.csv");
    let svg = temp_path("plot.svg");
    let (code, _, _) = srs(&[
        "evolve", "--atoms", "3", "--coupling", "0.3", "--photons", "30",
        "--pattern", "L*", "--out", csv.to_str().unwrap(),
        "--plot", svg.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let content = std::fs::read_to_string(&svg).unwrap();
    assert!(content.starts_with("<svg"));
    assert!(content.trim_end().ends_with("</svg>"));
    assert!(content.contains("polyline"));
    std::fs::remove_file(&csv).ok();
    std::fs::remove_file(csv.with_extension("json")).ok();
    std::fs::remove_file(&svg).ok();
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let cfg = temp_path("config.json");
    std::fs::write(
        &cfg,
        r#"{"mode": "kraus", "atoms": 1, "coupling": 0.7, "photons": 1, "pattern": "L*"}"#,
    )
    .unwrap();
    // Flag overrides the file's coupling; everything else comes from it.
    let (code, stdout, _) = srs(&[
        "evolve", "--config", cfg.to_str().unwrap(), "--coupling", "0.3",
    ]);
    assert_eq!(code, 0);
    let (_, _, rows) = parse_csv(&stdout);
    let p = 0.3f64.cos().powi(2);
    assert!((cell(&rows, 0, 1) - p).abs() < 1e-12);
    std::fs::remove_file(&cfg).ok();
}

#[test]
fn state_files_round_trip_through_evolve() {
    let state = temp_path("state.json");
    std::fs::write(
        &state,
        r#"{"m": 2, "entries": [{"mask": 1, "re": 0.6, "im": 0.0},
                                {"mask": 2, "re": 0.0, "im": 0.8}]}"#,
    )
    .unwrap();
    let (code, stdout, _) = srs(&[
        "evolve", "--initial", state.to_str().unwrap(), "--pattern", "S",
    ]);
    assert_eq!(code, 0);
    let (comments, _, rows) = parse_csv(&stdout);
    assert!(comments.iter().any(|c| *c == "# atoms: 2"));
    assert!(cell(&rows, 0, 4) < 1.0);

    // A conflicting --atoms is a usage error.
    let (code, _, stderr) = srs(&[
        "evolve", "--initial", state.to_str().unwrap(), "--atoms", "3",
        "--pattern", "S",
    ]);
    assert_eq!(code, 2);
    assert!(stderr.contains("conflicts"));
    std::fs::remove_file(&state).ok();
}

#[test]
fn usage_errors_exit_two() {
    let cases: &[&[&str]] = &[
        &["verify", "--suite", "nonsense"],
        &["scan", "--scan", "m=", "--fit", "cooperative"],
        &["scan", "--scan", "q=1,2"],
        &["evolve", "--mode", "warp", "--atoms", "1"],
        &["evolve", "--atoms", "1", "--pattern", "LXS"],
        &["evolve", "--atoms", "1", "--pattern", "L*"],
        &["evolve", "--atoms", "65", "--photons", "1"],
        &["evolve", "--atoms", "0", "--photons", "1"],
        &["evolve", "--atoms", "2", "--coupling", "3.0", "--photons", "1"],
        &["evolve", "--photons", "1"],
    ];
    for args in cases {
        let (code, _, stderr) = srs(args);
        assert_eq!(code, 2, "args {args:?} gave stderr: {stderr}");
        assert!(stderr.starts_with("error: "), "args {args:?}");
    }
    // Unknown flags are usage errors too (reported by the parser itself).
    let (code, _, _) = srs(&["evolve", "--warp-factor", "9"]);
    assert_eq!(code, 2);
}

#[test]
fn resource_limits_exit_one_with_the_responsible_cap() {
    // 15 atoms exceeds the dense mixed-state cap; the message names it.
    let (code, _, stderr) = srs(&[
        "evolve", "--mode", "kraus", "--atoms", "15", "--coupling", "0.3",
        "--photons", "1", "--pattern", "L*",
    ]);
    assert_eq!(code, 1);
    assert!(stderr.contains("cap"), "stderr: {stderr}");
}

#[test]
fn verify_suites_report_and_exit_by_outcome() {
    let (code, stdout, _) = srs(&["verify", "--suite", "decay"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("[PASS] stepwise-decay"));
    assert!(stdout.contains("1/1 checks passed"));

    // The full second-photon suite contains a documented failing check.
    let (code, stdout, _) = srs(&["verify", "--suite", "second-photon"]);
    assert_eq!(code, 1);
    assert!(stdout.contains("[FAIL] weak-drive-expansion-order"));
    assert!(stdout.contains("measured:"));
}

#[test]
fn sweep_dump_weights_are_a_probability_distribution() {
    let (code, stdout, _) = srs(&[
        "sweep", "--atoms", "3", "--coupling", "0.37", "--pattern", "L",
    ]);
    assert_eq!(code, 0);
    let (comments, columns, rows) = parse_csv(&stdout);
    assert_eq!(columns, vec!["exit", "occupation", "re", "im", "weight"]);
    assert_eq!(rows.len(), 4); // one elastic config + three single-excitation ones
    let total: f64 = rows.iter().map(|r| r.last().unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert!(comments.iter().any(|c| c.starts_with("# p_elastic: ")));
    // The entry-edge atom carries the largest conversion weight.
    let first = rows[1].last().unwrap().parse::<f64>().unwrap();
    let last = rows[3].last().unwrap().parse::<f64>().unwrap();
    assert!(first > last);
}

#[test]
fn scan_fit_gates_on_tolerance() {
    let (code, _, _) = srs(&[
        "scan", "--scan", "j=0.1,0.05,0.025", "--gamma", "1", "--time", "2",
        "--fit", "sf-limit", "--tol", "0.2",
    ]);
    assert_eq!(code, 0);

    let (code, _, stderr) = srs(&[
        "scan", "--scan", "j=0.1,0.05,0.025", "--gamma", "1", "--time", "2",
        "--fit", "sf-limit", "--tol", "0.0001",
    ]);
    assert_eq!(code, 1);
    assert!(stderr.contains("misses the nominal"));
}

#[test]
fn plain_scan_emits_one_row_per_point() {
    let (code, stdout, _) = srs(&[
        "scan", "--scan", "m=2,3,4", "--coupling", "0.3", "--photons", "5",
        "--pattern", "L*",
    ]);
    assert_eq!(code, 0);
    let (_, columns, rows) = parse_csv(&stdout);
    assert_eq!(columns[0], "m");
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][0], "2");
    assert_eq!(rows[2][0], "4");
}

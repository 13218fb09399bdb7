//! End-to-end tests of the `mcd` binary: each test runs the real executable
//! against files written into the target tmpdir (or the checked-in survey
//! data) and asserts on exit status, report text, and emitted CSVs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

/// 20 rows of two binary responses and one numeric predictor; both levels of
/// each response occur on both signs of `x1`, so nothing separates and the
/// fitted probabilities stay interior.
const SMALL_DATA: &str = "\
a,b,x1
y,n,0.5
n,n,-0.3
y,y,0.8
n,y,-0.9
y,n,-0.2
n,n,0.4
y,y,-0.6
y,n,0.1
n,y,0.7
n,n,-0.7
y,y,0.6
n,y,-0.4
y,n,0.3
n,n,-0.6
y,y,0.2
n,y,0.9
y,n,-0.8
n,n,0.05
y,y,-0.15
n,y,0.35
";

const SMALL_CONFIG: &str = r#"
mode = "profile"

[responses]
columns = ["a", "b"]
high = "y"
low = "n"

[model]
s = 1
z = ["1", "2"]
w = ["1", "2", "1:2"]

[[predictors]]
column = "x1"
"#;

/// Fresh working directory for one test.
fn workspace(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    if dir.exists() {
        fs::remove_dir_all(&dir).unwrap();
    }
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_small_fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let data = dir.join("data.csv");
    let config = dir.join("model.toml");
    fs::write(&data, SMALL_DATA).unwrap();
    fs::write(&config, SMALL_CONFIG).unwrap();
    (data, config)
}

fn mcd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mcd")).args(args).output().expect("running the binary")
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("stderr is UTF-8")
}

/// The value following `key` on the report line that starts with it.
fn report_field(stdout: &str, key: &str) -> String {
    for line in stdout.lines() {
        let mut tokens = line.split_whitespace();
        if tokens.next() == Some(key) {
            return tokens.collect::<Vec<_>>().join(" ");
        }
    }
    panic!("no report line starts with {key:?} in:\n{stdout}");
}

fn repo_path(relative: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(relative)
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap_or_else(|_| panic!("missing {}", path.display()));
    text.lines().map(|l| l.split(',').map(String::from).collect()).collect()
}

/// The cell at (row labeled `row`, column labeled `col`) of a headered CSV.
fn csv_cell(rows: &[Vec<String>], row: &str, col: &str) -> f64 {
    let j = rows[0].iter().position(|h| h == col).unwrap_or_else(|| panic!("no column {col}"));
    let r = rows.iter().position(|r| r[0] == row).unwrap_or_else(|| panic!("no row {row}"));
    rows[r][j].parse().expect("numeric cell")
}

#[test]
fn fit_succeeds_on_a_small_fixture() {
    let dir = workspace("fit_small");
    let (data, config) = write_small_fixture(&dir);
    let output = mcd(&[
        "--data",
        data.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));
    let stdout = stdout_of(&output);
    assert!(stdout.contains("deviance"), "no deviance line:\n{stdout}");
    assert!(stdout.contains("Coefficients"), "no coefficient table:\n{stdout}");
    let deviance: f64 = report_field(&stdout, "deviance").parse().unwrap();
    assert!(deviance.is_finite() && deviance > 0.0);
}

#[test]
fn trace_is_tab_separated_and_nonincreasing() {
    let dir = workspace("trace");
    let (data, config) = write_small_fixture(&dir);
    let output = mcd(&[
        "--data",
        data.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--trace",
        "--out",
        dir.join("out").to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));
    let stdout = stdout_of(&output);

    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("iteration\tdeviance"));
    let mut deviances = Vec::new();
    for (expected_iteration, line) in lines.take_while(|l| !l.is_empty()).enumerate() {
        let (iteration, deviance) = line.split_once('\t').expect("one tab per trace line");
        assert_eq!(iteration.parse::<usize>().unwrap(), expected_iteration);
        deviances.push(deviance.parse::<f64>().expect("deviance parses"));
    }
    assert!(deviances.len() >= 2, "trace too short: {deviances:?}");
    for pair in deviances.windows(2) {
        assert!(pair[1] <= pair[0] + 1e-10, "trace rose: {} -> {}", pair[0], pair[1]);
    }

    // The trace.tsv mirror holds exactly the block that was printed.
    let mirrored = fs::read_to_string(dir.join("out/trace.tsv")).unwrap();
    assert!(stdout.starts_with(&mirrored));
}

#[test]
fn unknown_response_label_names_row_and_column() {
    let dir = workspace("bad_label");
    let (_, config) = write_small_fixture(&dir);
    let data = dir.join("bad.csv");
    fs::write(&data, "a,b,x1\ny,n,0.5\nn,maybe,-0.3\ny,y,0.8\n").unwrap();
    let output = mcd(&[
        "--data",
        data.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(1));
    let stderr = stderr_of(&output);
    assert!(stderr.contains("row 2"), "stderr does not name the row:\n{stderr}");
    assert!(stderr.contains("\"b\""), "stderr does not name the column:\n{stderr}");
    assert!(stderr.contains("maybe"), "stderr does not show the label:\n{stderr}");
    assert!(!stderr.contains("panicked"), "stack dump leaked:\n{stderr}");
    assert!(stdout_of(&output).is_empty(), "reports were printed despite the error");
}

#[test]
fn malformed_config_is_rejected() {
    let dir = workspace("bad_config");
    let (data, _) = write_small_fixture(&dir);
    let config = dir.join("typo.toml");
    fs::write(&config, SMALL_CONFIG.replace("[[predictors]]", "[[predictor]]")).unwrap();
    let output = mcd(&[
        "--data",
        data.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(1));
    let stderr = stderr_of(&output);
    assert!(stderr.contains("typo.toml"), "stderr does not name the file:\n{stderr}");
    assert!(!stderr.contains("panicked"), "stack dump leaked:\n{stderr}");
}

#[test]
fn coefficient_csv_round_trips_at_full_precision() {
    let dir = workspace("round_trip");
    let (data, config) = write_small_fixture(&dir);
    let out = dir.join("out");
    let output = mcd(&[
        "--data",
        data.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));

    let mut checked = 0;
    for file in ["coefficients.csv", "intercept_associations.csv"] {
        let rows = read_csv(&out.join(file));
        for row in &rows[1..] {
            for cell in &row[1..] {
                let Ok(value) = cell.parse::<f64>() else { continue };
                assert_eq!(
                    &format!("{value:.11e}"),
                    cell,
                    "cell {cell:?} of {file} does not round-trip"
                );
                checked += 1;
            }
        }
    }
    assert!(checked >= 5, "only {checked} numeric cells checked");
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = workspace("determinism");
    let (data, config) = write_small_fixture(&dir);
    let run = |out: &Path| {
        let output = mcd(&[
            "--data",
            data.to_str().unwrap(),
            "--config",
            config.to_str().unwrap(),
            "--command",
            "bootstrap",
            "--replicates",
            "25",
            "--seed",
            "9",
            "--level",
            "0.9",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(output.status.success(), "stderr: {}", stderr_of(&output));
        (output.stdout, fs::read(out.join("intervals.csv")).unwrap())
    };
    let (stdout_a, csv_a) = run(&dir.join("out_a"));
    let (stdout_b, csv_b) = run(&dir.join("out_b"));
    assert_eq!(stdout_a, stdout_b, "stdout differs between identical runs");
    assert_eq!(csv_a, csv_b, "intervals.csv differs between identical runs");
}

#[test]
fn survey_pairwise_model_reproduces_published_deviance() {
    let output = mcd(&[
        "--data",
        repo_path("data/acm.csv").to_str().unwrap(),
        "--config",
        repo_path("configs/acm_model2.toml").to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));
    let stdout = stdout_of(&output);
    let deviance: f64 = report_field(&stdout, "deviance").parse().unwrap();
    assert!(
        (deviance - 6590.38).abs() <= 0.05,
        "deviance {deviance} is not within 0.05 of 6590.38"
    );
    assert_eq!(report_field(&stdout, "parameters"), "12");
}

#[test]
fn survey_reduced_model_reproduces_published_effects() {
    let dir = workspace("survey_reduced");
    let out = dir.join("out");
    let output = mcd(&[
        "--data",
        repo_path("data/acm.csv").to_str().unwrap(),
        "--config",
        repo_path("configs/acm_model5.toml").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));

    let coefficients = read_csv(&out.join("coefficients.csv"));
    let race_on_alcohol = csv_cell(&coefficients, "race", "alcohol");
    assert!(
        (race_on_alcohol - 0.45).abs() <= 0.01,
        "race -> alcohol coefficient {race_on_alcohol} is not within 0.01 of 0.45"
    );

    let associations = read_csv(&out.join("intercept_associations.csv"));
    let a_c = csv_cell(&associations, "alcohol:cigarettes", "value");
    assert!(
        (a_c - 2.05).abs() <= 0.01,
        "alcohol:cigarettes association {a_c} is not within 0.01 of 2.05"
    );
}

#[test]
fn rank_zero_predictions_are_identical_across_rows() {
    let dir = workspace("rank_zero");
    let (data, _) = write_small_fixture(&dir);
    let config = dir.join("s0.toml");
    fs::write(&config, SMALL_CONFIG.replace("s = 1", "s = 0")).unwrap();
    let out = dir.join("out");
    let output = mcd(&[
        "--data",
        data.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--command",
        "predict",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));

    let rows = read_csv(&out.join("predictions.csv"));
    assert_eq!(rows.len(), 21, "20 data rows plus a header");
    let first = &rows[1][1..];
    for row in &rows[2..] {
        assert_eq!(&row[1..], first, "a rank-0 model must predict every row identically");
    }
}

#[test]
fn select_reports_steps_and_writes_csv() {
    let dir = workspace("select");
    let (data, config) = write_small_fixture(&dir);
    let out = dir.join("out");
    let output = mcd(&[
        "--data",
        data.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--command",
        "select",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));
    let stdout = stdout_of(&output);
    assert!(stdout.contains("Step 1: rank"), "no rank step:\n{stdout}");
    assert!(stdout.contains("Final model"), "no final model block:\n{stdout}");

    let rows = read_csv(&out.join("selection.csv"));
    assert_eq!(rows[0][0], "step");
    assert!(rows.len() >= 4, "selection.csv has too few candidate rows: {rows:?}");
    assert!(
        rows[1..].iter().any(|r| r[6] == "true"),
        "no candidate is marked chosen: {rows:?}"
    );
}

#[test]
fn bootstrap_intervals_bracket_estimates() {
    let dir = workspace("bootstrap");
    let (data, config) = write_small_fixture(&dir);
    let out = dir.join("out");
    let output = mcd(&[
        "--data",
        data.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--command",
        "bootstrap",
        "--replicates",
        "30",
        "--seed",
        "4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));

    let rows = read_csv(&out.join("intervals.csv"));
    assert_eq!(rows[0], ["parameter", "estimate", "lower", "upper"]);
    assert!(rows.len() > 1);
    for row in &rows[1..] {
        let estimate: f64 = row[1].parse().unwrap();
        let lower: f64 = row[2].parse().unwrap();
        let upper: f64 = row[3].parse().unwrap();
        assert!(
            lower <= estimate && estimate <= upper,
            "{}: interval [{lower}, {upper}] does not bracket {estimate}",
            row[0]
        );
    }
}

#[test]
fn category_mode_sorts_labels_lexicographically() {
    let dir = workspace("category");
    let data = dir.join("data.csv");
    fs::write(
        &data,
        "color,x1\nred,0.5\nblue,-0.3\ngreen,0.8\nred,-0.9\nblue,0.2\ngreen,-0.5\n\
         red,1.0\nblue,0.1\ngreen,-0.2\nred,-0.7\nblue,0.6\ngreen,-0.4\n",
    )
    .unwrap();
    let config = dir.join("model.toml");
    fs::write(
        &config,
        r#"
mode = "category"

[responses]
column = "color"

[model]
s = 1

[[predictors]]
column = "x1"
"#,
    )
    .unwrap();
    let out = dir.join("out");
    let output = mcd(&[
        "--data",
        data.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));
    let stdout = stdout_of(&output);
    assert!(
        stdout.contains("blue, green, red"),
        "categories are not sorted lexicographically:\n{stdout}"
    );
    // The reference category is the first sorted label; the other two get
    // indicator columns and rows in the intercept file.
    let intercepts = read_csv(&out.join("intercepts.csv"));
    let labels: Vec<&str> = intercepts[1..].iter().map(|r| r[0].as_str()).collect();
    assert_eq!(labels, ["blue", "green", "red"]);
}

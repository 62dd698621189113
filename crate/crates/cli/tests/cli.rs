use std::collections::HashMap;
use std::process::{Command, Output};

fn logdet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_logdet"))
        .args(args)
        .env_remove("LOGDET_SEED")
        .output()
        .expect("binary runs")
}

fn logdet_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_logdet"))
        .args(args)
        .env_remove("LOGDET_SEED")
        .env(key, value)
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

// Parse a two-line CSV (header + one row) into a column -> field map.
fn csv_record(text: &str) -> HashMap<String, String> {
    let mut lines = text.lines();
    let header = lines.next().expect("header line");
    let row = lines.next().expect("data line");
    let names: Vec<&str> = header.split(',').collect();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(names.len(), fields.len(), "ragged csv: {text}");
    names
        .iter()
        .zip(fields)
        .map(|(n, f)| (n.to_string(), f.to_string()))
        .collect()
}

fn field_f64(record: &HashMap<String, String>, name: &str) -> f64 {
    record[name].parse().unwrap_or_else(|_| {
        panic!("field {name} is not a number: {:?}", record[name])
    })
}

#[test]
fn identity_suite_passes_and_exits_zero() {
    let out = logdet(&["verify-identities", "--max-K", "3"]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(text.contains("PASS"));
    assert!(!text.contains("FAIL"));
    assert!(text.contains("0 failures"));
}

#[test]
fn out_of_range_or_malformed_arguments_exit_one() {
    assert_eq!(logdet(&["verify-identities", "--max-K", "9"]).status.code(), Some(1));
    assert_eq!(logdet(&["verify-identities", "--max-K", "0"]).status.code(), Some(1));
    assert_eq!(logdet(&["moment", "--bogus-flag"]).status.code(), Some(1));
    assert_eq!(
        logdet(&[
            "density-histogram", "--ensemble", "usp", "--N", "4", "--bins", "0",
            "--samples", "10",
        ])
        .status
        .code(),
        Some(1)
    );
    // Help is not an error.
    assert_eq!(logdet(&["--help"]).status.code(), Some(0));
}

#[test]
fn moment_csv_is_deterministic_and_self_consistent() {
    let args = [
        "moment", "--ensemble", "so-even", "--K", "1", "--N", "8", "--a", "0.5",
        "--samples", "2048", "--seed", "7",
    ];
    let first = logdet(&args);
    let second = logdet(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout, "same config must give same bytes");

    let record = csv_record(&stdout_of(&first));
    let mean = field_f64(&record, "mc_mean");
    let stderr = field_f64(&record, "mc_stderr");
    let exact = field_f64(&record, "exact");
    let z = field_f64(&record, "z_score");
    assert!(stderr > 0.0);
    assert!((mean - exact).abs() <= 5.0 * stderr, "mean {mean} vs exact {exact}");
    assert!((z - (mean - exact) / stderr).abs() < 1e-12);
}

#[test]
fn moment_exact_column_is_blank_outside_its_domain() {
    let out = logdet(&[
        "moment", "--ensemble", "usp", "--K", "1", "--N", "6", "--a", "0.5",
        "--samples", "1024", "--seed", "3",
    ]);
    assert!(out.status.success());
    let record = csv_record(&stdout_of(&out));
    assert_eq!(record["exact"], "");
    assert!(field_f64(&record, "mc_mean").is_finite());
}

#[test]
fn json_output_round_trips_and_respects_no_timestamp() {
    let args = [
        "compare", "--ensemble", "so-even", "--K", "1", "--N", "6", "--a", "0.4",
        "--samples", "1024", "--seed", "5", "--format", "json", "--no-timestamp",
    ];
    let first = logdet(&args);
    let second = logdet(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);

    let value: serde_json::Value = serde_json::from_str(&stdout_of(&first)).expect("valid json");
    let root = value.as_object().expect("object root");
    assert_eq!(root["version"], env!("CARGO_PKG_VERSION"));
    assert!(!root.contains_key("timestamp"));
    let rows = root["rows"].as_array().expect("rows array");
    assert_eq!(rows.len(), 1);
    let row = rows[0].as_object().expect("row object");
    for key in [
        "ensemble", "K", "N", "a", "samples", "seed", "mc_mean", "mc_stderr",
        "asymptotic_leading", "asymptotic_value", "exact", "mc_over_asymptotic",
        "z_vs_asymptotic", "z_vs_exact",
    ] {
        assert!(row.contains_key(key), "missing key {key}");
    }
    assert!(row["mc_mean"].is_number());
    assert_eq!(row["ensemble"], "so-even");

    // With the timestamp on, the metadata carries a number.
    let stamped = logdet(&[
        "compare", "--ensemble", "so-even", "--K", "1", "--N", "6", "--a", "0.4",
        "--samples", "1024", "--seed", "5", "--format", "json",
    ]);
    let value: serde_json::Value = serde_json::from_str(&stdout_of(&stamped)).unwrap();
    assert!(value["timestamp"].is_u64());
}

#[test]
fn asymptotic_symplectic_fourth_moment_is_positive() {
    let out = logdet(&["asymptotic", "--ensemble", "usp", "--K", "4", "--N", "10", "--a", "0.1"]);
    assert!(out.status.success());
    let record = csv_record(&stdout_of(&out));
    let leading = field_f64(&record, "leading");
    let want = 10f64.powi(4) / (3.0 * 0.1);
    assert!((leading - want).abs() < 1e-9 * want);
    assert_eq!(record["formula"], "usp-general");
    assert_eq!(record["next_to_leading"], "");
}

#[test]
fn exact_subcommand_handles_both_modes() {
    let single = logdet(&["exact", "--K", "2", "--N", "50", "--a", "0.1"]);
    assert!(single.status.success());
    let record = csv_record(&stdout_of(&single));
    assert!(field_f64(&record, "value") > 0.0);

    let multi = logdet(&["exact", "--N", "5", "--shifts", "0.3, 0.7"]);
    assert!(multi.status.success());
    let record = csv_record(&stdout_of(&multi));
    assert_eq!(record["shifts"], "0.3;0.7");
    assert!(field_f64(&record, "value").is_finite());

    assert_eq!(logdet(&["exact", "--N", "5"]).status.code(), Some(1));
    assert_eq!(
        logdet(&["exact", "--N", "5", "--a", "0.1", "--shifts", "0.2"]).status.code(),
        Some(1)
    );
}

#[test]
fn density_histogram_separates_the_two_ensembles_near_zero() {
    let usp = logdet(&[
        "density-histogram", "--ensemble", "usp", "--N", "20", "--bins", "40",
        "--samples", "3000", "--seed", "17",
    ]);
    assert!(usp.status.success());
    let text = stdout_of(&usp);
    let first_row = text.lines().nth(1).expect("first bin");
    let density: f64 = first_row.split(',').nth(3).unwrap().parse().unwrap();
    assert!(density < 0.5, "symplectic first-bin density {density}");

    let so = logdet(&[
        "density-histogram", "--ensemble", "so-even", "--N", "20", "--bins", "40",
        "--samples", "3000", "--seed", "17",
    ]);
    let text = stdout_of(&so);
    let first_row = text.lines().nth(1).expect("first bin");
    let density: f64 = first_row.split(',').nth(3).unwrap().parse().unwrap();
    assert!(density > 1.0, "even orthogonal first-bin density {density}");

    // Bins integrate to the per-matrix angle count N.
    let mut mass = 0.0;
    for line in stdout_of(&usp).lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let width: f64 =
            fields[1].parse::<f64>().unwrap() - fields[0].parse::<f64>().unwrap();
        mass += width * fields[3].parse::<f64>().unwrap();
    }
    assert!((mass - 20.0).abs() < 1e-9, "total mass {mass}");
}

#[test]
fn pole_subtracted_and_variance_produce_sane_rows() {
    let out = logdet(&[
        "pole-subtracted", "--K", "1", "--N", "10", "--a", "0.2", "--samples", "1024",
        "--seed", "2",
    ]);
    assert!(out.status.success());
    let record = csv_record(&stdout_of(&out));
    assert_eq!(record["ensemble"], "so-odd");
    let pole = field_f64(&record, "pole_term");
    assert!(pole < -1.0, "pole term should be a large negative constant, got {pole}");
    assert!(field_f64(&record, "mc_mean").is_finite());

    let out = logdet(&[
        "variance", "--N", "10", "--a", "0.2", "--samples", "1024", "--seed", "2",
    ]);
    assert!(out.status.success());
    let record = csv_record(&stdout_of(&out));
    let variance = field_f64(&record, "scaled_variance");
    assert!(variance > 0.0 && variance < 0.5, "scaled variance {variance}");
}

#[test]
fn seed_falls_back_to_the_environment() {
    let explicit = logdet(&[
        "moment", "--ensemble", "so-even", "--K", "1", "--N", "6", "--a", "0.4",
        "--samples", "1024", "--seed", "123",
    ]);
    let env_only = logdet_env(
        &["moment", "--ensemble", "so-even", "--K", "1", "--N", "6", "--a", "0.4",
          "--samples", "1024"],
        "LOGDET_SEED",
        "123",
    );
    assert_eq!(explicit.stdout, env_only.stdout);

    // An explicit seed wins over the environment.
    let overruled = logdet_env(
        &["moment", "--ensemble", "so-even", "--K", "1", "--N", "6", "--a", "0.4",
          "--samples", "1024", "--seed", "123"],
        "LOGDET_SEED",
        "999",
    );
    assert_eq!(explicit.stdout, overruled.stdout);

    let bad = logdet_env(
        &["moment", "--ensemble", "so-even", "--K", "1", "--N", "6", "--a", "0.4",
          "--samples", "1024"],
        "LOGDET_SEED",
        "not-a-number",
    );
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn out_flag_writes_the_same_bytes_as_stdout() {
    let dir = std::env::temp_dir().join("logdet-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("asymptotic.csv");

    let streamed = logdet(&["asymptotic", "--ensemble", "so-odd", "--K", "2", "--N", "30", "--a", "0.2"]);
    let to_file = logdet(&[
        "asymptotic", "--ensemble", "so-odd", "--K", "2", "--N", "30", "--a", "0.2",
        "--out", path.to_str().unwrap(),
    ]);
    assert!(to_file.status.success());
    assert!(to_file.stdout.is_empty());
    let written = std::fs::read(&path).unwrap();
    assert_eq!(written, streamed.stdout);
    std::fs::remove_file(&path).ok();
}

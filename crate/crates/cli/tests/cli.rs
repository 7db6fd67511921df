//! End-to-end tests running the built binary.

use std::path::Path;
use std::process::{Command, Output};

fn mosagree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mosagree"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Parses CSV text into (headers, rows).
fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let headers: Vec<String> = lines
        .next()
        .expect("header row")
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    (headers, rows)
}

fn field(headers: &[String], row: &[String], name: &str) -> String {
    let idx = headers.iter().position(|h| h == name).unwrap();
    row[idx].clone()
}

fn num(headers: &[String], row: &[String], name: &str) -> f64 {
    field(headers, row, name).parse().unwrap()
}

#[test]
fn tables_reproduce_all_reference_cells() {
    let out = mosagree(&["tables"]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(!text.contains("MISMATCH"), "{text}");
    assert!(text.contains("pooled_vote_variance"));
    assert!(text.contains("0.64"));
    assert!(text.contains("0.13"));
}

#[test]
fn tables_difference_columns_have_the_known_extremes() {
    let out = mosagree(&["tables", "--format", "csv"]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    // Sections are emitted as named CSV blocks; take the first one.
    let with_variance = text
        .split("# ")
        .find(|s| s.starts_with("with_variance"))
        .unwrap()
        .trim_start_matches("with_variance\n");
    let (headers, rows) = parse_csv(with_variance);
    assert_eq!(rows.len(), 18);
    // Largest pooled-vs-data gaps both sit on the highest-variance test.
    let by_rmse_gap = rows
        .iter()
        .max_by(|a, b| {
            num(&headers, a, "d_rmse_global")
                .abs()
                .partial_cmp(&num(&headers, b, "d_rmse_global").abs())
                .unwrap()
        })
        .unwrap();
    assert_eq!(field(&headers, by_rmse_gap, "name"), "TMHINT-QI (Test)");
    assert!((num(&headers, by_rmse_gap, "d_rmse_global").abs() - 0.09).abs() < 5e-3);
    let by_pcc_gap = rows
        .iter()
        .max_by(|a, b| {
            num(&headers, a, "d_pcc_global")
                .abs()
                .partial_cmp(&num(&headers, b, "d_pcc_global").abs())
                .unwrap()
        })
        .unwrap();
    assert_eq!(field(&headers, by_pcc_gap, "name"), "TMHINT-QI (Test)");
    assert!((num(&headers, by_pcc_gap, "d_pcc_global").abs() - 0.05).abs() < 5e-3);
    // Model-based rows always sit on the pessimistic side of pooled rows.
    for row in &rows {
        assert!(num(&headers, row, "rmse_binovotes") >= num(&headers, row, "rmse_global"));
        assert!(num(&headers, row, "pcc_binovotes") <= num(&headers, row, "pcc_global"));
    }
}

#[test]
fn bounds_from_summary_stats_match_reference_rows() {
    // VCC18 summary through both modes.
    let out = mosagree(&["bounds", "--stats", "2.92", "0.79", "4", "--format", "csv"]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let (headers, rows) = parse_csv(&stdout(&out));
    assert_eq!(rows.len(), 2);
    let global = rows
        .iter()
        .find(|r| field(&headers, r, "source") == "global-average")
        .unwrap();
    assert!((num(&headers, global, "rmse_bound") - 0.40).abs() < 5e-3);
    assert!((num(&headers, global, "pcc_bound") - 0.89).abs() < 5e-3);
    let bv = rows
        .iter()
        .find(|r| field(&headers, r, "source") == "binovotes-model")
        .unwrap();
    assert!((num(&headers, bv, "rmse_bound") - 0.46).abs() < 5e-3);
    assert!((num(&headers, bv, "pcc_bound") - 0.85).abs() < 5e-3);
}

#[test]
fn bounds_on_alternate_scale_skips_or_refuses_the_pooled_value() {
    // Model-based bounds work on the 0-10 eleven-level scale.
    let out = mosagree(&[
        "bounds",
        "--scale",
        "0",
        "10",
        "11",
        "--stats",
        "5.25",
        "4.56",
        "5",
        "--mode",
        "binovotes",
        "--format",
        "csv",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let (headers, rows) = parse_csv(&stdout(&out));
    assert!((num(&headers, &rows[0], "rmse_bound") - 0.64).abs() < 5e-3);
    assert!((num(&headers, &rows[0], "pcc_bound") - 0.95).abs() < 5e-3);

    // The bundled pooled variance belongs to the 1-5 scale.
    let out = mosagree(&[
        "bounds", "--scale", "0", "10", "11", "--stats", "5.25", "4.56", "5", "--mode", "global",
    ]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("1-5"));
}

#[test]
fn bounds_from_a_votes_file_reports_three_ordered_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("votes.csv");
    // Spread MOS values with nonzero within-file variance.
    let mut text = String::from("file_id,subject_id,vote\n");
    let votes = [
        [1, 1, 2],
        [2, 1, 2],
        [2, 3, 2],
        [3, 3, 4],
        [3, 4, 4],
        [4, 5, 4],
        [5, 4, 5],
        [5, 5, 5],
    ];
    for (i, vs) in votes.iter().enumerate() {
        for (j, v) in vs.iter().enumerate() {
            text.push_str(&format!("clip{i},s{j},{v}\n"));
        }
    }
    std::fs::write(&path, text).unwrap();

    let out = mosagree(&[
        "bounds",
        "--data",
        path.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let (headers, rows) = parse_csv(&stdout(&out));
    assert_eq!(rows.len(), 3);
    for source in ["data-driven", "global-average", "binovotes-model"] {
        assert!(rows.iter().any(|r| field(&headers, r, "source") == source));
    }
    // Within one dataset, a larger vote variance always means a larger RMSE
    // bound and a smaller PCC bound.
    let mut by_variance: Vec<(f64, f64, f64)> = rows
        .iter()
        .map(|r| {
            (
                num(&headers, r, "vote_variance"),
                num(&headers, r, "rmse_bound"),
                num(&headers, r, "pcc_bound"),
            )
        })
        .collect();
    by_variance.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for pair in by_variance.windows(2) {
        assert!(
            pair[0].1 <= pair[1].1 + 1e-12,
            "RMSE not ordered: {by_variance:?}"
        );
        assert!(
            pair[0].2 >= pair[1].2 - 1e-12,
            "PCC not ordered: {by_variance:?}"
        );
    }
    for (_, rmse, pcc) in &by_variance {
        assert!(*rmse > 0.0);
        assert!(*pcc > 0.0 && *pcc <= 1.0);
    }
}

#[test]
fn midscale_heavy_dataset_orders_model_below_pooled_pcc() {
    // MOS values clustered mid-scale make the model-implied vote variance
    // exceed the pooled 0.64, which pushes the model PCC below the pooled
    // PCC and its RMSE above, as seen across the bundled reference tests.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mos.csv");
    let mut text = String::from("file_id,mos,n_votes,vote_var\n");
    for (i, mos) in [2.2, 2.5, 2.7, 3.0, 3.1, 3.3, 3.6, 3.9].iter().enumerate() {
        text.push_str(&format!("f{i},{mos},6,0.5\n"));
    }
    std::fs::write(&path, text).unwrap();
    let out = mosagree(&[
        "bounds",
        "--data",
        path.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let (headers, rows) = parse_csv(&stdout(&out));
    let get = |source: &str, col: &str| {
        let row = rows
            .iter()
            .find(|r| field(&headers, r, "source") == source)
            .unwrap();
        num(&headers, row, col)
    };
    assert!(get("binovotes-model", "vote_variance") > 0.64);
    assert!(get("binovotes-model", "pcc_bound") <= get("global-average", "pcc_bound"));
    assert!(get("binovotes-model", "rmse_bound") >= get("global-average", "rmse_bound"));

    // --exact equals the default here because every file has 6 votes.
    let exact = mosagree(&[
        "bounds",
        "--data",
        path.to_str().unwrap(),
        "--mode",
        "data",
        "--exact",
        "--format",
        "csv",
    ]);
    assert!(exact.status.success());
    let (h2, r2) = parse_csv(&stdout(&exact));
    let plain = get("data-driven", "mse_bound");
    assert!((num(&h2, &r2[0], "mse_bound") - plain).abs() < 1e-12);
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = mosagree(&[
            "simulate",
            "--fig4",
            "--seed",
            "7",
            "--reps",
            "50",
            "--votes-list",
            "1,4",
            "--files-grid",
            "5,20",
            "--format",
            "csv",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "stderr: {}", stderr(&out));
    }
    let bytes_a = std::fs::read(&a).unwrap();
    let bytes_b = std::fs::read(&b).unwrap();
    assert_eq!(bytes_a, bytes_b);
    let (headers, rows) = parse_csv(&String::from_utf8(bytes_a).unwrap());
    assert_eq!(rows.len(), 4);
    assert!(headers.contains(&"mean_sample_pcc".to_string()));
}

#[test]
fn simulate_summary_json_has_aggregates() {
    let out = mosagree(&[
        "simulate", "--dist", "uniform", "--files", "200", "--votes", "4", "--reps", "3", "--seed",
        "11", "--format", "json",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["config"]["seed"], 11);
    assert!(json["mse"]["mean"].as_f64().unwrap() > 0.0);
    assert!(json["pcc"]["mean"].as_f64().unwrap() > 0.0);
}

#[test]
fn simulate_reads_config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sim.conf");
    std::fs::write(
        &cfg,
        "# synthetic test setup\nscale = 1 5 5\ndist = tri:3\nfiles = 100\nvotes = 2\nreps = 2\nseed = 5\n",
    )
    .unwrap();
    let out = mosagree(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["config"]["dist"], "tri:3");
    assert_eq!(json["config"]["files"], 100);
    // An explicit flag wins over the file.
    let out = mosagree(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--files",
        "50",
        "--format",
        "json",
    ]);
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["config"]["files"], 50);
}

#[test]
fn curves_cover_requested_distributions_and_votes() {
    let out = mosagree(&[
        "curves",
        "--dists",
        "uniform,tri:3,beta:2:2,beta:2:2.5",
        "--nv",
        "1..30",
        "--format",
        "csv",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let (headers, rows) = parse_csv(&stdout(&out));
    assert_eq!(rows.len(), 4 * 30);
    // Uniform, one vote: RMSE sqrt(2/3), PCC sqrt(2/3).
    let first = rows
        .iter()
        .find(|r| field(&headers, r, "dist") == "uniform" && field(&headers, r, "n_votes") == "1")
        .unwrap();
    assert!((num(&headers, first, "rmse_bound") - (2.0f64 / 3.0).sqrt()).abs() < 1e-9);
    assert!((num(&headers, first, "pcc_bound") - (2.0f64 / 3.0).sqrt()).abs() < 1e-9);
}

#[test]
fn model_pmf_outputs_are_plot_ready() {
    let out = mosagree(&[
        "model",
        "--binomos",
        "point:3",
        "--nv",
        "1",
        "--format",
        "csv",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let (headers, rows) = parse_csv(&stdout(&out));
    assert_eq!(rows.len(), 5);
    let probs: Vec<f64> = rows
        .iter()
        .map(|r| num(&headers, r, "probability"))
        .collect();
    let want = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];
    for (p, w) in probs.iter().zip(want) {
        assert!((p - w).abs() < 1e-12);
    }

    let out = mosagree(&["model", "--pmf-curves", "--grid", "41", "--format", "csv"]);
    let (headers, rows) = parse_csv(&stdout(&out));
    assert_eq!(rows.len(), 41);
    assert_eq!(headers.len(), 6); // y + five levels
    for row in &rows {
        let total: f64 = (0..5)
            .map(|k| num(&headers, row, &format!("p_level_{k}")))
            .sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
}

#[test]
fn check_reports_coverage_and_moments() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mos.csv");
    std::fs::write(
        &path,
        "file_id,mos,n_votes,vote_var\nf1,1.2,10,0.5\nf2,1.8,10,0.5\nf3,2.2,10,0.5\nf4,2.8,10,0.5\nf5,3.2,10,0.5\nf6,3.8,10,0.5\nf7,4.2,10,0.5\nf8,4.8,10,0.5\n",
    )
    .unwrap();
    let out = mosagree(&["check", "--data", path.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("pass"), "{text}");
    assert!(text.contains("observed_vote_variance"));

    // A narrow dataset fails coverage but the command still succeeds.
    let narrow = dir.path().join("narrow.csv");
    std::fs::write(
        &narrow,
        "file_id,mos,n_votes\nf1,2.4,10\nf2,2.6,10\nf3,3.0,10\nf4,3.4,10\n",
    )
    .unwrap();
    let out = mosagree(&["check", "--data", narrow.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("FAIL"));
}

#[test]
fn malformed_input_fails_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "file_id,subject_id,vote\nclip1,a,3.7\n").unwrap();
    let out = mosagree(&["bounds", "--data", path.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("error:"), "{err}");
    assert!(err.contains("line 2"), "{err}");
    assert!(stdout(&out).is_empty());
}

#[test]
fn off_lattice_mos_warns_on_stderr_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mos.csv");
    std::fs::write(
        &path,
        "file_id,mos,n_votes,vote_var\nf1,3.14,10,0.5\nf2,2.0,10,0.5\n",
    )
    .unwrap();
    let out = mosagree(&[
        "bounds",
        "--data",
        path.to_str().unwrap(),
        "--mode",
        "data",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    assert!(stderr(&out).contains("off the 10-vote lattice"));
    assert!(!stdout(&out).contains("warning"));
}

#[test]
fn stats_and_data_are_mutually_exclusive() {
    let out = mosagree(&["bounds", "--data", "x.csv", "--stats", "3", "1", "4"]);
    assert!(!out.status.success());
    let out = mosagree(&["bounds"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("either"));
}

#[test]
fn variance_convention_flag_changes_loaded_variance() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("votes.csv");
    std::fs::write(
        &path,
        "file_id,subject_id,vote\na,s1,1\na,s2,2\nb,s1,2\nb,s2,3\nc,s1,3\nc,s2,4\nd,s1,4\nd,s2,5\n",
    )
    .unwrap();
    let run = |convention: &str| -> f64 {
        let out = mosagree(&[
            "bounds",
            "--data",
            path.to_str().unwrap(),
            "--mode",
            "data",
            "--variance-convention",
            convention,
            "--format",
            "csv",
        ]);
        assert!(out.status.success(), "stderr: {}", stderr(&out));
        let (headers, rows) = parse_csv(&stdout(&out));
        num(&headers, &rows[0], "vote_variance")
    };
    let unbiased = run("unbiased");
    let population = run("population");
    assert!(
        (unbiased - 2.0 * population).abs() < 1e-12,
        "{unbiased} vs {population}"
    );
}

#[test]
fn out_flag_writes_the_file_and_keeps_stdout_clean() {
    let dir = tempfile::tempdir().unwrap();
    let path: &Path = &dir.path().join("curves.csv");
    let out = mosagree(&[
        "curves",
        "--nv",
        "1,2",
        "--dists",
        "uniform",
        "--format",
        "csv",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).is_empty());
    assert!(path.exists());
}

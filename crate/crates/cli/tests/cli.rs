use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bwp(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bwp"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .env_remove("BWP_THREADS")
        .output()
        .expect("spawn bwp")
}

fn ok(out: &Path, args: &[&str]) -> String {
    let o = bwp(out, args);
    assert!(
        o.status.success(),
        "bwp {args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let header = rdr.headers().unwrap().iter().map(str::to_owned).collect();
    let rows = rdr
        .records()
        .map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

const FAST: [&str; 4] = ["--resolution", "1", "--angular", "180"];

#[test]
fn eval_room_writes_grid_summary_and_manifest() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["eval-room", "--width", "4", "--length", "6", "--freq-ghz", "28"]);

    let (header, rows) = read_csv(&dir.path().join("grid.csv"));
    assert_eq!(
        header,
        ["x", "y", "g_i", "g_p", "p_b", "i_b", "p_o", "i_o", "p_b_los", "p_b_nlos", "i_b_los", "i_b_nlos"]
    );
    assert_eq!(rows.len(), 8 * 12);
    for r in &rows {
        assert!(r[0] > 0.0 && r[0] < 4.0 && r[1] > 0.0 && r[1] < 6.0);
        assert!((r[4] - r[8] - r[9]).abs() <= 1e-12 * r[4]);
        assert!((r[5] - r[10] - r[11]).abs() <= 1e-12 * r[5]);
    }

    let (_, summary) = read_csv(&dir.path().join("summary.csv"));
    let n = rows.len() as f64;
    let mean_gi: f64 = rows.iter().map(|r| r[2]).sum::<f64>() / n;
    let mean_gp: f64 = rows.iter().map(|r| r[3]).sum::<f64>() / n;
    assert!((summary[0][3] - mean_gi).abs() < 1e-9 * mean_gi);
    assert!((summary[0][4] - mean_gp).abs() < 1e-9 * mean_gp);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "eval-room");
    assert!(manifest["scenario"].as_str().unwrap().contains("frequency_ghz = 28"));
    assert_eq!(manifest["layout_sha256"].as_str().unwrap().len(), 64);
    assert!(manifest["threads"].as_u64().unwrap() >= 1);
}

#[test]
fn non_positive_width_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let o = bwp(dir.path(), &["eval-room", "--width", "0", "--length", "5", "--freq-ghz", "6"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("width"));
}

#[test]
fn missing_frequency_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let o = bwp(dir.path(), &["eval-room", "--width", "3", "--length", "5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn scenario_file_is_overridden_by_flags() {
    let dir = TempDir::new().unwrap();
    let scen = dir.path().join("s.txt");
    fs::write(&scen, "frequency_ghz = 6\n").unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    let args = ["eval-room", "--width", "3", "--length", "3", "--resolution", "1", "--angular", "180"];
    ok(&a, &[&args[..], &["--scenario", scen.to_str().unwrap()]].concat());
    ok(&b, &[&args[..], &["--freq-ghz", "6"]].concat());
    ok(&c, &[&args[..], &["--scenario", scen.to_str().unwrap(), "--freq-ghz", "28"]].concat());
    let grid = |d: &Path| fs::read_to_string(d.join("grid.csv")).unwrap();
    assert_eq!(grid(&a), grid(&b));
    assert_ne!(grid(&a), grid(&c));
}

#[test]
fn layout_syntax_error_names_the_line() {
    let dir = TempDir::new().unwrap();
    let layout = dir.path().join("bad.txt");
    fs::write(&layout, "bwp-layout v1\nwall 0 0 4 0 10\nwall 0 0 1\n").unwrap();
    let o = bwp(
        dir.path(),
        &["eval-building", "--layout", layout.to_str().unwrap(), "--freq-ghz", "6"],
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn missing_layout_file_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let o = bwp(
        dir.path(),
        &["eval-building", "--layout", "/nonexistent/layout.txt", "--freq-ghz", "6"],
    );
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn eval_building_room_means_and_cdfs() {
    let dir = TempDir::new().unwrap();
    let layout = dir.path().join("two.txt");
    fs::write(
        &layout,
        "bwp-layout v1\n\
         wall 0 0 8 0 10\nwall 8 0 8 4 10\nwall 8 4 0 4 10\nwall 0 4 0 0 10\n\
         wall 4 0 4 4 10\n",
    )
    .unwrap();
    let out = ok(
        dir.path(),
        &[&["eval-building", "--layout", layout.to_str().unwrap(), "--freq-ghz", "28"][..], &FAST[..]].concat(),
    );
    assert!(out.contains("rooms=2"), "{out}");
    let (_, rooms) = read_csv(&dir.path().join("rooms.csv"));
    assert_eq!(rooms.len(), 2);
    assert_eq!(rooms[0][1] + rooms[1][1], 32.0);
    // The two rooms mirror each other.
    assert!((rooms[0][4] - rooms[1][4]).abs() < 1e-9 * rooms[0][4]);

    let (header, cdf) = read_csv(&dir.path().join("cdf_g_i.csv"));
    assert_eq!(header, ["g_i", "probability"]);
    assert!(cdf.windows(2).all(|w| w[0][0] < w[1][0] && w[0][1] < w[1][1]));
    assert_eq!(cdf.last().unwrap()[1], 1.0);
}

#[test]
fn multiwall_model_changes_building_output() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let base = ["eval-room", "--width", "4", "--length", "5", "--freq-ghz", "28"];
    ok(&a, &[&base[..], &FAST[..]].concat());
    ok(&b, &[&base[..], &FAST[..], &["--nlos-model", "multiwall"]].concat());
    let (_, ra) = read_csv(&a.join("grid.csv"));
    let (_, rb) = read_csv(&b.join("grid.csv"));
    assert!(ra.iter().zip(&rb).any(|(x, y)| (x[2] - y[2]).abs() > 1e-6 * x[2]));
    // Open-space powers do not depend on the building model.
    assert!(ra.iter().zip(&rb).all(|(x, y)| x[6] == y[6] && x[7] == y[7]));
}

#[test]
fn sweep_frequency_reports_every_point_and_the_optimum() {
    let dir = TempDir::new().unwrap();
    let out = ok(dir.path(), &[&["sweep-frequency"][..], &FAST[..]].concat());
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 25);
    assert!(lines[24].starts_with("argmax f_star_ghz="));
    let (_, rows) = read_csv(&dir.path().join("sweep_frequency.csv"));
    assert_eq!(rows.len(), 24);
    assert!((rows[0][0] - 0.5).abs() < 1e-12 && (rows[23][0] - 100.0).abs() < 1e-9);
}

#[test]
fn sweep_dimensions_covers_the_product() {
    let dir = TempDir::new().unwrap();
    ok(
        dir.path(),
        &[&["sweep-dimensions", "--areas", "20,40", "--aspect-ratios", "1,2,3", "--freq-ghz", "28"][..], &FAST[..]]
            .concat(),
    );
    let (header, rows) = read_csv(&dir.path().join("sweep_dimensions.csv"));
    assert_eq!(header, ["frequency_ghz", "area_m2", "aspect_ratio", "mean_g_i", "mean_g_p"]);
    assert_eq!(rows.len(), 6);
}

#[test]
fn validate_mc_is_reproducible_for_a_seed() {
    let dir = TempDir::new().unwrap();
    let args = |seed: &'static str| {
        vec![
            "validate-mc", "--width", "4", "--length", "5", "--freq-ghz", "28", "--n", "20000", "--reps", "3",
            "--seed", seed,
        ]
    };
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    ok(&a, &args("7"));
    ok(&b, &args("7"));
    ok(&c, &args("8"));
    let mc = |d: &Path| fs::read_to_string(d.join("mc.csv")).unwrap();
    assert_eq!(mc(&a), mc(&b));
    assert_ne!(mc(&a), mc(&c));
    let text = mc(&a);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("quantity,quadrature,mc_mean,mc_std_err,z"));
    assert_eq!(lines.count(), 8);
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let base = ["eval-room", "--width", "3", "--length", "7", "--freq-ghz", "6"];
    ok(&a, &[&base[..], &FAST[..], &["--threads", "1"]].concat());
    ok(&b, &[&base[..], &FAST[..], &["--threads", "3"]].concat());
    assert_eq!(
        fs::read_to_string(a.join("grid.csv")).unwrap(),
        fs::read_to_string(b.join("grid.csv")).unwrap()
    );
}

#[test]
fn trained_surrogate_reproduces_a_training_row() {
    let dir = TempDir::new().unwrap();
    let out = ok(
        dir.path(),
        &[
            &["train-surrogate", "--band", "28", "--areas", "20,40", "--aspect-ratios", "1,2", "--epochs", "300"][..],
            &FAST[..],
        ]
        .concat(),
    );
    let rmse: Vec<f64> = out
        .split_whitespace()
        .filter_map(|kv| kv.strip_prefix("validation_rmse_g_i=").or(kv.strip_prefix("validation_rmse_g_p=")))
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(rmse.len(), 2);

    let (_, data) = read_csv(&dir.path().join("dataset.csv"));
    let (_, loss) = read_csv(&dir.path().join("loss.csv"));
    assert_eq!(loss.len(), 300);

    // Feed the whole dataset back through `predict --input`.
    let input = dir.path().join("in.csv");
    let mut w = csv::Writer::from_path(&input).unwrap();
    w.write_record(["x", "y", "width", "length"]).unwrap();
    for r in &data {
        w.write_record(r[..4].iter().map(f64::to_string)).unwrap();
    }
    w.flush().unwrap();
    let pred_dir = dir.path().join("pred");
    let model = dir.path().join("model.txt");
    ok(
        &pred_dir,
        &["predict", "--model", model.to_str().unwrap(), "--input", input.to_str().unwrap()],
    );
    let (_, pred) = read_csv(&pred_dir.join("predictions.csv"));
    assert_eq!(pred.len(), data.len());
    let n = data.len() as f64;
    for k in 0..2 {
        let err = (data.iter().zip(&pred).map(|(d, p)| (d[4 + k] - p[4 + k]).powi(2)).sum::<f64>() / n).sqrt();
        assert!(err <= 3.0 * rmse[k], "output {k}: rmse {err} vs validation {}", rmse[k]);
    }

    // Single-point form agrees with the batch form.
    let single = ok(
        &pred_dir,
        &[
            "predict", "--model", model.to_str().unwrap(),
            "--x", &data[0][0].to_string(), "--y", &data[0][1].to_string(),
            "--width", &data[0][2].to_string(), "--length", &data[0][3].to_string(),
        ],
    );
    assert!(single.contains(&format!("g_i={}", pred[0][4])), "{single}");
}

#[test]
fn predict_rejects_a_malformed_input_file() {
    let dir = TempDir::new().unwrap();
    ok(
        dir.path(),
        &[&["train-surrogate", "--band", "6", "--areas", "20", "--aspect-ratios", "1", "--epochs", "2"][..], &FAST[..]]
            .concat(),
    );
    let input = dir.path().join("in.csv");
    fs::write(&input, "x,y,width,length\n1,1,4,5\n1,abc,4,5\n").unwrap();
    let o = bwp(
        dir.path(),
        &[
            "predict", "--model", dir.path().join("model.txt").to_str().unwrap(),
            "--input", input.to_str().unwrap(),
        ],
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn calibration_reports_the_noise_power() {
    let dir = TempDir::new().unwrap();
    let out = ok(
        dir.path(),
        &[
            &["calibrate-noise", "--lo", "1", "--hi", "1000", "--freq-ghz", "6", "--areas", "20", "--aspect-ratios", "1,2"][..],
            &FAST[..],
        ]
        .concat(),
    );
    assert!(out.starts_with("sigma2_w=0"), "{out}");
    let (_, rows) = read_csv(&dir.path().join("calibration.csv"));
    assert_eq!(rows.len(), 2);
}

#[test]
fn csv_values_round_trip_exactly() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &[&["eval-room", "--width", "2.5", "--length", "3", "--freq-ghz", "60"][..], &FAST[..]].concat());
    let text = fs::read_to_string(dir.path().join("grid.csv")).unwrap();
    for field in text.lines().skip(1).flat_map(|l| l.split(',')) {
        let v: f64 = field.parse().unwrap();
        assert_eq!(v.to_string(), field);
    }
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use radcal::cli::formats::{read_points, CalibrationFile};
use radcal::cli::main_with_args;
use tempfile::TempDir;

const SPEC: &str = r#"{
  "grid": { "rows": 8, "cols": 8, "spacing": 0.03 },
  "views": 3,
  "intrinsics": { "alpha": 800, "beta": 800, "gamma": 0.2, "u0": 320, "v0": 240 },
  "distortion": { "model": 3, "k1": -0.12, "k2": -0.14 },
  "noise_sigma": 0.0,
  "seed": 42
}"#;

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn radcal(args: &[&str]) -> Run {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("radcal").chain(args.iter().copied());
    let code = main_with_args(argv, &mut out, &mut err);
    Run {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn workspace() -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(&spec, SPEC).unwrap();
    (dir, spec)
}

/// synth followed by calibrate; returns the calibration file path.
fn calibrated(dir: &Path, spec: &Path) -> PathBuf {
    let corr = dir.join("corr.csv");
    let calib = dir.join("calib.json");
    assert_eq!(radcal(&["synth", "--spec", s(spec), "--output", s(&corr)]).code, 0);
    let r = radcal(&["calibrate", "--input", s(&corr), "--model", "3", "--output", s(&calib)]);
    assert_eq!(r.code, 0, "{}", r.err);
    calib
}

#[test]
fn synth_writes_expected_rows_and_is_reproducible() {
    let (dir, spec) = workspace();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    assert_eq!(radcal(&["synth", "--spec", s(&spec), "--output", s(&a)]).code, 0);
    assert_eq!(radcal(&["synth", "--spec", s(&spec), "--output", s(&b)]).code, 0);
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().next(), Some("view_id,Xw,Yw,ud,vd"));
    assert_eq!(text.lines().count(), 1 + 192);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(
        fs::read(dir.path().join("a.truth.json")).unwrap(),
        fs::read(dir.path().join("b.truth.json")).unwrap()
    );
}

#[test]
fn synth_rejects_bad_spec() {
    let (dir, _) = workspace();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ \"grid\": 3 }").unwrap();
    let r = radcal(&["synth", "--spec", s(&bad), "--output", s(&dir.path().join("x.csv"))]);
    assert_eq!(r.code, 2);
}

#[test]
fn noiseless_calibration_recovers_truth() {
    let (dir, spec) = workspace();
    let calib = calibrated(dir.path(), &spec);
    let file = CalibrationFile::load(&calib).unwrap();
    let truth = CalibrationFile::load(&dir.path().join("corr.truth.json")).unwrap();
    assert!(file.j_final <= 1e-6);
    assert!(file.converged);
    assert!((file.intrinsics.alpha - truth.intrinsics.alpha).abs() < 0.8);
    assert!((file.intrinsics.u0 - truth.intrinsics.u0).abs() < 0.1);
    assert!((file.k1 - truth.k1).abs() < 1e-3 && (file.k2 - truth.k2).abs() < 1e-3);
}

#[test]
fn calibrate_reports_progress() {
    let (dir, spec) = workspace();
    let corr = dir.path().join("corr.csv");
    radcal(&["synth", "--spec", s(&spec), "--output", s(&corr)]);
    let r = radcal(&[
        "calibrate", "--input", s(&corr), "--model", "1", "--output", s(&dir.path().join("c.json")),
    ]);
    for key in ["J_init:", "J_final:", "iterations:"] {
        assert!(r.out.contains(key), "{}", r.out);
    }
}

#[test]
fn two_views_are_rejected() {
    let (dir, _) = workspace();
    let corr = dir.path().join("two.csv");
    let mut text = String::from("view_id,Xw,Yw,ud,vd\n");
    for view in 0..2 {
        for i in 0..4 {
            text.push_str(&format!("{view},{},{},{},{}\n", i % 2, i / 2, 100 + i * 10 + view, 200 + i * 7));
        }
    }
    fs::write(&corr, text).unwrap();
    let r = radcal(&["calibrate", "--input", s(&corr), "--model", "3", "--output", s(&dir.path().join("c.json"))]);
    assert_eq!(r.code, 3);
    assert!(r.err.contains("at least 3 views"), "{}", r.err);
}

#[test]
fn malformed_row_names_its_line() {
    let (dir, _) = workspace();
    let corr = dir.path().join("bad.csv");
    fs::write(&corr, "view_id,Xw,Yw,ud,vd\r\n0,0,0,1,2\r\n0,1,zero,3,4\r\n").unwrap();
    let r = radcal(&["calibrate", "--input", s(&corr), "--model", "3", "--output", s(&dir.path().join("c.json"))]);
    assert_eq!(r.code, 2);
    assert!(r.err.contains("line 3"), "{}", r.err);
    fs::write(&corr, "view_id,Xw,Yw,ud,vd\n0,0,0,1,2\n0,1,2,3\n").unwrap();
    let r = radcal(&["calibrate", "--input", s(&corr), "--model", "3", "--output", s(&dir.path().join("c.json"))]);
    assert_eq!(r.code, 2);
    assert!(r.err.contains("line 3"), "{}", r.err);
}

#[test]
fn forward_then_inverse_is_identity() {
    let (dir, spec) = workspace();
    let calib = calibrated(dir.path(), &spec);
    let pts = dir.path().join("pts.csv");
    let mut text = String::from("u,v\n320,240\n");
    for i in 0..50 {
        let t = i as f64 * 0.37;
        text.push_str(&format!("{},{}\n", 320.0 + 250.0 * t.cos() * (i as f64 / 50.0), 240.0 + 200.0 * t.sin() * (i as f64 / 50.0)));
    }
    fs::write(&pts, &text).unwrap();
    let (fwd, inv) = (dir.path().join("fwd.csv"), dir.path().join("inv.csv"));
    let r = radcal(&["undistort", "--calib", s(&calib), "--points", s(&pts), "--output", s(&fwd), "--direction", "forward"]);
    assert_eq!(r.code, 0, "{}", r.err);
    let r = radcal(&["undistort", "--calib", s(&calib), "--points", s(&fwd), "--output", s(&inv)]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("failed: 0"));

    let a = read_points(text.as_bytes()).unwrap();
    let b = read_points(fs::File::open(&inv).unwrap()).unwrap();
    let f = read_points(fs::File::open(&fwd).unwrap()).unwrap();
    assert_eq!(a.len(), b.len());
    for (p, q) in a.iter().zip(&b) {
        assert!((p.u - q.u).hypot(p.v - q.v) <= 1e-6);
    }
    // the principal point is fixed both ways
    let file = CalibrationFile::load(&calib).unwrap();
    let (u0, v0) = (file.intrinsics.u0, file.intrinsics.v0);
    let pp = dir.path().join("pp.csv");
    fs::write(&pp, format!("u,v\n{u0:.17e},{v0:.17e}\n")).unwrap();
    for dir_flag in ["forward", "inverse"] {
        let out = dir.path().join(format!("pp_{dir_flag}.csv"));
        radcal(&["undistort", "--calib", s(&calib), "--points", s(&pp), "--output", s(&out), "--direction", dir_flag]);
        let q = read_points(fs::File::open(&out).unwrap()).unwrap()[0];
        assert!((q.u - u0).abs() < 1e-9 && (q.v - v0).abs() < 1e-9);
    }
    assert_eq!(f.len(), a.len());
}

#[test]
fn empty_points_file_gives_empty_output() {
    let (dir, spec) = workspace();
    let calib = calibrated(dir.path(), &spec);
    let (pts, out) = (dir.path().join("empty.csv"), dir.path().join("out.csv"));
    fs::write(&pts, "").unwrap();
    let r = radcal(&["undistort", "--calib", s(&calib), "--points", s(&pts), "--output", s(&out)]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(read_points(fs::File::open(&out).unwrap()).unwrap().is_empty());
}

#[test]
fn compare_prints_table_and_json() {
    let (dir, spec) = workspace();
    let corr = dir.path().join("corr.csv");
    radcal(&["synth", "--spec", s(&spec), "--output", s(&corr)]);
    let table = radcal(&["compare", "--input", s(&corr)]);
    assert_eq!(table.code, 0, "{}", table.err);
    let lines: Vec<&str> = table.out.lines().collect();
    assert_eq!(lines.len(), 9);
    assert_eq!(lines[0].split_whitespace().collect::<Vec<_>>(), ["model1", "model2", "model3"]);
    let labels: Vec<&str> = lines[1..].iter().map(|l| l.split_whitespace().next().unwrap()).collect();
    assert_eq!(labels, ["J", "alpha", "gamma", "u0", "beta", "v0", "k1", "k2"]);

    let json = radcal(&["compare", "--input", s(&corr), "--json"]);
    let v: serde_json::Value = serde_json::from_str(&json.out).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for (col, row) in rows.iter().enumerate() {
        let alpha = row["fit"]["alpha"].as_f64().unwrap();
        let cell: f64 = lines[2].split_whitespace().nth(col + 1).unwrap().parse().unwrap();
        assert!((alpha - cell).abs() < 1e-6);
    }
}

fn write_pose(dir: &Path) -> PathBuf {
    let pose = dir.join("pose.json");
    fs::write(&pose, r#"{ "axis_angle": [0.6, 0.0, 0.0], "t": [0.5, -0.8, -0.7] }"#).unwrap();
    pose
}

fn localize_calib(dir: &Path) -> PathBuf {
    let calib = dir.join("cam.json");
    fs::write(
        &calib,
        r#"{ "model": 3, "k1": -0.1, "k2": -0.05,
  "intrinsics": { "alpha": 400, "beta": 400, "gamma": 0, "u0": 320, "v0": 240 },
  "views": [], "J_final": 0, "rms_px": 0,
  "options": { "tol_x": 1e-5, "tol_fun": 1e-5, "max_iter": 120, "max_fun_evals": 8000 } }"#,
    )
    .unwrap();
    calib
}

fn observe(pose: &radcal::ViewExtrinsics, x: f64, y: f64) -> (f64, f64) {
    use radcal::distortion::distort_normalized;
    let a = radcal::IntrinsicMatrix::new(400.0, 400.0, 0.0, 320.0, 240.0).unwrap();
    let spec = radcal::DistortionSpec::new(radcal::DistortionModel::Model3, -0.1, -0.05).unwrap();
    let n = pose.to_camera(radcal::WorldPoint::planar(x, y)).normalize().unwrap();
    let p = a.to_pixel(distort_normalized(&spec, n));
    (p.u, p.v)
}

#[test]
fn localize_at_assumed_pose_and_with_deviation() {
    use nalgebra::Vector3;
    let dir = tempfile::tempdir().unwrap();
    let (calib, pose) = (localize_calib(dir.path()), write_pose(dir.path()));
    let assumed = radcal::ViewExtrinsics::new(Vector3::new(0.6, 0.0, 0.0), Vector3::new(0.5, -0.8, -0.7));

    let run = |truth: &radcal::ViewExtrinsics| {
        let (a, b) = (observe(truth, 0.0, 0.0), observe(truth, 1.0, 0.0));
        let obs = format!("{},{},{},{}", a.0, a.1, b.0, b.1);
        let r = radcal(&[
            "localize", "--calib", s(&calib), "--pose", s(&pose), "--line-map", "0,0,1,0", "--observed", &obs, "--json",
        ]);
        assert_eq!(r.code, 0, "{}", r.err);
        serde_json::from_str::<serde_json::Value>(&r.out).unwrap()
    };

    let v = run(&assumed);
    assert!(v["delta_theta_rad"].as_f64().unwrap().abs() < 1e-9);
    let t1: Vec<f64> = serde_json::from_value(v["t1"].clone()).unwrap();
    assert!((t1[0] - 0.5).abs() < 1e-9 && (t1[1] + 0.8).abs() < 1e-9 && (t1[2] + 0.7).abs() < 1e-9);

    let r1 = radcal::localizer::delta_rotation(0.25).transpose() * assumed.rotation_matrix();
    let truth = radcal::ViewExtrinsics::from_rotation_matrix(&r1, assumed.translation - Vector3::new(0.3, -0.1, 0.0)).unwrap();
    let v = run(&truth);
    assert!((v["delta_theta_rad"].as_f64().unwrap() - 0.25).abs() < 1e-6);
    let t1: Vec<f64> = serde_json::from_value(v["t1"].clone()).unwrap();
    assert!((Vector3::from_vec(t1) - truth.translation).norm() < 1e-6);
}

#[test]
fn localize_text_report() {
    let dir = tempfile::tempdir().unwrap();
    let (calib, pose) = (localize_calib(dir.path()), write_pose(dir.path()));
    let r = radcal(&[
        "localize", "--calib", s(&calib), "--pose", s(&pose), "--line-map", "0,0,1,0", "--observed", "300,300,340,300",
    ]);
    assert_eq!(r.code, 0, "{}", r.err);
    assert!(r.out.contains("rad") && r.out.contains("deg") && r.out.contains("t1"));
}

#[test]
fn degenerate_line_map_exits_6() {
    let dir = tempfile::tempdir().unwrap();
    let (calib, pose) = (localize_calib(dir.path()), write_pose(dir.path()));
    let r = radcal(&[
        "localize", "--calib", s(&calib), "--pose", s(&pose), "--line-map", "1,1,1,1", "--observed", "300,250,340,250",
    ]);
    assert_eq!(r.code, 6);
    assert!(r.err.contains("DegenerateLine"), "{}", r.err);
}

#[test]
fn binary_propagates_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    let status = Command::new(env!("CARGO_BIN_EXE_radcal"))
        .args(["calibrate", "--input", s(&missing), "--model", "3", "--output", "x.json"])
        .stderr(std::process::Stdio::null())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    let status = Command::new(env!("CARGO_BIN_EXE_radcal")).arg("--help").output().unwrap();
    assert!(status.status.success());
}

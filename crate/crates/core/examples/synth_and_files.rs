// Drive the command-line workflow in-process: synth, calibrate, undistort.

use std::fs;

use radcal::cli::main_with_args;

pub fn run_example() -> Result<Vec<i32>, Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    fs::write(
        path("spec.json"),
        r#"{
  "grid": { "rows": 8, "cols": 8, "spacing": 0.03 },
  "views": 4,
  "intrinsics": { "alpha": 800, "beta": 800, "gamma": 0.2, "u0": 320, "v0": 240 },
  "distortion": { "model": 3, "k1": -0.12, "k2": -0.14 },
  "noise_sigma": 0.1,
  "seed": 7
}"#,
    )?;
    fs::write(path("points.csv"), "u,v\n320,240\n600,400\n10,20\n")?;

    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut codes = Vec::new();
    let runs: [&[&str]; 3] = [
        &["synth", "--spec", &path("spec.json"), "--output", &path("corr.csv")],
        &["calibrate", "--input", &path("corr.csv"), "--model", "3", "--output", &path("calib.json")],
        &[
            "undistort",
            "--calib",
            &path("calib.json"),
            "--points",
            &path("points.csv"),
            "--output",
            &path("ideal.csv"),
        ],
    ];
    for args in runs {
        let argv = std::iter::once("radcal").chain(args.iter().copied());
        codes.push(main_with_args(argv, &mut out, &mut err));
    }
    print!("{}", String::from_utf8_lossy(&out));
    eprint!("{}", String::from_utf8_lossy(&err));
    print!("{}", fs::read_to_string(path("ideal.csv"))?);
    Ok(codes)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(|_| ())
}

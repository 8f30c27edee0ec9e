//! End-to-end tests of the command-line interface.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_szegokit"))
}

fn tempdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("szegokit-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_disc_spec(path: &Path) {
    std::fs::write(
        path,
        r#"{"curves": [{"type": "circle", "center": [0.0, 0.0], "radius": 1.0,
            "orientation": 1}], "outer": 0}"#,
    )
    .unwrap();
}

fn write_annulus_spec(path: &Path) {
    std::fs::write(
        path,
        r#"{"curves": [
            {"type": "circle", "center": [0.0, 0.0], "radius": 1.0, "orientation": 1},
            {"type": "circle", "center": [0.0, 0.0], "radius": 0.5, "orientation": -1}
        ], "outer": 0}"#,
    )
    .unwrap();
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "command failed: {:?}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn assemble_reports_zero_counts() {
    let dir = tempdir("assemble");
    let disc = dir.join("disc.json");
    let annulus = dir.join("annulus.json");
    write_disc_spec(&disc);
    write_annulus_spec(&annulus);

    let out = run_ok(bin().args([
        "assemble",
        "--domain",
        disc.to_str().unwrap(),
        "--n",
        "64",
        "--a",
        "0.3,0",
        "--out",
        dir.join("disc.artifact.json").to_str().unwrap(),
    ]));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["zeros"].as_array().unwrap().len(), 0);

    let out = run_ok(bin().args([
        "assemble",
        "--domain",
        annulus.to_str().unwrap(),
        "--n",
        "128",
        "--a",
        "0.7,0",
        "--out",
        dir.join("annulus.artifact.json").to_str().unwrap(),
    ]));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["zeros"].as_array().unwrap().len(), 1);
}

#[test]
fn overlapping_curves_exit_code_two() {
    let dir = tempdir("overlap");
    let spec = dir.join("bad.json");
    std::fs::write(
        &spec,
        r#"{"curves": [
            {"type": "circle", "center": [0.0, 0.0], "radius": 1.0, "orientation": 1},
            {"type": "circle", "center": [0.8, 0.0], "radius": 0.5, "orientation": -1}
        ], "outer": 0}"#,
    )
    .unwrap();
    let out = bin()
        .args([
            "assemble",
            "--domain",
            spec.to_str().unwrap(),
            "--n",
            "64",
            "--out",
            dir.join("x.json").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(
        err["error"].as_str().unwrap().contains("intersect"),
        "stderr: {err}"
    );
    assert_eq!(err["kind"], "input");
}

#[test]
fn eval_szego_matches_disc_oracle_and_flags_bad_rows() {
    let dir = tempdir("eval");
    let disc = dir.join("disc.json");
    write_disc_spec(&disc);
    let artifact = dir.join("disc.artifact.json");
    run_ok(bin().args([
        "assemble",
        "--domain",
        disc.to_str().unwrap(),
        "--n",
        "128",
        "--a",
        "0.3,0",
        "--out",
        artifact.to_str().unwrap(),
    ]));

    let points = dir.join("pts.csv");
    std::fs::write(&points, "0.2,0,-0.4,0\n2.0,0,0,0\n").unwrap();
    let out_csv = dir.join("out.csv");
    run_ok(bin().args([
        "eval",
        "--artifact",
        artifact.to_str().unwrap(),
        "--kernel",
        "szego",
        "--points",
        points.to_str().unwrap(),
        "--out",
        out_csv.to_str().unwrap(),
    ]));
    let text = std::fs::read_to_string(&out_csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    let first: Vec<&str> = lines[1].split(',').collect();
    let value: f64 = first[4].parse().unwrap();
    let expect = 1.0 / (2.0 * std::f64::consts::PI * (1.0 - 0.2 * (-0.4)));
    assert!(
        (value - expect).abs() < 1e-9,
        "S(0.2, -0.4) = {value} vs {expect}"
    );
    // The exterior point is reported per row without failing the run.
    assert!(lines[2].ends_with("outside-domain"), "{}", lines[2]);

    // JSON output carries the same rows.
    let out_json = dir.join("out.json");
    run_ok(bin().args([
        "eval",
        "--artifact",
        artifact.to_str().unwrap(),
        "--kernel",
        "szego",
        "--points",
        points.to_str().unwrap(),
        "--format",
        "json",
        "--out",
        out_json.to_str().unwrap(),
    ]));
    let rows: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_json).unwrap()).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 2);
    assert_eq!(rows[1]["error"], "outside-domain");
    let v = rows[0]["value"][0].as_f64().unwrap();
    assert!((v - expect).abs() < 1e-9);
}

#[test]
fn poisson_sum_check_prints_unit_mass() {
    let dir = tempdir("sumcheck");
    let annulus = dir.join("annulus.json");
    write_annulus_spec(&annulus);
    let artifact = dir.join("a.artifact.json");
    run_ok(bin().args([
        "assemble",
        "--domain",
        annulus.to_str().unwrap(),
        "--n",
        "128",
        "--a",
        "0.7,0",
        "--out",
        artifact.to_str().unwrap(),
    ]));
    let points = dir.join("pts.csv");
    std::fs::write(&points, "0.7,0.1,1.0,0.0\n").unwrap();
    let out = run_ok(bin().args([
        "eval",
        "--artifact",
        artifact.to_str().unwrap(),
        "--kernel",
        "poisson",
        "--points",
        points.to_str().unwrap(),
        "--sum-check",
        "--out",
        dir.join("p.csv").to_str().unwrap(),
    ]));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let sum_line = stdout
        .lines()
        .find(|l| l.starts_with("sum-check"))
        .expect("sum-check line");
    let sum: f64 = sum_line.split(',').last().unwrap().parse().unwrap();
    assert!((sum - 1.0).abs() < 1e-8, "Σ p·w = {sum}");
}

#[test]
fn artifact_round_trip_gives_identical_csv() {
    let dir = tempdir("roundtrip");
    let annulus = dir.join("annulus.json");
    write_annulus_spec(&annulus);
    let artifact = dir.join("a.artifact.json");
    run_ok(bin().args([
        "assemble",
        "--domain",
        annulus.to_str().unwrap(),
        "--n",
        "64",
        "--a",
        "0.7,0",
        "--out",
        artifact.to_str().unwrap(),
    ]));

    let points = dir.join("pts.csv");
    std::fs::write(
        &points,
        "0.7,0,0.8,0\n0.6,0.3,-0.2,0.7\n-0.8,0.1,0.0,-0.6\n",
    )
    .unwrap();

    let mut outputs = Vec::new();
    for tag in ["one", "two"] {
        let out_path = dir.join(format!("{tag}.csv"));
        run_ok(bin().args([
            "eval",
            "--artifact",
            artifact.to_str().unwrap(),
            "--kernel",
            "bergman",
            "--points",
            points.to_str().unwrap(),
            "--out",
            out_path.to_str().unwrap(),
        ]));
        outputs.push(std::fs::read(&out_path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "repeat runs must be byte-identical");

    // Re-saving the artifact through a load keeps evaluations bit-identical.
    let reloaded = dir.join("re.artifact.json");
    std::fs::copy(&artifact, &reloaded).unwrap();
    let out_path = dir.join("three.csv");
    run_ok(bin().args([
        "eval",
        "--artifact",
        reloaded.to_str().unwrap(),
        "--kernel",
        "bergman",
        "--points",
        points.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]));
    assert_eq!(outputs[0], std::fs::read(&out_path).unwrap());
}

#[test]
fn convergence_is_monotone_on_the_disc() {
    let dir = tempdir("conv");
    let disc = dir.join("disc.json");
    write_disc_spec(&disc);
    let out = run_ok(bin().args([
        "convergence",
        "--domain",
        disc.to_str().unwrap(),
        "--n",
        "16,32,64",
        "--a",
        "0.3,0",
    ]));
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    let errs: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(errs.len(), 3);
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
}

#[test]
fn convergence_self_mode_on_trig_domain() {
    let dir = tempdir("convself");
    run_ok(bin().args(["fixtures", "--out-dir", dir.to_str().unwrap()]));
    let trig = dir.join("trig2.domain.json");
    assert!(trig.exists());
    let out = run_ok(bin().args([
        "convergence",
        "--domain",
        trig.to_str().unwrap(),
        "--n",
        "128,192,256",
        "--self",
    ]));
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    let errs: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    // Two rows (the largest grid is the reference), decreasing error.
    assert_eq!(errs.len(), 2);
    assert!(errs[0] > errs[1], "{errs:?}");

    // Without an oracle, plain mode is an input error.
    let out = bin()
        .args([
            "convergence",
            "--domain",
            trig.to_str().unwrap(),
            "--n",
            "128,192",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fixtures_written_as_domain_specs() {
    let dir = tempdir("fixtures");
    let out = run_ok(bin().args(["fixtures", "--out-dir", dir.to_str().unwrap()]));
    let stdout = String::from_utf8_lossy(&out.stdout);
    for name in ["disc", "offset-disc", "annulus-0.5", "3conn", "trig2"] {
        assert!(stdout.contains(name), "missing {name} in listing");
        assert!(dir.join(format!("{name}.domain.json")).exists());
    }
}

#[test]
fn omega_eval_on_annulus() {
    let dir = tempdir("omega");
    let annulus = dir.join("annulus.json");
    write_annulus_spec(&annulus);
    let points = dir.join("pts.csv");
    std::fs::write(&points, "0.7,0,0,0\n").unwrap();
    let out = run_ok(bin().args([
        "eval",
        "--domain",
        annulus.to_str().unwrap(),
        "--n",
        "128",
        "--a",
        "0.7,0",
        "--kernel",
        "omega",
        "--points",
        points.to_str().unwrap(),
    ]));
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let value: f64 = row[4].parse().unwrap();
    let expect = 0.7f64.ln() / 0.5f64.ln();
    assert!(
        (value - expect).abs() < 1e-7,
        "ω₁(0.7) = {value} vs {expect}"
    );
}

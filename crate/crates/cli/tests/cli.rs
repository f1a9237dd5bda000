use std::f64::consts::PI;
use std::process::{Command, Output};

use rosensweig_core::bifurcation::classify_branch;
use rosensweig_core::{BranchResult, MagnetizationLaw, PatternKind, Resolution};

fn run(args: &[&str]) -> Output {
    run_env(args, &[])
}

fn run_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rosensweig"));
    for (k, _) in std::env::vars() {
        if k.starts_with("ROSENSWEIG_") {
            cmd.env_remove(k);
        }
    }
    cmd.args(args).envs(env.iter().copied()).output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

const PHYSICAL: [&str; 14] = [
    "--rho", "3", "--rho-prime", "1", "--g", "2", "--d", "0.5", "--sigma", "2", "--mu0", "1", "--h", "2",
];

fn dimensionless(args: &[&str]) -> serde_json::Value {
    let mut all = vec!["dimensionless"];
    all.extend_from_slice(args);
    serde_json::from_str(&stdout(&run(&all))).unwrap()
}

#[test]
fn dimensionless_numbers() {
    let v = dimensionless(&PHYSICAL);
    assert_eq!(v["beta"], 1.0);
    assert_eq!(v["gamma"].as_f64().unwrap(), v["alpha"].as_f64().unwrap() * v["beta"].as_f64().unwrap());
    let mut doubled = PHYSICAL;
    doubled[13] = "4";
    assert_eq!(dimensionless(&doubled)["beta"], 0.25);
}

#[test]
fn invalid_physical_inputs() {
    let mut bad = PHYSICAL;
    bad[7] = "0";
    let o = run(&[&["dimensionless"][..], &bad].concat());
    assert_eq!(o.status.code(), Some(2));
    let mut inverted = PHYSICAL;
    inverted[3] = "5";
    assert_eq!(run(&[&["dimensionless"][..], &inverted].concat()).status.code(), Some(2));
}

#[test]
fn dispersion_marks_the_maximum() {
    let below = stdout(&run(&["dispersion", "--law", "constant:2", "--beta0", "0.1", "--samples", "101"]));
    let r = rows(&below);
    assert_eq!(num(&r[0][1]), 0.0);
    let k: Vec<f64> = r.iter().take(101).map(|x| num(&x[0])).collect();
    assert!(k.windows(2).all(|w| w[1] > w[0]));
    let flagged: Vec<_> = r.iter().filter(|x| x[2] == "1").collect();
    assert_eq!(flagged.len(), 1);
    let rmax = num(&flagged[0][1]);
    assert!(rmax > 0.0 && r.iter().all(|x| num(&x[1]) <= rmax));

    let above = stdout(&run(&["dispersion", "--law", "constant:2", "--beta0", "0.7"]));
    assert!(above.lines().any(|l| l == "# no-maximum"));
    assert!(rows(&above).iter().all(|x| num(&x[1]) <= 0.0 && x[2] == "0"));
}

#[test]
fn branch_classifications() {
    let hex = stdout(&run(&["branch", "--pattern", "hexagons", "--law", "constant:2", "--beta0", "0.1"]));
    let r: BranchResult = serde_json::from_str(&hex).unwrap();
    assert_eq!(r.classification.to_string(), "transcritical");
    let rolls = stdout(&run(&["branch", "--pattern", "rolls", "--law", "constant:5", "--deep", "--ny", "64"]));
    let r: BranchResult = serde_json::from_str(&rolls).unwrap();
    assert_eq!(r.classification.to_string(), "supercritical");
}

#[test]
fn branch_json_reloads_bit_for_bit() {
    let text = stdout(&run(&["branch", "--pattern", "rectangles", "--law", "langevin:3,1", "--beta0", "0.2"]));
    let loaded: BranchResult = serde_json::from_str(&text).unwrap();
    let law = MagnetizationLaw::langevin(3.0, 1.0).unwrap();
    let direct = classify_branch(PatternKind::Rectangles, &law, 0.2, &Resolution::default()).unwrap();
    assert_eq!(loaded.gamma1.to_bits(), direct.gamma1.to_bits());
    assert_eq!(loaded.gamma2.unwrap().to_bits(), direct.gamma2.unwrap().to_bits());
    assert_eq!(loaded, direct);
}

#[test]
fn exit_codes() {
    let no_max = run(&["branch", "--pattern", "rolls", "--law", "constant:2", "--beta0", "0.9"]);
    assert_eq!(no_max.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&no_max.stderr).contains("no positive maximum"));
    assert!(no_max.stdout.is_empty());
    assert_eq!(run(&["branch", "--pattern", "rolls", "--law", "constant:2"]).status.code(), Some(2));
    assert_eq!(run(&["branch", "--pattern", "squares"]).status.code(), Some(2));
    assert_eq!(
        run(&["branch", "--pattern", "rolls", "--law", "constant:0.5", "--beta0", "0.1"]).status.code(),
        Some(2)
    );
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("occupied");
    std::fs::write(&file, "").unwrap();
    let o = run(&["dispersion", "--law", "constant:2", "--beta0", "0.1", "--out", file.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn config_file_env_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# hexagon run\npattern = hexagons\nlaw = constant:2\nbeta0 = 0.1\n").unwrap();
    let c = cfg.to_str().unwrap();
    let r: BranchResult = serde_json::from_str(&stdout(&run(&["branch", "--config", c]))).unwrap();
    assert_eq!(r.classification.to_string(), "transcritical");
    let r: BranchResult = serde_json::from_str(&stdout(&run(&["branch", "--config", c, "--pattern", "rolls"]))).unwrap();
    assert_eq!(r.pattern, PatternKind::Rolls);
    let r: BranchResult =
        serde_json::from_str(&stdout(&run_env(&["branch", "--config", c], &[("ROSENSWEIG_PATTERN", "rectangles")]))).unwrap();
    assert_eq!(r.pattern, PatternKind::Rectangles);

    std::fs::write(&cfg, "pattern: rolls\n").unwrap();
    let o = run(&["branch", "--config", c]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
    std::fs::write(&cfg, "colour = red\n").unwrap();
    assert_eq!(run(&["branch", "--config", c]).status.code(), Some(2));
}

#[test]
fn signmap_constant_rolls_flips_between_three_and_four() {
    let csv = stdout(&run(&[
        "signmap", "--pattern", "rolls", "--law", "constant", "--grid1", "3,4", "--grid2", "20", "--ny", "64", "--jobs", "2",
    ]));
    assert!(csv.starts_with("mu,omega_tilde,gamma2,sign,classification,reason\n"));
    let r = rows(&csv);
    assert_eq!(r.len(), 2);
    assert_eq!((r[0][3].as_str(), r[1][3].as_str()), ("-1", "1"));
}

#[test]
fn signmap_langevin_has_both_signs_and_failure_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "signmap", "--pattern", "rolls", "--law", "langevin", "--deep", "--ny", "64", "--grid1", "-1,16",
        "--grid2", "0.3,1,3", "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success() && o.stdout.is_empty());
    let r = rows(&std::fs::read_to_string(dir.path().join("signmap.csv")).unwrap());
    assert_eq!(r.len(), 6);
    assert!(r.iter().any(|x| x[3] == "1") && r.iter().any(|x| x[3] == "-1"));
    let failed: Vec<_> = r.iter().filter(|x| x[4] == "failed").collect();
    assert_eq!(failed.len(), 3);
    assert!(failed.iter().all(|x| x[2] == "NaN" && !x[5].is_empty()));
}

#[test]
fn empty_signmap_is_header_only() {
    let csv = stdout(&run(&["signmap", "--pattern", "rolls", "--law", "constant", "--grid1", "1:2:0"]));
    assert_eq!(csv, "mu,omega_tilde,gamma2,sign,classification,reason\n");
}

fn surface(pattern: &str, s: &str, n: usize) -> Vec<[f64; 3]> {
    let n = n.to_string();
    let csv = stdout(&run(&[
        "surface", "--pattern", pattern, "--law", "langevin:2,1.5", "--beta0", "0.3", "--amplitude", s, "--samples", &n,
    ]));
    rows(&csv).iter().map(|x| [num(&x[0]), num(&x[1]), num(&x[2])]).collect()
}

#[test]
fn flat_surface_at_zero_amplitude() {
    let pts = surface("hexagons", "0", 6);
    assert_eq!(pts.len(), 36);
    assert!(pts.iter().all(|p| p[2] == 0.0));
}

#[test]
fn roll_surface_is_independent_of_z() {
    let n = 8;
    let pts = surface("rolls", "0.05", n);
    for i in 0..n {
        let row = &pts[i * n..(i + 1) * n];
        assert!(row.iter().any(|p| p[1] != row[0][1]));
        assert!(row.iter().all(|p| (p[2] - row[0][2]).abs() < 1e-14));
    }
}

#[test]
fn hexagon_surface_is_invariant_under_sixfold_rotation() {
    let n = 12;
    let pts = surface("hexagons", "0.02", n);
    let nf = n as f64;
    let l1 = [pts[n][0] * nf, pts[n][1] * nf];
    let l2 = [pts[1][0] * nf, pts[1][1] * nf];
    let det = l1[0] * l2[1] - l1[1] * l2[0];
    let (c, s) = ((PI / 3.0).cos(), (PI / 3.0).sin());
    assert!(pts.iter().any(|p| p[2].abs() > 1e-3));
    for p in &pts {
        let q = [c * p[0] - s * p[1], s * p[0] + c * p[1]];
        let a = (q[0] * l2[1] - q[1] * l2[0]) / det * nf;
        let b = (l1[0] * q[1] - l1[1] * q[0]) / det * nf;
        assert!((a - a.round()).abs() < 1e-9 && (b - b.round()).abs() < 1e-9);
        let i = (a.round() as i64).rem_euclid(n as i64) as usize;
        let j = (b.round() as i64).rem_euclid(n as i64) as usize;
        assert!((pts[i * n + j][2] - p[2]).abs() < 1e-8);
    }
}

#[test]
fn surface_amplitude_guard() {
    let o = run(&[
        "surface", "--pattern", "rolls", "--law", "constant:2", "--beta0", "0.3", "--amplitude", "5",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("guard"));
}

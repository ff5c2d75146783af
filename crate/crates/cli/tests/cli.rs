use std::path::Path;
use std::process::{Command, Output};

fn asg1(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asg1"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn report(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn fit(dir: &Path, input: &str, pr_k: [&str; 3], mode: &str, tag: &str) -> (Output, std::path::PathBuf, std::path::PathBuf) {
    let out = dir.join(format!("{tag}.json"));
    let rep = dir.join(format!("{tag}.report.json"));
    let o = asg1(&[
        "fit", "--input", input, "--degree", pr_k[0], "--regularity", pr_k[1], "--segments", pr_k[2],
        "--mode", mode, "--output", p(&out), "--report", p(&rep),
    ]);
    (o, out, rep)
}

#[test]
fn fitting_the_bilinear_grid_reproduces_it() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out, rep) = fit(dir.path(), "bundled:bilinear-grid", ["3", "1", "2"], "local", "grid");
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&rep);
    let eps = r["construction"]["errors"]["eps_l2"].as_f64().unwrap();
    assert!(eps <= 1e-9, "{eps:e}");
    let c = asg1(&["check", "--input", p(&out)]);
    assert_eq!(code(&c), 0, "{}", String::from_utf8_lossy(&c.stderr));
}

#[test]
fn degree_two_is_inadmissible() {
    let dir = tempfile::tempdir().unwrap();
    let (o, _, _) = fit(dir.path(), "bundled:bilinear-grid", ["2", "1", "2"], "local", "p2");
    assert_eq!(code(&o), 2);
}

#[test]
fn global_fit_is_at_least_as_accurate_as_local() {
    let dir = tempfile::tempdir().unwrap();
    let (ol, _, rl) = fit(dir.path(), "bundled:warped-tripatch", ["4", "1", "2"], "local", "l");
    let (og, _, rg) = fit(dir.path(), "bundled:warped-tripatch", ["4", "1", "2"], "global", "g");
    assert_eq!((code(&ol), code(&og)), (0, 0));
    let e = |r: &Path, k: &str| report(r)["construction"]["errors"][k].as_f64().unwrap();
    assert!(e(&rg, "eps_l2") <= e(&rl, "eps_l2"));
    assert!(e(&rg, "eps_h1") <= e(&rl, "eps_h1"));
}

#[test]
fn reports_are_deterministic_apart_from_timings() {
    let dir = tempfile::tempdir().unwrap();
    let (_, g1, r1) = fit(dir.path(), "bundled:tripatch-bilinear", ["3", "1", "2"], "local", "a");
    let (_, g2, r2) = fit(dir.path(), "bundled:tripatch-bilinear", ["3", "1", "2"], "local", "b");
    let strip = |r: &Path| {
        let mut v = report(r);
        v["construction"].as_object_mut().unwrap().remove("timings");
        v
    };
    assert_eq!(strip(&r1), strip(&r2));
    assert_eq!(std::fs::read(g1).unwrap(), std::fs::read(g2).unwrap());
}

#[test]
fn check_reports_the_perturbed_interface() {
    let dir = tempfile::tempdir().unwrap();
    let (_, out, _) = fit(dir.path(), "bundled:bilinear-grid", ["3", "1", "2"], "local", "grid");
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    // move a control point of row 1 along the interface side u1 of patch 0 out of plane
    let n = 3 + 1 + 2 * 2;
    let idx = (n - 2) * n + 3;
    let z = &mut v["patches"][0]["control_points"][idx][2];
    *z = serde_json::json!(z.as_f64().unwrap() + 0.05);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, serde_json::to_string(&v).unwrap()).unwrap();
    let c = asg1(&["check", "--input", p(&bad), "--samples", "33"]);
    assert_eq!(code(&c), 5);
    assert!(String::from_utf8_lossy(&c.stderr).contains("interface"));
}

#[test]
fn missing_and_malformed_files_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let c = asg1(&["check", "--input", p(&dir.path().join("nope.json"))]);
    assert_eq!(code(&c), 1);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(code(&asg1(&["check", "--input", p(&bad)])), 1);
}

#[test]
fn convergence_ledger_and_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("ledger.csv");
    let args = |levels: &str, problem: &str, solution: &str| {
        asg1(&[
            "convergence", "--input", "bundled:tripatch-bilinear", "--degree", "4", "--regularity", "1",
            "--segments", "1", "--problem", problem, "--solution", solution, "--levels", levels,
            "--output", p(&csv),
        ])
    };
    let o = args("2", "dirichlet", "cos4sin4");
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "level,h,dim,eL2,eH1,eH2,order_L2,order_H1,order_H2");
    assert_eq!(text.lines().count(), 3);
    let o = args("1", "dirichlet", "cos4sin4");
    assert_eq!(code(&o), 0);
    assert!(std::fs::read_to_string(&csv).unwrap().lines().nth(1).unwrap().ends_with(",,,"));
    let o = args("1", "reaction", "cos-half-product");
    assert_eq!(code(&o), 6);
}

#[test]
fn export_vtk_and_csv_grids() {
    let dir = tempfile::tempdir().unwrap();
    let vtk = dir.path().join("vtk");
    let o = asg1(&["export", "--input", "bundled:bilinear-grid", "--format", "vtk", "--samples-per-patch", "2", "--output", p(&vtk)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(vtk.join("patch_0.vtk")).unwrap();
    assert!(text.starts_with("# vtk DataFile Version 3.0\nasg1 patch 0\nASCII\nDATASET STRUCTURED_GRID\nDIMENSIONS 2 2 1\nPOINTS 4 double\n"));
    let csv = dir.path().join("grid.csv");
    let o = asg1(&[
        "export", "--input", "bundled:sphere-asg1", "--format", "csv-grid", "--samples-per-patch", "3",
        "--compare", "analytic:cube-sphere", "--output", p(&csv),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 6 * 9);
    let worst = text
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .fold(0.0f64, f64::max);
    assert!(worst > 0.0 && worst < 0.05, "{worst}");
    let o = asg1(&["export", "--input", "bundled:bilinear-grid", "--format", "stl", "--output", p(&csv)]);
    assert_eq!(code(&o), 1);
}

#[test]
fn bundled_geometry_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("sphere.json");
    assert_eq!(code(&asg1(&["bundled", "--name", "sphere-asg1", "--output", p(&f)])), 0);
    let c = asg1(&["check", "--input", p(&f)]);
    assert_eq!(code(&c), 0, "{}", String::from_utf8_lossy(&c.stderr));
    let listed = asg1(&["bundled"]);
    assert!(String::from_utf8_lossy(&listed.stdout).contains("warped-grid-4x4"));
}

#[test]
fn thread_flag_and_environment_are_validated() {
    let o = Command::new(env!("CARGO_BIN_EXE_asg1"))
        .args(["bundled"])
        .env("ASG1_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
    assert_eq!(code(&asg1(&["--threads", "2", "bundled"])), 0);
}

mod common;

use std::fs;

use common::{isopath, report_value, s, write_job, write_points};
use isopath::cli::files::{parse_param, parse_paths};
use isopath::verify::synthetic;
use nalgebra::Point3;

fn plane_job(dir: &std::path::Path) -> (std::path::PathBuf, std::path::PathBuf) {
    write_job(dir, &synthetic::plane(21, 1.0, 0.2, 3).unwrap())
}

#[test]
fn param_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let (cloud, breaks) = plane_job(dir.path());
    let out = dir.path().join("out");
    let r = isopath(
        &[
            "param",
            "--in",
            s(&cloud),
            "--breaks",
            s(&breaks),
            "--domain",
            "rect",
            "--out",
            s(&out),
        ],
        &[],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let text = fs::read_to_string(out.join("param.txt")).unwrap();
    let param = parse_param(&text, &out.join("param.txt")).unwrap();
    assert_eq!(param.len(), 441);
    assert!(fs::read_to_string(out.join("domain.svg")).unwrap().starts_with("<svg"));
    assert!(r.stdout.contains("metric"), "{}", r.stdout);
}

#[test]
fn three_breaks_for_rect_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (cloud, breaks) = plane_job(dir.path());
    fs::write(&breaks, "0\n420\n440\n").unwrap();
    let r = isopath(
        &["param", "--in", s(&cloud), "--breaks", s(&breaks), "--domain", "rect"],
        &[],
    );
    assert_eq!(r.code, 2, "{}", r.stderr);
    assert!(r.stderr.contains("4 boundary parts"), "{}", r.stderr);
}

#[test]
fn disconnected_cloud_is_a_solver_failure() {
    let dir = tempfile::tempdir().unwrap();
    let main = synthetic::plane(15, 1.0, 0.1, 5).unwrap();
    let island = synthetic::plane(8, 1.0, 0.1, 6).unwrap();
    let mut points = main.cloud.points().to_vec();
    points.extend(island.cloud.points().iter().map(|p| Point3::new(p.x + 100.0, p.y, p.z)));
    let (cloud, breaks) = write_points(dir.path(), &points, &main.breaks);
    let r = isopath(
        &[
            "param",
            "--in",
            s(&cloud),
            "--breaks",
            s(&breaks),
            "--out",
            s(dir.path()),
        ],
        &[],
    );
    assert_eq!(r.code, 4, "{}", r.stderr);
    assert!(r.stderr.contains("residual"), "{}", r.stderr);
}

#[test]
fn contour_plan_starts_with_a_point() {
    let dir = tempfile::tempdir().unwrap();
    let (cloud, breaks) = write_job(dir.path(), &synthetic::flat_disk(40, 0.5).unwrap());
    let r = isopath(
        &[
            "plan",
            "--in",
            s(&cloud),
            "--breaks",
            s(&breaks),
            "--domain",
            "disk",
            "--pattern",
            "contour",
            "--out",
            s(dir.path()),
        ],
        &[],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let text = fs::read_to_string(dir.path().join("paths.txt")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("PATH 0 contour"));
    assert!(lines.next().is_some());
    assert!(lines.next().unwrap().starts_with("PATH 1 "));
    for name in ["stages.txt", "paths.svg", "param.txt", "report.txt", "epsilon.csv"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
}

#[test]
fn scallop_not_below_cutter_radius_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (cloud, breaks) = plane_job(dir.path());
    let r = isopath(
        &[
            "plan",
            "--in",
            s(&cloud),
            "--breaks",
            s(&breaks),
            "--scallop",
            "5",
            "--cutter",
            "4",
            "--out",
            s(dir.path()),
        ],
        &[],
    );
    assert_eq!(r.code, 2, "{}", r.stderr);
    assert!(!dir.path().join("paths.txt").exists());
}

#[test]
fn verify_after_plan_on_flat_job() {
    let dir = tempfile::tempdir().unwrap();
    let (cloud, breaks) = write_job(dir.path(), &synthetic::plane(41, 1.0, 0.2, 7).unwrap());
    let plan = dir.path().join("plan");
    let r = isopath(
        &["plan", "--in", s(&cloud), "--breaks", s(&breaks), "--out", s(&plan)],
        &[],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let check = dir.path().join("check");
    let r = isopath(
        &[
            "verify",
            "--in",
            s(&cloud),
            "--param",
            s(&plan.join("param.txt")),
            "--paths",
            s(&plan.join("paths.txt")),
            "--out",
            s(&check),
        ],
        &[],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let report = fs::read_to_string(check.join("report.txt")).unwrap();
    let mean = report_value(&report, "interior_epsilon_mean").expect("interior pairs measured");
    assert!(mean <= 5.0, "{report}");
    let csv = fs::read_to_string(check.join("epsilon.csv")).unwrap();
    assert!(csv.lines().count() > 1);
}

#[test]
fn verify_rejects_mismatched_files() {
    let dir = tempfile::tempdir().unwrap();
    let (cloud, breaks) = plane_job(dir.path());
    let plan = dir.path().join("plan");
    assert_eq!(
        isopath(
            &["plan", "--in", s(&cloud), "--breaks", s(&breaks), "--out", s(&plan)],
            &[]
        )
        .code,
        0
    );
    let other_dir = dir.path().join("other");
    fs::create_dir(&other_dir).unwrap();
    let (other, _) = write_job(&other_dir, &synthetic::plane(17, 1.0, 0.2, 3).unwrap());
    let r = isopath(
        &[
            "verify",
            "--in",
            s(&other),
            "--param",
            s(&plan.join("param.txt")),
            "--paths",
            s(&plan.join("paths.txt")),
            "--out",
            s(dir.path()),
        ],
        &[],
    );
    assert_eq!(r.code, 2, "{}", r.stderr);

    // Same cloud, but paths edited to leave the surface.
    let paths_file = plan.join("paths.txt");
    let text = fs::read_to_string(&paths_file).unwrap();
    let mut paths = parse_paths(&text, &paths_file).unwrap();
    paths[0].points[1].position.z += 3.0;
    fs::write(&paths_file, isopath::cli::files::format_paths(&paths)).unwrap();
    let r = isopath(
        &[
            "verify",
            "--in",
            s(&cloud),
            "--param",
            s(&plan.join("param.txt")),
            "--paths",
            s(&paths_file),
            "--out",
            s(dir.path()),
        ],
        &[],
    );
    assert_eq!(r.code, 2, "{}", r.stderr);
}

#[test]
fn verify_missing_inputs() {
    let r = isopath(&["verify", "--in", "nowhere.xyz"], &[]);
    assert_eq!(r.code, 2, "{}", r.stderr);
}

#[test]
fn analytic_sphere_regression() {
    let dir = tempfile::tempdir().unwrap();
    let r = isopath(&["verify", "--analytic", "sphere:50", "--out", s(dir.path())], &[]);
    assert_eq!(r.code, 0, "{}\n{}", r.stdout, r.stderr);
    assert!(r.stdout.contains("regression_pass: true"));
    assert!(dir.path().join("report.txt").exists());
}

#[test]
fn paths_are_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (cloud, breaks) = write_job(dir.path(), &synthetic::sphere_cap(50.0, 30, 1.5, 0.2, 11).unwrap());
    let mut outputs = Vec::new();
    for (k, threads) in ["1", "4", "4"].iter().enumerate() {
        let out = dir.path().join(format!("run{k}"));
        let r = isopath(
            &["plan", "--in", s(&cloud), "--breaks", s(&breaks), "--out", s(&out)],
            &[("ISOPATH_THREADS", threads)],
        );
        assert_eq!(r.code, 0, "{}", r.stderr);
        outputs.push((
            fs::read(out.join("paths.txt")).unwrap(),
            fs::read(out.join("param.txt")).unwrap(),
        ));
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn bad_thread_count_is_rejected() {
    let r = isopath(&["verify", "--analytic", "plane"], &[("ISOPATH_THREADS", "zero")]);
    assert_eq!(r.code, 2, "{}", r.stderr);
}

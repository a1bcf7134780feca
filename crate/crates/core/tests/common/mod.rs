#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;

use isopath::cloud::{PointCloud, Tag};
use isopath::param::DomainKind;
use isopath::verify::synthetic::SyntheticCloud;
use nalgebra::{Point3, Vector3};

/// Writes the cloud as XYZ and its breaks file; returns both paths.
pub fn write_job(dir: &Path, synth: &SyntheticCloud) -> (PathBuf, PathBuf) {
    write_points(dir, synth.cloud.points(), &synth.breaks)
}

pub fn write_points(dir: &Path, points: &[Point3<f64>], breaks: &[usize]) -> (PathBuf, PathBuf) {
    let mut xyz = String::new();
    for p in points {
        let _ = writeln!(xyz, "{} {} {}", p.x, p.y, p.z);
    }
    let cloud = dir.join("cloud.xyz");
    std::fs::write(&cloud, xyz).unwrap();
    let b = dir.join("breaks.txt");
    let text: String = breaks.iter().map(|i| format!("{i}\n")).collect();
    std::fs::write(&b, text).unwrap();
    (cloud, b)
}

pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn isopath(args: &[&str], env: &[(&str, &str)]) -> Outcome {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_isopath"));
    cmd.args(args).env_remove("ISOPATH_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    Outcome {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Value of a `key: value` line in a report.
pub fn report_value(text: &str, key: &str) -> Option<f64> {
    text.lines()
        .find_map(|l| l.strip_prefix(key)?.strip_prefix(": ")?.trim().parse().ok())
}

/// Plane strip `z = 0` on an exact `nx x ny` grid, corners as breaks.
pub fn strip(nx: usize, ny: usize, spacing: f64) -> SyntheticCloud {
    let mut points = Vec::new();
    let mut tags = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            points.push(Point3::new(spacing * i as f64, spacing * j as f64, 0.0));
            let edge = i == 0 || i == nx - 1 || j == 0 || j == ny - 1;
            tags.push(if edge { Tag::Boundary } else { Tag::Interior });
        }
    }
    let n = points.len();
    let mut cloud = PointCloud::with_tags(points, tags).unwrap();
    cloud.set_normals(vec![Vector3::z(); n]).unwrap();
    SyntheticCloud {
        cloud,
        breaks: vec![0, (nx - 1) * ny, nx * ny - 1, ny - 1],
        kind: DomainKind::Rect,
    }
}

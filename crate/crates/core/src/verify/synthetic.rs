//! Analytic test clouds with known boundary, normals and break points.

use std::f64::consts::TAU;

use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cloud::{PointCloud, Tag};
use crate::error::{Error, Result};
use crate::param::DomainKind;

/// A generated cloud with exact normals and tags, plus the break points that
/// parameterize it.
#[derive(Debug, Clone)]
pub struct SyntheticCloud {
    pub cloud: PointCloud,
    pub breaks: Vec<usize>,
    pub kind: DomainKind,
}

/// Grid of `n x n` nodes at `spacing` centred on the origin. Interior nodes
/// move by up to `jitter * spacing` along each axis; edge nodes move only
/// along their edge and corners stay put. Returns points and boundary flags.
fn jittered_grid(n: usize, spacing: f64, jitter: f64, seed: u64) -> Result<(Vec<[f64; 2]>, Vec<bool>)> {
    if n < 3 || !(spacing > 0.0) || !(0.0..0.5).contains(&jitter) {
        return Err(Error::InvalidArgument(format!(
            "grid needs n >= 3, positive spacing and jitter in [0, 0.5), got {n}, {spacing}, {jitter}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = 0.5 * spacing * (n - 1) as f64;
    let mut xy = Vec::with_capacity(n * n);
    let mut edge = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let (ei, ej) = (i == 0 || i == n - 1, j == 0 || j == n - 1);
            let mut shake = || jitter * spacing * rng.random_range(-1.0..1.0);
            let dx = if ei { 0.0 } else { shake() };
            let dy = if ej { 0.0 } else { shake() };
            xy.push([-half + spacing * i as f64 + dx, -half + spacing * j as f64 + dy]);
            edge.push(ei || ej);
        }
    }
    Ok((xy, edge))
}

/// Corners of an `n x n` grid in counterclockwise order from `(-x, -y)`.
fn grid_corners(n: usize) -> Vec<usize> {
    vec![0, (n - 1) * n, n * n - 1, n - 1]
}

fn assemble(points: Vec<Point3<f64>>, normals: Vec<Vector3<f64>>, edge: &[bool]) -> Result<PointCloud> {
    let tags = edge
        .iter()
        .map(|&e| if e { Tag::Boundary } else { Tag::Interior })
        .collect();
    let mut cloud = PointCloud::with_tags(points, tags)?;
    cloud.set_normals(normals)?;
    Ok(cloud)
}

/// Plane `z = 0` sampled on a jittered square grid.
pub fn plane(n: usize, spacing: f64, jitter: f64, seed: u64) -> Result<SyntheticCloud> {
    let (xy, edge) = jittered_grid(n, spacing, jitter, seed)?;
    let points = xy.iter().map(|p| Point3::new(p[0], p[1], 0.0)).collect();
    Ok(SyntheticCloud {
        cloud: assemble(points, vec![Vector3::z(); n * n], &edge)?,
        breaks: grid_corners(n),
        kind: DomainKind::Rect,
    })
}

/// Cap of the sphere of `radius` about the origin, lifted from a jittered grid
/// in the `xy` plane, with outward normals.
pub fn sphere_cap(radius: f64, n: usize, spacing: f64, jitter: f64, seed: u64) -> Result<SyntheticCloud> {
    let (xy, edge) = jittered_grid(n, spacing, jitter, seed)?;
    let half = 0.5 * spacing * (n - 1) as f64;
    if 2.0 * half * half >= radius * radius {
        return Err(Error::InvalidArgument(format!(
            "grid half-width {half} does not fit under radius {radius}"
        )));
    }
    let points: Vec<Point3<f64>> = xy
        .iter()
        .map(|p| Point3::new(p[0], p[1], (radius * radius - p[0] * p[0] - p[1] * p[1]).sqrt()))
        .collect();
    let normals = points.iter().map(|p| p.coords / radius).collect();
    Ok(SyntheticCloud {
        cloud: assemble(points, normals, &edge)?,
        breaks: grid_corners(n),
        kind: DomainKind::Rect,
    })
}

/// Patch of the cylinder of `radius` about the `x` axis: `x` runs along the
/// axis and `y` is arc length around it. Outward normals.
pub fn cylinder(radius: f64, n: usize, spacing: f64, jitter: f64, seed: u64) -> Result<SyntheticCloud> {
    let (xy, edge) = jittered_grid(n, spacing, jitter, seed)?;
    let half = 0.5 * spacing * (n - 1) as f64;
    if half >= 0.5 * std::f64::consts::PI * radius {
        return Err(Error::InvalidArgument(format!(
            "arc half-length {half} wraps past a quarter turn"
        )));
    }
    let (points, normals): (Vec<_>, Vec<_>) = xy
        .iter()
        .map(|p| {
            let t = p[1] / radius;
            (
                Point3::new(p[0], radius * t.sin(), radius * t.cos()),
                Vector3::new(0.0, t.sin(), t.cos()),
            )
        })
        .unzip();
    Ok(SyntheticCloud {
        cloud: assemble(points, normals, &edge)?,
        breaks: grid_corners(n),
        kind: DomainKind::Rect,
    })
}

/// Flat disk in `z = 0`: a centre point and concentric rings `ring_spacing`
/// apart, ring `k` holding `round(2 pi k)` points, out to `rings` rings.
pub fn flat_disk(rings: usize, ring_spacing: f64) -> Result<SyntheticCloud> {
    if rings < 2 || !(ring_spacing > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "disk needs at least 2 rings and positive spacing, got {rings}, {ring_spacing}"
        )));
    }
    let mut points = vec![Point3::origin()];
    let mut edge = vec![false];
    let mut breaks = Vec::new();
    for k in 1..=rings {
        let count = (TAU * k as f64).round() as usize;
        let r = ring_spacing * k as f64;
        for m in 0..count {
            if k == rings && (m == 0 || m == count / 2) {
                breaks.push(points.len());
            }
            let t = TAU * m as f64 / count as f64;
            points.push(Point3::new(r * t.cos(), r * t.sin(), 0.0));
            edge.push(k == rings);
        }
    }
    let n = points.len();
    Ok(SyntheticCloud {
        cloud: assemble(points, vec![Vector3::z(); n], &edge)?,
        breaks,
        kind: DomainKind::Disk,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_edges_stay_straight() {
        let s = plane(6, 2.0, 0.2, 1).unwrap();
        for (i, p) in s.cloud.points().iter().enumerate() {
            if s.cloud.tag(i) == Tag::Boundary {
                assert!((p.x.abs() - 5.0).abs() < 1e-12 || (p.y.abs() - 5.0).abs() < 1e-12);
            }
        }
        assert_eq!(s.cloud.point(s.breaks[1]).coords, Vector3::new(5.0, -5.0, 0.0));
    }

    #[test]
    fn curved_clouds_lie_on_their_surfaces() {
        let s = sphere_cap(50.0, 10, 1.0, 0.2, 2).unwrap();
        assert!(s.cloud.points().iter().all(|p| (p.coords.norm() - 50.0).abs() < 1e-9));
        let c = cylinder(25.0, 10, 1.0, 0.0, 2).unwrap();
        assert!(c.cloud.points().iter().all(|p| (p.y.hypot(p.z) - 25.0).abs() < 1e-9));
    }

    #[test]
    fn disk_ring_counts() {
        let d = flat_disk(3, 1.0).unwrap();
        assert_eq!(d.cloud.len(), 1 + 6 + 13 + 19);
        assert_eq!(d.breaks.len(), 2);
        assert_eq!(d.cloud.boundary_indices().len(), 19);
    }
}

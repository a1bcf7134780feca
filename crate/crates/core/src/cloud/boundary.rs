use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;

use super::{PointCloud, Tag};
use crate::error::{Error, Result};

/// Largest angular gap between projected neighbours above which a point is
/// on the boundary.
pub const DEFAULT_GAP_THRESHOLD: f64 = 0.7 * PI;

impl PointCloud {
    /// Tags each point `Boundary` when the largest angular gap between its
    /// neighbours, projected onto its tangent plane, exceeds `gap_threshold`.
    /// Normals are computed first when absent.
    pub fn classify_boundary(&mut self, k: usize, gap_threshold: f64) -> Result<()> {
        if self.len() <= 3 || k < 3 {
            return Err(Error::DegenerateGeometry(format!(
                "boundary classification needs at least 3 neighbours per point (cloud has {} points, k = {k})",
                self.len()
            )));
        }
        if self.normals.is_none() {
            self.compute_normals(k)?;
        }
        let tags = (0..self.len())
            .map(|i| {
                let gap = self.max_angular_gap(i, k)?;
                Ok(if gap > gap_threshold {
                    Tag::Boundary
                } else {
                    Tag::Interior
                })
            })
            .collect::<Result<Vec<_>>>()?;
        self.tags = tags;
        Ok(())
    }

    /// Largest gap (radians) between consecutive neighbour directions around
    /// point `i` in its tangent plane.
    pub fn max_angular_gap(&self, i: usize, k: usize) -> Result<f64> {
        let normal = match self.normal(i) {
            Some(n) => n,
            None => self.estimate_normal(i, k)?,
        };
        let (e1, e2) = tangent_basis(&normal);
        let center = self.point(i);
        let nb = self.neighbors(i, k)?;
        let mut angles: Vec<f64> = nb
            .members
            .iter()
            .filter_map(|&j| {
                let d = self.point(j) - center;
                let (x, y) = (d.dot(&e1), d.dot(&e2));
                (x.hypot(y) > 1e-12 * (1.0 + d.norm())).then(|| y.atan2(x))
            })
            .collect();
        if angles.len() < 3 {
            return Err(Error::DegenerateGeometry(format!(
                "point {i} has fewer than 3 neighbours off its normal line"
            )));
        }
        angles.sort_by(f64::total_cmp);
        let wrap = TAU - (angles[angles.len() - 1] - angles[0]);
        Ok(angles.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::max))
    }
}

/// Orthonormal pair spanning the plane perpendicular to `n`.
pub(crate) fn tangent_basis(n: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let helper = if n.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let e1 = (helper - n * n.dot(&helper)).normalize();
    let e2 = n.cross(&e1);
    (e1, e2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Point3;

    fn grid(n: usize) -> PointCloud {
        let pts = (0..n)
            .flat_map(|i| (0..n).map(move |j| Point3::new(i as f64, j as f64, 0.0)))
            .collect();
        PointCloud::new(pts).unwrap()
    }

    #[test]
    fn gaps_on_planar_grid() {
        let mut cloud = grid(10);
        cloud.compute_normals(12).unwrap();
        let interior = cloud.max_angular_gap(4 * 10 + 5, 12).unwrap();
        assert!(interior <= PI / 2.0 + 1e-12, "interior gap {interior}");
        let corner = cloud.max_angular_gap(0, 12).unwrap();
        assert!((corner - 1.5 * PI).abs() < 1e-12, "corner gap {corner}");
    }

    #[test]
    fn grid_boundary_is_outer_ring() {
        let n = 12;
        let mut cloud = grid(n);
        cloud.classify_boundary(12, DEFAULT_GAP_THRESHOLD).unwrap();
        for i in 0..n {
            for j in 0..n {
                let ring = i == 0 || j == 0 || i == n - 1 || j == n - 1;
                let expect = if ring { Tag::Boundary } else { Tag::Interior };
                assert_eq!(cloud.tag(i * n + j), expect, "node ({i},{j})");
            }
        }
    }

    #[test]
    fn three_points_are_degenerate() {
        let pts = vec![Point3::origin(), Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0)];
        let mut cloud = PointCloud::new(pts).unwrap();
        assert!(matches!(
            cloud.classify_boundary(12, DEFAULT_GAP_THRESHOLD),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn basis_is_orthonormal() {
        for n in [Vector3::x(), Vector3::new(0.3, -0.4, 0.866).normalize(), -Vector3::z()] {
            let (a, b) = tangent_basis(&n);
            assert!(a.dot(&b).abs() < 1e-12 && a.dot(&n).abs() < 1e-12 && b.dot(&n).abs() < 1e-12);
            assert!((a.norm() - 1.0).abs() < 1e-12 && (b.norm() - 1.0).abs() < 1e-12);
        }
    }
}

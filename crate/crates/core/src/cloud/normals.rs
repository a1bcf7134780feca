//! PCA normal estimation and consistent orientation by minimum-spanning-tree
//! propagation over the KNN graph.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rayon::prelude::*;

use super::PointCloud;
use crate::error::{Error, Result};

/// Relative eigenvalue gap below which the two smallest covariance
/// eigenvalues are considered equal.
const EIGEN_GAP_TOL: f64 = 1e-10;

impl PointCloud {
    /// Unit normal of point `i` from the covariance of its `k` nearest
    /// neighbours. The sign is a local convention (non-negative z, then x, then
    /// y); use [`PointCloud::compute_normals`] for a globally consistent field.
    pub fn estimate_normal(&self, i: usize, k: usize) -> Result<Vector3<f64>> {
        if k < 3 {
            return Err(Error::InvalidArgument(format!(
                "normal estimation needs k >= 3, got {k}"
            )));
        }
        let nb = self.neighbors(i, k)?;
        let pts: Vec<Vector3<f64>> = nb.members.iter().map(|&j| self.point(j).coords).collect();
        plane_normal(&pts).ok_or_else(|| {
            Error::DegenerateGeometry(format!("neighbourhood of point {i} has no unique normal direction"))
        })
    }

    /// Estimates a normal for every point and orients the field consistently,
    /// seeding at the highest point with +z.
    pub fn compute_normals(&mut self, k: usize) -> Result<()> {
        let raw: Vec<Vector3<f64>> = (0..self.len())
            .into_par_iter()
            .map(|i| self.estimate_normal(i, k))
            .collect::<Result<_>>()?;
        let oriented = self.orient(raw, k)?;
        self.normals = Some(oriented);
        Ok(())
    }

    fn orient(&self, mut normals: Vec<Vector3<f64>>, k: usize) -> Result<Vec<Vector3<f64>>> {
        let n = self.len();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            for &j in &self.neighbors(i, k)?.members {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }

        // Seeds in order of decreasing height so each component is seeded at
        // its highest point.
        let mut by_height: Vec<usize> = (0..n).collect();
        by_height.sort_by(|&a, &b| self.point(b).z.total_cmp(&self.point(a).z).then(a.cmp(&b)));

        let mut visited = vec![false; n];
        for &seed in &by_height {
            if visited[seed] {
                continue;
            }
            if normals[seed].z < 0.0 {
                normals[seed] = -normals[seed];
            }
            // Prim's algorithm with edge cost 1 - |n_i . n_j|.
            let mut heap = BinaryHeap::new();
            visited[seed] = true;
            push_edges(seed, &adj, &normals, &visited, &mut heap);
            while let Some(Reverse((_, from, to))) = heap.pop() {
                if visited[to] {
                    continue;
                }
                visited[to] = true;
                if normals[from].dot(&normals[to]) < 0.0 {
                    normals[to] = -normals[to];
                }
                push_edges(to, &adj, &normals, &visited, &mut heap);
            }
        }
        Ok(normals)
    }
}

#[derive(Debug, Clone, Copy)]
struct Cost(f64);

impl PartialEq for Cost {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}

impl Eq for Cost {}

impl PartialOrd for Cost {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cost {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn push_edges(
    from: usize,
    adj: &[Vec<usize>],
    normals: &[Vector3<f64>],
    visited: &[bool],
    heap: &mut BinaryHeap<Reverse<(Cost, usize, usize)>>,
) {
    for &to in &adj[from] {
        if !visited[to] {
            let cost = 1.0 - normals[from].dot(&normals[to]).abs();
            heap.push(Reverse((Cost(cost), from, to)));
        }
    }
}

/// Smallest-eigenvalue eigenvector of the covariance of `pts`, or `None` when
/// the two smallest eigenvalues coincide.
pub(crate) fn plane_normal(pts: &[Vector3<f64>]) -> Option<Vector3<f64>> {
    if pts.len() < 3 {
        return None;
    }
    let centroid = pts.iter().sum::<Vector3<f64>>() / pts.len() as f64;
    let mut cov = Matrix3::zeros();
    for p in pts {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    cov /= pts.len() as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let (l0, l1, l2) = (
        eig.eigenvalues[order[0]],
        eig.eigenvalues[order[1]],
        eig.eigenvalues[order[2]],
    );
    if l2 <= 0.0 || l1 - l0 <= EIGEN_GAP_TOL * l2 {
        return None;
    }
    let mut n: Vector3<f64> = eig.eigenvectors.column(order[0]).into_owned().normalize();
    let flip = if n.z != 0.0 {
        n.z < 0.0
    } else if n.x != 0.0 {
        n.x < 0.0
    } else {
        n.y < 0.0
    };
    if flip {
        n = -n;
    }
    Some(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Point3;

    fn plane() -> PointCloud {
        let pts = (0..15)
            .flat_map(|i| (0..15).map(move |j| Point3::new(i as f64 + 0.1 * ((i * j) % 3) as f64, j as f64, 0.0)))
            .collect();
        PointCloud::new(pts).unwrap()
    }

    fn sphere(radius: f64, spacing: f64) -> PointCloud {
        // Latitude rings with roughly uniform spacing over the whole sphere.
        let mut pts = Vec::new();
        let rings = (std::f64::consts::PI * radius / spacing).round() as usize;
        for r in 0..=rings {
            let phi = std::f64::consts::PI * r as f64 / rings as f64;
            let ring_r = radius * phi.sin();
            let count = ((2.0 * std::f64::consts::PI * ring_r / spacing).round() as usize).max(1);
            for c in 0..count {
                let t = 2.0 * std::f64::consts::PI * (c as f64 + 0.5 * (r % 2) as f64) / count as f64;
                pts.push(Point3::new(ring_r * t.cos(), ring_r * t.sin(), radius * phi.cos()));
            }
        }
        PointCloud::new(pts).unwrap()
    }

    #[test]
    fn planar_normal_is_z() {
        let mut cloud = plane();
        cloud.compute_normals(12).unwrap();
        for n in cloud.normals().unwrap() {
            assert!((n - Vector3::z()).norm() < 1e-6);
        }
    }

    #[test]
    fn sphere_normals_are_radial_and_outward() {
        let mut cloud = sphere(50.0, 1.0);
        cloud.compute_normals(12).unwrap();
        let normals = cloud.normals().unwrap();
        let limit = 2f64.to_radians().cos();
        for (p, n) in cloud.points().iter().zip(normals) {
            let radial = p.coords.normalize();
            assert!(n.dot(&radial) > limit, "normal {n:?} at {p:?}");
        }
    }

    #[test]
    fn collinear_neighbourhood_is_degenerate() {
        let pts = (0..13)
            .map(|i| Point3::new(i as f64, 2.0 * i as f64, 0.5 * i as f64))
            .collect();
        let cloud = PointCloud::new(pts).unwrap();
        assert!(matches!(
            cloud.estimate_normal(6, 12),
            Err(Error::DegenerateGeometry(_))
        ));
    }
}

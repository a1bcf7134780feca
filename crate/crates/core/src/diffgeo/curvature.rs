use nalgebra::{DMatrix, DVector, Vector3};

use super::{ConvexSign, DerivativeSample, Surface};
use crate::cloud::{tangent_basis, PointCloud};
use crate::error::{Error, Result};

/// Second-form coefficients below this fraction of the first-form ones count
/// as flat.
pub const FLAT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Side direction (`u`, or `rho` on a disk).
    U,
    /// Forward direction (`v`, or `theta` on a disk).
    V,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convexity {
    Convex,
    Concave,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Curvature {
    Flat,
    Curved { radius: f64, convexity: Convexity },
}

impl Curvature {
    /// Classifies a signed normal curvature (1/mm).
    pub fn from_normal_curvature(kappa: f64, sign: ConvexSign) -> Self {
        if !(kappa.abs() >= FLAT_TOLERANCE) {
            return Curvature::Flat;
        }
        let negative = kappa < 0.0;
        let convex = match sign {
            ConvexSign::NegativeIsConvex => negative,
            ConvexSign::PositiveIsConvex => !negative,
        };
        Curvature::Curved {
            radius: 1.0 / kappa.abs(),
            convexity: if convex { Convexity::Convex } else { Convexity::Concave },
        }
    }

    /// Radius in mm, infinite when flat.
    pub fn radius(&self) -> f64 {
        match self {
            Curvature::Flat => f64::INFINITY,
            Curvature::Curved { radius, .. } => *radius,
        }
    }
}

/// Curvature radius `|E / L|` along `U` or `|G / N|` along `V`.
pub fn curvature_radius(sample: &DerivativeSample, direction: Direction, sign: ConvexSign) -> Curvature {
    let kappa = match direction {
        Direction::U => sample.kappa[0],
        Direction::V => sample.kappa[1],
    };
    Curvature::from_normal_curvature(kappa, sign)
}

/// Mean curvature at cloud point `i` from a least-squares quadric height field
/// `z = a x^2 + b xy + c y^2 + d x + e y + f` over the tangent plane of its
/// oriented normal. Positive when the surface bends toward the normal.
pub fn mean_curvature(cloud: &PointCloud, i: usize, k: usize) -> Result<f64> {
    let normal = match cloud.normal(i) {
        Some(n) => n,
        None => cloud.estimate_normal(i, k)?,
    };
    let nb = cloud.neighbors(i, k)?;
    if nb.len() < 6 {
        return Err(Error::DegenerateGeometry(format!(
            "quadric fit at point {i} needs 6 neighbours, got {}",
            nb.len()
        )));
    }
    let (e1, e2) = tangent_basis(&normal);
    let center = cloud.point(i);
    let scale = nb.distances.iter().cloned().fold(0.0, f64::max);
    if !(scale > 0.0) {
        return Err(Error::DegenerateGeometry(format!(
            "neighbours of point {i} coincide with it"
        )));
    }
    let mut design = DMatrix::zeros(nb.len() + 1, 6);
    let mut rhs = DVector::zeros(nb.len() + 1);
    let rows = std::iter::once(Vector3::zeros()).chain(nb.members.iter().map(|&j| cloud.point(j) - center));
    for (r, d) in rows.enumerate() {
        // Scaled local coordinates keep the system well conditioned.
        let (x, y, z) = (d.dot(&e1) / scale, d.dot(&e2) / scale, d.dot(&normal) / scale);
        let row = [x * x, x * y, y * y, x, y, 1.0];
        for (c, v) in row.iter().enumerate() {
            design[(r, c)] = *v;
        }
        rhs[r] = z;
    }
    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    if svd.singular_values.min() <= 1e-10 * smax {
        return Err(Error::DegenerateGeometry(format!(
            "quadric fit at point {i} is rank deficient"
        )));
    }
    let coef = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::DegenerateGeometry(format!("quadric fit at point {i}: {e}")))?;
    let (fxx, fxy, fyy, fx, fy) = (2.0 * coef[0], coef[1], 2.0 * coef[2], coef[3], coef[4]);
    let g = 1.0 + fx * fx + fy * fy;
    let h = ((1.0 + fy * fy) * fxx - 2.0 * fx * fy * fxy + (1.0 + fx * fx) * fyy) / (2.0 * g.powf(1.5));
    Ok(h / scale)
}

impl Surface<'_> {
    /// Mean curvature at the cloud point whose image is closest to native
    /// parametric point `q`.
    pub fn mean_curvature_at(&self, q: [f64; 2]) -> Result<f64> {
        let i = self.nearest_image(self.domain().to_cartesian(q));
        mean_curvature(self.cloud, i, self.cfg.k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Point3;

    fn sample(kappa_u: f64, kappa_v: f64) -> DerivativeSample {
        let n = Vector3::z();
        DerivativeSample::from_vectors(
            Point3::origin(),
            Vector3::x(),
            Vector3::y(),
            n * kappa_u,
            n * kappa_v,
            n,
        )
    }

    #[test]
    fn flat_sentinel_and_signs() {
        let s = sample(0.0, 1e-12);
        assert_eq!(
            curvature_radius(&s, Direction::U, ConvexSign::default()),
            Curvature::Flat
        );
        assert_eq!(
            curvature_radius(&s, Direction::V, ConvexSign::default()),
            Curvature::Flat
        );
        let s = sample(-0.02, 0.04);
        assert_eq!(
            curvature_radius(&s, Direction::U, ConvexSign::default()),
            Curvature::Curved {
                radius: 50.0,
                convexity: Convexity::Convex
            }
        );
        assert_eq!(
            curvature_radius(&s, Direction::V, ConvexSign::default()),
            Curvature::Curved {
                radius: 25.0,
                convexity: Convexity::Concave
            }
        );
        assert!(matches!(
            curvature_radius(&s, Direction::V, ConvexSign::PositiveIsConvex),
            Curvature::Curved {
                convexity: Convexity::Convex,
                ..
            }
        ));
    }

    fn sphere(radius: f64) -> PointCloud {
        let mut pts = Vec::new();
        for i in -10..=10 {
            for j in -10..=10 {
                let (x, y) = (i as f64 * 0.7, j as f64 * 0.7);
                pts.push(Point3::new(x, y, (radius * radius - x * x - y * y).sqrt()));
            }
        }
        let mut cloud = PointCloud::new(pts).unwrap();
        cloud.compute_normals(12).unwrap();
        cloud
    }

    #[test]
    fn sphere_mean_curvature_is_minus_inverse_radius() {
        let cloud = sphere(50.0);
        let h = mean_curvature(&cloud, 220, 12).unwrap();
        assert!((h + 1.0 / 50.0).abs() < 0.1 / 50.0, "H = {h}");
    }

    #[test]
    fn plane_mean_curvature_is_zero() {
        let pts = (0..100)
            .map(|k| Point3::new((k % 10) as f64, (k / 10) as f64, 1.0))
            .collect();
        let mut cloud = PointCloud::new(pts).unwrap();
        cloud.compute_normals(12).unwrap();
        assert!(mean_curvature(&cloud, 55, 12).unwrap().abs() < 1e-6);
    }
}

//! Evaluating the parameterized surface: interpolation back to 3D, finite
//! difference derivatives, curvature radii and mean curvature.

mod curvature;
mod derivatives;

use nalgebra::Point3;

use crate::cloud::{PointCloud, DEFAULT_K};
use crate::error::{Error, Result};
use crate::kdtree::KdTree;
use crate::param::{affine_weights_penalized, Domain, Parameterization};

pub use curvature::{curvature_radius, mean_curvature, Convexity, Curvature, Direction, FLAT_TOLERANCE};
pub use derivatives::DerivativeSample;

/// Coincidence radius (parameter units) below which interpolation returns the
/// cloud point itself.
pub const COINCIDENCE: f64 = 1e-9;

/// Which sign of the second-form coefficient, taken against the oriented
/// normal, marks a convex direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConvexSign {
    /// Negative coefficient is convex: the surface bends away from the normal,
    /// as on the outside of a sphere with outward normals.
    #[default]
    NegativeIsConvex,
    PositiveIsConvex,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceConfig {
    /// Nearest parameter images used per interpolation.
    pub k: usize,
    /// Finite-difference step as a multiple of the local image spacing.
    pub stencil_scale: f64,
    /// Exponent of the distance penalty in the interpolation weights.
    pub weight_power: f64,
}

impl Default for SurfaceConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            stencil_scale: 4.0,
            weight_power: 6.0,
        }
    }
}

/// A cloud together with its parameterization, queried at parametric points.
#[derive(Debug, Clone)]
pub struct Surface<'a> {
    cloud: &'a PointCloud,
    param: &'a Parameterization,
    images: KdTree<2>,
    spacing: Vec<f64>,
    cfg: SurfaceConfig,
}

impl<'a> Surface<'a> {
    /// The cloud must carry oriented normals.
    pub fn new(cloud: &'a PointCloud, param: &'a Parameterization, cfg: SurfaceConfig) -> Result<Self> {
        if param.len() != cloud.len() {
            return Err(Error::InvalidInput(format!(
                "parameterization has {} points, cloud has {}",
                param.len(),
                cloud.len()
            )));
        }
        if cloud.normals().is_none() {
            return Err(Error::InvalidInput("surface evaluation needs oriented normals".into()));
        }
        if cfg.k < 3 || cfg.k >= cloud.len() {
            return Err(Error::TooSparse(format!(
                "interpolation needs k in [3, {}), got {}",
                cloud.len(),
                cfg.k
            )));
        }
        if !(cfg.stencil_scale > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "stencil scale {} must be positive",
                cfg.stencil_scale
            )));
        }
        let images = KdTree::new(param.cartesians().to_vec());
        // Local spacing: mean distance to the four nearest other images.
        let spacing = (0..cloud.len())
            .map(|i| {
                let nb = images.nearest(&param.cartesian(i), 4.min(cloud.len() - 1), Some(i));
                nb.iter().map(|x| x.1).sum::<f64>() / nb.len() as f64
            })
            .collect::<Vec<_>>();
        if let Some(i) = spacing.iter().position(|&s| !(s > 0.0)) {
            return Err(Error::DegenerateGeometry(format!(
                "parameter image of point {i} coincides with its neighbours"
            )));
        }
        Ok(Self {
            cloud,
            param,
            images,
            spacing,
            cfg,
        })
    }

    pub fn cloud(&self) -> &'a PointCloud {
        self.cloud
    }

    pub fn param(&self) -> &'a Parameterization {
        self.param
    }

    pub fn domain(&self) -> Domain {
        self.param.domain()
    }

    pub fn config(&self) -> SurfaceConfig {
        self.cfg
    }

    fn domain_tolerance(&self) -> f64 {
        1e-6 * self.domain().size()
    }

    /// Cloud index whose image is closest to the Cartesian point `c`.
    pub fn nearest_image(&self, c: [f64; 2]) -> usize {
        self.images.nearest(&c, 1, None)[0].0
    }

    /// Local image spacing around the Cartesian point `c`.
    pub fn spacing_at(&self, c: [f64; 2]) -> f64 {
        self.spacing[self.nearest_image(c)]
    }

    /// 3D point at native parametric coordinates.
    pub fn interpolate(&self, q: [f64; 2]) -> Result<Point3<f64>> {
        self.interpolate_cartesian(self.domain().to_cartesian(q))
    }

    /// 3D point at a Cartesian parameter-plane position: the affine
    /// combination of the nearest images' cloud points whose weights
    /// reproduce `c` from those images.
    pub fn interpolate_cartesian(&self, c: [f64; 2]) -> Result<Point3<f64>> {
        if !c.iter().all(|x| x.is_finite()) || !self.domain().contains_cartesian(c, self.domain_tolerance()) {
            let q = self.domain().from_cartesian(c);
            return Err(Error::OutOfDomain(q[0], q[1]));
        }
        let nb = self.images.nearest(&c, self.cfg.k, None);
        if nb[0].1 <= COINCIDENCE {
            return Ok(*self.cloud.point(nb[0].0));
        }
        let offsets: Vec<[f64; 2]> = nb
            .iter()
            .map(|&(j, _)| {
                let qj = self.param.cartesian(j);
                [c[0] - qj[0], c[1] - qj[1]]
            })
            .collect();
        let refs: Vec<&[f64]> = offsets.iter().map(|o| o.as_slice()).collect();
        let w = affine_weights_penalized(&refs, self.cfg.weight_power).ok_or_else(|| {
            Error::DegenerateGeometry(format!(
                "parameter images around ({:.6}, {:.6}) are degenerate",
                c[0], c[1]
            ))
        })?;
        let p: nalgebra::Vector3<f64> = nb
            .iter()
            .zip(&w)
            .map(|(&(j, _), &wj)| self.cloud.point(j).coords * wj)
            .sum();
        Ok(Point3::from(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Jittered planar grid with the similarity map `q = s * R(angle) * xy`
    /// as its parameterization.
    pub(crate) fn planar(n: usize, s: f64) -> (PointCloud, Parameterization) {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (ca, sa) = (0.3f64.cos(), 0.3f64.sin());
        let mut pts = Vec::new();
        let mut q = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let x = i as f64
                    + if i % (n - 1) == 0 {
                        0.0
                    } else {
                        rng.random_range(-0.2..0.2)
                    };
                let y = j as f64
                    + if j % (n - 1) == 0 {
                        0.0
                    } else {
                        rng.random_range(-0.2..0.2)
                    };
                pts.push(Point3::new(ca * x - sa * y, sa * x + ca * y, 5.0));
                q.push([s * x, s * y]);
            }
        }
        let mut cloud = PointCloud::new(pts).unwrap();
        cloud.set_normals(vec![nalgebra::Vector3::z(); n * n]).unwrap();
        let side = s * (n - 1) as f64;
        let param = Parameterization::from_native(Domain::Rect { a: side, b: side }, q, vec![false; n * n]);
        (cloud, param)
    }

    #[test]
    fn coincident_query_returns_cloud_point() {
        let (cloud, param) = planar(8, 2.0);
        let surf = Surface::new(&cloud, &param, SurfaceConfig::default()).unwrap();
        for i in [0, 9, 27, 63] {
            assert_eq!(surf.interpolate(param.native(i)).unwrap(), *cloud.point(i));
        }
    }

    #[test]
    fn planar_similarity_is_reproduced() {
        let (cloud, param) = planar(10, 2.0);
        let surf = Surface::new(&cloud, &param, SurfaceConfig::default()).unwrap();
        let (ca, sa) = (0.3f64.cos(), 0.3f64.sin());
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let q = [rng.random_range(0.0..18.0), rng.random_range(0.0..18.0)];
            let (x, y) = (q[0] / 2.0, q[1] / 2.0);
            let expect = Point3::new(ca * x - sa * y, sa * x + ca * y, 5.0);
            assert!((surf.interpolate(q).unwrap() - expect).norm() < 1e-6);
        }
    }

    #[test]
    fn outside_domain_is_rejected() {
        let (cloud, param) = planar(6, 1.0);
        let surf = Surface::new(&cloud, &param, SurfaceConfig::default()).unwrap();
        assert!(matches!(surf.interpolate([-0.1, 1.0]), Err(Error::OutOfDomain(..))));
        assert!(surf.interpolate([5.0 + 1e-9, 1.0]).is_ok());
    }
}

use nalgebra::{Point3, Vector3};

use super::Surface;
use crate::error::{Error, Result};
use crate::param::Domain;

/// Surface derivatives at one parametric point.
///
/// On a rectangle the parameters are `(u, v)`; on a disk they are
/// `(rho, theta)` and play the roles of `u` and `v` respectively.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeSample {
    /// Native parametric coordinates of the sample.
    pub q: [f64; 2],
    pub position: Point3<f64>,
    pub r_u: Vector3<f64>,
    pub r_v: Vector3<f64>,
    pub r_uu: Vector3<f64>,
    pub r_vv: Vector3<f64>,
    /// Oriented unit normal of the nearest cloud point.
    pub normal: Vector3<f64>,
    /// Conformal factor: mean of the unit-parameter lengths along both
    /// directions. On a disk the angular one is `|r_theta| / rho`.
    pub sigma: f64,
    /// Angle between the two parameter directions, radians.
    pub theta: f64,
    /// First fundamental form: `r_u . r_u`.
    pub e_uu: f64,
    /// First fundamental form: `r_v . r_v`.
    pub g_vv: f64,
    /// Second fundamental form: `n . r_uu`.
    pub l_uu: f64,
    /// Second fundamental form: `n . r_vv`.
    pub n_vv: f64,
    /// Normal curvatures along the `u` and `v` directions.
    pub(crate) kappa: [f64; 2],
}

impl DerivativeSample {
    /// Builds a sample directly from derivative vectors in a Cartesian
    /// parameter frame (no polar conversion).
    pub fn from_vectors(
        position: Point3<f64>,
        r_u: Vector3<f64>,
        r_v: Vector3<f64>,
        r_uu: Vector3<f64>,
        r_vv: Vector3<f64>,
        normal: Vector3<f64>,
    ) -> Self {
        let (e_uu, g_vv) = (r_u.norm_squared(), r_v.norm_squared());
        let (l_uu, n_vv) = (normal.dot(&r_uu), normal.dot(&r_vv));
        Self {
            q: [0.0, 0.0],
            position,
            r_u,
            r_v,
            r_uu,
            r_vv,
            normal,
            sigma: 0.5 * (r_u.norm() + r_v.norm()),
            theta: r_u.angle(&r_v),
            e_uu,
            g_vv,
            l_uu,
            n_vv,
            kappa: [l_uu / e_uu, n_vv / g_vv],
        }
    }

    /// Normal curvature along `u` (`L / E`) and `v` (`N / G`).
    pub fn normal_curvature_u(&self) -> f64 {
        self.kappa[0]
    }

    pub fn normal_curvature_v(&self) -> f64 {
        self.kappa[1]
    }
}

impl Surface<'_> {
    /// Central-difference derivatives at native parametric point `q`.
    ///
    /// The stencil step is `stencil_scale` times the local image spacing,
    /// shortened where the domain edge is closer. When even a quarter of the
    /// default step does not fit, the stencil centre is moved inward until it
    /// does and the derivatives there stand in for those at `q`.
    pub fn derivatives(&self, q: [f64; 2]) -> Result<DerivativeSample> {
        let domain = self.domain();
        let c = domain.to_cartesian(q);
        let frame = match domain {
            Domain::Rect { .. } => [1.0, 0.0],
            Domain::Disk { .. } => {
                let r = c[0].hypot(c[1]);
                if r > 1e-12 * domain.size() {
                    [c[0] / r, c[1] / r]
                } else {
                    [1.0, 0.0]
                }
            }
        };
        let mut s = self.frame_derivatives(c, frame)?;
        s.q = q;
        if let Domain::Disk { .. } = domain {
            // Cartesian frame (radial, tangential) to (rho, theta).
            let rho = q[0];
            let (r_t, r_tt) = (s.r_v, s.r_vv);
            s.r_v = r_t * rho;
            s.r_vv = r_tt * (rho * rho) - s.r_u * rho;
            s.g_vv = s.r_v.norm_squared();
            // n . r_rho vanishes on the exact surface; drop its noisy estimate.
            s.n_vv = rho * rho * s.normal.dot(&r_tt);
        }
        Ok(s)
    }

    /// Derivatives along the Cartesian parameter-plane frame
    /// `(e1, rot90(e1))` at Cartesian point `c`.
    pub fn frame_derivatives(&self, c: [f64; 2], e1: [f64; 2]) -> Result<DerivativeSample> {
        let domain = self.domain();
        let tol = 1e-6 * domain.size();
        if !domain.contains_cartesian(c, tol) {
            let q = domain.from_cartesian(c);
            return Err(Error::OutOfDomain(q[0], q[1]));
        }
        let e2 = [-e1[1], e1[0]];
        let nearest = self.nearest_image(c);
        let step = self.cfg.stencil_scale * self.spacing[nearest];
        let min_step = 0.25 * step;
        let center = inset(domain, c, min_step)?;
        let d1 = room(domain, center, e1).min(step);
        let d2 = room(domain, center, e2).min(step);
        let at = |p: [f64; 2], d: [f64; 2], t: f64| self.interpolate_cartesian([p[0] + t * d[0], p[1] + t * d[1]]);

        let pc = at(center, e1, 0.0)?;
        let (m1, p1) = (at(center, e1, -d1)?, at(center, e1, d1)?);
        let (m2, p2) = (at(center, e2, -d2)?, at(center, e2, d2)?);
        let r_1 = (p1 - m1) / (2.0 * d1);
        let r_2 = (p2 - m2) / (2.0 * d2);
        let r_11 = (p1.coords + m1.coords - pc.coords * 2.0) / (d1 * d1);
        let r_22 = (p2.coords + m2.coords - pc.coords * 2.0) / (d2 * d2);
        if r_1.norm() == 0.0 || r_2.norm() == 0.0 || r_1.cross(&r_2).norm() == 0.0 {
            return Err(Error::DegenerateGeometry(format!(
                "parameter directions collapse at ({:.6}, {:.6})",
                c[0], c[1]
            )));
        }
        let position = if center == c {
            pc
        } else {
            self.interpolate_cartesian(c)?
        };
        let normal = self.cloud.normal(nearest).expect("surface requires normals");
        let mut s = DerivativeSample::from_vectors(position, r_1, r_2, r_11, r_22, normal);
        s.q = domain.from_cartesian(c);
        Ok(s)
    }
}

/// Moves `c` inward so a stencil of half-width `margin` fits in both
/// directions.
fn inset(domain: Domain, c: [f64; 2], margin: f64) -> Result<[f64; 2]> {
    match domain {
        Domain::Rect { a, b } => {
            if a < 2.0 * margin || b < 2.0 * margin {
                return Err(Error::TooSparse(format!(
                    "domain {a:.6} x {b:.6} is narrower than the derivative stencil"
                )));
            }
            Ok([c[0].clamp(margin, a - margin), c[1].clamp(margin, b - margin)])
        }
        Domain::Disk { r0 } => {
            if r0 < 2.0 * margin {
                return Err(Error::TooSparse(format!(
                    "disk radius {r0:.6} is smaller than the derivative stencil"
                )));
            }
            let r = c[0].hypot(c[1]);
            if r > r0 - margin {
                let s = (r0 - margin) / r;
                Ok([c[0] * s, c[1] * s])
            } else {
                Ok(c)
            }
        }
    }
}

/// Largest `t` with `c +- t d` inside the domain, for unit `d`.
fn room(domain: Domain, c: [f64; 2], d: [f64; 2]) -> f64 {
    match domain {
        Domain::Rect { a, b } => {
            let axis = |x: f64, dx: f64, hi: f64| {
                if dx.abs() < 1e-15 {
                    f64::INFINITY
                } else {
                    (x / dx.abs()).min((hi - x) / dx.abs())
                }
            };
            axis(c[0], d[0], a).min(axis(c[1], d[1], b)).max(0.0)
        }
        Domain::Disk { r0 } => {
            let cd = (c[0] * d[0] + c[1] * d[1]).abs();
            let cc = c[0] * c[0] + c[1] * c[1];
            (-cd + (cd * cd + r0 * r0 - cc).max(0.0).sqrt()).max(0.0)
        }
    }
}

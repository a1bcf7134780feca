//! Conformal parameterization of a classified point cloud onto a rectangle or
//! a disk.

mod boundary;
mod report;
mod solve;
pub mod sparse;
mod weights;

use std::f64::consts::TAU;

use crate::cloud::{PointCloud, Tag};
use crate::error::{Error, Result};

pub use boundary::{map_boundary_disk, map_boundary_rect, order_boundary, BoundaryLoop, BOUNDARY_NEIGHBORS};
pub use report::{conformality_report, ConformalityReport, Distribution};
pub use solve::solve_parameterization;
pub use sparse::{SolveStats, SolverConfig, SolverKind};
pub use weights::{
    affine_weights, affine_weights_penalized, build_laplacian, optimal_weights, tangent_weights, weights_for,
    WeightRow, WeightScheme, WeightSet, TIKHONOV_MU,
};

/// Parameter domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// `[0, a] x [0, b]` with native coordinates `(u, v)`.
    Rect { a: f64, b: f64 },
    /// Disk of radius `r0` about the origin, native coordinates `(rho, theta)`.
    Disk { r0: f64 },
}

impl Domain {
    /// Native coordinates to the Cartesian plane the Laplace system is solved in.
    pub fn to_cartesian(&self, q: [f64; 2]) -> [f64; 2] {
        match self {
            Domain::Rect { .. } => q,
            Domain::Disk { .. } => [q[0] * q[1].cos(), q[0] * q[1].sin()],
        }
    }

    /// Cartesian to native, with theta in `[0, 2pi)`.
    pub fn from_cartesian(&self, c: [f64; 2]) -> [f64; 2] {
        match self {
            Domain::Rect { .. } => c,
            Domain::Disk { .. } => [c[0].hypot(c[1]), wrap_angle(c[1].atan2(c[0]))],
        }
    }

    /// Whether a Cartesian image lies in the domain, up to `tol`.
    pub fn contains_cartesian(&self, c: [f64; 2], tol: f64) -> bool {
        match *self {
            Domain::Rect { a, b } => c[0] >= -tol && c[0] <= a + tol && c[1] >= -tol && c[1] <= b + tol,
            Domain::Disk { r0 } => c[0].hypot(c[1]) <= r0 + tol,
        }
    }

    /// Clamps a Cartesian image into the domain.
    pub fn clamp_cartesian(&self, c: [f64; 2]) -> [f64; 2] {
        match *self {
            Domain::Rect { a, b } => [c[0].clamp(0.0, a), c[1].clamp(0.0, b)],
            Domain::Disk { r0 } => {
                let r = c[0].hypot(c[1]);
                if r > r0 {
                    [c[0] * r0 / r, c[1] * r0 / r]
                } else {
                    c
                }
            }
        }
    }

    /// Characteristic size used for relative tolerances.
    pub fn size(&self) -> f64 {
        match *self {
            Domain::Rect { a, b } => a.max(b),
            Domain::Disk { r0 } => 2.0 * r0,
        }
    }

    pub fn is_disk(&self) -> bool {
        matches!(self, Domain::Disk { .. })
    }
}

pub(crate) fn wrap_angle(t: f64) -> f64 {
    let w = t.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Shape of the parameter domain, before its size is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    Rect,
    Disk,
}

impl std::str::FromStr for DomainKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rect" => Ok(DomainKind::Rect),
            "disk" => Ok(DomainKind::Disk),
            _ => Err(Error::InvalidArgument(format!(
                "unknown domain '{s}', expected rect or disk"
            ))),
        }
    }
}

/// Full parameterization of a cloud that already carries normals and
/// boundary tags: tangent-plane weights over `k` neighbours, boundary loop
/// through `breaks`, boundary mapping and the interior solve. Boundary
/// points that are not on the loop through the first break are solved for
/// like interior ones.
pub fn parameterize(
    cloud: &PointCloud,
    breaks: &[usize],
    kind: DomainKind,
    k: usize,
    solver: &SolverConfig,
) -> Result<Parameterization> {
    if kind == DomainKind::Rect && breaks.len() != 4 {
        return Err(Error::InvalidInput(format!(
            "a rectangle needs 4 break points (one per corner, 4 boundary parts), got {}",
            breaks.len()
        )));
    }
    let lp = order_boundary(cloud, breaks)?;
    let map = match kind {
        DomainKind::Rect => map_boundary_rect(&lp)?,
        DomainKind::Disk => map_boundary_disk(&lp)?,
    };
    // Boundary points off the loop (holes, other components) become unknowns.
    let weights = if lp.stray().is_empty() {
        build_laplacian(cloud, k, WeightScheme::Tangent)?
    } else {
        let mut retagged = cloud.clone();
        for &i in lp.stray() {
            retagged.set_tag(i, Tag::Interior);
        }
        build_laplacian(&retagged, k, WeightScheme::Tangent)?
    };
    solve_parameterization(&weights, &map, solver)
}

/// Fixed boundary images in native coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryMap {
    pub domain: Domain,
    /// `(cloud index, native coordinates)` per boundary point.
    pub assignments: Vec<(usize, [f64; 2])>,
}

/// Per-point parameter images.
#[derive(Debug, Clone)]
pub struct Parameterization {
    domain: Domain,
    native: Vec<[f64; 2]>,
    cartesian: Vec<[f64; 2]>,
    fixed: Vec<bool>,
    stats: SolveStats,
    clamped: usize,
}

impl Parameterization {
    /// Builds from native coordinates. `fixed` marks boundary points.
    pub fn from_native(domain: Domain, native: Vec<[f64; 2]>, fixed: Vec<bool>) -> Self {
        assert_eq!(native.len(), fixed.len());
        let cartesian = native.iter().map(|&q| domain.to_cartesian(q)).collect();
        Self {
            domain,
            native,
            cartesian,
            fixed,
            stats: SolveStats {
                iterations: 0,
                relative_residual: 0.0,
            },
            clamped: 0,
        }
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.native.len()
    }

    pub fn is_empty(&self) -> bool {
        self.native.is_empty()
    }

    /// `(u, v)` or `(rho, theta)`.
    pub fn native(&self, i: usize) -> [f64; 2] {
        self.native[i]
    }

    pub fn natives(&self) -> &[[f64; 2]] {
        &self.native
    }

    pub fn cartesian(&self, i: usize) -> [f64; 2] {
        self.cartesian[i]
    }

    pub fn cartesians(&self) -> &[[f64; 2]] {
        &self.cartesian
    }

    pub fn is_fixed(&self, i: usize) -> bool {
        self.fixed[i]
    }

    pub fn stats(&self) -> SolveStats {
        self.stats
    }

    /// Interior images that fell outside the domain and were pulled back onto it.
    pub fn clamped(&self) -> usize {
        self.clamped
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polar_round_trip() {
        let d = Domain::Disk { r0: 2.0 };
        for q in [[0.5, 0.0], [1.0, 3.0], [2.0, 6.0]] {
            let back = d.from_cartesian(d.to_cartesian(q));
            assert!((back[0] - q[0]).abs() < 1e-12 && (back[1] - q[1]).abs() < 1e-12);
        }
        assert_eq!(d.from_cartesian([1.0, -0.0])[1], 0.0);
        assert!(d.from_cartesian([1.0, -1e-300])[1] < TAU);
    }

    #[test]
    fn clamping() {
        let r = Domain::Rect { a: 2.0, b: 1.0 };
        assert_eq!(r.clamp_cartesian([-1.0, 3.0]), [0.0, 1.0]);
        let d = Domain::Disk { r0: 1.0 };
        let c = d.clamp_cartesian([3.0, 4.0]);
        assert!((c[0] - 0.6).abs() < 1e-15 && (c[1] - 0.8).abs() < 1e-15);
    }
}

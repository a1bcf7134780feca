//! Iso-parametric tool path planning for a ball-end cutter.

mod paths;

use std::fmt;

use nalgebra::Point3;

use crate::diffgeo::{curvature_radius, ConvexSign, Convexity, Curvature, DerivativeSample, Direction};
use crate::error::{Error, Result};
use crate::param::Domain;

pub use paths::{plan, plan_contour_parallel, plan_direction_parallel, CENTER_FAN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pattern {
    /// Rows of constant `u` on a rectangle.
    #[default]
    DirectionParallel,
    /// Rings of constant `rho` on a disk.
    ContourParallel,
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pattern::DirectionParallel => "direction",
            Pattern::ContourParallel => "contour",
        })
    }
}

impl std::str::FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direction" => Ok(Pattern::DirectionParallel),
            "contour" => Ok(Pattern::ContourParallel),
            _ => Err(Error::InvalidArgument(format!(
                "unknown pattern '{s}', expected direction or contour"
            ))),
        }
    }
}

/// Cutter and tolerance settings. Lengths in mm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToolConfig {
    pub cutter_radius: f64,
    pub scallop: f64,
    pub chord: f64,
    pub pattern: Pattern,
    /// Paths planned from each boundary side with the projected side step.
    pub boundary_band_paths: usize,
    /// Cap on any parametric step as a fraction of the domain extent.
    pub max_step_fraction: f64,
    pub convex_sign: ConvexSign,
}

impl Default for ToolConfig {
    fn default() -> Self {
        Self {
            cutter_radius: 4.0,
            scallop: 1.0,
            chord: 0.01,
            pattern: Pattern::DirectionParallel,
            boundary_band_paths: 4,
            max_step_fraction: 0.05,
            convex_sign: ConvexSign::default(),
        }
    }
}

impl ToolConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.cutter_radius > 0.0 && self.cutter_radius.is_finite()) {
            return bad(format!("cutter radius {} must be positive", self.cutter_radius));
        }
        if !(self.scallop > 0.0 && self.scallop < self.cutter_radius) {
            return bad(format!(
                "scallop height {} must be positive and below the cutter radius {}",
                self.scallop, self.cutter_radius
            ));
        }
        if !(self.chord > 0.0 && self.chord.is_finite()) {
            return bad(format!("chord deviation {} must be positive", self.chord));
        }
        if !(3..=5).contains(&self.boundary_band_paths) {
            return bad(format!(
                "boundary band paths {} must be in 3..=5",
                self.boundary_band_paths
            ));
        }
        if !(self.max_step_fraction > 0.0 && self.max_step_fraction <= 1.0) {
            return bad(format!(
                "max step fraction {} must be in (0, 1]",
                self.max_step_fraction
            ));
        }
        Ok(())
    }

    /// Returns a copy with every length multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            cutter_radius: self.cutter_radius * s,
            scallop: self.scallop * s,
            chord: self.chord * s,
            ..*self
        }
    }
}

/// Which planning stage produced a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Near a boundary, stepped with the projected side step.
    Band,
    /// Filling the narrowed domain, stepped with the interior side step.
    Fill,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathPoint {
    /// Cutter-contact point on the surface, mm.
    pub position: Point3<f64>,
    /// Native parametric coordinates.
    pub q: [f64; 2],
}

/// One iso-parametric path.
#[derive(Debug, Clone, PartialEq)]
pub struct ToolPath {
    pub index: usize,
    pub pattern: Pattern,
    pub points: Vec<PathPoint>,
    pub stage: Stage,
    /// Path whose side steps placed this one, if any.
    pub parent: Option<usize>,
    /// Parametric side step taken from the parent (0 for a starting path).
    pub step: f64,
    /// Per-point side steps toward the next path of the same chain, in
    /// parameter units.
    pub side_steps: Vec<f64>,
    /// Per-point target side intervals behind those steps, mm.
    pub side_intervals: Vec<f64>,
}

impl ToolPath {
    /// The constant parameter (`u` or `rho`).
    pub fn iso_value(&self) -> f64 {
        self.points[0].q[0]
    }
}

/// Forward interval `sqrt(8 e R - 4 e^2)` bounding the chord deviation `e`
/// over a curve of radius `R`; a flat curve gets `flat_cap`.
pub fn forward_interval(curvature: Curvature, chord: f64, flat_cap: f64) -> Result<f64> {
    match curvature {
        Curvature::Flat => Ok(flat_cap),
        Curvature::Curved { radius, .. } => {
            if radius <= 0.5 * chord {
                return Err(Error::InvalidCurvature {
                    radius,
                    half_chord: 0.5 * chord,
                });
            }
            Ok((8.0 * chord * radius - 4.0 * chord * chord).sqrt())
        }
    }
}

/// Side interval between adjacent passes keeping the scallop below `scallop`.
pub fn side_interval(curvature: Curvature, scallop: f64, cutter: f64) -> Result<f64> {
    let base = 8.0 * scallop * cutter;
    match curvature {
        Curvature::Flat => Ok(base.sqrt()),
        Curvature::Curved {
            radius,
            convexity: Convexity::Convex,
        } => Ok((base * radius / (radius + cutter)).sqrt()),
        Curvature::Curved {
            radius,
            convexity: Convexity::Concave,
        } => {
            if radius <= cutter {
                return Err(Error::Gouging { radius, cutter });
            }
            Ok((base * radius / (radius - cutter)).sqrt())
        }
    }
}

fn extent(domain: Domain) -> f64 {
    match domain {
        Domain::Rect { b, .. } => b,
        Domain::Disk { .. } => std::f64::consts::TAU,
    }
}

/// Forward parametric step `l_f / |r_v|`, capped at `max_step_fraction` of
/// the forward extent (`b`, or `2 pi` on a disk).
pub fn forward_step(sample: &DerivativeSample, cfg: &ToolConfig, domain: Domain) -> Result<f64> {
    let speed = sample.r_v.norm();
    if !(speed > 0.0) {
        return Err(Error::DegenerateGeometry(format!(
            "forward tangent vanishes at ({:.6}, {:.6})",
            sample.q[0], sample.q[1]
        )));
    }
    let cap = cfg.max_step_fraction * extent(domain);
    let lf = forward_interval(
        curvature_radius(sample, Direction::V, cfg.convex_sign),
        cfg.chord,
        cap * sample.sigma,
    )?;
    Ok((lf / speed).min(cap))
}

fn side_speed(sample: &DerivativeSample) -> Result<f64> {
    let speed = sample.r_u.norm();
    if !(speed > 0.0) {
        return Err(Error::DegenerateGeometry(format!(
            "side tangent vanishes at ({:.6}, {:.6})",
            sample.q[0], sample.q[1]
        )));
    }
    Ok(speed)
}

/// Interior side step `l_s / |r_u|` with `(step, l_s)` returned.
pub(crate) fn interior_side(sample: &DerivativeSample, cfg: &ToolConfig) -> Result<(f64, f64)> {
    let speed = side_speed(sample)?;
    let ls = side_interval(
        curvature_radius(sample, Direction::U, cfg.convex_sign),
        cfg.scallop,
        cfg.cutter_radius,
    )?;
    Ok((ls / speed, ls))
}

/// Projected side step near a boundary, with `(step, l_s)` returned.
pub(crate) fn boundary_side(sample: &DerivativeSample, mean_curvature: f64, cfg: &ToolConfig) -> Result<(f64, f64)> {
    let speed = side_speed(sample)?;
    let sin = sample.r_u.cross(&sample.r_v).norm() / (speed * sample.r_v.norm());
    if !(sin > 1e-9) {
        return Err(Error::DegenerateGeometry(format!(
            "parameter directions are parallel at ({:.6}, {:.6})",
            sample.q[0], sample.q[1]
        )));
    }
    // Euler: the curvature across the forward direction.
    let kappa_side = 2.0 * mean_curvature - sample.normal_curvature_v();
    let curvature = Curvature::from_normal_curvature(kappa_side, cfg.convex_sign);
    let ls = side_interval(curvature, cfg.scallop, cfg.cutter_radius)?;
    let projection = (sample.theta - std::f64::consts::FRAC_PI_2).abs().cos();
    Ok((ls / (projection * speed), ls))
}

/// Interior side step `l_s / |r_u|`.
pub fn side_step_interior(sample: &DerivativeSample, cfg: &ToolConfig) -> Result<f64> {
    interior_side(sample, cfg).map(|s| s.0)
}

/// Side step near a boundary: the side curvature comes from the mean
/// curvature and the forward curvature, and the interval is projected onto
/// `r_u` through the angle between the parameter directions.
pub fn side_step_boundary(sample: &DerivativeSample, mean_curvature: f64, cfg: &ToolConfig) -> Result<f64> {
    boundary_side(sample, mean_curvature, cfg).map(|s| s.0)
}

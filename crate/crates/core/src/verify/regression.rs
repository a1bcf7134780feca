use std::fmt::{self, Write as _};

use super::synthetic::{self, SyntheticCloud};
use super::{evaluate_plan, PathQualityReport, Tolerances};
use crate::cloud::DEFAULT_K;
use crate::diffgeo::{curvature_radius, Curvature, Direction, Surface, SurfaceConfig};
use crate::error::{Error, Result};
use crate::param::{conformality_report, parameterize, SolverConfig};
use crate::planner::{plan_direction_parallel, side_interval, ToolConfig, ToolPath};

const SEED: u64 = 7;
const CONFORMALITY_SAMPLES: usize = 400;

/// Surfaces with closed-form expectations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticSurface {
    Plane,
    Sphere(f64),
    Cylinder(f64),
}

impl fmt::Display for AnalyticSurface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalyticSurface::Plane => write!(f, "plane"),
            AnalyticSurface::Sphere(r) => write!(f, "sphere:{r}"),
            AnalyticSurface::Cylinder(r) => write!(f, "cylinder:{r}"),
        }
    }
}

impl std::str::FromStr for AnalyticSurface {
    type Err = Error;

    /// `plane`, `sphere:<radius>` or `cylinder:<radius>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown analytic surface '{s}'"));
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let radius = || -> Result<f64> {
            let r: f64 = arg.ok_or_else(bad)?.parse().map_err(|_| bad())?;
            if r > 0.0 && r.is_finite() {
                Ok(r)
            } else {
                Err(bad())
            }
        };
        match name {
            "plane" if arg.is_none() => Ok(AnalyticSurface::Plane),
            "sphere" => Ok(AnalyticSurface::Sphere(radius()?)),
            "cylinder" => Ok(AnalyticSurface::Cylinder(radius()?)),
            _ => Err(bad()),
        }
    }
}

/// One closed-form expectation: passes when `value` is on the right side of
/// `limit`.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            passed: value <= limit,
        }
    }

    fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            passed: value >= limit,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RegressionReport {
    pub surface: AnalyticSurface,
    pub paths: Vec<ToolPath>,
    pub quality: PathQualityReport,
    pub checks: Vec<Check>,
}

impl RegressionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("surface: {}\npaths: {}\n", self.surface, self.paths.len());
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{}: {:.6} (limit {:.6}) {}",
                c.name,
                c.value,
                c.limit,
                if c.passed { "pass" } else { "fail" }
            );
        }
        s.push_str(&self.quality.to_text());
        let _ = writeln!(s, "regression_pass: {}", self.passed());
        s
    }
}

/// Builds the synthetic cloud, runs parameterization, direction-parallel
/// planning and verification, and checks the closed-form expectations:
/// side spacing on a plane, curvature radius and conformality on a sphere,
/// chord deviation on a cylinder.
pub fn analytic_regression(surface: AnalyticSurface, cfg: &ToolConfig) -> Result<RegressionReport> {
    let synth = match surface {
        AnalyticSurface::Plane => synthetic::plane(41, 1.0, 0.2, SEED),
        AnalyticSurface::Sphere(r) => synthetic::sphere_cap(r, 46, r / 50.0, 0.2, SEED),
        AnalyticSurface::Cylinder(r) => synthetic::cylinder(r, 101, 0.2 * r / 25.0, 0.0, SEED),
    }?;
    let SyntheticCloud { cloud, breaks, kind } = synth;
    let param = parameterize(&cloud, &breaks, kind, DEFAULT_K, &SolverConfig::default())?;
    let surf = Surface::new(&cloud, &param, SurfaceConfig::default())?;
    let paths = plan_direction_parallel(&surf, cfg)?;
    let quality = evaluate_plan(&surf, &paths, cfg.chord, Tolerances::default())?;

    let mut checks = Vec::new();
    match surface {
        AnalyticSurface::Plane => {
            let target = side_interval(Curvature::Flat, cfg.scallop, cfg.cutter_radius)?;
            let stepped = quality.pairs.iter().filter(|p| p.stepped).flat_map(|p| &p.points);
            let (lo, hi) = stepped.fold((f64::INFINITY, 0.0f64), |(lo, hi), p| {
                (lo.min(p.achieved), hi.max(p.achieved))
            });
            checks.push(Check::at_least("flat_spacing_min", lo, 0.95 * target));
            checks.push(Check::at_most("flat_spacing_max", hi, target * (1.0 + 1e-6)));
            let curved = paths
                .iter()
                .flat_map(|p| &p.points)
                .map(|pt| surf.derivatives(pt.q))
                .collect::<Result<Vec<_>>>()?
                .iter()
                .filter(|s| {
                    [Direction::U, Direction::V]
                        .iter()
                        .any(|&d| curvature_radius(s, d, cfg.convex_sign) != Curvature::Flat)
                })
                .count();
            checks.push(Check::at_most("flat_curved_samples", curved as f64, 0.0));
        }
        AnalyticSurface::Sphere(r) => {
            let report = conformality_report(&surf, CONFORMALITY_SAMPLES, SEED)
                .ok_or_else(|| Error::TooSparse("no interior samples for the conformality check".into()))?;
            checks.push(Check::at_most("metric_ratio_median", report.metric.median, 0.15));
            checks.push(Check::at_most("angle_error_median_deg", report.angle_deg.median, 10.0));
            let radii = sample_forward_radii(&surf, cfg)?;
            let near = radii.iter().filter(|&&x| (x - r).abs() <= 0.1 * r).count();
            checks.push(Check::at_least(
                "forward_radius_within_10pct",
                near as f64 / radii.len().max(1) as f64,
                0.9,
            ));
            let mean = |d: &Option<crate::param::Distribution>| d.map_or(0.0, |d| d.mean);
            checks.push(Check::at_most("interior_epsilon_mean", mean(&quality.interior), 5.0));
            checks.push(Check::at_most(
                "near_boundary_epsilon_mean",
                mean(&quality.near_boundary),
                8.0,
            ));
        }
        AnalyticSurface::Cylinder(_) => {
            checks.push(Check::at_most(
                "chord_deviation_max",
                quality.chord_max,
                quality.chord_limit,
            ));
        }
    }
    Ok(RegressionReport {
        surface,
        paths,
        quality,
        checks,
    })
}

/// Forward curvature radii at interior cloud images at least two spacings
/// from the domain edge.
fn sample_forward_radii(surf: &Surface, cfg: &ToolConfig) -> Result<Vec<f64>> {
    let param = surf.param();
    let domain = surf.domain();
    (0..param.len())
        .filter(|&i| !param.is_fixed(i))
        .filter(|&i| {
            let c = param.cartesian(i);
            let inside = match domain {
                crate::param::Domain::Rect { a, b } => c[0].min(a - c[0]).min(c[1]).min(b - c[1]),
                crate::param::Domain::Disk { r0 } => r0 - c[0].hypot(c[1]),
            };
            inside >= 2.0 * surf.spacing_at(c)
        })
        .map(|i| {
            let s = surf.derivatives(param.native(i))?;
            Ok(curvature_radius(&s, Direction::V, cfg.convex_sign).radius())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_surface_names() {
        assert_eq!("plane".parse::<AnalyticSurface>().unwrap(), AnalyticSurface::Plane);
        assert_eq!(
            "sphere:50".parse::<AnalyticSurface>().unwrap(),
            AnalyticSurface::Sphere(50.0)
        );
        assert_eq!(
            "cylinder:2.5".parse::<AnalyticSurface>().unwrap(),
            AnalyticSurface::Cylinder(2.5)
        );
        for bad in ["sphere", "sphere:-1", "cone:3", "plane:2"] {
            assert!(bad.parse::<AnalyticSurface>().is_err(), "{bad}");
        }
    }
}

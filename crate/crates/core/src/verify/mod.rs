//! Path quality: side-interval error against the conformal prediction,
//! chord deviation, and regression against analytic surfaces.

mod regression;
pub mod synthetic;

use std::fmt::Write as _;

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;

use crate::diffgeo::Surface;
use crate::error::{Error, Result};
use crate::param::Distribution;
use crate::planner::{PathPoint, Stage, ToolPath};

pub use regression::{analytic_regression, AnalyticSurface, Check, RegressionReport};

/// Per-point side-interval measurement between two adjacent paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidePoint {
    /// Native parametric point on the path measured from.
    pub q: [f64; 2],
    pub sigma: f64,
    /// Parametric gap times the conformal factor, mm.
    pub predicted: f64,
    /// Measured 3D distance to the other path, mm.
    pub achieved: f64,
    /// `|achieved - predicted| / achieved`, percent.
    pub epsilon: f64,
}

/// Side-interval error between two paths with consecutive indices.
#[derive(Debug, Clone, PartialEq)]
pub struct PairReport {
    pub from: usize,
    pub to: usize,
    /// Placed by the projected side step, or between two band paths.
    pub near_boundary: bool,
    /// `from` is the parent whose side steps placed `to`.
    pub stepped: bool,
    pub points: Vec<SidePoint>,
}

impl PairReport {
    pub fn epsilon(&self) -> Option<Distribution> {
        Distribution::from_values(self.points.iter().map(|p| p.epsilon).collect())
    }
}

/// Thresholds a plan is judged against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Mean side-interval error over interior pairs, percent.
    pub interior_mean_epsilon: f64,
    /// Mean side-interval error over near-boundary pairs, percent.
    pub boundary_mean_epsilon: f64,
    /// Allowed chord deviation as a multiple of the configured limit.
    pub chord_factor: f64,
    pub samples_per_segment: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            interior_mean_epsilon: 5.0,
            boundary_mean_epsilon: 8.0,
            chord_factor: 1.05,
            samples_per_segment: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathQualityReport {
    pub pairs: Vec<PairReport>,
    /// Side-interval error over interior pairs, percent.
    pub interior: Option<Distribution>,
    pub near_boundary: Option<Distribution>,
    /// Largest chord deviation over all paths, mm.
    pub chord_max: f64,
    pub chord_limit: f64,
    pub tolerances: Tolerances,
    pub interior_pass: bool,
    pub boundary_pass: bool,
    pub chord_pass: bool,
}

/// Scallop-height error implied by a side-interval error: twice it, since
/// the scallop height grows with the square of the interval.
pub fn scallop_error(epsilon: &Distribution) -> Distribution {
    Distribution {
        mean: 2.0 * epsilon.mean,
        median: 2.0 * epsilon.median,
        p90: 2.0 * epsilon.p90,
        min: 2.0 * epsilon.min,
        max: 2.0 * epsilon.max,
        ..*epsilon
    }
}

impl PathQualityReport {
    pub fn passed(&self) -> bool {
        self.interior_pass && self.boundary_pass && self.chord_pass
    }

    /// `key: value` lines, fixed 6 decimals.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut dist = |name: &str, d: &Option<Distribution>| {
            let _ = writeln!(s, "{name}_pairs_points: {}", d.map_or(0, |d| d.count));
            if let Some(d) = d {
                let h = scallop_error(d);
                let _ = writeln!(s, "{name}_epsilon_mean: {:.6}", d.mean);
                let _ = writeln!(s, "{name}_epsilon_max: {:.6}", d.max);
                let _ = writeln!(s, "{name}_epsilon_min: {:.6}", d.min);
                let _ = writeln!(s, "{name}_epsilon_median: {:.6}", d.median);
                let _ = writeln!(s, "{name}_scallop_error_mean: {:.6}", h.mean);
                let _ = writeln!(s, "{name}_scallop_error_max: {:.6}", h.max);
            }
        };
        dist("interior", &self.interior);
        dist("near_boundary", &self.near_boundary);
        let _ = writeln!(s, "paths_compared: {}", self.pairs.len());
        let _ = writeln!(s, "chord_deviation_max: {:.6}", self.chord_max);
        let _ = writeln!(s, "chord_deviation_limit: {:.6}", self.chord_limit);
        let _ = writeln!(s, "interior_pass: {}", self.interior_pass);
        let _ = writeln!(s, "near_boundary_pass: {}", self.boundary_pass);
        let _ = writeln!(s, "chord_pass: {}", self.chord_pass);
        let _ = writeln!(s, "pass: {}", self.passed());
        s
    }

    /// One row per measured point.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("from,to,class,stepped,point,q0,q1,sigma,predicted,achieved,epsilon\n");
        for pr in &self.pairs {
            let class = if pr.near_boundary { "near_boundary" } else { "interior" };
            for (k, p) in pr.points.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "{},{},{class},{},{k},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
                    pr.from, pr.to, pr.stepped, p.q[0], p.q[1], p.sigma, p.predicted, p.achieved, p.epsilon
                );
            }
        }
        s
    }
}

fn closest_on_segment(p: &Point3<f64>, a: &Point3<f64>, b: &Point3<f64>) -> Point3<f64> {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return *a;
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    a + ab * t
}

/// Point of the curve through `a` and `b` at fraction `s` of the parametric
/// segment between them.
fn curve_point(surface: &Surface, a: &PathPoint, b: &PathPoint, s: f64) -> Option<Point3<f64>> {
    if s <= 0.0 {
        return Some(a.position);
    }
    if s >= 1.0 {
        return Some(b.position);
    }
    surface
        .interpolate([a.q[0] + s * (b.q[0] - a.q[0]), a.q[1] + s * (b.q[1] - a.q[1])])
        .ok()
}

/// Distance from `p` to the curve of `line`, searched on the segment whose
/// chord comes closest and refined by golden-section search.
fn closest_on_curve(surface: &Surface, p: &Point3<f64>, line: &[PathPoint]) -> f64 {
    if line.len() == 1 {
        return (line[0].position - p).norm();
    }
    let Some(w) = line.windows(2).min_by(|x, y| {
        let dx = (closest_on_segment(p, &x[0].position, &x[1].position) - p).norm();
        let dy = (closest_on_segment(p, &y[0].position, &y[1].position) - p).norm();
        dx.total_cmp(&dy)
    }) else {
        return f64::INFINITY;
    };
    let dist = |s: f64| curve_point(surface, &w[0], &w[1], s).map_or(f64::INFINITY, |x| (x - p).norm());
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let (m1, m2) = (hi - g * (hi - lo), lo + g * (hi - lo));
        if dist(m1) <= dist(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    dist(0.5 * (lo + hi)).min(dist(0.0)).min(dist(1.0))
}

/// Distance from `p` to the nearest crossing of the curve of `line` with the
/// plane through `p` normal to `tangent`. Crossings are bracketed on the
/// polyline and located on the curve by bisection. Without a tangent or a
/// crossing, falls back to the closest point of the curve.
fn side_distance(surface: &Surface, p: &Point3<f64>, tangent: Option<Vector3<f64>>, line: &[PathPoint]) -> f64 {
    let Some(t) = tangent else {
        return closest_on_curve(surface, p, line);
    };
    let mut best = f64::INFINITY;
    for w in line.windows(2) {
        let (d0, d1) = ((w[0].position - p).dot(&t), (w[1].position - p).dot(&t));
        if !(d0 * d1 <= 0.0 && d0 != d1) {
            continue;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut crossing = w[0].position + (w[1].position - w[0].position) * (d0 / (d0 - d1));
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            let Some(x) = curve_point(surface, &w[0], &w[1], mid) else {
                break;
            };
            crossing = x;
            if ((x - p).dot(&t) < 0.0) == (d0 < 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        best = best.min((crossing - p).norm());
    }
    if best.is_finite() {
        best
    } else {
        closest_on_curve(surface, p, line)
    }
}

/// Unit forward tangents from the three-point derivative in chord length,
/// exact for points on a circle whatever the spacing. A polyline whose ends
/// coincide is treated as closed.
fn tangents(line: &[Point3<f64>]) -> Vec<Option<Vector3<f64>>> {
    let n = line.len();
    let closed = n > 3 && {
        let size = line.iter().map(|p| (p - line[0]).norm()).fold(0.0, f64::max);
        (line[n - 1] - line[0]).norm() <= 1e-9 * size
    };
    (0..n)
        .map(|i| {
            if n < 2 {
                return None;
            }
            let (prev, next) = if closed && (i == 0 || i == n - 1) {
                (line[n - 2], line[1])
            } else {
                (line[i.saturating_sub(1)], line[(i + 1).min(n - 1)])
            };
            let (back, ahead) = (line[i] - prev, next - line[i]);
            let (h0, h1) = (back.norm(), ahead.norm());
            let d = match (h0 > 0.0, h1 > 0.0) {
                (true, true) => back * (h1 / h0) + ahead * (h0 / h1),
                _ => back + ahead,
            };
            let len = d.norm();
            (len > 0.0).then(|| d / len)
        })
        .collect()
}

/// Side-interval error of the pair `(a, b)`, measured from each point of `a`.
///
/// The prediction is the parametric gap between the two iso-lines times the
/// conformal factor at the point. The achieved interval is the distance to
/// the iso-curve of `b` within the plane normal to the forward tangent of `a`.
pub fn side_interval_error(surface: &Surface, a: &ToolPath, b: &ToolPath) -> Result<PairReport> {
    if a.index.abs_diff(b.index) != 1 {
        return Err(Error::InvalidInput(format!(
            "paths {} and {} are not adjacent",
            a.index, b.index
        )));
    }
    if a.points.is_empty() || b.points.is_empty() {
        return Err(Error::InvalidInput("cannot compare an empty path".into()));
    }
    let gap = (b.iso_value() - a.iso_value()).abs();
    let line_a: Vec<Point3<f64>> = a.points.iter().map(|p| p.position).collect();
    let points = a
        .points
        .iter()
        .zip(tangents(&line_a))
        .filter_map(|(pt, t)| {
            let sigma = match surface.derivatives(pt.q) {
                Ok(s) => s.sigma,
                Err(e) => return Some(Err(e)),
            };
            let achieved = side_distance(surface, &pt.position, t, &b.points);
            (achieved > 0.0).then(|| {
                let predicted = gap * sigma;
                Ok(SidePoint {
                    q: pt.q,
                    sigma,
                    predicted,
                    achieved,
                    epsilon: (achieved - predicted).abs() / achieved * 100.0,
                })
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let stepped = b.parent == Some(a.index);
    Ok(PairReport {
        from: a.index,
        to: b.index,
        // A stepped pair is classed by the step that placed it; otherwise
        // both paths must be band paths.
        near_boundary: b.stage == Stage::Band && (stepped || a.stage == Stage::Band),
        stepped,
        points,
    })
}

/// Base-2 van der Corput sequence: each prefix is a subset of longer ones.
fn van_der_corput(mut k: usize) -> f64 {
    let (mut x, mut scale) = (0.0, 0.5);
    while k > 0 {
        if k & 1 == 1 {
            x += scale;
        }
        k >>= 1;
        scale *= 0.5;
    }
    x
}

/// Largest distance between a path's chords and the surface, sampled at
/// `samples_per_segment` parametric points inside each segment. Sample sets
/// are nested, so more samples never report less.
pub fn chord_deviation_audit(surface: &Surface, path: &ToolPath, samples_per_segment: usize) -> Result<f64> {
    let fractions: Vec<f64> = (1..=samples_per_segment).map(van_der_corput).collect();
    path.points
        .par_windows(2)
        .map(|w| {
            let (a, b) = (&w[0], &w[1]);
            fractions.iter().try_fold(0.0f64, |worst, &t| {
                let q = [a.q[0] + t * (b.q[0] - a.q[0]), a.q[1] + t * (b.q[1] - a.q[1])];
                let x = surface.interpolate(q)?;
                let d = (closest_on_segment(&x, &a.position, &b.position) - x).norm();
                Ok(worst.max(d))
            })
        })
        .try_reduce(|| 0.0, |x, y| Ok(x.max(y)))
}

/// Side-interval errors over every pair of consecutive paths, measured from
/// the parent when one placed the other, plus a chord audit of every path.
pub fn evaluate_plan(surface: &Surface, paths: &[ToolPath], chord: f64, tol: Tolerances) -> Result<PathQualityReport> {
    let pairs = paths
        .par_windows(2)
        .map(|w| {
            let (a, b) = if w[0].parent == Some(w[1].index) {
                (&w[1], &w[0])
            } else {
                (&w[0], &w[1])
            };
            side_interval_error(surface, a, b)
        })
        .collect::<Result<Vec<_>>>()?;
    let chord_max = paths
        .par_iter()
        .map(|p| chord_deviation_audit(surface, p, tol.samples_per_segment))
        .try_reduce(|| 0.0, |x, y| Ok(x.max(y)))?;
    let collect = |near: bool| {
        Distribution::from_values(
            pairs
                .iter()
                .filter(|p| p.near_boundary == near)
                .flat_map(|p| p.points.iter().map(|x| x.epsilon))
                .collect(),
        )
    };
    let (interior, near_boundary) = (collect(false), collect(true));
    let chord_limit = tol.chord_factor * chord;
    Ok(PathQualityReport {
        interior_pass: interior.is_none_or(|d| d.mean <= tol.interior_mean_epsilon),
        boundary_pass: near_boundary.is_none_or(|d| d.mean <= tol.boundary_mean_epsilon),
        chord_pass: chord_max <= chord_limit,
        pairs,
        interior,
        near_boundary,
        chord_max,
        chord_limit,
        tolerances: tol,
    })
}

use std::f64::consts::TAU;

use rayon::prelude::*;

use super::{boundary_side, forward_step, interior_side, PathPoint, Pattern, Stage, ToolConfig, ToolPath};
use crate::diffgeo::{DerivativeSample, Surface};
use crate::error::{Error, Result};
use crate::param::Domain;

/// Directions sampled around the disk centre for its side step.
pub const CENTER_FAN: usize = 16;

const MAX_POINTS_PER_PATH: usize = 1_000_000;

#[derive(Clone, Copy, PartialEq, Eq)]
enum StepKind {
    Boundary,
    Interior,
}

struct Draft {
    iso: f64,
    stage: Stage,
    parent: Option<usize>,
    step: f64,
    points: Vec<PathPoint>,
    samples: Vec<DerivativeSample>,
    kind: Option<StepKind>,
    side_steps: Vec<f64>,
    side_intervals: Vec<f64>,
}

struct Planner<'s, 'a> {
    surface: &'s Surface<'a>,
    cfg: &'s ToolConfig,
    domain: Domain,
    /// End of the forward parameter range.
    end: f64,
    drafts: Vec<Draft>,
}

impl<'s, 'a> Planner<'s, 'a> {
    fn new(surface: &'s Surface<'a>, cfg: &'s ToolConfig) -> Self {
        let domain = surface.domain();
        let end = match domain {
            Domain::Rect { b, .. } => b,
            Domain::Disk { .. } => TAU,
        };
        Self {
            surface,
            cfg,
            domain,
            end,
            drafts: Vec::new(),
        }
    }

    /// Marches one path at constant `iso` from 0 to the end of the forward
    /// range, clamping the last point onto it.
    fn march(&self, iso: f64) -> Result<(Vec<PathPoint>, Vec<DerivativeSample>)> {
        let (mut points, mut samples) = (Vec::new(), Vec::new());
        let mut t = 0.0;
        loop {
            let q = [iso, t];
            let s = self.surface.derivatives(q)?;
            points.push(PathPoint {
                position: s.position,
                q,
            });
            samples.push(s);
            if t >= self.end {
                break;
            }
            if points.len() >= MAX_POINTS_PER_PATH {
                return Err(Error::TooSparse(format!(
                    "path at {iso:.6} needs more than {MAX_POINTS_PER_PATH} points"
                )));
            }
            let dt = forward_step(&s, self.cfg, self.domain)?;
            t = if t + dt >= self.end * (1.0 - 1e-9) {
                self.end
            } else {
                t + dt
            };
        }
        Ok((points, samples))
    }

    fn add(&mut self, iso: f64, stage: Stage, parent: Option<usize>, step: f64) -> Result<usize> {
        let id = self.drafts.len();
        let (points, samples) = self.march(iso).map_err(|e| e.at_path(id))?;
        self.drafts.push(Draft {
            iso,
            stage,
            parent,
            step,
            points,
            samples,
            kind: None,
            side_steps: Vec::new(),
            side_intervals: Vec::new(),
        });
        Ok(id)
    }

    /// The disk centre as a one-point path. Its side step is the smallest
    /// interior step over a fan of directions.
    fn add_center(&mut self, stage: Stage, parent: Option<usize>, step: f64) -> Result<usize> {
        let id = self.drafts.len();
        let (surface, cfg) = (self.surface, self.cfg);
        let position = surface.interpolate([0.0, 0.0]).map_err(|e| e.at_path(id))?;
        let fan = (0..CENTER_FAN)
            .into_par_iter()
            .map(|k| {
                let phi = TAU * k as f64 / CENTER_FAN as f64;
                let s = surface.frame_derivatives([0.0, 0.0], [phi.cos(), phi.sin()])?;
                interior_side(&s, cfg)
            })
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.at_path(id))?;
        let best = fan
            .iter()
            .copied()
            .fold((f64::INFINITY, 0.0), |m, s| if s.0 < m.0 { s } else { m });
        self.drafts.push(Draft {
            iso: 0.0,
            stage,
            parent,
            step,
            points: vec![PathPoint {
                position,
                q: [0.0, 0.0],
            }],
            samples: Vec::new(),
            kind: Some(StepKind::Interior),
            side_steps: vec![best.0],
            side_intervals: vec![best.1],
        });
        Ok(id)
    }

    /// Smallest per-point side step of path `id`, evaluated with `kind`.
    fn min_step(&mut self, id: usize, kind: StepKind) -> Result<f64> {
        if self.drafts[id].kind != Some(kind) && !self.drafts[id].samples.is_empty() {
            let (surface, cfg) = (self.surface, self.cfg);
            let steps = self.drafts[id]
                .samples
                .par_iter()
                .map(|s| match kind {
                    StepKind::Interior => interior_side(s, cfg),
                    StepKind::Boundary => {
                        let h = surface.mean_curvature_at(s.q)?;
                        boundary_side(s, h, cfg)
                    }
                })
                .collect::<Result<Vec<_>>>()
                .map_err(|e| e.at_path(id))?;
            let d = &mut self.drafts[id];
            (d.side_steps, d.side_intervals) = steps.into_iter().unzip();
            d.kind = Some(kind);
        }
        let step = self.drafts[id].side_steps.iter().copied().fold(f64::INFINITY, f64::min);
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::DegenerateGeometry(format!("side step {step} is not positive")).at_path(id));
        }
        Ok(step)
    }

    /// Sorts by the constant parameter and renumbers, keeping parent links.
    fn finish(self, pattern: Pattern) -> Vec<ToolPath> {
        let mut order: Vec<usize> = (0..self.drafts.len()).collect();
        order.sort_by(|&x, &y| self.drafts[x].iso.total_cmp(&self.drafts[y].iso));
        let mut rank = vec![0; order.len()];
        for (r, &id) in order.iter().enumerate() {
            rank[id] = r;
        }
        let mut slots: Vec<Option<Draft>> = self.drafts.into_iter().map(Some).collect();
        order
            .iter()
            .enumerate()
            .map(|(index, &id)| {
                let d = slots[id].take().expect("each draft is taken once");
                ToolPath {
                    index,
                    pattern,
                    points: d.points,
                    stage: d.stage,
                    parent: d.parent.map(|p| rank[p]),
                    step: d.step,
                    side_steps: d.side_steps,
                    side_intervals: d.side_intervals,
                }
            })
            .collect()
    }
}

/// Rows of constant `u` over a rectangular parameterization.
///
/// Band paths are planned inward from `u = 0` and `u = a` alternately with the
/// projected side step, then the remaining strip is filled upward from the
/// innermost left band path with the interior step. Every step is the
/// minimum over the points of the path it starts from. Paths come back sorted
/// by `u`.
pub fn plan_direction_parallel(surface: &Surface, cfg: &ToolConfig) -> Result<Vec<ToolPath>> {
    cfg.validate()?;
    let Domain::Rect { a, .. } = surface.domain() else {
        return Err(Error::InvalidInput(
            "direction-parallel paths need a rectangular domain".into(),
        ));
    };
    let mut p = Planner::new(surface, cfg);
    let band = cfg.boundary_band_paths;
    let mut left = p.add(0.0, Stage::Band, None, 0.0)?;
    let mut right = p.add(a, Stage::Band, None, 0.0)?;
    let (mut n_left, mut n_right) = (1, 1);
    let mut prefer_left = true;
    let mut collapsed = false;
    while n_left < band || n_right < band {
        let step_l = p.min_step(left, StepKind::Boundary)?;
        let step_r = p.min_step(right, StepKind::Boundary)?;
        let gap = p.drafts[right].iso - p.drafts[left].iso;
        if gap <= step_l.min(step_r) {
            collapsed = true;
            break;
        }
        let fits_l = n_left < band && step_l < gap;
        let fits_r = n_right < band && step_r < gap;
        let go_left = match (fits_l, fits_r) {
            (true, true) => prefer_left,
            (true, false) => true,
            (false, true) => false,
            (false, false) => break,
        };
        if go_left {
            let u = p.drafts[left].iso + step_l;
            left = p.add(u, Stage::Band, Some(left), step_l)?;
            n_left += 1;
        } else {
            let u = p.drafts[right].iso - step_r;
            right = p.add(u, Stage::Band, Some(right), step_r)?;
            n_right += 1;
        }
        prefer_left = !go_left;
    }
    if !collapsed {
        let u_right = p.drafts[right].iso;
        let mut current = left;
        loop {
            let step = p.min_step(current, StepKind::Interior)?;
            let u = p.drafts[current].iso + step;
            if u >= u_right - 1e-9 * a {
                break;
            }
            current = p.add(u, Stage::Fill, Some(current), step)?;
        }
    }
    Ok(p.finish(Pattern::DirectionParallel))
}

/// Rings of constant `rho` over a disk parameterization.
///
/// Band rings are planned inward from the rim with the projected side step.
/// The rest is filled outward from a single centre point, whose side step is
/// the smallest interior step over [`CENTER_FAN`] directions, until the next
/// ring would reach the innermost band ring. Paths come back sorted by `rho`,
/// so the centre point is first.
pub fn plan_contour_parallel(surface: &Surface, cfg: &ToolConfig) -> Result<Vec<ToolPath>> {
    cfg.validate()?;
    let Domain::Disk { r0 } = surface.domain() else {
        return Err(Error::InvalidInput("contour-parallel paths need a disk domain".into()));
    };
    let mut p = Planner::new(surface, cfg);
    let mut current = p.add(r0, Stage::Band, None, 0.0)?;
    for _ in 1..cfg.boundary_band_paths {
        let step = p.min_step(current, StepKind::Boundary)?;
        let rho = p.drafts[current].iso - step;
        if rho <= 1e-9 * r0 {
            let reach = p.drafts[current].iso;
            p.add_center(Stage::Band, Some(current), reach)?;
            return Ok(p.finish(Pattern::ContourParallel));
        }
        current = p.add(rho, Stage::Band, Some(current), step)?;
    }
    let inner = p.drafts[current].iso;
    let mut current = p.add_center(Stage::Fill, None, 0.0)?;
    loop {
        let step = p.min_step(current, StepKind::Interior)?;
        let rho = p.drafts[current].iso + step;
        if rho >= inner - 1e-9 * r0 {
            break;
        }
        current = p.add(rho, Stage::Fill, Some(current), step)?;
    }
    Ok(p.finish(Pattern::ContourParallel))
}

/// Plans with the pattern named in `cfg`.
pub fn plan(surface: &Surface, cfg: &ToolConfig) -> Result<Vec<ToolPath>> {
    match cfg.pattern {
        Pattern::DirectionParallel => plan_direction_parallel(surface, cfg),
        Pattern::ContourParallel => plan_contour_parallel(surface, cfg),
    }
}

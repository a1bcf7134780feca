use std::f64::consts::FRAC_PI_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Domain;
use crate::diffgeo::Surface;

/// Summary statistics of a sample of values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distribution {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub p90: f64,
    pub min: f64,
    pub max: f64,
}

impl Distribution {
    /// `None` for an empty sample.
    pub fn from_values(mut values: Vec<f64>) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        values.sort_by(f64::total_cmp);
        let n = values.len();
        let quantile = |p: f64| {
            let pos = p * (n - 1) as f64;
            let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
            values[lo] + (values[hi] - values[lo]) * (pos - lo as f64)
        };
        Some(Self {
            count: n,
            mean: values.iter().sum::<f64>() / n as f64,
            median: quantile(0.5),
            p90: quantile(0.9),
            min: values[0],
            max: values[n - 1],
        })
    }
}

/// Angle and metric distortion of the parameterization at sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalityReport {
    /// `|E - G| / max(E, G)`.
    pub metric: Distribution,
    /// `|F| / E`.
    pub shear: Distribution,
    /// `|theta - pi/2|` in degrees.
    pub angle_deg: Distribution,
    /// Samples where derivatives could not be evaluated.
    pub skipped: usize,
}

impl ConformalityReport {
    /// Statistics at explicit native parametric points. `None` if no point
    /// could be evaluated.
    pub fn at_points(surface: &Surface, points: &[[f64; 2]]) -> Option<Self> {
        let (mut metric, mut shear, mut angle) = (Vec::new(), Vec::new(), Vec::new());
        let mut skipped = 0;
        for &q in points {
            let Ok(s) = surface.derivatives(q) else {
                skipped += 1;
                continue;
            };
            // On a disk compare unit-parameter lengths, |r_rho| and |r_theta| / rho.
            let (e, g) = match surface.domain() {
                Domain::Rect { .. } => (s.e_uu, s.g_vv),
                Domain::Disk { .. } => (s.e_uu, s.g_vv / (q[0] * q[0])),
            };
            if !(e > 0.0 && g > 0.0 && g.is_finite()) {
                skipped += 1;
                continue;
            }
            let f = s.theta.cos() * (e * g).sqrt();
            metric.push((e - g).abs() / e.max(g));
            shear.push(f.abs() / e);
            angle.push((s.theta - FRAC_PI_2).abs().to_degrees());
        }
        Some(Self {
            metric: Distribution::from_values(metric)?,
            shear: Distribution::from_values(shear)?,
            angle_deg: Distribution::from_values(angle)?,
            skipped,
        })
    }
}

/// Distortion statistics at up to `samples` randomly chosen interior images
/// lying at least two local spacings inside the domain edge. Sampling is
/// seeded, and asking for at least as many samples as there are candidates
/// enumerates them all.
pub fn conformality_report(surface: &Surface, samples: usize, seed: u64) -> Option<ConformalityReport> {
    let param = surface.param();
    let domain = surface.domain();
    let candidates: Vec<usize> = (0..param.len())
        .filter(|&i| !param.is_fixed(i))
        .filter(|&i| {
            let c = param.cartesian(i);
            let edge = match domain {
                Domain::Rect { a, b } => c[0].min(a - c[0]).min(c[1]).min(b - c[1]),
                Domain::Disk { r0 } => r0 - c[0].hypot(c[1]),
            };
            edge >= 2.0 * surface.spacing_at(c)
        })
        .collect();
    let chosen: Vec<usize> = if samples >= candidates.len() {
        candidates
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = rand::seq::index::sample(&mut rng, candidates.len(), samples).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|k| candidates[k]).collect()
    };
    let points: Vec<[f64; 2]> = chosen.iter().map(|&i| param.native(i)).collect();
    ConformalityReport::at_points(surface, &points)
}

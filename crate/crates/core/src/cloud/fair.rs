use nalgebra::{Point3, Vector3};

use super::{PointCloud, Tag};
use crate::error::{Error, Result};
use crate::param::WeightSet;

pub const DEFAULT_FAIR_STEPS: usize = 3;
pub const DEFAULT_FAIR_DAMPING: f64 = 0.5;

impl PointCloud {
    /// Laplacian fairing: each interior point moves toward the affine
    /// combination of its neighbours, `p <- p - damping * (p - sum w_j p_j)`.
    /// Boundary points never move. Normals are dropped from the result since
    /// they no longer match the geometry.
    pub fn fair(&self, weights: &WeightSet, steps: usize, damping: f64) -> Result<PointCloud> {
        if !(damping > 0.0 && damping <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "fairing damping {damping} outside (0, 1]"
            )));
        }
        if weights.len() != self.len() {
            return Err(Error::InvalidInput(format!(
                "weight set covers {} points, cloud has {}",
                weights.len(),
                self.len()
            )));
        }
        let mut pos: Vec<Point3<f64>> = self.points.clone();
        for _ in 0..steps {
            let next: Vec<Point3<f64>> = (0..pos.len())
                .map(|i| match (self.tags[i], weights.row(i)) {
                    (Tag::Interior, Some(row)) => {
                        let avg: Vector3<f64> = row
                            .neighbors
                            .iter()
                            .zip(&row.weights)
                            .map(|(&j, &w)| pos[j].coords * w)
                            .sum();
                        pos[i] - (pos[i].coords - avg) * damping
                    }
                    _ => pos[i],
                })
                .collect();
            pos = next;
        }
        let mut out = PointCloud::new(pos)?;
        out.tags = self.tags.clone();
        Ok(out)
    }
}

//! Optimal affine neighbour weights and the discrete Laplacian built from them.
//!
//! For a point with neighbour offsets `d_j = p_i - p_j` the weights minimise
//! `|sum_j w_j d_j|^2` subject to `sum_j w_j = 1`. The Gram matrix
//! `C_jk = d_j . d_k` has rank at most the ambient dimension, so it is
//! Tikhonov-regularised before solving `C w = 1`; the result is then rescaled to
//! sum to one and projected onto the exact-reproduction constraint when that
//! constraint is satisfiable.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::cloud::{PointCloud, Tag};
use crate::error::{Error, Result};

/// Regularisation strength relative to the mean squared offset.
pub const TIKHONOV_MU: f64 = 1e-8;

/// How neighbour offsets are measured when fitting weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightScheme {
    /// Offsets in 3D.
    Ambient,
    /// Offsets projected onto the tangent plane of the centre point.
    #[default]
    Tangent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightRow {
    pub neighbors: Vec<usize>,
    pub weights: Vec<f64>,
    /// Squared reproduction error `|p_i - sum_j w_j p_j|^2` in 3D.
    pub residual: f64,
}

/// Laplacian rows, one per interior point. Boundary points carry no row.
#[derive(Debug, Clone, Default)]
pub struct WeightSet {
    rows: Vec<Option<WeightRow>>,
}

impl WeightSet {
    pub fn from_rows(rows: Vec<Option<WeightRow>>) -> Self {
        Self { rows }
    }

    /// Number of points covered (including boundary points without rows).
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, i: usize) -> Option<&WeightRow> {
        self.rows.get(i).and_then(Option::as_ref)
    }

    pub fn rows(&self) -> impl Iterator<Item = (usize, &WeightRow)> {
        self.rows
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.as_ref().map(|r| (i, r)))
    }

    /// `(Lf)(i) = f(p_i) - sum_j w_ij f(p_j)` at every point with a row.
    pub fn apply(&self, f: &[f64]) -> Vec<Option<f64>> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.as_ref()
                    .map(|r| f[i] - r.neighbors.iter().zip(&r.weights).map(|(&j, &w)| w * f[j]).sum::<f64>())
            })
            .collect()
    }
}

/// Affine weights for a set of offsets `d_j = center - neighbour_j`, each a
/// slice of the same dimension. Returns `None` when the neighbourhood is
/// degenerate beyond what the regularisation can absorb.
pub fn affine_weights(offsets: &[&[f64]]) -> Option<Vec<f64>> {
    affine_weights_penalized(offsets, 0.0)
}

/// As [`affine_weights`], but the Tikhonov term on `w_j` is scaled by
/// `|d_j|^power` (normalised to mean one). Among exactly reproducing weights
/// this favours the closest neighbours, so the result varies continuously
/// with the query and tends to the coincident neighbour's indicator as the
/// query approaches it. `power = 0` is the plain form.
pub fn affine_weights_penalized(offsets: &[&[f64]], power: f64) -> Option<Vec<f64>> {
    let m = offsets.len();
    if m == 0 {
        return None;
    }
    let dim = offsets[0].len();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut gram = DMatrix::from_fn(m, m, |j, k| dot(offsets[j], offsets[k]));
    let trace = gram.trace();
    if !(trace > 0.0) || !trace.is_finite() {
        return None;
    }
    let delta = TIKHONOV_MU * trace / m as f64;
    if power == 0.0 {
        for j in 0..m {
            gram[(j, j)] += delta;
        }
    } else {
        let scale: Vec<f64> = (0..m).map(|j| gram[(j, j)].sqrt().powf(power)).collect();
        let mean = scale.iter().sum::<f64>() / m as f64;
        for (j, s) in scale.iter().enumerate() {
            gram[(j, j)] += delta * s / mean;
        }
    }
    let ones = DVector::from_element(m, 1.0);
    let raw = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&ones),
        None => gram.lu().solve(&ones)?,
    };
    let sum = raw.sum();
    if !sum.is_finite() || sum.abs() < f64::MIN_POSITIVE {
        return None;
    }
    let mut w = raw / sum;

    // Project onto {sum w = 1, sum w d_j = 0} along the least-norm direction.
    let constraint = DMatrix::from_fn(dim + 1, m, |r, j| if r < dim { offsets[j][r] } else { 1.0 });
    let mut resid = &constraint * &w;
    resid[dim] -= 1.0;
    let normal = &constraint * constraint.transpose();
    let scale = normal.diagonal().max();
    if let Ok(pinv) = normal.pseudo_inverse(1e-12 * scale) {
        let corrected = &w - constraint.transpose() * (pinv * resid);
        if corrected.iter().all(|v| v.is_finite()) {
            w = corrected;
        }
    }
    let sum = w.sum();
    Some(w.iter().map(|v| v / sum).collect())
}

/// Optimal weights of point `i` against its `k` nearest neighbours, using 3D
/// offsets.
pub fn optimal_weights(cloud: &PointCloud, i: usize, k: usize) -> Result<WeightRow> {
    weights_for(cloud, i, k, WeightScheme::Ambient)
}

/// Optimal weights of point `i` fitted in its tangent plane. Requires normals.
pub fn tangent_weights(cloud: &PointCloud, i: usize, k: usize) -> Result<WeightRow> {
    weights_for(cloud, i, k, WeightScheme::Tangent)
}

pub fn weights_for(cloud: &PointCloud, i: usize, k: usize, scheme: WeightScheme) -> Result<WeightRow> {
    if k < 3 {
        return Err(Error::InvalidArgument(format!("weight fitting needs k >= 3, got {k}")));
    }
    let nb = cloud.neighbors(i, k)?;
    let center = cloud.point(i);
    let diffs: Vec<_> = nb.members.iter().map(|&j| center - cloud.point(j)).collect();
    let offsets: Vec<Vec<f64>> = match scheme {
        WeightScheme::Ambient => diffs.iter().map(|d| vec![d.x, d.y, d.z]).collect(),
        WeightScheme::Tangent => {
            let n = cloud
                .normal(i)
                .ok_or_else(|| Error::InvalidInput("tangent-plane weights need normals; compute them first".into()))?;
            let (e1, e2) = crate::cloud::tangent_basis(&n);
            diffs.iter().map(|d| vec![d.dot(&e1), d.dot(&e2)]).collect()
        }
    };
    let refs: Vec<&[f64]> = offsets.iter().map(Vec::as_slice).collect();
    let weights = affine_weights(&refs)
        .ok_or_else(|| Error::DegenerateGeometry(format!("neighbour Gram matrix of point {i} is singular")))?;
    let recon: nalgebra::Vector3<f64> = nb
        .members
        .iter()
        .zip(&weights)
        .map(|(&j, &w)| cloud.point(j).coords * w)
        .sum();
    let residual = (center.coords - recon).norm_squared();
    Ok(WeightRow {
        neighbors: nb.members,
        weights,
        residual,
    })
}

/// Weight rows for every interior point of a classified cloud.
pub fn build_laplacian(cloud: &PointCloud, k: usize, scheme: WeightScheme) -> Result<WeightSet> {
    let rows = (0..cloud.len())
        .into_par_iter()
        .map(|i| match cloud.tag(i) {
            Tag::Boundary => Ok(None),
            Tag::Interior => weights_for(cloud, i, k, scheme).map(Some),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WeightSet { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Point3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn square_centroid_gets_equal_weights() {
        let offs = [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]];
        let refs: Vec<&[f64]> = offs.iter().map(|o| o.as_slice()).collect();
        let w = affine_weights(&refs).unwrap();
        for v in w {
            assert!((v - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn planar_neighbourhood_is_reproduced() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let pts: Vec<[f64; 3]> = (0..12)
                .map(|_| {
                    let (x, y): (f64, f64) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
                    [x, y, 0.3 * x - 0.2 * y]
                })
                .collect();
            let center = [0.1, -0.2, 0.3 * 0.1 + 0.2 * 0.2];
            let offs: Vec<Vec<f64>> = pts.iter().map(|p| (0..3).map(|a| center[a] - p[a]).collect()).collect();
            let refs: Vec<&[f64]> = offs.iter().map(Vec::as_slice).collect();
            let w = affine_weights(&refs).unwrap();
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for a in 0..3 {
                let r: f64 = pts.iter().zip(&w).map(|(p, w)| w * p[a]).sum();
                assert!((r - center[a]).abs() < 1e-12, "axis {a}: {r} vs {}", center[a]);
            }
        }
    }

    #[test]
    fn beats_uniform_weights_on_random_neighbourhoods() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<Point3<f64>> = (0..200)
            .map(|_| Point3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        let cloud = PointCloud::new(pts).unwrap();
        for i in 0..cloud.len() {
            let row = optimal_weights(&cloud, i, 12).unwrap();
            let centroid: nalgebra::Vector3<f64> = row
                .neighbors
                .iter()
                .map(|&j| cloud.point(j).coords)
                .sum::<nalgebra::Vector3<f64>>()
                / 12.0;
            let uniform = (cloud.point(i).coords - centroid).norm();
            assert!(row.residual.sqrt() <= uniform + 1e-12);
        }
    }

    #[test]
    fn coincident_neighbourhood_is_degenerate() {
        let offs = [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]];
        let refs: Vec<&[f64]> = offs.iter().map(|o| o.as_slice()).collect();
        assert!(affine_weights(&refs).is_none());
    }
}

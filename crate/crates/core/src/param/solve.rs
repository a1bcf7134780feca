use std::collections::VecDeque;

use super::sparse::{self, CsrMatrix, SolverConfig};
use super::{BoundaryMap, Parameterization, WeightSet};
use crate::error::{Error, Result};

/// Solves `q_i - sum_{j interior} w_ij q_j = sum_{j boundary} w_ij q_j` for the
/// interior images, once per Cartesian coordinate. Points with a weight row
/// are unknowns; points with a boundary assignment are fixed. Every point must
/// be exactly one of the two.
pub fn solve_parameterization(
    weights: &WeightSet,
    boundary: &BoundaryMap,
    cfg: &SolverConfig,
) -> Result<Parameterization> {
    let n = weights.len();
    let domain = boundary.domain;
    let mut fixed: Vec<Option<[f64; 2]>> = vec![None; n];
    for &(i, q) in &boundary.assignments {
        if i >= n {
            return Err(Error::InvalidInput(format!(
                "boundary assignment for point {i} out of range"
            )));
        }
        if weights.row(i).is_some() {
            return Err(Error::InvalidInput(format!(
                "point {i} has both a weight row and a boundary image"
            )));
        }
        fixed[i] = Some(domain.to_cartesian(q));
    }

    let mut row_of = vec![usize::MAX; n];
    let mut unknowns = Vec::new();
    for i in 0..n {
        match (weights.row(i), fixed[i]) {
            (Some(_), _) => {
                row_of[i] = unknowns.len();
                unknowns.push(i);
            }
            (None, Some(_)) => {}
            (None, None) => {
                return Err(Error::InvalidInput(format!(
                    "point {i} has neither a weight row nor a boundary image"
                )))
            }
        }
    }

    let r = unknowns.len();
    let mut triplets = Vec::new();
    let mut rhs = [vec![0.0; r], vec![0.0; r]];
    let mut anchored = vec![false; r];
    let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); r];
    for (row, &i) in unknowns.iter().enumerate() {
        let wr = weights.row(i).unwrap();
        triplets.push((row, row, 1.0));
        for (&j, &w) in wr.neighbors.iter().zip(&wr.weights) {
            if row_of[j] != usize::MAX {
                triplets.push((row, row_of[j], -w));
                if w != 0.0 {
                    dependents[row_of[j]].push(row);
                }
            } else {
                let q = fixed[j].expect("every point is classified above");
                rhs[0][row] += w * q[0];
                rhs[1][row] += w * q[1];
                anchored[row] |= w != 0.0;
            }
        }
    }

    // An interior point whose weight graph never reaches the boundary makes
    // the system singular.
    let mut reached = anchored.clone();
    let mut queue: VecDeque<usize> = (0..r).filter(|&k| anchored[k]).collect();
    while let Some(k) = queue.pop_front() {
        for &d in &dependents[k] {
            if !reached[d] {
                reached[d] = true;
                queue.push_back(d);
            }
        }
    }
    if let Some(k) = reached.iter().position(|&x| !x) {
        return Err(Error::SolverFailure {
            reason: format!(
                "interior point {} has no path to the boundary in the weight graph; the system is singular",
                unknowns[k]
            ),
            residual: f64::NAN,
            iterations: 0,
        });
    }

    let a = CsrMatrix::from_triplets(r, triplets);
    let [ru, rv] = rhs;
    let (solution, stats) = sparse::solve(&a, &[ru, rv], cfg)?;

    let mut cartesian: Vec<[f64; 2]> = fixed.iter().map(|q| q.unwrap_or([0.0, 0.0])).collect();
    let tol = 1e-12 * domain.size();
    let mut clamped = 0;
    for (row, &i) in unknowns.iter().enumerate() {
        let c = [solution[0][row], solution[1][row]];
        if !domain.contains_cartesian(c, tol) {
            clamped += 1;
        }
        cartesian[i] = domain.clamp_cartesian(c);
    }
    let native = cartesian.iter().map(|&c| domain.from_cartesian(c)).collect();
    // Keep the exact boundary images rather than a Cartesian round trip.
    let mut param = Parameterization::from_native(domain, native, fixed.iter().map(Option::is_some).collect());
    for &(i, q) in &boundary.assignments {
        param.native[i] = q;
    }
    param.cartesian = cartesian;
    param.stats = stats;
    param.clamped = clamped;
    Ok(param)
}

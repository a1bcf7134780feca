//! Ordering boundary points into a closed loop and fixing their images on the
//! circle or on the rectangle perimeter.

use std::collections::{HashSet, VecDeque};
use std::f64::consts::TAU;

use nalgebra::{Matrix3, Point3, SymmetricEigen, Vector3};

use super::sparse::{self, CsrMatrix, SolverConfig, SolverKind};
use super::{BoundaryMap, Domain};
use crate::cloud::{plane_normal, tangent_basis, PointCloud, Tag};
use crate::error::{Error, Result};
use crate::kdtree::KdTree;

/// Neighbours per boundary point in the boundary graph.
pub const BOUNDARY_NEIGHBORS: usize = 4;

/// Boundary points in cyclic order, split into parts at the break points.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryLoop {
    order: Vec<usize>,
    break_positions: Vec<usize>,
    /// `cumulative[k]` is the chord length from `order[0]` to `order[k]`;
    /// the extra last entry closes the loop and equals the total length.
    cumulative: Vec<f64>,
    stray: Vec<usize>,
}

impl BoundaryLoop {
    /// Builds a loop from an explicit cyclic order. `break_positions` index
    /// into `order`, must start at 0 and be strictly increasing.
    pub fn from_order(cloud: &PointCloud, order: Vec<usize>, break_positions: Vec<usize>) -> Result<Self> {
        if order.is_empty() {
            return Err(Error::InvalidInput("boundary loop is empty".into()));
        }
        if let Some(&i) = order.iter().find(|&&i| i >= cloud.len()) {
            return Err(Error::InvalidInput(format!("boundary index {i} out of range")));
        }
        if break_positions.first() != Some(&0)
            || break_positions.windows(2).any(|w| w[0] >= w[1])
            || break_positions.last().is_some_and(|&p| p >= order.len())
        {
            return Err(Error::InvalidInput(format!(
                "break positions {break_positions:?} must start at 0 and increase within the loop"
            )));
        }
        let n = order.len();
        let mut cumulative = Vec::with_capacity(n + 1);
        cumulative.push(0.0);
        for k in 1..=n {
            let chord = (cloud.point(order[k % n]) - cloud.point(order[k - 1])).norm();
            if n > 1 && chord == 0.0 {
                return Err(Error::InvalidInput(format!(
                    "boundary points {} and {} coincide",
                    order[k - 1],
                    order[k % n]
                )));
            }
            cumulative.push(cumulative[k - 1] + chord);
        }
        Ok(Self {
            order,
            break_positions,
            cumulative,
            stray: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Cloud indices in loop order, starting at the first break point.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn break_positions(&self) -> &[usize] {
        &self.break_positions
    }

    pub fn breaks(&self) -> Vec<usize> {
        self.break_positions.iter().map(|&p| self.order[p]).collect()
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn total_length(&self) -> f64 {
        self.cumulative[self.order.len()]
    }

    pub fn part_count(&self) -> usize {
        self.break_positions.len()
    }

    /// Chord length of each part, the last one closing the loop.
    pub fn part_lengths(&self) -> Vec<f64> {
        let n = self.order.len();
        (0..self.part_count())
            .map(|k| {
                let end = self.break_positions.get(k + 1).copied().unwrap_or(n);
                self.cumulative[end] - self.cumulative[self.break_positions[k]]
            })
            .collect()
    }

    /// Boundary-tagged points not connected to the loop.
    pub fn stray(&self) -> &[usize] {
        &self.stray
    }
}

/// Boundary points with a symmetric k-nearest-neighbour adjacency.
struct BoundaryGraph {
    ids: Vec<usize>,
    pts: Vec<Point3<f64>>,
    adj: Vec<Vec<usize>>,
}

impl BoundaryGraph {
    fn new(cloud: &PointCloud, ids: Vec<usize>) -> Result<Self> {
        let pts: Vec<Point3<f64>> = ids.iter().map(|&i| *cloud.point(i)).collect();
        let tree = KdTree::new(pts.iter().map(|p| [p.x, p.y, p.z]).collect());
        let k = BOUNDARY_NEIGHBORS.min(ids.len().saturating_sub(1));
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); ids.len()];
        for a in 0..ids.len() {
            for (b, d) in tree.nearest(&[pts[a].x, pts[a].y, pts[a].z], k, Some(a)) {
                if d == 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "boundary points {} and {} coincide",
                        ids[a], ids[b]
                    )));
                }
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { ids, pts, adj })
    }

    fn weight(&self, a: usize, b: usize) -> f64 {
        1.0 / (self.pts[a] - self.pts[b]).norm()
    }

    fn component(&self, start: usize) -> Vec<bool> {
        let mut seen = vec![false; self.ids.len()];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(a) = queue.pop_front() {
            for &b in &self.adj[a] {
                if !seen[b] {
                    seen[b] = true;
                    queue.push_back(b);
                }
            }
        }
        seen
    }

    /// Solves the graph Laplace equation with inverse-distance weights on the
    /// `unknown` nodes. `fixed(from, to)` gives the value of a fixed node as
    /// seen from `from`, or `None` when `to` is outside the subproblem; `keep`
    /// filters edges.
    fn harmonic(
        &self,
        unknown: &[usize],
        fixed: impl Fn(usize, usize) -> Option<f64>,
        keep: impl Fn(usize, usize) -> bool,
    ) -> Result<Vec<f64>> {
        let mut row_of = vec![usize::MAX; self.ids.len()];
        for (r, &a) in unknown.iter().enumerate() {
            row_of[a] = r;
        }
        let mut triplets = Vec::new();
        let mut rhs = vec![0.0; unknown.len()];
        let mut anchored = vec![false; unknown.len()];
        for (r, &a) in unknown.iter().enumerate() {
            let mut entries = Vec::new();
            let mut total = 0.0;
            for &b in &self.adj[a] {
                if !keep(a, b) {
                    continue;
                }
                let w = self.weight(a, b);
                if row_of[b] != usize::MAX {
                    entries.push((row_of[b], w));
                    total += w;
                } else if let Some(v) = fixed(a, b) {
                    rhs[r] += w * v;
                    anchored[r] = true;
                    total += w;
                }
            }
            if total > 0.0 {
                rhs[r] /= total;
            }
            triplets.push((r, r, 1.0));
            triplets.extend(entries.into_iter().map(|(c, w)| (r, c, -w / total)));
        }
        let mat = CsrMatrix::from_triplets(unknown.len(), triplets);

        // Every unknown must reach a fixed node through kept edges.
        let mut reached = anchored.clone();
        let mut queue: VecDeque<usize> = (0..unknown.len()).filter(|&r| anchored[r]).collect();
        while let Some(r) = queue.pop_front() {
            for (c, _) in mat.row(r) {
                if !reached[c] {
                    reached[c] = true;
                    queue.push_back(c);
                }
            }
        }
        if let Some(r) = reached.iter().position(|&x| !x) {
            return Err(Error::Topology(format!(
                "boundary point {} is not connected to the break points along the boundary",
                self.ids[unknown[r]]
            )));
        }
        let cfg = SolverConfig {
            kind: SolverKind::DirectLu,
            ..SolverConfig::default()
        };
        let (mut x, _) = sparse::solve(&mat, &[rhs], &cfg)?;
        Ok(x.remove(0))
    }
}

/// Orders the boundary into a loop through `breaks`, which are cloud indices
/// given in traversal order. With two breaks the loop runs counterclockwise
/// about the mean surface normal; with more, the break order fixes the
/// direction.
pub fn order_boundary(cloud: &PointCloud, breaks: &[usize]) -> Result<BoundaryLoop> {
    if breaks.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "at least 2 break points are required, got {}",
            breaks.len()
        )));
    }
    for &b in breaks {
        if b >= cloud.len() {
            return Err(Error::InvalidInput(format!("break point {b} out of range")));
        }
        if cloud.tag(b) != Tag::Boundary {
            return Err(Error::InvalidInput(format!("break point {b} is not a boundary point")));
        }
    }
    if breaks.iter().collect::<HashSet<_>>().len() != breaks.len() {
        return Err(Error::InvalidInput("break points repeat".into()));
    }

    let graph = BoundaryGraph::new(cloud, cloud.boundary_indices())?;
    let local = |b: usize| graph.ids.binary_search(&b).expect("break is a boundary point");
    let start = local(breaks[0]);
    let in_loop = graph.component(start);
    if let Some(&b) = breaks.iter().find(|&&b| !in_loop[local(b)]) {
        return Err(Error::Topology(format!(
            "break point {b} is not connected to break point {} along the boundary",
            breaks[0]
        )));
    }
    let stray: Vec<usize> = (0..graph.ids.len())
        .filter(|&a| !in_loop[a])
        .map(|a| graph.ids[a])
        .collect();
    let members: Vec<usize> = (0..graph.ids.len()).filter(|&a| in_loop[a]).collect();

    let normal = mean_normal(cloud, &members.iter().map(|&a| graph.ids[a]).collect::<Vec<_>>());
    let mut order = cyclic_order(&graph, start, &members, &normal)?;

    let positions = |order: &[usize]| -> Vec<usize> {
        breaks
            .iter()
            .map(|&b| order.iter().position(|&a| a == local(b)).unwrap())
            .collect()
    };
    let increasing = |p: &[usize]| p.windows(2).all(|w| w[0] < w[1]);
    let mut pos = positions(&order);
    let flip = if breaks.len() == 2 {
        signed_area(&graph, &order, &normal) < 0.0
    } else {
        !increasing(&pos)
    };
    if flip {
        order[1..].reverse();
        pos = positions(&order);
    }
    if !increasing(&pos) {
        return Err(Error::InvalidInput(format!(
            "break points {breaks:?} are not in traversal order around the boundary"
        )));
    }

    // Within each part, order by the harmonic parameter with the two
    // bounding breaks fixed at 0 and 1.
    let n = order.len();
    let mut final_order = Vec::with_capacity(n);
    for k in 0..pos.len() {
        let (from, to) = (order[pos[k]], order[pos.get(k + 1).map_or(0, |&p| p)]);
        let end = pos.get(k + 1).copied().unwrap_or(n);
        let nodes: Vec<usize> = order[pos[k] + 1..end].to_vec();
        final_order.push(from);
        if nodes.is_empty() {
            continue;
        }
        let values = graph
            .harmonic(
                &nodes,
                |_, b| {
                    if b == from {
                        Some(0.0)
                    } else if b == to {
                        Some(1.0)
                    } else {
                        None
                    }
                },
                |_, _| true,
            )
            .map_err(|e| match e {
                Error::Topology(m) => Error::Topology(format!("part {}: {m}", k + 1)),
                e => e,
            })?;
        let mut ranked: Vec<(f64, usize)> = values.into_iter().zip(nodes).collect();
        ranked.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        final_order.extend(ranked.into_iter().map(|(_, a)| a));
    }
    let ids: Vec<usize> = final_order.iter().map(|&a| graph.ids[a]).collect();
    let break_positions = breaks
        .iter()
        .map(|b| ids.iter().position(|i| i == b).unwrap())
        .collect();
    let mut lp = BoundaryLoop::from_order(cloud, ids, break_positions)?;
    lp.stray = stray;
    Ok(lp)
}

/// Cyclic order of the loop starting at `start`, obtained by cutting the loop
/// at `start` and solving a graph Laplace problem from one side of the cut
/// (value 0) to the other (value 1).
fn cyclic_order(graph: &BoundaryGraph, start: usize, members: &[usize], normal: &Vector3<f64>) -> Result<Vec<usize>> {
    let others: Vec<usize> = members.iter().copied().filter(|&a| a != start).collect();
    if others.len() <= 1 {
        return Ok(std::iter::once(start).chain(others).collect());
    }
    let origin = graph.pts[start];
    let tangent = local_tangent(graph, start, normal);
    let side = |a: usize| (graph.pts[a] - origin).dot(&tangent) >= 0.0;
    // An edge crosses the cut when its ends lie on opposite sides and it
    // passes close to the cut point relative to its own length.
    let crosses = |a: usize, b: usize| {
        if side(a) == side(b) {
            return false;
        }
        let (p, q) = (graph.pts[a], graph.pts[b]);
        let d = q - p;
        let t = ((origin - p).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
        (p + d * t - origin).norm() < d.norm()
    };
    let start_sides: Vec<bool> = graph.adj[start].iter().map(|&b| side(b)).collect();
    if start_sides.iter().all(|&s| s) || start_sides.iter().all(|&s| !s) {
        return Err(Error::Topology(format!(
            "boundary does not pass through break point {}",
            graph.ids[start]
        )));
    }
    let values = graph.harmonic(
        &others,
        |a, b| (b == start).then(|| if side(a) { 0.0 } else { 1.0 }),
        |a, b| a == start || b == start || !crosses(a, b),
    )?;
    let mut ranked: Vec<(f64, usize)> = values.into_iter().zip(others).collect();
    ranked.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    Ok(std::iter::once(start)
        .chain(ranked.into_iter().map(|(_, a)| a))
        .collect())
}

/// Principal direction of the graph neighbourhood of `a`, in the plane
/// perpendicular to `normal`.
fn local_tangent(graph: &BoundaryGraph, a: usize, normal: &Vector3<f64>) -> Vector3<f64> {
    let (e1, e2) = tangent_basis(normal);
    let nbhd: Vec<Vector3<f64>> = std::iter::once(a)
        .chain(graph.adj[a].iter().copied())
        .map(|b| {
            let d = graph.pts[b] - graph.pts[a];
            e1 * d.dot(&e1) + e2 * d.dot(&e2)
        })
        .collect();
    let c = nbhd.iter().sum::<Vector3<f64>>() / nbhd.len() as f64;
    let mut cov = Matrix3::zeros();
    for d in &nbhd {
        cov += (d - c) * (d - c).transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let imax = eig.eigenvalues.imax();
    eig.eigenvectors.column(imax).into_owned()
}

fn mean_normal(cloud: &PointCloud, ids: &[usize]) -> Vector3<f64> {
    if let Some(normals) = cloud.normals() {
        let sum: Vector3<f64> = normals.iter().sum();
        if sum.norm() > 0.0 {
            return sum.normalize();
        }
    }
    let pts: Vec<Vector3<f64>> = ids.iter().map(|&i| cloud.point(i).coords).collect();
    plane_normal(&pts).unwrap_or_else(Vector3::z)
}

fn signed_area(graph: &BoundaryGraph, order: &[usize], normal: &Vector3<f64>) -> f64 {
    let c = order.iter().map(|&a| graph.pts[a].coords).sum::<Vector3<f64>>() / order.len() as f64;
    (0..order.len())
        .map(|k| {
            let p = graph.pts[order[k]].coords - c;
            let q = graph.pts[order[(k + 1) % order.len()]].coords - c;
            p.cross(&q).dot(normal)
        })
        .sum()
}

/// Boundary images on the circle of circumference equal to the loop length,
/// at angles proportional to cumulative chord length.
pub fn map_boundary_disk(lp: &BoundaryLoop) -> Result<BoundaryMap> {
    let total = lp.total_length();
    if !(total > 0.0) {
        return Err(Error::InvalidInput("boundary loop has zero length".into()));
    }
    let r0 = total / TAU;
    let assignments = lp
        .order()
        .iter()
        .zip(lp.cumulative())
        .map(|(&i, &c)| (i, [r0, super::wrap_angle(TAU * c / total)]))
        .collect();
    Ok(BoundaryMap {
        domain: Domain::Disk { r0 },
        assignments,
    })
}

/// Boundary images on the perimeter of `[0, a] x [0, b]`, with the four parts
/// running counterclockwise from the lower-left corner: bottom, right, top,
/// left. `a` and `b` average the lengths of opposite parts.
pub fn map_boundary_rect(lp: &BoundaryLoop) -> Result<BoundaryMap> {
    if lp.part_count() != 4 {
        return Err(Error::InvalidInput(format!(
            "rectangle mapping needs 4 break points, got {}",
            lp.part_count()
        )));
    }
    let lengths = lp.part_lengths();
    if let Some(k) = lengths.iter().position(|&l| !(l > 0.0)) {
        return Err(Error::InvalidInput(format!("boundary part {} has zero length", k + 1)));
    }
    let a = 0.5 * (lengths[0] + lengths[2]);
    let b = 0.5 * (lengths[1] + lengths[3]);
    let pos = lp.break_positions();
    let n = lp.len();
    let cum = lp.cumulative();
    let mut assignments = Vec::with_capacity(n);
    for part in 0..4 {
        let end = pos.get(part + 1).copied().unwrap_or(n);
        for k in pos[part]..end {
            let lambda = (cum[k] - cum[pos[part]]) / lengths[part];
            let q = match part {
                0 => [a * lambda, 0.0],
                1 => [a, b * lambda],
                2 => [a - a * lambda, b],
                _ => [0.0, b - b * lambda],
            };
            assignments.push((lp.order()[k], q));
        }
    }
    Ok(BoundaryMap {
        domain: Domain::Rect { a, b },
        assignments,
    })
}

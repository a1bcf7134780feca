//! Point-cloud container with a spatial index, normals and boundary tags.

mod boundary;
mod fair;
pub mod io;
mod normals;

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};
use crate::kdtree::KdTree;

pub(crate) use boundary::tangent_basis;
pub use boundary::DEFAULT_GAP_THRESHOLD;
pub use fair::{DEFAULT_FAIR_DAMPING, DEFAULT_FAIR_STEPS};
pub(crate) use normals::plane_normal;

/// Default neighbourhood size.
pub const DEFAULT_K: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tag {
    Interior,
    Boundary,
}

/// The `k` nearest points to some query, ascending by distance.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhood {
    /// Cloud index the query was made from, when it was a cloud point.
    pub center: Option<usize>,
    pub members: Vec<usize>,
    pub distances: Vec<f64>,
}

impl Neighborhood {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct PointCloud {
    points: Vec<Point3<f64>>,
    normals: Option<Vec<Vector3<f64>>>,
    tags: Vec<Tag>,
    index: KdTree<3>,
}

impl PointCloud {
    /// Builds a cloud with every point tagged `Interior` and no normals.
    pub fn new(points: Vec<Point3<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("point cloud is empty".into()));
        }
        if let Some(i) = points.iter().position(|p| !p.coords.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidInput(format!("point {i} has a non-finite coordinate")));
        }
        let index = KdTree::new(points.iter().map(|p| [p.x, p.y, p.z]).collect());
        let tags = vec![Tag::Interior; points.len()];
        Ok(Self {
            points,
            normals: None,
            tags,
            index,
        })
    }

    pub fn with_tags(points: Vec<Point3<f64>>, tags: Vec<Tag>) -> Result<Self> {
        let mut cloud = Self::new(points)?;
        cloud.set_tags(tags)?;
        Ok(cloud)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &Point3<f64> {
        &self.points[i]
    }

    pub fn normals(&self) -> Option<&[Vector3<f64>]> {
        self.normals.as_deref()
    }

    pub fn normal(&self, i: usize) -> Option<Vector3<f64>> {
        self.normals.as_ref().map(|n| n[i])
    }

    pub fn set_normals(&mut self, normals: Vec<Vector3<f64>>) -> Result<()> {
        if normals.len() != self.points.len() {
            return Err(Error::InvalidInput(format!(
                "{} normals for {} points",
                normals.len(),
                self.points.len()
            )));
        }
        if let Some(i) = normals.iter().position(|n| (n.norm() - 1.0).abs() > 1e-9) {
            return Err(Error::InvalidInput(format!("normal {i} is not unit length")));
        }
        self.normals = Some(normals);
        Ok(())
    }

    pub fn clear_normals(&mut self) {
        self.normals = None;
    }

    pub fn tags(&self) -> &[Tag] {
        &self.tags
    }

    pub fn tag(&self, i: usize) -> Tag {
        self.tags[i]
    }

    pub fn set_tags(&mut self, tags: Vec<Tag>) -> Result<()> {
        if tags.len() != self.points.len() {
            return Err(Error::InvalidInput(format!(
                "{} tags for {} points",
                tags.len(),
                self.points.len()
            )));
        }
        self.tags = tags;
        Ok(())
    }

    pub fn set_tag(&mut self, i: usize, tag: Tag) {
        self.tags[i] = tag;
    }

    pub fn boundary_indices(&self) -> Vec<usize> {
        self.indices_tagged(Tag::Boundary)
    }

    pub fn interior_indices(&self) -> Vec<usize> {
        self.indices_tagged(Tag::Interior)
    }

    fn indices_tagged(&self, tag: Tag) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.tags[i] == tag).collect()
    }

    /// The `k` nearest cloud points to `query`. Pass `exclude = Some(i)` when
    /// querying the neighbours of cloud point `i` itself.
    pub fn knn(&self, query: &Point3<f64>, k: usize, exclude: Option<usize>) -> Result<Neighborhood> {
        let available = self.len() - usize::from(exclude.is_some());
        if k == 0 || k > available || k >= self.len() {
            return Err(Error::InvalidArgument(format!(
                "k = {k} neighbours requested from a cloud of {} points",
                self.len()
            )));
        }
        let found = self.index.nearest(&[query.x, query.y, query.z], k, exclude);
        let (members, distances) = found.into_iter().unzip();
        Ok(Neighborhood {
            center: exclude,
            members,
            distances,
        })
    }

    /// Neighbours of cloud point `i`, excluding `i`.
    pub fn neighbors(&self, i: usize, k: usize) -> Result<Neighborhood> {
        self.knn(&self.points[i], k, Some(i))
    }

    /// Index of the closest cloud point to `query`.
    pub fn nearest(&self, query: &Point3<f64>) -> usize {
        self.index.nearest(&[query.x, query.y, query.z], 1, None)[0].0
    }

    /// Uniformly scales positions about the origin.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        let mut out = Self::new(self.points.iter().map(|p| Point3::from(p.coords * s)).collect())?;
        out.tags = self.tags.clone();
        out.normals = self.normals.clone();
        Ok(out)
    }
}

//! Dissimilarity matrices and the builders that produce them from vectors,
//! graphs and aligned DNA sequences.

pub(crate) mod geodesic;
mod graph;
mod kimura;

pub use geodesic::{geodesic_dissimilarity, geodesic_dissimilarity_with, knn_graph};
pub use graph::{graph_shortest_path_dissimilarity, graph_shortest_path_dissimilarity_with, SimpleGraph};
pub use kimura::{kimura2p_dissimilarity, kimura2p_pair, DnaSequenceSet, Nucleotide};

use crate::error::{Error, Result};
use crate::exec::Execution;

/// Relative tolerance on `|d_ij - d_ji|` accepted by [`DissimilarityMatrix::validate`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;
/// Diagonal entries with magnitude at most this are snapped to zero.
pub const DIAGONAL_TOLERANCE: f64 = 1e-12;

/// A dense `n x n` dissimilarity matrix: non-negative, exactly symmetric,
/// zero on the diagonal, all entries finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix {
    n: usize,
    values: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl DissimilarityMatrix {
    /// Checks and normalizes a raw square matrix.
    ///
    /// Pairs within [`SYMMETRY_TOLERANCE`] (relative) are replaced by their
    /// mean, and diagonal entries within [`DIAGONAL_TOLERANCE`] by zero.
    pub fn validate(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Empty("dissimilarity matrix"));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NotSquare { row: i, len: row.len(), expected: n });
            }
        }
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFiniteEntry(i, j));
                }
                if i == j {
                    if v.abs() > DIAGONAL_TOLERANCE {
                        return Err(Error::NonZeroDiagonal(i));
                    }
                } else if v < 0.0 {
                    return Err(Error::NegativeEntry(i, j));
                }
            }
        }
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (rows[i][j], rows[j][i]);
                if (a - b).abs() > SYMMETRY_TOLERANCE * a.abs().max(b.abs()) {
                    return Err(Error::AsymmetryBeyondTolerance(i, j));
                }
                let v = if a == b { a } else { (a + b) / 2.0 };
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Ok(Self { n, values, labels: None })
    }

    /// Same as [`validate`](Self::validate) on a row-major flat buffer.
    pub fn validate_flat(n: usize, values: &[f64]) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::NotSquare { row: 0, len: values.len(), expected: n * n });
        }
        let rows: Vec<Vec<f64>> = values.chunks(n.max(1)).map(|r| r.to_vec()).collect();
        Self::validate(&rows)
    }

    /// Builders call this once they guarantee every invariant by construction.
    pub(crate) fn from_trusted(n: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), n * n);
        debug_assert!((0..n).all(|i| values[i * n + i] == 0.0));
        Self { n, values, labels: None }
    }

    /// Attaches one identifier per observation.
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} observations",
                labels.len(),
                self.n
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// `n` points in `dim` dimensions, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidPointCloud("dimension must be at least 1".into()));
        }
        if coords.is_empty() {
            return Err(Error::Empty("point cloud"));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidPointCloud(format!(
                "{} coordinates is not a multiple of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(k) = coords.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidPointCloud(format!("non-finite coordinate in point {}", k / dim)));
        }
        Ok(Self { dim, coords })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).ok_or(Error::Empty("point cloud"))?;
        if let Some(i) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::InvalidPointCloud(format!(
                "point {i} has {} coordinates, expected {dim}",
                rows[i].len()
            )));
        }
        Self::new(dim, rows.concat())
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks(self.dim)
    }
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Squared Euclidean distances between all pairs of points.
pub fn squared_euclidean(points: &PointCloud) -> DissimilarityMatrix {
    squared_euclidean_with(points, Execution::default())
}

pub fn squared_euclidean_with(points: &PointCloud, exec: Execution) -> DissimilarityMatrix {
    let n = points.len();
    let mut values = vec![0.0; n * n];
    exec.for_each_chunk_mut(&mut values, n, |i, row| {
        for (j, v) in row.iter_mut().enumerate().skip(i + 1) {
            *v = squared_distance(points.point(i), points.point(j));
        }
    });
    mirror_upper(n, &mut values);
    DissimilarityMatrix::from_trusted(n, values)
}

/// Copies the strict upper triangle onto the lower one.
pub(crate) fn mirror_upper(n: usize, values: &mut [f64]) {
    for i in 0..n {
        for j in (i + 1)..n {
            values[j * n + i] = values[i * n + j];
        }
    }
}

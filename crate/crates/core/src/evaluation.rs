//! Map quality metrics and per-cell neighbor distances.

use std::collections::HashMap;

use crate::dissimilarity::DissimilarityMatrix;
use crate::exec::Execution;
use crate::som::{best_two, Assigner, Data, Prototypes, TrainedMap};
use crate::topology::MapGrid;
use crate::{Error, Result};

/// Summary statistics of a map against its data.
#[derive(Debug, Clone, PartialEq)]
pub struct MapReport {
    /// Mean distance from each observation to the prototype of its assigned unit.
    pub quantization_error: f64,
    /// Fraction of observations whose two closest units are not grid neighbors.
    pub topographic_error: f64,
    pub cluster_sizes: Vec<usize>,
    pub empty_unit_count: usize,
    pub purity: Option<Purity>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Purity {
    /// Majority-label fraction per unit, `None` for empty units.
    pub per_unit: Vec<Option<f64>>,
    /// Sum of majority counts over `n`.
    pub weighted: f64,
}

/// Evaluates a trained map. `labels`, when given, holds one label per observation.
pub fn map_report(data: Data<'_>, map: &TrainedMap, labels: Option<&[String]>) -> Result<MapReport> {
    evaluate(data, &map.grid, &map.prototypes, &map.assignment, labels)
}

/// Same as [`map_report`] on loose parts.
pub fn evaluate(
    data: Data<'_>,
    grid: &MapGrid,
    prototypes: &Prototypes,
    assignment: &[usize],
    labels: Option<&[String]>,
) -> Result<MapReport> {
    let n = data.n();
    let units = grid.units();
    if assignment.len() != n {
        return Err(Error::DimensionMismatch(format!("{} assignments for {n} observations", assignment.len())));
    }
    if prototypes.units() != units {
        return Err(Error::DimensionMismatch(format!("{} prototypes on a {units}-unit grid", prototypes.units())));
    }
    if let Some(&u) = assignment.iter().find(|&&u| u >= units) {
        return Err(Error::DimensionMismatch(format!("unit {u} out of range 0..{units}")));
    }
    if let Some(l) = labels {
        if l.len() != n {
            return Err(Error::DimensionMismatch(format!("{} labels for {n} observations", l.len())));
        }
    }

    let exec = Execution::default();
    let assigner = Assigner::new(data, prototypes, exec)?;
    let per_obs = exec.map_range(n, |i| {
        let mut buf = vec![0.0; units];
        assigner.distances(i, &mut buf);
        let (best, second) = best_two(&buf);
        let broken = second.is_some_and(|s| grid.distance(best, s) != 1);
        (buf[assignment[i]], broken)
    });
    let quantization_error = per_obs.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let topographic_error = per_obs.iter().filter(|p| p.1).count() as f64 / n as f64;

    let mut cluster_sizes = vec![0usize; units];
    for &u in assignment {
        cluster_sizes[u] += 1;
    }
    let empty_unit_count = cluster_sizes.iter().filter(|&&c| c == 0).count();
    let purity = labels.map(|l| purity(l, assignment, units));

    Ok(MapReport { quantization_error, topographic_error, cluster_sizes, empty_unit_count, purity })
}

fn purity(labels: &[String], assignment: &[usize], units: usize) -> Purity {
    let mut counts: Vec<HashMap<&str, usize>> = vec![HashMap::new(); units];
    for (l, &u) in labels.iter().zip(assignment) {
        *counts[u].entry(l.as_str()).or_default() += 1;
    }
    let mut majority_total = 0;
    let per_unit = counts
        .iter()
        .map(|c| {
            let size: usize = c.values().sum();
            let top = c.values().copied().max()?;
            majority_total += top;
            Some(top as f64 / size as f64)
        })
        .collect();
    Purity { per_unit, weighted: majority_total as f64 / labels.len() as f64 }
}

/// Mean dissimilarity between the members of a unit and those of a neighbor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NeighborDistance {
    OffGrid,
    /// One of the two cells is empty.
    Undefined,
    Value(f64),
}

impl NeighborDistance {
    pub fn value(self) -> Option<f64> {
        match self {
            NeighborDistance::Value(v) => Some(v),
            _ => None,
        }
    }
}

/// Neighbor distances for every unit, in the direction order of
/// [`MapGrid::neighbors`] (up, right, down, left).
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborDistanceMap {
    pub grid: MapGrid,
    pub cells: Vec<[NeighborDistance; 4]>,
}

impl NeighborDistanceMap {
    /// Largest defined distance, or `None` if none is defined.
    pub fn max_value(&self) -> Option<f64> {
        self.cells
            .iter()
            .flatten()
            .filter_map(|d| d.value())
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
    }

    /// Distance between two grid-adjacent units.
    pub fn between(&self, u: usize, v: usize) -> Option<NeighborDistance> {
        let dir = self.grid.neighbors(u).iter().position(|&w| w == Some(v))?;
        Some(self.cells[u][dir])
    }
}

pub fn neighbor_cell_distances(d: &DissimilarityMatrix, grid: &MapGrid, assignment: &[usize]) -> Result<NeighborDistanceMap> {
    if assignment.len() != d.n() {
        return Err(Error::DimensionMismatch(format!("{} assignments for {} observations", assignment.len(), d.n())));
    }
    let units = grid.units();
    let mut members = vec![Vec::new(); units];
    for (i, &u) in assignment.iter().enumerate() {
        if u >= units {
            return Err(Error::DimensionMismatch(format!("unit {u} out of range 0..{units}")));
        }
        members[u].push(i);
    }

    let pairs = grid.adjacent_pairs();
    let values = Execution::default().map_range(pairs.len(), |p| {
        let (u, v) = pairs[p];
        let (a, b) = (&members[u], &members[v]);
        if a.is_empty() || b.is_empty() {
            return NeighborDistance::Undefined;
        }
        let mut sum = 0.0;
        for &i in a {
            let row = d.row(i);
            for &j in b {
                sum += row[j];
            }
        }
        NeighborDistance::Value(sum / (a.len() * b.len()) as f64)
    });

    let mut cells = vec![[NeighborDistance::OffGrid; 4]; units];
    for (&(u, v), &value) in pairs.iter().zip(&values) {
        for (from, to) in [(u, v), (v, u)] {
            let dir = grid.neighbors(from).iter().position(|&w| w == Some(to)).expect("adjacent pair");
            cells[from][dir] = value;
        }
    }
    Ok(NeighborDistanceMap { grid: *grid, cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dissimilarity::{squared_euclidean, PointCloud};
    use crate::som::PrototypeCoefficients;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(n: usize) -> PointCloud {
        PointCloud::new(1, (0..n).map(|v| v as f64).collect()).unwrap()
    }

    #[test]
    fn one_hot_self_match_has_zero_error() {
        let d = squared_euclidean(&line(4));
        let grid = MapGrid::new(2, 2).unwrap();
        let protos = Prototypes::Coefficients(PrototypeCoefficients::one_hot(4, &[0, 1, 2, 3]).unwrap());
        let r = evaluate((&d).into(), &grid, &protos, &[0, 1, 2, 3], None).unwrap();
        assert_eq!(r.quantization_error, 0.0);
        assert_eq!(r.cluster_sizes, vec![1; 4]);
        assert_eq!(r.empty_unit_count, 0);
        assert!(r.purity.is_none());
    }

    #[test]
    fn ordered_chain_has_zero_topographic_error() {
        // 10 points on a line, 5 units in a row, unit u averages points 2u and 2u+1.
        let d = squared_euclidean(&line(10));
        let grid = MapGrid::new(1, 5).unwrap();
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|u| (0..10).map(|i| if i / 2 == u { 0.5 } else { 0.0 }).collect())
            .collect();
        let protos = Prototypes::Coefficients(PrototypeCoefficients::from_rows(&rows).unwrap());
        let assignment: Vec<usize> = (0..10).map(|i| i / 2).collect();
        let r = evaluate((&d).into(), &grid, &protos, &assignment, None).unwrap();
        assert_eq!(r.topographic_error, 0.0);
        assert!((r.quantization_error - 0.25).abs() < 1e-12);

        // Swapping two prototypes breaks the order.
        let mut swapped = rows.clone();
        swapped.swap(1, 3);
        let protos = Prototypes::Coefficients(PrototypeCoefficients::from_rows(&swapped).unwrap());
        let r = evaluate((&d).into(), &grid, &protos, &assignment, None).unwrap();
        assert!(r.topographic_error > 0.0);
    }

    #[test]
    fn single_unit_has_zero_topographic_error() {
        let d = squared_euclidean(&line(3));
        let grid = MapGrid::new(1, 1).unwrap();
        let r = evaluate((&d).into(), &grid, &Prototypes::Medoids(vec![1]), &[0, 0, 0], None).unwrap();
        assert_eq!(r.topographic_error, 0.0);
        assert!((r.quantization_error - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn purity_values() {
        let d = squared_euclidean(&line(6));
        let grid = MapGrid::new(1, 3).unwrap();
        let protos = Prototypes::Medoids(vec![0, 2, 4]);
        let assignment = [0, 0, 1, 1, 1, 1];
        let same: Vec<String> = vec!["x".into(); 6];
        let r = evaluate((&d).into(), &grid, &protos, &assignment, Some(&same)).unwrap();
        let p = r.purity.unwrap();
        assert_eq!(p.weighted, 1.0);
        assert_eq!(p.per_unit, vec![Some(1.0), Some(1.0), None]);
        assert_eq!(r.empty_unit_count, 1);

        let mixed: Vec<String> = ["a", "b", "a", "a", "a", "b"].iter().map(|s| s.to_string()).collect();
        let p = evaluate((&d).into(), &grid, &protos, &assignment, Some(&mixed)).unwrap().purity.unwrap();
        assert_eq!(p.per_unit[0], Some(0.5));
        assert_eq!(p.per_unit[1], Some(0.75));
        assert!((p.weighted - 4.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn report_is_invariant_under_relabeling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = PointCloud::new(2, (0..40).map(|_| rng.gen()).collect()).unwrap();
        let d = squared_euclidean(&pts);
        let grid = MapGrid::new(2, 2).unwrap();
        let protos = Prototypes::Medoids(vec![0, 5, 10, 15]);
        let assignment = crate::som::assign_all((&d).into(), &protos).unwrap();
        let labels: Vec<String> = (0..20).map(|i| (i % 3).to_string()).collect();
        let a = evaluate((&d).into(), &grid, &protos, &assignment, Some(&labels)).unwrap();

        // Reverse the observation order and remap the medoid indices.
        let perm: Vec<usize> = (0..20).rev().collect();
        let pts2 = PointCloud::from_rows(&perm.iter().map(|&i| pts.point(i).to_vec()).collect::<Vec<_>>()).unwrap();
        let d2 = squared_euclidean(&pts2);
        let protos2 = Prototypes::Medoids(vec![19, 14, 9, 4]);
        let assignment2: Vec<usize> = perm.iter().map(|&i| assignment[i]).collect();
        let labels2: Vec<String> = perm.iter().map(|&i| labels[i].clone()).collect();
        let b = evaluate((&d2).into(), &grid, &protos2, &assignment2, Some(&labels2)).unwrap();
        assert!((a.quantization_error - b.quantization_error).abs() < 1e-12);
        assert_eq!(a.topographic_error, b.topographic_error);
        assert_eq!(a.cluster_sizes, b.cluster_sizes);
        assert_eq!(a.purity, b.purity);
    }

    #[test]
    fn relational_error_matches_coordinates() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pts = PointCloud::new(3, (0..45).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap();
        let d = squared_euclidean(&pts);
        let grid = MapGrid::new(2, 2).unwrap();
        let coef = crate::som::init_coefficients(15, 4, crate::som::InitMode::RandomConvex, 1).unwrap();
        let vectors = Prototypes::Vectors { dim: 3, values: coef.embed(&pts).unwrap().concat() };
        let rel = Prototypes::Coefficients(coef);
        let assignment = crate::som::assign_all((&d).into(), &rel).unwrap();
        let a = evaluate((&d).into(), &grid, &rel, &assignment, None).unwrap();
        let b = evaluate((&pts).into(), &grid, &vectors, &assignment, None).unwrap();
        assert!((a.quantization_error - b.quantization_error).abs() <= 1e-9 * b.quantization_error);
        assert_eq!(a.topographic_error, b.topographic_error);
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let d = squared_euclidean(&line(3));
        let grid = MapGrid::new(1, 2).unwrap();
        let protos = Prototypes::Medoids(vec![0, 1]);
        assert!(evaluate((&d).into(), &grid, &protos, &[0, 1], None).is_err());
        assert!(evaluate((&d).into(), &grid, &protos, &[0, 1, 2], None).is_err());
        assert!(evaluate((&d).into(), &grid, &Prototypes::Medoids(vec![0]), &[0, 0, 0], None).is_err());
        assert!(neighbor_cell_distances(&d, &grid, &[0, 1]).is_err());
    }

    #[test]
    fn singleton_neighbors() {
        let d = squared_euclidean(&line(3));
        let grid = MapGrid::new(1, 3).unwrap();
        let ndm = neighbor_cell_distances(&d, &grid, &[0, 1, 2]).unwrap();
        assert_eq!(ndm.between(0, 1), Some(NeighborDistance::Value(d.get(0, 1))));
        assert_eq!(ndm.between(1, 2), Some(NeighborDistance::Value(d.get(1, 2))));
        assert_eq!(ndm.between(0, 2), None);
        assert_eq!(ndm.cells[0][0], NeighborDistance::OffGrid);
    }

    #[test]
    fn empty_neighbor_is_undefined() {
        let d = squared_euclidean(&line(2));
        let grid = MapGrid::new(1, 3).unwrap();
        let ndm = neighbor_cell_distances(&d, &grid, &[0, 0]).unwrap();
        assert_eq!(ndm.between(0, 1), Some(NeighborDistance::Undefined));
        assert_eq!(ndm.max_value(), None);
    }

    #[test]
    fn block_structure() {
        // Three blocks of two observations; within 0, across 1.
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|i| (0..6).map(|j| if i / 2 == j / 2 { 0.0 } else { 1.0 }).collect())
            .collect();
        let d = DissimilarityMatrix::validate(&rows).unwrap();
        let grid = MapGrid::new(1, 3).unwrap();
        let ndm = neighbor_cell_distances(&d, &grid, &[0, 0, 1, 1, 2, 2]).unwrap();
        assert_eq!(ndm.between(0, 1), Some(NeighborDistance::Value(1.0)));
        assert_eq!(ndm.between(1, 2), Some(NeighborDistance::Value(1.0)));
        assert_eq!(ndm.max_value(), Some(1.0));
    }

    #[test]
    fn neighbor_distances_are_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts = PointCloud::new(2, (0..120).map(|_| rng.gen()).collect()).unwrap();
        let d = squared_euclidean(&pts);
        let grid = MapGrid::new(3, 4).unwrap();
        let assignment: Vec<usize> = (0..60).map(|_| rng.gen_range(0..12)).collect();
        let ndm = neighbor_cell_distances(&d, &grid, &assignment).unwrap();
        for (u, v) in grid.adjacent_pairs() {
            assert_eq!(ndm.between(u, v), ndm.between(v, u));
        }
        for c in &ndm.cells {
            for v in c.iter().filter_map(|x| x.value()) {
                assert!(v >= 0.0);
            }
        }
    }
}

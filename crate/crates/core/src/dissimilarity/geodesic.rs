use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{mirror_upper, squared_distance, DissimilarityMatrix, PointCloud};
use crate::error::{Error, Result};
use crate::exec::Execution;

/// Weighted undirected adjacency lists, sorted by neighbor index.
pub type Adjacency = Vec<Vec<(usize, f64)>>;

/// Symmetric k-nearest-neighbor graph: `i` and `j` are linked when either one
/// is among the `k` nearest of the other. Weights are Euclidean distances.
/// Ties in the neighbor ranking go to the lower index.
pub fn knn_graph(points: &PointCloud, k: usize) -> Result<Adjacency> {
    let n = points.len();
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if k >= n {
        return Err(Error::KTooLarge { k, n });
    }
    let nearest: Vec<Vec<usize>> = Execution::default().map_range(n, |i| {
        let mut cand: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (squared_distance(points.point(i), points.point(j)), j))
            .collect();
        cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        cand.truncate(k);
        cand.into_iter().map(|(_, j)| j).collect()
    });

    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, list) in nearest.iter().enumerate() {
        for &j in list {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    Ok(adj
        .into_iter()
        .enumerate()
        .map(|(i, mut list)| {
            list.sort_unstable();
            list.dedup();
            list.into_iter()
                .map(|j| {
                    let (a, b) = (i.min(j), i.max(j));
                    (j, squared_distance(points.point(a), points.point(b)).sqrt())
                })
                .collect()
        })
        .collect())
}

/// Sizes of the connected components, largest first.
pub(crate) fn component_sizes<F, I>(n: usize, neighbors: F) -> Vec<usize>
where
    F: Fn(usize) -> I,
    I: Iterator<Item = usize>,
{
    let mut seen = vec![false; n];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut size = 0;
        while let Some(v) = stack.pop() {
            size += 1;
            for w in neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        sizes.push(size);
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

#[derive(PartialEq)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, then on node index
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(adj: &Adjacency, source: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = f64::INFINITY);
    out[source] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(HeapEntry { dist: 0.0, node: source });
    while let Some(HeapEntry { dist, node }) = heap.pop() {
        if dist > out[node] {
            continue;
        }
        for &(next, w) in &adj[node] {
            let nd = dist + w;
            if nd < out[next] {
                out[next] = nd;
                heap.push(HeapEntry { dist: nd, node: next });
            }
        }
    }
}

/// Shortest-path lengths through the k-nearest-neighbor graph.
///
/// Entries are path lengths in Euclidean units (not squared). A disconnected
/// neighbor graph is an error listing the component sizes.
pub fn geodesic_dissimilarity(points: &PointCloud, k: usize) -> Result<DissimilarityMatrix> {
    geodesic_dissimilarity_with(points, k, Execution::default())
}

pub fn geodesic_dissimilarity_with(
    points: &PointCloud,
    k: usize,
    exec: Execution,
) -> Result<DissimilarityMatrix> {
    let adj = knn_graph(points, k)?;
    let n = adj.len();
    let sizes = component_sizes(n, |v| adj[v].iter().map(|&(w, _)| w));
    if sizes.len() > 1 {
        return Err(Error::DisconnectedNeighborGraph(sizes));
    }
    let mut values = vec![0.0; n * n];
    exec.for_each_chunk_mut(&mut values, n, |i, row| dijkstra(&adj, i, row));
    mirror_upper(n, &mut values);
    Ok(DissimilarityMatrix::from_trusted(n, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dissimilarity::squared_euclidean;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(xs: &[f64]) -> PointCloud {
        PointCloud::new(1, xs.to_vec()).unwrap()
    }

    #[test]
    fn chain_of_three_goes_through_the_middle() {
        let d = geodesic_dissimilarity(&line(&[0.0, 1.0, 2.0]), 1).unwrap();
        assert_eq!(d.get(0, 2), 2.0);
        assert_eq!(d.get(0, 1), 1.0);
    }

    #[test]
    fn k_bounds() {
        assert_eq!(
            geodesic_dissimilarity(&line(&[0.0, 1.0, 2.0]), 3).unwrap_err(),
            Error::KTooLarge { k: 3, n: 3 }
        );
        assert!(matches!(geodesic_dissimilarity(&line(&[0.0, 1.0]), 0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn disconnected_graph_reports_component_sizes() {
        let e = geodesic_dissimilarity(&line(&[0.0, 1.0, 2.0, 100.0, 101.0]), 1).unwrap_err();
        assert_eq!(e, Error::DisconnectedNeighborGraph(vec![3, 2]));
    }

    #[test]
    fn ties_prefer_the_lower_index() {
        // point 1 is equidistant from 0 and 2
        let adj = knn_graph(&line(&[0.0, 1.0, 2.0, 10.0]), 1).unwrap();
        let n1: Vec<usize> = adj[1].iter().map(|e| e.0).collect();
        assert_eq!(n1, vec![0, 2]); // 1 -> 0 by tie-break, 2 -> 1 by its own list
        let n0: Vec<usize> = adj[0].iter().map(|e| e.0).collect();
        assert_eq!(n0, vec![1]);
    }

    #[test]
    fn full_neighborhood_equals_euclidean_on_convex_position() {
        // 10 points on a circle are in convex position; the direct edge is always shortest
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut coords = Vec::new();
        for _ in 0..10 {
            let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            coords.extend([a.cos() * 3.0, a.sin() * 3.0]);
        }
        let p = PointCloud::new(2, coords).unwrap();
        let g = geodesic_dissimilarity(&p, 9).unwrap();
        let e = squared_euclidean(&p);
        for i in 0..10 {
            for j in 0..10 {
                assert!((g.get(i, j) - e.get(i, j).sqrt()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn entries_do_not_increase_with_k() {
        // seed 15 gives a cloud whose 2-NN graph is connected
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let coords: Vec<f64> = (0..80).map(|_| rng.gen_range(0.0..1.0)).collect();
        let p = PointCloud::new(2, coords).unwrap();
        let ds: Vec<_> = [2, 5, 10].iter().map(|&k| geodesic_dissimilarity(&p, k).unwrap()).collect();
        for w in ds.windows(2) {
            for (a, b) in w[0].as_slice().iter().zip(w[1].as_slice()) {
                assert!(b <= &(a + 1e-12));
            }
        }
        let again = DissimilarityMatrix::validate(&ds[1].to_rows()).unwrap();
        assert_eq!(again, ds[1]);
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let coords: Vec<f64> = (0..150).map(|_| rng.gen()).collect();
        let p = PointCloud::new(3, coords).unwrap();
        assert_eq!(
            geodesic_dissimilarity_with(&p, 6, Execution::Sequential).unwrap(),
            geodesic_dissimilarity_with(&p, 6, Execution::Parallel).unwrap()
        );
    }
}

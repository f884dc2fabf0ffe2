//! Seeded synthetic data sets.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dissimilarity::{DnaSequenceSet, Nucleotide, PointCloud};
use crate::{Error, Result};

/// Range of the roll parameter `t`, about one and a half turns.
pub const SWISS_ROLL_T: (f64, f64) = (1.5 * PI, 4.5 * PI);
pub const SWISS_ROLL_HEIGHT: f64 = 20.0;

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    Ok(())
}

/// `n` i.i.d. points uniform in `[0,1]^2`.
pub fn generate_uniform_square(n: usize, seed: u64) -> Result<PointCloud> {
    check_n(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    PointCloud::new(2, (0..2 * n).map(|_| rng.gen::<f64>()).collect())
}

/// Swiss roll points with their roll parameters `t`.
pub fn generate_swiss_roll_with_t(n: usize, seed: u64) -> Result<(PointCloud, Vec<f64>)> {
    check_n(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = Vec::with_capacity(3 * n);
    let mut ts = Vec::with_capacity(n);
    for _ in 0..n {
        let t = rng.gen_range(SWISS_ROLL_T.0..=SWISS_ROLL_T.1);
        let h = rng.gen_range(0.0..=SWISS_ROLL_HEIGHT);
        coords.extend([t * t.cos(), h, t * t.sin()]);
        ts.push(t);
    }
    Ok((PointCloud::new(3, coords)?, ts))
}

/// `n` points `(t cos t, h, t sin t)` with `t` uniform in [`SWISS_ROLL_T`] and
/// `h` uniform in `[0, 20]`.
pub fn generate_swiss_roll(n: usize, seed: u64) -> Result<PointCloud> {
    Ok(generate_swiss_roll_with_t(n, seed)?.0)
}

const BASES: [Nucleotide; 4] = [Nucleotide::A, Nucleotide::C, Nucleotide::G, Nucleotide::T];

fn mutate(rng: &mut ChaCha8Rng, seq: &mut [Nucleotide], rate: f64) {
    for site in seq.iter_mut() {
        if rng.gen::<f64>() < rate {
            // two thirds transitions, as in typical mitochondrial data
            *site = if rng.gen::<f64>() < 2.0 / 3.0 {
                match *site {
                    Nucleotide::A => Nucleotide::G,
                    Nucleotide::G => Nucleotide::A,
                    Nucleotide::C => Nucleotide::T,
                    Nucleotide::T => Nucleotide::C,
                    Nucleotide::Gap => Nucleotide::Gap,
                }
            } else {
                let purine = matches!(*site, Nucleotide::A | Nucleotide::G);
                let choices = if purine { [Nucleotide::C, Nucleotide::T] } else { [Nucleotide::A, Nucleotide::G] };
                choices[rng.gen_range(0..2)]
            };
        }
    }
}

/// Aligned sequences from `clades` groups. Each clade ancestor differs from a
/// random root at about `clade_rate` of the sites, and each member differs
/// from its ancestor at about `member_rate` of the sites. Returns the clade of
/// every sequence.
pub fn generate_sequences(
    n: usize,
    length: usize,
    clades: usize,
    clade_rate: f64,
    member_rate: f64,
    seed: u64,
) -> Result<(DnaSequenceSet, Vec<usize>)> {
    check_n(n)?;
    if length == 0 || clades == 0 {
        return Err(Error::InvalidParameter("length and clades must be at least 1".into()));
    }
    for r in [clade_rate, member_rate] {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::InvalidParameter(format!("mutation rate {r} outside [0, 1]")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let root: Vec<Nucleotide> = (0..length).map(|_| BASES[rng.gen_range(0..4)]).collect();
    let ancestors: Vec<Vec<Nucleotide>> = (0..clades)
        .map(|_| {
            let mut a = root.clone();
            mutate(&mut rng, &mut a, clade_rate);
            a
        })
        .collect();
    let mut ids = Vec::with_capacity(n);
    let mut seqs = Vec::with_capacity(n);
    let mut clade_of = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % clades;
        let mut s = ancestors[c].clone();
        mutate(&mut rng, &mut s, member_rate);
        ids.push(format!("s{i}_c{c}"));
        seqs.push(s);
        clade_of.push(c);
    }
    Ok((DnaSequenceSet::new(ids, seqs)?, clade_of))
}

/// Quartile index (0..4) of each value, by rank. Ties keep input order.
pub fn quartile_labels(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0; values.len()];
    for (rank, &i) in order.iter().enumerate() {
        out[i] = rank * 4 / values.len();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dissimilarity::{geodesic_dissimilarity, knn_graph, squared_euclidean};
    use crate::dissimilarity::geodesic::component_sizes;

    #[test]
    fn uniform_square() {
        let a = generate_uniform_square(500, 7).unwrap();
        assert_eq!(a.len(), 500);
        assert!(a.coords().iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert_eq!(a, generate_uniform_square(500, 7).unwrap());
        assert_ne!(a.point(0)[0], generate_uniform_square(500, 8).unwrap().point(0)[0]);
        assert_eq!(generate_uniform_square(1, 0).unwrap().len(), 1);
        assert!(generate_uniform_square(0, 0).is_err());
    }

    #[test]
    fn swiss_roll_lies_on_the_spiral() {
        let (p, ts) = generate_swiss_roll_with_t(1000, 3).unwrap();
        assert_eq!((p.len(), p.dim()), (1000, 3));
        for (x, &t) in p.iter().zip(&ts) {
            let r = x[0].hypot(x[2]);
            assert!((r - t).abs() < 1e-9);
            assert!((SWISS_ROLL_T.0..=SWISS_ROLL_T.1).contains(&t));
            assert!((0.0..=SWISS_ROLL_HEIGHT).contains(&x[1]));
        }
        let (one, t) = generate_swiss_roll_with_t(1, 0).unwrap();
        let x = one.point(0);
        assert!((x[0] - t[0] * t[0].cos()).abs() < 1e-12 && (x[2] - t[0] * t[0].sin()).abs() < 1e-12);
    }

    #[test]
    fn swiss_roll_neighbor_graph_is_connected() {
        for seed in 0..10 {
            let p = generate_swiss_roll(1000, seed).unwrap();
            let adj = knn_graph(&p, 10).unwrap();
            assert_eq!(component_sizes(1000, |v| adj[v].iter().map(|e| e.0)), vec![1000], "seed {seed}");
        }
        let p = generate_swiss_roll(1000, 0).unwrap();
        let g = geodesic_dissimilarity(&p, 10).unwrap();
        let e = squared_euclidean(&p);
        assert!(g.max_value() > e.max_value().sqrt());
    }

    #[test]
    fn sequences_cluster_by_clade() {
        let (seqs, clades) = generate_sequences(30, 400, 3, 0.15, 0.02, 5).unwrap();
        assert_eq!((seqs.len(), seqs.sequence_length()), (30, 400));
        let d = crate::dissimilarity::kimura2p_dissimilarity(&seqs).unwrap();
        let (mut within, mut across) = (0.0f64, f64::INFINITY);
        for i in 0..30 {
            for j in 0..i {
                if clades[i] == clades[j] {
                    within = within.max(d.get(i, j));
                } else {
                    across = across.min(d.get(i, j));
                }
            }
        }
        assert!(within < across, "{within} vs {across}");
        assert_eq!(generate_sequences(30, 400, 3, 0.15, 0.02, 5).unwrap().0, seqs);
        assert!(generate_sequences(3, 0, 1, 0.1, 0.1, 0).is_err());
    }

    #[test]
    fn quartiles() {
        assert_eq!(quartile_labels(&[0.4, 0.1, 0.3, 0.2, 0.8, 0.7, 0.6, 0.5]), vec![1, 0, 1, 0, 3, 3, 2, 2]);
    }
}

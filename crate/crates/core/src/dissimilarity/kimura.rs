use super::DissimilarityMatrix;
use crate::error::{Error, Result};
use crate::exec::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nucleotide {
    A,
    C,
    G,
    T,
    /// Gap, unknown or ambiguity code; excluded from comparisons.
    Gap,
}

impl Nucleotide {
    pub fn from_char(c: char) -> Self {
        match c.to_ascii_lowercase() {
            'a' => Nucleotide::A,
            'c' => Nucleotide::C,
            'g' => Nucleotide::G,
            't' => Nucleotide::T,
            _ => Nucleotide::Gap,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Nucleotide::A => 'a',
            Nucleotide::C => 'c',
            Nucleotide::G => 'g',
            Nucleotide::T => 't',
            Nucleotide::Gap => '-',
        }
    }

    fn is_purine(self) -> bool {
        matches!(self, Nucleotide::A | Nucleotide::G)
    }
}

/// Aligned sequences of a common length.
#[derive(Debug, Clone, PartialEq)]
pub struct DnaSequenceSet {
    ids: Vec<String>,
    seqs: Vec<Vec<Nucleotide>>,
}

impl DnaSequenceSet {
    pub fn new(ids: Vec<String>, seqs: Vec<Vec<Nucleotide>>) -> Result<Self> {
        if seqs.is_empty() {
            return Err(Error::Empty("sequence set"));
        }
        if ids.len() != seqs.len() {
            return Err(Error::InvalidSequences(format!("{} ids for {} sequences", ids.len(), seqs.len())));
        }
        let len = seqs[0].len();
        if len == 0 {
            return Err(Error::InvalidSequences("sequences must not be empty".into()));
        }
        if let Some(i) = seqs.iter().position(|s| s.len() != len) {
            return Err(Error::InvalidSequences(format!(
                "sequence {i} has length {}, expected {len} (inputs must be aligned)",
                seqs[i].len()
            )));
        }
        Ok(Self { ids, seqs })
    }

    /// Convenience constructor from text; ids are `s0, s1, ...`.
    pub fn from_strs(seqs: &[&str]) -> Result<Self> {
        let ids = (0..seqs.len()).map(|i| format!("s{i}")).collect();
        let seqs = seqs.iter().map(|s| s.chars().map(Nucleotide::from_char).collect()).collect();
        Self::new(ids, seqs)
    }

    pub fn len(&self) -> usize {
        self.seqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seqs.is_empty()
    }

    pub fn sequence_length(&self) -> usize {
        self.seqs[0].len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn sequence(&self, i: usize) -> &[Nucleotide] {
        &self.seqs[i]
    }
}

/// Kimura two-parameter distance between two aligned sequences.
///
/// Returns `None` when no site is comparable, and `Some(Err(()))` past saturation.
fn kimura_raw(a: &[Nucleotide], b: &[Nucleotide]) -> Option<std::result::Result<f64, ()>> {
    let (mut sites, mut transitions, mut transversions) = (0usize, 0usize, 0usize);
    for (&x, &y) in a.iter().zip(b) {
        if x == Nucleotide::Gap || y == Nucleotide::Gap {
            continue;
        }
        sites += 1;
        if x != y {
            if x.is_purine() == y.is_purine() {
                transitions += 1;
            } else {
                transversions += 1;
            }
        }
    }
    if sites == 0 {
        return None;
    }
    let p = transitions as f64 / sites as f64;
    let q = transversions as f64 / sites as f64;
    let w1 = 1.0 - 2.0 * p - 2.0 * q;
    let w2 = 1.0 - 2.0 * q;
    if w1 <= 0.0 || w2 <= 0.0 {
        return Some(Err(()));
    }
    // `+ 0.0` turns the -0.0 of identical sequences into 0.0
    Some(Ok(-0.5 * (w1 * w2.sqrt()).ln() + 0.0))
}

/// Distance between sequences `i` and `j` of `seqs`.
pub fn kimura2p_pair(seqs: &DnaSequenceSet, i: usize, j: usize) -> Result<f64> {
    match kimura_raw(seqs.sequence(i), seqs.sequence(j)) {
        None => Err(Error::NoComparableSites(i, j)),
        Some(Err(())) => Err(Error::UndefinedDistance(i, j)),
        Some(Ok(d)) => Ok(d),
    }
}

/// Kimura two-parameter distances between all pairs of aligned sequences.
/// Sites holding a gap in either sequence of a pair are skipped for that pair.
pub fn kimura2p_dissimilarity(seqs: &DnaSequenceSet) -> Result<DissimilarityMatrix> {
    let n = seqs.len();
    let rows: Vec<Result<Vec<f64>>> = Execution::default().map_range(n, |i| {
        ((i + 1)..n).map(|j| kimura2p_pair(seqs, i, j)).collect()
    });
    let mut values = vec![0.0; n * n];
    for (i, row) in rows.into_iter().enumerate() {
        for (off, d) in row?.into_iter().enumerate() {
            let j = i + 1 + off;
            values[i * n + j] = d;
            values[j * n + i] = d;
        }
    }
    DissimilarityMatrix::from_trusted(n, values).with_labels(seqs.ids().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent count: classify each site by string lookup.
    fn oracle(a: &str, b: &str) -> f64 {
        let transitions = ["ag", "ga", "ct", "tc"];
        let (mut s, mut p, mut q) = (0.0f64, 0.0f64, 0.0f64);
        for (x, y) in a.chars().zip(b.chars()) {
            if !"acgt".contains(x) || !"acgt".contains(y) {
                continue;
            }
            s += 1.0;
            if x != y {
                if transitions.contains(&format!("{x}{y}").as_str()) {
                    p += 1.0;
                } else {
                    q += 1.0;
                }
            }
        }
        let (p, q) = (p / s, q / s);
        -0.5 * ((1.0 - 2.0 * p - 2.0 * q) * (1.0 - 2.0 * q).sqrt()).ln()
    }

    #[test]
    fn identical_sequences_are_exactly_zero() {
        let s = DnaSequenceSet::from_strs(&["acgtacgt", "ACGTACGT"]).unwrap();
        let d = kimura2p_dissimilarity(&s).unwrap();
        assert_eq!(d.get(0, 1), 0.0);
        assert!(d.get(0, 1).is_sign_positive());
    }

    #[test]
    fn single_transition_and_single_transversion() {
        let s = DnaSequenceSet::from_strs(&["aaaa", "gaaa", "caaa"]).unwrap();
        let d = kimura2p_dissimilarity(&s).unwrap();
        assert!((d.get(0, 1) - 0.3466).abs() < 1e-4);
        assert!((d.get(0, 2) - 0.5199).abs() < 1e-4);
        assert!((d.get(0, 1) - oracle("aaaa", "gaaa")).abs() < 1e-15);
        assert!((d.get(0, 2) - oracle("aaaa", "caaa")).abs() < 1e-15);
        assert!((d.get(1, 2) - oracle("gaaa", "caaa")).abs() < 1e-15);
    }

    #[test]
    fn gaps_and_ambiguity_codes_are_skipped() {
        let s = DnaSequenceSet::from_strs(&["aa-ana", "ganaaa"]).unwrap();
        // comparable sites: 0, 1, 3, 5 with one transition at site 0
        let d = kimura2p_pair(&s, 0, 1).unwrap();
        assert!((d - oracle("aa-ana", "ganaaa")).abs() < 1e-15);
        assert!((d - -0.5 * 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn error_cases() {
        let s = DnaSequenceSet::from_strs(&["ac", "ca"]).unwrap();
        assert_eq!(kimura2p_dissimilarity(&s).unwrap_err(), Error::UndefinedDistance(0, 1));
        let s = DnaSequenceSet::from_strs(&["a-", "-a"]).unwrap();
        assert_eq!(kimura2p_dissimilarity(&s).unwrap_err(), Error::NoComparableSites(0, 1));
        assert!(DnaSequenceSet::from_strs(&["acg", "ac"]).is_err());
        assert!(DnaSequenceSet::from_strs(&[]).is_err());
    }

    #[test]
    fn permuting_sequences_permutes_the_matrix() {
        let strs = ["acgtacgtaa", "acgtatgtaa", "gcgtacgcaa", "acttacgtag", "ccgtacgtta"];
        let perm = [3, 0, 4, 1, 2];
        let d = kimura2p_dissimilarity(&DnaSequenceSet::from_strs(&strs).unwrap()).unwrap();
        let permuted: Vec<&str> = perm.iter().map(|&k| strs[k]).collect();
        let dp = kimura2p_dissimilarity(&DnaSequenceSet::from_strs(&permuted).unwrap()).unwrap();
        for a in 0..5 {
            for b in 0..5 {
                assert_eq!(dp.get(a, b), d.get(perm[a], perm[b]));
            }
        }
    }
}

//! Text formats for inputs and results.
//!
//! Readers take the file contents plus a source name used in error messages.
//! Writers return strings with LF line endings; floats use the shortest
//! representation that parses back to the same value.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::dissimilarity::{DissimilarityMatrix, DnaSequenceSet, Nucleotide, PointCloud, SimpleGraph};
use crate::evaluation::{MapReport, NeighborDistance, NeighborDistanceMap};
use crate::som::{PrototypeCoefficients, Prototypes, TrainedMap, Variant};
use crate::topology::{MapGrid, NeighborhoodKernel};
use crate::{Error, Result};

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn write_string(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Non-blank lines with their one-based line numbers. Lines starting with `#`
/// are skipped.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_reals(line: &str, source: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split(',')
        .map(|f| {
            f.trim()
                .parse::<f64>()
                .map_err(|_| Error::parse(source, lineno, format!("not a number: {:?}", f.trim())))
        })
        .collect()
}

fn parse_index(field: &str, source: &str, lineno: usize) -> Result<usize> {
    field
        .trim()
        .parse::<usize>()
        .map_err(|_| Error::parse(source, lineno, format!("not a non-negative integer: {:?}", field.trim())))
}

fn numeric_rows(text: &str, source: &str, skip_header: bool) -> Result<Vec<Vec<f64>>> {
    let mut lines = content_lines(text);
    if skip_header {
        lines.next();
    }
    lines.map(|(n, l)| parse_reals(l, source, n)).collect()
}

/// One point per line, comma separated.
pub fn read_points_csv(text: &str, source: &str, header: bool) -> Result<PointCloud> {
    let rows = numeric_rows(text, source, header)?;
    PointCloud::from_rows(&rows)
}

pub fn format_points_csv(points: &PointCloud) -> String {
    let mut out = String::new();
    for p in points.iter() {
        push_row(&mut out, p);
    }
    out
}

/// An `n x n` matrix, validated on load.
pub fn read_matrix_csv(text: &str, source: &str) -> Result<DissimilarityMatrix> {
    DissimilarityMatrix::validate(&numeric_rows(text, source, false)?)
}

pub fn format_matrix_csv(d: &DissimilarityMatrix) -> String {
    let mut out = String::with_capacity(d.n() * d.n() * 8);
    for i in 0..d.n() {
        push_row(&mut out, d.row(i));
    }
    out
}

fn push_row(out: &mut String, values: &[f64]) {
    for (k, v) in values.iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        write!(out, "{v}").unwrap();
    }
    out.push('\n');
}

/// Edge list with one `src dst` pair per line (whitespace or comma separated).
/// Returns zero-based edges and the node count implied by the largest index.
pub fn read_edge_list(text: &str, source: &str, one_based: bool) -> Result<(usize, Vec<(usize, usize)>)> {
    let mut edges = Vec::new();
    let mut nodes = 0;
    for (lineno, line) in content_lines(text) {
        let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty()).collect();
        if fields.len() != 2 {
            return Err(Error::parse(source, lineno, format!("expected two node ids, found {}", fields.len())));
        }
        let mut ends = [0; 2];
        for (e, f) in ends.iter_mut().zip(&fields) {
            let v = parse_index(f, source, lineno)?;
            *e = if one_based {
                v.checked_sub(1).ok_or_else(|| Error::parse(source, lineno, "node id 0 in a one-based file"))?
            } else {
                v
            };
        }
        nodes = nodes.max(ends[0] + 1).max(ends[1] + 1);
        edges.push((ends[0], ends[1]));
    }
    Ok((nodes, edges))
}

/// `node_id,label` lines. Every node in `0..node_count` needs exactly one label.
pub fn read_labels(text: &str, source: &str, node_count: usize, one_based: bool) -> Result<Vec<String>> {
    let mut labels: Vec<Option<String>> = vec![None; node_count];
    for (lineno, line) in content_lines(text) {
        let (id, label) = line
            .split_once(',')
            .ok_or_else(|| Error::parse(source, lineno, "expected node_id,label"))?;
        let id = parse_index(id, source, lineno)?;
        let idx = if one_based { id.checked_sub(1) } else { Some(id) }
            .filter(|&i| i < node_count)
            .ok_or_else(|| Error::parse(source, lineno, format!("node id {id} outside the graph")))?;
        if labels[idx].replace(label.trim().to_string()).is_some() {
            return Err(Error::parse(source, lineno, format!("node id {id} labelled twice")));
        }
    }
    labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| l.ok_or_else(|| Error::InvalidGraph(format!("node {i} has no label"))))
        .collect()
}

pub fn read_graph(edges_text: &str, source: &str, one_based: bool, labels: Option<(&str, &str)>) -> Result<SimpleGraph> {
    let (nodes, edges) = read_edge_list(edges_text, source, one_based)?;
    let g = SimpleGraph::new(nodes, &edges)?;
    match labels {
        Some((text, name)) => g.with_labels(read_labels(text, name, nodes, one_based)?),
        None => Ok(g),
    }
}

/// FASTA with `>id` headers; sequence lines may wrap.
pub fn read_fasta(text: &str, source: &str) -> Result<DnaSequenceSet> {
    let mut ids = Vec::new();
    let mut seqs: Vec<Vec<Nucleotide>> = Vec::new();
    for (lineno, line) in content_lines(text) {
        if let Some(id) = line.strip_prefix('>') {
            ids.push(id.trim().to_string());
            seqs.push(Vec::new());
        } else {
            let seq = seqs
                .last_mut()
                .ok_or_else(|| Error::parse(source, lineno, "sequence data before the first '>' header"))?;
            seq.extend(line.chars().filter(|c| !c.is_whitespace()).map(Nucleotide::from_char));
        }
    }
    DnaSequenceSet::new(ids, seqs)
}

pub fn format_fasta(seqs: &DnaSequenceSet) -> String {
    let mut out = String::new();
    for (i, id) in seqs.ids().iter().enumerate() {
        writeln!(out, ">{id}").unwrap();
        out.extend(seqs.sequence(i).iter().map(|n| n.to_char()));
        out.push('\n');
    }
    out
}

/// Flat `key = value` lines; `#` starts a comment line.
pub fn parse_key_values(text: &str, source: &str) -> Result<Vec<(String, String)>> {
    content_lines(text)
        .map(|(lineno, line)| {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(source, lineno, "expected key=value"))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::parse(source, lineno, "empty key"));
            }
            Ok((k.to_string(), v.trim().to_string()))
        })
        .collect()
}

fn format_key_values(pairs: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (k, v) in pairs {
        writeln!(out, "{k}={v}").unwrap();
    }
    out
}

pub fn format_assignments(grid: &MapGrid, assignment: &[usize]) -> String {
    let mut out = String::from("observation_id,unit,row,col\n");
    for (i, &u) in assignment.iter().enumerate() {
        let (r, c) = grid.coord(u);
        writeln!(out, "{i},{u},{r},{c}").unwrap();
    }
    out
}

pub fn read_assignments(text: &str, source: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (lineno, line) in content_lines(text).skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::parse(source, lineno, "expected observation_id,unit,row,col"));
        }
        let id = parse_index(fields[0], source, lineno)?;
        if id != out.len() {
            return Err(Error::parse(source, lineno, format!("expected observation {}, found {id}", out.len())));
        }
        out.push(parse_index(fields[1], source, lineno)?);
    }
    Ok(out)
}

pub fn format_history(map: &TrainedMap) -> String {
    let mut out = String::from("iteration,quantization_error\n");
    for c in &map.history {
        writeln!(out, "{},{}", c.iteration, c.quantization_error).unwrap();
    }
    out
}

/// File name and contents of the prototype table for `p`.
pub fn format_prototypes(p: &Prototypes) -> (&'static str, String) {
    match p {
        Prototypes::Coefficients(c) => {
            let mut out = String::new();
            for row in c.rows() {
                push_row(&mut out, row);
            }
            ("coefficients.csv", out)
        }
        Prototypes::Vectors { dim, values } => {
            let mut out = String::new();
            for row in values.chunks(*dim) {
                push_row(&mut out, row);
            }
            ("prototypes.csv", out)
        }
        Prototypes::Medoids(m) => {
            let mut out = String::from("unit,observation_id\n");
            for (u, i) in m.iter().enumerate() {
                writeln!(out, "{u},{i}").unwrap();
            }
            ("medoids.csv", out)
        }
    }
}

pub fn read_prototypes(variant: Variant, text: &str, source: &str) -> Result<Prototypes> {
    match variant {
        Variant::OnlineRelational | Variant::BatchRelational => {
            Ok(Prototypes::Coefficients(PrototypeCoefficients::from_rows(&numeric_rows(text, source, false)?)?))
        }
        Variant::EuclideanOnline => {
            let rows = numeric_rows(text, source, false)?;
            let dim = rows.first().map_or(0, Vec::len);
            if dim == 0 || rows.iter().any(|r| r.len() != dim) {
                return Err(Error::parse(source, 1, "prototype rows must share a positive dimension"));
            }
            Ok(Prototypes::Vectors { dim, values: rows.concat() })
        }
        Variant::BatchMedian => {
            let mut medoids = Vec::new();
            for (lineno, line) in content_lines(text).skip(1) {
                let (u, i) = line
                    .split_once(',')
                    .ok_or_else(|| Error::parse(source, lineno, "expected unit,observation_id"))?;
                if parse_index(u, source, lineno)? != medoids.len() {
                    return Err(Error::parse(source, lineno, "units must be listed in order"));
                }
                medoids.push(parse_index(i, source, lineno)?);
            }
            Ok(Prototypes::Medoids(medoids))
        }
    }
}

pub fn format_meta(map: &TrainedMap) -> String {
    let mut pairs = vec![
        ("variant", map.variant.name().to_string()),
        ("seed", map.seed.to_string()),
        ("schedule", map.schedule.clone()),
        ("grid.rows", map.grid.rows().to_string()),
        ("grid.cols", map.grid.cols().to_string()),
        ("kernel.kind", map.kernel.name().to_string()),
        ("observations", map.assignment.len().to_string()),
        ("negative_distances", map.negative_distances.to_string()),
        ("empty_kernel_mass", map.empty_kernel_mass.to_string()),
    ];
    if let Some(e) = map.converged_epoch {
        pairs.push(("converged_epoch", e.to_string()));
    }
    format_key_values(&pairs)
}

/// The parts of a saved map needed to evaluate or plot it again.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedMap {
    pub variant: Variant,
    pub grid: MapGrid,
    pub kernel: NeighborhoodKernel,
    pub seed: u64,
    pub prototypes: Prototypes,
    pub assignment: Vec<usize>,
}

pub fn write_map(dir: &Path, map: &TrainedMap) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    write_string(&dir.join("assignments.csv"), &format_assignments(&map.grid, &map.assignment))?;
    let (name, protos) = format_prototypes(&map.prototypes);
    write_string(&dir.join(name), &protos)?;
    write_string(&dir.join("history.csv"), &format_history(map))?;
    write_string(&dir.join("meta.txt"), &format_meta(map))
}

pub fn read_map(dir: &Path) -> Result<SavedMap> {
    let meta_path = dir.join("meta.txt");
    let meta = parse_key_values(&read_to_string(&meta_path)?, &meta_path.display().to_string())?;
    let get = |key: &str| -> Result<&str> {
        meta.iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::InvalidParameter(format!("{} lacks {key}", meta_path.display())))
    };
    let num = |key: &str| -> Result<u64> {
        get(key)?.parse().map_err(|_| Error::InvalidParameter(format!("{key} is not an integer")))
    };
    let variant: Variant = get("variant")?.parse()?;
    let grid = MapGrid::new(num("grid.rows")? as usize, num("grid.cols")? as usize)?;
    let kernel: NeighborhoodKernel = get("kernel.kind")?.parse()?;
    let seed = num("seed")?;

    let (name, _) = format_prototypes(&match variant {
        Variant::BatchMedian => Prototypes::Medoids(Vec::new()),
        Variant::EuclideanOnline => Prototypes::Vectors { dim: 1, values: Vec::new() },
        _ => Prototypes::Coefficients(PrototypeCoefficients::one_hot(1, &[0])?),
    });
    let proto_path = dir.join(name);
    let prototypes = read_prototypes(variant, &read_to_string(&proto_path)?, &proto_path.display().to_string())?;
    let assign_path = dir.join("assignments.csv");
    let assignment = read_assignments(&read_to_string(&assign_path)?, &assign_path.display().to_string())?;
    if prototypes.units() != grid.units() {
        return Err(Error::DimensionMismatch(format!("{} prototypes for a {}-unit grid", prototypes.units(), grid.units())));
    }
    Ok(SavedMap { variant, grid, kernel, seed, prototypes, assignment })
}

pub fn format_report(report: &MapReport) -> String {
    let mut pairs = vec![
        ("quantization_error", report.quantization_error.to_string()),
        ("topographic_error", report.topographic_error.to_string()),
        ("empty_unit_count", report.empty_unit_count.to_string()),
    ];
    if let Some(p) = &report.purity {
        pairs.push(("purity", p.weighted.to_string()));
    }
    format_key_values(&pairs)
}

pub fn format_unit_table(grid: &MapGrid, report: &MapReport) -> String {
    let mut out = String::from("unit,row,col,size,purity\n");
    for (u, size) in report.cluster_sizes.iter().enumerate() {
        let (r, c) = grid.coord(u);
        let purity = report
            .purity
            .as_ref()
            .and_then(|p| p.per_unit[u])
            .map_or(String::new(), |v| v.to_string());
        writeln!(out, "{u},{r},{c},{size},{purity}").unwrap();
    }
    out
}

/// Off-grid directions are left blank; empty neighbor cells are written as `undefined`.
pub fn format_neighbor_distances(ndm: &NeighborDistanceMap) -> String {
    let mut out = String::from("unit,row,col,up,right,down,left\n");
    for (u, cell) in ndm.cells.iter().enumerate() {
        let (r, c) = ndm.grid.coord(u);
        write!(out, "{u},{r},{c}").unwrap();
        for d in cell {
            match d {
                NeighborDistance::OffGrid => out.push(','),
                NeighborDistance::Undefined => out.push_str(",undefined"),
                NeighborDistance::Value(v) => write!(out, ",{v}").unwrap(),
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dissimilarity::squared_euclidean;

    #[test]
    fn points_round_trip() {
        let p = PointCloud::new(2, vec![0.1, 1.0 / 3.0, -2.5e-17, 4.0]).unwrap();
        let text = format_points_csv(&p);
        assert_eq!(read_points_csv(&text, "t", false).unwrap(), p);
        let with_header = format!("x,y\n{text}");
        assert_eq!(read_points_csv(&with_header, "t", true).unwrap(), p);
        assert!(matches!(read_points_csv(&with_header, "t", false), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn matrix_round_trip() {
        let p = PointCloud::new(1, vec![0.0, 0.3, 1.7]).unwrap();
        let d = squared_euclidean(&p);
        let back = read_matrix_csv(&format_matrix_csv(&d), "m").unwrap();
        assert_eq!(back.as_slice(), d.as_slice());
        assert_eq!(read_matrix_csv("0,1\n2,0\n", "m"), Err(Error::AsymmetryBeyondTolerance(0, 1)));
    }

    #[test]
    fn edge_lists() {
        let (n, e) = read_edge_list("# comment\n1 2\n2\t3\n\n", "g", true).unwrap();
        assert_eq!((n, e), (3, vec![(0, 1), (1, 2)]));
        let (n, e) = read_edge_list("0,1\n", "g", false).unwrap();
        assert_eq!((n, e), (2, vec![(0, 1)]));
        assert!(read_edge_list("0 1\n", "g", true).is_err());
        assert!(matches!(read_edge_list("0 1 2\n", "g", false), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn graph_with_labels() {
        let g = read_graph("1 2\n2 3\n", "g", true, Some(("1,l\n2,n\n3,c\n", "labels"))).unwrap();
        assert_eq!(g.labels().unwrap(), ["l", "n", "c"]);
        assert!(read_graph("1 2\n2 3\n", "g", true, Some(("1,l\n2,n\n", "labels"))).is_err());
        assert!(read_graph("1 2\n2 1\n", "g", true, None).is_err());
    }

    #[test]
    fn fasta() {
        let s = read_fasta(">a\nACG\nT\n>b\naaNt\n", "f").unwrap();
        assert_eq!(s.ids(), ["a", "b"]);
        assert_eq!(s.sequence_length(), 4);
        assert_eq!(format_fasta(&s), ">a\nacgt\n>b\naa-t\n");
        assert!(read_fasta("acgt\n", "f").is_err());
        assert!(read_fasta(">a\nacgt\n>b\nacg\n", "f").is_err());
    }

    #[test]
    fn key_values() {
        let kv = parse_key_values("# c\na = 1\nb.c=x y\n", "k").unwrap();
        assert_eq!(kv, vec![("a".into(), "1".into()), ("b.c".into(), "x y".into())]);
        assert!(parse_key_values("novalue\n", "k").is_err());
    }

    #[test]
    fn assignments_round_trip() {
        let grid = MapGrid::new(2, 3).unwrap();
        let a = vec![5, 0, 3, 3];
        let text = format_assignments(&grid, &a);
        assert!(text.starts_with("observation_id,unit,row,col\n0,5,1,2\n"));
        assert_eq!(read_assignments(&text, "a").unwrap(), a);
    }

    #[test]
    fn prototypes_round_trip() {
        let c = Prototypes::Coefficients(PrototypeCoefficients::from_rows(&[vec![0.25, 0.75], vec![1.0, 0.0]]).unwrap());
        let v = Prototypes::Vectors { dim: 2, values: vec![0.1, 0.2, 0.3, 0.4] };
        let m = Prototypes::Medoids(vec![3, 1]);
        for (variant, p) in [(Variant::OnlineRelational, c), (Variant::EuclideanOnline, v), (Variant::BatchMedian, m)] {
            let (_, text) = format_prototypes(&p);
            assert_eq!(read_prototypes(variant, &text, "p").unwrap(), p);
        }
    }
}

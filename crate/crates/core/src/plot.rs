//! Deterministic SVG plots.
//!
//! Coordinates are written with two decimals so identical inputs give
//! byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::dissimilarity::PointCloud;
use crate::evaluation::{NeighborDistance, NeighborDistanceMap};
use crate::topology::MapGrid;
use crate::{Error, Result};

const PANEL: f64 = 360.0;
const MARGIN: f64 = 20.0;
const CELL: f64 = 40.0;

pub const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(out: &mut String, width: f64, height: f64) {
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
}

/// Maps data coordinates into a square panel, y pointing up.
struct Frame {
    min: [f64; 2],
    scale: f64,
    origin: [f64; 2],
}

impl Frame {
    fn fit<'a>(pts: impl Iterator<Item = &'a [f64]>, origin: [f64; 2]) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in pts {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        if !lo[0].is_finite() {
            lo = [0.0; 2];
            hi = [1.0; 2];
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]);
        let scale = if span > 0.0 { (PANEL - 2.0 * MARGIN) / span } else { 1.0 };
        Frame { min: lo, scale, origin }
    }

    fn map(&self, p: &[f64]) -> (f64, f64) {
        let x = self.origin[0] + MARGIN + (p[0] - self.min[0]) * self.scale;
        let y = self.origin[1] + PANEL - MARGIN - (p[1] - self.min[1]) * self.scale;
        (x, y)
    }
}

fn check_2d(points: &PointCloud, prototypes: &[Vec<f64>], grid: &MapGrid) -> Result<()> {
    if points.dim() != 2 {
        return Err(Error::DimensionNot2D(points.dim()));
    }
    if let Some(p) = prototypes.iter().find(|p| p.len() != 2) {
        return Err(Error::DimensionNot2D(p.len()));
    }
    if prototypes.len() != grid.units() {
        return Err(Error::DimensionMismatch(format!("{} prototypes on a {}-unit grid", prototypes.len(), grid.units())));
    }
    Ok(())
}

fn draw_lattice(out: &mut String, frame: &Frame, points: &PointCloud, prototypes: &[Vec<f64>], grid: &MapGrid) {
    writeln!(out, r##"<g fill="#bbbbbb">"##).unwrap();
    for p in points.iter() {
        let (x, y) = frame.map(p);
        writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="1.5"/>"#).unwrap();
    }
    writeln!(out, "</g>").unwrap();
    writeln!(out, r##"<g stroke="#d62728" stroke-width="1">"##).unwrap();
    for (u, v) in grid.adjacent_pairs() {
        let (x1, y1) = frame.map(&prototypes[u]);
        let (x2, y2) = frame.map(&prototypes[v]);
        writeln!(out, r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}"/>"#).unwrap();
    }
    writeln!(out, "</g>").unwrap();
    writeln!(out, r##"<g fill="#d62728">"##).unwrap();
    for p in prototypes {
        let (x, y) = frame.map(p);
        writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3"/>"#).unwrap();
    }
    writeln!(out, "</g>").unwrap();
}

/// Data points, prototypes, and lattice edges between grid neighbors.
pub fn emit_grid_plot(points: &PointCloud, prototypes: &[Vec<f64>], grid: &MapGrid) -> Result<String> {
    check_2d(points, prototypes, grid)?;
    let frame = Frame::fit(points.iter().chain(prototypes.iter().map(|p| p.as_slice())), [0.0, 0.0]);
    let mut out = String::new();
    header(&mut out, PANEL, PANEL);
    draw_lattice(&mut out, &frame, points, prototypes, grid);
    out.push_str("</svg>\n");
    Ok(out)
}

/// One lattice panel per snapshot, three per row, each titled with its iteration.
pub fn emit_snapshot_panels(points: &PointCloud, snapshots: &[(usize, Vec<Vec<f64>>)], grid: &MapGrid) -> Result<String> {
    for (_, protos) in snapshots {
        check_2d(points, protos, grid)?;
    }
    let per_row = snapshots.len().clamp(1, 3);
    let rows = snapshots.len().div_ceil(per_row).max(1);
    let title = 20.0;
    let mut out = String::new();
    header(&mut out, PANEL * per_row as f64, (PANEL + title) * rows as f64);
    // One frame for all panels so the panels are comparable.
    let all = snapshots.iter().flat_map(|(_, p)| p.iter().map(|v| v.as_slice()));
    let base = Frame::fit(points.iter().chain(all), [0.0, 0.0]);
    for (k, (iteration, protos)) in snapshots.iter().enumerate() {
        let ox = (k % per_row) as f64 * PANEL;
        let oy = (k / per_row) as f64 * (PANEL + title);
        writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="14" text-anchor="middle">iteration {iteration}</text>"#,
            ox + PANEL / 2.0,
            oy + 15.0
        )
        .unwrap();
        let frame = Frame { origin: [ox, oy + title], ..base };
        draw_lattice(&mut out, &frame, points, protos, grid);
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn orientation(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segments_cross(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> bool {
    let (o1, o2) = (orientation(a, b, c), orientation(a, b, d));
    let (o3, o4) = (orientation(c, d, a), orientation(c, d, b));
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

/// Number of pairs of lattice edges that properly intersect. Edges sharing a
/// unit are not compared.
pub fn lattice_crossings(prototypes: &[Vec<f64>], grid: &MapGrid) -> Result<usize> {
    if prototypes.len() != grid.units() {
        return Err(Error::DimensionMismatch(format!("{} prototypes on a {}-unit grid", prototypes.len(), grid.units())));
    }
    if let Some(p) = prototypes.iter().find(|p| p.len() != 2) {
        return Err(Error::DimensionNot2D(p.len()));
    }
    let edges = grid.adjacent_pairs();
    let mut count = 0;
    for (k, &(a, b)) in edges.iter().enumerate() {
        for &(c, d) in &edges[k + 1..] {
            if a == c || a == d || b == c || b == d {
                continue;
            }
            if segments_cross(&prototypes[a], &prototypes[b], &prototypes[c], &prototypes[d]) {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// Polygon vertices for each cell, in grid-neighbor order (up, right, down,
/// left). A vertex sits on the cell edge for distance zero and at the cell
/// center for the largest distance on the map. Off-grid and undefined
/// directions are placed on the edge.
pub fn polygon_vertices(ndm: &NeighborDistanceMap) -> Vec<[(f64, f64); 4]> {
    let max = ndm.max_value().unwrap_or(0.0);
    let half = CELL / 2.0;
    ndm.cells
        .iter()
        .enumerate()
        .map(|(u, cell)| {
            let (r, c) = ndm.grid.coord(u);
            let (cx, cy) = (MARGIN + c as f64 * CELL + half, MARGIN + r as f64 * CELL + half);
            let dirs = [(0.0, -1.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0)];
            let mut out = [(0.0, 0.0); 4];
            for (k, (dx, dy)) in dirs.iter().enumerate() {
                let frac = match cell[k] {
                    NeighborDistance::Value(v) if max > 0.0 => v / max,
                    _ => 0.0,
                };
                let reach = half * (1.0 - frac);
                out[k] = (cx + dx * reach, cy + dy * reach);
            }
            out
        })
        .collect()
}

/// One polygon per cell whose vertices encode distances to neighboring cells.
/// Cells with an undefined neighbor distance get a dashed outline.
pub fn emit_polygon_distance_plot(ndm: &NeighborDistanceMap) -> String {
    let grid = ndm.grid;
    let mut out = String::new();
    header(&mut out, 2.0 * MARGIN + grid.cols() as f64 * CELL, 2.0 * MARGIN + grid.rows() as f64 * CELL);
    writeln!(out, r##"<g fill="none" stroke="#999999" stroke-width="0.5">"##).unwrap();
    for u in 0..grid.units() {
        let (r, c) = grid.coord(u);
        writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="{CELL:.2}" height="{CELL:.2}"/>"#,
            MARGIN + c as f64 * CELL,
            MARGIN + r as f64 * CELL
        )
        .unwrap();
    }
    writeln!(out, "</g>").unwrap();
    for (cell, verts) in ndm.cells.iter().zip(polygon_vertices(ndm)) {
        let pts: Vec<String> = verts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let dashed = if cell.contains(&NeighborDistance::Undefined) { r#" stroke-dasharray="3,2""# } else { "" };
        writeln!(
            out,
            r##"<polygon points="{}" fill="#9ecae1" stroke="#08519c" stroke-width="1"{dashed}/>"##,
            pts.join(" ")
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}

/// Stacked bars of the label mix in every cell, with a legend. Labels are
/// colored in sorted order.
pub fn emit_label_distribution_plot(grid: &MapGrid, assignment: &[usize], labels: &[String]) -> Result<String> {
    if assignment.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!("{} assignments, {} labels", assignment.len(), labels.len())));
    }
    let names: Vec<&str> = labels.iter().map(String::as_str).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let color = |l: &str| PALETTE[names.iter().position(|&n| n == l).unwrap() % PALETTE.len()];
    let mut counts: Vec<BTreeMap<&str, usize>> = vec![BTreeMap::new(); grid.units()];
    for (l, &u) in labels.iter().zip(assignment) {
        if u >= grid.units() {
            return Err(Error::DimensionMismatch(format!("unit {u} out of range 0..{}", grid.units())));
        }
        *counts[u].entry(l.as_str()).or_default() += 1;
    }

    let legend = 20.0 * names.len() as f64 + 10.0;
    let width = 2.0 * MARGIN + grid.cols() as f64 * CELL;
    let height = 2.0 * MARGIN + grid.rows() as f64 * CELL + legend;
    let mut out = String::new();
    header(&mut out, width, height);
    for (u, cell) in counts.iter().enumerate() {
        let (r, c) = grid.coord(u);
        let (x0, y0) = (MARGIN + c as f64 * CELL, MARGIN + r as f64 * CELL);
        writeln!(out, r##"<rect x="{x0:.2}" y="{y0:.2}" width="{CELL:.2}" height="{CELL:.2}" fill="none" stroke="#999999" stroke-width="0.5"/>"##).unwrap();
        let total: usize = cell.values().sum();
        let mut x = x0 + 2.0;
        for (label, &k) in cell {
            let w = (CELL - 4.0) * k as f64 / total as f64;
            writeln!(
                out,
                r#"<rect x="{x:.2}" y="{:.2}" width="{w:.2}" height="{:.2}" fill="{}"/>"#,
                y0 + 2.0,
                CELL - 4.0,
                color(label)
            )
            .unwrap();
            x += w;
        }
    }
    let ly = 2.0 * MARGIN + grid.rows() as f64 * CELL;
    for (k, name) in names.iter().enumerate() {
        let y = ly + 20.0 * k as f64;
        writeln!(out, r#"<rect x="{MARGIN:.2}" y="{y:.2}" width="12" height="12" fill="{}"/>"#, color(name)).unwrap();
        writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12">{}</text>"#,
            MARGIN + 18.0,
            y + 10.0,
            escape(name)
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    Ok(out)
}

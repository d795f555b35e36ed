//! Standalone SVG scatter plot of a two-dimensional clustering result.

use std::fmt::Write as _;
use std::path::Path;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::pipeline::ResultBundle;

const SIZE: f64 = 800.0;
const MARGIN: f64 = 30.0;
const POINT_RADIUS: f64 = 2.5;
const STAR_RADIUS: f64 = 9.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// Fill color of cluster `c`. Distinct clusters get distinct colors.
pub fn cluster_color(c: usize) -> String {
    match PALETTE.get(c) {
        Some(hex) => (*hex).to_string(),
        None => {
            let i = c - PALETTE.len();
            let hue = (i as f64 * 137.507_764_05) % 360.0;
            let light = 35 + (i % 4) * 10;
            format!("hsl({hue:.4},70%,{light}%)")
        }
    }
}

struct Frame {
    min: [f64; 2],
    scale: f64,
    height: f64,
}

impl Frame {
    fn fit(coords: impl Iterator<Item = [f64; 2]>) -> Self {
        let (mut min, mut max) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in coords {
            for a in 0..2 {
                min[a] = min[a].min(p[a]);
                max[a] = max[a].max(p[a]);
            }
        }
        let span = (max[0] - min[0]).max(max[1] - min[1]);
        let scale = if span > 0.0 {
            (SIZE - 2.0 * MARGIN) / span
        } else {
            1.0
        };
        Self {
            min,
            scale,
            height: SIZE,
        }
    }

    fn map(&self, p: [f64; 2]) -> (f64, f64) {
        (
            MARGIN + (p[0] - self.min[0]) * self.scale,
            self.height - MARGIN - (p[1] - self.min[1]) * self.scale,
        )
    }
}

fn star(cx: f64, cy: f64) -> String {
    (0..10)
        .map(|v| {
            let r = if v % 2 == 0 {
                STAR_RADIUS
            } else {
                STAR_RADIUS * 0.45
            };
            let angle = std::f64::consts::PI * (v as f64 / 5.0 - 0.5);
            format!("{:.2},{:.2}", cx + r * angle.cos(), cy + r * angle.sin())
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Renders points colored by final cluster, subcluster centers as stars in their
/// cluster color and accepted forest edges as segments.
pub fn render_svg(ds: &Dataset, result: &ResultBundle) -> Result<String> {
    if ds.dims() != 2 {
        return Err(Error::NotTwoDimensional(ds.dims()));
    }
    if result.assignments.len() != ds.len() {
        return Err(Error::LengthMismatch(result.assignments.len(), ds.len()));
    }
    let centers = &result.overclustering.centers;
    let points = ds.points();
    let coords = points
        .outer_iter()
        .map(|r| [r[0], r[1]])
        .chain(centers.iter().map(|c| [c[0], c[1]]));
    let frame = Frame::fit(coords);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(
        out,
        r#"<title>{} clusters from {} subclusters</title>"#,
        result.estimated_k, result.overclustering.k
    );
    let _ = writeln!(out, r#"<g id="points" stroke="none">"#);
    for (row, &c) in points.outer_iter().zip(&result.assignments) {
        let (x, y) = frame.map([row[0], row[1]]);
        let _ = writeln!(
            out,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="{POINT_RADIUS}" fill="{}" fill-opacity="0.7"/>"#,
            cluster_color(c)
        );
    }
    let _ = writeln!(out, "</g>");

    let _ = writeln!(out, r##"<g id="edges" stroke="#000000" stroke-width="1.5">"##);
    for e in &result.forest.accepted {
        let (x1, y1) = frame.map([centers[e.edge.i][0], centers[e.edge.i][1]]);
        let (x2, y2) = frame.map([centers[e.edge.j][0], centers[e.edge.j][1]]);
        let _ = writeln!(
            out,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}"/>"#
        );
    }
    let _ = writeln!(out, "</g>");

    let _ = writeln!(out, r##"<g id="centers" stroke="#000000" stroke-width="1">"##);
    for (center, &c) in centers.iter().zip(&result.overclustering.cluster_of) {
        let (x, y) = frame.map([center[0], center[1]]);
        let _ = writeln!(
            out,
            r#"<polygon points="{}" fill="{}"/>"#,
            star(x, y),
            cluster_color(c)
        );
    }
    let _ = writeln!(out, "</g>\n</svg>");
    Ok(out)
}

pub fn emit_svg(ds: &Dataset, result: &ResultBundle, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, render_svg(ds, result)?)?;
    Ok(())
}

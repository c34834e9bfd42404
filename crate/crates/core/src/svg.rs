//! Minimal SVG scatter plots for embeddings and clustered complexes.

use std::fmt::Write as _;

use crate::complex::SimplicialComplex;
use crate::error::{Error, Result};

/// Cluster colours, cycled when there are more clusters than entries.
pub const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#17becf", "#e377c2", "#8c564b",
];

/// Reserved for unclustered items.
pub const GRAY: &str = "#a0a0a0";

const PANEL: f64 = 400.0;
const MARGIN: f64 = 20.0;

fn colour(label: Option<usize>) -> &'static str {
    label.map_or(GRAY, |l| PALETTE[l % PALETTE.len()])
}

/// Maps data coordinates into one square panel.
struct Frame {
    min: [f64; 2],
    scale: f64,
    offset: f64,
}

impl Frame {
    fn fit(xy: impl Iterator<Item = [f64; 2]>, offset: f64) -> Frame {
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for p in xy {
            for a in 0..2 {
                min[a] = min[a].min(p[a]);
                max[a] = max[a].max(p[a]);
            }
        }
        if !min[0].is_finite() {
            min = [0.0; 2];
            max = [1.0; 2];
        }
        let span = (max[0] - min[0]).max(max[1] - min[1]).max(1e-12);
        // centre the shorter axis
        for a in 0..2 {
            min[a] -= (span - (max[a] - min[a])) / 2.0;
        }
        Frame {
            min,
            scale: (PANEL - 2.0 * MARGIN) / span,
            offset,
        }
    }

    fn map(&self, p: [f64; 2]) -> (f64, f64) {
        (
            self.offset + MARGIN + (p[0] - self.min[0]) * self.scale,
            PANEL - MARGIN - (p[1] - self.min[1]) * self.scale,
        )
    }
}

fn header(panels: usize) -> String {
    let w = PANEL * panels as f64;
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{PANEL}\" viewBox=\"0 0 {w} {PANEL}\">\n<rect width=\"{w}\" height=\"{PANEL}\" fill=\"white\"/>\n"
    )
}

/// Coordinate pairs drawn in separate panels: the plane itself in 1D/2D,
/// the three coordinate planes of the first three axes otherwise.
fn planes(dim: usize) -> Vec<(usize, Option<usize>)> {
    match dim {
        0 | 1 => vec![(0, None)],
        2 => vec![(0, Some(1))],
        _ => vec![(0, Some(1)), (0, Some(2)), (1, Some(2))],
    }
}

fn project(p: &[f64], plane: (usize, Option<usize>)) -> [f64; 2] {
    [
        p.get(plane.0).copied().unwrap_or(0.0),
        plane.1.map_or(0.0, |b| p.get(b).copied().unwrap_or(0.0)),
    ]
}

/// Scatter of embedded points coloured by label, with the clustering lines
/// dashed.
pub fn embedding_scatter(
    points: &[Vec<f64>],
    labels: &[Option<usize>],
    directions: &[Vec<f64>],
) -> String {
    let dim = points.first().map_or(0, Vec::len);
    let panels = planes(dim);
    let mut out = header(panels.len());
    let radius = points
        .iter()
        .map(|p| p.iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    for (k, &plane) in panels.iter().enumerate() {
        let frame = Frame::fit(
            points
                .iter()
                .map(|p| project(p, plane))
                .chain([[-radius, -radius], [radius, radius]]),
            k as f64 * PANEL,
        );
        for d in directions {
            let a = project(&d.iter().map(|x| x * radius).collect::<Vec<_>>(), plane);
            let (x1, y1) = frame.map(a);
            let (x2, y2) = frame.map([-a[0], -a[1]]);
            let _ = writeln!(
                out,
                "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" stroke=\"black\" stroke-dasharray=\"4 3\" stroke-width=\"0.8\"/>"
            );
        }
        // unclustered first so that clusters stay visible
        for pass in [true, false] {
            for (p, &l) in points.iter().zip(labels) {
                if l.is_none() != pass {
                    continue;
                }
                let (x, y) = frame.map(project(p, plane));
                let _ = writeln!(
                    out,
                    "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"2\" fill=\"{}\"/>",
                    colour(l)
                );
            }
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Oblique view for 3D coordinates; 2D coordinates are used as they are.
fn view(p: &[f64]) -> [f64; 2] {
    match p.len() {
        0 => [0.0, 0.0],
        1 => [p[0], 0.0],
        2 => [p[0], p[1]],
        _ => [p[0] + 0.35 * p[1], p[2] + 0.2 * p[1]],
    }
}

fn vertex_position(points: &[Vec<f64>], v: usize) -> Result<&[f64]> {
    points
        .get(v)
        .map(Vec::as_slice)
        .ok_or_else(|| Error::InvalidParameter(format!("no coordinates for vertex {v}")))
}

/// The complex drawn from vertex coordinates, with its `degree`-simplices
/// coloured by label (unclustered in gray). Vertices are drawn small.
pub fn complex_plot(
    complex: &SimplicialComplex,
    points: &[Vec<f64>],
    degree: usize,
    labels: &[Option<usize>],
) -> Result<String> {
    let frame = Frame::fit(points.iter().map(|p| view(p)), 0.0);
    let mut out = header(1);
    for pass in [true, false] {
        for (s, &l) in complex.simplices(degree).iter().zip(labels) {
            if l.is_none() != pass {
                continue;
            }
            let mut corners = Vec::with_capacity(s.vertices().len());
            for &v in s.vertices() {
                corners.push(frame.map(view(vertex_position(points, v)?)));
            }
            let c = colour(l);
            match corners.len() {
                1 => {
                    let (x, y) = corners[0];
                    let _ = writeln!(
                        out,
                        "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"2.5\" fill=\"{c}\"/>"
                    );
                }
                2 => {
                    let ((x1, y1), (x2, y2)) = (corners[0], corners[1]);
                    let _ = writeln!(
                        out,
                        "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" stroke=\"{c}\" stroke-width=\"0.7\"/>"
                    );
                }
                _ => {
                    let pts: Vec<String> = corners
                        .iter()
                        .map(|(x, y)| format!("{x:.2},{y:.2}"))
                        .collect();
                    let _ = writeln!(
                        out,
                        "<polygon points=\"{}\" fill=\"{c}\" fill-opacity=\"0.5\" stroke=\"none\"/>",
                        pts.join(" ")
                    );
                }
            }
        }
    }
    if degree > 0 {
        for s in complex.simplices(0) {
            let (x, y) = frame.map(view(vertex_position(points, s.vertices()[0])?));
            let _ = writeln!(
                out,
                "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"0.8\" fill=\"black\"/>"
            );
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

//! File formats: complexes as JSON, point clouds and embeddings as CSV,
//! cluster assignments as JSON.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::baseline::VertexClustering;
use crate::clustering::{ClusterAssignment, Embedding, Thresholds};
use crate::complex::{Simplex, SimplicialComplex};
use crate::error::{Error, Result};
use crate::synthetic::PointCloud;

/// A complex as stored on disk, optionally with vertex coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexFile {
    pub complex: SimplicialComplex,
    /// Coordinates indexed by vertex identifier.
    pub points: Option<Vec<Vec<f64>>>,
}

struct Dimensions<'a>(&'a SimplicialComplex);

impl Serialize for Dimensions<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let dims = self.0.dimension().map_or(0, |d| d + 1);
        let mut map = serializer.serialize_map(Some(dims))?;
        for p in 0..dims {
            map.serialize_entry(&p.to_string(), self.0.simplices(p))?;
        }
        map.end()
    }
}

#[derive(Serialize)]
struct ComplexOut<'a> {
    dimensions: Dimensions<'a>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    weights: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    points: Option<&'a [Vec<f64>]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ComplexIn {
    dimensions: BTreeMap<String, Vec<Vec<usize>>>,
    #[serde(default)]
    weights: BTreeMap<String, f64>,
    #[serde(default)]
    points: Option<Vec<Vec<f64>>>,
}

/// Serializes a complex. Only non-unit weights are written.
pub fn complex_to_json(complex: &SimplicialComplex, points: Option<&[Vec<f64>]>) -> Result<String> {
    let mut weights = BTreeMap::new();
    for p in 0..complex.dimension().map_or(0, |d| d + 1) {
        for (s, &w) in complex.simplices(p).iter().zip(complex.weights(p)) {
            if w != 1.0 {
                weights.insert(s.key(), w);
            }
        }
    }
    let out = ComplexOut {
        dimensions: Dimensions(complex),
        weights,
        points,
    };
    Ok(serde_json::to_string_pretty(&out)? + "\n")
}

/// Parses a complex file without reordering or checking it; call
/// [`SimplicialComplex::validate`] on the result.
pub fn complex_from_json(text: &str) -> Result<ComplexFile> {
    let raw: ComplexIn = serde_json::from_str(text)?;
    let mut levels: Vec<(usize, Vec<Vec<usize>>)> = Vec::new();
    for (key, simplices) in raw.dimensions {
        let p: usize = key.trim().parse().map_err(|_| {
            Error::Parse(format!(
                "dimension key {key:?} is not a non-negative integer"
            ))
        })?;
        levels.push((p, simplices));
    }
    let top = levels.iter().map(|(p, _)| p + 1).max().unwrap_or(0);
    let mut by_dim: Vec<Vec<Simplex>> = vec![Vec::new(); top];
    for (p, simplices) in levels {
        by_dim[p] = simplices.into_iter().map(Simplex::from_raw).collect();
    }
    while by_dim.last().is_some_and(|l| l.is_empty()) {
        by_dim.pop();
    }
    let mut weights: Vec<Vec<f64>> = by_dim.iter().map(|l| vec![1.0; l.len()]).collect();
    for (key, w) in raw.weights {
        let s = Simplex::parse_key(&key)?;
        let p = s.dimension();
        let idx = by_dim
            .get(p)
            .and_then(|l| l.iter().position(|t| *t == s))
            .ok_or_else(|| {
                Error::Parse(format!(
                    "weight given for {key:?}, which is not in the complex"
                ))
            })?;
        weights[p][idx] = w;
    }
    Ok(ComplexFile {
        complex: SimplicialComplex::from_parts(by_dim, weights),
        points: raw.points,
    })
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_complex(path: &Path) -> Result<ComplexFile> {
    complex_from_json(&read(path)?)
}

pub fn write_complex(
    path: &Path,
    complex: &SimplicialComplex,
    points: Option<&[Vec<f64>]>,
) -> Result<()> {
    write(path, &complex_to_json(complex, points)?)
}

fn push_row(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{v}");
    }
    out.push('\n');
}

/// One point per line, comma-separated, no header.
pub fn cloud_to_csv(cloud: &PointCloud) -> String {
    let mut out = String::new();
    for p in &cloud.points {
        push_row(&mut out, p);
    }
    out
}

pub fn cloud_from_csv(text: &str, seed: u64) -> Result<PointCloud> {
    let mut points = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|field| {
                field.trim().parse::<f64>().map_err(|_| {
                    Error::Parse(format!("line {}: {field:?} is not a number", line_no + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        points.push(row);
    }
    PointCloud::new(points, seed)
}

pub fn read_cloud(path: &Path) -> Result<PointCloud> {
    cloud_from_csv(&read(path)?, 0)
}

pub fn write_cloud(path: &Path, cloud: &PointCloud) -> Result<()> {
    write(path, &cloud_to_csv(cloud))
}

/// `index,vertices,psi_1,…` with the vertex list space-separated.
pub fn embedding_to_csv(complex: &SimplicialComplex, embedding: &Embedding) -> String {
    let mut out = String::from("index,vertices");
    for i in 1..=embedding.dim() {
        let _ = write!(out, ",psi_{i}");
    }
    out.push('\n');
    for (j, (s, psi)) in complex
        .simplices(embedding.degree)
        .iter()
        .zip(&embedding.points)
        .enumerate()
    {
        let verts: Vec<String> = s.vertices().iter().map(|v| v.to_string()).collect();
        let _ = write!(out, "{j},{}", verts.join(" "));
        for v in psi {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssignmentJson {
    pub degree: usize,
    pub clusters: Vec<Vec<usize>>,
    pub unclustered: Vec<usize>,
    pub directions: Vec<Vec<f64>>,
    pub thresholds: Thresholds,
}

impl From<&ClusterAssignment> for AssignmentJson {
    fn from(a: &ClusterAssignment) -> Self {
        AssignmentJson {
            degree: a.degree,
            clusters: a.clusters(),
            unclustered: a.unclustered(),
            directions: a.directions.clone(),
            thresholds: a.thresholds,
        }
    }
}

pub fn assignment_to_json(assignment: &ClusterAssignment) -> Result<String> {
    Ok(serde_json::to_string_pretty(&AssignmentJson::from(assignment))? + "\n")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexClustersJson {
    pub k: usize,
    pub n_eigenvectors: usize,
    pub seed: u64,
    /// Vertex identifiers per cluster.
    pub clusters: Vec<Vec<usize>>,
    pub inertia: f64,
}

pub fn vertex_clusters_to_json(
    complex: &SimplicialComplex,
    clustering: &VertexClustering,
    n_eigenvectors: usize,
    seed: u64,
) -> Result<String> {
    let ids: Vec<usize> = complex
        .simplices(0)
        .iter()
        .map(|s| s.vertices()[0])
        .collect();
    let out = VertexClustersJson {
        k: clustering.k,
        n_eigenvectors,
        seed,
        clusters: clustering
            .clusters()
            .iter()
            .map(|c| c.iter().map(|&i| ids[i]).collect())
            .collect(),
        inertia: clustering.inertia,
    };
    Ok(serde_json::to_string_pretty(&out)? + "\n")
}

//! Point-cloud samplers, the flat-torus triangulation and Vietoris-Rips
//! complexes.
//!
//! Radial noise of amplitude `a` means: a point at distance `r` from the
//! centre of the shape it was drawn from is moved to distance `r + U(-a, a)`
//! along the same ray.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::complex::{Simplex, SimplicialComplex};
use crate::error::{Error, Result};
use crate::spectral::betti_numbers;

/// Points in ℝ^d together with the seed that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Vec<f64>>,
    pub seed: u64,
}

impl PointCloud {
    pub fn new(points: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        if let Some(d) = points.first().map(Vec::len) {
            if let Some(i) = points.iter().position(|p| p.len() != d) {
                return Err(Error::InvalidParameter(format!(
                    "point {i} has {} coordinates, expected {d}",
                    points[i].len()
                )));
            }
        }
        if points.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(
                "point coordinates must be finite".into(),
            ));
        }
        Ok(PointCloud { points, seed })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Ambient dimension, zero for an empty cloud.
    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn check_non_negative(name: &str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be non-negative, got {value}"
        )))
    }
}

fn radial_noise(rng: &mut ChaCha8Rng, amplitude: f64) -> f64 {
    if amplitude > 0.0 {
        rng.random_range(-amplitude..=amplitude)
    } else {
        0.0
    }
}

fn unit_sphere_direction(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-12 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

fn sphere_points(
    rng: &mut ChaCha8Rng,
    n: usize,
    center: [f64; 3],
    radius: f64,
    noise: f64,
) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let d = unit_sphere_direction(rng);
            let r = radius + radial_noise(rng, noise);
            (0..3).map(|i| center[i] + r * d[i]).collect()
        })
        .collect()
}

/// Points on a circle of the given radius in the xz-plane.
///
/// Angles are stratified: the `k`-th point is uniform on the `k`-th of `n`
/// equal arcs. Each point is still uniformly distributed, but small samples
/// cannot leave large gaps that would break the circle apart in a Rips
/// complex.
fn xz_circle_points(
    rng: &mut ChaCha8Rng,
    n: usize,
    center: [f64; 3],
    radius: f64,
    noise: f64,
) -> Vec<Vec<f64>> {
    let arc = 2.0 * PI / n.max(1) as f64;
    (0..n)
        .map(|k| {
            let t = arc * (k as f64 + rng.random::<f64>());
            let r = radius + radial_noise(rng, noise);
            vec![center[0] + r * t.cos(), center[1], center[2] + r * t.sin()]
        })
        .collect()
}

/// Centres of the two unit circles of [`sample_wedge`].
pub const WEDGE_CIRCLE_CENTERS: [[f64; 3]; 2] = [[0.0, 0.0, 2.0], [0.0, 0.0, -2.0]];

/// Centres of the two unit circles of [`sample_chained_wedge`].
pub const CHAINED_CIRCLE_CENTERS: [[f64; 3]; 2] = [[0.0, 0.0, 2.0], [0.0, 0.0, 4.0]];

/// Unit sphere at the origin with two unit circles attached at the poles
/// `(0, 0, ±1)`, both circles lying in the xz-plane.
pub fn sample_wedge(n_sphere: usize, n_circle: usize, noise: f64, seed: u64) -> Result<PointCloud> {
    check_non_negative("noise amplitude", noise)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = sphere_points(&mut rng, n_sphere, [0.0; 3], 1.0, noise);
    for center in WEDGE_CIRCLE_CENTERS {
        points.extend(xz_circle_points(&mut rng, n_circle, center, 1.0, noise));
    }
    Ok(PointCloud { points, seed })
}

/// Like [`sample_wedge`], but the second circle hangs off the top of the
/// first one (touching it at `(0, 0, 3)`) instead of off the sphere.
pub fn sample_chained_wedge(
    n_sphere: usize,
    n_circle: usize,
    noise: f64,
    seed: u64,
) -> Result<PointCloud> {
    check_non_negative("noise amplitude", noise)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = sphere_points(&mut rng, n_sphere, [0.0; 3], 1.0, noise);
    for center in CHAINED_CIRCLE_CENTERS {
        points.extend(xz_circle_points(&mut rng, n_circle, center, 1.0, noise));
    }
    Ok(PointCloud { points, seed })
}

/// The three punctures used in the punctured-plane experiment.
pub const PUNCTURES: [[f64; 2]; 3] = [[0.5, 0.8], [0.4, 0.2], [0.8, 0.3]];

/// Uniform points on the unit square with open disks removed, by rejection.
pub fn sample_punctured_square(
    n: usize,
    holes: &[[f64; 2]],
    hole_radius: f64,
    seed: u64,
) -> Result<PointCloud> {
    check_non_negative("hole radius", hole_radius)?;
    if let Some(h) = holes
        .iter()
        .find(|h| !(0.0..=1.0).contains(&h[0]) || !(0.0..=1.0).contains(&h[1]))
    {
        return Err(Error::InvalidParameter(format!(
            "hole centre ({}, {}) lies outside the unit square",
            h[0], h[1]
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_attempts = 100 * n + 10_000;
    let mut points = Vec::with_capacity(n);
    let mut attempts = 0;
    while points.len() < n {
        if attempts == max_attempts {
            return Err(Error::SamplingExhausted {
                attempts,
                accepted: points.len(),
                requested: n,
            });
        }
        attempts += 1;
        let p = [rng.random::<f64>(), rng.random::<f64>()];
        if holes.iter().all(|h| distance(&p, h) >= hole_radius) {
            points.push(p.to_vec());
        }
    }
    Ok(PointCloud { points, seed })
}

/// Torus `((R + r sin 2πφ) cos 2πθ, (R + r sin 2πφ) sin 2πθ, r cos 2πφ)` for
/// uniform `(φ, θ)`, with independent uniform noise on both radii.
pub fn sample_torus(n: usize, major: f64, minor: f64, noise: f64, seed: u64) -> Result<PointCloud> {
    check_non_negative("noise amplitude", noise)?;
    if !(major > minor && minor > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "torus radii need R > r > 0, got R = {major}, r = {minor}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n)
        .map(|_| {
            let phi = 2.0 * PI * rng.random::<f64>();
            let theta = 2.0 * PI * rng.random::<f64>();
            let big = major + radial_noise(&mut rng, noise);
            let small = minor + radial_noise(&mut rng, noise);
            let ring = big + small * phi.sin();
            vec![ring * theta.cos(), ring * theta.sin(), small * phi.cos()]
        })
        .collect();
    Ok(PointCloud { points, seed })
}

/// Centres used in the two-spheres experiment.
pub const TWO_SPHERE_CENTERS: [[f64; 3]; 2] = [[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]];

pub fn sample_two_spheres(
    n_each: usize,
    centers: &[[f64; 3]],
    radius: f64,
    noise: f64,
    seed: u64,
) -> Result<PointCloud> {
    check_non_negative("noise amplitude", noise)?;
    check_non_negative("radius", radius)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n_each * centers.len());
    for &c in centers {
        points.extend(sphere_points(&mut rng, n_each, c, radius, noise));
    }
    Ok(PointCloud { points, seed })
}

/// Grid cells of the flat torus whose diagonal runs the other way in the
/// asymmetric triangulation, as `(row, column)`.
pub const FLIPPED_CELLS: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

/// Vertex at grid position `(row, column)` of the 3×3 flat torus.
pub fn torus_vertex(row: usize, column: usize) -> usize {
    3 * (row % 3) + column % 3
}

/// Triangulation of the flat torus on a 3×3 grid with opposite sides
/// identified: 9 vertices, 27 edges, 18 triangles.
///
/// The symmetric version has every diagonal from `(i, j)` to `(i+1, j+1)`;
/// the asymmetric one flips the diagonals of [`FLIPPED_CELLS`].
pub fn flat_torus_triangulation(symmetric: bool) -> SimplicialComplex {
    let mut triangles = Vec::with_capacity(18);
    for i in 0..3 {
        for j in 0..3 {
            let a = torus_vertex(i, j);
            let b = torus_vertex(i + 1, j);
            let c = torus_vertex(i, j + 1);
            let d = torus_vertex(i + 1, j + 1);
            if symmetric || !FLIPPED_CELLS.contains(&(i, j)) {
                triangles.push(vec![a, b, d]);
                triangles.push(vec![a, c, d]);
            } else {
                triangles.push(vec![a, b, c]);
                triangles.push(vec![b, c, d]);
            }
        }
    }
    SimplicialComplex::from_simplices(triangles).expect("grid triangles have distinct vertices")
}

/// Direction class of a flat-torus edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeFamily {
    /// Same row.
    Horizontal,
    /// Same column.
    Vertical,
    /// From `(i, j)` to `(i+1, j+1)`.
    Diagonal,
    /// From `(i+1, j)` to `(i, j+1)`.
    AntiDiagonal,
}

/// Classifies an edge of [`flat_torus_triangulation`].
pub fn torus_edge_family(edge: &Simplex) -> Option<EdgeFamily> {
    let [u, v] = edge.vertices() else {
        return None;
    };
    let (ru, cu) = (u / 3, u % 3);
    let (rv, cv) = (v / 3, v % 3);
    let dr = (rv + 3 - ru) % 3;
    let dc = (cv + 3 - cu) % 3;
    match (dr, dc) {
        (0, _) => Some(EdgeFamily::Horizontal),
        (_, 0) => Some(EdgeFamily::Vertical),
        (1, 1) | (2, 2) => Some(EdgeFamily::Diagonal),
        _ => Some(EdgeFamily::AntiDiagonal),
    }
}

/// Default upper bound on the simplex dimension of a Vietoris-Rips build.
pub const DEFAULT_MAX_DIM_LIMIT: usize = 3;

/// Vietoris-Rips complex up to dimension `max_dim`, refusing
/// `max_dim > 3`.
pub fn build_vietoris_rips(
    cloud: &PointCloud,
    scale: f64,
    max_dim: usize,
) -> Result<SimplicialComplex> {
    build_vietoris_rips_with_limit(cloud, scale, max_dim, DEFAULT_MAX_DIM_LIMIT)
}

/// Vietoris-Rips complex: point `i` is vertex `i`, `{i, j}` is an edge when
/// the points are at distance at most `scale`, and every clique of at most
/// `max_dim + 1` vertices is a simplex.
pub fn build_vietoris_rips_with_limit(
    cloud: &PointCloud,
    scale: f64,
    max_dim: usize,
    limit: usize,
) -> Result<SimplicialComplex> {
    check_non_negative("scale", scale)?;
    if max_dim > limit {
        return Err(Error::InvalidParameter(format!(
            "max_dim {max_dim} exceeds the limit of {limit}"
        )));
    }
    let n = cloud.len();
    let mut by_dim: Vec<Vec<Simplex>> = vec![Vec::new(); max_dim + 1];
    if n == 0 {
        return Ok(SimplicialComplex::new());
    }
    by_dim[0] = (0..n).map(|v| Simplex::from_sorted(vec![v])).collect();
    if max_dim == 0 {
        return Ok(SimplicialComplex::from_unsorted_closed(by_dim));
    }
    // neighbours with a larger index, ascending
    let upper: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (i + 1..n)
                .filter(|&j| distance(&cloud.points[i], &cloud.points[j]) <= scale)
                .collect()
        })
        .collect();
    let mut clique = Vec::with_capacity(max_dim + 1);
    for v in 0..n {
        clique.push(v);
        expand(&upper, &mut clique, &upper[v], max_dim, &mut by_dim);
        clique.pop();
    }
    Ok(SimplicialComplex::from_unsorted_closed(by_dim))
}

/// Depth-first clique enumeration; candidates are the common upper
/// neighbours of the current clique, so every clique is produced once and
/// in lexicographic order.
fn expand(
    upper: &[Vec<usize>],
    clique: &mut Vec<usize>,
    candidates: &[usize],
    max_dim: usize,
    out: &mut [Vec<Simplex>],
) {
    for (k, &u) in candidates.iter().enumerate() {
        clique.push(u);
        out[clique.len() - 1].push(Simplex::from_sorted(clique.clone()));
        if clique.len() <= max_dim {
            let next = intersect(&candidates[k + 1..], &upper[u]);
            if !next.is_empty() {
                expand(upper, clique, &next, max_dim, out);
            }
        }
        clique.pop();
    }
}

fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Betti numbers `β_0..=β_max_dim` of the Rips complex at one scale.
///
/// The complex is built one dimension higher than reported so that the top
/// Betti number accounts for the simplices that fill in top-dimensional
/// cycles.
pub fn rips_betti(
    cloud: &PointCloud,
    scale: f64,
    max_dim: usize,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let complex = build_vietoris_rips_with_limit(cloud, scale, max_dim + 1, max_dim + 1)?;
    let mut betti = betti_numbers(&complex)?;
    betti.resize(max_dim + 1, 0);
    let mut counts = complex.counts();
    counts.resize(max_dim + 1, 0);
    counts.truncate(max_dim + 1);
    Ok((counts, betti))
}

/// One row of a Betti scan.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub scale: f64,
    /// `|K_p|` for `p = 0..=max_dim`.
    pub counts: Vec<usize>,
    pub betti: Vec<usize>,
}

/// Betti numbers of the Rips complex at each of the given scales.
pub fn betti_scan(cloud: &PointCloud, scales: &[f64], max_dim: usize) -> Result<Vec<ScanRow>> {
    scales
        .iter()
        .map(|&scale| {
            let (counts, betti) = rips_betti(cloud, scale, max_dim)?;
            log::debug!("scale {scale}: counts {counts:?}, betti {betti:?}");
            Ok(ScanRow {
                scale,
                counts,
                betti,
            })
        })
        .collect()
}

/// Maximal runs of consecutive rows that agree on `β_degree`, as
/// `(start, end_exclusive)` index ranges.
pub fn stable_runs(rows: &[ScanRow], degree: usize) -> Vec<(usize, usize)> {
    let value = |r: &ScanRow| r.betti.get(degree).copied().unwrap_or(0);
    let mut runs = Vec::new();
    let mut start = 0;
    for i in 1..=rows.len() {
        if i == rows.len() || value(&rows[i]) != value(&rows[start]) {
            if i > start {
                runs.push((start, i));
            }
            start = i;
        }
    }
    runs
}

/// Middle scale of the longest run of consecutive rows whose leading Betti
/// numbers equal `target` (earliest run on ties).
pub fn select_scale(rows: &[ScanRow], target: &[usize]) -> Option<f64> {
    let matches = |r: &ScanRow| {
        target
            .iter()
            .enumerate()
            .all(|(p, &b)| r.betti.get(p).copied().unwrap_or(0) == b)
    };
    let mut best: Option<(usize, usize)> = None;
    let mut i = 0;
    while i < rows.len() {
        if !matches(&rows[i]) {
            i += 1;
            continue;
        }
        let start = i;
        while i < rows.len() && matches(&rows[i]) {
            i += 1;
        }
        if best.is_none_or(|(s, e)| i - start > e - s) {
            best = Some((start, i));
        }
    }
    best.map(|(s, e)| rows[s + (e - s - 1) / 2].scale)
}

/// `count` evenly spaced values from `start` to `end` inclusive.
pub fn linspace(start: f64, end: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|i| start + (end - start) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

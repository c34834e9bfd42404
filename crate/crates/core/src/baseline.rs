//! Classical graph spectral clustering of vertices, used as a point of
//! comparison for the harmonic method.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::complex::SimplicialComplex;
use crate::error::{Error, Result};
use crate::laplacian::graph_laplacian;
use crate::spectral::{low_spectrum, SolverOptions};

/// Number of k-means restarts.
pub const KMEANS_RESTARTS: usize = 100;

const LLOYD_ITERATIONS: usize = 300;

/// Vertex clusters from graph spectral clustering.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VertexClustering {
    /// Cluster per vertex, in vertex basis order. Labels are numbered by
    /// first appearance.
    pub labels: Vec<usize>,
    pub k: usize,
    /// Spectral coordinates per vertex.
    pub embedding: Vec<Vec<f64>>,
    pub inertia: f64,
}

impl VertexClustering {
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (v, &l) in self.labels.iter().enumerate() {
            out[l].push(v);
        }
        out
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Spectral coordinates: the first `n` eigenvectors of `D - A` past the
/// constant one.
///
/// On a disconnected graph the kernel has one dimension per component. Only
/// the constant direction is dropped; the remaining kernel directions
/// (component indicators with the constant projected out) come first,
/// followed by eigenvectors of non-zero eigenvalues.
pub fn spectral_coordinates(
    complex: &SimplicialComplex,
    n: usize,
    options: &SolverOptions,
) -> Result<Vec<Vec<f64>>> {
    let vertices = complex.count(0);
    let (components, of) = complex.components();
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(n);

    // orthonormal kernel basis starting with the constant vector
    let mut kernel: Vec<Vec<f64>> = Vec::with_capacity(components);
    for c in 0..components {
        let mut v: Vec<f64> = of.iter().map(|&x| if x == c { 1.0 } else { 0.0 }).collect();
        if c == 0 {
            v = vec![1.0; vertices];
        }
        for q in &kernel {
            let d: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            v.iter_mut().for_each(|x| *x /= norm);
            kernel.push(v);
        }
    }
    columns.extend(kernel.into_iter().skip(1).take(n));

    let missing = n - columns.len();
    if missing > 0 {
        let l = graph_laplacian(complex, false)?;
        let report = low_spectrum(&l, missing.min(vertices), true, options)?;
        columns.extend(report.eigenvectors);
    }
    Ok((0..vertices)
        .map(|v| columns.iter().map(|c| c[v]).collect())
        .collect())
}

/// k-means++ seeding followed by Lloyd iterations; returns labels and
/// inertia.
fn kmeans_once(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> (Vec<usize>, f64) {
    let n = points.len();
    let mut centers: Vec<Vec<f64>> = vec![points[rng.random_range(0..n)].clone()];
    let mut nearest: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        let next = if total <= 0.0 {
            rng.random_range(0..n)
        } else {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in nearest.iter().enumerate() {
                if target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            pick
        };
        centers.push(points[next].clone());
        for (d, p) in nearest.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, centers.last().unwrap()));
        }
    }

    let dim = points[0].len();
    let mut labels = vec![usize::MAX; n];
    for _ in 0..LLOYD_ITERATIONS {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let d = sq_dist(p, center);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            sums[l].iter_mut().zip(p).for_each(|(a, b)| *a += b);
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            } else {
                // re-seed an empty cluster at the point worst served
                let far = (0..n)
                    .max_by(|&a, &b| {
                        sq_dist(&points[a], &centers[labels[a]])
                            .total_cmp(&sq_dist(&points[b], &centers[labels[b]]))
                    })
                    .unwrap();
                centers[c] = points[far].clone();
            }
        }
    }
    let inertia = points
        .iter()
        .zip(&labels)
        .map(|(p, &l)| sq_dist(p, &centers[l]))
        .sum();
    (labels, inertia)
}

/// Renumbers labels in order of first appearance.
fn relabel(labels: &[usize]) -> Vec<usize> {
    let mut map: Vec<Option<usize>> = vec![None; labels.iter().max().map_or(0, |m| m + 1)];
    let mut next = 0;
    labels
        .iter()
        .map(|&l| {
            *map[l].get_or_insert_with(|| {
                next += 1;
                next - 1
            })
        })
        .collect()
}

/// k-means with `restarts` k-means++ initializations from fixed sub-seeds;
/// the lowest inertia wins, earlier sub-seeds on ties.
pub fn kmeans(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<(Vec<usize>, f64)> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if points.len() < k {
        return Err(Error::InvalidParameter(format!(
            "cannot form {k} clusters from {} points",
            points.len()
        )));
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    for r in 0..restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
        let (labels, inertia) = kmeans_once(points, k, &mut rng);
        if best.as_ref().is_none_or(|(_, b)| inertia < *b) {
            best = Some((labels, inertia));
        }
    }
    let (labels, inertia) = best.expect("at least one restart");
    Ok((relabel(&labels), inertia))
}

/// Embeds vertices with `n_eigenvectors` graph Laplacian eigenvectors and
/// clusters them with k-means.
pub fn graph_spectral_clustering(
    complex: &SimplicialComplex,
    n_eigenvectors: usize,
    k: usize,
    seed: u64,
) -> Result<VertexClustering> {
    graph_spectral_clustering_with(complex, n_eigenvectors, k, seed, &SolverOptions::default())
}

pub fn graph_spectral_clustering_with(
    complex: &SimplicialComplex,
    n_eigenvectors: usize,
    k: usize,
    seed: u64,
    options: &SolverOptions,
) -> Result<VertexClustering> {
    let vertices = complex.count(0);
    if k == 0 || n_eigenvectors == 0 {
        return Err(Error::InvalidParameter(
            "k and the eigenvector count must be at least 1".into(),
        ));
    }
    if k == 1 {
        return Ok(VertexClustering {
            labels: vec![0; vertices],
            k,
            embedding: vec![Vec::new(); vertices],
            inertia: 0.0,
        });
    }
    if n_eigenvectors >= vertices {
        return Err(Error::InvalidParameter(format!(
            "{n_eigenvectors} eigenvectors requested but the graph has {vertices} vertices"
        )));
    }
    let embedding = spectral_coordinates(complex, n_eigenvectors, options)?;
    let (labels, inertia) = kmeans(&embedding, k, seed, KMEANS_RESTARTS)?;
    Ok(VertexClustering {
        labels,
        k,
        embedding,
        inertia,
    })
}

/// Pulls vertex labels back to edges: an edge whose endpoints agree gets
/// their label, a mixed edge gets `None`.
pub fn pullback_to_edges(
    complex: &SimplicialComplex,
    vertex_labels: &[usize],
) -> Vec<Option<usize>> {
    complex
        .simplices(1)
        .iter()
        .map(|e| {
            let ends: Vec<usize> = e
                .vertices()
                .iter()
                .map(|v| {
                    let idx = complex
                        .index_of(&crate::complex::Simplex::new(vec![*v]).expect("single vertex"))
                        .expect("edge endpoints are vertices of the complex");
                    vertex_labels[idx]
                })
                .collect();
            (ends[0] == ends[1]).then_some(ends[0])
        })
        .collect()
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, k - 1);
            out.push(q);
        }
    }
    out
}

/// Fraction of positions labelled in `reference` whose label, after the best
/// relabelling of `reference` onto `other`, equals the label in `other`.
/// Positions unlabelled in `other` count as disagreements.
pub fn best_match_agreement(reference: &[Option<usize>], other: &[Option<usize>]) -> f64 {
    let k = reference
        .iter()
        .chain(other)
        .flatten()
        .max()
        .map_or(0, |m| m + 1);
    let labelled: Vec<usize> = (0..reference.len())
        .filter(|&i| reference[i].is_some())
        .collect();
    if labelled.is_empty() {
        return 1.0;
    }
    assert!(
        k <= 8,
        "agreement by brute-force matching supports at most 8 labels"
    );
    let mut best = 0;
    for perm in permutations(k) {
        let hits = labelled
            .iter()
            .filter(|&&i| other[i] == reference[i].map(|l| perm[l]))
            .count();
        best = best.max(hits);
    }
    best as f64 / labelled.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complex(edges: &[[usize; 2]]) -> SimplicialComplex {
        SimplicialComplex::from_simplices(edges.iter().map(|e| e.to_vec())).unwrap()
    }

    #[test]
    fn bridged_triangles_split_at_the_bridge() {
        let k = complex(&[[0, 1], [0, 2], [1, 2], [2, 3], [3, 4], [3, 5], [4, 5]]);
        let c = graph_spectral_clustering(&k, 1, 2, 0).unwrap();
        assert_eq!(c.labels, vec![0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn path_splits_the_ends() {
        let k = complex(&[[0, 1], [1, 2]]);
        let c = graph_spectral_clustering(&k, 1, 2, 0).unwrap();
        assert_ne!(c.labels[0], c.labels[2]);
        assert!(c.labels[1] == c.labels[0] || c.labels[1] == c.labels[2]);
    }

    #[test]
    fn single_cluster() {
        let k = complex(&[[0, 1], [1, 2]]);
        let c = graph_spectral_clustering(&k, 1, 1, 0).unwrap();
        assert_eq!(c.labels, vec![0, 0, 0]);
    }

    #[test]
    fn components_are_recovered() {
        let k = complex(&[[0, 1], [1, 2], [3, 4], [5, 6], [6, 7], [7, 5]]);
        let c = graph_spectral_clustering(&k, 2, 3, 4).unwrap();
        assert_eq!(c.labels, vec![0, 0, 0, 1, 1, 2, 2, 2]);
    }

    #[test]
    fn clustering_is_deterministic() {
        let k = complex(&[[0, 1], [1, 2], [2, 3], [3, 4], [4, 5], [5, 0], [0, 3]]);
        let a = graph_spectral_clustering(&k, 2, 3, 9).unwrap();
        let b = graph_spectral_clustering(&k, 2, 3, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn agreement_uses_the_best_relabelling() {
        let a = [Some(0), Some(0), Some(1), None];
        let b = [Some(1), Some(1), Some(0), Some(0)];
        assert_eq!(best_match_agreement(&a, &b), 1.0);
        let c = [Some(1), None, Some(1), Some(0)];
        assert!((best_match_agreement(&a, &c) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn pullback_marks_mixed_edges() {
        let k = complex(&[[0, 1], [1, 2]]);
        assert_eq!(pullback_to_edges(&k, &[0, 0, 1]), vec![Some(0), None]);
    }
}

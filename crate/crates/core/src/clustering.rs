//! Harmonic embedding of simplices and clustering by line membership.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::complex::SimplicialComplex;
use crate::error::{Error, Result};
use crate::spectral::HarmonicBasis;

/// Image of the `p`-simplices under the harmonic embedding: one point in
/// `ℝ^{β_p}` per simplex, in basis order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Embedding {
    pub degree: usize,
    pub points: Vec<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `ψ(σ_j) = (⟨σ_j, h_1⟩_p, …)`, i.e. `w(σ_j)² h_i[j]` per coordinate.
pub fn harmonic_embedding(complex: &SimplicialComplex, basis: &HarmonicBasis) -> Result<Embedding> {
    let p = basis.degree;
    if basis.is_empty() {
        return Err(Error::NoHarmonics { degree: p });
    }
    let n = complex.count(p);
    if basis.dim() != n {
        return Err(Error::InvalidParameter(format!(
            "harmonic basis has {} coefficients but the complex has {n} simplices of dimension {p}",
            basis.dim()
        )));
    }
    let weights = complex.weights(p);
    let points = (0..n)
        .map(|j| {
            let g = weights[j] * weights[j];
            basis.vectors.iter().map(|h| g * h[j]).collect()
        })
        .collect();
    Ok(Embedding { degree: p, points })
}

impl Embedding {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Dimension of the embedding space, `β_p`.
    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    pub fn norms(&self) -> Vec<f64> {
        self.points.iter().map(|p| norm(p)).collect()
    }

    pub fn median_norm(&self) -> f64 {
        let mut norms = self.norms();
        if norms.is_empty() {
            return 0.0;
        }
        norms.sort_by(f64::total_cmp);
        let m = norms.len();
        if m % 2 == 1 {
            norms[m / 2]
        } else {
            0.5 * (norms[m / 2 - 1] + norms[m / 2])
        }
    }

    /// Default floor below which points count as sitting at the origin:
    /// 2% of the median norm.
    pub fn default_min_norm(&self) -> f64 {
        0.02 * self.median_norm()
    }

    /// Applies a linear map (row-major `dim × dim`) to every point.
    pub fn transformed(&self, matrix: &[Vec<f64>]) -> Embedding {
        Embedding {
            degree: self.degree,
            points: self
                .points
                .iter()
                .map(|p| matrix.iter().map(|row| dot(row, p)).collect())
                .collect(),
        }
    }
}

/// Flips `v` so that its largest-magnitude entry (first on ties) is
/// positive; gives each line a canonical unit representative.
fn canonical_sign(v: &mut [f64]) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() + 1e-12 {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Lines through the origin, each given by a unit vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubspaceSet {
    pub directions: Vec<Vec<f64>>,
    /// Points assigned to each line during detection (empty for manual
    /// directions).
    pub inlier_counts: Vec<usize>,
    /// Sum of squared norms of those points.
    pub inlier_mass: Vec<f64>,
    /// Largest angle in radians between a line and one of its inliers.
    pub angular_spread: Vec<f64>,
}

impl SubspaceSet {
    /// Wraps user-supplied directions, normalizing them.
    pub fn from_directions(directions: Vec<Vec<f64>>) -> Result<Self> {
        let dim = directions.first().map_or(0, Vec::len);
        let mut out = Vec::with_capacity(directions.len());
        for d in directions {
            let n = norm(&d);
            if d.len() != dim || !n.is_finite() || n <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "direction {d:?} must be a non-zero vector of length {dim}"
                )));
            }
            let mut d: Vec<f64> = d.iter().map(|x| x / n).collect();
            canonical_sign(&mut d);
            out.push(d);
        }
        Ok(SubspaceSet {
            directions: out,
            inlier_counts: Vec::new(),
            inlier_mass: Vec::new(),
            angular_spread: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// Smallest angle in radians between two of the lines.
    pub fn min_separation(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                let c = dot(&self.directions[i], &self.directions[j]).abs().min(1.0);
                let a = c.acos();
                best = Some(best.map_or(a, |b| b.min(a)));
            }
        }
        best
    }
}

#[derive(Clone, Debug)]
pub struct DetectionOptions {
    /// Number of lines to extract; without it, extraction stops once the
    /// unexplained mass falls below `residual_mass`.
    pub k_hint: Option<usize>,
    /// Points closer to the origin are ignored; `None` means
    /// [`Embedding::default_min_norm`].
    pub min_norm: Option<f64>,
    /// Angular radius of a line's neighbourhood, in radians.
    pub angular_tolerance: f64,
    /// Fraction of the total mass that may stay unexplained.
    pub residual_mass: f64,
    /// Candidate directions are drawn from at most this many points.
    pub max_candidates: usize,
    /// Rounds of principal-direction refinement per line.
    pub refinements: usize,
}

impl Default for DetectionOptions {
    fn default() -> Self {
        DetectionOptions {
            k_hint: None,
            min_norm: None,
            angular_tolerance: 0.98f64.acos(),
            residual_mass: 0.05,
            max_candidates: 2000,
            refinements: 5,
        }
    }
}

/// Principal direction of the selected unit vectors weighted by mass, i.e.
/// the top eigenvector of `Σ ψ ψᵀ` over the original points.
fn principal_direction(
    units: &[Vec<f64>],
    mass: &[f64],
    selected: &[usize],
    dim: usize,
) -> Vec<f64> {
    let mut m = DMatrix::zeros(dim, dim);
    for &i in selected {
        let u = &units[i];
        for a in 0..dim {
            for b in 0..dim {
                m[(a, b)] += mass[i] * u[a] * u[b];
            }
        }
    }
    let eig = SymmetricEigen::new(m);
    let top = eig.eigenvalues.imax();
    let mut v: Vec<f64> = eig.eigenvectors.column(top).iter().copied().collect();
    canonical_sign(&mut v);
    v
}

/// Finds lines through the origin that many embedded points lie close to.
///
/// Points above the norm floor are projected to the unit sphere with
/// antipodes identified. Lines are extracted greedily: the candidate whose
/// angular neighbourhood carries the most squared-norm mass wins, is refined
/// to the principal direction of its neighbourhood, and its points are
/// removed before the next round.
pub fn detect_subspaces(embedding: &Embedding, options: &DetectionOptions) -> Result<SubspaceSet> {
    if embedding.is_empty() {
        return Err(Error::InvalidParameter(
            "cannot detect subspaces in an empty embedding".into(),
        ));
    }
    if !(options.angular_tolerance > 0.0 && options.angular_tolerance < std::f64::consts::FRAC_PI_2)
    {
        return Err(Error::InvalidParameter(format!(
            "angular tolerance must lie in (0, π/2), got {}",
            options.angular_tolerance
        )));
    }
    let dim = embedding.dim();
    let min_norm = options
        .min_norm
        .unwrap_or_else(|| embedding.default_min_norm());
    let cos_tol = options.angular_tolerance.cos();

    let mut units: Vec<Vec<f64>> = Vec::new();
    let mut mass: Vec<f64> = Vec::new();
    for p in &embedding.points {
        let n = norm(p);
        if n >= min_norm && n > 0.0 {
            units.push(p.iter().map(|x| x / n).collect());
            mass.push(n * n);
        }
    }
    if units.is_empty() {
        return Err(Error::NoPointsAboveNorm { min_norm });
    }
    let total: f64 = mass.iter().sum();
    let stride = units.len().div_ceil(options.max_candidates.max(1));
    let candidates: Vec<usize> = (0..units.len()).step_by(stride).collect();

    let mut remaining = vec![true; units.len()];
    let mut left = total;
    let mut found: Vec<(Vec<f64>, usize, f64, f64)> = Vec::new();
    loop {
        match options.k_hint {
            Some(k) if found.len() >= k => break,
            None if left < options.residual_mass * total => break,
            _ => {}
        }
        let inliers_of = |d: &[f64]| -> Vec<usize> {
            (0..units.len())
                .filter(|&i| remaining[i] && dot(d, &units[i]).abs() >= cos_tol)
                .collect()
        };
        let mut best: Option<(f64, usize)> = None;
        for &c in &candidates {
            if !remaining[c] {
                continue;
            }
            let score: f64 = inliers_of(&units[c]).iter().map(|&i| mass[i]).sum();
            if best.is_none_or(|(s, _)| score > s) {
                best = Some((score, c));
            }
        }
        let Some((_, seed)) = best else { break };

        let mut direction = units[seed].clone();
        let mut inliers = inliers_of(&direction);
        for _ in 0..options.refinements {
            let refined = principal_direction(&units, &mass, &inliers, dim);
            let next = inliers_of(&refined);
            if next.is_empty() {
                break;
            }
            direction = refined;
            if next == inliers {
                break;
            }
            inliers = next;
        }
        canonical_sign(&mut direction);
        let inlier_mass: f64 = inliers.iter().map(|&i| mass[i]).sum();
        let spread = inliers
            .iter()
            .map(|&i| dot(&direction, &units[i]).abs().min(1.0).acos())
            .fold(0.0, f64::max);
        for &i in &inliers {
            remaining[i] = false;
        }
        left -= inlier_mass;
        found.push((direction, inliers.len(), inlier_mass, spread));
        if remaining.iter().all(|r| !r) {
            break;
        }
    }

    found.sort_by(|a, b| {
        b.1.cmp(&a.1).then_with(|| {
            a.0.iter()
                .zip(&b.0)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    Ok(SubspaceSet {
        directions: found.iter().map(|f| f.0.clone()).collect(),
        inlier_counts: found.iter().map(|f| f.1).collect(),
        inlier_mass: found.iter().map(|f| f.2).collect(),
        angular_spread: found.iter().map(|f| f.3).collect(),
    })
}

/// Acceptance and rejection thresholds for cluster membership.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub accept: f64,
    pub reject: f64,
    pub min_norm: f64,
}

impl Thresholds {
    pub const DEFAULT_ACCEPT: f64 = 0.98;
    pub const DEFAULT_REJECT: f64 = 0.02;

    pub fn new(accept: f64, reject: f64, min_norm: f64) -> Result<Self> {
        if !(0.0 < reject && reject < accept && accept < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "thresholds need 0 < reject < accept < 1, got accept = {accept}, reject = {reject}"
            )));
        }
        if !min_norm.is_finite() || min_norm < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "min_norm must be non-negative, got {min_norm}"
            )));
        }
        Ok(Thresholds {
            accept,
            reject,
            min_norm,
        })
    }

    /// Default acceptance and rejection with the embedding's default floor.
    pub fn for_embedding(embedding: &Embedding) -> Self {
        Thresholds {
            accept: Self::DEFAULT_ACCEPT,
            reject: Self::DEFAULT_REJECT,
            min_norm: embedding.default_min_norm(),
        }
    }
}

/// Cluster label per simplex; `None` marks unclustered simplices.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterAssignment {
    pub degree: usize,
    pub labels: Vec<Option<usize>>,
    pub directions: Vec<Vec<f64>>,
    pub thresholds: Thresholds,
}

impl ClusterAssignment {
    pub fn k(&self) -> usize {
        self.directions.len()
    }

    /// Simplex indices per cluster, ascending.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k()];
        for (i, l) in self.labels.iter().enumerate() {
            if let Some(c) = l {
                out[*c].push(i);
            }
        }
        out
    }

    pub fn unclustered(&self) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&i| self.labels[i].is_none())
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.clusters().iter().map(Vec::len).collect()
    }
}

/// Label of one normalized point: the unique line it projects onto with
/// norm at least `accept` while its component off that line projects onto
/// every other line with norm below `reject`.
///
/// For orthogonal lines the off-line component has the same projection on
/// the other lines as the point itself, so this is the plain "projects onto
/// all other lines with norm below `reject`" rule; unlike that rule it also
/// accepts points lying exactly on one of several non-orthogonal lines.
fn classify(u: &[f64], directions: &[Vec<f64>], accept: f64, reject: f64) -> Option<usize> {
    let mut label = None;
    for (i, d) in directions.iter().enumerate() {
        let along = dot(u, d);
        if along.abs() < accept {
            continue;
        }
        let off: Vec<f64> = u.iter().zip(d).map(|(a, b)| a - along * b).collect();
        let clean = directions
            .iter()
            .enumerate()
            .all(|(j, e)| j == i || dot(&off, e).abs() < reject);
        if clean {
            if label.is_some() {
                return None;
            }
            label = Some(i);
        }
    }
    label
}

/// Assigns each simplex to at most one line.
pub fn assign_clusters(
    embedding: &Embedding,
    subspaces: &SubspaceSet,
    thresholds: Thresholds,
) -> Result<ClusterAssignment> {
    let t = Thresholds::new(thresholds.accept, thresholds.reject, thresholds.min_norm)?;
    if let Some(d) = subspaces
        .directions
        .iter()
        .find(|d| d.len() != embedding.dim())
    {
        return Err(Error::InvalidParameter(format!(
            "direction of length {} does not match embedding dimension {}",
            d.len(),
            embedding.dim()
        )));
    }
    let labels = embedding
        .points
        .iter()
        .map(|p| {
            let n = norm(p);
            if n < t.min_norm || n == 0.0 {
                return None;
            }
            let u: Vec<f64> = p.iter().map(|x| x / n).collect();
            classify(&u, &subspaces.directions, t.accept, t.reject)
        })
        .collect();
    Ok(ClusterAssignment {
        degree: embedding.degree,
        labels,
        directions: subspaces.directions.clone(),
        thresholds: t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{harmonic_basis, SolverOptions};
    use crate::synthetic::flat_torus_triangulation;
    use proptest::prelude::*;

    fn embed(k: &SimplicialComplex, p: usize) -> Embedding {
        let basis = harmonic_basis(k, p, &SolverOptions::default()).unwrap();
        harmonic_embedding(k, &basis).unwrap()
    }

    fn hollow_triangle() -> SimplicialComplex {
        SimplicialComplex::from_simplices([vec![0, 1], vec![0, 2], vec![1, 2]]).unwrap()
    }

    fn two_triangles() -> SimplicialComplex {
        SimplicialComplex::from_simplices([
            vec![0, 1],
            vec![0, 2],
            vec![1, 2],
            vec![3, 4],
            vec![3, 5],
            vec![4, 5],
        ])
        .unwrap()
    }

    #[test]
    fn hollow_triangle_embedding_and_clusters() {
        let e = embed(&hollow_triangle(), 1);
        let r = 1.0 / 3f64.sqrt();
        let s = e.points[0][0].signum();
        for (p, x) in e.points.iter().zip([r, -r, r]) {
            assert!((p[0] * s - x).abs() < 1e-12);
        }
        let subspaces = detect_subspaces(&e, &DetectionOptions::default()).unwrap();
        assert_eq!(subspaces.directions, vec![vec![1.0]]);
        let a = assign_clusters(&e, &subspaces, Thresholds::for_embedding(&e)).unwrap();
        assert_eq!(a.clusters(), vec![vec![0, 1, 2]]);
        assert!(a.unclustered().is_empty());
    }

    #[test]
    fn no_harmonics_is_an_error() {
        let filled = SimplicialComplex::from_simplices([vec![0, 1, 2]]).unwrap();
        let basis = harmonic_basis(&filled, 1, &SolverOptions::default()).unwrap();
        assert!(matches!(
            harmonic_embedding(&filled, &basis),
            Err(Error::NoHarmonics { degree: 1 })
        ));
    }

    #[test]
    fn disjoint_supports_map_to_lines() {
        let k = two_triangles();
        let e = embed(&k, 1);
        for block in [&e.points[..3], &e.points[3..]] {
            let d = &block[0];
            for p in block {
                let cross = d[0] * p[1] - d[1] * p[0];
                assert!(cross.abs() < 1e-12);
            }
        }
        let s = detect_subspaces(&e, &DetectionOptions::default()).unwrap();
        assert_eq!(s.len(), 2);
        let a = assign_clusters(&e, &s, Thresholds::for_embedding(&e)).unwrap();
        let mut clusters = a.clusters();
        clusters.sort();
        assert_eq!(clusters, vec![vec![0, 1, 2], vec![3, 4, 5]]);
    }

    #[test]
    fn flat_torus_gives_three_lines_of_nine() {
        let k = flat_torus_triangulation(true);
        let e = embed(&k, 1);
        let s = detect_subspaces(&e, &DetectionOptions::default()).unwrap();
        assert_eq!(s.len(), 3);
        for i in 0..3 {
            for j in i + 1..3 {
                let c = dot(&s.directions[i], &s.directions[j]).abs();
                assert!((c - 0.5).abs() < 1e-9, "cos = {c}");
            }
        }
        let a = assign_clusters(&e, &s, Thresholds::for_embedding(&e)).unwrap();
        assert_eq!(a.sizes(), vec![9, 9, 9]);
        assert!(a.unclustered().is_empty());
    }

    #[test]
    fn point_between_orthogonal_lines_is_unclustered() {
        let e = Embedding {
            degree: 1,
            points: vec![
                vec![1.0, 1.0],
                vec![1.0, 0.0],
                vec![0.0, -2.0],
                vec![0.001, 0.0],
            ],
        };
        let s = SubspaceSet::from_directions(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let a = assign_clusters(&e, &s, Thresholds::new(0.98, 0.02, 0.01).unwrap()).unwrap();
        assert_eq!(a.labels, vec![None, Some(0), Some(1), None]);
    }

    #[test]
    fn threshold_validation() {
        assert!(Thresholds::new(0.5, 0.6, 0.0).is_err());
        assert!(Thresholds::new(1.0, 0.1, 0.0).is_err());
        assert!(Thresholds::new(0.9, 0.0, 0.0).is_err());
        assert!(Thresholds::new(0.9, 0.1, -1.0).is_err());
    }

    #[test]
    fn nothing_above_the_norm_floor() {
        let e = Embedding {
            degree: 1,
            points: vec![vec![0.0, 0.0]],
        };
        let options = DetectionOptions {
            min_norm: Some(0.1),
            ..Default::default()
        };
        assert!(matches!(
            detect_subspaces(&e, &options),
            Err(Error::NoPointsAboveNorm { .. })
        ));
    }

    fn rotation(angle: f64) -> Vec<Vec<f64>> {
        vec![
            vec![angle.cos(), -angle.sin()],
            vec![angle.sin(), angle.cos()],
        ]
    }

    proptest! {
        #[test]
        fn labels_are_rotation_equivariant(
            angle in 0.0f64..std::f64::consts::TAU,
            points in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..40),
            theta in 0.0f64..std::f64::consts::PI,
        ) {
            let e = Embedding { degree: 1, points: points.iter().map(|&(x, y)| vec![x, y]).collect() };
            let dirs = vec![vec![1.0, 0.0], vec![theta.cos(), theta.sin()]];
            let t = Thresholds::new(0.9, 0.1, 0.05).unwrap();
            let before = assign_clusters(&e, &SubspaceSet::from_directions(dirs.clone()).unwrap(), t).unwrap();
            let q = rotation(angle);
            let rotated = e.transformed(&q);
            let rdirs: Vec<Vec<f64>> = dirs.iter().map(|d| q.iter().map(|row| dot(row, d)).collect()).collect();
            let set = SubspaceSet::from_directions(rdirs).unwrap();
            let after = assign_clusters(&rotated, &set, t).unwrap();
            // points right at a threshold may flip through rounding
            for (i, (a, b)) in before.labels.iter().zip(&after.labels).enumerate() {
                if a != b {
                    let u = &e.points[i];
                    let n = norm(u);
                    let margin = dirs.iter().map(|d| {
                        let c = (dot(u, d) / n).abs();
                        (c - 0.9).abs().min(c.min(1.0)).min((n - 0.05).abs())
                    }).fold(f64::INFINITY, f64::min);
                    prop_assert!(margin < 1e-9, "label changed at {i}");
                }
            }
        }

        #[test]
        fn stricter_thresholds_never_add_members(
            points in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 1..40),
            accept in 0.5f64..0.99,
            reject in 0.01f64..0.4,
            raise in 0.0f64..0.5,
            lower in 0.0f64..1.0,
        ) {
            prop_assume!(reject < accept);
            let e = Embedding { degree: 1, points: points.iter().map(|&(x, y, z)| vec![x, y, z]).collect() };
            let s = SubspaceSet::from_directions(vec![vec![1.0, 0.0, 0.0], vec![0.6, 0.8, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
            let loose = assign_clusters(&e, &s, Thresholds::new(accept, reject, 0.01).unwrap()).unwrap();
            let strict_accept = (accept + raise * (1.0 - accept)).min(0.999);
            let strict_reject = reject * (1.0 - lower).max(0.01);
            let strict = assign_clusters(&e, &s, Thresholds::new(strict_accept, strict_reject, 0.01).unwrap()).unwrap();
            for (a, b) in loose.labels.iter().zip(&strict.labels) {
                if b.is_some() {
                    prop_assert_eq!(a, b);
                }
            }
        }
    }
}

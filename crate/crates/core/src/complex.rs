//! Finite abstract simplicial complexes with a canonical basis order.
//!
//! A simplex is stored as its strictly increasing vertex sequence, which also
//! fixes its orientation. Within each dimension the simplices are kept in
//! lexicographic order and that order is the basis of the chain space `C_p`.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vertex = usize;

/// An oriented simplex: strictly increasing vertex identifiers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Simplex(Vec<Vertex>);

impl Simplex {
    /// Builds a simplex from vertices in any order. Duplicates are rejected.
    pub fn new(vertices: impl Into<Vec<Vertex>>) -> Result<Self> {
        let mut vertices = vertices.into();
        if vertices.is_empty() {
            return Err(Error::EmptySimplex);
        }
        let original = vertices.clone();
        vertices.sort_unstable();
        if let Some(w) = vertices.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateVertex {
                vertex: w[0],
                vertices: original,
            });
        }
        Ok(Simplex(vertices))
    }

    /// Wraps a vertex list without sorting or checking it.
    pub(crate) fn from_sorted(vertices: Vec<Vertex>) -> Self {
        debug_assert!(vertices.windows(2).all(|w| w[0] < w[1]));
        Simplex(vertices)
    }

    /// Wraps a vertex list verbatim; used when loading files that are
    /// validated afterwards.
    pub fn from_raw(vertices: Vec<Vertex>) -> Self {
        Simplex(vertices)
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    /// True when the vertex list is non-empty and strictly increasing.
    pub fn is_canonical(&self) -> bool {
        !self.0.is_empty() && self.0.windows(2).all(|w| w[0] < w[1])
    }

    /// The codimension-one faces with their boundary signs.
    ///
    /// Face `i` omits vertex `i` and carries sign `(-1)^i`. A vertex has no
    /// faces.
    pub fn faces(&self) -> Vec<(Simplex, i8)> {
        if self.0.len() < 2 {
            return Vec::new();
        }
        (0..self.0.len())
            .map(|i| {
                let mut face = self.0.clone();
                face.remove(i);
                (Simplex(face), if i % 2 == 0 { 1 } else { -1 })
            })
            .collect()
    }

    /// The `"u,v,w"` key used by the complex file format.
    pub fn key(&self) -> String {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        parts.join(",")
    }

    pub fn parse_key(key: &str) -> Result<Self> {
        let vertices = key
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<Vertex>()
                    .map_err(|e| Error::Parse(format!("simplex key {key:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Simplex::new(vertices)
    }
}

impl fmt::Display for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// The diagonal Gram matrix of the degree-`p` inner product: `w(σ)²` per
/// basis simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct InnerProduct {
    pub degree: usize,
    pub diagonal: Vec<f64>,
}

impl InnerProduct {
    pub fn dot(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.diagonal.len());
        self.diagonal
            .iter()
            .zip(x.iter().zip(y))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        self.dot(x, x).sqrt()
    }

    pub fn is_unit(&self) -> bool {
        self.diagonal.iter().all(|&w| w == 1.0)
    }
}

/// A structural problem reported by [`SimplicialComplex::validate`].
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    /// The vertex list is empty, unsorted or repeats a vertex.
    NonCanonical {
        dimension: usize,
        simplex: Simplex,
    },
    /// The simplex is listed under a dimension that does not match its size.
    WrongDimension {
        listed: usize,
        simplex: Simplex,
    },
    /// Consecutive basis entries out of lexicographic order.
    Unsorted {
        dimension: usize,
        index: usize,
    },
    Duplicate {
        dimension: usize,
        simplex: Simplex,
    },
    MissingFace {
        simplex: Simplex,
        face: Simplex,
    },
    NonPositiveWeight {
        simplex: Simplex,
        weight: f64,
    },
    WeightCount {
        dimension: usize,
        simplices: usize,
        weights: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonCanonical { dimension, simplex } => {
                write!(
                    f,
                    "non-canonical simplex {simplex} in dimension {dimension}"
                )
            }
            Violation::WrongDimension { listed, simplex } => write!(
                f,
                "simplex {simplex} of dimension {} listed under dimension {listed}",
                simplex.dimension()
            ),
            Violation::Unsorted { dimension, index } => write!(
                f,
                "dimension {dimension}: entries {} and {index} out of lexicographic order",
                index - 1
            ),
            Violation::Duplicate { dimension, simplex } => {
                write!(f, "dimension {dimension}: duplicate simplex {simplex}")
            }
            Violation::MissingFace { simplex, face } => {
                write!(f, "face {face} of {simplex} is missing")
            }
            Violation::NonPositiveWeight { simplex, weight } => {
                write!(f, "non-positive weight {weight} on {simplex}")
            }
            Violation::WeightCount {
                dimension,
                simplices,
                weights,
            } => write!(
                f,
                "dimension {dimension}: {weights} weights for {simplices} simplices"
            ),
        }
    }
}

/// A finite simplicial complex with per-simplex positive weights.
///
/// `simplices[p]` is the lexicographically sorted basis of `C_p`. Instances
/// built through [`insert_simplex`](Self::insert_simplex) or
/// [`from_simplices`](Self::from_simplices) are always downward closed;
/// [`from_parts`](Self::from_parts) accepts arbitrary data so that file
/// contents can be checked with [`validate`](Self::validate).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimplicialComplex {
    simplices: Vec<Vec<Simplex>>,
    weights: Vec<Vec<f64>>,
}

/// Every non-empty subset of a sorted vertex list, grouped by size - 1.
fn closure_of(vertices: &[Vertex], out: &mut [Vec<Simplex>]) {
    let n = vertices.len();
    for mask in 1u64..(1u64 << n) {
        let face: Vec<Vertex> = (0..n)
            .filter(|&i| mask >> i & 1 == 1)
            .map(|i| vertices[i])
            .collect();
        out[face.len() - 1].push(Simplex(face));
    }
}

const MAX_SIMPLEX_SIZE: usize = 24;

impl SimplicialComplex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds the downward closure of a collection of simplices, all with
    /// unit weight.
    pub fn from_simplices<I, S>(simplices: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<Vec<Vertex>>,
    {
        let mut by_dim: Vec<Vec<Simplex>> = Vec::new();
        for vertices in simplices {
            let simplex = Simplex::new(vertices)?;
            let n = simplex.0.len();
            if n > MAX_SIMPLEX_SIZE {
                return Err(Error::InvalidParameter(format!(
                    "simplex {simplex} exceeds the supported size of {MAX_SIMPLEX_SIZE} vertices"
                )));
            }
            if by_dim.len() < n {
                by_dim.resize_with(n, Vec::new);
            }
            closure_of(&simplex.0, &mut by_dim);
        }
        Ok(Self::from_unsorted_closed(by_dim))
    }

    /// Sorts and deduplicates per-dimension lists that are already closed
    /// under faces. Weights default to one.
    pub(crate) fn from_unsorted_closed(mut by_dim: Vec<Vec<Simplex>>) -> Self {
        for level in &mut by_dim {
            level.sort_unstable();
            level.dedup();
        }
        while by_dim.last().is_some_and(|l| l.is_empty()) {
            by_dim.pop();
        }
        let weights = by_dim.iter().map(|l| vec![1.0; l.len()]).collect();
        SimplicialComplex {
            simplices: by_dim,
            weights,
        }
    }

    /// Assembles a complex from raw per-dimension lists without checking or
    /// reordering anything.
    pub fn from_parts(simplices: Vec<Vec<Simplex>>, weights: Vec<Vec<f64>>) -> Self {
        SimplicialComplex { simplices, weights }
    }

    /// Adds a simplex and all of its faces. Idempotent.
    pub fn insert_simplex(&mut self, vertices: &[Vertex]) -> Result<()> {
        let simplex = Simplex::new(vertices.to_vec())?;
        let n = simplex.0.len();
        if n > MAX_SIMPLEX_SIZE {
            return Err(Error::InvalidParameter(format!(
                "simplex {simplex} exceeds the supported size of {MAX_SIMPLEX_SIZE} vertices"
            )));
        }
        let mut faces: Vec<Vec<Simplex>> = vec![Vec::new(); n];
        closure_of(&simplex.0, &mut faces);
        if self.simplices.len() < n {
            self.simplices.resize_with(n, Vec::new);
            self.weights.resize_with(n, Vec::new);
        }
        for (p, level) in faces.into_iter().enumerate() {
            for face in level {
                if let Err(pos) = self.simplices[p].binary_search(&face) {
                    self.simplices[p].insert(pos, face);
                    self.weights[p].insert(pos, 1.0);
                }
            }
        }
        Ok(())
    }

    /// Highest dimension with at least one simplex; `None` when empty.
    pub fn dimension(&self) -> Option<usize> {
        self.simplices.iter().rposition(|l| !l.is_empty())
    }

    pub fn is_empty(&self) -> bool {
        self.dimension().is_none()
    }

    /// Number of `p`-simplices (zero beyond the top dimension).
    pub fn count(&self, p: usize) -> usize {
        self.simplices.get(p).map_or(0, Vec::len)
    }

    /// `|K_0|, |K_1|, …` up to the top dimension.
    pub fn counts(&self) -> Vec<usize> {
        match self.dimension() {
            Some(d) => (0..=d).map(|p| self.count(p)).collect(),
            None => Vec::new(),
        }
    }

    /// The ordered basis of `C_p`.
    pub fn simplices(&self, p: usize) -> &[Simplex] {
        self.simplices.get(p).map_or(&[], Vec::as_slice)
    }

    /// Basis index of a simplex in its dimension.
    pub fn index_of(&self, simplex: &Simplex) -> Option<usize> {
        self.simplices
            .get(simplex.dimension())?
            .binary_search(simplex)
            .ok()
    }

    pub fn contains(&self, simplex: &Simplex) -> bool {
        self.index_of(simplex).is_some()
    }

    pub fn weights(&self, p: usize) -> &[f64] {
        self.weights.get(p).map_or(&[], Vec::as_slice)
    }

    pub fn weight(&self, simplex: &Simplex) -> Option<f64> {
        let idx = self.index_of(simplex)?;
        self.weights.get(simplex.dimension())?.get(idx).copied()
    }

    pub fn set_weight(&mut self, simplex: &Simplex, weight: f64) -> Result<()> {
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::NonPositiveWeight {
                simplex: simplex.clone(),
                weight,
            });
        }
        let idx = self
            .index_of(simplex)
            .ok_or_else(|| Error::UnknownSimplex(simplex.clone()))?;
        self.weights[simplex.dimension()][idx] = weight;
        Ok(())
    }

    /// True when every weight equals one.
    pub fn has_unit_weights(&self) -> bool {
        self.weights.iter().flatten().all(|&w| w == 1.0)
    }

    pub fn inner_product(&self, p: usize) -> InnerProduct {
        InnerProduct {
            degree: p,
            diagonal: self.weights(p).iter().map(|w| w * w).collect(),
        }
    }

    /// The number of vertices referenced, i.e. one past the largest vertex id.
    pub fn vertex_bound(&self) -> usize {
        self.simplices(0)
            .iter()
            .filter_map(|s| s.0.first())
            .max()
            .map_or(0, |&v| v + 1)
    }

    /// Lists every structural problem; empty iff the complex is downward
    /// closed, canonically sorted, free of duplicates and positively weighted.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let lookup: Vec<HashSet<&Simplex>> =
            self.simplices.iter().map(|l| l.iter().collect()).collect();
        for (p, level) in self.simplices.iter().enumerate() {
            let weights = self.weights(p);
            if weights.len() != level.len() {
                out.push(Violation::WeightCount {
                    dimension: p,
                    simplices: level.len(),
                    weights: weights.len(),
                });
            }
            for (i, simplex) in level.iter().enumerate() {
                if !simplex.is_canonical() {
                    out.push(Violation::NonCanonical {
                        dimension: p,
                        simplex: simplex.clone(),
                    });
                } else if simplex.dimension() != p {
                    out.push(Violation::WrongDimension {
                        listed: p,
                        simplex: simplex.clone(),
                    });
                }
                if i > 0 {
                    match level[i - 1].cmp(simplex) {
                        std::cmp::Ordering::Less => {}
                        std::cmp::Ordering::Equal => out.push(Violation::Duplicate {
                            dimension: p,
                            simplex: simplex.clone(),
                        }),
                        std::cmp::Ordering::Greater => out.push(Violation::Unsorted {
                            dimension: p,
                            index: i,
                        }),
                    }
                }
                if let Some(&w) = weights.get(i) {
                    if !(w > 0.0 && w.is_finite()) {
                        out.push(Violation::NonPositiveWeight {
                            simplex: simplex.clone(),
                            weight: w,
                        });
                    }
                }
                if p > 0 && simplex.is_canonical() {
                    for (face, _) in simplex.faces() {
                        if !lookup[p - 1].contains(&face) {
                            out.push(Violation::MissingFace {
                                simplex: simplex.clone(),
                                face,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    /// The 1-skeleton as sorted adjacency lists indexed by vertex basis
    /// position.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.count(0)];
        for edge in self.simplices(1) {
            let (Some(a), Some(b)) = (
                self.index_of(&Simplex(vec![edge.0[0]])),
                self.index_of(&Simplex(vec![edge.0[1]])),
            ) else {
                continue;
            };
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Connected components of the 1-skeleton as a label per vertex basis
    /// index, numbered in order of first appearance.
    pub fn components(&self) -> (usize, Vec<usize>) {
        let adj = self.adjacency();
        let mut label = vec![usize::MAX; adj.len()];
        let mut next = 0;
        for start in 0..adj.len() {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = next;
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for &u in &adj[v] {
                    if label[u] == usize::MAX {
                        label[u] = next;
                        stack.push(u);
                    }
                }
            }
            next += 1;
        }
        (next, label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[usize]) -> Simplex {
        Simplex::new(v.to_vec()).unwrap()
    }

    #[test]
    fn inserting_a_triangle_adds_all_faces() {
        let mut k = SimplicialComplex::new();
        k.insert_simplex(&[0, 1, 2]).unwrap();
        assert_eq!(k.simplices(0), &[s(&[0]), s(&[1]), s(&[2])]);
        assert_eq!(k.simplices(1), &[s(&[0, 1]), s(&[0, 2]), s(&[1, 2])]);
        assert_eq!(k.simplices(2), &[s(&[0, 1, 2])]);
        assert_eq!(k.dimension(), Some(2));
        assert!(k.validate().is_empty());
    }

    #[test]
    fn vertices_are_stored_in_canonical_order() {
        let mut k = SimplicialComplex::new();
        k.insert_simplex(&[1, 0]).unwrap();
        assert_eq!(k.simplices(1)[0].vertices(), &[0, 1]);
    }

    #[test]
    fn insertion_is_idempotent() {
        let mut k = SimplicialComplex::new();
        k.insert_simplex(&[0, 1]).unwrap();
        k.insert_simplex(&[0, 1]).unwrap();
        assert_eq!(k.count(1), 1);
        assert_eq!(k.count(0), 2);
    }

    #[test]
    fn duplicate_vertices_are_rejected() {
        let mut k = SimplicialComplex::new();
        let err = k.insert_simplex(&[3, 1, 3]).unwrap_err();
        assert!(matches!(err, Error::DuplicateVertex { vertex: 3, .. }));
        assert!(k.is_empty());
        assert!(matches!(Simplex::new(vec![]), Err(Error::EmptySimplex)));
    }

    #[test]
    fn faces_carry_alternating_signs() {
        assert_eq!(s(&[0, 1]).faces(), vec![(s(&[1]), 1), (s(&[0]), -1)]);
        assert_eq!(
            s(&[0, 1, 2]).faces(),
            vec![(s(&[1, 2]), 1), (s(&[0, 2]), -1), (s(&[0, 1]), 1)]
        );
        assert!(s(&[5]).faces().is_empty());
    }

    #[test]
    fn validate_reports_missing_faces() {
        let k = SimplicialComplex::from_parts(
            vec![vec![], vec![Simplex::from_raw(vec![0, 1])]],
            vec![vec![], vec![1.0]],
        );
        let v = k.validate();
        assert_eq!(
            v,
            vec![
                Violation::MissingFace {
                    simplex: s(&[0, 1]),
                    face: s(&[1])
                },
                Violation::MissingFace {
                    simplex: s(&[0, 1]),
                    face: s(&[0])
                },
            ]
        );
    }

    #[test]
    fn validate_reports_bad_weights_order_and_duplicates() {
        let mut k = SimplicialComplex::from_simplices([vec![0, 1, 2]]).unwrap();
        assert!(k.set_weight(&s(&[0, 1]), 0.0).is_err());
        k.weights[1][0] = 0.0;
        assert_eq!(
            k.validate(),
            vec![Violation::NonPositiveWeight {
                simplex: s(&[0, 1]),
                weight: 0.0
            }]
        );

        let k = SimplicialComplex::from_parts(
            vec![vec![s(&[1]), s(&[0]), s(&[0])]],
            vec![vec![1.0; 3]],
        );
        assert_eq!(
            k.validate(),
            vec![
                Violation::Unsorted {
                    dimension: 0,
                    index: 1
                },
                Violation::Duplicate {
                    dimension: 0,
                    simplex: s(&[0])
                }
            ]
        );

        let k = SimplicialComplex::from_parts(
            vec![vec![Simplex::from_raw(vec![2, 1])]],
            vec![vec![1.0]],
        );
        assert!(matches!(k.validate()[0], Violation::NonCanonical { .. }));
    }

    #[test]
    fn basis_order_depends_only_on_the_simplex_set() {
        let a = SimplicialComplex::from_simplices([vec![2, 3], vec![0, 1, 2], vec![4]]).unwrap();
        let mut b = SimplicialComplex::new();
        b.insert_simplex(&[4]).unwrap();
        b.insert_simplex(&[3, 2]).unwrap();
        b.insert_simplex(&[2, 0, 1]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn components_of_two_disjoint_edges() {
        let k = SimplicialComplex::from_simplices([vec![0, 1], vec![2, 3], vec![4]]).unwrap();
        let (n, labels) = k.components();
        assert_eq!(n, 3);
        assert_eq!(labels, vec![0, 0, 1, 1, 2]);
    }

    #[test]
    fn inner_product_squares_weights() {
        let mut k = SimplicialComplex::from_simplices([vec![0, 1]]).unwrap();
        k.set_weight(&s(&[0]), 3.0).unwrap();
        let ip = k.inner_product(0);
        assert_eq!(ip.diagonal, vec![9.0, 1.0]);
        assert_eq!(ip.dot(&[1.0, 2.0], &[1.0, 1.0]), 11.0);
    }

    #[test]
    fn key_roundtrip() {
        let simplex = s(&[7, 2, 11]);
        assert_eq!(simplex.key(), "2,7,11");
        assert_eq!(Simplex::parse_key("2, 7,11").unwrap(), simplex);
        assert!(Simplex::parse_key("2,x").is_err());
    }
}

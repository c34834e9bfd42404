//! Experiment configuration and the end-to-end pipelines shared by the
//! command-line tool and the test suite.

use serde::{Deserialize, Serialize};

use crate::baseline::{graph_spectral_clustering_with, pullback_to_edges, VertexClustering};
use crate::clustering::{
    assign_clusters, detect_subspaces, harmonic_embedding, ClusterAssignment, DetectionOptions,
    Embedding, SubspaceSet, Thresholds,
};
use crate::complex::SimplicialComplex;
use crate::error::{Error, Result};
use crate::spectral::{harmonic_basis, HarmonicBasis, Solver, SolverOptions};
use crate::synthetic::{
    self, betti_scan, build_vietoris_rips, flat_torus_triangulation, linspace, select_scale,
    PointCloud, ScanRow,
};

/// Which data set to produce.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplerConfig {
    Wedge {
        n_sphere: usize,
        n_circle: usize,
        noise: f64,
    },
    ChainedWedge {
        n_sphere: usize,
        n_circle: usize,
        noise: f64,
    },
    PuncturedSquare {
        n: usize,
        #[serde(default = "default_holes")]
        holes: Vec<[f64; 2]>,
        #[serde(default = "default_hole_radius")]
        hole_radius: f64,
    },
    Torus {
        n: usize,
        #[serde(default = "default_major")]
        major: f64,
        #[serde(default = "default_minor")]
        minor: f64,
        noise: f64,
    },
    TwoSpheres {
        n_each: usize,
        #[serde(default = "default_centers")]
        centers: Vec<[f64; 3]>,
        #[serde(default = "default_radius")]
        radius: f64,
        noise: f64,
    },
    FlatTorus {
        #[serde(default = "default_true")]
        symmetric: bool,
    },
}

fn default_holes() -> Vec<[f64; 2]> {
    synthetic::PUNCTURES.to_vec()
}
fn default_hole_radius() -> f64 {
    0.1
}
fn default_major() -> f64 {
    2.0
}
fn default_minor() -> f64 {
    1.0
}
fn default_centers() -> Vec<[f64; 3]> {
    synthetic::TWO_SPHERE_CENTERS.to_vec()
}
fn default_radius() -> f64 {
    1.0
}
fn default_true() -> bool {
    true
}

/// Output of a sampler: a point cloud, or a complex for the purely
/// combinatorial flat torus.
#[derive(Clone, Debug, PartialEq)]
pub enum Generated {
    Cloud(PointCloud),
    Complex(SimplicialComplex),
}

impl SamplerConfig {
    pub fn generate(&self, seed: u64) -> Result<Generated> {
        use SamplerConfig::*;
        Ok(match self {
            Wedge {
                n_sphere,
                n_circle,
                noise,
            } => Generated::Cloud(synthetic::sample_wedge(*n_sphere, *n_circle, *noise, seed)?),
            ChainedWedge {
                n_sphere,
                n_circle,
                noise,
            } => Generated::Cloud(synthetic::sample_chained_wedge(
                *n_sphere, *n_circle, *noise, seed,
            )?),
            PuncturedSquare {
                n,
                holes,
                hole_radius,
            } => Generated::Cloud(synthetic::sample_punctured_square(
                *n,
                holes,
                *hole_radius,
                seed,
            )?),
            Torus {
                n,
                major,
                minor,
                noise,
            } => Generated::Cloud(synthetic::sample_torus(*n, *major, *minor, *noise, seed)?),
            TwoSpheres {
                n_each,
                centers,
                radius,
                noise,
            } => Generated::Cloud(synthetic::sample_two_spheres(
                *n_each, centers, *radius, *noise, seed,
            )?),
            FlatTorus { symmetric } => Generated::Complex(flat_torus_triangulation(*symmetric)),
        })
    }
}

/// Scales to scan when no fixed scale is given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub start: f64,
    pub end: f64,
    pub steps: usize,
    /// Leading Betti numbers the selected scale must reproduce.
    pub target: Vec<usize>,
    /// Dimension up to which Betti numbers are scanned.
    #[serde(default = "default_scan_dim")]
    pub max_dim: usize,
}

fn default_scan_dim() -> usize {
    2
}

impl ScanConfig {
    pub fn scales(&self) -> Vec<f64> {
        linspace(self.start, self.end, self.steps)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RipsConfig {
    /// Fixed scale; when absent the scan picks one.
    #[serde(default)]
    pub scale: Option<f64>,
    #[serde(default = "default_rips_dim")]
    pub max_dim: usize,
    #[serde(default)]
    pub scan: Option<ScanConfig>,
}

fn default_rips_dim() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterConfig {
    #[serde(default = "default_degree")]
    pub degree: usize,
    #[serde(default = "default_accept")]
    pub accept: f64,
    #[serde(default = "default_reject")]
    pub reject: f64,
    /// Absolute norm floor; defaults to 2% of the median norm.
    #[serde(default)]
    pub min_norm: Option<f64>,
    /// Number of lines to detect; by default detection stops on residual
    /// mass.
    #[serde(default)]
    pub k: Option<usize>,
    /// Cosine of the detection neighbourhood radius.
    #[serde(default = "default_accept")]
    pub detection_cosine: f64,
    /// Manual line directions, bypassing detection.
    #[serde(default)]
    pub directions: Option<Vec<Vec<f64>>>,
}

fn default_degree() -> usize {
    1
}
fn default_accept() -> f64 {
    Thresholds::DEFAULT_ACCEPT
}
fn default_reject() -> f64 {
    Thresholds::DEFAULT_REJECT
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            degree: default_degree(),
            accept: default_accept(),
            reject: default_reject(),
            min_norm: None,
            k: None,
            detection_cosine: default_accept(),
            directions: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    pub n_eigenvectors: usize,
    pub k: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_solver")]
    pub solver: String,
    #[serde(default = "default_kernel_tolerance")]
    pub kernel_tolerance: f64,
    #[serde(default = "default_residual_tolerance")]
    pub residual_tolerance: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_dense_limit")]
    pub dense_limit: usize,
}

fn default_solver() -> String {
    "auto".into()
}
fn default_kernel_tolerance() -> f64 {
    SolverOptions::default().kernel_tolerance
}
fn default_residual_tolerance() -> f64 {
    SolverOptions::default().residual_tolerance
}
fn default_max_iterations() -> usize {
    SolverOptions::default().max_iterations
}
fn default_dense_limit() -> usize {
    SolverOptions::default().dense_limit
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            solver: default_solver(),
            kernel_tolerance: default_kernel_tolerance(),
            residual_tolerance: default_residual_tolerance(),
            max_iterations: default_max_iterations(),
            dense_limit: default_dense_limit(),
        }
    }
}

impl SolverConfig {
    pub fn options(&self, seed: u64) -> Result<SolverOptions> {
        let solver = match self.solver.as_str() {
            "auto" => Solver::Auto,
            "dense" => Solver::Dense,
            "iterative" => Solver::Iterative,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown solver {other:?} (expected auto, dense or iterative)"
                )))
            }
        };
        Ok(SolverOptions {
            solver,
            kernel_tolerance: self.kernel_tolerance,
            residual_tolerance: self.residual_tolerance,
            max_iterations: self.max_iterations,
            dense_limit: self.dense_limit,
            seed,
            ..SolverOptions::default()
        })
    }
}

/// Everything one experiment needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub rips: Option<RipsConfig>,
    #[serde(default)]
    pub cluster: ClusterConfig,
    #[serde(default)]
    pub baseline: Option<BaselineConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub out: Option<String>,
}

impl ExperimentConfig {
    /// Checks ranges that the individual operations would otherwise reject
    /// late.
    pub fn check(&self) -> Result<()> {
        Thresholds::new(
            self.cluster.accept,
            self.cluster.reject,
            self.cluster.min_norm.unwrap_or(0.0),
        )?;
        if !(self.cluster.detection_cosine > 0.0 && self.cluster.detection_cosine < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "detection_cosine must lie in (0, 1), got {}",
                self.cluster.detection_cosine
            )));
        }
        if let Some(r) = &self.rips {
            if r.scale.is_none() && r.scan.is_none() {
                return Err(Error::InvalidParameter(
                    "rips needs either a scale or a scan".into(),
                ));
            }
        }
        if let Some(b) = &self.baseline {
            if b.k == 0 || b.n_eigenvectors == 0 {
                return Err(Error::InvalidParameter(
                    "baseline k and n_eigenvectors must be positive".into(),
                ));
            }
        }
        self.solver.options(self.seed).map(|_| ())
    }
}

/// Result of choosing a Rips scale.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaleChoice {
    pub scale: f64,
    pub scan: Vec<ScanRow>,
}

/// Runs the Betti scan and picks the middle of the longest run of scales
/// matching the target.
pub fn choose_scale(cloud: &PointCloud, scan: &ScanConfig) -> Result<ScaleChoice> {
    let rows = betti_scan(cloud, &scan.scales(), scan.max_dim)?;
    let scale = select_scale(&rows, &scan.target).ok_or_else(|| {
        Error::InvalidParameter(format!(
            "no scanned scale reproduces Betti numbers {:?}; scanned {:?}",
            scan.target,
            rows.iter()
                .map(|r| (r.scale, r.betti.clone()))
                .collect::<Vec<_>>()
        ))
    })?;
    Ok(ScaleChoice { scale, scan: rows })
}

/// Everything produced by one harmonic clustering run.
#[derive(Clone, Debug)]
pub struct HarmonicRun {
    pub basis: HarmonicBasis,
    pub embedding: Embedding,
    pub subspaces: SubspaceSet,
    pub assignment: ClusterAssignment,
}

/// Harmonic basis, embedding, line detection (or manual lines) and
/// assignment.
pub fn harmonic_clustering(
    complex: &SimplicialComplex,
    config: &ClusterConfig,
    solver: &SolverOptions,
) -> Result<HarmonicRun> {
    let basis = harmonic_basis(complex, config.degree, solver)?;
    let embedding = harmonic_embedding(complex, &basis)?;
    let min_norm = config
        .min_norm
        .unwrap_or_else(|| embedding.default_min_norm());
    let subspaces = match &config.directions {
        Some(d) => SubspaceSet::from_directions(d.clone())?,
        None => detect_subspaces(
            &embedding,
            &DetectionOptions {
                k_hint: config.k,
                min_norm: Some(min_norm),
                angular_tolerance: config.detection_cosine.acos(),
                ..DetectionOptions::default()
            },
        )?,
    };
    let thresholds = Thresholds::new(config.accept, config.reject, min_norm)?;
    let assignment = assign_clusters(&embedding, &subspaces, thresholds)?;
    Ok(HarmonicRun {
        basis,
        embedding,
        subspaces,
        assignment,
    })
}

/// Complex plus optional vertex coordinates.
#[derive(Clone, Debug)]
pub struct BuiltComplex {
    pub complex: SimplicialComplex,
    pub points: Option<Vec<Vec<f64>>>,
    pub scale: Option<ScaleChoice>,
}

/// Generates the data and, for point clouds, builds the Rips complex.
pub fn build_experiment_complex(config: &ExperimentConfig) -> Result<BuiltComplex> {
    match config.sampler.generate(config.seed)? {
        Generated::Complex(complex) => Ok(BuiltComplex {
            complex,
            points: None,
            scale: None,
        }),
        Generated::Cloud(cloud) => {
            let rips = config.rips.as_ref().ok_or_else(|| {
                Error::InvalidParameter("point-cloud experiments need a rips section".into())
            })?;
            let choice = match (rips.scale, &rips.scan) {
                (Some(s), _) => ScaleChoice {
                    scale: s,
                    scan: Vec::new(),
                },
                (None, Some(scan)) => choose_scale(&cloud, scan)?,
                (None, None) => {
                    return Err(Error::InvalidParameter(
                        "rips needs either a scale or a scan".into(),
                    ))
                }
            };
            let complex = build_vietoris_rips(&cloud, choice.scale, rips.max_dim)?;
            Ok(BuiltComplex {
                complex,
                points: Some(cloud.points),
                scale: Some(choice),
            })
        }
    }
}

/// Outcome of a full experiment.
#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub built: BuiltComplex,
    pub harmonic: HarmonicRun,
    pub baseline: Option<VertexClustering>,
    /// Edge labels induced by the baseline vertex clusters.
    pub baseline_edges: Option<Vec<Option<usize>>>,
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.check()?;
    let solver = config.solver.options(config.seed)?;
    let built = build_experiment_complex(config)?;
    let harmonic = harmonic_clustering(&built.complex, &config.cluster, &solver)?;
    let (baseline, baseline_edges) = match &config.baseline {
        Some(b) => {
            let c = graph_spectral_clustering_with(
                &built.complex,
                b.n_eigenvectors,
                b.k,
                config.seed,
                &solver,
            )?;
            let edges = pullback_to_edges(&built.complex, &c.labels);
            (Some(c), Some(edges))
        }
        None => (None, None),
    };
    Ok(ExperimentOutcome {
        built,
        harmonic,
        baseline,
        baseline_edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_torus_experiment() {
        let config = ExperimentConfig {
            name: "flat".into(),
            seed: 1,
            sampler: SamplerConfig::FlatTorus { symmetric: true },
            rips: None,
            cluster: ClusterConfig::default(),
            baseline: None,
            solver: SolverConfig::default(),
            out: None,
        };
        let outcome = run_experiment(&config).unwrap();
        assert_eq!(outcome.harmonic.assignment.sizes(), vec![9, 9, 9]);
    }

    #[test]
    fn config_checks() {
        let mut config = ExperimentConfig {
            name: "x".into(),
            seed: 0,
            sampler: SamplerConfig::Wedge {
                n_sphere: 10,
                n_circle: 2,
                noise: 0.0,
            },
            rips: Some(RipsConfig {
                scale: None,
                max_dim: 2,
                scan: None,
            }),
            cluster: ClusterConfig::default(),
            baseline: None,
            solver: SolverConfig::default(),
            out: None,
        };
        assert!(config.check().is_err());
        config.rips = Some(RipsConfig {
            scale: Some(0.5),
            max_dim: 2,
            scan: None,
        });
        assert!(config.check().is_ok());
        config.cluster.reject = 0.99;
        assert!(config.check().is_err());
        config.cluster.reject = 0.02;
        config.solver.solver = "magic".into();
        assert!(config.check().is_err());
    }
}

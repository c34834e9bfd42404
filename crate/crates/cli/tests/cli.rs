use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use harmclust::experiments::{harmonic_clustering, ClusterConfig, ExperimentConfig};
use harmclust::io::{assignment_to_json, complex_from_json, write_complex, AssignmentJson};
use harmclust::spectral::SolverOptions;
use harmclust::synthetic::flat_torus_triangulation;
use harmclust::SimplicialComplex;
use tempfile::TempDir;

fn harmclust(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_harmclust"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn config(name: &str) -> String {
    configs().join(name).display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_torus(dir: &Path) -> PathBuf {
    let path = dir.join("torus.json");
    write_complex(&path, &flat_torus_triangulation(true), None).unwrap();
    path
}

#[test]
fn shipped_configs_parse_and_check() {
    let mut seen = 0;
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let config: ExperimentConfig = toml::from_str(&fs::read_to_string(&path).unwrap())
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        config
            .check()
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen += 1;
    }
    assert!(seen >= 8);
}

#[test]
fn generate_full_size_wedge_writes_all_points() {
    let dir = TempDir::new().unwrap();
    let o = harmclust(
        &[
            "generate",
            "--config",
            &config("wedge_full.toml"),
            "--out",
            "gen",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("gen/cloud.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1200);
    assert!(stdout(&o).contains("1200 points"));
    assert!(dir.path().join("gen/manifest.json").exists());
}

#[test]
fn generate_flat_torus_writes_a_complex() {
    let dir = TempDir::new().unwrap();
    let o = harmclust(
        &[
            "generate",
            "--config",
            &config("flat_torus.toml"),
            "--out",
            "gen",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let file = complex_from_json(&fs::read_to_string(dir.path().join("gen/complex.json")).unwrap())
        .unwrap();
    assert_eq!(file.complex.counts(), vec![9, 27, 18]);
}

#[test]
fn unknown_sampler_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "name = \"x\"\n[sampler]\nkind = \"klein_bottle\"\n").unwrap();
    let o = harmclust(&["generate", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("klein_bottle"), "{}", stderr(&o));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let o = harmclust(&["cluster", "--frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn build_at_scale_zero_gives_isolated_vertices() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("c.csv"), "0,0\n1,0\n0,1\n5,5\n").unwrap();
    let o = harmclust(
        &["build", "c.csv", "--scale", "0", "--dim", "2", "--out", "b"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("b/summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["betti"][0], 4);
    assert_eq!(summary["counts"][1], 0);
}

#[test]
fn build_square_ring_has_one_loop() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("c.csv"), "0,0\n1,0\n1,1\n0,1\n").unwrap();
    let o = harmclust(
        &["build", "c.csv", "--scale", "1.1", "--out", "b"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("b/summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["betti"], serde_json::json!([1, 1, 0]));
    let file =
        complex_from_json(&fs::read_to_string(dir.path().join("b/complex.json")).unwrap()).unwrap();
    assert_eq!(file.points.unwrap().len(), 4);
}

#[test]
fn betti_scan_rows() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("c.csv"), "0,0\n1,0\n1,1\n0,1\n").unwrap();
    let o = harmclust(
        &["betti-scan", "c.csv", "--scales", "1.1", "--out", "s"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let table: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("s/scan.json")).unwrap()).unwrap();
    assert_eq!(table["rows"].as_array().unwrap().len(), 1);

    let o = harmclust(
        &[
            "betti-scan",
            "c.csv",
            "--scales",
            "0.5,1.1,1.2,2",
            "--out",
            "s",
        ],
        dir.path(),
    );
    assert!(o.status.success());
    let lines: Vec<String> = stdout(&o).lines().map(str::to_string).collect();
    assert!(
        lines[2].ends_with('*') && lines[3].ends_with('*'),
        "{lines:?}"
    );
    assert!(!lines[1].ends_with('*'));
}

#[test]
fn betti_scan_of_an_empty_cloud_is_all_zero() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("empty.csv"), "").unwrap();
    let o = harmclust(
        &[
            "betti-scan",
            "empty.csv",
            "--scales",
            "0.1,0.2",
            "--out",
            "s",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let table: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("s/scan.json")).unwrap()).unwrap();
    for row in table["rows"].as_array().unwrap() {
        assert!(
            row["betti"].as_array().unwrap().iter().all(|b| b == 0),
            "{row}"
        );
    }
}

fn read_assignment(path: &Path) -> AssignmentJson {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn cluster_flat_torus_matches_the_library() {
    let dir = TempDir::new().unwrap();
    let torus = write_torus(dir.path());
    let o = harmclust(
        &[
            "cluster",
            torus.to_str().unwrap(),
            "--accept",
            "0.97",
            "--reject",
            "0.03",
            "--out",
            "c",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("c");
    let a = read_assignment(&out.join("assignment.json"));
    assert_eq!(
        a.clusters.iter().map(Vec::len).collect::<Vec<_>>(),
        vec![9, 9, 9]
    );
    assert!(a.unclustered.is_empty());
    assert_eq!((a.thresholds.accept, a.thresholds.reject), (0.97, 0.03));

    let mut all: Vec<usize> = a.clusters.concat();
    all.sort();
    all.dedup();
    assert_eq!(
        all,
        (0..27).collect::<Vec<_>>(),
        "clusters are disjoint and valid"
    );

    let config = ClusterConfig {
        accept: 0.97,
        reject: 0.03,
        ..ClusterConfig::default()
    };
    let run = harmonic_clustering(
        &flat_torus_triangulation(true),
        &config,
        &SolverOptions::default(),
    )
    .unwrap();
    let expected = assignment_to_json(&run.assignment).unwrap();
    assert_eq!(
        fs::read_to_string(out.join("assignment.json")).unwrap(),
        expected
    );
    assert!(out.join("embedding.svg").exists());
    assert!(
        !out.join("complex.svg").exists(),
        "no coordinates, no complex plot"
    );
    assert_eq!(
        fs::read_to_string(out.join("embedding.csv"))
            .unwrap()
            .lines()
            .count(),
        28
    );
}

#[test]
fn cluster_with_manual_directions() {
    let dir = TempDir::new().unwrap();
    let torus = write_torus(dir.path());
    let o = harmclust(
        &[
            "cluster",
            torus.to_str().unwrap(),
            "--directions",
            "1,0;0,1",
            "--out",
            "c",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let a = read_assignment(&dir.path().join("c/assignment.json"));
    assert_eq!(a.directions, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
}

#[test]
fn cluster_outputs_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let torus = write_torus(dir.path());
    for out in ["r1", "r2"] {
        let o = harmclust(
            &[
                "cluster",
                torus.to_str().unwrap(),
                "--seed",
                "7",
                "--out",
                out,
            ],
            dir.path(),
        );
        assert!(o.status.success());
    }
    for file in [
        "assignment.json",
        "embedding.csv",
        "embedding.svg",
        "manifest.json",
    ] {
        let a = fs::read(dir.path().join("r1").join(file)).unwrap();
        let b = fs::read(dir.path().join("r2").join(file)).unwrap();
        assert_eq!(a, b, "{file}");
    }
}

#[test]
fn cluster_without_homology_says_so() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("tri.json");
    let filled = SimplicialComplex::from_simplices([vec![0, 1, 2]]).unwrap();
    write_complex(&path, &filled, None).unwrap();
    let o = harmclust(
        &["cluster", path.to_str().unwrap(), "--out", "c"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("no degree-1 homology"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn solver_failure_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("strict.toml");
    fs::write(
        &cfg,
        "name = \"strict\"\n[sampler]\nkind = \"flat_torus\"\n[solver]\nsolver = \"iterative\"\nmax_iterations = 1\n",
    )
    .unwrap();
    let o = harmclust(
        &["cluster", "--config", cfg.to_str().unwrap(), "--out", "c"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn invalid_thresholds_are_rejected() {
    let dir = TempDir::new().unwrap();
    let torus = write_torus(dir.path());
    let o = harmclust(
        &["cluster", torus.to_str().unwrap(), "--reject", "0.99"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn baseline_clusters_vertices() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("c.csv"),
        "0,0\n1,0\n0.5,0.8\n4,0\n5,0\n4.5,0.8\n2.5,0\n",
    )
    .unwrap();
    let o = harmclust(
        &[
            "build", "c.csv", "--scale", "1.6", "--dim", "1", "--out", "b",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let o = harmclust(
        &[
            "baseline",
            "b/complex.json",
            "--n-eigenvectors",
            "1",
            "--k",
            "2",
            "--out",
            "v",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("v/vertex_clusters.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(v["clusters"].as_array().unwrap().len(), 2);
    assert!(dir.path().join("v/baseline.svg").exists());

    let o = harmclust(
        &[
            "baseline",
            "b/complex.json",
            "--n-eigenvectors",
            "1",
            "--k",
            "1",
            "--out",
            "w",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("w/vertex_clusters.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(v["clusters"][0].as_array().unwrap().len(), 7);
}

#[test]
fn validate_reports_missing_faces() {
    let dir = TempDir::new().unwrap();
    let torus = write_torus(dir.path());
    let o = harmclust(&["validate", torus.to_str().unwrap()], dir.path());
    assert!(o.status.success());
    let broken = dir.path().join("broken.json");
    fs::write(
        &broken,
        r#"{"dimensions": {"0": [[0], [1]], "1": [[0, 1], [1, 2]]}}"#,
    )
    .unwrap();
    let o = harmclust(&["validate", broken.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("missing"), "{}", stdout(&o));
}

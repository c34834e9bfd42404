use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use harmclust::baseline::graph_spectral_clustering_with;
use harmclust::experiments::{
    build_experiment_complex, choose_scale, harmonic_clustering, ClusterConfig, ExperimentConfig,
    Generated,
};
use harmclust::io::{
    assignment_to_json, embedding_to_csv, read_cloud, read_complex, vertex_clusters_to_json,
    write_cloud, write_complex,
};
use harmclust::synthetic::{
    betti_scan, build_vietoris_rips, rips_betti, select_scale, stable_runs, PointCloud,
};
use harmclust::{svg, SimplicialComplex};
use serde::Serialize;
use serde_json::json;

use crate::{Cli, ClusterArgs, Command, RipsArgs};

/// Settings shared by every command after flag overrides.
struct Context {
    config: Option<ExperimentConfig>,
    seed: u64,
    out: PathBuf,
    command: &'static str,
    inputs: Vec<String>,
    outputs: Vec<String>,
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let config: ExperimentConfig = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
    } else {
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
    };
    Ok(config)
}

/// Parses `1,0;0,1` into direction vectors.
pub fn parse_directions(text: &str) -> Result<Vec<Vec<f64>>> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|v| {
            v.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .with_context(|| format!("bad direction component {x:?}"))
                })
                .collect()
        })
        .collect()
}

impl Context {
    fn new(cli: &Cli, command: &'static str) -> Result<Self> {
        let config = cli.config.as_deref().map(load_config).transpose()?;
        let mut config = config;
        if let (Some(c), Some(seed)) = (config.as_mut(), cli.seed) {
            c.seed = seed;
        }
        let seed = cli.seed.or(config.as_ref().map(|c| c.seed)).unwrap_or(0);
        let out = cli
            .out
            .clone()
            .or_else(|| {
                config
                    .as_ref()
                    .and_then(|c| c.out.clone())
                    .map(PathBuf::from)
            })
            .unwrap_or_else(|| PathBuf::from("out"));
        let mut inputs = Vec::new();
        if let Some(p) = &cli.config {
            inputs.push(p.display().to_string());
        }
        Ok(Context {
            config,
            seed,
            out,
            command,
            inputs,
            outputs: Vec::new(),
        })
    }

    fn require_config(&self, what: &str) -> Result<&ExperimentConfig> {
        self.config
            .as_ref()
            .with_context(|| format!("{what}: pass an input file or --config"))
    }

    fn cluster_config(&self) -> ClusterConfig {
        self.config
            .as_ref()
            .map(|c| c.cluster.clone())
            .unwrap_or_default()
    }

    fn solver(&self) -> Result<harmclust::spectral::SolverOptions> {
        let solver = self
            .config
            .as_ref()
            .map(|c| c.solver.clone())
            .unwrap_or_default();
        Ok(solver.options(self.seed)?)
    }

    fn apply_rips(&mut self, rips: &RipsArgs) {
        if let Some(c) = self.config.as_mut() {
            if let Some(r) = c.rips.as_mut() {
                if rips.scale.is_some() {
                    r.scale = rips.scale;
                }
                if let Some(d) = rips.dim {
                    r.max_dim = d;
                }
            }
        }
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out)
            .with_context(|| format!("creating {}", self.out.display()))?;
        let path = self.out.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(name.to_string());
        Ok(path)
    }

    fn record(&mut self, name: &str) {
        self.outputs.push(name.to_string());
    }

    /// Writes `manifest.json`: command, seed, effective config, versions,
    /// inputs and outputs.
    fn finish(mut self, parameters: serde_json::Value) -> Result<()> {
        let manifest = json!({
            "command": self.command,
            "seed": self.seed,
            "versions": {
                "harmclust": harmclust::VERSION,
                "harmclust-cli": env!("CARGO_PKG_VERSION"),
            },
            "config": self.config,
            "parameters": parameters,
            "inputs": self.inputs,
            "outputs": self.outputs,
        });
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        self.outputs.clear();
        self.write("manifest.json", &text)?;
        Ok(())
    }
}

fn pretty<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

pub fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Generate => generate(&cli),
        Command::Build { cloud, rips } => build(&cli, cloud.as_deref(), rips),
        Command::BettiScan {
            cloud,
            scales,
            dim,
            degree,
        } => scan(&cli, cloud.as_deref(), scales.as_deref(), *dim, *degree),
        Command::Cluster {
            complex,
            rips,
            cluster,
        } => cluster_cmd(&cli, complex.as_deref(), rips, cluster),
        Command::Baseline {
            complex,
            rips,
            n_eigenvectors,
            k,
        } => baseline(&cli, complex.as_deref(), rips, *n_eigenvectors, *k),
        Command::Validate { complex } => validate(complex),
    }
}

fn generate(cli: &Cli) -> Result<()> {
    let mut ctx = Context::new(cli, "generate")?;
    let config = ctx.require_config("generate")?.clone();
    match config.sampler.generate(ctx.seed)? {
        Generated::Cloud(cloud) => {
            fs::create_dir_all(&ctx.out)?;
            write_cloud(&ctx.out.join("cloud.csv"), &cloud)?;
            ctx.record("cloud.csv");
            println!(
                "{} points written to {}",
                cloud.len(),
                ctx.out.join("cloud.csv").display()
            );
        }
        Generated::Complex(complex) => {
            fs::create_dir_all(&ctx.out)?;
            write_complex(&ctx.out.join("complex.json"), &complex, None)?;
            ctx.record("complex.json");
            println!(
                "complex with counts {:?} written to {}",
                complex.counts(),
                ctx.out.join("complex.json").display()
            );
        }
    }
    ctx.finish(json!({}))
}

/// Loads the cloud from a file or samples it from the config.
fn obtain_cloud(ctx: &mut Context, path: Option<&Path>) -> Result<PointCloud> {
    if let Some(p) = path {
        ctx.inputs.push(p.display().to_string());
        return Ok(read_cloud(p)?);
    }
    let config = ctx.require_config("no point cloud")?;
    match config.sampler.generate(ctx.seed)? {
        Generated::Cloud(c) => Ok(c),
        Generated::Complex(_) => {
            bail!("the configured sampler produces a complex, not a point cloud")
        }
    }
}

#[derive(Serialize)]
struct BuildSummary {
    scale: f64,
    max_dim: usize,
    counts: Vec<usize>,
    betti: Vec<usize>,
}

fn build(cli: &Cli, cloud_path: Option<&Path>, rips: &RipsArgs) -> Result<()> {
    let mut ctx = Context::new(cli, "build")?;
    ctx.apply_rips(rips);
    let cloud = obtain_cloud(&mut ctx, cloud_path)?;
    let configured = ctx.config.as_ref().and_then(|c| c.rips.clone());
    let max_dim = rips
        .dim
        .or(configured.as_ref().map(|r| r.max_dim))
        .unwrap_or(2);
    let scale = match (rips.scale, configured.as_ref()) {
        (Some(s), _) => s,
        (None, Some(r)) => match (r.scale, &r.scan) {
            (Some(s), _) => s,
            (None, Some(scan)) => choose_scale(&cloud, scan)?.scale,
            (None, None) => bail!("no scale: pass --scale or configure rips.scale or rips.scan"),
        },
        (None, None) => bail!("no scale: pass --scale or configure rips.scale or rips.scan"),
    };
    let complex = build_vietoris_rips(&cloud, scale, max_dim)?;
    let (counts, betti) = rips_betti(&cloud, scale, max_dim)?;
    fs::create_dir_all(&ctx.out)?;
    write_complex(&ctx.out.join("complex.json"), &complex, Some(&cloud.points))?;
    ctx.record("complex.json");
    let summary = BuildSummary {
        scale,
        max_dim,
        counts,
        betti,
    };
    ctx.write("summary.json", &pretty(&summary)?)?;
    println!("scale {scale}, max_dim {max_dim}");
    println!("degree  simplices  betti");
    for (p, (c, b)) in summary.counts.iter().zip(&summary.betti).enumerate() {
        println!("{p:>6}  {c:>9}  {b:>5}");
    }
    ctx.finish(json!({ "scale": scale, "dim": max_dim }))
}

fn scan(
    cli: &Cli,
    cloud_path: Option<&Path>,
    scales: Option<&[f64]>,
    dim: Option<usize>,
    degree: Option<usize>,
) -> Result<()> {
    let mut ctx = Context::new(cli, "betti-scan")?;
    let cloud = obtain_cloud(&mut ctx, cloud_path)?;
    let configured = ctx
        .config
        .as_ref()
        .and_then(|c| c.rips.as_ref())
        .and_then(|r| r.scan.clone());
    let scales: Vec<f64> = match (scales, &configured) {
        (Some(s), _) => s.to_vec(),
        (None, Some(scan)) => scan.scales(),
        (None, None) => bail!("no scales: pass --scales or configure rips.scan"),
    };
    let max_dim = dim.or(configured.as_ref().map(|s| s.max_dim)).unwrap_or(2);
    let degree = degree
        .or(ctx.config.as_ref().map(|c| c.cluster.degree))
        .unwrap_or(1)
        .min(max_dim);
    let rows = betti_scan(&cloud, &scales, max_dim)?;
    let stable: Vec<bool> = {
        let mut s = vec![false; rows.len()];
        for (a, b) in stable_runs(&rows, degree) {
            if b - a >= 2 {
                s[a..b].iter_mut().for_each(|x| *x = true);
            }
        }
        s
    };
    let selected = configured
        .as_ref()
        .and_then(|scan| select_scale(&rows, &scan.target));
    println!(
        "scale       counts                betti   (* = beta_{degree} stable across neighbours)"
    );
    for (row, s) in rows.iter().zip(&stable) {
        println!(
            "{:<10} {:<21} {:<8}{}",
            row.scale,
            format!("{:?}", row.counts),
            format!("{:?}", row.betti),
            if *s { " *" } else { "" }
        );
    }
    if let Some(s) = selected {
        println!("selected scale {s}");
    }
    let table = json!({
        "max_dim": max_dim,
        "degree": degree,
        "rows": rows,
        "stable": stable,
        "selected": selected,
    });
    ctx.write("scan.json", &pretty(&table)?)?;
    ctx.finish(json!({ "scales": scales, "dim": max_dim, "degree": degree }))
}

/// Loads the complex from a file or builds it from the config.
fn obtain_complex(
    ctx: &mut Context,
    path: Option<&Path>,
) -> Result<(SimplicialComplex, Option<Vec<Vec<f64>>>)> {
    if let Some(p) = path {
        ctx.inputs.push(p.display().to_string());
        let file = read_complex(p)?;
        return Ok((file.complex, file.points));
    }
    let config = ctx.require_config("no complex")?;
    let built = build_experiment_complex(config)?;
    if let Some(choice) = &built.scale {
        println!("rips scale {}", choice.scale);
    }
    Ok((built.complex, built.points))
}

fn cluster_cmd(cli: &Cli, path: Option<&Path>, rips: &RipsArgs, args: &ClusterArgs) -> Result<()> {
    let mut ctx = Context::new(cli, "cluster")?;
    ctx.apply_rips(rips);
    let mut config = ctx.cluster_config();
    if let Some(d) = args.degree {
        config.degree = d;
    }
    if let Some(a) = args.accept {
        config.accept = a;
    }
    if let Some(r) = args.reject {
        config.reject = r;
    }
    if args.min_norm.is_some() {
        config.min_norm = args.min_norm;
    }
    if args.k.is_some() {
        config.k = args.k;
    }
    if let Some(d) = &args.directions {
        config.directions = Some(parse_directions(d)?);
    }
    harmclust::clustering::Thresholds::new(
        config.accept,
        config.reject,
        config.min_norm.unwrap_or(0.0),
    )?;
    if let Some(c) = ctx.config.as_mut() {
        c.cluster = config.clone();
    }
    let solver = ctx.solver()?;
    let (complex, points) = obtain_complex(&mut ctx, path)?;
    let run = harmonic_clustering(&complex, &config, &solver)?;

    ctx.write("assignment.json", &assignment_to_json(&run.assignment)?)?;
    ctx.write("embedding.csv", &embedding_to_csv(&complex, &run.embedding))?;
    let scatter = svg::embedding_scatter(
        &run.embedding.points,
        &run.assignment.labels,
        &run.assignment.directions,
    );
    ctx.write("embedding.svg", &scatter)?;
    if let Some(points) = &points {
        let plot = svg::complex_plot(&complex, points, config.degree, &run.assignment.labels)?;
        ctx.write("complex.svg", &plot)?;
    }
    println!(
        "degree {}: harmonic dimension {}, {} clusters of sizes {:?}, {} unclustered",
        config.degree,
        run.basis.len(),
        run.assignment.k(),
        run.assignment.sizes(),
        run.assignment.unclustered().len()
    );
    ctx.finish(json!({ "cluster": config }))
}

fn baseline(
    cli: &Cli,
    path: Option<&Path>,
    rips: &RipsArgs,
    n_eigenvectors: Option<usize>,
    k: Option<usize>,
) -> Result<()> {
    let mut ctx = Context::new(cli, "baseline")?;
    ctx.apply_rips(rips);
    let configured = ctx.config.as_ref().and_then(|c| c.baseline.clone());
    let n = n_eigenvectors
        .or(configured.as_ref().map(|b| b.n_eigenvectors))
        .context("pass --n-eigenvectors or configure [baseline]")?;
    let k = k
        .or(configured.as_ref().map(|b| b.k))
        .context("pass --k or configure [baseline]")?;
    let solver = ctx.solver()?;
    let (complex, points) = obtain_complex(&mut ctx, path)?;
    let clustering = graph_spectral_clustering_with(&complex, n, k, ctx.seed, &solver)?;
    ctx.write(
        "vertex_clusters.json",
        &vertex_clusters_to_json(&complex, &clustering, n, ctx.seed)?,
    )?;
    if let Some(points) = &points {
        let labels: Vec<Option<usize>> = clustering.labels.iter().map(|&l| Some(l)).collect();
        let plot = svg::complex_plot(&complex, points, 0, &labels)?;
        ctx.write("baseline.svg", &plot)?;
    }
    let sizes: Vec<usize> = clustering.clusters().iter().map(Vec::len).collect();
    println!("{} vertex clusters of sizes {sizes:?}", clustering.k);
    ctx.finish(json!({ "n_eigenvectors": n, "k": k }))
}

fn validate(path: &Path) -> Result<()> {
    let file = read_complex(path)?;
    let violations = file.complex.validate();
    if violations.is_empty() {
        println!("valid: counts {:?}", file.complex.counts());
        return Ok(());
    }
    for v in &violations {
        println!("{v}");
    }
    bail!("{} violations", violations.len())
}

mod manifest;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use s2spm::consistency::{bnmi_report, BnmiReport, SweepRow};
use s2spm::enrich::{enrich_space, load_annotations, EnrichConfig};
use s2spm::linkpred::{evaluate, DegreeFeatures, EvalConfig, ModelFeatures};
use s2spm::model::{full_loss, ModelParams, Space, Variant};
use s2spm::sgraph::{
    generate_planted_with, largest_connected_component, load_edge_list, split_connectivity_preserving, Aggregation,
    PlantedConfig, SignedGraph, SplitManifest,
};
use s2spm::train::{fit_ensemble, fit_with, Sampling, TrainConfig};
use s2spm::viz::{circular_layout, dominant_labels, embedding_pca, ordered_adjacency};

use manifest::OutDir;

/// Invalid invocation or missing input; exits with code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

#[derive(Parser)]
#[command(name = "s2spm", version, about = "Signed two-space proximity model toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a signed edge list, keep its largest component, optionally split it.
    Ingest(IngestArgs),
    /// Generate a planted two-space synthetic graph.
    Synth(SynthArgs),
    /// Fit one or more runs and write snapshots.
    Train(TrainArgs),
    /// Signed link prediction on a held-out split.
    Eval(EvalArgs),
    /// Run-to-run consistency of archetype memberships.
    Bnmi(BnmiArgs),
    /// Archetype enrichment of annotation terms.
    Enrich(EnrichArgs),
    /// Circular plots, ordered adjacency matrices and PCA projections.
    Viz(VizArgs),
}

#[derive(Args)]
struct SplitArgs {
    /// Fraction of edges held out for testing; no split when omitted.
    #[arg(long)]
    split_fraction: Option<f64>,
    /// Held-out non-edges per held-out edge.
    #[arg(long, default_value_t = 1.0)]
    zero_multiplier: f64,
    #[arg(long, default_value_t = 0)]
    split_seed: u64,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    edges: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = AggregationArg::NetCount)]
    aggregation: AggregationArg,
    #[command(flatten)]
    split: SplitArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum AggregationArg {
    NetCount,
    NetSign,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 300)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// Negative-space archetype count; defaults to `--k`.
    #[arg(long)]
    k_neg: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    bias: f64,
    #[arg(long)]
    archetype_scale: Option<f64>,
    #[arg(long)]
    corner_weight: Option<f64>,
    #[command(flatten)]
    split: SplitArgs,
}

/// Training options; flags override values from `--config`.
#[derive(Args, Clone)]
struct TrainOpts {
    /// TOML file with `TrainConfig` keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sampling: Option<String>,
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    non_edge_multiplier: Option<usize>,
    #[arg(long)]
    checkpoint_every: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Train on the training part of this split instead of the whole graph.
    #[arg(long)]
    split: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    runs: usize,
    /// Also keep a snapshot at every checkpoint, not only the final one.
    #[arg(long)]
    keep_checkpoints: bool,
    /// Archetype count for both spaces.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    k_pos: Option<usize>,
    #[arg(long)]
    k_neg: Option<usize>,
    #[command(flatten)]
    opts: TrainOpts,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FeatureArg {
    Model,
    Degree,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    snapshot: Option<PathBuf>,
    #[arg(long)]
    split: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = FeatureArg::Model)]
    features: FeatureArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-4)]
    l2: f64,
    /// Row label in the CSV output.
    #[arg(long, default_value = "run")]
    label: String,
}

#[derive(Args)]
struct BnmiArgs {
    /// Graph to train the sweep on.
    #[arg(long, conflicts_with = "snapshots")]
    graph: Option<PathBuf>,
    #[arg(long, requires = "graph")]
    split: Option<PathBuf>,
    /// Archetype counts: `8`, `3,5,8`, `3..64` or `3..64:4`.
    #[arg(long = "k", default_value = "8")]
    k_list: String,
    #[arg(long, default_value_t = 5)]
    runs: usize,
    #[arg(long, default_value_t = 100)]
    perm: usize,
    /// Score existing snapshots instead of training.
    #[arg(long, num_args = 2..)]
    snapshots: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    opts: TrainOpts,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpaceArg {
    Pos,
    Neg,
    Both,
}

impl SpaceArg {
    fn spaces(self) -> Vec<Space> {
        match self {
            SpaceArg::Pos => vec![Space::Pos],
            SpaceArg::Neg => vec![Space::Neg],
            SpaceArg::Both => vec![Space::Pos, Space::Neg],
        }
    }
}

#[derive(Args)]
struct EnrichArgs {
    #[arg(long)]
    snapshot: PathBuf,
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    annotations: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = SpaceArg::Both)]
    space: SpaceArg,
    #[arg(long, default_value_t = 20)]
    min_proteins: usize,
    #[arg(long, default_value_t = 0.002)]
    p_threshold: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    p_max: f64,
    #[arg(long, default_value_t = 0.5)]
    sar: f64,
    #[arg(long, default_value_t = 1000)]
    n_boot: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct VizArgs {
    #[arg(long)]
    snapshot: PathBuf,
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = SpaceArg::Both)]
    space: SpaceArg,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Ingest(a) => cmd_ingest(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bnmi(a) => cmd_bnmi(a),
        Command::Enrich(a) => cmd_enrich(a),
        Command::Viz(a) => cmd_viz(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use s2spm::Error as E;
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() || cause.downcast_ref::<toml::de::Error>().is_some() {
            return EXIT_USAGE;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => EXIT_USAGE,
                E::Domain(_) | E::FullLikelihoodCeiling { .. } => EXIT_USAGE,
                E::DegenerateGate { .. }
                | E::Estimator(_)
                | E::NonFiniteGradient { .. }
                | E::UndefinedAuc(_)
                | E::UndefinedBnmi
                | E::DegeneratePca => EXIT_NUMERIC,
                _ => EXIT_DATA,
            };
        }
        if let Some(e) = cause.downcast_ref::<std::io::Error>() {
            return if e.kind() == std::io::ErrorKind::NotFound { EXIT_USAGE } else { EXIT_DATA };
        }
    }
    EXIT_DATA
}

fn read_input(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn load_graph(path: &Path) -> Result<SignedGraph> {
    let bytes = read_input(path)?;
    serde_json::from_slice(&bytes).with_context(|| format!("parsing graph {}", path.display()))
}

fn load_split(path: &Path) -> Result<SplitManifest> {
    let bytes = read_input(path)?;
    serde_json::from_slice(&bytes).with_context(|| format!("parsing split {}", path.display()))
}

fn load_snapshot(path: &Path) -> Result<ModelParams> {
    let bytes = read_input(path)?;
    let params: ModelParams =
        serde_json::from_slice(&bytes).with_context(|| format!("parsing snapshot {}", path.display()))?;
    params.validate().with_context(|| format!("invalid snapshot {}", path.display()))?;
    Ok(params)
}

fn snapshot_bytes(params: &ModelParams) -> Result<Vec<u8>> {
    Ok(serde_json::to_vec(params)?)
}

fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn check_nodes(params: &ModelParams, g: &SignedGraph) -> Result<()> {
    if params.n_nodes() != g.n_nodes() {
        return Err(UsageError(format!(
            "snapshot has {} nodes but the graph has {}",
            params.n_nodes(),
            g.n_nodes()
        ))
        .into());
    }
    Ok(())
}

fn write_graph_bundle(out: &mut OutDir, g: &SignedGraph, split: &SplitArgs) -> Result<serde_json::Value> {
    out.write("graph.json", &json_bytes(g)?)?;
    let mut split_info = serde_json::Value::Null;
    if let Some(fraction) = split.split_fraction {
        let s = split_connectivity_preserving(g, fraction, split.zero_multiplier, split.split_seed)?;
        let manifest = s.to_manifest(split.split_seed, fraction, split.zero_multiplier);
        out.write("split.json", &json_bytes(&manifest)?)?;
        split_info = json!({
            "fraction": fraction,
            "zero_multiplier": split.zero_multiplier,
            "seed": split.split_seed,
            "train_links": s.train.n_edges(),
            "test_links": s.test_edges.len(),
            "test_zeros": s.test_zeros.len(),
        });
    }
    Ok(split_info)
}

fn cmd_ingest(a: IngestArgs) -> Result<()> {
    let aggregation = match a.aggregation {
        AggregationArg::NetCount => Aggregation::NetCount,
        AggregationArg::NetSign => Aggregation::NetSign,
    };
    let raw = load_edge_list(&a.edges, aggregation)?;
    let g = largest_connected_component(&raw);
    let mut out = OutDir::open(&a.out)?;
    out.record_input(&a.edges)?;
    let split = write_graph_bundle(&mut out, &g, &a.split)?;
    let stats = json!({ "input": raw.stats(), "largest_component": g.stats(), "split": split });
    out.write("stats.json", &json_bytes(&stats)?)?;
    let s = g.stats();
    println!(
        "nodes {} positive {} negative {} total {}",
        s.nodes, s.positive_links, s.negative_links, s.total_links
    );
    out.finish("ingest", Some(a.split.split_seed), json!({ "aggregation": aggregation, "split": split }))?;
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let mut cfg = PlantedConfig::new(a.n, a.k, a.bias);
    cfg.k_neg = a.k_neg.unwrap_or(a.k);
    if let Some(s) = a.archetype_scale {
        cfg.archetype_scale = s;
    }
    if let Some(w) = a.corner_weight {
        cfg.corner_weight = w;
    }
    let (full, truth) = generate_planted_with(&cfg, a.seed)?;
    let keep = s2spm::sgraph::largest_component_nodes(&full);
    let g = full.induced_subgraph(&keep)?;
    let truth = truth.restrict(&keep);
    let mut out = OutDir::open(&a.out)?;
    let split = write_graph_bundle(&mut out, &g, &a.split)?;
    out.write("truth.json", &json_bytes(&truth)?)?;
    let stats = json!({ "generated": full.stats(), "largest_component": g.stats(), "split": split });
    out.write("stats.json", &json_bytes(&stats)?)?;
    println!("nodes {} links {}", g.n_nodes(), g.n_edges());
    out.finish("synth", Some(a.seed), json!({ "planted": cfg, "split": split }))?;
    Ok(())
}

impl TrainOpts {
    fn resolve(&self) -> Result<TrainConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = String::from_utf8(read_input(path)?).context("config file is not UTF-8")?;
                toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?
            }
            None => TrainConfig::default(),
        };
        if let Some(v) = self.lr {
            cfg.lr = v;
        }
        if let Some(v) = self.iterations {
            cfg.iterations = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.sampling {
            cfg.sampling = v.parse::<Sampling>()?;
        }
        if let Some(v) = &self.variant {
            cfg.variant = v.parse::<Variant>()?;
        }
        if let Some(v) = self.non_edge_multiplier {
            cfg.non_edge_multiplier = v;
        }
        if let Some(v) = self.checkpoint_every {
            cfg.checkpoint_every = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Graph to train on, recording the files it came from.
fn training_graph(out: &mut OutDir, graph: &Path, split: Option<&Path>) -> Result<SignedGraph> {
    let g = load_graph(graph)?;
    out.record_input(graph)?;
    match split {
        Some(path) => {
            let s = load_split(path)?.to_split()?;
            out.record_input(path)?;
            if s.train.node_ids() != g.node_ids() {
                return Err(UsageError(format!("split {} does not belong to graph {}", path.display(), graph.display())).into());
            }
            Ok(s.train)
        }
        None => Ok(g),
    }
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let mut cfg = a.opts.resolve()?;
    if let Some(k) = a.k {
        cfg.k_pos = k;
        cfg.k_neg = k;
    }
    cfg.k_pos = a.k_pos.unwrap_or(cfg.k_pos);
    cfg.k_neg = a.k_neg.unwrap_or(cfg.k_neg);
    cfg.validate()?;
    if a.runs == 0 {
        return Err(UsageError("--runs must be at least 1".into()).into());
    }
    let mut out = OutDir::open(&a.out)?;
    let g = training_graph(&mut out, &a.graph, a.split.as_deref())?;
    let mut runs = Vec::new();
    for r in 0..a.runs as u64 {
        let seed = cfg.seed.wrapping_add(r);
        let run_cfg = TrainConfig { seed, ..cfg.clone() };
        let dir = format!("run-{seed}");
        let mut write_failure = None;
        let fitted = fit_with(&g, &run_cfg, |iteration, params| {
            if a.keep_checkpoints {
                let rel = format!("{dir}/iter-{iteration}.snapshot");
                if let Err(e) = snapshot_bytes(params).and_then(|b| out.write(&rel, &b)) {
                    write_failure = Some(e);
                    return Err(s2spm::Error::Domain(format!("could not write checkpoint {rel}")));
                }
            }
            Ok(())
        });
        if let Some(e) = write_failure {
            return Err(e);
        }
        let result = fitted?;
        let snapshot = format!("{dir}/iter-{}.snapshot", run_cfg.iterations);
        out.write(&snapshot, &snapshot_bytes(&result.params)?)?;
        let mut trace = String::from("iteration,loss\n");
        for t in &result.trace {
            let _ = writeln!(trace, "{},{:.17e}", t.iteration, t.loss);
        }
        out.write(&format!("{dir}/trace.csv"), trace.as_bytes())?;
        let run_manifest = json!({
            "config": run_cfg,
            "final_loss": result.final_loss,
            "convergence": result.convergence(),
            "snapshot": snapshot,
            "trace": format!("{dir}/trace.csv"),
        });
        out.write(&format!("{dir}/run.json"), &json_bytes(&run_manifest)?)?;
        println!("{snapshot} final loss {:.6}", result.final_loss);
        runs.push(json!({ "seed": seed, "snapshot": snapshot, "final_loss": result.final_loss }));
    }
    out.finish("train", Some(cfg.seed), json!({ "train": cfg, "runs": runs }))?;
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let split_manifest = load_split(&a.split)?;
    let split = split_manifest.to_split()?;
    let cfg = EvalConfig { seed: a.seed, l2: a.l2 };
    let mut out = OutDir::open(&a.out)?;
    out.record_input(&a.split)?;
    let report = match a.features {
        FeatureArg::Model => {
            let snapshot = a
                .snapshot
                .as_deref()
                .ok_or_else(|| UsageError("--snapshot is required with --features model".into()))?;
            let params = load_snapshot(snapshot)?;
            out.record_input(snapshot)?;
            check_nodes(&params, &split.train)?;
            evaluate(&ModelFeatures::new(&params)?, &split, &cfg)?
        }
        FeatureArg::Degree => evaluate(&DegreeFeatures::new(&split.train), &split, &cfg)?,
    };
    out.write("eval.json", report.to_json()?.as_bytes())?;
    let csv = format!("{}\n{}\n", s2spm::linkpred::EvalReport::CSV_HEADER, report.csv_row(&a.label));
    out.write("eval.csv", csv.as_bytes())?;
    println!("weighted F1 {:.4} accuracy {:.4}", report.weighted_f1, report.accuracy);
    let features = match a.features {
        FeatureArg::Model => "model",
        FeatureArg::Degree => "degree",
    };
    out.finish("eval", Some(a.seed), json!({ "features": features, "l2": a.l2 }))?;
    Ok(())
}

/// Parses `8`, `3,5,8`, `3..64` (inclusive) or `3..64:4`, in any
/// comma-separated combination.
fn parse_k_list(spec: &str) -> Result<Vec<usize>> {
    let bad = || UsageError(format!("invalid archetype list `{spec}`"));
    let mut ks = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((lo, rest)) = part.split_once("..") {
            let (hi, step) = match rest.split_once(':') {
                Some((hi, step)) => (hi, step.parse::<usize>().map_err(|_| bad())?),
                None => (rest, 1),
            };
            let lo: usize = lo.parse().map_err(|_| bad())?;
            let hi: usize = hi.parse().map_err(|_| bad())?;
            if step == 0 || lo > hi {
                return Err(bad().into());
            }
            ks.extend((lo..=hi).step_by(step));
        } else {
            ks.push(part.parse().map_err(|_| bad())?);
        }
    }
    if ks.is_empty() {
        return Err(bad().into());
    }
    Ok(ks)
}

fn cmd_bnmi(a: BnmiArgs) -> Result<()> {
    let mut out = OutDir::open(&a.out)?;
    let mut rows = Vec::new();
    let mut reports: Vec<BnmiReport> = Vec::new();
    let config;
    let seed;
    if !a.snapshots.is_empty() {
        let mut runs = Vec::new();
        for path in &a.snapshots {
            runs.push(load_snapshot(path)?);
            out.record_input(path)?;
        }
        if runs.iter().any(|p| p.n_nodes() != runs[0].n_nodes()) {
            return Err(UsageError("snapshots cover different node sets".into()).into());
        }
        seed = a.opts.seed.unwrap_or(0);
        for space in [Space::Pos, Space::Neg] {
            let q: Vec<_> = runs.iter().map(|p| p.memberships(space)).collect();
            reports.push(bnmi_report(space, &q, a.perm, seed)?);
        }
        config = json!({ "snapshots": a.snapshots, "permutations": a.perm });
    } else {
        let graph = a
            .graph
            .as_deref()
            .ok_or_else(|| UsageError("either --graph or --snapshots is required".into()))?;
        let base = a.opts.resolve()?;
        let g = training_graph(&mut out, graph, a.split.as_deref())?;
        let ks = parse_k_list(&a.k_list)?;
        seed = base.seed;
        for &k in &ks {
            let cfg = TrainConfig {
                k_pos: k,
                k_neg: k,
                ..base.clone()
            };
            let ens = fit_ensemble(&g, &cfg, a.runs)?;
            for space in [Space::Pos, Space::Neg] {
                let rep = s2spm::consistency::ensemble_bnmi(&ens, space, a.perm, base.seed)?;
                println!("k {k} {} mean {:.4} sd {:.4} null {:.4}", space.name(), rep.mean, rep.sd, rep.null_mean);
                reports.push(rep);
            }
        }
        config = json!({ "train": base, "k": ks, "runs": a.runs, "permutations": a.perm });
    }
    for rep in &reports {
        rows.push(SweepRow {
            k: rep.k,
            space: rep.space,
            mean: rep.mean,
            sd: rep.sd,
            null_mean: rep.null_mean,
            null_sd: rep.null_sd,
        });
    }
    let mut csv = format!("{}\n", SweepRow::CSV_HEADER);
    for r in &rows {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    out.write("bnmi_sweep.csv", csv.as_bytes())?;
    out.write("bnmi_reports.json", &json_bytes(&reports)?)?;
    out.finish("bnmi", Some(seed), config)?;
    Ok(())
}

fn cmd_enrich(a: EnrichArgs) -> Result<()> {
    let params = load_snapshot(&a.snapshot)?;
    let g = load_graph(&a.graph)?;
    check_nodes(&params, &g)?;
    let annotations = load_annotations(&a.annotations, &g)?;
    let cfg = EnrichConfig {
        min_proteins: a.min_proteins,
        p_threshold: a.p_threshold,
        alpha: a.alpha,
        p_max_threshold: a.p_max,
        sar_threshold: a.sar,
        n_boot: a.n_boot,
        seed: a.seed,
        ..EnrichConfig::default()
    };
    let mut out = OutDir::open(&a.out)?;
    for path in [&a.snapshot, &a.graph, &a.annotations] {
        out.record_input(path)?;
    }
    for space in a.space.spaces() {
        let report = enrich_space(&params, &annotations, space, &cfg)?;
        out.write(&format!("enrich_{}.json", space.name()), report.to_json()?.as_bytes())?;
        out.write(&format!("enrich_{}.tsv", space.name()), report.summary_table().as_bytes())?;
        println!("{} space: {} enriched terms", space.name(), report.enriched().len());
    }
    out.finish("enrich", Some(a.seed), serde_json::to_value(&cfg)?)?;
    Ok(())
}

fn cmd_viz(a: VizArgs) -> Result<()> {
    let params = load_snapshot(&a.snapshot)?;
    let g = load_graph(&a.graph)?;
    check_nodes(&params, &g)?;
    let mut out = OutDir::open(&a.out)?;
    out.record_input(&a.snapshot)?;
    out.record_input(&a.graph)?;
    for space in a.space.spaces() {
        let name = space.name();
        let circle = circular_layout(&params, &g, space)?;
        out.write(&format!("circular_{name}.svg"), circle.to_svg().as_bytes())?;
        out.write(&format!("circular_{name}.csv"), circle.to_csv(g.node_ids()).as_bytes())?;
        let adjacency = ordered_adjacency(&params, &g, space)?;
        out.write(&format!("adjacency_{name}.svg"), adjacency.to_svg().as_bytes())?;
        out.write(&format!("adjacency_{name}.csv"), adjacency.to_csv().as_bytes())?;
        let pca = embedding_pca(&params, space)?;
        let labels = dominant_labels(&params, space);
        out.write(&format!("pca_{name}.svg"), pca.to_svg(Some(&labels)).as_bytes())?;
        out.write(&format!("pca_{name}.csv"), pca.to_csv().as_bytes())?;
    }
    let loss = if g.n_nodes() <= s2spm::model::FULL_LIKELIHOOD_CEILING {
        Some(full_loss(&params, &g)?)
    } else {
        None
    };
    out.finish("viz", None, json!({ "full_nll": loss }))?;
    Ok(())
}

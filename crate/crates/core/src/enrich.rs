//! Archetype enrichment analysis of annotation terms.
//!
//! Nodes are ranked by their distance to an archetype, split into equal
//! bins, and a term is tested for over-representation in the closest bin.
//! A term counts as significant at one bin size when the hypergeometric
//! p-value is small, it survives Benjamini–Hochberg, and the first bin wins
//! the bootstrap maximality test. Repeating over bin sizes from 1% to 20% of
//! the network gives the significance appearance rate (SAR).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ArchetypeSet, ModelParams, Space};
use crate::sgraph::SignedGraph;
use crate::special::{ln_binomial, log_add_exp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TermCategory {
    BiologicalProcess,
    MolecularFunction,
    CellularComponent,
}

impl TermCategory {
    pub fn name(self) -> &'static str {
        match self {
            TermCategory::BiologicalProcess => "biological-process",
            TermCategory::MolecularFunction => "molecular-function",
            TermCategory::CellularComponent => "cellular-component",
        }
    }
}

impl std::str::FromStr for TermCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['_', ' '], "-");
        match key.as_str() {
            "biological-process" | "p" | "bp" => Ok(TermCategory::BiologicalProcess),
            "molecular-function" | "f" | "mf" => Ok(TermCategory::MolecularFunction),
            "cellular-component" | "c" | "cc" => Ok(TermCategory::CellularComponent),
            _ => Err(Error::domain(format!("unknown term category `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub id: String,
    pub category: TermCategory,
    pub label: String,
    pub nodes: BTreeSet<usize>,
}

/// Terms keyed by id, each with the graph nodes it annotates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnnotationTable {
    pub n_nodes: usize,
    pub terms: BTreeMap<String, Term>,
    /// Rows whose protein is not a node of the graph.
    pub skipped_rows: usize,
}

impl AnnotationTable {
    pub fn new(n_nodes: usize) -> Self {
        AnnotationTable {
            n_nodes,
            ..Default::default()
        }
    }

    /// Adds one annotation; the first occurrence of a term fixes its metadata.
    pub fn insert(&mut self, term: &str, category: TermCategory, label: &str, node: usize) -> Result<()> {
        if node >= self.n_nodes {
            return Err(Error::domain(format!("node {node} out of range for {} nodes", self.n_nodes)));
        }
        self.terms
            .entry(term.to_string())
            .or_insert_with(|| Term {
                id: term.to_string(),
                category,
                label: label.to_string(),
                nodes: BTreeSet::new(),
            })
            .nodes
            .insert(node);
        Ok(())
    }

    /// Terms annotating at least `min_proteins` nodes, in id order.
    pub fn eligible(&self, min_proteins: usize) -> Vec<&Term> {
        self.terms.values().filter(|t| t.nodes.len() >= min_proteins).collect()
    }
}

/// Reads `protein-id, go-term-id, category, label` rows (tab or comma
/// separated) and maps proteins to nodes of `g` by id. `#` lines and a
/// leading header naming the protein column are skipped.
pub fn parse_annotations<R: BufRead>(reader: R, g: &SignedGraph) -> Result<AnnotationTable> {
    let mut table = AnnotationTable::new(g.n_nodes());
    let mut first = true;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
            continue;
        }
        let delim = if trimmed.contains('\t') { '\t' } else { ',' };
        let fields: Vec<&str> = trimmed.splitn(4, delim).map(str::trim).collect();
        let was_first = std::mem::replace(&mut first, false);
        if was_first && fields[0].to_ascii_lowercase().starts_with("protein") {
            continue;
        }
        if fields.len() < 3 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected at least 3 fields, found {}", fields.len()),
            });
        }
        let category: TermCategory = fields[2].parse().map_err(|e: Error| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let label = fields.get(3).copied().unwrap_or("");
        match g.node_index(fields[0]) {
            Some(node) => table.insert(fields[1], category, label, node)?,
            None => table.skipped_rows += 1,
        }
    }
    Ok(table)
}

pub fn load_annotations(path: impl AsRef<Path>, g: &SignedGraph) -> Result<AnnotationTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_annotations(std::io::BufReader::new(file), g)
}

/// Nodes in ascending distance between `A m_i` and archetype column `k`,
/// ties broken by node index.
pub fn rank_by_archetype_distance(params: &ModelParams, arch: &ArchetypeSet, space: Space, k: usize) -> Result<Vec<usize>> {
    let a = arch.get(space);
    if k >= a.ncols() {
        return Err(Error::domain(format!("archetype {k} out of range for K = {}", a.ncols())));
    }
    let embedded = a.dot(&params.memberships(space));
    let target = a.column(k);
    let dist: Vec<f64> = embedded
        .columns()
        .into_iter()
        .map(|c| c.iter().zip(target.iter()).map(|(x, y)| (x - y).powi(2)).sum::<f64>())
        .collect();
    let mut order: Vec<usize> = (0..dist.len()).collect();
    order.sort_by(|&i, &j| dist[i].total_cmp(&dist[j]).then(i.cmp(&j)));
    Ok(order)
}

/// Consecutive bins of `floor(fraction * N)` ranked nodes; the remainder
/// joins the last bin.
pub fn make_bins(ranked: &[usize], bin_fraction: f64) -> Result<Vec<Vec<usize>>> {
    if !(bin_fraction > 0.0 && bin_fraction <= 0.5) {
        return Err(Error::domain(format!("bin fraction must lie in (0, 0.5], got {bin_fraction}")));
    }
    let n = ranked.len();
    // Guard against 0.07 * 100 = 7.000000000000001 style rounding.
    let size = (bin_fraction * n as f64 + 1e-9).floor() as usize;
    if size == 0 {
        return Err(Error::domain(format!("bin fraction {bin_fraction} of {n} nodes gives empty bins")));
    }
    let full = n / size;
    let mut bins: Vec<Vec<usize>> = ranked.chunks(size).map(<[usize]>::to_vec).collect();
    if bins.len() > full {
        let tail = bins.pop().expect("non-empty");
        bins.last_mut().expect("at least one full bin").extend(tail);
    }
    Ok(bins)
}

/// Term density in the bin relative to the global density.
pub fn enrichment_value(bin: &[usize], term_nodes: &BTreeSet<usize>, global_density: f64) -> f64 {
    if bin.is_empty() {
        return 0.0;
    }
    let hits = bin.iter().filter(|n| term_nodes.contains(n)).count();
    hits as f64 / bin.len() as f64 / global_density
}

/// `P(X >= k)` for `X ~ Hypergeometric(population, successes, draws)`.
pub fn hypergeom_sf(k: u64, draws: u64, successes: u64, population: u64) -> Result<f64> {
    if draws > population || successes > population || k > draws {
        return Err(Error::domain(format!(
            "invalid hypergeometric arguments k={k}, draws={draws}, successes={successes}, population={population}"
        )));
    }
    let lo = draws.saturating_sub(population - successes);
    let hi = draws.min(successes);
    if k <= lo {
        return Ok(1.0);
    }
    if k > hi {
        return Ok(0.0);
    }
    let log_total = ln_binomial(population, draws);
    let log_sf = (k..=hi).fold(f64::NEG_INFINITY, |acc, x| {
        log_add_exp(acc, ln_binomial(successes, x) + ln_binomial(population - successes, draws - x) - log_total)
    });
    Ok(log_sf.exp().min(1.0))
}

/// Benjamini–Hochberg step-up rejections at level `alpha`.
pub fn bh_fdr(p_values: &[f64], alpha: f64) -> Vec<bool> {
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]).then(a.cmp(&b)));
    let cutoff = (1..=m).rev().find(|&rank| p_values[order[rank - 1]] <= rank as f64 * alpha / m as f64);
    let mut reject = vec![false; m];
    if let Some(last) = cutoff {
        for &i in &order[..last] {
            reject[i] = true;
        }
    }
    reject
}

/// Fraction of bootstrap replicates in which the first bin has the strictly
/// largest enrichment value. Resampling a bin with replacement draws its hit
/// count from `Binomial(|bin|, hits / |bin|)`.
pub fn p_max_bootstrap(bins: &[Vec<usize>], term_nodes: &BTreeSet<usize>, n_boot: usize, seed: u64) -> Result<f64> {
    if n_boot == 0 {
        return Err(Error::domain("at least one bootstrap replicate is required"));
    }
    if bins.len() < 2 {
        return Ok(1.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samplers = bins
        .iter()
        .map(|b| {
            let hits = b.iter().filter(|n| term_nodes.contains(n)).count();
            let p = if b.is_empty() { 0.0 } else { hits as f64 / b.len() as f64 };
            Binomial::new(b.len() as u64, p).map_err(|e| Error::domain(e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    // Enrichment values share the global density, so densities compare directly.
    let mut wins = 0usize;
    for _ in 0..n_boot {
        let densities: Vec<f64> = samplers
            .iter()
            .zip(bins)
            .map(|(s, b)| s.sample(&mut rng) as f64 / b.len().max(1) as f64)
            .collect();
        if densities[1..].iter().all(|&d| densities[0] > d) {
            wins += 1;
        }
    }
    Ok(wins as f64 / n_boot as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnrichConfig {
    pub min_proteins: usize,
    pub p_threshold: f64,
    pub alpha: f64,
    pub p_max_threshold: f64,
    pub sar_threshold: f64,
    /// Bin sizes as fractions of N.
    pub bin_fractions: Vec<f64>,
    pub n_boot: usize,
    pub seed: u64,
}

impl Default for EnrichConfig {
    fn default() -> Self {
        EnrichConfig {
            min_proteins: 20,
            p_threshold: 0.002,
            alpha: 0.05,
            p_max_threshold: 0.5,
            sar_threshold: 0.5,
            bin_fractions: (1..=20).map(|p| p as f64 / 100.0).collect(),
            n_boot: 1000,
            seed: 0,
        }
    }
}

/// Statistics of one term at one bin size for one archetype.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrichmentRecord {
    pub archetype: usize,
    pub term: String,
    pub bin_fraction: f64,
    pub n_bins: usize,
    pub hits_first_bin: usize,
    pub e_first_bin: f64,
    pub p_value: f64,
    pub passes_bh: bool,
    /// Only computed when the p-value and BH criteria already hold.
    pub p_max: Option<f64>,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermSummary {
    pub archetype: usize,
    pub term: String,
    pub category: TermCategory,
    pub label: String,
    pub n_proteins: usize,
    pub significant_fractions: usize,
    pub sar: f64,
    pub enriched: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrichmentReport {
    pub space: Space,
    pub config: EnrichConfig,
    pub p_max_method: String,
    pub excluded_terms: usize,
    pub summaries: Vec<TermSummary>,
    pub records: Vec<EnrichmentRecord>,
}

impl EnrichmentReport {
    /// Enriched terms, ordered by archetype then SAR (descending).
    pub fn enriched(&self) -> Vec<&TermSummary> {
        let mut out: Vec<&TermSummary> = self.summaries.iter().filter(|s| s.enriched).collect();
        out.sort_by(|a, b| a.archetype.cmp(&b.archetype).then(b.sar.total_cmp(&a.sar)).then(a.term.cmp(&b.term)));
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Plain-text table of enriched terms per archetype.
    pub fn summary_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "space\tarchetype\tterm\tcategory\tproteins\tSAR\tlabel");
        for s in self.enriched() {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{:.2}\t{}",
                self.space.name(),
                s.archetype,
                s.term,
                s.category.name(),
                s.n_proteins,
                s.sar,
                s.label
            );
        }
        out
    }
}

const P_MAX_METHOD: &str = "within-bin bootstrap, binomial resampling of bin hit counts";

fn bootstrap_seed(seed: u64, archetype: usize, fraction: usize, term: usize) -> u64 {
    // SplitMix64 finalizer over the packed indices.
    let mut z = seed ^ ((archetype as u64) << 48 | (fraction as u64) << 32 | term as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sweep over bin sizes for one archetype.
pub fn enrich_archetype_sweep(
    params: &ModelParams,
    arch: &ArchetypeSet,
    annotations: &AnnotationTable,
    space: Space,
    k: usize,
    cfg: &EnrichConfig,
) -> Result<(Vec<TermSummary>, Vec<EnrichmentRecord>)> {
    let n = params.n_nodes();
    if annotations.n_nodes != n {
        return Err(Error::domain(format!(
            "annotations cover {} nodes but the model has {n}",
            annotations.n_nodes
        )));
    }
    if cfg.bin_fractions.is_empty() {
        return Err(Error::domain("no bin fractions configured"));
    }
    let terms = annotations.eligible(cfg.min_proteins);
    let ranked = rank_by_archetype_distance(params, arch, space, k)?;
    let mut counts = vec![0usize; terms.len()];
    let mut records = Vec::new();
    for (fi, &fraction) in cfg.bin_fractions.iter().enumerate() {
        let bins = make_bins(&ranked, fraction)?;
        let first = &bins[0];
        let mut stats = Vec::with_capacity(terms.len());
        for term in &terms {
            let hits = first.iter().filter(|v| term.nodes.contains(v)).count();
            let global = term.nodes.len() as f64 / n as f64;
            let p = hypergeom_sf(hits as u64, first.len() as u64, term.nodes.len() as u64, n as u64)?;
            stats.push((hits, enrichment_value(first, &term.nodes, global), p));
        }
        let p_values: Vec<f64> = stats.iter().map(|s| s.2).collect();
        let bh = bh_fdr(&p_values, cfg.alpha);
        for (ti, term) in terms.iter().enumerate() {
            let (hits, e, p) = stats[ti];
            let p_max = if p < cfg.p_threshold && bh[ti] {
                Some(p_max_bootstrap(&bins, &term.nodes, cfg.n_boot, bootstrap_seed(cfg.seed, k, fi, ti))?)
            } else {
                None
            };
            let significant = p_max.is_some_and(|pm| pm > cfg.p_max_threshold);
            counts[ti] += usize::from(significant);
            records.push(EnrichmentRecord {
                archetype: k,
                term: term.id.clone(),
                bin_fraction: fraction,
                n_bins: bins.len(),
                hits_first_bin: hits,
                e_first_bin: e,
                p_value: p,
                passes_bh: bh[ti],
                p_max,
                significant,
            });
        }
    }
    let summaries = terms
        .iter()
        .zip(&counts)
        .map(|(term, &c)| {
            let sar = c as f64 / cfg.bin_fractions.len() as f64;
            TermSummary {
                archetype: k,
                term: term.id.clone(),
                category: term.category,
                label: term.label.clone(),
                n_proteins: term.nodes.len(),
                significant_fractions: c,
                sar,
                enriched: sar >= cfg.sar_threshold,
            }
        })
        .collect();
    Ok((summaries, records))
}

/// Sweep over every archetype of a space.
pub fn enrich_space(params: &ModelParams, annotations: &AnnotationTable, space: Space, cfg: &EnrichConfig) -> Result<EnrichmentReport> {
    let arch = params.archetypes()?;
    let k_count = arch.get(space).ncols();
    let mut summaries = Vec::new();
    let mut records = Vec::new();
    for k in 0..k_count {
        let (s, r) = enrich_archetype_sweep(params, &arch, annotations, space, k, cfg)?;
        summaries.extend(s);
        records.extend(r);
    }
    Ok(EnrichmentReport {
        space,
        config: cfg.clone(),
        p_max_method: P_MAX_METHOD.to_string(),
        excluded_terms: annotations.terms.len() - annotations.eligible(cfg.min_proteins).len(),
        summaries,
        records,
    })
}

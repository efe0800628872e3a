//! Signed graphs: ingestion, connected components, connectivity-preserving
//! edge splits and a planted-structure generator.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::skellam::sample_skellam;

/// An undirected signed edge with `u < v` and `y != 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub y: i64,
}

impl Edge {
    pub fn new(a: usize, b: usize, y: i64) -> Self {
        let (u, v) = if a < b { (a, b) } else { (b, a) };
        Edge { u, v, y }
    }
}

/// Node-indexed undirected signed graph with integer edge weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphFile", into = "GraphFile")]
pub struct SignedGraph {
    node_ids: Vec<String>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(usize, i64)>>,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    node_ids: Vec<String>,
    edges: Vec<(usize, usize, i64)>,
}

impl From<SignedGraph> for GraphFile {
    fn from(g: SignedGraph) -> Self {
        GraphFile {
            edges: g.edges.iter().map(|e| (e.u, e.v, e.y)).collect(),
            node_ids: g.node_ids,
        }
    }
}

impl TryFrom<GraphFile> for SignedGraph {
    type Error = Error;

    fn try_from(f: GraphFile) -> Result<Self> {
        let edges = f.edges.into_iter().map(|(u, v, y)| Edge::new(u, v, y)).collect();
        SignedGraph::new(f.node_ids, edges)
    }
}

/// Summary counts in the layout of a dataset statistics table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub positive_links: usize,
    pub negative_links: usize,
    pub total_links: usize,
    pub density: f64,
}

impl SignedGraph {
    /// Builds a graph, validating the invariants: no self-loops, no
    /// duplicate pairs, non-zero weights and indices below `node_ids.len()`.
    pub fn new(node_ids: Vec<String>, edges: Vec<Edge>) -> Result<Self> {
        let n = node_ids.len();
        let mut edges: Vec<Edge> = edges.into_iter().map(|e| Edge::new(e.u, e.v, e.y)).collect();
        edges.sort_unstable();
        for w in edges.windows(2) {
            if (w[0].u, w[0].v) == (w[1].u, w[1].v) {
                return Err(Error::domain(format!("duplicate edge ({}, {})", w[0].u, w[0].v)));
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        for e in &edges {
            if e.u == e.v {
                return Err(Error::domain(format!("self-loop on node {}", e.u)));
            }
            if e.v >= n {
                return Err(Error::domain(format!("edge ({}, {}) references node beyond {n}", e.u, e.v)));
            }
            if e.y == 0 {
                return Err(Error::domain(format!("zero-weight edge ({}, {})", e.u, e.v)));
            }
            adjacency[e.u].push((e.v, e.y));
            adjacency[e.v].push((e.u, e.y));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(SignedGraph {
            node_ids,
            edges,
            adjacency,
        })
    }

    /// Graph with anonymous ids `"0"`, `"1"`, ...
    pub fn from_edges(n_nodes: usize, edges: Vec<Edge>) -> Result<Self> {
        Self::new((0..n_nodes).map(|i| i.to_string()).collect(), edges)
    }

    pub fn n_nodes(&self) -> usize {
        self.node_ids.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges sorted by `(u, v)`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.node_ids.iter().position(|n| n == id)
    }

    /// Neighbors of `i` with edge weights, sorted by neighbor index.
    pub fn neighbors(&self, i: usize) -> &[(usize, i64)] {
        &self.adjacency[i]
    }

    /// `y_ij`, zero for non-adjacent pairs.
    pub fn weight(&self, i: usize, j: usize) -> i64 {
        let row = &self.adjacency[i];
        match row.binary_search_by_key(&j, |&(n, _)| n) {
            Ok(pos) => row[pos].1,
            Err(_) => 0,
        }
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.weight(i, j) != 0
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn stats(&self) -> GraphStats {
        let positive_links = self.edges.iter().filter(|e| e.y > 0).count();
        let negative_links = self.edges.iter().filter(|e| e.y < 0).count();
        let n = self.n_nodes();
        let pairs = n * n.saturating_sub(1) / 2;
        GraphStats {
            nodes: n,
            positive_links,
            negative_links,
            total_links: self.edges.len(),
            density: if pairs == 0 { 0.0 } else { self.edges.len() as f64 / pairs as f64 },
        }
    }

    /// Connected components (signs ignored), each sorted ascending, ordered by
    /// their smallest node.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.n_nodes();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &(v, _) in &self.adjacency[u] {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.n_nodes() <= 1 || self.components().len() == 1
    }

    /// Induced subgraph on `nodes` (must be strictly increasing); indices
    /// are recompacted in that order.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Result<SignedGraph> {
        let mut remap = HashMap::with_capacity(nodes.len());
        for (new, &old) in nodes.iter().enumerate() {
            if old >= self.n_nodes() {
                return Err(Error::domain(format!("node {old} out of range")));
            }
            remap.insert(old, new);
        }
        let edges = self
            .edges
            .iter()
            .filter_map(|e| match (remap.get(&e.u), remap.get(&e.v)) {
                (Some(&a), Some(&b)) => Some(Edge::new(a, b, e.y)),
                _ => None,
            })
            .collect();
        let ids = nodes.iter().map(|&i| self.node_ids[i].clone()).collect();
        SignedGraph::new(ids, edges)
    }
}

/// How multiple records for the same unordered pair are merged.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// `y = #positive - #negative` (weighted by record magnitude).
    #[default]
    NetCount,
    /// Sign of the net count, so every stored edge has `|y| = 1`.
    NetSign,
}

fn parse_sign(field: &str) -> Option<i64> {
    let f = field.trim().to_ascii_lowercase();
    if f.starts_with("up-regulates") {
        return Some(1);
    }
    if f.starts_with("down-regulates") {
        return Some(-1);
    }
    match f.parse::<i64>() {
        Ok(0) | Err(_) => None,
        Ok(v) => Some(v),
    }
}

/// Parses a delimited edge list (`source, target, sign`) from a reader.
///
/// Tab is used as the delimiter when present on a line, comma otherwise.
/// Blank lines and `#` comments are skipped; the first data line is treated
/// as a header when its sign column does not parse.
pub fn parse_edge_list<R: BufRead>(reader: R, aggregation: Aggregation) -> Result<SignedGraph> {
    let mut ids: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut net: HashMap<(usize, usize), i64> = HashMap::new();
    let mut rows = 0usize;
    let mut first = true;

    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let delim = if trimmed.contains('\t') { '\t' } else { ',' };
        let cols: Vec<&str> = trimmed.split(delim).map(str::trim).collect();
        let was_first = std::mem::replace(&mut first, false);
        if cols.len() < 3 {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("expected 3 columns, found {}", cols.len()),
            });
        }
        let Some(sign) = parse_sign(cols[2]) else {
            if was_first {
                continue;
            }
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!("unrecognized sign `{}`", cols[2]),
            });
        };
        if cols[0].is_empty() || cols[1].is_empty() {
            return Err(Error::Parse {
                line: lineno + 1,
                message: "empty node id".into(),
            });
        }
        let mut intern = |id: &str| -> usize {
            if let Some(&i) = index.get(id) {
                return i;
            }
            ids.push(id.to_string());
            index.insert(id.to_string(), ids.len() - 1);
            ids.len() - 1
        };
        let a = intern(cols[0]);
        let b = intern(cols[1]);
        rows += 1;
        if a == b {
            log::debug!("line {}: dropping self-interaction of {}", lineno + 1, cols[0]);
            continue;
        }
        let key = if a < b { (a, b) } else { (b, a) };
        *net.entry(key).or_insert(0) += sign;
    }
    if rows == 0 {
        return Err(Error::EmptyGraph);
    }
    let edges = net
        .into_iter()
        .filter(|&(_, y)| y != 0)
        .map(|((u, v), y)| match aggregation {
            Aggregation::NetCount => Edge::new(u, v, y),
            Aggregation::NetSign => Edge::new(u, v, y.signum()),
        })
        .collect();
    SignedGraph::new(ids, edges)
}

/// Loads an edge-list file, see [`parse_edge_list`].
pub fn load_edge_list(path: impl AsRef<Path>, aggregation: Aggregation) -> Result<SignedGraph> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(BufReader::new(file), aggregation)
}

/// Nodes of the largest component; ties go to the component containing the
/// smallest index.
pub fn largest_component_nodes(g: &SignedGraph) -> Vec<usize> {
    let mut best: Vec<usize> = Vec::new();
    // components() is ordered by smallest member, so strict > keeps the
    // earliest among equal sizes.
    for comp in g.components() {
        if comp.len() > best.len() {
            best = comp;
        }
    }
    best
}

pub fn largest_connected_component(g: &SignedGraph) -> SignedGraph {
    let nodes = largest_component_nodes(g);
    g.induced_subgraph(&nodes).expect("component nodes are valid indices")
}

/// Train graph plus held-out signed edges and sampled non-edges.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSplit {
    pub train: SignedGraph,
    pub test_edges: Vec<Edge>,
    /// Pairs `(u, v)`, `u < v`, that are non-edges of the original graph.
    pub test_zeros: Vec<(usize, usize)>,
}

impl EdgeSplit {
    /// Whether `{i, j}` is an edge of the graph the split was made from.
    pub fn original_edge_set(&self) -> HashSet<(usize, usize)> {
        self.train
            .edges()
            .iter()
            .chain(self.test_edges.iter())
            .map(|e| (e.u, e.v))
            .collect()
    }

    pub fn to_manifest(&self, seed: u64, fraction: f64, zero_multiplier: f64) -> SplitManifest {
        let ids = self.train.node_ids();
        let named = |e: &Edge| (ids[e.u].clone(), ids[e.v].clone(), e.y);
        SplitManifest {
            seed,
            fraction,
            zero_multiplier,
            nodes: ids.to_vec(),
            train: self.train.edges().iter().map(named).collect(),
            test_edges: self.test_edges.iter().map(named).collect(),
            test_zeros: self
                .test_zeros
                .iter()
                .map(|&(u, v)| (ids[u].clone(), ids[v].clone()))
                .collect(),
        }
    }
}

/// On-disk form of an [`EdgeSplit`], keyed by external node ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub fraction: f64,
    pub zero_multiplier: f64,
    pub nodes: Vec<String>,
    pub train: Vec<(String, String, i64)>,
    pub test_edges: Vec<(String, String, i64)>,
    pub test_zeros: Vec<(String, String)>,
}

impl SplitManifest {
    pub fn to_split(&self) -> Result<EdgeSplit> {
        let index: HashMap<&str, usize> = self.nodes.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let lookup = |id: &str| {
            index
                .get(id)
                .copied()
                .ok_or_else(|| Error::domain(format!("unknown node id `{id}` in split manifest")))
        };
        let edges = |list: &[(String, String, i64)]| -> Result<Vec<Edge>> {
            list.iter().map(|(a, b, y)| Ok(Edge::new(lookup(a)?, lookup(b)?, *y))).collect()
        };
        let train = SignedGraph::new(self.nodes.clone(), edges(&self.train)?)?;
        let mut test_edges = edges(&self.test_edges)?;
        test_edges.sort_unstable();
        let test_zeros = self
            .test_zeros
            .iter()
            .map(|(a, b)| {
                let (u, v) = (lookup(a)?, lookup(b)?);
                Ok((u.min(v), u.max(v)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(EdgeSplit {
            train,
            test_edges,
            test_zeros,
        })
    }
}

/// Uniformly samples `count` distinct node pairs `(u < v)` that are neither
/// in `forbidden` nor edges of `g`.
pub(crate) fn sample_non_edges<R: Rng>(
    g: &SignedGraph,
    forbidden: &HashSet<(usize, usize)>,
    count: usize,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    let n = g.n_nodes();
    let total = n * n.saturating_sub(1) / 2;
    let available = total.saturating_sub(g.n_edges()).saturating_sub(forbidden.len());
    if count > available {
        return Err(Error::domain(format!(
            "requested {count} non-adjacent pairs but at most {available} exist"
        )));
    }
    let mut chosen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a == b {
            continue;
        }
        let pair = (a.min(b), a.max(b));
        if g.has_edge(pair.0, pair.1) || forbidden.contains(&pair) || !chosen.insert(pair) {
            continue;
        }
        out.push(pair);
    }
    Ok(out)
}

/// Moves `floor(fraction * |E|)` edges to a test set while keeping the
/// residual graph connected, then samples `zero_multiplier * |test|`
/// non-adjacent pairs of the original graph.
///
/// Candidates are visited in a seeded random order; an edge that is a bridge
/// of the current residual graph is skipped. Since edges are only ever
/// removed, a skipped bridge stays a bridge and never needs revisiting.
pub fn split_connectivity_preserving(
    g: &SignedGraph,
    fraction: f64,
    zero_multiplier: f64,
    seed: u64,
) -> Result<EdgeSplit> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::domain(format!("split fraction must lie in (0, 1), got {fraction}")));
    }
    if !(zero_multiplier >= 0.0) {
        return Err(Error::domain("zero multiplier must be non-negative"));
    }
    if !g.is_connected() {
        return Err(Error::domain("split requires a connected graph"));
    }
    let requested = (fraction * g.n_edges() as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let n = g.n_nodes();
    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (id, e) in g.edges().iter().enumerate() {
        adjacency[e.u].push((e.v, id));
        adjacency[e.v].push((e.u, id));
    }
    let mut removed = vec![false; g.n_edges()];
    let mut order: Vec<usize> = (0..g.n_edges()).collect();
    order.shuffle(&mut rng);

    let mut seen = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    let mut taken = Vec::with_capacity(requested);
    for (stamp, &cand) in order.iter().enumerate() {
        if taken.len() == requested {
            break;
        }
        let Edge { u, v, .. } = g.edges()[cand];
        // BFS from u to v in the residual graph without `cand`.
        removed[cand] = true;
        queue.clear();
        queue.push_back(u);
        seen[u] = stamp;
        let mut reached = false;
        'bfs: while let Some(x) = queue.pop_front() {
            for &(y, id) in &adjacency[x] {
                if removed[id] || seen[y] == stamp {
                    continue;
                }
                if y == v {
                    reached = true;
                    break 'bfs;
                }
                seen[y] = stamp;
                queue.push_back(y);
            }
        }
        if reached {
            taken.push(cand);
        } else {
            removed[cand] = false;
        }
    }
    if taken.len() < requested {
        return Err(Error::InfeasibleSplit {
            requested,
            removed: taken.len(),
        });
    }

    let mut test_edges: Vec<Edge> = taken.iter().map(|&id| g.edges()[id]).collect();
    test_edges.sort_unstable();
    let train_edges = g
        .edges()
        .iter()
        .enumerate()
        .filter(|(id, _)| !removed[*id])
        .map(|(_, e)| *e)
        .collect();
    let train = SignedGraph::new(g.node_ids().to_vec(), train_edges)?;

    let n_zeros = (zero_multiplier * test_edges.len() as f64).round() as usize;
    let mut test_zeros = sample_non_edges(g, &HashSet::new(), n_zeros, &mut rng)?;
    test_zeros.sort_unstable();
    Ok(EdgeSplit {
        train,
        test_edges,
        test_zeros,
    })
}

/// Settings of the planted two-space generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedConfig {
    pub n: usize,
    pub k_pos: usize,
    pub k_neg: usize,
    /// Shared node bias, used as both `gamma_i` and `delta_i`.
    pub bias: f64,
    /// Archetypes are `scale * e_k`, so pure nodes of different corners sit
    /// `scale * sqrt(2)` apart.
    pub archetype_scale: f64,
    /// Dirichlet concentration of the residual mass spread off the corner.
    pub corner_weight: f64,
}

impl PlantedConfig {
    pub fn new(n: usize, k: usize, bias: f64) -> Self {
        PlantedConfig {
            n,
            k_pos: k,
            k_neg: k,
            bias,
            archetype_scale: 6.0,
            corner_weight: 0.9,
        }
    }
}

/// Ground truth of a planted graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedTruth {
    /// Positive-space memberships, `k_pos x n`, columns on the simplex.
    pub z: Array2<f64>,
    /// Negative-space memberships, `k_neg x n`.
    pub w: Array2<f64>,
    pub a_pos: Array2<f64>,
    pub a_neg: Array2<f64>,
    pub gamma: Array1<f64>,
    pub delta: Array1<f64>,
}

impl PlantedTruth {
    /// Ground-truth `(lambda_pos, lambda_neg)` for a pair.
    pub fn rates(&self, i: usize, j: usize) -> (f64, f64) {
        let dist = |a: &Array2<f64>, m: &Array2<f64>| {
            let diff = &m.column(i) - &m.column(j);
            a.dot(&diff).mapv(|x| x * x).sum().sqrt()
        };
        (
            (self.gamma[i] + self.gamma[j] - dist(&self.a_pos, &self.z)).exp(),
            (self.delta[i] + self.delta[j] - dist(&self.a_neg, &self.w)).exp(),
        )
    }

    /// Dominant corner of every node in the given space.
    pub fn hard_labels(&self, positive: bool) -> Vec<usize> {
        let m = if positive { &self.z } else { &self.w };
        m.columns()
            .into_iter()
            .map(|c| {
                c.iter()
                    .enumerate()
                    .fold((0, f64::MIN), |best, (k, &v)| if v > best.1 { (k, v) } else { best })
                    .0
            })
            .collect()
    }

    /// Restriction to a subset of nodes (e.g. a connected component).
    pub fn restrict(&self, nodes: &[usize]) -> PlantedTruth {
        PlantedTruth {
            z: self.z.select(ndarray::Axis(1), nodes),
            w: self.w.select(ndarray::Axis(1), nodes),
            a_pos: self.a_pos.clone(),
            a_neg: self.a_neg.clone(),
            gamma: self.gamma.select(ndarray::Axis(0), nodes),
            delta: self.delta.select(ndarray::Axis(0), nodes),
        }
    }
}

fn planted_memberships<R: Rng>(k: usize, n: usize, corner_weight: f64, rng: &mut R) -> Array2<f64> {
    let mut m = Array2::zeros((k, n));
    for i in 0..n {
        let corner = rng.random_range(0..k);
        // Flat Dirichlet draw via normalized unit exponentials.
        let noise: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
        let total: f64 = noise.iter().sum();
        for d in 0..k {
            m[[d, i]] = (1.0 - corner_weight) * noise[d] / total;
        }
        m[[corner, i]] += corner_weight;
    }
    m
}

/// Planted two-space graph with `k` archetypes per space and shared bias.
pub fn generate_planted(n: usize, k: usize, seed: u64, bias: f64) -> Result<(SignedGraph, PlantedTruth)> {
    generate_planted_with(&PlantedConfig::new(n, k, bias), seed)
}

pub fn generate_planted_with(cfg: &PlantedConfig, seed: u64) -> Result<(SignedGraph, PlantedTruth)> {
    if cfg.k_pos < 2 || cfg.k_neg < 2 || cfg.n < cfg.k_pos.max(cfg.k_neg) {
        return Err(Error::domain("planted generator needs n >= k >= 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = planted_memberships(cfg.k_pos, cfg.n, cfg.corner_weight, &mut rng);
    let w = planted_memberships(cfg.k_neg, cfg.n, cfg.corner_weight, &mut rng);
    let truth = PlantedTruth {
        z,
        w,
        a_pos: Array2::eye(cfg.k_pos) * cfg.archetype_scale,
        a_neg: Array2::eye(cfg.k_neg) * cfg.archetype_scale,
        gamma: Array1::from_elem(cfg.n, cfg.bias),
        delta: Array1::from_elem(cfg.n, cfg.bias),
    };
    let mut edges = Vec::new();
    for i in 0..cfg.n {
        for j in (i + 1)..cfg.n {
            let (lp, ln) = truth.rates(i, j);
            let y = sample_skellam(&mut rng, lp, ln);
            if y != 0 {
                edges.push(Edge::new(i, j, y));
            }
        }
    }
    let ids = (0..cfg.n).map(|i| format!("n{i}")).collect();
    Ok((SignedGraph::new(ids, edges)?, truth))
}

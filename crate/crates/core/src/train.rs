//! Initialization, Adam optimization and multi-run ensembles.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{full_nll, sampled_nll, LatentSpace, LossGrad, ModelParams, PairBatch, Space, Variant};
use crate::sgraph::SignedGraph;

/// Gate logit given to the anchor node of each archetype.
pub const ANCHOR_GATE: f64 = 5.0;
/// Standard deviation of the noise on membership logits and biases.
pub const INIT_NOISE: f64 = 0.1;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// Exact likelihood over all node pairs.
    #[default]
    Full,
    /// All edges plus a fresh uniform sample of non-edges each iteration.
    Sampled,
}

impl std::str::FromStr for Sampling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Sampling::Full),
            "sampled" => Ok(Sampling::Sampled),
            other => Err(Error::domain(format!("unknown sampling mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub k_pos: usize,
    pub k_neg: usize,
    pub variant: Variant,
    pub lr: f64,
    pub iterations: usize,
    pub seed: u64,
    pub sampling: Sampling,
    /// Non-edges drawn per iteration, as a multiple of the edge count.
    pub non_edge_multiplier: usize,
    /// Loss is recorded every this many iterations.
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            k_pos: 8,
            k_neg: 8,
            variant: Variant::TwoSpace,
            lr: 0.05,
            iterations: 5000,
            seed: 0,
            sampling: Sampling::Full,
            non_edge_multiplier: 10,
            checkpoint_every: 100,
        }
    }
}

impl TrainConfig {
    pub fn new(k: usize, iterations: usize, seed: u64) -> Self {
        TrainConfig {
            k_pos: k,
            k_neg: k,
            iterations,
            seed,
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::domain(format!("learning rate must be positive, got {}", self.lr)));
        }
        if self.k_pos == 0 || (self.variant == Variant::TwoSpace && self.k_neg == 0) {
            return Err(Error::domain("archetype counts must be at least 1"));
        }
        if self.checkpoint_every == 0 {
            return Err(Error::domain("checkpoint interval must be at least 1"));
        }
        if self.sampling == Sampling::Sampled && self.non_edge_multiplier == 0 {
            return Err(Error::domain("non-edge multiplier must be at least 1"));
        }
        Ok(())
    }
}

/// Furthest-sum selection of `k` columns of `points` (`dim x N`).
pub fn furthest_sum_indices(points: &Array2<f64>, k: usize, seed: u64) -> Result<Vec<usize>> {
    let dist = |a: usize, b: usize| {
        let ca = points.column(a);
        let cb = points.column(b);
        ca.iter().zip(cb.iter()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    };
    furthest_sum_by(points.ncols(), k, seed, dist)
}

/// Furthest-sum over an arbitrary metric on `0..n`.
///
/// Starts from a seeded random index, adds the point with the largest summed
/// distance to the current selection until `k` points are held, then drops
/// the random starting point and refills the last slot the same way.
/// Candidates coinciding with an already-selected point are skipped while any
/// other candidate remains.
pub fn furthest_sum_by<F>(n: usize, k: usize, seed: u64, dist: F) -> Result<Vec<usize>>
where
    F: Fn(usize, usize) -> f64,
{
    if k > n {
        return Err(Error::domain(format!("cannot select {k} points out of {n}")));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = rng.random_range(0..n);
    let mut selected = vec![start];
    let mut in_set = vec![false; n];
    in_set[start] = true;
    let mut sum_dist = vec![0.0f64; n];
    let mut min_dist = vec![f64::INFINITY; n];
    let absorb = |p: usize, sign: f64, sum_dist: &mut [f64], min_dist: &mut [f64]| {
        for q in 0..n {
            let d = dist(p, q);
            sum_dist[q] += sign * d;
            if sign > 0.0 {
                min_dist[q] = min_dist[q].min(d);
            }
        }
    };
    absorb(start, 1.0, &mut sum_dist, &mut min_dist);

    let pick = |in_set: &[bool], sum_dist: &[f64], min_dist: &[f64]| -> usize {
        let best = |require_distinct: bool| {
            (0..n)
                .filter(|&q| !in_set[q] && (!require_distinct || min_dist[q] > 0.0))
                .fold(None, |acc: Option<usize>, q| match acc {
                    Some(b) if sum_dist[b] >= sum_dist[q] => Some(b),
                    _ => Some(q),
                })
        };
        best(true).or_else(|| best(false)).expect("a free candidate exists while fewer than n are selected")
    };

    // Greedy fill: `k` selections including the random start.
    while selected.len() < k {
        let q = pick(&in_set, &sum_dist, &min_dist);
        selected.push(q);
        in_set[q] = true;
        absorb(q, 1.0, &mut sum_dist, &mut min_dist);
    }
    if k == 1 {
        // Nothing to sum against once the start is dropped: use the point
        // furthest from it instead.
        if n == 1 {
            return Ok(selected);
        }
        let q = pick(&in_set, &sum_dist, &min_dist);
        return Ok(vec![q]);
    }
    // Replace the random start.
    selected.remove(0);
    in_set[start] = false;
    absorb(start, -1.0, &mut sum_dist, &mut min_dist);
    min_dist.fill(f64::INFINITY);
    for &p in &selected {
        for (q, m) in min_dist.iter_mut().enumerate() {
            *m = m.min(dist(p, q));
        }
    }
    let q = pick(&in_set, &sum_dist, &min_dist);
    selected.push(q);
    Ok(selected)
}

/// Sparse signed adjacency rows used as the data points for furthest-sum.
/// Only entries selected by `keep` (with magnitude `|y|`) are retained.
fn adjacency_rows(g: &SignedGraph, keep: impl Fn(i64) -> bool) -> Vec<Vec<(usize, f64)>> {
    (0..g.n_nodes())
        .map(|i| {
            let mut row: Vec<(usize, f64)> = g
                .neighbors(i)
                .iter()
                .filter(|(_, y)| keep(*y))
                .map(|&(j, y)| (j, y.unsigned_abs() as f64))
                .collect();
            row.sort_unstable_by_key(|e| e.0);
            row
        })
        .collect()
}

fn sparse_distance(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    let (mut i, mut j, mut acc) = (0, 0, 0.0);
    while i < a.len() || j < b.len() {
        match (a.get(i), b.get(j)) {
            (Some(&(ia, va)), Some(&(ib, vb))) if ia == ib => {
                acc += (va - vb).powi(2);
                i += 1;
                j += 1;
            }
            (Some(&(ia, va)), Some(&(ib, _))) if ia < ib => {
                acc += va * va;
                i += 1;
            }
            (Some(&(_, va)), None) => {
                acc += va * va;
                i += 1;
            }
            (_, Some(&(_, vb))) => {
                acc += vb * vb;
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    acc.sqrt()
}

fn init_space<R: Rng>(k: usize, n: usize, anchors: &[usize], rng: &mut R) -> LatentSpace {
    let mut space = LatentSpace::zeros(k, n);
    space.logits.mapv_inplace(|_| INIT_NOISE * rng.sample::<f64, _>(StandardNormal));
    // Off-anchor logit chosen so the total off-anchor gate mass stays near
    // sigmoid(-ANCHOR_GATE) regardless of N.
    let off = -(ANCHOR_GATE + ((n.max(2) - 1) as f64).ln());
    space.gates.fill(off);
    for (d, &a) in anchors.iter().enumerate() {
        space.gates[[d, a]] = ANCHOR_GATE;
    }
    for d in 0..k {
        space.mixing[[d, d]] = 1.0;
    }
    space
}

/// Initial parameters: small Gaussian noise on logits and biases, gates
/// anchored at furthest-sum nodes of the signed adjacency, identity mixing.
pub fn init_params(g: &SignedGraph, cfg: &TrainConfig) -> Result<ModelParams> {
    cfg.validate()?;
    let n = g.n_nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let anchors = |keep: fn(i64) -> bool, k: usize, seed: u64| -> Result<Vec<usize>> {
        let rows = adjacency_rows(g, keep);
        furthest_sum_by(n, k, seed, |a, b| sparse_distance(&rows[a], &rows[b]))
    };
    let params = match cfg.variant {
        Variant::TwoSpace => {
            let a_pos = anchors(|y| y > 0, cfg.k_pos, cfg.seed)?;
            let a_neg = anchors(|y| y < 0, cfg.k_neg, cfg.seed.wrapping_add(1))?;
            let pos = init_space(cfg.k_pos, n, &a_pos, &mut rng);
            let neg = init_space(cfg.k_neg, n, &a_neg, &mut rng);
            let mut p = ModelParams::zeros(n, cfg.k_pos, cfg.k_neg);
            p.pos = pos;
            p.neg = Some(neg);
            p
        }
        Variant::SharedSpace => {
            let a = anchors(|y| y != 0, cfg.k_pos, cfg.seed)?;
            let mut p = ModelParams::zeros_shared(n, cfg.k_pos);
            p.pos = init_space(cfg.k_pos, n, &a, &mut rng);
            p
        }
    };
    let mut p = params;
    p.gamma.mapv_inplace(|_| INIT_NOISE * rng.sample::<f64, _>(StandardNormal));
    p.delta.mapv_inplace(|_| INIT_NOISE * rng.sample::<f64, _>(StandardNormal));
    Ok(p)
}

/// First and second moment estimates of Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: ModelParams,
    pub v: ModelParams,
    /// Number of steps taken.
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        AdamState {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }
}

/// One bias-corrected Adam update of every tensor.
pub fn adam_step(params: &mut ModelParams, grads: &ModelParams, state: &mut AdamState, lr: f64) -> Result<()> {
    let mut grads = grads.clone();
    let mut g_views = grads.tensors_mut();
    for (name, g) in &g_views {
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteGradient {
                tensor: (*name).to_string(),
                iteration: state.t as usize,
            });
        }
    }
    let mut p_views = params.tensors_mut();
    let mut m_views = state.m.tensors_mut();
    let mut v_views = state.v.tensors_mut();
    if p_views.len() != g_views.len() || p_views.len() != m_views.len() {
        return Err(Error::domain("optimizer state does not match the parameters"));
    }
    for (((p, g), m), v) in p_views.iter_mut().zip(&g_views).zip(m_views.iter_mut()).zip(v_views.iter_mut()) {
        if p.1.shape() != g.1.shape() || p.1.shape() != m.1.shape() || p.1.shape() != v.1.shape() {
            return Err(Error::domain(format!("shape mismatch in tensor {}", p.0)));
        }
    }
    let t = state.t + 1;
    let c1 = 1.0 - ADAM_BETA1.powi(t as i32);
    let c2 = 1.0 - ADAM_BETA2.powi(t as i32);
    for (((p, g), m), v) in p_views.iter_mut().zip(g_views.iter_mut()).zip(m_views.iter_mut()).zip(v_views.iter_mut()) {
        ndarray::Zip::from(&mut p.1).and(&g.1).and(&mut m.1).and(&mut v.1).for_each(|p, &g, m, v| {
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        });
    }
    drop(p_views);
    state.t = t;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub loss: f64,
}

/// Summary of how the objective moved during a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub initial_loss: f64,
    pub final_loss: f64,
    pub relative_improvement: f64,
    /// Relative change between the last two recorded trace points.
    pub last_relative_change: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: ModelParams,
    pub trace: Vec<TracePoint>,
    /// Full NLL of the returned parameters when the graph is small enough,
    /// otherwise the last recorded objective value.
    pub final_loss: f64,
}

impl FitResult {
    pub fn convergence(&self) -> ConvergenceReport {
        let initial = self.trace.first().map_or(self.final_loss, |t| t.loss);
        let prev = if self.trace.len() >= 2 { self.trace[self.trace.len() - 2].loss } else { initial };
        let last = self.trace.last().map_or(self.final_loss, |t| t.loss);
        ConvergenceReport {
            initial_loss: initial,
            final_loss: self.final_loss,
            relative_improvement: (initial - self.final_loss) / initial.abs().max(f64::MIN_POSITIVE),
            last_relative_change: (prev - last).abs() / prev.abs().max(f64::MIN_POSITIVE),
        }
    }
}

/// Objective and gradient for one iteration.
fn objective<R: Rng>(params: &ModelParams, g: &SignedGraph, cfg: &TrainConfig, rng: &mut R) -> Result<LossGrad> {
    match cfg.sampling {
        Sampling::Full => full_nll(params, g),
        Sampling::Sampled => {
            let count = (cfg.non_edge_multiplier * g.n_edges()).max(1);
            sampled_nll(params, g, &PairBatch::sample(g, count, rng))
        }
    }
}

/// Fits from [`init_params`].
pub fn fit(g: &SignedGraph, cfg: &TrainConfig) -> Result<FitResult> {
    fit_with(g, cfg, |_, _| Ok(()))
}

/// Fits from [`init_params`], calling `on_checkpoint(iteration, params)`
/// at every recorded trace point and once more after the last step.
pub fn fit_with<F>(g: &SignedGraph, cfg: &TrainConfig, on_checkpoint: F) -> Result<FitResult>
where
    F: FnMut(usize, &ModelParams) -> Result<()>,
{
    let init = init_params(g, cfg)?;
    fit_from(g, cfg, init, on_checkpoint)
}

/// Runs `cfg.iterations` Adam steps starting at `params`.
pub fn fit_from<F>(g: &SignedGraph, cfg: &TrainConfig, mut params: ModelParams, mut on_checkpoint: F) -> Result<FitResult>
where
    F: FnMut(usize, &ModelParams) -> Result<()>,
{
    cfg.validate()?;
    params.validate()?;
    if params.n_nodes() != g.n_nodes() {
        return Err(Error::domain("parameter node count does not match the graph"));
    }
    let mut state = AdamState::new(&params);
    let mut batch_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    batch_rng.set_stream(1);
    let mut trace = Vec::new();
    for it in 0..cfg.iterations {
        let LossGrad { loss, grads } = objective(&params, g, cfg, &mut batch_rng)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteGradient {
                tensor: "loss".into(),
                iteration: it,
            });
        }
        if it % cfg.checkpoint_every == 0 {
            trace.push(TracePoint { iteration: it, loss });
            on_checkpoint(it, &params)?;
            log::debug!("iteration {it}: loss {loss:.6}");
        }
        adam_step(&mut params, &grads, &mut state, cfg.lr)?;
    }
    let final_loss = match cfg.sampling {
        Sampling::Full => full_nll(&params, g)?.loss,
        Sampling::Sampled => match crate::model::full_loss(&params, g) {
            Ok(l) => l,
            Err(Error::FullLikelihoodCeiling { .. }) => objective(&params, g, cfg, &mut batch_rng)?.loss,
            Err(e) => return Err(e),
        },
    };
    trace.push(TracePoint {
        iteration: cfg.iterations,
        loss: final_loss,
    });
    on_checkpoint(cfg.iterations, &params)?;
    Ok(FitResult {
        params,
        trace,
        final_loss,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleRun {
    pub seed: u64,
    pub result: FitResult,
}

/// Independent fits of one configuration under consecutive seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct RunEnsemble {
    pub runs: Vec<EnsembleRun>,
}

impl RunEnsemble {
    pub fn len(&self) -> usize {
        self.runs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    /// Membership matrices of every run for one space.
    pub fn memberships(&self, space: Space) -> Vec<Array2<f64>> {
        self.runs.iter().map(|r| r.result.params.memberships(space)).collect()
    }
}

/// `r` fits with seeds `cfg.seed + i`.
pub fn fit_ensemble(g: &SignedGraph, cfg: &TrainConfig, r: usize) -> Result<RunEnsemble> {
    if r < 2 {
        return Err(Error::domain(format!("an ensemble needs at least 2 runs, got {r}")));
    }
    let runs = (0..r as u64)
        .map(|i| {
            let seed = cfg.seed.wrapping_add(i);
            let run_cfg = TrainConfig { seed, ..cfg.clone() };
            fit(g, &run_cfg).map(|result| EnsembleRun { seed, result })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RunEnsemble { runs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1};

    #[test]
    fn adam_first_step_moves_by_learning_rate() {
        let mut p = ModelParams::zeros(2, 1, 1);
        let mut g = p.zeros_like();
        g.gamma[0] = 1.0;
        let mut st = AdamState::new(&p);
        adam_step(&mut p, &g, &mut st, 0.05).unwrap();
        assert!((p.gamma[0] + 0.05 / (1.0 + 1e-8)).abs() < 1e-15);
        assert_eq!(p.gamma[1], 0.0);
    }

    #[test]
    fn adam_two_steps_match_hand_unroll() {
        let mut p = ModelParams::zeros(2, 1, 1);
        let mut g = p.zeros_like();
        g.delta.fill(1.0);
        let mut st = AdamState::new(&p);
        adam_step(&mut p, &g, &mut st, 0.05).unwrap();
        adam_step(&mut p, &g, &mut st, 0.05).unwrap();
        let mut theta = 0.0;
        let (mut m, mut v) = (0.0, 0.0);
        for t in 1..=2 {
            m = 0.9 * m + 0.1;
            v = 0.999 * v + 0.001;
            let mh = m / (1.0 - 0.9f64.powi(t));
            let vh = v / (1.0 - 0.999f64.powi(t));
            theta -= 0.05 * mh / (vh.sqrt() + 1e-8);
        }
        assert!((p.delta[0] - theta).abs() < 1e-12);
        assert_eq!(st.t, 2);
    }

    #[test]
    fn adam_zero_gradient_is_a_fixed_point() {
        let mut p = ModelParams::random(Variant::TwoSpace, 4, 2, 1.0, &mut ChaCha8Rng::seed_from_u64(1));
        let before = p.clone();
        let g = p.zeros_like();
        let mut st = AdamState::new(&p);
        for _ in 0..10 {
            adam_step(&mut p, &g, &mut st, 0.05).unwrap();
        }
        assert_eq!(p, before);
    }

    #[test]
    fn adam_rejects_non_finite_gradients() {
        let mut p = ModelParams::zeros(3, 1, 1);
        let mut g = p.zeros_like();
        g.neg.as_mut().unwrap().gates[[0, 1]] = f64::NAN;
        let mut st = AdamState::new(&p);
        match adam_step(&mut p, &g, &mut st, 0.05) {
            Err(Error::NonFiniteGradient { tensor, .. }) => assert_eq!(tensor, "neg.gates"),
            other => panic!("{other:?}"),
        }
        assert_eq!(st.t, 0);
    }

    #[test]
    fn adam_rejects_mismatched_state() {
        let mut p = ModelParams::zeros(3, 2, 2);
        let g = p.zeros_like();
        let mut st = AdamState::new(&ModelParams::zeros(3, 1, 1));
        assert!(adam_step(&mut p, &g, &mut st, 0.05).is_err());
    }

    #[test]
    fn collinear_points_pick_the_ends() {
        let pts = Array2::from_shape_vec((1, 10), (0..10).map(|i| i as f64).collect()).unwrap();
        for seed in 0..20 {
            let mut got = furthest_sum_indices(&pts, 2, seed).unwrap();
            got.sort();
            assert_eq!(got, vec![0, 9], "seed {seed}");
        }
        // Exhaustive check that {0, 9} is the unique farthest pair.
        let best = (0..10).flat_map(|a| (a + 1..10).map(move |b| (b - a, a, b))).max().unwrap();
        assert_eq!((best.1, best.2), (0, 9));
    }

    #[test]
    fn selecting_every_point_returns_all_indices() {
        let pts = array![[0.0, 1.0, 5.0, 2.0], [1.0, 0.0, 3.0, 3.0]];
        let mut got = furthest_sum_indices(&pts, 4, 3).unwrap();
        got.sort();
        assert_eq!(got, vec![0, 1, 2, 3]);
        assert!(matches!(furthest_sum_indices(&pts, 5, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn duplicate_points_are_avoided_until_forced() {
        // Five points with two exact duplicates.
        let pts = array![[0.0, 0.0, 4.0, 4.0, 1.0], [0.0, 0.0, 0.0, 0.0, 3.0]];
        for seed in 0..30 {
            for k in 1..=3 {
                let got = furthest_sum_indices(&pts, k, seed).unwrap();
                let mut coords: Vec<(i64, i64)> =
                    got.iter().map(|&i| (pts[[0, i]] as i64, pts[[1, i]] as i64)).collect();
                coords.sort();
                coords.dedup();
                assert_eq!(coords.len(), k, "seed {seed}, k {k}: {got:?}");
            }
            let got = furthest_sum_indices(&pts, 5, seed).unwrap();
            assert_eq!(got.len(), 5);
        }
    }

    #[test]
    fn sparse_distance_matches_dense() {
        let a = vec![(0, 1.0), (3, 2.0), (7, 1.0)];
        let b = vec![(3, 1.0), (5, 2.0)];
        let dense = |r: &[(usize, f64)]| {
            let mut v = Array1::<f64>::zeros(8);
            r.iter().for_each(|&(i, x)| v[i] = x);
            v
        };
        let want = (dense(&a) - dense(&b)).mapv(|x| x * x).sum().sqrt();
        assert!((sparse_distance(&a, &b) - want).abs() < 1e-15);
        assert!((sparse_distance(&b, &a) - want).abs() < 1e-15);
        assert_eq!(sparse_distance(&[], &[]), 0.0);
    }
}

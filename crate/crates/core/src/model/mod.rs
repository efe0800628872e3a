//! Two-space archetypal latent distance model.
//!
//! Each space holds unconstrained membership logits `Z~` (K x N), gate
//! logits `G` (K x N) and a mixing matrix `R` (K x K). The forward pass is
//!
//! ```text
//! Z        = column-softmax(Z~)                      K x N
//! c_nd     = Z_dn s(G_dn) / sum_n' Z_dn' s(G_dn')     N x K   (s = sigmoid)
//! A        = R Z C                                   K x K   archetypes
//! E        = A Z                                     K x N   embeddings
//! lambda+  = exp(gamma_i + gamma_j - |E_i - E_j|)
//! lambda-  = exp(delta_i + delta_j - |F_i - F_j|)     F from the negative space
//! ```
//!
//! The shared-space ablation has a single space and uses
//! `lambda- = exp(delta_i + delta_j + |E_i - E_j|)`, i.e. negative ties push
//! nodes apart instead of pulling them together.

mod snapshot;

pub use snapshot::Snapshot;

use ndarray::{s, Array1, Array2, ArrayViewMutD, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sgraph::SignedGraph;
use crate::skellam::{nll_log_grad_with_logs, RATE_FLOOR};
use crate::special::sigmoid;

/// Exponents are clamped to `[-EXPONENT_CAP, EXPONENT_CAP]` before `exp`.
pub const EXPONENT_CAP: f64 = 60.0;
/// Added under the square root of every distance.
pub const DISTANCE_SMOOTHING: f64 = 1e-12;
/// Largest graph for which [`full_nll`] is allowed.
pub const FULL_LIKELIHOOD_CEILING: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Pos,
    Neg,
}

impl Space {
    pub fn name(self) -> &'static str {
        match self {
            Space::Pos => "pos",
            Space::Neg => "neg",
        }
    }
}

impl std::str::FromStr for Space {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pos" | "positive" | "+" => Ok(Space::Pos),
            "neg" | "negative" | "-" => Ok(Space::Neg),
            other => Err(Error::domain(format!("unknown space `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Independent positive and negative latent spaces.
    TwoSpace,
    /// One space for both rates (ablation).
    SharedSpace,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "two-space" | "two" => Ok(Variant::TwoSpace),
            "shared-space" | "shared" => Ok(Variant::SharedSpace),
            other => Err(Error::domain(format!("unknown model variant `{other}`"))),
        }
    }
}

/// Learnable tensors of one latent space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentSpace {
    /// Membership logits, `K x N`.
    pub logits: Array2<f64>,
    /// Gate logits, `K x N`.
    pub gates: Array2<f64>,
    /// Mixing matrix `R`, `K x K`.
    pub mixing: Array2<f64>,
}

impl LatentSpace {
    pub fn zeros(k: usize, n: usize) -> Self {
        LatentSpace {
            logits: Array2::zeros((k, n)),
            gates: Array2::zeros((k, n)),
            mixing: Array2::zeros((k, k)),
        }
    }

    pub fn k(&self) -> usize {
        self.logits.nrows()
    }
}

/// All learnable tensors of a model instance. Also used as the gradient
/// container, since gradients share the exact shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub variant: Variant,
    pub pos: LatentSpace,
    /// `None` for [`Variant::SharedSpace`].
    pub neg: Option<LatentSpace>,
    pub gamma: Array1<f64>,
    pub delta: Array1<f64>,
}

/// `(lambda_pos, lambda_neg)` for one node pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairRates {
    pub lambda_pos: f64,
    pub lambda_neg: f64,
}

/// Archetype matrices, columns are archetypes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchetypeSet {
    pub a_pos: Array2<f64>,
    pub a_neg: Array2<f64>,
}

impl ArchetypeSet {
    pub fn get(&self, space: Space) -> &Array2<f64> {
        match space {
            Space::Pos => &self.a_pos,
            Space::Neg => &self.a_neg,
        }
    }
}

fn softmax_columns(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut col in out.columns_mut() {
        let max = col.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        col.mapv_inplace(|v| (v - max).exp());
        let total = col.sum();
        col.mapv_inplace(|v| v / total);
    }
    out
}

impl ModelParams {
    /// All-zero two-space parameters.
    pub fn zeros(n: usize, k_pos: usize, k_neg: usize) -> Self {
        ModelParams {
            variant: Variant::TwoSpace,
            pos: LatentSpace::zeros(k_pos, n),
            neg: Some(LatentSpace::zeros(k_neg, n)),
            gamma: Array1::zeros(n),
            delta: Array1::zeros(n),
        }
    }

    /// All-zero shared-space parameters.
    pub fn zeros_shared(n: usize, k: usize) -> Self {
        ModelParams {
            variant: Variant::SharedSpace,
            pos: LatentSpace::zeros(k, n),
            neg: None,
            gamma: Array1::zeros(n),
            delta: Array1::zeros(n),
        }
    }

    /// Same variant and shapes, every entry zero.
    pub fn zeros_like(&self) -> Self {
        let mut out = self.clone();
        for mut t in out.tensors_mut() {
            t.1.fill(0.0);
        }
        out
    }

    pub fn n_nodes(&self) -> usize {
        self.gamma.len()
    }

    pub fn k_pos(&self) -> usize {
        self.pos.k()
    }

    pub fn k_neg(&self) -> usize {
        self.space(Space::Neg).k()
    }

    /// Parameters of a space; the shared variant returns its single space
    /// for both.
    pub fn space(&self, space: Space) -> &LatentSpace {
        match (space, &self.neg) {
            (Space::Neg, Some(neg)) => neg,
            _ => &self.pos,
        }
    }

    /// Named views of every tensor, in a fixed order.
    pub fn tensors_mut(&mut self) -> Vec<(&'static str, ArrayViewMutD<'_, f64>)> {
        let mut out = vec![
            ("pos.logits", self.pos.logits.view_mut().into_dyn()),
            ("pos.gates", self.pos.gates.view_mut().into_dyn()),
            ("pos.mixing", self.pos.mixing.view_mut().into_dyn()),
        ];
        if let Some(neg) = self.neg.as_mut() {
            out.push(("neg.logits", neg.logits.view_mut().into_dyn()));
            out.push(("neg.gates", neg.gates.view_mut().into_dyn()));
            out.push(("neg.mixing", neg.mixing.view_mut().into_dyn()));
        }
        out.push(("gamma", self.gamma.view_mut().into_dyn()));
        out.push(("delta", self.delta.view_mut().into_dyn()));
        out
    }

    pub fn n_parameters(&self) -> usize {
        let space = |s: &LatentSpace| s.logits.len() + s.gates.len() + s.mixing.len();
        space(&self.pos) + self.neg.as_ref().map_or(0, space) + self.gamma.len() + self.delta.len()
    }

    /// Checks that tensor shapes are mutually consistent.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_nodes();
        if self.delta.len() != n {
            return Err(Error::domain("gamma and delta lengths differ"));
        }
        let check = |s: &LatentSpace, name: &str| {
            let k = s.k();
            if k == 0 || s.logits.dim() != (k, n) || s.gates.dim() != (k, n) || s.mixing.dim() != (k, k) {
                return Err(Error::domain(format!("inconsistent tensor shapes in {name} space")));
            }
            Ok(())
        };
        check(&self.pos, "pos")?;
        match (&self.variant, &self.neg) {
            (Variant::TwoSpace, Some(neg)) => check(neg, "neg"),
            (Variant::SharedSpace, None) => Ok(()),
            _ => Err(Error::domain("variant does not match the presence of a negative space")),
        }
    }

    /// Column-wise softmax of the membership logits, `K x N`.
    pub fn memberships(&self, space: Space) -> Array2<f64> {
        softmax_columns(&self.space(space).logits)
    }

    /// Gated mixing matrix `C` (`N x K`), columns on the simplex.
    pub fn gate_matrix(&self, space: Space) -> Result<Array2<f64>> {
        Ok(SpaceForward::new(self.space(space), space)?.gate)
    }

    pub fn archetypes(&self) -> Result<ArchetypeSet> {
        let pos = SpaceForward::new(&self.pos, Space::Pos)?;
        let a_neg = match &self.neg {
            Some(neg) => SpaceForward::new(neg, Space::Neg)?.archetypes,
            None => pos.archetypes.clone(),
        };
        Ok(ArchetypeSet {
            a_pos: pos.archetypes,
            a_neg,
        })
    }

    /// Rates of pair `{i, j}` under the given archetypes.
    pub fn pair_rates(&self, arch: &ArchetypeSet, i: usize, j: usize) -> Result<PairRates> {
        let n = self.n_nodes();
        if i == j || i >= n || j >= n {
            return Err(Error::domain(format!("pair ({i}, {j}) is not a valid distinct pair for {n} nodes")));
        }
        let dist = |space: Space| {
            let m = &self.space(space).logits;
            let zi = softmax_columns(&m.slice(s![.., i..=i]).to_owned());
            let zj = softmax_columns(&m.slice(s![.., j..=j]).to_owned());
            let diff = arch.get(space).dot(&(&zi - &zj));
            (diff.mapv(|v| v * v).sum() + DISTANCE_SMOOTHING).sqrt()
        };
        let d_pos = dist(Space::Pos);
        let d_neg = if self.neg.is_some() { dist(Space::Neg) } else { d_pos };
        let (eta_pos, eta_neg) = self.exponents(i, j, d_pos, d_neg);
        Ok(PairRates {
            lambda_pos: clamped_rate(eta_pos).0,
            lambda_neg: clamped_rate(eta_neg).0,
        })
    }

    #[inline]
    fn exponents(&self, i: usize, j: usize, d_pos: f64, d_neg: f64) -> (f64, f64) {
        let eta_pos = self.gamma[i] + self.gamma[j] - d_pos;
        let eta_neg = match self.variant {
            Variant::TwoSpace => self.delta[i] + self.delta[j] - d_neg,
            Variant::SharedSpace => self.delta[i] + self.delta[j] + d_pos,
        };
        (eta_pos, eta_neg)
    }

    /// Draws a random instance with standard-normal entries; used by tests
    /// and benchmarks.
    pub fn random<R: Rng>(variant: Variant, n: usize, k: usize, scale: f64, rng: &mut R) -> Self {
        let mut p = match variant {
            Variant::TwoSpace => ModelParams::zeros(n, k, k),
            Variant::SharedSpace => ModelParams::zeros_shared(n, k),
        };
        for (_, mut t) in p.tensors_mut() {
            t.mapv_inplace(|_| scale * rng.sample::<f64, _>(rand_distr::StandardNormal));
        }
        p
    }
}

/// `(rate, passes_gradient)` after clamping the exponent and flooring.
#[inline]
fn clamped_rate(eta: f64) -> (f64, bool) {
    let (rate, _, pass) = clamped_rate_with_log(eta);
    (rate, pass)
}

/// `(rate, ln(rate), passes_gradient)`.
#[inline]
fn clamped_rate_with_log(eta: f64) -> (f64, f64, bool) {
    let clamped = eta.clamp(-EXPONENT_CAP, EXPONENT_CAP);
    let rate = clamped.exp();
    if rate < RATE_FLOOR {
        (RATE_FLOOR, RATE_FLOOR.ln(), false)
    } else {
        (rate, clamped, clamped == eta)
    }
}

/// Forward-pass quantities of one latent space.
#[derive(Debug, Clone)]
pub(crate) struct SpaceForward {
    pub memberships: Array2<f64>,
    gate_sig: Array2<f64>,
    pub gate: Array2<f64>,
    col_sums: Array1<f64>,
    mixed: Array2<f64>,
    pub archetypes: Array2<f64>,
    /// `(A Z)^T`, `N x K`, row-major so each node's embedding is contiguous.
    pub embedding_t: Array2<f64>,
}

impl SpaceForward {
    fn new(space: &LatentSpace, which: Space) -> Result<Self> {
        let memberships = softmax_columns(&space.logits);
        let gate_sig = space.gates.mapv(sigmoid);
        let numer = &memberships * &gate_sig; // K x N
        let col_sums = numer.sum_axis(Axis(1));
        for (d, &s) in col_sums.iter().enumerate() {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::DegenerateGate {
                    space: which.name(),
                    dim: d,
                });
            }
        }
        let gate = (&numer / &col_sums.view().insert_axis(Axis(1))).reversed_axes();
        let gate = gate.as_standard_layout().to_owned();
        let mixed = memberships.dot(&gate);
        let archetypes = space.mixing.dot(&mixed);
        let embedding_t = memberships.t().dot(&archetypes.t()).as_standard_layout().into_owned();
        Ok(SpaceForward {
            memberships,
            gate_sig,
            gate,
            col_sums,
            mixed,
            archetypes,
            embedding_t,
        })
    }

    #[inline]
    fn distance(&self, i: usize, j: usize) -> f64 {
        let e = self.embedding_t.as_slice().expect("standard layout");
        let k = self.embedding_t.ncols();
        let (a, b) = (&e[i * k..(i + 1) * k], &e[j * k..(j + 1) * k]);
        let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        (sq + DISTANCE_SMOOTHING).sqrt()
    }

    /// Adds `coef * (E_i - E_j) / d` to row `i` of `grad` and subtracts it
    /// from row `j`.
    #[inline]
    fn scatter_distance_grad(&self, grad: &mut [f64], i: usize, j: usize, coef: f64) {
        let e = self.embedding_t.as_slice().expect("standard layout");
        let k = self.embedding_t.ncols();
        let (lo, hi, coef) = if i < j { (i, j, coef) } else { (j, i, -coef) };
        let (head, tail) = grad.split_at_mut(hi * k);
        let (g_lo, g_hi) = (&mut head[lo * k..(lo + 1) * k], &mut tail[..k]);
        let (e_lo, e_hi) = (&e[lo * k..(lo + 1) * k], &e[hi * k..(hi + 1) * k]);
        for (((gl, gh), a), b) in g_lo.iter_mut().zip(g_hi.iter_mut()).zip(e_lo).zip(e_hi) {
            let g = coef * (a - b);
            *gl += g;
            *gh -= g;
        }
    }

    /// Back-propagates `dL/dE^T` (N x K) into the space's tensors.
    fn backward(&self, params: &LatentSpace, grad_emb_t: &Array2<f64>, out: &mut LatentSpace) {
        // E = A Z
        let grad_arch = grad_emb_t.t().dot(&self.memberships.t()); // K x K
        let mut grad_memb = self.archetypes.t().dot(&grad_emb_t.t()); // K x N
        // A = R P
        out.mixing += &grad_arch.dot(&self.mixed.t());
        let grad_mixed = params.mixing.t().dot(&grad_arch);
        // P = Z C
        grad_memb += &grad_mixed.dot(&self.gate.t());
        let grad_gate = self.memberships.t().dot(&grad_mixed); // N x K
        // c_nd = u_nd / s_d
        let k = self.memberships.nrows();
        let n = self.memberships.ncols();
        for d in 0..k {
            let inner: f64 = (0..n).map(|m| grad_gate[[m, d]] * self.gate[[m, d]]).sum();
            let inv = 1.0 / self.col_sums[d];
            for m in 0..n {
                let gu = (grad_gate[[m, d]] - inner) * inv;
                let sig = self.gate_sig[[d, m]];
                grad_memb[[d, m]] += gu * sig;
                out.gates[[d, m]] += gu * self.memberships[[d, m]] * sig * (1.0 - sig);
            }
        }
        // softmax
        for m in 0..n {
            let z = self.memberships.column(m);
            let g = grad_memb.column(m);
            let dot = z.dot(&g);
            for d in 0..k {
                out.logits[[d, m]] += z[d] * (g[d] - dot);
            }
        }
    }
}

/// Cached forward pass of a full parameter set.
#[derive(Debug, Clone)]
pub struct Forward<'a> {
    params: &'a ModelParams,
    pos: SpaceForward,
    neg: Option<SpaceForward>,
}

/// Loss value and gradient.
#[derive(Debug, Clone)]
pub struct LossGrad {
    pub loss: f64,
    pub grads: ModelParams,
}

impl<'a> Forward<'a> {
    pub fn new(params: &'a ModelParams) -> Result<Self> {
        params.validate()?;
        let pos = SpaceForward::new(&params.pos, Space::Pos)?;
        let neg = match &params.neg {
            Some(neg) => Some(SpaceForward::new(neg, Space::Neg)?),
            None => None,
        };
        Ok(Forward { params, pos, neg })
    }

    pub fn params(&self) -> &ModelParams {
        self.params
    }

    fn space(&self, space: Space) -> &SpaceForward {
        match (space, &self.neg) {
            (Space::Neg, Some(neg)) => neg,
            _ => &self.pos,
        }
    }

    pub fn memberships(&self, space: Space) -> &Array2<f64> {
        &self.space(space).memberships
    }

    pub fn archetype_set(&self) -> ArchetypeSet {
        ArchetypeSet {
            a_pos: self.pos.archetypes.clone(),
            a_neg: self.space(Space::Neg).archetypes.clone(),
        }
    }

    /// Projected embeddings `A Z` of a space, `K x N`.
    pub fn embeddings(&self, space: Space) -> Array2<f64> {
        self.space(space).embedding_t.t().to_owned()
    }

    #[inline]
    fn pair_distances(&self, i: usize, j: usize) -> (f64, f64) {
        let d_pos = self.pos.distance(i, j);
        let d_neg = match &self.neg {
            Some(neg) => neg.distance(i, j),
            None => d_pos,
        };
        (d_pos, d_neg)
    }

    /// Rates for pair `{i, j}`; `i != j` is the caller's responsibility.
    #[inline]
    pub fn rates(&self, i: usize, j: usize) -> PairRates {
        let (d_pos, d_neg) = self.pair_distances(i, j);
        let (eta_pos, eta_neg) = self.params.exponents(i, j, d_pos, d_neg);
        PairRates {
            lambda_pos: clamped_rate(eta_pos).0,
            lambda_neg: clamped_rate(eta_neg).0,
        }
    }

    /// Weighted NLL over the given pairs, `(u, v, y, weight)`.
    pub fn loss<I>(&self, pairs: I) -> f64
    where
        I: IntoIterator<Item = (usize, usize, i64, f64)>,
    {
        pairs
            .into_iter()
            .map(|(i, j, y, w)| {
                let (d_pos, d_neg) = self.pair_distances(i, j);
                let (eta_pos, eta_neg) = self.params.exponents(i, j, d_pos, d_neg);
                let (lp, log_lp, _) = clamped_rate_with_log(eta_pos);
                let (ln, log_ln, _) = clamped_rate_with_log(eta_neg);
                w * nll_log_grad_with_logs(y, lp, ln, log_lp, log_ln).0
            })
            .sum()
    }

    /// Weighted NLL and gradient over pairs `(u, v, y, weight)`.
    pub fn loss_grad<I>(&self, pairs: I) -> LossGrad
    where
        I: IntoIterator<Item = (usize, usize, i64, f64)>,
    {
        let n = self.params.n_nodes();
        let k_pos = self.params.k_pos();
        let k_neg = self.params.k_neg();
        let mut grads = self.params.zeros_like();
        let mut ge_pos = Array2::<f64>::zeros((n, k_pos));
        let mut ge_neg = Array2::<f64>::zeros((n, if self.neg.is_some() { k_neg } else { 0 }));
        let mut loss = 0.0;
        {
            let gp = ge_pos.as_slice_mut().expect("standard layout");
            let gn = ge_neg.as_slice_mut().expect("standard layout");
            for (i, j, y, w) in pairs {
                let (d_pos, d_neg) = self.pair_distances(i, j);
                let (eta_pos, eta_neg) = self.params.exponents(i, j, d_pos, d_neg);
                let (lp, log_lp, pass_pos) = clamped_rate_with_log(eta_pos);
                let (ln, log_ln, pass_neg) = clamped_rate_with_log(eta_neg);
                let (nll, dlog_pos, dlog_neg) = nll_log_grad_with_logs(y, lp, ln, log_lp, log_ln);
                loss += w * nll;
                let de_pos = if pass_pos { w * dlog_pos } else { 0.0 };
                let de_neg = if pass_neg { w * dlog_neg } else { 0.0 };
                grads.gamma[i] += de_pos;
                grads.gamma[j] += de_pos;
                grads.delta[i] += de_neg;
                grads.delta[j] += de_neg;
                match &self.neg {
                    Some(neg) => {
                        if de_pos != 0.0 {
                            self.pos.scatter_distance_grad(gp, i, j, -de_pos / d_pos);
                        }
                        if de_neg != 0.0 {
                            neg.scatter_distance_grad(gn, i, j, -de_neg / d_neg);
                        }
                    }
                    None => {
                        let coef = de_neg - de_pos;
                        if coef != 0.0 {
                            self.pos.scatter_distance_grad(gp, i, j, coef / d_pos);
                        }
                    }
                }
            }
        }
        self.pos.backward(&self.params.pos, &ge_pos, &mut grads.pos);
        if let (Some(neg_fwd), Some(neg_params), Some(neg_grads)) =
            (&self.neg, &self.params.neg, grads.neg.as_mut())
        {
            neg_fwd.backward(neg_params, &ge_neg, neg_grads);
        }
        LossGrad { loss, grads }
    }
}

/// Iterates all pairs `i < j` of `g` with their weights `y_ij` (0 for
/// non-edges) in row-major order.
pub fn all_pairs(g: &SignedGraph) -> impl Iterator<Item = (usize, usize, i64, f64)> + '_ {
    let n = g.n_nodes();
    (0..n).flat_map(move |i| {
        let row = g.neighbors(i);
        let start = row.partition_point(|&(v, _)| v <= i);
        let mut cursor = start;
        ((i + 1)..n).map(move |j| {
            let y = if cursor < row.len() && row[cursor].0 == j {
                cursor += 1;
                row[cursor - 1].1
            } else {
                0
            };
            (i, j, y, 1.0)
        })
    })
}

fn check_graph(params: &ModelParams, g: &SignedGraph) -> Result<()> {
    if params.n_nodes() != g.n_nodes() {
        return Err(Error::domain(format!(
            "parameters cover {} nodes but the graph has {}",
            params.n_nodes(),
            g.n_nodes()
        )));
    }
    Ok(())
}

/// Exact negative log-likelihood over all `i < j` with gradients.
pub fn full_nll(params: &ModelParams, g: &SignedGraph) -> Result<LossGrad> {
    check_graph(params, g)?;
    if g.n_nodes() > FULL_LIKELIHOOD_CEILING {
        return Err(Error::FullLikelihoodCeiling {
            n: g.n_nodes(),
            ceiling: FULL_LIKELIHOOD_CEILING,
        });
    }
    Ok(Forward::new(params)?.loss_grad(all_pairs(g)))
}

/// Exact negative log-likelihood without gradients (no size ceiling).
pub fn full_loss(params: &ModelParams, g: &SignedGraph) -> Result<f64> {
    check_graph(params, g)?;
    Ok(Forward::new(params)?.loss(all_pairs(g)))
}

/// Non-edge pairs sampled for one stochastic loss evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct PairBatch {
    pub non_edges: Vec<(usize, usize)>,
}

impl PairBatch {
    /// Uniform sample (with replacement) of `count` non-adjacent pairs.
    pub fn sample<R: Rng>(g: &SignedGraph, count: usize, rng: &mut R) -> Self {
        let n = g.n_nodes();
        let total = n * n.saturating_sub(1) / 2;
        let mut non_edges = Vec::with_capacity(count);
        if total > g.n_edges() {
            while non_edges.len() < count {
                let a = rng.random_range(0..n);
                let b = rng.random_range(0..n);
                if a != b && !g.has_edge(a, b) {
                    non_edges.push((a.min(b), a.max(b)));
                }
            }
        }
        PairBatch { non_edges }
    }

    /// Every non-adjacent pair exactly once.
    pub fn exhaustive(g: &SignedGraph) -> Self {
        PairBatch {
            non_edges: all_pairs(g).filter(|p| p.2 == 0).map(|p| (p.0, p.1)).collect(),
        }
    }
}

/// Unbiased estimate of [`full_nll`]: every edge term exactly, plus the
/// sampled non-edge terms scaled by `#non-edges / #sampled`.
pub fn sampled_nll(params: &ModelParams, g: &SignedGraph, batch: &PairBatch) -> Result<LossGrad> {
    check_graph(params, g)?;
    let n = g.n_nodes();
    let total_pairs = n * n.saturating_sub(1) / 2;
    let n_non_edges = total_pairs - g.n_edges();
    if n_non_edges > 0 && batch.non_edges.is_empty() {
        return Err(Error::Estimator("empty non-edge sample while non-edge pairs exist".into()));
    }
    for &(u, v) in &batch.non_edges {
        if u == v || u >= n || v >= n || g.has_edge(u, v) {
            return Err(Error::Estimator(format!("batch pair ({u}, {v}) is not a non-edge")));
        }
    }
    let scale = if batch.non_edges.is_empty() {
        0.0
    } else {
        n_non_edges as f64 / batch.non_edges.len() as f64
    };
    let edges = g.edges().iter().map(|e| (e.u, e.v, e.y, 1.0));
    let zeros = batch.non_edges.iter().map(|&(u, v)| (u, v, 0, scale));
    Ok(Forward::new(params)?.loss_grad(edges.chain(zeros)))
}

#[cfg(test)]
mod tests;

//! Signed link prediction: three-class (neg / zr / pos) classification of
//! held-out pairs from Skellam-rate features, and binary ranking tasks.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ArchetypeSet, Forward, ModelParams};
use crate::sgraph::{sample_non_edges, EdgeSplit, SignedGraph};

/// Number of features per pair.
pub const N_FEATURES: usize = 4;
pub const DEFAULT_L2: f64 = 1e-4;
const NEWTON_TOL: f64 = 1e-6;
const NEWTON_MAX_ITER: usize = 200;

/// Pair features `[lambda_pos, lambda_neg, ln lambda_pos, ln lambda_neg]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairFeatures {
    pub chi: [f64; N_FEATURES],
}

impl PairFeatures {
    pub fn from_rates(lambda_pos: f64, lambda_neg: f64) -> Self {
        PairFeatures {
            chi: [lambda_pos, lambda_neg, lambda_pos.ln(), lambda_neg.ln()],
        }
    }
}

pub fn pair_features(params: &ModelParams, arch: &ArchetypeSet, i: usize, j: usize) -> Result<PairFeatures> {
    let r = params.pair_rates(arch, i, j)?;
    Ok(PairFeatures::from_rates(r.lambda_pos, r.lambda_neg))
}

/// Anything that maps a node pair to a feature vector.
pub trait FeatureSource {
    fn features(&self, i: usize, j: usize) -> PairFeatures;
}

/// Rate features of a trained model, with the forward pass cached.
pub struct ModelFeatures<'a> {
    forward: Forward<'a>,
}

impl<'a> ModelFeatures<'a> {
    pub fn new(params: &'a ModelParams) -> Result<Self> {
        Ok(ModelFeatures {
            forward: Forward::new(params)?,
        })
    }
}

impl FeatureSource for ModelFeatures<'_> {
    fn features(&self, i: usize, j: usize) -> PairFeatures {
        let r = self.forward.rates(i, j);
        PairFeatures::from_rates(r.lambda_pos, r.lambda_neg)
    }
}

/// Degree-only baseline: sums and log-products of signed degrees.
///
/// Shaped like the model features so the same classifier applies.
#[derive(Debug, Clone)]
pub struct DegreeFeatures {
    pos_degree: Vec<f64>,
    neg_degree: Vec<f64>,
}

impl DegreeFeatures {
    pub fn new(g: &SignedGraph) -> Self {
        let mut pos_degree = vec![0.0; g.n_nodes()];
        let mut neg_degree = vec![0.0; g.n_nodes()];
        for e in g.edges() {
            let deg = if e.y > 0 { &mut pos_degree } else { &mut neg_degree };
            deg[e.u] += 1.0;
            deg[e.v] += 1.0;
        }
        DegreeFeatures { pos_degree, neg_degree }
    }
}

impl FeatureSource for DegreeFeatures {
    fn features(&self, i: usize, j: usize) -> PairFeatures {
        let (p, n) = (&self.pos_degree, &self.neg_degree);
        PairFeatures {
            chi: [
                p[i] + p[j],
                n[i] + n[j],
                ((1.0 + p[i]) * (1.0 + p[j])).ln(),
                ((1.0 + n[i]) * (1.0 + n[j])).ln(),
            ],
        }
    }
}

/// Link classes; the discriminant is the class index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkClass {
    Neg = 0,
    Zr = 1,
    Pos = 2,
}

impl LinkClass {
    pub const ALL: [LinkClass; 3] = [LinkClass::Neg, LinkClass::Zr, LinkClass::Pos];

    pub fn from_weight(y: i64) -> Self {
        match y.signum() {
            -1 => LinkClass::Neg,
            0 => LinkClass::Zr,
            _ => LinkClass::Pos,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            LinkClass::Neg => "neg",
            LinkClass::Zr => "zr",
            LinkClass::Pos => "pos",
        }
    }
}

/// L2-regularized multinomial logistic regression on standardized
/// features. Class 0 is the reference class with logit fixed at 0; the
/// intercepts are not penalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultinomialLr {
    pub n_classes: usize,
    pub mean: Vec<f64>,
    /// Column standard deviations; 0 marks a constant column, which is
    /// mapped to 0 after standardization.
    pub scale: Vec<f64>,
    /// `(n_classes - 1) x (n_features + 1)`, intercept first.
    pub weights: Vec<Vec<f64>>,
    /// Gradient norm when the solver stopped.
    pub gradient_norm: f64,
    pub iterations: usize,
}

impl MultinomialLr {
    /// All-zero weights with the standardization of `features`.
    pub fn zeros(features: &Array2<f64>, n_classes: usize) -> Self {
        let f = features.ncols();
        let n = features.nrows().max(1) as f64;
        let mut mean = vec![0.0; f];
        let mut scale = vec![0.0; f];
        for c in 0..f {
            let col = features.column(c);
            let m = col.sum() / n;
            let sd = (col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt();
            mean[c] = m;
            if sd > 1e-12 * m.abs().max(1.0) {
                scale[c] = sd;
            }
        }
        MultinomialLr {
            n_classes,
            mean,
            scale,
            weights: vec![vec![0.0; f + 1]; n_classes.saturating_sub(1)],
            gradient_norm: f64::NAN,
            iterations: 0,
        }
    }

    fn design_row(&self, x: &[f64]) -> Vec<f64> {
        let mut row = Vec::with_capacity(x.len() + 1);
        row.push(1.0);
        for (c, &v) in x.iter().enumerate() {
            row.push(if self.scale[c] == 0.0 { 0.0 } else { (v - self.mean[c]) / self.scale[c] });
        }
        row
    }

    fn logits(weights: &[Vec<f64>], row: &[f64]) -> Vec<f64> {
        let mut logits = Vec::with_capacity(weights.len() + 1);
        logits.push(0.0);
        logits.extend(weights.iter().map(|w| w.iter().zip(row).map(|(a, b)| a * b).sum::<f64>()));
        logits
    }

    fn log_normalizer(logits: &[f64]) -> f64 {
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln()
    }

    fn probs_from_design(weights: &[Vec<f64>], row: &[f64]) -> Vec<f64> {
        let logits = Self::logits(weights, row);
        let lse = Self::log_normalizer(&logits);
        logits.into_iter().map(|l| (l - lse).exp()).collect()
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        Self::probs_from_design(&self.weights, &self.design_row(x))
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.predict_proba(x))
    }

    /// Mean cross-entropy plus `l2/2` times the squared non-intercept weights.
    pub fn objective(&self, features: &Array2<f64>, labels: &[usize], l2: f64) -> f64 {
        let rows = self.design(features);
        objective_on(&self.weights, &rows, labels, l2)
    }

    fn design(&self, features: &Array2<f64>) -> Vec<Vec<f64>> {
        features
            .rows()
            .into_iter()
            .map(|r| self.design_row(&r.to_vec()))
            .collect()
    }
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, &x)| if x > b.1 { (i, x) } else { b })
        .0
}

fn objective_on(weights: &[Vec<f64>], rows: &[Vec<f64>], labels: &[usize], l2: f64) -> f64 {
    let n = rows.len() as f64;
    let ce: f64 = rows
        .iter()
        .zip(labels)
        .map(|(r, &y)| {
            let logits = MultinomialLr::logits(weights, r);
            MultinomialLr::log_normalizer(&logits) - logits[y]
        })
        .sum::<f64>()
        / n;
    let penalty: f64 = weights.iter().map(|w| w[1..].iter().map(|x| x * x).sum::<f64>()).sum();
    ce + 0.5 * l2 * penalty
}

/// Newton's method with backtracking on the convex penalized objective,
/// started from zero weights.
pub fn fit_multinomial_lr(features: &Array2<f64>, labels: &[usize], n_classes: usize, l2: f64) -> Result<MultinomialLr> {
    if features.nrows() != labels.len() {
        return Err(Error::TrainingData("feature and label counts differ".into()));
    }
    if n_classes < 2 {
        return Err(Error::TrainingData("at least two classes are required".into()));
    }
    if !(l2 >= 0.0) {
        return Err(Error::TrainingData(format!("l2 must be non-negative, got {l2}")));
    }
    let mut counts = vec![0usize; n_classes];
    for &y in labels {
        if y >= n_classes {
            return Err(Error::TrainingData(format!("label {y} outside 0..{n_classes}")));
        }
        counts[y] += 1;
    }
    if let Some(c) = counts.iter().position(|&c| c == 0) {
        return Err(Error::TrainingData(format!("class {c} has no training samples")));
    }
    if features.iter().any(|x| !x.is_finite()) {
        return Err(Error::TrainingData("non-finite feature value".into()));
    }

    let mut model = MultinomialLr::zeros(features, n_classes);
    let rows = model.design(features);
    let d = features.ncols() + 1;
    let m = n_classes - 1;
    let dim = m * d;
    let n = rows.len() as f64;
    let unflatten = |theta: &DVector<f64>| -> Vec<Vec<f64>> {
        (0..m).map(|c| (0..d).map(|k| theta[c * d + k]).collect()).collect()
    };
    let mut theta = DVector::<f64>::zeros(dim);
    let mut f = objective_on(&unflatten(&theta), &rows, labels, l2);
    let mut grad_norm = f64::INFINITY;
    let mut iterations = 0;
    for it in 0..NEWTON_MAX_ITER {
        iterations = it;
        let w = unflatten(&theta);
        let mut grad = DVector::<f64>::zeros(dim);
        let mut hess = DMatrix::<f64>::zeros(dim, dim);
        for (row, &y) in rows.iter().zip(labels) {
            let p = MultinomialLr::probs_from_design(&w, row);
            for c in 0..m {
                let resid = p[c + 1] - if y == c + 1 { 1.0 } else { 0.0 };
                for k in 0..d {
                    grad[c * d + k] += resid * row[k] / n;
                }
                for c2 in 0..m {
                    let h = p[c + 1] * (if c == c2 { 1.0 } else { 0.0 } - p[c2 + 1]) / n;
                    if h == 0.0 {
                        continue;
                    }
                    for k in 0..d {
                        for k2 in 0..d {
                            hess[(c * d + k, c2 * d + k2)] += h * row[k] * row[k2];
                        }
                    }
                }
            }
        }
        for c in 0..m {
            for k in 1..d {
                grad[c * d + k] += l2 * theta[c * d + k];
                hess[(c * d + k, c * d + k)] += l2;
            }
        }
        grad_norm = grad.norm();
        if grad_norm <= NEWTON_TOL {
            break;
        }
        let step = newton_direction(&hess, &grad);
        // Backtracking line search (Armijo).
        let slope = grad.dot(&step);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand = &theta - t * &step;
            let fc = objective_on(&unflatten(&cand), &rows, labels, l2);
            if fc <= f - 1e-4 * t * slope {
                theta = cand;
                f = fc;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if grad_norm > NEWTON_TOL {
        log::warn!("logistic regression stopped with gradient norm {grad_norm:.3e}");
    }
    model.weights = unflatten(&theta);
    model.gradient_norm = grad_norm;
    model.iterations = iterations;
    Ok(model)
}

/// Solves `H s = g`, adding ridge when `H` is numerically singular.
fn newton_direction(hess: &DMatrix<f64>, grad: &DVector<f64>) -> DVector<f64> {
    let mut ridge = 0.0;
    let scale = hess.diagonal().amax().max(1e-300);
    for _ in 0..30 {
        let mut h = hess.clone();
        for i in 0..h.nrows() {
            h[(i, i)] += ridge;
        }
        if let Some(ch) = h.cholesky() {
            return ch.solve(grad);
        }
        ridge = if ridge == 0.0 { 1e-12 * scale } else { ridge * 10.0 };
    }
    grad.clone()
}

/// Square confusion matrix, rows are true classes and columns predictions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; n_classes]; n_classes],
        }
    }

    pub fn from_counts(counts: Vec<Vec<u64>>) -> Self {
        ConfusionMatrix { counts }
    }

    pub fn add(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn support(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn total(&self) -> u64 {
        self.support().iter().sum()
    }

    /// Per-class F1; a class with no true positives scores 0.
    pub fn f1_per_class(&self) -> Vec<f64> {
        let k = self.counts.len();
        (0..k)
            .map(|c| {
                let tp = self.counts[c][c] as f64;
                let predicted: u64 = (0..k).map(|r| self.counts[r][c]).sum();
                let actual: u64 = self.counts[c].iter().sum();
                if tp == 0.0 {
                    0.0
                } else {
                    2.0 * tp / (predicted as f64 + actual as f64)
                }
            })
            .collect()
    }

    /// Support-weighted mean of per-class F1.
    pub fn weighted_f1(&self) -> f64 {
        let support = self.support();
        let total: u64 = support.iter().sum();
        if total == 0 {
            return 0.0;
        }
        self.f1_per_class()
            .iter()
            .zip(&support)
            .map(|(f, &s)| f * s as f64)
            .sum::<f64>()
            / total as f64
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        (0..self.counts.len()).map(|c| self.counts[c][c]).sum::<u64>() as f64 / total as f64
    }
}

/// AUC-ROC as the normalized Mann–Whitney statistic with mid-ranks for ties.
pub fn auc_roc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (n_pos, n_neg) = class_counts(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && scores[order[end + 1]] == scores[order[start]] {
            end += 1;
        }
        // Ranks are 1-based; a tie group shares the mean rank.
        let mid = 0.5 * ((start + 1) + (end + 1)) as f64;
        rank_sum_pos += mid * order[start..=end].iter().filter(|&&i| labels[i]).count() as f64;
        start = end + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// AUC-PR as average precision: precision at each distinct threshold,
/// weighted by the recall gained there.
pub fn auc_pr(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (n_pos, _) = class_counts(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut seen, mut ap) = (0usize, 0usize, 0.0);
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && scores[order[end + 1]] == scores[order[start]] {
            end += 1;
        }
        let gained = order[start..=end].iter().filter(|&&i| labels[i]).count();
        tp += gained;
        seen += end - start + 1;
        ap += (gained as f64 / n_pos as f64) * (tp as f64 / seen as f64);
        start = end + 1;
    }
    Ok(ap)
}

fn class_counts(scores: &[f64], labels: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::UndefinedAuc("score and label counts differ".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::UndefinedAuc("NaN score".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedAuc(format!("{n_pos} positives and {n_neg} negatives")));
    }
    Ok((n_pos, n_neg))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Seed for sampling classifier training zeros.
    pub seed: u64,
    pub l2: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { seed: 0, l2: DEFAULT_L2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryTaskReport {
    /// `p@n`, `p@z` or `n@z`.
    pub task: String,
    pub auc_roc: f64,
    pub auc_pr: f64,
    pub n_positive: usize,
    pub n_negative: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub f1_neg: f64,
    pub f1_zr: f64,
    pub f1_pos: f64,
    pub weighted_f1: f64,
    pub accuracy: f64,
    /// Rows and columns ordered neg, zr, pos.
    pub confusion: ConfusionMatrix,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub binary: Vec<BinaryTaskReport>,
}

impl EvalReport {
    pub fn from_confusion(confusion: ConfusionMatrix) -> Self {
        let f1 = confusion.f1_per_class();
        EvalReport {
            f1_neg: f1[0],
            f1_zr: f1[1],
            f1_pos: f1[2],
            weighted_f1: confusion.weighted_f1(),
            accuracy: confusion.accuracy(),
            confusion,
            binary: Vec::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub const CSV_HEADER: &'static str = "label,f1_neg,f1_zr,f1_pos,f1_weighted,accuracy,auc_roc_pn,auc_roc_pz,auc_roc_nz,auc_pr_pn,auc_pr_pz,auc_pr_nz";

    /// One row matching [`EvalReport::CSV_HEADER`]; missing AUCs are empty.
    pub fn csv_row(&self, label: &str) -> String {
        let auc = |task: &str, pr: bool| {
            self.binary
                .iter()
                .find(|b| b.task == task)
                .map_or(String::new(), |b| format!("{:.6}", if pr { b.auc_pr } else { b.auc_roc }))
        };
        format!(
            "{label},{:.6},{:.6},{:.6},{:.6},{:.6},{},{},{},{},{},{}",
            self.f1_neg,
            self.f1_zr,
            self.f1_pos,
            self.weighted_f1,
            self.accuracy,
            auc("p@n", false),
            auc("p@z", false),
            auc("n@z", false),
            auc("p@n", true),
            auc("p@z", true),
            auc("n@z", true),
        )
    }
}

/// Labeled training and test pairs of a split.
struct LabeledPairs {
    train: Vec<((usize, usize), LinkClass)>,
    test: Vec<((usize, usize), LinkClass)>,
}

/// Training pairs are the train edges plus as many zeros drawn from
/// non-edges of the original graph that are not test zeros. Test pairs are
/// the held-out edges and test zeros.
fn labeled_pairs(split: &EdgeSplit, seed: u64) -> Result<LabeledPairs> {
    let mut forbidden: HashSet<(usize, usize)> = split.test_edges.iter().map(|e| (e.u, e.v)).collect();
    forbidden.extend(split.test_zeros.iter().copied());
    let n_train = split.train.n_edges();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut zeros = sample_non_edges(&split.train, &forbidden, n_train, &mut rng)?;
    zeros.sort_unstable();
    let mut train: Vec<_> = split
        .train
        .edges()
        .iter()
        .map(|e| ((e.u, e.v), LinkClass::from_weight(e.y)))
        .collect();
    train.extend(zeros.into_iter().map(|p| (p, LinkClass::Zr)));
    let mut test: Vec<_> = split
        .test_edges
        .iter()
        .map(|e| ((e.u, e.v), LinkClass::from_weight(e.y)))
        .collect();
    test.extend(split.test_zeros.iter().map(|&p| (p, LinkClass::Zr)));
    Ok(LabeledPairs { train, test })
}

fn feature_matrix<S: FeatureSource + ?Sized>(source: &S, pairs: &[(usize, usize)]) -> Array2<f64> {
    let mut x = Array2::zeros((pairs.len(), N_FEATURES));
    for (r, &(i, j)) in pairs.iter().enumerate() {
        let f = source.features(i, j);
        for c in 0..N_FEATURES {
            x[[r, c]] = f.chi[c];
        }
    }
    x
}

fn fit_on<S: FeatureSource + ?Sized>(
    source: &S,
    pairs: &[((usize, usize), LinkClass)],
    classes: &[LinkClass],
    l2: f64,
) -> Result<MultinomialLr> {
    let chosen: Vec<_> = pairs.iter().filter(|(_, c)| classes.contains(c)).collect();
    let coords: Vec<(usize, usize)> = chosen.iter().map(|(p, _)| *p).collect();
    let labels: Vec<usize> = chosen
        .iter()
        .map(|(_, c)| classes.iter().position(|k| k == c).expect("filtered"))
        .collect();
    fit_multinomial_lr(&feature_matrix(source, &coords), &labels, classes.len(), l2)
}

/// Three-class F1 of a logistic head trained on the training side of `split`.
pub fn evaluate_three_class<S: FeatureSource + ?Sized>(source: &S, split: &EdgeSplit, cfg: &EvalConfig) -> Result<EvalReport> {
    let pairs = labeled_pairs(split, cfg.seed)?;
    let model = fit_on(source, &pairs.train, &LinkClass::ALL, cfg.l2)?;
    let mut confusion = ConfusionMatrix::new(3);
    for &((i, j), class) in &pairs.test {
        confusion.add(class.index(), model.predict(&source.features(i, j).chi));
    }
    Ok(EvalReport::from_confusion(confusion))
}

/// AUC-ROC / AUC-PR for `p@n`, `p@z` and `n@z`, each with its own binary
/// logistic head. The first class named in the task is the positive label.
pub fn evaluate_binary_tasks<S: FeatureSource + ?Sized>(
    source: &S,
    split: &EdgeSplit,
    cfg: &EvalConfig,
) -> Result<Vec<BinaryTaskReport>> {
    let pairs = labeled_pairs(split, cfg.seed)?;
    let tasks = [
        ("p@n", LinkClass::Pos, LinkClass::Neg),
        ("p@z", LinkClass::Pos, LinkClass::Zr),
        ("n@z", LinkClass::Neg, LinkClass::Zr),
    ];
    tasks
        .iter()
        .map(|&(name, positive, negative)| {
            let classes = [negative, positive];
            let model = fit_on(source, &pairs.train, &classes, cfg.l2)
                .map_err(|e| Error::UndefinedAuc(format!("{name}: {e}")))?;
            let test: Vec<_> = pairs.test.iter().filter(|(_, c)| classes.contains(c)).collect();
            let scores: Vec<f64> = test
                .iter()
                .map(|((i, j), _)| model.predict_proba(&source.features(*i, *j).chi)[1])
                .collect();
            let labels: Vec<bool> = test.iter().map(|(_, c)| *c == positive).collect();
            let wrap = |e: Error| match e {
                Error::UndefinedAuc(m) => Error::UndefinedAuc(format!("{name}: {m}")),
                other => other,
            };
            Ok(BinaryTaskReport {
                task: name.to_string(),
                auc_roc: auc_roc(&scores, &labels).map_err(wrap)?,
                auc_pr: auc_pr(&scores, &labels).map_err(wrap)?,
                n_positive: labels.iter().filter(|&&l| l).count(),
                n_negative: labels.iter().filter(|&&l| !l).count(),
            })
        })
        .collect()
}

/// Three-class report with the binary tasks attached.
pub fn evaluate<S: FeatureSource + ?Sized>(source: &S, split: &EdgeSplit, cfg: &EvalConfig) -> Result<EvalReport> {
    let mut report = evaluate_three_class(source, split, cfg)?;
    report.binary = evaluate_binary_tasks(source, split, cfg)?;
    Ok(report)
}

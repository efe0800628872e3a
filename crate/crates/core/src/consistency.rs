//! Agreement between soft membership solutions of independent runs.
//!
//! Nodes are weighted uniformly, so the joint distribution over archetype
//! pairs is `p(d, d') = (1/N) sum_n q1[d, n] q2[d', n]`, and
//! `BNMI = 2 I(q1, q2) / (I(q1, q1) + I(q2, q2))`.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Space;
use crate::sgraph::SignedGraph;
use crate::train::{fit_ensemble, RunEnsemble, TrainConfig};

pub const DEFAULT_PERMUTATIONS: usize = 100;

/// Mutual information (natural log) of the soft co-assignment distribution.
pub fn soft_mi(q1: &Array2<f64>, q2: &Array2<f64>) -> Result<f64> {
    let n = q1.ncols();
    if q2.ncols() != n {
        return Err(Error::domain(format!("membership matrices cover {n} and {} nodes", q2.ncols())));
    }
    if n == 0 {
        return Err(Error::domain("membership matrices are empty"));
    }
    let joint = q1.dot(&q2.t()) / n as f64;
    let p1 = joint.sum_axis(ndarray::Axis(1));
    let p2 = joint.sum_axis(ndarray::Axis(0));
    let mut mi = 0.0;
    for ((d, e), &p) in joint.indexed_iter() {
        if p > 0.0 {
            mi += p * (p / (p1[d] * p2[e])).ln();
        }
    }
    Ok(mi)
}

pub fn bnmi(q1: &Array2<f64>, q2: &Array2<f64>) -> Result<f64> {
    let cross = soft_mi(q1, q2)?;
    let denom = soft_mi(q1, q1)? + soft_mi(q2, q2)?;
    if denom <= 0.0 {
        return Err(Error::UndefinedBnmi);
    }
    Ok(2.0 * cross / denom)
}

/// Symmetric `r x r` table of pairwise scores. The diagonal is 1 by
/// definition, including for solutions whose self-information is zero.
pub fn bnmi_table(runs: &[Array2<f64>]) -> Result<Array2<f64>> {
    let r = runs.len();
    let mut table = Array2::eye(r);
    for a in 0..r {
        for b in a + 1..r {
            let v = bnmi(&runs[a], &runs[b])?;
            table[[a, b]] = v;
            table[[b, a]] = v;
        }
    }
    Ok(table)
}

fn off_diagonal(table: &Array2<f64>) -> Vec<f64> {
    let r = table.nrows();
    (0..r).flat_map(|a| (a + 1..r).map(move |b| (a, b))).map(|(a, b)| table[[a, b]]).collect()
}

/// Mean and sample standard deviation (zero for a single value).
fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Null distribution of the all-pairs scores: each run's node columns are
/// shuffled independently per draw, destroying node alignment while keeping
/// each solution's marginal structure. Returns the mean and sample standard
/// deviation of the pooled pairwise scores over all draws.
pub fn permutation_null(runs: &[Array2<f64>], n_perm: usize, seed: u64) -> Result<(f64, f64)> {
    if runs.len() < 2 {
        return Err(Error::domain("the permutation null needs at least two runs"));
    }
    if n_perm == 0 {
        return Err(Error::domain("at least one permutation is required"));
    }
    let n = runs[0].ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pooled = Vec::with_capacity(n_perm * runs.len() * (runs.len() - 1) / 2);
    for _ in 0..n_perm {
        let shuffled: Vec<Array2<f64>> = runs
            .iter()
            .map(|q| {
                let mut order: Vec<usize> = (0..n).collect();
                order.shuffle(&mut rng);
                q.select(ndarray::Axis(1), &order)
            })
            .collect();
        pooled.extend(off_diagonal(&bnmi_table(&shuffled)?));
    }
    Ok(mean_sd(&pooled))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BnmiReport {
    pub space: Space,
    pub k: usize,
    pub pairwise: Vec<Vec<f64>>,
    pub mean: f64,
    pub sd: f64,
    pub null_mean: f64,
    pub null_sd: f64,
    pub permutations: usize,
}

impl BnmiReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// All-pairs scores of membership matrices from independent runs, with the
/// permutation null.
pub fn bnmi_report(space: Space, runs: &[Array2<f64>], n_perm: usize, seed: u64) -> Result<BnmiReport> {
    if runs.len() < 2 {
        return Err(Error::domain(format!("need at least two runs, got {}", runs.len())));
    }
    let table = bnmi_table(runs)?;
    let (mean, sd) = mean_sd(&off_diagonal(&table));
    let (null_mean, null_sd) = permutation_null(runs, n_perm, seed)?;
    Ok(BnmiReport {
        space,
        k: runs[0].nrows(),
        pairwise: table.rows().into_iter().map(|r| r.to_vec()).collect(),
        mean,
        sd,
        null_mean,
        null_sd,
        permutations: n_perm,
    })
}

pub fn ensemble_bnmi(ens: &RunEnsemble, space: Space, n_perm: usize, seed: u64) -> Result<BnmiReport> {
    bnmi_report(space, &ens.memberships(space), n_perm, seed)
}

/// One row of a K sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub space: Space,
    pub mean: f64,
    pub sd: f64,
    pub null_mean: f64,
    pub null_sd: f64,
}

impl SweepRow {
    pub const CSV_HEADER: &'static str = "k,space,mean,sd,null_mean,null_sd";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.6},{:.6},{:.6},{:.6}",
            self.k,
            self.space.name(),
            self.mean,
            self.sd,
            self.null_mean,
            self.null_sd
        )
    }
}

/// Trains an `r`-run ensemble for every `k` (same count in both spaces) and
/// scores both spaces.
pub fn bnmi_k_sweep(g: &SignedGraph, base: &TrainConfig, ks: &[usize], r: usize, n_perm: usize) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &k in ks {
        let cfg = TrainConfig {
            k_pos: k,
            k_neg: k,
            ..base.clone()
        };
        let ens = fit_ensemble(g, &cfg, r)?;
        for space in [Space::Pos, Space::Neg] {
            let rep = ensemble_bnmi(&ens, space, n_perm, base.seed)?;
            rows.push(SweepRow {
                k,
                space,
                mean: rep.mean,
                sd: rep.sd,
                null_mean: rep.null_mean,
                null_sd: rep.null_sd,
            });
        }
    }
    Ok(rows)
}

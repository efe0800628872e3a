use super::*;
use crate::sgraph::{generate_planted, Edge};
use approx::assert_abs_diff_eq;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_graph(n: usize, seed: u64) -> SignedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let u: f64 = rng.random();
            if u < 0.25 {
                edges.push(Edge::new(i, j, 1));
            } else if u < 0.4 {
                edges.push(Edge::new(i, j, -1));
            } else if u < 0.45 {
                edges.push(Edge::new(i, j, 2));
            }
        }
    }
    SignedGraph::from_edges(n, edges).unwrap()
}

/// Central-difference gradient of the full loss, entry by entry.
fn finite_difference(params: &ModelParams, g: &SignedGraph, h: f64) -> ModelParams {
    let mut out = params.zeros_like();
    let mut probe = params.clone();
    let n_tensors = probe.tensors_mut().len();
    for t in 0..n_tensors {
        let len = probe.tensors_mut()[t].1.len();
        for idx in 0..len {
            let orig = probe.tensors_mut()[t].1.as_slice_mut().unwrap()[idx];
            probe.tensors_mut()[t].1.as_slice_mut().unwrap()[idx] = orig + h;
            let up = full_loss(&probe, g).unwrap();
            probe.tensors_mut()[t].1.as_slice_mut().unwrap()[idx] = orig - h;
            let down = full_loss(&probe, g).unwrap();
            probe.tensors_mut()[t].1.as_slice_mut().unwrap()[idx] = orig;
            out.tensors_mut()[t].1.as_slice_mut().unwrap()[idx] = (up - down) / (2.0 * h);
        }
    }
    out
}

fn worst_relative_error(a: &ModelParams, b: &ModelParams) -> (f64, String) {
    let (mut a, mut b) = (a.clone(), b.clone());
    let mut worst = (0.0, String::new());
    for ((name, ta), (_, tb)) in a.tensors_mut().into_iter().zip(b.tensors_mut()) {
        for (x, y) in ta.iter().zip(tb.iter()) {
            let rel = (x - y).abs() / x.abs().max(y.abs()).max(1e-3);
            if rel > worst.0 {
                worst = (rel, format!("{name}: analytic {x} vs fd {y}"));
            }
        }
    }
    worst
}

#[test]
fn uniform_memberships_from_zero_logits() {
    let p = ModelParams::zeros(5, 4, 4);
    let m = p.memberships(Space::Pos);
    assert!(m.iter().all(|&v| (v - 0.25).abs() < 1e-15));
}

#[test]
fn softmax_of_dominant_logit_and_shift_invariance() {
    let mut p = ModelParams::zeros(2, 4, 4);
    p.pos.logits[[0, 0]] = 10.0;
    let m = p.memberships(Space::Pos);
    let want = 10f64.exp() / (10f64.exp() + 3.0);
    assert_abs_diff_eq!(m[[0, 0]], want, epsilon = 1e-15);
    assert_abs_diff_eq!(m[[0, 0]], 0.99986, epsilon = 1e-5);
    p.pos.logits.column_mut(0).mapv_inplace(|v| v + 123.0);
    let shifted = p.memberships(Space::Pos);
    for (a, b) in m.iter().zip(shifted.iter()) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-15);
    }
}

#[test]
fn gate_matrix_with_single_node_is_all_ones() {
    let p = ModelParams::random(Variant::TwoSpace, 1, 3, 1.0, &mut ChaCha8Rng::seed_from_u64(1));
    let c = p.gate_matrix(Space::Pos).unwrap();
    assert_eq!(c.dim(), (1, 3));
    assert!(c.iter().all(|&v| (v - 1.0).abs() < 1e-15));
}

#[test]
fn constant_gates_make_columns_proportional_to_memberships() {
    let mut p = ModelParams::random(Variant::TwoSpace, 6, 3, 1.0, &mut ChaCha8Rng::seed_from_u64(2));
    p.pos.gates.fill(0.0);
    let c = p.gate_matrix(Space::Pos).unwrap();
    let m = p.memberships(Space::Pos);
    for d in 0..3 {
        let row_sum = m.row(d).sum();
        for n in 0..6 {
            assert_abs_diff_eq!(c[[n, d]], m[[d, n]] / row_sum, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(c.column(d).sum(), 1.0, epsilon = 1e-12);
    }
}

#[test]
fn saturated_gates_select_single_nodes() {
    let mut p = ModelParams::random(Variant::TwoSpace, 5, 2, 1.0, &mut ChaCha8Rng::seed_from_u64(3));
    p.pos.gates.fill(f64::NEG_INFINITY);
    p.pos.gates[[0, 3]] = f64::INFINITY;
    p.pos.gates[[1, 1]] = f64::INFINITY;
    let c = p.gate_matrix(Space::Pos).unwrap();
    for n in 0..5 {
        assert_eq!(c[[n, 0]], if n == 3 { 1.0 } else { 0.0 });
        assert_eq!(c[[n, 1]], if n == 1 { 1.0 } else { 0.0 });
    }
}

#[test]
fn all_closed_gates_are_degenerate() {
    let mut p = ModelParams::zeros(4, 2, 2);
    p.neg.as_mut().unwrap().gates.fill(f64::NEG_INFINITY);
    assert!(matches!(p.gate_matrix(Space::Neg), Err(Error::DegenerateGate { space: "neg", dim: 0 })));
    assert!(p.archetypes().is_err());
}

/// Memberships one-hot on node d for dimension d, gates picking node d.
fn corner_params(k: usize) -> ModelParams {
    let mut p = ModelParams::zeros(k, k, k);
    for space in [&mut p.pos, p.neg.as_mut().unwrap()] {
        space.logits.fill(-400.0);
        space.gates.fill(f64::NEG_INFINITY);
        for d in 0..k {
            space.logits[[d, d]] = 400.0;
            space.gates[[d, d]] = f64::INFINITY;
        }
        space.mixing = Array2::eye(k);
    }
    p
}

#[test]
fn corner_archetypes_are_the_identity() {
    let a = corner_params(3).archetypes().unwrap();
    for ((r, c), &v) in a.a_pos.indexed_iter() {
        assert_abs_diff_eq!(v, if r == c { 1.0 } else { 0.0 }, epsilon = 1e-12);
    }
}

#[test]
fn archetypes_are_linear_in_mixing() {
    let mut p = ModelParams::random(Variant::TwoSpace, 7, 3, 1.0, &mut ChaCha8Rng::seed_from_u64(4));
    let a1 = p.archetypes().unwrap();
    p.pos.mixing *= 2.0;
    let a2 = p.archetypes().unwrap();
    for (x, y) in a1.a_pos.iter().zip(a2.a_pos.iter()) {
        assert_abs_diff_eq!(2.0 * x, y, epsilon = 1e-12);
    }
    assert_eq!(a1.a_neg, a2.a_neg);
}

#[test]
fn archetypes_match_naive_triple_product() {
    let p = ModelParams::random(Variant::TwoSpace, 6, 2, 1.0, &mut ChaCha8Rng::seed_from_u64(5));
    let z = p.memberships(Space::Pos);
    let sig = p.pos.gates.mapv(sigmoid);
    let (k, n) = z.dim();
    let mut c = Array2::<f64>::zeros((n, k));
    for d in 0..k {
        let total: f64 = (0..n).map(|m| z[[d, m]] * sig[[d, m]]).sum();
        for m in 0..n {
            c[[m, d]] = z[[d, m]] * sig[[d, m]] / total;
        }
    }
    let a = p.archetypes().unwrap().a_pos;
    for r in 0..k {
        for col in 0..k {
            let mut v = 0.0;
            for a1 in 0..k {
                for m in 0..n {
                    v += p.pos.mixing[[r, a1]] * z[[a1, m]] * c[[m, col]];
                }
            }
            assert_abs_diff_eq!(a[[r, col]], v, epsilon = 1e-12);
        }
    }
}

#[test]
fn rates_at_zero_and_ln2_distance() {
    let mut p = ModelParams::zeros(3, 2, 2);
    p.pos.mixing = Array2::eye(2);
    let arch = p.archetypes().unwrap();
    // Identical (uniform) memberships.
    let r = p.pair_rates(&arch, 0, 1).unwrap();
    assert_abs_diff_eq!(r.lambda_pos, 1.0, epsilon = 1e-6);

    let arch = ArchetypeSet {
        a_pos: Array2::eye(2) * (2f64.ln() / 2f64.sqrt()),
        a_neg: Array2::eye(2),
    };
    p.pos.logits[[0, 0]] = 800.0;
    p.pos.logits[[1, 1]] = 800.0;
    // z_0 = e_0, z_1 = e_1 so |A(z_0 - z_1)| = ln 2.
    let r = p.pair_rates(&arch, 0, 1).unwrap();
    assert_abs_diff_eq!(r.lambda_pos, 0.5, epsilon = 1e-12);
    assert_eq!(p.pair_rates(&arch, 1, 0).unwrap(), r);
    assert!(matches!(p.pair_rates(&arch, 2, 2), Err(Error::Domain(_))));
}

#[test]
fn forward_rates_agree_with_pair_rates_and_are_symmetric() {
    let p = ModelParams::random(Variant::TwoSpace, 9, 3, 1.0, &mut ChaCha8Rng::seed_from_u64(6));
    let arch = p.archetypes().unwrap();
    let fwd = Forward::new(&p).unwrap();
    for i in 0..9 {
        for j in 0..9 {
            if i == j {
                continue;
            }
            let a = fwd.rates(i, j);
            let b = p.pair_rates(&arch, i, j).unwrap();
            assert_abs_diff_eq!(a.lambda_pos, b.lambda_pos, epsilon = 1e-12 * b.lambda_pos.max(1.0));
            assert_abs_diff_eq!(a.lambda_neg, b.lambda_neg, epsilon = 1e-12 * b.lambda_neg.max(1.0));
            assert_eq!(fwd.rates(j, i), a);
            assert!(a.lambda_pos >= RATE_FLOOR && a.lambda_pos <= EXPONENT_CAP.exp());
        }
    }
}

#[test]
fn vanishing_rates_give_near_zero_loss_and_gradient() {
    let g = SignedGraph::from_edges(6, vec![]).unwrap();
    let mut p = ModelParams::random(Variant::TwoSpace, 6, 2, 0.1, &mut ChaCha8Rng::seed_from_u64(7));
    p.gamma.fill(-30.0);
    p.delta.fill(-30.0);
    let lg = full_nll(&p, &g).unwrap();
    assert!(lg.loss.abs() < 1e-9, "{}", lg.loss);
    let mut grads = lg.grads;
    for (_, t) in grads.tensors_mut() {
        assert!(t.iter().all(|v| v.abs() < 1e-9));
    }
}

#[test]
fn analytic_gradient_matches_finite_differences() {
    for (seed, variant) in [(10u64, Variant::TwoSpace), (11, Variant::SharedSpace), (12, Variant::TwoSpace)] {
        let g = random_graph(6, seed);
        let p = ModelParams::random(variant, 6, 2, 0.7, &mut ChaCha8Rng::seed_from_u64(seed));
        let analytic = full_nll(&p, &g).unwrap().grads;
        let fd = finite_difference(&p, &g, 1e-6);
        let (err, at) = worst_relative_error(&analytic, &fd);
        assert!(err <= 1e-5, "{variant:?}: {err} at {at}");
    }
}

#[test]
fn loss_is_invariant_under_node_relabeling() {
    let g = random_graph(7, 20);
    let p = ModelParams::random(Variant::TwoSpace, 7, 3, 1.0, &mut ChaCha8Rng::seed_from_u64(20));
    let perm = [3usize, 6, 0, 5, 1, 4, 2];
    // new index of old node i is perm[i]
    let mut inv = [0usize; 7];
    for (old, &new) in perm.iter().enumerate() {
        inv[new] = old;
    }
    let edges = g.edges().iter().map(|e| Edge::new(perm[e.u], perm[e.v], e.y)).collect();
    let g2 = SignedGraph::from_edges(7, edges).unwrap();
    let mut p2 = p.clone();
    p2.pos.logits = p.pos.logits.select(Axis(1), &inv);
    p2.pos.gates = p.pos.gates.select(Axis(1), &inv);
    let (neg2, neg) = (p2.neg.as_mut().unwrap(), p.neg.as_ref().unwrap());
    neg2.logits = neg.logits.select(Axis(1), &inv);
    neg2.gates = neg.gates.select(Axis(1), &inv);
    p2.gamma = p.gamma.select(Axis(0), &inv);
    p2.delta = p.delta.select(Axis(0), &inv);
    let a = full_loss(&p, &g).unwrap();
    let b = full_loss(&p2, &g2).unwrap();
    assert_abs_diff_eq!(a, b, epsilon = 1e-10 * a.abs());
}

#[test]
fn ceiling_is_enforced() {
    let n = FULL_LIKELIHOOD_CEILING + 1;
    let g = SignedGraph::from_edges(n, vec![]).unwrap();
    let p = ModelParams::zeros(n, 2, 2);
    assert!(matches!(full_nll(&p, &g), Err(Error::FullLikelihoodCeiling { .. })));
}

#[test]
fn exhaustive_batch_reproduces_full_likelihood() {
    let g = random_graph(12, 30);
    let p = ModelParams::random(Variant::TwoSpace, 12, 3, 0.8, &mut ChaCha8Rng::seed_from_u64(30));
    let full = full_nll(&p, &g).unwrap();
    let sampled = sampled_nll(&p, &g, &PairBatch::exhaustive(&g)).unwrap();
    assert_abs_diff_eq!(full.loss, sampled.loss, epsilon = 1e-12 * full.loss.abs());
    let (err, _) = worst_relative_error(&full.grads, &sampled.grads);
    assert!(err < 1e-10);
}

#[test]
fn sampled_estimator_is_unbiased() {
    let g = random_graph(30, 31);
    let p = ModelParams::random(Variant::TwoSpace, 30, 3, 0.8, &mut ChaCha8Rng::seed_from_u64(31));
    let full = full_nll(&p, &g).unwrap().loss;
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let draws: Vec<f64> = (0..200)
        .map(|_| sampled_nll(&p, &g, &PairBatch::sample(&g, 40, &mut rng)).unwrap().loss)
        .collect();
    let mean = draws.iter().sum::<f64>() / 200.0;
    let sd = (draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / 199.0).sqrt();
    assert!((mean - full).abs() <= 2.0 * sd / 200f64.sqrt(), "{mean} vs {full} (sd {sd})");
}

#[test]
fn sampled_gradient_expectation_equals_full_gradient() {
    // With-replacement draws make the estimator's expectation the uniform
    // average of one-pair batches over every non-edge, so the identity is exact.
    let g = random_graph(14, 33);
    let p = ModelParams::random(Variant::TwoSpace, 14, 2, 0.8, &mut ChaCha8Rng::seed_from_u64(33));
    let full = full_nll(&p, &g).unwrap();
    let non_edges = PairBatch::exhaustive(&g).non_edges;
    let mut mean = p.zeros_like();
    let mut mean_loss = 0.0;
    for &pair in &non_edges {
        let lg = sampled_nll(&p, &g, &PairBatch { non_edges: vec![pair] }).unwrap();
        mean_loss += lg.loss / non_edges.len() as f64;
        let mut grads = lg.grads;
        for ((_, mut acc), (_, x)) in mean.tensors_mut().into_iter().zip(grads.tensors_mut()) {
            acc.iter_mut().zip(x.iter()).for_each(|(a, b)| *a += b / non_edges.len() as f64);
        }
    }
    assert_abs_diff_eq!(mean_loss, full.loss, epsilon = 1e-10 * full.loss.abs());
    let (err, _) = worst_relative_error(&full.grads, &mean);
    assert!(err < 1e-9, "{err}");
}

#[test]
fn sampled_estimator_rejects_bad_batches() {
    let g = random_graph(10, 36);
    let p = ModelParams::zeros(10, 2, 2);
    let empty = PairBatch { non_edges: vec![] };
    assert!(matches!(sampled_nll(&p, &g, &empty), Err(Error::Estimator(_))));
    let e = g.edges()[0];
    let bad = PairBatch { non_edges: vec![(e.u, e.v)] };
    assert!(matches!(sampled_nll(&p, &g, &bad), Err(Error::Estimator(_))));
}

#[test]
fn shared_space_has_fewer_parameters_and_unit_rate_at_zero_distance() {
    let two = ModelParams::zeros(50, 4, 4);
    let shared = ModelParams::zeros_shared(50, 4);
    assert!(shared.n_parameters() < two.n_parameters());
    let arch = shared.archetypes().unwrap();
    let r = shared.pair_rates(&arch, 0, 1).unwrap();
    assert_abs_diff_eq!(r.lambda_pos, 1.0, epsilon = 1e-5);
    assert_eq!(shared.k_neg(), 4);
}

#[test]
fn all_pairs_visits_every_pair_with_its_weight() {
    let g = random_graph(9, 40);
    let pairs: Vec<_> = all_pairs(&g).collect();
    assert_eq!(pairs.len(), 36);
    for &(i, j, y, _) in &pairs {
        assert!(i < j);
        assert_eq!(y, g.weight(i, j));
    }
    assert_eq!(pairs.iter().filter(|p| p.2 != 0).count(), g.n_edges());
}

#[test]
fn snapshot_round_trip_is_exact() {
    let (g, _) = generate_planted(40, 3, 1, -0.5).unwrap();
    let p = ModelParams::random(Variant::TwoSpace, 40, 3, 1.3, &mut ChaCha8Rng::seed_from_u64(41));
    let snap = Snapshot::new(p.clone(), 41, 17);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.snapshot");
    snap.save(&path).unwrap();
    let back = Snapshot::load(&path).unwrap();
    assert_eq!(back, snap);
    let before = full_loss(&p, &g).unwrap();
    let after = full_loss(&back.params, &g).unwrap();
    assert_eq!(before.to_bits(), after.to_bits());
    assert!(Snapshot::from_json(&snap.to_json().unwrap().replace("s2spm-snapshot", "other")).is_err());
}

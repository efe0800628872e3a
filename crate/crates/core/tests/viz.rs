use ndarray::{array, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use s2spm::model::{ModelParams, Space, Variant};
use s2spm::sgraph::{Edge, SignedGraph};
use s2spm::viz::*;
use s2spm::Error;

fn normalise_columns(m: &mut Array2<f64>) {
    for mut c in m.columns_mut() {
        let s: f64 = c.sum();
        c.mapv_inplace(|v| v / s);
    }
}

#[test]
fn anchors_sit_on_the_unit_circle_at_regular_angles() {
    let a = anchor_positions(4);
    assert!((a[1][0]).abs() < 1e-15 && (a[1][1] - 1.0).abs() < 1e-15);
    assert!((a[2][0] + 1.0).abs() < 1e-15);
    for p in anchor_positions(7) {
        assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-15);
    }
}

#[test]
fn corner_and_uniform_nodes_land_on_anchor_and_origin() {
    let q = array![[1.0, 0.25], [0.0, 0.25], [0.0, 0.25], [0.0, 0.25]];
    let layout = circular_from_memberships(&q, Space::Pos, vec![]);
    assert_eq!(layout.nodes[0], layout.anchors[0]);
    assert!(layout.nodes[1][0].abs() < 1e-12 && layout.nodes[1][1].abs() < 1e-12);
}

proptest! {
    #[test]
    fn circular_positions_are_convex_combinations(k in 2usize..9, n in 1usize..20, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut q = Array2::from_shape_fn((k, n), |_| rng.random::<f64>() + 1e-3);
        normalise_columns(&mut q);
        let layout = circular_from_memberships(&q, Space::Neg, vec![]);
        for (i, p) in layout.nodes.iter().enumerate() {
            let mut x = 0.0;
            let mut y = 0.0;
            for d in 0..k {
                let angle = 2.0 * std::f64::consts::PI * d as f64 / k as f64;
                x += q[[d, i]] * angle.cos();
                y += q[[d, i]] * angle.sin();
            }
            prop_assert!((p[0] - x).abs() < 1e-12 && (p[1] - y).abs() < 1e-12);
            prop_assert!(p[0].hypot(p[1]) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn membership_order_is_a_bijection_and_idempotent(k in 2usize..6, n in 1usize..40, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Coarse values force ties in both the argmax and the magnitude.
        let mut q = Array2::from_shape_fn((k, n), |_| rng.random_range(1..4) as f64);
        normalise_columns(&mut q);
        let order = membership_order(&q);
        let mut seen = order.clone();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());

        let reordered = q.select(ndarray::Axis(1), &order);
        prop_assert_eq!(membership_order(&reordered), (0..n).collect::<Vec<_>>());
    }
}

#[test]
fn ties_break_by_magnitude_then_index() {
    let q = array![[0.6, 0.9, 0.6, 0.2], [0.4, 0.1, 0.4, 0.8]];
    assert_eq!(membership_order(&q), vec![1, 0, 2, 3]);
}

#[test]
fn planted_blocks_reorder_to_block_diagonal() {
    // Nodes alternate between two blocks; links only inside a block.
    let n = 8;
    let block = |i: usize| i % 2;
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if block(i) == block(j) {
                edges.push(Edge::new(i, j, 1));
            }
        }
    }
    edges.push(Edge::new(0, 1, -1));
    let g = SignedGraph::from_edges(n, edges).unwrap();
    let q = Array2::from_shape_fn((2, n), |(d, i)| if block(i) == d { 1.0 } else { 0.0 });
    let ordered = ordered_adjacency_from(&q, &g, Space::Pos).unwrap();
    assert_eq!(ordered.permutation, vec![0, 2, 4, 6, 1, 3, 5, 7]);
    let dense = ordered.dense();
    for r in 0..n {
        for c in 0..n {
            let same = (r < 4) == (c < 4);
            assert_eq!(dense[[r, c]] != 0, same && r != c, "entry ({r}, {c})");
        }
    }
    assert!(dense.iter().all(|&y| y >= 0));

    let negative = ordered_adjacency_from(&q, &g, Space::Neg).unwrap();
    assert_eq!(negative.entries, vec![(0, 4, -1), (4, 0, -1)]);
}

/// Cyclic Jacobi eigensolver for small symmetric matrices.
fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(i == j)).collect()).collect();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| a[i][j].powi(2)).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

#[test]
fn pca_matches_a_jacobi_oracle_on_small_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let x = Array2::from_shape_fn((5, 3), |_| rng.random_range(-2.0..2.0));
        let pca = pca_2d(&x).unwrap();

        let mean: Vec<f64> = (0..3).map(|c| (0..5).map(|r| x[[r, c]]).sum::<f64>() / 5.0).collect();
        let cov: Vec<Vec<f64>> = (0..3)
            .map(|a| (0..3).map(|b| (0..5).map(|r| (x[[r, a]] - mean[a]) * (x[[r, b]] - mean[b])).sum::<f64>() / 4.0).collect())
            .collect();
        let total = cov[0][0] + cov[1][1] + cov[2][2];
        let (vals, vecs) = jacobi_eigen(cov);
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
        for slot in 0..2 {
            let mut dir: Vec<f64> = (0..3).map(|r| vecs[r][idx[slot]]).collect();
            let lead = (0..3).fold(0, |m, r| if dir[r].abs() > dir[m].abs() { r } else { m });
            if dir[lead] < 0.0 {
                dir.iter_mut().for_each(|v| *v = -*v);
            }
            assert!((pca.explained[slot] - vals[idx[slot]] / total).abs() < 1e-10);
            for r in 0..5 {
                let proj: f64 = (0..3).map(|c| (x[[r, c]] - mean[c]) * dir[c]).sum();
                assert!((pca.coords[[r, slot]] - proj).abs() < 1e-10, "{} vs {}", pca.coords[[r, slot]], proj);
            }
        }
    }
}

#[test]
fn collinear_points_put_all_variance_on_the_first_component() {
    let x = Array2::from_shape_fn((6, 3), |(r, c)| (r as f64) * [1.0, -2.0, 0.5][c] + 3.0);
    let pca = pca_2d(&x).unwrap();
    assert!((pca.explained[0] - 1.0).abs() < 1e-12);
    assert!(pca.explained[1].abs() < 1e-12);
}

#[test]
fn planar_data_keeps_its_pairwise_distances() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    // Points in the plane spanned by two orthonormal vectors, shifted.
    let u = [1.0 / 3f64.sqrt(); 3];
    let v = [1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt(), 0.0];
    let coeffs: Vec<(f64, f64)> = (0..10).map(|_| (rng.random_range(-3.0..3.0), rng.random_range(-1.0..1.0))).collect();
    let x = Array2::from_shape_fn((10, 3), |(r, c)| 2.0 + coeffs[r].0 * u[c] + coeffs[r].1 * v[c]);
    let pca = pca_2d(&x).unwrap();
    for a in 0..10 {
        for b in 0..10 {
            let orig: f64 = (0..3).map(|c| (x[[a, c]] - x[[b, c]]).powi(2)).sum::<f64>().sqrt();
            let proj = (pca.coords[[a, 0]] - pca.coords[[b, 0]]).hypot(pca.coords[[a, 1]] - pca.coords[[b, 1]]);
            assert!((orig - proj).abs() < 1e-10);
        }
    }
    assert!((pca.explained[0] + pca.explained[1] - 1.0).abs() < 1e-12);
}

#[test]
fn constant_input_is_degenerate() {
    let x = Array2::from_elem((4, 3), 1.5);
    assert!(matches!(pca_2d(&x), Err(Error::DegeneratePca)));
    assert!(pca_2d(&Array2::zeros((1, 3))).is_err());
}

#[test]
fn single_column_input_has_an_empty_second_component() {
    let x = array![[1.0], [2.0], [4.0]];
    let pca = pca_2d(&x).unwrap();
    assert!((pca.explained[0] - 1.0).abs() < 1e-12);
    assert_eq!(pca.explained[1], 0.0);
}

#[test]
fn emitters_are_byte_identical_across_calls() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let params = ModelParams::random(Variant::TwoSpace, 12, 3, 1.0, &mut rng);
    let edges = vec![Edge::new(0, 1, 2), Edge::new(2, 5, -1), Edge::new(3, 7, 1)];
    let g = SignedGraph::from_edges(12, edges).unwrap();
    let render = || {
        let c = circular_layout(&params, &g, Space::Pos).unwrap();
        let o = ordered_adjacency(&params, &g, Space::Neg).unwrap();
        let p = embedding_pca(&params, Space::Pos).unwrap();
        let labels = dominant_labels(&params, Space::Pos);
        [c.to_svg(), c.to_csv(g.node_ids()), o.to_svg(), o.to_csv(), p.to_svg(Some(&labels)), p.to_csv()]
    };
    let first = render();
    assert_eq!(first, render());
    assert!(first[0].starts_with("<?xml") && first[0].trim_end().ends_with("</svg>"));
    assert_eq!(first[0].matches("<line").count(), 2);
    assert_eq!(first[2].matches("<rect").count(), 2 + 2);
}

#[test]
fn mismatched_graph_is_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let params = ModelParams::random(Variant::TwoSpace, 5, 2, 1.0, &mut rng);
    let g = SignedGraph::from_edges(6, vec![Edge::new(0, 1, 1)]).unwrap();
    assert!(circular_layout(&params, &g, Space::Pos).is_err());
    assert!(ordered_adjacency(&params, &g, Space::Pos).is_err());
}

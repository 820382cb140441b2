use ace_core::indices::{IndexId, IndexValue, ScoreMatrix};
use ace_core::link::*;
use ace_core::rng::substream;
use ace_core::stats::spearman_onesided_pvalue;
use ace_core::Error;
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::Rng;

fn graph(k: usize, weights: Vec<f64>) -> CorrelationGraph {
    CorrelationGraph::from_weights((0..k).collect(), weights).unwrap()
}

fn random_graph(k: usize, seed: u64, connected: bool) -> CorrelationGraph {
    let mut rng = substream(seed, 0);
    let mut w = vec![0.0; k * k];
    let mut set = |a: usize, b: usize, v: f64| {
        w[a * k + b] = v;
        w[b * k + a] = v;
    };
    for a in 0..k {
        for b in a + 1..k {
            if rng.random::<f64>() < 0.4 {
                set(a, b, rng.random_range(0.05..1.0));
            }
        }
    }
    if connected {
        for a in 1..k {
            set(a - 1, a, rng.random_range(0.05..1.0));
        }
        if k >= 3 {
            set(0, 2, rng.random_range(0.05..1.0));
        }
    }
    graph(k, w)
}

/// Stationary row of the dense Google matrix, by repeated squaring.
fn pagerank_oracle(g: &CorrelationGraph, damping: f64) -> Vec<f64> {
    let k = g.len();
    let mut m = DMatrix::<f64>::zeros(k, k);
    for a in 0..k {
        let out: f64 = (0..k).map(|b| g.weights[a * k + b]).sum();
        for b in 0..k {
            let p = if out > 0.0 {
                g.weights[a * k + b] / out
            } else {
                1.0 / k as f64
            };
            m[(a, b)] = damping * p + (1.0 - damping) / k as f64;
        }
    }
    for _ in 0..60 {
        m = &m * &m;
        for a in 0..k {
            let s: f64 = m.row(a).sum();
            m.row_mut(a).iter_mut().for_each(|x| *x /= s);
        }
    }
    (0..k).map(|b| m[(0, b)]).collect()
}

/// Leading eigenvector of `W W^T` from a dense symmetric eigensolver. Needs a
/// connected non-bipartite graph so the leading eigenvalue is simple.
fn hits_oracle(g: &CorrelationGraph) -> Vec<f64> {
    let k = g.len();
    let w = DMatrix::from_row_slice(k, k, &g.weights);
    let eig = SymmetricEigen::new(&w * w.transpose());
    let top = eig.eigenvalues.imax();
    let v: Vec<f64> = eig
        .eigenvectors
        .column(top)
        .iter()
        .map(|x| x.abs())
        .collect();
    let s: f64 = v.iter().sum();
    v.iter().map(|x| x / s).collect()
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
}

#[test]
fn pagerank_matches_dense_oracle() {
    for case in 0..100u64 {
        let k = 1 + (case as usize % 10);
        let g = random_graph(k, 2000 + case, false);
        let pr = pagerank(&g, 0.85, 1e-12).unwrap();
        let oracle = pagerank_oracle(&g, 0.85);
        assert!(
            close(&pr, &oracle, 1e-8),
            "case {case}: {pr:?} vs {oracle:?}"
        );
        assert!((pr.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(pr.iter().all(|&w| w > 0.0));
    }
}

#[test]
fn hits_matches_dense_oracle() {
    for case in 0..100u64 {
        let k = 3 + (case as usize % 6);
        let g = random_graph(k, 3000 + case, true);
        let auth = hits_authority(&g, 1e-13);
        let oracle = hits_oracle(&g);
        assert!(
            close(&auth, &oracle, 1e-8),
            "case {case}: {auth:?} vs {oracle:?}"
        );
    }
}

#[test]
fn link_examples() {
    let pair = graph(2, vec![0.0, 0.7, 0.7, 0.0]);
    assert!(close(
        &pagerank(&pair, 0.85, 1e-10).unwrap(),
        &[0.5, 0.5],
        1e-12
    ));

    let mut star = vec![0.0; 16];
    for leaf in 1..4 {
        star[leaf] = 1.0;
        star[leaf * 4] = 1.0;
    }
    let pr = pagerank(&graph(4, star), 0.85, 1e-10).unwrap();
    assert!((1..4).all(|l| pr[0] > pr[l]));

    let single = graph(1, vec![0.0]);
    assert_eq!(pagerank(&single, 0.85, 1e-10).unwrap(), vec![1.0]);
    assert_eq!(hits_authority(&single, 1e-10), vec![1.0]);
    assert_eq!(
        hits_authority(&graph(3, vec![0.0; 9]), 1e-10),
        vec![1.0 / 3.0; 3]
    );
    assert!(pagerank(&pair, 1.0, 1e-10).is_err());
}

#[test]
fn symmetric_graphs_give_uniform_weights() {
    for k in 2..8 {
        let complete: Vec<f64> = (0..k * k)
            .map(|c| if c / k == c % k { 0.0 } else { 0.6 })
            .collect();
        let cycle: Vec<f64> = (0..k * k)
            .map(|c| {
                let (a, b) = (c / k, c % k);
                if a != b && ((a + 1) % k == b || (b + 1) % k == a) {
                    0.3
                } else {
                    0.0
                }
            })
            .collect();
        for w in [complete, cycle] {
            let g = graph(k, w);
            let uniform = vec![1.0 / k as f64; k];
            assert!(close(&pagerank(&g, 0.85, 1e-12).unwrap(), &uniform, 1e-9));
            assert!(close(&hits_authority(&g, 1e-12), &uniform, 1e-9));
        }
    }
}

#[test]
fn build_graph_examples() {
    let trio = [1.0; 9];
    let g = build_graph(&[4, 7, 9], &trio, 5, 0.1).unwrap();
    assert_eq!(g.edges.len(), 3);
    assert_eq!((g.edges[0].i, g.edges[0].j), (4, 7));

    let neg: Vec<f64> = (0..9)
        .map(|c| if c / 3 == c % 3 { 1.0 } else { -0.4 })
        .collect();
    assert!(build_graph(&[0, 1, 2], &neg, 10, 0.1)
        .unwrap()
        .edges
        .is_empty());

    // r(0,1) = 0.95, r(0,2) = 0.2, r(1,2) = -0.5 with M = 10
    let corr = [1.0, 0.95, 0.2, 0.95, 1.0, -0.5, 0.2, -0.5, 1.0];
    let p01 = spearman_onesided_pvalue(0.95, 10).unwrap();
    let p02 = spearman_onesided_pvalue(0.2, 10).unwrap();
    assert!(p01 <= 0.1 / 3.0 && p02 > 0.1 / 2.0);
    let g = build_graph(&[0, 1, 2], &corr, 10, 0.1).unwrap();
    assert_eq!(g.edges.len(), 1);
    assert_eq!(
        (g.edges[0].i, g.edges[0].j, g.edges[0].weight),
        (0, 1, 0.95)
    );
    assert_eq!(g.weights[2], 0.0);
    assert_eq!(
        build_graph(&[0, 1, 2], &corr, 10, 1.0),
        Err(Error::InvalidAlpha(1.0))
    );
}

fn matrix(rows: &[&[Option<f64>]]) -> ScoreMatrix {
    let size = rows[0].len();
    ScoreMatrix {
        index: IndexId::SilhouetteEuclidean,
        size,
        cells: rows
            .iter()
            .flat_map(|r| {
                r.iter().map(|c| {
                    c.map(|v| IndexValue {
                        raw: v,
                        oriented: v,
                    })
                })
            })
            .collect(),
        failures: Vec::new(),
    }
}

#[test]
fn aggregate_examples() {
    let s = matrix(&[
        &[Some(1.0), Some(2.0), Some(3.0)],
        &[Some(3.0), Some(2.0), Some(1.0)],
        &[Some(3.0), None, Some(1.0)],
    ]);
    assert_eq!(
        aggregate_scores(&s, &[1], &[1.0]).unwrap(),
        vec![Some(3.0), Some(2.0), Some(1.0)]
    );
    assert_eq!(
        aggregate_scores(&s, &[0, 1], &[0.5, 0.5]).unwrap(),
        vec![Some(2.0); 3]
    );
    assert_eq!(
        aggregate_scores(&s, &[1, 2], &[0.9, 0.1]).unwrap(),
        vec![Some(3.0), Some(2.0), Some(1.0)]
    );
    assert_eq!(
        aggregate_scores(&s, &[0, 2], &[0.25, 0.75]).unwrap()[1],
        Some(2.0)
    );
    assert_eq!(aggregate_scores(&s, &[], &[]), Err(Error::EmptySubgroup));
}

proptest! {
    #[test]
    fn ratings_ignore_uniform_rescaling(seed in 0u64..10_000, k in 2usize..9, scale in 0.01f64..50.0) {
        let g = random_graph(k, seed, true);
        let scaled = graph(k, g.weights.iter().map(|w| w * scale).collect());
        prop_assert!(close(&pagerank(&g, 0.85, 1e-12).unwrap(), &pagerank(&scaled, 0.85, 1e-12).unwrap(), 1e-9));
        prop_assert!(close(&hits_authority(&g, 1e-12), &hits_authority(&scaled, 1e-12), 1e-9));
    }

    #[test]
    fn aggregate_stays_in_row_envelope(seed in 0u64..10_000) {
        let mut rng = substream(seed, 1);
        let (m, cols) = (rng.random_range(1..6), rng.random_range(1..8));
        let rows: Vec<Vec<Option<f64>>> = (0..m)
            .map(|_| (0..cols).map(|_| (rng.random::<f64>() > 0.2).then(|| rng.random_range(-5.0..5.0))).collect())
            .collect();
        let refs: Vec<&[Option<f64>]> = rows.iter().map(|r| r.as_slice()).collect();
        let s = matrix(&refs);
        let members: Vec<usize> = (0..m).collect();
        let weights: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
        let agg = aggregate_scores(&s, &members, &weights).unwrap();
        for j in 0..cols {
            let col: Vec<f64> = rows.iter().filter_map(|r| r[j]).collect();
            match agg[j] {
                None => prop_assert!(col.is_empty()),
                Some(v) => {
                    let (lo, hi) = col.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
                    prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
                }
            }
        }
    }

    #[test]
    fn edge_set_shrinks_with_alpha(seed in 0u64..10_000, a1 in 0.001f64..0.5, a2 in 0.001f64..0.5) {
        let mut rng = substream(seed, 2);
        let k = rng.random_range(2..7);
        let mut corr = vec![1.0; k * k];
        for a in 0..k {
            for b in a + 1..k {
                let r = rng.random_range(-1.0..1.0);
                corr[a * k + b] = r;
                corr[b * k + a] = r;
            }
        }
        let vertices: Vec<usize> = (0..k).collect();
        let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
        let small = build_graph(&vertices, &corr, 12, lo).unwrap();
        let large = build_graph(&vertices, &corr, 12, hi).unwrap();
        prop_assert!(small.edges.iter().all(|e| large.edges.iter().any(|f| (f.i, f.j) == (e.i, e.j))));
    }
}

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use tvfb::gossip::{apply_gossip, build_gossip, certify_chi, project_consensus_complement};
use tvfb::netgraph::{generate_erdos_renyi, TimeVaryingGraph};
use tvfb::rng::stream;
use tvfb::StackedVector;

fn random_stacked(n: usize, d: usize, seed: u64) -> StackedVector<f64> {
    let mut rng = stream(&[seed]);
    StackedVector::from_matrix(DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0)))
}

#[test]
fn fixture_chi_matches_independent_eigensolve() {
    // reference value from a LAPACK symmetric eigensolve of the golden
    // edge list's Laplacian
    let g = generate_erdos_renyi(15, 0.3, 42).unwrap();
    let chi: f64 = certify_chi(&g, 1).unwrap();
    assert!((chi - 3.4766256136597713).abs() <= 1e-10, "{chi}");
}

#[test]
fn contraction_and_assumption_six_on_churn_schedule() {
    let g = generate_erdos_renyi(15, 0.3, 42)
        .unwrap()
        .with_churn(0.2, 7)
        .unwrap();
    let rounds = 20;
    let chi: f64 = certify_chi(&g, rounds).unwrap();
    for k in 0..rounds {
        let edges = g.edges_at(k);
        let w: DMatrix<f64> = build_gossip(&edges, 15).unwrap();
        assert!(w.row_sum().amax() <= 1e-12);
        assert!(w.column_sum().amax() <= 1e-12);
        for i in 0..15 {
            for j in 0..15 {
                if i != j && !edges.contains(&(i.min(j), i.max(j))) {
                    assert_eq!(w[(i, j)], 0.0);
                }
            }
        }
        for s in 0..100 {
            let x = project_consensus_complement(&random_stacked(15, 3, s * 1000 + k as u64));
            let wx = apply_gossip(&w, &x).unwrap();
            let lhs = (&wx - &x).norm_squared();
            assert!(lhs <= (1.0 - 1.0 / chi) * x.norm_squared() + 1e-12);
        }
    }
}

#[test]
fn path_three_and_single_edge() {
    let p3 = TimeVaryingGraph::path(3).unwrap();
    let w: DMatrix<f64> = build_gossip(p3.base_edges(), 3).unwrap();
    let l = DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0]);
    assert!((w - l / 3.0).amax() <= 1e-14);

    let e = TimeVaryingGraph::complete(2).unwrap();
    let w: DMatrix<f64> = build_gossip(e.base_edges(), 2).unwrap();
    let x = StackedVector::from_blocks(&[[3.0], [1.0]]).unwrap();
    let out = apply_gossip(&w, &x).unwrap();
    assert_eq!(out.block(0), vec![1.0]);
    assert_eq!(out.block(1), vec![-1.0]);
    assert!((certify_chi::<f64>(&e, 1).unwrap() - 1.0).abs() <= 1e-12);
}

proptest! {
    #[test]
    fn projection_is_idempotent(n in 1usize..10, d in 1usize..4, seed in any::<u64>()) {
        let x = random_stacked(n, d, seed);
        let once = project_consensus_complement(&x);
        let twice = project_consensus_complement(&once);
        prop_assert!(once.max_abs_diff(&twice) <= 1e-14);
    }

    #[test]
    fn complete_graph_gossip_is_projection(n in 2usize..16, d in 1usize..4, seed in any::<u64>()) {
        let g = TimeVaryingGraph::complete(n).unwrap();
        let w: DMatrix<f64> = build_gossip(g.base_edges(), n).unwrap();
        let x = random_stacked(n, d, seed);
        let diff = apply_gossip(&w, &x).unwrap().max_abs_diff(&project_consensus_complement(&x));
        prop_assert!(diff <= 1e-12);
    }

    #[test]
    fn gossip_kills_consensus_vectors(n in 2usize..12, seed in any::<u64>()) {
        let g = generate_erdos_renyi(n, 0.6, seed).unwrap();
        let w: DMatrix<f64> = build_gossip(g.base_edges(), n).unwrap();
        let x = StackedVector::consensus(n, &[1.5, -2.0]);
        prop_assert!(apply_gossip(&w, &x).unwrap().matrix().amax() <= 1e-12);
    }
}

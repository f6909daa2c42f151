use proptest::prelude::*;
use tvfb::harness::{execute, ExperimentConfig};
use tvfb::solver::{run, RunOptions};
use tvfb::{
    ConsensusProjection, GossipOperator, OperatorOracle, ProblemInstance, ProblemKind, Schedule,
    TimeVaryingGraph,
};

fn close(a: f64, b: f64) {
    assert!((a - b).abs() <= 1e-14, "{a} vs {b}");
}

fn two_center() -> ProblemInstance<f64> {
    ProblemInstance::l1_convex(vec![vec![2.0], vec![-1.0]], 1.0).unwrap()
}

// Hand evaluation with r = 1, n = 2 (complete graph, W = P, χ = 1):
// r_x = 2/3, r_yz = 3, τ_x = 1/3, η_y = 1/12, η_z = 1/30.
// Round 0: α = 1, γ = 2/3, η_x = 3, σ = 1/4. All y/z quantities stay 0.
// Node 1: g = sign(0 − 2) = −1, x' = (0 + 3)/(1 + 3·(2/3 + 1/3)) = 3/4;
// node 2 mirrors it. x̃ = x = x̄ = ±3/4.
#[test]
fn golden_single_step_transcript() {
    let pb = two_center();
    let oracle = OperatorOracle::deterministic(&pb);
    let g = GossipOperator::<f64>::new(TimeVaryingGraph::complete(2).unwrap(), 1, 1).unwrap();
    let sched = Schedule::build(1, 1, 1.0, g.chi()).unwrap();
    let res = run(&sched, &g, &oracle, None, &RunOptions::default()).unwrap();
    let s = &res.state;
    for (i, sign) in [(0, 1.0), (1, -1.0)] {
        close(s.x.block(i)[0], sign * 0.75);
        close(s.x_tilde.block(i)[0], sign * 0.75);
        close(s.x_bar.block(i)[0], sign * 0.75);
        close(s.x_prev.block(i)[0], 0.0);
        close(s.x_hat.block(i)[0], 0.0);
    }
    for f in [&s.y, &s.y_bar, &s.y_under, &s.z, &s.z_bar, &s.z_under, &s.m] {
        assert!(f.matrix().iter().all(|&v| v == 0.0));
    }
    close(res.x_a.block(0)[0], 0.75);
    close(res.x_o[0], 0.0);
}

// Round 1 of a K = 2 run: α = γ = 3/4, τ_x = 4/9, η_y = 1/9, η_x = 9/4,
// σ = 2/7. x̂ = 3/4 + (3/4)(3/4) = 21/16, y = −(1/9)(21/16) = −7/48,
// ȳ = (3/4)y = −7/64. Inner step: g = −1, denominator 1 + (9/4)(2/3 + 4/9)
// = 7/2, x' = (3/4 + (9/4)(1 − 7/48 + 1/3)) / (7/2) = 219/224.
// x̄ = (3/4)(219/224) + (1/4)(3/4) = 825/896. With λ_1 = 5/9 and
// λ_2 = 16/9: x_a = 345/392, y_a = −1/12 on node 1.
#[test]
fn golden_second_round() {
    let pb = two_center();
    let oracle = OperatorOracle::deterministic(&pb);
    let g = GossipOperator::<f64>::new(TimeVaryingGraph::complete(2).unwrap(), 2, 1).unwrap();
    let sched = Schedule::build(2, 1, 1.0, g.chi()).unwrap();
    let res = run(&sched, &g, &oracle, None, &RunOptions::default()).unwrap();
    let s = &res.state;
    for (i, sign) in [(0, 1.0), (1, -1.0)] {
        close(s.x_hat.block(i)[0], sign * 21.0 / 16.0);
        close(s.y.block(i)[0], -sign * 7.0 / 48.0);
        close(s.y_bar.block(i)[0], -sign * 7.0 / 64.0);
        close(s.x.block(i)[0], sign * 219.0 / 224.0);
        close(s.x_tilde.block(i)[0], sign * 219.0 / 224.0);
        close(s.x_prev.block(i)[0], sign * 0.75);
        close(s.x_bar.block(i)[0], sign * 825.0 / 896.0);
        close(res.x_a.block(i)[0], sign * 345.0 / 392.0);
    }
    let [_, ya, _] = s.weighted_average().unwrap();
    close(ya.block(0)[0], -1.0 / 12.0);
    assert!(s.z.matrix().iter().all(|&v| v == 0.0));
}

#[test]
fn gossip_on_complete_graph_matches_projection() {
    let pb =
        ProblemInstance::<f64>::random_l1(ProblemKind::SaddlePoint, 6, 2, 2, 0.5, 1.0, 3).unwrap();
    let oracle = OperatorOracle::new(&pb, 0.3, 9).unwrap();
    let g = GossipOperator::<f64>::new(TimeVaryingGraph::complete(6).unwrap(), 1, 4).unwrap();
    let sched = Schedule::build(25, 4, 0.5, 1.0).unwrap();
    let a = run(&sched, &g, &oracle, None, &RunOptions::default()).unwrap();
    let b = run(
        &sched,
        &ConsensusProjection { n_nodes: 6 },
        &oracle,
        None,
        &RunOptions::default(),
    )
    .unwrap();
    for (u, v) in [
        (&a.state.x, &b.state.x),
        (&a.state.y, &b.state.y),
        (&a.state.z, &b.state.z),
    ] {
        assert!(u.max_abs_diff(v) <= 1e-9);
    }
    assert!(a.x_a.max_abs_diff(&b.x_a) <= 1e-9);
}

#[test]
fn zero_sum_blocks_preserved_on_churn() {
    let mut cfg = ExperimentConfig::default();
    cfg.graph.schedule = tvfb::harness::GraphSchedule::Churn;
    let out = execute(&cfg).unwrap();
    assert!(out.diagnostics.max_zero_sum_drift <= 1e-8);
    assert!(out.diagnostics.max_implicit_residual <= 1e-10);
}

#[test]
fn gap_decreases_in_k() {
    let mut cfg = ExperimentConfig::small_fixture();
    cfg.algorithm.k = 160;
    let rows = execute(&cfg).unwrap().rows;
    assert!(rows[159].gap <= 0.5 * rows[39].gap);
}

#[test]
fn single_precision_run() {
    let pb =
        ProblemInstance::<f32>::random_l1(ProblemKind::SaddlePoint, 4, 1, 1, 1.0, 1.0, 2).unwrap();
    let oracle = OperatorOracle::deterministic(&pb);
    let g = GossipOperator::<f32>::new(TimeVaryingGraph::complete(4).unwrap(), 1, 2).unwrap();
    let sched = Schedule::build(30, 10, 1.0f32, 1.0).unwrap();
    let res = run(&sched, &g, &oracle, None, &RunOptions::default()).unwrap();
    assert!(res.x_o.iter().all(|v| v.is_finite()));
}

proptest! {
    #[test]
    fn schedule_is_positive_and_finite(
        k in 1usize..300,
        t in 1usize..100,
        log_r in -6.0f64..2.0,
        chi in 1.0f64..1e3,
        literal in any::<bool>(),
    ) {
        let variant = if literal { tvfb::EtaXVariant::FinalRound } else { tvfb::EtaXVariant::PerRound };
        let s = Schedule::build_with_variant(k, t, 10f64.powf(log_r), chi, variant).unwrap();
        for v in s.all_parameters() {
            prop_assert!(v > 0.0 && v.is_finite());
        }
    }
}

use proptest::prelude::*;
use rand::Rng;
use tvfb::problems::{regularization_for_accuracy, ProblemFixture};
use tvfb::rng::stream;
use tvfb::verify::solve_l1_instance;
use tvfb::{AsymmetricRegularization, OperatorOracle, ProblemInstance, ProblemKind};

fn random_point(dim: usize, seed: u64, scale: f64) -> Vec<f64> {
    let mut rng = stream(&[seed, 1]);
    (0..dim).map(|_| rng.random_range(-scale..scale)).collect()
}

fn instance(kind: ProblemKind, seed: u64) -> ProblemInstance<f64> {
    let mut rng = stream(&[seed, 2]);
    let n = rng.random_range(1..=5);
    let dx = rng.random_range(1..=3);
    let dz = rng.random_range(1..=3);
    let r = [1e-3, 0.1, 1.0][rng.random_range(0..3)];
    ProblemInstance::random_l1(kind, n, dx, dz, r, 1.0, seed).unwrap()
}

#[test]
fn objective_examples() {
    let pb = ProblemInstance::l1_saddle(vec![vec![0.0]], vec![vec![0.7]], 0.0).unwrap();
    assert_eq!(pb.evaluate_p_saddle(&[0.0], &[0.7]).unwrap(), 0.0);
    let pb = ProblemInstance::l1_convex(vec![vec![2.0]], 1.0).unwrap();
    assert_eq!(pb.evaluate_p(&[1.0]).unwrap(), 1.5);
    assert_eq!(pb.gap_cvx(&[0.0], &[1.0]).unwrap(), 0.5);
    let pb = ProblemInstance::l1_convex(vec![vec![1.0], vec![-1.0]], 1.0).unwrap();
    assert_eq!(pb.evaluate_p(&[0.0]).unwrap(), 1.0);
}

#[test]
fn saddle_gap_example() {
    // p(0, 1) = 2 − 1 + 0 − 0.5 = 0.5 and p(1, 0) = 1 − 2 + 0.5 − 0 = −0.5
    let pb = ProblemInstance::l1_saddle(vec![vec![2.0]], vec![vec![2.0]], 1.0).unwrap();
    let xs = solve_l1_instance(&pb).unwrap();
    assert_eq!(xs, vec![1.0, 1.0]);
    assert_eq!(pb.gap_spp(&[0.0, 0.0], &xs).unwrap(), 1.0);
    assert_eq!(pb.gap_spp(&xs, &xs).unwrap(), 0.0);
}

#[test]
fn saddle_subgradient_signs() {
    let pb = ProblemInstance::l1_saddle(vec![vec![0.5]], vec![vec![-0.25]], 1.0).unwrap();
    assert_eq!(
        pb.query_deterministic(0, &[1.5, -1.25]).unwrap(),
        vec![1.0, -1.0]
    );
    assert_eq!(
        pb.query_deterministic(0, &[0.5, -0.25]).unwrap(),
        vec![0.0, 0.0]
    );
}

#[test]
fn noise_is_unbiased_with_exact_second_moment() {
    let pb = instance(ProblemKind::SaddlePoint, 3);
    let sigma = 0.7;
    let oracle = OperatorOracle::new(&pb, sigma, 11).unwrap();
    let x = random_point(pb.dim(), 5, 1.0);
    let det = pb.query_deterministic(0, &x).unwrap();
    let draws = 100_000;
    let mut mean = vec![0.0; pb.dim()];
    let mut sq = 0.0;
    for t in 0..draws {
        let g = oracle.query_stochastic(0, &x, 0, t).unwrap();
        let mut norm = 0.0;
        for j in 0..pb.dim() {
            let w = g[j] - det[j];
            mean[j] += w / draws as f64;
            norm += w * w;
        }
        sq += norm / draws as f64;
    }
    let bias = mean.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(bias <= 5.0 * sigma / (draws as f64).sqrt(), "bias {bias}");
    assert!(
        (sq / (sigma * sigma) - 1.0).abs() <= 0.03,
        "second moment {sq}"
    );
    assert_eq!(
        OperatorOracle::new(&pb, 0.0, 11)
            .unwrap()
            .query_stochastic(0, &x, 3, 4)
            .unwrap(),
        det
    );
}

#[test]
fn regularization_examples() {
    assert!((regularization_for_accuracy(0.1, 1.0).unwrap() - 0.1f64).abs() < 1e-15);
    assert!((regularization_for_accuracy(0.05, 10.0).unwrap() - 5e-4f64).abs() < 1e-18);
}

#[test]
fn unit_rescaling_is_identity_with_sqrt_two_bound() {
    let pb = instance(ProblemKind::SaddlePoint, 8)
        .with_regularization(1.0, 1.0)
        .unwrap();
    let (sc, map) = pb
        .rescale_asymmetric(AsymmetricRegularization::new(1.0, 1.0).unwrap())
        .unwrap();
    assert_eq!(sc.centers_xi(), pb.centers_xi());
    assert!((sc.m_bound() - pb.m_bound() * 2f64.sqrt()).abs() <= 1e-15);
    let x = random_point(pb.dim(), 9, 2.0);
    assert_eq!(map.forward(&x), x);
}

#[test]
fn rescaled_centers_and_bound() {
    let pb = ProblemInstance::l1_saddle(vec![vec![0.5]], vec![vec![0.25]], 1.0)
        .unwrap()
        .with_regularization(4.0, 1.0)
        .unwrap();
    let (sc, _) = pb
        .rescale_asymmetric(AsymmetricRegularization::new(4.0, 1.0).unwrap())
        .unwrap();
    assert_eq!(sc.centers_xi()[0][0], 1.0);
    assert_eq!(sc.centers_zeta()[0][0], 0.25);
    assert!((sc.m_bound() - pb.m_bound() * 1.25f64.sqrt()).abs() <= 1e-15);
}

#[test]
fn fixture_round_trip_through_toml() {
    let pb = instance(ProblemKind::SaddlePoint, 21);
    let text = toml::to_string(&pb.to_fixture()).unwrap();
    let back: ProblemFixture = toml::from_str(&text).unwrap();
    assert_eq!(ProblemInstance::<f64>::from_fixture(&back).unwrap(), pb);
}

proptest! {
    #[test]
    fn selections_bounded_by_m(seed in any::<u64>(), px in any::<u64>(), saddle in any::<bool>()) {
        let kind = if saddle { ProblemKind::SaddlePoint } else { ProblemKind::ConvexMin };
        let pb = instance(kind, seed);
        let x = random_point(pb.dim(), px, 3.0);
        for i in 0..pb.n_nodes() {
            let g = pb.query_deterministic(i, &x).unwrap();
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!(norm <= pb.m_bound() + 1e-12);
        }
    }

    #[test]
    fn stacked_operator_is_monotone(seed in any::<u64>(), a in any::<u64>(), b in any::<u64>()) {
        let pb = instance(ProblemKind::SaddlePoint, seed);
        let x = random_point(pb.dim(), a, 2.0);
        let y = random_point(pb.dim(), b, 2.0);
        for i in 0..pb.n_nodes() {
            let gx = pb.query_deterministic(i, &x).unwrap();
            let gy = pb.query_deterministic(i, &y).unwrap();
            let ip: f64 = (0..pb.dim()).map(|j| (gx[j] - gy[j]) * (x[j] - y[j])).sum();
            prop_assert!(ip >= -1e-12);
        }
    }

    #[test]
    fn gaps_nonnegative_at_exact_solutions(seed in any::<u64>(), px in any::<u64>(), saddle in any::<bool>()) {
        let kind = if saddle { ProblemKind::SaddlePoint } else { ProblemKind::ConvexMin };
        let pb = instance(kind, seed);
        let xs = solve_l1_instance(&pb).unwrap();
        let x = random_point(pb.dim(), px, 2.0);
        prop_assert!(pb.gap(&x, &xs).unwrap() >= -1e-10);
    }

    #[test]
    fn rescaled_selections_respect_new_bound(
        seed in any::<u64>(),
        px in any::<u64>(),
        rx in 1e-3f64..10.0,
        rz in 1e-3f64..10.0,
    ) {
        let pb = instance(ProblemKind::SaddlePoint, seed).with_regularization(rx, rz).unwrap();
        let (sc, map) = pb.rescale_asymmetric(AsymmetricRegularization::new(rx, rz).unwrap()).unwrap();
        let bound = pb.m_bound() * (1.0 / rx + 1.0 / rz).sqrt();
        prop_assert!((sc.m_bound() - bound).abs() <= 1e-12 * bound);
        let x = random_point(pb.dim(), px, 3.0);
        for i in 0..sc.n_nodes() {
            let g = sc.query_deterministic(i, &x).unwrap();
            prop_assert!(g.iter().map(|v| v * v).sum::<f64>().sqrt() <= bound + 1e-12);
        }
        let back = map.back(&map.forward(&x));
        for (u, v) in x.iter().zip(&back) {
            prop_assert!((u - v).abs() <= 1e-14 * (1.0 + u.abs()));
        }
    }
}

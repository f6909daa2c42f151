use std::time::Instant;

use crate::gossip::GossipOperator;
use crate::netgraph::{generate_erdos_renyi, TimeVaryingGraph};
use crate::problems::{AsymmetricRegularization, CoordinateMap, OperatorOracle, ProblemInstance};
use crate::solver::{run, Diagnostics, MetricRow, Reference, RunOptions, Schedule};
use crate::verify::solve_l1_instance;

use super::config::{ExperimentConfig, GraphSchedule, MetricMode, Topology};
use super::output::{metadata_csv, metrics_csv, write_atomic};
use super::HarnessError;

pub fn build_graph(cfg: &ExperimentConfig) -> Result<TimeVaryingGraph, HarnessError> {
    let g = &cfg.graph;
    let base = match g.topology {
        Topology::ErdosRenyi => generate_erdos_renyi(g.n, g.p, g.seed)?,
        Topology::Complete => TimeVaryingGraph::complete(g.n)?,
    };
    Ok(match g.schedule {
        GraphSchedule::Static => base,
        GraphSchedule::Churn => base.with_churn(g.churn_rate, g.churn_seed)?,
    })
}

/// Everything a run needs, built from a config.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub gossip: GossipOperator<f64>,
    /// Problem the metrics are measured on.
    pub original: ProblemInstance<f64>,
    /// Exact solution of `original` (lower median when `r = 0`).
    pub x_star: Vec<f64>,
    /// Problem the solver iterates on: `original` itself, its `ε/R²`
    /// regularization, or its rescaling to `r = 1`.
    pub solved: ProblemInstance<f64>,
    pub map: Option<CoordinateMap<f64>>,
    /// Symmetric `r` of `solved`, fed to the schedule.
    pub r_solver: f64,
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared, HarnessError> {
    cfg.validate()?;
    let p = &cfg.problem;
    let graph = build_graph(cfg)?;
    let original = ProblemInstance::random_l1(
        p.family.kind(),
        cfg.graph.n,
        p.d_xi,
        p.d_zeta,
        p.r,
        p.half_width,
        p.center_seed,
    )?;
    let (original, solved, map) = match (p.r_xi, p.r_zeta, p.epsilon) {
        (Some(rx), Some(rz), _) => {
            let asym = original.with_regularization(rx, rz)?;
            let (scaled, map) = asym.rescale_asymmetric(AsymmetricRegularization::new(rx, rz)?)?;
            (asym, scaled, Some(map))
        }
        (_, _, Some(eps)) => {
            let reg = original.regularize_monotone(eps)?;
            (original, reg, None)
        }
        _ => (original.clone(), original, None),
    };
    let r_solver = solved
        .symmetric_r()
        .ok_or_else(|| HarnessError::Config("solver problem lacks a symmetric r".into()))?;
    let x_star = solve_l1_instance(&original)?;
    let gossip = GossipOperator::new(graph, cfg.algorithm.k, solved.dim())?;
    Ok(Prepared {
        gossip,
        original,
        x_star,
        solved,
        map,
        r_solver,
    })
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: ExperimentConfig,
    pub rows: Vec<MetricRow<f64>>,
    pub chi: f64,
    pub r_solver: f64,
    /// Output of the full `K`-round run, in original coordinates.
    pub x_o: Vec<f64>,
    pub x_star: Vec<f64>,
    pub diagnostics: Diagnostics,
}

impl RunOutput {
    pub fn final_row(&self) -> &MetricRow<f64> {
        self.rows.last().expect("K >= 1 gives at least one row")
    }
}

/// Runs the configured experiment without touching the filesystem.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    execute_with(cfg, true)
}

pub(crate) fn execute_with(
    cfg: &ExperimentConfig,
    all_rows: bool,
) -> Result<RunOutput, HarnessError> {
    let prep = prepare(cfg)?;
    let a = &cfg.algorithm;
    let chi = prep.gossip.chi();
    let oracle = OperatorOracle::new(&prep.solved, a.sigma, a.oracle_seed)?;
    let reference = Reference {
        problem: &prep.original,
        x_star: &prep.x_star,
        map: prep.map.as_ref(),
    };
    let schedule =
        |k: usize| Schedule::build_with_variant(k, a.t, prep.r_solver, chi, a.eta_x.into());

    let anytime = all_rows && a.metric_mode == MetricMode::Anytime;
    let opts = RunOptions {
        record_timing: a.record_timing,
        check_implicit_residual: true,
        anytime_rows: anytime,
    };
    let full = run(
        &schedule(a.k)?,
        &prep.gossip,
        &oracle,
        Some(&reference),
        &opts,
    )?;
    let mut diagnostics = full.diagnostics;

    let rows = if all_rows && a.metric_mode == MetricMode::Final {
        let mut rows = Vec::with_capacity(a.k);
        let single = RunOptions {
            anytime_rows: false,
            ..opts
        };
        for k in 1..a.k {
            let start = Instant::now();
            let res = run(
                &schedule(k)?,
                &prep.gossip,
                &oracle,
                Some(&reference),
                &single,
            )?;
            let mut row = *res.rows.last().expect("one row per run");
            row.wall_ns = if a.record_timing {
                start.elapsed().as_nanos()
            } else {
                0
            };
            merge(&mut diagnostics, &res.diagnostics);
            rows.push(row);
        }
        rows.extend(full.rows.last().copied());
        rows
    } else {
        full.rows
    };

    let x_o = match prep.map {
        Some(m) => m.back(&full.x_o),
        None => full.x_o,
    };
    Ok(RunOutput {
        config: cfg.clone(),
        rows,
        chi,
        r_solver: prep.r_solver,
        x_o,
        x_star: prep.x_star,
        diagnostics,
    })
}

fn merge(into: &mut Diagnostics, other: &Diagnostics) {
    into.max_implicit_residual = into.max_implicit_residual.max(other.max_implicit_residual);
    into.max_zero_sum_drift = into.max_zero_sum_drift.max(other.max_zero_sum_drift);
    into.reprojections += other.reprojections;
    into.inner_steps += other.inner_steps;
}

/// `run` subcommand: executes and writes the metrics and metadata CSVs.
/// Nothing is written unless the run succeeds.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    let out = execute(cfg)?;
    write_atomic(&cfg.output.metrics, &metrics_csv(&out.rows))?;
    write_atomic(&cfg.output.metadata, &metadata_csv(&out))?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        let mut c = ExperimentConfig::small_fixture();
        c.algorithm.k = 6;
        c.algorithm.t = 5;
        c
    }

    #[test]
    fn anytime_and_final_agree_for_per_round_steps() {
        let a = execute(&tiny()).unwrap();
        let mut c = tiny();
        c.algorithm.metric_mode = MetricMode::Final;
        let f = execute(&c).unwrap();
        assert_eq!(a.rows.len(), 6);
        assert_eq!(f.rows.len(), 6);
        for (x, y) in a.rows.iter().zip(&f.rows) {
            assert!((x.dist_to_opt - y.dist_to_opt).abs() <= 1e-12 * (1.0 + x.dist_to_opt));
            assert!((x.gap - y.gap).abs() <= 1e-12 * (1.0 + x.gap.abs()));
        }
    }

    #[test]
    fn regularized_and_rescaled_configs_run() {
        let mut c = tiny();
        c.problem.r = 0.0;
        c.problem.epsilon = Some(0.1);
        let out = execute(&c).unwrap();
        assert!(out.final_row().gap.is_finite());

        let mut c = tiny();
        c.problem.r_xi = Some(0.5);
        c.problem.r_zeta = Some(2.0);
        let out = execute(&c).unwrap();
        assert_eq!(out.r_solver, 1.0);
        assert!(out.final_row().dist_to_opt.is_finite());
    }

    #[test]
    fn disconnected_graph_is_a_graph_error() {
        let mut c = tiny();
        c.graph.p = 0.01;
        let err = execute(&c).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }
}

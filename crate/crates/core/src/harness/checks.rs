use crate::rng::derive_seed;
use crate::verify::{
    build_certificate, certificate_norm_bounds, contraction_probe, grid_search_1d,
    inclusion_residual, objective_1d, perturbation_improvement, solve_1d_exact, solve_l1_instance,
};

use super::config::ExperimentConfig;
use super::output::{to_csv, write_atomic};
use super::pipeline::prepare;
use super::HarnessError;

pub const VERIFY_HEADER: [&str; 4] = ["check", "value", "threshold", "pass"];

const PROBE_TRIALS: usize = 200;
const GRID_POINTS: usize = 100_001;
const PERTURBATIONS: usize = 1000;

/// One line of the verification table. `pass` means `value <= threshold`,
/// except for `chi`, which must be at least its threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckRow {
    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            pass: value <= threshold,
        }
    }
}

/// Runs every check against the problem the solver would iterate on.
pub fn run_checks(cfg: &ExperimentConfig) -> Result<Vec<CheckRow>, HarnessError> {
    let prep = prepare(cfg)?;
    let pb = &prep.solved;
    let mut rows = Vec::new();

    let chi = prep.gossip.chi();
    rows.push(CheckRow {
        name: "chi".into(),
        value: chi,
        threshold: 1.0,
        pass: chi >= 1.0,
    });
    let mut worst = 0.0f64;
    for k in 0..prep.gossip.rounds() {
        let seed = derive_seed(&[cfg.graph.seed, k as u64]);
        worst = worst.max(contraction_probe(
            prep.gossip.matrix_at(k),
            PROBE_TRIALS,
            seed,
        ));
    }
    rows.push(CheckRow::at_most(
        "contraction",
        worst,
        1.0 - 1.0 / chi + 1e-12,
    ));

    let x_star = solve_l1_instance(pb)?;
    let cert = build_certificate(pb, &x_star)?;
    rows.push(CheckRow::at_most(
        "certificate_stationarity",
        cert.residual,
        1e-9,
    ));
    let inc = inclusion_residual(&cert, pb, cert.r_x, cert.r_yz)?;
    rows.push(CheckRow::at_most("inclusion_residual", inc, 1e-8));
    for (name, (v, b)) in ["norm_w", "norm_y", "norm_z"]
        .iter()
        .zip(certificate_norm_bounds(&cert, pb))
    {
        rows.push(CheckRow::at_most(name, v, b));
    }

    // each coordinate against a brute-force grid: the exact value must not
    // be beaten and the two minimizers must sit within one grid step unless
    // the objective is flat between them
    let mut excess = 0.0f64;
    let mut coords: Vec<(Vec<f64>, f64)> = Vec::new();
    for j in 0..pb.d_xi() {
        coords.push((
            pb.centers_xi().iter().map(|c| c[j]).collect(),
            pb.reg_xi() / pb.scale_xi(),
        ));
    }
    for j in 0..pb.d_zeta() {
        coords.push((
            pb.centers_zeta().iter().map(|c| c[j]).collect(),
            pb.reg_zeta() / pb.scale_zeta(),
        ));
    }
    for (c, r) in &coords {
        let u = solve_1d_exact(c, *r)?;
        let (g, step) = grid_search_1d(c, *r, GRID_POINTS);
        let fu = objective_1d(c, *r, u);
        let fg = objective_1d(c, *r, g);
        let flat = (fu - fg).abs() <= 1e-14 * (1.0 + fu.abs());
        let dist = if flat {
            0.0
        } else {
            ((u - g).abs() - step).max(0.0)
        };
        excess = excess.max((fu - fg).max(0.0)).max(dist);
    }
    rows.push(CheckRow::at_most("oracle_grid", excess, 1e-12));

    let gain = perturbation_improvement(pb, &x_star, PERTURBATIONS, 0.5, cfg.problem.center_seed)?;
    rows.push(CheckRow::at_most(
        "oracle_perturbation",
        gain.max(0.0),
        1e-10,
    ));
    Ok(rows)
}

pub fn verify_csv(rows: &[CheckRow]) -> String {
    to_csv(
        &VERIFY_HEADER,
        rows.iter().map(|r| {
            [
                r.name.clone(),
                r.value.to_string(),
                r.threshold.to_string(),
                r.pass.to_string(),
            ]
        }),
    )
}

/// `verify` subcommand: writes the table and returns it. Use
/// [`require_pass`] to turn failed rows into an error.
pub fn cmd_verify(cfg: &ExperimentConfig) -> Result<Vec<CheckRow>, HarnessError> {
    let rows = run_checks(cfg)?;
    write_atomic(&cfg.output.verify, &verify_csv(&rows))?;
    Ok(rows)
}

pub fn require_pass(rows: &[CheckRow]) -> Result<(), HarnessError> {
    let failed: Vec<&str> = rows
        .iter()
        .filter(|r| !r.pass)
        .map(|r| r.name.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(HarnessError::Verification(format!(
            "failed checks: {}",
            failed.join(", ")
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_fixture_passes_every_check() {
        let rows = run_checks(&ExperimentConfig::small_fixture()).unwrap();
        assert_eq!(rows.len(), 9);
        for r in &rows {
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn complete_graph_reports_unit_chi() {
        let cfg = ExperimentConfig::small_fixture()
            .with_overrides(&["graph.topology=complete"])
            .unwrap();
        let rows = run_checks(&cfg).unwrap();
        assert!((rows[0].value - 1.0).abs() <= 1e-9);
        assert!(rows[1].value <= 1e-12);
    }
}

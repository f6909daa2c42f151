use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::rng::derive_seed;

use super::config::{ExperimentConfig, GraphSchedule};
use super::output::{to_csv, write_atomic};
use super::pipeline::execute_with;
use super::HarnessError;

pub const SWEEP_SUMMARY_HEADER: [&str; 11] = [
    "axis",
    "value",
    "repeats",
    "failed",
    "dist_mean",
    "dist_stderr",
    "gap_mean",
    "gap_stderr",
    "consensus_mean",
    "consensus_stderr",
    "errors",
];

pub const SWEEP_CELLS_HEADER: [&str; 8] = [
    "axis",
    "value",
    "repeat",
    "oracle_seed",
    "dist_to_opt",
    "gap",
    "consensus_err",
    "error",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    K,
    T,
    Sigma,
    ChurnRate,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::K => "K",
            Axis::T => "T",
            Axis::Sigma => "sigma",
            Axis::ChurnRate => "churn_rate",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Axis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "K" | "k" => Ok(Axis::K),
            "T" | "t" => Ok(Axis::T),
            "sigma" => Ok(Axis::Sigma),
            "churn_rate" | "churn" => Ok(Axis::ChurnRate),
            _ => Err(format!(
                "unknown sweep axis `{s}` (expected K, T, sigma or churn_rate)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: Axis,
    pub values: Vec<f64>,
    pub repeats: usize,
}

/// Final metrics of one `(value, repeat)` cell, or why it failed.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub value: f64,
    pub repeat: usize,
    pub oracle_seed: u64,
    pub outcome: Result<[f64; 3], String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub value: f64,
    pub repeats: usize,
    pub failed: usize,
    /// `(mean, standard error)` of distance, gap and consensus error over
    /// the successful repeats.
    pub dist: (f64, f64),
    pub gap: (f64, f64),
    pub consensus: (f64, f64),
    pub errors: Vec<String>,
}

fn integer_value(axis: Axis, v: f64) -> Result<usize, HarnessError> {
    if v.fract() != 0.0 || !(0.0..=1e9).contains(&v) {
        return Err(HarnessError::Config(format!(
            "{axis} values must be non-negative integers (got {v})"
        )));
    }
    Ok(v as usize)
}

/// Config of one cell. Noise and churn seeds are derived from the base
/// seeds, the axis value and the repeat index, so every cell is
/// independent of the others and of execution order.
pub fn cell_config(
    base: &ExperimentConfig,
    axis: Axis,
    value: f64,
    repeat: usize,
) -> Result<ExperimentConfig, HarnessError> {
    let mut c = base.clone();
    match axis {
        Axis::K => c.algorithm.k = integer_value(axis, value)?,
        Axis::T => c.algorithm.t = integer_value(axis, value)?,
        Axis::Sigma => c.algorithm.sigma = value,
        Axis::ChurnRate => {
            c.graph.schedule = GraphSchedule::Churn;
            c.graph.churn_rate = value;
        }
    }
    let key = |s: u64| derive_seed(&[s, value.to_bits(), repeat as u64]);
    c.algorithm.oracle_seed = key(base.algorithm.oracle_seed);
    c.graph.churn_seed = key(base.graph.churn_seed);
    c.validate()?;
    Ok(c)
}

pub fn run_sweep(
    base: &ExperimentConfig,
    spec: &SweepSpec,
) -> Result<Vec<CellResult>, HarnessError> {
    if spec.values.is_empty() {
        return Err(HarnessError::Config(
            "sweep needs at least one value".into(),
        ));
    }
    if spec.repeats == 0 {
        return Err(HarnessError::Config("sweep needs repeats >= 1".into()));
    }
    let mut sorted = spec.values.clone();
    sorted.sort_by(f64::total_cmp);
    if sorted
        .windows(2)
        .any(|w| w[0].total_cmp(&w[1]) == Ordering::Equal)
    {
        return Err(HarnessError::Config("sweep values must be distinct".into()));
    }
    base.validate()?;
    let cells: Vec<(f64, usize, ExperimentConfig)> = sorted
        .iter()
        .flat_map(|&v| (0..spec.repeats).map(move |r| (v, r)))
        .map(|(v, r)| cell_config(base, spec.axis, v, r).map(|c| (v, r, c)))
        .collect::<Result<_, _>>()?;

    // rayon's indexed collect keeps input order, which is already the
    // sorted cell key
    Ok(cells
        .par_iter()
        .map(|(value, repeat, cfg)| {
            let outcome = execute_with(cfg, false)
                .map(|out| {
                    let r = out.final_row();
                    [r.dist_to_opt, r.gap, r.consensus_err]
                })
                .map_err(|e| e.to_string());
            CellResult {
                value: *value,
                repeat: *repeat,
                oracle_seed: cfg.algorithm.oracle_seed,
                outcome,
            }
        })
        .collect())
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Groups cells by value (cells must be sorted by value).
pub fn summarize(cells: &[CellResult]) -> Vec<SummaryRow> {
    cells
        .chunk_by(|a, b| a.value.total_cmp(&b.value) == Ordering::Equal)
        .map(|group| {
            let ok: Vec<[f64; 3]> = group
                .iter()
                .filter_map(|c| c.outcome.clone().ok())
                .collect();
            let col = |i: usize| mean_stderr(&ok.iter().map(|m| m[i]).collect::<Vec<_>>());
            SummaryRow {
                value: group[0].value,
                repeats: group.len(),
                failed: group.len() - ok.len(),
                dist: col(0),
                gap: col(1),
                consensus: col(2),
                errors: group
                    .iter()
                    .filter_map(|c| {
                        c.outcome
                            .as_ref()
                            .err()
                            .map(|e| format!("repeat {}: {e}", c.repeat))
                    })
                    .collect(),
            }
        })
        .collect()
}

pub fn summary_csv(axis: Axis, rows: &[SummaryRow]) -> String {
    to_csv(
        &SWEEP_SUMMARY_HEADER,
        rows.iter().map(|r| {
            [
                axis.to_string(),
                r.value.to_string(),
                r.repeats.to_string(),
                r.failed.to_string(),
                r.dist.0.to_string(),
                r.dist.1.to_string(),
                r.gap.0.to_string(),
                r.gap.1.to_string(),
                r.consensus.0.to_string(),
                r.consensus.1.to_string(),
                r.errors.join("; "),
            ]
        }),
    )
}

pub fn cells_csv(axis: Axis, cells: &[CellResult]) -> String {
    to_csv(
        &SWEEP_CELLS_HEADER,
        cells.iter().map(|c| {
            let (m, err) = match &c.outcome {
                Ok(m) => (m.map(|v| v.to_string()), String::new()),
                Err(e) => ([String::new(), String::new(), String::new()], e.clone()),
            };
            let [d, g, ce] = m;
            [
                axis.to_string(),
                c.value.to_string(),
                c.repeat.to_string(),
                c.oracle_seed.to_string(),
                d,
                g,
                ce,
                err,
            ]
        }),
    )
}

/// `sweep` subcommand: writes the summary to `output.sweep` and, when
/// given, the per-cell table to `cells_path`.
pub fn cmd_sweep(
    base: &ExperimentConfig,
    spec: &SweepSpec,
    cells_path: Option<&str>,
) -> Result<Vec<SummaryRow>, HarnessError> {
    let cells = run_sweep(base, spec)?;
    let summary = summarize(&cells);
    write_atomic(&base.output.sweep, &summary_csv(spec.axis, &summary))?;
    if let Some(p) = cells_path {
        write_atomic(p, &cells_csv(spec.axis, &cells))?;
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        let mut c = ExperimentConfig::small_fixture();
        c.algorithm.k = 4;
        c.algorithm.t = 3;
        c.algorithm.sigma = 0.2;
        c
    }

    #[test]
    fn single_repeat_has_zero_stderr() {
        let spec = SweepSpec {
            axis: Axis::T,
            values: vec![3.0, 1.0],
            repeats: 1,
        };
        let cells = run_sweep(&tiny(), &spec).unwrap();
        let rows = summarize(&cells);
        assert_eq!(
            rows.iter().map(|r| r.value).collect::<Vec<_>>(),
            vec![1.0, 3.0]
        );
        assert!(rows.iter().all(|r| r.gap.1 == 0.0 && r.dist.1 == 0.0));
    }

    #[test]
    fn cell_seeds_depend_on_value_and_repeat() {
        let a = cell_config(&tiny(), Axis::Sigma, 0.5, 0).unwrap();
        let b = cell_config(&tiny(), Axis::Sigma, 0.5, 1).unwrap();
        let c = cell_config(&tiny(), Axis::Sigma, 0.25, 0).unwrap();
        assert_ne!(a.algorithm.oracle_seed, b.algorithm.oracle_seed);
        assert_ne!(a.algorithm.oracle_seed, c.algorithm.oracle_seed);
        assert_eq!(a, cell_config(&tiny(), Axis::Sigma, 0.5, 0).unwrap());
    }

    #[test]
    fn failed_cells_are_recorded() {
        // a disconnected graph fails inside each cell, not at validation
        let mut base = tiny();
        base.graph.p = 0.01;
        let spec = SweepSpec {
            axis: Axis::Sigma,
            values: vec![0.0],
            repeats: 2,
        };
        let rows = summarize(&run_sweep(&base, &spec).unwrap());
        assert_eq!(rows[0].failed, 2);
        assert_eq!(rows[0].errors.len(), 2);
    }

    #[test]
    fn bad_specs_rejected() {
        let spec = SweepSpec {
            axis: Axis::K,
            values: vec![],
            repeats: 1,
        };
        assert!(run_sweep(&tiny(), &spec).is_err());
        let spec = SweepSpec {
            axis: Axis::K,
            values: vec![2.5],
            repeats: 1,
        };
        assert!(run_sweep(&tiny(), &spec).is_err());
        let spec = SweepSpec {
            axis: Axis::K,
            values: vec![2.0, 2.0],
            repeats: 1,
        };
        assert!(run_sweep(&tiny(), &spec).is_err());
        assert!("bogus".parse::<Axis>().is_err());
    }
}

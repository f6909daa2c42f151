use std::path::Path;

use crate::solver::{MetricRow, METRICS_HEADER};

use super::pipeline::RunOutput;
use super::HarnessError;

pub const METADATA_HEADER: [&str; 13] = [
    "K",
    "T",
    "r",
    "chi",
    "sigma",
    "seed",
    "schedule_variant",
    "metric_mode",
    "n",
    "graph_seed",
    "graph_schedule",
    "churn_rate",
    "center_seed",
];

/// Serializes rows with the given header. Floats use Rust's shortest
/// round-trip representation, so output is stable across runs.
pub(crate) fn to_csv<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

pub fn metrics_csv(rows: &[MetricRow<f64>]) -> String {
    to_csv(
        &METRICS_HEADER,
        rows.iter().map(|r| {
            [
                r.k.to_string(),
                r.t_total.to_string(),
                r.dist_to_opt.to_string(),
                r.gap.to_string(),
                r.consensus_err.to_string(),
                r.wall_ns.to_string(),
            ]
        }),
    )
}

pub fn metadata_csv(out: &RunOutput) -> String {
    let c = &out.config;
    let row = [
        c.algorithm.k.to_string(),
        c.algorithm.t.to_string(),
        out.r_solver.to_string(),
        out.chi.to_string(),
        c.algorithm.sigma.to_string(),
        c.algorithm.oracle_seed.to_string(),
        crate::solver::EtaXVariant::from(c.algorithm.eta_x)
            .as_str()
            .to_string(),
        c.algorithm.metric_mode.as_str().to_string(),
        c.graph.n.to_string(),
        c.graph.seed.to_string(),
        match c.graph.schedule {
            super::GraphSchedule::Static => "static".to_string(),
            super::GraphSchedule::Churn => "churn".to_string(),
        },
        c.graph.churn_rate.to_string(),
        c.problem.center_seed.to_string(),
    ];
    to_csv(&METADATA_HEADER, [row])
}

/// Writes through a temporary sibling so a failed command never leaves a
/// partial file behind.
pub fn write_atomic(path: &str, contents: &str) -> Result<(), HarnessError> {
    let io = |source| HarnessError::Io {
        path: path.to_string(),
        source,
    };
    let target = Path::new(path);
    if let Some(dir) = target.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let tmp = target.with_extension("tmp~");
    std::fs::write(&tmp, contents).map_err(io)?;
    std::fs::rename(&tmp, target).map_err(io)
}

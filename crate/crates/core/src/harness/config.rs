//! Experiment configuration: a TOML document plus dotted `key=value`
//! overrides.

use serde::{Deserialize, Serialize};

use crate::problems::ProblemKind;
use crate::solver::EtaXVariant;

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    L1Saddle,
    L1Convex,
}

impl Family {
    pub fn kind(self) -> ProblemKind {
        match self {
            Family::L1Saddle => ProblemKind::SaddlePoint,
            Family::L1Convex => ProblemKind::ConvexMin,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    ErdosRenyi,
    Complete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphSchedule {
    Static,
    Churn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricMode {
    /// Rows read off the running weighted average of one `K`-round run.
    Anytime,
    /// Row `k` comes from a separate run with `K = k`.
    Final,
}

impl MetricMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricMode::Anytime => "anytime",
            MetricMode::Final => "final",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaX {
    PerRound,
    FinalRound,
}

impl From<EtaX> for EtaXVariant {
    fn from(v: EtaX) -> Self {
        match v {
            EtaX::PerRound => EtaXVariant::PerRound,
            EtaX::FinalRound => EtaXVariant::FinalRound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub family: Family,
    pub d_xi: usize,
    /// Ignored by `l1_convex`.
    pub d_zeta: usize,
    /// Symmetric regularization. With `r = 0` the problem is regularized
    /// with `r = ε / R²` using `epsilon`.
    pub r: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_xi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_zeta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub center_seed: u64,
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub n: usize,
    pub topology: Topology,
    pub p: f64,
    pub seed: u64,
    pub schedule: GraphSchedule,
    pub churn_rate: f64,
    pub churn_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    /// Outer rounds `K`.
    pub k: usize,
    /// Inner steps `T`.
    pub t: usize,
    pub sigma: f64,
    pub oracle_seed: u64,
    pub eta_x: EtaX,
    pub metric_mode: MetricMode,
    pub record_timing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub metrics: String,
    pub metadata: String,
    pub verify: String,
    pub sweep: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub graph: GraphSpec,
    pub algorithm: AlgorithmSpec,
    pub output: OutputSpec,
}

impl Default for ExperimentConfig {
    /// The experiment of Figures 3–4: 15 nodes, ER(0.3), `r = 1e-3`,
    /// `T = 10`, `K = 30`.
    fn default() -> Self {
        Self {
            problem: ProblemSpec {
                family: Family::L1Saddle,
                d_xi: 4,
                d_zeta: 4,
                r: 1e-3,
                r_xi: None,
                r_zeta: None,
                epsilon: None,
                center_seed: 42,
                half_width: 1.0,
            },
            graph: GraphSpec {
                n: 15,
                topology: Topology::ErdosRenyi,
                p: 0.3,
                seed: 42,
                schedule: GraphSchedule::Static,
                churn_rate: 0.2,
                churn_seed: 42,
            },
            algorithm: AlgorithmSpec {
                k: 30,
                t: 10,
                sigma: 0.1,
                oracle_seed: 42,
                eta_x: EtaX::PerRound,
                metric_mode: MetricMode::Anytime,
                record_timing: false,
            },
            output: OutputSpec {
                metrics: "metrics.csv".into(),
                metadata: "metadata.csv".into(),
                verify: "verify.csv".into(),
                sweep: "sweep.csv".into(),
            },
        }
    }
}

impl ExperimentConfig {
    /// Small deterministic fixture used by the rate and convergence checks:
    /// 5 nodes, ER(0.5), `d = 2 + 2`, `r = 1`, `σ = 0`, `T = 50`.
    pub fn small_fixture() -> Self {
        let mut c = Self::default();
        c.problem.d_xi = 2;
        c.problem.d_zeta = 2;
        c.problem.r = 1.0;
        c.graph.n = 5;
        c.graph.p = 0.5;
        c.algorithm.t = 50;
        c.algorithm.sigma = 0.0;
        c
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Applies `section.key=value` overrides. Values are parsed as TOML
    /// literals; anything that does not parse is taken as a string.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self, HarnessError> {
        let mut table: toml::Table =
            toml::from_str(&self.to_toml()).map_err(|e| HarnessError::Config(e.to_string()))?;
        for item in overrides {
            let item = item.as_ref();
            let (path, raw) = item.split_once('=').ok_or_else(|| {
                HarnessError::Config(format!("override `{item}` is not key=value"))
            })?;
            let value = parse_value(raw.trim());
            set_path(&mut table, path.trim(), value)?;
        }
        let text = toml::to_string(&table).map_err(|e| HarnessError::Config(e.to_string()))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        let (p, g, a) = (&self.problem, &self.graph, &self.algorithm);
        if a.k == 0 || a.t == 0 {
            return bad(format!(
                "K and T must be at least 1 (got K={}, T={})",
                a.k, a.t
            ));
        }
        if g.n == 0 {
            return bad("graph needs at least one node".into());
        }
        if p.d_xi == 0 || (p.family == Family::L1Saddle && p.d_zeta == 0) {
            return bad("problem dimensions must be positive".into());
        }
        if !(a.sigma >= 0.0 && a.sigma.is_finite()) {
            return bad(format!("sigma must be finite and >= 0 (got {})", a.sigma));
        }
        if !(p.half_width > 0.0 && p.half_width.is_finite()) {
            return bad("half_width must be positive".into());
        }
        if !(p.r >= 0.0 && p.r.is_finite()) {
            return bad(format!("r must be finite and >= 0 (got {})", p.r));
        }
        match (p.r_xi, p.r_zeta) {
            (None, None) => {
                if p.r == 0.0 && p.epsilon.is_none() {
                    return bad("r = 0 needs problem.epsilon to choose a regularization".into());
                }
                if let Some(e) = p.epsilon {
                    if p.r != 0.0 {
                        return bad("problem.epsilon applies only when r = 0".into());
                    }
                    if !(e > 0.0 && e.is_finite()) {
                        return bad("epsilon must be positive".into());
                    }
                }
            }
            (Some(rx), Some(rz)) => {
                if p.family != Family::L1Saddle {
                    return bad("r_xi / r_zeta apply to saddle problems only".into());
                }
                if !(rx > 0.0 && rz > 0.0 && rx.is_finite() && rz.is_finite()) {
                    return bad("r_xi and r_zeta must be positive".into());
                }
                if p.epsilon.is_some() {
                    return bad("epsilon cannot be combined with r_xi / r_zeta".into());
                }
            }
            _ => return bad("set both r_xi and r_zeta or neither".into()),
        }
        if g.topology == Topology::ErdosRenyi && !(g.p > 0.0 && g.p <= 1.0) {
            return bad(format!("edge probability must lie in (0, 1] (got {})", g.p));
        }
        if g.schedule == GraphSchedule::Churn && !(g.churn_rate > 0.0 && g.churn_rate <= 1.0) {
            return bad(format!(
                "churn_rate must lie in (0, 1] (got {})",
                g.churn_rate
            ));
        }
        Ok(())
    }
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_path(table: &mut toml::Table, path: &str, value: toml::Value) -> Result<(), HarnessError> {
    let mut parts: Vec<&str> = path.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty());
    let Some(last) = last else {
        return Err(HarnessError::Config(format!("empty override key `{path}`")));
    };
    let mut cur = table;
    for part in parts {
        cur = match cur.get_mut(part) {
            Some(toml::Value::Table(t)) => t,
            _ => {
                return Err(HarnessError::Config(format!(
                    "unknown config section `{part}`"
                )))
            }
        };
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

//! Accelerated forward-backward iterations with error feedback.
//!
//! Each outer round performs one gossip communication (two applications of
//! the same round's matrix), an accelerated step on the smooth coupling
//! `G(y, z) = (r_yz/2)‖y + z‖²` and `T` implicit inner steps on the
//! non-smooth node operators. The output is the node average of a
//! λ-weighted average of the bar-iterates.

mod schedule;

use std::time::Instant;

pub use schedule::{alpha, lambda_interior, lambda_terminal, EtaXVariant, Schedule};

use crate::error::{Error, Result};
use crate::gossip::{project_consensus_complement, Mixer};
use crate::problems::{CoordinateMap, ProblemInstance, StochasticOracle};
use crate::scalar::Scalar;
use crate::stacked::StackedVector;

/// Drift tolerance on the block sums of `z`, `z̄` and `m`.
pub const ZERO_SUM_TOL: f64 = 1e-10;

/// Full iterate set of the algorithm plus the running λ-weighted sums.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState<T: Scalar> {
    pub x: StackedVector<T>,
    pub x_prev: StackedVector<T>,
    pub x_tilde: StackedVector<T>,
    pub x_bar: StackedVector<T>,
    pub x_hat: StackedVector<T>,
    pub y: StackedVector<T>,
    pub y_bar: StackedVector<T>,
    pub y_under: StackedVector<T>,
    pub z: StackedVector<T>,
    pub z_bar: StackedVector<T>,
    pub z_under: StackedVector<T>,
    pub m: StackedVector<T>,
    /// `Σ_{j ≤ k} λ_j (x̄^j, ȳ^j, z̄^j)` with interior weights.
    pub sum_lambda_x: StackedVector<T>,
    pub sum_lambda_y: StackedVector<T>,
    pub sum_lambda_z: StackedVector<T>,
    pub sum_lambda: T,
    /// Number of completed outer rounds.
    pub k: usize,
}

impl<T: Scalar> SolverState<T> {
    pub fn zeros(n_nodes: usize, dim: usize) -> Self {
        let z = || StackedVector::zeros(n_nodes, dim);
        Self {
            x: z(),
            x_prev: z(),
            x_tilde: z(),
            x_bar: z(),
            x_hat: z(),
            y: z(),
            y_bar: z(),
            y_under: z(),
            z: z(),
            z_bar: z(),
            z_under: z(),
            m: z(),
            sum_lambda_x: z(),
            sum_lambda_y: z(),
            sum_lambda_z: z(),
            sum_lambda: T::zero(),
            k: 0,
        }
    }

    fn fields(&self) -> [&StackedVector<T>; 12] {
        [
            &self.x,
            &self.x_prev,
            &self.x_tilde,
            &self.x_bar,
            &self.x_hat,
            &self.y,
            &self.y_bar,
            &self.y_under,
            &self.z,
            &self.z_bar,
            &self.z_under,
            &self.m,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.fields().iter().all(|f| f.is_finite())
    }

    /// True iff every iterate is exactly (bitwise) zero.
    pub fn is_exactly_zero(&self) -> bool {
        self.fields()
            .iter()
            .all(|f| f.matrix().iter().all(|v| *v == T::zero()))
    }

    /// Weighted averages `(x_a, y_a, z_a)` as they would be output by a run
    /// stopping after the rounds completed so far.
    pub fn weighted_average(&self) -> Option<[StackedVector<T>; 3]> {
        if self.k == 0 {
            return None;
        }
        let w_last = lambda_terminal::<T>(self.k);
        // the running sums already include x̄^k with its interior weight
        let w_int = lambda_interior::<T>(self.k);
        let total = self.sum_lambda - w_int + w_last;
        let avg = |sum: &StackedVector<T>, bar: &StackedVector<T>| {
            let mut out = sum.clone();
            out.axpy(w_last - w_int, bar);
            out.scaled(T::one() / total)
        };
        Some([
            avg(&self.sum_lambda_x, &self.x_bar),
            avg(&self.sum_lambda_y, &self.y_bar),
            avg(&self.sum_lambda_z, &self.z_bar),
        ])
    }

    /// Node mean of `x_a`.
    pub fn output(&self) -> Option<Vec<T>> {
        self.weighted_average().map(|[xa, _, _]| xa.block_mean())
    }
}

/// Numerical health of a run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    /// Largest `residual / (1 + ‖x^{k,t+1}‖)` of the implicit inner equation.
    pub max_implicit_residual: f64,
    /// Largest block-sum magnitude of `z`, `z̄`, `m` observed before any
    /// re-projection.
    pub max_zero_sum_drift: f64,
    /// How many times drift exceeded the tolerance and was projected away.
    pub reprojections: usize,
    pub inner_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub record_timing: bool,
    pub check_implicit_residual: bool,
    /// Emit a metric row after every round rather than only the last.
    pub anytime_rows: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            record_timing: false,
            check_implicit_residual: true,
            anytime_rows: true,
        }
    }
}

/// Ground truth for metric rows: the problem the metrics are measured on,
/// its solution and, for rescaled runs, the map back to its coordinates.
#[derive(Debug, Clone, Copy)]
pub struct Reference<'a, T: Scalar> {
    pub problem: &'a ProblemInstance<T>,
    pub x_star: &'a [T],
    pub map: Option<&'a CoordinateMap<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRow<T> {
    /// Rounds completed (the K of the output this row describes).
    pub k: usize,
    /// Oracle calls per node so far.
    pub t_total: usize,
    pub dist_to_opt: T,
    pub gap: T,
    pub consensus_err: T,
    pub wall_ns: u128,
}

pub const METRICS_HEADER: [&str; 6] = [
    "k",
    "t_total",
    "dist_to_opt",
    "gap",
    "consensus_err",
    "wall_ns",
];

#[derive(Debug, Clone)]
pub struct RunResult<T: Scalar> {
    pub x_o: Vec<T>,
    pub x_a: StackedVector<T>,
    pub rows: Vec<MetricRow<T>>,
    pub diagnostics: Diagnostics,
    pub state: SolverState<T>,
}

/// One outer round of the algorithm. Mixing uses round `k` of `mixer`.
pub fn outer_step<T: Scalar, M: Mixer<T> + ?Sized, O: StochasticOracle<T> + ?Sized>(
    state: &mut SolverState<T>,
    sched: &Schedule<T>,
    mixer: &M,
    oracle: &O,
    diag: &mut Diagnostics,
    check_residual: bool,
) {
    let k = state.k;
    let one = T::one();
    let a = sched.alpha[k];

    // combination
    state.y_under = StackedVector::lin_comb(a, &state.y, one - a, &state.y_bar);
    state.z_under = StackedVector::lin_comb(a, &state.z, one - a, &state.z_bar);

    // ∇_y G = ∇_z G
    let g = (&state.y_under + &state.z_under).scaled(sched.r_yz);

    // communication
    let g_tilde = mixer.mix(k, &g);
    let g_hat = mixer.mix(k, &(&g + &state.m));

    // x̂ first: it only depends on round-k quantities and feeds the y step
    state.x_hat = state.x.clone();
    state
        .x_hat
        .axpy(sched.gamma[k], &(&state.x_tilde - &state.x_prev));
    let y_old = state.y.clone();
    let mut y_new = y_old.clone();
    y_new.axpy(-sched.eta_y_k[k], &(&g + &state.x_hat));
    state.z.axpy(-sched.eta_z_k[k], &g_hat);

    state.y_bar = state.y_under.clone();
    state.y_bar.axpy(a, &(&y_new - &y_old));
    state.y = y_new;
    state.z_bar = state.z_under.clone();
    state.z_bar.axpy(-sched.theta_z_k[k], &g_tilde);
    // W annihilates consensus vectors, so only the zero-sum part of m ever
    // reaches an iterate; keep that part.
    let ratio = sched.eta_z_k[k] / sched.eta_z_k[k + 1];
    let mut m = &(&state.m + &g) - &g_hat;
    m = project_consensus_complement(&m).scaled(ratio);
    state.m = m;

    for v in [&mut state.z, &mut state.z_bar, &mut state.m] {
        let drift = v.block_sum_max_abs().to_f64_lossy();
        diag.max_zero_sum_drift = diag.max_zero_sum_drift.max(drift);
        if drift > ZERO_SUM_TOL {
            *v = project_consensus_complement(v);
            diag.reprojections += 1;
        }
    }

    // inner loop: implicit steps solved in closed form
    let eta = sched.eta_x_k[k];
    let beta = sched.beta[k];
    let tau = sched.tau_x_k[k];
    let denom = one + eta * (beta + tau);
    let n = state.x.n_blocks();
    let dim = state.x.block_dim();
    let anchor = state.x.clone();
    // x^{k,t+1}·denom = x^{k,t} − η(g − y^{k+1} − τ x^k); the y and anchor
    // terms are fixed for the round
    let mut shift = state.y.clone();
    shift.axpy(tau, &anchor);
    let mut xt = anchor.clone();
    let mut sum = StackedVector::zeros(n, dim);
    let mut gx = StackedVector::zeros(n, dim);
    let mut buf = vec![T::zero(); dim];
    for t in 0..sched.inner {
        for i in 0..n {
            let xi = xt.block(i);
            oracle.query(i, &xi, k, t, &mut buf);
            gx.set_block(i, &buf);
        }
        let mut rhs = xt.clone();
        rhs.axpy(-eta, &(&gx - &shift));
        let next = rhs.scaled(one / denom);
        if check_residual {
            let res = implicit_residual(&xt, &next, &gx, &state.y, &anchor, eta, beta, tau);
            let ratio = res.to_f64_lossy() / (1.0 + next.norm().to_f64_lossy());
            diag.max_implicit_residual = diag.max_implicit_residual.max(ratio);
        }
        diag.inner_steps += 1;
        sum += &next;
        xt = next;
    }

    let x_tilde_new = sum.scaled(one / T::of(sched.inner as f64));
    let s = sched.sigma_k[k];
    let x_new = StackedVector::lin_comb(s, &xt, one - s, &x_tilde_new);
    state.x_bar = StackedVector::lin_comb(a, &x_tilde_new, one - a, &state.x_bar);
    state.x_prev = std::mem::replace(&mut state.x, x_new);
    state.x_tilde = x_tilde_new;

    state.k = k + 1;
    let w = lambda_interior::<T>(state.k);
    state.sum_lambda_x.axpy(w, &state.x_bar);
    state.sum_lambda_y.axpy(w, &state.y_bar);
    state.sum_lambda_z.axpy(w, &state.z_bar);
    state.sum_lambda += w;
}

/// Norm of `x' − x + η(g + βx' − y + τ(x' − x^k))`, the defect of the
/// implicit inner equation at a candidate `x'`.
#[allow(clippy::too_many_arguments)]
pub fn implicit_residual<T: Scalar>(
    x_cur: &StackedVector<T>,
    x_next: &StackedVector<T>,
    g: &StackedVector<T>,
    y: &StackedVector<T>,
    anchor: &StackedVector<T>,
    eta: T,
    beta: T,
    tau: T,
) -> T {
    let mut inner = g - y;
    inner.axpy(beta, x_next);
    inner.axpy(tau, &(x_next - anchor));
    let mut res = x_next - x_cur;
    res.axpy(eta, &inner);
    res.norm()
}

fn metric_row<T: Scalar>(
    state: &SolverState<T>,
    inner: usize,
    reference: Option<&Reference<'_, T>>,
    wall_ns: u128,
) -> Result<(MetricRow<T>, Vec<T>, StackedVector<T>)> {
    let [xa, _, _] = state
        .weighted_average()
        .expect("at least one round completed");
    let x_o = xa.block_mean();
    let consensus_err = project_consensus_complement(&xa).norm();
    let (dist, gap) = match reference {
        Some(r) => {
            let x_eval = match r.map {
                Some(m) => m.back(&x_o),
                None => x_o.clone(),
            };
            let dist = x_eval
                .iter()
                .zip(r.x_star)
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum::<T>()
                .sqrt();
            (dist, r.problem.gap(&x_eval, r.x_star)?)
        }
        None => (T::of(f64::NAN), T::of(f64::NAN)),
    };
    let row = MetricRow {
        k: state.k,
        t_total: state.k * inner,
        dist_to_opt: dist,
        gap,
        consensus_err,
        wall_ns,
    };
    Ok((row, x_o, xa))
}

/// Runs `sched.outer` rounds from the zero initialization.
pub fn run<T: Scalar, M: Mixer<T> + ?Sized, O: StochasticOracle<T> + ?Sized>(
    sched: &Schedule<T>,
    mixer: &M,
    oracle: &O,
    reference: Option<&Reference<'_, T>>,
    opts: &RunOptions,
) -> Result<RunResult<T>> {
    if mixer.n_nodes() != oracle.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: oracle.n_nodes(),
            got: mixer.n_nodes(),
        });
    }
    let mut state = SolverState::zeros(oracle.n_nodes(), oracle.dim());
    let mut diag = Diagnostics::default();
    let mut rows = Vec::new();
    let start = Instant::now();
    for k in 0..sched.outer {
        outer_step(
            &mut state,
            sched,
            mixer,
            oracle,
            &mut diag,
            opts.check_implicit_residual,
        );
        if !state.is_finite() {
            return Err(Error::NonFinite { k });
        }
        if opts.anytime_rows || k + 1 == sched.outer {
            let wall = if opts.record_timing {
                start.elapsed().as_nanos()
            } else {
                0
            };
            rows.push(metric_row(&state, sched.inner, reference, wall)?.0);
        }
    }
    let (_, x_o, x_a) = metric_row(&state, sched.inner, reference, 0)?;
    Ok(RunResult {
        x_o,
        x_a,
        rows,
        diagnostics: diag,
        state,
    })
}

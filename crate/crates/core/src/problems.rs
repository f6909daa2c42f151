//! Problem instances, per-node monotone operators and stochastic oracles.
//!
//! The built-in family is the separable L1 saddle problem
//!
//! ```text
//! p(ξ, ζ) = (1/n) Σ_i [ a‖ξ − c_ξ,i‖₁ − b‖ζ − c_ζ,i‖₁ ] + (r_ξ/2)‖ξ‖² − (r_ζ/2)‖ζ‖²
//! ```
//!
//! with unit weights `a = b = 1` and `r_ξ = r_ζ = r` in its plain form. The
//! weights only differ from one after an asymmetric rescaling. Convex
//! minimization is the special case `d_ζ = 0`.
//!
//! Node operators follow the saddle-point convention
//! `T_i(ξ, ζ) = (∂_ξ f_i, −∂_ζ f_i)`. For the L1 family this is
//! `(a·sign(ξ − c_ξ,i), b·sign(ζ − c_ζ,i))`, the subdifferential of a convex
//! function and hence monotone. Kinks select 0.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::{sign_or_zero, Scalar};
use crate::stacked::StackedVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    ConvexMin,
    SaddlePoint,
}

/// Distinct strong-convexity and strong-concavity constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymmetricRegularization<T> {
    pub r_xi: T,
    pub r_zeta: T,
}

impl<T: Scalar> AsymmetricRegularization<T> {
    pub fn new(r_xi: T, r_zeta: T) -> Result<Self> {
        if !(r_xi > T::zero() && r_zeta > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "asymmetric regularization needs r_xi, r_zeta > 0 (got {r_xi}, {r_zeta})"
            )));
        }
        Ok(Self { r_xi, r_zeta })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance<T: Scalar> {
    kind: ProblemKind,
    d_xi: usize,
    d_zeta: usize,
    reg_xi: T,
    reg_zeta: T,
    scale_xi: T,
    scale_zeta: T,
    centers_xi: Vec<Vec<T>>,
    centers_zeta: Vec<Vec<T>>,
    m_bound: T,
    r_bound: Option<T>,
}

impl<T: Scalar> ProblemInstance<T> {
    /// L1 saddle problem with one `(c_ξ,i, c_ζ,i)` pair per node.
    pub fn l1_saddle(centers_xi: Vec<Vec<T>>, centers_zeta: Vec<Vec<T>>, r: T) -> Result<Self> {
        Self::build(
            ProblemKind::SaddlePoint,
            centers_xi,
            centers_zeta,
            r,
            r,
            T::one(),
            T::one(),
        )
    }

    /// L1 convex minimization `(1/n) Σ ‖x − c_i‖₁ + (r/2)‖x‖²`.
    pub fn l1_convex(centers: Vec<Vec<T>>, r: T) -> Result<Self> {
        let n = centers.len();
        Self::build(
            ProblemKind::ConvexMin,
            centers,
            vec![Vec::new(); n],
            r,
            r,
            T::one(),
            T::one(),
        )
    }

    /// Random L1 instance with centers drawn uniformly from `[-half_width, half_width]`.
    pub fn random_l1(
        kind: ProblemKind,
        n: usize,
        d_xi: usize,
        d_zeta: usize,
        r: T,
        half_width: f64,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = rng::stream(&[seed, 0xCE47E5]);
        let mut draw = |d: usize| -> Vec<T> {
            (0..d)
                .map(|_| T::of(rng.random_range(-half_width..=half_width)))
                .collect()
        };
        let cx: Vec<Vec<T>> = (0..n).map(|_| draw(d_xi)).collect();
        match kind {
            ProblemKind::ConvexMin => Self::l1_convex(cx, r),
            ProblemKind::SaddlePoint => {
                let cz: Vec<Vec<T>> = (0..n).map(|_| draw(d_zeta)).collect();
                Self::l1_saddle(cx, cz, r)
            }
        }
    }

    fn build(
        kind: ProblemKind,
        centers_xi: Vec<Vec<T>>,
        centers_zeta: Vec<Vec<T>>,
        reg_xi: T,
        reg_zeta: T,
        scale_xi: T,
        scale_zeta: T,
    ) -> Result<Self> {
        let n = centers_xi.len();
        if n == 0 || centers_zeta.len() != n {
            return Err(Error::InvalidParameter(
                "need one center row per node".into(),
            ));
        }
        let d_xi = centers_xi[0].len();
        let d_zeta = centers_zeta[0].len();
        if d_xi == 0 {
            return Err(Error::InvalidParameter("d_xi must be positive".into()));
        }
        if kind == ProblemKind::ConvexMin && d_zeta != 0 {
            return Err(Error::InvalidParameter(
                "convex problems have no ζ block".into(),
            ));
        }
        if kind == ProblemKind::SaddlePoint && d_zeta == 0 {
            return Err(Error::InvalidParameter(
                "saddle problems need d_zeta > 0".into(),
            ));
        }
        for row in &centers_xi {
            if row.len() != d_xi {
                return Err(Error::DimensionMismatch {
                    expected: d_xi,
                    got: row.len(),
                });
            }
        }
        for row in &centers_zeta {
            if row.len() != d_zeta {
                return Err(Error::DimensionMismatch {
                    expected: d_zeta,
                    got: row.len(),
                });
            }
        }
        if reg_xi < T::zero() || reg_zeta < T::zero() {
            return Err(Error::InvalidParameter(
                "regularization must be nonnegative".into(),
            ));
        }
        if !(scale_xi > T::zero() && scale_zeta > T::zero()) {
            return Err(Error::InvalidParameter(
                "L1 weights must be positive".into(),
            ));
        }
        let m_bound = (scale_xi * scale_xi * T::of(d_xi as f64)
            + scale_zeta * scale_zeta * T::of(d_zeta as f64))
        .sqrt();
        let mut pb = Self {
            kind,
            d_xi,
            d_zeta,
            reg_xi,
            reg_zeta,
            scale_xi,
            scale_zeta,
            centers_xi,
            centers_zeta,
            m_bound,
            r_bound: None,
        };
        pb.r_bound = Some(pb.box_radius());
        Ok(pb)
    }

    /// `‖x*‖` bound from the box hull of the centers (and the origin): every
    /// coordinate of the exact solution lies between 0 and the extreme
    /// centers of that coordinate.
    fn box_radius(&self) -> T {
        let col_max = |rows: &[Vec<T>], j: usize| {
            rows.iter()
                .map(|r| r[j].abs())
                .fold(T::zero(), |a, b| if b > a { b } else { a })
        };
        let mut s = T::zero();
        for j in 0..self.d_xi {
            let m = col_max(&self.centers_xi, j);
            s += m * m;
        }
        for j in 0..self.d_zeta {
            let m = col_max(&self.centers_zeta, j);
            s += m * m;
        }
        s.sqrt()
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn n_nodes(&self) -> usize {
        self.centers_xi.len()
    }

    pub fn d_xi(&self) -> usize {
        self.d_xi
    }

    pub fn d_zeta(&self) -> usize {
        self.d_zeta
    }

    /// Dimension of one node's point `(ξ, ζ)`.
    pub fn dim(&self) -> usize {
        self.d_xi + self.d_zeta
    }

    pub fn reg_xi(&self) -> T {
        self.reg_xi
    }

    pub fn reg_zeta(&self) -> T {
        self.reg_zeta
    }

    /// The shared regularization `r` when both blocks use the same constant.
    pub fn symmetric_r(&self) -> Option<T> {
        if self.kind == ProblemKind::ConvexMin || self.reg_xi == self.reg_zeta {
            Some(self.reg_xi)
        } else {
            None
        }
    }

    pub fn scale_xi(&self) -> T {
        self.scale_xi
    }

    pub fn scale_zeta(&self) -> T {
        self.scale_zeta
    }

    pub fn centers_xi(&self) -> &[Vec<T>] {
        &self.centers_xi
    }

    pub fn centers_zeta(&self) -> &[Vec<T>] {
        &self.centers_zeta
    }

    /// Bound `M` on every operator selection.
    pub fn m_bound(&self) -> T {
        self.m_bound
    }

    /// Bound `R` on the norm of a solution.
    pub fn r_bound(&self) -> Option<T> {
        self.r_bound
    }

    fn check_dim(&self, x: &[T]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Canonical selection `g_i ∈ T_i(x)` written into `out`.
    pub fn select_into(&self, i: usize, x: &[T], out: &mut [T]) {
        let (cx, cz) = (&self.centers_xi[i], &self.centers_zeta[i]);
        for j in 0..self.d_xi {
            out[j] = self.scale_xi * sign_or_zero(x[j] - cx[j]);
        }
        for j in 0..self.d_zeta {
            // −∂_ζ(−b|ζ − c|) = b·sign(ζ − c)
            out[self.d_xi + j] = self.scale_zeta * sign_or_zero(x[self.d_xi + j] - cz[j]);
        }
    }

    pub fn query_deterministic(&self, i: usize, x: &[T]) -> Result<Vec<T>> {
        self.check_dim(x)?;
        if i >= self.n_nodes() {
            return Err(Error::InvalidParameter(format!("node {i} out of range")));
        }
        let mut out = vec![T::zero(); self.dim()];
        self.select_into(i, x, &mut out);
        Ok(out)
    }

    /// Stacks `g_i(x_i)` for every node.
    pub fn stacked_operator(&self, x: &StackedVector<T>) -> Result<StackedVector<T>> {
        if x.n_blocks() != self.n_nodes() {
            return Err(Error::DimensionMismatch {
                expected: self.n_nodes(),
                got: x.n_blocks(),
            });
        }
        let mut out = StackedVector::zeros(self.n_nodes(), self.dim());
        let mut buf = vec![T::zero(); self.dim()];
        for i in 0..self.n_nodes() {
            let xi = x.block(i);
            self.check_dim(&xi)?;
            self.select_into(i, &xi, &mut buf);
            out.set_block(i, &buf);
        }
        Ok(out)
    }

    /// Local function `f_i(ξ, ζ)` without regularization.
    pub fn local_value(&self, i: usize, x: &[T]) -> T {
        let (cx, cz) = (&self.centers_xi[i], &self.centers_zeta[i]);
        let mut a = T::zero();
        for j in 0..self.d_xi {
            a += (x[j] - cx[j]).abs();
        }
        let mut b = T::zero();
        for j in 0..self.d_zeta {
            b += (x[self.d_xi + j] - cz[j]).abs();
        }
        self.scale_xi * a - self.scale_zeta * b
    }

    /// Objective `p` at the concatenated point `x = (ξ, ζ)`.
    pub fn evaluate_p(&self, x: &[T]) -> Result<T> {
        self.check_dim(x)?;
        let n = T::of(self.n_nodes() as f64);
        let avg = (0..self.n_nodes())
            .map(|i| self.local_value(i, x))
            .sum::<T>()
            / n;
        let half = T::of(0.5);
        let sq = |s: &[T]| s.iter().map(|&v| v * v).sum::<T>();
        Ok(avg + half * self.reg_xi * sq(&x[..self.d_xi])
            - half * self.reg_zeta * sq(&x[self.d_xi..]))
    }

    pub fn evaluate_p_saddle(&self, xi: &[T], zeta: &[T]) -> Result<T> {
        self.evaluate_p(&concat(xi, zeta))
    }

    /// `p(x_o) − p(x*)`.
    pub fn gap_cvx(&self, x_o: &[T], x_star: &[T]) -> Result<T> {
        Ok(self.evaluate_p(x_o)? - self.evaluate_p(x_star)?)
    }

    /// `p(ξ_o, ζ*) − p(ξ*, ζ_o)` on concatenated points.
    pub fn gap_spp(&self, x_o: &[T], x_star: &[T]) -> Result<T> {
        self.check_dim(x_o)?;
        self.check_dim(x_star)?;
        let d = self.d_xi;
        let upper = self.evaluate_p_saddle(&x_o[..d], &x_star[d..])?;
        let lower = self.evaluate_p_saddle(&x_star[..d], &x_o[d..])?;
        Ok(upper - lower)
    }

    /// The gap matching the problem kind.
    pub fn gap(&self, x_o: &[T], x_star: &[T]) -> Result<T> {
        match self.kind {
            ProblemKind::ConvexMin => self.gap_cvx(x_o, x_star),
            ProblemKind::SaddlePoint => self.gap_spp(x_o, x_star),
        }
    }

    /// Same functions, new regularization constants.
    pub fn with_regularization(&self, r_xi: T, r_zeta: T) -> Result<Self> {
        Self::build(
            self.kind,
            self.centers_xi.clone(),
            self.centers_zeta.clone(),
            r_xi,
            r_zeta,
            self.scale_xi,
            self.scale_zeta,
        )
    }

    /// Regularizes a monotone (`r = 0`) problem with `r = ε / R²`. Solving
    /// the result to gap `ε` gives gap at most `2ε` on the original.
    pub fn regularize_monotone(&self, epsilon: T) -> Result<Self> {
        if self.reg_xi != T::zero() || self.reg_zeta != T::zero() {
            return Err(Error::InvalidParameter(
                "problem is already regularized".into(),
            ));
        }
        if !(epsilon > T::zero()) {
            return Err(Error::InvalidParameter(
                "target accuracy must be positive".into(),
            ));
        }
        let radius = self.r_bound.ok_or(Error::MissingBound)?;
        let r = regularization_for_accuracy(epsilon, radius)?;
        self.with_regularization(r, r)
    }

    /// Maps the asymmetric problem `(r_ξ, r_ζ)` onto a symmetric one with
    /// `r = 1` by substituting `ξ → ξ/√r_ξ`, `ζ → ζ/√r_ζ`. The new operator
    /// bound is `M √(1/r_ξ + 1/r_ζ)`.
    pub fn rescale_asymmetric(
        &self,
        ar: AsymmetricRegularization<T>,
    ) -> Result<(Self, CoordinateMap<T>)> {
        if self.kind != ProblemKind::SaddlePoint {
            return Err(Error::InvalidParameter(
                "rescaling applies to saddle problems".into(),
            ));
        }
        let ar = AsymmetricRegularization::new(ar.r_xi, ar.r_zeta)?;
        let map = CoordinateMap {
            d_xi: self.d_xi,
            sqrt_r_xi: ar.r_xi.sqrt(),
            sqrt_r_zeta: ar.r_zeta.sqrt(),
        };
        // a|ξ/s − c| = (a/s)|ξ − s·c|
        let cx = self
            .centers_xi
            .iter()
            .map(|row| row.iter().map(|&c| c * map.sqrt_r_xi).collect())
            .collect();
        let cz = self
            .centers_zeta
            .iter()
            .map(|row| row.iter().map(|&c| c * map.sqrt_r_zeta).collect())
            .collect();
        let mut pb = Self::build(
            self.kind,
            cx,
            cz,
            T::one(),
            T::one(),
            self.scale_xi / map.sqrt_r_xi,
            self.scale_zeta / map.sqrt_r_zeta,
        )?;
        pb.m_bound = self.m_bound * (T::one() / ar.r_xi + T::one() / ar.r_zeta).sqrt();
        Ok((pb, map))
    }

    pub fn to_fixture(&self) -> ProblemFixture {
        let rows = |m: &[Vec<T>]| -> Vec<Vec<f64>> {
            m.iter()
                .map(|r| r.iter().map(|v| v.to_f64_lossy()).collect())
                .collect()
        };
        ProblemFixture {
            kind: self.kind,
            n_nodes: self.n_nodes(),
            d_xi: self.d_xi,
            d_zeta: self.d_zeta,
            r_xi: self.reg_xi.to_f64_lossy(),
            r_zeta: self.reg_zeta.to_f64_lossy(),
            scale_xi: self.scale_xi.to_f64_lossy(),
            scale_zeta: self.scale_zeta.to_f64_lossy(),
            centers_xi: rows(&self.centers_xi),
            centers_zeta: rows(&self.centers_zeta),
        }
    }

    pub fn from_fixture(f: &ProblemFixture) -> Result<Self> {
        let rows = |m: &[Vec<f64>]| -> Vec<Vec<T>> {
            m.iter()
                .map(|r| r.iter().map(|&v| T::of(v)).collect())
                .collect()
        };
        let mut cz = rows(&f.centers_zeta);
        if f.kind == ProblemKind::ConvexMin && cz.is_empty() {
            cz = vec![Vec::new(); f.centers_xi.len()];
        }
        let pb = Self::build(
            f.kind,
            rows(&f.centers_xi),
            cz,
            T::of(f.r_xi),
            T::of(f.r_zeta),
            T::of(f.scale_xi),
            T::of(f.scale_zeta),
        )?;
        if pb.n_nodes() != f.n_nodes || pb.d_xi != f.d_xi || pb.d_zeta != f.d_zeta {
            return Err(Error::InvalidParameter(
                "fixture header disagrees with center rows".into(),
            ));
        }
        Ok(pb)
    }
}

/// `r = ε / R²`.
pub fn regularization_for_accuracy<T: Scalar>(epsilon: T, radius: T) -> Result<T> {
    if !(radius > T::zero()) {
        return Err(Error::InvalidParameter(
            "solution bound R must be positive".into(),
        ));
    }
    Ok(epsilon / (radius * radius))
}

pub fn concat<T: Copy>(a: &[T], b: &[T]) -> Vec<T> {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v
}

/// Invertible map between original and rescaled coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinateMap<T> {
    d_xi: usize,
    sqrt_r_xi: T,
    sqrt_r_zeta: T,
}

impl<T: Scalar> CoordinateMap<T> {
    /// Original `(ξ, ζ)` to rescaled `(√r_ξ ξ, √r_ζ ζ)`.
    pub fn forward(&self, x: &[T]) -> Vec<T> {
        x.iter()
            .enumerate()
            .map(|(j, &v)| {
                if j < self.d_xi {
                    v * self.sqrt_r_xi
                } else {
                    v * self.sqrt_r_zeta
                }
            })
            .collect()
    }

    pub fn back(&self, x: &[T]) -> Vec<T> {
        x.iter()
            .enumerate()
            .map(|(j, &v)| {
                if j < self.d_xi {
                    v / self.sqrt_r_xi
                } else {
                    v / self.sqrt_r_zeta
                }
            })
            .collect()
    }
}

/// Serializable form of an L1 problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFixture {
    pub kind: ProblemKind,
    pub n_nodes: usize,
    pub d_xi: usize,
    pub d_zeta: usize,
    pub r_xi: f64,
    pub r_zeta: f64,
    #[serde(default = "one")]
    pub scale_xi: f64,
    #[serde(default = "one")]
    pub scale_zeta: f64,
    pub centers_xi: Vec<Vec<f64>>,
    #[serde(default)]
    pub centers_zeta: Vec<Vec<f64>>,
}

fn one() -> f64 {
    1.0
}

/// Per-node stochastic operator queries keyed by `(node, outer, inner)`.
pub trait StochasticOracle<T: Scalar>: Sync {
    fn n_nodes(&self) -> usize;

    fn dim(&self) -> usize;

    fn query(&self, i: usize, x: &[T], k: usize, t: usize, out: &mut [T]);
}

/// Problem-backed oracle adding isotropic Gaussian noise with
/// `E‖ω‖² = σ²`. The noise of query `(i, k, t)` is drawn from its own
/// counter-keyed stream, so replay does not depend on call order.
#[derive(Debug, Clone)]
pub struct OperatorOracle<'a, T: Scalar> {
    problem: &'a ProblemInstance<T>,
    noise_sigma: T,
    rng_seed: u64,
}

impl<'a, T: Scalar> OperatorOracle<'a, T> {
    pub fn new(problem: &'a ProblemInstance<T>, noise_sigma: T, rng_seed: u64) -> Result<Self> {
        if noise_sigma < T::zero() || !noise_sigma.is_finite() {
            return Err(Error::InvalidParameter(
                "noise level must be finite and >= 0".into(),
            ));
        }
        Ok(Self {
            problem,
            noise_sigma,
            rng_seed,
        })
    }

    pub fn deterministic(problem: &'a ProblemInstance<T>) -> Self {
        Self {
            problem,
            noise_sigma: T::zero(),
            rng_seed: 0,
        }
    }

    pub fn problem(&self) -> &ProblemInstance<T> {
        self.problem
    }

    pub fn noise_sigma(&self) -> T {
        self.noise_sigma
    }

    pub fn query_deterministic(&self, i: usize, x: &[T]) -> Result<Vec<T>> {
        self.problem.query_deterministic(i, x)
    }

    pub fn query_stochastic(&self, i: usize, x: &[T], k: usize, t: usize) -> Result<Vec<T>> {
        let mut out = self.problem.query_deterministic(i, x)?;
        self.add_noise(i, k, t, &mut out);
        Ok(out)
    }

    fn add_noise(&self, i: usize, k: usize, t: usize, out: &mut [T]) {
        if self.noise_sigma == T::zero() {
            return;
        }
        let per_coord = self.noise_sigma / T::of(out.len() as f64).sqrt();
        let mut rng = rng::stream(&[self.rng_seed, i as u64, k as u64, t as u64]);
        for v in out.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v += per_coord * T::of(z);
        }
    }
}

impl<T: Scalar> StochasticOracle<T> for OperatorOracle<'_, T> {
    fn n_nodes(&self) -> usize {
        self.problem.n_nodes()
    }

    fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn query(&self, i: usize, x: &[T], k: usize, t: usize, out: &mut [T]) {
        self.problem.select_into(i, x, out);
        self.add_noise(i, k, t, out);
    }
}

/// `T_i ≡ 0` for every node.
#[derive(Debug, Clone, Copy)]
pub struct ZeroOracle {
    pub n_nodes: usize,
    pub dim: usize,
}

impl<T: Scalar> StochasticOracle<T> for ZeroOracle {
    fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn query(&self, _i: usize, _x: &[T], _k: usize, _t: usize, out: &mut [T]) {
        out.iter_mut().for_each(|v| *v = T::zero());
    }
}

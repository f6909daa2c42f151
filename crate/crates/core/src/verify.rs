//! Ground-truth oracles and optimality certificates.
//!
//! The L1 family is coordinate-separable, so its exact solution reduces to
//! one-dimensional problems `min_u (1/n) Σ |u − c_i| + (r/2) u²` solved by a
//! breakpoint scan. From an exact solution we build the stacked point
//! `(w*, y*, z*)` of the monotone-inclusion reformulation and measure how
//! far it is from satisfying each block of `0 ∈ A(u) + B(u)`.

use rand::Rng;
use rand_distr::StandardNormal;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gossip::project_consensus_complement;
use crate::problems::ProblemInstance;
use crate::rng;
use crate::scalar::{sign_or_zero, Scalar};
use crate::stacked::StackedVector;

/// Tolerance on the per-coordinate mass left over by the certificate fit.
pub const FIT_TOL: f64 = 1e-9;

/// Exact minimizer of `(1/n) Σ |u − c_i| + (r/2) u²`.
///
/// With `r = 0` the minimizer set is the median interval; the lower median
/// is returned.
pub fn solve_1d_exact<T: Scalar>(centers: &[T], r: T) -> Result<T> {
    if r < T::zero() || !r.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "weight r must be finite and >= 0, got {r}"
        )));
    }
    if centers.is_empty() {
        return if r > T::zero() {
            Ok(T::zero())
        } else {
            Err(Error::InvalidParameter(
                "r = 0 needs at least one center".into(),
            ))
        };
    }
    let mut c = centers.to_vec();
    c.sort_by(|a, b| a.partial_cmp(b).expect("finite centers"));
    let n = c.len();
    if r == T::zero() {
        return Ok(c[(n - 1) / 2]);
    }
    let nf = T::of(n as f64);

    // open interval with m centers strictly below: derivative r u + (2m − n)/n
    for m in 0..=n {
        let u = T::of(n as f64 - 2.0 * m as f64) / (nf * r);
        let above_lo = m == 0 || u > c[m - 1];
        let below_hi = m == n || u < c[m];
        if above_lo && below_hi {
            return Ok(u);
        }
    }

    // otherwise 0 lies in the subdifferential at some breakpoint; pick the
    // one whose interval is closest to 0 (exact hit barring rounding)
    let mut best = (c[0], T::max_value().unwrap());
    let mut b = 0;
    while b < n {
        let v = c[b];
        let mut q = 1;
        while b + q < n && c[b + q] == v {
            q += 1;
        }
        let lo = r * v + T::of(2.0 * b as f64 - n as f64) / nf;
        let hi = r * v + T::of(2.0 * (b + q) as f64 - n as f64) / nf;
        let dist = if lo > T::zero() {
            lo
        } else if hi < T::zero() {
            -hi
        } else {
            T::zero()
        };
        if dist < best.1 {
            best = (v, dist);
        }
        b += q;
    }
    Ok(best.0)
}

fn column<T: Scalar>(rows: &[Vec<T>], j: usize) -> Vec<T> {
    rows.iter().map(|r| r[j]).collect()
}

/// Exact solution `(ξ*, ζ*)` of an L1 instance (saddle point, or minimizer
/// when `d_ζ = 0`).
pub fn solve_l1_instance<T: Scalar>(pb: &ProblemInstance<T>) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(pb.dim());
    // weighted |·| terms: a|u − c| + (r/2)u² has the minimizer of |u − c| + (r/a)/2 u²
    for j in 0..pb.d_xi() {
        out.push(solve_1d_exact(
            &column(pb.centers_xi(), j),
            pb.reg_xi() / pb.scale_xi(),
        )?);
    }
    // the max block: max −(b/n)Σ|ζ − c| − (r/2)ζ² is the same 1-D problem
    for j in 0..pb.d_zeta() {
        out.push(solve_1d_exact(
            &column(pb.centers_zeta(), j),
            pb.reg_zeta() / pb.scale_zeta(),
        )?);
    }
    Ok(out)
}

/// Optimal point of the stacked reformulation built from an exact solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate<T: Scalar> {
    pub x_star: Vec<T>,
    /// `n` copies of `x*`.
    pub w_star: StackedVector<T>,
    pub y_star: StackedVector<T>,
    pub z_star: StackedVector<T>,
    /// Per-node selections `δ_i ∈ T_i(x*)` with `r x* + (1/n) Σ δ_i = 0`.
    pub delta_star: StackedVector<T>,
    /// `max_j |r x*_j + (1/n) Σ_i δ_ij|`.
    pub residual: T,
    pub r_x: T,
    pub r_yz: T,
}

#[inline]
fn at_kink<T: Scalar>(u: T, c: T) -> bool {
    (u - c).abs() <= T::of(1e-12) * (T::one() + c.abs())
}

/// `(center, weight)` of node `i`'s term on coordinate `j` of `(ξ, ζ)`.
fn term<T: Scalar>(pb: &ProblemInstance<T>, i: usize, j: usize) -> (T, T) {
    if j < pb.d_xi() {
        (pb.centers_xi()[i][j], pb.scale_xi())
    } else {
        (pb.centers_zeta()[i][j - pb.d_xi()], pb.scale_zeta())
    }
}

/// Builds `(w*, y*, z*)` with the splitting `r_x = 2r/3`, `r_yz = 3/r`.
pub fn build_certificate<T: Scalar>(
    pb: &ProblemInstance<T>,
    x_star: &[T],
) -> Result<Certificate<T>> {
    let r = pb
        .symmetric_r()
        .filter(|&r| r > T::zero())
        .ok_or_else(|| Error::InvalidParameter("certificates need a symmetric r > 0".into()))?;
    build_certificate_with_split(pb, x_star, T::of(2.0 / 3.0) * r, T::of(3.0) / r)
}

pub fn build_certificate_with_split<T: Scalar>(
    pb: &ProblemInstance<T>,
    x_star: &[T],
    r_x: T,
    r_yz: T,
) -> Result<Certificate<T>> {
    let r = pb
        .symmetric_r()
        .filter(|&r| r > T::zero())
        .ok_or_else(|| Error::InvalidParameter("certificates need a symmetric r > 0".into()))?;
    check_split(r, r_x, r_yz)?;
    if x_star.len() != pb.dim() {
        return Err(Error::DimensionMismatch {
            expected: pb.dim(),
            got: x_star.len(),
        });
    }
    let n = pb.n_nodes();
    let nf = T::of(n as f64);
    let mut delta = StackedVector::zeros(n, pb.dim());
    let mut residual = T::zero();
    for (j, &u) in x_star.iter().enumerate() {
        // required Σ_i δ_ij = −n r u
        let mut remaining = -nf * r * u;
        let mut kinks = Vec::new();
        for i in 0..n {
            let (c, s) = term(pb, i, j);
            if at_kink(u, c) {
                kinks.push((i, s));
            } else {
                let d = s * sign_or_zero(u - c);
                delta.matrix_mut()[(i, j)] = d;
                remaining -= d;
            }
        }
        for (i, s) in kinks {
            let d = remaining.clamp(-s, s);
            delta.matrix_mut()[(i, j)] = d;
            remaining -= d;
        }
        let scale = T::one() + nf * r * u.abs() + nf * pb.m_bound();
        if remaining.abs() > T::of(FIT_TOL) * scale {
            return Err(Error::CertificateInfeasible {
                coord: j,
                residual: remaining.to_f64_lossy(),
            });
        }
        let col_sum: T = (0..n).map(|i| delta.matrix()[(i, j)]).sum();
        residual = residual.max((r * u + col_sum / nf).abs());
    }

    let w_star = StackedVector::consensus(n, x_star);
    let mut y_star = delta.clone();
    y_star.axpy(r_x, &w_star);
    let mut z_star = -&delta;
    z_star.axpy(-r, &w_star);
    Ok(Certificate {
        x_star: x_star.to_vec(),
        w_star,
        y_star,
        z_star,
        delta_star: delta,
        residual,
        r_x,
        r_yz,
    })
}

fn check_split<T: Scalar>(r: T, r_x: T, r_yz: T) -> Result<()> {
    if !(r_x > T::zero() && r_yz > T::zero()) {
        return Err(Error::InvalidParameter(
            "r_x and r_yz must be positive".into(),
        ));
    }
    let mismatch = (r_x + T::one() / r_yz - r).abs();
    if mismatch > T::of(1e-12) * (T::one() + r.abs()) {
        return Err(Error::InvalidParameter(format!(
            "splitting violates r_x + 1/r_yz = r (off by {mismatch})"
        )));
    }
    Ok(())
}

/// Largest violation among the block conditions of `0 ∈ A(u) + B(u)` at
/// `u = (w*, y*, z*)`:
///
/// * `y* − r_x w* ∈ [T_i(w*_i)]` (distance to the subdifferential box),
/// * `r_yz (y* + z*) + w* = 0`,
/// * `P r_yz (y* + z*) = 0`, with `w*` consensual and `z*` zero-sum.
pub fn inclusion_residual<T: Scalar>(
    cert: &Certificate<T>,
    pb: &ProblemInstance<T>,
    r_x: T,
    r_yz: T,
) -> Result<T> {
    let r = pb
        .symmetric_r()
        .ok_or_else(|| Error::InvalidParameter("inclusion check needs a symmetric r".into()))?;
    check_split(r, r_x, r_yz)?;
    let n = pb.n_nodes();
    if cert.w_star.n_blocks() != n || cert.w_star.block_dim() != pb.dim() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: cert.w_star.n_blocks(),
        });
    }
    let mut worst = T::zero();

    let mut v = cert.y_star.clone();
    v.axpy(-r_x, &cert.w_star);
    for i in 0..n {
        for j in 0..pb.dim() {
            let u = cert.w_star.matrix()[(i, j)];
            let (c, s) = term(pb, i, j);
            let vij = v.matrix()[(i, j)];
            let d = if at_kink(u, c) {
                (vij.abs() - s).max(T::zero())
            } else {
                (vij - s * sign_or_zero(u - c)).abs()
            };
            worst = worst.max(d);
        }
    }

    let yz = (&cert.y_star + &cert.z_star).scaled(r_yz);
    worst = worst.max((&yz + &cert.w_star).matrix().amax());
    worst = worst.max(project_consensus_complement(&yz).matrix().amax());
    worst = worst.max(project_consensus_complement(&cert.w_star).matrix().amax());
    worst = worst.max(cert.z_star.block_sum_max_abs());
    Ok(worst)
}

/// `(value, bound)` pairs for `‖w*‖²`, `‖y*‖²`, `‖z*‖²`.
pub fn certificate_norm_bounds<T: Scalar>(
    cert: &Certificate<T>,
    pb: &ProblemInstance<T>,
) -> [(T, T); 3] {
    let r = pb.symmetric_r().unwrap_or_else(T::one);
    let nf = T::of(pb.n_nodes() as f64);
    let m2 = pb.m_bound() * pb.m_bound();
    let two = T::of(2.0);
    let k = T::one() + cert.r_x / r;
    [
        (cert.w_star.norm_squared(), two * nf * m2 / (r * r)),
        (cert.y_star.norm_squared(), two * k * k * nf * m2),
        (cert.z_star.norm_squared(), T::of(8.0) * nf * m2),
    ]
}

/// Largest sampled `‖Wx − x‖² / ‖x‖²` over random zero-sum vectors.
pub fn contraction_probe<T: Scalar>(w: &DMatrix<T>, trials: usize, seed: u64) -> T {
    let n = w.nrows();
    let mut rng = rng::stream(&[seed, 0x9E0BE]);
    let mut worst = T::zero();
    if n < 2 {
        return worst;
    }
    for _ in 0..trials.max(1) {
        let raw = StackedVector::from_matrix(DMatrix::from_fn(n, 1, |_, _| {
            let z: f64 = rng.sample(StandardNormal);
            T::of(z)
        }));
        let x = project_consensus_complement(&raw);
        let nx = x.norm_squared();
        if nx == T::zero() {
            continue;
        }
        let wx = StackedVector::from_matrix(w * x.matrix());
        worst = worst.max((&wx - &x).norm_squared() / nx);
    }
    worst
}

/// `(1/n) Σ |u − c_i| + (r/2) u²`.
pub fn objective_1d<T: Scalar>(centers: &[T], r: T, u: T) -> T {
    let n = T::of(centers.len() as f64);
    centers.iter().map(|&c| (u - c).abs()).sum::<T>() / n + T::of(0.5) * r * u * u
}

/// Brute-force minimizer of [`objective_1d`] over `points` equispaced grid
/// points spanning the centers and the origin. Returns `(u, grid step)`.
pub fn grid_search_1d<T: Scalar>(centers: &[T], r: T, points: usize) -> (T, T) {
    let lo = centers.iter().fold(T::zero(), |a, &c| a.min(c));
    let hi = centers.iter().fold(T::zero(), |a, &c| a.max(c));
    let points = points.max(2);
    let step = (hi - lo) / T::of((points - 1) as f64);
    let mut best = (lo, objective_1d(centers, r, lo));
    for i in 1..points {
        let u = lo + step * T::of(i as f64);
        let f = objective_1d(centers, r, u);
        if f < best.1 {
            best = (u, f);
        }
    }
    (best.0, step)
}

/// Largest objective improvement found by random perturbations of a
/// claimed solution: descent in `ξ` (or `x`) and ascent in `ζ`. A true
/// solution gives a value `<= 0` up to rounding.
pub fn perturbation_improvement<T: Scalar>(
    pb: &ProblemInstance<T>,
    x_star: &[T],
    trials: usize,
    radius: f64,
    seed: u64,
) -> Result<T> {
    let d = pb.d_xi();
    let base = pb.evaluate_p(x_star)?;
    let mut rng = rng::stream(&[seed, 0x9E27B]);
    let mut worst = T::of(f64::NEG_INFINITY);
    for _ in 0..trials {
        let scale: f64 = radius * rng.random::<f64>();
        let mut x = x_star.to_vec();
        let minimize = pb.d_zeta() == 0 || rng.random::<bool>();
        let range = if minimize { 0..d } else { d..pb.dim() };
        for v in &mut x[range] {
            let z: f64 = rng.sample(StandardNormal);
            *v += T::of(scale * z);
        }
        let f = pb.evaluate_p(&x)?;
        let gain = if minimize { base - f } else { f - base };
        worst = worst.max(gain);
    }
    Ok(worst)
}

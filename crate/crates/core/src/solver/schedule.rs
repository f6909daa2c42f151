use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Which outer index the inner step size is tied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EtaXVariant {
    /// `η_x^k = 1 / (τ_x^k T)`, the per-round choice the convergence
    /// telescoping relies on.
    #[default]
    PerRound,
    /// `η_x^k = 1 / (τ_x^K T)` for every round.
    FinalRound,
}

impl EtaXVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            EtaXVariant::PerRound => "per_round",
            EtaXVariant::FinalRound => "final_round",
        }
    }
}

/// Step sizes and momentum weights for every outer iteration.
///
/// Arrays indexed by `k` cover `0..=K` so that ratios involving `k + 1`
/// stay defined at `k = K − 1`. `lambda[0]` is unused.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule<T: Scalar> {
    pub outer: usize,
    pub inner: usize,
    pub r: T,
    pub chi: T,
    pub variant: EtaXVariant,
    pub r_x: T,
    pub r_yz: T,
    pub tau_x: T,
    pub eta_y: T,
    pub eta_z: T,
    pub alpha: Vec<T>,
    pub gamma: Vec<T>,
    pub tau_x_k: Vec<T>,
    pub eta_x_k: Vec<T>,
    pub eta_y_k: Vec<T>,
    pub eta_z_k: Vec<T>,
    pub beta: Vec<T>,
    pub sigma_k: Vec<T>,
    pub theta_z_k: Vec<T>,
    pub lambda: Vec<T>,
}

/// `α_k = 3 / (k + 3)`.
#[inline]
pub fn alpha<T: Scalar>(k: usize) -> T {
    T::of(3.0) / T::of(k as f64 + 3.0)
}

/// Weight of `x̄^k` inside a run that continues past `k`:
/// `α_{k−1}^{−2} + α_k^{−1} − α_k^{−2}`.
pub fn lambda_interior<T: Scalar>(k: usize) -> T {
    debug_assert!(k >= 1);
    let prev = T::one() / alpha::<T>(k - 1);
    let cur = T::one() / alpha::<T>(k);
    prev * prev + cur - cur * cur
}

/// Weight of the last bar-iterate of a run with `K = k` rounds: `α_{k−1}^{−2}`.
pub fn lambda_terminal<T: Scalar>(k: usize) -> T {
    debug_assert!(k >= 1);
    let prev = T::one() / alpha::<T>(k - 1);
    prev * prev
}

impl<T: Scalar> Schedule<T> {
    pub fn build(outer: usize, inner: usize, r: T, chi: T) -> Result<Self> {
        Self::build_with_variant(outer, inner, r, chi, EtaXVariant::PerRound)
    }

    pub fn build_with_variant(
        outer: usize,
        inner: usize,
        r: T,
        chi: T,
        variant: EtaXVariant,
    ) -> Result<Self> {
        if outer == 0 || inner == 0 {
            return Err(Error::InvalidParameter("K and T must be at least 1".into()));
        }
        if !(r > T::zero()) || !r.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "schedule needs r > 0 (got {r}); regularize monotone problems first"
            )));
        }
        if !(chi >= T::one()) || !chi.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "chi must be finite and >= 1 (got {chi})"
            )));
        }
        let two = T::of(2.0);
        let r_x = T::of(2.0 / 3.0) * r;
        let r_yz = T::of(3.0) / r;
        let tau_x = r_x / two;
        let eta_y = T::one() / (T::of(4.0) * r_yz);
        let eta_z = T::one() / (T::of(10.0) * r_yz * chi * chi);

        let alpha: Vec<T> = (0..=outer).map(alpha::<T>).collect();
        let gamma = (0..=outer)
            .map(|k| T::of(k as f64 + 2.0) / T::of(k as f64 + 3.0))
            .collect();
        let tau_x_k: Vec<T> = alpha.iter().map(|&a| tau_x / a).collect();
        let eta_y_k = alpha.iter().map(|&a| eta_y / a).collect();
        let eta_z_k = alpha.iter().map(|&a| eta_z / a).collect();
        let t_inner = T::of(inner as f64);
        let eta_x_k = (0..=outer)
            .map(|k| match variant {
                EtaXVariant::PerRound => T::one() / (tau_x_k[k] * t_inner),
                EtaXVariant::FinalRound => T::one() / (tau_x_k[outer] * t_inner),
            })
            .collect();
        let beta = vec![r_x; outer + 1];
        let sigma_k = tau_x_k.iter().map(|&tk| tk / (two * tk + r_x)).collect();
        let theta_z_k = vec![T::one() / (two * r_yz); outer + 1];
        let mut lambda = vec![T::zero(); outer + 1];
        for (k, l) in lambda.iter_mut().enumerate().take(outer).skip(1) {
            *l = lambda_interior(k);
        }
        lambda[outer] = lambda_terminal(outer);

        Ok(Self {
            outer,
            inner,
            r,
            chi,
            variant,
            r_x,
            r_yz,
            tau_x,
            eta_y,
            eta_z,
            alpha,
            gamma,
            tau_x_k,
            eta_x_k,
            eta_y_k,
            eta_z_k,
            beta,
            sigma_k,
            theta_z_k,
            lambda,
        })
    }

    /// Every step size and weight the algorithm reads, for validation.
    pub fn all_parameters(&self) -> impl Iterator<Item = T> + '_ {
        let k = self.outer;
        [self.r_x, self.r_yz, self.tau_x, self.eta_y, self.eta_z]
            .into_iter()
            .chain(self.alpha[..k].iter().copied())
            .chain(self.gamma[..k].iter().copied())
            .chain(self.tau_x_k[..=k].iter().copied())
            .chain(self.eta_x_k[..k].iter().copied())
            .chain(self.eta_y_k[..k].iter().copied())
            .chain(self.eta_z_k[..=k].iter().copied())
            .chain(self.beta[..k].iter().copied())
            .chain(self.sigma_k[..k].iter().copied())
            .chain(self.theta_z_k[..k].iter().copied())
            .chain(self.lambda[1..=k].iter().copied())
    }
}

//! Gossip matrices for time-varying graphs.
//!
//! Each round's matrix is the combinatorial Laplacian scaled by its largest
//! eigenvalue, `W = L / λ_max(L)`. It has zero row and column sums, respects
//! the sparsity of the round's edges and, on the zero-sum subspace, has
//! eigenvalues in `(0, 1]` whenever the round is connected. The condition
//! number `χ` is the smallest value with
//! `‖W x − x‖² ≤ (1 − 1/χ) ‖x‖²` for every zero-sum `x` and every round.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::netgraph::{is_connected, EdgeSet, TimeVaryingGraph};
use crate::scalar::Scalar;
use crate::stacked::StackedVector;

pub fn laplacian<T: Scalar>(edges: &EdgeSet, n: usize) -> DMatrix<T> {
    let mut l = DMatrix::zeros(n, n);
    for &(u, v) in edges {
        l[(u, v)] -= T::one();
        l[(v, u)] -= T::one();
        l[(u, u)] += T::one();
        l[(v, v)] += T::one();
    }
    l
}

/// Ascending eigenvalues of a symmetric matrix.
fn sorted_eigenvalues<T: Scalar>(m: &DMatrix<T>) -> Vec<T> {
    let mut ev: Vec<T> = SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| a.partial_cmp(b).expect("eigenvalues of a finite matrix"));
    ev
}

/// `W = L / λ_max(L)` for a connected edge set.
pub fn build_gossip<T: Scalar>(edges: &EdgeSet, n: usize) -> Result<DMatrix<T>> {
    Ok(build_gossip_with_spectrum(edges, n)?.0)
}

/// Spectral summary of one round's gossip matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundSpectrum<T> {
    /// Largest Laplacian eigenvalue (the scaling factor).
    pub lambda_max: T,
    /// Smallest nonzero Laplacian eigenvalue.
    pub lambda_min_pos: T,
    /// `χ` certified by this round alone.
    pub chi: T,
}

fn build_gossip_with_spectrum<T: Scalar>(
    edges: &EdgeSet,
    n: usize,
) -> Result<(DMatrix<T>, RoundSpectrum<T>)> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "gossip matrix needs at least one node".into(),
        ));
    }
    if edges.iter().any(|&(u, v)| u >= n || v >= n || u == v) {
        return Err(Error::InvalidParameter(
            "edge endpoints out of range".into(),
        ));
    }
    if !is_connected(edges, n) {
        return Err(Error::Disconnected { n });
    }
    if n == 1 {
        // the zero-sum subspace of R^1 is {0}
        let spectrum = RoundSpectrum {
            lambda_max: T::zero(),
            lambda_min_pos: T::zero(),
            chi: T::one(),
        };
        return Ok((DMatrix::zeros(1, 1), spectrum));
    }
    let l = laplacian::<T>(edges, n);
    let ev = sorted_eigenvalues(&l);
    let lambda_max = ev[n - 1];
    let w = l / lambda_max;
    // the smallest eigenvalue belongs to the all-ones vector; the rest act on
    // the zero-sum subspace
    let worst = ev[1..]
        .iter()
        .map(|&lam| {
            let d = T::one() - lam / lambda_max;
            d * d
        })
        .fold(T::zero(), |a, b| if b > a { b } else { a });
    let chi = chi_from_contraction(worst)?;
    Ok((
        w,
        RoundSpectrum {
            lambda_max,
            lambda_min_pos: ev[1],
            chi,
        },
    ))
}

fn chi_from_contraction<T: Scalar>(worst_ratio: T) -> Result<T> {
    let slack = T::one() - worst_ratio;
    if slack <= T::zero() {
        return Err(Error::InvalidParameter(format!(
            "gossip matrix does not contract the zero-sum subspace (ratio {worst_ratio})"
        )));
    }
    let chi = T::one() / slack;
    Ok(if chi < T::one() { T::one() } else { chi })
}

/// Smallest `χ` valid for the zero-sum spectrum of an arbitrary symmetric
/// gossip matrix with `W 1 = 0`.
pub fn chi_of_matrix<T: Scalar>(w: &DMatrix<T>) -> Result<T> {
    let n = w.nrows();
    if n <= 1 {
        return Ok(T::one());
    }
    let ev = sorted_eigenvalues(w);
    // drop the eigenvalue closest to zero: that is the consensus direction
    let zero_idx = ev
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let worst = ev
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != zero_idx)
        .map(|(_, &mu)| (T::one() - mu) * (T::one() - mu))
        .fold(T::zero(), |a, b| if b > a { b } else { a });
    chi_from_contraction(worst)
}

/// Smallest `χ` satisfying the contraction bound on rounds `0..rounds`.
pub fn certify_chi<T: Scalar>(g: &TimeVaryingGraph, rounds: usize) -> Result<T> {
    Ok(GossipOperator::<T>::new(g.clone(), rounds, 1)?.chi())
}

/// `(W ⊗ I_d) x`: block `i` of the output is `Σ_j W_ij x_j`.
pub fn apply_gossip<T: Scalar>(w: &DMatrix<T>, x: &StackedVector<T>) -> Result<StackedVector<T>> {
    if w.nrows() != x.n_blocks() || w.ncols() != x.n_blocks() {
        return Err(Error::DimensionMismatch {
            expected: w.ncols(),
            got: x.n_blocks(),
        });
    }
    Ok(StackedVector::from_matrix(w * x.matrix()))
}

/// Orthogonal projection onto the zero-block-sum subspace: subtracts the
/// across-node mean from every block.
pub fn project_consensus_complement<T: Scalar>(x: &StackedVector<T>) -> StackedVector<T> {
    let mean = x.block_mean();
    let mut out = x.clone();
    for mut row in out.matrix_mut().row_iter_mut() {
        for (v, &m) in row.iter_mut().zip(&mean) {
            *v -= m;
        }
    }
    out
}

/// One communication round: mixes a stacked vector across neighbours.
pub trait Mixer<T: Scalar> {
    fn n_nodes(&self) -> usize;

    fn mix(&self, k: usize, x: &StackedVector<T>) -> StackedVector<T>;

    /// Condition number the mixing satisfies over the rounds it serves.
    fn chi(&self) -> T;
}

/// Per-round gossip matrices for a time-varying graph together with their
/// certified condition number.
#[derive(Debug, Clone)]
pub struct GossipOperator<T: Scalar> {
    graph: TimeVaryingGraph,
    chi: T,
    block_dim: usize,
    matrices: Vec<DMatrix<T>>,
    spectra: Vec<RoundSpectrum<T>>,
}

impl<T: Scalar> GossipOperator<T> {
    /// Builds and certifies `W(k)` for `k in 0..rounds` (a single matrix for
    /// static graphs).
    pub fn new(graph: TimeVaryingGraph, rounds: usize, block_dim: usize) -> Result<Self> {
        if rounds == 0 {
            return Err(Error::InvalidParameter(
                "certification needs at least one round".into(),
            ));
        }
        let n = graph.n_nodes();
        let stored = if graph.is_static() { 1 } else { rounds };
        let mut matrices = Vec::with_capacity(stored);
        let mut spectra = Vec::with_capacity(stored);
        for k in 0..stored {
            let (w, s) = build_gossip_with_spectrum(&graph.edges_at(k), n)?;
            matrices.push(w);
            spectra.push(s);
        }
        let chi = spectra
            .iter()
            .map(|s| s.chi)
            .fold(T::one(), |a, b| if b > a { b } else { a });
        Ok(Self {
            graph,
            chi,
            block_dim,
            matrices,
            spectra,
        })
    }

    pub fn graph(&self) -> &TimeVaryingGraph {
        &self.graph
    }

    /// Largest per-round `χ`.
    pub fn chi(&self) -> T {
        self.chi
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    pub fn rounds(&self) -> usize {
        self.matrices.len()
    }

    pub fn spectra(&self) -> &[RoundSpectrum<T>] {
        &self.spectra
    }

    /// `W(k)`. Rounds past the certified horizon wrap around the stored
    /// schedule so `χ` stays valid.
    pub fn matrix_at(&self, k: usize) -> &DMatrix<T> {
        &self.matrices[k % self.matrices.len()]
    }
}

impl<T: Scalar> Mixer<T> for GossipOperator<T> {
    fn n_nodes(&self) -> usize {
        self.graph.n_nodes()
    }

    fn mix(&self, k: usize, x: &StackedVector<T>) -> StackedVector<T> {
        StackedVector::from_matrix(self.matrix_at(k) * x.matrix())
    }

    fn chi(&self) -> T {
        self.chi
    }
}

/// Exact averaging: replaces gossip by the projection onto the zero-sum
/// subspace (`χ = 1`).
#[derive(Debug, Clone, Copy)]
pub struct ConsensusProjection {
    pub n_nodes: usize,
}

impl<T: Scalar> Mixer<T> for ConsensusProjection {
    fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    fn mix(&self, _k: usize, x: &StackedVector<T>) -> StackedVector<T> {
        project_consensus_complement(x)
    }

    fn chi(&self) -> T {
        T::one()
    }
}

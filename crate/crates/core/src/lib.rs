//! Accelerated forward-backward solver for non-smooth stochastic
//! decentralized optimization and saddle-point problems over time-varying
//! gossip networks.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below fix it to double precision, which is what the CLI
//! harness uses.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gossip;
pub mod harness;
pub mod netgraph;
pub mod problems;
pub mod rng;
pub mod scalar;
pub mod solver;
pub mod stacked;
pub mod verify;

pub use error::{Error, Result};
pub use gossip::{
    apply_gossip, build_gossip, certify_chi, project_consensus_complement, ConsensusProjection,
    GossipOperator, Mixer,
};
pub use netgraph::{generate_erdos_renyi, is_connected, EdgeSet, ScheduleKind, TimeVaryingGraph};
pub use problems::{
    AsymmetricRegularization, CoordinateMap, OperatorOracle, ProblemInstance, ProblemKind,
    StochasticOracle, ZeroOracle,
};
pub use scalar::Scalar;
pub use solver::{EtaXVariant, RunOptions, RunResult, Schedule, SolverState};
pub use stacked::StackedVector;
pub use verify::Certificate;

pub type StackedVector64 = StackedVector<f64>;
pub type StackedVector32 = StackedVector<f32>;
pub type GossipOperator64 = GossipOperator<f64>;
pub type ProblemInstance64 = ProblemInstance<f64>;
pub type ProblemInstance32 = ProblemInstance<f32>;
pub type Schedule64 = Schedule<f64>;
pub type Schedule32 = Schedule<f32>;
pub type SolverState64 = SolverState<f64>;
pub type RunResult64 = RunResult<f64>;
pub type Certificate64 = Certificate<f64>;

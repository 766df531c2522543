use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("singular beamforming pair: beta is zero")]
    SingularBeam,
    #[error("configuration error: {0}")]
    Config(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("graph is not strongly connected: node {from} cannot reach node {to}")]
    NotStronglyConnected { from: usize, to: usize },
    #[error("no directed cycle passes through node {0}")]
    NoCycle(usize),
    #[error("infeasible network: {0}")]
    Infeasible(Infeasibility),
    #[error("T = {t} is outside the loop-free regime (requires T < {limit})")]
    Regime { t: u32, limit: u32 },
    #[error("confidence {p_tau} not attained by T = {cap}; p_G(cap) = {p_at_cap}")]
    NotAttained { cap: u32, p_at_cap: f64, p_tau: f64 },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("bin layout or condition count mismatch")]
    BinMismatch,
}

/// Why a network cannot be formed at the current UAV positions. Formation
/// never relocates UAVs; it only says which nodes would have to move.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Infeasibility {
    BudgetExceeded { needed: usize, budget: usize },
    EmptyFeasibleSet(Vec<usize>),
    Uncovered(Vec<usize>),
    NoHamiltonianCycle,
}

impl fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Infeasibility::BudgetExceeded { needed, budget } => {
                write!(f, "out-degree budgets need {needed} resource blocks, only {budget} available")
            }
            Infeasibility::EmptyFeasibleSet(ids) => {
                write!(f, "nodes {ids:?} cannot serve enough neighbors; relocation needed")
            }
            Infeasibility::Uncovered(ids) => {
                write!(f, "nodes {ids:?} are unreachable from every other node; relocation needed")
            }
            Infeasibility::NoHamiltonianCycle => {
                write!(f, "feasible sets admit no spanning ring; relocation needed")
            }
        }
    }
}

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}

use thiserror::Error;

/// Failure modes shared by all numerical routines in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point {x} lies outside the support ({lo}, {hi})")]
    OutOfSupport { x: f64, lo: f64, hi: f64 },

    #[error("unknown potential `{0}`")]
    UnknownPotential(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("potential `{0}` is not perturbed strictly convex")]
    NonAdmissible(String),

    #[error("density is not integrable: {0}")]
    NonIntegrable(String),

    #[error("density has no finite maximum")]
    DegenerateDensity,

    #[error("oscillatory quadrature needs {panels} panels (budget {budget})")]
    OscillationBudgetExceeded { panels: usize, budget: usize },

    #[error("no convergence after {iterations} iterations: {state}")]
    NoConvergence { iterations: usize, state: String },

    #[error("reliable window collapsed to [{lo}, {hi}]")]
    WindowExhausted { lo: f64, hi: f64 },

    #[error("Hamiltonian is not convex: H'' = {value} at x = {x}")]
    NonConvexHamiltonian { x: f64, value: f64 },

    #[error("function takes a negative value {value} at x = {x}")]
    NegativeFunction { x: f64, value: f64 },

    #[error("function is not strictly positive on the grid")]
    NonPositiveFunction,

    #[error("coarse-graining needs an even dimension, got {0}")]
    OddDimension(usize),

    #[error("grid of {requested} nodes exceeds budget {budget}")]
    GridBudgetExceeded { requested: usize, budget: usize },

    #[error("eigensolver failed: {0}")]
    EigensolveFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Error surface shared by every module in the crate.

use thiserror::Error;

use crate::state::MAX_ATOMS;

/// Anything that can go wrong while building states, sweeping photons,
/// running an evolution driver, or fitting a scaling law.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SrsError {
    /// Atom count exceeds the occupation-mask capacity.
    #[error("medium of {m} atoms exceeds the {MAX_ATOMS}-atom occupation-mask capacity")]
    TooManyAtoms { m: usize },

    /// Two states over different atom counts were combined.
    #[error("atom counts differ: {left} vs {right}")]
    AtomCountMismatch { left: usize, right: usize },

    /// An operation that needs a normalizable state received the zero vector.
    #[error("{op} is undefined on a zero-norm state")]
    ZeroState { op: &'static str },

    /// The medium has no atoms but the operation needs at least one.
    #[error("{op} needs a medium of at least one atom")]
    EmptyMedium { op: &'static str },

    /// Coupling angle outside [0, pi/2].
    #[error("coupling angle {j} lies outside [0, pi/2]")]
    InvalidCoupling { j: f64 },

    /// The decay constant disagrees with coupling^2 x photon flux.
    #[error("decay constant {gamma} inconsistent with j^2*flux = {expected}")]
    InconsistentRates { gamma: f64, expected: f64 },

    /// A caller-supplied argument was out of its documented range.
    #[error("{op}: {reason}")]
    InvalidArgument { op: &'static str, reason: String },

    /// Live branch count exceeded the exact-tree budget.
    #[error(
        "branch budget {budget} exceeded at photon {photon} ({live} live branches); \
         raise the budget, prune harder, or switch to the mixed-state or trajectory driver"
    )]
    BranchBudget {
        photon: usize,
        live: usize,
        budget: usize,
    },

    /// Atom count exceeds the dense mixed-state cap.
    #[error(
        "{m} atoms exceeds the dense mixed-state cap of {cap}; \
         use the trajectory sampler or raise the cap explicitly"
    )]
    SectorCapExceeded { m: usize, cap: usize },

    /// A derived quantity needs a model parameter that was never supplied.
    #[error("{op} needs the {missing} parameter, which is not set")]
    MissingParameter {
        op: &'static str,
        missing: &'static str,
    },

    /// The requested closed form is only defined for a single atom.
    #[error("{op} is defined for a single-atom medium, got {m} atoms")]
    SingleAtomOnly { op: &'static str, m: usize },

    /// A log-log fit was asked for with too few usable points.
    #[error("fit needs at least {needed} usable points, got {got}")]
    FitUnderdetermined { needed: usize, got: usize },

    /// Every fit point was flagged away, or the abscissae are indistinct.
    #[error("fit degenerate: {reason}")]
    DegenerateFit { reason: String },

    /// Pulse metrics need a minimum series length.
    #[error("pulse metrics need a series of at least {needed} points, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    /// A serialized state failed validation on load.
    #[error("invalid state payload: {reason}")]
    InvalidStatePayload { reason: String },
}

pub type SrsResult<T> = Result<T, SrsError>;

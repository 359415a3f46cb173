//! Simulation core for multi-photon stimulated Raman scattering in a chain
//! of M two-level atoms.
//!
//! Photons enter one at a time, travel through the medium in a fixed
//! direction, and either keep their species or convert at exactly one point
//! along the chain per pass, exchanging an excitation with an atom. The
//! crate tracks the medium exactly in three interchangeable ways:
//!
//! - [`evolve::run_exact_tree`] — every outcome history as an unnormalized
//!   pure-state branch;
//! - [`evolve::run_kraus`] — the photon-averaged mixed state, one dense
//!   block per excitation sector;
//! - [`evolve::run_mc`] — trajectory sampling with a reproducible,
//!   thread-count-independent seeding discipline.
//!
//! All three share the same per-photon building block, the atom-by-atom
//! [`sweep`](sweep::sweep), and agree with the closed forms collected in
//! [`observables`]; the test surface holds them against each other.

pub mod error;
pub mod evolve;
pub mod observables;
pub mod sector;
pub mod state;
pub mod sweep;

pub use error::{SrsError, SrsResult};
pub use evolve::{
    run_exact_tree, run_exact_tree_traced, run_kraus, run_kraus_with_cap, run_mc, BranchNode,
    KrausRun, SectorMixture, StepRecord, TrajectoryStats, TreeRun, DEFAULT_BRANCH_BUDGET,
    DEFAULT_SECTOR_CAP,
};
pub use observables::{
    cooperative_slope, decay_comparison, expansion_residual_fit, fit_loglog, pulse_metrics,
    second_photon_ratio, sf_limit_fit, survival_amplitude, CooperativeFit, CooperativePoint,
    DecayComparison, PulseMetrics, RatioCheck, ScalingFit,
};
pub use sector::{sector_dim, AtomPairing, SectorBasis};
pub use state::{
    AmplitudeEntry, BasisConfig, MediumState, ModelParams, DEFAULT_AMP_PRUNE, MAX_ATOMS,
};
pub use sweep::{
    first_photon_wavefunction, sweep, sweep_with_conversion_cap, PhotonSpin, SweepResult,
    VertexRules,
};

/// The complex scalar used throughout the crate.
pub use num_complex::Complex64;

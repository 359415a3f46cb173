//! Drivers that push the medium through a whole photon stream.
//!
//! Three interchangeable modes share the per-photon sweep:
//!
//! * [`tree`] — keep every branch of the exiting photons' outcome tree as an
//!   unnormalized pure state (exact, exponential in photon count, but
//!   polynomial in atom count for short streams);
//! * [`kraus`] — trace each exiting photon out and evolve the resulting
//!   mixed state, which stays block-diagonal over excitation sectors
//!   (exact, polynomial in photon count, exponential in atom count);
//! * [`mc`] — sample single trajectories by drawing each photon's exit and
//!   renormalizing (statistical, cheap, embarrassingly parallel).

pub mod kraus;
pub mod mc;
pub mod tree;

pub use kraus::{run_kraus, run_kraus_with_cap, KrausRun, SectorMixture, DEFAULT_SECTOR_CAP};
pub use mc::{run_mc, TrajectoryStats};
pub use tree::{run_exact_tree, run_exact_tree_traced, BranchNode, TreeRun, DEFAULT_BRANCH_BUDGET};

use serde::Serialize;

/// Per-photon marginals and medium diagnostics, one record per photon.
///
/// `p_elastic`/`p_inelastic` refer to the photon keeping/flipping its
/// incoming species; `stokes_stderr` is the binomial standard error of the
/// inelastic frequency and is only present in Monte Carlo mode. The
/// excitation mean and sector entropy describe the medium *after* the
/// photon has exited.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    pub p_elastic: f64,
    pub p_inelastic: f64,
    pub stokes_stderr: Option<f64>,
    pub mean_excitation: f64,
    pub sector_entropy: f64,
}

/// Shannon entropy (natural log) of a nonnegative weight vector,
/// normalized to total weight 1; zero weights contribute nothing.
pub(crate) fn weight_entropy<I>(weights: I) -> f64
where
    I: IntoIterator<Item = f64> + Clone,
{
    let total: f64 = weights.clone().into_iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mut h = 0.0;
    for w in weights {
        if w > 0.0 {
            let x = w / total;
            h -= x * x.ln();
        }
    }
    h
}

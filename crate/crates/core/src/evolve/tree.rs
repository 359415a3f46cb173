//! Exact branch-tree evolution: one unnormalized pure state per outcome
//! history of the exiting photons.
//!
//! After `n` photons the maximal tree holds `2^n` branches, so this driver
//! suits short streams; its advantage is that branch support only grows
//! with the number of inelastic events, which keeps two-photon experiments
//! polynomial even for very wide media.

use crate::error::{SrsError, SrsResult};
use crate::evolve::{weight_entropy, StepRecord};
use crate::state::{MediumState, ModelParams};
use crate::sweep::{sweep, PhotonSpin};

/// Default ceiling on simultaneously live branches.
pub const DEFAULT_BRANCH_BUDGET: usize = 1 << 20;

/// One leaf of the outcome tree.
///
/// `outcome_history[i]` is the exit species of photon `i+1`; `state` is the
/// unnormalized medium state conditioned on that history, and `probability`
/// its squared norm. Branches with identical inelastic counts but different
/// conversion photons are kept separate — the tree remembers *which* photon
/// converted, and only amplitudes within one history add coherently.
#[derive(Clone, Debug)]
pub struct BranchNode {
    pub outcome_history: Vec<PhotonSpin>,
    pub state: MediumState,
    pub probability: f64,
}

/// A traced tree run: the surviving leaves plus per-photon records.
#[derive(Clone, Debug)]
pub struct TreeRun {
    pub branches: Vec<BranchNode>,
    pub steps: Vec<StepRecord>,
}

/// Evolve `initial` through the photon stream, keeping every outcome branch
/// with probability at least `prune_eps` (branches of exactly zero
/// probability are never enumerated). With `prune_eps = 0` the surviving
/// probabilities sum to the input's squared norm up to roundoff.
pub fn run_exact_tree(
    params: &ModelParams,
    initial: &MediumState,
    spins_in: &[PhotonSpin],
    prune_eps: f64,
) -> SrsResult<Vec<BranchNode>> {
    run_exact_tree_traced(params, initial, spins_in, prune_eps, DEFAULT_BRANCH_BUDGET)
        .map(|run| run.branches)
}

/// [`run_exact_tree`] with an explicit live-branch budget, also returning
/// the per-photon marginal records.
///
/// Per-photon marginals are sums over the retained branches, so with
/// nonzero pruning they may total slightly below 1; the medium diagnostics
/// are weighted over the retained branches and renormalized.
pub fn run_exact_tree_traced(
    params: &ModelParams,
    initial: &MediumState,
    spins_in: &[PhotonSpin],
    prune_eps: f64,
    branch_budget: usize,
) -> SrsResult<TreeRun> {
    if initial.m() != params.m() {
        return Err(SrsError::AtomCountMismatch {
            left: initial.m(),
            right: params.m(),
        });
    }
    if initial.is_zero() || initial.norm_sq() == 0.0 {
        return Err(SrsError::ZeroState { op: "exact tree" });
    }
    if !prune_eps.is_finite() || prune_eps < 0.0 {
        return Err(SrsError::InvalidArgument {
            op: "exact tree",
            reason: format!("prune threshold must be finite and >= 0, got {prune_eps}"),
        });
    }
    if branch_budget == 0 {
        return Err(SrsError::InvalidArgument {
            op: "exact tree",
            reason: "branch budget must be >= 1".into(),
        });
    }

    let mut frontier = vec![BranchNode {
        outcome_history: Vec::new(),
        state: initial.clone(),
        probability: initial.norm_sq(),
    }];
    let mut steps = Vec::with_capacity(spins_in.len());

    for (index, &spin) in spins_in.iter().enumerate() {
        let photon = index + 1;
        let mut next: Vec<BranchNode> = Vec::with_capacity(frontier.len() * 2);
        let mut p_elastic = 0.0;
        let mut p_inelastic = 0.0;

        for branch in &frontier {
            let out = sweep(&branch.state, spin, params)?;
            p_elastic += out.p_elastic;
            p_inelastic += out.p_inelastic;

            if out.p_elastic > 0.0 && out.p_elastic >= prune_eps {
                let mut history = branch.outcome_history.clone();
                history.push(spin);
                next.push(BranchNode {
                    outcome_history: history,
                    probability: out.p_elastic,
                    state: out.elastic,
                });
            }
            if out.p_inelastic > 0.0 && out.p_inelastic >= prune_eps {
                let mut history = branch.outcome_history.clone();
                history.push(spin.flipped());
                next.push(BranchNode {
                    outcome_history: history,
                    probability: out.p_inelastic,
                    state: out.inelastic,
                });
            }
        }

        if next.is_empty() {
            return Err(SrsError::InvalidArgument {
                op: "exact tree",
                reason: format!(
                    "photon {photon}: every branch fell below the prune threshold {prune_eps}"
                ),
            });
        }
        if next.len() > branch_budget {
            return Err(SrsError::BranchBudget {
                photon,
                live: next.len(),
                budget: branch_budget,
            });
        }

        // Every branch lives in a single sector, so its mean excitation is
        // the sector number itself.
        let retained: f64 = next.iter().map(|b| b.probability).sum();
        let mean_excitation = next
            .iter()
            .map(|b| b.state.sector() as f64 * b.probability)
            .sum::<f64>()
            / retained;
        let mut sector_weights = vec![0.0; params.m() + 2];
        for b in &next {
            sector_weights[b.state.sector()] += b.probability;
        }
        steps.push(StepRecord {
            p_elastic,
            p_inelastic,
            stokes_stderr: None,
            mean_excitation,
            sector_entropy: weight_entropy(sector_weights.iter().copied()),
        });

        frontier = next;
    }

    Ok(TreeRun {
        branches: frontier,
        steps,
    })
}

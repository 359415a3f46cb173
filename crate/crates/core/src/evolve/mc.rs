//! Monte Carlo trajectory unraveling of the photon-by-photon channel.
//!
//! Each trajectory carries a pure medium state. For every incoming photon
//! the sweep splits the state into its elastic and converted parts; the
//! exit species is drawn Bernoulli with the converted weight, the matching
//! branch is renormalized and carried forward. Ensemble frequencies then
//! estimate the exact mixed-state marginals with binomial error bars —
//! this is the only mode that scales past the dense-block atom cap.
//!
//! Reproducibility contract: trajectory `t` owns stream `seed XOR t` of a
//! counter-based generator, trajectories are scored in fixed batches, and
//! batch partials are merged in index order — so results are byte-identical
//! for a fixed seed no matter how many threads the pool has. Draws with a
//! forced outcome (converted weight exactly 0 or 1) consume no randomness;
//! that, too, is part of the contract.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{SrsError, SrsResult};
use crate::evolve::{weight_entropy, StepRecord};
use crate::sector::{AtomPairing, SectorBasis};
use crate::state::{MediumState, ModelParams};
use crate::sweep::{sweep, PhotonSpin};

/// Trajectories per work unit; batches are scored independently and merged
/// in order, which pins the floating-point summation order.
const MC_BATCH: usize = 64;

/// Largest sector dimension for which trajectories run on dense per-sector
/// vectors; above it they fall back to sorted-map states. The choice
/// depends only on the run configuration, never on runtime load.
const DENSE_AMP_LIMIT: usize = 1 << 17;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Ensemble tallies from a trajectory run.
///
/// All fields are sums, so partial results merge associatively and
/// commutatively; the run driver nevertheless merges in fixed order to keep
/// the floating-point profile sums bit-stable.
#[derive(Clone, Debug)]
pub struct TrajectoryStats {
    m: usize,
    trials: u64,
    master_seed: u64,
    /// Per photon: how many trajectories converted the species.
    converted_counts: Vec<u64>,
    /// Per photon: trajectory count per medium sector, after the photon.
    sector_counts: Vec<Vec<u64>>,
    /// Per atom: sum over trajectories of the final excitation probability.
    profile_sum: Vec<f64>,
}

impl TrajectoryStats {
    fn empty(m: usize, photons: usize, master_seed: u64) -> Self {
        Self {
            m,
            trials: 0,
            master_seed,
            converted_counts: vec![0; photons],
            sector_counts: vec![vec![0; m + 1]; photons],
            profile_sum: vec![0.0; m],
        }
    }

    fn merge(mut self, other: &Self) -> Self {
        debug_assert_eq!(self.master_seed, other.master_seed);
        self.trials += other.trials;
        for (a, b) in self
            .converted_counts
            .iter_mut()
            .zip(&other.converted_counts)
        {
            *a += b;
        }
        for (row_a, row_b) in self.sector_counts.iter_mut().zip(&other.sector_counts) {
            for (a, b) in row_a.iter_mut().zip(row_b) {
                *a += b;
            }
        }
        for (a, b) in self.profile_sum.iter_mut().zip(&other.profile_sum) {
            *a += b;
        }
        self
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn photons(&self) -> usize {
        self.converted_counts.len()
    }

    /// Raw per-photon conversion tallies (exact integers; the strongest
    /// reproducibility comparison available).
    pub fn converted_counts(&self) -> &[u64] {
        &self.converted_counts
    }

    /// Fraction of trajectories that converted photon `n` (0-based).
    pub fn converted_frequency(&self, n: usize) -> f64 {
        self.converted_counts[n] as f64 / self.trials as f64
    }

    /// Binomial standard error of [`Self::converted_frequency`],
    /// `sqrt(f(1-f)/trials)`.
    pub fn converted_stderr(&self, n: usize) -> f64 {
        let f = self.converted_frequency(n);
        (f * (1.0 - f) / self.trials as f64).sqrt()
    }

    /// Ensemble mean of the medium sector after photon `n`.
    pub fn mean_excitation(&self, n: usize) -> f64 {
        let total: u64 = self.sector_counts[n].iter().sum();
        if total == 0 {
            return 0.0;
        }
        self.sector_counts[n]
            .iter()
            .enumerate()
            .map(|(k, &c)| k as f64 * c as f64)
            .sum::<f64>()
            / total as f64
    }

    /// Shannon entropy (natural log) of the empirical sector distribution
    /// after photon `n`.
    pub fn sector_entropy(&self, n: usize) -> f64 {
        weight_entropy(self.sector_counts[n].iter().map(|&c| c as f64))
    }

    /// Ensemble mean of the final per-atom excitation probabilities.
    pub fn final_profile_mean(&self) -> Vec<f64> {
        self.profile_sum
            .iter()
            .map(|s| s / self.trials as f64)
            .collect()
    }

    /// Per-photon records in the shared step format; the conversion
    /// frequency plays the role of the inelastic weight.
    pub fn steps(&self) -> Vec<StepRecord> {
        (0..self.photons())
            .map(|n| {
                let f = self.converted_frequency(n);
                StepRecord {
                    p_elastic: 1.0 - f,
                    p_inelastic: f,
                    stokes_stderr: Some(self.converted_stderr(n)),
                    mean_excitation: self.mean_excitation(n),
                    sector_entropy: self.sector_entropy(n),
                }
            })
            .collect()
    }
}

/// Run `trials` independent trajectories of the photon stream and tally
/// them. Results are reproducible for a fixed `seed` independent of thread
/// count; see the module notes for the discipline.
pub fn run_mc(
    params: &ModelParams,
    initial: &MediumState,
    spins_in: &[PhotonSpin],
    trials: u64,
    seed: u64,
) -> SrsResult<TrajectoryStats> {
    if trials == 0 {
        return Err(SrsError::InvalidArgument {
            op: "run_mc",
            reason: "trials must be at least 1".into(),
        });
    }
    if initial.m() != params.m() {
        return Err(SrsError::AtomCountMismatch {
            left: initial.m(),
            right: params.m(),
        });
    }
    let start = initial.normalized()?;
    let engine = TrajectoryEngine::build(params, &start, spins_in)?;

    let photons = spins_in.len();
    let m = params.m();
    let batches = trials.div_ceil(MC_BATCH as u64);
    let partials: Vec<TrajectoryStats> = (0..batches)
        .into_par_iter()
        .map(|batch| {
            let first = batch * MC_BATCH as u64;
            let count = (MC_BATCH as u64).min(trials - first);
            let mut stats = TrajectoryStats::empty(m, photons, seed);
            for t in first..first + count {
                engine.score_one(t, seed, &mut stats);
            }
            stats
        })
        .collect();

    let mut merged = TrajectoryStats::empty(m, photons, seed);
    for part in &partials {
        merged = merged.merge(part);
    }
    Ok(merged)
}

/// Immutable per-run context shared by all trajectories: the photon
/// pattern, the coupling, the initial state in its working representation,
/// and (in dense mode) the sector bases and atom pairings.
enum TrajectoryEngine<'a> {
    Dense {
        params: &'a ModelParams,
        spins: &'a [PhotonSpin],
        start_sector: usize,
        start_vec: Vec<C64>,
        bases: BTreeMap<usize, SectorBasis>,
        pairings: BTreeMap<usize, AtomPairing>,
    },
    Sparse {
        params: &'a ModelParams,
        spins: &'a [PhotonSpin],
        start: MediumState,
    },
}

impl<'a> TrajectoryEngine<'a> {
    fn build(
        params: &'a ModelParams,
        start: &MediumState,
        spins: &'a [PhotonSpin],
    ) -> SrsResult<Self> {
        let m = params.m();
        // Sector bounds reachable from the start over any draw sequence:
        // a pump photon can raise the sector by one, a Stokes photon can
        // lower it by one.
        let mut k_lo = start.sector();
        let mut k_hi = start.sector();
        for spin in spins {
            match spin {
                PhotonSpin::Laser => k_hi = (k_hi + 1).min(m),
                PhotonSpin::Stokes => k_lo = k_lo.saturating_sub(1),
            }
        }
        let widest = (k_lo..=k_hi)
            .map(|k| crate::sector::sector_dim(m, k))
            .max()
            .unwrap_or(1);
        if widest > DENSE_AMP_LIMIT {
            return Ok(Self::Sparse {
                params,
                spins,
                start: start.clone(),
            });
        }

        let mut bases = BTreeMap::new();
        for k in k_lo..=k_hi {
            bases.insert(k, SectorBasis::new(m, k)?);
        }
        let mut pairings = BTreeMap::new();
        for k in k_lo..k_hi {
            let pairing = AtomPairing::new(&bases[&k], &bases[&(k + 1)])?;
            pairings.insert(k, pairing);
        }
        let start_basis = &bases[&start.sector()];
        let mut start_vec = vec![ZERO; start_basis.dim()];
        for (cfg, amp) in start.amplitudes() {
            let idx = start_basis
                .rank(cfg.0)
                .expect("state configs belong to their sector basis");
            start_vec[idx] = amp;
        }
        Ok(Self::Dense {
            params,
            spins,
            start_sector: start.sector(),
            start_vec,
            bases,
            pairings,
        })
    }

    /// Evolve trajectory `t` through the full photon stream and add its
    /// outcomes to `stats`.
    fn score_one(&self, t: u64, seed: u64, stats: &mut TrajectoryStats) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(seed ^ t);
        match self {
            Self::Dense {
                params,
                spins,
                start_sector,
                start_vec,
                bases,
                pairings,
            } => {
                let m = params.m();
                let (b, c) = (params.b(), params.c());
                let mut sector = *start_sector;
                let mut vec = start_vec.clone();
                for (n, &spin) in spins.iter().enumerate() {
                    let frozen = match spin {
                        PhotonSpin::Laser => sector == m,
                        PhotonSpin::Stokes => sector == 0,
                    };
                    if !frozen {
                        let (pair_lo, other) = match spin {
                            PhotonSpin::Laser => (sector, sector + 1),
                            PhotonSpin::Stokes => (sector - 1, sector - 1),
                        };
                        let pairing = &pairings[&pair_lo];
                        let mut shifted = vec![ZERO; bases[&other].dim()];
                        {
                            let (lo, hi) = match spin {
                                PhotonSpin::Laser => (&mut vec, &mut shifted),
                                PhotonSpin::Stokes => (&mut shifted, &mut vec),
                            };
                            crate::sweep::sweep_pair_dense(pairing, b, c, lo, hi);
                        }
                        let p_conv: f64 = shifted.iter().map(|v| v.norm_sqr()).sum();
                        if draw_converts(&mut rng, p_conv) {
                            stats.converted_counts[n] += 1;
                            sector = other;
                            vec = shifted;
                            renormalize_dense(&mut vec, p_conv);
                        } else {
                            let p_keep: f64 = vec.iter().map(|v| v.norm_sqr()).sum();
                            renormalize_dense(&mut vec, p_keep);
                        }
                    }
                    stats.sector_counts[n][sector] += 1;
                }
                let basis = &bases[&sector];
                for (i, amp) in vec.iter().enumerate() {
                    let w = amp.norm_sqr();
                    if w == 0.0 {
                        continue;
                    }
                    let mask = basis.mask(i);
                    for (a, slot) in stats.profile_sum.iter_mut().enumerate() {
                        if mask & (1u64 << a) != 0 {
                            *slot += w;
                        }
                    }
                }
            }
            Self::Sparse {
                params,
                spins,
                start,
            } => {
                let mut state = start.clone();
                for (n, &spin) in spins.iter().enumerate() {
                    let result =
                        sweep(&state, spin, params).expect("validated before the run started");
                    state = if draw_converts(&mut rng, result.p_inelastic) {
                        stats.converted_counts[n] += 1;
                        let inv = 1.0 / result.p_inelastic.sqrt();
                        result.inelastic.scaled(C64::new(inv, 0.0))
                    } else {
                        let inv = 1.0 / result.p_elastic.sqrt();
                        result.elastic.scaled(C64::new(inv, 0.0))
                    };
                    stats.sector_counts[n][state.sector()] += 1;
                }
                let norm = state.norm_sq();
                if norm > 0.0 {
                    for (cfg, amp) in state.amplitudes() {
                        let w = amp.norm_sqr() / norm;
                        for (a, slot) in stats.profile_sum.iter_mut().enumerate() {
                            if cfg.0 & (1u64 << a) != 0 {
                                *slot += w;
                            }
                        }
                    }
                }
            }
        }
        stats.trials += 1;
    }
}

/// Bernoulli draw for "this photon converts". Forced outcomes (weight 0 or
/// saturated) return without touching the generator.
fn draw_converts(rng: &mut ChaCha8Rng, p_convert: f64) -> bool {
    if p_convert <= 0.0 {
        return false;
    }
    if p_convert >= 1.0 {
        return true;
    }
    rng.random::<f64>() < p_convert
}

fn renormalize_dense(vec: &mut [C64], norm_sq: f64) {
    let inv = 1.0 / norm_sq.sqrt();
    for v in vec {
        *v *= inv;
    }
}

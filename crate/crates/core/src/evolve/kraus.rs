//! Exact mixed-state evolution with the exiting photons traced out.
//!
//! Tracing a photon's exit species out of the joint state leaves the medium
//! in a mixture, but a strictly structured one: the no-conversion operator
//! preserves excitation number while the conversion operator shifts it by
//! one, so the density operator never develops coherences between sectors.
//! It is stored as one dense positive-semidefinite block per sector, and a
//! photon maps block `k` to `A rho_k A^dag` (same sector) plus
//! `C rho_k C^dag` (shifted sector), a completely positive trace-preserving
//! update.
//!
//! Each operator product is evaluated column-by-column with the same pair
//! sweep the pure-state path uses, so the `2^(M+1)`-dimensional operators
//! are never materialized; cost per photon is `O(M * sum_k d_k^2)` with
//! `d_k = C(M, k)`.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::error::{SrsError, SrsResult};
use crate::evolve::{weight_entropy, StepRecord};
use crate::sector::{AtomPairing, SectorBasis};
use crate::state::{MediumState, ModelParams};
use crate::sweep::{sweep_pair_dense, PhotonSpin};

/// Default atom-count cap for the dense mixed-state mode; the largest block
/// at the cap is 3432 x 3432 complex doubles. Raise it explicitly through
/// [`run_kraus_with_cap`] when you know the memory is there.
pub const DEFAULT_SECTOR_CAP: usize = 14;

const ZERO: C64 = C64::new(0.0, 0.0);

/// One dense sector block: a `dim x dim` row-major operator on the span of
/// the sector's basis masks.
#[derive(Clone, Debug)]
struct Block {
    basis: SectorBasis,
    data: Vec<C64>,
}

impl Block {
    fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn trace(&self) -> f64 {
        let d = self.dim();
        (0..d).map(|i| self.data[i * d + i].re).sum()
    }

    fn add_assign(&mut self, data: &[C64]) {
        debug_assert_eq!(self.data.len(), data.len());
        for (a, b) in self.data.iter_mut().zip(data) {
            *a += b;
        }
    }

    fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }
}

/// Excitation-number-blocked mixed state of the medium.
///
/// Blocks are keyed by sector (excitation count); absent sectors carry no
/// weight. For any mixture produced by the drivers here the total trace
/// stays 1 and each block stays Hermitian and positive semidefinite up to
/// roundoff.
#[derive(Clone, Debug)]
pub struct SectorMixture {
    m: usize,
    blocks: BTreeMap<usize, Block>,
}

impl SectorMixture {
    /// The rank-one mixture of a single (normalized) pure state.
    pub fn from_pure(state: &MediumState) -> SrsResult<Self> {
        let normed = state.normalized().map_err(|_| SrsError::ZeroState {
            op: "mixed-state construction",
        })?;
        let m = normed.m();
        let basis = SectorBasis::new(m, normed.sector())?;
        let d = basis.dim();
        let mut vec = vec![ZERO; d];
        for (cfg, amp) in normed.amplitudes() {
            let idx = basis
                .rank(cfg.0)
                .expect("state configs belong to their sector basis");
            vec[idx] = amp;
        }
        let mut data = vec![ZERO; d * d];
        for i in 0..d {
            for j in 0..d {
                data[i * d + j] = vec[i] * vec[j].conj();
            }
        }
        let mut blocks = BTreeMap::new();
        blocks.insert(normed.sector(), Block { basis, data });
        Ok(Self { m, blocks })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Sectors currently carrying a block (including roundoff-empty ones).
    pub fn sectors(&self) -> Vec<usize> {
        self.blocks.keys().copied().collect()
    }

    /// Borrow one sector block as `(basis, row-major data)`.
    pub fn block(&self, sector: usize) -> Option<(&SectorBasis, &[C64])> {
        self.blocks
            .get(&sector)
            .map(|b| (&b.basis, b.data.as_slice()))
    }

    pub fn trace(&self) -> f64 {
        self.blocks.values().map(Block::trace).sum()
    }

    /// Trace weight per sector.
    pub fn block_weights(&self) -> BTreeMap<usize, f64> {
        self.blocks
            .iter()
            .map(|(&k, b)| (k, b.trace()))
            .collect()
    }

    /// Mean excitation count of the normalized mixture.
    pub fn mean_excitation(&self) -> f64 {
        let total = self.trace();
        if total <= 0.0 {
            return 0.0;
        }
        self.blocks
            .iter()
            .map(|(&k, b)| k as f64 * b.trace())
            .sum::<f64>()
            / total
    }

    /// Shannon entropy (natural log) of the sector-weight distribution.
    pub fn sector_entropy(&self) -> f64 {
        weight_entropy(self.blocks.values().map(Block::trace))
    }

    /// Per-atom excitation probability of the normalized mixture.
    pub fn excitation_profile(&self) -> SrsResult<Vec<f64>> {
        let total = self.trace();
        if total <= 0.0 {
            return Err(SrsError::ZeroState {
                op: "excitation profile",
            });
        }
        let mut profile = vec![0.0; self.m];
        for block in self.blocks.values() {
            let d = block.dim();
            for i in 0..d {
                let w = block.data[i * d + i].re;
                if w == 0.0 {
                    continue;
                }
                let mask = block.basis.mask(i);
                for (a, slot) in profile.iter_mut().enumerate() {
                    if mask & (1u64 << a) != 0 {
                        *slot += w;
                    }
                }
            }
        }
        for slot in &mut profile {
            *slot /= total;
        }
        Ok(profile)
    }

    /// Largest deviation from block Hermiticity, `max |rho_ij - conj(rho_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for block in self.blocks.values() {
            let d = block.dim();
            for i in 0..d {
                for j in i..d {
                    let gap = (block.data[i * d + j] - block.data[j * d + i].conj()).norm();
                    worst = worst.max(gap);
                }
            }
        }
        worst
    }

    fn accumulate(&mut self, sector: usize, basis: &SectorBasis, data: &[C64]) {
        match self.blocks.get_mut(&sector) {
            Some(block) => block.add_assign(data),
            None => {
                self.blocks.insert(
                    sector,
                    Block {
                        basis: basis.clone(),
                        data: data.to_vec(),
                    },
                );
            }
        }
    }
}

/// A finished mixed-state run: per-photon records plus the final mixture.
#[derive(Clone, Debug)]
pub struct KrausRun {
    pub steps: Vec<StepRecord>,
    pub mixture: SectorMixture,
}

/// Evolve `initial` through the photon stream in exact mixed-state mode,
/// under the default atom-count cap.
pub fn run_kraus(
    params: &ModelParams,
    initial: &MediumState,
    spins_in: &[PhotonSpin],
) -> SrsResult<KrausRun> {
    run_kraus_with_cap(params, initial, spins_in, DEFAULT_SECTOR_CAP)
}

/// [`run_kraus`] with an explicit atom-count cap override.
pub fn run_kraus_with_cap(
    params: &ModelParams,
    initial: &MediumState,
    spins_in: &[PhotonSpin],
    cap: usize,
) -> SrsResult<KrausRun> {
    let m = params.m();
    if m > cap {
        return Err(SrsError::SectorCapExceeded { m, cap });
    }
    if initial.m() != m {
        return Err(SrsError::AtomCountMismatch {
            left: initial.m(),
            right: m,
        });
    }

    let mut caches = PairingCache::new(m);
    let mut mixture = SectorMixture::from_pure(initial)?;
    let mut steps = Vec::with_capacity(spins_in.len());

    for &spin in spins_in {
        let (next, p_elastic, p_inelastic) = step(&mixture, spin, params, &mut caches)?;
        mixture = next;
        steps.push(StepRecord {
            p_elastic,
            p_inelastic,
            stokes_stderr: None,
            mean_excitation: mixture.mean_excitation(),
            sector_entropy: mixture.sector_entropy(),
        });
    }

    Ok(KrausRun { steps, mixture })
}

/// Lazily built sector bases and adjacent-sector pairings, shared across
/// photons of one run.
struct PairingCache {
    m: usize,
    bases: BTreeMap<usize, SectorBasis>,
    pairings: BTreeMap<usize, AtomPairing>,
}

impl PairingCache {
    fn new(m: usize) -> Self {
        Self {
            m,
            bases: BTreeMap::new(),
            pairings: BTreeMap::new(),
        }
    }

    fn basis(&mut self, k: usize) -> SrsResult<&SectorBasis> {
        if !self.bases.contains_key(&k) {
            let basis = SectorBasis::new(self.m, k)?;
            self.bases.insert(k, basis);
        }
        Ok(&self.bases[&k])
    }

    /// Pairing between sectors `lo` and `lo + 1`.
    fn pairing(&mut self, lo: usize) -> SrsResult<&AtomPairing> {
        if !self.pairings.contains_key(&lo) {
            let lo_basis = self.basis(lo)?.clone();
            let hi_basis = self.basis(lo + 1)?.clone();
            let pairing = AtomPairing::new(&lo_basis, &hi_basis)?;
            self.pairings.insert(lo, pairing);
        }
        Ok(&self.pairings[&lo])
    }
}

/// One traced photon: returns the new mixture and the photon's exit
/// marginals (elastic = species kept).
fn step(
    mixture: &SectorMixture,
    spin: PhotonSpin,
    params: &ModelParams,
    caches: &mut PairingCache,
) -> SrsResult<(SectorMixture, f64, f64)> {
    let m = mixture.m;
    let (b, c) = (params.b(), params.c());
    let convertible = c != ZERO;
    let mut out = SectorMixture {
        m,
        blocks: BTreeMap::new(),
    };
    let mut p_elastic = 0.0;
    let mut p_inelastic = 0.0;

    for (&k, block) in &mixture.blocks {
        if block.is_zero() {
            continue;
        }
        // The sector at which no partner level exists: the photon passes
        // through with amplitude 1 and the block is untouched.
        let frozen = match spin {
            PhotonSpin::Laser => k == m,
            PhotonSpin::Stokes => k == 0,
        };
        if frozen || !convertible {
            p_elastic += block.trace();
            out.accumulate(k, &block.basis, &block.data);
            continue;
        }

        // `frozen` already excluded the boundary sectors, so the shifted
        // sector always exists.
        let (lo_sector, shifted_sector) = match spin {
            PhotonSpin::Laser => (k, k + 1),
            PhotonSpin::Stokes => (k - 1, k - 1),
        };
        let other_basis = caches.basis(shifted_sector)?.clone();
        let pairing = caches.pairing(lo_sector)?;
        let input_is_lo = matches!(spin, PhotonSpin::Laser);
        let (same_part, shift_part) = channel_on_block(
            block,
            pairing,
            other_basis.dim(),
            b,
            c,
            input_is_lo,
        );

        let d = block.dim();
        p_elastic += (0..d).map(|i| same_part[i * d + i].re).sum::<f64>();
        let ds = other_basis.dim();
        p_inelastic += (0..ds).map(|i| shift_part[i * ds + i].re).sum::<f64>();

        out.accumulate(k, &block.basis, &same_part);
        out.accumulate(shifted_sector, &other_basis, &shift_part);
    }

    Ok((out, p_elastic, p_inelastic))
}

/// Apply the traced-photon channel to one block.
///
/// Returns `(same, shift)` where `same` is the elastic part (same sector as
/// the block) and `shift` the conversion part one sector up (pump input) or
/// down (Stokes input). Both products are built column-by-column from the
/// pair sweep: first the half-product `K rho` for both operators at once,
/// then `K (K rho)^dag` using the Hermiticity of `rho`, reading rows of the
/// half-products as conjugated columns so every inner pass is contiguous.
fn channel_on_block(
    block: &Block,
    pairing: &AtomPairing,
    other_dim: usize,
    b: C64,
    c: C64,
    input_is_lo: bool,
) -> (Vec<C64>, Vec<C64>) {
    let d_in = block.dim();
    let d_shift = other_dim;
    let (lo_dim, hi_dim) = if input_is_lo {
        (d_in, d_shift)
    } else {
        (d_shift, d_in)
    };
    let mut lo = vec![ZERO; lo_dim];
    let mut hi = vec![ZERO; hi_dim];

    // Half-products: x_same = K_same * rho, x_shift = K_shift * rho.
    let mut x_same = vec![ZERO; d_in * d_in];
    let mut x_shift = vec![ZERO; d_shift * d_in];
    for j in 0..d_in {
        {
            let (input, other) = if input_is_lo {
                (&mut lo, &mut hi)
            } else {
                (&mut hi, &mut lo)
            };
            for (i, slot) in input.iter_mut().enumerate() {
                *slot = block.data[i * d_in + j];
            }
            other.fill(ZERO);
        }
        sweep_pair_dense(pairing, b, c, &mut lo, &mut hi);
        let (same_out, shift_out) = if input_is_lo { (&lo, &hi) } else { (&hi, &lo) };
        for i in 0..d_in {
            x_same[i * d_in + j] = same_out[i];
        }
        for i in 0..d_shift {
            x_shift[i * d_in + j] = shift_out[i];
        }
    }

    // same = K_same * (x_same)^dag, one column per conjugated row of x_same.
    let mut same = vec![ZERO; d_in * d_in];
    for i in 0..d_in {
        {
            let (input, other) = if input_is_lo {
                (&mut lo, &mut hi)
            } else {
                (&mut hi, &mut lo)
            };
            for (slot, v) in input.iter_mut().zip(&x_same[i * d_in..(i + 1) * d_in]) {
                *slot = v.conj();
            }
            other.fill(ZERO);
        }
        sweep_pair_dense(pairing, b, c, &mut lo, &mut hi);
        let same_out = if input_is_lo { &lo } else { &hi };
        for r in 0..d_in {
            same[r * d_in + i] = same_out[r];
        }
    }

    // shift = K_shift * (x_shift)^dag, likewise (rows of x_shift live in
    // the input sector, so they feed the same input side).
    let mut shift = vec![ZERO; d_shift * d_shift];
    for i in 0..d_shift {
        {
            let (input, other) = if input_is_lo {
                (&mut lo, &mut hi)
            } else {
                (&mut hi, &mut lo)
            };
            for (slot, v) in input.iter_mut().zip(&x_shift[i * d_in..(i + 1) * d_in]) {
                *slot = v.conj();
            }
            other.fill(ZERO);
        }
        sweep_pair_dense(pairing, b, c, &mut lo, &mut hi);
        let shift_out = if input_is_lo { &hi } else { &lo };
        for r in 0..d_shift {
            shift[r * d_shift + i] = shift_out[r];
        }
    }

    (same, shift)
}

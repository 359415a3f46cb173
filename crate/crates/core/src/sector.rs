//! Enumeration of fixed-excitation sectors and per-atom pairing tables.
//!
//! A sector holds every mask over `m` atoms with exactly `k` bits set,
//! listed in ascending numeric order. The dense evolution path works on
//! amplitude vectors indexed by that list; for each atom it needs the pairs
//! of positions that differ only in that atom's bit, which is precomputed
//! once per `(m, k)` pair here.

use crate::error::{SrsError, SrsResult};
use crate::state::MAX_ATOMS;

/// Binomial coefficient `C(n, k)` as usize (exact within u128 intermediate).
pub fn sector_dim(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// Ordered basis of the `(m, k)` sector: all masks with `k` of `m` bits set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SectorBasis {
    m: usize,
    k: usize,
    masks: Vec<u64>,
}

impl SectorBasis {
    pub fn new(m: usize, k: usize) -> SrsResult<Self> {
        if m > MAX_ATOMS {
            return Err(SrsError::TooManyAtoms { m });
        }
        if k > m {
            return Err(SrsError::InvalidArgument {
                op: "sector basis",
                reason: format!("excitation count {k} exceeds atom count {m}"),
            });
        }
        let dim = sector_dim(m, k);
        let mut masks = Vec::with_capacity(dim);
        if k == 0 {
            masks.push(0);
        } else {
            // Gosper's hack walks same-popcount masks in ascending order.
            let mut v: u64 = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
            let limit: u64 = if m == 64 { u64::MAX } else { (1u64 << m) - 1 };
            let last = limit & !((1u64 << (m - k)) - 1);
            loop {
                masks.push(v);
                if v == last {
                    break; // top-most k bits set: last mask of the sector
                }
                let c = v & v.wrapping_neg();
                let r = v + c;
                v = (((r ^ v) >> 2) / c) | r;
            }
        }
        debug_assert_eq!(masks.len(), dim);
        Ok(Self { m, k, masks })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.masks.len()
    }

    pub fn masks(&self) -> &[u64] {
        &self.masks
    }

    pub fn mask(&self, index: usize) -> u64 {
        self.masks[index]
    }

    /// Position of `mask` in this basis, if it belongs to the sector.
    pub fn rank(&self, mask: u64) -> Option<usize> {
        self.masks.binary_search(&mask).ok()
    }
}

/// For one atom in the `(m, k)`/`(m, k+1)` sector pair: positions that pair up.
///
/// Entry `(lo, hi)` says mask `lo` of the `k` sector and mask `hi` of the
/// `k+1` sector agree everywhere except the atom's bit (clear in `lo`, set
/// in `hi`). These are exactly the configurations the atom can move between
/// by absorbing or emitting one excitation.
#[derive(Clone, Debug)]
pub struct AtomPairing {
    /// `pairs[a-1]` lists the `(lo_index, hi_index)` pairs for atom `a`.
    pairs: Vec<Vec<(u32, u32)>>,
}

impl AtomPairing {
    /// Pairing between the `k` (lo) and `k+1` (hi) sectors of `m` atoms.
    pub fn new(lo: &SectorBasis, hi: &SectorBasis) -> SrsResult<Self> {
        if lo.m() != hi.m() {
            return Err(SrsError::AtomCountMismatch {
                left: lo.m(),
                right: hi.m(),
            });
        }
        if hi.k() != lo.k() + 1 {
            return Err(SrsError::InvalidArgument {
                op: "atom pairing",
                reason: format!(
                    "sectors must be adjacent, got k={} and k={}",
                    lo.k(),
                    hi.k()
                ),
            });
        }
        let m = lo.m();
        let mut pairs = vec![Vec::new(); m];
        for (li, &mask) in lo.masks().iter().enumerate() {
            for (a, slot) in pairs.iter_mut().enumerate() {
                let bit = 1u64 << a;
                if mask & bit == 0 {
                    let hi_idx = hi
                        .rank(mask | bit)
                        .expect("adjacent sector must contain the flipped mask");
                    slot.push((li as u32, hi_idx as u32));
                }
            }
        }
        Ok(Self { pairs })
    }

    /// Pairs for atom `a` (1-indexed).
    pub fn atom(&self, a: usize) -> &[(u32, u32)] {
        &self.pairs[a - 1]
    }

    pub fn atom_count(&self) -> usize {
        self.pairs.len()
    }
}

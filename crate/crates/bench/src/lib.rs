//! Shared fixtures for the engine benchmarks.

use srs_core::{Complex64, MediumState, SectorBasis};

/// A normalized state with full support on the half-filled sector — the
/// widest (and slowest) sector of an `m`-atom medium.
pub fn half_filled_state(m: usize) -> MediumState {
    let basis = SectorBasis::new(m, m / 2).expect("valid sector");
    let dim = basis.dim() as f64;
    let entries = basis.masks().iter().enumerate().map(|(i, &mask)| {
        // Deterministic, non-uniform phases so nothing cancels to zero.
        let phase = (i as f64 * 0.37).sin();
        (
            srs_core::BasisConfig(mask),
            Complex64::new(1.0 + 0.25 * phase, 0.25 * (1.0 - phase)) / dim.sqrt(),
        )
    });
    MediumState::from_amplitudes(m, entries)
        .expect("valid entries")
        .normalized()
        .expect("nonzero norm")
}

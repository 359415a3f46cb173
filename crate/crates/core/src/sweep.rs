//! One photon's traversal of the whole atom chain.
//!
//! A photon carries a two-valued "spin": the pump (laser) species L or the
//! frequency-downshifted Stokes species S. As the photon passes atom
//! 1, 2, ..., M in order, each encounter applies a unitary 2x2 block on the
//! photon-spin x atom-level pair:
//!
//! * L photon, ground atom: stay L (amplitude `b = cos j`), or convert to S
//!   and excite the atom (amplitude `c = i sin j`);
//! * L photon, excited atom: pass through (amplitude 1);
//! * S photon, ground atom: pass through (amplitude 1);
//! * S photon, excited atom: stay S (amplitude `b`), or convert back to L
//!   and de-excite the atom (amplitude `c`).
//!
//! The sweep carries a pair of medium-space vectors — the photon's two spin
//! components between atoms — and never materializes the full
//! 2^(M+1)-dimensional operator, so one traversal costs O(M x support).
//!
//! Viewed as a lattice with photons as rows and atoms as columns, the sweep
//! is the row-transfer step of a six-vertex model whose vertex weights are
//! exactly {1, b, c}: pass-throughs are weight-1 vertices, spin-preserving
//! encounters weight b, and the two conversion vertices weight c. A full
//! multi-photon evolution tiles these rows; each lattice path's amplitude is
//! its product of vertex weights, and paths interfere coherently.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::error::{SrsError, SrsResult};
use crate::sector::AtomPairing;
use crate::state::{BasisConfig, MediumState, ModelParams};

const ZERO: C64 = C64::new(0.0, 0.0);

/// The photon's two-valued species label.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub enum PhotonSpin {
    /// Pump photon (enters the medium able to deposit an excitation).
    Laser,
    /// Downshifted photon (able to pick an excitation back up).
    Stokes,
}

impl PhotonSpin {
    pub fn flipped(self) -> Self {
        match self {
            Self::Laser => Self::Stokes,
            Self::Stokes => Self::Laser,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Self::Laser => 'L',
            Self::Stokes => 'S',
        }
    }

    pub fn from_symbol(ch: char) -> Option<Self> {
        match ch.to_ascii_uppercase() {
            'L' => Some(Self::Laser),
            'S' => Some(Self::Stokes),
            _ => None,
        }
    }
}

impl std::fmt::Display for PhotonSpin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// The six local amplitudes governing one photon-atom encounter.
///
/// Grouping by input: each of the two nontrivial inputs (L on ground,
/// S on excited) splits into a stay branch and a convert branch; the two
/// trivial inputs pass through unchanged.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VertexRules {
    pub laser_on_ground_stay: C64,
    pub laser_on_ground_convert: C64,
    pub laser_on_excited_pass: C64,
    pub stokes_on_ground_pass: C64,
    pub stokes_on_excited_stay: C64,
    pub stokes_on_excited_convert: C64,
}

impl VertexRules {
    pub fn from_params(params: &ModelParams) -> Self {
        Self {
            laser_on_ground_stay: params.b(),
            laser_on_ground_convert: params.c(),
            laser_on_excited_pass: C64::new(1.0, 0.0),
            stokes_on_ground_pass: C64::new(1.0, 0.0),
            stokes_on_excited_stay: params.b(),
            stokes_on_excited_convert: params.c(),
        }
    }

    /// Largest deviation of the two local 2x2 blocks from exact unitarity.
    pub fn local_unitarity_defect(&self) -> f64 {
        let block = |stay: C64, convert: C64| -> f64 {
            let diag = (stay.norm_sqr() + convert.norm_sqr() - 1.0).abs();
            let off = (stay.conj() * convert + convert.conj() * stay).norm();
            diag.max(off)
        };
        let mixing = block(self.laser_on_ground_stay, self.laser_on_ground_convert)
            .max(block(self.stokes_on_excited_stay, self.stokes_on_excited_convert));
        let pass = (self.laser_on_excited_pass.norm() - 1.0)
            .abs()
            .max((self.stokes_on_ground_pass.norm() - 1.0).abs());
        mixing.max(pass)
    }
}

/// The two branch states produced by one photon traversal.
///
/// `elastic` is the branch in which the photon exits with its incoming
/// species; `inelastic` the spin-flipped exit. Both are unnormalized, so for
/// a normalized input `p_elastic + p_inelastic = 1` up to roundoff. The
/// inelastic branch sits one sector above (L input) or below (S input) the
/// input state; a branch that is identically zero still carries its nominal
/// sector label.
#[derive(Clone, Debug)]
pub struct SweepResult {
    pub elastic: MediumState,
    pub inelastic: MediumState,
    pub p_elastic: f64,
    pub p_inelastic: f64,
}

type AmpMap = BTreeMap<BasisConfig, C64>;

/// One atom's action on the running (photon-L, photon-S) component pair.
///
/// Entries whose atom level makes the encounter trivial pass through with
/// amplitude 1; the others mix pairwise: the L component on `x` (atom
/// ground) couples to the S component on `x | bit` (atom excited) through
/// the rotation `[[b, c], [c, b]]`.
fn apply_atom(bit: u64, b: C64, c: C64, phi_l: &AmpMap, phi_s: &AmpMap) -> (AmpMap, AmpMap) {
    let mut next_l = AmpMap::new();
    let mut next_s = AmpMap::new();
    for (&cfg, &vl) in phi_l {
        if cfg.0 & bit != 0 {
            *next_l.entry(cfg).or_insert(ZERO) += vl;
        } else {
            *next_l.entry(cfg).or_insert(ZERO) += b * vl;
            *next_s.entry(BasisConfig(cfg.0 | bit)).or_insert(ZERO) += c * vl;
        }
    }
    for (&cfg, &vs) in phi_s {
        if cfg.0 & bit == 0 {
            *next_s.entry(cfg).or_insert(ZERO) += vs;
        } else {
            *next_s.entry(cfg).or_insert(ZERO) += b * vs;
            *next_l.entry(BasisConfig(cfg.0 & !bit)).or_insert(ZERO) += c * vs;
        }
    }
    (next_l, next_s)
}

fn prune(map: &mut AmpMap, threshold: f64) {
    map.retain(|_, amp| {
        let n = amp.norm_sqr();
        n != 0.0 && n >= threshold * threshold
    });
}

fn validate_input(state: &MediumState, params: &ModelParams) -> SrsResult<()> {
    if state.m() != params.m() {
        return Err(SrsError::AtomCountMismatch {
            left: state.m(),
            right: params.m(),
        });
    }
    if state.is_zero() || state.norm_sq() == 0.0 {
        return Err(SrsError::ZeroState { op: "sweep" });
    }
    Ok(())
}

fn assemble(
    m: usize,
    k: usize,
    spin: PhotonSpin,
    phi_l: AmpMap,
    phi_s: AmpMap,
    threshold: f64,
) -> SweepResult {
    let (mut elastic_map, mut inelastic_map, inelastic_sector) = match spin {
        PhotonSpin::Laser => (phi_l, phi_s, k + 1),
        PhotonSpin::Stokes => (phi_s, phi_l, k.saturating_sub(1)),
    };
    prune(&mut elastic_map, threshold);
    prune(&mut inelastic_map, threshold);
    let elastic = MediumState::from_map(m, k, elastic_map);
    let inelastic = MediumState::from_map(m, inelastic_sector, inelastic_map);
    let p_elastic = elastic.norm_sq();
    let p_inelastic = inelastic.norm_sq();
    SweepResult {
        elastic,
        inelastic,
        p_elastic,
        p_inelastic,
    }
}

/// Send one photon of species `spin` through the whole medium.
///
/// With pruning disabled every surviving amplitude is an exact product of
/// `{1, b, c}` factors summed over interfering lattice paths.
pub fn sweep(state: &MediumState, spin: PhotonSpin, params: &ModelParams) -> SrsResult<SweepResult> {
    validate_input(state, params)?;
    let m = state.m();
    let k = state.sector();
    let (b, c) = (params.b(), params.c());
    let (mut phi_l, mut phi_s) = match spin {
        PhotonSpin::Laser => (state.map().clone(), AmpMap::new()),
        PhotonSpin::Stokes => (AmpMap::new(), state.map().clone()),
    };
    for a in 1..=m {
        let bit = 1u64 << (a - 1);
        (phi_l, phi_s) = apply_atom(bit, b, c, &phi_l, &phi_s);
    }
    Ok(assemble(m, k, spin, phi_l, phi_s, params.amp_prune()))
}

/// `sweep`, but discarding every lattice path with more than
/// `max_conversions` species flips.
///
/// This is a diagnostic switch for interference analysis: a path flips
/// species at most once per atom, so `max_conversions >= m` reproduces
/// `sweep` exactly, while smaller caps delete the higher sub-channels (for
/// example, `max_conversions = 1` removes the two-conversion sub-channel
/// whose interference with the direct channel depletes elastic scattering).
/// The capped result is not unitary: the discarded paths' weight simply
/// leaves the accounting.
pub fn sweep_with_conversion_cap(
    state: &MediumState,
    spin: PhotonSpin,
    params: &ModelParams,
    max_conversions: usize,
) -> SrsResult<SweepResult> {
    validate_input(state, params)?;
    let m = state.m();
    let k = state.sector();
    let (b, c) = (params.b(), params.c());

    // Stratify by conversion count: stratum q holds amplitude that has
    // flipped species exactly q times, so its species alternates with q.
    let cap = max_conversions.min(m);
    let mut strata: Vec<AmpMap> = vec![AmpMap::new(); cap + 1];
    strata[0] = state.map().clone();

    for a in 1..=m {
        let bit = 1u64 << (a - 1);
        let mut next: Vec<AmpMap> = vec![AmpMap::new(); cap + 1];
        for (q, stratum) in strata.iter().enumerate() {
            let spin_q = if q % 2 == 0 { spin } else { spin.flipped() };
            for (&cfg, &v) in stratum {
                match spin_q {
                    PhotonSpin::Laser => {
                        if cfg.0 & bit != 0 {
                            *next[q].entry(cfg).or_insert(ZERO) += v;
                        } else {
                            *next[q].entry(cfg).or_insert(ZERO) += b * v;
                            if q < cap {
                                *next[q + 1].entry(BasisConfig(cfg.0 | bit)).or_insert(ZERO) +=
                                    c * v;
                            }
                        }
                    }
                    PhotonSpin::Stokes => {
                        if cfg.0 & bit == 0 {
                            *next[q].entry(cfg).or_insert(ZERO) += v;
                        } else {
                            *next[q].entry(cfg).or_insert(ZERO) += b * v;
                            if q < cap {
                                *next[q + 1].entry(BasisConfig(cfg.0 & !bit)).or_insert(ZERO) +=
                                    c * v;
                            }
                        }
                    }
                }
            }
        }
        strata = next;
    }

    // Even strata exit with the incoming species, odd strata spin-flipped.
    let mut same_spin = AmpMap::new();
    let mut flipped = AmpMap::new();
    for (q, stratum) in strata.into_iter().enumerate() {
        let target = if q % 2 == 0 { &mut same_spin } else { &mut flipped };
        for (cfg, v) in stratum {
            *target.entry(cfg).or_insert(ZERO) += v;
        }
    }
    let (phi_l, phi_s) = match spin {
        PhotonSpin::Laser => (same_spin, flipped),
        PhotonSpin::Stokes => (flipped, same_spin),
    };
    Ok(assemble(m, k, spin, phi_l, phi_s, params.amp_prune()))
}

/// The single-excitation wavefunction deposited by one pump photon in a
/// fresh (all-ground) medium: entry `a-1` is the amplitude for the photon
/// to have converted at atom `a`, equal to `c * b^(a-1)` — the log of its
/// modulus falls linearly in `a` with slope `ln cos j`.
pub fn first_photon_wavefunction(params: &ModelParams) -> SrsResult<Vec<C64>> {
    if params.m() == 0 {
        return Err(SrsError::EmptyMedium {
            op: "first-photon wavefunction",
        });
    }
    let vacuum = MediumState::new_all_ground(params.m())?;
    let result = sweep(&vacuum, PhotonSpin::Laser, params)?;
    Ok((1..=params.m())
        .map(|a| result.inelastic.amplitude(BasisConfig::single_excited(a)))
        .collect())
}

/// Dense form of `apply_atom` over a whole adjacent-sector pair, applied
/// in place for every atom of the chain.
///
/// `lo` holds the photon-L component on the lower sector, `hi` the photon-S
/// component one excitation up, both indexed by the pairing's bases. Each
/// listed pair is touched exactly once per atom; unpaired slots are the
/// amplitude-1 pass-throughs and need no work. The arithmetic matches the
/// sparse path expression-for-expression, so both representations produce
/// bit-identical amplitudes.
pub(crate) fn sweep_pair_dense(pairing: &AtomPairing, b: C64, c: C64, lo: &mut [C64], hi: &mut [C64]) {
    for a in 1..=pairing.atom_count() {
        for &(li, hi_idx) in pairing.atom(a) {
            let vl = lo[li as usize];
            let vs = hi[hi_idx as usize];
            lo[li as usize] = b * vl + c * vs;
            hi[hi_idx as usize] = c * vl + b * vs;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sector::SectorBasis;

    fn c64(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn vacuum(m: usize) -> MediumState {
        MediumState::new_all_ground(m).unwrap()
    }

    #[test]
    fn zero_coupling_is_transparent() {
        let params = ModelParams::new(4, 0.0).unwrap();
        let state = MediumState::from_amplitudes(
            4,
            [
                (BasisConfig(0b0101), c64(0.6, 0.0)),
                (BasisConfig(0b0011), c64(0.0, 0.8)),
            ],
        )
        .unwrap();
        for spin in [PhotonSpin::Laser, PhotonSpin::Stokes] {
            let out = sweep(&state, spin, &params).unwrap();
            assert_eq!(out.elastic, state);
            assert!(out.inelastic.is_zero());
            assert!((out.p_elastic - 1.0).abs() < 1e-15);
            assert_eq!(out.p_inelastic, 0.0);
        }
    }

    #[test]
    fn quarter_turn_converts_at_the_entry_atom() {
        // b = 0: the pump photon cannot survive its first ground-atom
        // encounter, so everything converts at atom 1.
        let params = ModelParams::new(3, std::f64::consts::FRAC_PI_2).unwrap();
        let out = sweep(&vacuum(3), PhotonSpin::Laser, &params).unwrap();
        assert!(out.elastic.is_zero());
        assert_eq!(out.inelastic.support_len(), 1);
        let amp = out.inelastic.amplitude(BasisConfig::single_excited(1));
        assert!((amp - c64(0.0, 1.0)).norm() < 1e-15);
        assert!((out.p_inelastic - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fresh_medium_single_pass_amplitudes() {
        // Elastic amplitude b^m on the vacuum; conversion at atom a carries
        // c * b^(a-1), the count of ground atoms passed beforehand.
        for (m, j) in [(1usize, 0.3f64), (3, 0.3), (6, 0.7), (10, 0.05)] {
            let params = ModelParams::new(m, j).unwrap();
            let out = sweep(&vacuum(m), PhotonSpin::Laser, &params).unwrap();
            let b = j.cos();
            let elastic_amp = out.elastic.amplitude(BasisConfig::ALL_GROUND);
            assert!((elastic_amp - c64(b.powi(m as i32), 0.0)).norm() < 1e-14);
            for a in 1..=m {
                let expect = c64(0.0, j.sin()) * c64(b.powi(a as i32 - 1), 0.0);
                let got = out.inelastic.amplitude(BasisConfig::single_excited(a));
                assert!((got - expect).norm() < 1e-14, "m={m} a={a}");
            }
            assert!((out.p_elastic + out.p_inelastic - 1.0).abs() < 1e-12);
            assert_eq!(out.elastic.sector(), 0);
            assert_eq!(out.inelastic.sector(), 1);
        }
    }

    #[test]
    fn single_atom_stokes_on_excited() {
        // One decay step: stay Stokes with amplitude b, convert (and drop
        // the excitation) with amplitude c.
        let j = 0.4;
        let params = ModelParams::new(1, j).unwrap();
        let excited = MediumState::new_all_excited(1).unwrap();
        let out = sweep(&excited, PhotonSpin::Stokes, &params).unwrap();
        assert!((out.elastic.amplitude(BasisConfig(1)) - c64(j.cos(), 0.0)).norm() < 1e-15);
        assert!((out.inelastic.amplitude(BasisConfig(0)) - c64(0.0, j.sin())).norm() < 1e-15);
        assert_eq!(out.elastic.sector(), 1);
        assert_eq!(out.inelastic.sector(), 0);
    }

    #[test]
    fn stokes_through_ground_medium_is_inert() {
        let params = ModelParams::new(5, 0.8).unwrap();
        let out = sweep(&vacuum(5), PhotonSpin::Stokes, &params).unwrap();
        assert_eq!(out.elastic, vacuum(5));
        assert!(out.inelastic.is_zero());
        assert_eq!(out.p_inelastic, 0.0);
    }

    #[test]
    fn unitarity_on_superpositions() {
        let params = ModelParams::new(6, 0.9).unwrap();
        let norm = 1.0 / 3.0f64.sqrt();
        let state = MediumState::from_amplitudes(
            6,
            [
                (BasisConfig(0b000111), c64(norm, 0.0)),
                (BasisConfig(0b101010), c64(0.0, norm)),
                (BasisConfig(0b110001), c64(-norm, 0.0)),
            ],
        )
        .unwrap();
        for spin in [PhotonSpin::Laser, PhotonSpin::Stokes] {
            let out = sweep(&state, spin, &params).unwrap();
            assert!(
                (out.p_elastic + out.p_inelastic - 1.0).abs() < 1e-12,
                "{spin:?}"
            );
        }
    }

    #[test]
    fn conversion_cap_at_capacity_matches_full_sweep() {
        let params = ModelParams::new(5, 0.6).unwrap();
        let norm = 0.5f64.sqrt();
        let state = MediumState::from_amplitudes(
            5,
            [
                (BasisConfig(0b00101), c64(norm, 0.0)),
                (BasisConfig(0b11000), c64(0.0, -norm)),
            ],
        )
        .unwrap();
        for spin in [PhotonSpin::Laser, PhotonSpin::Stokes] {
            let full = sweep(&state, spin, &params).unwrap();
            let capped = sweep_with_conversion_cap(&state, spin, &params, 5).unwrap();
            let wide = sweep_with_conversion_cap(&state, spin, &params, 1000).unwrap();
            for (cfg, amp) in full.elastic.amplitudes() {
                assert!((capped.elastic.amplitude(cfg) - amp).norm() < 1e-13);
                assert!((wide.elastic.amplitude(cfg) - amp).norm() < 1e-13);
            }
            for (cfg, amp) in full.inelastic.amplitudes() {
                assert!((capped.inelastic.amplitude(cfg) - amp).norm() < 1e-13);
            }
            assert_eq!(capped.elastic.support_len(), full.elastic.support_len());
        }
    }

    #[test]
    fn conversion_cap_zero_keeps_only_direct_paths() {
        let j = 0.5;
        let params = ModelParams::new(4, j).unwrap();
        let out = sweep_with_conversion_cap(&vacuum(4), PhotonSpin::Laser, &params, 0).unwrap();
        let amp = out.elastic.amplitude(BasisConfig::ALL_GROUND);
        assert!((amp - c64(j.cos().powi(4), 0.0)).norm() < 1e-15);
        assert!(out.inelastic.is_zero());
        // Weight genuinely leaves the accounting: no renormalization.
        assert!(out.p_elastic < 1.0);
    }

    #[test]
    fn wavefunction_matches_symbolic_small_cases() {
        let j = 0.37f64;
        let (b, s) = (j.cos(), j.sin());
        let one = first_photon_wavefunction(&ModelParams::new(1, j).unwrap()).unwrap();
        assert_eq!(one.len(), 1);
        assert!((one[0] - c64(0.0, s)).norm() < 1e-15);

        let three = first_photon_wavefunction(&ModelParams::new(3, j).unwrap()).unwrap();
        let expect = [c64(0.0, s), c64(0.0, s * b), c64(0.0, s * b * b)];
        for (got, want) in three.iter().zip(expect) {
            assert!((got - want).norm() < 1e-15);
        }

        assert_eq!(
            first_photon_wavefunction(&ModelParams::new(0, j).unwrap()),
            Err(SrsError::EmptyMedium {
                op: "first-photon wavefunction"
            })
        );
    }

    #[test]
    fn wavefunction_log_modulus_is_linear() {
        let j = 0.1;
        let params = ModelParams::new(20, j).unwrap();
        let phi = first_photon_wavefunction(&params).unwrap();
        let slope = j.cos().ln();
        for (i, window) in phi.windows(2).enumerate() {
            let measured = window[1].norm().ln() - window[0].norm().ln();
            assert!((measured - slope).abs() < 1e-12, "gap {i}");
        }
    }

    #[test]
    fn shape_and_zero_state_errors() {
        let params = ModelParams::new(3, 0.2).unwrap();
        let wrong = vacuum(4);
        assert!(matches!(
            sweep(&wrong, PhotonSpin::Laser, &params),
            Err(SrsError::AtomCountMismatch { left: 4, right: 3 })
        ));
        let zero = MediumState::from_map(3, 1, BTreeMap::new());
        assert!(matches!(
            sweep(&zero, PhotonSpin::Laser, &params),
            Err(SrsError::ZeroState { op: "sweep" })
        ));
    }

    #[test]
    fn vertex_rules_are_locally_unitary() {
        for j in [0.0, 0.3, 1.2, std::f64::consts::FRAC_PI_2] {
            let rules = VertexRules::from_params(&ModelParams::new(2, j).unwrap());
            assert!(rules.local_unitarity_defect() < 1e-15, "j={j}");
            assert_eq!(rules.laser_on_excited_pass, c64(1.0, 0.0));
            assert_eq!(rules.stokes_on_ground_pass, c64(1.0, 0.0));
        }
    }

    #[test]
    fn dense_kernel_matches_sparse_sweep() {
        let m = 6;
        let j = 0.8;
        let params = ModelParams::new(m, j).unwrap();
        let lo_basis = SectorBasis::new(m, 2).unwrap();
        let hi_basis = SectorBasis::new(m, 3).unwrap();
        let pairing = AtomPairing::new(&lo_basis, &hi_basis).unwrap();

        // Arbitrary normalized sector-2 input, photon L.
        let mut lo: Vec<C64> = (0..lo_basis.dim())
            .map(|i| c64((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let scale = 1.0 / lo.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut lo {
            *a *= scale;
        }
        let mut hi = vec![ZERO; hi_basis.dim()];

        let state = MediumState::from_amplitudes(
            m,
            lo_basis
                .masks()
                .iter()
                .zip(&lo)
                .map(|(&mask, &amp)| (BasisConfig(mask), amp)),
        )
        .unwrap();
        let sparse = sweep(&state, PhotonSpin::Laser, &params).unwrap();

        sweep_pair_dense(&pairing, params.b(), params.c(), &mut lo, &mut hi);
        for (i, &mask) in lo_basis.masks().iter().enumerate() {
            assert_eq!(sparse.elastic.amplitude(BasisConfig(mask)), lo[i]);
        }
        for (i, &mask) in hi_basis.masks().iter().enumerate() {
            let sparse_amp = sparse.inelastic.amplitude(BasisConfig(mask));
            // Sparse output is pruned; dense keeps exact zeros in place.
            if sparse_amp == ZERO {
                assert!(hi[i].norm() < 1e-14);
            } else {
                assert_eq!(sparse_amp, hi[i]);
            }
        }
    }
}

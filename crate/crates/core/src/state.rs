//! Sparse quantum states of the atomic medium, organized by excitation number.
//!
//! The medium is a chain of `m` two-level atoms. A basis state is an
//! occupation mask: bit `a-1` set means atom `a` is excited, with atom 1
//! sitting at the photon-entry edge. Because every interaction either
//! preserves the excitation count or shifts it by exactly one, states are
//! confined to a single *sector* (fixed excitation count) and stored as a
//! sparse map from mask to complex amplitude.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{SrsError, SrsResult};

/// Hard cap on the atom count: a basis state is one full machine word,
/// so the cooperative-scaling experiments can reach a 64-atom medium.
pub const MAX_ATOMS: usize = 64;

/// Default modulus below which stored amplitudes are dropped after a sweep.
///
/// Small enough that it cannot disturb results at the 1e-12 tolerances the
/// verification suite works to; set the threshold to 0 to disable pruning
/// entirely (every amplitude is then an exact product of local factors).
pub const DEFAULT_AMP_PRUNE: f64 = 1e-14;

/// One basis state of the medium: an occupation mask over the atoms.
///
/// Bit `a-1` holds atom `a` (1-indexed from the photon-entry edge);
/// a set bit marks an excited atom.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct BasisConfig(pub u64);

impl BasisConfig {
    /// Every atom in its ground state.
    pub const ALL_GROUND: Self = Self(0);

    /// Every one of the `m` atoms excited.
    pub fn all_excited(m: usize) -> Self {
        debug_assert!(m <= MAX_ATOMS);
        if m == 0 {
            Self(0)
        } else {
            Self(u64::MAX >> (64 - m))
        }
    }

    /// Mask with only atom `atom` (1-indexed) excited.
    pub fn single_excited(atom: usize) -> Self {
        Self(Self::bit(atom))
    }

    /// Number of excited atoms.
    pub fn excitations(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Is atom `atom` (1-indexed) excited?
    pub fn is_excited(self, atom: usize) -> bool {
        self.0 & Self::bit(atom) != 0
    }

    /// Copy with atom `atom` excited.
    pub fn with_excited(self, atom: usize) -> Self {
        Self(self.0 | Self::bit(atom))
    }

    /// Copy with atom `atom` de-excited.
    pub fn with_ground(self, atom: usize) -> Self {
        Self(self.0 & !Self::bit(atom))
    }

    /// Occupation string with atom 1 leftmost, `1` marking an excited atom.
    pub fn occupation_string(self, m: usize) -> String {
        (1..=m)
            .map(|a| if self.is_excited(a) { '1' } else { '0' })
            .collect()
    }

    fn bit(atom: usize) -> u64 {
        debug_assert!((1..=MAX_ATOMS).contains(&atom));
        1u64 << (atom - 1)
    }
}

/// Serialized form of one state amplitude: `{mask, re, im}`.
///
/// A state file is a JSON array of these entries; all masks must share one
/// excitation count and fit the declared atom count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeEntry {
    pub mask: u64,
    pub re: f64,
    pub im: f64,
}

/// A sparse superposition over basis configs of one fixed excitation sector.
///
/// States are immutable after construction; evolution builds new states.
/// The `sector` label is retained even when every amplitude of a branch has
/// been annihilated (a zero branch still "belongs" somewhere for bookkeeping).
#[derive(Clone, Debug, PartialEq)]
pub struct MediumState {
    m: usize,
    sector: usize,
    amps: BTreeMap<BasisConfig, C64>,
}

impl MediumState {
    /// The vacuum of excitations: every atom ground, amplitude 1.
    pub fn new_all_ground(m: usize) -> SrsResult<Self> {
        Self::check_capacity(m)?;
        let mut amps = BTreeMap::new();
        amps.insert(BasisConfig::ALL_GROUND, C64::new(1.0, 0.0));
        Ok(Self { m, sector: 0, amps })
    }

    /// The fully inverted medium: every atom excited, amplitude 1.
    pub fn new_all_excited(m: usize) -> SrsResult<Self> {
        Self::check_capacity(m)?;
        let mut amps = BTreeMap::new();
        amps.insert(BasisConfig::all_excited(m), C64::new(1.0, 0.0));
        Ok(Self { m, sector: m, amps })
    }

    /// Build a state from explicit `(config, amplitude)` pairs.
    ///
    /// All configs must fit within `m` atoms and share one excitation count;
    /// exact-zero amplitudes are dropped, and an entirely zero input is
    /// rejected (a caller-constructed state should be normalizable).
    pub fn from_amplitudes<I>(m: usize, entries: I) -> SrsResult<Self>
    where
        I: IntoIterator<Item = (BasisConfig, C64)>,
    {
        Self::check_capacity(m)?;
        let mut amps: BTreeMap<BasisConfig, C64> = BTreeMap::new();
        let mut sector: Option<usize> = None;
        for (config, amp) in entries {
            if m < 64 && config.0 >> m != 0 {
                return Err(SrsError::InvalidStatePayload {
                    reason: format!("mask {:#b} does not fit {} atoms", config.0, m),
                });
            }
            let k = config.excitations();
            match sector {
                None => sector = Some(k),
                Some(s) if s != k => {
                    return Err(SrsError::InvalidStatePayload {
                        reason: format!(
                            "configs mix excitation counts {s} and {k}; \
                             a state lives in a single sector"
                        ),
                    });
                }
                _ => {}
            }
            if amp != C64::new(0.0, 0.0) {
                *amps.entry(config).or_insert_with(|| C64::new(0.0, 0.0)) += amp;
            }
        }
        let state = Self {
            m,
            sector: sector.unwrap_or(0),
            amps,
        };
        if state.norm_sq() == 0.0 {
            return Err(SrsError::ZeroState {
                op: "state construction",
            });
        }
        Ok(state)
    }

    /// Deserialize from the `{mask, re, im}` entry list.
    pub fn from_entries(m: usize, entries: &[AmplitudeEntry]) -> SrsResult<Self> {
        if entries.is_empty() {
            return Err(SrsError::InvalidStatePayload {
                reason: "empty amplitude list".into(),
            });
        }
        Self::from_amplitudes(
            m,
            entries
                .iter()
                .map(|e| (BasisConfig(e.mask), C64::new(e.re, e.im))),
        )
    }

    /// Serialize to the `{mask, re, im}` entry list (ascending mask order).
    pub fn to_entries(&self) -> Vec<AmplitudeEntry> {
        self.amps
            .iter()
            .map(|(config, amp)| AmplitudeEntry {
                mask: config.0,
                re: amp.re,
                im: amp.im,
            })
            .collect()
    }

    /// Internal: wrap a prepared amplitude map.
    pub(crate) fn from_map(m: usize, sector: usize, amps: BTreeMap<BasisConfig, C64>) -> Self {
        debug_assert!(amps.keys().all(|c| c.excitations() == sector));
        Self { m, sector, amps }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Excitation count shared by every stored config.
    pub fn sector(&self) -> usize {
        self.sector
    }

    /// Number of stored (nonzero) amplitudes.
    pub fn support_len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_zero(&self) -> bool {
        self.amps.is_empty()
    }

    /// Amplitude on `config` (zero when absent).
    pub fn amplitude(&self, config: BasisConfig) -> C64 {
        self.amps
            .get(&config)
            .copied()
            .unwrap_or_else(|| C64::new(0.0, 0.0))
    }

    /// Stored amplitudes in ascending mask order.
    pub fn amplitudes(&self) -> impl Iterator<Item = (BasisConfig, C64)> + '_ {
        self.amps.iter().map(|(&c, &a)| (c, a))
    }

    pub(crate) fn map(&self) -> &BTreeMap<BasisConfig, C64> {
        &self.amps
    }

    /// Squared norm, summed in ascending mask order (deterministic).
    pub fn norm_sq(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    /// Inner product, conjugate-linear in `self`.
    ///
    /// States in different sectors are exactly orthogonal, so the result is
    /// zero without touching any amplitudes.
    pub fn inner(&self, other: &Self) -> SrsResult<C64> {
        if self.m != other.m {
            return Err(SrsError::AtomCountMismatch {
                left: self.m,
                right: other.m,
            });
        }
        if self.sector != other.sector {
            return Ok(C64::new(0.0, 0.0));
        }
        let mut acc = C64::new(0.0, 0.0);
        for (config, amp) in &self.amps {
            if let Some(b) = other.amps.get(config) {
                acc += amp.conj() * b;
            }
        }
        Ok(acc)
    }

    /// Per-atom excitation probability of the normalized state.
    ///
    /// Entry `a-1` is the probability that atom `a` is excited; entries sum
    /// to the sector number for any state.
    pub fn excitation_profile(&self) -> SrsResult<Vec<f64>> {
        let norm = self.norm_sq();
        if norm == 0.0 {
            return Err(SrsError::ZeroState {
                op: "excitation profile",
            });
        }
        let mut profile = vec![0.0; self.m];
        for (config, amp) in &self.amps {
            let w = amp.norm_sqr();
            for (a, slot) in profile.iter_mut().enumerate() {
                if config.is_excited(a + 1) {
                    *slot += w;
                }
            }
        }
        for slot in &mut profile {
            *slot /= norm;
        }
        Ok(profile)
    }

    /// Copy rescaled by `factor`.
    pub fn scaled(&self, factor: C64) -> Self {
        let amps = self
            .amps
            .iter()
            .map(|(&c, &a)| (c, a * factor))
            .collect();
        Self {
            m: self.m,
            sector: self.sector,
            amps,
        }
    }

    /// Unit-norm copy.
    pub fn normalized(&self) -> SrsResult<Self> {
        let norm = self.norm_sq();
        if norm == 0.0 {
            return Err(SrsError::ZeroState { op: "normalize" });
        }
        Ok(self.scaled(C64::new(1.0 / norm.sqrt(), 0.0)))
    }

    fn check_capacity(m: usize) -> SrsResult<()> {
        if m > MAX_ATOMS {
            Err(SrsError::TooManyAtoms { m })
        } else {
            Ok(())
        }
    }
}

impl fmt::Display for MediumState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} atoms, sector {}: ", self.m, self.sector)?;
        for (i, (config, amp)) in self.amps.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(
                f,
                "({:.6}{:+.6}i)|{}>",
                amp.re,
                amp.im,
                config.occupation_string(self.m)
            )?;
        }
        if self.amps.is_empty() {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Model parameters: atom count, coupling angle, and the derived amplitudes.
///
/// The single coupling angle `j` fixes the local scattering amplitudes
/// `b = cos j` (no conversion) and `c = i sin j` (conversion); `p = b^2` is
/// the per-atom elastic probability. The optional rate parameters describe
/// the weak-coupling limit: a photon flux `rho` (photons per unit time) and
/// the decay constant `gamma = j^2 * rho`; the optional geometry parameters
/// map atom index to coordinate via `x = a / atom_density`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    m: usize,
    j: f64,
    b: C64,
    c: C64,
    p: f64,
    gamma: Option<f64>,
    photon_flux: Option<f64>,
    atom_density: Option<f64>,
    length: Option<f64>,
    amp_prune: f64,
}

impl ModelParams {
    /// `m` atoms with coupling angle `j` in `[0, pi/2]`.
    pub fn new(m: usize, j: f64) -> SrsResult<Self> {
        if m > MAX_ATOMS {
            return Err(SrsError::TooManyAtoms { m });
        }
        if !j.is_finite() || !(0.0..=FRAC_PI_2).contains(&j) {
            return Err(SrsError::InvalidCoupling { j });
        }
        let b = C64::new(j.cos(), 0.0);
        let c = C64::new(0.0, j.sin());
        Ok(Self {
            m,
            j,
            b,
            c,
            p: b.re * b.re,
            gamma: None,
            photon_flux: None,
            atom_density: None,
            length: None,
            amp_prune: DEFAULT_AMP_PRUNE,
        })
    }

    /// Set the decay constant; must satisfy `gamma = j^2 * flux` when the
    /// photon flux is also set.
    pub fn with_gamma(mut self, gamma: f64) -> SrsResult<Self> {
        if !gamma.is_finite() || gamma < 0.0 {
            return Err(SrsError::InvalidArgument {
                op: "with_gamma",
                reason: format!("decay constant must be finite and >= 0, got {gamma}"),
            });
        }
        self.gamma = Some(gamma);
        self.check_rates()?;
        Ok(self)
    }

    /// Set the incident photon flux (photons per unit time).
    pub fn with_photon_flux(mut self, flux: f64) -> SrsResult<Self> {
        if !flux.is_finite() || flux < 0.0 {
            return Err(SrsError::InvalidArgument {
                op: "with_photon_flux",
                reason: format!("photon flux must be finite and >= 0, got {flux}"),
            });
        }
        self.photon_flux = Some(flux);
        self.check_rates()?;
        Ok(self)
    }

    /// Set the medium length; also fixes `atom_density = m / length`.
    pub fn with_length(mut self, length: f64) -> SrsResult<Self> {
        if !length.is_finite() || length <= 0.0 {
            return Err(SrsError::InvalidArgument {
                op: "with_length",
                reason: format!("length must be finite and > 0, got {length}"),
            });
        }
        self.length = Some(length);
        self.atom_density = Some(self.m as f64 / length);
        Ok(self)
    }

    /// Override the amplitude-prune threshold (0 disables pruning).
    pub fn with_amp_prune(mut self, threshold: f64) -> SrsResult<Self> {
        if !threshold.is_finite() || threshold < 0.0 {
            return Err(SrsError::InvalidArgument {
                op: "with_amp_prune",
                reason: format!("prune threshold must be finite and >= 0, got {threshold}"),
            });
        }
        self.amp_prune = threshold;
        Ok(self)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Coupling angle in radians.
    pub fn j(&self) -> f64 {
        self.j
    }

    /// No-conversion amplitude `cos j` (real slot of a complex amplitude).
    pub fn b(&self) -> C64 {
        self.b
    }

    /// Conversion amplitude `i sin j`.
    pub fn c(&self) -> C64 {
        self.c
    }

    /// Per-atom elastic probability `cos^2 j`.
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn gamma(&self) -> Option<f64> {
        self.gamma
    }

    pub fn photon_flux(&self) -> Option<f64> {
        self.photon_flux
    }

    pub fn atom_density(&self) -> Option<f64> {
        self.atom_density
    }

    pub fn length(&self) -> Option<f64> {
        self.length
    }

    pub fn amp_prune(&self) -> f64 {
        self.amp_prune
    }

    /// Atom coordinates `x_a = a / atom_density`, when geometry is set.
    pub fn atom_coordinates(&self) -> Option<Vec<f64>> {
        self.atom_density
            .map(|rho| (1..=self.m).map(|a| a as f64 / rho).collect())
    }

    fn check_rates(&self) -> SrsResult<()> {
        if let (Some(gamma), Some(flux)) = (self.gamma, self.photon_flux) {
            let expected = self.j * self.j * flux;
            if (gamma - expected).abs() > 1e-12 {
                return Err(SrsError::InconsistentRates { gamma, expected });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn vacuum_and_inverted_constructors() {
        let g = MediumState::new_all_ground(3).unwrap();
        assert_eq!(g.sector(), 0);
        assert_eq!(g.amplitude(BasisConfig(0)), c(1.0, 0.0));
        assert_eq!(g.support_len(), 1);

        let e = MediumState::new_all_excited(3).unwrap();
        assert_eq!(e.sector(), 3);
        assert_eq!(e.amplitude(BasisConfig(0b111)), c(1.0, 0.0));

        // Empty medium is a legal (trivial) state.
        let empty = MediumState::new_all_ground(0).unwrap();
        assert_eq!(empty.sector(), 0);
        assert_eq!(empty.norm_sq(), 1.0);

        // Boundary of capacity: a full machine word of atoms is legal.
        let full = MediumState::new_all_excited(64).unwrap();
        assert_eq!(full.amplitude(BasisConfig(u64::MAX)), c(1.0, 0.0));
        assert_eq!(full.sector(), 64);
        assert_eq!(
            MediumState::new_all_ground(65),
            Err(SrsError::TooManyAtoms { m: 65 })
        );
    }

    #[test]
    fn inner_product_conventions() {
        let g = MediumState::new_all_ground(3).unwrap();
        let e = MediumState::new_all_excited(3).unwrap();
        assert_eq!(g.inner(&g).unwrap(), c(1.0, 0.0));
        // Cross-sector overlaps vanish identically.
        assert_eq!(g.inner(&e).unwrap(), c(0.0, 0.0));
        // Conjugate-linear in the first argument.
        let a = MediumState::from_amplitudes(2, [(BasisConfig(0b01), c(0.0, 1.0))]).unwrap();
        let b = MediumState::from_amplitudes(2, [(BasisConfig(0b01), c(1.0, 0.0))]).unwrap();
        assert_eq!(a.inner(&b).unwrap(), c(0.0, -1.0));
        assert_eq!(b.inner(&a).unwrap(), c(0.0, 1.0));
        // Mismatched atom counts are a shape error.
        let g2 = MediumState::new_all_ground(2).unwrap();
        assert_eq!(
            g.inner(&g2),
            Err(SrsError::AtomCountMismatch { left: 3, right: 2 })
        );
    }

    #[test]
    fn excitation_profile_basics() {
        let e = MediumState::new_all_excited(3).unwrap();
        assert_eq!(e.excitation_profile().unwrap(), vec![1.0, 1.0, 1.0]);
        let g = MediumState::new_all_ground(3).unwrap();
        assert_eq!(g.excitation_profile().unwrap(), vec![0.0, 0.0, 0.0]);

        let w = 0.5f64.sqrt();
        let s = MediumState::from_amplitudes(
            3,
            [
                (BasisConfig(0b001), c(w, 0.0)),
                (BasisConfig(0b100), c(0.0, w)),
            ],
        )
        .unwrap();
        let profile = s.excitation_profile().unwrap();
        assert!((profile[0] - 0.5).abs() < 1e-15);
        assert_eq!(profile[1], 0.0);
        assert!((profile[2] - 0.5).abs() < 1e-15);

        let zero = MediumState::from_map(3, 1, BTreeMap::new());
        assert_eq!(
            zero.excitation_profile(),
            Err(SrsError::ZeroState {
                op: "excitation profile"
            })
        );
    }

    #[test]
    fn construction_rejects_mixed_sectors_and_stray_bits() {
        let mixed = MediumState::from_amplitudes(
            3,
            [
                (BasisConfig(0b001), c(1.0, 0.0)),
                (BasisConfig(0b011), c(1.0, 0.0)),
            ],
        );
        assert!(matches!(
            mixed,
            Err(SrsError::InvalidStatePayload { .. })
        ));

        let stray = MediumState::from_amplitudes(2, [(BasisConfig(0b100), c(1.0, 0.0))]);
        assert!(matches!(stray, Err(SrsError::InvalidStatePayload { .. })));
    }

    #[test]
    fn entry_round_trip() {
        let s = MediumState::from_amplitudes(
            4,
            [
                (BasisConfig(0b0011), c(0.5, -0.25)),
                (BasisConfig(0b1010), c(-0.125, 0.75)),
            ],
        )
        .unwrap();
        let back = MediumState::from_entries(4, &s.to_entries()).unwrap();
        assert_eq!(s, back);
        assert!(matches!(
            MediumState::from_entries(4, &[]),
            Err(SrsError::InvalidStatePayload { .. })
        ));
    }

    #[test]
    fn params_validation() {
        let p = ModelParams::new(5, 0.3).unwrap();
        assert!((p.b().norm_sqr() + p.c().norm_sqr() - 1.0).abs() < 1e-15);
        assert!((p.p() - 0.3f64.cos().powi(2)).abs() < 1e-15);

        assert!(matches!(
            ModelParams::new(65, 0.1),
            Err(SrsError::TooManyAtoms { m: 65 })
        ));
        assert!(matches!(
            ModelParams::new(3, -0.1),
            Err(SrsError::InvalidCoupling { .. })
        ));
        assert!(matches!(
            ModelParams::new(3, 2.0),
            Err(SrsError::InvalidCoupling { .. })
        ));

        // gamma = j^2 * flux is enforced when both are given.
        let ok = ModelParams::new(1, 0.1)
            .unwrap()
            .with_photon_flux(100.0)
            .unwrap()
            .with_gamma(0.1f64.powi(2) * 100.0);
        assert!(ok.is_ok());
        let bad = ModelParams::new(1, 0.1)
            .unwrap()
            .with_photon_flux(100.0)
            .unwrap()
            .with_gamma(2.0);
        assert!(matches!(bad, Err(SrsError::InconsistentRates { .. })));
    }

    #[test]
    fn geometry_reporting() {
        let p = ModelParams::new(4, 0.2).unwrap().with_length(2.0).unwrap();
        assert_eq!(p.atom_density(), Some(2.0));
        assert_eq!(p.atom_coordinates().unwrap(), vec![0.5, 1.0, 1.5, 2.0]);
    }
}

//! Verification checks. Each check measures one documented property of the
//! model against a fixed gate and reports the measured value either way, so
//! a failure always says what was seen, not just that it missed.

use std::time::{Duration, Instant};

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use srs_core::observables::{
    first_photon_elastic_amplitude, first_photon_elastic_probability,
    first_photon_excitation_amplitudes, second_photon_elastic_probability,
    second_photon_elastic_truncated, truncated_reversal_gap, PULSE_BAND_EXACT,
};
use srs_core::{
    cooperative_slope, expansion_residual_fit, pulse_metrics, run_exact_tree_traced,
    run_kraus, run_mc, sf_limit_fit, survival_amplitude, sweep, BasisConfig,
    MediumState, ModelParams, PhotonSpin, SectorBasis, SrsError,
    DEFAULT_BRANCH_BUDGET,
};

use crate::config::{AppError, RunConfig};

const ONE: C64 = C64::new(1.0, 0.0);

/// Outcome of one verification check.
#[derive(Clone, Debug)]
pub struct CheckResult {
    /// Stable identifier, also usable as a grep handle in logs.
    pub id: &'static str,
    /// The suite this check belongs to.
    pub suite: &'static str,
    pub passed: bool,
    /// What was measured, always populated (also on internal errors).
    pub measured: String,
    /// The acceptance gate, stated as prose.
    pub gate: &'static str,
    /// The independent reference the measurement is compared against.
    pub reference: &'static str,
    pub runtime: Duration,
}

type Inner = Result<(bool, String), SrsError>;

fn finish(
    id: &'static str,
    suite: &'static str,
    gate: &'static str,
    reference: &'static str,
    t0: Instant,
    inner: Inner,
) -> CheckResult {
    let runtime = t0.elapsed();
    let (passed, measured) = match inner {
        Ok(pair) => pair,
        Err(e) => (false, format!("internal error: {e}")),
    };
    CheckResult {
        id,
        suite,
        passed,
        measured,
        gate,
        reference,
        runtime,
    }
}

/// First-photon scattering coefficients against their closed product forms
/// over the full size/coupling grid.
pub fn check_first_photon_exactness() -> CheckResult {
    let t0 = Instant::now();
    let inner: Inner = (|| {
        let mut max_err = 0.0_f64;
        for m in 1..=20 {
            for j in [0.05, 0.1, 0.3, 0.6] {
                let params = ModelParams::new(m, j)?;
                let ground = MediumState::new_all_ground(m)?;
                let result = sweep(&ground, PhotonSpin::Laser, &params)?;

                let elastic = result.elastic.amplitude(BasisConfig::ALL_GROUND);
                max_err = max_err.max((elastic - first_photon_elastic_amplitude(&params)).norm());
                max_err = max_err
                    .max((result.p_elastic - first_photon_elastic_probability(&params)).abs());

                let excitation = first_photon_excitation_amplitudes(&params)?;
                for atom in 1..=m {
                    let amp = result.inelastic.amplitude(BasisConfig::single_excited(atom));
                    max_err = max_err.max((amp - excitation[atom - 1]).norm());
                }
            }
        }
        let elapsed = t0.elapsed();
        let passed = max_err <= 1e-13 && elapsed < Duration::from_secs(1);
        Ok((
            passed,
            format!(
                "max coefficient error {max_err:.3e} over M=1..20, J in {{0.05,0.1,0.3,0.6}} \
                 in {} ms",
                elapsed.as_millis()
            ),
        ))
    })();
    finish(
        "first-photon-exactness",
        "first-photon",
        "error <= 1e-13 and runtime < 1 s",
        "closed product form of the single-pass amplitudes",
        t0,
        inner,
    )
}

/// Probability conservation of a single pass on random states.
pub fn check_sweep_unitarity() -> CheckResult {
    let t0 = Instant::now();
    let inner: Inner = (|| {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
        let mut max_defect = 0.0_f64;
        for _ in 0..1000 {
            let m = rng.random_range(1..=12);
            let k = rng.random_range(0..=m);
            let basis = SectorBasis::new(m, k)?;
            let entries: Vec<(BasisConfig, C64)> = basis
                .masks()
                .iter()
                .map(|&mask| {
                    (
                        BasisConfig(mask),
                        C64::new(
                            rng.random::<f64>() * 2.0 - 1.0,
                            rng.random::<f64>() * 2.0 - 1.0,
                        ),
                    )
                })
                .collect();
            let state = MediumState::from_amplitudes(m, entries)?.normalized()?;
            let params = ModelParams::new(m, 0.1 + rng.random::<f64>())?;
            for spin in [PhotonSpin::Laser, PhotonSpin::Stokes] {
                let result = sweep(&state, spin, &params)?;
                max_defect =
                    max_defect.max((result.p_elastic + result.p_inelastic - 1.0).abs());
            }
        }
        let elapsed = t0.elapsed();
        let passed = max_defect <= 1e-12 && elapsed < Duration::from_secs(5);
        Ok((
            passed,
            format!(
                "max |P_elastic + P_converted - 1| = {max_defect:.3e} over 1000 random \
                 states (M <= 12, both spins) in {} ms",
                elapsed.as_millis()
            ),
        ))
    })();
    finish(
        "sweep-unitarity",
        "first-photon",
        "defect <= 1e-12 and runtime < 5 s",
        "norm preservation of the local rotation",
        t0,
        inner,
    )
}

/// Row-major complex matrix helpers for the factorization oracle. Kept
/// deliberately naive: the oracle must not share code with the engine.
fn matmul(a: &[C64], b: &[C64], dim: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        for l in 0..dim {
            let ail = a[i * dim + l];
            if ail == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..dim {
                out[i * dim + j] += ail * b[l * dim + j];
            }
        }
    }
    out
}

/// Index of the joint photon+medium basis vector: spin block, then mask.
fn joint(spin: usize, mask: u64, m: usize) -> usize {
    spin * (1 << m) + mask as usize
}

/// The explicit operator for one atom encounter on the joint space.
fn atom_operator(m: usize, atom: usize, b: C64, c: C64) -> Vec<C64> {
    let dim = 2 << m;
    let bit = 1u64 << (atom - 1);
    let mut op = vec![C64::new(0.0, 0.0); dim * dim];
    for mask in 0..(1u64 << m) {
        let excited = mask & bit != 0;
        let (l_in, s_in) = (joint(0, mask, m), joint(1, mask, m));
        if excited {
            // L passes an excited atom; S can de-excite it.
            op[l_in * dim + l_in] = ONE;
            op[s_in * dim + s_in] = b;
            op[joint(0, mask & !bit, m) * dim + s_in] = c;
        } else {
            // S passes a ground atom; L can excite it.
            op[s_in * dim + s_in] = ONE;
            op[l_in * dim + l_in] = b;
            op[joint(1, mask | bit, m) * dim + l_in] = c;
        }
    }
    op
}

/// The sweep as a matrix, column by column, from basis-state passes.
fn sweep_operator(params: &ModelParams) -> Result<Vec<C64>, SrsError> {
    let m = params.m();
    let dim = 2 << m;
    let mut op = vec![C64::new(0.0, 0.0); dim * dim];
    for spin_idx in 0..2 {
        let spin = if spin_idx == 0 {
            PhotonSpin::Laser
        } else {
            PhotonSpin::Stokes
        };
        for mask in 0..(1u64 << m) {
            let state = MediumState::from_amplitudes(m, [(BasisConfig(mask), ONE)])?;
            let result = sweep(&state, spin, params)?;
            let col = joint(spin_idx, mask, m);
            for (cfg, amp) in result.elastic.amplitudes() {
                op[joint(spin_idx, cfg.0, m) * dim + col] = amp;
            }
            for (cfg, amp) in result.inelastic.amplitudes() {
                op[joint(1 - spin_idx, cfg.0, m) * dim + col] = amp;
            }
        }
    }
    Ok(op)
}

/// The full pass must equal the ordered product of per-atom operators.
pub fn check_operator_factorization() -> CheckResult {
    let t0 = Instant::now();
    let inner: Inner = (|| {
        let mut max_entry_err = 0.0_f64;
        let mut max_unitarity = 0.0_f64;
        for m in 1..=4 {
            for j in [0.2, 0.5] {
                let params = ModelParams::new(m, j)?;
                let dim = 2 << m;

                // Ordered product: atom 1 acts first, atom M last.
                let mut product = {
                    let mut id = vec![C64::new(0.0, 0.0); dim * dim];
                    for i in 0..dim {
                        id[i * dim + i] = ONE;
                    }
                    id
                };
                for atom in 1..=m {
                    product = matmul(&atom_operator(m, atom, params.b(), params.c()), &product, dim);
                }

                let swept = sweep_operator(&params)?;
                for (x, y) in swept.iter().zip(&product) {
                    max_entry_err = max_entry_err.max((x - y).norm());
                }

                // U must also be unitary: columns orthonormal.
                for i in 0..dim {
                    for j2 in 0..dim {
                        let mut dot = C64::new(0.0, 0.0);
                        for r in 0..dim {
                            dot += product[r * dim + i].conj() * product[r * dim + j2];
                        }
                        let expect = if i == j2 { 1.0 } else { 0.0 };
                        max_unitarity = max_unitarity.max((dot - expect).norm());
                    }
                }
            }
        }
        let passed = max_entry_err <= 1e-13 && max_unitarity <= 1e-12;
        Ok((
            passed,
            format!(
                "max entrywise gap {max_entry_err:.3e}, max column-orthonormality defect \
                 {max_unitarity:.3e} over M=1..4"
            ),
        ))
    })();
    finish(
        "operator-factorization",
        "first-photon",
        "entrywise gap <= 1e-13",
        "explicit ordered product of per-atom operators",
        t0,
        inner,
    )
}

/// Two-photon elastic probability against its closed form.
pub fn check_second_photon_product_form() -> CheckResult {
    let t0 = Instant::now();
    let inner: Inner = (|| {
        let mut max_err = 0.0_f64;
        let mut max_analytic = 0.0_f64;
        let spins = [PhotonSpin::Laser, PhotonSpin::Laser];
        for m in 1..=10 {
            for j in [0.1, 0.2, 0.3] {
                let params = ModelParams::new(m, j)?;
                let ground = MediumState::new_all_ground(m)?;
                let run =
                    run_exact_tree_traced(&params, &ground, &spins, 0.0, DEFAULT_BRANCH_BUDGET)?;
                let engine = run.steps[1].p_elastic;
                let closed = second_photon_elastic_probability(&params)?;
                max_err = max_err.max((engine - closed).abs());
            }
        }
        // Single-atom sanity: the closed form must collapse to p^2 + (1 - p).
        for j in [0.1, 0.2, 0.3, 0.6] {
            let params = ModelParams::new(1, j)?;
            let p = params.p();
            let collapsed = p * p + (1.0 - p);
            max_analytic = max_analytic
                .max((second_photon_elastic_probability(&params)? - collapsed).abs());
        }
        let passed = max_err <= 1e-10 && max_analytic <= 1e-13;
        Ok((
            passed,
            format!(
                "max engine-vs-closed-form gap {max_err:.3e} over M=1..10, J in \
                 {{0.1,0.2,0.3}}; single-atom collapse gap {max_analytic:.3e}"
            ),
        ))
    })();
    finish(
        "second-photon-product-form",
        "second-photon",
        "gap <= 1e-10; single-atom collapse <= 1e-13",
        "closed-form two-photon elastic probability",
        t0,
        inner,
    )
}

/// Order of the residual between the two-photon ratio and its quadratic
/// weak-drive reference, fitted on a log-log grid.
pub fn check_expansion_order() -> CheckResult {
    let t0 = Instant::now();
    let inner: Inner = (|| {
        let fit = expansion_residual_fit(10, &[0.1, 0.05, 0.025])?;
        let passed = (fit.slope - 4.0).abs() <= 0.2;
        Ok((
            passed,
            format!(
                "log-log residual slope {:.6} (intercept {:.3}, max fit residual {:.1e}) \
                 at M=10, s in {{0.1,0.05,0.025}}",
                fit.slope, fit.intercept, fit.max_residual
            ),
        ))
    })();
    finish(
        "weak-drive-expansion-order",
        "second-photon",
        "slope within 4 +/- 0.2",
        "quadratic reference 1 - 2 s^2 for the two-photon ratio",
        t0,
        inner,
    )
}

/// Size scaling of the second photon's conversion excess at weak coupling.
pub fn check_cooperative_scaling() -> CheckResult {
    let t0 = Instant::now();
    let inner: Inner = (|| {
        let result = cooperative_slope(&[8, 16, 32, 64], 0.02)?;
        let elapsed = t0.elapsed();
        let passed = (1.9..=2.1).contains(&result.fit.slope) && elapsed < Duration::from_secs(10);
        Ok((
            passed,
            format!(
                "log-log slope of the second-photon conversion excess vs M: {:.6} \
                 (J=0.02, M in {{8,16,32,64}}) in {} ms",
                result.fit.slope,
                elapsed.as_millis()
            ),
        ))
    })();
    finish(
        "cooperative-size-scaling",
        "cooperative",
        "slope in [1.9, 2.1] and runtime < 10 s",
        "power-law fit over medium sizes",
        t0,
        inner,
    )
}

/// Direction of the two-photon interference: the second photon converts
/// more readily than the first, and dropping the double-conversion pathway
/// reverses the comparison of the elastic marginals.
pub fn check_interference_direction() -> CheckResult {
    let t0 = Instant::now();
    let inner: Inner = (|| {
        let spins = [PhotonSpin::Laser, PhotonSpin::Laser];
        let mut min_enhancement = f64::INFINITY;
        let mut min_reversal = f64::INFINITY;
        let mut max_identity_gap = 0.0_f64;
        for m in 3..=20 {
            for j in [0.05, 0.1, 0.2, 0.3] {
                let params = ModelParams::new(m, j)?;
                let ground = MediumState::new_all_ground(m)?;
                let run =
                    run_exact_tree_traced(&params, &ground, &spins, 0.0, DEFAULT_BRANCH_BUDGET)?;
                min_enhancement =
                    min_enhancement.min(run.steps[1].p_inelastic - run.steps[0].p_inelastic);

                let truncated = second_photon_elastic_truncated(&params)?;
                let first = first_photon_elastic_probability(&params);
                min_reversal = min_reversal.min(truncated - first);
                max_identity_gap = max_identity_gap
                    .max(((truncated - first) - truncated_reversal_gap(&params)).abs());
            }
        }
        let passed = min_enhancement > 0.0 && min_reversal > 0.0 && max_identity_gap <= 1e-12;
        Ok((
            passed,
            format!(
                "min second-vs-first conversion excess {min_enhancement:.3e}; min \
                 elastic-marginal reversal after truncation {min_reversal:.3e}; max gap \
                 to the closed-form reversal {max_identity_gap:.3e} (M=3..20)"
            ),
        ))
    })();
    finish(
        "interference-direction",
        "second-photon",
        "excess > 0, truncated reversal > 0, closed-form gap <= 1e-12",
        "full channel vs the channel with double conversion removed",
        t0,
        inner,
    )
}

/// Stepwise survival of a single excited atom under a Stokes stream.
pub fn check_stepwise_decay() -> CheckResult {
    let t0 = Instant::now();
    let inner: Inner = (|| {
        let checkpoints = [1usize, 10, 100, 1000, 10_000];
        let mut max_err = 0.0_f64;
        // J tops out at 0.25: by N = 10^4 the squared survival amplitude is
        // ~1e-273, still a normal f64; above J ~ 0.27 it underflows to zero
        // and the engine (correctly) refuses the zero-norm state.
        for j in [0.01, 0.03, 0.1, 0.25] {
            let params = ModelParams::new(1, j)?.with_amp_prune(0.0)?;
            let mut state = MediumState::new_all_excited(1)?;
            for n in 1..=10_000usize {
                state = sweep(&state, PhotonSpin::Stokes, &params)?.elastic;
                if checkpoints.contains(&n) {
                    let amp = state.amplitude(BasisConfig::single_excited(1));
                    let closed = survival_amplitude(j, n);
                    max_err = max_err.max((amp - C64::new(closed, 0.0)).norm());
                }
            }
        }
        let passed = max_err <= 1e-12;
        Ok((
            passed,
            format!(
                "max |amplitude - (cos J)^N| = {max_err:.3e} for N up to 10^4, \
                 J in {{0.01,0.03,0.1,0.25}}"
            ),
        ))
    })();
    finish(
        "stepwise-decay",
        "decay",
        "error <= 1e-12 up to N = 10^4",
        "geometric survival law",
        t0,
        inner,
    )
}

/// Convergence rate toward the continuous exponential-decay limit.
pub fn check_continuous_limit() -> CheckResult {
    let t0 = Instant::now();
    let inner: Inner = (|| {
        let fit = sf_limit_fit(&[0.1, 0.05, 0.025], 1.0, 2.0)?;
        let passed = (fit.slope - 2.0).abs() <= 0.2;
        Ok((
            passed,
            format!(
                "log-log slope of |stepwise - exponential| vs J: {:.6} \
                 (gamma=1, t=2, max fit residual {:.1e})",
                fit.slope, fit.max_residual
            ),
        ))
    })();
    finish(
        "continuous-limit",
        "sf-limit",
        "slope within 2 +/- 0.2",
        "exponential decay e^{-gamma t / 2} at matched gamma = J^2 flux",
        t0,
        inner,
    )
}

/// Shape of the conversion pulse under a long laser stream.
pub fn check_pulse_shape() -> CheckResult {
    let t0 = Instant::now();
    let inner: Inner = (|| {
        let params = ModelParams::new(10, 0.3)?;
        let ground = MediumState::new_all_ground(10)?;
        let spins = vec![PhotonSpin::Laser; 300];
        let run = run_kraus(&params, &ground, &spins)?;
        let series: Vec<f64> = run.steps.iter().map(|s| s.p_inelastic).collect();
        let metrics = pulse_metrics(&series, PULSE_BAND_EXACT)?;
        let final_excitation = run.steps.last().map(|s| s.mean_excitation).unwrap_or(0.0);
        let elapsed = t0.elapsed();
        let passed = metrics.is_pulse
            && metrics.final_value < 0.1 * metrics.peak_value
            && final_excitation > 9.0
            && elapsed < Duration::from_secs(120);
        Ok((
            passed,
            format!(
                "peak {:.4} at photon {}, final {:.2e} ({}), final mean excitation {:.4} \
                 of 10 in {} ms",
                metrics.peak_value,
                metrics.peak_index + 1,
                metrics.final_value,
                match (metrics.is_pulse, metrics.unimodal) {
                    (true, true) => "clean interior pulse",
                    (true, false) => "interior pulse with tail ringing",
                    (false, _) => "NOT an interior pulse",
                },
                final_excitation,
                elapsed.as_millis()
            ),
        ))
    })();
    finish(
        "pulse-shape",
        "modes",
        "interior peak, final < 0.1 x peak, final excitation > 0.9 M, runtime < 2 min",
        "mixed-state channel at M=10, J=0.3, N=300",
        t0,
        inner,
    )
}

/// Trajectory sampling against the mixed-state channel, plus bitwise
/// reproducibility across worker-pool sizes.
pub fn check_sampler_agreement() -> CheckResult {
    let t0 = Instant::now();
    let inner: Inner = (|| {
        let params = ModelParams::new(8, 0.3)?;
        let ground = MediumState::new_all_ground(8)?;
        let spins = vec![PhotonSpin::Laser; 100];
        let trials = 10_000u64;
        let seed = 0xACCE55;

        let kraus = run_kraus(&params, &ground, &spins)?;

        let mut runs = Vec::new();
        for threads in [1usize, 2, 8] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| SrsError::InvalidArgument {
                    op: "worker pool",
                    reason: e.to_string(),
                })?;
            let stats = pool.install(|| run_mc(&params, &ground, &spins, trials, seed))?;
            runs.push(stats);
        }
        let identical = runs
            .iter()
            .skip(1)
            .all(|r| r.converted_counts() == runs[0].converted_counts());

        let mut within = 0usize;
        let mut worst_pull = 0.0_f64;
        for (n, step) in kraus.steps.iter().enumerate() {
            let p = step.p_inelastic;
            let f = runs[0].converted_frequency(n);
            let sigma = (p * (1.0 - p) / trials as f64).sqrt();
            let pull = (f - p).abs() / sigma.max(1e-15);
            if (f - p).abs() <= 3.0 * sigma + 1e-15 {
                within += 1;
            }
            worst_pull = worst_pull.max(pull);
        }
        let passed = within >= 97 && identical;
        Ok((
            passed,
            format!(
                "{within}/100 per-photon frequencies within 3 sigma of the channel \
                 (worst pull {worst_pull:.2} sigma); pools of 1/2/8 threads {}",
                if identical {
                    "bitwise identical"
                } else {
                    "DIVERGED"
                }
            ),
        ))
    })();
    finish(
        "sampler-channel-agreement",
        "modes",
        ">= 97/100 within 3 sigma; identical tallies across 1/2/8 threads",
        "mixed-state channel marginals at matched parameters",
        t0,
        inner,
    )
}

type Check = fn() -> CheckResult;

pub const SUITE_NAMES: &[&str] = &[
    "first-photon",
    "second-photon",
    "decay",
    "cooperative",
    "sf-limit",
    "modes",
    "all",
];

const FIRST_PHOTON: &[Check] = &[
    check_first_photon_exactness,
    check_sweep_unitarity,
    check_operator_factorization,
];
const SECOND_PHOTON: &[Check] = &[
    check_second_photon_product_form,
    check_expansion_order,
    check_interference_direction,
];
const DECAY: &[Check] = &[check_stepwise_decay];
const COOPERATIVE: &[Check] = &[check_cooperative_scaling];
const SF_LIMIT: &[Check] = &[check_continuous_limit];
const MODES: &[Check] = &[check_pulse_shape, check_sampler_agreement];

/// The checks belonging to a named suite, or `None` for an unknown name.
pub fn suite_checks(suite: &str) -> Option<Vec<Check>> {
    match suite {
        "first-photon" => Some(FIRST_PHOTON.to_vec()),
        "second-photon" => Some(SECOND_PHOTON.to_vec()),
        "decay" => Some(DECAY.to_vec()),
        "cooperative" => Some(COOPERATIVE.to_vec()),
        "sf-limit" => Some(SF_LIMIT.to_vec()),
        "modes" => Some(MODES.to_vec()),
        "all" => {
            let mut all = Vec::new();
            all.extend_from_slice(FIRST_PHOTON);
            all.extend_from_slice(SECOND_PHOTON);
            all.extend_from_slice(COOPERATIVE);
            all.extend_from_slice(DECAY);
            all.extend_from_slice(SF_LIMIT);
            all.extend_from_slice(MODES);
            Some(all)
        }
        _ => None,
    }
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<i32, AppError> {
    let suite = cfg.suite.as_deref().unwrap_or("all");
    let checks = suite_checks(suite).ok_or_else(|| {
        AppError::Usage(format!(
            "unknown suite '{suite}' (expected one of: {})",
            SUITE_NAMES.join(", ")
        ))
    })?;

    println!("suite '{suite}': {} check(s)", checks.len());
    println!();
    let mut passed = 0usize;
    for check in &checks {
        let result = check();
        let status = if result.passed { "PASS" } else { "FAIL" };
        passed += result.passed as usize;
        println!(
            "[{status}] {} ({}, {} ms)",
            result.id,
            result.suite,
            result.runtime.as_millis()
        );
        println!("       measured:  {}", result.measured);
        println!("       gate:      {}", result.gate);
        println!("       reference: {}", result.reference);
        println!();
    }
    println!("{passed}/{} checks passed", checks.len());
    Ok(if passed == checks.len() { 0 } else { 1 })
}

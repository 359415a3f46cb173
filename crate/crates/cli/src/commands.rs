//! Subcommand implementations. Each returns the process exit code, with
//! usage problems and compute failures reported through [`AppError`].

use serde::Serialize;
use srs_core::{
    decay_comparison, expansion_residual_fit, second_photon_ratio, sf_limit_fit,
    survival_amplitude, sweep, CooperativeFit, MediumState, PhotonSpin, StepRecord,
    DEFAULT_BRANCH_BUDGET, MAX_ATOMS,
};
use srs_core::cooperative_slope;
use srs_core::observables::PULSE_BAND_EXACT;
use srs_core::pulse_metrics;
use srs_core::{run_exact_tree_traced, run_kraus, run_mc};

use crate::config::{AppError, Mode, RunConfig};
use crate::output::{
    fmt_float, step_rows, write_json, ParamsEcho, Summary, Table, Totals,
    ARTIFACT_VERSION, STEP_COLUMNS,
};
use crate::plot::write_line_plot;

fn usage(msg: impl Into<String>) -> AppError {
    AppError::Usage(msg.into())
}

/// Run the configured photon stream through the configured engine.
fn run_steps(
    cfg: &RunConfig,
    m: usize,
    initial: &MediumState,
    spins: &[PhotonSpin],
) -> Result<Vec<StepRecord>, AppError> {
    let params = cfg.params_for(m)?;
    let steps = match cfg.mode {
        Mode::Tree => {
            run_exact_tree_traced(&params, initial, spins, cfg.prune_eps, DEFAULT_BRANCH_BUDGET)?
                .steps
        }
        Mode::Kraus => run_kraus(&params, initial, spins)?.steps,
        Mode::Mc => run_mc(&params, initial, spins, cfg.trials, cfg.seed)?.steps(),
    };
    Ok(steps)
}

/// The probability that photon `n` exits Stokes-polarized: the conversion
/// probability for an L photon, the survival probability for an S photon.
fn stokes_exit(steps: &[StepRecord], spins: &[PhotonSpin]) -> Vec<f64> {
    steps
        .iter()
        .zip(spins)
        .map(|(step, spin)| match spin {
            PhotonSpin::Laser => step.p_inelastic,
            PhotonSpin::Stokes => step.p_elastic,
        })
        .collect()
}

pub fn cmd_evolve(cfg: &RunConfig) -> Result<i32, AppError> {
    let spins = cfg.spins()?;
    let (m, initial) = cfg.medium()?;
    let steps = run_steps(cfg, m, &initial, &spins)?;
    let p_stokes = stokes_exit(&steps, &spins);

    let table = Table {
        title: "per-photon evolution record".to_string(),
        echo: cfg.echo(Some(m), spins.len()),
        columns: STEP_COLUMNS,
        rows: step_rows(&steps, &p_stokes),
    };
    table.write(cfg.out.as_deref())?;

    // Pulse metrics tolerate sampling noise in mc mode through a band of
    // two standard errors; exact engines use the roundoff band.
    let band = steps
        .iter()
        .filter_map(|s| s.stokes_stderr)
        .fold(PULSE_BAND_EXACT, |acc, se| acc.max(2.0 * se));
    let pulse = pulse_metrics(&p_stokes, band).ok();

    let totals = match steps.last() {
        Some(last) => Totals {
            photons: steps.len(),
            total_stokes_weight: p_stokes.iter().sum(),
            mean_stokes_probability: p_stokes.iter().sum::<f64>() / steps.len() as f64,
            peak_stokes_probability: p_stokes.iter().copied().fold(0.0, f64::max),
            final_mean_excitation: last.mean_excitation,
            final_sector_entropy: last.sector_entropy,
        },
        None => Totals {
            photons: 0,
            total_stokes_weight: 0.0,
            mean_stokes_probability: 0.0,
            peak_stokes_probability: 0.0,
            final_mean_excitation: initial.sector() as f64,
            final_sector_entropy: 0.0,
        },
    };
    let summary = Summary {
        version: ARTIFACT_VERSION,
        command: "evolve",
        params: ParamsEcho::new(cfg, m, spins.len()),
        totals,
        pulse,
    };
    write_json(&summary, cfg.out.as_deref())?;

    if let Some(plot_path) = &cfg.plot {
        write_line_plot(
            plot_path,
            "Stokes-exit probability per photon",
            "photon index n",
            "P_stokes",
            &p_stokes,
        )?;
    }
    Ok(0)
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<i32, AppError> {
    let spins = crate::config::parse_pattern(&cfg.pattern, cfg.photons.or(Some(1)))?;
    let [spin] = spins[..] else {
        return Err(usage(format!(
            "sweep inspects a single photon; the pattern resolves to {} photons",
            spins.len()
        )));
    };
    let (m, initial) = cfg.medium()?;
    let params = cfg.params_for(m)?;
    let result = sweep(&initial, spin, &params)?;

    let mut echo = cfg.echo(Some(m), 1);
    echo.push(("p_elastic", fmt_float(result.p_elastic)));
    echo.push(("p_inelastic", fmt_float(result.p_inelastic)));

    let mut rows = Vec::new();
    for (exit_spin, branch) in [
        (spin, &result.elastic),
        (spin.flipped(), &result.inelastic),
    ] {
        for (cfg_bits, amp) in branch.amplitudes() {
            rows.push(vec![
                exit_spin.symbol().to_string(),
                cfg_bits.occupation_string(m),
                fmt_float(amp.re),
                fmt_float(amp.im),
                fmt_float(amp.norm_sqr()),
            ]);
        }
    }
    let table = Table {
        title: "single-photon branch amplitudes".to_string(),
        echo,
        columns: &["exit", "occupation", "re", "im", "weight"],
        rows,
    };
    table.write(cfg.out.as_deref())?;
    Ok(0)
}

/// Parsed `--scan` specification.
enum ScanList {
    Atoms(Vec<usize>),
    Coupling(Vec<f64>),
    Photons(Vec<usize>),
}

fn parse_scan(spec: &str) -> Result<ScanList, AppError> {
    let (name, list) = spec
        .split_once('=')
        .ok_or_else(|| usage(format!("scan '{spec}' is not of the form name=v1,v2,...")))?;
    let values: Vec<&str> = list
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .collect();
    if values.is_empty() {
        return Err(usage(format!("scan '{spec}' lists no values")));
    }
    match name.trim() {
        "m" => {
            let ms = values
                .iter()
                .map(|v| v.parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| usage(format!("scan value in '{spec}': {e}")))?;
            for &m in &ms {
                if m == 0 || m > MAX_ATOMS {
                    return Err(usage(format!(
                        "scan atom count {m} is outside 1..={MAX_ATOMS}"
                    )));
                }
            }
            Ok(ScanList::Atoms(ms))
        }
        "j" => {
            let js = values
                .iter()
                .map(|v| v.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| usage(format!("scan value in '{spec}': {e}")))?;
            for &j in &js {
                if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&j) {
                    return Err(usage(format!(
                        "scan coupling {j} is outside [0, pi/2]"
                    )));
                }
            }
            Ok(ScanList::Coupling(js))
        }
        "photons" => {
            let ns = values
                .iter()
                .map(|v| v.parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| usage(format!("scan value in '{spec}': {e}")))?;
            Ok(ScanList::Photons(ns))
        }
        other => Err(usage(format!(
            "unknown scan parameter '{other}' (expected m, j, or photons)"
        ))),
    }
}

/// JSON summary for a fitted scan.
#[derive(Serialize)]
struct FitSummary {
    version: &'static str,
    command: &'static str,
    fit: String,
    points: usize,
    slope: f64,
    intercept: f64,
    max_residual: f64,
    nominal_slope: f64,
    tol: Option<f64>,
    within_tol: Option<bool>,
}

/// JSON summary for a plain (unfitted) scan.
#[derive(Serialize)]
struct ScanSummary {
    version: &'static str,
    command: &'static str,
    parameter: String,
    points: usize,
}

fn finish_fit(
    cfg: &RunConfig,
    kind: &str,
    nominal: f64,
    slope: f64,
    intercept: f64,
    max_residual: f64,
    points: usize,
    table: Table,
    plot_ys: &[f64],
) -> Result<i32, AppError> {
    table.write(cfg.out.as_deref())?;
    let within = cfg.tol.map(|tol| (slope - nominal).abs() <= tol);
    let summary = FitSummary {
        version: ARTIFACT_VERSION,
        command: "scan",
        fit: kind.to_string(),
        points,
        slope,
        intercept,
        max_residual,
        nominal_slope: nominal,
        tol: cfg.tol,
        within_tol: within,
    };
    write_json(&summary, cfg.out.as_deref())?;
    if let Some(plot_path) = &cfg.plot {
        write_line_plot(plot_path, &format!("{kind} scan"), "point", "value", plot_ys)?;
    }
    match within {
        Some(false) => {
            eprintln!(
                "fit '{kind}': slope {slope:.6} misses the nominal {nominal} \
                 by more than --tol {}",
                cfg.tol.unwrap_or_default()
            );
            Ok(1)
        }
        _ => Ok(0),
    }
}

pub fn cmd_scan(cfg: &RunConfig) -> Result<i32, AppError> {
    let spec = cfg
        .scan
        .as_deref()
        .ok_or_else(|| usage("scan requires --scan name=v1,v2,..."))?;
    let list = parse_scan(spec)?;

    match cfg.fit.as_deref() {
        Some("cooperative") => {
            let ScanList::Atoms(ms) = &list else {
                return Err(usage("fit 'cooperative' needs a scan over m"));
            };
            let result: CooperativeFit = cooperative_slope(ms, cfg.coupling)?;
            for point in result.points.iter().filter(|p| !p.used) {
                eprintln!(
                    "warning: scan point m={} excluded from the fit \
                     (no measurable second-photon difference)",
                    point.m
                );
            }
            let mut echo = cfg.echo(None, 2);
            echo.push(("scan", spec.to_string()));
            echo.push(("fit", "cooperative".to_string()));
            let rows = result
                .points
                .iter()
                .map(|p| {
                    vec![
                        p.m.to_string(),
                        fmt_float(p.first_conversion),
                        fmt_float(p.second_conversion),
                        fmt_float(p.difference),
                        p.used.to_string(),
                    ]
                })
                .collect();
            let plot_ys: Vec<f64> = result.points.iter().map(|p| p.difference).collect();
            let table = Table {
                title: "second-photon conversion excess vs medium size".to_string(),
                echo,
                columns: &[
                    "m",
                    "first_conversion",
                    "second_conversion",
                    "difference",
                    "used",
                ],
                rows,
            };
            finish_fit(
                cfg,
                "cooperative",
                2.0,
                result.fit.slope,
                result.fit.intercept,
                result.fit.max_residual,
                result.points.len(),
                table,
                &plot_ys,
            )
        }
        Some("sf-limit") => {
            let ScanList::Coupling(js) = &list else {
                return Err(usage("fit 'sf-limit' needs a scan over j"));
            };
            let gamma = cfg
                .gamma
                .ok_or_else(|| usage("fit 'sf-limit' requires --gamma"))?;
            let time = cfg
                .time
                .ok_or_else(|| usage("fit 'sf-limit' requires --time"))?;
            let fit = sf_limit_fit(js, gamma, time)?;
            let mut echo = cfg.echo(None, 0);
            echo.push(("scan", spec.to_string()));
            echo.push(("fit", "sf-limit".to_string()));
            let mut rows = Vec::new();
            let mut plot_ys = Vec::new();
            let limit = (-gamma * time / 2.0).exp();
            for &j in js {
                let photons = (gamma * time / (j * j)).round().max(1.0) as usize;
                let amp = survival_amplitude(j, photons);
                let gap = (amp - limit).abs();
                plot_ys.push(gap);
                rows.push(vec![
                    fmt_float(j),
                    photons.to_string(),
                    fmt_float(amp),
                    fmt_float(limit),
                    fmt_float(gap),
                ]);
            }
            let table = Table {
                title: "survival vs continuous-decay limit".to_string(),
                echo,
                columns: &["j", "photons", "amplitude", "limit_value", "difference"],
                rows,
            };
            finish_fit(
                cfg,
                "sf-limit",
                2.0,
                fit.slope,
                fit.intercept,
                fit.max_residual,
                js.len(),
                table,
                &plot_ys,
            )
        }
        Some("expansion") => {
            let ScanList::Coupling(js) = &list else {
                return Err(usage("fit 'expansion' needs a scan over j"));
            };
            let m = cfg
                .atoms
                .ok_or_else(|| usage("fit 'expansion' requires --atoms"))?;
            let strengths: Vec<f64> = js.iter().map(|j| m as f64 * j * j).collect();
            let fit = expansion_residual_fit(m, &strengths)?;
            let mut echo = cfg.echo(Some(m), 2);
            echo.push(("scan", spec.to_string()));
            echo.push(("fit", "expansion".to_string()));
            let mut rows = Vec::new();
            let mut plot_ys = Vec::new();
            for (&j, &s) in js.iter().zip(&strengths) {
                let check = second_photon_ratio(&srs_core::ModelParams::new(m, j)?)?;
                plot_ys.push(check.residual.abs());
                rows.push(vec![
                    fmt_float(j),
                    fmt_float(s),
                    fmt_float(check.ratio),
                    fmt_float(check.quadratic_reference),
                    fmt_float(check.residual),
                ]);
            }
            let table = Table {
                title: "second-photon ratio vs weak-drive reference".to_string(),
                echo,
                columns: &["j", "strength", "ratio", "quadratic_reference", "residual"],
                rows,
            };
            finish_fit(
                cfg,
                "expansion",
                4.0,
                fit.slope,
                fit.intercept,
                fit.max_residual,
                js.len(),
                table,
                &plot_ys,
            )
        }
        Some("decay") => {
            let ScanList::Photons(ns) = &list else {
                return Err(usage("fit 'decay' needs a scan over photons"));
            };
            let (m, _) = cfg.medium()?;
            let params = cfg.params_for(m)?;
            let mut echo = cfg.echo(Some(m), 0);
            echo.push(("scan", spec.to_string()));
            echo.push(("fit", "decay".to_string()));
            let mut rows = Vec::new();
            let mut plot_ys = Vec::new();
            let mut max_gap = 0.0_f64;
            for &n in ns {
                let cmp = decay_comparison(&params, n)?;
                max_gap = max_gap.max(cmp.difference.abs());
                plot_ys.push(cmp.amplitude);
                rows.push(vec![
                    n.to_string(),
                    fmt_float(cmp.time),
                    fmt_float(cmp.amplitude),
                    fmt_float(cmp.limit_value),
                    fmt_float(cmp.difference),
                ]);
            }
            let table = Table {
                title: "stepwise survival vs exponential decay".to_string(),
                echo,
                columns: &["photons", "time", "amplitude", "limit_value", "difference"],
                rows,
            };
            table.write(cfg.out.as_deref())?;
            #[derive(Serialize)]
            struct DecaySummary {
                version: &'static str,
                command: &'static str,
                fit: &'static str,
                points: usize,
                max_difference: f64,
                tol: Option<f64>,
                within_tol: Option<bool>,
            }
            let within = cfg.tol.map(|tol| max_gap <= tol);
            write_json(
                &DecaySummary {
                    version: ARTIFACT_VERSION,
                    command: "scan",
                    fit: "decay",
                    points: ns.len(),
                    max_difference: max_gap,
                    tol: cfg.tol,
                    within_tol: within,
                },
                cfg.out.as_deref(),
            )?;
            if let Some(plot_path) = &cfg.plot {
                write_line_plot(plot_path, "decay scan", "point", "amplitude", &plot_ys)?;
            }
            if within == Some(false) {
                eprintln!(
                    "fit 'decay': max difference {max_gap:.3e} exceeds --tol {}",
                    cfg.tol.unwrap_or_default()
                );
                return Ok(1);
            }
            Ok(0)
        }
        Some(other) => Err(usage(format!(
            "unknown fit '{other}' (expected cooperative, sf-limit, expansion, or decay)"
        ))),
        None => {
            // Plain scan: run the configured stream at each point and record
            // one summary row per point.
            let (name, count) = match &list {
                ScanList::Atoms(v) => ("m", v.len()),
                ScanList::Coupling(v) => ("j", v.len()),
                ScanList::Photons(v) => ("photons", v.len()),
            };
            let mut rows = Vec::new();
            let mut plot_ys = Vec::new();
            for idx in 0..count {
                let mut point = cfg.clone();
                let value = match &list {
                    ScanList::Atoms(v) => {
                        if !matches!(point.initial.as_str(), "ground" | "excited") {
                            return Err(usage(
                                "a scan over m cannot use a fixed state file as --initial",
                            ));
                        }
                        point.atoms = Some(v[idx]);
                        v[idx].to_string()
                    }
                    ScanList::Coupling(v) => {
                        point.coupling = v[idx];
                        fmt_float(v[idx])
                    }
                    ScanList::Photons(v) => {
                        if !matches!(point.pattern.as_str(), "L*" | "S*") {
                            return Err(usage(
                                "a scan over photons needs a starred pattern (L* or S*)",
                            ));
                        }
                        point.photons = Some(v[idx]);
                        v[idx].to_string()
                    }
                };
                let spins = point.spins()?;
                let (m, initial) = point.medium()?;
                let steps = run_steps(&point, m, &initial, &spins)?;
                let p_stokes = stokes_exit(&steps, &spins);
                let mean = if steps.is_empty() {
                    0.0
                } else {
                    p_stokes.iter().sum::<f64>() / steps.len() as f64
                };
                let (final_exc, final_ent) = steps
                    .last()
                    .map(|s| (s.mean_excitation, s.sector_entropy))
                    .unwrap_or((initial.sector() as f64, 0.0));
                plot_ys.push(mean);
                rows.push(vec![
                    value,
                    spins.len().to_string(),
                    fmt_float(mean),
                    fmt_float(final_exc),
                    fmt_float(final_ent),
                ]);
            }
            let mut echo = cfg.echo(None, cfg.photons.unwrap_or(0));
            echo.push(("scan", spec.to_string()));
            let columns: &'static [&'static str] = match &list {
                ScanList::Atoms(_) => &[
                    "m",
                    "photons",
                    "mean_stokes_probability",
                    "final_mean_excitation",
                    "final_sector_entropy",
                ],
                ScanList::Coupling(_) => &[
                    "j",
                    "photons",
                    "mean_stokes_probability",
                    "final_mean_excitation",
                    "final_sector_entropy",
                ],
                ScanList::Photons(_) => &[
                    "photons",
                    "stream_length",
                    "mean_stokes_probability",
                    "final_mean_excitation",
                    "final_sector_entropy",
                ],
            };
            let table = Table {
                title: "parameter scan".to_string(),
                echo,
                columns,
                rows,
            };
            table.write(cfg.out.as_deref())?;
            write_json(
                &ScanSummary {
                    version: ARTIFACT_VERSION,
                    command: "scan",
                    parameter: name.to_string(),
                    points: count,
                },
                cfg.out.as_deref(),
            )?;
            if let Some(plot_path) = &cfg.plot {
                write_line_plot(
                    plot_path,
                    "parameter scan",
                    name,
                    "mean P_stokes",
                    &plot_ys,
                )?;
            }
            Ok(0)
        }
    }
}

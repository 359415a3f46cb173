//! Run configuration: command-line flags, the JSON config file that mirrors
//! them, and the merged, validated result the commands consume.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use srs_core::{AmplitudeEntry, MediumState, ModelParams, PhotonSpin, SrsError, MAX_ATOMS};

/// CLI-level failure, split by exit code: usage errors exit 2, compute and
/// I/O errors exit 1.
#[derive(Debug)]
pub enum AppError {
    Usage(String),
    Compute(String),
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AppError::Usage(msg) | AppError::Compute(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<SrsError> for AppError {
    fn from(e: SrsError) -> Self {
        AppError::Compute(e.to_string())
    }
}

/// Wrap an I/O error with the path it concerns.
pub fn io_error(path: &Path, e: std::io::Error) -> AppError {
    AppError::Compute(format!("{}: {e}", path.display()))
}

fn usage(msg: impl Into<String>) -> AppError {
    AppError::Usage(msg.into())
}

/// Flags shared by every subcommand; each is optional so values can also
/// come from `--config`. Explicit flags win over file values.
#[derive(clap::Args, Clone, Debug, Default)]
pub struct CommonArgs {
    /// Evolution mode: tree, kraus, or mc
    #[arg(long)]
    pub mode: Option<String>,
    /// Number of atoms in the medium
    #[arg(long)]
    pub atoms: Option<usize>,
    /// Per-atom coupling angle J in radians, 0 <= J <= pi/2
    #[arg(long)]
    pub coupling: Option<f64>,
    /// Photon count (required with starred patterns)
    #[arg(long)]
    pub photons: Option<usize>,
    /// Photon spin pattern: "L*", "S*", or an explicit string like LLSLS
    #[arg(long)]
    pub pattern: Option<String>,
    /// Initial medium: ground, excited, or a JSON state-file path
    #[arg(long)]
    pub initial: Option<String>,
    /// Trajectory count (mc mode)
    #[arg(long)]
    pub trials: Option<u64>,
    /// Master seed for trajectory sampling
    #[arg(long)]
    pub seed: Option<u64>,
    /// Branch prune threshold (tree mode)
    #[arg(long = "prune-eps")]
    pub prune_eps: Option<f64>,
    /// Worker thread count (defaults to all cores)
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output CSV path; the JSON summary lands next to it as .json
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write an SVG line plot of the Stokes-exit probability here
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// Verification suite: first-photon, second-photon, decay, cooperative,
    /// sf-limit, modes, or all
    #[arg(long)]
    pub suite: Option<String>,
    /// Scan list, e.g. "m=8,16,32,64" or "j=0.1,0.05,0.025"
    #[arg(long)]
    pub scan: Option<String>,
    /// Scaling fit over the scan: cooperative, sf-limit, or expansion
    #[arg(long)]
    pub fit: Option<String>,
    /// Decay rate for the rate-equation comparison
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Photon flux (photons per unit time)
    #[arg(long)]
    pub flux: Option<f64>,
    /// Elapsed time for the rate-equation comparison
    #[arg(long)]
    pub time: Option<f64>,
    /// Gate for scan fits: exit nonzero if |slope - nominal| exceeds this
    #[arg(long)]
    pub tol: Option<f64>,
    /// JSON config file mirroring these flags; explicit flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// The JSON config-file schema: same names as the flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    mode: Option<String>,
    atoms: Option<usize>,
    coupling: Option<f64>,
    photons: Option<usize>,
    pattern: Option<String>,
    initial: Option<String>,
    trials: Option<u64>,
    seed: Option<u64>,
    #[serde(rename = "prune-eps", alias = "prune_eps")]
    prune_eps: Option<f64>,
    threads: Option<usize>,
    out: Option<PathBuf>,
    plot: Option<PathBuf>,
    suite: Option<String>,
    scan: Option<String>,
    fit: Option<String>,
    gamma: Option<f64>,
    flux: Option<f64>,
    time: Option<f64>,
    tol: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Tree,
    Kraus,
    Mc,
}

impl Mode {
    fn parse(name: &str) -> Result<Self, AppError> {
        match name {
            "tree" => Ok(Mode::Tree),
            "kraus" => Ok(Mode::Kraus),
            "mc" => Ok(Mode::Mc),
            other => Err(usage(format!(
                "unknown mode '{other}' (expected tree, kraus, or mc)"
            ))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Tree => "tree",
            Mode::Kraus => "kraus",
            Mode::Mc => "mc",
        })
    }
}

/// Fully merged and validated run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub mode: Mode,
    pub atoms: Option<usize>,
    pub coupling: f64,
    pub photons: Option<usize>,
    pub pattern: String,
    pub initial: String,
    pub trials: u64,
    pub seed: u64,
    pub prune_eps: f64,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub plot: Option<PathBuf>,
    pub suite: Option<String>,
    pub scan: Option<String>,
    pub fit: Option<String>,
    pub gamma: Option<f64>,
    pub flux: Option<f64>,
    pub time: Option<f64>,
    pub tol: Option<f64>,
}

impl RunConfig {
    /// Merge flags over the optional config file and validate everything
    /// that can be checked without running.
    pub fn resolve(args: &CommonArgs) -> Result<Self, AppError> {
        let file = match &args.config {
            Some(path) => {
                let text =
                    std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
                serde_json::from_str::<FileConfig>(&text).map_err(|e| {
                    usage(format!("{}: invalid config file: {e}", path.display()))
                })?
            }
            None => FileConfig::default(),
        };

        let mode = Mode::parse(
            args.mode
                .as_deref()
                .or(file.mode.as_deref())
                .unwrap_or("kraus"),
        )?;
        let atoms = args.atoms.or(file.atoms);
        if let Some(m) = atoms {
            if m == 0 || m > MAX_ATOMS {
                return Err(usage(format!(
                    "--atoms {m} is outside the medium capacity 1..={MAX_ATOMS}"
                )));
            }
        }
        let coupling = args.coupling.or(file.coupling).unwrap_or(0.3);
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&coupling) {
            return Err(usage(format!(
                "--coupling {coupling} must lie in [0, pi/2]"
            )));
        }
        let trials = args.trials.or(file.trials).unwrap_or(1000);
        if trials == 0 {
            return Err(usage("--trials must be at least 1"));
        }
        let prune_eps = args.prune_eps.or(file.prune_eps).unwrap_or(0.0);
        if !prune_eps.is_finite() || prune_eps < 0.0 {
            return Err(usage(format!(
                "--prune-eps {prune_eps} must be finite and nonnegative"
            )));
        }

        Ok(Self {
            mode,
            atoms,
            coupling,
            photons: args.photons.or(file.photons),
            pattern: args
                .pattern
                .clone()
                .or(file.pattern)
                .unwrap_or_else(|| "L*".to_string()),
            initial: args
                .initial
                .clone()
                .or(file.initial)
                .unwrap_or_else(|| "ground".to_string()),
            trials,
            seed: args.seed.or(file.seed).unwrap_or(42),
            prune_eps,
            threads: args.threads.or(file.threads),
            out: args.out.clone().or(file.out),
            plot: args.plot.clone().or(file.plot),
            suite: args.suite.clone().or(file.suite),
            scan: args.scan.clone().or(file.scan),
            fit: args.fit.clone().or(file.fit),
            gamma: args.gamma.or(file.gamma),
            flux: args.flux.or(file.flux),
            time: args.time.or(file.time),
            tol: args.tol.or(file.tol),
        })
    }

    /// Atom count and initial state, reconciling `--atoms` with a state
    /// file's own atom count when one is given.
    pub fn medium(&self) -> Result<(usize, MediumState), AppError> {
        match self.initial.as_str() {
            "ground" => {
                let m = self.require_atoms()?;
                Ok((m, MediumState::new_all_ground(m)?))
            }
            "excited" => {
                let m = self.require_atoms()?;
                Ok((m, MediumState::new_all_excited(m)?))
            }
            path => {
                let path = Path::new(path);
                let text =
                    std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
                let parsed: StateFile = serde_json::from_str(&text).map_err(|e| {
                    usage(format!("{}: invalid state file: {e}", path.display()))
                })?;
                if let Some(m) = self.atoms {
                    if m != parsed.m {
                        return Err(usage(format!(
                            "--atoms {m} conflicts with the {}-atom state in {}",
                            parsed.m,
                            path.display()
                        )));
                    }
                }
                let state = MediumState::from_entries(parsed.m, &parsed.entries)?;
                Ok((parsed.m, state))
            }
        }
    }

    fn require_atoms(&self) -> Result<usize, AppError> {
        self.atoms
            .ok_or_else(|| usage("--atoms is required (or supply a state file via --initial)"))
    }

    /// Model parameters for a resolved atom count.
    pub fn params_for(&self, m: usize) -> Result<ModelParams, AppError> {
        let mut params = ModelParams::new(m, self.coupling)?;
        if let Some(flux) = self.flux {
            params = params.with_photon_flux(flux)?;
        }
        if let Some(gamma) = self.gamma {
            params = params.with_gamma(gamma)?;
        }
        Ok(params)
    }

    /// The photon stream described by `--pattern`/`--photons`.
    pub fn spins(&self) -> Result<Vec<PhotonSpin>, AppError> {
        parse_pattern(&self.pattern, self.photons)
    }

    /// Ordered parameter echo for output headers. `atoms` is the resolved
    /// count when one medium governs the whole run, `None` when it varies
    /// (scans over m). Deliberately excludes the thread count: outputs are
    /// identical for any thread count, and the echo must be too.
    pub fn echo(&self, atoms: Option<usize>, photon_count: usize) -> Vec<(&'static str, String)> {
        let mut pairs = vec![
            ("mode", self.mode.to_string()),
            (
                "atoms",
                atoms
                    .or(self.atoms)
                    .map(|m| m.to_string())
                    .unwrap_or_else(|| "-".to_string()),
            ),
            ("coupling", format!("{:e}", self.coupling)),
            ("photons", photon_count.to_string()),
            ("pattern", self.pattern.clone()),
            ("initial", self.initial.clone()),
            ("trials", self.trials.to_string()),
            ("seed", self.seed.to_string()),
            ("prune_eps", format!("{:e}", self.prune_eps)),
        ];
        if let Some(g) = self.gamma {
            pairs.push(("gamma", format!("{g:e}")));
        }
        if let Some(f) = self.flux {
            pairs.push(("flux", format!("{f:e}")));
        }
        if let Some(t) = self.time {
            pairs.push(("time", format!("{t:e}")));
        }
        pairs
    }
}

/// Photon-stream grammar: "L*" / "S*" repeated to `--photons`, or an
/// explicit string of L and S characters.
pub fn parse_pattern(
    pattern: &str,
    photons: Option<usize>,
) -> Result<Vec<PhotonSpin>, AppError> {
    match pattern {
        "L*" | "S*" => {
            let n = photons.ok_or_else(|| {
                usage(format!("pattern '{pattern}' needs --photons to fix the count"))
            })?;
            let spin = if pattern == "L*" {
                PhotonSpin::Laser
            } else {
                PhotonSpin::Stokes
            };
            Ok(vec![spin; n])
        }
        explicit => {
            if explicit.is_empty() {
                return Err(usage("--pattern must not be empty"));
            }
            let mut spins = Vec::with_capacity(explicit.len());
            for ch in explicit.chars() {
                spins.push(match ch {
                    'L' => PhotonSpin::Laser,
                    'S' => PhotonSpin::Stokes,
                    other => {
                        return Err(usage(format!(
                            "pattern character '{other}' is not L or S \
                             (expected \"L*\", \"S*\", or an explicit L/S string)"
                        )))
                    }
                });
            }
            if let Some(n) = photons {
                if n != spins.len() {
                    return Err(usage(format!(
                        "--photons {n} conflicts with the {}-photon pattern '{explicit}'",
                        spins.len()
                    )));
                }
            }
            Ok(spins)
        }
    }
}

/// On-disk JSON state format: atom count plus amplitude entries.
#[derive(Debug, Deserialize, serde::Serialize)]
pub struct StateFile {
    pub m: usize,
    pub entries: Vec<AmplitudeEntry>,
}

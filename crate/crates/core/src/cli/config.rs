//! Flag and TOML ingestion. Flags override the file, the file overrides defaults.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::kernels::QuadratureSpec;
use crate::model::{ModelParams, Momentum, Vec3};

#[derive(Debug, Parser)]
#[command(
    name = "pffiber",
    version,
    about = "Spectral data of the one-photon truncated Pauli-Fierz fiber Hamiltonian"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Coupling constant
    #[arg(long, global = true)]
    pub e: Option<f64>,
    /// Ultraviolet cutoff radius
    #[arg(long = "R", global = true)]
    pub cutoff: Option<f64>,
    /// Infrared parameter in [0, 1/2)
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    /// Energy shift, a number or "auto"
    #[arg(long, global = true)]
    pub gamma0: Option<String>,
    /// Smallest |p| of the sweep
    #[arg(long, global = true)]
    pub p_min: Option<f64>,
    /// Largest |p| of the sweep
    #[arg(long, global = true)]
    pub p_max: Option<f64>,
    /// Number of sweep points
    #[arg(long, global = true)]
    pub p_count: Option<usize>,
    /// Sweep direction as x,y,z
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub direction: Option<Vec<f64>>,
    /// Root-finding tolerance
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Oracle grid: radial nodes
    #[arg(long, global = true)]
    pub quad_nrho: Option<usize>,
    /// Oracle grid: polar nodes
    #[arg(long, global = true)]
    pub quad_nt: Option<usize>,
    /// Oracle grid: azimuthal nodes
    #[arg(long, global = true)]
    pub quad_nphi: Option<usize>,
    /// Absolute tolerance of the radial kernel quadrature
    #[arg(long, global = true)]
    pub quad_tol: Option<f64>,
    /// Output file (default: stdout)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Exit with status 2 when an audit fails
    #[arg(long, global = true)]
    pub strict: bool,
    /// TOML file with any of the options above (underscored names)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Band edge and ground-state energy along a momentum sweep
    Dispersion,
    /// Inverse effective mass by formula, finite difference and sigma limit
    Effmass(EffmassArgs),
    /// Apply the resolvent to a state vector
    Resolvent(ResolventArgs),
    /// Compare the discretized ground state with the secular root
    OracleCompare(OracleArgs),
    /// Audit the a-priori bounds along a momentum sweep
    BoundsAudit,
}

#[derive(Debug, Clone, Default, Args)]
pub struct EffmassArgs {
    /// Finite-difference step (Richardson with h and h/2)
    #[arg(long)]
    pub h: Option<f64>,
    /// Comma-separated sigma values for the sigma -> 0 sequence
    #[arg(long, value_delimiter = ',')]
    pub sigma_sweep: Option<Vec<f64>>,
    /// Allowed formula / finite-difference mismatch
    #[arg(long)]
    pub mass_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ResolventArgs {
    /// Momentum as x,y,z
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub p: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    pub z_re: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub z_im: Option<f64>,
    /// State vector CSV; the vacuum (1, 0, 0) when omitted
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Allowed relative residual
    #[arg(long)]
    pub residual_tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OracleArgs {
    /// Momentum as x,y,z
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub p: Option<Vec<f64>>,
    /// Number of grids; the radial count doubles on each
    #[arg(long)]
    pub levels: Option<usize>,
    /// Write the coarsest dense matrix as row,col,value triplets
    #[arg(long)]
    pub dump_matrix: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Everything a config file may set.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub e: Option<f64>,
    #[serde(rename = "R")]
    pub cutoff: Option<f64>,
    pub sigma: Option<f64>,
    pub gamma0: Option<toml::Value>,
    pub p_min: Option<f64>,
    pub p_max: Option<f64>,
    pub p_count: Option<usize>,
    pub direction: Option<Vec<f64>>,
    pub tol: Option<f64>,
    pub quad_nrho: Option<usize>,
    pub quad_nt: Option<usize>,
    pub quad_nphi: Option<usize>,
    pub quad_tol: Option<f64>,
    pub format: Option<Format>,
    pub strict: Option<bool>,
    pub h: Option<f64>,
    pub sigma_sweep: Option<Vec<f64>>,
    pub mass_tol: Option<f64>,
    pub p: Option<Vec<f64>>,
    pub z_re: Option<f64>,
    pub z_im: Option<f64>,
    pub input: Option<PathBuf>,
    pub residual_tol: Option<f64>,
    pub levels: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub direction: [f64; 3],
}

impl MomentumGrid {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| if i + 1 == self.count { self.max } else { self.min + step * i as f64 })
            .collect()
    }

    pub fn direction(&self) -> Vec3 {
        Vec3::from(self.direction)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCounts {
    pub n_rho: usize,
    pub n_t: usize,
    pub n_phi: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum CommandOptions {
    Dispersion,
    Effmass {
        h: f64,
        sigma_sweep: Option<Vec<f64>>,
        mass_tol: f64,
    },
    Resolvent {
        p: [f64; 3],
        z: [f64; 2],
        input: Option<PathBuf>,
        residual_tol: f64,
    },
    OracleCompare {
        p: [f64; 3],
        levels: usize,
    },
    BoundsAudit,
}

/// Fully resolved run configuration, embedded in every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub params: ModelParams,
    pub gamma0_auto: bool,
    pub p_grid: MomentumGrid,
    pub tol: f64,
    pub quad: QuadratureSpec,
    pub grid: GridCounts,
    pub options: CommandOptions,
    pub format: Format,
    pub strict: bool,
}

impl RunConfig {
    pub fn momentum(p: &[f64; 3]) -> Momentum {
        Momentum(Vec3::from(*p))
    }
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn triple(v: Vec<f64>, what: &str) -> Result<[f64; 3], String> {
    <[f64; 3]>::try_from(v.as_slice())
        .map_err(|_| format!("{what} needs exactly three components, got {}", v.len()))
}

fn parse_gamma0(flag: Option<String>, file: Option<toml::Value>) -> Result<Option<f64>, String> {
    let text = match (flag, file) {
        (Some(s), _) => s,
        (None, Some(toml::Value::String(s))) => s,
        (None, Some(toml::Value::Float(x))) => return Ok(Some(x)),
        (None, Some(toml::Value::Integer(x))) => return Ok(Some(x as f64)),
        (None, Some(other)) => return Err(format!("gamma0 must be a number or \"auto\", got {other}")),
        (None, None) => return Ok(None),
    };
    if text.eq_ignore_ascii_case("auto") {
        return Ok(None);
    }
    text.trim()
        .parse::<f64>()
        .map(Some)
        .map_err(|_| format!("gamma0 must be a number or \"auto\", got {text:?}"))
}

/// Merge flags over the optional file and validate.
pub fn resolve(common: CommonArgs, command: Command) -> Result<RunConfig, String> {
    let file = match &common.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let e = pick(common.e, file.e, 1.0);
    let cutoff = pick(common.cutoff, file.cutoff, 1.0);
    let sigma = pick(common.sigma, file.sigma, 0.0);
    let gamma0 = parse_gamma0(common.gamma0, file.gamma0)?;
    let params = match gamma0 {
        Some(g) => ModelParams::new(e, cutoff, sigma, g),
        None => ModelParams::with_default_gamma0(e, cutoff, sigma),
    }
    .map_err(|err| err.to_string())?;

    let direction = triple(pick(common.direction, file.direction, vec![1.0, 0.0, 0.0]), "direction")?;
    let norm = Vec3::from(direction).norm();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err("direction must be a non-zero vector".into());
    }
    let p_grid = MomentumGrid {
        min: pick(common.p_min, file.p_min, 0.0),
        max: pick(common.p_max, file.p_max, 1.0),
        count: pick(common.p_count, file.p_count, 11),
        direction: (Vec3::from(direction) / norm).into(),
    };
    if !(p_grid.min >= 0.0 && p_grid.max >= p_grid.min && p_grid.max.is_finite()) {
        return Err(format!("need 0 <= p-min <= p-max, got {} and {}", p_grid.min, p_grid.max));
    }
    if p_grid.count == 0 {
        return Err("p-count must be >= 1".into());
    }
    let tol = pick(common.tol, file.tol, 1e-12);
    if !(tol > 0.0) {
        return Err(format!("tol = {tol} must be > 0"));
    }
    let quad = QuadratureSpec {
        abs_tol: pick(common.quad_tol, file.quad_tol, QuadratureSpec::default().abs_tol),
        ..QuadratureSpec::default()
    };
    quad.validate().map_err(|err| err.to_string())?;
    let grid = GridCounts {
        n_rho: pick(common.quad_nrho, file.quad_nrho, 16),
        n_t: pick(common.quad_nt, file.quad_nt, 16),
        n_phi: pick(common.quad_nphi, file.quad_nphi, 8),
    };
    if grid.n_rho < 2 || grid.n_t < 2 || grid.n_phi < 3 {
        return Err("grid counts need quad-nrho >= 2, quad-nt >= 2, quad-nphi >= 3".into());
    }

    let default_p = vec![0.5, 0.0, 0.0];
    let options = match command {
        Command::Dispersion => CommandOptions::Dispersion,
        Command::BoundsAudit => CommandOptions::BoundsAudit,
        Command::Effmass(a) => {
            let h = pick(a.h, file.h, 1e-2);
            if !(h > 0.0 && 2.0 * h < 1.0) {
                return Err(format!("h = {h} must satisfy 0 < 2h < 1"));
            }
            let sigma_sweep = a.sigma_sweep.or(file.sigma_sweep);
            if let Some(s) = &sigma_sweep {
                if s.is_empty() || s.iter().any(|x| !(*x > 0.0 && *x < 0.5)) {
                    return Err("sigma-sweep values must lie in (0, 1/2)".into());
                }
            }
            CommandOptions::Effmass {
                h,
                sigma_sweep,
                mass_tol: pick(a.mass_tol, file.mass_tol, 1e-4),
            }
        }
        Command::Resolvent(a) => CommandOptions::Resolvent {
            p: triple(pick(a.p, file.p, default_p), "p")?,
            z: [pick(a.z_re, file.z_re, 0.0), pick(a.z_im, file.z_im, 1.0)],
            input: a.input.or(file.input),
            residual_tol: pick(a.residual_tol, file.residual_tol, 1e-8),
        },
        Command::OracleCompare(a) => {
            let levels = pick(a.levels, file.levels, 3);
            if levels == 0 || levels > 8 {
                return Err("levels must be between 1 and 8".into());
            }
            CommandOptions::OracleCompare {
                p: triple(pick(a.p, file.p, default_p), "p")?,
                levels,
            }
        }
    };
    Ok(RunConfig {
        params,
        gamma0_auto: gamma0.is_none(),
        p_grid,
        tol,
        quad,
        grid,
        options,
        format: pick(common.format, file.format, Format::Csv),
        strict: common.strict || file.strict.unwrap_or(false),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn flags_override_file() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "e = 0.3\nR = 2.0\ngamma0 = 1.5\np_count = 4\nquad_nrho = 12").unwrap();
        let common = CommonArgs {
            e: Some(0.7),
            config: Some(f.path().to_path_buf()),
            ..Default::default()
        };
        let cfg = resolve(common, Command::Dispersion).unwrap();
        assert_eq!(cfg.params.e, 0.7);
        assert_eq!(cfg.params.cutoff, 2.0);
        assert_eq!(cfg.params.gamma0, 1.5);
        assert!(!cfg.gamma0_auto);
        assert_eq!(cfg.p_grid.count, 4);
        assert_eq!(cfg.grid.n_rho, 12);
    }

    #[test]
    fn auto_gamma0_and_rejections() {
        let common = CommonArgs {
            gamma0: Some("auto".into()),
            ..Default::default()
        };
        let cfg = resolve(common, Command::Dispersion).unwrap();
        assert_eq!(cfg.params.gamma0, std::f64::consts::PI);
        assert!(cfg.gamma0_auto);

        let bad = CommonArgs {
            sigma: Some(0.7),
            ..Default::default()
        };
        assert!(resolve(bad, Command::Dispersion).is_err());
        let bad = CommonArgs {
            direction: Some(vec![0.0, 0.0, 0.0]),
            ..Default::default()
        };
        assert!(resolve(bad, Command::Dispersion).is_err());

        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "unknown_key = 1").unwrap();
        let common = CommonArgs {
            config: Some(f.path().to_path_buf()),
            ..Default::default()
        };
        assert!(resolve(common, Command::Dispersion).is_err());
    }

    #[test]
    fn momentum_grid_endpoints() {
        let g = MomentumGrid {
            min: 0.0,
            max: 1.0,
            count: 3,
            direction: [1.0, 0.0, 0.0],
        };
        assert_eq!(g.values(), vec![0.0, 0.5, 1.0]);
        assert_eq!(MomentumGrid { count: 1, ..g }.values(), vec![0.0]);
    }
}

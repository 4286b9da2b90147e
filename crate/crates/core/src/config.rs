//! Run configuration: a TOML file with a documented schema shared by every
//! command. The required keys drive the ensemble (`n`, `t_end`, `dt`,
//! `seed`, `n_traj`, `m0`); optional tables configure the field sweep, the
//! density solver, the verification suites, and the comparison report.
//!
//! `m0` is either the builtin `"null"` (the zero matrix), a builtin
//! `"two_sources:<c>"` (diagonal sources at ±c, equal multiplicity), or a
//! path to a matrix text file as read by `ComplexMatrix::from_text`
//! (first line n, then n rows of n comma-separated `re,im` pairs).
//! Relative paths resolve against the config file's directory.
//!
//! ```toml
//! n = 2
//! t_end = 1.0
//! dt = 0.01
//! seed = 42
//! n_traj = 4
//! m0 = "null"                 # or "two_sources:1" or "start.mat"
//! frame_stride = 1            # optional: record every k-th step
//! store_matrices = false      # optional: keep M(t) snapshots
//! allow_degenerate_start = true
//!
//! [grid]                      # used by `field` and `pde`
//! x0 = -1.5
//! x1 = 1.5
//! y0 = -1.5
//! y1 = 1.5
//! nx = 41
//! ny = 41
//!
//! [field]                     # `field` command options
//! w = [1e-1, 1e-2, 1e-3]      # strictly decreasing regularization moduli
//! pairing = false             # also emit the pairing-convergence table
//! phi_center = "0+0i"         # Gaussian test function for the pairing table
//! phi_width = 1.0
//!
//! [pde]                       # `pde` command options
//! times = [0.5, 1.0, 2.0]
//!
//! [verify]                    # `verify` command options
//! samples = 20000             # one-step Monte Carlo sample count
//! random_points = 5           # extra random probes per identity suite
//! z = "1+0i"                  # SPDE probe point
//! w = "1+0i"
//!
//! [compare]                   # `compare` command options
//! t = 1.0                     # time slice (default: t_end)
//! r_lo = 0.2
//! r_hi = 0.8
//! n_bins = 3
//! center = "0+0i"
//! ```

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Deserialize;

use crate::burgers;
use crate::error::{Error, Result};
use crate::field::FieldGrid;
use crate::linalg::ComplexMatrix;
use crate::process::ProcessConfig;

/// Parsed configuration file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub t_end: f64,
    pub dt: f64,
    pub seed: u64,
    pub n_traj: u64,
    /// `"null"`, `"two_sources:<c>"`, or a matrix text file path.
    pub m0: String,
    #[serde(default = "default_stride")]
    pub frame_stride: usize,
    #[serde(default)]
    pub store_matrices: bool,
    #[serde(default = "default_true")]
    pub allow_degenerate_start: bool,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub field: Option<FieldConfig>,
    #[serde(default)]
    pub pde: Option<PdeConfig>,
    #[serde(default)]
    pub verify: Option<VerifyConfig>,
    #[serde(default)]
    pub compare: Option<CompareConfig>,
}

fn default_stride() -> usize {
    1
}

fn default_true() -> bool {
    true
}

/// Rectangular z-grid shared by the field sweep and the density solver.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
}

/// Options for the `field` command.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    #[serde(default = "default_w_sequence")]
    pub w: Vec<f64>,
    /// Also run the w → 0 pairing sweep and emit its convergence table.
    #[serde(default)]
    pub pairing: bool,
    /// Center of the Gaussian test function used by the pairing table.
    #[serde(default = "default_phi_center")]
    pub phi_center: String,
    /// Width of that Gaussian.
    #[serde(default = "default_phi_width")]
    pub phi_width: f64,
}

fn default_w_sequence() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3]
}

fn default_phi_center() -> String {
    "0+0i".into()
}

fn default_phi_width() -> f64 {
    1.0
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            w: default_w_sequence(),
            pairing: false,
            phi_center: default_phi_center(),
            phi_width: default_phi_width(),
        }
    }
}

/// Options for the `pde` command.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeConfig {
    pub times: Vec<f64>,
}

/// Options for the `verify` command.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_random_points")]
    pub random_points: usize,
    #[serde(default = "default_probe")]
    pub z: String,
    #[serde(default = "default_probe")]
    pub w: String,
}

fn default_samples() -> usize {
    20_000
}

fn default_random_points() -> usize {
    5
}

fn default_probe() -> String {
    "1+0i".into()
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            samples: default_samples(),
            random_points: default_random_points(),
            z: default_probe(),
            w: default_probe(),
        }
    }
}

/// Options for the `compare` command.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    /// Time slice to compare at; defaults to `t_end`.
    #[serde(default)]
    pub t: Option<f64>,
    #[serde(default = "default_r_lo")]
    pub r_lo: f64,
    #[serde(default = "default_r_hi")]
    pub r_hi: f64,
    #[serde(default = "default_n_bins")]
    pub n_bins: usize,
    #[serde(default = "default_phi_center")]
    pub center: String,
}

fn default_r_lo() -> f64 {
    0.2
}

fn default_r_hi() -> f64 {
    0.8
}

fn default_n_bins() -> usize {
    3
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            t: None,
            r_lo: default_r_lo(),
            r_hi: default_r_hi(),
            n_bins: default_n_bins(),
            center: default_phi_center(),
        }
    }
}

/// A config together with its raw text (echoed into manifests) and the
/// directory relative m0 paths resolve against.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub cfg: RunConfig,
    pub raw: String,
    pub base_dir: PathBuf,
}

/// Read and parse a config file.
pub fn load(path: &Path) -> Result<LoadedConfig> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    let cfg = parse(&raw)?;
    let base_dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(LoadedConfig { cfg, raw, base_dir })
}

/// Parse config text and check the schema-level invariants that serde
/// cannot express.
pub fn parse(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Parse a complex scalar written as `a`, `bi`, or `a+bi`.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    s.trim()
        .parse::<Complex64>()
        .map_err(|_| Error::Config(format!("cannot parse complex number from {s:?}")))
}

impl RunConfig {
    /// Structural checks beyond types: positive counts, ordered grids.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if let Some(g) = &self.grid {
            if g.nx == 0 || g.ny == 0 {
                return Err(Error::Config("grid needs nx, ny >= 1".into()));
            }
            if !(g.x1 >= g.x0) || !(g.y1 >= g.y0) {
                return Err(Error::Config("grid needs x1 >= x0 and y1 >= y0".into()));
            }
        }
        if let Some(p) = &self.pde {
            if p.times.is_empty() {
                return Err(Error::Config("[pde] times must be nonempty".into()));
            }
            if p.times.iter().any(|t| !t.is_finite() || *t <= 0.0) {
                return Err(Error::Config(
                    "[pde] times must be positive and finite".into(),
                ));
            }
        }
        if let Some(c) = &self.compare {
            if !(c.r_hi > c.r_lo) || c.r_lo < 0.0 {
                return Err(Error::Config("[compare] needs 0 <= r_lo < r_hi".into()));
            }
            if c.n_bins == 0 {
                return Err(Error::Config("[compare] needs n_bins >= 1".into()));
            }
        }
        Ok(())
    }

    /// Build the initial matrix. Builtins: `"null"` and `"two_sources:<c>"`;
    /// anything else is a matrix text file path resolved against `base_dir`.
    pub fn resolve_m0(&self, base_dir: &Path) -> Result<ComplexMatrix> {
        let spec = self.m0.trim();
        if spec == "null" {
            return Ok(ComplexMatrix::zeros(self.n));
        }
        if let Some(c_text) = spec.strip_prefix("two_sources:") {
            let c0 = parse_complex(c_text)?;
            return burgers::two_sources(c0, self.n);
        }
        let path = {
            let p = Path::new(spec);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base_dir.join(p)
            }
        };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::Config(format!("cannot read m0 file {}: {e}", path.display())))?;
        let m = ComplexMatrix::from_text(&text)?;
        if m.n() != self.n {
            return Err(Error::Config(format!(
                "m0 file {} is {}×{} but n = {}",
                path.display(),
                m.n(),
                m.n(),
                self.n
            )));
        }
        Ok(m)
    }

    /// Assemble the ensemble configuration, applying an optional seed
    /// override (the CLI's --seed flag).
    pub fn process_config(
        &self,
        base_dir: &Path,
        seed_override: Option<u64>,
    ) -> Result<ProcessConfig> {
        let m0 = self.resolve_m0(base_dir)?;
        let mut pc = ProcessConfig::new(
            self.n,
            self.t_end,
            self.dt,
            m0,
            seed_override.unwrap_or(self.seed),
            self.n_traj,
        )?;
        pc.frame_stride = self.frame_stride;
        pc.store_matrices = self.store_matrices;
        pc.allow_degenerate_start = self.allow_degenerate_start;
        pc.validate()?;
        Ok(pc)
    }

    /// The z-grid with the field w-sequence attached.
    pub fn field_grid(&self) -> Result<FieldGrid> {
        let g = self
            .grid
            .as_ref()
            .ok_or_else(|| Error::Config("the field command needs a [grid] table".into()))?;
        let f = self.field.clone().unwrap_or_default();
        let grid = FieldGrid {
            x0: g.x0,
            x1: g.x1,
            y0: g.y0,
            y1: g.y1,
            nx: g.nx,
            ny: g.ny,
            w_sequence: f.w,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// The z-grid for the density solver.
    pub fn density_grid(&self) -> Result<burgers::DensityGrid> {
        let g = self
            .grid
            .as_ref()
            .ok_or_else(|| Error::Config("the pde command needs a [grid] table".into()))?;
        let grid = burgers::DensityGrid {
            x0: g.x0,
            x1: g.x1,
            y0: g.y0,
            y1: g.y1,
            nx: g.nx,
            ny: g.ny,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// The builtin closed-form density this run can be checked against:
    /// single source for `"null"`, double source for `"two_sources:<c>"`.
    pub fn builtin_density(&self) -> Option<BuiltinDensity> {
        let spec = self.m0.trim();
        if spec == "null" {
            return Some(BuiltinDensity::SingleSource);
        }
        spec.strip_prefix("two_sources:")
            .and_then(|c| parse_complex(c).ok())
            .map(BuiltinDensity::DoubleSource)
    }
}

/// Closed-form reference family for a builtin initial matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BuiltinDensity {
    /// M(0) = 0: circular-law density spreading from the origin.
    SingleSource,
    /// M(0) = diag(c, …, −c, …): two-leaf support.
    DoubleSource(Complex64),
}

impl BuiltinDensity {
    /// Evaluate the closed-form densities at (z, t).
    pub fn closed(&self, t: f64, z: Complex64) -> burgers::ClosedDensity {
        match self {
            BuiltinDensity::SingleSource => burgers::example1_closed(t, z),
            BuiltinDensity::DoubleSource(c0) => burgers::example2_closed(t, z, *c0),
        }
    }
}

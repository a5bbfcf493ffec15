use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constraints::{require_feasible, ParamSet};
use crate::error::{Error, Result};
use crate::io::snapshot::load_field;
use crate::random::{random_field, sine_mode, taylor_green_pair};
use crate::spectral::{GridSpec, SpectralField};

pub const DEFAULT_HORIZON: f64 = 0.5;
pub const DEFAULT_NODE_COUNT: usize = 64;
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 50;

/// A run description. Physical parameters are mandatory; run controls default
/// to `T = 0.5`, `M = 64`, tolerance `1e-10`, 50 iterations, seed 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: ParamSet,
    /// Points per dimension.
    pub grid: usize,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_node_count")]
    pub node_count: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub seed: u64,
    pub initial_data: InitialData,
}

fn default_horizon() -> f64 {
    DEFAULT_HORIZON
}
fn default_node_count() -> usize {
    DEFAULT_NODE_COUNT
}
fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}
fn default_max_iter() -> usize {
    DEFAULT_MAX_ITER
}
fn default_wavevector() -> [i64; 3] {
    [1, 0, 0]
}

/// Where `(u₀, b₀)` come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialData {
    /// `u₀ = A sin(k·x) e`, `b₀ = A sin(k·x) (k̂ × e)` with `e ⟂ k`.
    SingleMode {
        amplitude: f64,
        #[serde(default = "default_wavevector")]
        wavevector: [i64; 3],
    },
    /// The Taylor-Green vortex and its axis-cycled copy.
    TaylorGreenLike { amplitude: f64 },
    /// Independent seeded solenoidal fields of unit grid L² norm, times `amplitude`.
    RandomBandLimited { amplitude: f64, band: i64 },
    /// Fields read from snapshot files.
    Snapshot { u: PathBuf, b: PathBuf },
}

/// Reads, defaults and validates a config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let cfg = parse_config(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })?;
    Ok(cfg)
}

/// Parses and validates config text.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        require_feasible(&self.params)?;
        GridSpec::new(self.grid)?;
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config(format!("horizon {} must be positive", self.horizon)));
        }
        if self.node_count < 2 {
            return Err(Error::Config(format!("node_count {} must be at least 2", self.node_count)));
        }
        if !(self.tolerance > 0.0) || self.max_iter == 0 {
            return Err(Error::Config("tolerance and max_iter must be positive".into()));
        }
        match &self.initial_data {
            InitialData::SingleMode { amplitude, wavevector } => {
                check_amplitude(*amplitude)?;
                if *wavevector == [0, 0, 0] {
                    return Err(Error::Config("single-mode wavevector must be nonzero".into()));
                }
                let cut = self.grid_spec()?.dealias_cutoff();
                if wavevector.iter().any(|k| k.abs() > cut) {
                    return Err(Error::BandLimit(format!("wavevector {wavevector:?} exceeds the cutoff {cut}")));
                }
            }
            InitialData::TaylorGreenLike { amplitude } => check_amplitude(*amplitude)?,
            InitialData::RandomBandLimited { amplitude, band } => {
                check_amplitude(*amplitude)?;
                let cut = self.grid_spec()?.dealias_cutoff();
                if *band < 1 || *band > cut {
                    return Err(Error::BandLimit(format!("band {band} must lie in 1..={cut}")));
                }
            }
            InitialData::Snapshot { .. } => {}
        }
        Ok(())
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.grid)
    }

    /// `(u₀, b₀)` on the configured grid; generated data depend only on the seed.
    pub fn initial_fields(&self) -> Result<(SpectralField, SpectralField)> {
        let g = self.grid_spec()?;
        Ok(match &self.initial_data {
            InitialData::SingleMode { amplitude, wavevector } => single_mode_pair(g, *wavevector, *amplitude),
            InitialData::TaylorGreenLike { amplitude } => {
                let (u, b) = taylor_green_pair(g, *amplitude);
                (u, b)
            }
            InitialData::RandomBandLimited { amplitude, band } => {
                let u = random_field(g, *band, self.seed.wrapping_mul(2), true).scaled(*amplitude);
                let b = random_field(g, *band, self.seed.wrapping_mul(2).wrapping_add(1), true).scaled(*amplitude);
                (u, b)
            }
            InitialData::Snapshot { u, b } => (load_field(u, g)?, load_field(b, g)?),
        })
    }
}

fn check_amplitude(a: f64) -> Result<()> {
    if a.is_finite() && a >= 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("amplitude {a} must be finite and nonnegative")))
    }
}

/// Single-mode pair with polarizations `e ⟂ k` and `k̂ × e`.
pub fn single_mode_pair(grid: GridSpec, k: [i64; 3], amplitude: f64) -> (SpectralField, SpectralField) {
    let kf = k.map(|x| x as f64);
    let norm = |v: [f64; 3]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let cross = |a: [f64; 3], b: [f64; 3]| [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
    // the coordinate axis least aligned with k gives a well-conditioned e
    let axis = (0..3).min_by(|&i, &j| kf[i].abs().total_cmp(&kf[j].abs())).unwrap();
    let mut ax = [0.0; 3];
    ax[axis] = 1.0;
    let e = cross(kf, ax);
    let e = e.map(|x| x / norm(e));
    let khat = kf.map(|x| x / norm(kf));
    let f = cross(khat, e);
    (sine_mode(grid, k, e.map(|x| amplitude * x)), sine_mode(grid, k, f.map(|x| amplitude * x)))
}

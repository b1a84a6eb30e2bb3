//! Experiment configuration files (TOML, unknown keys rejected).

use std::path::{Path, PathBuf};

use pcflab_core::flow::IntegratorConfig;
use pcflab_core::homogeneous::{catalog, LieAlgebraSpec, OdeConfig, ScanConfig};
use pcflab_core::monitors::suite::FlipTarget;
use pcflab_core::monitors::MonitorOptions;
use pcflab_core::torus::{FourierTerm, RealTerm};
use pcflab_core::{SmallMat, C64};
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub domain: Domain,
    #[serde(default)]
    pub initial: InitialData,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub monitors: MonitorSettings,
    #[serde(default)]
    pub identities: IdentitySettings,
    #[serde(default)]
    pub ode: OdeConfig,
    #[serde(default)]
    pub scan: ScanSettings,
    #[serde(default)]
    pub output: OutputSettings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Domain {
    Torus {
        n: usize,
        points: usize,
        #[serde(default = "yes")]
        dealias: bool,
    },
    /// Left-invariant structures on a Lie group: a built-in catalog entry or a
    /// catalog file relative to the config file.
    Algebra {
        #[serde(default)]
        catalog: Option<String>,
        #[serde(default)]
        file: Option<PathBuf>,
    },
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// Flat torus metric, or the identity matrix on an algebra.
    #[default]
    Flat,
    /// `alpha_i = epsilon exp(2 pi i x^{i+1})`.
    Cyclic { epsilon: f64 },
    /// Potential `alpha` from explicit Fourier terms.
    Modes { terms: Vec<FourierTerm> },
    /// Seeded random low-frequency potential with `sup |g - flat| = amplitude`.
    Random { amplitude: f64 },
    /// Kähler metric `flat + i d dbar f`.
    Kahler { terms: Vec<RealTerm> },
    /// Constant Hermitian matrix on an algebra, rows of real and imaginary parts.
    Metric {
        real: Vec<Vec<f64>>,
        #[serde(default)]
        imag: Option<Vec<Vec<f64>>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonitorSettings {
    pub section_power: usize,
    pub formulation_gap: bool,
    pub pluriclosed_residual: bool,
    pub upsilon: bool,
    /// Evaluate the formulation gap after every accepted step.
    pub stepwise_gap: bool,
    /// Largest admissible stepwise gap.
    pub gap_tol: f64,
}

impl Default for MonitorSettings {
    fn default() -> Self {
        let o = MonitorOptions::default();
        Self {
            section_power: o.section_power,
            formulation_gap: o.formulation_gap,
            pluriclosed_residual: o.pluriclosed_residual,
            upsilon: o.upsilon,
            stepwise_gap: false,
            gap_tol: 1e-6,
        }
    }
}

impl MonitorSettings {
    pub fn options(&self) -> MonitorOptions {
        MonitorOptions {
            section_power: self.section_power,
            formulation_gap: self.formulation_gap,
            pluriclosed_residual: self.pluriclosed_residual,
            upsilon: self.upsilon,
        }
    }
}

/// Identity suite and formulation calibration. Uses the cyclic potential of
/// `[initial]` (flat means `epsilon = 0`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentitySettings {
    pub dt: f64,
    pub sample_every: usize,
    pub t_end: f64,
    pub margin_tol: f64,
    pub min_order: f64,
    /// Test hook: reverse the `Q` term of one family.
    pub flip: Option<FlipTarget>,
    pub calibration_samples: usize,
    pub calibration_amplitude: f64,
    pub calibration_tol: f64,
}

impl Default for IdentitySettings {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            sample_every: 4,
            t_end: 0.1,
            margin_tol: 1e-8,
            min_order: 1.9,
            flip: None,
            calibration_samples: 20,
            calibration_amplitude: 0.05,
            calibration_tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSettings {
    pub starts: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ScanSettings {
    fn default() -> Self {
        let s = ScanConfig::default();
        Self { starts: s.starts, tol: s.tol, max_iter: s.max_iter }
    }
}

impl ScanSettings {
    pub fn with_seed(&self, seed: u64) -> ScanConfig {
        ScanConfig { starts: self.starts, tol: self.tol, max_iter: self.max_iter, seed }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSettings {
    pub dir: PathBuf,
    /// Final field snapshot precision: `complex64` or `complex128`.
    pub snapshot: SnapshotPrecision,
    pub plot_script: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotPrecision {
    Complex64,
    Complex128,
    None,
}

impl Default for OutputSettings {
    fn default() -> Self {
        Self { dir: PathBuf::from("pcflab-out"), snapshot: SnapshotPrecision::Complex128, plot_script: true }
    }
}

/// Parsed config with the directory it was read from.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub base: PathBuf,
    /// Raw file text, hashed into the summary.
    pub text: String,
}

pub fn load(path: &Path) -> Result<LoadedConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let config = parse(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(LoadedConfig { config, base, text })
}

pub fn parse(text: &str) -> Result<ExperimentConfig, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}

impl LoadedConfig {
    pub fn torus(&self) -> Result<(usize, usize, bool), Failure> {
        match self.config.domain {
            Domain::Torus { n, points, dealias } => Ok((n, points, dealias)),
            Domain::Algebra { .. } => Err(Failure::Config("this command needs a torus domain".into())),
        }
    }

    pub fn algebra(&self) -> Result<LieAlgebraSpec, Failure> {
        match &self.config.domain {
            Domain::Algebra { catalog: Some(name), file: None } => {
                catalog::builtin(name).map_err(|e| Failure::Config(e.to_string()))
            }
            Domain::Algebra { catalog: None, file: Some(file) } => {
                let path = self.base.join(file);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
                LieAlgebraSpec::parse(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
            }
            Domain::Algebra { .. } => Err(Failure::Config("algebra domain needs exactly one of `catalog` or `file`".into())),
            Domain::Torus { .. } => Err(Failure::Config("this command needs an algebra domain".into())),
        }
    }

    /// Initial invariant metric for an algebra of complex dimension `n`.
    pub fn algebra_metric(&self, n: usize) -> Result<SmallMat, Failure> {
        match &self.config.initial {
            InitialData::Flat => Ok(SmallMat::identity(n)),
            InitialData::Metric { real, imag } => {
                let shape_ok = |m: &Vec<Vec<f64>>| m.len() == n && m.iter().all(|r| r.len() == n);
                if !shape_ok(real) || imag.as_ref().is_some_and(|m| !shape_ok(m)) {
                    return Err(Failure::Config(format!("initial metric must be {n} x {n}")));
                }
                Ok(SmallMat::from_fn(n, |i, j| {
                    C64::new(real[i][j], imag.as_ref().map_or(0.0, |m| m[i][j]))
                }))
            }
            other => Err(Failure::Config(format!("initial data {other:?} does not apply to an algebra"))),
        }
    }
}

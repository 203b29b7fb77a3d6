//! Run configuration, read from TOML. Unknown keys are rejected.

use serde::{Deserialize, Serialize};
use spincool::ensemble::EnsembleSpec;
use spincool::optimize::Objective;
use spincool::reproduce::{Table1Row, TABLE1_COLUMNS};
use spincool::{Backend, BathKernels, Mode, SpectralDensity};
use std::path::Path;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub bath: BathConfig,
    /// Spin frequency `Ω`.
    pub omega: f64,
    /// Seed for multistart optimization and random verification cases.
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleConfig>,
    pub kernels: KernelsConfig,
    pub fig1: Fig1Config,
    pub table1: Table1Config,
    pub optimize: OptimizeConfig,
    pub evolve: EvolveConfig,
    pub verify: VerifyConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BathKind {
    Ohmic,
    OneOverF,
    Discrete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendName {
    ClosedForm,
    Quadrature,
    DiscreteSum,
}

impl From<BackendName> for Backend {
    fn from(b: BackendName) -> Self {
        match b {
            BackendName::ClosedForm => Backend::ClosedForm,
            BackendName::Quadrature => Backend::Quadrature,
            BackendName::DiscreteSum => Backend::DiscreteSum,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    pub kind: BathKind,
    /// Ohmic coupling `γ`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Ohmic cutoff `Γ`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
    /// 1/f coupling `γ_f = b_f/Λ²`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_f: Option<f64>,
    /// 1/f infrared cutoff `Λ`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub infrared: Option<f64>,
    /// Discrete modes as `[g, ω]` pairs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<[f64; 2]>>,
    pub temperature: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backend: Option<BackendName>,
}

impl Default for BathConfig {
    fn default() -> Self {
        Self {
            kind: BathKind::Ohmic,
            gamma: Some(1.0),
            cutoff: Some(1.0),
            gamma_f: None,
            infrared: None,
            modes: None,
            temperature: 0.1,
            backend: None,
        }
    }
}

impl BathConfig {
    fn check_keys(&self) -> Result<(), String> {
        let stray = |name: &str, present: bool| {
            if present {
                Err(format!("bath.{name} does not apply to a {:?} bath", self.kind))
            } else {
                Ok(())
            }
        };
        match self.kind {
            BathKind::Ohmic => {
                stray("gamma_f", self.gamma_f.is_some())?;
                stray("infrared", self.infrared.is_some())?;
                stray("modes", self.modes.is_some())
            }
            BathKind::OneOverF => {
                stray("gamma", self.gamma.is_some())?;
                stray("cutoff", self.cutoff.is_some())?;
                stray("modes", self.modes.is_some())
            }
            BathKind::Discrete => {
                stray("gamma", self.gamma.is_some())?;
                stray("cutoff", self.cutoff.is_some())?;
                stray("gamma_f", self.gamma_f.is_some())?;
                stray("infrared", self.infrared.is_some())
            }
        }
    }

    pub fn spectral(&self) -> spincool::Result<SpectralDensity> {
        let need = |v: Option<f64>, name: &'static str| {
            v.ok_or_else(|| spincool::Error::InvalidParameter {
                name,
                reason: "required for this bath kind".into(),
            })
        };
        match self.kind {
            BathKind::Ohmic => SpectralDensity::ohmic(need(self.gamma, "bath.gamma")?, need(self.cutoff, "bath.cutoff")?),
            BathKind::OneOverF => SpectralDensity::one_over_f(need(self.gamma_f, "bath.gamma_f")?, need(self.infrared, "bath.infrared")?),
            BathKind::Discrete => {
                let modes = self.modes.as_ref().ok_or_else(|| spincool::Error::InvalidParameter {
                    name: "bath.modes",
                    reason: "required for a discrete bath".into(),
                })?;
                SpectralDensity::discrete(modes.iter().map(|&[g, w]| Mode::new(g, w)).collect())
            }
        }
    }

    pub fn kernels(&self) -> spincool::Result<BathKernels> {
        let spec = self.spectral()?;
        match self.backend {
            Some(b) => BathKernels::with_backend(spec, self.temperature, b.into()),
            None => BathKernels::new(spec, self.temperature),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub omega0: f64,
    pub dispersion: f64,
    /// Temperature of the spin populations; defaults to the bath temperature.
    /// `inf` gives an unpolarized ensemble.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spin_temperature: Option<f64>,
}

impl EnsembleConfig {
    pub fn spec(&self) -> spincool::Result<EnsembleSpec> {
        EnsembleSpec::new(self.omega0, self.dispersion)
    }
}

/// Explicit `values`, or `count` points from `start` to `stop`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub log: bool,
    /// Prepend `0` to a generated grid.
    pub include_zero: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            values: None,
            start: 1e-3,
            stop: 1e3,
            count: 61,
            log: true,
            include_zero: true,
        }
    }
}

impl GridConfig {
    pub fn points(&self) -> Result<Vec<f64>, String> {
        let pts = match &self.values {
            Some(v) => v.clone(),
            None => {
                if self.count < 2 || !(self.stop > self.start) || (self.log && self.start <= 0.0) {
                    return Err(format!(
                        "grid needs count >= 2 and start < stop (start > 0 for log grids), got {}..{} x{}",
                        self.start, self.stop, self.count
                    ));
                }
                let n = self.count - 1;
                let mut v: Vec<f64> = (0..=n)
                    .map(|i| {
                        let f = i as f64 / n as f64;
                        if self.log {
                            self.start * (self.stop / self.start).powf(f)
                        } else {
                            self.start + f * (self.stop - self.start)
                        }
                    })
                    .collect();
                v[n] = self.stop;
                if self.include_zero && self.start > 0.0 {
                    v.insert(0, 0.0);
                }
                v
            }
        };
        if pts.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err("grid values must be finite and >= 0".into());
        }
        Ok(pts)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelsConfig {
    pub grid: GridConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Panel {
    Ohmic,
    OneOverF,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fig1Config {
    pub panels: Vec<Panel>,
    /// Ohmic `(γ, Θ)` pairs, `Γ = 1`.
    pub ohmic_curves: Vec<[f64; 2]>,
    /// 1/f `Θ_f/γ_f` ratios, `Λ = 1`.
    pub ratios: Vec<f64>,
    pub gamma_f: f64,
    pub one_over_f_backend: BackendName,
    /// Grid in `τΓ`.
    pub ohmic_grid: GridConfig,
    /// Grid in `y = γ_f Λ τ`.
    pub one_over_f_grid: GridConfig,
}

impl Default for Fig1Config {
    fn default() -> Self {
        Self {
            panels: vec![Panel::Ohmic, Panel::OneOverF],
            ohmic_curves: vec![[5.0, 0.2], [2.0, 0.5], [1.0, 1.0]],
            ratios: vec![0.01, 0.1, 1.0],
            gamma_f: 1e4,
            one_over_f_backend: BackendName::ClosedForm,
            ohmic_grid: GridConfig {
                start: 0.0,
                stop: 3.0,
                count: 301,
                log: false,
                ..GridConfig::default()
            },
            one_over_f_grid: GridConfig {
                start: 0.0,
                stop: 6.0,
                count: 301,
                log: false,
                ..GridConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Table1Config {
    /// Row labels: `2`, `3`, `50x2`, `2+pi`, `50x[2+pi]`.
    pub rows: Vec<String>,
    /// `(γ, Θ)` columns; must be among the six reference columns.
    pub columns: Vec<[f64; 2]>,
}

impl Default for Table1Config {
    fn default() -> Self {
        Self {
            rows: Table1Row::ALL.iter().map(|r| r.label().to_string()).collect(),
            columns: TABLE1_COLUMNS.iter().map(|&(g, t)| [g, t]).collect(),
        }
    }
}

impl Table1Config {
    pub fn resolve(&self) -> Result<(Vec<Table1Row>, Vec<usize>), String> {
        let rows = self
            .rows
            .iter()
            .map(|l| Table1Row::from_label(l).ok_or_else(|| format!("table1.rows: unknown row `{l}`")))
            .collect::<Result<Vec<_>, _>>()?;
        let cols = self
            .columns
            .iter()
            .map(|&[g, t]| {
                TABLE1_COLUMNS
                    .iter()
                    .position(|&(cg, ct)| cg == g && ct == t)
                    .ok_or_else(|| format!("table1.columns: ({g}, {t}) is not a reference column"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok((rows, cols))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeConfig {
    /// `two-pulse`, `three-pulse`, `echo` or `block-sequence`.
    pub objective: String,
    /// Block kind for `block-sequence`: `two-pulse` or `echo`.
    pub block_kind: String,
    pub blocks: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_sz: Option<f64>,
    pub starts: usize,
    /// Evaluations per start; `0` picks `400·dim²`.
    pub max_evals: usize,
    pub value_tol: f64,
    pub param_tol: f64,
    pub grid_tau: usize,
    pub grid_alpha: usize,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            objective: "two-pulse".into(),
            block_kind: "two-pulse".into(),
            blocks: 1,
            tau_max: None,
            initial_sz: None,
            starts: 16,
            max_evals: 0,
            value_tol: 1e-10,
            param_tol: 1e-8,
            grid_tau: 160,
            grid_alpha: 16,
        }
    }
}

impl OptimizeConfig {
    pub fn objective(&self) -> Result<Option<Objective>, String> {
        if self.objective == "block-sequence" {
            return Ok(None);
        }
        self.objective.parse().map(Some).map_err(|e: spincool::Error| format!("optimize.objective: {e}"))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveConfig {
    /// Sequence text, e.g. `prep:2 half-pi-x wait:1 minus-half-pi-y`.
    pub sequence: String,
    /// With an `[ensemble]` block: `two-pulse` or `echo`, using the first
    /// two pulses of `sequence` and the delay between them. For `echo`
    /// that delay is split evenly around the π pulse.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble_protocol: Option<String>,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            sequence: "prep:ergodic half-pi-x wait:1 minus-half-pi-y".into(),
            ensemble_protocol: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    /// Random discrete-bath cases for the dense-simulation comparison.
    pub oracle_cases: usize,
    pub oracle_tolerance: f64,
    /// Convergence target when raising the Fock cutoff.
    pub cutoff_tolerance: f64,
    pub dimension_cap: usize,
    /// Random configurations per invariant check.
    pub samples: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            oracle_cases: 50,
            oracle_tolerance: 1e-6,
            cutoff_tolerance: 1e-7,
            dimension_cap: spincool::oracle::DEFAULT_DIMENSION_CAP,
            samples: 1000,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.bath.check_keys()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

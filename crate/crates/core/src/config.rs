//! Run configuration read from TOML. Every section is optional and defaults
//! to the reference devices; unknown keys are rejected.

use crate::chain::{ChainConfig, NeelMethod, ProgramGrid};
use crate::composite::{Coupling, ModeSpec, SystemSpec};
use crate::gates::GateOptions;
use crate::models::{DriveSpec, QcqSpec};
use crate::{presets, Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Schema version understood by this build.
pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    /// Seed of the fit start-point jitter.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub device: DeviceConfig,
    #[serde(default)]
    pub drive: DriveConfig,
    #[serde(default)]
    pub zz_sweep: SweepConfig,
    #[serde(default)]
    pub qcq_map: MapConfig,
    #[serde(default)]
    pub gates: GateOptions,
    #[serde(default)]
    pub chain: ChainSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            version: CONFIG_VERSION,
            seed: 0,
            device: DeviceConfig::default(),
            drive: DriveConfig::default(),
            zz_sweep: SweepConfig::default(),
            qcq_map: MapConfig::default(),
            gates: GateOptions::default(),
            chain: ChainSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration serializes")
    }

    /// Checks every section without running anything expensive.
    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "unsupported config version {}, expected {CONFIG_VERSION}",
                self.version
            )));
        }
        let system = self.pair_system()?;
        self.pair_drive().validate(&system)?;
        self.zz_sweep.grid.values()?;
        self.qcq_map.epsilon.values()?;
        self.qcq_map.omega_d.values()?;
        self.qcq_map.spec().system()?;
        self.qcq_map.spec().drive(0.0, 1.0).validate(&self.qcq_map.spec().system()?)?;
        let g = &self.gates;
        for (name, v) in [("sample_rate", g.sample_rate), ("sigma", g.sigma), ("ramp_k", g.ramp_k), ("phase_tol", g.phase_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("gates.{name} must be positive")));
            }
        }
        if g.xy_duration < 4.0 * g.sigma {
            return Err(Error::Config("gates.xy_duration must be at least 4 sigma".into()));
        }
        self.chain.validate()
    }

    pub fn pair_system(&self) -> Result<SystemSpec> {
        self.device.system()
    }

    pub fn pair_drive(&self) -> DriveSpec {
        self.drive.spec()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub label: String,
    pub dim: usize,
    /// Frequency, GHz.
    pub omega: f64,
    /// Anharmonicity, GHz.
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    pub i: usize,
    pub j: usize,
    pub g: f64,
}

/// Directly coupled two-mode device used by `zz-sweep`, `gates` and
/// `analytic`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub modes: Vec<ModeConfig>,
    pub couplings: Vec<CouplingConfig>,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        let sys = presets::transmon_pair(6);
        DeviceConfig {
            modes: sys
                .modes()
                .iter()
                .map(|m| ModeConfig {
                    label: m.label.clone(),
                    dim: m.dim,
                    omega: m.omega,
                    alpha: m.alpha,
                })
                .collect(),
            couplings: sys
                .couplings()
                .iter()
                .map(|c| CouplingConfig { i: c.i, j: c.j, g: c.g })
                .collect(),
        }
    }
}

impl DeviceConfig {
    pub fn system(&self) -> Result<SystemSpec> {
        let modes = self
            .modes
            .iter()
            .map(|m| ModeSpec::new(m.label.clone(), m.dim, m.omega, m.alpha))
            .collect::<Result<Vec<_>>>()?;
        SystemSpec::new(modes, self.couplings.iter().map(|c| Coupling::new(c.i, c.j, c.g)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriveConfig {
    pub mode: usize,
    /// Two-photon drive frequency, GHz.
    pub omega_d: f64,
    #[serde(default)]
    pub phi: f64,
}

impl Default for DriveConfig {
    fn default() -> Self {
        DriveConfig {
            mode: 1,
            omega_d: presets::PAIR_OMEGA_D,
            phi: 0.0,
        }
    }
}

impl DriveConfig {
    pub fn spec(&self) -> DriveSpec {
        DriveSpec {
            phi: self.phi,
            ..DriveSpec::new(self.mode, 0.0, self.omega_d)
        }
    }
}

/// Either explicit values or `points` evenly spaced samples from `start` to
/// `stop` inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub start: f64,
    #[serde(default)]
    pub stop: f64,
    #[serde(default)]
    pub points: usize,
}

impl Grid {
    pub fn linear(start: f64, stop: f64, points: usize) -> Self {
        Grid {
            values: None,
            start,
            stop,
            points,
        }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match &self.values {
            Some(v) => v.clone(),
            None => match self.points {
                0 => Vec::new(),
                1 => vec![self.start],
                n => (0..n)
                    .map(|i| self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64)
                    .collect(),
            },
        };
        if v.is_empty() {
            return Err(Error::InvalidInput("empty grid".into()));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("grid values must be finite".into()));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Drive amplitudes, GHz.
    pub grid: Grid,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            grid: Grid::linear(0.0, 0.2, 201),
        }
    }
}

/// Qubit-coupler-qubit unit swept over drive amplitude and frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MapConfig {
    pub omega_q: f64,
    pub alpha_q: f64,
    pub omega_c: f64,
    pub alpha_c: f64,
    pub g_qc: f64,
    pub g_qq: f64,
    pub dim_q: usize,
    pub dim_c: usize,
    pub epsilon: Grid,
    pub omega_d: Grid,
}

impl Default for MapConfig {
    fn default() -> Self {
        let q = presets::qcq(presets::QCQ_POINT_A);
        MapConfig {
            omega_q: q.omega_q1,
            alpha_q: q.alpha_q,
            omega_c: q.omega_c,
            alpha_c: q.alpha_c,
            g_qc: q.g1c,
            g_qq: q.g12,
            dim_q: q.dim_q,
            dim_c: q.dim_c,
            epsilon: Grid::linear(0.0, 0.16, 17),
            omega_d: Grid::linear(5.28, 5.32, 5),
        }
    }
}

impl MapConfig {
    pub fn spec(&self) -> QcqSpec {
        QcqSpec {
            omega_q1: self.omega_q,
            omega_q2: self.omega_q,
            omega_c: self.omega_c,
            alpha_q: self.alpha_q,
            alpha_c: self.alpha_c,
            g1c: self.g_qc,
            g2c: self.g_qc,
            g12: self.g_qq,
            dim_q: self.dim_q,
            dim_c: self.dim_c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainSection {
    pub n_qubits: usize,
    pub omega_q: f64,
    pub alpha_q: f64,
    pub dim_q: usize,
    pub omega_c: f64,
    pub alpha_c: f64,
    pub dim_c: usize,
    pub g_qc: f64,
    pub g_qq: f64,
    /// Cap on total excitations in the propagation basis; 0 keeps all.
    pub max_excitations: usize,
    pub neel: NeelMethod,
    /// Anisotropies to program.
    pub deltas: Vec<f64>,
    /// Evolution horizon and sampling step, ns.
    pub horizon: f64,
    pub dt: f64,
    pub program: ProgramGrid,
}

impl Default for ChainSection {
    fn default() -> Self {
        let c = ChainConfig::five_qubit(presets::QCQ_POINT_B);
        ChainSection {
            n_qubits: c.n_qubits,
            omega_q: c.omega_q,
            alpha_q: c.alpha_q,
            dim_q: c.dim_q,
            omega_c: c.omega_c,
            alpha_c: c.alpha_c,
            dim_c: c.dim_c,
            g_qc: c.g_qc,
            g_qq: c.g_qq,
            max_excitations: c.max_excitations.unwrap_or(0),
            neel: c.neel,
            deltas: vec![3.55, 0.0, -1.86],
            horizon: 400.0,
            dt: 1.0,
            program: ProgramGrid::default(),
        }
    }
}

impl ChainSection {
    pub fn chain(&self) -> ChainConfig {
        ChainConfig {
            n_qubits: self.n_qubits,
            omega_q: self.omega_q,
            alpha_q: self.alpha_q,
            dim_q: self.dim_q,
            omega_c: self.omega_c,
            alpha_c: self.alpha_c,
            dim_c: self.dim_c,
            g_qc: self.g_qc,
            g_qq: self.g_qq,
            epsilon: 0.0,
            omega_d: 5.0,
            max_excitations: (self.max_excitations > 0).then_some(self.max_excitations),
            neel: self.neel,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config(format!("chain.horizon must be positive, got {}", self.horizon)));
        }
        if !(self.dt > 0.0 && self.dt <= self.horizon) {
            return Err(Error::Config("chain.dt must lie in (0, horizon]".into()));
        }
        if self.deltas.iter().any(|d| !d.is_finite()) {
            return Err(Error::Config("chain.deltas must be finite".into()));
        }
        if self.program.omega_d.is_empty() || self.program.epsilon.len() < 2 {
            return Err(Error::Config("chain.program grid is too small".into()));
        }
        self.chain().validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn minimal_file_uses_defaults() {
        let cfg = RunConfig::from_toml("version = 1\n").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn unknown_keys_and_versions_are_rejected() {
        assert!(matches!(RunConfig::from_toml("version = 1\nfoo = 2\n"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_toml("version = 1\n[chain]\nhorizon = 1\nbogus = 1\n"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_toml("version = 7\n"), Err(Error::Config(_))));
        assert!(RunConfig::from_toml("seed = 1\n").is_err());
    }

    #[test]
    fn partial_sections_fill_in_defaults() {
        let cfg = RunConfig::from_toml("version = 1\n[chain]\nhorizon = 50.0\n[qcq_map]\nomega_c = 4.67\n").unwrap();
        assert_eq!(cfg.chain.horizon, 50.0);
        assert_eq!(cfg.chain.dt, 1.0);
        assert_eq!(cfg.qcq_map.omega_c, 4.67);
        assert_eq!(cfg.qcq_map.dim_q, 6);
    }

    #[test]
    fn zero_horizon_is_rejected() {
        let e = RunConfig::from_toml("version = 1\n[chain]\nhorizon = 0.0\n").unwrap_err();
        assert!(e.is_usage());
    }

    #[test]
    fn empty_grid_is_a_usage_error() {
        let e = RunConfig::from_toml("version = 1\n[zz_sweep.grid]\nvalues = []\n").unwrap_err();
        assert!(e.is_usage(), "{e:?}");
    }
}

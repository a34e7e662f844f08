//! System configuration, loaded from TOML. Every field has a default, so an
//! empty document is a valid configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::UmiScenario;
use crate::error::{Error, Result};
use crate::optimizer::OptimizerConfig;
use crate::rates::{AssociationMode, CircuitModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub seed: u64,
    pub drops: Drops,
    /// Worker threads; 0 means one per available core.
    pub workers: usize,
    pub objective: Objective,
    pub geometry: GeometryConfig,
    pub radio: RadioConfig,
    pub antennas: AntennaConfig,
    pub network: NetworkConfig,
    pub beamforming: BeamformingConfig,
    pub csi: CsiConfig,
    pub power: PowerConfig,
    pub optimizer: OptimizerConfig,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            seed: 1,
            drops: Drops::Preset(DropsPreset::Ci),
            workers: 0,
            objective: Objective::Gee,
            geometry: GeometryConfig::default(),
            radio: RadioConfig::default(),
            antennas: AntennaConfig::default(),
            network: NetworkConfig::default(),
            beamforming: BeamformingConfig::default(),
            csi: CsiConfig::default(),
            power: PowerConfig::default(),
            optimizer: OptimizerConfig::default(),
        }
    }
}

/// Number of Monte-Carlo drops: an explicit count or a named preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Drops {
    Count(usize),
    Preset(DropsPreset),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropsPreset {
    /// 100 drops.
    Ci,
    /// 1000 drops.
    Paper,
}

impl Drops {
    pub fn count(self) -> usize {
        match self {
            Drops::Count(n) => n,
            Drops::Preset(DropsPreset::Ci) => 100,
            Drops::Preset(DropsPreset::Paper) => 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Gee,
    Sumrate,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    /// Side of the square deployment area, m.
    pub area_m: f64,
    pub num_aps: usize,
    pub num_ms: usize,
    /// Scattering clusters per square meter.
    pub cluster_density: f64,
    pub rays_per_cluster: usize,
    /// Ellipse gate: a cluster is active if the bounce path is at most this
    /// multiple of the direct distance.
    pub ellipse_ratio: f64,
    /// Per-ray angular spread around the cluster direction, degrees.
    pub ray_spread_deg: f64,
    pub scenario: UmiScenario,
    pub shadowing: bool,
    pub los: LosMode,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            area_m: 250.0,
            num_aps: 80,
            num_ms: 6,
            cluster_density: 0.4,
            rays_per_cluster: 3,
            ellipse_ratio: 1.5,
            ray_spread_deg: 2.0,
            scenario: UmiScenario::OpenSquare,
            shadowing: true,
            los: LosMode::Random,
        }
    }
}

/// Whether the LOS component is drawn from the LOS probability or forced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LosMode {
    #[default]
    Random,
    Never,
    Always,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub noise_psd_dbm_hz: f64,
    pub noise_figure_db: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        RadioConfig {
            carrier_hz: 73e9,
            bandwidth_hz: 200e6,
            noise_psd_dbm_hz: -174.0,
            noise_figure_db: 6.0,
        }
    }
}

impl RadioConfig {
    pub fn wavelength(&self) -> f64 {
        crate::channel::SPEED_OF_LIGHT / self.carrier_hz
    }

    /// Thermal noise power over the band, dBm.
    pub fn noise_power_dbm(&self) -> f64 {
        self.noise_psd_dbm_hz + self.noise_figure_db + 10.0 * self.bandwidth_hz.log10()
    }

    /// Thermal noise power over the band, W.
    pub fn noise_power_w(&self) -> f64 {
        10f64.powf((self.noise_power_dbm() - 30.0) / 10.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AntennaConfig {
    pub n_ap: usize,
    pub n_ms: usize,
    /// Data streams per MS.
    pub streams: usize,
}

impl Default for AntennaConfig {
    fn default() -> Self {
        AntennaConfig {
            n_ap: 16,
            n_ms: 8,
            streams: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkMode {
    /// Every AP serves every MS.
    Cf,
    /// Each AP serves the `serve` MSs with the strongest channels to it.
    Uc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub mode: NetworkMode,
    /// MSs per AP in user-centric mode.
    pub serve: usize,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            mode: NetworkMode::Uc,
            serve: 1,
        }
    }
}

impl NetworkConfig {
    pub fn association_mode(&self) -> AssociationMode {
        match self.mode {
            NetworkMode::Cf => AssociationMode::CellFree,
            NetworkMode::Uc => AssociationMode::UserCentric(self.serve),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamformingKind {
    Digital,
    Hybrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamformingConfig {
    pub kind: BeamformingKind,
    pub rf_chains: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for BeamformingConfig {
    fn default() -> Self {
        BeamformingConfig {
            kind: BeamformingKind::Hybrid,
            rf_chains: 4,
            max_iter: 100,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsiKind {
    Perfect,
    Estimated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CsiConfig {
    pub kind: CsiKind,
    pub pilot_len: usize,
    pub pilot_power_w: f64,
    /// Only checked against `pilot_len`; rates carry no training overhead.
    pub coherence_len: usize,
    /// Draw mutually orthogonal pilots for all MSs (needs `K*P <= pilot_len`).
    pub orthogonal_pilots: bool,
}

impl Default for CsiConfig {
    fn default() -> Self {
        CsiConfig {
            kind: CsiKind::Estimated,
            pilot_len: 64,
            pilot_power_w: 0.1,
            coherence_len: 200,
            orthogonal_pilots: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerConfig {
    /// Per-AP downlink power budget, W.
    pub p_max_w: f64,
    /// Per-MS uplink power budget, W.
    pub p_t_max_w: f64,
    /// Power-amplifier inefficiency factor.
    pub delta: f64,
    pub circuit: CircuitModel,
    /// Static circuit power per MS in uplink, W.
    pub uplink_circuit_w: f64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        PowerConfig {
            p_max_w: 0.1,
            p_t_max_w: 0.1,
            delta: 1.0,
            circuit: CircuitModel::Idle { p_c_w: 1.0 },
            uplink_circuit_w: 0.3,
        }
    }
}

impl SystemConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: SystemConfig = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(msg()))
            }
        }
        let g = &self.geometry;
        let a = &self.antennas;
        check(self.drops.count() >= 1, || "drops must be >= 1".into())?;
        check(g.area_m > 0.0 && g.area_m.is_finite(), || "geometry.area_m must be positive".into())?;
        check(g.num_aps >= 1, || "geometry.num_aps must be >= 1".into())?;
        check(g.num_ms >= 1, || "geometry.num_ms must be >= 1".into())?;
        check(g.cluster_density >= 0.0, || "geometry.cluster_density must be >= 0".into())?;
        check(g.rays_per_cluster >= 1, || "geometry.rays_per_cluster must be >= 1".into())?;
        check(g.ellipse_ratio >= 1.0, || "geometry.ellipse_ratio must be >= 1".into())?;
        check(g.ray_spread_deg >= 0.0, || "geometry.ray_spread_deg must be >= 0".into())?;
        check(self.radio.carrier_hz > 0.0, || "radio.carrier_hz must be positive".into())?;
        check(self.radio.bandwidth_hz > 0.0, || "radio.bandwidth_hz must be positive".into())?;
        check(a.n_ap >= 1 && a.n_ms >= 1, || "antenna counts must be >= 1".into())?;
        check(a.streams >= 1 && a.n_ms % a.streams == 0, || {
            format!(
                "antennas.streams ({}) must divide antennas.n_ms ({})",
                a.streams, a.n_ms
            )
        })?;
        if self.network.mode == NetworkMode::Uc {
            check(self.network.serve >= 1 && self.network.serve <= g.num_aps, || {
                format!("network.serve must be in 1..={}", g.num_aps)
            })?;
        }
        let b = &self.beamforming;
        check(b.rf_chains >= 1, || "beamforming.rf_chains must be >= 1".into())?;
        check(b.max_iter >= 1, || "beamforming.max_iter must be >= 1".into())?;
        check(b.tol > 0.0, || "beamforming.tol must be positive".into())?;
        let c = &self.csi;
        check(c.pilot_len >= a.streams, || {
            format!("csi.pilot_len ({}) must be >= antennas.streams ({})", c.pilot_len, a.streams)
        })?;
        check(c.pilot_len < c.coherence_len, || {
            "csi.pilot_len must be smaller than csi.coherence_len".into()
        })?;
        check(c.pilot_power_w > 0.0, || "csi.pilot_power_w must be positive".into())?;
        if c.orthogonal_pilots {
            check(g.num_ms * a.streams <= c.pilot_len, || {
                "orthogonal pilots need num_ms * streams <= pilot_len".into()
            })?;
        }
        let p = &self.power;
        check(p.p_max_w > 0.0, || "power.p_max_w must be positive".into())?;
        check(p.p_t_max_w > 0.0, || "power.p_t_max_w must be positive".into())?;
        check(p.delta > 0.0, || "power.delta must be positive".into())?;
        check(p.uplink_circuit_w >= 0.0, || "power.uplink_circuit_w must be >= 0".into())?;
        p.circuit.validate()?;
        self.optimizer.validate()?;
        Ok(())
    }

    /// Noise variance per receive antenna, W.
    pub fn noise_variance(&self) -> f64 {
        self.radio.noise_power_w()
    }
}

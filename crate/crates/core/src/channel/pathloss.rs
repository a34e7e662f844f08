use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// UMi propagation scenarios with tabulated log-distance parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioTag {
    UMiStreetLOS,
    UMiStreetNLOS,
    UMiOpenLOS,
    UMiOpenNLOS,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossParams {
    /// Path-loss exponent.
    pub exponent_n: f64,
    /// Shadow-fading standard deviation, dB.
    pub shadow_sigma: f64,
    pub scenario_tag: ScenarioTag,
}

impl PathLossParams {
    pub fn for_scenario(tag: ScenarioTag) -> Self {
        let (exponent_n, shadow_sigma) = match tag {
            ScenarioTag::UMiStreetLOS => (1.98, 3.1),
            ScenarioTag::UMiStreetNLOS => (3.19, 8.2),
            ScenarioTag::UMiOpenLOS => (2.89, 7.1),
            ScenarioTag::UMiOpenNLOS => (1.73, 3.02),
        };
        PathLossParams {
            exponent_n,
            shadow_sigma,
            scenario_tag: tag,
        }
    }
}

/// Site type; picks the LOS/NLOS parameter rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum UmiScenario {
    StreetCanyon,
    #[default]
    OpenSquare,
}

impl UmiScenario {
    pub fn params(self, los: bool) -> PathLossParams {
        let tag = match (self, los) {
            (UmiScenario::StreetCanyon, true) => ScenarioTag::UMiStreetLOS,
            (UmiScenario::StreetCanyon, false) => ScenarioTag::UMiStreetNLOS,
            (UmiScenario::OpenSquare, true) => ScenarioTag::UMiOpenLOS,
            (UmiScenario::OpenSquare, false) => ScenarioTag::UMiOpenNLOS,
        };
        PathLossParams::for_scenario(tag)
    }
}

/// Free-space reference term `20 log10(4 pi / lambda)`, dB.
pub fn reference_loss_db(wavelength: f64) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI / wavelength).log10()
}

/// Path gain in dB (a negative number for practical distances):
/// `L(r) = -20 log10(4 pi / lambda) - 10 n log10(r) - X`.
pub fn path_loss_db(r: f64, params: &PathLossParams, shadow_db: f64, wavelength: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "path length must be positive, got {r}"
        )));
    }
    Ok(-reference_loss_db(wavelength) - 10.0 * params.exponent_n * r.log10() - shadow_db)
}

/// UMi LOS probability `min(20/d, 1)(1 - e^{-d/39}) + e^{-d/39}`.
pub fn los_probability(d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "distance must be positive, got {d}"
        )));
    }
    let e = (-d / 39.0).exp();
    Ok((20.0 / d).min(1.0) * (1.0 - e) + e)
}

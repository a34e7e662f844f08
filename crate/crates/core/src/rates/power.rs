use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Downlink transmit powers `eta[m * K + k]`, W. Unserved pairs hold zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub num_aps: usize,
    pub num_ms: usize,
    pub eta: Vec<f64>,
}

impl PowerAllocation {
    pub fn zeros(num_aps: usize, num_ms: usize) -> Self {
        PowerAllocation {
            num_aps,
            num_ms,
            eta: vec![0.0; num_aps * num_ms],
        }
    }

    pub fn get(&self, m: usize, k: usize) -> f64 {
        self.eta[m * self.num_ms + k]
    }

    pub fn set(&mut self, m: usize, k: usize, v: f64) {
        self.eta[m * self.num_ms + k] = v;
    }

    pub fn ap(&self, m: usize) -> &[f64] {
        &self.eta[m * self.num_ms..(m + 1) * self.num_ms]
    }

    /// Radiated power `P_T(m)` of AP `m`.
    pub fn ap_total(&self, m: usize) -> f64 {
        self.ap(m).iter().sum()
    }

    pub fn check(&self) -> Result<()> {
        if self.eta.len() != self.num_aps * self.num_ms {
            return Err(Error::Dimension("allocation length".into()));
        }
        check_powers(&self.eta)
    }
}

pub(crate) fn check_powers(eta: &[f64]) -> Result<()> {
    if let Some(v) = eta.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("power value {v}")));
    }
    if let Some(v) = eta.iter().find(|v| **v < 0.0) {
        return Err(Error::InvalidArgument(format!("negative power {v}")));
    }
    Ok(())
}

/// Per-AP circuit power as a function of the radiated power `P_T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum CircuitModel {
    /// Constant `p_c_w`.
    Static { p_c_w: f64 },
    /// `p_c_w` when radiating, half of it when idle.
    Idle { p_c_w: f64 },
    /// Idle model with the indicator replaced by `1 / (1 + exp(-P_T / theta))`;
    /// `theta_w` defaults to `1e-3 * P_max`.
    Sigmoid {
        p_c_w: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        theta_w: Option<f64>,
    },
}

impl CircuitModel {
    pub fn nominal(&self) -> f64 {
        match *self {
            CircuitModel::Static { p_c_w } | CircuitModel::Idle { p_c_w } | CircuitModel::Sigmoid { p_c_w, .. } => p_c_w,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nominal() >= 0.0) {
            return Err(Error::Config("circuit power must be >= 0".into()));
        }
        if let CircuitModel::Sigmoid { theta_w: Some(t), .. } = self {
            if !(*t > 0.0) {
                return Err(Error::Config("sigmoid theta_w must be positive".into()));
            }
        }
        Ok(())
    }

    fn theta(&self, p_max: f64) -> f64 {
        match *self {
            CircuitModel::Sigmoid { theta_w, .. } => theta_w.unwrap_or(1e-3 * p_max),
            _ => f64::NAN,
        }
    }

    /// Circuit power at radiated power `p_t`.
    pub fn power(&self, p_t: f64, p_max: f64) -> f64 {
        match *self {
            CircuitModel::Static { p_c_w } => p_c_w,
            CircuitModel::Idle { p_c_w } => {
                if p_t > 0.0 {
                    p_c_w
                } else {
                    0.5 * p_c_w
                }
            }
            CircuitModel::Sigmoid { p_c_w, .. } => {
                let s = sigmoid(p_t / self.theta(p_max));
                p_c_w * (0.5 + 0.5 * s)
            }
        }
    }

    /// Derivative of [`CircuitModel::power`] in `p_t` (zero for the
    /// piecewise-constant models).
    pub fn slope(&self, p_t: f64, p_max: f64) -> f64 {
        match *self {
            CircuitModel::Sigmoid { p_c_w, .. } => {
                let th = self.theta(p_max);
                let s = sigmoid(p_t / th);
                0.5 * p_c_w * s * (1.0 - s) / th
            }
            _ => 0.0,
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Circuit power of every AP.
pub fn circuit_power(eta: &PowerAllocation, model: &CircuitModel, p_max: f64) -> Vec<f64> {
    (0..eta.num_aps)
        .map(|m| model.power(eta.ap_total(m), p_max))
        .collect()
}

/// Total downlink consumption `sum_m [delta P_T(m) + P_c,m]`, W.
pub fn downlink_consumption(eta: &PowerAllocation, delta: f64, model: &CircuitModel, p_max: f64) -> f64 {
    (0..eta.num_aps)
        .map(|m| {
            let pt = eta.ap_total(m);
            delta * pt + model.power(pt, p_max)
        })
        .sum()
}

/// Downlink global energy efficiency, bit/J.
pub fn gee(rates: &[f64], eta: &PowerAllocation, delta: f64, model: &CircuitModel, p_max: f64) -> f64 {
    let den = downlink_consumption(eta, delta, model, p_max);
    rates.iter().sum::<f64>() / den
}

/// Uplink global energy efficiency with static per-MS circuit power, bit/J.
pub fn gee_uplink(rates: &[f64], eta: &[f64], delta: f64, p_c_ms: f64) -> f64 {
    let den: f64 = eta.iter().map(|e| delta * e + p_c_ms).sum();
    rates.iter().sum::<f64>() / den
}

//! Power control: downlink and uplink GEE maximization, sum-rate
//! maximization and the uniform baseline.

mod bound;
mod dinkelbach;
mod downlink;
mod inner;
mod projection;
mod sumrate;
mod uplink;

pub use bound::{DownlinkBlock, LowerBound};
pub use dinkelbach::{dinkelbach, Affine, DinkelbachOutcome};
pub use downlink::{downlink_gee, gee_max_downlink, DownlinkOutcome, DownlinkProblem};
pub use inner::{inner_maximize, InnerConfig, InnerOutcome, SmoothObjective};
pub use projection::{project_box, project_capped_simplex, project_simplex, FeasibleSet};
pub use sumrate::{sumrate_max, SumRateMode};
pub use uplink::{gee_max_uplink, uplink_full_power, uplink_gee, UplinkOutcome, UplinkProblem};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rates::{Association, AssociationMode, PowerAllocation};

/// How the `sumrate` objective is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SumRateChoice {
    /// Concave ZF formulation when the tensor allows it, general otherwise.
    Auto,
    General,
    ZfPerfectCsi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    /// Relative change of the power vector between sweeps that ends the
    /// outer loop.
    pub outer_tol: f64,
    pub max_sweeps: usize,
    pub dinkelbach_tol: f64,
    pub max_dinkelbach_iter: usize,
    pub inner_max_iter: usize,
    pub inner_tol: f64,
    pub armijo_c: f64,
    pub armijo_beta: f64,
    /// Relative slack allowed on the non-decreasing GEE trace.
    pub monotone_slack: f64,
    /// Floor on powers inside `1/sqrt` derivatives, as a fraction of `P_max`.
    pub gradient_floor: f64,
    pub sumrate_mode: SumRateChoice,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            outer_tol: 1e-4,
            max_sweeps: 50,
            dinkelbach_tol: 1e-6,
            max_dinkelbach_iter: 50,
            inner_max_iter: 500,
            inner_tol: 1e-8,
            armijo_c: 1e-4,
            armijo_beta: 0.5,
            monotone_slack: 1e-9,
            gradient_floor: 1e-12,
            sumrate_mode: SumRateChoice::Auto,
        }
    }
}

impl OptimizerConfig {
    pub fn inner_config(&self) -> InnerConfig {
        InnerConfig {
            max_iter: self.inner_max_iter,
            tol: self.inner_tol,
            armijo_c: self.armijo_c,
            armijo_beta: self.armijo_beta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("outer_tol", self.outer_tol),
            ("dinkelbach_tol", self.dinkelbach_tol),
            ("inner_tol", self.inner_tol),
            ("armijo_c", self.armijo_c),
            ("monotone_slack", self.monotone_slack),
            ("gradient_floor", self.gradient_floor),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::Config(format!("optimizer.{name} must be positive")));
            }
        }
        if !(self.armijo_beta > 0.0 && self.armijo_beta < 1.0) {
            return Err(Error::Config("optimizer.armijo_beta must lie in (0, 1)".into()));
        }
        if self.max_sweeps == 0 || self.max_dinkelbach_iter == 0 || self.inner_max_iter == 0 {
            return Err(Error::Config("optimizer iteration limits must be >= 1".into()));
        }
        Ok(())
    }
}

/// Equal split of each AP's budget over its served MSs: `P_max / K` in
/// cell-free mode, `P_max / card(K(m))` in user-centric mode.
pub fn uniform_allocation(assoc: &Association, p_max: f64) -> PowerAllocation {
    let mut eta = PowerAllocation::zeros(assoc.num_aps(), assoc.num_ms());
    for (m, served) in assoc.served_by_ap.iter().enumerate() {
        let share = match assoc.mode {
            AssociationMode::CellFree => p_max / assoc.num_ms() as f64,
            AssociationMode::UserCentric(_) => p_max / served.len().max(1) as f64,
        };
        for &k in served {
            eta.set(m, k, share);
        }
    }
    eta
}

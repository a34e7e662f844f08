//! Exhaustive grid search over downlink powers, used to check the optimizer
//! on small instances. It evaluates rates with the direct log-det form and
//! shares no code with the optimizer.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::pipeline::{drop_seed, DropContext};
use crate::config::{BeamformingKind, CsiKind, NetworkMode, Objective, SystemConfig};
use crate::error::Result;
use crate::optimizer::{gee_max_downlink, DownlinkProblem};
use crate::rates::{self, GainTensor, PowerAllocation};

/// Best GEE over the grid `{0, P/(n-1), ..., P}` per served pair, keeping
/// only points within every AP's budget.
pub fn grid_search_downlink(
    t: &GainTensor,
    problem: &DownlinkProblem,
    points: usize,
) -> Result<(f64, PowerAllocation)> {
    let step = problem.p_max / (points - 1) as f64;
    // Feasible level vectors of each AP.
    let per_ap: Vec<Vec<Vec<usize>>> = t
        .association
        .served_by_ap
        .iter()
        .map(|served| {
            let mut out = vec![Vec::new()];
            for _ in served {
                out = out
                    .into_iter()
                    .flat_map(|v: Vec<usize>| {
                        let used: usize = v.iter().sum();
                        (0..points).filter(move |&i| used + i < points).map(move |i| {
                            let mut w = v.clone();
                            w.push(i);
                            w
                        })
                    })
                    .collect();
            }
            out
        })
        .collect();
    let mut idx = vec![0usize; per_ap.len()];
    let mut eta = PowerAllocation::zeros(t.num_aps, t.num_ms);
    let mut best = (f64::NEG_INFINITY, eta.clone());
    loop {
        for (m, served) in t.association.served_by_ap.iter().enumerate() {
            for (j, &k) in served.iter().enumerate() {
                eta.set(m, k, per_ap[m][idx[m]][j] as f64 * step);
            }
        }
        let mut sum = 0.0;
        for k in 0..t.num_ms {
            sum += rates::downlink_rate_direct(t, &eta, k)?;
        }
        let den = rates::downlink_consumption(&eta, problem.delta, &problem.circuit, problem.p_max);
        let g = sum / den;
        if g > best.0 {
            best = (g, eta.clone());
        }
        // Odometer increment over the per-AP choices.
        let mut m = 0;
        loop {
            if m == idx.len() {
                return Ok(best);
            }
            idx[m] += 1;
            if idx[m] < per_ap[m].len() {
                break;
            }
            idx[m] = 0;
            m += 1;
        }
    }
}

/// The small instance used for the grid comparison: 2 APs with 4 antennas,
/// 2 MSs with 2 antennas, one stream, cell-free, perfect CSI, digital ZF.
pub fn oracle_config(base: &SystemConfig) -> SystemConfig {
    let mut c = base.clone();
    c.geometry.num_aps = 2;
    c.geometry.num_ms = 2;
    c.antennas.n_ap = 4;
    c.antennas.n_ms = 2;
    c.antennas.streams = 1;
    c.network.mode = NetworkMode::Cf;
    c.csi.kind = CsiKind::Perfect;
    c.beamforming.kind = BeamformingKind::Digital;
    c.objective = Objective::Gee;
    c
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCase {
    pub drop: usize,
    pub seed: u64,
    pub optimized_gee: f64,
    pub grid_gee: f64,
    /// `optimized / grid`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub points_per_dim: usize,
    pub cases: Vec<OracleCase>,
    pub worst_ratio: f64,
    pub elapsed_s: f64,
}

/// Compares the optimizer with the grid on `drops` drops of `cfg`.
pub fn run_oracle(cfg: &SystemConfig, drops: usize, points: usize) -> Result<OracleReport> {
    cfg.validate()?;
    let start = Instant::now();
    let problem = DownlinkProblem {
        p_max: cfg.power.p_max_w,
        delta: cfg.power.delta,
        circuit: cfg.power.circuit,
    };
    let mut cases = Vec::with_capacity(drops);
    for i in 0..drops {
        let ctx = DropContext::build(cfg, i)?;
        let opt = gee_max_downlink(&ctx.true_tensor, &problem, &cfg.optimizer, &[])?;
        let (grid, _) = grid_search_downlink(&ctx.true_tensor, &problem, points)?;
        cases.push(OracleCase {
            drop: i,
            seed: drop_seed(cfg.seed, i),
            optimized_gee: opt.gee,
            grid_gee: grid,
            ratio: opt.gee / grid,
        });
    }
    let worst_ratio = cases.iter().map(|c| c.ratio).fold(f64::INFINITY, f64::min);
    Ok(OracleReport {
        points_per_dim: points,
        cases,
        worst_ratio,
        elapsed_s: start.elapsed().as_secs_f64(),
    })
}

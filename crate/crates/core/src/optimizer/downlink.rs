use serde::{Deserialize, Serialize};

use super::bound::DownlinkBlock;
use super::dinkelbach::{dinkelbach, Affine};
use super::inner::SmoothObjective;
use super::projection::FeasibleSet;
use super::{uniform_allocation, OptimizerConfig};
use crate::error::{Error, Result};
use crate::rates::{self, CircuitModel, GainTensor, PowerAllocation};

/// Power budget and consumption model of the downlink GEE problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DownlinkProblem {
    pub p_max: f64,
    pub delta: f64,
    pub circuit: CircuitModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DownlinkOutcome {
    pub allocation: PowerAllocation,
    pub gee: f64,
    /// GEE at the start and after every per-AP update.
    pub trace: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    /// Per-AP solves whose line search stalled.
    pub stalled_solves: usize,
}

/// Exact downlink GEE of `eta` on `t`, bit/J.
pub fn downlink_gee(t: &GainTensor, eta: &PowerAllocation, problem: &DownlinkProblem) -> Result<f64> {
    let r = rates::downlink_rates(t, eta)?;
    Ok(rates::gee(&r, eta, problem.delta, &problem.circuit, problem.p_max))
}

fn check_feasible(t: &GainTensor, eta: &PowerAllocation, p_max: f64) -> Result<()> {
    eta.check()?;
    if eta.num_aps != t.num_aps || eta.num_ms != t.num_ms {
        return Err(Error::Dimension("start allocation does not match gain tensor".into()));
    }
    for m in 0..eta.num_aps {
        if eta.ap_total(m) > p_max * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!("start allocation exceeds budget at AP {m}")));
        }
        for k in 0..eta.num_ms {
            if eta.get(m, k) != 0.0 && !t.association.serves(m, k) {
                return Err(Error::InvalidArgument(format!(
                    "start allocation powers unserved pair ({m}, {k})"
                )));
            }
        }
    }
    Ok(())
}

/// Downlink GEE maximization by per-AP successive lower-bound maximization
/// with Dinkelbach's method, started from the uniform allocation and from
/// each of `starts`; the best final point is returned.
pub fn gee_max_downlink(
    t: &GainTensor,
    problem: &DownlinkProblem,
    cfg: &OptimizerConfig,
    starts: &[PowerAllocation],
) -> Result<DownlinkOutcome> {
    let mut best = run_from(t, problem, cfg, uniform_allocation(&t.association, problem.p_max))?;
    for s in starts {
        check_feasible(t, s, problem.p_max)?;
        let out = run_from(t, problem, cfg, s.clone())?;
        if out.gee > best.gee {
            best = out;
        }
    }
    Ok(best)
}

fn rel_change(new: &[f64], old: &[f64]) -> f64 {
    let diff: f64 = new.iter().zip(old).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let base: f64 = old.iter().map(|v| v * v).sum::<f64>().sqrt();
    if diff == 0.0 {
        0.0
    } else if base == 0.0 {
        f64::INFINITY
    } else {
        diff / base
    }
}

fn run_from(
    t: &GainTensor,
    problem: &DownlinkProblem,
    cfg: &OptimizerConfig,
    mut eta: PowerAllocation,
) -> Result<DownlinkOutcome> {
    let floor = cfg.gradient_floor * problem.p_max;
    let set = FeasibleSet::CappedSimplex { budget: problem.p_max };
    let mut g = downlink_gee(t, &eta, problem)?;
    let mut trace = vec![g];
    let mut stalled_solves = 0;
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < cfg.max_sweeps {
        sweeps += 1;
        let prev = eta.eta.clone();
        for m in 0..t.num_aps {
            let served = &t.association.served_by_ap[m];
            if served.is_empty() {
                continue;
            }
            let block = DownlinkBlock::new(t, &eta, m, floor);
            let x0: Vec<f64> = served.iter().map(|&k| eta.get(m, k)).collect();
            let rest: f64 = (0..t.num_aps)
                .filter(|&mm| mm != m)
                .map(|mm| {
                    let pt = eta.ap_total(mm);
                    problem.delta * pt + problem.circuit.power(pt, problem.p_max)
                })
                .sum();
            let (x, stalled) = solve_ap(&block, &x0, rest, problem, cfg, &set);
            stalled_solves += stalled as usize;
            for (&k, &v) in served.iter().zip(&x) {
                eta.set(m, k, v);
            }
            let g_new = downlink_gee(t, &eta, problem)?;
            if g_new < g {
                if g_new < g - cfg.monotone_slack * g.abs() {
                    return Err(Error::MonotonicityViolation {
                        step: trace.len(),
                        previous: g,
                        current: g_new,
                    });
                }
                for (&k, &v) in served.iter().zip(&x0) {
                    eta.set(m, k, v);
                }
            } else {
                g = g_new;
            }
            trace.push(g);
        }
        if rel_change(&eta.eta, &prev) < cfg.outer_tol {
            converged = true;
            break;
        }
    }
    Ok(DownlinkOutcome {
        allocation: eta,
        gee: g,
        trace,
        sweeps,
        converged,
        stalled_solves,
    })
}

/// One AP's surrogate problem; returns the new powers and a stall flag.
fn solve_ap(
    block: &DownlinkBlock,
    x0: &[f64],
    rest: f64,
    problem: &DownlinkProblem,
    cfg: &OptimizerConfig,
    set: &FeasibleSet,
) -> (Vec<f64>, bool) {
    let n = x0.len();
    let mut lb = block.lower_bound(x0);
    let inner = cfg.inner_config();
    let run = |lb: &mut dyn SmoothObjective, den: Affine| {
        dinkelbach(lb, &den, x0, set, &inner, cfg.dinkelbach_tol, cfg.max_dinkelbach_iter)
    };
    match problem.circuit {
        CircuitModel::Static { p_c_w } => {
            let out = run(&mut lb, Affine { constant: rest + p_c_w, coeffs: vec![problem.delta; n] });
            (out.x, out.stalled)
        }
        CircuitModel::Sigmoid { .. } => {
            // The circuit power is concave in P_T >= 0, so its tangent at the
            // current point is an upper bound: the surrogate ratio stays a
            // minorizer of the true GEE.
            let p0: f64 = x0.iter().sum();
            let slope = problem.circuit.slope(p0, problem.p_max);
            let c = problem.circuit.power(p0, problem.p_max) - slope * p0;
            let out = run(&mut lb, Affine { constant: rest + c, coeffs: vec![problem.delta + slope; n] });
            (out.x, out.stalled)
        }
        CircuitModel::Idle { p_c_w } => {
            let active = run(&mut lb, Affine { constant: rest + p_c_w, coeffs: vec![problem.delta; n] });
            let zeros = vec![0.0; n];
            let idle_ratio = lb.value(&zeros) / (rest + 0.5 * p_c_w);
            if idle_ratio > active.ratio {
                (zeros, active.stalled)
            } else {
                (active.x, active.stalled)
            }
        }
    }
}

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::downlink::{gee_max_downlink, DownlinkOutcome, DownlinkProblem};
use super::inner::{inner_maximize, SmoothObjective};
use super::projection::FeasibleSet;
use super::{uniform_allocation, OptimizerConfig};
use crate::error::{Error, Result};
use crate::linalg::small;
use crate::rates::{self, CircuitModel, GainTensor, PowerAllocation};

const LN2: f64 = std::f64::consts::LN_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SumRateMode {
    /// Successive lower-bound maximization with `delta = 0`, `P_c = 1`.
    General,
    /// Direct maximization of the interference-free rate, concave when the
    /// precoders null all served-MS interference (perfect CSI, digital ZF).
    ZfPerfectCsi,
}

/// Sum of the interference-free rates `B log2|I + A_kk A_kk^H / N0|` over
/// the served pairs, flattened AP by AP.
struct ZfSumRate<'a> {
    t: &'a GainTensor,
    pairs: Vec<(usize, usize)>,
    floor: f64,
}

impl ZfSumRate<'_> {
    fn own_gain(&self, k: usize, x: &[f64]) -> Vec<Complex64> {
        let p = self.t.streams;
        let mut a = vec![Complex64::new(0.0, 0.0); p * p];
        for (i, &(m, kk)) in self.pairs.iter().enumerate() {
            if kk == k && x[i] > 0.0 {
                small::axpy(&mut a, x[i].sqrt(), self.t.block(k, k, m).expect("served"));
            }
        }
        a
    }

    /// `I + A A^H / N0`.
    fn covariance(&self, a: &[Complex64]) -> Vec<Complex64> {
        let p = self.t.streams;
        let n0 = self.t.downlink_noise;
        let mut x = vec![Complex64::new(0.0, 0.0); p * p];
        for i in 0..p {
            for j in 0..p {
                let s: Complex64 = (0..p).map(|s| a[i * p + s] * a[j * p + s].conj()).sum();
                x[i * p + j] = s / n0;
            }
            x[i * p + i] += 1.0;
        }
        x
    }
}

impl SmoothObjective for ZfSumRate<'_> {
    fn value(&mut self, x: &[f64]) -> f64 {
        let p = self.t.streams;
        (0..self.t.num_ms)
            .map(|k| {
                let mut c = self.covariance(&self.own_gain(k, x));
                small::logdet_in_place(&mut c, p).map_or(f64::NAN, |v| v / LN2)
            })
            .sum::<f64>()
            * self.t.bandwidth_hz
    }

    fn gradient(&mut self, x: &[f64], g: &mut [f64]) {
        let p = self.t.streams;
        let n0 = self.t.downlink_noise;
        let a: Vec<Vec<Complex64>> = (0..self.t.num_ms).map(|k| self.own_gain(k, x)).collect();
        let inv: Vec<Vec<Complex64>> = a
            .iter()
            .map(|ak| {
                let mut c = self.covariance(ak);
                let mut out = vec![Complex64::new(0.0, 0.0); p * p];
                if small::inverse_into(&mut c, p, &mut out).is_none() {
                    out.iter_mut().for_each(|z| *z = Complex64::new(f64::NAN, 0.0));
                }
                out
            })
            .collect();
        for (i, &(m, k)) in self.pairs.iter().enumerate() {
            let b = self.t.block(k, k, m).expect("served");
            // d/dx of A A^H = (b A^H + A b^H) / (2 sqrt x)
            let mut sym = vec![Complex64::new(0.0, 0.0); p * p];
            for r in 0..p {
                for c in 0..p {
                    sym[r * p + c] = (0..p)
                        .map(|s| b[r * p + s] * a[k][c * p + s].conj() + a[k][r * p + s] * b[c * p + s].conj())
                        .sum();
                }
            }
            let tr = small::trace_product(&inv[k], &sym, p);
            g[i] = self.t.bandwidth_hz * tr / (n0 * LN2 * 2.0 * x[i].max(self.floor).sqrt());
        }
    }
}

/// Downlink sum-rate maximization under per-AP budgets.
pub fn sumrate_max(
    t: &GainTensor,
    p_max: f64,
    mode: SumRateMode,
    cfg: &OptimizerConfig,
) -> Result<DownlinkOutcome> {
    match mode {
        SumRateMode::General => {
            let problem = DownlinkProblem {
                p_max,
                delta: 0.0,
                circuit: CircuitModel::Static { p_c_w: 1.0 },
            };
            gee_max_downlink(t, &problem, cfg, &[])
        }
        SumRateMode::ZfPerfectCsi => zf_sumrate(t, p_max, cfg),
    }
}

fn zf_sumrate(t: &GainTensor, p_max: f64, cfg: &OptimizerConfig) -> Result<DownlinkOutcome> {
    if !t.zf_perfect_fd {
        return Err(Error::Optimizer(
            "zf_perfect_csi sum-rate needs a perfect-CSI, fully digital zero-forcing tensor".into(),
        ));
    }
    let assoc = &t.association;
    let pairs: Vec<(usize, usize)> = (0..t.num_aps)
        .flat_map(|m| assoc.served_by_ap[m].iter().map(move |&k| (m, k)))
        .collect();
    let sizes: Vec<usize> = assoc.served_by_ap.iter().map(|s| s.len()).collect();
    let set = FeasibleSet::Blocks { sizes, budget: p_max };
    let start = uniform_allocation(assoc, p_max);
    let mut x: Vec<f64> = pairs.iter().map(|&(m, k)| start.get(m, k)).collect();
    let mut obj = ZfSumRate {
        t,
        pairs: pairs.clone(),
        floor: cfg.gradient_floor * p_max,
    };
    let mut f = obj.value(&x);
    let per_ap = 1.0 / t.num_aps as f64;
    let mut trace = vec![f * per_ap];
    let mut stalled_solves = 0;
    let mut converged = false;
    let mut sweeps = 0;
    let inner = cfg.inner_config();
    while sweeps < cfg.max_sweeps {
        sweeps += 1;
        let out = inner_maximize(&mut obj, &x, &set, &inner);
        stalled_solves += out.stalled as usize;
        let rel = (out.value - f).abs() / f.abs().max(f64::MIN_POSITIVE);
        if out.value >= f {
            x = out.x;
            f = out.value;
        }
        trace.push(f * per_ap);
        if rel < inner.tol || out.iterations < inner.max_iter {
            converged = true;
            break;
        }
    }
    let mut allocation = PowerAllocation::zeros(t.num_aps, t.num_ms);
    for (&(m, k), &v) in pairs.iter().zip(&x) {
        allocation.set(m, k, v);
    }
    // Report the true sum rate (equal to the objective up to ZF leakage).
    let r = rates::downlink_rates(t, &allocation)?;
    Ok(DownlinkOutcome {
        allocation,
        gee: r.iter().sum::<f64>() * per_ap,
        trace,
        sweeps,
        converged,
        stalled_solves,
    })
}

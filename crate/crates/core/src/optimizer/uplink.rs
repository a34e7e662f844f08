use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::dinkelbach::{dinkelbach, Affine};
use super::inner::SmoothObjective;
use super::projection::FeasibleSet;
use super::OptimizerConfig;
use crate::error::{Error, Result};
use crate::linalg::small;
use crate::rates::{self, GainTensor};

const LN2: f64 = std::f64::consts::LN_2;

/// Per-MS budget and consumption of the uplink GEE problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UplinkProblem {
    /// Per-MS radiated power limit `P_T,max`, W.
    pub p_t_max: f64,
    /// MS antennas; `eta_k N_MS <= P_T,max`.
    pub n_ms: usize,
    pub delta: f64,
    /// Circuit power per MS, W.
    pub p_c_ms: f64,
}

impl UplinkProblem {
    pub fn upper(&self) -> f64 {
        self.p_t_max / self.n_ms as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UplinkOutcome {
    pub powers: Vec<f64>,
    pub gee: f64,
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub stalled_solves: usize,
}

/// Every MS at its full budget `P_T,max / N_MS`.
pub fn uplink_full_power(num_ms: usize, problem: &UplinkProblem) -> Vec<f64> {
    vec![problem.upper(); num_ms]
}

pub fn uplink_gee(t: &GainTensor, eta: &[f64], problem: &UplinkProblem) -> Result<f64> {
    let r = rates::uplink_rates(t, eta)?;
    Ok(rates::gee_uplink(&r, eta, problem.delta, problem.p_c_ms))
}

/// Uplink rates as functions of all MS powers: the covariances are affine,
/// `X1_k = n_k I + sum_j eta_j W_jk`, so `g1` is concave and linearizing
/// `g2` gives a tight concave minorizer.
struct UplinkModel {
    p: usize,
    bandwidth: f64,
    /// `n_k I`, or `None` for MSs without serving APs (rate zero).
    noise: Vec<Option<Vec<Complex64>>>,
    /// `W_jk = U_jk^H U_jk` at `[k][j]`.
    w: Vec<Vec<Vec<Complex64>>>,
}

impl UplinkModel {
    fn new(t: &GainTensor) -> Self {
        let p = t.streams;
        let k_count = t.num_ms;
        let mut noise = Vec::with_capacity(k_count);
        let mut w = Vec::with_capacity(k_count);
        for k in 0..k_count {
            let card = t.association.serving_aps[k].len();
            noise.push((card > 0).then(|| {
                let mut n = vec![Complex64::new(0.0, 0.0); p * p];
                for i in 0..p {
                    n[i * p + i] = Complex64::new(t.uplink_noise * card as f64, 0.0);
                }
                n
            }));
            let wk = (0..k_count)
                .map(|j| {
                    let mut u = vec![Complex64::new(0.0, 0.0); p * p];
                    for &m in &t.association.serving_aps[k] {
                        small::axpy(&mut u, 1.0, t.block(j, k, m).expect("served"));
                    }
                    // U^H U
                    let mut out = vec![Complex64::new(0.0, 0.0); p * p];
                    for r in 0..p {
                        for c in 0..p {
                            out[r * p + c] = (0..p).map(|s| u[s * p + r].conj() * u[s * p + c]).sum();
                        }
                    }
                    out
                })
                .collect();
            w.push(wk);
        }
        UplinkModel {
            p,
            bandwidth: t.bandwidth_hz,
            noise,
            w,
        }
    }

    fn covariance(&self, k: usize, x: &[f64], skip: Option<usize>) -> Option<Vec<Complex64>> {
        let mut a = self.noise[k].clone()?;
        for (j, &xj) in x.iter().enumerate() {
            if Some(j) != skip && xj > 0.0 {
                small::axpy(&mut a, xj, &self.w[k][j]);
            }
        }
        Some(a)
    }

    fn logdet(&self, k: usize, x: &[f64], skip: Option<usize>) -> f64 {
        match self.covariance(k, x, skip) {
            Some(mut a) => small::logdet_in_place(&mut a, self.p).map_or(f64::NAN, |v| v / LN2),
            None => 0.0,
        }
    }

    /// `tr(X^{-1} W_jk) / ln 2` for all `j`.
    fn traces(&self, k: usize, x: &[f64], skip: Option<usize>) -> Vec<f64> {
        let n = x.len();
        let Some(mut a) = self.covariance(k, x, skip) else {
            return vec![0.0; n];
        };
        let mut inv = vec![Complex64::new(0.0, 0.0); self.p * self.p];
        if small::inverse_into(&mut a, self.p, &mut inv).is_none() {
            return vec![f64::NAN; n];
        }
        (0..n)
            .map(|j| small::trace_product(&inv, &self.w[k][j], self.p) / LN2)
            .collect()
    }
}

struct UplinkBound<'a> {
    model: &'a UplinkModel,
    x0: Vec<f64>,
    g2_at_x0: Vec<f64>,
    slope: Vec<Vec<f64>>,
}

impl<'a> UplinkBound<'a> {
    fn new(model: &'a UplinkModel, x0: &[f64]) -> Self {
        let k_count = x0.len();
        let g2_at_x0 = (0..k_count).map(|k| model.logdet(k, x0, Some(k))).collect();
        let slope = (0..k_count)
            .map(|k| {
                let mut s = model.traces(k, x0, Some(k));
                s[k] = 0.0;
                s
            })
            .collect();
        UplinkBound {
            model,
            x0: x0.to_vec(),
            g2_at_x0,
            slope,
        }
    }
}

impl SmoothObjective for UplinkBound<'_> {
    fn value(&mut self, x: &[f64]) -> f64 {
        let mut v = 0.0;
        for k in 0..x.len() {
            if self.model.noise[k].is_none() {
                continue;
            }
            let lin: f64 = (0..x.len()).map(|j| self.slope[k][j] * (x[j] - self.x0[j])).sum();
            v += self.model.logdet(k, x, None) - self.g2_at_x0[k] - lin;
        }
        self.model.bandwidth * v
    }

    fn gradient(&mut self, x: &[f64], g: &mut [f64]) {
        g.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..x.len() {
            if self.model.noise[k].is_none() {
                continue;
            }
            let tr = self.model.traces(k, x, None);
            for j in 0..x.len() {
                g[j] += self.model.bandwidth * (tr[j] - self.slope[k][j]);
            }
        }
    }
}

/// Uplink GEE maximization over the `K` MS powers, started at full power.
pub fn gee_max_uplink(t: &GainTensor, problem: &UplinkProblem, cfg: &OptimizerConfig) -> Result<UplinkOutcome> {
    let k_count = t.num_ms;
    let model = UplinkModel::new(t);
    let set = FeasibleSet::Box { upper: problem.upper() };
    let den = Affine {
        constant: problem.p_c_ms * k_count as f64,
        coeffs: vec![problem.delta; k_count],
    };
    let mut x = uplink_full_power(k_count, problem);
    let mut g = uplink_gee(t, &x, problem)?;
    let mut trace = vec![g];
    let mut stalled_solves = 0;
    let mut converged = false;
    let mut iterations = 0;
    let inner = cfg.inner_config();
    while iterations < cfg.max_sweeps {
        iterations += 1;
        let mut bound = UplinkBound::new(&model, &x);
        let out = dinkelbach(&mut bound, &den, &x, &set, &inner, cfg.dinkelbach_tol, cfg.max_dinkelbach_iter);
        stalled_solves += out.stalled as usize;
        let g_new = uplink_gee(t, &out.x, problem)?;
        let prev = x.clone();
        if g_new < g {
            if g_new < g - cfg.monotone_slack * g.abs() {
                return Err(Error::MonotonicityViolation {
                    step: trace.len(),
                    previous: g,
                    current: g_new,
                });
            }
        } else {
            x = out.x;
            g = g_new;
        }
        trace.push(g);
        let diff: f64 = x.iter().zip(&prev).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let base: f64 = prev.iter().map(|v| v * v).sum::<f64>().sqrt();
        if diff <= cfg.outer_tol * base {
            converged = true;
            break;
        }
    }
    Ok(UplinkOutcome {
        powers: x,
        gee: g,
        trace,
        iterations,
        converged,
        stalled_solves,
    })
}

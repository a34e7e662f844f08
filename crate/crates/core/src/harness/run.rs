use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pipeline::{evaluate_drop, Budgets, DropContext, DropRecord};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::rates::PowerAllocation;

pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Mean and standard error of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Estimate { mean: 0.0, std_err: 0.0, samples: 0 };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std_err = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Estimate { mean, std_err, samples: n }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Downlink rate per user, bit/s (over drops x users).
    pub downlink_rate: Estimate,
    pub downlink_rate_uniform: Estimate,
    /// Downlink GEE per drop, bit/J.
    pub downlink_gee: Estimate,
    pub downlink_gee_uniform: Estimate,
    pub uplink_rate: Estimate,
    pub uplink_rate_uniform: Estimate,
    pub uplink_gee: Estimate,
    pub uplink_gee_uniform: Estimate,
}

impl Summary {
    fn of(drops: &[DropRecord]) -> Self {
        let per_user = |f: fn(&DropRecord) -> &Vec<f64>| {
            let v: Vec<f64> = drops.iter().flat_map(|d| f(d).iter().copied()).collect();
            Estimate::of(&v)
        };
        let per_drop = |f: fn(&DropRecord) -> f64| {
            let v: Vec<f64> = drops.iter().map(f).collect();
            Estimate::of(&v)
        };
        Summary {
            downlink_rate: per_user(|d| &d.downlink.rates),
            downlink_rate_uniform: per_user(|d| &d.downlink.rates_uniform),
            downlink_gee: per_drop(|d| d.downlink.gee),
            downlink_gee_uniform: per_drop(|d| d.downlink.gee_uniform),
            uplink_rate: per_user(|d| &d.uplink.rates),
            uplink_rate_uniform: per_user(|d| &d.uplink.rates_uniform),
            uplink_gee: per_drop(|d| d.uplink.gee),
            uplink_gee_uniform: per_drop(|d| d.uplink.gee_uniform),
        }
    }
}

/// Sorted per-user rate samples for empirical CDFs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfSamples {
    pub downlink: Vec<f64>,
    pub downlink_uniform: Vec<f64>,
    pub uplink: Vec<f64>,
    pub uplink_uniform: Vec<f64>,
}

impl CdfSamples {
    fn of(drops: &[DropRecord]) -> Self {
        let sorted = |f: fn(&DropRecord) -> &Vec<f64>| {
            let mut v: Vec<f64> = drops.iter().flat_map(|d| f(d).iter().copied()).collect();
            v.sort_by(f64::total_cmp);
            v
        };
        CdfSamples {
            downlink: sorted(|d| &d.downlink.rates),
            downlink_uniform: sorted(|d| &d.downlink.rates_uniform),
            uplink: sorted(|d| &d.uplink.rates),
            uplink_uniform: sorted(|d| &d.uplink.rates_uniform),
        }
    }

    pub fn series(&self) -> [(&'static str, &[f64]); 4] {
        [
            ("dl_opt", &self.downlink),
            ("dl_uniform", &self.downlink_uniform),
            ("ul_opt", &self.uplink),
            ("ul_uniform", &self.uplink_uniform),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedDrop {
    pub index: usize,
    pub reason: String,
}

/// Swept parameter and its value at this point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub parameter: SweepParam,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub version: String,
    pub config: SystemConfig,
    pub sweep: Option<SweepPoint>,
    pub drops: Vec<DropRecord>,
    pub excluded: Vec<ExcludedDrop>,
    pub summary: Summary,
    pub cdf: CdfSamples,
}

impl RunResult {
    fn assemble(cfg: &SystemConfig, sweep: Option<SweepPoint>, outcomes: Vec<Result<DropRecord>>) -> Result<Self> {
        let mut drops = Vec::new();
        let mut excluded = Vec::new();
        for (index, o) in outcomes.into_iter().enumerate() {
            match o {
                Ok(d) => drops.push(d),
                Err(e) => excluded.push(ExcludedDrop { index, reason: e.to_string() }),
            }
        }
        if drops.is_empty() {
            let reason = excluded.first().map_or("no drops", |e| e.reason.as_str());
            return Err(Error::Optimizer(format!("every drop failed; first failure: {reason}")));
        }
        Ok(RunResult {
            version: VERSION.to_string(),
            config: cfg.clone(),
            sweep,
            summary: Summary::of(&drops),
            cdf: CdfSamples::of(&drops),
            drops,
            excluded,
        })
    }
}

fn pool(cfg: &SystemConfig) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))
}

/// Runs every drop of `cfg`. Drops run concurrently; results are ordered by
/// drop index, so the outcome does not depend on the worker count.
pub fn run(cfg: &SystemConfig) -> Result<RunResult> {
    cfg.validate()?;
    let budgets = Budgets::from_config(cfg);
    let outcomes: Vec<Result<DropRecord>> = pool(cfg)?.install(|| {
        (0..cfg.drops.count())
            .into_par_iter()
            .map(|i| {
                let ctx = DropContext::build(cfg, i)?;
                evaluate_drop(cfg, &ctx, budgets, None)
            })
            .collect()
    });
    RunResult::assemble(cfg, None, outcomes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// Per-AP downlink budget, W.
    PMax,
    /// Per-MS uplink budget, W.
    UplinkPower,
    /// MSs per AP in user-centric mode.
    N,
    /// Number of MSs.
    K,
    /// RF chains per AP.
    NRf,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::PMax => "p_max",
            SweepParam::UplinkPower => "uplink_power",
            SweepParam::N => "n",
            SweepParam::K => "k",
            SweepParam::NRf => "n_rf",
        }
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "p_max" => Ok(SweepParam::PMax),
            "uplink_power" => Ok(SweepParam::UplinkPower),
            "n" => Ok(SweepParam::N),
            "k" => Ok(SweepParam::K),
            "n_rf" => Ok(SweepParam::NRf),
            other => Err(Error::InvalidArgument(format!(
                "unsupported sweep parameter '{other}' (expected p_max, uplink_power, n, k or n_rf)"
            ))),
        }
    }
}

fn as_count(param: SweepParam, v: f64) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 && v.is_finite() {
        Ok(v as usize)
    } else {
        Err(Error::InvalidArgument(format!(
            "{} must take positive integer values, got {v}",
            param.name()
        )))
    }
}

/// Runs `cfg` at each value of `param`. Every point uses the same drop
/// seeds, so curves are paired. For budget sweeps each drop is built once;
/// under the GEE objective the optimum at a smaller budget is also tried as
/// a starting point at the next larger one.
pub fn sweep(cfg: &SystemConfig, param: SweepParam, values: &[f64]) -> Result<Vec<RunResult>> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one value".into()));
    }
    cfg.validate()?;
    match param {
        SweepParam::PMax | SweepParam::UplinkPower => budget_sweep(cfg, param, values),
        SweepParam::N | SweepParam::K | SweepParam::NRf => values
            .iter()
            .map(|&v| {
                let n = as_count(param, v)?;
                let mut c = cfg.clone();
                match param {
                    SweepParam::N => c.network.serve = n,
                    SweepParam::K => c.geometry.num_ms = n,
                    _ => c.beamforming.rf_chains = n,
                }
                c.validate()?;
                let mut r = run(&c)?;
                r.sweep = Some(SweepPoint { parameter: param, value: v });
                Ok(r)
            })
            .collect(),
    }
}

fn budget_sweep(cfg: &SystemConfig, param: SweepParam, values: &[f64]) -> Result<Vec<RunResult>> {
    let configs: Vec<SystemConfig> = values
        .iter()
        .map(|&v| {
            let mut c = cfg.clone();
            if param == SweepParam::PMax {
                c.power.p_max_w = v;
            } else {
                c.power.p_t_max_w = v;
            }
            c.validate().map(|_| c)
        })
        .collect::<Result<_>>()?;
    let per_drop: Vec<Vec<Result<DropRecord>>> = pool(cfg)?.install(|| {
        (0..cfg.drops.count())
            .into_par_iter()
            .map(|i| match DropContext::build(cfg, i) {
                Err(e) => {
                    let msg = e.to_string();
                    configs.iter().map(|_| Err(Error::Optimizer(msg.clone()))).collect()
                }
                Ok(ctx) => {
                    let mut prev: Option<(f64, PowerAllocation)> = None;
                    configs
                        .iter()
                        .map(|c| {
                            let budgets = Budgets::from_config(c);
                            let warm = prev
                                .as_ref()
                                .filter(|(p, _)| param == SweepParam::PMax && *p <= budgets.p_max)
                                .map(|(_, a)| a);
                            let rec = evaluate_drop(c, &ctx, budgets, warm);
                            if let Ok(r) = &rec {
                                let alloc = PowerAllocation {
                                    num_aps: ctx.true_tensor.num_aps,
                                    num_ms: ctx.true_tensor.num_ms,
                                    eta: r.downlink_powers.clone(),
                                };
                                prev = Some((budgets.p_max, alloc));
                            }
                            rec
                        })
                        .collect()
                }
            })
            .collect()
    });
    let mut columns: Vec<Vec<Result<DropRecord>>> = configs.iter().map(|_| Vec::new()).collect();
    for drop in per_drop {
        for (j, r) in drop.into_iter().enumerate() {
            columns[j].push(r);
        }
    }
    configs
        .iter()
        .zip(values)
        .zip(columns)
        .map(|((c, &v), col)| {
            RunResult::assemble(c, Some(SweepPoint { parameter: param, value: v }), col)
        })
        .collect()
}

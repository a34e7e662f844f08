use serde::{Deserialize, Serialize};

use crate::beamforming::{self, PrecoderSet};
use crate::channel::{self, ScenarioRealization};
use crate::config::{BeamformingKind, CsiKind, Objective, SystemConfig};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::optimizer::{
    gee_max_downlink, gee_max_uplink, sumrate_max, uniform_allocation, uplink_full_power,
    DownlinkProblem, SumRateChoice, SumRateMode, UplinkProblem,
};
use crate::rates::{self, associate, Association, GainTensor, PowerAllocation};
use crate::rng::{self, tag};
use crate::training;

/// Seed of drop `index` under run seed `seed`.
pub fn drop_seed(seed: u64, index: usize) -> u64 {
    rng::derive_key(seed, &[tag::DROP, index as u64])
}

/// Numerical events of one drop.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DropFlags {
    pub outage_links: usize,
    pub regularized_aps: usize,
    pub zero_precoders: usize,
    pub bcd_fallback_aps: usize,
    /// MSs not served by any AP.
    pub unserved_ms: usize,
    pub stalled_solves: usize,
    pub optimizer_converged: bool,
}

/// Everything about a drop that does not depend on the power budgets.
pub struct DropContext {
    pub index: usize,
    pub seed: u64,
    pub scenario: ScenarioRealization,
    pub association: Association,
    pub precoders: PrecoderSet,
    /// Gains on the true channels; all reported metrics use these.
    pub true_tensor: GainTensor,
    /// Gains the optimizer sees (built from the estimates when CSI is
    /// estimated).
    pub design_tensor: GainTensor,
    pub flags: DropFlags,
}

impl DropContext {
    pub fn build(cfg: &SystemConfig, index: usize) -> Result<Self> {
        let seed = drop_seed(cfg.seed, index);
        let scenario = channel::generate_scenario(cfg, seed)?;
        let (m_count, k_count) = (scenario.num_aps(), scenario.num_ms());
        let l = beamforming::ms_combiner(cfg.antennas.n_ms, cfg.antennas.streams)?;
        let effective: Vec<CMat> = scenario.channels.iter().map(|h| h * &l).collect();
        let noise = cfg.noise_variance();
        let estimates = match cfg.csi.kind {
            CsiKind::Perfect => None,
            CsiKind::Estimated => {
                let pilots = training::generate_pilots(
                    k_count,
                    cfg.antennas.streams,
                    cfg.csi.pilot_len,
                    cfg.csi.pilot_power_w,
                    cfg.csi.orthogonal_pilots,
                    &mut rng::stream(seed, &[tag::PILOTS]),
                )?;
                let mut est = Vec::with_capacity(effective.len());
                for m in 0..m_count {
                    let s = &effective[m * k_count..(m + 1) * k_count];
                    let mut r = rng::stream(seed, &[tag::TRAINING_NOISE, m as u64]);
                    let y = training::training_signal(s, &pilots, noise, &mut r)?;
                    est.extend(training::lmmse_estimate(&y, &pilots, noise)?);
                }
                Some(est)
            }
        };
        let design_channels = estimates.as_ref().unwrap_or(&effective);
        let norms: Vec<f64> = scenario
            .channels
            .iter()
            .map(|h| linalg::frobenius_sq(h).sqrt())
            .collect();
        let association = associate(&norms, m_count, k_count, cfg.network.association_mode())?;
        let fd = beamforming::zf_precoders(design_channels, &association)?;
        let precoders = match cfg.beamforming.kind {
            BeamformingKind::Digital => fd,
            BeamformingKind::Hybrid => beamforming::hybrid_precoders(
                &fd,
                &association,
                cfg.beamforming.rf_chains,
                cfg.beamforming.max_iter,
                cfg.beamforming.tol,
                seed,
            )?,
        };
        let (n_ms, band) = (cfg.antennas.n_ms, cfg.radio.bandwidth_hz);
        let mut true_tensor = rates::gain_tensor(&effective, &precoders, &association, n_ms, band, noise)?;
        true_tensor.zf_perfect_fd = cfg.csi.kind == CsiKind::Perfect
            && cfg.beamforming.kind == BeamformingKind::Digital
            && precoders.exact_zf;
        let design_tensor = match &estimates {
            Some(est) => rates::gain_tensor(est, &precoders, &association, n_ms, band, noise)?,
            None => true_tensor.clone(),
        };
        let flags = DropFlags {
            outage_links: scenario.outages(),
            regularized_aps: precoders.flags.regularized_aps.len(),
            zero_precoders: precoders.flags.zero_precoders,
            bcd_fallback_aps: precoders.flags.bcd_fallback_aps.len(),
            unserved_ms: association.serving_aps.iter().filter(|s| s.is_empty()).count(),
            stalled_solves: 0,
            optimizer_converged: true,
        };
        Ok(DropContext {
            index,
            seed,
            scenario,
            association,
            precoders,
            true_tensor,
            design_tensor,
            flags,
        })
    }
}

/// Per-MS rates and efficiencies of one link direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkMetrics {
    /// Per-MS rates with optimized powers, bit/s.
    pub rates: Vec<f64>,
    /// Per-MS rates with the uniform (downlink) or full-power (uplink)
    /// baseline, bit/s.
    pub rates_uniform: Vec<f64>,
    pub gee: f64,
    pub gee_uniform: f64,
    /// Optimizer GEE trace (empty for the uniform objective).
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropRecord {
    pub index: usize,
    pub seed: u64,
    pub downlink: LinkMetrics,
    pub uplink: LinkMetrics,
    /// Optimized downlink powers, `eta[m * K + k]`, W.
    pub downlink_powers: Vec<f64>,
    pub uplink_powers: Vec<f64>,
    pub flags: DropFlags,
}

/// Power budgets of one evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budgets {
    pub p_max: f64,
    pub p_t_max: f64,
}

impl Budgets {
    pub fn from_config(cfg: &SystemConfig) -> Self {
        Budgets {
            p_max: cfg.power.p_max_w,
            p_t_max: cfg.power.p_t_max_w,
        }
    }
}

fn resolve_sumrate_mode(cfg: &SystemConfig, t: &GainTensor) -> Result<SumRateMode> {
    match cfg.optimizer.sumrate_mode {
        SumRateChoice::General => Ok(SumRateMode::General),
        SumRateChoice::ZfPerfectCsi => Ok(SumRateMode::ZfPerfectCsi),
        SumRateChoice::Auto if t.zf_perfect_fd => Ok(SumRateMode::ZfPerfectCsi),
        SumRateChoice::Auto => Ok(SumRateMode::General),
    }
}

/// Allocates power on a built drop and measures it on the true gains.
/// `warm_start` is an extra downlink starting point for the GEE objective.
pub fn evaluate_drop(
    cfg: &SystemConfig,
    ctx: &DropContext,
    budgets: Budgets,
    warm_start: Option<&PowerAllocation>,
) -> Result<DropRecord> {
    let truth = &ctx.true_tensor;
    let design = &ctx.design_tensor;
    let dl_problem = DownlinkProblem {
        p_max: budgets.p_max,
        delta: cfg.power.delta,
        circuit: cfg.power.circuit,
    };
    let ul_problem = UplinkProblem {
        p_t_max: budgets.p_t_max,
        n_ms: cfg.antennas.n_ms,
        delta: cfg.power.delta,
        p_c_ms: cfg.power.uplink_circuit_w,
    };
    let mut flags = ctx.flags.clone();

    let eta_u = uniform_allocation(&ctx.association, budgets.p_max);
    let (eta, dl_trace) = match cfg.objective {
        Objective::Uniform => (eta_u.clone(), Vec::new()),
        Objective::Gee => {
            let starts: Vec<PowerAllocation> = warm_start.into_iter().cloned().collect();
            let out = gee_max_downlink(design, &dl_problem, &cfg.optimizer, &starts)?;
            flags.stalled_solves += out.stalled_solves;
            flags.optimizer_converged &= out.converged;
            (out.allocation, out.trace)
        }
        Objective::Sumrate => {
            let mode = resolve_sumrate_mode(cfg, design)?;
            let out = sumrate_max(design, budgets.p_max, mode, &cfg.optimizer)?;
            flags.stalled_solves += out.stalled_solves;
            flags.optimizer_converged &= out.converged;
            (out.allocation, out.trace)
        }
    };
    let dl_rates = rates::downlink_rates(truth, &eta)?;
    let dl_rates_u = rates::downlink_rates(truth, &eta_u)?;
    let gee_of = |r: &[f64], e: &PowerAllocation| {
        rates::gee(r, e, dl_problem.delta, &dl_problem.circuit, dl_problem.p_max)
    };
    let downlink = LinkMetrics {
        gee: gee_of(&dl_rates, &eta),
        gee_uniform: gee_of(&dl_rates_u, &eta_u),
        rates: dl_rates,
        rates_uniform: dl_rates_u,
        trace: dl_trace,
    };

    let k_count = truth.num_ms;
    let ul_full = uplink_full_power(k_count, &ul_problem);
    let (ul_eta, ul_trace) = match cfg.objective {
        Objective::Uniform => (ul_full.clone(), Vec::new()),
        Objective::Gee | Objective::Sumrate => {
            let problem = if cfg.objective == Objective::Gee {
                ul_problem
            } else {
                UplinkProblem {
                    delta: 0.0,
                    p_c_ms: 1.0,
                    ..ul_problem
                }
            };
            let out = gee_max_uplink(design, &problem, &cfg.optimizer)?;
            flags.stalled_solves += out.stalled_solves;
            (out.powers, out.trace)
        }
    };
    let ul_rates = rates::uplink_rates(truth, &ul_eta)?;
    let ul_rates_u = rates::uplink_rates(truth, &ul_full)?;
    let uplink = LinkMetrics {
        gee: rates::gee_uplink(&ul_rates, &ul_eta, ul_problem.delta, ul_problem.p_c_ms),
        gee_uniform: rates::gee_uplink(&ul_rates_u, &ul_full, ul_problem.delta, ul_problem.p_c_ms),
        rates: ul_rates,
        rates_uniform: ul_rates_u,
        trace: ul_trace,
    };
    let record = DropRecord {
        index: ctx.index,
        seed: ctx.seed,
        downlink,
        uplink,
        downlink_powers: eta.eta,
        uplink_powers: ul_eta,
        flags,
    };
    check_finite(&record)?;
    Ok(record)
}

fn check_finite(r: &DropRecord) -> Result<()> {
    let all = [&r.downlink, &r.uplink].into_iter().flat_map(|l| {
        l.rates
            .iter()
            .chain(&l.rates_uniform)
            .chain([&l.gee, &l.gee_uniform])
            .chain(&l.trace)
    });
    if all.chain(&r.downlink_powers).chain(&r.uplink_powers).all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("drop {} produced non-finite metrics", r.index)))
    }
}


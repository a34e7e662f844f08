//! MS combiners, per-AP zero-forcing precoders and the BCD-SD hybrid
//! analog/digital decomposition.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::rates::Association;
use crate::rng::{self, tag, SimRng};

/// 0-1 combiner `L = I_P (x) 1_{N_MS/P}` (`N_MS x P`).
pub fn ms_combiner(n_ms: usize, p: usize) -> Result<CMat> {
    if p == 0 || n_ms % p != 0 {
        return Err(Error::InvalidArgument(format!(
            "{p} streams do not divide {n_ms} antennas"
        )));
    }
    let g = n_ms / p;
    Ok(CMat::from_fn(n_ms, p, |i, j| {
        if i / g == j {
            linalg::ONE
        } else {
            linalg::ZERO
        }
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrecoderMode {
    FullyDigital,
    Hybrid,
}

/// Numerical events met while building precoders.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PrecoderFlags {
    /// APs whose Gram matrix needed Tikhonov loading.
    pub regularized_aps: Vec<usize>,
    /// Served pairs left with an all-zero precoder (zero channel estimate).
    pub zero_precoders: usize,
    /// APs whose BCD-SD run used a pseudo-inverse fallback.
    pub bcd_fallback_aps: Vec<usize>,
}

impl PrecoderFlags {
    pub fn any(&self) -> bool {
        !self.regularized_aps.is_empty() || self.zero_precoders > 0 || !self.bcd_fallback_aps.is_empty()
    }
}

/// Precoders `Q_{k,m}` (`N_AP x P`) of all served pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrecoderSet {
    pub mode: PrecoderMode,
    pub num_ms: usize,
    /// Effective precoder of pair `(m, k)` at index `m * K + k`; `None` when
    /// AP `m` does not serve MS `k`.
    pub q: Vec<Option<CMat>>,
    /// Analog stage per AP (hybrid only).
    pub rf: Vec<CMat>,
    /// Digital stage per AP (hybrid only), columns ordered as `K(m)`.
    pub bb: Vec<CMat>,
    /// True when every AP could null interference among its served MSs
    /// (`card(K(m)) P <= N_AP` and no regularization).
    pub exact_zf: bool,
    pub flags: PrecoderFlags,
}

impl PrecoderSet {
    pub fn get(&self, m: usize, k: usize) -> Option<&CMat> {
        self.q[m * self.num_ms + k].as_ref()
    }
}

/// Scales `q` to unit Frobenius norm; returns false (leaving zeros) when `q`
/// vanishes.
fn normalize(q: &mut CMat) -> bool {
    let n = linalg::frobenius_sq(q).sqrt();
    if n > 0.0 && n.is_finite() {
        *q /= Complex64::from(n);
        true
    } else {
        q.fill(linalg::ZERO);
        false
    }
}

struct ApZf {
    blocks: Vec<CMat>,
    regularized: bool,
    exact: bool,
    zeros: usize,
}

fn zf_one_ap(g: &CMat, p: usize, n_served: usize) -> ApZf {
    let n_ap = g.nrows();
    let cols = g.ncols();
    let (q, regularized, exact) = if cols <= n_ap {
        // Tall or square stack: G (G^H G)^{-1}, the pseudo-inverse form.
        let inv = linalg::invert_gram(&(g.adjoint() * g), n_ap);
        (g * &inv.inverse, inv.regularized(), !inv.regularized())
    } else {
        let inv = linalg::invert_gram(&(g * g.adjoint()), n_ap);
        (&inv.inverse * g, inv.regularized(), false)
    };
    let mut zeros = 0;
    let blocks = (0..n_served)
        .map(|i| {
            let mut b = q.columns(i * p, p).into_owned();
            if !normalize(&mut b) {
                zeros += 1;
            }
            b
        })
        .collect();
    ApZf {
        blocks,
        regularized,
        exact,
        zeros,
    }
}

/// Zero-forcing precoders computed per AP from the effective channels
/// `effective[m * K + k]` (`N_AP x P`, true or estimated) of its served MSs,
/// each normalized to unit trace.
pub fn zf_precoders(effective: &[CMat], assoc: &Association) -> Result<PrecoderSet> {
    let (m_count, k_count) = (assoc.num_aps(), assoc.num_ms());
    if effective.len() != m_count * k_count {
        return Err(Error::Dimension(format!(
            "{} effective channels for {m_count} x {k_count} links",
            effective.len()
        )));
    }
    let p = effective.first().map_or(0, |s| s.ncols());
    let n_ap = effective.first().map_or(0, |s| s.nrows());
    let per_ap: Vec<ApZf> = (0..m_count)
        .into_par_iter()
        .map(|m| {
            let served = &assoc.served_by_ap[m];
            let mut g = CMat::zeros(n_ap, served.len() * p);
            for (i, &k) in served.iter().enumerate() {
                g.view_mut((0, i * p), (n_ap, p))
                    .copy_from(&effective[m * k_count + k]);
            }
            zf_one_ap(&g, p, served.len())
        })
        .collect();
    let mut q = vec![None; m_count * k_count];
    let mut flags = PrecoderFlags::default();
    let mut exact_zf = true;
    for (m, ap) in per_ap.into_iter().enumerate() {
        if ap.regularized {
            flags.regularized_aps.push(m);
        }
        exact_zf &= ap.exact || assoc.served_by_ap[m].is_empty();
        flags.zero_precoders += ap.zeros;
        for (&k, b) in assoc.served_by_ap[m].iter().zip(ap.blocks) {
            q[m * k_count + k] = Some(b);
        }
    }
    Ok(PrecoderSet {
        mode: PrecoderMode::FullyDigital,
        num_ms: k_count,
        q,
        rf: Vec::new(),
        bb: Vec::new(),
        exact_zf,
        flags,
    })
}

/// Result of one BCD-SD decomposition `Q_opt ~ Q_RF Q_BB`.
#[derive(Debug, Clone)]
pub struct BcdOutcome {
    pub rf: CMat,
    pub bb: CMat,
    /// Frobenius residual after each accepted update, non-increasing.
    pub residuals: Vec<f64>,
    /// A pseudo-inverse replaced a singular Gram inverse at least once.
    pub fallback: bool,
    /// The projected analog update would have increased the residual at
    /// least once and was replaced by per-entry phase updates.
    pub safeguarded: bool,
}

fn residual(q_opt: &CMat, rf: &CMat, bb: &CMat) -> f64 {
    (q_opt - rf * bb).norm()
}

fn phase_only(m: &CMat, scale: f64) -> CMat {
    m.map(|z| Complex64::from_polar(scale, z.arg()))
}

/// One cyclic pass over the analog entries; each is set to the phase that
/// minimizes `||q_opt - rf bb||_F` with all other entries fixed.
fn entrywise_phase_update(q_opt: &CMat, rf: &CMat, bb: &CMat, scale: f64) -> CMat {
    let mut rf = rf.clone();
    let mut r = q_opt - &rf * bb;
    for j in 0..rf.ncols() {
        let bj = bb.row(j);
        for i in 0..rf.nrows() {
            let old = rf[(i, j)];
            let mut c = linalg::ZERO;
            for (col, b) in bj.iter().enumerate() {
                r[(i, col)] += old * b;
                c += r[(i, col)] * b.conj();
            }
            if c.norm() > 0.0 {
                rf[(i, j)] = Complex64::from_polar(scale, c.arg());
            }
            let new = rf[(i, j)];
            for (col, b) in bj.iter().enumerate() {
                r[(i, col)] -= new * b;
            }
        }
    }
    rf
}

/// Alternating least-squares split of `q_opt` (`N_AP x n`) into a
/// constant-modulus analog stage (`N_AP x n_rf`, entries of modulus
/// `1/sqrt(N_AP)`) and a digital stage (`n_rf x n`).
pub fn bcd_sd(q_opt: &CMat, n_rf: usize, max_iter: usize, tol: f64, rng: &mut SimRng) -> Result<BcdOutcome> {
    if n_rf == 0 {
        return Err(Error::InvalidArgument("at least one RF chain is required".into()));
    }
    if !linalg::is_finite(q_opt) {
        return Err(Error::NonFinite("hybrid target".into()));
    }
    let n_ap = q_opt.nrows();
    let scale = 1.0 / (n_ap as f64).sqrt();
    let mut rf = CMat::from_fn(n_ap, n_rf, |_, _| {
        Complex64::from_polar(scale, rng.random::<f64>() * std::f64::consts::TAU)
    });
    let (left, mut fallback) = linalg::left_inverse(&rf);
    let mut bb = left * q_opt;
    let mut res = residual(q_opt, &rf, &bb);
    let mut residuals = vec![res];
    let target = q_opt.norm();
    let mut safeguarded = false;
    for _ in 0..max_iter {
        if res <= 1e-14 * target {
            break;
        }
        let (right, fb1) = linalg::right_inverse(&bb);
        let mut rf_new = phase_only(&(q_opt * right), scale);
        let (mut left, mut fb2) = linalg::left_inverse(&rf_new);
        let mut bb_new = &left * q_opt;
        let mut res_new = residual(q_opt, &rf_new, &bb_new);
        if res_new > res {
            // The projected step overshot; take exact per-entry phase
            // minimizers from the current point instead.
            safeguarded = true;
            rf_new = entrywise_phase_update(q_opt, &rf, &bb, scale);
            (left, fb2) = linalg::left_inverse(&rf_new);
            bb_new = &left * q_opt;
            res_new = residual(q_opt, &rf_new, &bb_new);
            if res_new > res {
                break;
            }
        }
        fallback |= fb1 || fb2;
        let change = (res - res_new) / res.max(f64::MIN_POSITIVE);
        rf = rf_new;
        bb = bb_new;
        res = res_new;
        residuals.push(res);
        if change < tol {
            break;
        }
    }
    Ok(BcdOutcome {
        rf,
        bb,
        residuals,
        fallback,
        safeguarded,
    })
}

/// Hybrid precoders: per AP the served FD precoders are stacked, split by
/// BCD-SD, and each effective precoder `Q_RF Q_BB,k` is renormalized to unit
/// trace. `seed` keys the analog initializations.
pub fn hybrid_precoders(
    fd: &PrecoderSet,
    assoc: &Association,
    n_rf: usize,
    max_iter: usize,
    tol: f64,
    seed: u64,
) -> Result<PrecoderSet> {
    let k_count = fd.num_ms;
    let m_count = assoc.num_aps();
    let n_ap = fd.q.iter().flatten().next().map_or(0, |q| q.nrows());
    let p = fd.q.iter().flatten().next().map_or(0, |q| q.ncols());
    let per_ap: Vec<Result<(BcdOutcome, Vec<CMat>, usize)>> = (0..m_count)
        .into_par_iter()
        .map(|m| {
            let served = &assoc.served_by_ap[m];
            let mut q_opt = CMat::zeros(n_ap, served.len() * p);
            for (i, &k) in served.iter().enumerate() {
                let q = fd.get(m, k).ok_or_else(|| {
                    Error::InvalidArgument(format!("missing FD precoder for AP {m}, MS {k}"))
                })?;
                q_opt.view_mut((0, i * p), (n_ap, p)).copy_from(q);
            }
            let mut rng = rng::stream(seed, &[tag::HYBRID_INIT, m as u64]);
            let out = bcd_sd(&q_opt, n_rf, max_iter, tol, &mut rng)?;
            let mut zeros = 0;
            let blocks = (0..served.len())
                .map(|i| {
                    let mut q = &out.rf * out.bb.columns(i * p, p);
                    if !normalize(&mut q) {
                        zeros += 1;
                    }
                    q
                })
                .collect();
            Ok((out, blocks, zeros))
        })
        .collect();
    let mut q = vec![None; m_count * k_count];
    let mut rf = Vec::with_capacity(m_count);
    let mut bb = Vec::with_capacity(m_count);
    let mut flags = fd.flags.clone();
    flags.zero_precoders = 0;
    for (m, r) in per_ap.into_iter().enumerate() {
        let (out, blocks, zeros) = r?;
        if out.fallback {
            flags.bcd_fallback_aps.push(m);
        }
        flags.zero_precoders += zeros;
        for (&k, b) in assoc.served_by_ap[m].iter().zip(blocks) {
            q[m * k_count + k] = Some(b);
        }
        rf.push(out.rf);
        bb.push(out.bb);
    }
    Ok(PrecoderSet {
        mode: PrecoderMode::Hybrid,
        num_ms: k_count,
        q,
        rf,
        bb,
        exact_zf: false,
        flags,
    })
}

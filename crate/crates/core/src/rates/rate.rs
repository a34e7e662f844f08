use num_complex::Complex64;

use super::power::check_powers;
use super::{GainTensor, PowerAllocation};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

fn scaled_identity(p: usize, s: f64) -> CMat {
    CMat::identity(p, p) * Complex64::from(s)
}

/// `A_{k,l} = sum_{m in M(l)} sqrt(eta_{m,l}) B[k][l][m]` for every `l`.
pub fn downlink_gains(t: &GainTensor, eta: &PowerAllocation, k: usize) -> Vec<CMat> {
    (0..t.num_ms)
        .map(|l| {
            let mut a = CMat::zeros(t.streams, t.streams);
            for &m in &t.association.serving_aps[l] {
                let w = eta.get(m, l).sqrt();
                if w > 0.0 {
                    a += t.block_mat(k, l, m).expect("served block") * Complex64::from(w);
                }
            }
            a
        })
        .collect()
}

fn check_inputs(t: &GainTensor, eta: &PowerAllocation, k: usize) -> Result<()> {
    if eta.num_aps != t.num_aps || eta.num_ms != t.num_ms {
        return Err(Error::Dimension("allocation does not match gain tensor".into()));
    }
    if k >= t.num_ms {
        return Err(Error::InvalidArgument(format!("no MS {k}")));
    }
    check_powers(&eta.eta)
}

/// Covariances `X1 = N0 I + sum_l A A^H` and `X2 = X1 - A_kk A_kk^H`.
fn downlink_covariances(t: &GainTensor, eta: &PowerAllocation, k: usize) -> (CMat, CMat, CMat) {
    let a = downlink_gains(t, eta, k);
    let mut x2 = scaled_identity(t.streams, t.downlink_noise);
    for (l, al) in a.iter().enumerate() {
        if l != k {
            x2 += al * al.adjoint();
        }
    }
    let akk = a[k].clone();
    let x1 = &x2 + &akk * akk.adjoint();
    (x1, x2, akk)
}

/// `(g1, g2)` in bits: `log2|X1|` and `log2|X2|`.
pub fn downlink_logdets(t: &GainTensor, eta: &PowerAllocation, k: usize) -> Result<(f64, f64)> {
    check_inputs(t, eta, k)?;
    let (x1, x2, _) = downlink_covariances(t, eta, k);
    let ld = |x: &CMat| {
        linalg::hpd_logdet(x)
            .map(|v| v / std::f64::consts::LN_2)
            .ok_or_else(|| Error::NonFinite("downlink covariance not positive definite".into()))
    };
    Ok((ld(&x1)?, ld(&x2)?))
}

/// Downlink rate of MS `k`, bit/s, as the difference `B (g1 - g2)`.
pub fn downlink_rate(t: &GainTensor, eta: &PowerAllocation, k: usize) -> Result<f64> {
    let (g1, g2) = downlink_logdets(t, eta, k)?;
    Ok(t.bandwidth_hz * (g1 - g2).max(0.0))
}

/// Downlink rate of MS `k` evaluated directly as
/// `B log2|I + R_k^{-1} A_kk A_kk^H|`.
pub fn downlink_rate_direct(t: &GainTensor, eta: &PowerAllocation, k: usize) -> Result<f64> {
    check_inputs(t, eta, k)?;
    let (_, x2, akk) = downlink_covariances(t, eta, k);
    let inv = x2
        .try_inverse()
        .ok_or_else(|| Error::NonFinite("singular interference covariance".into()))?;
    let m = CMat::identity(t.streams, t.streams) + inv * &akk * akk.adjoint();
    Ok(t.bandwidth_hz * linalg::general_log_abs_det(&m) / std::f64::consts::LN_2)
}

pub fn downlink_rates(t: &GainTensor, eta: &PowerAllocation) -> Result<Vec<f64>> {
    (0..t.num_ms).map(|k| downlink_rate(t, eta, k)).collect()
}

/// `U_{j,k} = sum_{m in M(k)} B[j][k][m]`: MS `j` as seen through the
/// receive filters of MS `k`.
fn uplink_gain(t: &GainTensor, j: usize, k: usize) -> CMat {
    let mut u = CMat::zeros(t.streams, t.streams);
    for &m in &t.association.serving_aps[k] {
        u += t.block_mat(j, k, m).expect("served block");
    }
    u
}

/// Uplink rate of MS `k`, bit/s, with per-MS powers `eta[k]`.
pub fn uplink_rate(t: &GainTensor, eta: &[f64], k: usize) -> Result<f64> {
    if eta.len() != t.num_ms || k >= t.num_ms {
        return Err(Error::Dimension("uplink powers do not match gain tensor".into()));
    }
    check_powers(eta)?;
    let card = t.association.serving_aps[k].len();
    if card == 0 || eta[k] == 0.0 {
        return Ok(0.0);
    }
    let mut r = scaled_identity(t.streams, t.uplink_noise * card as f64);
    for (j, &ej) in eta.iter().enumerate() {
        if j != k && ej > 0.0 {
            let u = uplink_gain(t, j, k);
            r += u.adjoint() * u * Complex64::from(ej);
        }
    }
    let u = uplink_gain(t, k, k);
    let x1 = &r + u.adjoint() * &u * Complex64::from(eta[k]);
    let (g1, g2) = match (linalg::hpd_logdet(&x1), linalg::hpd_logdet(&r)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::NonFinite("uplink covariance not positive definite".into())),
    };
    Ok(t.bandwidth_hz * ((g1 - g2) / std::f64::consts::LN_2).max(0.0))
}

pub fn uplink_rates(t: &GainTensor, eta: &[f64]) -> Result<Vec<f64>> {
    (0..t.num_ms).map(|k| uplink_rate(t, eta, k)).collect()
}

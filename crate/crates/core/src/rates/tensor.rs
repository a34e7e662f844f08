use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Association;
use crate::beamforming::PrecoderSet;
use crate::error::{Error, Result};
use crate::linalg::CMat;

/// Effective gains `B[k][l][m] = L_k^H H_{k,m}^H Q_{l,m}` (`P x P`), defined
/// for `m` in `M(l)`, together with the link constants needed for rates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GainTensor {
    pub num_aps: usize,
    pub num_ms: usize,
    pub streams: usize,
    pub bandwidth_hz: f64,
    /// Downlink per-stream noise after combining, `sigma_z^2 N_MS / P`.
    pub downlink_noise: f64,
    /// Uplink per-antenna noise variance `sigma_w^2`.
    pub uplink_noise: f64,
    pub association: Association,
    /// Built from true channels with exact per-AP zero-forcing precoders.
    pub zf_perfect_fd: bool,
    /// Row-major `P x P` blocks at `((k * K + l) * M + m) * P^2`.
    data: Vec<Complex64>,
    present: Vec<bool>,
}

impl GainTensor {
    /// Builds a tensor from a block generator called for every `(k, l, m)`
    /// with `m` in `M(l)`.
    pub fn from_fn(
        association: Association,
        streams: usize,
        bandwidth_hz: f64,
        downlink_noise: f64,
        uplink_noise: f64,
        mut block: impl FnMut(usize, usize, usize) -> CMat,
    ) -> Result<Self> {
        let (m_count, k_count) = (association.num_aps(), association.num_ms());
        let pp = streams * streams;
        let mut data = vec![Complex64::new(0.0, 0.0); k_count * k_count * m_count * pp];
        let mut present = vec![false; k_count * k_count * m_count];
        for k in 0..k_count {
            for l in 0..k_count {
                for &m in &association.serving_aps[l] {
                    let b = block(k, l, m);
                    if b.shape() != (streams, streams) {
                        return Err(Error::Dimension(format!(
                            "gain block {:?}, expected {streams}x{streams}",
                            b.shape()
                        )));
                    }
                    let idx = (k * k_count + l) * m_count + m;
                    present[idx] = true;
                    let out = &mut data[idx * pp..(idx + 1) * pp];
                    for r in 0..streams {
                        for c in 0..streams {
                            out[r * streams + c] = b[(r, c)];
                        }
                    }
                }
            }
        }
        Ok(GainTensor {
            num_aps: m_count,
            num_ms: k_count,
            streams,
            bandwidth_hz,
            downlink_noise,
            uplink_noise,
            association,
            zf_perfect_fd: false,
            data,
            present,
        })
    }

    /// Row-major block `B[k][l][m]`, `None` when AP `m` does not serve `l`.
    pub fn block(&self, k: usize, l: usize, m: usize) -> Option<&[Complex64]> {
        let idx = (k * self.num_ms + l) * self.num_aps + m;
        let pp = self.streams * self.streams;
        self.present[idx].then(|| &self.data[idx * pp..(idx + 1) * pp])
    }

    pub fn block_mat(&self, k: usize, l: usize, m: usize) -> Option<CMat> {
        self.block(k, l, m)
            .map(|b| CMat::from_row_slice(self.streams, self.streams, b))
    }
}

/// Gain tensor from effective channels `effective[m * K + k] = H_{k,m} L_k`
/// (`N_AP x P`) and a precoder set. `noise_var` is the per-antenna noise
/// power used for both link directions.
pub fn gain_tensor(
    effective: &[CMat],
    precoders: &PrecoderSet,
    association: &Association,
    n_ms: usize,
    bandwidth_hz: f64,
    noise_var: f64,
) -> Result<GainTensor> {
    let k_count = association.num_ms();
    let p = effective.first().map_or(1, |s| s.ncols());
    let mut missing = None;
    let t = GainTensor::from_fn(
        association.clone(),
        p,
        bandwidth_hz,
        noise_var * n_ms as f64 / p as f64,
        noise_var,
        |k, l, m| match precoders.get(m, l) {
            Some(q) => effective[m * k_count + k].adjoint() * q,
            None => {
                missing = Some((m, l));
                CMat::zeros(p, p)
            }
        },
    )?;
    if let Some((m, l)) = missing {
        return Err(Error::InvalidArgument(format!(
            "no precoder for AP {m} serving MS {l}"
        )));
    }
    Ok(t)
}

//! Uplink training: pilot books, received training signals and LMMSE
//! estimation of the effective channels `S = H L`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::rng::{complex_gaussian, SimRng};

/// Per-MS pilot matrices `Phi_k` (`P x tau`, orthonormal rows) and powers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PilotBook {
    pub phi: Vec<CMat>,
    pub power: Vec<f64>,
    pub tau: usize,
}

impl PilotBook {
    pub fn num_ms(&self) -> usize {
        self.phi.len()
    }

    pub fn streams(&self) -> usize {
        self.phi.first().map_or(0, |p| p.nrows())
    }

    /// `Psi = [sqrt(p_1) Phi_1^T, ..., sqrt(p_K) Phi_K^T]`, `tau x KP`.
    fn stacked(&self) -> CMat {
        let p = self.streams();
        let mut psi = CMat::zeros(self.tau, self.num_ms() * p);
        for (k, (phi, &pw)) in self.phi.iter().zip(&self.power).enumerate() {
            let block = phi.transpose() * Complex64::from(pw.sqrt());
            psi.view_mut((0, k * p), (self.tau, p)).copy_from(&block);
        }
        psi
    }
}

fn random_signs(rng: &mut SimRng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 })
}

/// Orthonormal basis of the columns of a `tau x n` sign matrix, or `None`
/// when the draw is (numerically) rank deficient.
fn orthonormal_columns(a: DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.ncols();
    let qr = a.qr();
    let r = qr.r();
    let scale = (0..n).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..n).any(|i| r[(i, i)].abs() <= 1e-8 * scale) {
        return None;
    }
    Some(qr.q())
}

/// Draws binary random pilots with orthonormal rows. With `orthogonal` set,
/// all `K*P` rows across MSs are mutually orthogonal (needs `K*P <= tau`).
pub fn generate_pilots(
    k: usize,
    p: usize,
    tau: usize,
    power: f64,
    orthogonal: bool,
    rng: &mut SimRng,
) -> Result<PilotBook> {
    if p == 0 || tau < p {
        return Err(Error::InvalidArgument(format!(
            "pilot length {tau} cannot carry {p} orthonormal rows"
        )));
    }
    if orthogonal && k * p > tau {
        return Err(Error::InvalidArgument(format!(
            "{k} MSs x {p} streams exceed pilot length {tau} for orthogonal pilots"
        )));
    }
    let to_phi = |cols: DMatrix<f64>| -> CMat { cols.transpose().map(Complex64::from) };
    let phi = if orthogonal {
        let q = loop {
            if let Some(q) = orthonormal_columns(random_signs(rng, tau, k * p)) {
                break q;
            }
        };
        (0..k).map(|i| to_phi(q.columns(i * p, p).into_owned())).collect()
    } else {
        (0..k)
            .map(|_| {
                if p == 1 {
                    return to_phi(random_signs(rng, tau, 1) / (tau as f64).sqrt());
                }
                loop {
                    if let Some(q) = orthonormal_columns(random_signs(rng, tau, p)) {
                        break to_phi(q);
                    }
                }
            })
            .collect()
    };
    Ok(PilotBook {
        phi,
        power: vec![power; k],
        tau,
    })
}

/// `Y_m = sum_k sqrt(p_k) S_{k,m} Phi_k + W_m` for one AP, where `effective[k]`
/// is `S_{k,m}` (`N_AP x P`).
pub fn training_signal(
    effective: &[CMat],
    pilots: &PilotBook,
    noise_var: f64,
    rng: &mut SimRng,
) -> Result<CMat> {
    if effective.len() != pilots.num_ms() {
        return Err(Error::Dimension(format!(
            "{} channels for {} pilots",
            effective.len(),
            pilots.num_ms()
        )));
    }
    let n = effective.first().map_or(0, |s| s.nrows());
    let mut y = CMat::zeros(n, pilots.tau);
    for ((s, phi), &pw) in effective.iter().zip(&pilots.phi).zip(&pilots.power) {
        if s.ncols() != phi.nrows() || s.nrows() != n {
            return Err(Error::Dimension("effective channel / pilot shape mismatch".into()));
        }
        y += s * phi * Complex64::from(pw.sqrt());
    }
    if noise_var > 0.0 {
        for z in y.iter_mut() {
            *z += complex_gaussian(rng, noise_var);
        }
    }
    Ok(y)
}

/// LMMSE estimates `S^_{k,m}` of all MSs from one AP's training signal,
/// under a unit prior `E[s s^H] = I`.
///
/// The `(N tau)`-square system of the vectorized model collapses to a
/// `KP`-square one: with `Psi` the stacked pilots, `S^ = Y G^T` where
/// `G = (Psi^H Psi + sigma^2 I)^{-1} Psi^H`.
pub fn lmmse_estimate(y: &CMat, pilots: &PilotBook, noise_var: f64) -> Result<Vec<CMat>> {
    if y.ncols() != pilots.tau {
        return Err(Error::Dimension(format!(
            "training signal has {} columns, pilots have length {}",
            y.ncols(),
            pilots.tau
        )));
    }
    let p = pilots.streams();
    let psi = pilots.stacked();
    let kp = psi.ncols();
    let mut gram = psi.adjoint() * &psi;
    for i in 0..kp {
        gram[(i, i)] += Complex64::from(noise_var);
    }
    let g = if noise_var > 0.0 {
        gram.cholesky()
            .ok_or_else(|| Error::NonFinite("training system matrix".into()))?
            .solve(&psi.adjoint())
    } else {
        let scale = crate::linalg::trace(&gram).re / kp.max(1) as f64;
        let chol = gram.cholesky().ok_or(Error::NoiselessRankDeficient)?;
        let l = chol.l_dirty();
        let min = (0..kp).map(|i| l[(i, i)].re).fold(f64::INFINITY, f64::min);
        if !(min * min > 1e-12 * scale) {
            return Err(Error::NoiselessRankDeficient);
        }
        chol.solve(&psi.adjoint())
    };
    let s_all = y * g.transpose();
    Ok((0..pilots.num_ms())
        .map(|k| s_all.columns(k * p, p).into_owned())
        .collect())
}

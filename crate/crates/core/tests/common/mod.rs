#![allow(dead_code)]

use cfmmw::beamforming::{self, PrecoderSet};
use cfmmw::config::{BeamformingKind, CsiKind, Drops, NetworkMode};
use cfmmw::linalg::CMat;
use cfmmw::rates::{self, associate, Association, AssociationMode, GainTensor};
use cfmmw::rng::{self, complex_gaussian, SimRng};
use cfmmw::SystemConfig;
use num_complex::Complex64;

pub fn gaussian_matrix(rng: &mut SimRng, rows: usize, cols: usize, var: f64) -> CMat {
    CMat::from_fn(rows, cols, |_, _| complex_gaussian(rng, var))
}

/// `effective[m * K + k]`, i.i.d. CN(0, 1) entries, `n_ap x p`.
pub fn random_effective(rng: &mut SimRng, m: usize, k: usize, n_ap: usize, p: usize) -> Vec<CMat> {
    (0..m * k).map(|_| gaussian_matrix(rng, n_ap, p, 1.0)).collect()
}

fn norms(effective: &[CMat]) -> Vec<f64> {
    effective.iter().map(|h| h.norm()).collect()
}

/// Gain tensor with unstructured random blocks, so every pair interferes.
pub fn random_tensor(seed: u64, m: usize, k: usize, p: usize, mode: AssociationMode, noise: f64) -> GainTensor {
    let mut r = rng::stream(seed, &[77]);
    let norms: Vec<f64> = (0..m * k).map(|_| rand::Rng::random::<f64>(&mut r)).collect();
    let assoc = associate(&norms, m, k, mode).unwrap();
    GainTensor::from_fn(assoc, p, 1.0, noise, noise, |_, _, _| gaussian_matrix(&mut r, p, p, 1.0)).unwrap()
}

pub struct ZfInstance {
    pub effective: Vec<CMat>,
    pub association: Association,
    pub precoders: PrecoderSet,
    pub tensor: GainTensor,
}

/// Random channels with per-AP zero-forcing precoders.
pub fn zf_instance(seed: u64, m: usize, k: usize, n_ap: usize, p: usize, mode: AssociationMode, noise: f64) -> ZfInstance {
    let mut r = rng::stream(seed, &[78]);
    let effective = random_effective(&mut r, m, k, n_ap, p);
    let association = associate(&norms(&effective), m, k, mode).unwrap();
    let precoders = beamforming::zf_precoders(&effective, &association).unwrap();
    let mut tensor = rates::gain_tensor(&effective, &precoders, &association, p, 1.0, noise).unwrap();
    tensor.zf_perfect_fd = precoders.exact_zf;
    ZfInstance {
        effective,
        association,
        precoders,
        tensor,
    }
}

/// A few APs and MSs on a 60 m square with a sparse scatterer field.
pub fn small_system() -> SystemConfig {
    let mut c = SystemConfig::default();
    c.drops = Drops::Count(3);
    c.workers = 1;
    c.geometry.area_m = 60.0;
    c.geometry.num_aps = 4;
    c.geometry.num_ms = 3;
    c.geometry.cluster_density = 0.05;
    c.antennas.n_ap = 8;
    c.antennas.n_ms = 4;
    c.csi.pilot_len = 8;
    c.beamforming.rf_chains = 3;
    c
}

pub fn perfect_digital(mut c: SystemConfig) -> SystemConfig {
    c.csi.kind = CsiKind::Perfect;
    c.beamforming.kind = BeamformingKind::Digital;
    c
}

pub fn cell_free(mut c: SystemConfig) -> SystemConfig {
    c.network.mode = NetworkMode::Cf;
    c
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

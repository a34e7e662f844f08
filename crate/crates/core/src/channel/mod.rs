//! Clustered mmWave channel model with a shared scatterer field.
//!
//! A drop places APs, MSs and scattering clusters uniformly in a square.
//! The NLOS part of each link sums rays from the clusters inside the
//! link's ellipse; a LOS ray is added with the UMi LOS probability.

mod array;
mod geometry;
mod pathloss;

pub use array::array_response;
pub use geometry::{select_active_clusters, EllipseGate, Point2, ScattererField};
pub use pathloss::{
    los_probability, path_loss_db, reference_loss_db, PathLossParams, ScenarioTag, UmiScenario,
    SPEED_OF_LIGHT,
};

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{LosMode, SystemConfig};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::rng::{self, complex_gaussian, standard_normal, tag, SimRng};

/// Per-link parameters shared by every link of a drop.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    pub n_ap: usize,
    pub n_ms: usize,
    pub wavelength: f64,
    pub scenario: UmiScenario,
    pub ellipse_ratio: f64,
    pub ray_spread_rad: f64,
    pub shadowing: bool,
    pub los: LosMode,
}

impl ChannelParams {
    pub fn from_config(cfg: &SystemConfig) -> Self {
        ChannelParams {
            n_ap: cfg.antennas.n_ap,
            n_ms: cfg.antennas.n_ms,
            wavelength: cfg.radio.wavelength(),
            scenario: cfg.geometry.scenario,
            ellipse_ratio: cfg.geometry.ellipse_ratio,
            ray_spread_rad: cfg.geometry.ray_spread_deg.to_radians(),
            shadowing: cfg.geometry.shadowing,
            los: cfg.geometry.los,
        }
    }
}

/// One end of a link: position and array orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Device {
    pub position: Point2,
    pub orientation: f64,
}

/// Link descriptor returned alongside each channel matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkInfo {
    pub distance: f64,
    pub los: bool,
    pub active_clusters: usize,
    /// No active cluster and no LOS ray: the channel is identically zero.
    pub outage: bool,
}

#[derive(Debug, Clone)]
pub struct ChannelDraw {
    /// `N_AP x N_MS` channel from MS to AP.
    pub h: CMat,
    pub info: LinkInfo,
}

/// A complete drop: node placement, scatterers and all `M x K` channels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioRealization {
    pub seed: u64,
    pub aps: Vec<Device>,
    pub mss: Vec<Device>,
    pub field: ScattererField,
    /// Channel of the link (AP `m`, MS `k`) at index `m * K + k`.
    pub channels: Vec<CMat>,
    pub links: Vec<LinkInfo>,
}

impl ScenarioRealization {
    pub fn num_aps(&self) -> usize {
        self.aps.len()
    }

    pub fn num_ms(&self) -> usize {
        self.mss.len()
    }

    pub fn channel(&self, m: usize, k: usize) -> &CMat {
        &self.channels[m * self.mss.len() + k]
    }

    pub fn link(&self, m: usize, k: usize) -> &LinkInfo {
        &self.links[m * self.mss.len() + k]
    }

    pub fn outages(&self) -> usize {
        self.links.iter().filter(|l| l.outage).count()
    }
}

fn uniform_point(rng: &mut SimRng, side: f64) -> Point2 {
    Point2::new(rng.random::<f64>() * side, rng.random::<f64>() * side)
}

fn uniform_angle(rng: &mut SimRng) -> f64 {
    rng.random::<f64>() * std::f64::consts::TAU
}

/// Draws one drop. All randomness comes from streams keyed by `seed`, so
/// the result does not depend on thread count or evaluation order.
pub fn generate_scenario(cfg: &SystemConfig, seed: u64) -> Result<ScenarioRealization> {
    let g = &cfg.geometry;
    let n_clusters = (g.cluster_density * g.area_m * g.area_m).round() as usize;
    if n_clusters == 0 {
        return Err(Error::EmptyScattererField);
    }
    let device = |kind_pos: u64, kind_orient: u64, i: usize| {
        let position = uniform_point(&mut rng::stream(seed, &[kind_pos, i as u64]), g.area_m);
        let orientation = uniform_angle(&mut rng::stream(seed, &[kind_orient, i as u64]));
        Device {
            position,
            orientation,
        }
    };
    let aps: Vec<Device> = (0..g.num_aps)
        .map(|m| device(tag::AP_POSITION, tag::AP_ORIENTATION, m))
        .collect();
    let mss: Vec<Device> = (0..g.num_ms)
        .map(|k| device(tag::MS_POSITION, tag::MS_ORIENTATION, k))
        .collect();
    let mut crng = rng::stream(seed, &[tag::CLUSTERS]);
    let field = ScattererField {
        cluster_positions: (0..n_clusters).map(|_| uniform_point(&mut crng, g.area_m)).collect(),
        rays_per_cluster: g.rays_per_cluster,
    };
    let params = ChannelParams::from_config(cfg);
    let k_count = mss.len();
    let draws: Vec<ChannelDraw> = (0..aps.len() * k_count)
        .into_par_iter()
        .map(|idx| {
            let (m, k) = (idx / k_count, idx % k_count);
            let mut rng = rng::stream(seed, &[tag::LINK, m as u64, k as u64]);
            generate_channel(&aps[m], &mss[k], &field, &params, &mut rng)
        })
        .collect::<Result<_>>()?;
    let (channels, links) = draws.into_iter().map(|d| (d.h, d.info)).unzip();
    Ok(ScenarioRealization {
        seed,
        aps,
        mss,
        field,
        channels,
        links,
    })
}

/// Draws the channel of one AP-MS link.
pub fn generate_channel(
    ap: &Device,
    ms: &Device,
    field: &ScattererField,
    params: &ChannelParams,
    rng: &mut SimRng,
) -> Result<ChannelDraw> {
    let (na, nm) = (params.n_ap, params.n_ms);
    let d = ap.position.distance(ms.position);
    let active = select_active_clusters(ap.position, ms.position, field, params.ellipse_ratio)?;
    let u: f64 = rng.random();
    let los = match params.los {
        LosMode::Random => u < los_probability(d)?,
        LosMode::Never => false,
        LosMode::Always => true,
    };
    let pl = params.scenario.params(los);
    let info = LinkInfo {
        distance: d,
        los,
        active_clusters: active.len(),
        outage: active.is_empty() && !los,
    };

    // Column-major accumulator for H, real and imaginary parts apart.
    let mut acc = SplitAccumulator::new(na, nm);
    let mut a_ap = vec![Complex64::new(0.0, 0.0); na];
    let mut a_ms = vec![Complex64::new(0.0, 0.0); nm];
    let shadow = |rng: &mut SimRng| {
        let z = standard_normal(rng);
        if params.shadowing {
            pl.shadow_sigma * z
        } else {
            0.0
        }
    };
    let db_to_amp = std::f64::consts::LN_10 / 20.0;

    if !active.is_empty() {
        let n_rays = active.len() * field.rays_per_cluster;
        let gamma = ((na * nm) as f64 / n_rays as f64).sqrt();
        for &c in &active {
            let cp = field.cluster_positions[c];
            let aod = ap.position.bearing_to(cp) - ap.orientation;
            let aoa = ms.position.bearing_to(cp) - ms.orientation;
            let r = ap.position.distance(cp) + cp.distance(ms.position);
            // Shadowing is per ray; the distance term is shared by the cluster.
            let base = gamma * (path_loss_db(r, &pl, 0.0, params.wavelength)? * db_to_amp).exp();
            for _ in 0..field.rays_per_cluster {
                let t_ap = aod + params.ray_spread_rad * standard_normal(rng);
                let t_ms = aoa + params.ray_spread_rad * standard_normal(rng);
                let x = shadow(rng);
                let alpha = complex_gaussian(rng, 1.0);
                array::fill_response(t_ap, &mut a_ap);
                array::fill_response(t_ms, &mut a_ms);
                acc.add(&a_ap, &a_ms, alpha * (base * (-x * db_to_amp).exp()));
            }
        }
    }

    if los {
        let eta = uniform_angle(rng);
        let x = shadow(rng);
        let amp = 10f64.powf(path_loss_db(d, &pl, x, params.wavelength)? / 20.0);
        let t_ap = ap.position.bearing_to(ms.position) - ap.orientation;
        let t_ms = ms.position.bearing_to(ap.position) - ms.orientation;
        array::fill_response(t_ap, &mut a_ap);
        array::fill_response(t_ms, &mut a_ms);
        let w = Complex64::from_polar(((na * nm) as f64).sqrt() * amp, eta);
        acc.add(&a_ap, &a_ms, w);
    }
    let h = acc.finish();

    Ok(ChannelDraw {
        h,
        info,
    })
}

/// Sum of weighted outer products `w u v^H`, kept as separate real and
/// imaginary column-major planes so the inner loop vectorizes.
struct SplitAccumulator {
    rows: usize,
    re: Vec<f64>,
    im: Vec<f64>,
    u_re: Vec<f64>,
    u_im: Vec<f64>,
}

impl SplitAccumulator {
    fn new(rows: usize, cols: usize) -> Self {
        SplitAccumulator {
            rows,
            re: vec![0.0; rows * cols],
            im: vec![0.0; rows * cols],
            u_re: vec![0.0; rows],
            u_im: vec![0.0; rows],
        }
    }

    #[inline]
    fn add(&mut self, u: &[Complex64], v: &[Complex64], w: Complex64) {
        for (i, z) in u.iter().enumerate() {
            self.u_re[i] = z.re;
            self.u_im[i] = z.im;
        }
        #[cfg(target_arch = "x86_64")]
        if std::arch::is_x86_feature_detected!("avx2") && std::arch::is_x86_feature_detected!("fma") {
            // SAFETY: the required CPU features were detected above.
            unsafe { accumulate_fma(&mut self.re, &mut self.im, &self.u_re, &self.u_im, v, w) };
            return;
        }
        accumulate(&mut self.re, &mut self.im, &self.u_re, &self.u_im, v, w);
    }

    fn finish(self) -> CMat {
        let cols = self.re.len() / self.rows.max(1);
        let data = self.re.iter().zip(&self.im).map(|(&r, &i)| Complex64::new(r, i)).collect();
        CMat::from_vec(self.rows, cols, data)
    }
}

#[inline(always)]
fn accumulate(re: &mut [f64], im: &mut [f64], ur: &[f64], ui: &[f64], v: &[Complex64], w: Complex64) {
    let n = ur.len();
    let ui = &ui[..n];
    for (j, vj) in v.iter().enumerate() {
        let s = w * vj.conj();
        let cr = &mut re[j * n..(j + 1) * n];
        let ci = &mut im[j * n..(j + 1) * n];
        for i in 0..n {
            cr[i] += ur[i] * s.re - ui[i] * s.im;
            ci[i] += ur[i] * s.im + ui[i] * s.re;
        }
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn accumulate_fma(re: &mut [f64], im: &mut [f64], ur: &[f64], ui: &[f64], v: &[Complex64], w: Complex64) {
    accumulate(re, im, ur, ui, v, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> SystemConfig {
        let mut cfg = SystemConfig::default();
        cfg.geometry.num_aps = 4;
        cfg.geometry.num_ms = 3;
        cfg.geometry.area_m = 60.0;
        cfg.antennas.n_ap = 8;
        cfg.antennas.n_ms = 4;
        cfg
    }

    #[test]
    fn reproducible_per_seed() {
        let cfg = small_config();
        let a = generate_scenario(&cfg, 11).unwrap();
        let b = generate_scenario(&cfg, 11).unwrap();
        let c = generate_scenario(&cfg, 12).unwrap();
        assert_eq!(a.channels, b.channels);
        assert_ne!(a.channels, c.channels);
        assert_eq!(a.field.cluster_positions.len(), (0.4f64 * 3600.0).round() as usize);
    }

    #[test]
    fn empty_field_is_an_error() {
        let mut cfg = small_config();
        cfg.geometry.cluster_density = 0.0;
        assert!(matches!(generate_scenario(&cfg, 1), Err(Error::EmptyScattererField)));
    }

    #[test]
    fn outage_gives_zero_channel() {
        let field = ScattererField {
            cluster_positions: vec![Point2::new(1000.0, 1000.0)],
            rays_per_cluster: 3,
        };
        let mut params = ChannelParams::from_config(&small_config());
        params.los = LosMode::Never;
        let ap = Device { position: Point2::new(0.0, 0.0), orientation: 0.0 };
        let ms = Device { position: Point2::new(10.0, 0.0), orientation: 0.0 };
        let draw = generate_channel(&ap, &ms, &field, &params, &mut rng::stream(1, &[])).unwrap();
        assert!(draw.info.outage);
        assert!(draw.h.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
    }
}

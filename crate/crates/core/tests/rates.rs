mod common;

use cfmmw::beamforming::zf_precoders;
use cfmmw::linalg::CMat;
use cfmmw::rates::{
    self, associate, downlink_consumption, gee, gee_uplink, Association, AssociationMode, CircuitModel, GainTensor,
    PowerAllocation,
};
use cfmmw::rng;
use num_complex::Complex64;
use rand::Rng;

fn random_feasible(seed: u64, assoc: &Association, p_max: f64) -> PowerAllocation {
    let mut r = rng::stream(seed, &[5]);
    let mut eta = PowerAllocation::zeros(assoc.num_aps(), assoc.num_ms());
    for (m, served) in assoc.served_by_ap.iter().enumerate() {
        let w: Vec<f64> = served.iter().map(|_| r.random::<f64>()).collect();
        let total: f64 = w.iter().sum::<f64>() + r.random::<f64>();
        for (&k, wi) in served.iter().zip(&w) {
            eta.set(m, k, p_max * wi / total);
        }
    }
    eta
}

#[test]
fn zero_power_gives_zero_rates() {
    let t = common::random_tensor(1, 3, 2, 2, AssociationMode::CellFree, 0.5);
    let eta = PowerAllocation::zeros(3, 2);
    assert!(rates::downlink_rates(&t, &eta).unwrap().iter().all(|&r| r == 0.0));
    assert!(rates::uplink_rates(&t, &[0.0, 0.0]).unwrap().iter().all(|&r| r == 0.0));
}

#[test]
fn single_link_scalar_rate() {
    let b = Complex64::new(0.7, -1.3);
    let (noise, eta_v, band) = (0.2, 0.45, 2e8);
    let t = GainTensor::from_fn(Association::cell_free(1, 1), 1, band, noise, noise, |_, _, _| {
        CMat::from_element(1, 1, b)
    })
    .unwrap();
    let mut eta = PowerAllocation::zeros(1, 1);
    eta.set(0, 0, eta_v);
    let want = band * (1.0 + eta_v * b.norm_sqr() / noise).log2();
    assert!(common::rel(rates::downlink_rate(&t, &eta, 0).unwrap(), want) < 1e-12);
    assert!(common::rel(rates::downlink_rate_direct(&t, &eta, 0).unwrap(), want) < 1e-12);
}

#[test]
fn difference_form_matches_direct_form() {
    for trial in 0..100u64 {
        let (m, k, p) = (2 + trial as usize % 3, 2 + trial as usize % 4, 1 + trial as usize % 3);
        let mode = if trial % 2 == 0 {
            AssociationMode::CellFree
        } else {
            AssociationMode::UserCentric(1 + trial as usize % k)
        };
        let t = common::random_tensor(trial, m, k, p, mode, 0.3);
        let eta = random_feasible(trial, &t.association, 1.0);
        for kk in 0..k {
            let a = rates::downlink_rate(&t, &eta, kk).unwrap();
            let b = rates::downlink_rate_direct(&t, &eta, kk).unwrap();
            assert!((a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-300), "trial {trial}: {a} vs {b}");
        }
    }
}

#[test]
fn single_user_uplink_two_ap_hand_evaluation() {
    let (noise, eta) = (0.4, 0.3);
    let blocks = [
        CMat::from_row_slice(2, 2, &[common::c(1.0, 0.5), common::c(0.0, -0.2), common::c(0.3, 0.0), common::c(-0.7, 0.1)]),
        CMat::from_row_slice(2, 2, &[common::c(0.2, 0.0), common::c(0.4, 0.4), common::c(-0.1, 0.9), common::c(0.5, -0.3)]),
    ];
    let t = GainTensor::from_fn(Association::cell_free(2, 1), 2, 1.0, noise, noise, |_, _, m| blocks[m].clone()).unwrap();
    let g = &blocks[0] + &blocks[1];
    let s = eta / (noise * 2.0);
    // det(I + s G^H G) for a 2x2 Hermitian matrix.
    let gg = g.adjoint() * &g;
    let (a, d, b) = (gg[(0, 0)].re, gg[(1, 1)].re, gg[(0, 1)]);
    let det = (1.0 + s * a) * (1.0 + s * d) - s * s * b.norm_sqr();
    let got = rates::uplink_rate(&t, &[eta], 0).unwrap();
    assert!(common::rel(got, det.log2()) < 1e-12, "{got} vs {}", det.log2());
}

#[test]
fn unserved_uplink_user_has_zero_rate() {
    let norms = [1.0, 0.5, 2.0, 0.1];
    let assoc = associate(&norms, 2, 2, AssociationMode::UserCentric(1)).unwrap();
    // Both APs pick MS 0, MS 1 is left unserved.
    assert!(assoc.serving_aps[1].is_empty());
    let t = GainTensor::from_fn(assoc, 1, 1.0, 1.0, 1.0, |_, _, _| CMat::from_element(1, 1, common::c(1.0, 0.0))).unwrap();
    assert_eq!(rates::uplink_rate(&t, &[0.1, 0.1], 1).unwrap(), 0.0);
    assert!(t.block(0, 1, 0).is_none());
}

#[test]
fn cell_free_uses_every_ap() {
    let assoc = associate(&[1.0; 12], 4, 3, AssociationMode::CellFree).unwrap();
    assert!(assoc.serving_aps.iter().all(|s| s == &vec![0, 1, 2, 3]));
    assert!(assoc.served_by_ap.iter().all(|s| s == &vec![0, 1, 2]));
}

#[test]
fn equal_channels_tie_toward_lower_index() {
    let mut r = rng::stream(3, &[]);
    let h = common::gaussian_matrix(&mut r, 4, 1, 1.0);
    let other = &h * Complex64::new(0.5, 0.0);
    // MS 1 and MS 2 see identical channels, MS 0 a weaker one.
    let eff = vec![other, h.clone(), h];
    let norms: Vec<f64> = eff.iter().map(|x| x.norm()).collect();
    let assoc = associate(&norms, 1, 3, AssociationMode::UserCentric(1)).unwrap();
    assert_eq!(assoc.served_by_ap[0], vec![1]);
}

#[test]
fn zero_channel_gives_zero_blocks() {
    let mut eff = common::random_effective(&mut rng::stream(4, &[]), 2, 2, 4, 1);
    eff[1].fill(Complex64::new(0.0, 0.0));
    let assoc = Association::cell_free(2, 2);
    let pre = zf_precoders(&eff, &assoc).unwrap();
    let t = rates::gain_tensor(&eff, &pre, &assoc, 1, 1.0, 1.0).unwrap();
    for l in 0..2 {
        assert_eq!(t.block(1, l, 0).unwrap()[0], Complex64::new(0.0, 0.0));
        assert_eq!(t.block(0, l, 0).unwrap().len(), 1);
    }
}

#[test]
fn circuit_models() {
    let idle = CircuitModel::Idle { p_c_w: 1.0 };
    assert_eq!(idle.power(0.0, 0.1), 0.5);
    assert_eq!(idle.power(1e-6, 0.1), 1.0);
    let sig = CircuitModel::Sigmoid { p_c_w: 1.0, theta_w: Some(1e-9) };
    assert!((sig.power(1e-3, 0.1) - 1.0).abs() < 1e-12);
    assert!((sig.power(0.0, 0.1) - 0.75).abs() < 1e-12);
    let mut eta = PowerAllocation::zeros(2, 2);
    assert_eq!(gee(&[0.0, 0.0], &eta, 1.0, &CircuitModel::Static { p_c_w: 1.0 }, 0.1), 0.0);
    eta.set(0, 1, 0.05);
    assert!((downlink_consumption(&eta, 1.0, &idle, 0.1) - (0.05 + 1.0 + 0.5)).abs() < 1e-15);
}

#[test]
fn sum_rate_reduction_of_gee() {
    let t = common::random_tensor(8, 4, 3, 1, AssociationMode::CellFree, 0.5);
    let eta = random_feasible(8, &t.association, 0.1);
    let r = rates::downlink_rates(&t, &eta).unwrap();
    let g = gee(&r, &eta, 0.0, &CircuitModel::Static { p_c_w: 1.0 }, 0.1);
    assert!(common::rel(g, r.iter().sum::<f64>() / 4.0) < 1e-15);
    let up = gee_uplink(&[3.0, 5.0], &[0.1, 0.2], 1.0, 0.3);
    assert!((up - 8.0 / 0.9).abs() < 1e-12);
}

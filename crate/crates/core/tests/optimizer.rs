mod common;

use cfmmw::optimizer::{
    dinkelbach, gee_max_downlink, gee_max_uplink, inner_maximize, project_capped_simplex, sumrate_max,
    uniform_allocation, Affine, DownlinkBlock, DownlinkProblem, FeasibleSet, InnerConfig, OptimizerConfig,
    SmoothObjective, SumRateMode, UplinkProblem,
};
use cfmmw::rates::{self, associate, AssociationMode, CircuitModel, GainTensor, PowerAllocation};
use cfmmw::rng;
use rand::Rng;

struct Quadratic {
    c: Vec<f64>,
}

impl SmoothObjective for Quadratic {
    fn value(&mut self, x: &[f64]) -> f64 {
        -x.iter().zip(&self.c).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
    }
    fn gradient(&mut self, x: &[f64], g: &mut [f64]) {
        for i in 0..x.len() {
            g[i] = -2.0 * (x[i] - self.c[i]);
        }
    }
}

struct Linear {
    a: Vec<f64>,
}

impl SmoothObjective for Linear {
    fn value(&mut self, x: &[f64]) -> f64 {
        x.iter().zip(&self.a).map(|(x, a)| x * a).sum()
    }
    fn gradient(&mut self, _x: &[f64], g: &mut [f64]) {
        g.copy_from_slice(&self.a);
    }
}

struct Log2OnePlus;

impl SmoothObjective for Log2OnePlus {
    fn value(&mut self, x: &[f64]) -> f64 {
        (1.0 + x[0]).log2()
    }
    fn gradient(&mut self, x: &[f64], g: &mut [f64]) {
        g[0] = 1.0 / ((1.0 + x[0]) * std::f64::consts::LN_2);
    }
}

/// Projection onto `{x >= 0, sum x <= b}` in three variables by enumerating
/// the KKT active sets.
fn kkt_projection(c: [f64; 3], b: f64) -> [f64; 3] {
    let clipped = c.map(|v| v.max(0.0));
    if clipped.iter().sum::<f64>() <= b {
        return clipped;
    }
    for mask in 1u32..8 {
        let set: Vec<usize> = (0..3).filter(|i| mask & (1 << i) != 0).collect();
        let nu = (set.iter().map(|&i| c[i]).sum::<f64>() - b) / set.len() as f64;
        let mut x = [0.0; 3];
        for &i in &set {
            x[i] = c[i] - nu;
        }
        let ok = nu >= 0.0
            && set.iter().all(|&i| x[i] > 0.0)
            && (0..3).filter(|i| !set.contains(i)).all(|i| c[i] - nu <= 0.0);
        if ok {
            return x;
        }
    }
    unreachable!("some active set satisfies the KKT conditions")
}

#[test]
fn interior_target_is_recovered() {
    let set = FeasibleSet::CappedSimplex { budget: 1.0 };
    let out = inner_maximize(&mut Quadratic { c: vec![0.2, 0.3, 0.1] }, &[0.0; 3], &set, &InnerConfig::default());
    for (a, b) in out.x.iter().zip([0.2, 0.3, 0.1]) {
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn exterior_target_is_projected() {
    let mut r = rng::stream(1, &[]);
    for _ in 0..50 {
        let c = [0.0; 3].map(|_: f64| r.random::<f64>() * 3.0 - 1.0);
        let want = kkt_projection(c, 1.0);
        let mut fast = c.to_vec();
        project_capped_simplex(&mut fast, 1.0);
        let set = FeasibleSet::CappedSimplex { budget: 1.0 };
        let tight = InnerConfig { tol: 1e-15, max_iter: 5000, ..InnerConfig::default() };
        let out = inner_maximize(&mut Quadratic { c: c.to_vec() }, &[0.0; 3], &set, &tight);
        for i in 0..3 {
            assert!((fast[i] - want[i]).abs() < 1e-12, "{c:?}");
            assert!((out.x[i] - want[i]).abs() < 1e-6, "{c:?}");
        }
    }
}

#[test]
fn linear_objective_ends_on_a_vertex() {
    let set = FeasibleSet::CappedSimplex { budget: 2.0 };
    let out = inner_maximize(&mut Linear { a: vec![0.3, 1.5, 0.9] }, &[0.1, 0.1, 0.1], &set, &InnerConfig::default());
    assert!((out.x[1] - 2.0).abs() < 1e-9 && out.x[0].abs() < 1e-9 && out.x[2].abs() < 1e-9);
}

#[test]
fn dinkelbach_scalar_toy_matches_grid() {
    let set = FeasibleSet::Box { upper: 10.0 };
    let den = Affine { constant: 1.0, coeffs: vec![1.0] };
    let out = dinkelbach(&mut Log2OnePlus, &den, &[5.0], &set, &InnerConfig::default(), 1e-10, 100);
    let f = |x: f64| (1.0 + x).log2() / (1.0 + x);
    let n = 10_000;
    let (best_x, best) = (0..=n)
        .map(|i| 10.0 * i as f64 / n as f64)
        .map(|x| (x, f(x)))
        .fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    assert!(out.ratio >= best - 1e-9);
    assert!((out.x[0] - best_x).abs() <= 2e-3, "{} vs {best_x}", out.x[0]);
    for w in out.lambdas.windows(2) {
        assert!(w[1] >= w[0]);
    }
}

#[test]
fn dinkelbach_linear_over_constant_picks_a_vertex() {
    let set = FeasibleSet::CappedSimplex { budget: 1.0 };
    let den = Affine { constant: 2.0, coeffs: vec![0.0; 3] };
    let out = dinkelbach(&mut Linear { a: vec![1.0, 4.0, 2.0] }, &den, &[0.2, 0.2, 0.2], &set, &InnerConfig::default(), 1e-12, 50);
    assert!((out.x[1] - 1.0).abs() < 1e-9);
    assert!((out.ratio - 2.0).abs() < 1e-9);
}

#[test]
fn sqrt_product_hessian_is_negative_semidefinite() {
    let mut r = rng::stream(2, &[]);
    for _ in 0..100 {
        let (x, y) = (r.random::<f64>() * 5.0 + 1e-3, r.random::<f64>() * 5.0 + 1e-3);
        let f = |a: f64, b: f64| (a * b).sqrt();
        let h = 1e-4 * x.min(y);
        let fxx = (f(x + h, y) - 2.0 * f(x, y) + f(x - h, y)) / (h * h);
        let fyy = (f(x, y + h) - 2.0 * f(x, y) + f(x, y - h)) / (h * h);
        let fxy = (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4.0 * h * h);
        let tr = fxx + fyy;
        let det = fxx * fyy - fxy * fxy;
        let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
        let lmax = tr / 2.0 + disc;
        assert!(lmax <= 1e-5 * tr.abs().max(1.0), "lambda_max {lmax} at ({x}, {y})");
    }
}

fn interior_point(r: &mut impl Rng, n: usize, budget: f64) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| 0.05 + r.random::<f64>()).collect();
    let s: f64 = w.iter().sum::<f64>() * (1.0 + r.random::<f64>());
    w.iter().map(|v| budget * v / s).collect()
}

#[test]
fn lower_bound_properties() {
    let mut r = rng::stream(3, &[]);
    for trial in 0..30u64 {
        let (m, k, p) = (3, 3, 1 + trial as usize % 2);
        let t = common::random_tensor(trial, m, k, p, AssociationMode::CellFree, 0.5);
        let mut eta = PowerAllocation::zeros(m, k);
        for mm in 0..m {
            for (kk, v) in interior_point(&mut r, k, 1.0).into_iter().enumerate() {
                eta.set(mm, kk, v);
            }
        }
        let ap = trial as usize % m;
        let block = DownlinkBlock::new(&t, &eta, ap, 1e-12);
        let x0: Vec<f64> = (0..k).map(|kk| eta.get(ap, kk)).collect();
        let lb = block.lower_bound(&x0);
        for u in 0..k {
            // The block reproduces the full rate computation.
            let exact = rates::downlink_rate(&t, &eta, u).unwrap();
            assert!(common::rel(block.rate(u, &x0), exact) < 1e-9);
            assert!(common::rel(lb.user_value(u, &x0), exact) < 1e-9);
            let mut g = vec![0.0; k];
            lb.user_gradient(u, &x0, &mut g);
            for i in 0..k {
                let h = 1e-6 * x0[i].max(1e-3);
                let mut xp = x0.clone();
                let mut xm = x0.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd = (block.rate(u, &xp) - block.rate(u, &xm)) / (2.0 * h);
                assert!((g[i] - fd).abs() <= 1e-4_f64.max(1e-3 * fd.abs()), "trial {trial} u {u} i {i}: {} vs {fd}", g[i]);
            }
            for _ in 0..100 {
                let x: Vec<f64> = {
                    let mut v: Vec<f64> = (0..k).map(|_| r.random::<f64>()).collect();
                    project_capped_simplex(&mut v, 1.0);
                    v
                };
                assert!(lb.user_value(u, &x) <= block.rate(u, &x) + 1e-9 * block.rate(u, &x).abs().max(1.0));
            }
        }
    }
}

fn problem(p_max: f64) -> DownlinkProblem {
    DownlinkProblem {
        p_max,
        delta: 1.0,
        circuit: CircuitModel::Idle { p_c_w: 1.0 },
    }
}

#[test]
fn downlink_gee_improves_on_uniform_monotonically() {
    let cfg = OptimizerConfig::default();
    for seed in 0..10u64 {
        let inst = common::zf_instance(seed, 3, 2, 4, 1, AssociationMode::CellFree, 1e-3);
        let pr = problem(0.1);
        let out = gee_max_downlink(&inst.tensor, &pr, &cfg, &[]).unwrap();
        let uni = uniform_allocation(&inst.association, 0.1);
        let g_uni = rates::gee(&rates::downlink_rates(&inst.tensor, &uni).unwrap(), &uni, 1.0, &pr.circuit, 0.1);
        assert!(out.gee >= g_uni * (1.0 - 1e-12));
        assert!((out.trace[0] - g_uni).abs() <= 1e-12 * g_uni);
        for w in out.trace.windows(2) {
            assert!(w[1] >= w[0]);
        }
        for m in 0..3 {
            assert!(out.allocation.ap_total(m) <= 0.1 * (1.0 + 1e-12));
        }
        // Restarting at the optimum gains nothing beyond the tolerance.
        let again = gee_max_downlink(&inst.tensor, &pr, &cfg, &[out.allocation.clone()]).unwrap();
        assert!(again.gee <= out.gee * (1.0 + 1e-4));
    }
}

#[test]
fn every_circuit_model_keeps_the_trace_monotone() {
    let cfg = OptimizerConfig::default();
    let models = [
        CircuitModel::Static { p_c_w: 1.0 },
        CircuitModel::Idle { p_c_w: 1.0 },
        CircuitModel::Sigmoid { p_c_w: 1.0, theta_w: None },
    ];
    for (i, circuit) in models.into_iter().enumerate() {
        let t = common::random_tensor(40 + i as u64, 3, 3, 2, AssociationMode::UserCentric(2), 0.05);
        let pr = DownlinkProblem { p_max: 1.0, delta: 1.0, circuit };
        let out = gee_max_downlink(&t, &pr, &cfg, &[]).unwrap();
        for w in out.trace.windows(2) {
            assert!(w[1] >= w[0], "{circuit:?}");
        }
    }
}

#[test]
fn uplink_single_user_matches_line_search() {
    let cfg = OptimizerConfig::default();
    for seed in 0..5u64 {
        let t = common::random_tensor(seed, 2, 1, 2, AssociationMode::CellFree, 0.01);
        let pr = UplinkProblem { p_t_max: 0.1, n_ms: 4, delta: 1.0, p_c_ms: 0.01 };
        let out = gee_max_uplink(&t, &pr, &cfg).unwrap();
        assert!(out.powers[0] <= pr.upper() * (1.0 + 1e-12));
        let f = |e: f64| rates::uplink_rate(&t, &[e], 0).unwrap() / (e + 0.01);
        let n = 10_000;
        let best = (0..=n).map(|i| f(pr.upper() * i as f64 / n as f64)).fold(f64::NEG_INFINITY, f64::max);
        assert!(out.gee >= best * (1.0 - 1e-4), "{} vs {best}", out.gee);
        for w in out.trace.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }
}

#[test]
fn uplink_powers_respect_the_per_ms_limit() {
    let t = common::random_tensor(9, 4, 3, 1, AssociationMode::UserCentric(2), 1e-4);
    let pr = UplinkProblem { p_t_max: 0.1, n_ms: 8, delta: 1.0, p_c_ms: 0.3 };
    let out = gee_max_uplink(&t, &pr, &OptimizerConfig::default()).unwrap();
    assert!(out.powers.iter().all(|&e| (0.0..=0.1 / 8.0 * (1.0 + 1e-12)).contains(&e)));
}

fn sum_rate(t: &GainTensor, eta: &PowerAllocation) -> f64 {
    rates::downlink_rates(t, eta).unwrap().iter().sum()
}

#[test]
fn one_user_per_ap_sum_rate_is_uniform() {
    let cfg = OptimizerConfig::default();
    let inst = common::zf_instance(12, 6, 3, 4, 1, AssociationMode::UserCentric(1), 1e-2);
    let uni = uniform_allocation(&inst.association, 0.1);
    let zf = sumrate_max(&inst.tensor, 0.1, SumRateMode::ZfPerfectCsi, &cfg).unwrap();
    assert!(common::rel(sum_rate(&inst.tensor, &zf.allocation), sum_rate(&inst.tensor, &uni)) < 1e-6);
    // With single-user precoders the leakage to other users is not nulled,
    // so the general solver may back some APs off.
    let general = sumrate_max(&inst.tensor, 0.1, SumRateMode::General, &cfg).unwrap();
    assert!(sum_rate(&inst.tensor, &general.allocation) >= sum_rate(&inst.tensor, &uni) * (1.0 - 1e-9));
}

#[test]
fn single_user_sum_rate_uses_full_budgets() {
    let inst = common::zf_instance(13, 4, 1, 4, 1, AssociationMode::CellFree, 1e-2);
    let out = sumrate_max(&inst.tensor, 0.1, SumRateMode::ZfPerfectCsi, &OptimizerConfig::default()).unwrap();
    for m in 0..4 {
        assert!((out.allocation.get(m, 0) - 0.1).abs() < 1e-6);
    }
}

#[test]
fn sum_rate_modes_agree_with_perfect_zf() {
    let cfg = OptimizerConfig::default();
    for seed in 0..5u64 {
        let inst = common::zf_instance(20 + seed, 3, 3, 6, 1, AssociationMode::CellFree, 1e-2);
        let a = sumrate_max(&inst.tensor, 0.1, SumRateMode::ZfPerfectCsi, &cfg).unwrap();
        let b = sumrate_max(&inst.tensor, 0.1, SumRateMode::General, &cfg).unwrap();
        let (ra, rb) = (sum_rate(&inst.tensor, &a.allocation), sum_rate(&inst.tensor, &b.allocation));
        assert!(common::rel(ra, rb) < 0.01, "{ra} vs {rb}");
    }
}

#[test]
fn uniform_allocation_shares() {
    let cf = associate(&[1.0; 12], 2, 6, AssociationMode::CellFree).unwrap();
    let eta = uniform_allocation(&cf, 1.0);
    assert!(eta.eta.iter().all(|&v| (v - 1.0 / 6.0).abs() < 1e-15));
    let norms: Vec<f64> = (0..12).map(|i| i as f64).collect();
    let uc = associate(&norms, 2, 6, AssociationMode::UserCentric(3)).unwrap();
    let eta = uniform_allocation(&uc, 1.0);
    for m in 0..2 {
        assert_eq!(eta.ap_total(m), 1.0);
        for &k in &uc.served_by_ap[m] {
            assert!((eta.get(m, k) - 1.0 / 3.0).abs() < 1e-15);
        }
    }
}

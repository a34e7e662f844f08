//! Per-AP view of the downlink rates and their concave lower bound.
//!
//! With the powers of every other AP frozen, the interference-plus-signal
//! covariance seen by MS `k` is, in the variables `x_i = eta_{m, K(m)_i}`,
//!
//! `X(x) = base + sum_i [x_i D_i + sqrt(x_i) E_i]`,
//!
//! with `D_i = b b^H`, `E_i = b c^H + c b^H`, `b` the AP's own gain block and
//! `c` the coherent contribution of the other serving APs. The rate is
//! `B (log2|X1| - log2|X2|)`, where `X2` drops the MS's own signal.

use num_complex::Complex64;

use super::inner::SmoothObjective;
use crate::linalg::small;
use crate::rates::{GainTensor, PowerAllocation};

const LN2: f64 = std::f64::consts::LN_2;

/// `acc += a b^H` for row-major `p x p` blocks.
fn add_mul_adj(acc: &mut [Complex64], a: &[Complex64], b: &[Complex64], p: usize) {
    for i in 0..p {
        for j in 0..p {
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..p {
                s += a[i * p + k] * b[j * p + k].conj();
            }
            acc[i * p + j] += s;
        }
    }
}

struct UserTerms {
    base1: Vec<Complex64>,
    base2: Vec<Complex64>,
    d: Vec<Vec<Complex64>>,
    e: Vec<Vec<Complex64>>,
    /// Position of the MS itself among the served MSs, if served here.
    own: Option<usize>,
}

/// Rates of all MSs as functions of one AP's powers.
pub struct DownlinkBlock {
    p: usize,
    bandwidth: f64,
    floor: f64,
    served: Vec<usize>,
    users: Vec<UserTerms>,
}

impl DownlinkBlock {
    /// Freezes every AP but `m` at `eta`. `floor` bounds `x` away from zero
    /// inside the `1/sqrt(x)` derivative terms.
    pub fn new(t: &GainTensor, eta: &PowerAllocation, m: usize, floor: f64) -> Self {
        let p = t.streams;
        let pp = p * p;
        let served = t.association.served_by_ap[m].clone();
        let k_count = t.num_ms;
        let mut noise = vec![Complex64::new(0.0, 0.0); pp];
        for i in 0..p {
            noise[i * p + i] = Complex64::new(t.downlink_noise, 0.0);
        }
        let users = (0..k_count)
            .map(|k| {
                let mut base1 = noise.clone();
                let mut base2 = noise.clone();
                let mut d = vec![vec![Complex64::new(0.0, 0.0); pp]; served.len()];
                let mut e = d.clone();
                let mut c = vec![Complex64::new(0.0, 0.0); pp];
                for l in 0..k_count {
                    c.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
                    for &mm in &t.association.serving_aps[l] {
                        let w = eta.get(mm, l);
                        if mm != m && w > 0.0 {
                            small::axpy(&mut c, w.sqrt(), t.block(k, l, mm).expect("served"));
                        }
                    }
                    add_mul_adj(&mut base1, &c, &c, p);
                    if l != k {
                        add_mul_adj(&mut base2, &c, &c, p);
                    }
                    if let Ok(i) = served.binary_search(&l) {
                        let b = t.block(k, l, m).expect("served");
                        add_mul_adj(&mut d[i], b, b, p);
                        add_mul_adj(&mut e[i], b, &c, p);
                        add_mul_adj(&mut e[i], &c, b, p);
                    }
                }
                UserTerms {
                    base1,
                    base2,
                    d,
                    e,
                    own: served.binary_search(&k).ok(),
                }
            })
            .collect();
        DownlinkBlock {
            p,
            bandwidth: t.bandwidth_hz,
            floor,
            served,
            users,
        }
    }

    /// MSs served by this AP; variable `i` is the power toward `served()[i]`.
    pub fn served(&self) -> &[usize] {
        &self.served
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    fn covariance(&self, u: usize, x: &[f64], second: bool, out: &mut Vec<Complex64>) {
        let ut = &self.users[u];
        out.clear();
        out.extend_from_slice(if second { &ut.base2 } else { &ut.base1 });
        for (i, &xi) in x.iter().enumerate() {
            if second && ut.own == Some(i) {
                continue;
            }
            if xi > 0.0 {
                small::axpy(out, xi, &ut.d[i]);
                small::axpy(out, xi.sqrt(), &ut.e[i]);
            }
        }
    }

    fn logdet_bits(&self, u: usize, x: &[f64], second: bool) -> f64 {
        let mut buf = Vec::with_capacity(self.p * self.p);
        self.covariance(u, x, second, &mut buf);
        small::logdet_in_place(&mut buf, self.p).map_or(f64::NAN, |v| v / LN2)
    }

    /// `g1 = log2|X1(x)|` of MS `u`.
    pub fn g1(&self, u: usize, x: &[f64]) -> f64 {
        self.logdet_bits(u, x, false)
    }

    /// `g2 = log2|X2(x)|` of MS `u`.
    pub fn g2(&self, u: usize, x: &[f64]) -> f64 {
        self.logdet_bits(u, x, true)
    }

    /// Exact rate of MS `u`, bit/s.
    pub fn rate(&self, u: usize, x: &[f64]) -> f64 {
        self.bandwidth * (self.g1(u, x) - self.g2(u, x))
    }

    /// `X^{-1}` of MS `u` at `x`, row-major.
    fn inverse(&self, u: usize, x: &[f64], second: bool) -> Vec<Complex64> {
        let mut buf = Vec::with_capacity(self.p * self.p);
        self.covariance(u, x, second, &mut buf);
        let mut inv = vec![Complex64::new(0.0, 0.0); self.p * self.p];
        if small::inverse_into(&mut buf, self.p, &mut inv).is_none() {
            inv.iter_mut().for_each(|z| *z = Complex64::new(f64::NAN, 0.0));
        }
        inv
    }

    /// `(tr(X^{-1} D_i), tr(X^{-1} E_i))` in bits for every variable.
    fn trace_terms(&self, u: usize, inv: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let ut = &self.users[u];
        let d = ut.d.iter().map(|m| small::trace_product(inv, m, self.p) / LN2).collect();
        let e = ut.e.iter().map(|m| small::trace_product(inv, m, self.p) / LN2).collect();
        (d, e)
    }

    /// Adds `scale * grad g` to `g` (`second` selects `g2`).
    fn add_logdet_gradient(&self, u: usize, x: &[f64], second: bool, scale: f64, g: &mut [f64]) {
        let inv = self.inverse(u, x, second);
        let (d, e) = self.trace_terms(u, &inv);
        let own = self.users[u].own;
        for i in 0..x.len() {
            if second && own == Some(i) {
                continue;
            }
            let r = x[i].max(self.floor).sqrt();
            g[i] += scale * (d[i] + e[i] / (2.0 * r));
        }
    }

    /// Gradient of the exact rate of MS `u`, written into `g`.
    pub fn rate_gradient(&self, u: usize, x: &[f64], g: &mut [f64]) {
        g.iter_mut().for_each(|v| *v = 0.0);
        self.add_logdet_gradient(u, x, false, self.bandwidth, g);
        self.add_logdet_gradient(u, x, true, -self.bandwidth, g);
    }

    pub fn sum_rate(&self, x: &[f64]) -> f64 {
        (0..self.users.len()).map(|u| self.rate(u, x)).sum()
    }

    /// Concave-side minorizer of every MS's rate, tight at `x0`.
    pub fn lower_bound(&self, x0: &[f64]) -> LowerBound<'_> {
        let coefs = (0..self.users.len())
            .map(|u| {
                let inv = self.inverse(u, x0, true);
                let (mut d, mut e) = self.trace_terms(u, &inv);
                if let Some(i) = self.users[u].own {
                    d[i] = 0.0;
                    e[i] = 0.0;
                }
                let tangent = e.iter().zip(x0).map(|(&ei, &xi)| ei > 0.0 && xi > 0.0).collect();
                UserBound {
                    g2_at_x0: self.g2(u, x0),
                    d,
                    e,
                    tangent,
                }
            })
            .collect();
        LowerBound {
            block: self,
            x0: x0.to_vec(),
            users: coefs,
        }
    }
}

struct UserBound {
    g2_at_x0: f64,
    d: Vec<f64>,
    e: Vec<f64>,
    tangent: Vec<bool>,
}

/// Lower bound `B (g1(x) - h2(x))` of each rate, where `h2` majorizes `g2`:
/// first-order in the `x D` terms; in the `sqrt(x) E` terms it keeps the
/// exact `sqrt` when its coefficient is non-positive (already concave after
/// the sign flip) and takes the tangent of `sqrt` otherwise.
pub struct LowerBound<'a> {
    block: &'a DownlinkBlock,
    x0: Vec<f64>,
    users: Vec<UserBound>,
}

impl LowerBound<'_> {
    pub fn expansion_point(&self) -> &[f64] {
        &self.x0
    }

    fn h2(&self, u: usize, x: &[f64]) -> f64 {
        let ub = &self.users[u];
        let mut v = ub.g2_at_x0;
        for i in 0..x.len() {
            let (xi, x0) = (x[i], self.x0[i]);
            v += ub.d[i] * (xi - x0);
            v += if ub.tangent[i] {
                ub.e[i] * (xi - x0) / (2.0 * x0.sqrt())
            } else {
                ub.e[i] * (xi.sqrt() - x0.sqrt())
            };
        }
        v
    }

    /// Bound on the rate of MS `u`, bit/s.
    pub fn user_value(&self, u: usize, x: &[f64]) -> f64 {
        self.block.bandwidth * (self.block.g1(u, x) - self.h2(u, x))
    }

    /// Gradient of [`LowerBound::user_value`], written into `g`.
    pub fn user_gradient(&self, u: usize, x: &[f64], g: &mut [f64]) {
        g.iter_mut().for_each(|v| *v = 0.0);
        self.add_user_gradient(u, x, g);
    }

    fn add_user_gradient(&self, u: usize, x: &[f64], g: &mut [f64]) {
        let b = self.block.bandwidth;
        self.block.add_logdet_gradient(u, x, false, b, g);
        let ub = &self.users[u];
        for i in 0..x.len() {
            let r = if ub.tangent[i] {
                self.x0[i].sqrt()
            } else {
                x[i].max(self.block.floor).sqrt()
            };
            g[i] -= b * (ub.d[i] + ub.e[i] / (2.0 * r));
        }
    }
}

impl SmoothObjective for LowerBound<'_> {
    fn value(&mut self, x: &[f64]) -> f64 {
        (0..self.users.len()).map(|u| self.user_value(u, x)).sum()
    }

    fn gradient(&mut self, x: &[f64], g: &mut [f64]) {
        g.iter_mut().for_each(|v| *v = 0.0);
        for u in 0..self.users.len() {
            self.add_user_gradient(u, x, g);
        }
    }
}

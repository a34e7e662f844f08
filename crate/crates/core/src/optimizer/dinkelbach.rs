use super::inner::{inner_maximize, InnerConfig, SmoothObjective};
use super::projection::FeasibleSet;

/// Affine denominator `constant + coeffs . x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub constant: f64,
    pub coeffs: Vec<f64>,
}

impl Affine {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.coeffs.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DinkelbachOutcome {
    pub x: Vec<f64>,
    pub ratio: f64,
    /// Ratio after each accepted iteration, starting at the initial point.
    pub lambdas: Vec<f64>,
    pub iterations: usize,
    pub stalled: bool,
}

struct Parametric<'a> {
    num: &'a mut dyn SmoothObjective,
    den: &'a Affine,
    lambda: f64,
    magnitude: f64,
}

impl SmoothObjective for Parametric<'_> {
    fn value(&mut self, x: &[f64]) -> f64 {
        self.num.value(x) - self.lambda * self.den.eval(x)
    }

    fn gradient(&mut self, x: &[f64], g: &mut [f64]) {
        self.num.gradient(x, g);
        for (gi, a) in g.iter_mut().zip(&self.den.coeffs) {
            *gi -= self.lambda * a;
        }
    }

    fn magnitude(&self) -> f64 {
        self.magnitude
    }
}

/// Maximizes `N(x) / D(x)` over `set` with Dinkelbach's method, warm-started
/// at `x0`. Each parametric subproblem `max N - lambda D` is solved by
/// [`inner_maximize`] from the current iterate, so the ratio sequence is
/// non-decreasing.
pub fn dinkelbach(
    num: &mut dyn SmoothObjective,
    den: &Affine,
    x0: &[f64],
    set: &FeasibleSet,
    inner: &InnerConfig,
    tol: f64,
    max_iter: usize,
) -> DinkelbachOutcome {
    let mut x = x0.to_vec();
    set.project(&mut x);
    let mut n = num.value(&x);
    let mut lambda = n / den.eval(&x);
    let mut lambdas = vec![lambda];
    let mut stalled = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let magnitude = n.abs().max(num.magnitude());
        let mut param = Parametric {
            num: &mut *num,
            den,
            lambda,
            magnitude,
        };
        let out = inner_maximize(&mut param, &x, set, inner);
        stalled |= out.stalled;
        let ny = num.value(&out.x);
        let dy = den.eval(&out.x);
        let f = ny - lambda * dy;
        let next = ny / dy;
        if !(next >= lambda) {
            break;
        }
        x = out.x;
        n = ny;
        lambda = next;
        lambdas.push(lambda);
        if f <= tol * ny.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    DinkelbachOutcome {
        x,
        ratio: lambda,
        lambdas,
        iterations,
        stalled,
    }
}

use super::projection::FeasibleSet;

/// A differentiable objective to be maximized.
pub trait SmoothObjective {
    fn value(&mut self, x: &[f64]) -> f64;
    fn gradient(&mut self, x: &[f64], g: &mut [f64]);
    /// Typical magnitude of the objective; relative stopping tests use it
    /// when the objective itself passes through zero.
    fn magnitude(&self) -> f64 {
        0.0
    }
}

/// Stopping and line-search parameters of [`inner_maximize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerConfig {
    pub max_iter: usize,
    pub tol: f64,
    pub armijo_c: f64,
    pub armijo_beta: f64,
}

impl Default for InnerConfig {
    fn default() -> Self {
        InnerConfig {
            max_iter: 500,
            tol: 1e-8,
            armijo_c: 1e-4,
            armijo_beta: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// Backtracking hit its floor without an acceptable step.
    pub stalled: bool,
}

const MAX_BACKTRACKS: usize = 80;

/// Projected gradient ascent with Armijo backtracking. The returned point is
/// never worse than the (projected) start.
pub fn inner_maximize(
    obj: &mut dyn SmoothObjective,
    x0: &[f64],
    set: &FeasibleSet,
    cfg: &InnerConfig,
) -> InnerOutcome {
    let n = x0.len();
    let mut x = x0.to_vec();
    set.project(&mut x);
    let mut f = obj.value(&x);
    let mut g = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut step = f64::NAN;
    let scale = set.scale();
    let mut stalled = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        obj.gradient(&x, &mut g);
        let gmax = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if !(gmax > 0.0) || !gmax.is_finite() {
            break;
        }
        step = if step.is_nan() { scale / gmax } else { step * 2.0 };
        let mut accepted = false;
        let mut moved = false;
        let mut fy = f;
        for _ in 0..MAX_BACKTRACKS {
            for i in 0..n {
                y[i] = x[i] + step * g[i];
            }
            set.project(&mut y);
            let dmax = (0..n).fold(0.0f64, |a, i| a.max((y[i] - x[i]).abs()));
            if dmax <= 1e-15 * scale.max(f64::MIN_POSITIVE) {
                break;
            }
            moved = true;
            let ascent: f64 = (0..n).map(|i| g[i] * (y[i] - x[i])).sum();
            fy = obj.value(&y);
            if fy >= f + cfg.armijo_c * ascent {
                accepted = true;
                break;
            }
            step *= cfg.armijo_beta;
        }
        if !accepted {
            // Either a stationary point (projected step vanishes) or a
            // failed line search.
            stalled = moved;
            break;
        }
        let denom = f.abs().max(fy.abs()).max(obj.magnitude()).max(f64::MIN_POSITIVE);
        let rel = (fy - f).abs() / denom;
        std::mem::swap(&mut x, &mut y);
        f = fy;
        if rel < cfg.tol {
            break;
        }
    }
    InnerOutcome {
        x,
        value: f,
        iterations,
        stalled,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic(Vec<f64>);

    impl SmoothObjective for Quadratic {
        fn value(&mut self, x: &[f64]) -> f64 {
            -x.iter().zip(&self.0).map(|(a, c)| (a - c).powi(2)).sum::<f64>()
        }
        fn gradient(&mut self, x: &[f64], g: &mut [f64]) {
            for i in 0..x.len() {
                g[i] = -2.0 * (x[i] - self.0[i]);
            }
        }
    }

    #[test]
    fn recovers_interior_optimum() {
        let set = FeasibleSet::CappedSimplex { budget: 1.0 };
        let c = vec![0.2, 0.1, 0.3];
        let out = inner_maximize(&mut Quadratic(c.clone()), &[0.0; 3], &set, &InnerConfig::default());
        for (a, b) in out.x.iter().zip(&c) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}

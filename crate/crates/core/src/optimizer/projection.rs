/// Euclidean projection onto `{x >= 0, sum x = budget}` (sort based).
pub fn project_simplex(v: &mut [f64], budget: f64) {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - budget) / (j + 1) as f64;
        if uj - t > 0.0 {
            tau = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - tau).max(0.0);
    }
}

/// Euclidean projection onto `{x >= 0, sum x <= budget}`.
pub fn project_capped_simplex(v: &mut [f64], budget: f64) {
    let clipped: f64 = v.iter().map(|x| x.max(0.0)).sum();
    if clipped <= budget {
        for x in v.iter_mut() {
            *x = x.max(0.0);
        }
    } else {
        project_simplex(v, budget);
    }
}

/// Euclidean projection onto the box `[0, upper]^n`.
pub fn project_box(v: &mut [f64], upper: f64) {
    for x in v.iter_mut() {
        *x = x.clamp(0.0, upper);
    }
}

/// Feasible sets handled by the inner solver.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    /// `{x >= 0, sum x <= budget}`.
    CappedSimplex { budget: f64 },
    /// `[0, upper]^n`.
    Box { upper: f64 },
    /// Product of capped simplices over consecutive blocks of the given sizes.
    Blocks { sizes: Vec<usize>, budget: f64 },
}

impl FeasibleSet {
    pub fn project(&self, x: &mut [f64]) {
        match self {
            FeasibleSet::CappedSimplex { budget } => project_capped_simplex(x, *budget),
            FeasibleSet::Box { upper } => project_box(x, *upper),
            FeasibleSet::Blocks { sizes, budget } => {
                let mut start = 0;
                for &s in sizes {
                    project_capped_simplex(&mut x[start..start + s], *budget);
                    start += s;
                }
            }
        }
    }

    /// Characteristic length of the set, used to size the first step.
    pub fn scale(&self) -> f64 {
        match self {
            FeasibleSet::CappedSimplex { budget } | FeasibleSet::Blocks { budget, .. } => *budget,
            FeasibleSet::Box { upper } => *upper,
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        let capped = |x: &[f64], b: f64| {
            x.iter().all(|&v| v >= -tol) && x.iter().sum::<f64>() <= b + tol
        };
        match self {
            FeasibleSet::CappedSimplex { budget } => capped(x, *budget),
            FeasibleSet::Box { upper } => x.iter().all(|&v| v >= -tol && v <= upper + tol),
            FeasibleSet::Blocks { sizes, budget } => {
                let mut start = 0;
                sizes.iter().all(|&s| {
                    let ok = capped(&x[start..start + s], *budget);
                    start += s;
                    ok
                })
            }
        }
    }
}

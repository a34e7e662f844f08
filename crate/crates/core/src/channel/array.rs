use nalgebra::DVector;
use num_complex::Complex64;

/// Half-wavelength ULA response `a_i = exp(j pi i sin(theta))`,
/// `i = 0..n`, unnormalized (unit-modulus entries).
pub fn array_response(theta: f64, n: usize) -> DVector<Complex64> {
    let mut v = DVector::zeros(n);
    fill_response(theta, v.as_mut_slice());
    v
}

/// Writes the ULA response into `out` using a phase recurrence.
pub(crate) fn fill_response(theta: f64, out: &mut [Complex64]) {
    let (s, c) = (std::f64::consts::PI * theta.sin()).sin_cos();
    let step = Complex64::new(c, s);
    let mut z = Complex64::new(1.0, 0.0);
    for (i, o) in out.iter_mut().enumerate() {
        // Re-anchor every 32 elements to keep the modulus at one.
        if i % 32 == 0 && i > 0 {
            let ph = std::f64::consts::PI * i as f64 * theta.sin();
            z = Complex64::new(ph.cos(), ph.sin());
        }
        *o = z;
        z *= step;
    }
}

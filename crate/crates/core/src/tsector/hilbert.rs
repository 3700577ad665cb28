//! Periodic conjugate-function transform on a uniform grid.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::linops::VectorE;

/// Applies `e^{ikt} ↦ −i·sgn(k)·e^{ikt}` to one sampled scalar function.
/// The mean and the Nyquist harmonic `k = N/2` (whose sign is ambiguous on
/// the grid) are mapped to 0.
pub fn hilbert_samples(f: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = f.len();
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::invalid(format!("grid size {n} must be even and at least 2")));
    }
    let mut planner = FftPlanner::<f64>::new();
    let mut buf = f.to_vec();
    planner.plan_fft_forward(n).process(&mut buf);
    for (j, z) in buf.iter_mut().enumerate() {
        let m = if j == 0 || j == n / 2 {
            Complex64::new(0.0, 0.0)
        } else if j < n / 2 {
            Complex64::new(0.0, -1.0)
        } else {
            Complex64::new(0.0, 1.0)
        };
        *z *= m / n as f64;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    Ok(buf)
}

/// Component-wise [`hilbert_samples`] of a periodic grid function.
pub fn discrete_hilbert(f: &GridFunction) -> Result<GridFunction> {
    if !f.periodic {
        return Err(Error::invalid("the conjugate-function transform needs a periodic grid"));
    }
    let (n, dim) = (f.len(), f.dim());
    let mut out = vec![VectorE::zeros(dim); n];
    for i in 0..dim {
        let column: Vec<Complex64> = f.values.iter().map(|v| v[i]).collect();
        for (j, z) in hilbert_samples(&column)?.into_iter().enumerate() {
            out[j][i] = z;
        }
    }
    Ok(GridFunction {
        values: out,
        ..f.clone()
    })
}

//! Principal-value integrals over `[−S, S]` with a simple pole at 0.

use num_complex::Complex64;

use super::gauss_legendre;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linops::{pairwise_sum_vec, VectorE};

/// Relative odd-part cancellation allowed at the probe point `s₀ = 1e-7·S`.
pub const ASYMMETRY_TOL: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct PvValue {
    pub value: VectorE,
    /// Mass of the outermost panel, a proxy for the cutoff error.
    pub error_estimate: f64,
    pub nodes: usize,
}

/// `PV ∫_{−S}^{S} k(s) ds`, evaluated as `∫_0^S [k(s) + k(−s)] ds` on mirrored
/// Gauss–Legendre nodes so the odd singular part cancels before quadrature.
/// `n_nodes` is rounded down to whole panels of order 8 (at least one).
pub fn pv_integral<F>(kernel: F, cutoff: f64, n_nodes: usize, exec: Exec) -> Result<PvValue>
where
    F: Fn(f64) -> Result<VectorE> + Sync + Send,
{
    if !(cutoff > 0.0 && cutoff.is_finite()) {
        return Err(Error::invalid(format!("cutoff {cutoff} must be positive")));
    }
    let order = super::PANEL_ORDER;
    let panels = (n_nodes / order).max(1);
    let h = cutoff / panels as f64;

    let s0 = 1e-7 * cutoff;
    let (kp, km) = (kernel(s0)?, kernel(-s0)?);
    let scale = s0 * kp.norm().max(km.norm());
    // only meaningful when the kernel really has a pole at 0
    if scale > 1e-6 {
        let residual = s0 * (&kp + &km).norm() / scale;
        if residual > ASYMMETRY_TOL {
            return Err(Error::AsymmetryDetected { residual });
        }
    }

    let gl = gauss_legendre(order);
    let nodes: Vec<(f64, f64, usize)> = (0..panels)
        .flat_map(|p| {
            let mid = h * (p as f64 + 0.5);
            gl.iter().map(move |&(x, w)| (mid + 0.5 * h * x, 0.5 * h * w, p))
        })
        .collect();
    let terms = exec.try_map(&nodes, |&(s, w, _)| {
        let v = kernel(s)? + kernel(-s)?;
        Ok::<_, Error>(v * Complex64::new(w, 0.0))
    })?;
    let value = pairwise_sum_vec(&terms).expect("at least one panel");
    let last: Vec<VectorE> = nodes
        .iter()
        .zip(&terms)
        .filter(|(n, _)| n.2 == panels - 1)
        .map(|(_, t)| t.clone())
        .collect();
    let error_estimate = pairwise_sum_vec(&last).map_or(0.0, |v| v.norm());
    Ok(PvValue {
        value,
        error_estimate,
        nodes: 2 * nodes.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::c;
    use std::f64::consts::PI;

    fn scalar(z: Complex64) -> VectorE {
        VectorE::from_element(1, z)
    }

    #[test]
    fn odd_kernels_vanish() {
        let v = pv_integral(|s| Ok(scalar(c(1.0 / s, 0.0))), 10.0, 64, Exec::Sequential).unwrap();
        assert_eq!(v.value[0], c(0.0, 0.0));
        let k = |s: f64| Ok(scalar(c(PI / (PI * s).sinh(), 0.0)));
        let v = pv_integral(k, 10.0, 64, Exec::Sequential).unwrap();
        assert!(v.value[0].norm() < 1e-15);
    }

    #[test]
    fn even_pole_is_rejected() {
        let err = pv_integral(|s| Ok(scalar(c(1.0 / s.abs(), 0.0))), 1.0, 16, Exec::Sequential).unwrap_err();
        assert!(matches!(err, Error::AsymmetryDetected { .. }));
    }
}

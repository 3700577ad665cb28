//! Resolvents from imaginary powers: the principal-value representation of
//! `(I + ρA)^{-1}`, its rotated variant, and the four-term split used to
//! bound T-sectoriality by bounded imaginary powers.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{lhs_norm, shifted_coefficients, TrigPolynomial};
use crate::calculus::{BipFit, ImaginaryPowers};
use crate::contour::{gauss_legendre, pv_integral, PANEL_ORDER};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linops::{c, check_vector, matrix_to_csv, pairwise_sum_vec, ShiftedLu, VectorE};
use crate::report::CertificateReport;
use crate::sector::MatrixOperator;

/// Target size of the neglected tail `M̂e^{−(π−φ̂−|θ|)S}` when choosing `S`.
pub const TOL_REP_TAIL: f64 = 1e-10;
/// Largest analytic tail bound accepted, relative to `max(1, ‖x‖)`.
pub const REP_TAIL_ACCEPT: f64 = 1e-8;
/// Panel width cap (in `s`) for the representation integrals.
const MAX_PANEL_WIDTH: f64 = 0.25;

/// `S = ln(M̂/tol)/(π − φ̂ − |θ|)`, at least one decay length.
pub fn pv_cutoff(fit: &BipFit, theta: f64, tol: f64) -> Result<f64> {
    let gap = decay_gap(fit, theta)?;
    Ok((fit.m / tol).ln().max(1.0) / gap)
}

fn decay_gap(fit: &BipFit, theta: f64) -> Result<f64> {
    let limit = PI - fit.phi;
    if !(theta.abs() < limit) {
        return Err(Error::AngleOutOfRange { theta, limit });
    }
    Ok(limit - theta.abs())
}

/// Bound on `(1/2π)∫_{|s|>S} M̂e^{(φ̂+|θ|)|s|}·2π e^{−π|s|} ds · ‖x‖`.
fn tail_bound(fit: &BipFit, gap: f64, cutoff: f64, x_norm: f64) -> f64 {
    2.0 * fit.m * x_norm * (-gap * cutoff).exp() / gap
}

fn check_tail(fit: &BipFit, gap: f64, cutoff: f64, x_norm: f64) -> Result<f64> {
    let tail = tail_bound(fit, gap, cutoff, x_norm);
    let tolerance = REP_TAIL_ACCEPT * x_norm.max(1.0);
    if !(tail <= tolerance) {
        return Err(Error::TruncationNotConverged {
            estimate: tail,
            tolerance,
        });
    }
    Ok(tail)
}

/// Panel width resolving the oscillation `e^{−is ln|ρλ|}` over `σ(A)`.
fn panel_width(a: &MatrixOperator, log_shift: f64) -> f64 {
    let omega = a
        .eigenvalues()
        .iter()
        .map(|z| (z.norm().ln() + log_shift).abs())
        .fold(1.0, f64::max);
    MAX_PANEL_WIDTH.min(1.0 / omega)
}

fn default_nodes(a: &MatrixOperator, log_shift: f64, cutoff: f64) -> usize {
    PANEL_ORDER * (cutoff / panel_width(a, log_shift)).ceil() as usize
}

/// `π/sinh(πs)`.
fn csch_kernel(s: f64) -> f64 {
    PI / (PI * s).sinh()
}

/// `π(e^{θs} − 1)/sinh(πs)`, regular at 0 and identically 0 for `θ = 0`.
fn rotation_kernel(theta: f64, s: f64) -> f64 {
    if theta == 0.0 {
        return 0.0;
    }
    if s == 0.0 {
        return theta;
    }
    PI * (theta * s).exp_m1() / (PI * s).sinh()
}

/// `π/sinh(πs) − χ_{[−π,π]}(s)/s`.
fn smoothed_kernel(s: f64) -> f64 {
    if s.abs() <= PI {
        csch_kernel(s) - 1.0 / s
    } else {
        csch_kernel(s)
    }
}

fn two_pi_i() -> Complex64 {
    c(0.0, 2.0 * PI)
}

#[derive(Debug, Clone)]
pub struct RepValue {
    pub value: VectorE,
    /// The integral part alone (the PV term, or the rotation correction).
    pub integral: VectorE,
    pub cutoff: f64,
    pub nodes: usize,
    pub tail_bound: f64,
    pub error_estimate: f64,
}

fn prepare(
    a: &MatrixOperator,
    fit: &BipFit,
    rho: f64,
    theta: f64,
    x: &VectorE,
    cutoff: Option<f64>,
    n_nodes: Option<usize>,
) -> Result<(ImaginaryPowers, f64, usize, f64)> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::invalid(format!("rho = {rho} must be positive")));
    }
    check_vector(x, a.dim())?;
    let gap = decay_gap(fit, theta)?;
    let cutoff = match cutoff {
        Some(s) => s,
        None => pv_cutoff(fit, theta, TOL_REP_TAIL)?,
    };
    let tail = check_tail(fit, gap, cutoff, x.norm())?;
    let nodes = n_nodes.unwrap_or_else(|| default_nodes(a, rho.ln(), cutoff));
    Ok((ImaginaryPowers::new(a)?, cutoff, nodes, tail))
}

/// `(1/2πi) PV∫_ℝ (ρA)^{−is} π/sinh(πs) x ds + x/2`, which equals
/// `(I + ρA)^{-1}x`.
pub fn resolvent_rep_real(
    a: &MatrixOperator,
    fit: &BipFit,
    rho: f64,
    x: &VectorE,
    cutoff: Option<f64>,
    n_nodes: Option<usize>,
    exec: Exec,
) -> Result<RepValue> {
    let (powers, cutoff, nodes, tail) = prepare(a, fit, rho, 0.0, x, cutoff, n_nodes)?;
    let log_rho = rho.ln();
    let kernel = |s: f64| -> Result<VectorE> {
        let u = powers.at(-s)? * x;
        Ok(u * (Complex64::from_polar(csch_kernel(s), -s * log_rho) / two_pi_i()))
    };
    let pv = pv_integral(kernel, cutoff, nodes, exec)?;
    Ok(RepValue {
        value: &pv.value + x * c(0.5, 0.0),
        integral: pv.value,
        cutoff,
        nodes: pv.nodes,
        tail_bound: tail,
        error_estimate: pv.error_estimate + tail,
    })
}

/// `(I + ρA)^{-1}x + (1/2πi)∫_ℝ (ρA)^{−is} π(e^{θs} − 1)/sinh(πs) x ds`,
/// which equals `(I + ρe^{iθ}A)^{-1}x` for `|θ| < π − φ̂`.
#[allow(clippy::too_many_arguments)]
pub fn resolvent_rep_rotated(
    a: &MatrixOperator,
    fit: &BipFit,
    rho: f64,
    theta: f64,
    x: &VectorE,
    cutoff: Option<f64>,
    n_nodes: Option<usize>,
    exec: Exec,
) -> Result<RepValue> {
    let (powers, cutoff, nodes, tail) = prepare(a, fit, rho, theta, x, cutoff, n_nodes)?;
    let log_rho = rho.ln();
    let kernel = |s: f64| -> Result<VectorE> {
        let k = rotation_kernel(theta, s);
        if k == 0.0 {
            return Ok(VectorE::zeros(x.len()));
        }
        let u = powers.at(-s)? * x;
        Ok(u * (Complex64::from_polar(k, -s * log_rho) / two_pi_i()))
    };
    let correction = pv_integral(kernel, cutoff, nodes, exec)?;
    // (I + ρA)^{-1} = ρ^{-1}(A + ρ^{-1})^{-1}
    let direct = ShiftedLu::new(a.matrix(), c(1.0 / rho, 0.0))?.solve_vec(&(x / c(rho, 0.0)))?;
    Ok(RepValue {
        value: direct + &correction.value,
        integral: correction.value,
        cutoff,
        nodes: correction.nodes,
        tail_bound: tail,
        error_estimate: correction.error_estimate + tail,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TransferenceKernel {
    /// `π/sinh(πs) − χ_{[−π,π]}(s)/s`
    Smoothed,
    /// `π(e^{θs} − 1)/sinh(πs)`
    Rotation { theta: f64 },
}

impl TransferenceKernel {
    fn eval(self, s: f64) -> f64 {
        match self {
            Self::Smoothed => smoothed_kernel(s),
            Self::Rotation { theta } => rotation_kernel(theta, s),
        }
    }

    fn theta(self) -> f64 {
        match self {
            Self::Smoothed => 0.0,
            Self::Rotation { theta } => theta,
        }
    }
}

/// Gauss–Legendre nodes on `[0, π]` and `[π, S]` at width ≤ `h`.
fn split_nodes(cutoff: f64, h: f64) -> Vec<(f64, f64)> {
    let gl = gauss_legendre(PANEL_ORDER);
    let mut out = Vec::new();
    for (lo, hi) in [(0.0, PI.min(cutoff)), (PI.min(cutoff), cutoff)] {
        if hi <= lo {
            continue;
        }
        let panels = ((hi - lo) / h).ceil() as usize;
        let w = (hi - lo) / panels as f64;
        for p in 0..panels {
            let mid = lo + w * (p as f64 + 0.5);
            out.extend(gl.iter().map(|&(x, wt)| (mid + 0.5 * w * x, 0.5 * w * wt)));
        }
    }
    out
}

/// `∫_ℝ ‖A^{−is}‖·|k(s)|·(1 + |s|) ds`, truncated where the integrand falls
/// below `1e-12` of its bound.
pub fn transference_integral(a: &MatrixOperator, fit: &BipFit, kernel: TransferenceKernel, exec: Exec) -> Result<f64> {
    let gap = decay_gap(fit, kernel.theta())?;
    let cutoff = ((fit.m / 1e-12).ln().max(1.0) + 2.0 * (1.0 + 1.0 / gap).ln()) / gap;
    let powers = ImaginaryPowers::new(a)?;
    let nodes = split_nodes(cutoff.max(PI), MAX_PANEL_WIDTH);
    let terms = exec.try_map(&nodes, |&(s, w)| {
        let plus = crate::linops::operator_norm(&powers.at(-s)?) * kernel.eval(s).abs();
        let minus = crate::linops::operator_norm(&powers.at(s)?) * kernel.eval(-s).abs();
        Ok::<_, Error>(w * (1.0 + s) * (plus + minus))
    })?;
    let value: f64 = terms.iter().sum();
    if !value.is_finite() {
        return Err(Error::invalid("transference integral is not finite"));
    }
    Ok(value)
}

/// Magnitudes of the four-term split of `Σ e^{imkt}(I + re^{−k+iθ}A)^{-1}x_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundAssembly {
    pub smoothed: f64,
    pub principal_value: f64,
    pub half: f64,
    pub rotation: f64,
    pub lhs: f64,
    pub reconstruction_error: f64,
    pub cutoff: f64,
    pub nodes: usize,
    pub passed: bool,
}

impl BoundAssembly {
    pub fn terms_sum(&self) -> f64 {
        self.smoothed + self.principal_value + self.half + self.rotation
    }

    pub fn report(
        &self,
        a: &MatrixOperator,
        fit: &BipFit,
        theta: f64,
        r: f64,
        poly: &TrigPolynomial,
    ) -> CertificateReport {
        CertificateReport::new(
            "bip-t-sector-bound",
            json!({
                "matrix": matrix_to_csv(a.matrix()),
                "fit": {"m": fit.m, "phi": fit.phi},
                "theta": theta,
                "r": r,
                "poly": poly,
            }),
        )
        .nodes("s_nodes", self.nodes)
        .nodes("n_t", poly.n_t)
        .tolerance("reconstruction", ASSEMBLY_TOL)
        .output("smoothed", self.smoothed)
        .output("principal_value", self.principal_value)
        .output("half", self.half)
        .output("rotation", self.rotation)
        .output("terms_sum", self.terms_sum())
        .output("lhs", self.lhs)
        .output("reconstruction_error", self.reconstruction_error)
        .output("cutoff", self.cutoff)
        .passed(self.passed)
    }
}

/// Relative reconstruction tolerance for the split.
pub const ASSEMBLY_TOL: f64 = 1e-7;

/// Computes the smoothed-kernel, PV, ½ and rotation terms on the grid,
/// checks that they reconstruct the left-hand side, and that their `L^p`
/// norms dominate it.
pub fn bip_tsector_bound_assembly(
    a: &MatrixOperator,
    fit: &BipFit,
    theta: f64,
    r: f64,
    poly: &TrigPolynomial,
    exec: Exec,
) -> Result<BoundAssembly> {
    let gap = decay_gap(fit, theta)?;
    let lhs = lhs_norm(a, theta, r, poly)?;
    let x_norm: f64 = poly.coefficients.iter().map(|x| x.norm()).sum();
    let cutoff = pv_cutoff(fit, theta, TOL_REP_TAIL)?.max(PI + 1.0);
    check_tail(fit, gap, cutoff, x_norm)?;
    let terms = poly.coefficients.len();
    let h = panel_width(a, r.ln() - (terms - 1) as f64);
    let nodes = split_nodes(cutoff, h);
    let powers = ImaginaryPowers::new(a)?;
    let dim = a.dim();

    // per node: contributions to (smoothed, pv, rotation) for every k
    let contributions = exec.try_map(&nodes, |&(s, w)| {
        let (u, v) = (powers.at(-s)?, powers.at(s)?);
        let mut out = Vec::with_capacity(terms);
        for (k, x) in poly.coefficients.iter().enumerate() {
            // (re^{−k}A)^{∓is} = e^{∓is(ln r − k)} A^{∓is}
            let phase = s * (r.ln() - k as f64);
            let plus = &u * x * Complex64::from_polar(1.0, -phase);
            let minus = &v * x * Complex64::from_polar(1.0, phase);
            let scale = c(w, 0.0) / two_pi_i();
            let smooth = (&plus * c(smoothed_kernel(s), 0.0) + &minus * c(smoothed_kernel(-s), 0.0)) * scale;
            let pv = if s <= PI {
                (&plus - &minus) * (scale / s)
            } else {
                VectorE::zeros(dim)
            };
            let rot = (&plus * c(rotation_kernel(theta, s), 0.0) + &minus * c(rotation_kernel(theta, -s), 0.0)) * scale;
            out.push([smooth, pv, rot]);
        }
        Ok::<_, Error>(out)
    })?;
    let coefficient = |k: usize, j: usize| -> VectorE {
        let parts: Vec<VectorE> = contributions.iter().map(|node| node[k][j].clone()).collect();
        pairwise_sum_vec(&parts).unwrap_or_else(|| VectorE::zeros(dim))
    };
    let gather = |j: usize| -> Vec<VectorE> { (0..terms).map(|k| coefficient(k, j)).collect() };
    let (smooth, pv, rot) = (gather(0), gather(1), gather(2));
    let half: Vec<VectorE> = poly.coefficients.iter().map(|x| x * c(0.5, 0.0)).collect();

    let exact = shifted_coefficients(a, theta, r, poly)?;
    let assembled: Vec<VectorE> = (0..terms)
        .map(|k| &smooth[k] + &pv[k] + &half[k] + &rot[k] - &exact[k])
        .collect();
    let norm = |ys: &[VectorE]| poly.synthesize(ys).map(|g| g.lp_norm());
    let reconstruction_error = norm(&assembled)?;
    let out = BoundAssembly {
        smoothed: norm(&smooth)?,
        principal_value: norm(&pv)?,
        half: norm(&half)?,
        rotation: norm(&rot)?,
        lhs,
        reconstruction_error,
        cutoff,
        nodes: 2 * nodes.len(),
        passed: false,
    };
    let tol = ASSEMBLY_TOL * lhs.max(1.0);
    let passed = reconstruction_error <= tol && lhs <= out.terms_sum() + tol;
    Ok(BoundAssembly { passed, ..out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::bip_fit;
    use crate::linops::{diag, diag_real};

    fn op(m: crate::linops::DenseMatrix) -> MatrixOperator {
        MatrixOperator::new(m).unwrap()
    }

    fn v(xs: &[f64]) -> VectorE {
        VectorE::from_iterator(xs.len(), xs.iter().map(|&x| c(x, 0.0)))
    }

    #[test]
    fn real_representation_examples() {
        let cases: [(&[f64], f64, &[f64]); 3] = [
            (&[1.0], 1.0, &[0.5]),
            (&[4.0], 1.0, &[0.2]),
            (&[1.0, 9.0], 0.5, &[2.0 / 3.0, 2.0 / 11.0]),
        ];
        for (entries, rho, expected) in cases {
            let a = op(diag_real(entries));
            let fit = bip_fit(&a, 4.0, 9).unwrap();
            let x = v(&vec![1.0; entries.len()]);
            let rep = resolvent_rep_real(&a, &fit, rho, &x, None, None, Exec::default()).unwrap();
            assert!((rep.value - v(expected)).norm() < 1e-8, "{entries:?}");
        }
    }

    #[test]
    fn rotated_representation() {
        let a = op(diag_real(&[1.0]));
        let fit = bip_fit(&a, 4.0, 9).unwrap();
        let x = v(&[1.0]);
        let rep = resolvent_rep_rotated(&a, &fit, 1.0, PI / 4.0, &x, None, None, Exec::default()).unwrap();
        let expected = c(0.5, -0.5 * (PI / 8.0).tan());
        assert!((rep.value[0] - expected).norm() < 1e-8);
        assert!((rep.value[0] - c(0.5, -0.207107)).norm() < 1e-5);
        let flat = resolvent_rep_rotated(&a, &fit, 1.0, 0.0, &x, None, None, Exec::default()).unwrap();
        assert_eq!(flat.integral[0], c(0.0, 0.0));
    }

    #[test]
    fn rotation_beyond_limit_is_rejected() {
        let a = op(diag(&[c(0.0, 1.0)]));
        let fit = bip_fit(&a, 4.0, 9).unwrap();
        assert!((fit.phi - PI / 2.0).abs() < 1e-6);
        let err = resolvent_rep_rotated(&a, &fit, 1.0, 0.75 * PI, &v(&[1.0]), None, None, Exec::default());
        assert!(matches!(err, Err(Error::AngleOutOfRange { .. })));
    }

    #[test]
    fn bound_assembly_scalar() {
        let a = op(diag_real(&[1.0]));
        let fit = bip_fit(&a, 4.0, 9).unwrap();
        let poly = TrigPolynomial::new(vec![v(&[1.0]), v(&[1.0])], 16, 2.0).unwrap();
        let out = bip_tsector_bound_assembly(&a, &fit, PI / 3.0, 1.0, &poly, Exec::default()).unwrap();
        assert!(out.passed, "{out:?}");
        assert!(out.principal_value.is_finite() && out.rotation.is_finite());
        let flat = bip_tsector_bound_assembly(&a, &fit, 0.0, 1.0, &poly, Exec::default()).unwrap();
        assert_eq!(flat.rotation, 0.0);
        assert!(flat.passed);
    }

    #[test]
    fn transference_grows_with_rotation() {
        let a = op(diag_real(&[1.0, 3.0]));
        let fit = bip_fit(&a, 4.0, 9).unwrap();
        let smooth = transference_integral(&a, &fit, TransferenceKernel::Smoothed, Exec::default()).unwrap();
        assert!(smooth.is_finite() && smooth > 0.0);
        let mut last = 0.0;
        for theta in [0.3, 1.0, 2.0, 2.8] {
            let val = transference_integral(&a, &fit, TransferenceKernel::Rotation { theta }, Exec::default()).unwrap();
            assert!(val.is_finite() && val > last);
            last = val;
        }
    }
}

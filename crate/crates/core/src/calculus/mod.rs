//! Complex and imaginary powers, bounded-imaginary-power fits and the
//! holomorphic functional calculus `f(−A)`.

mod symbols;

pub use self::symbols::{
    builtin_symbol, hinf_apply, hinf_apply_auto, hinf_constant, sampled_sup, symbol_class_check, DecayClass,
    HinfConstant, HolomorphicSymbol, SymbolSampling, BUILTIN_SYMBOLS,
};

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::contour::{dunford, gauss_legendre, neg_pow, ContourSpec, ContourValue, PANEL_ORDER};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linops::{c, identity, inverse, matrix_exp, operator_norm, pairwise_sum, DenseMatrix, ShiftedLu};
use crate::sector::MatrixOperator;

/// Truncation radius relative to `max(1, ‖A‖)` for automatic contours.
pub const RADIUS_FACTOR: f64 = 1e6;
/// Padding (in `ln λ`) beyond the singular-value range for the real-axis
/// imaginary-power integral.
pub const LOG_PADDING: f64 = 40.0;
pub const TOL_IMAGINARY_TAIL: f64 = 1e-12;

/// Panel ratio that keeps every panel well inside the analyticity strip of
/// half-width `gap` (in `ln r`).
pub(crate) fn ratio_for_gap(gap: f64) -> f64 {
    gap.min(2f64.ln()).max(0.05).exp()
}

/// Smallest and largest eigenvalue modulus.
pub(crate) fn spectral_moduli(a: &MatrixOperator) -> (f64, f64) {
    let ev = a.eigenvalues();
    let lo = ev.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    let hi = ev.iter().map(|z| z.norm()).fold(0.0, f64::max);
    (lo, hi)
}

/// Contour for `A^z`: rays halfway between the positive axis (branch cut of
/// `(−λ)^z`) and `−σ(A)`, arc at half the smallest eigenvalue modulus.
pub fn power_contour(a: &MatrixOperator) -> Result<ContourSpec> {
    let psi = a.spectral_angle();
    if psi >= PI {
        return Err(Error::NotSectorialAtAngle {
            theta: 0.0,
            z: c(0.0, 0.0),
        });
    }
    let limit = a.admissible_angle().min(PI - psi);
    let theta = (0.5 * (PI - psi)).min(limit);
    let gap = theta.min(PI - psi - theta);
    let (lo, _) = spectral_moduli(a);
    let rho = 0.5 * lo;
    let radius = RADIUS_FACTOR * operator_norm(a.matrix()).max(1.0).max(rho * 4.0);
    Ok(ContourSpec::graded(rho, theta, radius, ratio_for_gap(gap)))
}

fn check_contour_angle(a: &MatrixOperator, theta: f64) -> Result<()> {
    let limit = a.admissible_angle();
    if theta > limit {
        return Err(Error::AngleOutOfRange { theta, limit });
    }
    Ok(())
}

/// `A^z = (1/2πi) ∫_{Γ_{ρ,θ}} (−λ)^z (A+λ)^{-1} dλ` for `Re z < 0`;
/// `A^0 = I`.
pub fn complex_power(a: &MatrixOperator, z: Complex64, spec: &ContourSpec) -> Result<ContourValue> {
    if z == c(0.0, 0.0) {
        return Ok(ContourValue {
            value: identity(a.dim()),
            tail_norm: 0.0,
            error_estimate: 0.0,
            nodes: 0,
        });
    }
    if !(z.re < 0.0) || !z.im.is_finite() {
        return Err(Error::invalid(format!("exponent {z} must have negative real part")));
    }
    check_contour_angle(a, spec.theta)?;
    let (lo, _) = spectral_moduli(a);
    if !(spec.rho > 0.0 && spec.rho < lo) {
        return Err(Error::InvalidContour(format!(
            "arc radius {} must lie in (0, {lo}) to exclude the spectrum",
            spec.rho
        )));
    }
    let mut spec = spec.clone();
    spec.decay.get_or_insert(-z);
    let m = a.matrix();
    dunford(&spec, |l| Ok(ShiftedLu::new(m, l)?.inverse() * neg_pow(l, z)))
}

/// `A^z` on the automatic contour.
pub fn complex_power_auto(a: &MatrixOperator, z: Complex64) -> Result<DenseMatrix> {
    Ok(complex_power(a, z, &power_contour(a)?)?.value)
}

/// `A^z` for any exponent: `A^m · A^{z−m}` with an integer `m` chosen so that
/// `Re(z − m) ∈ [−1, 0)`.
pub fn power(a: &MatrixOperator, z: Complex64) -> Result<DenseMatrix> {
    if z.re < 0.0 {
        return complex_power_auto(a, z);
    }
    if z == c(0.0, 0.0) {
        return Ok(identity(a.dim()));
    }
    let m = z.re.floor() as i32 + 1;
    let rest = z - m as f64;
    let mut out = if rest == c(0.0, 0.0) {
        identity(a.dim())
    } else {
        complex_power_auto(a, rest)?
    };
    for _ in 0..m {
        out = a.matrix() * out;
    }
    Ok(out)
}

pub fn real_power(a: &MatrixOperator, s: f64) -> Result<DenseMatrix> {
    power(a, c(s, 0.0))
}

/// `sinh(πt)/(πt)`, equal to 1 at `t = 0`.
pub fn imaginary_prefactor(t: f64) -> f64 {
    let x = PI * t;
    if x.abs() < 1e-4 {
        1.0 + x * x / 6.0
    } else {
        x.sinh() / x
    }
}

/// Node count for the real-axis integral at panel width ≤ 1/2, tightened
/// when the spectrum approaches the imaginary axis.
pub fn imaginary_power_nodes(a: &MatrixOperator, t: f64) -> Result<usize> {
    let (lo, hi) = singular_range(a)?;
    let psi = a.spectral_angle();
    let width = 0.5f64.min((PI - psi) / 3.0).min(2.0 / t.abs().max(1e-300));
    let span = hi.ln() - lo.ln() + 2.0 * padding(t);
    Ok(PANEL_ORDER * (span / width).ceil() as usize)
}

/// Endpoint decay is `e^{−|s|}`; pad further to absorb the prefactor.
fn padding(t: f64) -> f64 {
    LOG_PADDING + imaginary_prefactor(t).ln().max(0.0)
}

fn singular_range(a: &MatrixOperator) -> Result<(f64, f64)> {
    let hi = operator_norm(a.matrix());
    let lo = 1.0 / operator_norm(&inverse(a.matrix())?);
    Ok((lo, hi))
}

/// `A^{it} = (sinh(πt)/(πt)) ∫_0^∞ λ^{it} (A+λ)^{-2} A dλ`, integrated in
/// `s = ln λ` on uniform Gauss–Legendre panels.
pub fn imaginary_power(a: &MatrixOperator, t: f64, n_nodes: usize, exec: Exec) -> Result<ContourValue> {
    if !t.is_finite() {
        return Err(Error::invalid("t must be finite"));
    }
    let psi = a.spectral_angle();
    if psi >= PI {
        return Err(Error::NotSectorialAtAngle {
            theta: 0.0,
            z: c(0.0, 0.0),
        });
    }
    let (lo, hi) = singular_range(a)?;
    let (s_lo, s_hi) = (lo.ln() - padding(t), hi.ln() + padding(t));
    let panels = (n_nodes / PANEL_ORDER).max(1);
    let h = (s_hi - s_lo) / panels as f64;
    let gl = gauss_legendre(PANEL_ORDER);
    let nodes: Vec<(f64, f64)> = (0..panels)
        .flat_map(|p| {
            let mid = s_lo + h * (p as f64 + 0.5);
            gl.iter().map(move |&(x, w)| (mid + 0.5 * h * x, 0.5 * h * w))
        })
        .collect();
    let m = a.matrix();
    let integrand = |s: f64| -> Result<DenseMatrix> {
        let lambda = s.exp();
        let lu = ShiftedLu::new(m, c(lambda, 0.0))?;
        let once = lu.solve_mat(m)?;
        let twice = lu.solve_mat(&once)?;
        // λ^{it} dλ = e^{its} e^s ds
        Ok(twice * Complex64::from_polar(lambda, t * s))
    };
    let terms = exec.try_map(&nodes, |&(s, w)| integrand(s).map(|v| v * c(w, 0.0)))?;
    let pre = imaginary_prefactor(t);
    let value = pairwise_sum(&terms).expect("nodes") * c(pre, 0.0);
    let ends = operator_norm(&integrand(s_lo)?) + operator_norm(&integrand(s_hi)?);
    let error_estimate = pre * ends;
    if error_estimate > TOL_IMAGINARY_TAIL * operator_norm(&value).max(1.0) {
        return Err(Error::TruncationNotConverged {
            estimate: error_estimate,
            tolerance: TOL_IMAGINARY_TAIL,
        });
    }
    Ok(ContourValue {
        value,
        tail_norm: 0.0,
        error_estimate,
        nodes: nodes.len(),
    })
}

pub fn imaginary_power_auto(a: &MatrixOperator, t: f64) -> Result<DenseMatrix> {
    let n = imaginary_power_nodes(a, t)?;
    Ok(imaginary_power(a, t, n, Exec::default())?.value)
}

/// Principal logarithm `log A = ∫_0^∞ [(1+λ)^{-1} − (A+λ)^{-1}] dλ`, on the
/// same `ln λ` panels as the imaginary powers.
pub fn log_matrix(a: &MatrixOperator, exec: Exec) -> Result<DenseMatrix> {
    if a.spectral_angle() >= PI {
        return Err(Error::NotSectorialAtAngle {
            theta: 0.0,
            z: c(0.0, 0.0),
        });
    }
    let (lo, hi) = singular_range(a)?;
    let (s_lo, s_hi) = (lo.min(1.0).ln() - LOG_PADDING, hi.max(1.0).ln() + LOG_PADDING);
    let width = 0.5f64.min((PI - a.spectral_angle()) / 3.0);
    let panels = ((s_hi - s_lo) / width).ceil() as usize;
    let h = (s_hi - s_lo) / panels as f64;
    let gl = gauss_legendre(PANEL_ORDER);
    let nodes: Vec<(f64, f64)> = (0..panels)
        .flat_map(|p| {
            let mid = s_lo + h * (p as f64 + 0.5);
            gl.iter().map(move |&(x, w)| (mid + 0.5 * h * x, 0.5 * h * w))
        })
        .collect();
    let m = a.matrix();
    let n = a.dim();
    let terms = exec.try_map(&nodes, |&(s, w)| {
        let lambda = s.exp();
        let res = ShiftedLu::new(m, c(lambda, 0.0))?.inverse();
        Ok::<_, Error>((identity(n) * c(1.0 / (1.0 + lambda), 0.0) - res) * c(w * lambda, 0.0))
    })?;
    Ok(pairwise_sum(&terms).expect("nodes"))
}

/// `A^{it} = exp(it·log A)` from one logarithm; far cheaper than the direct
/// integral when many `t` are needed.
#[derive(Debug, Clone)]
pub struct ImaginaryPowers {
    log: DenseMatrix,
}

impl ImaginaryPowers {
    pub fn new(a: &MatrixOperator) -> Result<Self> {
        Ok(Self {
            log: log_matrix(a, Exec::Sequential)?,
        })
    }

    pub fn log(&self) -> &DenseMatrix {
        &self.log
    }

    pub fn at(&self, t: f64) -> Result<DenseMatrix> {
        matrix_exp(&(&self.log * c(0.0, t)))
    }
}

/// Growth bound `‖A^{it}‖ ≤ M e^{φ|t|}` fitted on a symmetric grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BipFit {
    pub m: f64,
    pub phi: f64,
    pub t_grid: Vec<f64>,
    pub norms: Vec<f64>,
}

impl BipFit {
    pub fn bound(&self, t: f64) -> f64 {
        self.m * (self.phi * t.abs()).exp()
    }
}

/// Least-squares slope of `max(log‖A^{it}‖, log‖A^{−it}‖)` against `|t|` (clamped at 0), with
/// `M ≥ 1` raised until the bound holds at every sample.
pub fn bip_fit(a: &MatrixOperator, t_max: f64, n_t: usize) -> Result<BipFit> {
    if !(t_max > 0.0 && t_max.is_finite()) || n_t < 2 {
        return Err(Error::invalid("bip_fit needs t_max > 0 and at least 2 grid points"));
    }
    let t_grid: Vec<f64> = (0..n_t)
        .map(|k| -t_max + 2.0 * t_max * k as f64 / (n_t - 1) as f64)
        .collect();
    let norms = Exec::default().try_map(&t_grid, |&t| {
        let n = imaginary_power_nodes(a, t)?;
        imaginary_power(a, t, n, Exec::Sequential).map(|v| operator_norm(&v.value))
    })?;
    let xs: Vec<f64> = t_grid.iter().map(|t| t.abs()).collect();
    // upper envelope over ±t, so one-sided growth is not averaged away
    let ys: Vec<f64> = (0..norms.len())
        .map(|k| norms[k].max(norms[norms.len() - 1 - k]).ln())
        .collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let phi = if sxx > 0.0 { (sxy / sxx).max(0.0) } else { 0.0 };
    let log_m = xs.iter().zip(&ys).map(|(x, y)| y - phi * x).fold(0.0, f64::max);
    Ok(BipFit {
        m: log_m.exp(),
        phi,
        t_grid,
        norms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{diag, diag_real};
    use approx::assert_abs_diff_eq;

    fn op(m: DenseMatrix) -> MatrixOperator {
        MatrixOperator::new(m).unwrap()
    }

    #[test]
    fn power_examples() {
        let p = complex_power_auto(&op(diag_real(&[1.0, 4.0])), c(-0.5, 0.0)).unwrap();
        assert_abs_diff_eq!(p[(0, 0)].re, 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(p[(1, 1)].re, 0.5, epsilon = 1e-8);
        assert!(p[(0, 1)].norm() < 1e-12);
        let p = complex_power_auto(&op(identity(3)), c(-0.3, 1.2)).unwrap();
        assert!((p - identity(3)).norm() < 1e-8);
        let p = complex_power_auto(&op(diag_real(&[4.0])), c(-1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(p[(0, 0)].re, 0.25, epsilon = 1e-8);
        assert_eq!(
            complex_power(&op(identity(2)), c(0.0, 0.0), &ContourSpec::graded(0.5, 1.0, 10.0, 2.0))
                .unwrap()
                .value,
            identity(2)
        );
    }

    #[test]
    fn positive_powers_compose() {
        let a = op(diag_real(&[2.0, 5.0]));
        let p = real_power(&a, 1.5).unwrap();
        assert_abs_diff_eq!(p[(1, 1)].re, 5f64.powf(1.5), epsilon = 1e-7);
        let p = real_power(&a, 2.0).unwrap();
        assert_abs_diff_eq!(p[(0, 0)].re, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn logarithm_drives_imaginary_powers() {
        let a = op(diag(&[c(2.0, 0.0), c(9.0, 3.0)]));
        let powers = ImaginaryPowers::new(&a).unwrap();
        assert_abs_diff_eq!(powers.log()[(0, 0)].re, 2f64.ln(), epsilon = 1e-12);
        for t in [-3.0, 0.7, 5.0] {
            let direct = imaginary_power_auto(&a, t).unwrap();
            assert!((powers.at(t).unwrap() - direct).norm() < 1e-9);
        }
    }

    #[test]
    fn imaginary_power_examples() {
        let p = imaginary_power_auto(&op(identity(2)), 1.0).unwrap();
        assert!((p - identity(2)).norm() < 1e-9);
        let e = std::f64::consts::E;
        let p = imaginary_power_auto(&op(diag_real(&[e])), 1.0).unwrap();
        assert_abs_diff_eq!(p[(0, 0)].re, 1f64.cos(), epsilon = 1e-7);
        assert_abs_diff_eq!(p[(0, 0)].im, 1f64.sin(), epsilon = 1e-7);
        let p = imaginary_power_auto(&op(diag(&[Complex64::from_polar(1.0, PI / 4.0)])), -1.0).unwrap();
        assert_abs_diff_eq!(p[(0, 0)].norm(), (PI / 4.0).exp(), epsilon = 1e-5);
    }

    #[test]
    fn bip_examples() {
        let fit = bip_fit(&op(diag_real(&[1.0, 2.0])), 3.0, 13).unwrap();
        assert!(fit.phi <= 0.01 && (fit.m - 1.0).abs() < 1e-6, "{fit:?}");
        let r = Complex64::from_polar(1.0, PI / 4.0);
        let fit = bip_fit(&op(diag(&[r, r.conj()])), 3.0, 13).unwrap();
        assert!((fit.phi / (PI / 4.0) - 1.0).abs() < 0.05, "{fit:?}");
        for (t, n) in fit.t_grid.iter().zip(&fit.norms) {
            assert!(*n <= fit.bound(*t) * (1.0 + 1e-12));
        }
        let fit = bip_fit(&op(identity(2)), 2.0, 9).unwrap();
        assert!(fit.phi < 1e-9 && (fit.m - 1.0).abs() < 1e-9, "{fit:?}");
    }
}

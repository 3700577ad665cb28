//! Scalar symbols on `ℂ∖Λ_θ`, their decay classes, and `f(−A)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{ratio_for_gap, RADIUS_FACTOR};
use crate::contour::{dunford, ContourSpec, ContourValue};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linops::{c, cpow, operator_norm, ShiftedLu};
use crate::report::CertificateReport;
use crate::sector::{log_radii, MatrixOperator};

pub const BUILTIN_SYMBOLS: [&str; 3] = ["sqrt-over-1minus", "cayley-squared", "rational-eta"];

/// Decay bound on `ℂ∖Λ_θ`: `H0` is `c (|λ|/(1+|λ|²))^η`, `Extended` is
/// `c |λ|^η/(1+|λ|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DecayClass {
    H0 { c: f64, eta: f64 },
    Extended { c: f64, eta: f64 },
}

impl DecayClass {
    pub fn bound(&self, lambda: Complex64) -> f64 {
        let r = lambda.norm();
        match *self {
            DecayClass::H0 { c, eta } => c * (r / (1.0 + r * r)).powf(eta),
            DecayClass::Extended { c, eta } => c * r.powf(eta) / (1.0 + r),
        }
    }

    fn validate(&self) -> Result<()> {
        let (c, eta, ok_eta) = match *self {
            DecayClass::H0 { c, eta } => (c, eta, eta > 0.0),
            DecayClass::Extended { c, eta } => (c, eta, eta > 0.0 && eta < 1.0),
        };
        if !(c > 0.0 && c.is_finite() && ok_eta) {
            return Err(Error::invalid(format!("invalid decay class c = {c}, eta = {eta}")));
        }
        Ok(())
    }
}

type Evaluator = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

#[derive(Clone)]
pub struct HolomorphicSymbol {
    pub name: String,
    pub theta: f64,
    pub class: DecayClass,
    /// Exponent κ with `|f(λ)| ~ |λ|^{-κ}` at infinity; enables tail
    /// extrapolation of `f(−A)`.
    pub decay: Option<Complex64>,
    evaluator: Evaluator,
}

impl fmt::Debug for HolomorphicSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HolomorphicSymbol")
            .field("name", &self.name)
            .field("theta", &self.theta)
            .field("class", &self.class)
            .field("decay", &self.decay)
            .finish()
    }
}

impl HolomorphicSymbol {
    pub fn new(
        name: impl Into<String>,
        theta: f64,
        class: DecayClass,
        decay: Option<Complex64>,
        evaluator: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(theta > 0.0 && theta < PI) {
            return Err(Error::invalid(format!("symbol angle {theta} must lie in (0, pi)")));
        }
        class.validate()?;
        Ok(Self {
            name: name.into(),
            theta,
            class,
            decay,
            evaluator: Arc::new(evaluator),
        })
    }

    pub fn eval(&self, lambda: Complex64) -> Complex64 {
        (self.evaluator)(lambda)
    }
}

/// `1/(1 − cos θ)`, the sup of `(1+|λ|²)/|1−λ|²` off `Λ_θ` for `θ ≤ π/2`.
fn pole_factor(theta: f64) -> f64 {
    (1.0 / (1.0 - theta.cos())).max(1.0)
}

/// Builtin symbols, holomorphic off `[0, ∞)`:
/// - `sqrt-over-1minus`: `(−λ)^{1/2}/(1−λ)`, `H0` with `η = 1/2`
/// - `cayley-squared`: `−λ/(1−λ)²`, `H0` with `η = 1`
/// - `rational-eta`: `(−λ)^{1/4}/(1−λ)^{1/2}`, `H0` with `η = 1/4`
///
/// The constants are the exact suprema of `|f|/bound` on `ℂ∖Λ_θ`.
pub fn builtin_symbol(name: &str, theta: f64) -> Result<HolomorphicSymbol> {
    let slack = 1.0 + 1e-9;
    let k = pole_factor(theta);
    let one = c(1.0, 0.0);
    match name {
        "sqrt-over-1minus" => HolomorphicSymbol::new(
            name,
            theta,
            DecayClass::H0 {
                c: k.sqrt() * slack,
                eta: 0.5,
            },
            Some(c(0.5, 0.0)),
            move |l| cpow(-l, c(0.5, 0.0)) / (one - l),
        ),
        "cayley-squared" => HolomorphicSymbol::new(
            name,
            theta,
            DecayClass::H0 { c: k * slack, eta: 1.0 },
            Some(c(1.0, 0.0)),
            move |l| -l / ((one - l) * (one - l)),
        ),
        "rational-eta" => HolomorphicSymbol::new(
            name,
            theta,
            DecayClass::H0 {
                c: k.powf(0.25) * slack,
                eta: 0.25,
            },
            Some(c(0.25, 0.0)),
            move |l| cpow(-l, c(0.25, 0.0)) / cpow(one - l, c(0.5, 0.0)),
        ),
        other => Err(Error::invalid(format!(
            "unknown symbol {other:?}; builtins are {BUILTIN_SYMBOLS:?}"
        ))),
    }
}

/// Log-polar grid on `ℂ∖Λ_θ`: radii in `[1e-8, 1e8]`, angles in `[θ, π]`
/// on both half planes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolSampling {
    pub radii: usize,
    pub angles: usize,
    pub r_min: f64,
    pub r_max: f64,
}

impl Default for SymbolSampling {
    fn default() -> Self {
        Self {
            radii: 161,
            angles: 33,
            r_min: 1e-8,
            r_max: 1e8,
        }
    }
}

impl SymbolSampling {
    pub fn points(&self, theta: f64) -> Vec<Complex64> {
        let radii = log_radii(self.r_min, self.r_max, self.radii.max(1));
        let m = self.angles.max(2);
        let mut pts = Vec::with_capacity(2 * m * radii.len());
        for j in 0..m {
            let phi = theta + (PI - theta) * j as f64 / (m - 1) as f64;
            for &r in &radii {
                pts.push(Complex64::from_polar(r, phi));
                if j + 1 < m {
                    pts.push(Complex64::from_polar(r, -phi));
                }
            }
        }
        pts
    }
}

/// Sampled `sup |f|` over `ℂ∖Λ_θ`.
pub fn sampled_sup(f: &HolomorphicSymbol, sampling: &SymbolSampling) -> f64 {
    sampling
        .points(f.theta)
        .iter()
        .map(|&l| f.eval(l).norm())
        .fold(0.0, f64::max)
}

pub fn symbol_class_check(f: &HolomorphicSymbol, sampling: &SymbolSampling) -> Result<CertificateReport> {
    let pts = sampling.points(f.theta);
    let mut worst = (0.0f64, pts[0], 0.0, 0.0);
    let mut sup = 0.0f64;
    for &l in &pts {
        let value = f.eval(l).norm();
        if !value.is_finite() {
            return Err(Error::ClassViolated {
                lambda: l,
                value,
                bound: f.class.bound(l),
            });
        }
        sup = sup.max(value);
        let bound = f.class.bound(l);
        let ratio = value / bound;
        if ratio > worst.0 {
            worst = (ratio, l, value, bound);
        }
    }
    if worst.0 > 1.0 {
        return Err(Error::ClassViolated {
            lambda: worst.1,
            value: worst.2,
            bound: worst.3,
        });
    }
    Ok(CertificateReport::new(
        "symbol-class-check",
        json!({"symbol": f.name, "theta": f.theta, "class": f.class, "sampling": sampling}),
    )
    .nodes("samples", pts.len())
    .output("worst_ratio", worst.0)
    .output("worst_lambda", [worst.1.re, worst.1.im])
    .output("sampled_sup", sup))
}

/// `f(−A) = (1/2πi) ∫_{Γ_θ} f(λ)(A+λ)^{-1} dλ` on the contour `spec`
/// (through the origin, angle `θ ≥ f.theta`).
pub fn hinf_apply(f: &HolomorphicSymbol, a: &MatrixOperator, spec: &ContourSpec) -> Result<ContourValue> {
    symbol_class_check(f, &SymbolSampling::default())?;
    if spec.theta < f.theta {
        return Err(Error::AngleOutOfRange {
            theta: spec.theta,
            limit: f.theta,
        });
    }
    let limit = a.admissible_angle();
    if spec.theta >= limit {
        return Err(Error::AngleOutOfRange {
            theta: spec.theta,
            limit,
        });
    }
    let mut spec = spec.clone();
    if spec.decay.is_none() {
        spec.decay = f.decay;
    }
    let m = a.matrix();
    dunford(&spec, |l| Ok(ShiftedLu::new(m, l)?.inverse() * f.eval(l)))
}

/// `f(−A)` on `Γ_θ` with `θ = f.theta`.
pub fn hinf_apply_auto(f: &HolomorphicSymbol, a: &MatrixOperator, exec: Exec) -> Result<ContourValue> {
    let psi = a.spectral_angle();
    let gap = f.theta.min(PI - psi - f.theta);
    let radius = RADIUS_FACTOR * operator_norm(a.matrix()).max(1.0);
    let spec = ContourSpec::graded(0.0, f.theta, radius, ratio_for_gap(gap)).with_exec(exec);
    hinf_apply(f, a, &spec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HinfConstant {
    pub c_hat: f64,
    /// `(name, ‖f(−A)‖, sampled sup |f|)` per family member.
    pub members: Vec<(String, f64, f64)>,
}

/// `Ĉ_A = max_f ‖f(−A)‖ / sup|f|` over the family, each symbol taken at
/// angle `theta`.
pub fn hinf_constant(a: &MatrixOperator, theta: f64, family: &[HolomorphicSymbol]) -> Result<HinfConstant> {
    if family.is_empty() {
        return Err(Error::invalid("symbol family is empty"));
    }
    let sampling = SymbolSampling::default();
    let mut members = Vec::new();
    let mut c_hat = 0.0f64;
    for f in family {
        let f = HolomorphicSymbol { theta, ..f.clone() };
        let value = hinf_apply_auto(&f, a, Exec::default())?;
        let norm = operator_norm(&value.value);
        let sup = sampled_sup(&f, &sampling);
        c_hat = c_hat.max(norm / sup);
        members.push((f.name.clone(), norm, sup));
    }
    Ok(HinfConstant { c_hat, members })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::diag_real;
    use approx::assert_abs_diff_eq;

    #[test]
    fn class_check_examples() {
        let f = HolomorphicSymbol::new("cayley", PI / 2.0, DecayClass::H0 { c: 1.1, eta: 1.0 }, None, |l| {
            -l / ((c(1.0, 0.0) - l) * (c(1.0, 0.0) - l))
        })
        .unwrap();
        assert!(symbol_class_check(&f, &SymbolSampling::default()).is_ok());
        let one = HolomorphicSymbol::new("one", PI / 2.0, DecayClass::H0 { c: 10.0, eta: 0.5 }, None, |_| {
            c(1.0, 0.0)
        })
        .unwrap();
        assert!(matches!(
            symbol_class_check(&one, &SymbolSampling::default()),
            Err(Error::ClassViolated { .. })
        ));
        for name in BUILTIN_SYMBOLS {
            for theta in [0.3, PI / 4.0, PI / 2.0, 2.5] {
                let f = builtin_symbol(name, theta).unwrap();
                symbol_class_check(&f, &SymbolSampling::default()).unwrap();
            }
        }
    }

    #[test]
    fn scalar_residues() {
        let a = MatrixOperator::new(diag_real(&[1.0])).unwrap();
        let f = builtin_symbol("sqrt-over-1minus", PI / 4.0).unwrap();
        let v = hinf_apply_auto(&f, &a, Exec::Sequential).unwrap().value;
        assert_abs_diff_eq!(v[(0, 0)].re, 0.5, epsilon = 1e-7);
        let f = builtin_symbol("cayley-squared", PI / 4.0).unwrap();
        let v = hinf_apply_auto(&f, &a, Exec::Sequential).unwrap().value;
        assert_abs_diff_eq!(v[(0, 0)].re, 0.25, epsilon = 1e-7);
        let a = MatrixOperator::new(diag_real(&[1.0, 4.0])).unwrap();
        let f = builtin_symbol("sqrt-over-1minus", PI / 4.0).unwrap();
        let v = hinf_apply_auto(&f, &a, Exec::Sequential).unwrap().value;
        assert_abs_diff_eq!(v[(1, 1)].re, 0.4, epsilon = 1e-7);
        assert!(v[(0, 1)].norm() < 1e-10);
    }

    #[test]
    fn empty_family_is_rejected() {
        let a = MatrixOperator::new(diag_real(&[1.0])).unwrap();
        assert!(matches!(hinf_constant(&a, 1.0, &[]), Err(Error::InvalidInput(_))));
    }
}

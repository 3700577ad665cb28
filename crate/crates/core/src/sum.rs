//! Inverse of `A + B` for resolvent-commuting sectorial pairs via
//! `𝒦 = (1/2πi) ∫_{Γ} (A−z)^{-1}(B+z)^{-1} dz`, the weighted contour
//! identities for `A𝒦A^w` and `A𝒦B^w`, their radial splitting, and
//! closedness certificates.

use std::f64::consts::{E, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::calculus::{complex_power_auto, ratio_for_gap, real_power, RADIUS_FACTOR};
use crate::contour::{
    build_nodes, gauss_legendre, integrate, ContourSpec, ContourValue, PathLayout, TailPolicy, DEFAULT_TOL_TAIL,
    PANEL_ORDER,
};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linops::{c, commutator, cpow, identity, operator_norm, pairwise_sum, DenseMatrix, ShiftedLu, VectorE};
use crate::report::CertificateReport;
use crate::sector::MatrixOperator;

pub const DEFAULT_COMMUTE_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_PROBE_SEED: u64 = 0x5eed_cafe;
pub const RANDOM_PROBES: usize = 16;

/// `‖[(A+λ)^{-1}, (B+μ)^{-1}]‖`.
pub fn resolvent_commute_check(a: &DenseMatrix, b: &DenseMatrix, lambda: Complex64, mu: Complex64) -> Result<f64> {
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            actual: b.nrows(),
        });
    }
    let ra = ShiftedLu::new(a, lambda)?.inverse();
    let rb = ShiftedLu::new(b, mu)?.inverse();
    Ok(operator_norm(&commutator(&ra, &rb)))
}

#[derive(Debug, Clone)]
pub struct CommutingPair {
    pub a: MatrixOperator,
    pub b: MatrixOperator,
    pub theta_a: f64,
    pub theta_b: f64,
    pub commute_tolerance: f64,
    pub commutator_norm: f64,
}

fn resolvable_shift(m: &DenseMatrix) -> Complex64 {
    if ShiftedLu::new(m, c(1.0, 0.0)).is_ok() {
        c(1.0, 0.0)
    } else {
        c(1.0 + 2.0 * operator_norm(m), 0.0)
    }
}

impl CommutingPair {
    pub fn new(
        a: MatrixOperator,
        b: MatrixOperator,
        theta_a: f64,
        theta_b: f64,
        commute_tolerance: f64,
    ) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                actual: b.dim(),
            });
        }
        for (name, theta) in [("theta_a", theta_a), ("theta_b", theta_b)] {
            if !(theta > 0.0 && theta < PI) {
                return Err(Error::invalid(format!("{name} = {theta} must lie in (0, pi)")));
            }
        }
        if theta_a + theta_b <= PI {
            return Err(Error::invalid(format!(
                "angles must satisfy theta_a + theta_b > pi, got {}",
                theta_a + theta_b
            )));
        }
        for (op, theta) in [(&a, theta_a), (&b, theta_b)] {
            let limit = op.admissible_angle();
            if theta >= limit && op.certified().is_none_or(|s| theta > s.theta) {
                return Err(Error::NotSectorialAtAngle { theta, z: c(0.0, 0.0) });
            }
        }
        let norm = resolvent_commute_check(
            a.matrix(),
            b.matrix(),
            resolvable_shift(a.matrix()),
            resolvable_shift(b.matrix()),
        )?;
        if norm > commute_tolerance {
            return Err(Error::invalid(format!(
                "resolvents do not commute: commutator norm {norm:.3e} exceeds {commute_tolerance:.3e}"
            )));
        }
        Ok(Self {
            a,
            b,
            theta_a,
            theta_b,
            commute_tolerance,
            commutator_norm: norm,
        })
    }

    /// Angles `π − ψ − m` with `m` a quarter of the spectral slack
    /// `π − ψ_A − ψ_B`.
    pub fn from_spectra(a: MatrixOperator, b: MatrixOperator, commute_tolerance: f64) -> Result<Self> {
        let (pa, pb) = (a.spectral_angle(), b.spectral_angle());
        let slack = PI - pa - pb;
        if slack <= 0.0 {
            return Err(Error::invalid(format!(
                "spectral angles {pa} + {pb} leave no room for theta_a + theta_b > pi"
            )));
        }
        let m = slack / 4.0;
        Self::new(a, b, PI - pa - m, PI - pb - m, commute_tolerance)
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    fn scale(&self) -> f64 {
        operator_norm(self.a.matrix())
            .max(operator_norm(self.b.matrix()))
            .max(1.0)
    }

    /// Contour angle between `σ(A)` and `−σ(B)`: the midpoint of
    /// `(π − θ_A, θ_B)`, with the panel ratio set by the distance to the
    /// actual spectra.
    pub fn sum_angle(&self) -> (f64, f64) {
        let alpha = 0.5 * (PI - self.theta_a + self.theta_b);
        let gap = (alpha - self.a.spectral_angle()).min(PI - self.b.spectral_angle() - alpha);
        (alpha, gap)
    }

    /// Angle for the reflected contour in `A𝒦A^w`: midpoint of
    /// `(π − θ_B, θ_A)`.
    pub fn reflected_angle(&self) -> (f64, f64) {
        let alpha = 0.5 * (PI - self.theta_b + self.theta_a);
        let gap = (alpha - self.b.spectral_angle()).min(PI - self.a.spectral_angle() - alpha);
        (alpha, gap)
    }
}

/// The default contour for `𝒦`: rays through the origin at
/// [`CommutingPair::sum_angle`].
pub fn sum_contour(pair: &CommutingPair) -> ContourSpec {
    let (alpha, gap) = pair.sum_angle();
    ContourSpec::graded(0.0, alpha, RADIUS_FACTOR * pair.scale(), ratio_for_gap(gap)).with_decay(c(1.0, 0.0))
}

/// Default `δ`/`ε` for shifted contours: `0.05·min(1, dist)`, with `dist`
/// the smallest eigenvalue modulus of `A` and `B`.
pub fn default_shift(pair: &CommutingPair) -> f64 {
    let dist = pair
        .a
        .eigenvalues()
        .into_iter()
        .chain(pair.b.eigenvalues())
        .map(|z| z.norm())
        .fold(f64::INFINITY, f64::min);
    0.05 * dist.min(1.0)
}

#[derive(Debug, Clone)]
pub struct SumInverse {
    pub k: DenseMatrix,
    /// `‖𝒦(A+B) − I‖`.
    pub residual_left: f64,
    /// `‖(A+B)𝒦 − I‖`.
    pub residual_right: f64,
    pub error_estimate: f64,
    pub nodes: usize,
    pub spec: ContourSpec,
}

fn sum_integrand<'a>(
    a: &'a DenseMatrix,
    b: &'a DenseMatrix,
) -> impl Fn(Complex64) -> Result<DenseMatrix> + Sync + Send + 'a {
    move |z| {
        let rb = ShiftedLu::new(b, z)?.inverse();
        ShiftedLu::new(a, -z)?.solve_mat(&rb)
    }
}

pub fn sum_inverse(pair: &CommutingPair, spec: &ContourSpec) -> Result<SumInverse> {
    let (a, b) = (pair.a.matrix(), pair.b.matrix());
    let nodes = build_nodes(spec)?;
    // every node must be resolvable for both factors before integrating
    for node in &nodes {
        ShiftedLu::new(a, -node.lambda)?;
        ShiftedLu::new(b, node.lambda)?;
    }
    let mut spec = spec.clone();
    spec.decay.get_or_insert(c(1.0, 0.0));
    let v = crate::contour::dunford(&spec, sum_integrand(a, b))?;
    let sum = a + b;
    let eye = identity(pair.dim());
    Ok(SumInverse {
        residual_left: operator_norm(&(&v.value * &sum - &eye)),
        residual_right: operator_norm(&(&sum * &v.value - &eye)),
        k: v.value,
        error_estimate: v.error_estimate,
        nodes: v.nodes,
        spec,
    })
}

pub fn sum_inverse_auto(pair: &CommutingPair) -> Result<SumInverse> {
    sum_inverse(pair, &sum_contour(pair))
}

#[derive(Debug, Clone)]
pub struct WeightedIdentity {
    pub lhs: DenseMatrix,
    pub rhs: DenseMatrix,
    pub diff: f64,
}

fn check_weight(w: Complex64) -> Result<()> {
    if !(w.re < 0.0 && w.re > -1.0) || !w.im.is_finite() {
        return Err(Error::invalid(format!("weight {w} must satisfy -1 < Re w < 0")));
    }
    Ok(())
}

fn min_modulus(op: &MatrixOperator) -> f64 {
    op.eigenvalues().iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min)
}

/// Reflected contour `−Γ_{ρ,α}` for the `A𝒦A^w` identity.
pub fn left_identity_contour(pair: &CommutingPair) -> ContourSpec {
    let (alpha, gap) = pair.reflected_angle();
    let rho = 0.5 * min_modulus(&pair.a);
    ContourSpec::graded(rho, alpha, RADIUS_FACTOR * pair.scale(), ratio_for_gap(gap)).reflect()
}

/// Contour `Γ_{ρ,α}` for the `A𝒦B^w` identity.
pub fn right_identity_contour(pair: &CommutingPair) -> ContourSpec {
    let (alpha, gap) = pair.sum_angle();
    let rho = 0.5 * min_modulus(&pair.b);
    ContourSpec::graded(rho, alpha, RADIUS_FACTOR * pair.scale(), ratio_for_gap(gap))
}

/// `A𝒦A^w` against `(1/2πi) ∫_{−Γ_{ρ,θ}} (A−λ)^{-1}(B+λ)^{-1} λ^{1+w} dλ`.
/// `spec` defaults to [`left_identity_contour`] and must be reflected.
pub fn weighted_identity_left(
    pair: &CommutingPair,
    w: Complex64,
    spec: Option<&ContourSpec>,
) -> Result<WeightedIdentity> {
    check_weight(w)?;
    let spec = spec.cloned().unwrap_or_else(|| left_identity_contour(pair));
    if !spec.reflected {
        return Err(Error::InvalidContour(
            "the A-weighted identity integrates over a reflected contour".into(),
        ));
    }
    let (a, b) = (pair.a.matrix(), pair.b.matrix());
    let k = sum_inverse_auto(pair)?.k;
    let lhs = a * k * complex_power_auto(&pair.a, w)?;
    let spec = spec.with_decay(-w);
    let one_w = c(1.0, 0.0) + w;
    let rhs = crate::contour::dunford(&spec, |mu| {
        let rb = ShiftedLu::new(b, mu)?.inverse();
        Ok(ShiftedLu::new(a, -mu)?.solve_mat(&rb)? * cpow(mu, one_w))
    })?
    .value;
    let diff = operator_norm(&(&lhs - &rhs));
    Ok(WeightedIdentity { lhs, rhs, diff })
}

/// `A𝒦B^w` against `B^w − (1/2πi) ∫_{Γ_{ρ,θ}} (A−λ)^{-1}(B+λ)^{-1}(−λ)^{1+w} dλ`.
pub fn weighted_identity_right(
    pair: &CommutingPair,
    w: Complex64,
    spec: Option<&ContourSpec>,
) -> Result<WeightedIdentity> {
    check_weight(w)?;
    let spec = spec.cloned().unwrap_or_else(|| right_identity_contour(pair));
    if spec.reflected {
        return Err(Error::InvalidContour(
            "the B-weighted identity integrates over an unreflected contour".into(),
        ));
    }
    let (a, b) = (pair.a.matrix(), pair.b.matrix());
    let k = sum_inverse_auto(pair)?.k;
    let bw = complex_power_auto(&pair.b, w)?;
    let lhs = a * k * &bw;
    let spec = spec.with_decay(-w);
    let one_w = c(1.0, 0.0) + w;
    let integral = crate::contour::dunford(&spec, |l| {
        let rb = ShiftedLu::new(b, l)?.inverse();
        Ok(ShiftedLu::new(a, -l)?.solve_mat(&rb)? * cpow(-l, one_w))
    })?
    .value;
    let rhs = bw - integral;
    let diff = operator_norm(&(&lhs - &rhs));
    Ok(WeightedIdentity { lhs, rhs, diff })
}

/// Which weighted identity is split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitVariant {
    /// `A𝒦A^{−θ+it}` over `−Γ` with the factor `A^φ` inside.
    Left,
    /// `A𝒦B^{−θ+it} − B^{−θ+it}` over `Γ` with the factor `B^φ` inside.
    Right,
}

#[derive(Debug, Clone)]
pub struct SplitPieces {
    /// `|λ| ≤ 1`.
    pub inner: DenseMatrix,
    /// `1 < |λ| < e^n`.
    pub middle: DenseMatrix,
    /// `|λ| ≥ e^n`, including the extrapolated tail.
    pub outer: DenseMatrix,
    /// `B^{−θ+it}` for the right variant, zero for the left.
    pub extra: DenseMatrix,
    pub angle: f64,
    pub nodes: usize,
}

impl SplitPieces {
    pub fn total(&self) -> DenseMatrix {
        &self.inner + &self.middle + &self.outer + &self.extra
    }
}

fn check_split(theta: f64, phi: f64) -> Result<()> {
    if !(theta > 0.0 && theta < 1.0 && phi > 0.0 && phi < 1.0 && theta + phi < 1.0) {
        return Err(Error::invalid(format!(
            "need 0 < theta, phi < 1 and theta + phi < 1, got {theta}, {phi}"
        )));
    }
    Ok(())
}

/// Contour angle used by the split evaluation of `variant`.
pub fn split_angle(pair: &CommutingPair, variant: SplitVariant) -> (f64, f64) {
    match variant {
        SplitVariant::Left => pair.reflected_angle(),
        SplitVariant::Right => pair.sum_angle(),
    }
}

/// Evaluates the weighted identity with `w = −(θ+φ)+it` on a contour through
/// the origin, split radially at 1 and `e^n`.
pub fn split_integral_eval(
    pair: &CommutingPair,
    variant: SplitVariant,
    theta: f64,
    phi: f64,
    t: f64,
    n: u32,
    exec: Exec,
) -> Result<SplitPieces> {
    check_split(theta, phi)?;
    let (angle, gap) = split_angle(pair, variant);
    let ratio = ratio_for_gap(gap);
    let s = c(1.0 - theta - phi, t);
    let (a, b) = (pair.a.matrix(), pair.b.matrix());
    let dim = pair.dim();
    let en = (n as f64).exp();
    let radius = RADIUS_FACTOR * pair.scale().max(en);
    let breaks: Vec<f64> = (1..n).map(|k| (k as f64).exp()).collect();

    let (weight, extra, sign, reflected) = match variant {
        SplitVariant::Left => (real_power(&pair.a, phi)?, DenseMatrix::zeros(dim, dim), 1.0, true),
        SplitVariant::Right => (
            real_power(&pair.b, phi)?,
            complex_power_auto(&pair.b, c(-theta, t))?,
            -1.0,
            false,
        ),
    };
    let integrand = |l: Complex64| -> Result<DenseMatrix> {
        let rb = ShiftedLu::new(b, l)?.solve_mat(&weight)?;
        let m = ShiftedLu::new(a, -l)?.solve_mat(&rb)?;
        let p = if reflected { cpow(l, s) } else { cpow(-l, s) };
        Ok(m * (p * sign))
    };
    let piece = |lo: f64, hi: f64, policy: TailPolicy| -> Result<ContourValue> {
        let mut layout = PathLayout::band(angle, lo, hi, &breaks, ratio)?;
        layout.reflected = reflected;
        layout.truncated = matches!(policy, TailPolicy::Extrapolate { .. });
        integrate(&layout, policy, exec, integrand)
    };
    let inner = piece(0.0, 1.0, TailPolicy::None)?;
    let middle = if n == 0 {
        ContourValue {
            value: DenseMatrix::zeros(dim, dim),
            tail_norm: 0.0,
            error_estimate: 0.0,
            nodes: 0,
        }
    } else {
        piece(1.0, en, TailPolicy::None)?
    };
    let outer = piece(
        en,
        radius,
        TailPolicy::Extrapolate {
            kappa: c(1.0, 0.0) - s,
            terms: crate::contour::DEFAULT_TAIL_TERMS,
            tol: DEFAULT_TOL_TAIL,
        },
    )?;
    Ok(SplitPieces {
        nodes: inner.nodes + middle.nodes + outer.nodes,
        inner: inner.value,
        middle: middle.value,
        outer: outer.value,
        extra,
        angle,
    })
}

/// Prefactors `(C(t), C̃(t))` of the upper and lower ray integrals at
/// contour angle `ϑ`:
/// `C = e^{iϑ} e^{i(π−ϑ)(θ+φ)} e^{(π−ϑ)t}/(2πi)`,
/// `C̃ = e^{−iϑ} e^{i(ϑ−π)(θ+φ)} e^{(ϑ−π)t}/(2πi)`.
pub fn eadic_constants(angle: f64, theta: f64, phi: f64, t: f64) -> (Complex64, Complex64) {
    let two_pi_i = c(0.0, 2.0 * PI);
    let tp = theta + phi;
    let up = Complex64::from_polar(((PI - angle) * t).exp(), angle + (PI - angle) * tp) / two_pi_i;
    let down = Complex64::from_polar(((angle - PI) * t).exp(), -angle + (angle - PI) * tp) / two_pi_i;
    (up, down)
}

/// One summand of the e-adic sum at `x ∈ [1, e]`, split into its operator
/// part `(A − xe^k e^{±iϑ})^{-1} 𝓑^±_{φ,k}(x)` and its scalar factor
/// `x^{1−θ+it} e^{(1−θ)k} e^{ikt} e^{±iϑ}`.
#[derive(Debug, Clone)]
pub struct EadicTerm {
    pub operator: DenseMatrix,
    pub factor: Complex64,
}

impl EadicTerm {
    pub fn value(&self) -> DenseMatrix {
        &self.operator * self.factor
    }
}

/// `𝓑^±_{φ,k}(x) = (x^{-1}e^{-k}B)^φ (x^{-1}e^{-k}B + e^{±iϑ})^{-1}` given
/// `B^φ`.
fn b_factor(b: &DenseMatrix, b_phi: &DenseMatrix, phi: f64, scale: f64, rot: Complex64) -> Result<DenseMatrix> {
    let scaled = b / c(scale, 0.0);
    let res = ShiftedLu::new(&scaled, rot)?.inverse();
    Ok(b_phi * res * c(scale.powf(-phi), 0.0))
}

#[allow(clippy::too_many_arguments)]
pub fn eadic_term(
    pair: &CommutingPair,
    b_phi: &DenseMatrix,
    angle: f64,
    theta: f64,
    phi: f64,
    t: f64,
    k: u32,
    x: f64,
    upper: bool,
) -> Result<EadicTerm> {
    let rot = Complex64::from_polar(1.0, if upper { angle } else { -angle });
    let ek = (k as f64).exp();
    let bf = b_factor(pair.b.matrix(), b_phi, phi, x * ek, rot)?;
    let operator = ShiftedLu::new(pair.a.matrix(), -rot * (x * ek))?.solve_mat(&bf)?;
    let factor = cpow(c(x, 0.0), c(1.0 - theta, t))
        * ((1.0 - theta) * k as f64).exp()
        * Complex64::from_polar(1.0, k as f64 * t)
        * rot;
    Ok(EadicTerm { operator, factor })
}

/// The middle piece of the right split as
/// `C Σ_k ∫_1^e (…)^+ dx/x − C̃ Σ_k ∫_1^e (…)^− dx/x`, integrated with
/// uniform Gauss–Legendre panels in `x`.
pub fn eadic_middle_eval(pair: &CommutingPair, theta: f64, phi: f64, t: f64, n: u32) -> Result<DenseMatrix> {
    check_split(theta, phi)?;
    let dim = pair.dim();
    if n == 0 {
        return Ok(DenseMatrix::zeros(dim, dim));
    }
    let (angle, _) = split_angle(pair, SplitVariant::Right);
    let (cu, cd) = eadic_constants(angle, theta, phi, t);
    let b_phi = real_power(&pair.b, phi)?;
    let panels = 8;
    let h = (E - 1.0) / panels as f64;
    let gl = gauss_legendre(PANEL_ORDER);
    let nodes: Vec<(f64, f64)> = (0..panels)
        .flat_map(|p| {
            let mid = 1.0 + h * (p as f64 + 0.5);
            gl.iter().map(move |&(u, w)| (mid + 0.5 * h * u, 0.5 * h * w))
        })
        .collect();
    let terms = Exec::default().try_map(&nodes, |&(x, w)| {
        let mut acc = DenseMatrix::zeros(dim, dim);
        for k in 0..n {
            let up = eadic_term(pair, &b_phi, angle, theta, phi, t, k, x, true)?;
            let down = eadic_term(pair, &b_phi, angle, theta, phi, t, k, x, false)?;
            acc += up.value() * cu - down.value() * cd;
        }
        Ok::<_, Error>(acc * c(w / x, 0.0))
    })?;
    Ok(pairwise_sum(&terms).expect("nodes"))
}

/// Canonical basis plus `RANDOM_PROBES` seeded random unit vectors.
pub fn default_probes(dim: usize, seed: u64) -> Vec<VectorE> {
    let mut probes: Vec<VectorE> = (0..dim)
        .map(|j| VectorE::from_fn(dim, |i, _| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) }))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RANDOM_PROBES {
        let v = VectorE::from_fn(dim, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let norm = v.norm();
        probes.push(v / c(norm, 0.0));
    }
    probes
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosednessCertificate {
    pub c_ab: f64,
    pub probe_count: usize,
    pub residual_k: f64,
    /// `(θ, max_u ‖A𝒦B^{−θ}u‖/‖u‖)` on the requested grid.
    pub theta_values: Vec<(f64, f64)>,
    pub contour: ContourSpec,
    pub nodes: usize,
}

impl ClosednessCertificate {
    pub fn report(&self, seed: Option<u64>) -> CertificateReport {
        let mut r = CertificateReport::new(
            "closedness-certificate",
            json!({"contour": self.contour, "probes": self.probe_count}),
        )
        .nodes("contour", self.nodes)
        .nodes("probes", self.probe_count)
        .output("c_ab", self.c_ab)
        .output("residual_k", self.residual_k)
        .output("theta_values", &self.theta_values);
        if let Some(s) = seed {
            r = r.with_seed(s);
        }
        r
    }
}

pub fn closedness_certificate(
    pair: &CommutingPair,
    probes: &[VectorE],
    theta_grid: &[f64],
) -> Result<ClosednessCertificate> {
    if probes.is_empty() {
        return Err(Error::invalid("no probe vectors"));
    }
    for p in probes {
        crate::linops::check_vector(p, pair.dim())?;
        if p.norm() == 0.0 {
            return Err(Error::invalid("probe vectors must be nonzero"));
        }
    }
    let inv = sum_inverse_auto(pair)?;
    let ak = pair.a.matrix() * &inv.k;
    let ratio = |m: &DenseMatrix| probes.iter().map(|v| (m * v).norm() / v.norm()).fold(0.0, f64::max);
    let c_ab = ratio(&ak);
    let mut theta_values = Vec::with_capacity(theta_grid.len());
    for &theta in theta_grid {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::invalid(format!("grid angle {theta} must lie in (0, 1)")));
        }
        let bt = complex_power_auto(&pair.b, c(-theta, 0.0))?;
        theta_values.push((theta, ratio(&(&ak * bt))));
    }
    Ok(ClosednessCertificate {
        c_ab,
        probe_count: probes.len(),
        residual_k: inv.residual_left.max(inv.residual_right),
        theta_values,
        contour: inv.spec,
        nodes: inv.nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::diag_real;
    use approx::assert_abs_diff_eq;

    fn pair(a: &[f64], b: &[f64]) -> CommutingPair {
        CommutingPair::from_spectra(
            MatrixOperator::new(diag_real(a)).unwrap(),
            MatrixOperator::new(diag_real(b)).unwrap(),
            DEFAULT_COMMUTE_TOLERANCE,
        )
        .unwrap()
    }

    fn jordan(d: f64, off_upper: bool) -> DenseMatrix {
        let mut m = diag_real(&[d, d]);
        if off_upper {
            m[(0, 1)] = c(1.0, 0.0);
        } else {
            m[(1, 0)] = c(1.0, 0.0);
        }
        m
    }

    #[test]
    fn commute_check_examples() {
        let one = c(1.0, 0.0);
        assert_eq!(
            resolvent_commute_check(&diag_real(&[1.0, 2.0]), &diag_real(&[3.0, 4.0]), one, one).unwrap(),
            0.0
        );
        let a = jordan(2.0, true);
        let b = &a + identity(2);
        assert!(resolvent_commute_check(&a, &b, one, one).unwrap() <= 1e-12);
        assert!(resolvent_commute_check(&a, &jordan(2.0, false), one, one).unwrap() > 0.01);
    }

    #[test]
    fn sum_inverse_examples() {
        let k = sum_inverse_auto(&pair(&[1.0, 1.0], &[1.0, 1.0])).unwrap();
        assert!((k.k - identity(2) * c(0.5, 0.0)).norm() < 1e-9);
        let k = sum_inverse_auto(&pair(&[1.0, 2.0], &[3.0, 4.0])).unwrap();
        assert_abs_diff_eq!(k.k[(0, 0)].re, 0.25, epsilon = 1e-8);
        assert_abs_diff_eq!(k.k[(1, 1)].re, 1.0 / 6.0, epsilon = 1e-8);
        assert!(k.residual_left < 1e-8 && k.residual_right < 1e-8);
    }

    #[test]
    fn identities_on_diagonal_pair() {
        let p = pair(&[1.0, 2.0], &[3.0, 4.0]);
        let l = weighted_identity_left(&p, c(-0.5, 0.0), None).unwrap();
        assert!(l.diff <= 1e-6, "{}", l.diff);
        assert_abs_diff_eq!(l.lhs[(1, 1)].re, 2.0 / 6.0 * 2f64.powf(-0.5), epsilon = 1e-8);
        let r = weighted_identity_right(&p, c(-0.5, 0.0), None).unwrap();
        assert!(r.diff <= 1e-6, "{}", r.diff);
        let p = pair(&[1.0], &[1.0]);
        assert!(weighted_identity_left(&p, c(0.0, 1.0), None).is_err());
    }

    #[test]
    fn split_pieces_resum() {
        let p = pair(&[1.0, 2.0], &[3.0, 4.0]);
        let pieces = split_integral_eval(&p, SplitVariant::Left, 0.25, 0.25, 0.0, 3, Exec::Sequential).unwrap();
        let reference = weighted_identity_left(&p, c(-0.25, 0.0), None).unwrap().rhs;
        assert!((pieces.total() - reference).norm() < 1e-7);
        let pieces = split_integral_eval(&p, SplitVariant::Right, 0.25, 0.25, 0.5, 0, Exec::Sequential).unwrap();
        assert_eq!(pieces.middle, DenseMatrix::zeros(2, 2));
        let reference = weighted_identity_right(&p, c(-0.25, 0.5), None).unwrap().lhs;
        assert!((pieces.total() - reference).norm() < 1e-7);
    }

    #[test]
    fn eadic_matches_direct_middle() {
        let p = pair(&[1.0, 2.0], &[3.0, 4.0]);
        for n in [1, 4] {
            let direct = split_integral_eval(&p, SplitVariant::Right, 0.25, 0.25, 0.5, n, Exec::Sequential)
                .unwrap()
                .middle;
            let eadic = eadic_middle_eval(&p, 0.25, 0.25, 0.5, n).unwrap();
            assert!((direct - eadic).norm() <= 1e-8);
        }
    }

    #[test]
    fn certificate_examples() {
        let cert = closedness_certificate(&pair(&[1.0], &[1.0]), &default_probes(1, 1), &[0.1]).unwrap();
        assert_abs_diff_eq!(cert.c_ab, 0.5, epsilon = 1e-9);
        let p = pair(&[1.0, 100.0], &[1.0, 1.0]);
        let cert = closedness_certificate(&p, &default_probes(2, DEFAULT_PROBE_SEED), &[0.4, 0.2]).unwrap();
        assert_abs_diff_eq!(cert.c_ab, 100.0 / 101.0, epsilon = 1e-4);
    }
}

//! Sectorial operators: resolvents, sampled sector constants, the extended
//! sector bound and the fractional-domain decay probe.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::calculus::real_power;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linops::{check_matrix, check_vector, eigenvalues, operator_norm, DenseMatrix, ShiftedLu, VectorE};
use crate::report::CertificateReport;

/// Relative slack when comparing a sampled constant against a claimed one.
pub const K_ROUNDOFF: f64 = 1e-12;

/// A sector `Λ_θ = {|arg z| ≤ θ} ∪ {0}` with resolvent constant `K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorSpec {
    pub theta: f64,
    pub k: f64,
}

impl SectorSpec {
    pub fn new(theta: f64, k: f64) -> Result<Self> {
        if !(0.0..PI).contains(&theta) {
            return Err(Error::invalid(format!("sector angle {theta} must lie in [0, pi)")));
        }
        if !(k >= 1.0) || !k.is_finite() {
            return Err(Error::invalid(format!("sector constant {k} must be finite and >= 1")));
        }
        Ok(Self { theta, k })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixOperator {
    matrix: DenseMatrix,
    certified: Option<SectorSpec>,
}

impl MatrixOperator {
    pub fn new(matrix: DenseMatrix) -> Result<Self> {
        check_matrix(&matrix)?;
        Ok(Self {
            matrix,
            certified: None,
        })
    }

    /// Attaches a sector after checking `K̂(θ) ≤ K` on `sampling`.
    pub fn with_certificate(self, spec: SectorSpec, sampling: &SectorSampling) -> Result<Self> {
        let est = certify_sector(&self, spec.theta, sampling)?;
        if est.k_hat > spec.k * (1.0 + K_ROUNDOFF) {
            return Err(Error::BoundViolated {
                measured: est.k_hat,
                allowed: spec.k,
            });
        }
        Ok(Self {
            certified: Some(spec),
            ..self
        })
    }

    /// Certifies at `theta` and records the sampled constant.
    pub fn certify(self, theta: f64, sampling: &SectorSampling) -> Result<Self> {
        let est = certify_sector(&self, theta, sampling)?;
        Ok(Self {
            certified: Some(SectorSpec::new(theta, est.k_hat.max(1.0))?),
            ..self
        })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn certified(&self) -> Option<SectorSpec> {
        self.certified
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        eigenvalues(&self.matrix)
    }

    /// `max_j |arg a_j|`; π if the spectrum touches `(−∞, 0]`.
    pub fn spectral_angle(&self) -> f64 {
        self.eigenvalues()
            .iter()
            .map(|a| if a.norm() == 0.0 { PI } else { a.arg().abs() })
            .fold(0.0, f64::max)
    }

    /// Largest contour angle the calculus may use: the certified angle, or
    /// the spectral bound `π − ψ` for uncertified operators.
    pub fn admissible_angle(&self) -> f64 {
        match self.certified {
            Some(spec) => spec.theta,
            None => PI - self.spectral_angle(),
        }
    }

    pub fn scaled(&self, factor: Complex64) -> Result<Self> {
        Self::new(&self.matrix * factor)
    }
}

/// Log-polar sample set for the supremum over `Λ_θ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorSampling {
    /// Radii per boundary ray.
    pub rays: usize,
    /// Angles per interior circle.
    pub arc: usize,
    pub r_min: f64,
    pub r_max: f64,
    /// Radii of the interior polar grid.
    pub interior: usize,
    #[serde(default)]
    pub exec: Exec,
}

impl Default for SectorSampling {
    fn default() -> Self {
        Self {
            rays: 241,
            arc: 17,
            r_min: 1e-6,
            r_max: 1e6,
            interior: 49,
            exec: Exec::default(),
        }
    }
}

/// `count` log-spaced radii in `[lo, hi]`; points within 1e-9 of a decade
/// are snapped onto it.
pub fn log_radii(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (la, lb) = (lo.log10(), hi.log10());
    (0..count)
        .map(|k| {
            let e = la + (lb - la) * k as f64 / (count - 1) as f64;
            if (e - e.round()).abs() < 1e-9 {
                10f64.powi(e.round() as i32)
            } else {
                10f64.powf(e)
            }
        })
        .collect()
}

impl SectorSampling {
    pub fn validate(&self) -> Result<()> {
        if self.rays == 0 || self.arc == 0 || self.interior == 0 {
            return Err(Error::invalid("sampling counts must be at least 1"));
        }
        if !(self.r_min > 0.0 && self.r_max >= self.r_min && self.r_max.is_finite()) {
            return Err(Error::invalid(format!(
                "radial range [{}, {}] must satisfy 0 < r_min <= r_max",
                self.r_min, self.r_max
            )));
        }
        Ok(())
    }

    /// The origin, both boundary rays and an interior polar grid.
    pub fn points(&self, theta: f64) -> Vec<Complex64> {
        let mut pts = vec![Complex64::new(0.0, 0.0)];
        let edges: &[f64] = if theta == 0.0 { &[0.0] } else { &[theta, -theta] };
        for &phi in edges {
            for r in log_radii(self.r_min, self.r_max, self.rays) {
                pts.push(Complex64::from_polar(r, phi));
            }
        }
        if theta > 0.0 && self.arc > 1 {
            let radii = log_radii(self.r_min, self.r_max, self.interior);
            for j in 1..self.arc {
                let phi = -theta + 2.0 * theta * j as f64 / self.arc as f64;
                for &r in &radii {
                    pts.push(Complex64::from_polar(r, phi));
                }
            }
        }
        pts
    }
}

pub fn resolvent_apply(a: &MatrixOperator, z: Complex64, x: &VectorE) -> Result<VectorE> {
    check_vector(x, a.dim())?;
    ShiftedLu::new(a.matrix(), z)?.solve_vec(x)
}

/// `(1 + |z|)‖(A + z)^{-1}‖`.
pub fn sector_value(a: &MatrixOperator, z: Complex64) -> Result<f64> {
    let lu = ShiftedLu::new(a.matrix(), z)?;
    Ok((1.0 + z.norm()) * operator_norm(&lu.inverse()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorEstimate {
    pub theta: f64,
    pub k_hat: f64,
    pub argmax: Complex64,
    /// Largest sampled value on `|z| = r_max`; close to 1 once saturated.
    pub edge_value: f64,
    pub samples: usize,
}

impl SectorEstimate {
    pub fn report(&self, a: &MatrixOperator, sampling: &SectorSampling) -> CertificateReport {
        CertificateReport::new(
            "certify-sector",
            json!({
                "matrix": crate::linops::matrix_to_csv(a.matrix()),
                "theta": self.theta,
                "sampling": sampling,
            }),
        )
        .nodes("samples", self.samples)
        .tolerance("pivot_ratio", crate::linops::SINGULAR_PIVOT_RATIO)
        .output("k_hat", self.k_hat)
        .output("argmax", [self.argmax.re, self.argmax.im])
        .output("edge_value", self.edge_value)
    }
}

fn spectral_precheck(a: &MatrixOperator, theta: f64) -> Result<()> {
    for ev in a.eigenvalues() {
        let z = -ev;
        if z.norm() == 0.0 || z.arg().abs() <= theta + 1e-12 {
            return Err(Error::NotSectorialAtAngle { theta, z });
        }
    }
    Ok(())
}

/// Maximum of `(1+|z|)‖(A+z)^{-1}‖` over the given points.
pub fn certify_sector_at(a: &MatrixOperator, theta: f64, points: &[Complex64], exec: Exec) -> Result<SectorEstimate> {
    if points.is_empty() {
        return Err(Error::invalid("no sample points"));
    }
    let values = exec.try_map(points, |&z| {
        sector_value(a, z).map_err(|e| match e {
            Error::SingularShift { .. } => Error::NotSectorialAtAngle { theta, z },
            other => other,
        })
    })?;
    let r_far = points.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut best = (0.0, points[0]);
    let mut edge = 0.0f64;
    for (&v, &z) in values.iter().zip(points) {
        if v > best.0 {
            best = (v, z);
        }
        if z.norm() >= r_far * (1.0 - 1e-12) {
            edge = edge.max(v);
        }
    }
    Ok(SectorEstimate {
        theta,
        k_hat: best.0,
        argmax: best.1,
        edge_value: edge,
        samples: points.len(),
    })
}

/// Sampled sector constant `K̂(θ)`, a lower bound for the true constant.
pub fn certify_sector(a: &MatrixOperator, theta: f64, sampling: &SectorSampling) -> Result<SectorEstimate> {
    if !(0.0..PI).contains(&theta) {
        return Err(Error::invalid(format!("angle {theta} must lie in [0, pi)")));
    }
    sampling.validate()?;
    spectral_precheck(a, theta)?;
    certify_sector_at(a, theta, &sampling.points(theta), sampling.exec)
}

/// Checks `(1+|z|)‖(A+z)^{-1}‖ ≤ 2K+1` on disks `|z − λ| ≤ (1+|λ|)/(2K)`
/// around sampled `λ ∈ Λ_θ`.
pub fn extended_sector_check(
    a: &MatrixOperator,
    spec: SectorSpec,
    sampling: &SectorSampling,
) -> Result<CertificateReport> {
    sampling.validate()?;
    let est = certify_sector(a, spec.theta, sampling)?;
    let bound = 2.0 * spec.k + 1.0;
    let consistent = est.k_hat <= spec.k * (1.0 + K_ROUNDOFF);
    let mut probes = Vec::new();
    for lambda in sampling.points(spec.theta) {
        let radius = (1.0 + lambda.norm()) / (2.0 * spec.k);
        probes.push(lambda);
        for (frac, count) in [(1.0, 12), (0.5, 6)] {
            for j in 0..count {
                let phi = 2.0 * PI * j as f64 / count as f64;
                probes.push(lambda + Complex64::from_polar(frac * radius, phi));
            }
        }
    }
    let values = sampling
        .exec
        .map(&probes, |&z| sector_value(a, z).unwrap_or(f64::INFINITY));
    let (mut worst, mut worst_z) = (0.0, probes[0]);
    for (&v, &z) in values.iter().zip(&probes) {
        if v > worst {
            worst = v;
            worst_z = z;
        }
    }
    if worst > bound {
        return Err(Error::ExtensionViolated {
            z: worst_z,
            value: worst,
            bound,
        });
    }
    Ok(CertificateReport::new(
        "extended-sector-check",
        json!({
            "matrix": crate::linops::matrix_to_csv(a.matrix()),
            "spec": spec,
            "sampling": sampling,
        }),
    )
    .nodes("probes", probes.len())
    .output("k_hat", est.k_hat)
    .output("k_consistent", consistent)
    .output("worst_value", worst)
    .output("worst_z", [worst_z.re, worst_z.im])
    .output("bound", bound)
    .output("margin", bound - worst)
    .passed(consistent))
}

/// `sup ‖z^η A(A+z)^{-1}x‖` over sampled `z ∈ Λ_{θ'}` with `x = A^{−φ}y`.
/// Fails with `UnboundedSuspected` if the sup over the full range exceeds
/// twice the sup restricted to `|z| ≤ r_max/10`.
pub fn decay_probe(
    a: &MatrixOperator,
    phi: f64,
    eta: f64,
    theta_prime: f64,
    y: &VectorE,
    sampling: &SectorSampling,
) -> Result<f64> {
    if !(phi > 0.0 && phi < 1.0) {
        return Err(Error::invalid(format!("phi = {phi} must lie in (0, 1)")));
    }
    if !(eta >= 0.0 && eta < phi) {
        return Err(Error::invalid(format!("eta = {eta} must lie in [0, phi)")));
    }
    let limit = a.admissible_angle();
    if !(theta_prime >= 0.0 && theta_prime < limit) {
        return Err(Error::AngleOutOfRange {
            theta: theta_prime,
            limit,
        });
    }
    if sampling.r_max < 1e6 {
        return Err(Error::invalid("decay probe needs r_max >= 1e6"));
    }
    sampling.validate()?;
    check_vector(y, a.dim())?;
    let x = real_power(a, -phi)? * y;
    let ax = a.matrix() * &x;
    let points = sampling.points(theta_prime);
    let values = sampling.exec.try_map(&points, |&z| {
        let v = ShiftedLu::new(a.matrix(), z)?.solve_vec(&ax)?;
        Ok::<_, Error>(z.norm().powf(eta) * v.norm())
    })?;
    let cut = sampling.r_max / 10.0;
    let mut far = 0.0f64;
    let mut near = 0.0f64;
    for (&v, z) in values.iter().zip(&points) {
        far = far.max(v);
        if z.norm() <= cut * (1.0 + 1e-12) {
            near = near.max(v);
        }
    }
    if far > 2.0 * near {
        return Err(Error::UnboundedSuspected { near, far });
    }
    Ok(far)
}

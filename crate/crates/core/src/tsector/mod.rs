//! T-sectoriality witnesses, the imaginary-power resolvent representations
//! and the discrete conjugate-function transform.

mod families;
mod hilbert;
mod representation;

use std::f64::consts::{E, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

pub use families::{unit, MultiplierFamily, Witness, QUARTER_PHASES};
pub use hilbert::{discrete_hilbert, hilbert_samples};
pub use representation::{
    bip_tsector_bound_assembly, pv_cutoff, resolvent_rep_real, resolvent_rep_rotated, transference_integral,
    BoundAssembly, RepValue, TransferenceKernel, TOL_REP_TAIL,
};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid::GridFunction;
use crate::linops::{check_vector, matrix_to_csv, ShiftedLu, VectorE};
use crate::report::CertificateReport;
use crate::sector::{certify_sector, MatrixOperator, SectorSampling};

/// `Σ_k e^{imkt} x_k` sampled at `t_j = 2πj/N_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigPolynomial {
    pub coefficients: Vec<VectorE>,
    pub n_t: usize,
    pub p: f64,
    /// Harmonic step `m ≥ 1`.
    #[serde(default = "one")]
    pub m: usize,
}

fn one() -> usize {
    1
}

impl TrigPolynomial {
    pub fn new(coefficients: Vec<VectorE>, n_t: usize, p: f64) -> Result<Self> {
        let poly = Self {
            coefficients,
            n_t,
            p,
            m: 1,
        };
        poly.validate()?;
        Ok(poly)
    }

    pub fn with_step(mut self, m: usize) -> Result<Self> {
        self.m = m;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let terms = self.coefficients.len();
        if terms == 0 {
            return Err(Error::invalid(
                "a trigonometric polynomial needs at least one coefficient",
            ));
        }
        if self.m == 0 {
            return Err(Error::invalid("harmonic step m must be at least 1"));
        }
        // the highest harmonic m·n must be resolved, and the grid even
        if self.n_t < 4 * self.m * terms || !self.n_t.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "grid size {} must be even and at least 4·m·(n+1) = {}",
                self.n_t,
                4 * self.m * terms
            )));
        }
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(Error::invalid(format!(
                "exponent p = {} must be finite and at least 1",
                self.p
            )));
        }
        let dim = self.coefficients[0].len();
        for x in &self.coefficients {
            check_vector(x, dim)?;
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.coefficients[0].len()
    }

    pub fn t_grid(&self) -> Vec<f64> {
        (0..self.n_t).map(|j| 2.0 * PI * j as f64 / self.n_t as f64).collect()
    }

    /// `t ↦ Σ_k e^{imkt} ys_k` on the grid.
    pub fn synthesize(&self, ys: &[VectorE]) -> Result<GridFunction> {
        let values = self
            .t_grid()
            .iter()
            .map(|&t| {
                ys.iter().enumerate().fold(VectorE::zeros(self.dim()), |acc, (k, y)| {
                    acc + y * Complex64::from_polar(1.0, (self.m * k) as f64 * t)
                })
            })
            .collect();
        GridFunction::periodic(values, self.p)
    }

    /// `t ↦ Σ_k a_k(t) x_k` on the grid.
    pub fn multiplied(&self, witness: &Witness) -> Result<GridFunction> {
        if witness.values.len() != self.coefficients.len() {
            return Err(Error::DimensionMismatch {
                expected: self.coefficients.len(),
                actual: witness.values.len(),
            });
        }
        let values = (0..self.n_t)
            .map(|j| {
                self.coefficients
                    .iter()
                    .zip(&witness.values)
                    .fold(VectorE::zeros(self.dim()), |acc, (x, a)| acc + x * a[j])
            })
            .collect();
        GridFunction::periodic(values, self.p)
    }

    fn refined(&self) -> Self {
        Self {
            n_t: 2 * self.n_t,
            ..self.clone()
        }
    }
}

fn check_shift(a: &MatrixOperator, phi: f64, r: f64, poly: &TrigPolynomial) -> Result<()> {
    if !(1.0 / E..=1.0).contains(&r) {
        return Err(Error::invalid(format!("r = {r} must lie in [1/e, 1]")));
    }
    let limit = a.admissible_angle();
    if !(phi.abs() <= limit) {
        return Err(Error::AngleOutOfRange { theta: phi, limit });
    }
    poly.validate()?;
    if poly.dim() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: poly.dim(),
        });
    }
    Ok(())
}

/// `y_k = (I + re^{−k+iφ}A)^{-1} x_k`.
pub fn shifted_coefficients(a: &MatrixOperator, phi: f64, r: f64, poly: &TrigPolynomial) -> Result<Vec<VectorE>> {
    poly.coefficients
        .iter()
        .enumerate()
        .map(|(k, x)| {
            // (I + μA)^{-1} = μ^{-1}(A + μ^{-1})^{-1}
            let mu = Complex64::from_polar(r * (-(k as f64)).exp(), phi);
            ShiftedLu::new(a.matrix(), mu.inv())?.solve_vec(&(x / mu))
        })
        .collect()
}

/// `‖Σ_k e^{imkt}(I + re^{−k+iφ}A)^{-1}x_k‖_{L^p(0,2π;E)}`.
pub fn lhs_norm(a: &MatrixOperator, phi: f64, r: f64, poly: &TrigPolynomial) -> Result<f64> {
    check_shift(a, phi, r, poly)?;
    let ys = shifted_coefficients(a, phi, r, poly)?;
    Ok(poly.synthesize(&ys)?.lp_norm())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TSectorReport {
    pub c_hat: f64,
    pub lhs: f64,
    pub denominator: f64,
    pub witness: String,
    pub family: MultiplierFamily,
    pub members: usize,
    pub phi: f64,
    pub r: f64,
    pub p: f64,
    pub n: usize,
    pub m: usize,
    pub n_t: usize,
    /// Richardson estimate `|Ĉ(2N_t) − Ĉ(N_t)|/3` of the grid error in `Ĉ`.
    pub grid_error: f64,
}

impl TSectorReport {
    pub fn report(&self, a: &MatrixOperator, poly: &TrigPolynomial) -> CertificateReport {
        CertificateReport::new(
            "t-sector",
            json!({
                "matrix": matrix_to_csv(a.matrix()),
                "phi": self.phi,
                "r": self.r,
                "poly": poly,
                "family": self.family,
            }),
        )
        .nodes("n_t", self.n_t)
        .nodes("members", self.members)
        .tolerance("grid_error", self.grid_error)
        .output("c_hat", self.c_hat)
        .output("lhs", self.lhs)
        .output("denominator", self.denominator)
        .output("witness", &self.witness)
        .output("n", self.n)
        .output("p", self.p)
        .passed(self.c_hat.is_finite())
    }
}

fn best_witness(poly: &TrigPolynomial, lhs: f64, family: &MultiplierFamily) -> Result<(f64, f64, String, usize)> {
    let members = family.members(poly.coefficients.len(), poly.n_t, poly.m)?;
    let denominators = Exec::default().try_map(&members, |w| poly.multiplied(w).map(|g| g.lp_norm()))?;
    let (idx, &den) = denominators
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("families are non-empty");
    let scale: f64 = poly.coefficients.iter().map(|x| x.norm()).sum();
    if !(den >= 1e-12 * scale) || den == 0.0 {
        return Err(Error::DenominatorDegenerate { value: den });
    }
    Ok((lhs / den, den, members[idx].label.clone(), members.len()))
}

/// Family member minimising `Ĉ = lhs / ‖Σ a_k x_k‖_{L^p}`.
pub fn witness_search(
    a: &MatrixOperator,
    phi: f64,
    r: f64,
    poly: &TrigPolynomial,
    family: &MultiplierFamily,
) -> Result<TSectorReport> {
    let lhs = lhs_norm(a, phi, r, poly)?;
    let (c_hat, denominator, witness, members) = best_witness(poly, lhs, family)?;
    let fine = poly.refined();
    let lhs_fine = lhs_norm(a, phi, r, &fine)?;
    let (c_fine, ..) = best_witness(&fine, lhs_fine, family)?;
    Ok(TSectorReport {
        c_hat,
        lhs,
        denominator,
        witness,
        family: family.clone(),
        members,
        phi,
        r,
        p: poly.p,
        n: poly.n(),
        m: poly.m,
        n_t: poly.n_t,
        grid_error: (c_fine - c_hat).abs() / 3.0,
    })
}

/// For normal `A` and `p = 2`, checks `lhs² ≤ K̂²·‖Σ e^{ikt}x_k‖²` with both
/// sides computed by Parseval and `K̂` the sampled sector constant at `|φ|`.
pub fn parseval_tsector_check(
    a: &MatrixOperator,
    phi: f64,
    r: f64,
    poly: &TrigPolynomial,
    sampling: &SectorSampling,
) -> Result<CertificateReport> {
    if poly.p != 2.0 {
        return Err(Error::invalid("the Parseval check needs p = 2"));
    }
    check_shift(a, phi, r, poly)?;
    let m = a.matrix();
    let normality = (m * m.adjoint() - m.adjoint() * m).norm();
    if normality > 1e-10 * m.norm().powi(2).max(1.0) {
        return Err(Error::invalid(format!(
            "matrix is not normal (‖AA* − A*A‖ = {normality:.3e})"
        )));
    }
    let k_hat = certify_sector(a, phi.abs(), sampling)?.k_hat;
    let ys = shifted_coefficients(a, phi, r, poly)?;
    let two_pi = 2.0 * PI;
    let lhs_sq = two_pi * ys.iter().map(|y| y.norm_squared()).sum::<f64>();
    let rhs_plain = two_pi * poly.coefficients.iter().map(|x| x.norm_squared()).sum::<f64>();
    let rhs_sq = k_hat * k_hat * rhs_plain;
    let grid_lhs = poly.synthesize(&ys)?.lp_norm();
    let ratio = if rhs_plain > 0.0 {
        (lhs_sq / rhs_plain).sqrt()
    } else {
        0.0
    };
    Ok(CertificateReport::new(
        "parseval-t-sector",
        json!({
            "matrix": matrix_to_csv(a.matrix()),
            "phi": phi,
            "r": r,
            "poly": poly,
            "sampling": sampling,
        }),
    )
    .nodes("n_t", poly.n_t)
    .output("k_hat", k_hat)
    .output("lhs_squared", lhs_sq)
    .output("rhs_squared", rhs_sq)
    .output("ratio", ratio)
    .output("margin", rhs_sq - lhs_sq)
    .output("grid_parseval_gap", (grid_lhs * grid_lhs - lhs_sq).abs())
    .passed(lhs_sq <= rhs_sq))
}

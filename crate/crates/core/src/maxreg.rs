//! The time derivative `B = ∂_t` on `L^p(0, τ; E)` with `f(0) = 0`: its
//! resolvent, the Cauchy-problem solver and maximal-regularity constants.
//!
//! Grid functions are sampled at `t_j = jτ/N`, `j = 0..=N`, and treated as
//! piecewise linear; convolutions against exponential kernels are integrated
//! exactly on each interval.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid::GridFunction;
use crate::linops::{c, check_vector, identity, matrix_exp, matrix_to_csv, DenseMatrix, VectorE};
use crate::report::CertificateReport;
use crate::sector::MatrixOperator;

pub const MIN_INTERVALS: usize = 16;
/// Power iterations used to build the worst-case probe.
pub const WORST_CASE_ITERATIONS: usize = 10;
pub const DEFAULT_MAXREG_SEED: u64 = 0x6d61_7872;
/// Relative grid slack `C` in the bound check `‖(B+λ)^{-1}‖ ≤ bound·(1 + CΔt)`.
pub const YOUNG_SLACK: f64 = 5.0;
/// Below this `|z|` the interval weights use their Taylor series.
const SERIES_RADIUS: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub tau: f64,
    /// Number of intervals; the grid holds `n_t + 1` nodes.
    pub n_t: usize,
    pub p: f64,
}

impl TimeGrid {
    pub fn new(tau: f64, n_t: usize, p: f64) -> Result<Self> {
        let grid = Self { tau, n_t, p };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::invalid(format!("tau = {} must be positive", self.tau)));
        }
        if self.n_t < MIN_INTERVALS {
            return Err(Error::invalid(format!(
                "n_t = {} must be at least {MIN_INTERVALS}",
                self.n_t
            )));
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::invalid(format!("p = {} must lie in (1, inf)", self.p)));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        self.tau / self.n_t as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n_t).map(|j| self.step() * j as f64).collect()
    }

    pub fn refined(&self) -> Self {
        Self {
            n_t: 2 * self.n_t,
            ..*self
        }
    }

    pub fn with_p(&self, p: f64) -> Result<Self> {
        Self::new(self.tau, self.n_t, p)
    }

    pub fn sample(&self, f: impl Fn(f64) -> VectorE) -> Result<GridFunction> {
        GridFunction::new(self.nodes().into_iter().map(f).collect(), self.tau, false, self.p)
    }

    pub fn zeros(&self, dim: usize) -> Result<GridFunction> {
        self.sample(|_| VectorE::zeros(dim))
    }
}

/// `∫_0^1 s^k e^{−zs} ds` for `k ∈ {0, 1}`.
fn moments(z: Complex64) -> (Complex64, Complex64) {
    if z.norm() < SERIES_RADIUS {
        let (mut e0, mut e1) = (c(0.0, 0.0), c(0.0, 0.0));
        let mut term = c(1.0, 0.0);
        for m in 0..24 {
            e0 += term / (m + 1) as f64;
            e1 += term / (m + 2) as f64;
            term *= -z / (m + 1) as f64;
        }
        (e0, e1)
    } else {
        let decay = (-z).exp();
        let e0 = (1.0 - decay) / z;
        (e0, (e0 - decay) / z)
    }
}

/// One-step propagator of `f' + Zf/h = g` for piecewise-linear `g`:
/// `f_{j+1} = e^{−Z}f_j + h(χ g_j + ψ g_{j+1})` with
/// `χ = ∫_0^1 s e^{−Zs} ds`, `ψ = ∫_0^1 (1−s) e^{−Zs} ds`.
#[derive(Debug, Clone)]
pub struct Propagator {
    decay: DenseMatrix,
    chi: DenseMatrix,
    psi: DenseMatrix,
    h: f64,
}

impl Propagator {
    /// Scalar rate `λ` acting on `dim`-vectors.
    pub fn scalar(lambda: Complex64, h: f64, dim: usize) -> Self {
        let z = lambda * h;
        let (e0, e1) = moments(z);
        let eye = identity(dim);
        Self {
            decay: &eye * (-z).exp(),
            chi: &eye * e1,
            psi: &eye * (e0 - e1),
            h,
        }
    }

    /// Matrix rate `A`, from one exponential of the block matrix
    /// `[[−hA, I, 0], [0, 0, I], [0, 0, 0]]`.
    pub fn matrix(a: &DenseMatrix, h: f64) -> Result<Self> {
        let n = a.nrows();
        let mut block = DMatrix::zeros(3 * n, 3 * n);
        block.view_mut((0, 0), (n, n)).copy_from(&(a * c(-h, 0.0)));
        block.view_mut((0, n), (n, n)).fill_with_identity();
        block.view_mut((n, 2 * n), (n, n)).fill_with_identity();
        let e = matrix_exp(&block)?;
        let decay = e.view((0, 0), (n, n)).into_owned();
        let e0 = e.view((0, n), (n, n)).into_owned();
        let psi = e.view((0, 2 * n), (n, n)).into_owned();
        Ok(Self {
            decay,
            chi: &e0 - &psi,
            psi,
            h,
        })
    }

    pub fn apply(&self, g: &[VectorE]) -> Vec<VectorE> {
        let mut f = Vec::with_capacity(g.len());
        f.push(VectorE::zeros(g[0].len()));
        for j in 0..g.len() - 1 {
            let next = &self.decay * &f[j] + (&self.chi * &g[j] + &self.psi * &g[j + 1]) * c(self.h, 0.0);
            f.push(next);
        }
        f
    }

    /// Exact adjoint of [`Propagator::apply`] in the unweighted inner
    /// product, by a backward (time-reversed) sweep.
    pub fn adjoint_apply(&self, y: &[VectorE]) -> Vec<VectorE> {
        let n = y.len() - 1;
        let (decay, chi, psi) = (self.decay.adjoint(), self.chi.adjoint(), self.psi.adjoint());
        let mut sweep = vec![VectorE::zeros(y[0].len()); n + 2];
        for i in (0..=n).rev() {
            sweep[i] = &y[i] + &decay * &sweep[i + 1];
        }
        (0..=n)
            .map(|i| {
                let mut out = &chi * &sweep[i + 1];
                if i >= 1 {
                    out += &psi * &sweep[i];
                }
                out * c(self.h, 0.0)
            })
            .collect()
    }
}

/// `(B + λ)^{-1}g = ∫_0^t e^{λ(x−t)} g(x) dx` on the grid; `f(0) = 0`.
pub fn deriv_resolvent(lambda: Complex64, g: &GridFunction) -> Result<GridFunction> {
    if !(lambda.re.is_finite() && lambda.im.is_finite()) || g.periodic {
        return Err(Error::invalid("need a finite shift and a grid on [0, tau]"));
    }
    let h = g.step();
    let prop = Propagator::scalar(lambda, h, g.dim());
    Ok(GridFunction {
        values: prop.apply(&g.values),
        ..g.clone()
    })
}

/// Trapezoid weights of the closed grid.
fn trapezoid_weights(nodes: usize, h: f64) -> Vec<f64> {
    (0..nodes)
        .map(|j| if j == 0 || j + 1 == nodes { 0.5 * h } else { h })
        .collect()
}

/// Largest singular value of `g ↦ post(prop(g))` in the trapezoid `L²`
/// inner product, by power iteration from a seeded start. Returns the
/// estimate and the maximising input (unweighted samples).
fn weighted_power_iteration(
    prop: &Propagator,
    post: Option<&DenseMatrix>,
    dim: usize,
    nodes: usize,
    iterations: usize,
    seed: u64,
) -> (f64, Vec<VectorE>) {
    let w = trapezoid_weights(nodes, prop.h);
    let sqrt_w: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<VectorE> = (0..nodes)
        .map(|_| VectorE::from_fn(dim, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))
        .collect();
    let norm = |v: &[VectorE]| v.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt();
    let forward = |v: &[VectorE]| -> Vec<VectorE> {
        let g: Vec<VectorE> = v.iter().zip(&sqrt_w).map(|(x, s)| x / c(*s, 0.0)).collect();
        let mut f = prop.apply(&g);
        if let Some(m) = post {
            f = f.iter().map(|x| m * x).collect();
        }
        f.iter().zip(&sqrt_w).map(|(x, s)| x * c(*s, 0.0)).collect()
    };
    let backward = |y: &[VectorE]| -> Vec<VectorE> {
        let mut y: Vec<VectorE> = y.iter().zip(&sqrt_w).map(|(x, s)| x * c(*s, 0.0)).collect();
        if let Some(m) = post {
            let adj = m.adjoint();
            y = y.iter().map(|x| &adj * x).collect();
        }
        prop.adjoint_apply(&y)
            .iter()
            .zip(&sqrt_w)
            .map(|(x, s)| x / c(*s, 0.0))
            .collect()
    };
    let mut sigma = 0.0;
    for _ in 0..iterations {
        let n0 = norm(&v);
        if n0 == 0.0 {
            break;
        }
        v = v.iter().map(|x| x / c(n0, 0.0)).collect();
        let image = forward(&v);
        let next = norm(&image);
        let converged = (next - sigma).abs() <= 1e-12 * next;
        sigma = next;
        v = backward(&image);
        if converged {
            break;
        }
    }
    let n0 = norm(&v).max(f64::MIN_POSITIVE);
    let g = v.iter().zip(&sqrt_w).map(|(x, s)| x / c(n0 * s, 0.0)).collect();
    (sigma, g)
}

/// `(1 − e^{−Re λ·τ})/Re λ`.
pub fn young_bound(lambda: Complex64, tau: f64) -> f64 {
    -(-lambda.re * tau).exp_m1() / lambda.re
}

/// Estimates the grid operator norm of `(B + λ)^{-1}` on `L^p(0, τ)` from
/// constant, harmonic and (for `p = 2`) power-iteration probes, and checks
/// it against the Young bound with slack `1 + 5Δt`.
pub fn deriv_resolvent_bound_check(lambda: Complex64, grid: &TimeGrid) -> Result<CertificateReport> {
    grid.validate()?;
    if !(lambda.re > 0.0) {
        return Err(Error::invalid(format!("Re lambda = {} must be positive", lambda.re)));
    }
    let bound = young_bound(lambda, grid.tau);
    let allowed = bound * (1.0 + YOUNG_SLACK * grid.step());
    let one = VectorE::from_element(1, c(1.0, 0.0));
    let mut probes = vec![grid.sample(|_| one.clone())?];
    for k in 1..=4 {
        let w = PI * k as f64 / grid.tau;
        probes.push(grid.sample(|t| VectorE::from_element(1, Complex64::from_polar(1.0, w * t)))?);
    }
    let mut measured = 0.0f64;
    for g in &probes {
        let f = deriv_resolvent(lambda, g)?;
        measured = measured.max(f.lp_norm() / g.lp_norm());
    }
    let mut iterations = 0;
    if grid.p == 2.0 {
        iterations = 200;
        let prop = Propagator::scalar(lambda, grid.step(), 1);
        let (sigma, _) = weighted_power_iteration(&prop, None, 1, grid.n_t + 1, iterations, DEFAULT_MAXREG_SEED);
        measured = measured.max(sigma);
    }
    if measured > allowed {
        return Err(Error::BoundViolated { measured, allowed });
    }
    Ok(CertificateReport::new(
        "deriv-resolvent-bound",
        json!({"lambda": [lambda.re, lambda.im], "grid": grid}),
    )
    .nodes("n_t", grid.n_t)
    .nodes("power_iterations", iterations)
    .tolerance("grid_slack", YOUNG_SLACK * grid.step())
    .output("measured", measured)
    .output("bound", bound)
    .output("allowed", allowed)
    .with_seed(DEFAULT_MAXREG_SEED)
    .passed(true))
}

/// `f(t) = ∫_0^t e^{(x−t)A} g(x) dx`, the solution of `f' + Af = g`,
/// `f(0) = 0`.
pub fn solve_cauchy(a: &MatrixOperator, g: &GridFunction) -> Result<GridFunction> {
    let angle = a.admissible_angle();
    if !(angle > FRAC_PI_2) {
        return Err(Error::AngleOutOfRange {
            theta: angle,
            limit: FRAC_PI_2,
        });
    }
    if g.periodic || g.dim() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: g.dim(),
        });
    }
    let prop = Propagator::matrix(a.matrix(), g.step())?;
    Ok(GridFunction {
        values: prop.apply(&g.values),
        ..g.clone()
    })
}

/// Second-order differences: centred inside, one-sided at both ends.
pub fn time_derivative(f: &GridFunction) -> Result<GridFunction> {
    let n = f.len();
    if n < 3 {
        return Err(Error::invalid("need at least 3 nodes to differentiate"));
    }
    let h = f.step();
    let v = &f.values;
    let values = (0..n)
        .map(|j| {
            let d = if j == 0 {
                &v[0] * c(-3.0, 0.0) + &v[1] * c(4.0, 0.0) - &v[2]
            } else if j + 1 == n {
                &v[n - 1] * c(3.0, 0.0) - &v[n - 2] * c(4.0, 0.0) + &v[n - 3]
            } else {
                &v[j + 1] - &v[j - 1]
            };
            d / c(2.0 * h, 0.0)
        })
        .collect();
    Ok(GridFunction { values, ..f.clone() })
}

/// `(Âf)(t) = Af(t)`, the pointwise extension of `A` to grid functions.
#[derive(Debug, Clone)]
pub struct LiftedOperator {
    matrix: DenseMatrix,
}

impl LiftedOperator {
    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        if f.dim() != self.matrix.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.matrix.nrows(),
                actual: f.dim(),
            });
        }
        Ok(f.map(|v| &self.matrix * v))
    }
}

pub fn extend_operator_to_lp(a: &MatrixOperator) -> LiftedOperator {
    LiftedOperator {
        matrix: a.matrix().clone(),
    }
}

/// Input functions for the maximal-regularity supremum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Probe {
    /// `g(t) = x`
    Constant { x: VectorE },
    /// `g(t) = sin(ωt)·x`
    Harmonic { omega: f64, x: VectorE },
    /// Power iteration on `g ↦ Â(B + Â)^{-1}g` in `L²` from a seeded start.
    WorstCase { seed: u64, iterations: usize },
}

impl Probe {
    pub fn label(&self) -> String {
        match self {
            Self::Constant { .. } => "constant".into(),
            Self::Harmonic { omega, .. } => format!("harmonic omega={omega}"),
            Self::WorstCase { seed, iterations } => format!("worst-case seed={seed} iterations={iterations}"),
        }
    }

    pub fn sample(&self, a: &MatrixOperator, grid: &TimeGrid) -> Result<GridFunction> {
        match self {
            Self::Constant { x } => {
                check_vector(x, a.dim())?;
                grid.sample(|_| x.clone())
            }
            Self::Harmonic { omega, x } => {
                check_vector(x, a.dim())?;
                grid.sample(|t| x * c((omega * t).sin(), 0.0))
            }
            Self::WorstCase { seed, iterations } => {
                let prop = Propagator::matrix(a.matrix(), grid.step())?;
                let (_, g) =
                    weighted_power_iteration(&prop, Some(a.matrix()), a.dim(), grid.n_t + 1, *iterations, *seed);
                GridFunction::new(g, grid.tau, false, grid.p)
            }
        }
    }
}

/// Constant, two harmonics and a worst-case probe.
pub fn default_maxreg_probes(dim: usize, tau: f64, seed: u64) -> Vec<Probe> {
    let ones = VectorE::from_element(dim, c(1.0 / (dim as f64).sqrt(), 0.0));
    vec![
        Probe::Constant { x: ones.clone() },
        Probe::Harmonic {
            omega: PI / tau,
            x: ones.clone(),
        },
        Probe::Harmonic {
            omega: 8.0 * PI / tau,
            x: ones,
        },
        Probe::WorstCase {
            seed,
            iterations: WORST_CASE_ITERATIONS,
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRatio {
    pub probe: String,
    pub fprime: f64,
    pub af: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxRegReport {
    /// `max ‖D_t f‖_p / ‖g‖_p` over the probes.
    pub constant_fprime: f64,
    /// `max ‖Af‖_p / ‖g‖_p` over the probes.
    pub constant_af: f64,
    pub grid: TimeGrid,
    pub probes: Vec<ProbeRatio>,
    /// `(n_t, constant_fprime, constant_af)` on successively doubled grids.
    pub ladder: Vec<(usize, f64, f64)>,
}

impl MaxRegReport {
    pub fn report(&self, a: &MatrixOperator, probes: &[Probe]) -> CertificateReport {
        CertificateReport::new(
            "maxreg",
            json!({"matrix": matrix_to_csv(a.matrix()), "grid": self.grid, "probes": probes}),
        )
        .nodes("n_t", self.grid.n_t)
        .nodes("probes", self.probes.len())
        .output("constant_fprime", self.constant_fprime)
        .output("constant_af", self.constant_af)
        .output("per_probe", &self.probes)
        .output("ladder", &self.ladder)
        .passed(self.constant_fprime.is_finite() && self.constant_af.is_finite())
    }
}

fn probe_ratios(a: &MatrixOperator, grid: &TimeGrid, probes: &[Probe]) -> Result<Vec<ProbeRatio>> {
    let lifted = extend_operator_to_lp(a);
    Exec::default().try_map(probes, |probe| {
        let g = probe.sample(a, grid)?;
        let g_norm = g.lp_norm();
        if g_norm == 0.0 {
            return Err(Error::invalid(format!("probe {} vanishes", probe.label())));
        }
        let f = solve_cauchy(a, &g)?;
        Ok(ProbeRatio {
            probe: probe.label(),
            fprime: time_derivative(&f)?.lp_norm() / g_norm,
            af: lifted.apply(&f)?.lp_norm() / g_norm,
        })
    })
}

/// Maximal-regularity constants over a probe set.
pub fn maxreg_constant(a: &MatrixOperator, grid: &TimeGrid, probes: &[Probe]) -> Result<MaxRegReport> {
    grid.validate()?;
    if probes.is_empty() {
        return Err(Error::invalid("at least one probe is required"));
    }
    let ratios = probe_ratios(a, grid, probes)?;
    let constant_fprime = ratios.iter().map(|r| r.fprime).fold(0.0, f64::max);
    let constant_af = ratios.iter().map(|r| r.af).fold(0.0, f64::max);
    Ok(MaxRegReport {
        constant_fprime,
        constant_af,
        grid: *grid,
        probes: ratios,
        ladder: vec![(grid.n_t, constant_fprime, constant_af)],
    })
}

/// [`maxreg_constant`] on `levels` successively doubled grids; the report
/// is that of the finest grid with the whole ladder attached.
pub fn maxreg_ladder(a: &MatrixOperator, grid: &TimeGrid, probes: &[Probe], levels: usize) -> Result<MaxRegReport> {
    let mut g = *grid;
    let mut ladder = Vec::new();
    let mut last = None;
    for _ in 0..levels.max(1) {
        let rep = maxreg_constant(a, &g, probes)?;
        ladder.push((g.n_t, rep.constant_fprime, rep.constant_af));
        last = Some(rep);
        g = g.refined();
    }
    let mut rep = last.expect("at least one level");
    rep.ladder = ladder;
    Ok(rep)
}

/// Runs [`maxreg_constant`] at each `p` on one probe set and reports the
/// spread `max/min` of each constant.
pub fn p_independence_probe(
    a: &MatrixOperator,
    grid: &TimeGrid,
    ps: &[f64],
    probes: &[Probe],
) -> Result<CertificateReport> {
    if ps.is_empty() {
        return Err(Error::invalid("no exponents given"));
    }
    let runs = ps
        .iter()
        .map(|&p| maxreg_constant(a, &grid.with_p(p)?, probes))
        .collect::<Result<Vec<_>>>()?;
    let spread = |f: fn(&MaxRegReport) -> f64| {
        let vals: Vec<f64> = runs.iter().map(f).collect();
        vals.iter().cloned().fold(0.0, f64::max) / vals.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    let table: Vec<_> = ps
        .iter()
        .zip(&runs)
        .map(|(p, r)| json!({"p": p, "constant_fprime": r.constant_fprime, "constant_af": r.constant_af}))
        .collect();
    let finite = runs
        .iter()
        .all(|r| r.constant_fprime.is_finite() && r.constant_af.is_finite());
    Ok(CertificateReport::new(
        "p-independence",
        json!({"matrix": matrix_to_csv(a.matrix()), "grid": grid, "ps": ps, "probes": probes}),
    )
    .nodes("n_t", grid.n_t)
    .output("constants", table)
    .output("spread_fprime", spread(|r| r.constant_fprime))
    .output("spread_af", spread(|r| r.constant_af))
    .passed(finite))
}

//! Sector-boundary contours `δ + Γ_{ρ,θ}`, composite Gauss–Legendre rules on
//! them, and the Dunford integral engine.
//!
//! Orientation: the path runs counterclockwise around the left wedge
//! `|arg λ| > θ` — in along `re^{-iθ}`, clockwise over the arc
//! `ρe^{iφ}, φ: 2π−θ → θ`, out along `re^{iθ}`. Node weights already carry
//! `dλ` and the factor `1/(2πi)`.
//!
//! A reflected contour maps every node `λ ↦ −λ` and keeps the weights, i.e.
//! `∫_{−Γ} g(μ) dμ := ∫_Γ g(−λ) dλ`.

mod pv;

pub use self::pv::{pv_integral, PvValue};

use std::f64::consts::PI;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linops::{c, operator_norm, pairwise_sum, DenseMatrix, I, ZERO};

/// Gauss–Legendre order used on every panel.
pub const PANEL_ORDER: usize = 8;
/// Rays starting at the origin get one plain panel on `[0, INNER_RADIUS]`.
pub const DEFAULT_INNER_RADIUS: f64 = 1e-8;
pub const DEFAULT_TAIL_TERMS: usize = 3;
pub const DEFAULT_TOL_TAIL: f64 = 1e-10;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> Vec<(f64, f64)> {
    let order = order.max(1);
    let rule = GaussLegendre::new(order.try_into().expect("order is nonzero"));
    rule.nodes().copied().zip(rule.weights().copied()).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    #[default]
    Standard,
    Negated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourSpec {
    pub rho: f64,
    pub theta: f64,
    #[serde(default)]
    pub delta: f64,
    /// Truncation radius `R`.
    pub radius: f64,
    pub n_ray: usize,
    pub n_arc: usize,
    #[serde(default)]
    pub orientation: Orientation,
    #[serde(default)]
    pub reflected: bool,
    #[serde(default = "default_inner")]
    pub inner_radius: f64,
    /// Leading decay exponent κ of the integrand along the rays,
    /// `‖g(re^{±iθ})‖ ~ r^{-1-κ}`. Enables tail extrapolation beyond `R`.
    #[serde(default)]
    pub decay: Option<Complex64>,
    #[serde(default = "default_tail_terms")]
    pub tail_terms: usize,
    #[serde(default = "default_tol_tail")]
    pub tol_tail: f64,
    #[serde(default)]
    pub exec: Exec,
}

fn default_inner() -> f64 {
    DEFAULT_INNER_RADIUS
}
fn default_tail_terms() -> usize {
    DEFAULT_TAIL_TERMS
}
fn default_tol_tail() -> f64 {
    DEFAULT_TOL_TAIL
}

/// Smallest panel count so consecutive radii differ by at most `max_ratio`.
fn panel_count(lo: f64, hi: f64, max_ratio: f64) -> usize {
    ((hi / lo).ln() / max_ratio.ln()).ceil().max(1.0) as usize
}

impl ContourSpec {
    /// Rays with geometric panels of ratio ≤ `max_ratio` and an arc with
    /// panels no wider than half a radian.
    pub fn graded(rho: f64, theta: f64, radius: f64, max_ratio: f64) -> Self {
        let max_ratio = max_ratio.clamp(1.01, 2.0);
        let (n_ray, n_arc) = if rho > 0.0 {
            let rays = if radius > rho {
                panel_count(rho, radius, max_ratio)
            } else {
                0
            };
            let arc = ((2.0 * PI - 2.0 * theta) / 0.5).ceil().max(1.0) as usize;
            (PANEL_ORDER * rays, PANEL_ORDER * arc)
        } else {
            let rays = 1 + panel_count(DEFAULT_INNER_RADIUS, radius, max_ratio);
            (PANEL_ORDER * rays, 0)
        };
        Self {
            rho,
            theta,
            delta: 0.0,
            radius,
            n_ray,
            n_arc,
            orientation: Orientation::Standard,
            reflected: false,
            inner_radius: DEFAULT_INNER_RADIUS,
            decay: None,
            tail_terms: DEFAULT_TAIL_TERMS,
            tol_tail: DEFAULT_TOL_TAIL,
            exec: Exec::default(),
        }
    }

    pub fn with_decay(mut self, kappa: Complex64) -> Self {
        self.decay = Some(kappa);
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn reflect(mut self) -> Self {
        self.reflected = !self.reflected;
        self
    }

    pub fn negate(mut self) -> Self {
        self.orientation = match self.orientation {
            Orientation::Standard => Orientation::Negated,
            Orientation::Negated => Orientation::Standard,
        };
        self
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidContour(msg));
        let finite = [self.rho, self.theta, self.delta, self.radius, self.inner_radius];
        if finite.iter().any(|x| !x.is_finite()) {
            return bad("contour parameters must be finite".into());
        }
        if !(self.theta > 0.0 && self.theta < PI) {
            return bad(format!("theta = {} must lie in (0, pi)", self.theta));
        }
        if self.rho < 0.0 {
            return bad(format!("rho = {} must be nonnegative", self.rho));
        }
        if self.radius < self.rho || self.radius <= 0.0 {
            return bad(format!(
                "truncation radius {} must be positive and at least rho = {}",
                self.radius, self.rho
            ));
        }
        if self.rho > 0.0 && self.n_arc < 4 {
            return bad(format!("n_arc = {} must be at least 4", self.n_arc));
        }
        if self.rho == 0.0 {
            if self.n_arc != 0 {
                return bad("a contour through the origin has no arc (n_arc must be 0)".into());
            }
            if !(self.inner_radius > 0.0 && self.inner_radius < self.radius) {
                return bad(format!("inner radius {} must lie in (0, R)", self.inner_radius));
            }
        }
        if self.radius > self.rho && self.n_ray < 4 {
            return bad(format!("n_ray = {} must be at least 4", self.n_ray));
        }
        if let Some(k) = self.decay {
            if !(k.re > 0.0) || !k.im.is_finite() {
                return bad(format!("decay exponent {k} must have positive real part"));
            }
        }
        if !(self.tol_tail > 0.0) {
            return bad("tol_tail must be positive".into());
        }
        Ok(())
    }

    pub fn layout(&self) -> Result<PathLayout> {
        self.validate()?;
        let mut panels = Vec::new();
        if self.radius > self.rho {
            if self.rho > 0.0 {
                let count = (self.n_ray / PANEL_ORDER).max(1);
                panels = geometric(self.rho, self.radius, count);
            } else {
                let count = (self.n_ray / PANEL_ORDER).max(2);
                panels.push(Panel::linear(0.0, self.inner_radius));
                panels.extend(geometric(self.inner_radius, self.radius, count - 1));
            }
        }
        let order = if panels.is_empty() {
            PANEL_ORDER
        } else {
            (self.n_ray / panels.len()).max(1)
        };
        let arc = (self.rho > 0.0).then(|| Arc {
            rho: self.rho,
            panels: (self.n_arc / PANEL_ORDER).max(1),
            order: (self.n_arc / (self.n_arc / PANEL_ORDER).max(1)).max(1),
        });
        Ok(PathLayout {
            theta: self.theta,
            delta: self.delta,
            reflected: self.reflected,
            orientation: self.orientation,
            arc,
            panels,
            order,
            truncated: true,
        })
    }
}

/// One radial panel `[a, b]`, integrated in `ln r` when `log` is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
    pub log: bool,
}

impl Panel {
    pub fn linear(a: f64, b: f64) -> Self {
        Self { a, b, log: false }
    }
    pub fn log(a: f64, b: f64) -> Self {
        Self { a, b, log: true }
    }
}

/// `count` panels of equal logarithmic width covering `[lo, hi]`.
pub fn geometric(lo: f64, hi: f64, count: usize) -> Vec<Panel> {
    let (la, lb) = (lo.ln(), hi.ln());
    let h = (lb - la) / count as f64;
    (0..count)
        .map(|k| {
            let a = if k == 0 { lo } else { (la + h * k as f64).exp() };
            let b = if k + 1 == count {
                hi
            } else {
                (la + h * (k + 1) as f64).exp()
            };
            Panel::log(a, b)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub rho: f64,
    pub panels: usize,
    pub order: usize,
}

/// Concrete panel structure of a (possibly partial) sector-boundary path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathLayout {
    pub theta: f64,
    pub delta: f64,
    pub reflected: bool,
    pub orientation: Orientation,
    pub arc: Option<Arc>,
    /// Radial panels shared by both rays, increasing in radius.
    pub panels: Vec<Panel>,
    pub order: usize,
    /// Whether the last panel ends at a truncation radius whose tail must be
    /// accounted for.
    pub truncated: bool,
}

impl PathLayout {
    /// Both rays restricted to the radial band `[lo, hi]`, with panel breaks
    /// at every entry of `breaks` inside the band. A band starting at 0 gets
    /// a plain first panel.
    pub fn band(theta: f64, lo: f64, hi: f64, breaks: &[f64], max_ratio: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < PI) || !(hi > lo) || lo < 0.0 {
            return Err(Error::InvalidContour(format!(
                "invalid band [{lo}, {hi}] at angle {theta}"
            )));
        }
        let mut cuts = vec![lo];
        if lo == 0.0 {
            cuts.push(DEFAULT_INNER_RADIUS.min(hi / 2.0));
        }
        for &x in breaks {
            if x > *cuts.last().unwrap() && x < hi {
                cuts.push(x);
            }
        }
        cuts.push(hi);
        let mut panels = Vec::new();
        for w in cuts.windows(2) {
            if w[0] == 0.0 {
                panels.push(Panel::linear(0.0, w[1]));
            } else {
                panels.extend(geometric(w[0], w[1], panel_count(w[0], w[1], max_ratio)));
            }
        }
        Ok(Self {
            theta,
            delta: 0.0,
            reflected: false,
            orientation: Orientation::Standard,
            arc: None,
            panels,
            order: PANEL_ORDER,
            truncated: false,
        })
    }

    pub fn build(&self) -> ContourRule {
        let mut nodes = Vec::new();
        let sign = match self.orientation {
            Orientation::Standard => 1.0,
            Orientation::Negated => -1.0,
        };
        let scale = c(0.0, -sign / (2.0 * PI)); // sign/(2πi)
        let place = |z: Complex64| {
            let z = z + self.delta;
            if self.reflected {
                -z
            } else {
                z
            }
        };
        let gl = gauss_legendre(self.order);
        let up = Complex64::from_polar(1.0, self.theta);
        let down = up.conj();
        // lower ray, traversed inward
        for (p, panel) in self.panels.iter().enumerate().rev() {
            for &(x, w) in gl.iter().rev() {
                let (r, dr) = radial_node(panel, x, w);
                nodes.push(QuadNode {
                    lambda: place(down * r),
                    weight: -down * dr * scale,
                    segment: Segment::Lower(p),
                });
            }
        }
        if let Some(arc) = self.arc {
            let gl_arc = gauss_legendre(arc.order);
            let span = 2.0 * PI - 2.0 * self.theta;
            let h = span / arc.panels as f64;
            // φ decreasing from 2π−θ to θ
            for k in 0..arc.panels {
                let hi = 2.0 * PI - self.theta - h * k as f64;
                let mid = hi - h / 2.0;
                for &(x, w) in gl_arc.iter().rev() {
                    let phi = mid + x * h / 2.0;
                    let e = Complex64::from_polar(1.0, phi);
                    nodes.push(QuadNode {
                        lambda: place(e * arc.rho),
                        weight: -I * e * arc.rho * (w * h / 2.0) * scale,
                        segment: Segment::Arc,
                    });
                }
            }
        }
        for (p, panel) in self.panels.iter().enumerate() {
            for &(x, w) in &gl {
                let (r, dr) = radial_node(panel, x, w);
                nodes.push(QuadNode {
                    lambda: place(up * r),
                    weight: up * dr * scale,
                    segment: Segment::Upper(p),
                });
            }
        }
        ContourRule {
            nodes,
            panels: self.panels.clone(),
        }
    }
}

/// Radius and `dr`-weight of a Gauss–Legendre node mapped onto `panel`.
fn radial_node(panel: &Panel, x: f64, w: f64) -> (f64, f64) {
    if panel.log {
        let (la, lb) = (panel.a.ln(), panel.b.ln());
        let s = 0.5 * (la + lb) + 0.5 * (lb - la) * x;
        let r = s.exp();
        (r, r * 0.5 * (lb - la) * w)
    } else {
        let r = 0.5 * (panel.a + panel.b) + 0.5 * (panel.b - panel.a) * x;
        (r, 0.5 * (panel.b - panel.a) * w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Segment {
    Arc,
    Upper(usize),
    Lower(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadNode {
    pub lambda: Complex64,
    pub weight: Complex64,
    pub segment: Segment,
}

#[derive(Debug, Clone)]
pub struct ContourRule {
    pub nodes: Vec<QuadNode>,
    pub panels: Vec<Panel>,
}

pub fn build_nodes(spec: &ContourSpec) -> Result<Vec<QuadNode>> {
    Ok(spec.layout()?.build().nodes)
}

/// How the part of the path beyond the last panel is treated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailPolicy {
    /// The layout is the whole path.
    None,
    /// Require the outermost panel mass to be below `tol`.
    LastPanel { tol: f64 },
    /// Fit `Σ_j C_j r^{-1-κ-j}` to the outer panel masses and add the
    /// analytic remainder; the error estimate compares fits of different
    /// order and must be below `tol` (relative to `max(1, ‖value‖)`).
    Extrapolate { kappa: Complex64, terms: usize, tol: f64 },
}

#[derive(Debug, Clone)]
pub struct ContourValue {
    pub value: DenseMatrix,
    /// Extrapolated contribution beyond the truncation radius.
    pub tail_norm: f64,
    pub error_estimate: f64,
    pub nodes: usize,
}

/// `Σ w_j g(λ_j)` over `layout` plus the tail prescribed by `policy`.
pub fn integrate<F>(layout: &PathLayout, policy: TailPolicy, exec: Exec, integrand: F) -> Result<ContourValue>
where
    F: Fn(Complex64) -> Result<DenseMatrix> + Sync + Send,
{
    let rule = layout.build();
    let terms = exec.try_map(&rule.nodes, |node| integrand(node.lambda).map(|m| m * node.weight))?;
    let mut value = pairwise_sum(&terms).ok_or_else(|| Error::InvalidContour("contour has no nodes".into()))?;
    if !value.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::invalid("integrand produced non-finite values"));
    }
    let n = rule.nodes.len();
    let geometric_panels: Vec<usize> = (0..rule.panels.len()).filter(|&p| rule.panels[p].log).collect();
    let masses = |upper: bool| -> Vec<DenseMatrix> {
        rule.panels
            .iter()
            .enumerate()
            .map(|(p, _)| {
                let parts: Vec<DenseMatrix> = rule
                    .nodes
                    .iter()
                    .zip(&terms)
                    .filter(|(node, _)| node.segment == if upper { Segment::Upper(p) } else { Segment::Lower(p) })
                    .map(|(_, t)| t.clone())
                    .collect();
                pairwise_sum(&parts).unwrap_or_else(|| DenseMatrix::zeros(value.nrows(), value.ncols()))
            })
            .collect()
    };
    let (mut tail_norm, mut error_estimate) = (0.0, 0.0);
    match policy {
        TailPolicy::None => {}
        _ if rule.panels.is_empty() => {}
        TailPolicy::LastPanel { tol } => {
            let last = rule.panels.len() - 1;
            error_estimate = operator_norm(&masses(true)[last]) + operator_norm(&masses(false)[last]);
            if error_estimate > tol * operator_norm(&value).max(1.0) {
                return Err(Error::TruncationNotConverged {
                    estimate: error_estimate,
                    tolerance: tol,
                });
            }
        }
        TailPolicy::Extrapolate { kappa, terms, tol } => {
            let radius = rule.panels.last().unwrap().b;
            let usable = terms.min(geometric_panels.len());
            let mut tails = DenseMatrix::zeros(value.nrows(), value.ncols());
            for upper in [true, false] {
                let m = masses(upper);
                let outer: Vec<usize> = geometric_panels.iter().rev().take(usable).rev().copied().collect();
                let fit = |k: usize| -> Result<DenseMatrix> {
                    let idx = &outer[outer.len() - k..];
                    let coeffs = tail_coefficients(&rule.panels, idx, radius, kappa, k)?;
                    let mut acc = DenseMatrix::zeros(value.nrows(), value.ncols());
                    for (g, &p) in coeffs.iter().zip(idx) {
                        acc += &m[p] * *g;
                    }
                    Ok(acc)
                };
                let full = fit(usable)?;
                let est = if usable > 1 {
                    operator_norm(&(&full - fit(usable - 1)?))
                } else {
                    operator_norm(&m[*outer.last().unwrap()])
                };
                error_estimate += est;
                tails += full;
            }
            tail_norm = operator_norm(&tails);
            value += tails;
            if error_estimate > tol * operator_norm(&value).max(1.0) {
                return Err(Error::TruncationNotConverged {
                    estimate: error_estimate,
                    tolerance: tol,
                });
            }
        }
    }
    Ok(ContourValue {
        value,
        tail_norm,
        error_estimate,
        nodes: n,
    })
}

/// Weights `γ_i` with `tail = Σ_i γ_i · mass_i` under the model
/// `mass([a,b]) = Σ_j D_j ((a/R)^{-κ_j} − (b/R)^{-κ_j})/κ_j`,
/// `tail = Σ_j D_j/κ_j`, `κ_j = κ + j`.
fn tail_coefficients(
    panels: &[Panel],
    idx: &[usize],
    radius: f64,
    kappa: Complex64,
    k: usize,
) -> Result<Vec<Complex64>> {
    let kappas: Vec<Complex64> = (0..k).map(|j| kappa + j as f64).collect();
    let beta = DenseMatrix::from_fn(k, k, |i, j| {
        let p = panels[idx[i]];
        let kj = kappas[j];
        (cpow_real(p.a / radius, -kj) - cpow_real(p.b / radius, -kj)) / kj
    });
    let inv = crate::linops::inverse(&beta).map_err(|_| Error::InvalidContour("degenerate tail fit".into()))?;
    Ok((0..k)
        .map(|i| (0..k).map(|j| inv[(j, i)] / kappas[j]).fold(ZERO, |a, b| a + b))
        .collect())
}

fn cpow_real(x: f64, w: Complex64) -> Complex64 {
    (w * x.ln()).exp()
}

/// The Dunford integral `(1/2πi) ∫ g(λ) dλ` over `spec`. With a declared
/// decay exponent the tail beyond `R` is extrapolated; otherwise the outer
/// panel mass must already be below `tol_tail`.
pub fn dunford<F>(spec: &ContourSpec, integrand: F) -> Result<ContourValue>
where
    F: Fn(Complex64) -> Result<DenseMatrix> + Sync + Send,
{
    let layout = spec.layout()?;
    let policy = match spec.decay {
        Some(kappa) => TailPolicy::Extrapolate {
            kappa,
            terms: spec.tail_terms.max(1),
            tol: spec.tol_tail,
        },
        None => TailPolicy::LastPanel { tol: spec.tol_tail },
    };
    integrate(&layout, policy, spec.exec, integrand)
}

/// Principal logarithm-based `(−λ)^w`.
pub fn neg_pow(lambda: Complex64, w: Complex64) -> Complex64 {
    crate::linops::cpow(-lambda, w)
}

/// Unit complex number on the ray at `angle`.
pub fn ray(angle: f64) -> Complex64 {
    Complex64::from_polar(1.0, angle)
}

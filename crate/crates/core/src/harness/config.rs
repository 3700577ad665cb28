//! Versioned JSON experiment configs and the pipelines they drive.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::recipe::{generate, generate_pair, OperatorRecipe};
use crate::calculus::{
    bip_fit, builtin_symbol, complex_power, hinf_apply_auto, power, power_contour, sampled_sup, SymbolSampling,
};
use crate::contour::ContourValue;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linops::{c, matrix_to_csv, operator_norm, read_matrix_csv, ShiftedLu, VectorE};
use crate::maxreg::{default_maxreg_probes, maxreg_constant, maxreg_ladder, p_independence_probe, Probe, TimeGrid};
use crate::report::{write_report, CertificateReport};
use crate::sector::{certify_sector, MatrixOperator, SectorSampling};
use crate::sum::{
    closedness_certificate, default_probes, sum_inverse_auto, weighted_identity_left, weighted_identity_right,
    CommutingPair, DEFAULT_COMMUTE_TOLERANCE,
};
use crate::tsector::{resolvent_rep_real, resolvent_rep_rotated, witness_search, MultiplierFamily, TrigPolynomial};

pub const CONFIG_SCHEMA: u32 = 1;
pub const DEFAULT_SEED: u64 = 20_240_601;
/// Agreement required between representation formulas and direct solves.
const REP_CHECK_TOL: f64 = 1e-5;
/// Residual `‖𝒦(A+B) − I‖` accepted by the sum pipeline.
const SUM_RESIDUAL_TOL: f64 = 1e-6;
/// Agreement required for the weighted identities.
const IDENTITY_TOL: f64 = 1e-6;
const CERTIFICATE_THETAS: [f64; 3] = [0.25, 0.5, 0.75];
const SWEEP_EXPONENTS: [f64; 4] = [1.5, 2.0, 3.0, 4.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub exec: Exec,
    pub pipeline: Pipeline,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum OperatorSource {
    Recipe(OperatorRecipe),
    /// Matrix CSV, relative to the config file's directory.
    MatrixFile(PathBuf),
}

impl OperatorSource {
    pub fn load(&self, base: &Path) -> Result<MatrixOperator> {
        match self {
            Self::Recipe(r) => generate(r),
            Self::MatrixFile(p) => MatrixOperator::new(read_matrix_csv(base.join(p))?),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Pipeline {
    Certify {
        operator: OperatorSource,
        theta: f64,
        #[serde(default)]
        sampling: Option<SectorSampling>,
    },
    Power {
        operator: OperatorSource,
        z: [f64; 2],
    },
    Hinf {
        operator: OperatorSource,
        symbol: String,
        theta: f64,
    },
    Sum {
        a: OperatorSource,
        b: OperatorSource,
        /// Sector angles; derived from the spectra when absent.
        #[serde(default)]
        theta_a: Option<f64>,
        #[serde(default)]
        theta_b: Option<f64>,
        /// Weight `w` for the weighted identities `A𝒦A^w`, `B𝒦B^w`.
        #[serde(default)]
        check_identities: Option<[f64; 2]>,
        /// Also compute the closedness certificate.
        #[serde(default)]
        certify: bool,
    },
    PairSum {
        recipe: OperatorRecipe,
    },
    TSector {
        operator: OperatorSource,
        phi: f64,
        r: f64,
        p: f64,
        n_t: usize,
        /// `x_k` as lists of `[re, im]`.
        coefficients: Vec<Vec<[f64; 2]>>,
        family: MultiplierFamily,
    },
    RepCheck {
        operator: OperatorSource,
        rho: f64,
        theta: f64,
        #[serde(default)]
        x: Option<Vec<[f64; 2]>>,
    },
    Maxreg {
        operator: OperatorSource,
        tau: f64,
        n_t: usize,
        p: f64,
        #[serde(default)]
        probes: Option<Vec<Probe>>,
        /// Number of grid levels (doubling `n_t`).
        #[serde(default = "one")]
        levels: usize,
        /// Repeat at p ∈ {1.5, 2, 3, 4} and report the spread instead.
        #[serde(default)]
        sweep_p: bool,
    },
    /// Maximal-regularity constants for `laplacian-1d(m)` over `sizes`.
    Sweep {
        sizes: Vec<usize>,
        tau: f64,
        n_t: usize,
        p: f64,
    },
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
    if cfg.schema != CONFIG_SCHEMA {
        return Err(Error::ConfigInvalid(format!(
            "schema {} is not supported (expected {CONFIG_SCHEMA})",
            cfg.schema
        )));
    }
    Ok(cfg)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| Error::ConfigInvalid(format!("{}: {e}", path.as_ref().display())))?;
    parse_config(&text)
}

/// A pipeline's report and optional CSV plot data.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub report: CertificateReport,
    pub csv: Option<String>,
}

fn vector(entries: &[[f64; 2]]) -> VectorE {
    VectorE::from_iterator(entries.len(), entries.iter().map(|[re, im]| c(*re, *im)))
}

fn with_context(stage: &str, e: Error) -> Error {
    match e {
        Error::ConfigInvalid(m) => Error::ConfigInvalid(format!("{stage}: {m}")),
        Error::InvalidInput(m) => Error::InvalidInput(format!("{stage}: {m}")),
        other => other,
    }
}

/// Runs one pipeline; relative matrix paths resolve against `base`.
pub fn run_pipeline(cfg: &ExperimentConfig, base: &Path) -> Result<PipelineOutput> {
    let inputs = json!({"pipeline": cfg.pipeline, "seed": cfg.seed});
    let out = |report: CertificateReport| PipelineOutput { report, csv: None };
    match &cfg.pipeline {
        Pipeline::Certify {
            operator,
            theta,
            sampling,
        } => {
            let a = operator.load(base)?;
            let sampling = SectorSampling {
                exec: cfg.exec,
                ..sampling.clone().unwrap_or_default()
            };
            let est = certify_sector(&a, *theta, &sampling)?;
            Ok(out(est.report(&a, &sampling)))
        }
        Pipeline::Power { operator, z } => {
            let a = operator.load(base)?;
            let z = c(z[0], z[1]);
            let spec = power_contour(&a)?.with_exec(cfg.exec);
            // Re z ≥ 0 goes through A^m·A^{z−m}
            let v = if z.re < 0.0 {
                complex_power(&a, z, &spec)?
            } else {
                ContourValue {
                    value: power(&a, z)?,
                    tail_norm: 0.0,
                    error_estimate: 0.0,
                    nodes: 0,
                }
            };
            Ok(out(CertificateReport::new("power", inputs)
                .nodes("contour", v.nodes)
                .tolerance("tail", spec.tol_tail)
                .output("value", matrix_to_csv(&v.value))
                .output("norm", operator_norm(&v.value))
                .output("error_estimate", v.error_estimate)))
        }
        Pipeline::Hinf {
            operator,
            symbol,
            theta,
        } => {
            let a = operator.load(base)?;
            let f = builtin_symbol(symbol, *theta)?;
            let v = hinf_apply_auto(&f, &a, cfg.exec)?;
            let norm = operator_norm(&v.value);
            let sup = sampled_sup(&f, &SymbolSampling::default());
            Ok(out(CertificateReport::new("hinf", inputs)
                .nodes("contour", v.nodes)
                .output("value", matrix_to_csv(&v.value))
                .output("norm", norm)
                .output("sampled_sup", sup)
                .output("ratio", norm / sup)
                .output("error_estimate", v.error_estimate)))
        }
        Pipeline::Sum { .. } | Pipeline::PairSum { .. } => {
            let (pair, weight, certify) = match &cfg.pipeline {
                Pipeline::Sum {
                    a,
                    b,
                    theta_a,
                    theta_b,
                    check_identities,
                    certify,
                } => {
                    let (a, b) = (a.load(base)?, b.load(base)?);
                    let pair = match (theta_a, theta_b) {
                        (Some(ta), Some(tb)) => CommutingPair::new(a, b, *ta, *tb, DEFAULT_COMMUTE_TOLERANCE)?,
                        (None, None) => CommutingPair::from_spectra(a, b, DEFAULT_COMMUTE_TOLERANCE)?,
                        _ => return Err(Error::ConfigInvalid("give both theta_a and theta_b or neither".into())),
                    };
                    (pair, *check_identities, *certify)
                }
                Pipeline::PairSum { recipe } => {
                    let (a, b) = generate_pair(recipe)?;
                    (
                        CommutingPair::from_spectra(a, b, DEFAULT_COMMUTE_TOLERANCE)?,
                        None,
                        false,
                    )
                }
                _ => unreachable!(),
            };
            let inv = sum_inverse_auto(&pair)?;
            let residual = inv.residual_left.max(inv.residual_right);
            let mut passed = residual <= SUM_RESIDUAL_TOL;
            let mut report = CertificateReport::new("sum-inverse", inputs)
                .nodes("contour", inv.nodes)
                .tolerance("residual", SUM_RESIDUAL_TOL)
                .output("k", matrix_to_csv(&inv.k))
                .output("residual", residual)
                .output("error_estimate", inv.error_estimate)
                .output("theta_a", pair.theta_a)
                .output("theta_b", pair.theta_b);
            if let Some([re, im]) = weight {
                let w = c(re, im);
                let left = weighted_identity_left(&pair, w, None)?.diff;
                let right = weighted_identity_right(&pair, w, None)?.diff;
                passed &= left.max(right) <= IDENTITY_TOL;
                report = report
                    .tolerance("identities", IDENTITY_TOL)
                    .output("identity_left_diff", left)
                    .output("identity_right_diff", right);
            }
            if certify {
                let probes = default_probes(pair.dim(), cfg.seed);
                let cert = closedness_certificate(&pair, &probes, &CERTIFICATE_THETAS)?;
                report = report
                    .output("c_ab", cert.c_ab)
                    .output("theta_values", &cert.theta_values)
                    .with_seed(cfg.seed);
            }
            Ok(out(report.passed(passed)))
        }
        Pipeline::TSector {
            operator,
            phi,
            r,
            p,
            n_t,
            coefficients,
            family,
        } => {
            let a = operator.load(base)?;
            let xs = coefficients.iter().map(|x| vector(x)).collect();
            let poly = TrigPolynomial::new(xs, *n_t, *p)?;
            let rep = witness_search(&a, *phi, *r, &poly, family)?;
            Ok(out(rep.report(&a, &poly)))
        }
        Pipeline::RepCheck {
            operator,
            rho,
            theta,
            x,
        } => {
            let a = operator.load(base)?;
            let x = x
                .as_ref()
                .map(|x| vector(x))
                .unwrap_or_else(|| VectorE::from_element(a.dim(), c(1.0, 0.0)));
            let fit = bip_fit(&a, 4.0, 17)?;
            let real = resolvent_rep_real(&a, &fit, *rho, &x, None, None, cfg.exec)?;
            let rotated = resolvent_rep_rotated(&a, &fit, *rho, *theta, &x, None, None, cfg.exec)?;
            // (I + μA)^{-1}x = μ^{-1}(A + μ^{-1})^{-1}x
            let direct =
                |mu: Complex64| -> Result<VectorE> { ShiftedLu::new(a.matrix(), mu.inv())?.solve_vec(&(&x / mu)) };
            let err_real = (&real.value - direct(c(*rho, 0.0))?).norm();
            let err_rot = (&rotated.value - direct(Complex64::from_polar(*rho, *theta))?).norm();
            let show = |v: &VectorE| v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>();
            Ok(out(CertificateReport::new("rep-check", inputs)
                .nodes("real", real.nodes)
                .nodes("rotated", rotated.nodes)
                .tolerance("agreement", REP_CHECK_TOL)
                .output("bip_m", fit.m)
                .output("bip_phi", fit.phi)
                .output("real", show(&real.value))
                .output("rotated", show(&rotated.value))
                .output("error_real", err_real)
                .output("error_rotated", err_rot)
                .output("cutoff", rotated.cutoff)
                .passed(err_real <= REP_CHECK_TOL && err_rot <= REP_CHECK_TOL)))
        }
        Pipeline::Maxreg {
            operator,
            tau,
            n_t,
            p,
            probes,
            levels,
            sweep_p,
        } => {
            let a = operator.load(base)?;
            let grid = TimeGrid::new(*tau, *n_t, *p)?;
            let probes = probes
                .clone()
                .unwrap_or_else(|| default_maxreg_probes(a.dim(), *tau, cfg.seed));
            if *sweep_p {
                let rep = p_independence_probe(&a, &grid, &SWEEP_EXPONENTS, &probes)?;
                return Ok(out(rep.with_seed(cfg.seed)));
            }
            let rep = maxreg_ladder(&a, &grid, &probes, *levels)?;
            let mut csv = String::from("n_t,constant_fprime,constant_af\n");
            for (n, f, af) in &rep.ladder {
                csv.push_str(&format!("{n},{f:.12e},{af:.12e}\n"));
            }
            Ok(PipelineOutput {
                report: rep.report(&a, &probes).with_seed(cfg.seed),
                csv: Some(csv),
            })
        }
        Pipeline::Sweep { sizes, tau, n_t, p } => {
            if sizes.is_empty() {
                return Err(Error::ConfigInvalid("sweep needs at least one size".into()));
            }
            let grid = TimeGrid::new(*tau, *n_t, *p)?;
            let mut csv = String::from("m,n_t,p,constant_fprime,constant_af\n");
            let mut rows = Vec::new();
            for &m in sizes {
                let a = generate(&OperatorRecipe::Laplacian1d { m })?;
                let probes = default_maxreg_probes(m, *tau, cfg.seed);
                let rep = maxreg_constant(&a, &grid, &probes)?;
                csv.push_str(&format!(
                    "{m},{},{},{:.12e},{:.12e}\n",
                    grid.n_t, grid.p, rep.constant_fprime, rep.constant_af
                ));
                rows.push(json!({"m": m, "constant_fprime": rep.constant_fprime, "constant_af": rep.constant_af}));
            }
            let finite = rows.iter().all(|r| {
                r["constant_fprime"].as_f64().is_some_and(f64::is_finite)
                    && r["constant_af"].as_f64().is_some_and(f64::is_finite)
            });
            Ok(PipelineOutput {
                report: CertificateReport::new("sweep", inputs)
                    .nodes("n_t", grid.n_t)
                    .output("rows", rows)
                    .with_seed(cfg.seed)
                    .passed(finite),
                csv: Some(csv),
            })
        }
    }
    .map_err(|e| with_context("pipeline", e))
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: CertificateReport,
    pub report_path: PathBuf,
    pub csv_path: Option<PathBuf>,
}

/// Loads a config, runs its pipeline and writes
/// `<out>/<name-or-operation>-<run_id>.json` (plus `.csv` when the pipeline
/// produces plot data).
pub fn run_experiment(config_path: impl AsRef<Path>, out_dir: impl AsRef<Path>) -> Result<ExperimentOutcome> {
    let config_path = config_path.as_ref();
    let cfg = load_config(config_path)?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    write_outputs(&cfg, run_pipeline(&cfg, base)?, out_dir.as_ref())
}

pub(crate) fn write_outputs(
    cfg: &ExperimentConfig,
    output: PipelineOutput,
    out_dir: &Path,
) -> Result<ExperimentOutcome> {
    std::fs::create_dir_all(out_dir)?;
    let stem = format!(
        "{}-{}",
        cfg.name.as_deref().unwrap_or(&output.report.operation),
        output.report.run_id
    );
    let report_path = out_dir.join(format!("{stem}.json"));
    write_report(&report_path, &output.report)?;
    let csv_path = match &output.csv {
        Some(text) => {
            let path = out_dir.join(format!("{stem}.csv"));
            std::fs::write(&path, text)?;
            Some(path)
        }
        None => None,
    };
    Ok(ExperimentOutcome {
        report: output.report,
        report_path,
        csv_path,
    })
}

impl ExperimentConfig {
    pub fn new(pipeline: Pipeline) -> Self {
        Self {
            schema: CONFIG_SCHEMA,
            name: None,
            seed: DEFAULT_SEED,
            exec: Exec::default(),
            pipeline,
        }
    }

    /// Runs the pipeline and writes its outputs into `out_dir`.
    pub fn run(&self, base: &Path, out_dir: &Path) -> Result<ExperimentOutcome> {
        write_outputs(self, run_pipeline(self, base)?, out_dir)
    }
}

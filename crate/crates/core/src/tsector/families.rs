//! Finite families of unimodular multipliers `a_0(t), …, a_n(t)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const QUARTER_PHASES: [f64; 4] = [0.0, PI / 2.0, PI, 3.0 * PI / 2.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MultiplierFamily {
    /// `a_k(t) = e^{i(mkt + β_k)}` with `β_k` drawn from `phases`; all
    /// combinations when there are at most `max_members`, otherwise a seeded
    /// subset that always contains `β ≡ 0`.
    PureHarmonics {
        phases: Vec<f64>,
        max_members: usize,
        seed: u64,
    },
    /// Unimodular step functions constant on `m` equal segments, phases
    /// drawn from the quarter turns.
    PiecewiseConstant {
        segments: Vec<usize>,
        members_per_segment: usize,
        seed: u64,
    },
    /// Shifted exponentials `a_k(t) = e^{imk(t+s)}`, `s = 2πj/shifts`.
    ProofDerived { shifts: usize },
}

impl MultiplierFamily {
    pub fn pure_harmonics() -> Self {
        Self::PureHarmonics {
            phases: QUARTER_PHASES.to_vec(),
            max_members: 256,
            seed: 7,
        }
    }

    pub fn piecewise_constant() -> Self {
        Self::PiecewiseConstant {
            segments: vec![4, 8],
            members_per_segment: 64,
            seed: 11,
        }
    }

    pub fn proof_derived() -> Self {
        Self::ProofDerived { shifts: 16 }
    }

    pub fn from_kind(kind: &str) -> Result<Self> {
        match kind {
            "pure-harmonics" => Ok(Self::pure_harmonics()),
            "piecewise-constant" => Ok(Self::piecewise_constant()),
            "proof-derived" => Ok(Self::proof_derived()),
            other => Err(Error::invalid(format!(
                "unknown family {other:?}; expected pure-harmonics, piecewise-constant or proof-derived"
            ))),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::PureHarmonics { .. } => "pure-harmonics",
            Self::PiecewiseConstant { .. } => "piecewise-constant",
            Self::ProofDerived { .. } => "proof-derived",
        }
    }

    /// Every member sampled at `t_j = 2πj/n_t` for `terms` coefficients and
    /// harmonic step `m`.
    pub fn members(&self, terms: usize, n_t: usize, m: usize) -> Result<Vec<Witness>> {
        let t: Vec<f64> = (0..n_t).map(|j| 2.0 * PI * j as f64 / n_t as f64).collect();
        let mut out = Vec::new();
        match self {
            Self::PureHarmonics {
                phases,
                max_members,
                seed,
            } => {
                if phases.is_empty() || *max_members == 0 {
                    return Err(Error::invalid("pure-harmonics family needs phases and members"));
                }
                let total = (phases.len() as f64).powi(terms as i32);
                let codes: Vec<usize> = if total <= *max_members as f64 {
                    (0..total as usize).collect()
                } else {
                    let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                    let mut codes = vec![0];
                    codes.extend((1..*max_members).map(|_| rng.random_range(1..usize::MAX)));
                    codes
                };
                for code in codes {
                    let mut digits = code;
                    let betas: Vec<f64> = (0..terms)
                        .map(|_| {
                            let b = phases[digits % phases.len()];
                            digits /= phases.len();
                            b
                        })
                        .collect();
                    let values = betas
                        .iter()
                        .enumerate()
                        .map(|(k, &b)| t.iter().map(|&s| unit((m * k) as f64 * s + b)).collect())
                        .collect();
                    out.push(Witness {
                        label: format!("pure-harmonics beta={betas:?}"),
                        values,
                    });
                }
            }
            Self::PiecewiseConstant {
                segments,
                members_per_segment,
                seed,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                for &segs in segments {
                    if segs == 0 {
                        return Err(Error::invalid("segment count must be positive"));
                    }
                    for member in 0..*members_per_segment {
                        let phases: Vec<Vec<f64>> = (0..terms)
                            .map(|_| {
                                (0..segs)
                                    .map(|_| {
                                        if member == 0 {
                                            0.0
                                        } else {
                                            QUARTER_PHASES[sample(&mut rng, 4, 1).index(0)]
                                        }
                                    })
                                    .collect()
                            })
                            .collect();
                        let values = phases
                            .iter()
                            .map(|ph| {
                                t.iter()
                                    .map(|&s| {
                                        let j = ((s / (2.0 * PI)) * segs as f64).floor() as usize;
                                        unit(ph[j.min(segs - 1)])
                                    })
                                    .collect()
                            })
                            .collect();
                        out.push(Witness {
                            label: format!("piecewise-constant m={segs} phases={phases:?}"),
                            values,
                        });
                    }
                }
            }
            Self::ProofDerived { shifts } => {
                for j in 0..(*shifts).max(1) {
                    let shift = 2.0 * PI * j as f64 / (*shifts).max(1) as f64;
                    let values = (0..terms)
                        .map(|k| t.iter().map(|&s| unit((m * k) as f64 * (s + shift))).collect())
                        .collect();
                    out.push(Witness {
                        label: format!("proof-derived shift={shift}"),
                        values,
                    });
                }
            }
        }
        Ok(out)
    }
}

/// `e^{ix}` rounded so that `|e^{ix}| ≤ 1` holds in floating point.
pub fn unit(x: f64) -> Complex64 {
    let mut z = Complex64::from_polar(1.0, x);
    while z.norm() > 1.0 {
        z *= 1.0 - f64::EPSILON;
    }
    z
}

/// One family member: `values[k][j] = a_k(t_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub label: String,
    pub values: Vec<Vec<Complex64>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn members_are_bounded_by_one() {
        for fam in [
            MultiplierFamily::pure_harmonics(),
            MultiplierFamily::piecewise_constant(),
            MultiplierFamily::proof_derived(),
        ] {
            for w in fam.members(3, 32, 1).unwrap() {
                assert_eq!(w.values.len(), 3);
                assert!(w.values.iter().flatten().all(|z| z.norm() <= 1.0));
            }
        }
    }

    #[test]
    fn harmonics_enumerate_small_families() {
        assert_eq!(MultiplierFamily::pure_harmonics().members(2, 8, 1).unwrap().len(), 16);
        assert_eq!(MultiplierFamily::pure_harmonics().members(6, 8, 1).unwrap().len(), 256);
    }
}

//! Deterministic test-operator generators.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linops::{c, diag, diag_real, identity, inverse, DenseMatrix};
use crate::sector::MatrixOperator;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OperatorRecipe {
    /// `diag(entries)`, entries positive.
    DiagPositive { entries: Vec<f64> },
    /// `diag(e^{iψ}·entries)`.
    DiagRotated { psi: f64, entries: Vec<f64> },
    /// `a·I + N` with `N` the upper shift.
    Jordan { a: f64, size: usize },
    /// `(m+1)²·tridiag(−1, 2, −1)` of size `m`, the Dirichlet Laplacian on
    /// `(0, 1)`.
    Laplacian1d { m: usize },
    /// Two operators diagonal in one seeded, well-conditioned basis, with
    /// eigenvalue moduli in `[1, 10]` and arguments within `±ψ_A`, `±ψ_B`.
    CommutingPair {
        dim: usize,
        seed: u64,
        psi_a: f64,
        psi_b: f64,
    },
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidRecipe(msg.into())
}

impl OperatorRecipe {
    pub fn validate(&self) -> Result<()> {
        let positive = |xs: &[f64]| !xs.is_empty() && xs.iter().all(|x| *x > 0.0 && x.is_finite());
        match self {
            Self::DiagPositive { entries } if !positive(entries) => {
                Err(invalid("diag-positive needs positive entries"))
            }
            Self::DiagRotated { psi, entries } if !(psi.abs() < PI) || !positive(entries) => {
                Err(invalid("diag-rotated needs |psi| < pi and positive entries"))
            }
            Self::Jordan { a, size } if !(*a > 0.0 && a.is_finite()) || *size == 0 => {
                Err(invalid("jordan needs a > 0 and size >= 1"))
            }
            Self::Laplacian1d { m } if *m == 0 => Err(invalid("laplacian-1d needs m >= 1")),
            Self::CommutingPair { dim, psi_a, psi_b, .. }
                if *dim == 0 || !(0.0..PI).contains(psi_a) || !(0.0..PI).contains(psi_b) =>
            {
                Err(invalid("commuting-pair needs dim >= 1 and angles in [0, pi)"))
            }
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::DiagPositive { entries } => format!("diag-positive(n={})", entries.len()),
            Self::DiagRotated { psi, entries } => format!("diag-rotated(psi={psi}, n={})", entries.len()),
            Self::Jordan { a, size } => format!("jordan(a={a}, size={size})"),
            Self::Laplacian1d { m } => format!("laplacian-1d(m={m})"),
            Self::CommutingPair { dim, seed, .. } => format!("commuting-pair(dim={dim}, seed={seed})"),
        }
    }
}

pub fn laplacian_1d(m: usize) -> DenseMatrix {
    let scale = ((m + 1) * (m + 1)) as f64;
    DenseMatrix::from_fn(m, m, |i, j| {
        let v = match i.abs_diff(j) {
            0 => 2.0,
            1 => -1.0,
            _ => 0.0,
        };
        c(scale * v, 0.0)
    })
}

/// Eigenvalues `4(m+1)² sin²(kπ/(2(m+1)))`, `k = 1..=m`.
pub fn laplacian_1d_eigenvalues(m: usize) -> Vec<f64> {
    let n = (m + 1) as f64;
    (1..=m)
        .map(|k| 4.0 * n * n * (k as f64 * PI / (2.0 * n)).sin().powi(2))
        .collect()
}

fn pair_matrices(dim: usize, seed: u64, psi_a: f64, psi_b: f64) -> Result<(DenseMatrix, DenseMatrix)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cplx = || c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let perturb = DenseMatrix::from_fn(dim, dim, |_, _| cplx()) * c(0.25 / (dim as f64).sqrt(), 0.0);
    let basis = identity(dim) + perturb;
    let basis_inv = inverse(&basis)?;
    let mut spectrum = |psi: f64| -> Vec<Complex64> {
        (0..dim)
            .map(|_| Complex64::from_polar(10f64.powf(rng.random_range(0.0..1.0)), rng.random_range(-psi..=psi)))
            .collect()
    };
    let (sa, sb) = (spectrum(psi_a), spectrum(psi_b));
    Ok((&basis * diag(&sa) * &basis_inv, &basis * diag(&sb) * &basis_inv))
}

/// The operator described by `recipe`; for a commuting pair, its first
/// member.
pub fn generate(recipe: &OperatorRecipe) -> Result<MatrixOperator> {
    recipe.validate()?;
    let m = match recipe {
        OperatorRecipe::DiagPositive { entries } => diag_real(entries),
        OperatorRecipe::DiagRotated { psi, entries } => diag(
            &entries
                .iter()
                .map(|&x| Complex64::from_polar(x, *psi))
                .collect::<Vec<_>>(),
        ),
        OperatorRecipe::Jordan { a, size } => DenseMatrix::from_fn(*size, *size, |i, j| match j.wrapping_sub(i) {
            0 => c(*a, 0.0),
            1 => c(1.0, 0.0),
            _ => c(0.0, 0.0),
        }),
        OperatorRecipe::Laplacian1d { m } => laplacian_1d(*m),
        OperatorRecipe::CommutingPair {
            dim,
            seed,
            psi_a,
            psi_b,
        } => pair_matrices(*dim, *seed, *psi_a, *psi_b)?.0,
    };
    MatrixOperator::new(m)
}

pub fn generate_pair(recipe: &OperatorRecipe) -> Result<(MatrixOperator, MatrixOperator)> {
    recipe.validate()?;
    match recipe {
        OperatorRecipe::CommutingPair {
            dim,
            seed,
            psi_a,
            psi_b,
        } => {
            let (a, b) = pair_matrices(*dim, *seed, *psi_a, *psi_b)?;
            Ok((MatrixOperator::new(a)?, MatrixOperator::new(b)?))
        }
        other => Err(invalid(format!("{} does not describe a pair", other.label()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_eigenvalues_match_closed_form() {
        let a = generate(&OperatorRecipe::Laplacian1d { m: 3 }).unwrap();
        let mut ev: Vec<f64> = a.eigenvalues().iter().map(|z| z.re).collect();
        ev.sort_by(f64::total_cmp);
        for (x, y) in ev.iter().zip(laplacian_1d_eigenvalues(3)) {
            assert!((x - y).abs() < 1e-10 * y);
        }
        let m = a.matrix();
        assert_eq!(m, &m.adjoint());
    }

    #[test]
    fn rotated_and_jordan() {
        let a = generate(&OperatorRecipe::DiagRotated {
            psi: PI / 4.0,
            entries: vec![1.0, 2.0, 3.0],
        })
        .unwrap();
        assert!(a.admissible_angle() >= PI / 2.0);
        assert!((a.matrix()[(2, 2)] - Complex64::from_polar(3.0, PI / 4.0)).norm() < 1e-15);
        let j = generate(&OperatorRecipe::Jordan { a: 2.0, size: 2 }).unwrap();
        assert_eq!(
            j.matrix(),
            &DenseMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)])
        );
    }

    #[test]
    fn pairs_commute_and_are_deterministic() {
        let r = OperatorRecipe::CommutingPair {
            dim: 5,
            seed: 9,
            psi_a: 0.5,
            psi_b: 1.0,
        };
        let (a, b) = generate_pair(&r).unwrap();
        let (a2, _) = generate_pair(&r).unwrap();
        assert_eq!(a.matrix(), a2.matrix());
        assert!(crate::linops::commutator(a.matrix(), b.matrix()).norm() < 1e-11);
        assert!(a.spectral_angle() <= 0.5 + 1e-8);
        assert!(generate(&OperatorRecipe::DiagPositive {
            entries: vec![1.0, -1.0]
        })
        .is_err());
    }
}

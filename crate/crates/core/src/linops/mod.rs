//! Dense complex linear algebra: shifted solves, spectral norms and the
//! matrix exponential.

mod csv;

pub use self::csv::{format_entry, matrix_from_csv, matrix_to_csv, parse_entry, read_matrix_csv, write_matrix_csv};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexScalar = Complex64;
pub type DenseMatrix = DMatrix<Complex64>;
pub type VectorE = DVector<Complex64>;

/// A pivot below this fraction of the shifted operator's scale is treated as
/// a zero pivot.
pub const SINGULAR_PIVOT_RATIO: f64 = 1e-13;
/// Above this dimension the spectral norm is estimated by power iteration.
pub const NORM_SVD_CUTOFF: usize = 64;
/// Largest 1-norm accepted by [`matrix_exp`].
pub const EXP_NORM_BUDGET: f64 = 600.0;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn is_finite_scalar(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

pub fn check_matrix(m: &DenseMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::invalid(format!(
            "matrix must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() == 0 {
        return Err(Error::invalid("matrix must be non-empty"));
    }
    if !m.iter().all(|z| is_finite_scalar(*z)) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    Ok(())
}

pub fn check_vector(v: &VectorE, dim: usize) -> Result<()> {
    if v.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: v.len(),
        });
    }
    if !v.iter().all(|z| is_finite_scalar(*z)) {
        return Err(Error::invalid("vector has non-finite entries"));
    }
    Ok(())
}

pub fn diag(entries: &[Complex64]) -> DenseMatrix {
    DenseMatrix::from_diagonal(&VectorE::from_column_slice(entries))
}

pub fn diag_real(entries: &[f64]) -> DenseMatrix {
    DenseMatrix::from_diagonal(&VectorE::from_iterator(
        entries.len(),
        entries.iter().map(|&x| c(x, 0.0)),
    ))
}

pub fn identity(n: usize) -> DenseMatrix {
    DenseMatrix::identity(n, n)
}

pub fn infinity_norm(m: &DenseMatrix) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn one_norm(m: &DenseMatrix) -> f64 {
    m.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// LU factorization of `M + zI` with partial pivoting.
#[derive(Debug, Clone)]
pub struct ShiftedLu {
    lu: DenseMatrix,
    perm: Vec<usize>,
    shift: Complex64,
}

impl ShiftedLu {
    pub fn new(m: &DenseMatrix, z: Complex64) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: m.ncols(),
            });
        }
        let scale = infinity_norm(m).max(z.norm()).max(f64::MIN_POSITIVE);
        let threshold = SINGULAR_PIVOT_RATIO * scale;
        let mut lu = m.clone();
        for i in 0..n {
            lu[(i, i)] += z;
        }
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (mut p, mut best) = (k, lu[(k, k)].norm());
            for r in (k + 1)..n {
                let v = lu[(r, k)].norm();
                if v > best {
                    p = r;
                    best = v;
                }
            }
            if !(best >= threshold) {
                return Err(Error::SingularShift {
                    z,
                    pivot: best,
                    threshold,
                });
            }
            if p != k {
                lu.swap_rows(p, k);
                perm.swap(p, k);
            }
            let pivot = lu[(k, k)];
            for r in (k + 1)..n {
                let factor = lu[(r, k)] / pivot;
                lu[(r, k)] = factor;
                if factor != ZERO {
                    for col in (k + 1)..n {
                        let u = lu[(k, col)];
                        lu[(r, col)] -= factor * u;
                    }
                }
            }
        }
        Ok(Self { lu, perm, shift: z })
    }

    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    pub fn shift(&self) -> Complex64 {
        self.shift
    }

    #[allow(clippy::needless_range_loop)] // triangular sweeps read best with indices
    fn solve_in_place(&self, x: &mut [Complex64]) {
        let n = self.dim();
        for r in 0..n {
            let mut acc = x[r];
            for col in 0..r {
                acc -= self.lu[(r, col)] * x[col];
            }
            x[r] = acc;
        }
        for r in (0..n).rev() {
            let mut acc = x[r];
            for col in (r + 1)..n {
                acc -= self.lu[(r, col)] * x[col];
            }
            x[r] = acc / self.lu[(r, r)];
        }
    }

    pub fn solve_vec(&self, rhs: &VectorE) -> Result<VectorE> {
        check_vector(rhs, self.dim())?;
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| rhs[p]).collect();
        self.solve_in_place(&mut x);
        Ok(VectorE::from_vec(x))
    }

    pub fn solve_mat(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        let n = self.dim();
        if rhs.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: rhs.nrows(),
            });
        }
        let mut out = DenseMatrix::zeros(n, rhs.ncols());
        let mut buf = vec![ZERO; n];
        for j in 0..rhs.ncols() {
            for (i, &p) in self.perm.iter().enumerate() {
                buf[i] = rhs[(p, j)];
            }
            self.solve_in_place(&mut buf);
            for i in 0..n {
                out[(i, j)] = buf[i];
            }
        }
        Ok(out)
    }

    pub fn inverse(&self) -> DenseMatrix {
        let n = self.dim();
        self.solve_mat(&identity(n)).expect("identity has matching dimension")
    }
}

/// Solves `(M + zI) x = rhs`.
pub fn solve_shifted(m: &DenseMatrix, z: Complex64, rhs: &VectorE) -> Result<VectorE> {
    check_matrix(m)?;
    check_vector(rhs, m.nrows())?;
    if !is_finite_scalar(z) {
        return Err(Error::invalid("shift must be finite"));
    }
    ShiftedLu::new(m, z)?.solve_vec(rhs)
}

/// `(M + zI)^{-1}` as a dense matrix.
pub fn shifted_inverse(m: &DenseMatrix, z: Complex64) -> Result<DenseMatrix> {
    Ok(ShiftedLu::new(m, z)?.inverse())
}

pub fn inverse(m: &DenseMatrix) -> Result<DenseMatrix> {
    shifted_inverse(m, ZERO)
}

/// Largest singular value.
pub fn operator_norm(m: &DenseMatrix) -> f64 {
    let n = m.nrows().max(m.ncols());
    if n == 0 {
        return 0.0;
    }
    if n <= NORM_SVD_CUTOFF {
        m.clone().singular_values().max()
    } else {
        gram_power_norm(m, 500, 1e-13)
    }
}

/// Power iteration on `M^H M`; converges to the largest singular value from
/// below.
pub fn gram_power_norm(m: &DenseMatrix, max_iter: usize, rel_tol: f64) -> f64 {
    let n = m.ncols();
    // deterministic start with no special alignment to canonical vectors
    let mut v = VectorE::from_iterator(n, (0..n).map(|k| c(1.0 + 0.1 * k as f64, 0.3)));
    v /= c(v.norm(), 0.0);
    let adj = m.adjoint();
    let mut sigma = 0.0;
    for _ in 0..max_iter {
        let w = m * &v;
        let u = &adj * &w;
        let norm_u = u.norm();
        if norm_u == 0.0 {
            return 0.0;
        }
        let next = norm_u.sqrt();
        v = u / c(norm_u, 0.0);
        let converged = (next - sigma).abs() <= rel_tol * next;
        sigma = next;
        if converged {
            break;
        }
    }
    (m * &v).norm().max(sigma)
}

pub fn eigenvalues(m: &DenseMatrix) -> Vec<Complex64> {
    let (_, t) = nalgebra::linalg::Schur::new(m.clone()).unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

/// `exp(M)` by scaling and squaring with a Padé approximant.
pub fn matrix_exp(m: &DenseMatrix) -> Result<DenseMatrix> {
    check_matrix(m)?;
    let norm = one_norm(m);
    if norm > EXP_NORM_BUDGET {
        return Err(Error::OverflowRisk {
            norm,
            budget: EXP_NORM_BUDGET,
        });
    }
    if norm == 0.0 {
        return Ok(identity(m.nrows()));
    }
    Ok(m.exp())
}

/// Sums terms by recursive halving; the result depends only on the order of
/// `terms`.
pub fn pairwise_sum(terms: &[DenseMatrix]) -> Option<DenseMatrix> {
    match terms.len() {
        0 => None,
        1 => Some(terms[0].clone()),
        len => {
            let (a, b) = terms.split_at(len / 2);
            let mut left = pairwise_sum(a)?;
            left += pairwise_sum(b)?;
            Some(left)
        }
    }
}

pub fn pairwise_sum_vec(terms: &[VectorE]) -> Option<VectorE> {
    match terms.len() {
        0 => None,
        1 => Some(terms[0].clone()),
        len => {
            let (a, b) = terms.split_at(len / 2);
            let mut left = pairwise_sum_vec(a)?;
            left += pairwise_sum_vec(b)?;
            Some(left)
        }
    }
}

pub fn commutator(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    a * b - b * a
}

/// Principal-branch power `z^w` with `0^w = 0` for `Re w > 0`.
pub fn cpow(z: Complex64, w: Complex64) -> Complex64 {
    if z == ZERO {
        if w == ZERO {
            return ONE;
        }
        return ZERO;
    }
    (w * z.ln()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn real(rows: &[&[f64]]) -> DenseMatrix {
        let n = rows.len();
        DenseMatrix::from_fn(n, n, |i, j| c(rows[i][j], 0.0))
    }

    #[test]
    fn solve_examples() {
        let x = solve_shifted(&real(&[&[1.0]]), ONE, &VectorE::from_vec(vec![ONE])).unwrap();
        assert_relative_eq!(x[0].re, 0.5, epsilon = 1e-15);

        let x = solve_shifted(&diag_real(&[1.0, 2.0]), ZERO, &VectorE::from_vec(vec![ONE, ONE])).unwrap();
        assert_relative_eq!(x[0].re, 1.0, epsilon = 1e-15);
        assert_relative_eq!(x[1].re, 0.5, epsilon = 1e-15);

        // back substitution: x2 = 0, x1 = 1/2
        let x = solve_shifted(
            &real(&[&[2.0, 1.0], &[0.0, 2.0]]),
            ZERO,
            &VectorE::from_vec(vec![ONE, ZERO]),
        )
        .unwrap();
        assert_relative_eq!(x[0].re, 0.5, epsilon = 1e-15);
        assert_relative_eq!(x[1].norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn singular_and_mismatch_errors() {
        let err = solve_shifted(&real(&[&[-1.0]]), ONE, &VectorE::from_vec(vec![ONE]));
        assert!(matches!(err, Err(Error::SingularShift { .. })));
        let err = solve_shifted(&identity(2), ONE, &VectorE::from_vec(vec![ONE]));
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
        let mut bad = identity(2);
        bad[(0, 1)] = c(f64::NAN, 0.0);
        assert!(solve_shifted(&bad, ONE, &VectorE::from_vec(vec![ONE, ONE])).is_err());
    }

    #[test]
    fn norm_examples() {
        assert_relative_eq!(operator_norm(&diag_real(&[1.0, 2.0])), 2.0, epsilon = 1e-14);
        assert_relative_eq!(operator_norm(&real(&[&[0.0, 1.0], &[0.0, 0.0]])), 1.0, epsilon = 1e-14);
        // largest root of s^4 - 9 s^2 + 16: s^2 = (9 + sqrt(17)) / 2
        let expected = ((9.0 + 17f64.sqrt()) / 2.0).sqrt();
        assert_relative_eq!(
            operator_norm(&real(&[&[2.0, 1.0], &[0.0, 2.0]])),
            expected,
            epsilon = 1e-13
        );
        assert_relative_eq!(expected, 2.5616, epsilon = 1e-4);
    }

    #[test]
    fn power_iteration_matches_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = DenseMatrix::from_fn(20, 20, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let svd = m.clone().singular_values().max();
        assert_relative_eq!(gram_power_norm(&m, 5000, 1e-15), svd, max_relative = 1e-8);
    }

    #[test]
    fn exp_examples() {
        assert_eq!(matrix_exp(&DenseMatrix::zeros(3, 3)).unwrap(), identity(3));
        let e = matrix_exp(&diag_real(&[1.0])).unwrap();
        assert_relative_eq!(e[(0, 0)].re, std::f64::consts::E, epsilon = 1e-14);
        let e = matrix_exp(&real(&[&[0.0, 1.0], &[0.0, 0.0]])).unwrap();
        let expected = real(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert!((e - expected).norm() < 1e-14);
        let big = diag_real(&[1e4]);
        assert!(matches!(matrix_exp(&big), Err(Error::OverflowRisk { .. })));
    }

    fn random_matrix(seed: u64, n: usize, scale: f64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(n, n, |_, _| {
            c(rng.random_range(-scale..scale), rng.random_range(-scale..scale))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn solve_residual_is_small(seed in 0u64..10_000, n in 1usize..=32) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            let m = random_matrix(seed, n, 1.0 / (n as f64).sqrt());
            // shift well outside the disc containing the spectrum
            let z = c(2.0 + rng.random_range(0.0..3.0), rng.random_range(-2.0..2.0));
            let rhs = VectorE::from_fn(n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let x = solve_shifted(&m, z, &rhs).unwrap();
            let residual = (&m * &x + &x * z - &rhs).norm();
            prop_assert!(residual <= 1e-10 * rhs.norm());
        }

        #[test]
        fn norm_bounds_images(seed in 0u64..10_000, n in 1usize..=12) {
            let m = random_matrix(seed, n, 1.0);
            let norm = operator_norm(&m);
            let x = random_matrix(seed + 1, n, 1.0).column(0).into_owned();
            prop_assert!((&m * &x).norm() <= norm * x.norm() * (1.0 + 1e-12));
            let svd = m.clone().svd(false, true);
            let k = svd.singular_values.imax();
            let top = svd.v_t.unwrap().row(k).adjoint();
            prop_assert!(((&m * &top).norm() - norm).abs() <= 1e-10 * norm);
        }

        #[test]
        fn exponential_semigroup(seed in 0u64..10_000, s in -1.0f64..1.0, t in -1.0f64..1.0) {
            let mut m = random_matrix(seed, 5, 1.0);
            let norm = operator_norm(&m);
            if norm > 5.0 {
                m *= c(5.0 / norm, 0.0);
            }
            let a = matrix_exp(&(&m * c(s, 0.0))).unwrap();
            let b = matrix_exp(&(&m * c(t, 0.0))).unwrap();
            let ab = matrix_exp(&(&m * c(s + t, 0.0))).unwrap();
            prop_assert!(operator_norm(&(a * b - ab)) <= 1e-8);
        }
    }
}

//! Properties of the operator-sum inverse and its certificates.

use num_complex::Complex64;
use proptest::prelude::*;
use sectorsum::harness::{generate_pair, OperatorRecipe};
use sectorsum::linops::{c, commutator, diag_real, identity, operator_norm, shifted_inverse};
use sectorsum::sector::MatrixOperator;
use sectorsum::sum::{
    closedness_certificate, default_probes, default_shift, sum_contour, sum_inverse, sum_inverse_auto,
    weighted_identity_left, weighted_identity_right, CommutingPair, DEFAULT_COMMUTE_TOLERANCE, DEFAULT_PROBE_SEED,
};

fn recipe_pair(dim: usize, seed: u64, psi_a: f64, psi_b: f64) -> CommutingPair {
    let (a, b) = generate_pair(&OperatorRecipe::CommutingPair {
        dim,
        seed,
        psi_a,
        psi_b,
    })
    .unwrap();
    CommutingPair::from_spectra(a, b, DEFAULT_COMMUTE_TOLERANCE).unwrap()
}

fn diagonal_pair(a: &[f64], b: &[f64]) -> CommutingPair {
    CommutingPair::from_spectra(
        MatrixOperator::new(diag_real(a)).unwrap(),
        MatrixOperator::new(diag_real(b)).unwrap(),
        DEFAULT_COMMUTE_TOLERANCE,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sum_inverse_is_two_sided(dim in 1usize..33, seed in 0u64..1000, psi_a in 0.0f64..1.2, psi_b in 0.0f64..1.2) {
        let inv = sum_inverse_auto(&recipe_pair(dim, seed, psi_a, psi_b)).unwrap();
        prop_assert!(inv.residual_left <= 1e-6 && inv.residual_right <= 1e-6, "{} {}", inv.residual_left, inv.residual_right);
    }

    #[test]
    fn sum_inverse_commutes_with_resolvents(seed in 0u64..1000, r in 0.01f64..100.0, arg in -2.0f64..2.0) {
        let pair = recipe_pair(5, seed, 0.6, 0.6);
        let k = sum_inverse_auto(&pair).unwrap().k;
        let res = shifted_inverse(pair.a.matrix(), Complex64::from_polar(r, arg)).unwrap();
        prop_assert!(operator_norm(&commutator(&k, &res)) <= 1e-8);
    }

    #[test]
    fn weighted_identities_cohere(re in -0.75f64..-0.25, im in -2.0f64..2.0) {
        let pair = diagonal_pair(&[1.0, 2.0], &[3.0, 4.0]);
        let w = c(re, im);
        prop_assert!(weighted_identity_left(&pair, w, None).unwrap().diff <= 1e-6);
        prop_assert!(weighted_identity_right(&pair, w, None).unwrap().diff <= 1e-6);
    }
}

#[test]
fn shifted_path_gives_the_same_inverse() {
    for pair in [diagonal_pair(&[1.0, 2.0], &[3.0, 4.0]), recipe_pair(6, 17, 0.8, 0.5)] {
        let base = sum_contour(&pair);
        let shift = default_shift(&pair);
        let moved = base.clone().with_delta(-shift);
        let moved = sectorsum::contour::ContourSpec {
            theta: moved.theta - shift,
            ..moved
        };
        let x = sum_inverse(&pair, &base).unwrap();
        let y = sum_inverse(&pair, &moved).unwrap();
        let diff = operator_norm(&(&x.k - &y.k));
        assert!(diff <= 1e-9 + x.error_estimate + y.error_estimate, "{diff}");
    }
}

#[test]
fn certificate_bounds_the_theta_grid() {
    for pair in [
        diagonal_pair(&[1.0, 100.0], &[1.0, 1.0]),
        diagonal_pair(&[1.0, 2.0], &[3.0, 4.0]),
        diagonal_pair(&[0.5, 7.0, 40.0], &[1.0, 2.5, 9.0]),
    ] {
        let probes = default_probes(pair.dim(), DEFAULT_PROBE_SEED);
        let cert = closedness_certificate(&pair, &probes, &[0.4, 0.2, 0.1, 0.05]).unwrap();
        for (theta, value) in &cert.theta_values {
            assert!(
                *value <= 1.1 * cert.c_ab,
                "theta {theta}: {value} > 1.1 * {}",
                cert.c_ab
            );
        }
        assert!(cert.residual_k <= 1e-6);
    }
}

#[test]
fn scalar_pair_inverse_is_half() {
    let inv = sum_inverse_auto(&diagonal_pair(&[1.0], &[1.0])).unwrap();
    assert!(operator_norm(&(inv.k - identity(1) * c(0.5, 0.0))) <= 1e-9);
}

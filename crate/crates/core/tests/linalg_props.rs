//! Randomized and property-based checks of the decomposition layer: the four
//! Moore-Penrose identities, the pseudoinverse square root, orthogonal range
//! splits against a Gram-Schmidt oracle, Householder complements against
//! brute-force complements, and reproducibility of the canonicalized output.

mod common;

use common::{gram_schmidt_basis, planted_psd, projector, random_full_row_rank, random_unit, random_vector, rng, Matrix, Vector};
use proptest::prelude::*;
use quadform::{
    householder_complement, in_range, nullspace_basis, pinv_sqrt, pseudoinverse, range_split,
    spectral_decompose, RankPolicy,
};
use rand::Rng;

fn rel(err: f64, scale: f64) -> f64 {
    err / scale.max(1.0)
}

#[test]
fn moore_penrose_identities_on_random_psd() {
    let mut rng = rng(0x11AA);
    for trial in 0..200 {
        let n = rng.random_range(1..=8);
        let rank = rng.random_range(0..=n);
        let (m, _) = planted_psd(&mut rng, n, rank);
        let sd = spectral_decompose(&m, RankPolicy::Default).unwrap();
        assert_eq!(sd.rank, rank, "trial {trial}: rank detection");
        let pinv = pseudoinverse(&sd);
        let scale = m.norm();
        // The four Moore-Penrose identities.
        assert!(rel(((&m * &pinv * &m) - &m).norm(), scale) < 1e-10, "M M† M = M");
        assert!(
            rel(((&pinv * &m * &pinv) - &pinv).norm(), pinv.norm()) < 1e-10,
            "M† M M† = M†"
        );
        let mp = &m * &pinv;
        assert!(rel((&mp - mp.transpose()).norm(), 1.0) < 1e-10, "(M M†)' = M M†");
        let pm = &pinv * &m;
        assert!(rel((&pm - pm.transpose()).norm(), 1.0) < 1e-10, "(M† M)' = M† M");
        // The square root of the pseudoinverse squares back.
        let half = pinv_sqrt(&sd);
        assert!(rel((&half * &half - &pinv).norm(), pinv.norm()) < 1e-10);
    }
}

#[test]
fn range_split_against_gram_schmidt_projector() {
    let mut rng = rng(0x22BB);
    for _ in 0..120 {
        let n = rng.random_range(1..=8);
        let rank = rng.random_range(0..=n);
        let (m, _) = planted_psd(&mut rng, n, rank);
        let sd = spectral_decompose(&m, RankPolicy::Default).unwrap();
        let k = random_vector(&mut rng, n, -2.0, 2.0);
        let split = range_split(&k, &sd).unwrap();

        // Independent projector from Gram-Schmidt on the columns of M.
        let basis = gram_schmidt_basis(&m, 1e-8);
        assert_eq!(basis.len(), rank);
        let proj = projector(&basis, n);
        let expected = &proj * &k;
        assert!((&split.in_range - expected).norm() < 1e-9 * k.norm().max(1.0));

        // Pythagoras.
        let total = k.norm_squared();
        let parts = split.in_range.norm_squared() + split.out_of_range.norm_squared();
        assert!((total - parts).abs() < 1e-10 * total.max(1.0));

        // Membership test consistency.
        let member = in_range(&k, &sd, 1e-10).unwrap();
        assert_eq!(member, split.out_norm <= 1e-10 * k.norm().max(1.0));
    }
}

#[test]
fn householder_complement_matches_bruteforce() {
    let mut rng = rng(0x33CC);
    for _ in 0..150 {
        let n = rng.random_range(2..=10);
        let xi = random_unit(&mut rng, n);
        let perp = householder_complement(&xi).unwrap();
        // Rows orthonormal, orthogonal to xi.
        let gram = &perp * perp.transpose();
        assert!((gram - Matrix::identity(n - 1, n - 1)).norm() < 1e-10);
        assert!((&perp * &xi).norm() < 1e-10);
        // Row space equals the brute-force complement: projectors agree.
        let p_rows = perp.transpose() * &perp;
        let p_expected = Matrix::identity(n, n) - &xi * xi.transpose();
        assert!((p_rows - p_expected).norm() < 1e-10);
    }
}

#[test]
fn repeated_decompositions_are_bit_identical() {
    let mut rng = rng(0x44DD);
    for _ in 0..20 {
        let n = rng.random_range(1..=6);
        let rank = rng.random_range(0..=n);
        let (m, _) = planted_psd(&mut rng, n, rank);
        let first = spectral_decompose(&m, RankPolicy::Default).unwrap();
        let second = spectral_decompose(&m.clone(), RankPolicy::Default).unwrap();
        assert_eq!(first, second);
        assert_eq!(pseudoinverse(&first), pseudoinverse(&second));
    }
}

#[test]
fn nullspace_basis_contracts() {
    let mut rng = rng(0x55EE);
    for _ in 0..100 {
        let n = rng.random_range(2..=8);
        let m = rng.random_range(1..n);
        let a = random_full_row_rank(&mut rng, m, n);
        let basis = nullspace_basis(&a, RankPolicy::Default).unwrap();
        assert_eq!(basis.rank, m);
        assert_eq!(basis.v2.ncols(), n - m);
        assert!((&a * &basis.v2).norm() < 1e-10 * a.norm().max(1.0));
        assert!(
            (basis.v2.transpose() * &basis.v2 - Matrix::identity(n - m, n - m)).norm() < 1e-10
        );
        // AA†b = b for arbitrary b (full row rank).
        let b = random_vector(&mut rng, m, -3.0, 3.0);
        let x = &basis.pinv * &b;
        assert!((&a * x - &b).norm() < 1e-9 * b.norm().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Reconstruction: the truncated decomposition reproduces the matrix
    /// within the recorded tolerance.
    #[test]
    fn reconstruction_within_rank_tol(
        entries in proptest::collection::vec(-2.0f64..2.0, 1..=12),
    ) {
        // Build a PSD matrix B B' from whatever rectangle the entries fill.
        let n = (entries.len() as f64).sqrt().floor().max(1.0) as usize;
        let cols = entries.len() / n;
        prop_assume!(cols >= 1);
        let b = Matrix::from_iterator(n, cols, entries.into_iter().take(n * cols));
        let m = &b * b.transpose();
        let m = (&m + m.transpose()) * 0.5;
        let sd = spectral_decompose(&m, RankPolicy::Default).unwrap();
        let err = (sd.reconstruct() - &m).norm();
        prop_assert!(err <= (sd.rank_tol * (m.nrows() as f64)).max(1e-12) * m.norm().max(1.0));
        // Eigenvalues kept are strictly above the threshold.
        for s in &sd.sigma1 {
            prop_assert!(*s > sd.rank_tol);
        }
    }

    /// The split always reconstructs and stays orthogonal.
    #[test]
    fn split_reconstructs(seed in 0u64..1000) {
        let mut rng = rng(seed);
        let n = rng.random_range(1..=6);
        let rank = rng.random_range(0..=n);
        let (m, _) = planted_psd(&mut rng, n, rank);
        let sd = spectral_decompose(&m, RankPolicy::Default).unwrap();
        let k: Vector = random_vector(&mut rng, n, -5.0, 5.0);
        let split = range_split(&k, &sd).unwrap();
        prop_assert!((&split.in_range + &split.out_of_range - &k).norm() <= 1e-12 * k.norm().max(1.0));
        prop_assert!(split.in_range.dot(&split.out_of_range).abs() <= 1e-12 * k.norm_squared().max(1.0));
    }
}

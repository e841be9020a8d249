use gapforge::eigen::{smallest_eigenpairs, smallest_eigenpairs_with, Backend, EigenOptions};
use gapforge::lattice::{KPoint, LatticeParams};
use gapforge::operator::{
    assemble_bloch_2d, free_symbol_2d, HermitianOperator, OperatorKind, PotentialGrid,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn random_hermitian(dim: usize, seed: u64) -> DMatrix<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    (&a + a.adjoint()) * c(0.5)
}

#[test]
fn free_square_gamma_lowest_five() {
    let n = 32;
    let v = PotentialGrid::constant(2, n, 0.0, 1.0).unwrap();
    let h = assemble_bloch_2d(LatticeParams::square(), KPoint::gamma(), &v, n).unwrap();
    let e = smallest_eigenpairs(&h, 5, 1e-10).unwrap();
    let mut sym = free_symbol_2d(LatticeParams::square(), KPoint::gamma(), n)
        .unwrap()
        .values;
    sym.sort_by(f64::total_cmp);
    for i in 0..5 {
        assert!(
            (e.values[i] - sym[i]).abs() < 1e-8 * (1.0 + sym[i]),
            "{} vs {}",
            e.values[i],
            sym[i]
        );
    }
    assert!(e.values[0].abs() < 1e-8);
    for i in 1..5 {
        // Continuum value 4 pi^2, discretization error O(h^2).
        assert!((e.values[i] - 4.0 * PI * PI).abs() < 4.0 * PI * PI * 0.01);
    }
    assert!(e.orthonormality_defect() < 1e-8);
    for (r, l) in e.residuals(&h).iter().zip(&e.values) {
        assert!(*r <= 1e-10 * (1.0 + l.abs()) * 1.01);
    }
}

#[test]
fn dirichlet_tridiagonal_closed_form() {
    let n = 50;
    let hh = 1.0 / (n + 1) as f64;
    let rows = (0..n)
        .map(|i| {
            let mut r = vec![(i, c(2.0 / (hh * hh)))];
            if i > 0 {
                r.push((i - 1, c(-1.0 / (hh * hh))));
            }
            if i + 1 < n {
                r.push((i + 1, c(-1.0 / (hh * hh))));
            }
            r
        })
        .collect();
    let h = HermitianOperator::from_rows(rows, OperatorKind::Custom, hh);
    let e = smallest_eigenpairs(&h, 4, 1e-12).unwrap();
    for j in 1..=4 {
        let exact = 4.0 / (hh * hh) * (j as f64 * PI * hh / 2.0).sin().powi(2);
        assert!((e.values[j - 1] - exact).abs() < 1e-9 * exact);
    }
}

#[test]
fn dense_and_iterative_agree_on_random_hermitian() {
    for seed in 0..3 {
        let m = random_hermitian(200, seed);
        let h = HermitianOperator::from_dense(&m).unwrap();
        let dense = smallest_eigenpairs_with(
            &h,
            6,
            &EigenOptions {
                backend: Backend::Dense,
                ..Default::default()
            },
            None,
        )
        .unwrap();
        let it = smallest_eigenpairs_with(
            &h,
            6,
            &EigenOptions {
                backend: Backend::Iterative,
                tol: 1e-11,
                max_iters: 2000,
                ..Default::default()
            },
            None,
        )
        .unwrap();
        for i in 0..6 {
            assert!(
                (dense.values[i] - it.values[i]).abs() < 1e-8,
                "seed {seed} i {i}: {} vs {}",
                dense.values[i],
                it.values[i]
            );
        }
    }
}

#[test]
fn diagonal_shift_moves_eigenvalues() {
    let m = random_hermitian(40, 9);
    let h = HermitianOperator::from_dense(&m).unwrap();
    let shifted = h.add_diagonal(&vec![2.5; 40]);
    let a = smallest_eigenpairs(&h, 4, 1e-10).unwrap();
    let b = smallest_eigenpairs(&shifted, 4, 1e-10).unwrap();
    for i in 0..4 {
        assert!((a.values[i] + 2.5 - b.values[i]).abs() < 1e-9);
    }
}

#[test]
fn potential_operator_iterative_matches_dense() {
    let n = 20;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let vals = (0..n * n)
        .map(|_| {
            if rng.random::<f64>() < 0.5 {
                0.0
            } else {
                100.0
            }
        })
        .collect();
    let v = PotentialGrid::new(2, n, vals, 100.0).unwrap();
    let p = LatticeParams::new(0.2, 1.3).unwrap();
    let h = assemble_bloch_2d(p, KPoint::new(0.9, -0.4), &v, n).unwrap();
    let dense = smallest_eigenpairs_with(
        &h,
        6,
        &EigenOptions {
            backend: Backend::Dense,
            ..Default::default()
        },
        None,
    )
    .unwrap();
    let it = smallest_eigenpairs_with(
        &h,
        6,
        &EigenOptions {
            backend: Backend::Iterative,
            ..Default::default()
        },
        None,
    )
    .unwrap();
    for i in 0..6 {
        assert!((dense.values[i] - it.values[i]).abs() < 1e-8 * (1.0 + dense.values[i].abs()));
    }
}

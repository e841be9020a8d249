use gapforge::lattice::{
    basis_from_params, half_bz_grid, in_closed_bz, reciprocal_basis, reduce_to_bz,
    reduce_to_fundamental, Basis, LatticeParams,
};
use nalgebra::{Matrix2, Vector2};
use proptest::prelude::*;
use std::f64::consts::PI;

fn params() -> impl Strategy<Value = LatticeParams> {
    (0.0..=0.5f64, 0.0..1.5f64).prop_map(|(a, t)| {
        // Smallest admissible b for this a, plus a margin.
        let b = (1.0 - a * a).sqrt() + t;
        LatticeParams::new(a, b).expect("inside the domain")
    })
}

fn unimodular() -> impl Strategy<Value = Matrix2<f64>> {
    prop::collection::vec((-3i32..=3, any::<bool>()), 1..5).prop_map(|steps| {
        steps
            .into_iter()
            .fold(Matrix2::identity(), |acc, (s, upper)| {
                let s = s as f64;
                let e = if upper {
                    Matrix2::new(1.0, s, 0.0, 1.0)
                } else {
                    Matrix2::new(1.0, 0.0, s, 1.0)
                };
                acc * e
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn reduction_undoes_similarity_and_basis_change(
        p in params(),
        angle in 0.0..(2.0 * PI),
        flip in any::<bool>(),
        u in unimodular(),
        scale in 0.2..5.0f64,
    ) {
        let b = *basis_from_params(p).unwrap().matrix();
        let rot = Matrix2::new(angle.cos(), -angle.sin(), angle.sin(), angle.cos());
        let refl = if flip { Matrix2::new(1.0, 0.0, 0.0, -1.0) } else { Matrix2::identity() };
        let q = reduce_to_fundamental(&(rot * refl * b * u * scale)).unwrap();
        prop_assert!((q.a - p.a).abs() < 1e-9 && (q.b - p.b).abs() < 1e-9, "{p:?} -> {q:?}");
    }

    #[test]
    fn reduction_lands_in_the_domain_and_is_idempotent(
        m in prop::array::uniform4(-3.0..3.0f64),
    ) {
        let m = Matrix2::new(m[0], m[1], m[2], m[3]);
        prop_assume!(m.determinant().abs() > 0.05);
        let q = reduce_to_fundamental(&m).unwrap();
        prop_assert!(q.validate().is_ok());
        let again = reduce_to_fundamental(basis_from_params(q).unwrap().matrix()).unwrap();
        prop_assert!((again.a - q.a).abs() < 1e-12 && (again.b - q.b).abs() < 1e-12);
    }

    #[test]
    fn reciprocal_basis_is_dual(p in params()) {
        let b = basis_from_params(p).unwrap();
        let r = reciprocal_basis(&b).unwrap();
        let d = b.matrix().transpose() * r - Matrix2::identity() * (2.0 * PI);
        prop_assert!(d.abs().max() < 1e-12);
    }

    #[test]
    fn zone_reduction_stays_on_the_reciprocal_coset(
        p in params(),
        k in prop::array::uniform2(-20.0..20.0f64),
    ) {
        let b = basis_from_params(p).unwrap();
        let r = reciprocal_basis(&b).unwrap();
        let k = Vector2::new(k[0], k[1]);
        let red = reduce_to_bz(k, &r);
        prop_assert!(in_closed_bz(&gapforge::lattice::KPoint::from_vec(red), &r, 1e-9));
        let coeff = r.try_inverse().unwrap() * (k - red);
        prop_assert!((coeff.x - coeff.x.round()).abs() < 1e-9 && (coeff.y - coeff.y.round()).abs() < 1e-9);
    }
}

#[test]
fn half_zone_grids_stay_in_the_zone_for_sampled_lattices() {
    for (a, b) in [
        (0.0, 1.0),
        (0.5, 3f64.sqrt() / 2.0),
        (0.2, 1.3),
        (0.45, 2.0),
        (0.1, 1.0),
    ] {
        let p = LatticeParams::new(a, b).unwrap();
        let basis: Basis = basis_from_params(p).unwrap();
        let r = reciprocal_basis(&basis).unwrap();
        for res in [1, 3, 6] {
            let ks = half_bz_grid(&basis, res).unwrap();
            assert!(!ks.is_empty());
            for k in &ks.points {
                assert!(in_closed_bz(k, &r, 1e-9), "({a}, {b}) r = {res}: {k:?}");
            }
        }
    }
}

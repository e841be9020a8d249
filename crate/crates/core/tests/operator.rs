use gapforge::eigen::smallest_eigenpairs;
use gapforge::lattice::{KPoint, LatticeParams};
use gapforge::operator::{assemble_bloch_2d, free_symbol_2d, PotentialGrid};
use proptest::prelude::*;

const VP: f64 = 50.0;

fn params() -> impl Strategy<Value = LatticeParams> {
    (0.0..=0.5f64, 0.0..1.0f64)
        .prop_map(|(a, t)| LatticeParams::new(a, (1.0 - a * a).sqrt() + t).unwrap())
}

fn kpoint() -> impl Strategy<Value = KPoint> {
    prop::array::uniform2(-4.0..4.0f64).prop_map(|k| KPoint::new(k[0], k[1]))
}

fn potential(n: usize) -> impl Strategy<Value = PotentialGrid> {
    prop::collection::vec(0.0..=VP, n * n)
        .prop_map(move |v| PotentialGrid::new(2, n, v, VP).unwrap())
}

fn lowest(p: LatticeParams, k: KPoint, v: &PotentialGrid, count: usize) -> Vec<f64> {
    let h = assemble_bloch_2d(p, k, v, v.n).unwrap();
    smallest_eigenpairs(&h, count, 1e-10).unwrap().values
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn operator_is_hermitian(p in params(), k in kpoint(), v in potential(6)) {
        let h = assemble_bloch_2d(p, k, &v, 6).unwrap();
        prop_assert!(h.hermitian_defect() <= 1e-12 * h.max_abs());
    }

    #[test]
    fn opposite_quasi_momenta_give_conjugate_operators(p in params(), k in kpoint(), v in potential(5)) {
        let a = assemble_bloch_2d(p, k, &v, 5).unwrap().to_dense();
        let b = assemble_bloch_2d(p, k.neg(), &v, 5).unwrap().to_dense();
        prop_assert!((a.conjugate() - b).camax() < 1e-9 * a.camax());
    }

    #[test]
    fn free_spectrum_is_the_symbol(p in params(), k in kpoint()) {
        let n = 6;
        let zero = PotentialGrid::constant(2, n, 0.0, VP).unwrap();
        let mut sym = free_symbol_2d(p, k, n).unwrap().values;
        sym.sort_by(f64::total_cmp);
        let e = lowest(p, k, &zero, 6);
        for (x, y) in e.iter().zip(&sym) {
            prop_assert!((x - y).abs() <= 1e-8 * y.abs().max(1.0), "{x} vs {y}");
        }
    }

    #[test]
    fn bands_are_monotone_in_the_potential(
        p in params(),
        k in kpoint(),
        v in potential(6),
        bump in prop::collection::vec(0.0..=1.0f64, 36),
    ) {
        let raised: Vec<f64> = v.values.iter().zip(&bump).map(|(x, t)| x + t * (VP - x)).collect();
        let w = PotentialGrid::new(2, 6, raised, VP).unwrap();
        let zero = PotentialGrid::constant(2, 6, 0.0, VP).unwrap();
        let (e0, ev, ew) = (lowest(p, k, &zero, 4), lowest(p, k, &v, 4), lowest(p, k, &w, 4));
        for j in 0..4 {
            let slack = 1e-8 * ew[j].abs().max(1.0);
            prop_assert!(e0[j] <= ev[j] + slack && ev[j] <= ew[j] + slack);
            prop_assert!(ew[j] <= e0[j] + VP + slack);
        }
    }
}

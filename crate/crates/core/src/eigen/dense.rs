use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::EigenPairs;
use crate::operator::HermitianOperator;

/// Full dense decomposition, truncated to the `count` smallest pairs. Real
/// operators take the cheaper real symmetric route.
pub fn dense_eigenpairs(h: &HermitianOperator, count: usize) -> EigenPairs {
    let dim = h.dim();
    let count = count.min(dim);
    if h.is_real() {
        let eig = SymmetricEigen::new(h.to_dense_real());
        let order = ascending(eig.eigenvalues.as_slice());
        let values = order[..count].iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(dim, count, |r, c| {
            Complex64::new(eig.eigenvectors[(r, order[c])], 0.0)
        });
        EigenPairs { values, vectors }
    } else {
        let eig = SymmetricEigen::new(h.to_dense());
        let order = ascending(eig.eigenvalues.as_slice());
        let values = order[..count].iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(dim, count, |r, c| eig.eigenvectors[(r, order[c])]);
        EigenPairs { values, vectors }
    }
}

pub(crate) fn ascending(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    idx
}

//! Partial Hermitian eigensolver: the few algebraically smallest eigenpairs.
//!
//! Small problems use a dense decomposition. Larger ones use a block
//! preconditioned conjugate-gradient iteration (LOBPCG); operators carrying a
//! Fourier symbol are preconditioned by the inverse of their shifted
//! translation-invariant part, applied with FFTs.

mod dense;
mod lobpcg;
mod precond;

pub use dense::dense_eigenpairs;
pub use lobpcg::lobpcg;
pub use precond::{FftPreconditioner, InnerCgPreconditioner, JacobiPreconditioner, Preconditioner};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::HermitianOperator;

/// Largest dimension handled by the dense backend in automatic mode.
pub const DENSE_MAX_DIM: usize = 144;

/// Mean potential, in units of the lowest free excitation, above which the
/// Fourier preconditioner is wrapped in an inner CG solve.
const HIGH_CONTRAST: f64 = 20.0;
const INNER_CG_STEPS: usize = 8;

/// Eigenvalues in ascending order and matching orthonormal eigenvectors
/// (one per column).
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

impl EigenPairs {
    pub fn count(&self) -> usize {
        self.values.len()
    }

    /// `||H u_i - E_i u_i||_2` per pair.
    pub fn residuals(&self, h: &HermitianOperator) -> Vec<f64> {
        let hu = h.apply(&self.vectors);
        (0..self.count())
            .map(|i| {
                let r = hu.column(i) - self.vectors.column(i) * Complex64::new(self.values[i], 0.0);
                r.norm()
            })
            .collect()
    }

    /// `max |<u_i, u_j> - delta_ij|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.vectors.ad_mul(&self.vectors);
        let mut worst: f64 = 0.0;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Auto,
    Dense,
    Iterative,
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    /// Residual tolerance relative to `1 + |E|`.
    pub tol: f64,
    pub max_iters: usize,
    /// Extra block columns carried beyond the requested count.
    pub guard: usize,
    pub backend: Backend,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-9,
            max_iters: 500,
            guard: 5,
            backend: Backend::Auto,
        }
    }
}

/// The `count` smallest eigenpairs of `h`.
pub fn smallest_eigenpairs(h: &HermitianOperator, count: usize, tol: f64) -> Result<EigenPairs> {
    smallest_eigenpairs_with(
        h,
        count,
        &EigenOptions {
            tol,
            ..EigenOptions::default()
        },
        None,
    )
}

/// As [`smallest_eigenpairs`] with explicit options and an optional block of
/// starting vectors (used by the iterative backend only).
pub fn smallest_eigenpairs_with(
    h: &HermitianOperator,
    count: usize,
    opts: &EigenOptions,
    warm: Option<&DMatrix<Complex64>>,
) -> Result<EigenPairs> {
    let dim = h.dim();
    if count == 0 || count > dim {
        return Err(Error::InvalidArgument(format!(
            "requested {count} eigenpairs of a {dim}-dimensional operator"
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance {} must be positive",
            opts.tol
        )));
    }
    let use_dense = match opts.backend {
        Backend::Dense => true,
        Backend::Iterative => false,
        Backend::Auto => dim <= DENSE_MAX_DIM || 3 * (count + opts.guard) >= dim,
    };
    if use_dense {
        return Ok(dense_eigenpairs(h, count));
    }
    match &h.symbol {
        Some(sym) => {
            let pre = FftPreconditioner::new(h, sym.clone());
            if pre.contrast > HIGH_CONTRAST {
                let shift = (1.0 - pre.lmin).max(1.0);
                let inner = InnerCgPreconditioner::new(h, pre, shift, INNER_CG_STEPS);
                lobpcg(h, count, opts, &inner, warm)
            } else {
                lobpcg(h, count, opts, &pre, warm)
            }
        }
        None => {
            let pre = JacobiPreconditioner::new(h);
            lobpcg(h, count, opts, &pre, warm)
        }
    }
}

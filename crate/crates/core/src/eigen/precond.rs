use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::operator::{GridSymbol, HermitianOperator};

/// Symmetric positive definite approximation of an inverse, applied to a
/// block of residual vectors.
pub trait Preconditioner {
    fn apply(&self, r: &DMatrix<Complex64>) -> DMatrix<Complex64>;
}

/// `(L_free - min(L_free) + shift)^{-1}` applied in Fourier space.
pub struct FftPreconditioner {
    /// Mean potential relative to the lowest free excitation.
    pub contrast: f64,
    /// Smallest free eigenvalue.
    pub lmin: f64,
    shape: (usize, usize),
    inv: Vec<f64>,
    /// Per-axis twist factors `exp(i t l / n)`.
    twist: (Vec<Complex64>, Vec<Complex64>),
    fwd: (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>),
    bwd: (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>),
}

impl FftPreconditioner {
    pub fn new(h: &HermitianOperator, sym: Arc<GridSymbol>) -> Self {
        let (n1, n2) = sym.shape;
        assert_eq!(n1 * n2, h.dim());
        let lmin = sym.values.iter().cloned().fold(f64::INFINITY, f64::min);
        let mean_free = sym.values.iter().sum::<f64>() / sym.values.len() as f64;
        // Mean of the non-translation-invariant diagonal (the potential).
        let vbar = (h.diagonal().iter().sum::<f64>() / h.dim() as f64 - mean_free).max(0.0);
        // Lowest nonzero excitation of the free operator.
        let mut excit = sym
            .values
            .iter()
            .map(|v| v - lmin)
            .filter(|d| *d > 1e-9 * (1.0 + lmin.abs()))
            .fold(f64::INFINITY, f64::min);
        if !excit.is_finite() {
            excit = 1.0;
        }
        let shift = excit.max(vbar.min(4.0 * excit));
        let contrast = vbar / excit;
        let inv = sym
            .values
            .iter()
            .map(|v| 1.0 / (v - lmin + shift))
            .collect();
        let twist_vec = |n: usize, t: f64| -> Vec<Complex64> {
            (0..n)
                .map(|l| Complex64::from_polar(1.0, t * l as f64 / n as f64))
                .collect()
        };
        let mut planner = FftPlanner::new();
        FftPreconditioner {
            contrast,
            lmin,
            shape: (n1, n2),
            inv,
            twist: (twist_vec(n1, sym.twist.0), twist_vec(n2, sym.twist.1)),
            fwd: (planner.plan_fft_forward(n1), planner.plan_fft_forward(n2)),
            bwd: (planner.plan_fft_inverse(n1), planner.plan_fft_inverse(n2)),
        }
    }

    fn apply_one(&self, data: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        let (n1, n2) = self.shape;
        for j in 0..n2 {
            for i in 0..n1 {
                data[i + n1 * j] *= (self.twist.0[i] * self.twist.1[j]).conj();
            }
        }
        self.fwd.0.process(data);
        if n2 > 1 {
            transpose(data, scratch, n1, n2);
            self.fwd.1.process(scratch);
            // scratch holds frequency (p2 fast, p1 slow).
            for p1 in 0..n1 {
                for p2 in 0..n2 {
                    scratch[p2 + n2 * p1] *= self.inv[p1 + n1 * p2];
                }
            }
            self.bwd.1.process(scratch);
            transpose(scratch, data, n2, n1);
        } else {
            for (d, w) in data.iter_mut().zip(&self.inv) {
                *d *= *w;
            }
        }
        self.bwd.0.process(data);
        let norm = 1.0 / (n1 * n2) as f64;
        for j in 0..n2 {
            for i in 0..n1 {
                data[i + n1 * j] *= self.twist.0[i] * self.twist.1[j] * norm;
            }
        }
    }
}

/// `dst[j + rows_out * i] = src[i + n1 * j]`, i.e. swap the fast axis.
fn transpose(src: &[Complex64], dst: &mut [Complex64], n1: usize, n2: usize) {
    for j in 0..n2 {
        for i in 0..n1 {
            dst[j + n2 * i] = src[i + n1 * j];
        }
    }
}

impl Preconditioner for FftPreconditioner {
    fn apply(&self, r: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = r.clone();
        let mut scratch = vec![Complex64::new(0.0, 0.0); r.nrows()];
        for c in 0..out.ncols() {
            let mut col = out.column_mut(c);
            self.apply_one(col.as_mut_slice(), &mut scratch);
        }
        out
    }
}

/// A few conjugate-gradient steps on `(H + shift) y = r`, preconditioned by
/// an inner preconditioner. Used when the potential dominates the
/// translation-invariant part, so that the Fourier preconditioner alone is a
/// poor approximation of the inverse.
pub struct InnerCgPreconditioner<'a, P: Preconditioner> {
    h: &'a HermitianOperator,
    inner: P,
    shift: f64,
    steps: usize,
}

impl<'a, P: Preconditioner> InnerCgPreconditioner<'a, P> {
    pub fn new(h: &'a HermitianOperator, inner: P, shift: f64, steps: usize) -> Self {
        InnerCgPreconditioner {
            h,
            inner,
            shift,
            steps,
        }
    }
}

impl<P: Preconditioner> Preconditioner for InnerCgPreconditioner<'_, P> {
    fn apply(&self, r: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let k = r.ncols();
        let shift = Complex64::new(self.shift, 0.0);
        let mut y = DMatrix::zeros(r.nrows(), k);
        let mut res = r.clone();
        let mut z = self.inner.apply(&res);
        let mut p = z.clone();
        let mut rz: Vec<f64> = (0..k)
            .map(|c| res.column(c).dotc(&z.column(c)).re)
            .collect();
        for _ in 0..self.steps {
            let mut ap = self.h.apply(&p);
            ap += &p * shift;
            for c in 0..k {
                let pap = p.column(c).dotc(&ap.column(c)).re;
                if !(pap > 0.0) || rz[c] <= 0.0 {
                    continue;
                }
                let a = Complex64::new(rz[c] / pap, 0.0);
                let pc = p.column(c).clone_owned();
                y.column_mut(c).axpy(a, &pc, Complex64::new(1.0, 0.0));
                let apc = ap.column(c).clone_owned();
                res.column_mut(c).axpy(-a, &apc, Complex64::new(1.0, 0.0));
            }
            z = self.inner.apply(&res);
            for c in 0..k {
                let rz_new = res.column(c).dotc(&z.column(c)).re;
                let beta = if rz[c] > 0.0 { rz_new / rz[c] } else { 0.0 };
                let zc = z.column(c).clone_owned();
                let mut pc = p.column_mut(c);
                pc.scale_mut(beta);
                pc += zc;
                rz[c] = rz_new;
            }
        }
        y
    }
}

/// Shifted inverse diagonal.
pub struct JacobiPreconditioner {
    inv: Vec<f64>,
}

impl JacobiPreconditioner {
    pub fn new(h: &HermitianOperator) -> Self {
        let d = h.diagonal();
        let lo = d.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let shift = (0.1 * (hi - lo)).max(1e-3 * h.max_abs()).max(1e-300);
        JacobiPreconditioner {
            inv: d.iter().map(|x| 1.0 / (x - lo + shift)).collect(),
        }
    }
}

impl Preconditioner for JacobiPreconditioner {
    fn apply(&self, r: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = r.clone();
        for c in 0..out.ncols() {
            for (i, z) in out.column_mut(c).iter_mut().enumerate() {
                *z *= self.inv[i];
            }
        }
        out
    }
}

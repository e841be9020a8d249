use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dense::ascending;
use super::precond::Preconditioner;
use super::{EigenOptions, EigenPairs};
use crate::error::{Error, Result};
use crate::operator::HermitianOperator;

type CMat = DMatrix<Complex64>;

const SEED: u64 = 0x6a70_6f72_6765;

/// Locally optimal block preconditioned conjugate gradient for the `count`
/// smallest eigenpairs. Deterministic: random components come from a fixed
/// seed.
pub fn lobpcg(
    h: &HermitianOperator,
    count: usize,
    opts: &EigenOptions,
    pre: &dyn Preconditioner,
    warm: Option<&CMat>,
) -> Result<EigenPairs> {
    let dim = h.dim();
    let bs = (count + opts.guard).min(dim / 3).max(count);
    let mut x = initial_block(h, bs, warm);
    x = orthonormalize(x, None);
    if x.ncols() < bs {
        // Degenerate start; pad with random vectors.
        let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x55);
        let extra = random_block(dim, bs - x.ncols(), &mut rng);
        let extra = orthonormalize(extra, Some(&x));
        x = hcat(&[&x, &extra]);
    }
    let mut ax = h.apply(&x);
    let (mut x_new, mut lambda) = rayleigh_ritz(&x, &ax, bs);
    x = x_new;
    ax = h.apply(&x);
    let mut p: Option<CMat> = None;
    let mut worst = f64::INFINITY;
    for _iter in 0..opts.max_iters {
        let mut r = ax.clone();
        for c in 0..bs {
            let l = Complex64::new(lambda[c], 0.0);
            let xc = x.column(c).clone_owned();
            let mut rc = r.column_mut(c);
            rc.axpy(-l, &xc, Complex64::new(1.0, 0.0));
        }
        let norms: Vec<f64> = (0..bs).map(|c| r.column(c).norm()).collect();
        let conv: Vec<bool> = (0..bs)
            .map(|c| norms[c] <= opts.tol * (1.0 + lambda[c].abs()))
            .collect();
        worst = (0..count)
            .map(|c| norms[c] / (1.0 + lambda[c].abs()))
            .fold(0.0, f64::max);
        if conv[..count].iter().all(|&b| b) {
            return Ok(EigenPairs {
                values: lambda[..count].to_vec(),
                vectors: x.columns(0, count).clone_owned(),
            });
        }
        let active: Vec<usize> = (0..bs).filter(|&c| !conv[c]).collect();
        let r_act = select_columns(&r, &active);
        let w = pre.apply(&r_act);
        let w = orthonormalize(w, Some(&x));
        let mut basis = vec![x.clone(), w];
        if let Some(pp) = &p {
            let pa = select_columns(pp, &active);
            let xw = hcat(&[&basis[0], &basis[1]]);
            let pa = orthonormalize(pa, Some(&xw));
            if pa.ncols() > 0 {
                basis.push(pa);
            }
        }
        let refs: Vec<&CMat> = basis.iter().collect();
        let s = hcat(&refs);
        let as_ = h.apply(&s);
        let (xn, ln) = rayleigh_ritz_coeffs(&s, &as_, bs);
        // xn are coefficients in the basis s; split the X part off for P.
        let mut coeff_rest = xn.clone();
        for r_ in 0..bs {
            for c in 0..bs {
                coeff_rest[(r_, c)] = Complex64::new(0.0, 0.0);
            }
        }
        p = Some(&s * &coeff_rest);
        x_new = &s * &xn;
        x = orthonormalize_keep(x_new);
        lambda = ln;
        ax = h.apply(&x);
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iters,
        residual: worst,
        k_index: None,
    })
}

fn initial_block(h: &HermitianOperator, bs: usize, warm: Option<&CMat>) -> CMat {
    let dim = h.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut cols: Vec<CMat> = Vec::new();
    let mut have = 0;
    if let Some(w) = warm {
        if w.nrows() == dim && w.ncols() > 0 {
            let take = w.ncols().min(bs);
            cols.push(w.columns(0, take).clone_owned());
            have = take;
        }
    }
    if have < bs {
        let need = bs - have;
        if let Some(sym) = &h.symbol {
            // Lowest plane waves of the translation-invariant part.
            let order = ascending(&sym.values);
            let (n1, n2) = sym.shape;
            let (t1, t2) = sym.twist;
            let mut b = CMat::zeros(dim, need);
            for (c, &f) in order.iter().take(need).enumerate() {
                let (p1, p2) = ((f % n1) as f64, (f / n1) as f64);
                for l in 0..dim {
                    let (i, j) = ((l % n1) as f64, (l / n1) as f64);
                    let ph = (2.0 * std::f64::consts::PI * p1 + t1) * i / n1 as f64
                        + (2.0 * std::f64::consts::PI * p2 + t2) * j / n2 as f64;
                    b[(l, c)] = Complex64::from_polar(1.0 / (dim as f64).sqrt(), ph);
                }
            }
            cols.push(b);
        } else {
            cols.push(random_block(dim, need, &mut rng));
        }
    }
    let refs: Vec<&CMat> = cols.iter().collect();
    let mut x = hcat(&refs);
    // Small perturbation so that no symmetry sector is missed.
    let scale = 1e-3 / (dim as f64).sqrt();
    for z in x.iter_mut() {
        *z += Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * scale;
    }
    x
}

fn random_block(dim: usize, k: usize, rng: &mut ChaCha8Rng) -> CMat {
    CMat::from_fn(dim, k, |_, _| {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    })
}

pub(crate) fn hcat(parts: &[&CMat]) -> CMat {
    let rows = parts.first().map(|p| p.nrows()).unwrap_or(0);
    let cols: usize = parts.iter().map(|p| p.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut off = 0;
    for p in parts {
        out.columns_mut(off, p.ncols()).copy_from(*p);
        off += p.ncols();
    }
    out
}

fn select_columns(m: &CMat, idx: &[usize]) -> CMat {
    let mut out = CMat::zeros(m.nrows(), idx.len());
    for (k, &c) in idx.iter().enumerate() {
        out.column_mut(k).copy_from(&m.column(c));
    }
    out
}

/// Orthonormalize the columns of `v`, first projecting out the span of the
/// orthonormal `q`. Columns that become numerically dependent are dropped.
pub(crate) fn orthonormalize(mut v: CMat, q: Option<&CMat>) -> CMat {
    let orig: Vec<f64> = (0..v.ncols()).map(|c| v.column(c).norm()).collect();
    if let Some(q) = q {
        if q.ncols() > 0 {
            for _ in 0..2 {
                let c = q.ad_mul(&v);
                v -= q * c;
            }
        }
    }
    let mut kept: Vec<usize> = Vec::new();
    for c in 0..v.ncols() {
        for _ in 0..2 {
            for &k in &kept {
                let qk = v.column(k).clone_owned();
                let d = qk.dotc(&v.column(c));
                let mut vc = v.column_mut(c);
                vc.axpy(-d, &qk, Complex64::new(1.0, 0.0));
            }
        }
        let nrm = v.column(c).norm();
        if nrm > 1e-10 * orig[c].max(1e-300) && nrm > 1e-300 {
            v.column_mut(c).scale_mut(1.0 / nrm);
            kept.push(c);
        }
    }
    select_columns(&v, &kept)
}

/// Re-orthonormalize a nearly orthonormal block without dropping columns.
fn orthonormalize_keep(v: CMat) -> CMat {
    let k = v.ncols();
    let out = orthonormalize(v.clone(), None);
    if out.ncols() == k {
        out
    } else {
        v
    }
}

/// Ritz pairs of the orthonormal basis `s` (with `a_s = H s`).
fn rayleigh_ritz(s: &CMat, a_s: &CMat, k: usize) -> (CMat, Vec<f64>) {
    let (c, l) = rayleigh_ritz_coeffs(s, a_s, k);
    (s * c, l)
}

fn rayleigh_ritz_coeffs(s: &CMat, a_s: &CMat, k: usize) -> (CMat, Vec<f64>) {
    let g = s.ad_mul(a_s);
    let g = (&g + g.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(g);
    let order = ascending(eig.eigenvalues.as_slice());
    let k = k.min(order.len());
    let c = CMat::from_fn(s.ncols(), k, |r, j| eig.eigenvectors[(r, order[j])]);
    let l = order[..k].iter().map(|&i| eig.eigenvalues[i]).collect();
    (c, l)
}

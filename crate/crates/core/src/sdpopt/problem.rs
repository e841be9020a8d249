//! The homogenized gap SDP in dual standard form.
//!
//! Variables `y = (w_0..w_{N-1}, theta, a)` where `w = theta V`, `a` is the
//! homogenized lower edge and the upper edge is `2 - a`. The problem is
//!
//! ```text
//! maximize  -2 a
//! s.t.      S = C - sum_i y_i A_i  in  (Hermitian PSD blocks) x R^{2N}_+
//! ```
//!
//! Lower-edge block (one per k): `S = a I - theta M - U* diag(w) U`.
//! Upper-edge block: `S = theta M + U* diag(w) U - (2 - a) I`.
//! Box rows: `w >= 0` and `theta V+ - w >= 0`.
//!
//! The matching primal is `min <C, X>` subject to `A(X) = b`, `X >= 0`.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par};
use nalgebra::DMatrix;
use num_complex::Complex64;

pub(crate) type CMat = DMatrix<Complex64>;

/// One Hermitian block: `C = shift I`, `A_theta = sign M`,
/// `A_l = sign w_l w_l*` with `w_l*` row `l` of `U`, `A_a = -I`.
pub(crate) struct Block {
    pub sign: f64,
    pub shift: f64,
    pub u: CMat,
    pub l: CMat,
}

impl Block {
    pub fn dim(&self) -> usize {
        self.u.ncols()
    }
}

/// A point in the cone: one Hermitian matrix per block and the two box
/// slacks.
#[derive(Clone, Debug)]
pub(crate) struct ConeVec {
    pub blocks: Vec<CMat>,
    pub lo: Vec<f64>,
    pub up: Vec<f64>,
}

impl ConeVec {
    pub fn dot(&self, o: &ConeVec) -> f64 {
        let mut s = 0.0;
        for (a, b) in self.blocks.iter().zip(&o.blocks) {
            s += a
                .iter()
                .zip(b.iter())
                .map(|(x, y)| (x.conj() * y).re)
                .sum::<f64>();
        }
        s + dotv(&self.lo, &o.lo) + dotv(&self.up, &o.up)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// `self + t o`.
    pub fn add_scaled(&self, t: f64, o: &ConeVec) -> ConeVec {
        let tc = Complex64::new(t, 0.0);
        ConeVec {
            blocks: self
                .blocks
                .iter()
                .zip(&o.blocks)
                .map(|(a, b)| a + b * tc)
                .collect(),
            lo: self.lo.iter().zip(&o.lo).map(|(a, b)| a + t * b).collect(),
            up: self.up.iter().zip(&o.up).map(|(a, b)| a + t * b).collect(),
        }
    }

    pub fn scale(&self, t: f64) -> ConeVec {
        let tc = Complex64::new(t, 0.0);
        ConeVec {
            blocks: self.blocks.iter().map(|a| a * tc).collect(),
            lo: self.lo.iter().map(|a| a * t).collect(),
            up: self.up.iter().map(|a| a * t).collect(),
        }
    }
}

pub(crate) fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn herm(a: &CMat) -> CMat {
    (a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

/// `Re (U G U*)_{ll}` for every row `l`.
fn diag_sandwich(u: &CMat, g: &CMat) -> Vec<f64> {
    let p = u * g;
    (0..u.nrows())
        .map(|l| {
            let mut s = 0.0;
            for t in 0..u.ncols() {
                s += (p[(l, t)] * u[(l, t)].conj()).re;
            }
            s
        })
        .collect()
}

/// `U* diag(w) U`.
pub(crate) fn congruence(u: &CMat, w: &[f64]) -> CMat {
    let mut wu = u.clone();
    for (l, mut row) in wu.row_iter_mut().enumerate() {
        row *= Complex64::new(w[l], 0.0);
    }
    u.ad_mul(&wu)
}

fn trace_re(a: &CMat) -> f64 {
    (0..a.nrows()).map(|i| a[(i, i)].re).sum()
}

pub(crate) fn par() -> Par {
    match std::num::NonZeroUsize::new(rayon::current_num_threads()) {
        Some(t) if t.get() > 1 => Par::Rayon(t),
        _ => Par::Seq,
    }
}

pub(crate) struct HomogenizedSdp {
    pub n: usize,
    pub vp: f64,
    pub blocks: Vec<Block>,
    /// Realified Kronecker factors `[Re Phi | Im Phi]` of every block,
    /// `Phi_{l,(r,t)} = U_{lr} conj(U_{lt})`, side by side.
    phi: Mat<f64>,
    phi_offsets: Vec<usize>,
}

impl HomogenizedSdp {
    pub fn new(n: usize, vp: f64, blocks: Vec<Block>) -> Self {
        let mut offsets = Vec::with_capacity(blocks.len() + 1);
        let mut total = 0;
        for b in &blocks {
            offsets.push(total);
            total += 2 * b.dim() * b.dim();
        }
        offsets.push(total);
        let mut phi = Mat::<f64>::zeros(n, total);
        for (bi, b) in blocks.iter().enumerate() {
            let d = b.dim();
            let off = offsets[bi];
            for l in 0..n {
                for r in 0..d {
                    for t in 0..d {
                        let z = b.u[(l, r)] * b.u[(l, t)].conj();
                        phi[(l, off + r * d + t)] = z.re;
                        phi[(l, off + d * d + r * d + t)] = z.im;
                    }
                }
            }
        }
        HomogenizedSdp {
            n,
            vp,
            blocks,
            phi,
            phi_offsets: offsets,
        }
    }

    pub fn nvars(&self) -> usize {
        self.n + 2
    }

    pub fn theta_idx(&self) -> usize {
        self.n
    }

    pub fn edge_idx(&self) -> usize {
        self.n + 1
    }

    /// Barrier parameter normalization: total cone dimension.
    pub fn cone_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim()).sum::<usize>() + 2 * self.n
    }

    pub fn b(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.nvars()];
        b[self.edge_idx()] = -2.0;
        b
    }

    pub fn c(&self) -> ConeVec {
        ConeVec {
            blocks: self
                .blocks
                .iter()
                .map(|b| CMat::identity(b.dim(), b.dim()) * Complex64::new(b.shift, 0.0))
                .collect(),
            lo: vec![0.0; self.n],
            up: vec![0.0; self.n],
        }
    }

    pub fn zero(&self) -> ConeVec {
        self.c().scale(0.0)
    }

    /// `A*(y) = sum_i y_i A_i`.
    pub fn adjoint(&self, y: &[f64]) -> ConeVec {
        let n = self.n;
        let w = &y[..n];
        let theta = y[self.theta_idx()];
        let a = y[self.edge_idx()];
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let d = b.dim();
                let mut s = (&b.l * Complex64::new(theta, 0.0)) + congruence(&b.u, w);
                s *= Complex64::new(b.sign, 0.0);
                for i in 0..d {
                    s[(i, i)] -= Complex64::new(a, 0.0);
                }
                s
            })
            .collect();
        ConeVec {
            blocks,
            lo: w.iter().map(|v| -v).collect(),
            up: w.iter().map(|v| v - self.vp * theta).collect(),
        }
    }

    /// `C - A*(y)`.
    pub fn slack(&self, y: &[f64]) -> ConeVec {
        self.c().add_scaled(-1.0, &self.adjoint(y))
    }

    /// `A(X)_i = Re <A_i, X>`; `X` blocks need not be Hermitian.
    pub fn apply(&self, x: &ConeVec) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; self.nvars()];
        let (mut th, mut ed) = (0.0, 0.0);
        for (b, xb) in self.blocks.iter().zip(&x.blocks) {
            let xh = herm(xb);
            let dg = diag_sandwich(&b.u, &xh);
            for l in 0..n {
                out[l] += b.sign * dg[l];
            }
            th += b.sign
                * b.l
                    .iter()
                    .zip(xh.iter())
                    .map(|(p, q)| (p.conj() * q).re)
                    .sum::<f64>();
            ed -= trace_re(&xh);
        }
        for l in 0..n {
            out[l] += x.up[l] - x.lo[l];
        }
        th -= self.vp * x.up.iter().sum::<f64>();
        out[self.theta_idx()] = th;
        out[self.edge_idx()] = ed;
        out
    }

    /// `M_ik = Re tr(A_i X A_k Z)` with `Z` the inverse slack, plus the box
    /// rows `x / s`. `z.lo`, `z.up` hold the reciprocal box slacks.
    pub fn schur(&self, x: &ConeVec, z: &ConeVec) -> Mat<f64> {
        let n = self.n;
        let nv = self.nvars();
        let (it, ia) = (self.theta_idx(), self.edge_idx());
        let total = *self.phi_offsets.last().unwrap();
        let mut t = Mat::<f64>::zeros(n, total);
        let mut col_th = vec![0.0; n];
        let mut col_ed = vec![0.0; n];
        let (mut m_tt, mut m_ta, mut m_aa) = (0.0, 0.0, 0.0);
        for (bi, b) in self.blocks.iter().enumerate() {
            let d = b.dim();
            let (xb, zb) = (&x.blocks[bi], &z.blocks[bi]);
            let k = d * d;
            let mut kr = Mat::<f64>::zeros(2 * k, 2 * k);
            for r in 0..d {
                for tt in 0..d {
                    for r2 in 0..d {
                        for t2 in 0..d {
                            let v = xb[(r, r2)] * zb[(tt, t2)].conj();
                            let (i, j) = (r * d + tt, r2 * d + t2);
                            kr[(i, j)] = v.re;
                            kr[(k + i, k + j)] = v.re;
                            kr[(i, k + j)] = v.im;
                            kr[(k + i, j)] = -v.im;
                        }
                    }
                }
            }
            let off = self.phi_offsets[bi];
            matmul(
                t.as_mut().subcols_mut(off, 2 * k),
                Accum::Replace,
                self.phi.as_ref().subcols(off, 2 * k),
                kr.as_ref(),
                1.0,
                Par::Seq,
            );
            let zmx = zb * &b.l * xb;
            let zx = zb * xb;
            let dz_mx = diag_sandwich(&b.u, &zmx);
            let dz_x = diag_sandwich(&b.u, &zx);
            for l in 0..n {
                col_th[l] += dz_mx[l];
                col_ed[l] -= b.sign * dz_x[l];
            }
            let mx = &b.l * xb;
            let mz = &b.l * zb;
            m_tt += (mx * mz).trace().re;
            m_ta -= b.sign * (&b.l * xb * zb).trace().re;
            m_aa += zx.trace().re;
        }
        let mut m = Mat::<f64>::zeros(nv, nv);
        matmul(
            m.as_mut().submatrix_mut(0, 0, n, n),
            Accum::Replace,
            t.as_ref(),
            self.phi.as_ref().transpose(),
            1.0,
            par(),
        );
        let vp = self.vp;
        for l in 0..n {
            let dl = x.lo[l] * z.lo[l];
            let du = x.up[l] * z.up[l];
            m[(l, l)] += dl + du;
            col_th[l] -= vp * du;
            m_tt += vp * vp * du;
        }
        for l in 0..n {
            m[(l, it)] = col_th[l];
            m[(it, l)] = col_th[l];
            m[(l, ia)] = col_ed[l];
            m[(ia, l)] = col_ed[l];
        }
        m[(it, it)] = m_tt;
        m[(it, ia)] = m_ta;
        m[(ia, it)] = m_ta;
        m[(ia, ia)] = m_aa;
        // Symmetrize away round-off from the product.
        for i in 0..n {
            for j in 0..i {
                let s = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = s;
                m[(j, i)] = s;
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_unitary_cols(rng: &mut ChaCha8Rng, n: usize, d: usize) -> CMat {
        let a = CMat::from_fn(n, d, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        a.qr().q()
    }

    fn random_psd(rng: &mut ChaCha8Rng, d: usize) -> CMat {
        let a = CMat::from_fn(d, d, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        &a * a.adjoint() + CMat::identity(d, d)
    }

    fn small_problem(rng: &mut ChaCha8Rng) -> HomogenizedSdp {
        let n = 7;
        let mut blocks = Vec::new();
        for (sign, shift, d) in [(1.0, 0.0, 2), (-1.0, -2.0, 3), (1.0, 0.0, 1)] {
            let u = random_unitary_cols(rng, n, d);
            let l = herm(&random_psd(rng, d));
            blocks.push(Block { sign, shift, u, l });
        }
        HomogenizedSdp::new(n, 5.0, blocks)
    }

    #[test]
    fn adjoint_matches_apply() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = small_problem(&mut rng);
        let y: Vec<f64> = (0..p.nvars()).map(|_| rng.random::<f64>() - 0.5).collect();
        let x = ConeVec {
            blocks: p
                .blocks
                .iter()
                .map(|b| random_psd(&mut rng, b.dim()))
                .collect(),
            lo: (0..p.n).map(|_| rng.random()).collect(),
            up: (0..p.n).map(|_| rng.random()).collect(),
        };
        let lhs = x.dot(&p.adjoint(&y));
        let rhs = dotv(&p.apply(&x), &y);
        assert!(
            (lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()),
            "{lhs} vs {rhs}"
        );
    }

    #[test]
    fn schur_matches_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = small_problem(&mut rng);
        let x = ConeVec {
            blocks: p
                .blocks
                .iter()
                .map(|b| random_psd(&mut rng, b.dim()))
                .collect(),
            lo: (0..p.n).map(|_| rng.random()).collect(),
            up: (0..p.n).map(|_| rng.random()).collect(),
        };
        let z = ConeVec {
            blocks: p
                .blocks
                .iter()
                .map(|b| random_psd(&mut rng, b.dim()))
                .collect(),
            lo: (0..p.n).map(|_| rng.random()).collect(),
            up: (0..p.n).map(|_| rng.random()).collect(),
        };
        let m = p.schur(&x, &z);
        // Column k of M is A(X A*(e_k) Z).
        for k in 0..p.nvars() {
            let mut e = vec![0.0; p.nvars()];
            e[k] = 1.0;
            let ak = p.adjoint(&e);
            let prod = ConeVec {
                blocks: ak
                    .blocks
                    .iter()
                    .enumerate()
                    .map(|(i, a)| &x.blocks[i] * a * &z.blocks[i])
                    .collect(),
                lo: (0..p.n).map(|l| x.lo[l] * ak.lo[l] * z.lo[l]).collect(),
                up: (0..p.n).map(|l| x.up[l] * ak.up[l] * z.up[l]).collect(),
            };
            let col = p.apply(&prod);
            for i in 0..p.nvars() {
                assert!(
                    (col[i] - m[(i, k)]).abs() < 1e-12 * (1.0 + col[i].abs()),
                    "M[{i},{k}] = {} vs {}",
                    m[(i, k)],
                    col[i]
                );
            }
        }
    }
}

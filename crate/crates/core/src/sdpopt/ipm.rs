//! Infeasible primal-dual path following with the HKM direction and
//! Mehrotra's predictor-corrector.

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use nalgebra::DMatrix;
use num_complex::Complex64;

use super::problem::{dotv, herm, CMat, ConeVec, HomogenizedSdp};

#[derive(Debug, Clone)]
pub(crate) struct IpmState {
    pub y: Vec<f64>,
    pub x: ConeVec,
    pub s: ConeVec,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

const REFINE_STEPS: usize = 3;

pub(crate) struct IpmOutcome {
    pub state: IpmState,
    pub res: Residuals,
    pub iterations: usize,
    pub converged: bool,
}

fn inverse(s: &CMat) -> Option<CMat> {
    let c = s.clone().cholesky()?;
    Some(herm(&c.inverse()))
}

/// Largest `t` with `X + t dX` PSD (infinite if `dX` is PSD).
fn max_step_block(x: &CMat, dx: &CMat) -> f64 {
    let d = x.nrows();
    let Some(c) = x.clone().cholesky() else {
        return 0.0;
    };
    let l = c.l();
    let Some(w) = l.solve_lower_triangular(dx) else {
        return 0.0;
    };
    let Some(w) = l.solve_lower_triangular(&w.adjoint()) else {
        return 0.0;
    };
    let w = herm(&w);
    let lmin = if d == 1 {
        w[(0, 0)].re
    } else {
        w.symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    };
    if lmin < 0.0 {
        -1.0 / lmin
    } else {
        f64::INFINITY
    }
}

fn max_step(x: &ConeVec, dx: &ConeVec) -> f64 {
    let mut t = f64::INFINITY;
    for (a, b) in x.blocks.iter().zip(&dx.blocks) {
        t = t.min(max_step_block(a, b));
    }
    for (v, dv) in x.lo.iter().zip(&dx.lo).chain(x.up.iter().zip(&dx.up)) {
        if *dv < 0.0 {
            t = t.min(-v / dv);
        }
    }
    t
}

fn residuals(
    p: &HomogenizedSdp,
    st: &IpmState,
    b: &[f64],
    c: &ConeVec,
) -> (Vec<f64>, ConeVec, Residuals) {
    let ax = p.apply(&st.x);
    let rp: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let rd = p.slack(&st.y).add_scaled(-1.0, &st.s);
    let pobj = c.dot(&st.x);
    let dobj = dotv(b, &st.y);
    let bnorm = dotv(b, b).sqrt();
    let cnorm = c.norm();
    let scale = 1.0 + pobj.abs() + dobj.abs();
    let res = Residuals {
        primal: dotv(&rp, &rp).sqrt() / (1.0 + bnorm),
        dual: rd.norm() / (1.0 + cnorm),
        gap: st.x.dot(&st.s).max((pobj - dobj).abs()) / scale,
    };
    (rp, rd, res)
}

struct Direction {
    dy: Vec<f64>,
    dx: ConeVec,
    ds: ConeVec,
}

/// Solve for the direction with `dX = T - X dS Z`, `dS = R_d - A*(dy)`.
fn direction(
    p: &HomogenizedSdp,
    chol: &faer::linalg::solvers::Llt<f64>,
    st: &IpmState,
    z: &ConeVec,
    rp: &[f64],
    rd: &ConeVec,
    t: &ConeVec,
) -> Direction {
    let xrz = ConeVec {
        blocks: st
            .x
            .blocks
            .iter()
            .zip(&rd.blocks)
            .zip(&z.blocks)
            .map(|((x, r), z)| x * r * z)
            .collect(),
        lo: (0..p.n).map(|l| st.x.lo[l] * rd.lo[l] * z.lo[l]).collect(),
        up: (0..p.n).map(|l| st.x.up[l] * rd.up[l] * z.up[l]).collect(),
    };
    let at = p.apply(t);
    let axrz = p.apply(&xrz);
    let nv = p.nvars();
    let mut rhs = Mat::<f64>::zeros(nv, 1);
    for i in 0..nv {
        rhs[(i, 0)] = rp[i] - at[i] + axrz[i];
    }
    let mut dy: Vec<f64> = {
        let sol = chol.solve(&rhs);
        (0..nv).map(|i| sol[(i, 0)]).collect()
    };
    let recover = |dy: &[f64]| {
        let ds = rd.add_scaled(-1.0, &p.adjoint(dy));
        let dx = ConeVec {
            blocks: t
                .blocks
                .iter()
                .zip(&st.x.blocks)
                .zip(&ds.blocks)
                .zip(&z.blocks)
                .map(|(((t, x), ds), z)| herm(&(t - x * ds * z)))
                .collect(),
            lo: (0..p.n)
                .map(|l| t.lo[l] - st.x.lo[l] * ds.lo[l] * z.lo[l])
                .collect(),
            up: (0..p.n)
                .map(|l| t.up[l] - st.x.up[l] * ds.up[l] * z.up[l])
                .collect(),
        };
        (dx, ds)
    };
    let (mut dx, mut ds) = recover(&dy);
    // Iterative refinement against the unfactored operator; the Schur
    // matrix loses accuracy (or gets regularized) close to the optimum.
    let rnorm = dotv(rp, rp).sqrt().max(1e-300);
    let mut err = f64::INFINITY;
    for _ in 0..REFINE_STEPS {
        let adx = p.apply(&dx);
        let r: Vec<f64> = (0..nv).map(|i| rp[i] - adx[i]).collect();
        let e = dotv(&r, &r).sqrt();
        if e <= 1e-12 * rnorm || e >= 0.5 * err {
            break;
        }
        err = e;
        let mut rhs = Mat::<f64>::zeros(nv, 1);
        for i in 0..nv {
            rhs[(i, 0)] = r[i];
        }
        let corr = chol.solve(&rhs);
        let trial: Vec<f64> = (0..nv).map(|i| dy[i] + corr[(i, 0)]).collect();
        let (tx, ts) = recover(&trial);
        dy = trial;
        dx = tx;
        ds = ts;
    }
    Direction { dy, dx, ds }
}

/// `T = (sigma mu I - corr) Z - X` per cone component.
fn target(
    st: &IpmState,
    z: &ConeVec,
    sigma_mu: f64,
    corr: Option<(&ConeVec, &ConeVec)>,
) -> ConeVec {
    let blocks =
        st.x.blocks
            .iter()
            .zip(&z.blocks)
            .enumerate()
            .map(|(i, (x, z))| {
                let d = x.nrows();
                let mut r = DMatrix::<Complex64>::identity(d, d) * Complex64::new(sigma_mu, 0.0);
                if let Some((dx, ds)) = corr {
                    r -= &dx.blocks[i] * &ds.blocks[i];
                }
                r * z - x
            })
            .collect();
    let lp = |x: &[f64], z: &[f64], c: Option<(&[f64], &[f64])>| -> Vec<f64> {
        (0..x.len())
            .map(|l| {
                let cc = c.map(|(a, b)| a[l] * b[l]).unwrap_or(0.0);
                (sigma_mu - cc) * z[l] - x[l]
            })
            .collect()
    };
    ConeVec {
        blocks,
        lo: lp(
            &st.x.lo,
            &z.lo,
            corr.map(|(a, b)| (a.lo.as_slice(), b.lo.as_slice())),
        ),
        up: lp(
            &st.x.up,
            &z.up,
            corr.map(|(a, b)| (a.up.as_slice(), b.up.as_slice())),
        ),
    }
}

fn inverse_slack(s: &ConeVec) -> Option<ConeVec> {
    let mut blocks = Vec::with_capacity(s.blocks.len());
    for b in &s.blocks {
        blocks.push(inverse(b)?);
    }
    Some(ConeVec {
        blocks,
        lo: s.lo.iter().map(|v| 1.0 / v).collect(),
        up: s.up.iter().map(|v| 1.0 / v).collect(),
    })
}

fn factor(m: &Mat<f64>) -> Option<faer::linalg::solvers::Llt<f64>> {
    if let Ok(c) = m.llt(Side::Lower) {
        return Some(c);
    }
    // Regularize a numerically indefinite Schur matrix.
    let n = m.nrows();
    let scale = (0..n).map(|i| m[(i, i)].abs()).fold(0.0, f64::max);
    let mut reg = 1e-14 * scale.max(1e-300);
    for _ in 0..6 {
        let mut r = m.clone();
        for i in 0..n {
            r[(i, i)] += reg;
        }
        if let Ok(c) = r.llt(Side::Lower) {
            return Some(c);
        }
        reg *= 100.0;
    }
    None
}

pub(crate) fn solve(p: &HomogenizedSdp, start: IpmState, tol: f64, max_iters: usize) -> IpmOutcome {
    let b = p.b();
    let c = p.c();
    let nu = p.cone_dim() as f64;
    let mut st = start;
    let mut best: Option<(IpmState, Residuals)> = None;
    let mut iterations = 0;
    loop {
        let (rp, rd, res) = residuals(p, &st, &b, &c);
        let merit = res.primal.max(res.dual).max(res.gap);
        if best
            .as_ref()
            .map(|(_, r)| merit < r.primal.max(r.dual).max(r.gap))
            .unwrap_or(true)
        {
            best = Some((st.clone(), res));
        }
        if res.primal <= tol && res.dual <= tol && res.gap <= tol {
            return IpmOutcome {
                state: st,
                res,
                iterations,
                converged: true,
            };
        }
        if iterations >= max_iters || !merit.is_finite() {
            break;
        }
        iterations += 1;
        let Some(z) = inverse_slack(&st.s) else { break };
        let m = p.schur(&st.x, &z);
        let Some(chol) = factor(&m) else { break };
        let mu = st.x.dot(&st.s) / nu;

        let t_pred = target(&st, &z, 0.0, None);
        let pred = direction(p, &chol, &st, &z, &rp, &rd, &t_pred);
        let ap = max_step(&st.x, &pred.dx).min(1.0);
        let ad = max_step(&st.s, &pred.ds).min(1.0);
        let mu_a =
            st.x.add_scaled(ap, &pred.dx)
                .dot(&st.s.add_scaled(ad, &pred.ds))
                / nu;
        let sigma = (mu_a / mu).clamp(0.0, 1.0).powi(3);

        let t_corr = target(&st, &z, sigma * mu, Some((&pred.dx, &pred.ds)));
        let dir = direction(p, &chol, &st, &z, &rp, &rd, &t_corr);
        let gamma = 0.9 + 0.09 * ap.min(ad);
        let tp = (gamma * max_step(&st.x, &dir.dx)).min(1.0);
        let td = (gamma * max_step(&st.s, &dir.ds)).min(1.0);
        if !(tp > 1e-12 && td > 1e-12) {
            break;
        }
        st.x = st.x.add_scaled(tp, &dir.dx);
        st.s = st.s.add_scaled(td, &dir.ds);
        for (yi, di) in st.y.iter_mut().zip(&dir.dy) {
            *yi += td * di;
        }
    }
    let (state, res) = best.unwrap();
    IpmOutcome {
        state,
        res,
        iterations,
        converged: false,
    }
}

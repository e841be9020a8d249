//! Alternating-direction augmented Lagrangian method on the dual form.
//! Slow but simple; used to cross-check the interior-point solver on
//! small instances.

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use nalgebra::DVector;
use num_complex::Complex64;

use super::ipm::{IpmState, Residuals};
use super::problem::{dotv, herm, CMat, ConeVec, HomogenizedSdp};

/// Multiplier step length; convergence needs it below the golden ratio.
const RELAX: f64 = 1.6;

pub(crate) struct SplitOutcome {
    pub state: IpmState,
    pub res: Residuals,
    pub iterations: usize,
    pub converged: bool,
}

fn project_psd(a: &CMat) -> CMat {
    let d = a.nrows();
    if d == 1 {
        return CMat::from_element(1, 1, Complex64::new(a[(0, 0)].re.max(0.0), 0.0));
    }
    let e = herm(a).symmetric_eigen();
    let clamped = DVector::from_iterator(
        d,
        e.eigenvalues
            .iter()
            .map(|v| Complex64::new(v.max(0.0), 0.0)),
    );
    let v = &e.eigenvectors;
    herm(&(v * CMat::from_diagonal(&clamped) * v.adjoint()))
}

fn project(v: &ConeVec) -> ConeVec {
    ConeVec {
        blocks: v.blocks.iter().map(project_psd).collect(),
        lo: v.lo.iter().map(|x| x.max(0.0)).collect(),
        up: v.up.iter().map(|x| x.max(0.0)).collect(),
    }
}

pub(crate) fn solve(
    p: &HomogenizedSdp,
    y0: Vec<f64>,
    tol: f64,
    max_iters: usize,
) -> Option<SplitOutcome> {
    let nv = p.nvars();
    let ones = ConeVec {
        blocks: p
            .blocks
            .iter()
            .map(|b| CMat::identity(b.dim(), b.dim()))
            .collect(),
        lo: vec![1.0; p.n],
        up: vec![1.0; p.n],
    };
    // Equilibrate: work with y = D z, D = diag(AA*)^{-1/2}.
    let gram = p.schur(&ones, &ones);
    let dsc: Vec<f64> = (0..nv).map(|i| 1.0 / gram[(i, i)].sqrt()).collect();
    let mut gs = gram.clone();
    for i in 0..nv {
        for j in 0..nv {
            gs[(i, j)] = gram[(i, j)] * dsc[i] * dsc[j];
        }
    }
    let chol = gs.llt(Side::Lower).ok()?;
    let b = p.b();
    let c = p.c();
    let bnorm = dotv(&b, &b).sqrt();
    let cnorm = c.norm();
    let mut y = y0;
    let mut s = project(&p.slack(&y));
    let mut x = p.zero();
    let rho = 1.0;
    let mut iterations = 0;
    loop {
        let ax = p.apply(&x);
        let a_sc = p.apply(&s.add_scaled(-1.0, &c));
        let mut rhs = Mat::<f64>::zeros(nv, 1);
        for i in 0..nv {
            rhs[(i, 0)] = dsc[i] * (rho * (b[i] - ax[i]) - a_sc[i]);
        }
        let sol = chol.solve(&rhs);
        y = (0..nv).map(|i| dsc[i] * sol[(i, 0)]).collect();
        let v = p.slack(&y).add_scaled(-rho, &x);
        s = project(&v);
        // Over-relaxed multiplier step: X += gamma (A*y + S - C) / rho.
        x = x.add_scaled(RELAX / rho, &s.add_scaled(-1.0, &p.slack(&y)));
        iterations += 1;

        let ax = p.apply(&x);
        let rp: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let rd = p.slack(&y).add_scaled(-1.0, &s);
        let pobj = c.dot(&x);
        let dobj = dotv(&b, &y);
        let res = Residuals {
            primal: dotv(&rp, &rp).sqrt() / (1.0 + bnorm),
            dual: rd.norm() / (1.0 + cnorm),
            gap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
        };
        let done = res.primal <= tol && res.dual <= tol && res.gap <= tol;
        if done || iterations >= max_iters {
            return Some(SplitOutcome {
                state: IpmState { y, x, s },
                res,
                iterations,
                converged: done,
            });
        }
    }
}

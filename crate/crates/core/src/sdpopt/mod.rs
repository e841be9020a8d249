//! Subspace-restricted gap maximization as a semidefinite program.
//!
//! With the potential fixed, the lowest `m` and next `mu` Bloch eigenvectors
//! at every sampled quasi-momentum span trial subspaces. Over those
//! subspaces the gap-to-midgap ratio is a linear-fractional function of
//! `(alpha, beta, V)` under linear matrix inequalities. Substituting
//! `theta = 2 / (alpha + beta)` and scaling every variable by `theta` turns
//! it into a linear SDP, solved here by a primal-dual interior-point method.

mod ipm;
mod problem;
mod splitting;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bands::gap_ratio;
use crate::eigen::{smallest_eigenpairs_with, EigenOptions};
use crate::error::{Error, Result};
use crate::lattice::{KPoint, KSampling, LatticeParams};
use crate::operator::{assemble_bloch_1d, assemble_bloch_2d, HermitianOperator, PotentialGrid};

use problem::{congruence, herm, Block, CMat, ConeVec, HomogenizedSdp};

/// Default dimension of the upper trial subspace.
pub const DEFAULT_MU: usize = 3;
/// Default relative tolerance of the SDP solve.
pub const DEFAULT_TOL: f64 = 1e-7;
/// Eigensolver tolerance used for the trial subspaces.
pub const SUBSPACE_EIG_TOL: f64 = 1e-9;

/// Trial subspaces at each sampled quasi-momentum, and the potential-free
/// operators restricted to them.
#[derive(Debug, Clone)]
pub struct SubspaceBundle {
    pub m: usize,
    pub mu: usize,
    pub ks: KSampling,
    /// Potential the subspaces were computed at.
    pub generator: PotentialGrid,
    /// Operators without the potential, one per k.
    pub operators: Vec<HermitianOperator>,
    /// Lowest `m` eigenvectors per k (columns, orthonormal).
    pub u_alpha: Vec<CMat>,
    /// The next `mu` eigenvectors per k.
    pub u_beta: Vec<CMat>,
    /// `U_alpha* L U_alpha` per k.
    pub l_alpha: Vec<CMat>,
    pub l_beta: Vec<CMat>,
    /// Lowest `m + mu` eigenvalues per k at the generating potential.
    pub energies: Vec<Vec<f64>>,
}

impl SubspaceBundle {
    pub fn len(&self) -> usize {
        self.u_alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u_alpha.is_empty()
    }

    /// Number of grid cells.
    pub fn dim(&self) -> usize {
        self.generator.len()
    }

    /// `(max_k E_m, min_k E_{m+1})` at the generating potential.
    pub fn incumbent_edges(&self) -> (f64, f64) {
        let a = self
            .energies
            .iter()
            .map(|e| e[self.m - 1])
            .fold(f64::NEG_INFINITY, f64::max);
        let b = self
            .energies
            .iter()
            .map(|e| e[self.m])
            .fold(f64::INFINITY, f64::min);
        (a, b)
    }

    pub fn incumbent_g(&self) -> f64 {
        let (a, b) = self.incumbent_edges();
        gap_ratio(a, b)
    }

    /// `U_alpha* (L + diag v) U_alpha` at point `j`.
    pub fn lower_block(&self, j: usize, v: &[f64]) -> CMat {
        &self.l_alpha[j] + congruence(&self.u_alpha[j], v)
    }

    pub fn upper_block(&self, j: usize, v: &[f64]) -> CMat {
        &self.l_beta[j] + congruence(&self.u_beta[j], v)
    }

    /// Subspace-restricted edges of a potential: the largest Ritz value of
    /// the lower blocks and the smallest of the upper blocks.
    pub fn ritz_edges(&self, v: &[f64]) -> (f64, f64) {
        let mut a = f64::NEG_INFINITY;
        let mut b = f64::INFINITY;
        for j in 0..self.len() {
            a = a.max(extreme_eig(&self.lower_block(j, v), true));
            b = b.min(extreme_eig(&self.upper_block(j, v), false));
        }
        (a, b)
    }

    /// `max_j |[U_alpha U_beta]* [U_alpha U_beta] - I|` entrywise.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.len() {
            let u = join_cols(&self.u_alpha[j], &self.u_beta[j]);
            let g = u.ad_mul(&u);
            for r in 0..g.nrows() {
                for c in 0..g.ncols() {
                    let t = if r == c { 1.0 } else { 0.0 };
                    worst = worst.max((g[(r, c)] - Complex64::new(t, 0.0)).norm());
                }
            }
        }
        worst
    }
}

fn join_cols(a: &CMat, b: &CMat) -> CMat {
    let mut u = CMat::zeros(a.nrows(), a.ncols() + b.ncols());
    u.columns_mut(0, a.ncols()).copy_from(a);
    u.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    u
}

fn eigenvalues(a: &CMat) -> Vec<f64> {
    if a.nrows() == 1 {
        return vec![a[(0, 0)].re];
    }
    herm(a).symmetric_eigenvalues().iter().cloned().collect()
}

fn extreme_eig(a: &CMat, largest: bool) -> f64 {
    let ev = eigenvalues(a);
    if largest {
        ev.into_iter().fold(f64::NEG_INFINITY, f64::max)
    } else {
        ev.into_iter().fold(f64::INFINITY, f64::min)
    }
}

/// Trial subspaces of the 2D Bloch operators at the sampled points.
pub fn build_subspaces(
    v: &PotentialGrid,
    p: LatticeParams,
    ks: &KSampling,
    m: usize,
    mu: usize,
) -> Result<SubspaceBundle> {
    build_subspaces_warm(v, p, ks, m, mu, None)
}

/// [`build_subspaces`] with the eigensolver started from the subspaces of
/// `prev` (same sampling and grid), which saves most of the work when the
/// potential changed little.
pub fn build_subspaces_warm(
    v: &PotentialGrid,
    p: LatticeParams,
    ks: &KSampling,
    m: usize,
    mu: usize,
    prev: Option<&SubspaceBundle>,
) -> Result<SubspaceBundle> {
    let ops = ks
        .points
        .iter()
        .map(|k| assemble_bloch_2d(p, *k, v, v.n))
        .collect::<Result<Vec<_>>>()?;
    let prev = prev.filter(|b| b.ks == *ks && b.dim() == v.len());
    from_operators(v, ks.clone(), ops, m, mu, prev)
}

/// Trial subspaces of the 1D Bloch operators at the quasi-momenta `ks`.
pub fn build_subspaces_1d(
    v: &PotentialGrid,
    period: f64,
    ks: &[f64],
    m: usize,
    mu: usize,
) -> Result<SubspaceBundle> {
    let ops = ks
        .iter()
        .map(|&k| assemble_bloch_1d(period, k, v))
        .collect::<Result<Vec<_>>>()?;
    let sampling = KSampling::from_points(ks.iter().map(|&k| KPoint::new(k, 0.0)).collect());
    from_operators(v, sampling, ops, m, mu, None)
}

fn from_operators(
    v: &PotentialGrid,
    ks: KSampling,
    ops: Vec<HermitianOperator>,
    m: usize,
    mu: usize,
    prev: Option<&SubspaceBundle>,
) -> Result<SubspaceBundle> {
    if m == 0 || mu == 0 {
        return Err(Error::InvalidArgument(format!(
            "subspace sizes m = {m}, mu = {mu} must be positive"
        )));
    }
    if ops.is_empty() {
        return Err(Error::InvalidArgument(
            "empty quasi-momentum sampling".into(),
        ));
    }
    let opts = EigenOptions {
        tol: SUBSPACE_EIG_TOL,
        ..EigenOptions::default()
    };
    let neg_v: Vec<f64> = v.values.iter().map(|x| -x).collect();
    let per_k = ops
        .par_iter()
        .enumerate()
        .map(|(j, h)| {
            let warm = prev.map(|b| join_cols(&b.u_alpha[j], &b.u_beta[j]));
            let e =
                smallest_eigenpairs_with(h, m + mu, &opts, warm.as_ref()).map_err(|e| e.at_k(j))?;
            let q = e.vectors.clone().qr().q();
            let ua = q.columns(0, m).into_owned();
            let ub = q.columns(m, mu).into_owned();
            let l = h.add_diagonal(&neg_v);
            let la = herm(&ua.ad_mul(&l.apply(&ua)));
            let lb = herm(&ub.ad_mul(&l.apply(&ub)));
            Ok((ua, ub, la, lb, l, e.values))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut b = SubspaceBundle {
        m,
        mu,
        ks,
        generator: v.clone(),
        operators: Vec::with_capacity(per_k.len()),
        u_alpha: Vec::new(),
        u_beta: Vec::new(),
        l_alpha: Vec::new(),
        l_beta: Vec::new(),
        energies: Vec::new(),
    };
    for (ua, ub, la, lb, l, e) in per_k {
        b.u_alpha.push(ua);
        b.u_beta.push(ub);
        b.l_alpha.push(la);
        b.l_beta.push(lb);
        b.operators.push(l);
        b.energies.push(e);
    }
    Ok(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SdpSolver {
    InteriorPoint,
    /// First-order splitting; slow, intended for small cross-checks.
    Splitting,
}

#[derive(Debug, Clone, Copy)]
pub struct SdpOptions {
    pub tol: f64,
    pub max_iters: usize,
    pub solver: SdpSolver,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions {
            tol: DEFAULT_TOL,
            max_iters: 120,
            solver: SdpSolver::InteriorPoint,
        }
    }
}

/// De-homogenized optimum of the subspace SDP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpSolution {
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "V")]
    pub v: PotentialGrid,
    pub theta: f64,
    /// Homogenized edges; they sum to 2.
    pub alpha_h: f64,
    pub beta_h: f64,
    /// Subspace objective `2 (beta - alpha) / (alpha + beta)`.
    #[serde(rename = "G")]
    pub g: f64,
    /// Ratio of the incumbent (generating) potential.
    pub incumbent_g: f64,
    pub solver: SdpSolver,
    pub iterations: usize,
    pub converged: bool,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub relative_gap: f64,
}

/// Lagrange multipliers in the scaling of the fractional problem.
#[derive(Debug, Clone)]
pub struct DualCertificate {
    /// One `m x m` block per k (lower-edge constraints).
    pub a: Vec<CMat>,
    /// One `mu x mu` block per k (upper-edge constraints).
    pub b: Vec<CMat>,
    /// Multipliers of `V <= V+`.
    pub f_plus: Vec<f64>,
    /// Multipliers of `V >= 0`.
    pub f_minus: Vec<f64>,
}

fn homogenized(bundle: &SubspaceBundle, vp: f64) -> HomogenizedSdp {
    let q = bundle.len();
    let mut blocks = Vec::with_capacity(2 * q);
    for j in 0..q {
        blocks.push(Block {
            sign: 1.0,
            shift: 0.0,
            u: bundle.u_alpha[j].clone(),
            l: bundle.l_alpha[j].clone(),
        });
    }
    for j in 0..q {
        blocks.push(Block {
            sign: -1.0,
            shift: -2.0,
            u: bundle.u_beta[j].clone(),
            l: bundle.l_beta[j].clone(),
        });
    }
    HomogenizedSdp::new(bundle.dim(), vp, blocks)
}

/// Strictly dual-feasible point near the incumbent: the generating potential
/// pulled slightly into the box and the lower edge raised to compensate.
fn warm_start(p: &HomogenizedSdp, bundle: &SubspaceBundle, vp: f64) -> Result<(Vec<f64>, ConeVec)> {
    let (a0, b0) = bundle.incumbent_edges();
    if !(a0 + b0 > 0.0) {
        return Err(Error::DegenerateInput(format!(
            "edges alpha = {a0}, beta = {b0} have nonpositive sum"
        )));
    }
    let theta = 2.0 / (a0 + b0);
    let pull = 0.05;
    let n = p.n;
    let mut y = vec![0.0; p.nvars()];
    for l in 0..n {
        let v = bundle.generator.values[l].clamp(0.0, vp);
        y[l] = theta * (pull * vp + (1.0 - 2.0 * pull) * v);
    }
    y[p.theta_idx()] = theta;
    let mut lift = 2.0 * theta * pull * vp + 1e-3;
    for _ in 0..40 {
        y[p.edge_idx()] = theta * a0 + lift;
        let s = p.slack(&y);
        if s.blocks.iter().all(|b| b.clone().cholesky().is_some()) {
            return Ok((y, s));
        }
        lift *= 2.0;
    }
    Err(Error::DegenerateInput(
        "no interior starting point found".into(),
    ))
}

fn centered_primal(s: &ConeVec) -> ConeVec {
    let inv: Vec<CMat> = s
        .blocks
        .iter()
        .map(|b| {
            herm(
                &b.clone()
                    .cholesky()
                    .expect("positive definite start")
                    .inverse(),
            )
        })
        .collect();
    let tr: f64 = inv.iter().map(|z| z.trace().re).sum();
    let mu0 = 2.0 / tr;
    ConeVec {
        blocks: inv.iter().map(|z| z * Complex64::new(mu0, 0.0)).collect(),
        lo: s.lo.iter().map(|v| mu0 / v).collect(),
        up: s.up.iter().map(|v| mu0 / v).collect(),
    }
}

/// Solve the homogenized SDP over the bundle's subspaces, starting from the
/// generating potential. A solve that hits its iteration budget is returned
/// with `converged = false` and its best iterate.
pub fn solve_gap_sdp_with(
    bundle: &SubspaceBundle,
    vp: f64,
    opts: &SdpOptions,
) -> Result<(SdpSolution, DualCertificate)> {
    if !(vp > 0.0 && vp.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "V_plus = {vp} must be positive"
        )));
    }
    if bundle.is_empty() {
        return Err(Error::InvalidArgument("empty subspace bundle".into()));
    }
    let p = homogenized(bundle, vp);
    let (y0, s0) = warm_start(&p, bundle, vp)?;
    let (state, res, iterations, converged) = match opts.solver {
        SdpSolver::InteriorPoint => {
            let x0 = centered_primal(&s0);
            let out = ipm::solve(
                &p,
                ipm::IpmState {
                    y: y0,
                    x: x0,
                    s: s0,
                },
                opts.tol,
                opts.max_iters,
            );
            (out.state, out.res, out.iterations, out.converged)
        }
        SdpSolver::Splitting => {
            let out = splitting::solve(&p, y0, opts.tol, opts.max_iters)
                .ok_or_else(|| Error::DegenerateInput("singular constraint Gram matrix".into()))?;
            (out.state, out.res, out.iterations, out.converged)
        }
    };
    if !res.primal.is_finite() || !res.dual.is_finite() {
        return Err(Error::SolverStall {
            iterations,
            gap: res.gap,
            primal_infeas: res.primal,
            dual_infeas: res.dual,
        });
    }
    let n = p.n;
    let theta = state.y[p.theta_idx()];
    let alpha_h = state.y[p.edge_idx()];
    let beta_h = 2.0 - alpha_h;
    if !(theta > 0.0) {
        return Err(Error::SolverStall {
            iterations,
            gap: res.gap,
            primal_infeas: res.primal,
            dual_infeas: res.dual,
        });
    }
    let values: Vec<f64> = state.y[..n]
        .iter()
        .map(|w| (w / theta).clamp(0.0, vp))
        .collect();
    let g = &bundle.generator;
    let v = PotentialGrid::new(g.dim, g.n, values, vp)?;
    let (alpha, beta) = (alpha_h / theta, beta_h / theta);
    let q = bundle.len();
    let tc = Complex64::new(theta, 0.0);
    let cert = DualCertificate {
        a: state.x.blocks[..q].iter().map(|x| herm(x) * tc).collect(),
        b: state.x.blocks[q..].iter().map(|x| herm(x) * tc).collect(),
        f_plus: state.x.up.iter().map(|x| theta * x).collect(),
        f_minus: state.x.lo.iter().map(|x| theta * x).collect(),
    };
    let sol = SdpSolution {
        alpha,
        beta,
        v,
        theta,
        alpha_h,
        beta_h,
        g: gap_ratio(alpha, beta),
        incumbent_g: bundle.incumbent_g(),
        solver: opts.solver,
        iterations,
        converged,
        primal_infeasibility: res.primal,
        dual_infeasibility: res.dual,
        relative_gap: res.gap,
    };
    Ok((sol, cert))
}

/// [`solve_gap_sdp_with`] using the interior-point solver at tolerance
/// `tol`; running out of iterations is an error.
pub fn solve_gap_sdp(
    bundle: &SubspaceBundle,
    vp: f64,
    tol: f64,
) -> Result<(SdpSolution, DualCertificate)> {
    let (sol, cert) = solve_gap_sdp_with(
        bundle,
        vp,
        &SdpOptions {
            tol,
            ..SdpOptions::default()
        },
    )?;
    if !sol.converged {
        return Err(Error::SolverStall {
            iterations: sol.iterations,
            gap: sol.relative_gap,
            primal_infeas: sol.primal_infeasibility,
            dual_infeas: sol.dual_infeasibility,
        });
    }
    Ok((sol, cert))
}

/// Required multiplier traces at edges `(alpha, beta)`:
/// `sum tr A = 4 beta / (alpha + beta)^2`, `sum tr B = 4 alpha / (alpha + beta)^2`.
pub fn required_traces(alpha: f64, beta: f64) -> (f64, f64) {
    let s = (alpha + beta) * (alpha + beta);
    (4.0 * beta / s, 4.0 * alpha / s)
}

/// Optimality residuals of a solution and its multipliers, in the scaling of
/// the fractional problem. Every field is nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    /// `|sum tr A_j - 4 beta / (alpha + beta)^2|`.
    pub trace_lower: f64,
    /// `|sum tr B_j - 4 alpha / (alpha + beta)^2|`.
    pub trace_upper: f64,
    /// `max_l |diag(sum U_b B U_b* - U_a A U_a*)_l - (f+ - f-)_l|`.
    pub stationarity: f64,
    /// `|<f+, V+ - V>|`.
    pub slack_upper_bound: f64,
    /// `|<f-, V>|`.
    pub slack_lower_bound: f64,
    /// `max_j |<A_j, U_a* (L_j + diag V - alpha) U_a>|`.
    pub slack_lower_edge: f64,
    /// `max_j |<B_j, U_b* (L_j + diag V - beta) U_b>|`.
    pub slack_upper_edge: f64,
    /// Largest eigenvalue of the lower-edge constraint matrices, if positive.
    pub lower_edge_violation: f64,
    /// Negated smallest eigenvalue of the upper-edge constraint matrices, if positive.
    pub upper_edge_violation: f64,
    pub box_violation: f64,
    /// Negated smallest eigenvalue over all `A_j`, `B_j`, if positive.
    pub multiplier_psd_violation: f64,
    /// Negated smallest entry of `f+`, `f-`, if positive.
    pub multiplier_sign_violation: f64,
}

impl KktReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.trace_lower,
            self.trace_upper,
            self.stationarity,
            self.slack_upper_bound,
            self.slack_lower_bound,
            self.slack_lower_edge,
            self.slack_upper_edge,
            self.lower_edge_violation,
            self.upper_edge_violation,
            self.box_violation,
            self.multiplier_psd_violation,
            self.multiplier_sign_violation,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn within(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }
}

fn frob_re(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

pub fn kkt_report(
    sol: &SdpSolution,
    cert: &DualCertificate,
    bundle: &SubspaceBundle,
) -> Result<KktReport> {
    let q = bundle.len();
    let n = bundle.dim();
    if cert.a.len() != q
        || cert.b.len() != q
        || cert.f_plus.len() != n
        || cert.f_minus.len() != n
        || sol.v.len() != n
    {
        return Err(Error::DimensionMismatch(format!(
            "certificate has {}/{} blocks and {} multipliers; bundle has {q} points and {n} cells",
            cert.a.len(),
            cert.b.len(),
            cert.f_plus.len()
        )));
    }
    let (alpha, beta) = (sol.alpha, sol.beta);
    let v = &sol.v.values;
    let vp = sol.v.v_plus;
    let (req_a, req_b) = required_traces(alpha, beta);
    let tr_a: f64 = cert.a.iter().map(|a| a.trace().re).sum();
    let tr_b: f64 = cert.b.iter().map(|b| b.trace().re).sum();

    let mut diag = vec![0.0; n];
    let mut slack_lower_edge: f64 = 0.0;
    let mut slack_upper_edge: f64 = 0.0;
    let mut lower_viol: f64 = 0.0;
    let mut upper_viol: f64 = 0.0;
    let mut psd_viol: f64 = 0.0;
    for j in 0..q {
        for (u, blk, sign) in [
            (&bundle.u_beta[j], &cert.b[j], 1.0),
            (&bundle.u_alpha[j], &cert.a[j], -1.0),
        ] {
            let p = u * blk;
            for l in 0..n {
                let mut s = 0.0;
                for t in 0..u.ncols() {
                    s += (p[(l, t)] * u[(l, t)].conj()).re;
                }
                diag[l] += sign * s;
            }
            psd_viol = psd_viol.max(-extreme_eig(blk, false));
        }
        let mut ca = bundle.lower_block(j, v);
        for i in 0..ca.nrows() {
            ca[(i, i)] -= Complex64::new(alpha, 0.0);
        }
        let mut cb = bundle.upper_block(j, v);
        for i in 0..cb.nrows() {
            cb[(i, i)] -= Complex64::new(beta, 0.0);
        }
        slack_lower_edge = slack_lower_edge.max(frob_re(&cert.a[j], &ca).abs());
        slack_upper_edge = slack_upper_edge.max(frob_re(&cert.b[j], &cb).abs());
        lower_viol = lower_viol.max(extreme_eig(&ca, true));
        upper_viol = upper_viol.max(-extreme_eig(&cb, false));
    }
    let stationarity = (0..n)
        .map(|l| (diag[l] - (cert.f_plus[l] - cert.f_minus[l])).abs())
        .fold(0.0, f64::max);
    let slack_upper_bound = cert
        .f_plus
        .iter()
        .zip(v)
        .map(|(f, x)| f * (vp - x))
        .sum::<f64>()
        .abs();
    let slack_lower_bound = cert
        .f_minus
        .iter()
        .zip(v)
        .map(|(f, x)| f * x)
        .sum::<f64>()
        .abs();
    let box_violation = v.iter().map(|x| (-x).max(x - vp)).fold(0.0, f64::max);
    let sign_viol = cert
        .f_plus
        .iter()
        .chain(&cert.f_minus)
        .map(|f| -f)
        .fold(0.0, f64::max);
    Ok(KktReport {
        trace_lower: (tr_a - req_a).abs(),
        trace_upper: (tr_b - req_b).abs(),
        stationarity,
        slack_upper_bound,
        slack_lower_bound,
        slack_lower_edge,
        slack_upper_edge,
        lower_edge_violation: lower_viol.max(0.0),
        upper_edge_violation: upper_viol.max(0.0),
        box_violation: box_violation.max(0.0),
        multiplier_psd_violation: psd_viol.max(0.0),
        multiplier_sign_violation: sign_viol,
    })
}

/// Whether a potential touches either bound somewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BangBangCheck {
    pub weakly_bang_bang: bool,
    /// First grid index at a bound, if any.
    pub witness: Option<usize>,
    /// Fraction of cells strictly between the bounds.
    pub interior_fraction: f64,
}

/// `V_l` within `tol V+` of `0` or `V+` at some cell `l`.
pub fn weakly_bang_bang_check(v: &PotentialGrid, tol: f64) -> BangBangCheck {
    let band = tol * v.v_plus;
    let at_bound = |x: f64| x <= band || x >= v.v_plus - band;
    let witness = v.values.iter().position(|&x| at_bound(x));
    let interior = v.values.iter().filter(|&&x| !at_bound(x)).count();
    BangBangCheck {
        weakly_bang_bang: witness.is_some(),
        witness,
        interior_fraction: interior as f64 / v.len().max(1) as f64,
    }
}

/// Potential with every cell rounded to the nearer bound.
pub fn round_to_bang_bang(v: &PotentialGrid) -> PotentialGrid {
    let values = v
        .values
        .iter()
        .map(|&x| if x >= 0.5 * v.v_plus { v.v_plus } else { 0.0 })
        .collect();
    PotentialGrid {
        values,
        ..v.clone()
    }
}

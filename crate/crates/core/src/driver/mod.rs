//! Outer optimization loop for two-dimensional potentials, initial guesses,
//! parameter sweeps and geometric diagnostics of the optimizers.
//!
//! Each outer iteration computes trial subspaces at the current potential,
//! solves the subspace SDP for a new potential, and evaluates the true gap of
//! that potential on the same quasi-momentum sampling.

mod components;
mod init;
mod sweep;

pub use components::{component_analysis, Component, ComponentReport};
pub use init::{
    disk_array_centers, disk_array_potential, init_potential, Disk, InitSpec, InitStrategy,
};
pub use sweep::{
    contrast_sweep, lattice_sweep, ContrastPoint, ContrastSweep, LatticeGrid, LatticeRow,
    LatticeSweep,
};

use serde::{Deserialize, Serialize};

use crate::bands::signed_gap_ratio;
use crate::error::{Error, Result};
use crate::lattice::{
    basis_from_params, full_bz_grid, half_bz_grid, ibz_boundary_path, KPoint, KSampling,
    LatticeKind, LatticeParams,
};
use crate::operator::PotentialGrid;
use crate::sdpopt::{
    build_subspaces_warm, kkt_report, solve_gap_sdp_with, weakly_bang_bang_check, BangBangCheck,
    KktReport, SdpOptions, SdpSolver, SubspaceBundle, DEFAULT_MU, DEFAULT_TOL,
};

/// Lattice given by name or by its `(a, b)` parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LatticeSpec {
    Named(LatticeKind),
    Params { a: f64, b: f64 },
}

impl LatticeSpec {
    pub fn params(&self) -> Result<LatticeParams> {
        match *self {
            LatticeSpec::Named(k) => Ok(k.params()),
            LatticeSpec::Params { a, b } => LatticeParams::new(a, b),
        }
    }

    pub fn kind(&self) -> Option<LatticeKind> {
        match *self {
            LatticeSpec::Named(k) => Some(k),
            LatticeSpec::Params { a, b } => LatticeParams { a, b }.kind(),
        }
    }
}

/// Quasi-momentum sampling used by the optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KSpec {
    /// Boundary of the irreducible zone; square and triangular lattices only.
    IbzBoundary {
        points_per_side: usize,
    },
    /// Half of the zone, no point symmetry assumed.
    HalfBz {
        resolution: usize,
    },
    FullBz {
        resolution: usize,
    },
    /// Explicit quasi-momenta in Cartesian coordinates.
    Points {
        points: Vec<[f64; 2]>,
    },
}

impl Default for KSpec {
    fn default() -> Self {
        KSpec::IbzBoundary { points_per_side: 8 }
    }
}

impl KSpec {
    pub fn sample(&self, lattice: &LatticeSpec) -> Result<KSampling> {
        let p = lattice.params()?;
        match self {
            &KSpec::IbzBoundary { points_per_side } => {
                let kind = lattice.kind().ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "irreducible-zone path needs a square or triangular lattice, got (a, b) = ({}, {})",
                        p.a, p.b
                    ))
                })?;
                if points_per_side == 0 {
                    return Err(Error::InvalidArgument(
                        "points_per_side must be positive".into(),
                    ));
                }
                Ok(ibz_boundary_path(kind, points_per_side))
            }
            &KSpec::HalfBz { resolution } => half_bz_grid(&basis_from_params(p)?, resolution),
            &KSpec::FullBz { resolution } => full_bz_grid(&basis_from_params(p)?, resolution),
            KSpec::Points { points } => {
                if points.is_empty() || points.iter().flatten().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidArgument(
                        "explicit k-points must be finite and nonempty".into(),
                    ));
                }
                Ok(KSampling::from_points(
                    points.iter().map(|k| KPoint::new(k[0], k[1])).collect(),
                ))
            }
        }
    }
}

fn default_mu() -> usize {
    DEFAULT_MU
}
fn default_max_outer() -> usize {
    40
}
fn default_eps_v() -> f64 {
    1e-4
}
fn default_eps_g() -> f64 {
    1e-4
}
fn default_restarts() -> usize {
    5
}
fn default_sdp_tol() -> f64 {
    DEFAULT_TOL
}
fn default_sdp_max_iters() -> usize {
    120
}

/// Control constants of the two-dimensional outer loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeConfig {
    pub m: usize,
    pub v_plus: f64,
    pub lattice: LatticeSpec,
    pub n: usize,
    #[serde(default)]
    pub k_sampling: KSpec,
    #[serde(default = "default_mu")]
    pub mu: usize,
    #[serde(default = "default_max_outer")]
    pub max_outer: usize,
    /// Stop once `|dV|_inf < eps_v * V+`.
    #[serde(default = "default_eps_v")]
    pub eps_v: f64,
    /// Stop once `|dG| < eps_g` on three consecutive iterations.
    #[serde(default = "default_eps_g")]
    pub eps_g: f64,
    #[serde(default)]
    pub init: InitStrategy,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_sdp_tol")]
    pub sdp_tol: f64,
    #[serde(default = "default_sdp_max_iters")]
    pub sdp_max_iters: usize,
}

/// Consecutive small objective changes needed to declare stationarity.
pub const STALL_WINDOW: usize = 3;

impl OptimizeConfig {
    pub fn new(m: usize, v_plus: f64, lattice: LatticeSpec, n: usize) -> Self {
        OptimizeConfig {
            m,
            v_plus,
            lattice,
            n,
            k_sampling: KSpec::default(),
            mu: DEFAULT_MU,
            max_outer: default_max_outer(),
            eps_v: default_eps_v(),
            eps_g: default_eps_g(),
            init: InitStrategy::default(),
            seed: 0,
            restarts: default_restarts(),
            sdp_tol: DEFAULT_TOL,
            sdp_max_iters: default_sdp_max_iters(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(Error::InvalidArgument(s));
        if self.m == 0 {
            return bad("m must be at least 1".into());
        }
        if !(self.v_plus > 0.0 && self.v_plus.is_finite()) {
            return bad(format!(
                "v_plus = {} must be positive and finite",
                self.v_plus
            ));
        }
        if self.n < 8 {
            return bad(format!("grid size n = {} below 8", self.n));
        }
        if self.mu == 0 {
            return bad("mu must be at least 1".into());
        }
        if self.m + self.mu > self.n * self.n {
            return bad(format!(
                "m + mu = {} exceeds the grid dimension",
                self.m + self.mu
            ));
        }
        for (name, v) in [
            ("eps_v", self.eps_v),
            ("eps_g", self.eps_g),
            ("sdp_tol", self.sdp_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} = {v} must be positive"));
            }
        }
        if self.max_outer == 0 || self.sdp_max_iters == 0 {
            return bad("iteration budgets must be positive".into());
        }
        self.lattice.params()?;
        self.k_sampling.sample(&self.lattice)?;
        Ok(())
    }

    pub fn init_spec(&self) -> Result<InitSpec> {
        Ok(InitSpec {
            dim: 2,
            n: self.n,
            m: self.m,
            v_plus: self.v_plus,
            lattice: self.lattice.params()?,
            seed: self.seed,
        })
    }

    fn sdp_options(&self) -> SdpOptions {
        SdpOptions {
            tol: self.sdp_tol,
            max_iters: self.sdp_max_iters,
            solver: SdpSolver::InteriorPoint,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Stationary,
    Budget,
    /// An SDP solve failed to converge; the trace up to that point is kept.
    Stalled,
}

/// One outer iteration. Iteration 0 describes the initial potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Index into [`OptimizeTrace::snapshots`].
    pub snapshot: usize,
    /// Ratio of the new potential on the sampling.
    #[serde(rename = "G")]
    pub g: f64,
    /// Same without clipping at zero; negative while the bands overlap.
    /// Progress and the best iterate are judged on this value.
    pub signed_g: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Subspace objective of the SDP, unclipped.
    #[serde(rename = "sdp_G")]
    pub sdp_g: Option<f64>,
    pub sdp_iterations: Option<usize>,
    pub sdp_converged: Option<bool>,
    pub kkt_max_residual: Option<f64>,
    pub weakly_bang_bang: Option<bool>,
    pub interior_fraction: f64,
    /// `|V_new - V_old|_inf`.
    pub dv_inf: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeTrace {
    pub config: OptimizeConfig,
    pub init: InitStrategy,
    pub seed: u64,
    pub records: Vec<IterationRecord>,
    pub snapshots: Vec<PotentialGrid>,
    pub status: RunStatus,
    /// Index of the record with the largest `G`.
    pub best: usize,
    /// KKT residuals of the last SDP solve.
    pub final_kkt: Option<KktReport>,
    pub final_bang_bang: Option<BangBangCheck>,
    pub stall: Option<String>,
}

impl OptimizeTrace {
    pub fn best_record(&self) -> &IterationRecord {
        &self.records[self.best]
    }

    pub fn best_g(&self) -> f64 {
        self.best_record().g
    }

    pub fn best_potential(&self) -> &PotentialGrid {
        &self.snapshots[self.best_record().snapshot]
    }

    pub fn iterations(&self) -> usize {
        self.records.len() - 1
    }

    /// Largest amount by which an SDP objective fell short of the ratio of
    /// the potential it started from (0 if none). The incumbent is feasible
    /// for every solve, so this is bounded by the SDP tolerance.
    pub fn sdp_monotonicity_defect(&self) -> f64 {
        self.records
            .windows(2)
            .filter_map(|w| w[1].sdp_g.map(|s| w[0].signed_g - s))
            .fold(0.0, f64::max)
    }

    /// Largest decrease of the true `G` between consecutive iterations (0 if
    /// none). Unlike the SDP objective this is not guaranteed to vanish: the
    /// subspace edges do not bound the true upper edge.
    pub fn max_decrease(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| w[0].signed_g - w[1].signed_g)
            .fold(0.0, f64::max)
    }
}

fn sup_diff(a: &PotentialGrid, b: &PotentialGrid) -> f64 {
    a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn bundle_at(
    cfg: &OptimizeConfig,
    v: &PotentialGrid,
    ks: &KSampling,
    p: LatticeParams,
    prev: Option<&SubspaceBundle>,
) -> Result<SubspaceBundle> {
    build_subspaces_warm(v, p, ks, cfg.m, cfg.mu, prev)
}

/// Run the outer loop from the configured initial strategy.
pub fn optimize_2d(cfg: &OptimizeConfig) -> Result<OptimizeTrace> {
    cfg.validate()?;
    let v0 = init_potential(cfg.init, &cfg.init_spec()?)?;
    optimize_2d_from(cfg, v0)
}

/// Run the outer loop from a given potential.
pub fn optimize_2d_from(cfg: &OptimizeConfig, v0: PotentialGrid) -> Result<OptimizeTrace> {
    cfg.validate()?;
    if v0.dim != 2 || v0.n != cfg.n {
        return Err(Error::DimensionMismatch(format!(
            "initial potential is {}D with n = {}, config wants 2D with n = {}",
            v0.dim, v0.n, cfg.n
        )));
    }
    let v0 = PotentialGrid::new(2, cfg.n, v0.values, cfg.v_plus)?;
    let p = cfg.lattice.params()?;
    let ks = cfg.k_sampling.sample(&cfg.lattice)?;
    let opts = cfg.sdp_options();

    let mut bundle = bundle_at(cfg, &v0, &ks, p, None)?;
    let (a0, b0) = bundle.incumbent_edges();
    let mut trace = OptimizeTrace {
        config: cfg.clone(),
        init: cfg.init,
        seed: cfg.seed,
        records: vec![IterationRecord {
            iteration: 0,
            snapshot: 0,
            g: bundle.incumbent_g(),
            signed_g: signed_gap_ratio(a0, b0),
            alpha: a0,
            beta: b0,
            sdp_g: None,
            sdp_iterations: None,
            sdp_converged: None,
            kkt_max_residual: None,
            weakly_bang_bang: None,
            interior_fraction: v0.interior_fraction(1e-6),
            dv_inf: None,
        }],
        snapshots: vec![v0],
        status: RunStatus::Budget,
        best: 0,
        final_kkt: None,
        final_bang_bang: None,
        stall: None,
    };
    let mut small_steps = 0;
    for it in 1..=cfg.max_outer {
        let (sol, cert) = solve_gap_sdp_with(&bundle, cfg.v_plus, &opts)?;
        if !sol.converged {
            trace.status = RunStatus::Stalled;
            trace.stall = Some(
                Error::SolverStall {
                    iterations: sol.iterations,
                    gap: sol.relative_gap,
                    primal_infeas: sol.primal_infeasibility,
                    dual_infeas: sol.dual_infeasibility,
                }
                .to_string(),
            );
            return Ok(trace);
        }
        let kkt = kkt_report(&sol, &cert, &bundle)?;
        let bb = weakly_bang_bang_check(&sol.v, 1e-6);
        let prev = trace.snapshots.last().expect("initial snapshot");
        let dv = sup_diff(prev, &sol.v);
        let next = bundle_at(cfg, &sol.v, &ks, p, Some(&bundle))?;
        let (a, b) = next.incumbent_edges();
        let g = next.incumbent_g();
        let sg = signed_gap_ratio(a, b);
        let dg = (sg - trace.records.last().expect("initial record").signed_g).abs();
        trace.records.push(IterationRecord {
            iteration: it,
            snapshot: trace.snapshots.len(),
            g,
            signed_g: sg,
            alpha: a,
            beta: b,
            sdp_g: Some(signed_gap_ratio(sol.alpha, sol.beta)),
            sdp_iterations: Some(sol.iterations),
            sdp_converged: Some(sol.converged),
            kkt_max_residual: Some(kkt.max_residual()),
            weakly_bang_bang: Some(bb.weakly_bang_bang),
            interior_fraction: sol.v.interior_fraction(1e-6),
            dv_inf: Some(dv),
        });
        trace.snapshots.push(sol.v);
        if sg > trace.records[trace.best].signed_g {
            trace.best = it;
        }
        trace.final_kkt = Some(kkt);
        trace.final_bang_bang = Some(bb);
        bundle = next;

        small_steps = if dg < cfg.eps_g { small_steps + 1 } else { 0 };
        if dv < cfg.eps_v * cfg.v_plus || small_steps >= STALL_WINDOW {
            trace.status = RunStatus::Stationary;
            break;
        }
    }
    Ok(trace)
}

/// Outcome of one restart in [`optimize_2d_best_of`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub init: InitStrategy,
    pub seed: u64,
    #[serde(rename = "G")]
    pub g: f64,
    pub status: RunStatus,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestOf {
    pub best: OptimizeTrace,
    pub runs: Vec<RestartSummary>,
}

/// Initial strategies and seeds of the restarts: the configured one first,
/// then the other deterministic shapes, then random shapes with new seeds.
pub fn restart_plan(cfg: &OptimizeConfig) -> Vec<(InitStrategy, u64)> {
    let mut plan = vec![(cfg.init, cfg.seed)];
    for s in [InitStrategy::DiskArray, InitStrategy::Cosine] {
        if s != cfg.init {
            plan.push((s, cfg.seed));
        }
    }
    let mut seed = cfg.seed;
    while plan.len() < cfg.restarts.max(1) {
        seed = seed.wrapping_add(1);
        plan.push((InitStrategy::RandomBangBang, seed));
    }
    plan.truncate(cfg.restarts.max(1));
    plan
}

/// Best of `cfg.restarts` runs from different initial potentials.
pub fn optimize_2d_best_of(cfg: &OptimizeConfig) -> Result<BestOf> {
    cfg.validate()?;
    let mut best: Option<OptimizeTrace> = None;
    let mut runs = Vec::new();
    for (init, seed) in restart_plan(cfg) {
        let c = OptimizeConfig {
            init,
            seed,
            ..cfg.clone()
        };
        let t = optimize_2d(&c)?;
        runs.push(RestartSummary {
            init,
            seed,
            g: t.best_g(),
            status: t.status,
            iterations: t.iterations(),
        });
        let better = |b: &OptimizeTrace| t.best_record().signed_g > b.best_record().signed_g;
        if best.as_ref().map(better).unwrap_or(true) {
            best = Some(t);
        }
    }
    Ok(BestOf {
        best: best.expect("at least one restart"),
        runs,
    })
}

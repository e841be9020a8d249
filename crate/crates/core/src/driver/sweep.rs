//! Contrast and lattice sweeps built on the outer loop.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::components::component_analysis;
use super::{optimize_2d_best_of, optimize_2d_from, KSpec, LatticeSpec, OptimizeConfig, RunStatus};
use crate::error::{Error, Result};
use crate::lattice::LatticeParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastPoint {
    pub v_plus: f64,
    #[serde(rename = "G")]
    pub g: f64,
    /// Components of `{V < V+/2}` in the optimizer.
    pub components: usize,
    pub status: RunStatus,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastSweep {
    pub m: usize,
    pub points: Vec<ContrastPoint>,
    /// First `V+` whose optimum has `G > eps_g`.
    pub threshold: Option<f64>,
    /// Optimizer at the last contrast.
    pub last_potential: Option<crate::operator::PotentialGrid>,
}

/// Optimize at each contrast in ascending order. Once a gap has opened, the
/// next contrast starts from the previous optimum, which stays admissible as
/// `V+` grows, so `G` cannot drop. Until then a closed-gap optimum carries no
/// information and every contrast uses the configured restarts.
pub fn contrast_sweep(cfg: &OptimizeConfig, vp_list: &[f64]) -> Result<ContrastSweep> {
    if vp_list.is_empty() {
        return Err(Error::InvalidArgument("empty contrast list".into()));
    }
    if vp_list.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(
            "contrast list must be strictly ascending".into(),
        ));
    }
    let p = cfg.lattice.params()?;
    let mut points = Vec::with_capacity(vp_list.len());
    let mut prev: Option<crate::operator::PotentialGrid> = None;
    for &vp in vp_list {
        let c = OptimizeConfig {
            v_plus: vp,
            ..cfg.clone()
        };
        let open = points
            .last()
            .is_some_and(|q: &ContrastPoint| q.g > cfg.eps_g);
        let trace = match prev.take() {
            Some(v) if open => {
                optimize_2d_from(&c, crate::operator::PotentialGrid { v_plus: vp, ..v })?
            }
            _ => optimize_2d_best_of(&c)?.best,
        };
        let best = trace.best_potential().clone();
        let comps = component_analysis(&best, p, vp / 2.0)?;
        points.push(ContrastPoint {
            v_plus: vp,
            g: trace.best_g(),
            components: comps.count,
            status: trace.status,
            iterations: trace.iterations(),
        });
        prev = Some(best);
    }
    let threshold = points.iter().find(|q| q.g > cfg.eps_g).map(|q| q.v_plus);
    Ok(ContrastSweep {
        m: cfg.m,
        points,
        threshold,
        last_potential: prev,
    })
}

/// Uniform grid over the box `[0, 1/2] x [b_min, b_max]` of lattice
/// parameters; points outside the parameter domain are skipped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeGrid {
    pub a_points: usize,
    pub b_points: usize,
    pub b_min: f64,
    pub b_max: f64,
}

impl Default for LatticeGrid {
    fn default() -> Self {
        LatticeGrid {
            a_points: 11,
            b_points: 11,
            b_min: 3f64.sqrt() / 2.0,
            b_max: 2.0,
        }
    }
}

impl LatticeGrid {
    pub fn step(&self) -> (f64, f64) {
        let da = 0.5 / (self.a_points.max(2) - 1) as f64;
        let db = (self.b_max - self.b_min) / (self.b_points.max(2) - 1) as f64;
        (da, db)
    }

    /// All grid nodes with a flag telling whether they lie in the domain.
    pub fn nodes(&self) -> Vec<(f64, f64, bool)> {
        let (da, db) = self.step();
        let mut out = Vec::with_capacity(self.a_points * self.b_points);
        for jb in 0..self.b_points {
            for ia in 0..self.a_points {
                let a = ia as f64 * da;
                let b = self.b_min + jb as f64 * db;
                out.push((a, b, LatticeParams::new(a, b).is_ok()));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeRow {
    pub a: f64,
    pub b: f64,
    pub feasible: bool,
    #[serde(rename = "G")]
    pub g: Option<f64>,
    pub status: Option<RunStatus>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSweep {
    pub m: usize,
    pub v_plus: f64,
    pub rows: Vec<LatticeRow>,
    /// `(a, b, G)` of the best lattice.
    pub best: Option<(f64, f64, f64)>,
}

/// Optimize the `m`-th gap for every feasible lattice of the grid, using
/// half-zone sampling at the given resolution. Points run in parallel; a
/// failed point is flagged and the sweep continues.
pub fn lattice_sweep(
    cfg: &OptimizeConfig,
    grid: &LatticeGrid,
    half_bz_resolution: usize,
) -> Result<LatticeSweep> {
    if grid.a_points == 0 || grid.b_points == 0 || !(grid.b_max >= grid.b_min && grid.b_min > 0.0) {
        return Err(Error::InvalidArgument(format!("bad lattice grid {grid:?}")));
    }
    let rows: Vec<LatticeRow> = grid
        .nodes()
        .into_par_iter()
        .map(|(a, b, feasible)| {
            if !feasible {
                return LatticeRow {
                    a,
                    b,
                    feasible,
                    g: None,
                    status: None,
                    error: None,
                };
            }
            let c = OptimizeConfig {
                lattice: LatticeSpec::Params { a, b },
                k_sampling: KSpec::HalfBz {
                    resolution: half_bz_resolution,
                },
                ..cfg.clone()
            };
            match optimize_2d_best_of(&c) {
                Ok(r) => LatticeRow {
                    a,
                    b,
                    feasible,
                    g: Some(r.best.best_g()),
                    status: Some(r.best.status),
                    error: None,
                },
                Err(e) => LatticeRow {
                    a,
                    b,
                    feasible,
                    g: None,
                    status: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let best = rows.iter().filter_map(|r| r.g.map(|g| (r.a, r.b, g))).fold(
        None,
        |acc: Option<(f64, f64, f64)>, x| match acc {
            Some(y) if y.2 >= x.2 => Some(y),
            _ => Some(x),
        },
    );
    Ok(LatticeSweep {
        m: cfg.m,
        v_plus: cfg.v_plus,
        rows,
        best,
    })
}

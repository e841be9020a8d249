//! The `bands`, `optimize1d`, `optimize2d` and `sweep` commands.

use gapforge::bands::{dispersion, dispersion_1d, gap_report, DispersionTable, GapReport};
use gapforge::driver::{
    component_analysis, contrast_sweep, disk_array_potential, init_potential, lattice_sweep,
    optimize_2d_best_of, InitSpec, KSpec, LatticeSpec, OptimizeConfig, RunStatus,
};
use gapforge::hill1d::{
    optimize_1d, transfer_matrix_spectrum, verify_1d_certificates, StepPotential,
};
use gapforge::lattice::{KPoint, KSampling, LatticeParams};
use gapforge::operator::PotentialGrid;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use crate::config::{
    BandsConfig, Command, ConfigFile, Init1d, Optimize1dConfig, PotentialSource, SweepKind,
};
use crate::error::{invalid, CliError, CliResult, ExitCode};
use crate::format::{
    csv_text, dispersion_csv, fmt_num, json_text, jsonl_text, potential_csv, potential_meta,
    read_potential,
};
use crate::manifest::{now, OutputDir, RunManifest};
use crate::svg;

/// Settings shared by every command after flags and file are merged.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub out: PathBuf,
    pub threads: usize,
}

/// Result of a command that ran to completion.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub exit: ExitCode,
    /// One-line human summary.
    pub summary: String,
    /// Why the exit code is not 0.
    pub reason: Option<String>,
    pub manifest: RunManifest,
}

fn manifest(
    cmd: Command,
    config: serde_json::Value,
    seeds: Vec<u64>,
    ctx: &RunContext,
) -> RunManifest {
    RunManifest {
        command: cmd.name().into(),
        config,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        seeds,
        threads: ctx.threads,
        started_at: now(),
        finished_at: 0.0,
        outputs: Vec::new(),
    }
}

/// Fixed potential for `bands`: exact step form or a grid.
enum Potential {
    Step(StepPotential),
    Grid(PotentialGrid),
}

fn read_step(path: &Path) -> CliResult<StepPotential> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::ReadConfig {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Data {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn is_json(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()) == Some("json")
}

fn bands_potential(
    cfg: &BandsConfig,
    file: &ConfigFile,
    p: Option<LatticeParams>,
) -> CliResult<Potential> {
    let period = cfg.period.unwrap_or(1.0);
    let need_n = || {
        cfg.n.ok_or_else(|| CliError::Field {
            path: file.path.clone(),
            field: "n".into(),
            message: "missing field `n` (grid size)".into(),
        })
    };
    let pot = match (&cfg.potential, cfg.dim) {
        (PotentialSource::Constant { value }, 1) => Potential::Step(
            StepPotential::constant(period, *value, cfg.v_plus.unwrap_or(value.max(0.0)))
                .map_err(invalid)?,
        ),
        (PotentialSource::Constant { value }, 2) => Potential::Grid(
            PotentialGrid::constant(2, need_n()?, *value, cfg.v_plus.unwrap_or(value.max(0.0)))
                .map_err(invalid)?,
        ),
        (
            PotentialSource::Step {
                breakpoints,
                values,
            },
            1,
        ) => {
            let vp = cfg
                .v_plus
                .unwrap_or(values.iter().copied().fold(0.0, f64::max));
            Potential::Step(
                StepPotential::new(period, breakpoints.clone(), values.clone(), vp)
                    .map_err(invalid)?,
            )
        }
        (PotentialSource::File { path }, d) => {
            let path = file.resolve(path);
            if is_json(&path) {
                if d != 1 {
                    return Err(CliError::Invalid(
                        "a JSON step potential needs dim = 1".into(),
                    ));
                }
                Potential::Step(read_step(&path)?)
            } else {
                let g = read_potential(&path)?;
                if g.dim != d {
                    return Err(CliError::Invalid(format!(
                        "{} holds a {}D grid, config says dim = {d}",
                        path.display(),
                        g.dim
                    )));
                }
                if cfg.n.is_some_and(|n| n != g.n) {
                    return Err(CliError::Invalid(format!(
                        "{} has n = {}, config says {:?}",
                        path.display(),
                        g.n,
                        cfg.n
                    )));
                }
                Potential::Grid(g)
            }
        }
        (PotentialSource::Disks { disks }, 2) => Potential::Grid(
            disk_array_potential(
                need_n()?,
                p.expect("2D lattice"),
                cfg.v_plus.unwrap_or(100.0),
                disks,
            )
            .map_err(invalid)?,
        ),
        (PotentialSource::Init { strategy, m, seed }, d) => {
            let spec = InitSpec {
                dim: d,
                n: need_n()?,
                m: *m,
                v_plus: cfg.v_plus.unwrap_or(100.0),
                lattice: p.unwrap_or(LatticeParams::square()),
                seed: *seed,
            };
            Potential::Grid(init_potential(*strategy, &spec).map_err(invalid)?)
        }
        (src, d) => {
            return Err(CliError::Invalid(format!(
                "potential {src:?} is not available in {d}D"
            )));
        }
    };
    Ok(pot)
}

/// 1D samples `k = 0 .. pi/X` labelled Γ and X.
fn k_line(period: f64, count: usize) -> KSampling {
    let count = count.max(2);
    let pts = (0..count)
        .map(|i| KPoint::new(PI / period * i as f64 / (count - 1) as f64, 0.0))
        .collect();
    let mut ks = KSampling::from_points(pts);
    ks.labels = vec![(0, "Γ".into()), (count - 1, "X".into())];
    ks
}

pub fn run_bands(file: &ConfigFile, ctx: &RunContext) -> CliResult<Outcome> {
    let cfg: BandsConfig = file.parse_body()?;
    if cfg.m == 0 {
        return Err(CliError::Invalid("m must be at least 1".into()));
    }
    if cfg.dim != 1 && cfg.dim != 2 {
        return Err(CliError::Invalid(format!(
            "dim = {} not in {{1, 2}}",
            cfg.dim
        )));
    }
    let bands = cfg.bands.unwrap_or(cfg.m + 2);
    if bands < cfg.m + 1 {
        return Err(CliError::Invalid(format!(
            "bands = {bands} cannot show gap {}",
            cfg.m
        )));
    }
    let lattice = cfg
        .lattice
        .unwrap_or(LatticeSpec::Named(gapforge::lattice::LatticeKind::Square));
    let p = if cfg.dim == 2 {
        Some(lattice.params().map_err(invalid)?)
    } else {
        None
    };
    let pot = bands_potential(&cfg, file, p)?;
    let table: DispersionTable = if cfg.dim == 1 {
        let period = cfg.period.unwrap_or(1.0);
        let ks = k_line(period, cfg.k_points.unwrap_or(41));
        match &pot {
            Potential::Step(v) => {
                let energies = ks
                    .points
                    .par_iter()
                    .map(|k| transfer_matrix_spectrum(v, k.0[0], bands))
                    .collect::<gapforge::Result<Vec<_>>>()?;
                DispersionTable {
                    ks,
                    bands,
                    energies,
                    params: None,
                    period: Some(v.period),
                    n: 0,
                }
            }
            Potential::Grid(g) => {
                let kx: Vec<f64> = ks.points.iter().map(|k| k.0[0]).collect();
                let mut t = dispersion_1d(g, period, &kx, bands)?;
                t.ks = ks;
                t
            }
        }
    } else {
        let Potential::Grid(g) = &pot else {
            unreachable!("2D potentials are grids")
        };
        let spec = cfg
            .k_sampling
            .clone()
            .unwrap_or(if lattice.kind().is_some() {
                KSpec::IbzBoundary { points_per_side: 8 }
            } else {
                KSpec::HalfBz { resolution: 4 }
            });
        let mut ks = spec.sample(&lattice).map_err(invalid)?;
        if matches!(spec, KSpec::IbzBoundary { .. }) {
            ks = ks.closed();
        }
        dispersion(g, p.expect("2D"), &ks, bands)?
    };
    let gap = gap_report(&table, cfg.m)?;

    let mut out = OutputDir::create(&ctx.out)?;
    out.write("dispersion.csv", &dispersion_csv(&table))?;
    out.write(
        "dispersion.json",
        &json_text(&json!({
            "dim": cfg.dim,
            "bands": table.bands,
            "n": table.n,
            "lattice": table.params,
            "period": table.period,
            "labels": table.ks.labels,
            "k_points": table.ks.len(),
            "potential": cfg.potential,
        })),
    )?;
    out.write("gap.json", &json_text(&gap))?;
    let title = format!(
        "bands 1..{} with gap {} (G = {:.5})",
        table.bands, gap.m, gap.g
    );
    out.write("bands.svg", &svg::band_plot(&table, Some(&gap), &title))?;
    let m = out.finish(manifest(
        Command::Bands,
        json!({"file": file.path, "bands": cfg}),
        vec![],
        ctx,
    ))?;
    Ok(Outcome {
        exit: ExitCode::Success,
        summary: format!(
            "gap {}: alpha = {}, beta = {}, G = {}",
            gap.m, gap.alpha, gap.beta, gap.g
        ),
        reason: None,
        manifest: m,
    })
}

#[derive(Serialize)]
struct Iterate1dRecord {
    iteration: usize,
    #[serde(rename = "G")]
    g: f64,
    alpha: f64,
    beta: f64,
    change: Option<f64>,
    barrier_fraction: f64,
    transitions: usize,
}

pub fn run_optimize1d(file: &ConfigFile, ctx: &RunContext) -> CliResult<Outcome> {
    let cfg: Optimize1dConfig = file.parse_body()?;
    cfg.validate()?;
    let init = match &cfg.init {
        Init1d::Cosine => StepPotential::cosine_init(cfg.period, cfg.m, cfg.v_plus),
        Init1d::KronigPenney { b } => StepPotential::kronig_penney(cfg.period, *b, cfg.v_plus),
        Init1d::Step {
            breakpoints,
            values,
        } => StepPotential::new(cfg.period, breakpoints.clone(), values.clone(), cfg.v_plus),
        Init1d::File { path } => {
            let v = read_step(&file.resolve(path))?;
            StepPotential::new(cfg.period, v.breakpoints, v.values, cfg.v_plus)
        }
    }
    .map_err(invalid)?;
    let res = optimize_1d(&init, cfg.m, cfg.max_iters, cfg.eps * cfg.period)?;
    let last = res.last();
    let cert = verify_1d_certificates(&last.potential, cfg.m, cfg.certificate_tol)?;
    let records: Vec<Iterate1dRecord> = res
        .history
        .iter()
        .enumerate()
        .map(|(i, h)| Iterate1dRecord {
            iteration: i,
            g: h.g,
            alpha: h.alpha,
            beta: h.beta,
            change: (i > 0).then_some(h.change),
            barrier_fraction: h.potential.barrier_measure() / h.potential.period,
            transitions: h.potential.transitions(),
        })
        .collect();

    let mut out = OutputDir::create(&ctx.out)?;
    out.write("potential.json", &json_text(&last.potential))?;
    let grid = last.potential.sample(cfg.n)?;
    out.write("potential_grid.csv", &potential_csv(&grid))?;
    out.write("potential_grid.json", &json_text(&potential_meta(&grid)))?;
    out.write("trace.jsonl", &jsonl_text(&records))?;
    out.write(
        "gap.json",
        &json_text(&json!({"m": cfg.m, "alpha": last.alpha, "beta": last.beta, "G": last.g})),
    )?;
    out.write("certificate.json", &json_text(&cert))?;
    let title = format!("optimized potential, gap {} (G = {:.5})", cfg.m, last.g);
    out.write("potential.svg", &svg::step_plot(&last.potential, &title))?;
    let m = out.finish(manifest(
        Command::Optimize1d,
        json!({"file": file.path, "optimize1d": cfg}),
        vec![],
        ctx,
    ))?;
    let exit = if res.converged {
        ExitCode::Success
    } else {
        ExitCode::Budget
    };
    Ok(Outcome {
        exit,
        summary: format!(
            "m = {}: G = {} after {} iterations ({})",
            cfg.m,
            last.g,
            res.iterations,
            if res.converged {
                "stationary"
            } else {
                "budget exhausted"
            }
        ),
        reason: (!res.converged)
            .then(|| format!("no stationary point within {} iterations", cfg.max_iters)),
        manifest: m,
    })
}

pub fn run_optimize2d(file: &ConfigFile, ctx: &RunContext) -> CliResult<Outcome> {
    let cfg = file.optimize2d()?;
    let result = optimize_2d_best_of(&cfg)?;
    let best = &result.best;
    let v = best.best_potential();
    let p = cfg.lattice.params().map_err(invalid)?;
    let ks = cfg.k_sampling.sample(&cfg.lattice).map_err(invalid)?;
    let table = dispersion(v, p, &ks, cfg.m + 1)?;
    let gap = gap_report(&table, cfg.m)?;
    let comps = component_analysis(v, p, cfg.v_plus / 2.0)?;

    let mut out = OutputDir::create(&ctx.out)?;
    out.write("potential.csv", &potential_csv(v))?;
    out.write("potential.json", &json_text(&potential_meta(v)))?;
    out.write("trace.jsonl", &jsonl_text(&best.records))?;
    out.write("restarts.json", &json_text(&result.runs))?;
    out.write("gap.json", &json_text(&gap))?;
    out.write(
        "kkt.json",
        &json_text(&json!({"kkt": best.final_kkt, "bang_bang": best.final_bang_bang})),
    )?;
    out.write("components.json", &json_text(&comps))?;
    let title = format!("best potential, gap {} (G = {:.5})", cfg.m, gap.g);
    out.write("potential.svg", &svg::potential_heatmap(v, p, &title))?;
    let seeds = result.runs.iter().map(|r| r.seed).collect();
    let m = out.finish(manifest(
        Command::Optimize2d,
        json!({"file": file.path, "optimize2d": cfg}),
        seeds,
        ctx,
    ))?;
    let (exit, reason) = match best.status {
        RunStatus::Stationary => (ExitCode::Success, None),
        RunStatus::Budget => (
            ExitCode::Budget,
            Some(format!(
                "best run not stationary within {} outer iterations",
                cfg.max_outer
            )),
        ),
        RunStatus::Stalled => (ExitCode::Numerical, best.stall.clone()),
    };
    Ok(Outcome {
        exit,
        summary: format!(
            "m = {}: best G = {} ({:?} start, seed {}, {} iterations, {:?})",
            cfg.m,
            gap.g,
            best.init,
            best.seed,
            best.iterations(),
            best.status
        ),
        reason,
        manifest: m,
    })
}

fn lattice_label(l: &LatticeSpec) -> String {
    match l {
        LatticeSpec::Named(k) => k.name().to_string(),
        LatticeSpec::Params { a, b } => format!("({a}, {b})"),
    }
}

fn status_name(s: RunStatus) -> &'static str {
    match s {
        RunStatus::Stationary => "stationary",
        RunStatus::Budget => "budget",
        RunStatus::Stalled => "stalled",
    }
}

pub fn run_sweep(file: &ConfigFile, ctx: &RunContext) -> CliResult<Outcome> {
    let sc = file.sweep()?;
    let mut out = OutputDir::create(&ctx.out)?;
    let summary;
    match &sc.sweep {
        SweepKind::Contrast {
            lattices,
            v_plus_list,
        } => {
            let curves = lattices
                .par_iter()
                .map(|l| {
                    let cfg = OptimizeConfig {
                        lattice: *l,
                        ..sc.base.clone()
                    };
                    contrast_sweep(&cfg, v_plus_list)
                })
                .collect::<gapforge::Result<Vec<_>>>()?;
            let mut rows = Vec::new();
            for (l, c) in lattices.iter().zip(&curves) {
                let lp = l.params().map_err(invalid)?;
                for q in &c.points {
                    rows.push(vec![
                        fmt_num(lp.a),
                        fmt_num(lp.b),
                        fmt_num(q.v_plus),
                        fmt_num(q.g),
                        q.components.to_string(),
                        status_name(q.status).into(),
                        q.iterations.to_string(),
                    ]);
                }
            }
            out.write(
                "sweep.csv",
                &csv_text(
                    &[
                        "a",
                        "b",
                        "v_plus",
                        "G",
                        "components",
                        "status",
                        "iterations",
                    ],
                    &rows,
                ),
            )?;
            let json_curves: Vec<_> = lattices
                .iter()
                .zip(&curves)
                .map(|(l, c)| json!({"lattice": l, "threshold": c.threshold, "points": c.points}))
                .collect();
            out.write(
                "sweep.json",
                &json_text(&json!({"m": sc.base.m, "curves": json_curves})),
            )?;
            let series: Vec<svg::Series> = lattices
                .iter()
                .zip(&curves)
                .map(|(l, c)| svg::Series {
                    label: lattice_label(l),
                    points: c.points.iter().map(|q| (q.v_plus, q.g)).collect(),
                })
                .collect();
            out.write(
                "sweep.svg",
                &svg::curve_plot(
                    &series,
                    &format!("optimal gap {} against contrast", sc.base.m),
                    "V+",
                    "G",
                ),
            )?;
            summary = lattices
                .iter()
                .zip(&curves)
                .map(|(l, c)| format!("{}: threshold {:?}", lattice_label(l), c.threshold))
                .collect::<Vec<_>>()
                .join("; ");
        }
        SweepKind::Lattice {
            grid,
            half_bz_resolution,
        } => {
            let s = lattice_sweep(&sc.base, grid, *half_bz_resolution)?;
            let rows: Vec<Vec<String>> = s
                .rows
                .iter()
                .map(|r| {
                    vec![
                        fmt_num(r.a),
                        fmt_num(r.b),
                        r.feasible.to_string(),
                        r.g.map(fmt_num).unwrap_or_default(),
                        r.status.map(status_name).unwrap_or_default().into(),
                        r.error.clone().unwrap_or_default().replace(',', ";"),
                    ]
                })
                .collect();
            out.write(
                "sweep.csv",
                &csv_text(&["a", "b", "feasible", "G", "status", "error"], &rows),
            )?;
            out.write("sweep.json", &json_text(&json!({"grid": grid, "sweep": s})))?;
            let (da, db) = grid.step();
            let cells: Vec<svg::HeatCell> = s
                .rows
                .iter()
                .map(|r| svg::HeatCell {
                    a: r.a,
                    b: r.b,
                    value: r.g,
                })
                .collect();
            out.write(
                "sweep.svg",
                &svg::lattice_heatmap(
                    &cells,
                    da,
                    db,
                    &format!("optimal gap {} over lattices, V+ = {}", s.m, s.v_plus),
                ),
            )?;
            let failed = s.rows.iter().filter(|r| r.error.is_some()).count();
            summary = format!("best lattice {:?}; {failed} failed points", s.best);
        }
    }
    let m = out.finish(manifest(
        Command::Sweep,
        json!({"file": file.path, "sweep": sc}),
        vec![sc.base.seed],
        ctx,
    ))?;
    Ok(Outcome {
        exit: ExitCode::Success,
        summary,
        reason: None,
        manifest: m,
    })
}

/// Gap report of a potential file on the irreducible-zone path; used for
/// shipped fixtures.
pub fn fixture_gap(
    csv: &Path,
    lattice: LatticeSpec,
    m: usize,
    points_per_side: usize,
) -> CliResult<GapReport> {
    let v = read_potential(csv)?;
    let ks = KSpec::IbzBoundary { points_per_side }
        .sample(&lattice)
        .map_err(invalid)?;
    let t = dispersion(&v, lattice.params().map_err(invalid)?, &ks, m + 1)?;
    Ok(gap_report(&t, m)?)
}

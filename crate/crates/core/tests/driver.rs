use gapforge::bands::high_contrast_g;
use gapforge::driver::*;
use gapforge::hill1d::rearrange_grid_1d;
use gapforge::hill1d::StepPotential;
use gapforge::lattice::{LatticeKind, LatticeParams};
use gapforge::operator::PotentialGrid;
use gapforge::sdpopt::DEFAULT_TOL;
use std::f64::consts::PI;

const VP: f64 = 100.0;

fn spec(dim: usize, n: usize, m: usize, lattice: LatticeParams, seed: u64) -> InitSpec {
    InitSpec {
        dim,
        n,
        m,
        v_plus: VP,
        lattice,
        seed,
    }
}

#[test]
fn cosine_start_in_one_dimension() {
    let n = 256;
    let v = init_potential(
        InitStrategy::Cosine,
        &spec(1, n, 2, LatticeParams::square(), 0),
    )
    .unwrap();
    for (l, &val) in v.values.iter().enumerate() {
        let c = (4.0 * PI * l as f64 / n as f64).cos();
        if c.abs() > 0.05 {
            let want = if c > 0.0 { VP } else { 0.0 };
            assert!((val - want).abs() < 1e-12, "cell {l}: {val}");
        }
    }
}

#[test]
fn cosine_start_has_m_wells() {
    for m in 1..=4 {
        let v = init_potential(
            InitStrategy::Cosine,
            &spec(2, 32, m, LatticeParams::square(), 0),
        )
        .unwrap();
        let c = component_analysis(&v, LatticeParams::square(), VP / 2.0).unwrap();
        assert_eq!(c.count, m);
    }
}

#[test]
fn disk_array_triangular_three_disks() {
    let p = LatticeParams::triangular();
    let v = init_potential(InitStrategy::DiskArray, &spec(2, 64, 3, p, 0)).unwrap();
    let c = component_analysis(&v, p, VP / 2.0).unwrap();
    assert_eq!(c.count, 3);
    let disk = PI * 0.2 * 0.2;
    for comp in &c.components {
        assert!((comp.area - disk).abs() < 0.05 * disk, "{comp:?}");
        assert!(comp.roundness > 0.9, "{comp:?}");
    }
    assert!(v.values.iter().all(|&x| (0.0..=VP).contains(&x)));
}

#[test]
fn disk_array_radius_shrinks_for_many_disks() {
    let (centers, dmin) = disk_array_centers(LatticeParams::square(), 8).unwrap();
    assert_eq!(centers.len(), 8);
    // Two disks of radius 0.45 dmin never touch.
    let v = init_potential(
        InitStrategy::DiskArray,
        &spec(2, 64, 8, LatticeParams::square(), 0),
    )
    .unwrap();
    let c = component_analysis(&v, LatticeParams::square(), VP / 2.0).unwrap();
    assert_eq!(c.count, 8, "dmin = {dmin}");
}

#[test]
fn random_start_replays_with_its_seed() {
    let s = spec(2, 24, 2, LatticeParams::square(), 17);
    let a = init_potential(InitStrategy::RandomBangBang, &s).unwrap();
    let b = init_potential(InitStrategy::RandomBangBang, &s).unwrap();
    assert_eq!(a, b);
    let c = init_potential(InitStrategy::RandomBangBang, &InitSpec { seed: 18, ..s }).unwrap();
    assert_ne!(a, c);
    assert!(a.values.iter().all(|&x| x == 0.0 || x == VP));
    let zeros = a.values.iter().filter(|&&x| x == 0.0).count() as f64 / a.len() as f64;
    assert!((0.25..0.65).contains(&zeros), "{zeros}");
}

#[test]
fn constant_potential_has_no_components() {
    let v = PotentialGrid::constant(2, 16, VP, VP).unwrap();
    assert_eq!(
        component_analysis(&v, LatticeParams::square(), VP / 2.0)
            .unwrap()
            .count,
        0
    );
    assert!(component_analysis(&v, LatticeParams::square(), VP).is_err());
}

#[test]
fn components_wrap_around_the_cell() {
    // A well split across the cell boundary is one component.
    let n = 16;
    let mut vals = vec![VP; n * n];
    for j in [0, 1, n - 1] {
        for i in [0, 1, n - 1] {
            vals[i + n * j] = 0.0;
        }
    }
    let v = PotentialGrid::new(2, n, vals, VP).unwrap();
    let c = component_analysis(&v, LatticeParams::square(), VP / 2.0).unwrap();
    assert_eq!(c.count, 1);
    assert_eq!(c.components[0].cells, 9);
}

#[test]
fn config_rejects_bad_values() {
    let ok = OptimizeConfig::new(1, VP, LatticeSpec::Named(LatticeKind::Square), 16);
    assert!(ok.validate().is_ok());
    for bad in [
        OptimizeConfig { n: 6, ..ok.clone() },
        OptimizeConfig {
            eps_v: 0.0,
            ..ok.clone()
        },
        OptimizeConfig { m: 0, ..ok.clone() },
        OptimizeConfig {
            lattice: LatticeSpec::Params { a: 0.3, b: 0.5 },
            ..ok.clone()
        },
        // The boundary path needs a symmetric lattice.
        OptimizeConfig {
            lattice: LatticeSpec::Params { a: 0.2, b: 1.3 },
            ..ok.clone()
        },
    ] {
        assert!(bad.validate().is_err(), "{bad:?}");
    }
}

#[test]
fn config_parses_with_defaults_and_names_missing_fields() {
    let c: OptimizeConfig =
        serde_json::from_str(r#"{"m": 2, "v_plus": 100, "lattice": "triangular", "n": 24}"#)
            .unwrap();
    assert_eq!(c.lattice.kind(), Some(LatticeKind::Triangular));
    assert_eq!(c.k_sampling, KSpec::IbzBoundary { points_per_side: 8 });
    assert_eq!(c.restarts, 5);
    let c: OptimizeConfig = serde_json::from_str(
        r#"{"m": 1, "v_plus": 50, "lattice": {"a": 0.25, "b": 1.2}, "n": 16,
            "k_sampling": {"kind": "half-bz", "resolution": 4}, "init": "disk-array"}"#,
    )
    .unwrap();
    assert_eq!(c.init, InitStrategy::DiskArray);
    assert!(c.validate().is_ok());
    let e =
        serde_json::from_str::<OptimizeConfig>(r#"{"v_plus": 100, "lattice": "square", "n": 24}"#)
            .unwrap_err();
    assert!(e.to_string().contains("`m`"), "{e}");
}

#[test]
fn restart_plan_covers_strategies() {
    let cfg = OptimizeConfig::new(1, VP, LatticeSpec::Named(LatticeKind::Square), 16);
    let plan = restart_plan(&cfg);
    assert_eq!(plan.len(), 5);
    assert_eq!(plan[0], (InitStrategy::Cosine, 0));
    assert!(plan.contains(&(InitStrategy::DiskArray, 0)));
    assert_eq!(
        plan.iter()
            .filter(|p| p.0 == InitStrategy::RandomBangBang)
            .count(),
        3
    );
    let one = restart_plan(&OptimizeConfig { restarts: 1, ..cfg });
    assert_eq!(one.len(), 1);
}

#[test]
fn outer_loop_invariants_on_a_small_grid() {
    let mut cfg = OptimizeConfig::new(1, VP, LatticeSpec::Named(LatticeKind::Square), 16);
    cfg.k_sampling = KSpec::IbzBoundary { points_per_side: 3 };
    cfg.max_outer = 12;
    let t = optimize_2d(&cfg).unwrap();
    assert_ne!(t.status, RunStatus::Stalled, "{:?}", t.stall);
    assert!(t.iterations() >= 1);
    assert!(t.best_g() > t.records[0].g, "no progress: {:?}", t.records);
    assert!(
        t.sdp_monotonicity_defect() <= 10.0 * DEFAULT_TOL,
        "{}",
        t.sdp_monotonicity_defect()
    );
    for r in &t.records[1..] {
        assert!(r.kkt_max_residual.unwrap() <= 10.0 * DEFAULT_TOL, "{r:?}");
        if r.beta != r.alpha {
            assert_eq!(r.weakly_bang_bang, Some(true));
        }
        assert!(r.g <= high_contrast_g() + 1e-6);
    }
    assert!(t.final_kkt.is_some() && t.final_bang_bang.is_some());
    // Snapshots line up with records.
    assert_eq!(t.snapshots.len(), t.records.len());
    let json = serde_json::to_string(&t.records[1]).unwrap();
    assert!(json.contains("\"G\"") && json.contains("\"sdp_G\""));
}

#[test]
fn embedded_one_dimensional_optimum_is_stationary() {
    // Rectangular cell 1/2 x 2: transverse excitations cost (4 pi)^2, far
    // above the gap, so a potential varying along the long axis behaves as
    // a 1D potential of period 2.
    let n = 32;
    let period = 2.0;
    // Barrier centered between two grid points: at its center both edge
    // eigenfunctions vanish and the potential there is undetermined.
    let h = period / n as f64;
    let start = StepPotential::new(
        period,
        vec![0.5 + h / 2.0, 1.5 + h / 2.0],
        vec![0.0, VP],
        VP,
    )
    .unwrap();
    let mut v1 = start.sample(n).unwrap();
    for _ in 0..100 {
        let next = rearrange_grid_1d(&v1, period, 1).unwrap();
        if next == v1 {
            break;
        }
        v1 = next;
    }
    let vals: Vec<f64> = (0..n * n).map(|l| v1.values[l / n]).collect();
    let v0 = PotentialGrid::new(2, n, vals, VP).unwrap();
    let mut cfg = OptimizeConfig::new(1, VP, LatticeSpec::Params { a: 0.0, b: 4.0 }, n);
    cfg.k_sampling = KSpec::Points {
        points: vec![[0.0, 0.0], [0.0, PI / 4.0], [0.0, PI / period]],
    };
    cfg.mu = 1;
    // Cells next to the barrier center carry tiny multipliers; their values
    // settle only as tightly as the SDP is solved.
    cfg.sdp_tol = 1e-9;
    let t = optimize_2d_from(&cfg, v0).unwrap();
    assert_eq!(t.status, RunStatus::Stationary);
    assert_eq!(t.iterations(), 1, "{:?}", t.records);
    assert!(t.records[1].dv_inf.unwrap() < cfg.eps_v * VP);
}

#[test]
fn contrast_sweep_validates_and_is_monotone() {
    let mut cfg = OptimizeConfig::new(1, VP, LatticeSpec::Named(LatticeKind::Square), 12);
    cfg.k_sampling = KSpec::IbzBoundary { points_per_side: 2 };
    cfg.restarts = 1;
    cfg.max_outer = 8;
    assert!(contrast_sweep(&cfg, &[]).is_err());
    assert!(contrast_sweep(&cfg, &[20.0, 10.0]).is_err());
    let s = contrast_sweep(&cfg, &[5.0, 20.0, 60.0]).unwrap();
    assert_eq!(s.points.len(), 3);
    for w in s.points.windows(2) {
        assert!(w[1].g >= w[0].g - 1e-9, "{:?}", s.points);
    }
    for p in &s.points {
        assert!(p.g <= high_contrast_g() + 1e-6);
    }
    assert!(s.threshold.is_some());
}

#[test]
fn lattice_sweep_skips_points_outside_the_domain() {
    let mut cfg = OptimizeConfig::new(1, VP, LatticeSpec::Named(LatticeKind::Square), 8);
    cfg.restarts = 1;
    cfg.max_outer = 3;
    cfg.init = InitStrategy::DiskArray;
    let grid = LatticeGrid {
        a_points: 3,
        b_points: 3,
        b_min: 3f64.sqrt() / 2.0,
        b_max: 1.2,
    };
    let s = lattice_sweep(&cfg, &grid, 2).unwrap();
    assert_eq!(s.rows.len(), 9);
    for r in &s.rows {
        let inside = r.a * r.a + r.b * r.b >= 1.0 - 1e-10;
        assert_eq!(r.feasible, inside, "{r:?}");
        assert_eq!(r.g.is_some() || r.error.is_some(), inside);
    }
    let best = s.best.unwrap();
    assert!(s.rows.iter().filter_map(|r| r.g).all(|g| g <= best.2));
}

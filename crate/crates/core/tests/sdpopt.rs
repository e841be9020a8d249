use gapforge::hill1d::{rearrange_grid_1d, StepPotential};
use gapforge::lattice::{ibz_boundary_path, KPoint, KSampling, LatticeKind, LatticeParams};
use gapforge::operator::PotentialGrid;
use gapforge::sdpopt::*;
use num_complex::Complex64;
use std::f64::consts::PI;

const VP: f64 = 100.0;
const TOL: f64 = 1e-7;

fn disk_potential(n: usize, radius: f64, vp: f64) -> PotentialGrid {
    let mut vals = vec![vp; n * n];
    for j in 0..n {
        for i in 0..n {
            let (x, y) = (i as f64 / n as f64 - 0.5, j as f64 / n as f64 - 0.5);
            if x.hypot(y) < radius {
                vals[i + n * j] = 0.0;
            }
        }
    }
    PotentialGrid::new(2, n, vals, vp).unwrap()
}

fn small_bundle(m: usize, mu: usize) -> SubspaceBundle {
    let v = disk_potential(12, 0.3, VP);
    let ks = ibz_boundary_path(LatticeKind::Square, 2);
    build_subspaces(&v, LatticeParams::square(), &ks, m, mu).unwrap()
}

/// Fixed point of the grid rearrangement from the cosine start.
fn stationary_1d(n: usize, m: usize) -> PotentialGrid {
    let mut v = StepPotential::cosine_init(1.0, m, VP)
        .unwrap()
        .sample(n)
        .unwrap();
    for _ in 0..100 {
        let next = rearrange_grid_1d(&v, 1.0, m).unwrap();
        if next == v {
            return v;
        }
        v = next;
    }
    panic!("grid rearrangement did not settle");
}

fn edge_k(m: usize) -> f64 {
    if m % 2 == 1 {
        PI
    } else {
        0.0
    }
}

#[test]
fn free_lowest_subspace_at_gamma_is_constant() {
    let n = 12;
    let v = PotentialGrid::constant(2, n, 0.0, VP).unwrap();
    let ks = KSampling::from_points(vec![KPoint::gamma()]);
    let b = build_subspaces(&v, LatticeParams::square(), &ks, 1, 3).unwrap();
    let u = &b.u_alpha[0];
    let overlap: Complex64 = u.iter().sum::<Complex64>() / (n as f64);
    assert!(
        (overlap.norm() - 1.0).abs() < 1e-10,
        "overlap {}",
        overlap.norm()
    );
    assert!(b.energies[0][0].abs() < 1e-9);
}

#[test]
fn degenerate_cluster_blocks_stay_orthonormal() {
    // At the zone corner the discrete free bands 2 and 3 coincide;
    // m = 2 splits the pair.
    let v = PotentialGrid::constant(2, 12, 0.0, VP).unwrap();
    let ks = KSampling::from_points(vec![KPoint::new(PI, PI)]);
    let b = build_subspaces(&v, LatticeParams::square(), &ks, 2, 3).unwrap();
    let e = &b.energies[0];
    assert!((e[1] - e[2]).abs() < 1e-8 && e[2] - e[0] > 0.5, "{e:?}");
    assert!(b.orthonormality_defect() < 1e-10);
    let cross = b.u_alpha[0].ad_mul(&b.u_beta[0]);
    assert!(cross.iter().all(|z| z.norm() < 1e-8));
}

#[test]
fn required_trace_example() {
    let (a, b) = required_traces(1.0, 3.0);
    assert!((a - 0.75).abs() < 1e-15);
    assert!((b - 0.25).abs() < 1e-15);
}

#[test]
fn solver_output_satisfies_kkt_and_warm_start() {
    for (m, mu) in [(1, 3), (2, 2)] {
        let b = small_bundle(m, mu);
        let (sol, cert) = solve_gap_sdp(&b, VP, TOL).unwrap();
        assert!(sol.converged);
        assert!((sol.theta * (sol.alpha + sol.beta) - 2.0).abs() < 1e-12);
        assert!(
            sol.g >= sol.incumbent_g - TOL,
            "{} < {}",
            sol.g,
            sol.incumbent_g
        );
        let kkt = kkt_report(&sol, &cert, &b).unwrap();
        assert!(kkt.within(10.0 * TOL), "m = {m}: {kkt:?}");
        // The trace identities individually.
        let (ta, tb) = required_traces(sol.alpha, sol.beta);
        let sa: f64 = cert.a.iter().map(|a| a.trace().re).sum();
        let sb: f64 = cert.b.iter().map(|a| a.trace().re).sum();
        assert!((sa - ta).abs() <= 10.0 * TOL && (sb - tb).abs() <= 10.0 * TOL);
        // De-homogenized constraints of the fractional problem.
        let (ra, rb) = b.ritz_edges(&sol.v.values);
        assert!(
            ra <= sol.alpha + TOL && rb >= sol.beta - TOL,
            "{ra} {rb} vs {} {}",
            sol.alpha,
            sol.beta
        );
        assert!(weakly_bang_bang_check(&sol.v, 1e-6).weakly_bang_bang);
    }
}

#[test]
fn flipped_cell_breaks_certificate() {
    let b = small_bundle(1, 3);
    let (sol, cert) = solve_gap_sdp(&b, VP, TOL).unwrap();
    let (l, _) =
        cert.f_plus.iter().enumerate().fold(
            (0, 0.0),
            |acc, (i, &f)| if f > acc.1 { (i, f) } else { acc },
        );
    let mut flipped = sol.clone();
    flipped.v.values[l] = VP - flipped.v.values[l];
    let kkt = kkt_report(&flipped, &cert, &b).unwrap();
    assert!(
        kkt.stationarity > 10.0 * TOL
            || kkt.slack_upper_bound > 10.0 * TOL
            || kkt.slack_lower_bound > 10.0 * TOL,
        "{kkt:?}"
    );
}

#[test]
fn splitting_agrees_with_interior_point() {
    let b = small_bundle(1, 2);
    let (ipm, _) = solve_gap_sdp(&b, VP, 1e-9).unwrap();
    let opts = SdpOptions {
        tol: 1e-7,
        max_iters: 200_000,
        solver: SdpSolver::Splitting,
    };
    let (admm, _) = solve_gap_sdp_with(&b, VP, &opts).unwrap();
    assert!(
        admm.converged,
        "splitting stopped after {} iterations",
        admm.iterations
    );
    assert!((admm.g - ipm.g).abs() < 1e-5, "{} vs {}", admm.g, ipm.g);
}

#[test]
fn half_potential_is_not_weakly_bang_bang() {
    let v = PotentialGrid::constant(2, 8, VP / 2.0, VP).unwrap();
    let c = weakly_bang_bang_check(&v, 1e-6);
    assert!(!c.weakly_bang_bang && c.witness.is_none());
    let mut w = v.clone();
    w.values[5] = VP;
    assert_eq!(weakly_bang_bang_check(&w, 1e-6).witness, Some(5));
}

/// One edge point, one-dimensional subspaces: the SDP optimum must pick
/// `V+` exactly where `psi_a^2 / alpha < psi_b^2 / beta` for its own edges.
fn check_sign_rule(v: &PotentialGrid, m: usize) -> (SdpSolution, usize) {
    let b = build_subspaces_1d(v, 1.0, &[edge_k(m)], m, 1).unwrap();
    let (sol, _) = solve_gap_sdp(&b, VP, TOL).unwrap();
    let ua = b.u_alpha[0].column(m - 1).into_owned();
    let ub = b.u_beta[0].column(0).into_owned();
    let mut decided = 0;
    for l in 0..v.n {
        let s = ua[l].norm_sqr() / sol.alpha - ub[l].norm_sqr() / sol.beta;
        if s.abs() > 10.0 * TOL {
            let want = if s < 0.0 { VP } else { 0.0 };
            assert!(
                (sol.v.values[l] - want).abs() < 1e-6 * VP,
                "cell {l}: V = {} expected {want} (switch {s:e})",
                sol.v.values[l]
            );
            decided += 1;
        }
    }
    (sol, decided)
}

#[test]
fn one_dimensional_embedding_matches_rearrangement() {
    for m in [1, 2] {
        let v = stationary_1d(128, m);
        let (sol, decided) = check_sign_rule(&v, m);
        assert!(
            decided >= 120,
            "only {decided} cells off the switching band"
        );
        // At a fixed point of the rearrangement the SDP returns the same set.
        let agree = (0..128)
            .filter(|&l| (sol.v.values[l] - v.values[l]).abs() < 1e-6 * VP)
            .count();
        assert_eq!(agree, 128, "m = {m}");
        let rearranged = rearrange_grid_1d(&sol.v, 1.0, m).unwrap();
        assert_eq!(rearranged.values, v.values);
    }
}

#[test]
fn one_dimensional_embedding_from_non_stationary_start() {
    let v = StepPotential::kronig_penney(1.0, 0.8, VP)
        .unwrap()
        .sample(128)
        .unwrap();
    let (sol, decided) = check_sign_rule(&v, 1);
    assert!(decided >= 120);
    assert!(sol.g >= sol.incumbent_g - TOL);
}

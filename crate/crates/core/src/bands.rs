//! Dispersion tables, gap edges and gap-to-midgap ratios, plus closed-form
//! bounds and high-contrast limits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use crate::eigen::{smallest_eigenpairs, smallest_eigenpairs_with, Backend, EigenOptions};
use crate::error::{Error, Result};
use crate::lattice::{KPoint, KSampling, LatticeParams};
use crate::operator::{
    assemble_bloch_1d, assemble_bloch_2d, assemble_laplacian_bc, BoundaryCondition, PotentialGrid,
};

/// Band energies over a quasi-momentum sampling. `energies[k][j]` is band
/// `j + 1` at point `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionTable {
    pub ks: KSampling,
    pub bands: usize,
    pub energies: Vec<Vec<f64>>,
    pub params: Option<LatticeParams>,
    /// Period length for 1D tables.
    pub period: Option<f64>,
    pub n: usize,
}

impl DispersionTable {
    /// Energy of band `band` (1-based) at point `k`.
    pub fn energy(&self, band: usize, k: usize) -> f64 {
        self.energies[k][band - 1]
    }

    pub fn band(&self, band: usize) -> Vec<f64> {
        self.energies.iter().map(|e| e[band - 1]).collect()
    }
}

/// Edges and ratio of the `m`-th gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub m: usize,
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "G")]
    pub g: f64,
    pub argmax_k: usize,
    pub argmin_k: usize,
}

/// `2 (beta - alpha) / (alpha + beta)` when `beta > alpha`, otherwise 0.
pub fn gap_ratio(alpha: f64, beta: f64) -> f64 {
    if beta > alpha && alpha + beta > 0.0 {
        (2.0 * (beta - alpha) / (alpha + beta)).min(2.0)
    } else {
        0.0
    }
}

/// Ratio without clipping at zero; negative when the bands overlap.
pub fn signed_gap_ratio(alpha: f64, beta: f64) -> f64 {
    2.0 * (beta - alpha) / (alpha + beta)
}

/// `f(x) = 2 (x - 1) / (x + 1)`: the ratio for edges in proportion `beta/alpha = x`.
pub fn ratio_of_quotient(x: f64) -> f64 {
    2.0 * (x - 1.0) / (x + 1.0)
}

fn eigen_count_opts(tol: f64) -> EigenOptions {
    EigenOptions {
        tol,
        ..EigenOptions::default()
    }
}

/// Lowest `bands` eigenvalues of the 2D Bloch operator at every sampled k.
pub fn dispersion(
    v: &PotentialGrid,
    p: LatticeParams,
    ks: &KSampling,
    bands: usize,
) -> Result<DispersionTable> {
    if bands < 2 {
        return Err(Error::InvalidArgument(format!(
            "band count {bands} below 2"
        )));
    }
    let energies = ks
        .points
        .par_iter()
        .enumerate()
        .map(|(i, k)| {
            let h = assemble_bloch_2d(p, *k, v, v.n)?;
            let e = smallest_eigenpairs_with(&h, bands, &eigen_count_opts(1e-9), None)
                .map_err(|e| e.at_k(i))?;
            Ok(e.values)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DispersionTable {
        ks: ks.clone(),
        bands,
        energies,
        params: Some(p),
        period: None,
        n: v.n,
    })
}

/// Finite-difference dispersion of a 1D periodic potential on `[0, period)`.
pub fn dispersion_1d(
    v: &PotentialGrid,
    period: f64,
    ks: &[f64],
    bands: usize,
) -> Result<DispersionTable> {
    let energies = ks
        .par_iter()
        .enumerate()
        .map(|(i, &k)| {
            let h = assemble_bloch_1d(period, k, v)?;
            Ok(smallest_eigenpairs(&h, bands, 1e-10)
                .map_err(|e| e.at_k(i))?
                .values)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DispersionTable {
        ks: KSampling::from_points(ks.iter().map(|&k| KPoint::new(k, 0.0)).collect()),
        bands,
        energies,
        params: None,
        period: Some(period),
        n: v.n,
    })
}

/// `alpha = max_k E_m`, `beta = min_k E_{m+1}`; the first index wins ties.
pub fn gap_report(t: &DispersionTable, m: usize) -> Result<GapReport> {
    if m == 0 || m + 1 > t.bands {
        return Err(Error::InvalidArgument(format!(
            "gap {m} needs bands {m} and {} but the table has {}",
            m + 1,
            t.bands
        )));
    }
    if t.energies.is_empty() {
        return Err(Error::InvalidArgument("empty dispersion table".into()));
    }
    let (mut alpha, mut argmax) = (f64::NEG_INFINITY, 0);
    let (mut beta, mut argmin) = (f64::INFINITY, 0);
    for (k, e) in t.energies.iter().enumerate() {
        if e[m - 1] > alpha {
            alpha = e[m - 1];
            argmax = k;
        }
        if e[m] < beta {
            beta = e[m];
            argmin = k;
        }
    }
    Ok(GapReport {
        m,
        alpha,
        beta,
        g: gap_ratio(alpha, beta),
        argmax_k: argmax,
        argmin_k: argmin,
    })
}

/// Dirichlet and Neumann eigenvalues of the metric Laplacian on the
/// fundamental cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaplaceBounds {
    pub lambda_d: Vec<f64>,
    pub lambda_n: Vec<f64>,
}

pub fn laplace_bounds(p: LatticeParams, n: usize, count: usize) -> Result<LaplaceBounds> {
    let key = (p.a.to_bits(), p.b.to_bits(), n);
    let cache = LAPLACE_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(lb) = cache.lock().unwrap().get(&key) {
        if lb.lambda_d.len() >= count {
            return Ok(LaplaceBounds {
                lambda_d: lb.lambda_d[..count].to_vec(),
                lambda_n: lb.lambda_n[..count].to_vec(),
            });
        }
    }
    // Real symmetric matrices without a Fourier symbol: the dense route is
    // the fastest at the sizes used here.
    let dense = EigenOptions {
        backend: Backend::Dense,
        ..EigenOptions::default()
    };
    let d = assemble_laplacian_bc(n, BoundaryCondition::Dirichlet, p)?;
    let nm = assemble_laplacian_bc(n, BoundaryCondition::Neumann, p)?;
    let all = d.dim().min(nm.dim());
    let lb = LaplaceBounds {
        lambda_d: smallest_eigenpairs_with(&d, all, &dense, None)?.values,
        lambda_n: smallest_eigenpairs_with(&nm, all, &dense, None)?.values,
    };
    if count > all {
        return Err(Error::InvalidArgument(format!(
            "{count} Laplace eigenvalues requested on a grid resolving {all}"
        )));
    }
    let out = LaplaceBounds {
        lambda_d: lb.lambda_d[..count].to_vec(),
        lambda_n: lb.lambda_n[..count].to_vec(),
    };
    cache.lock().unwrap().insert(key, lb);
    Ok(out)
}

static LAPLACE_CACHE: OnceLock<Mutex<HashMap<(u64, u64, usize), LaplaceBounds>>> = OnceLock::new();

/// `2 X^2 V+ / (2 pi^2 m^2 + X^2 V+)`.
pub fn upper_bound_1d(m: usize, period: f64, vp: f64) -> f64 {
    let x2v = period * period * vp;
    2.0 * x2v / (2.0 * PI * PI * (m * m) as f64 + x2v)
}

/// `(lD_{m+1} + V+ - lN_m) / (lN_{m+1} + V+ + lN_m)` from the Laplace
/// eigenvalues, without clamping.
pub fn upper_bound_2d_raw(m: usize, p: LatticeParams, vp: f64, n: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "gap index must be at least 1".into(),
        ));
    }
    let lb = laplace_bounds(p, n, m + 1)?;
    let (ld1, ln0, ln1) = (lb.lambda_d[m], lb.lambda_n[m - 1], lb.lambda_n[m]);
    Ok((ld1 + vp - ln0) / (ln1 + vp + ln0))
}

/// [`upper_bound_2d_raw`] clamped to 2, the largest possible ratio.
pub fn upper_bound_2d(m: usize, p: LatticeParams, vp: f64, n: usize) -> Result<f64> {
    Ok(upper_bound_2d_raw(m, p, vp, n)?.min(2.0))
}

/// First positive zeros of `J_0`, `J_1` and `J_2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesselZeroTable {
    pub j0_first: f64,
    pub j1_first: f64,
    pub j2_first: f64,
}

impl BesselZeroTable {
    /// Four-digit seeds.
    pub const SEEDS: BesselZeroTable = BesselZeroTable {
        j0_first: 2.4048,
        j1_first: 3.8317,
        j2_first: 5.1356,
    };

    /// Seeds refined to machine precision.
    pub fn polished() -> Self {
        let s = Self::SEEDS;
        BesselZeroTable {
            j0_first: polish_bessel_zero(0, s.j0_first),
            j1_first: polish_bessel_zero(1, s.j1_first),
            j2_first: polish_bessel_zero(2, s.j2_first),
        }
    }

    /// `2 (j1^2 - j0^2) / (j1^2 + j0^2)`.
    pub fn high_contrast_g(&self) -> f64 {
        ratio_of_quotient((self.j1_first / self.j0_first).powi(2))
    }
}

/// `J_n(x)` from its integral representation
/// `(1/pi) int_0^pi cos(n t - x sin t) dt`, evaluated with the trapezoid
/// rule (spectrally accurate for this periodic integrand).
pub fn bessel_j(order: i32, x: f64) -> f64 {
    if order < 0 {
        let s = if order % 2 == 0 { 1.0 } else { -1.0 };
        return s * bessel_j(-order, x);
    }
    let m = 64 + (2.0 * x.abs()) as usize;
    let h = PI / m as f64;
    let f = |t: f64| (order as f64 * t - x * t.sin()).cos();
    let mut s = 0.5 * (f(0.0) + f(PI));
    for i in 1..m {
        s += f(i as f64 * h);
    }
    s * h / PI
}

/// `J_n'(x) = (J_{n-1}(x) - J_{n+1}(x)) / 2`.
pub fn bessel_j_prime(order: i32, x: f64) -> f64 {
    0.5 * (bessel_j(order - 1, x) - bessel_j(order + 1, x))
}

/// Newton polish of a zero of `J_order` near `seed`, safeguarded by a
/// bisection bracket.
pub fn polish_bessel_zero(order: i32, seed: f64) -> f64 {
    let (mut lo, mut hi) = (seed - 0.05, seed + 0.05);
    let flo = bessel_j(order, lo);
    assert!(
        flo * bessel_j(order, hi) < 0.0,
        "seed {seed} does not bracket a zero of J_{order}"
    );
    let mut x = seed;
    for _ in 0..100 {
        let fx = bessel_j(order, x);
        if fx == 0.0 {
            return x;
        }
        if fx * flo < 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let mut nx = x - fx / bessel_j_prime(order, x);
        if !(nx > lo && nx < hi) {
            nx = 0.5 * (lo + hi);
        }
        if (nx - x).abs() <= 4.0 * f64::EPSILON * x.abs() {
            return nx;
        }
        x = nx;
    }
    x
}

/// High-contrast limit of the optimal ratio in 2D.
pub fn high_contrast_g() -> f64 {
    BesselZeroTable::polished().high_contrast_g()
}

/// `max |E_j(k) - E_j(-k)|` over all points whose negation is also sampled.
pub fn symmetry_check(t: &DispersionTable) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, k) in t.ks.points.iter().enumerate() {
        let neg = k.neg().vec();
        if let Some(j) =
            t.ks.points
                .iter()
                .position(|q| (q.vec() - neg).norm() < 1e-9)
        {
            for b in 0..t.bands {
                worst = worst.max((t.energies[i][b] - t.energies[j][b]).abs());
            }
        }
    }
    worst
}

/// Outcome of comparing full-zone band extrema with those on the
/// irreducible-zone boundary path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremaCheck {
    pub on_boundary: bool,
    /// Excess of the full-zone maximum of band m over the path maximum.
    pub alpha_excess: f64,
    /// Deficit of the full-zone minimum of band m+1 below the path minimum.
    pub beta_deficit: f64,
    /// Full-zone index of the worst offending k, if any.
    pub offending_k: Option<usize>,
}

/// Whether the full-zone extrema of bands `m` and `m+1` are attained on the
/// boundary path, within `tol`.
pub fn extrema_location_check(
    full: &DispersionTable,
    path: &DispersionTable,
    m: usize,
    tol: f64,
) -> Result<ExtremaCheck> {
    let f = gap_report(full, m)?;
    let p = gap_report(path, m)?;
    let alpha_excess = (f.alpha - p.alpha).max(0.0);
    let beta_deficit = (p.beta - f.beta).max(0.0);
    let on_boundary = alpha_excess <= tol && beta_deficit <= tol;
    let offending_k = if on_boundary {
        None
    } else if alpha_excess >= beta_deficit {
        Some(f.argmax_k)
    } else {
        Some(f.argmin_k)
    };
    Ok(ExtremaCheck {
        on_boundary,
        alpha_excess,
        beta_deficit,
        offending_k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_ratio_examples() {
        assert_eq!(gap_ratio(1.0, 1.0), 0.0);
        assert!((gap_ratio(PI * PI, 4.0 * PI * PI) - 1.2).abs() < 1e-14);
        assert_eq!(gap_ratio(2.0, 1.0), 0.0);
        assert!((signed_gap_ratio(2.0, 1.0) + 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn bound_1d_examples() {
        assert_eq!(upper_bound_1d(1, 1.0, 0.0), 0.0);
        assert!((upper_bound_1d(1, 1.0, 100.0) - 200.0 / (2.0 * PI * PI + 100.0)).abs() < 1e-15);
        assert!((upper_bound_1d(1, 1.0, 100.0) - 1.6703).abs() < 1e-4);
        assert!(1.12370 <= upper_bound_1d(1, 1.0, 100.0));
    }

    #[test]
    fn quotient_ratio_examples() {
        assert!((ratio_of_quotient(4.0) - 1.2).abs() < 1e-15);
        assert!((ratio_of_quotient(16.0 / 9.0) - 0.56).abs() < 1e-15);
    }
}

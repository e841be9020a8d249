//! Initial potentials for the outer loop.

use nalgebra::{Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::hill1d::StepPotential;
use crate::lattice::{basis_from_params, LatticeParams};
use crate::operator::PotentialGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitStrategy {
    /// Zero wells where `cos(2 pi p s)` and `cos(2 pi r t)` are both
    /// negative (`p r = m`), `V+` elsewhere; in 1D, `V+` where
    /// `cos(2 pi m x) > 0`.
    #[default]
    Cosine,
    /// Thresholded smooth random field.
    RandomBangBang,
    /// `m` zero disks on a maximally spread sublattice.
    DiskArray,
}

/// Everything an initial guess depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitSpec {
    pub dim: usize,
    pub n: usize,
    pub m: usize,
    pub v_plus: f64,
    pub lattice: LatticeParams,
    pub seed: u64,
}

/// Zero disk in fractional cell coordinates with a physical radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: [f64; 2],
    pub radius: f64,
}

/// Largest disk radius used by the disk-array start.
const DISK_RADIUS_CAP: f64 = 0.2;
/// Sub-samples per axis and cell for disk coverage.
const SUPERSAMPLE: usize = 4;

pub fn init_potential(strategy: InitStrategy, spec: &InitSpec) -> Result<PotentialGrid> {
    if spec.m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    match (spec.dim, strategy) {
        (1, InitStrategy::Cosine) => {
            StepPotential::cosine_init(1.0, spec.m, spec.v_plus)?.sample(spec.n)
        }
        (1, InitStrategy::DiskArray) => {
            // Wells of half-width `min(0.2, 0.45 / m)` centered in each
            // `1/m` subcell.
            let r = DISK_RADIUS_CAP.min(0.45 / spec.m as f64);
            let cell = 1.0 / spec.m as f64;
            let mut bp = Vec::new();
            let mut vals = Vec::new();
            for j in 0..spec.m {
                let c = (j as f64 + 0.5) * cell;
                bp.extend([c - r, c + r]);
                vals.extend([0.0, spec.v_plus]);
            }
            StepPotential::new(1.0, bp, vals, spec.v_plus)?.sample(spec.n)
        }
        (1, InitStrategy::RandomBangBang) => random_1d(spec),
        (2, InitStrategy::Cosine) => cosine_2d(spec),
        (2, InitStrategy::DiskArray) => {
            let (centers, dmin) = disk_array_centers(spec.lattice, spec.m)?;
            let radius = DISK_RADIUS_CAP.min(0.45 * dmin);
            let disks: Vec<Disk> = centers
                .into_iter()
                .map(|center| Disk { center, radius })
                .collect();
            disk_array_potential(spec.n, spec.lattice, spec.v_plus, &disks)
        }
        (2, InitStrategy::RandomBangBang) => random_2d(spec),
        (d, _) => Err(Error::DimensionMismatch(format!(
            "dimension {d} not in {{1, 2}}"
        ))),
    }
}

/// Factor pair `(p, r)` with `p * r = m` and `p >= r` as close as possible.
fn factor_pair(m: usize) -> (usize, usize) {
    let mut r = (m as f64).sqrt() as usize;
    while r > 1 && m % r != 0 {
        r -= 1;
    }
    (m / r.max(1), r.max(1))
}

fn cosine_2d(spec: &InitSpec) -> Result<PotentialGrid> {
    let (p, r) = factor_pair(spec.m);
    let n = spec.n;
    let mut vals = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            let (s, t) = (i as f64 / n as f64, j as f64 / n as f64);
            let well =
                (2.0 * PI * p as f64 * s).cos() < 0.0 && (2.0 * PI * r as f64 * t).cos() < 0.0;
            vals[i + n * j] = if well { 0.0 } else { spec.v_plus };
        }
    }
    PotentialGrid::new(2, n, vals, spec.v_plus)
}

/// Threshold a field so that the given fraction of cells becomes zero.
fn threshold(field: &[f64], zero_fraction: f64, vp: f64) -> Vec<f64> {
    let mut sorted = field.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = ((zero_fraction * field.len() as f64) as usize).clamp(1, field.len() - 1);
    let cut = sorted[k];
    field
        .iter()
        .map(|&f| if f < cut { 0.0 } else { vp })
        .collect()
}

/// Low-frequency modes up to this integer wavenumber per axis.
const RANDOM_MODES: i32 = 3;

fn random_2d(spec: &InitSpec) -> Result<PotentialGrid> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut modes = Vec::new();
    for p in -RANDOM_MODES..=RANDOM_MODES {
        for q in 0..=RANDOM_MODES {
            if q == 0 && p <= 0 {
                continue;
            }
            let decay = 1.0 / (1.0 + (p * p + q * q) as f64);
            let amp = decay * rng.random_range(-1.0..1.0);
            let phase = rng.random_range(0.0..2.0 * PI);
            modes.push((p as f64, q as f64, amp, phase));
        }
    }
    let frac = rng.random_range(0.3..0.6);
    let n = spec.n;
    let mut field = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            let (s, t) = (i as f64 / n as f64, j as f64 / n as f64);
            field[i + n * j] = modes
                .iter()
                .map(|&(p, q, a, ph)| a * (2.0 * PI * (p * s + q * t) + ph).cos())
                .sum();
        }
    }
    PotentialGrid::new(2, n, threshold(&field, frac, spec.v_plus), spec.v_plus)
}

fn random_1d(spec: &InitSpec) -> Result<PotentialGrid> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let modes: Vec<(f64, f64, f64)> = (1..=RANDOM_MODES.max(spec.m as i32 + 1))
        .map(|p| {
            let amp = rng.random_range(-1.0..1.0) / (1.0 + (p * p) as f64);
            (p as f64, amp, rng.random_range(0.0..2.0 * PI))
        })
        .collect();
    let frac = rng.random_range(0.3..0.6);
    let field: Vec<f64> = (0..spec.n)
        .map(|i| {
            let s = i as f64 / spec.n as f64;
            modes
                .iter()
                .map(|&(p, a, ph)| a * (2.0 * PI * p * s + ph).cos())
                .sum()
        })
        .collect();
    PotentialGrid::new(1, spec.n, threshold(&field, frac, spec.v_plus), spec.v_plus)
}

/// Shortest nonzero physical vector of the lattice generated by `Z^2` and
/// the fractional points `pts`.
fn min_distance(basis: &Matrix2<f64>, pts: &[Vector2<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for p in pts {
        for di in -1..=1 {
            for dj in -1..=1 {
                let d = p + Vector2::new(di as f64, dj as f64);
                let len = (basis * d).norm();
                if len > 1e-12 {
                    best = best.min(len);
                }
            }
        }
    }
    best
}

/// Centers (fractional) of `m` points forming a lattice that contains the
/// cell lattice with index `m`, chosen to maximize the minimum distance.
/// Returns the centers and that distance.
pub fn disk_array_centers(p: LatticeParams, m: usize) -> Result<(Vec<[f64; 2]>, f64)> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    let basis = *basis_from_params(p)?.matrix();
    let mut best: Option<(Vec<Vector2<f64>>, f64)> = None;
    // Superlattices of index m are M^{-1} Z^2 for integer M with det m; the
    // upper-triangular forms [[a, c], [0, d]] with 0 <= c < m cover them.
    for a in (1..=m).filter(|a| m % a == 0) {
        let d = m / a;
        for c in 0..m {
            let minv = Matrix2::new(a as f64, c as f64, 0.0, d as f64)
                .try_inverse()
                .expect("nonsingular");
            let mut pts: Vec<Vector2<f64>> = Vec::with_capacity(m);
            for i in 0..m as i64 {
                for j in 0..m as i64 {
                    let q = minv * Vector2::new(i as f64, j as f64);
                    let q = q.map(|x| {
                        let f = x - x.floor();
                        if f > 1.0 - 1e-12 {
                            0.0
                        } else {
                            f
                        }
                    });
                    if !pts.iter().any(|r| (r - q).norm() < 1e-9) {
                        pts.push(q);
                    }
                }
            }
            if pts.len() != m {
                continue;
            }
            let dmin = min_distance(&basis, &pts);
            if best.as_ref().map(|(_, b)| dmin > b + 1e-12).unwrap_or(true) {
                best = Some((pts, dmin));
            }
        }
    }
    let (pts, dmin) =
        best.ok_or_else(|| Error::DegenerateInput(format!("no index-{m} superlattice found")))?;
    let offset = Vector2::new(0.5, 0.5);
    let centers = pts
        .iter()
        .map(|q| {
            let c = q + offset;
            [c.x - c.x.floor(), c.y - c.y.floor()]
        })
        .collect();
    Ok((centers, dmin))
}

/// `V+` outside the disks, zero inside; boundary cells carry the covered
/// fraction, estimated on a `4 x 4` sub-grid. Disks are periodic.
pub fn disk_array_potential(
    n: usize,
    p: LatticeParams,
    v_plus: f64,
    disks: &[Disk],
) -> Result<PotentialGrid> {
    if n == 0 {
        return Err(Error::InvalidArgument("grid size must be positive".into()));
    }
    let basis = *basis_from_params(p)?.matrix();
    let inside = |s: Vector2<f64>| {
        disks.iter().any(|d| {
            let c = Vector2::new(d.center[0], d.center[1]);
            let r = s - c;
            let r = r.map(|x| x - x.round());
            (-1..=1).any(|di| {
                (-1..=1)
                    .any(|dj| (basis * (r + Vector2::new(di as f64, dj as f64))).norm() < d.radius)
            })
        })
    };
    let h = 1.0 / n as f64;
    let ss = SUPERSAMPLE;
    let mut vals = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            // Sub-samples of the cell centered on the grid point.
            let mut covered = 0usize;
            for sj in 0..ss {
                for si in 0..ss {
                    let ds = ((si as f64 + 0.5) / ss as f64 - 0.5) * h;
                    let dt = ((sj as f64 + 0.5) / ss as f64 - 0.5) * h;
                    if inside(Vector2::new(i as f64 * h + ds, j as f64 * h + dt)) {
                        covered += 1;
                    }
                }
            }
            vals[i + n * j] = v_plus * (1.0 - covered as f64 / (ss * ss) as f64);
        }
    }
    PotentialGrid::new(2, n, vals, v_plus)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_pairs() {
        assert_eq!(factor_pair(1), (1, 1));
        assert_eq!(factor_pair(2), (2, 1));
        assert_eq!(factor_pair(4), (2, 2));
        assert_eq!(factor_pair(6), (3, 2));
        assert_eq!(factor_pair(7), (7, 1));
    }

    #[test]
    fn square_two_disks_sit_on_the_diagonal() {
        let (c, d) = disk_array_centers(LatticeParams::square(), 2).unwrap();
        assert_eq!(c.len(), 2);
        assert!((d - 0.5f64.sqrt()).abs() < 1e-12, "{d}");
    }
}

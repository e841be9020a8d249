//! One-dimensional problem with exact dispersion.
//!
//! Step potentials are handled with 2x2 interval propagators, so band edges
//! and edge eigenfunctions are exact up to root-finding tolerance. The module
//! also carries the rearrangement iteration for the 1D gap problem and checks
//! of its fixed points.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::bands::{gap_ratio, upper_bound_1d};
use crate::eigen::dense_eigenpairs;
use crate::error::{Error, Result};
use crate::operator::{assemble_bloch_1d, PotentialGrid};

/// Sample count for edge eigenfunctions and rearrangement comparisons.
pub const EDGE_SAMPLES: usize = 2048;

/// Extremum values of the discriminant closer than this to the target are
/// treated as double roots (closed gaps).
const DOUBLE_ROOT_TOL: f64 = 1e-12;
/// Crossings shallower than this are rounding noise around a double root.
const ROUNDING_TOL: f64 = 1e-14;

/// Piecewise-constant potential on one period. Interval `i` is
/// `[breakpoints[i], breakpoints[i+1])`; the last one wraps around to
/// `breakpoints[0] + period`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStep")]
pub struct StepPotential {
    #[serde(rename = "X")]
    pub period: f64,
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
    #[serde(rename = "V_plus")]
    pub v_plus: f64,
}

#[derive(Deserialize)]
struct RawStep {
    #[serde(rename = "X")]
    period: f64,
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    #[serde(rename = "V_plus")]
    v_plus: f64,
}

impl TryFrom<RawStep> for StepPotential {
    type Error = Error;
    fn try_from(r: RawStep) -> Result<Self> {
        StepPotential::new(r.period, r.breakpoints, r.values, r.v_plus)
    }
}

/// A constant stretch `[start, start + len)` of a step potential.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Piece {
    start: f64,
    len: f64,
    value: f64,
}

impl StepPotential {
    /// Validates and merges equal neighbours (cyclically) into canonical form.
    pub fn new(period: f64, breakpoints: Vec<f64>, values: Vec<f64>, v_plus: f64) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "period {period} must be positive"
            )));
        }
        if !(v_plus.is_finite() && v_plus >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "V_plus = {v_plus} must be finite and >= 0"
            )));
        }
        if breakpoints.is_empty() || breakpoints.len() != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} breakpoints for {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        for w in breakpoints.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidArgument(format!(
                    "breakpoints not strictly ascending at {}",
                    w[1]
                )));
            }
        }
        if !(breakpoints[0] >= 0.0 && *breakpoints.last().unwrap() < period) {
            return Err(Error::InvalidArgument(format!(
                "breakpoints must lie in [0, {period})"
            )));
        }
        let slack = 1e-9 * v_plus.max(1.0);
        if let Some(v) = values
            .iter()
            .find(|&&v| !v.is_finite() || v < -slack || v > v_plus + slack)
        {
            return Err(Error::InvalidArgument(format!(
                "value {v} outside [0, {v_plus}]"
            )));
        }
        let values: Vec<f64> = values.into_iter().map(|v| v.clamp(0.0, v_plus)).collect();
        let mut bp = Vec::with_capacity(breakpoints.len());
        let mut vals = Vec::with_capacity(values.len());
        for (b, v) in breakpoints.into_iter().zip(values) {
            if vals.last() != Some(&v) {
                bp.push(b);
                vals.push(v);
            }
        }
        if vals.len() > 1 && vals[0] == *vals.last().unwrap() {
            bp.remove(0);
            vals.remove(0);
        }
        Ok(StepPotential {
            period,
            breakpoints: bp,
            values: vals,
            v_plus,
        })
    }

    pub fn constant(period: f64, value: f64, v_plus: f64) -> Result<Self> {
        Self::new(period, vec![0.0], vec![value], v_plus)
    }

    /// Single barrier of height `v_plus` on `[0, b)`, zero on `[b, period)`.
    pub fn kronig_penney(period: f64, b: f64, v_plus: f64) -> Result<Self> {
        if !(0.0..=period).contains(&b) {
            return Err(Error::InvalidArgument(format!(
                "barrier width {b} outside [0, {period}]"
            )));
        }
        if b == 0.0 {
            Self::constant(period, 0.0, v_plus)
        } else if b == period {
            Self::constant(period, v_plus, v_plus)
        } else {
            Self::new(period, vec![0.0, b], vec![v_plus, 0.0], v_plus)
        }
    }

    /// `v_plus` where `cos(2 pi m x / X) > 0`, zero elsewhere.
    pub fn cosine_init(period: f64, m: usize, v_plus: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument(
                "gap index must be at least 1".into(),
            ));
        }
        let cell = period / m as f64;
        let mut bp = Vec::with_capacity(2 * m);
        let mut vals = Vec::with_capacity(2 * m);
        for j in 0..m {
            bp.push(j as f64 * cell + 0.25 * cell);
            vals.push(0.0);
            bp.push(j as f64 * cell + 0.75 * cell);
            vals.push(v_plus);
        }
        Self::new(period, bp, vals, v_plus)
    }

    /// Number of value changes around the period.
    pub fn transitions(&self) -> usize {
        if self.values.len() > 1 {
            self.values.len()
        } else {
            0
        }
    }

    fn interval_len(&self, i: usize) -> f64 {
        let n = self.breakpoints.len();
        if i + 1 < n {
            self.breakpoints[i + 1] - self.breakpoints[i]
        } else {
            self.period - self.breakpoints[i] + self.breakpoints[0]
        }
    }

    fn is_top(&self, v: f64) -> bool {
        v >= self.v_plus * (1.0 - 1e-12) && self.v_plus > 0.0
    }

    /// Measure of `{V = V+}`.
    pub fn barrier_measure(&self) -> f64 {
        (0..self.values.len())
            .filter(|&i| self.is_top(self.values[i]))
            .map(|i| self.interval_len(i))
            .sum()
    }

    /// Measure of the set where `V` is 0 or `V+`.
    pub fn bang_bang_measure(&self) -> f64 {
        (0..self.values.len())
            .filter(|&i| self.values[i] == 0.0 || self.is_top(self.values[i]))
            .map(|i| self.interval_len(i))
            .sum()
    }

    pub fn is_bang_bang(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0 || self.is_top(v))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Value at `x`, reduced modulo the period; intervals are closed on the left.
    pub fn value_at(&self, x: f64) -> f64 {
        let x = x.rem_euclid(self.period);
        match self.breakpoints.iter().rposition(|&b| b <= x) {
            Some(i) => self.values[i],
            None => *self.values.last().unwrap(),
        }
    }

    /// Constant stretches covering `[0, period)` in order, starting at 0.
    fn pieces(&self) -> Vec<Piece> {
        let n = self.breakpoints.len();
        let mut out = Vec::with_capacity(n + 1);
        if self.breakpoints[0] > 0.0 {
            out.push(Piece {
                start: 0.0,
                len: self.breakpoints[0],
                value: self.values[n - 1],
            });
        }
        for i in 0..n {
            let end = if i + 1 < n {
                self.breakpoints[i + 1]
            } else {
                self.period
            };
            out.push(Piece {
                start: self.breakpoints[i],
                len: end - self.breakpoints[i],
                value: self.values[i],
            });
        }
        out.retain(|p| p.len > 0.0);
        out
    }

    /// Cell averages on the grid `x_l = l X / n`, cells `[x_l - h/2, x_l + h/2)`.
    pub fn sample(&self, n: usize) -> Result<PotentialGrid> {
        let h = self.period / n as f64;
        let pieces = self.pieces();
        let values = (0..n)
            .map(|l| {
                let lo = (l as f64 - 0.5) * h;
                let hi = lo + h;
                let mut acc = 0.0;
                // Shifted copies cover the wrap at 0.
                for shift in [-self.period, 0.0, self.period] {
                    for p in &pieces {
                        let a = (p.start + shift).max(lo);
                        let b = (p.start + p.len + shift).min(hi);
                        if b > a {
                            acc += (b - a) * p.value;
                        }
                    }
                }
                acc / h
            })
            .collect();
        PotentialGrid::new(1, n, values, self.v_plus)
    }

    /// Half the trace of the period transfer matrix, scaled: returns
    /// `(t, s)` with `tr M / 2 = exp(s) t`.
    fn half_trace_scaled(&self, e: f64) -> (f64, f64) {
        let (m, s) = period_matrix(&self.pieces(), e);
        (0.5 * (m[0][0] + m[1][1]), s)
    }
}

/// Measure of the symmetric difference of `{V = V+}` for two potentials of
/// the same period.
pub fn barrier_symmetric_difference(a: &StepPotential, b: &StepPotential) -> f64 {
    let mut cuts: Vec<f64> = a
        .breakpoints
        .iter()
        .chain(&b.breakpoints)
        .cloned()
        .chain([0.0, a.period])
        .collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.windows(2)
        .filter(|w| w[1] > w[0])
        .filter(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            a.is_top(a.value_at(mid)) != b.is_top(b.value_at(mid))
        })
        .map(|w| w[1] - w[0])
        .sum::<f64>()
        .max(0.0)
}

/// Solutions of `psi'' = -s psi` over length `len`, as `(c, sn, log_scale)`
/// with `c = cos(sqrt(s) len)`, `sn = sin(sqrt(s) len)/sqrt(s)` continued
/// analytically to `s <= 0`. For `s < 0` both are divided by
/// `exp(sqrt(-s) len)`, whose logarithm is returned.
fn propagator(s: f64, len: f64) -> (f64, f64, f64) {
    if s > 0.0 {
        let w = s.sqrt();
        let x = w * len;
        let sn = if x < 1e-4 {
            len * (1.0 - x * x / 6.0)
        } else {
            x.sin() / w
        };
        (x.cos(), sn, 0.0)
    } else if s < 0.0 {
        let q = (-s).sqrt();
        let x = q * len;
        let e = (-2.0 * x).exp();
        let sn = if x < 1e-8 {
            len * (1.0 - x)
        } else {
            -(-2.0 * x).exp_m1() / (2.0 * q)
        };
        (0.5 * (1.0 + e), sn, x)
    } else {
        (1.0, len, 0.0)
    }
}

type Mat2 = [[f64; 2]; 2];

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

/// Map of `(psi, psi')` across one piece at energy `e`, scaled.
fn piece_matrix(p: &Piece, e: f64) -> (Mat2, f64) {
    let s = e - p.value;
    let (c, sn, ls) = propagator(s, p.len);
    ([[c, sn], [-s * sn, c]], ls)
}

/// Period transfer matrix (start of first piece to end of last), scaled.
fn period_matrix(pieces: &[Piece], e: f64) -> (Mat2, f64) {
    let mut m: Mat2 = [[1.0, 0.0], [0.0, 1.0]];
    let mut log = 0.0;
    for p in pieces {
        let (pm, ls) = piece_matrix(p, e);
        m = mat_mul(&pm, &m);
        log += ls;
        let big = m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        if big > 1e100 || (big < 1e-100 && big > 0.0) {
            m.iter_mut().flatten().for_each(|v| *v /= big);
            log += big.ln();
        }
    }
    (m, log)
}

/// Closed-form Kronig-Penney discriminant, scaled as in [`propagator`].
fn kp_scaled(e: f64, b: f64, period: f64, vp: f64) -> (f64, f64) {
    let a = period - b;
    let (cb, sb, lb) = propagator(e - vp, b);
    let (ca, sa, la) = propagator(e, a);
    // (Q^2 - K^2)/(2QK) sinh(Qb) sin(Ka) + cosh(Qb) cos(Ka), with the
    // 1/Q and 1/K factors absorbed into the sinc-like terms.
    let q2 = vp - e;
    (cb * ca + 0.5 * (q2 - e) * sb * sa, lb + la)
}

fn check_kp_args(b: f64, period: f64, vp: f64) -> Result<()> {
    if !(period.is_finite() && period > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "period {period} must be positive"
        )));
    }
    if !(0.0..=period).contains(&b) {
        return Err(Error::InvalidArgument(format!(
            "barrier width {b} outside [0, {period}]"
        )));
    }
    if !(vp.is_finite() && vp >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "V_plus = {vp} must be finite and >= 0"
        )));
    }
    Ok(())
}

/// Left side of the Kronig-Penney dispersion relation `D(E) = cos(X k)` for a
/// barrier of width `b` and height `vp` in a cell of length `period`. Above
/// the barrier the hyperbolic terms turn trigonometric; the points `E = V+`
/// and `E = 0` are removable and evaluated by their limits.
pub fn kp_discriminant(e: f64, b: f64, period: f64, vp: f64) -> Result<f64> {
    check_kp_args(b, period, vp)?;
    if !(e.is_finite() && e >= 0.0) {
        return Err(Error::DegenerateInput(format!(
            "energy {e} must be finite and >= 0"
        )));
    }
    let (d, s) = kp_scaled(e, b, period, vp);
    Ok(d * s.exp())
}

/// `sign(D(E) - target)` preserving scaled function.
fn shifted(scaled: (f64, f64), target: f64) -> f64 {
    let (d, s) = scaled;
    d - target * (-s).exp()
}

/// Energy scan step used to isolate roots.
fn scan_step(period: f64, vp: f64) -> f64 {
    let mut step = (1.0f64).min((PI / period).powi(2) / 10.0);
    if vp > 0.0 {
        step = step.min(vp / 50.0);
    }
    step
}

fn bisect(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo) >= 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 4.0 * f64::EPSILON * mid.abs().max(1e-300) {
            break;
        }
        let fm = f(mid) >= 0.0;
        if fm == flo {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Minimizes `f` on `[lo, hi]` by golden sections; returns `(x, f(x))`.
fn golden_min(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, rel_tol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..300 {
        if hi - lo <= rel_tol * (lo.abs() + hi.abs()).max(1e-300) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// First `count` roots of `f` above `lo`, with multiplicity. Simple roots
/// are isolated by sign changes on a uniform scan; tangential (double)
/// roots by refining local minima of `|f|`.
fn scan_roots(
    f: &dyn Fn(f64) -> f64,
    count: usize,
    lo: f64,
    step: f64,
    hi: f64,
) -> Result<Vec<f64>> {
    let mut roots = Vec::with_capacity(count);
    let mut prev: Option<(f64, f64)> = None;
    let (mut e0, mut f0) = (lo, f(lo));
    let mut i: u64 = 0;
    while roots.len() < count {
        i += 1;
        let e1 = lo + i as f64 * step;
        if e1 > hi {
            return Err(Error::RootBracketingFailed(format!(
                "found {} of {count} roots below E = {hi}",
                roots.len()
            )));
        }
        let f1 = f(e1);
        let (s0, s1) = (f0 >= 0.0, f1 >= 0.0);
        if s0 != s1 {
            roots.push(bisect(f, e0, e1));
        } else if let Some((em, fm)) = prev {
            if (fm >= 0.0) == s0 && f0.abs() < fm.abs() && f0.abs() <= f1.abs() {
                let sigma = if s0 { 1.0 } else { -1.0 };
                let g = |e: f64| sigma * f(e);
                let (ex, gx) = golden_min(&g, em, e1, 1e-15);
                if gx < -ROUNDING_TOL {
                    roots.push(bisect(f, em, ex));
                    roots.push(bisect(f, ex, e1));
                } else if gx < DOUBLE_ROOT_TOL {
                    roots.push(ex);
                    roots.push(ex);
                }
            }
        }
        prev = Some((e0, f0));
        e0 = e1;
        f0 = f1;
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    merge_tangential_pairs(f, &mut roots, step);
    roots.truncate(count);
    Ok(roots)
}

/// A scan point landing on a tangential root can split it into two sign
/// changes a rounding error apart; such pairs are collapsed onto the
/// extremum between them.
fn merge_tangential_pairs(f: &dyn Fn(f64) -> f64, roots: &mut [f64], step: f64) {
    let mut i = 0;
    while i + 1 < roots.len() {
        let (a, b) = (roots[i], roots[i + 1]);
        if b - a < step && b > a {
            // Largest excursion of |f| between the two roots.
            let sigma = if f(0.5 * (a + b)) >= 0.0 { -1.0 } else { 1.0 };
            let g = |e: f64| sigma * f(e);
            let (ex, gx) = golden_min(&g, a, b, 1e-15);
            if gx.abs() < ROUNDING_TOL {
                roots[i] = ex;
                roots[i + 1] = ex;
                i += 2;
                continue;
            }
        }
        i += 1;
    }
}

/// Energy window and step for the edge scan of gap `m`.
fn scan_window(period: f64, vmin: f64, vmax: f64, vp: f64, count: usize) -> (f64, f64, f64) {
    let step = scan_step(period, vp);
    let lo = vmin - step;
    let hi = vmax + 2.0 * (PI * (count + 2) as f64 / period).powi(2) + 10.0;
    (lo, step, hi)
}

/// Band-edge target of gap `m`: `D = -1` for odd `m`, `+1` for even.
fn edge_target(m: usize) -> f64 {
    if m % 2 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// Edges `(alpha, beta)` of gap `m` for a single barrier of width `b`, from
/// the closed-form discriminant.
pub fn kp_gap_edges(b: f64, period: f64, vp: f64, m: usize) -> Result<(f64, f64)> {
    check_kp_args(b, period, vp)?;
    if m == 0 {
        return Err(Error::InvalidArgument(
            "gap index must be at least 1".into(),
        ));
    }
    let t = edge_target(m);
    let f = |e: f64| shifted(kp_scaled(e, b, period, vp), t);
    let vmin = if b < period { 0.0 } else { vp };
    let vmax = if b > 0.0 { vp } else { 0.0 };
    let (lo, step, hi) = scan_window(period, vmin, vmax, vp, m + 1);
    let r = scan_roots(&f, m + 1, lo, step, hi)?;
    Ok((r[m - 1], r[m]))
}

/// First `count` energies at quasi-momentum `k`, from the trace of the period
/// transfer matrix.
pub fn transfer_matrix_spectrum(v: &StepPotential, k: f64, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let mut t = (k * v.period).cos();
    if (t.abs() - 1.0).abs() < 1e-14 {
        t = t.signum();
    }
    let pieces = v.pieces();
    let f = |e: f64| {
        let (m, s) = period_matrix(&pieces, e);
        shifted((0.5 * (m[0][0] + m[1][1]), s), t)
    };
    let (lo, step, hi) = scan_window(v.period, v.min_value(), v.max_value(), v.v_plus, count);
    scan_roots(&f, count, lo, step, hi)
}

/// Edges and ratio of one gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gap1d {
    pub m: usize,
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "G")]
    pub g: f64,
}

/// Gap `m` of a step potential, from the transfer-matrix discriminant.
pub fn gap_edges(v: &StepPotential, m: usize) -> Result<Gap1d> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "gap index must be at least 1".into(),
        ));
    }
    let t = edge_target(m);
    let pieces = v.pieces();
    let f = |e: f64| {
        let (mm, s) = period_matrix(&pieces, e);
        shifted((0.5 * (mm[0][0] + mm[1][1]), s), t)
    };
    let (lo, step, hi) = scan_window(v.period, v.min_value(), v.max_value(), v.v_plus, m + 1);
    let r = scan_roots(&f, m + 1, lo, step, hi)?;
    let (alpha, beta) = (r[m - 1], r[m]);
    Ok(Gap1d {
        m,
        alpha,
        beta,
        g: gap_ratio(alpha, beta),
    })
}

/// Half the trace of the period transfer matrix (unscaled).
pub fn discriminant(v: &StepPotential, e: f64) -> f64 {
    let (t, s) = v.half_trace_scaled(e);
    t * s.exp()
}

/// Periodic (`k = 0`) or anti-periodic (`k = pi/X`) edge functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeParity {
    Periodic,
    Antiperiodic,
}

impl EdgeParity {
    pub fn of_gap(m: usize) -> Self {
        if m % 2 == 1 {
            EdgeParity::Antiperiodic
        } else {
            EdgeParity::Periodic
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            EdgeParity::Periodic => 1.0,
            EdgeParity::Antiperiodic => -1.0,
        }
    }

    pub fn quasi_momentum(self, period: f64) -> f64 {
        match self {
            EdgeParity::Periodic => 0.0,
            EdgeParity::Antiperiodic => PI / period,
        }
    }
}

/// Real solution at a fixed energy, stored by its state at each piece start.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMode {
    pub energy: f64,
    pub parity: EdgeParity,
    period: f64,
    pieces: Vec<Piece>,
    nodes: Vec<[f64; 2]>,
    /// `|state(X) - sign * state(0)|` relative to the state norm.
    pub closure_defect: f64,
}

impl EdgeMode {
    fn new(
        pieces: Vec<Piece>,
        period: f64,
        energy: f64,
        parity: EdgeParity,
        start: [f64; 2],
    ) -> Self {
        let mut nodes = Vec::with_capacity(pieces.len() + 1);
        let mut st = start;
        nodes.push(st);
        for p in &pieces {
            st = advance(p, energy, st, p.len);
            nodes.push(st);
        }
        let end = nodes.pop().unwrap();
        let sg = parity.sign();
        let scale = start[0].hypot(start[1]).max(1e-300);
        let closure_defect = (end[0] - sg * start[0]).hypot(end[1] - sg * start[1]) / scale;
        let mut mode = EdgeMode {
            energy,
            parity,
            period,
            pieces,
            nodes,
            closure_defect,
        };
        let norm = mode.l2_norm_sq().sqrt();
        for n in mode.nodes.iter_mut() {
            n[0] /= norm;
            n[1] /= norm;
        }
        mode
    }

    /// `(psi(x), psi'(x))` for any real `x`, using the Bloch condition.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let cells = (x / self.period).floor();
        let xr = x - cells * self.period;
        let sg = if self.parity == EdgeParity::Antiperiodic && (cells as i64).rem_euclid(2) == 1 {
            -1.0
        } else {
            1.0
        };
        let i = self.pieces.iter().rposition(|p| p.start <= xr).unwrap_or(0);
        let st = advance(
            &self.pieces[i],
            self.energy,
            self.nodes[i],
            xr - self.pieces[i].start,
        );
        (sg * st[0], sg * st[1])
    }

    fn l2_norm_sq(&self) -> f64 {
        // Composite Simpson per piece; the solution is smooth inside pieces.
        let mut acc = 0.0;
        for (i, p) in self.pieces.iter().enumerate() {
            let k = ((4096.0 * p.len / self.period).ceil() as usize).max(16);
            let k = k + k % 2;
            let h = p.len / k as f64;
            let mut s = 0.0;
            for j in 0..=k {
                let w = if j == 0 || j == k {
                    1.0
                } else if j % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let v = advance(p, self.energy, self.nodes[i], j as f64 * h)[0];
                s += w * v * v;
            }
            acc += s * h / 3.0;
        }
        acc
    }

    /// Zeros of `psi` (or of `psi'` with `derivative`) in `[0, X)`.
    pub fn zeros(&self, derivative: bool) -> Vec<f64> {
        let idx = usize::from(derivative);
        let f = |x: f64| {
            let (a, b) = self.eval(x);
            if idx == 0 {
                a
            } else {
                b
            }
        };
        sign_change_roots(&f, self.period, 4 * EDGE_SAMPLES)
    }
}

/// Roots of a continuous function on `[0, X)` found by sign changes on a
/// midpoint grid, refined by bisection.
fn sign_change_roots(f: &dyn Fn(f64) -> f64, period: f64, samples: usize) -> Vec<f64> {
    let h = period / samples as f64;
    let xs: Vec<f64> = (0..=samples).map(|i| (i as f64 + 0.5) * h).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut out = Vec::new();
    for i in 0..samples {
        if (fs[i] >= 0.0) != (fs[i + 1] >= 0.0) {
            out.push(bisect(f, xs[i], xs[i + 1]).rem_euclid(period));
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

/// State after distance `t` into piece `p`.
fn advance(p: &Piece, e: f64, st: [f64; 2], t: f64) -> [f64; 2] {
    let s = e - p.value;
    let (c, sn, ls) = propagator(s, t);
    let g = ls.exp();
    [
        g * (c * st[0] + sn * st[1]),
        g * (-s * sn * st[0] + c * st[1]),
    ]
}

/// Edge eigenfunctions of gap `m`, sampled on [`EDGE_SAMPLES`] points of
/// `[0, X)` and normalized in `L^2(0, X)`.
#[derive(Debug, Clone, Serialize)]
pub struct EdgeEigenfunctions {
    pub m: usize,
    pub alpha: f64,
    pub beta: f64,
    pub parity: EdgeParity,
    pub x: Vec<f64>,
    pub psi_alpha: Vec<f64>,
    pub psi_beta: Vec<f64>,
    #[serde(skip)]
    pub mode_alpha: EdgeMode,
    #[serde(skip)]
    pub mode_beta: EdgeMode,
}

impl EdgeEigenfunctions {
    pub fn gap(&self) -> Gap1d {
        Gap1d {
            m: self.m,
            alpha: self.alpha,
            beta: self.beta,
            g: gap_ratio(self.alpha, self.beta),
        }
    }

    /// `psi_alpha^2/alpha - psi_beta^2/beta`; the barrier goes where this is negative.
    pub fn switching(&self, x: f64) -> f64 {
        let a = self.mode_alpha.eval(x).0;
        let b = self.mode_beta.eval(x).0;
        a * a / self.alpha - b * b / self.beta
    }

    /// `psi_beta psi_alpha' - psi_alpha psi_beta'`.
    pub fn wronskian(&self, x: f64) -> f64 {
        let (a, da) = self.mode_alpha.eval(x);
        let (b, db) = self.mode_beta.eval(x);
        b * da - a * db
    }
}

/// Null vector of `M - sign I` for a 2x2 matrix, or `None` when the whole
/// matrix vanishes (two independent solutions).
fn null_vector(m: &Mat2, log: f64, sign: f64) -> Option<[f64; 2]> {
    let d = sign * (-log).exp();
    let a = [[m[0][0] - d, m[0][1]], [m[1][0], m[1][1] - d]];
    let r0 = a[0][0].hypot(a[0][1]);
    let r1 = a[1][0].hypot(a[1][1]);
    let scale = m.iter().flatten().fold(0.0f64, |x, v| x.max(v.abs()));
    if r0.max(r1) <= 1e-9 * scale.max(1e-300) {
        return None;
    }
    let v = if r0 >= r1 {
        [-a[0][1], a[0][0]]
    } else {
        [-a[1][1], a[1][0]]
    };
    let n = v[0].hypot(v[1]);
    Some([v[0] / n, v[1] / n])
}

/// Exact edge eigenfunctions of gap `m`.
pub fn edge_eigenfunctions(v: &StepPotential, m: usize) -> Result<EdgeEigenfunctions> {
    let gap = gap_edges(v, m)?;
    let parity = EdgeParity::of_gap(m);
    let pieces = v.pieces();
    let sg = parity.sign();
    let start_for = |e: f64| -> Option<[f64; 2]> {
        let (mm, s) = period_matrix(&pieces, e);
        null_vector(&mm, s, sg)
    };
    let degenerate = gap.beta - gap.alpha <= 1e-12 * (gap.alpha.abs() + gap.beta.abs());
    // On a closed gap every solution closes up; take the pair vanishing and
    // stationary at 0.
    let canonical = ([0.0, 1.0], [1.0, 0.0]);
    let (sa, sb) = if degenerate {
        canonical
    } else {
        match (start_for(gap.alpha), start_for(gap.beta)) {
            (Some(a), Some(b)) => (a, b),
            _ => canonical,
        }
    };
    let mode_alpha = EdgeMode::new(pieces.clone(), v.period, gap.alpha, parity, sa);
    let mode_beta = EdgeMode::new(pieces, v.period, gap.beta, parity, sb);
    let h = v.period / EDGE_SAMPLES as f64;
    let x: Vec<f64> = (0..EDGE_SAMPLES).map(|i| i as f64 * h).collect();
    let psi_alpha = x.iter().map(|&t| mode_alpha.eval(t).0).collect();
    let psi_beta = x.iter().map(|&t| mode_beta.eval(t).0).collect();
    Ok(EdgeEigenfunctions {
        m,
        alpha: gap.alpha,
        beta: gap.beta,
        parity,
        x,
        psi_alpha,
        psi_beta,
        mode_alpha,
        mode_beta,
    })
}

fn require_open(alpha: f64, beta: f64) -> Result<()> {
    if beta - alpha <= 1e-12 * (alpha.abs() + beta.abs()).max(1e-300) {
        return Err(Error::EmptyGap { alpha, beta });
    }
    Ok(())
}

/// One rearrangement step: `V+` where `psi_alpha^2/alpha < psi_beta^2/beta`,
/// zero elsewhere (ties go to zero). The comparison is made at the
/// grid points `x_i = i X / N` (see [`rearrangement_grid`]) on the exact eigenfunctions,
/// and each point owns the cell `[x_i - h/2, x_i + h/2)`.
pub fn rearrange_step_1d(v: &StepPotential, m: usize) -> Result<StepPotential> {
    let ef = edge_eigenfunctions(v, m)?;
    require_open(ef.alpha, ef.beta)?;
    rearrange_from(&ef, v.period, v.v_plus)
}

/// Comparison grid size for gap `m`: [`EDGE_SAMPLES`] rounded up to a
/// multiple of `2m`, so that `X/m`-periodic sets are representable and
/// symmetric ones do not flip between two discretizations.
pub fn rearrangement_grid(m: usize) -> usize {
    let q = 2 * m.max(1);
    EDGE_SAMPLES.div_ceil(q) * q
}

fn rearrange_from(ef: &EdgeEigenfunctions, period: f64, vp: f64) -> Result<StepPotential> {
    let n = rearrangement_grid(ef.m);
    let h = period / n as f64;
    let top: Vec<bool> = (0..n).map(|i| ef.switching(i as f64 * h) < 0.0).collect();
    let mut cuts: Vec<(f64, f64)> = (0..n)
        .filter(|&i| top[i] != top[(i + n - 1) % n])
        .map(|i| {
            let x = ((i as f64 - 0.5) * h).rem_euclid(period);
            (x, if top[i] { vp } else { 0.0 })
        })
        .collect();
    if cuts.is_empty() {
        let value = if top[0] { vp } else { 0.0 };
        return StepPotential::constant(period, value, vp);
    }
    cuts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let (bp, vals): (Vec<f64>, Vec<f64>) = cuts.into_iter().unzip();
    StepPotential::new(period, bp, vals, vp)
}

/// The same rearrangement on a sampled potential, with discrete eigenvectors
/// of the finite-difference operator at the edge quasi-momentum.
pub fn rearrange_grid_1d(v: &PotentialGrid, period: f64, m: usize) -> Result<PotentialGrid> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "gap index must be at least 1".into(),
        ));
    }
    let parity = EdgeParity::of_gap(m);
    let h = assemble_bloch_1d(period, parity.quasi_momentum(period), v)?;
    if m + 1 > h.dim() {
        return Err(Error::DimensionMismatch(format!(
            "gap {m} needs more than {} cells",
            h.dim()
        )));
    }
    let e = dense_eigenpairs(&h, m + 1);
    let (alpha, beta) = (e.values[m - 1], e.values[m]);
    require_open(alpha, beta)?;
    let values = (0..v.n)
        .map(|l| {
            let a = e.vectors[(l, m - 1)].norm_sqr() / alpha;
            let b = e.vectors[(l, m)].norm_sqr() / beta;
            if a < b {
                v.v_plus
            } else {
                0.0
            }
        })
        .collect();
    PotentialGrid::new(1, v.n, values, v.v_plus)
}

/// One entry of the rearrangement history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Iterate1d {
    pub potential: StepPotential,
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "G")]
    pub g: f64,
    /// Symmetric-difference measure against the previous iterate.
    pub change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimize1dResult {
    pub m: usize,
    /// Initial potential first, then one entry per rearrangement.
    pub history: Vec<Iterate1d>,
    pub iterations: usize,
    pub converged: bool,
    /// Steps where `G` dropped by more than `1e-10`.
    pub decreases: usize,
}

impl Optimize1dResult {
    pub fn last(&self) -> &Iterate1d {
        self.history.last().unwrap()
    }
}

/// Rearrangement iteration until `{V = V+}` moves by less than `eps` in
/// measure, or `max_iters` steps.
pub fn optimize_1d(
    init: &StepPotential,
    m: usize,
    max_iters: usize,
    eps: f64,
) -> Result<Optimize1dResult> {
    if max_iters == 0 {
        return Err(Error::InvalidArgument(
            "iteration budget must be at least 1".into(),
        ));
    }
    let mut cur = init.clone();
    let mut ef = edge_eigenfunctions(&cur, m)?;
    let mut history = vec![Iterate1d {
        potential: cur.clone(),
        alpha: ef.alpha,
        beta: ef.beta,
        g: gap_ratio(ef.alpha, ef.beta),
        change: f64::NAN,
    }];
    let mut converged = false;
    let mut decreases = 0;
    let mut iterations = 0;
    while iterations < max_iters {
        require_open(ef.alpha, ef.beta)?;
        let next = rearrange_from(&ef, cur.period, cur.v_plus)?;
        iterations += 1;
        let change = barrier_symmetric_difference(&cur, &next);
        ef = edge_eigenfunctions(&next, m)?;
        let g = gap_ratio(ef.alpha, ef.beta);
        if g < history.last().unwrap().g - 1e-10 {
            decreases += 1;
        }
        history.push(Iterate1d {
            potential: next.clone(),
            alpha: ef.alpha,
            beta: ef.beta,
            g,
            change,
        });
        cur = next;
        if change < eps {
            converged = true;
            break;
        }
    }
    Ok(Optimize1dResult {
        m,
        history,
        iterations,
        converged,
        decreases,
    })
}

/// Checks of the necessary optimality conditions at a potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate1d {
    pub m: usize,
    /// False when the gap is closed; the remaining fields are then unset.
    pub applicable: bool,
    pub g: f64,
    pub bang_bang: bool,
    /// Measure fraction where `V` is 0 or `V+`.
    pub bang_bang_fraction: f64,
    pub transitions: usize,
    pub transitions_ok: bool,
    /// Largest sign violation of the switching function, relative to its
    /// maximum modulus.
    pub sign_violation: f64,
    /// Fraction of samples violating the sign condition by more than `tol`.
    pub sign_violation_fraction: f64,
    pub sign_ok: bool,
    /// Largest distance (relative to `X`) from a zero of one eigenfunction
    /// to the nearest zero of the other's derivative.
    pub co_vanishing_defect: f64,
    /// Symmetric difference of `{V = V+}` and its `X/m` translate, over `X`.
    pub periodicity_residual: f64,
    /// Largest step against the expected monotonicity of the Wronskian,
    /// relative to its maximum modulus.
    pub wronskian_violation: f64,
    pub upper_bound: f64,
    pub below_upper_bound: bool,
}

impl Certificate1d {
    /// Gating checks: bang-bang, transition count, sign conditions, bound.
    pub fn passed(&self) -> bool {
        self.applicable
            && self.bang_bang
            && self.transitions_ok
            && self.sign_ok
            && self.below_upper_bound
    }
}

/// Certificate checks for a (presumably stationary) potential, with sign
/// tolerance `tol`.
pub fn verify_1d_certificates(v: &StepPotential, m: usize, tol: f64) -> Result<Certificate1d> {
    let ub = upper_bound_1d(m, v.period, v.v_plus);
    let mut cert = Certificate1d {
        m,
        applicable: false,
        g: 0.0,
        bang_bang: v.is_bang_bang(),
        bang_bang_fraction: v.bang_bang_measure() / v.period,
        transitions: v.transitions(),
        transitions_ok: v.transitions() == 2 * m,
        sign_violation: f64::NAN,
        sign_violation_fraction: f64::NAN,
        sign_ok: false,
        co_vanishing_defect: f64::NAN,
        periodicity_residual: f64::NAN,
        wronskian_violation: f64::NAN,
        upper_bound: ub,
        below_upper_bound: true,
    };
    let ef = edge_eigenfunctions(v, m)?;
    cert.g = gap_ratio(ef.alpha, ef.beta);
    cert.below_upper_bound = cert.g <= ub + 1e-12;
    if require_open(ef.alpha, ef.beta).is_err() {
        return Ok(cert);
    }
    cert.applicable = true;

    // Sign conditions are checked at the rearrangement grid points.
    let n = rearrangement_grid(m);
    let h = v.period / n as f64;
    let xs: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
    let d: Vec<f64> = xs.iter().map(|&x| ef.switching(x)).collect();
    let dmax = d.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1e-300);
    let mut worst: f64 = 0.0;
    let mut bad = 0usize;
    for (x, dv) in xs.iter().zip(&d) {
        let top = v.is_top(v.value_at(*x));
        let viol = if top { dv.max(0.0) } else { (-dv).max(0.0) } / dmax;
        worst = worst.max(viol);
        if viol > tol {
            bad += 1;
        }
    }
    cert.sign_violation = worst;
    cert.sign_violation_fraction = bad as f64 / n as f64;
    cert.sign_ok = worst <= tol;

    let za = ef.mode_alpha.zeros(false);
    let zb = ef.mode_beta.zeros(false);
    let dza = ef.mode_alpha.zeros(true);
    let dzb = ef.mode_beta.zeros(true);
    let nearest = |z: &[f64], targets: &[f64]| -> f64 {
        z.iter()
            .map(|&x| {
                targets
                    .iter()
                    .map(|&t| {
                        let r = (x - t).rem_euclid(v.period);
                        r.min(v.period - r)
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    cert.co_vanishing_defect = nearest(&za, &dzb).max(nearest(&zb, &dza)) / v.period;

    let shifted_v = {
        let s = v.period / m as f64;
        let bp: Vec<f64> = v
            .breakpoints
            .iter()
            .map(|b| (b + s).rem_euclid(v.period))
            .collect();
        let mut pairs: Vec<(f64, f64)> = bp.into_iter().zip(v.values.iter().cloned()).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let (bp, vals) = pairs.into_iter().unzip();
        StepPotential::new(v.period, bp, vals, v.v_plus)?
    };
    cert.periodicity_residual = barrier_symmetric_difference(v, &shifted_v) / v.period;

    // W' = (beta - alpha) psi_alpha psi_beta: W rises where the product is
    // positive and falls where it is negative.
    let w: Vec<f64> = xs.iter().map(|&x| ef.wronskian(x)).collect();
    let prod: Vec<f64> = xs
        .iter()
        .map(|&x| ef.mode_alpha.eval(x).0 * ef.mode_beta.eval(x).0)
        .collect();
    let wmax = w.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1e-300);
    let mut wv: f64 = 0.0;
    for i in 0..n - 1 {
        if (prod[i] > 0.0) == (prod[i + 1] > 0.0) && prod[i] != 0.0 {
            let s = prod[i].signum();
            wv = wv.max((-s * (w[i + 1] - w[i])).max(0.0) / wmax);
        }
    }
    cert.wronskian_violation = wv;
    Ok(cert)
}

/// Maximizes the first-gap ratio of the single-barrier potential over the
/// barrier width by golden sections; returns `(b, G)`.
pub fn optimal_b_search(period: f64, vp: f64) -> Result<(f64, f64)> {
    if !(vp > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "V_plus = {vp} must be positive"
        )));
    }
    check_kp_args(0.0, period, vp)?;
    let eval = |b: f64| -> Result<f64> {
        let (a, be) = kp_gap_edges(b, period, vp, 1)?;
        Ok(gap_ratio(a, be))
    };
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (0.0, period);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut g1 = eval(x1)?;
    let mut g2 = eval(x2)?;
    while hi - lo > 1e-8 * period {
        if g1 >= g2 {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - r * (hi - lo);
            g1 = eval(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + r * (hi - lo);
            g2 = eval(x2)?;
        }
    }
    Ok(if g1 >= g2 { (x1, g1) } else { (x2, g2) })
}

/// Gap `m` of the infinite-contrast limit with wells of the given lengths:
/// the spectrum is the union of the Dirichlet spectra `(j pi / l)^2`.
pub fn dirichlet_intervals_gap(lengths: &[f64], m: usize) -> Result<f64> {
    if m == 0 || lengths.is_empty() {
        return Err(Error::InvalidArgument(
            "need m >= 1 and at least one interval".into(),
        ));
    }
    if lengths.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidArgument(
            "interval lengths must be positive".into(),
        ));
    }
    let mut ev: Vec<f64> = lengths
        .iter()
        .flat_map(|&l| (1..=m + 1).map(move |j| (j as f64 * PI / l).powi(2)))
        .collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(gap_ratio(ev[m - 1], ev[m]))
}

/// Gap ratio for `m` equal wells in the infinite-contrast limit: the `m`
/// lowest Dirichlet eigenvalues coincide at `(pi/l)^2` and the next one is
/// four times larger, giving 6/5 for every `m`.
pub fn equal_interval_high_contrast(m: usize) -> Result<f64> {
    dirichlet_intervals_gap(&vec![1.0 / m.max(1) as f64; m.max(1)], m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form_merges_neighbours() {
        let v = StepPotential::new(1.0, vec![0.0, 0.3, 0.6], vec![5.0, 5.0, 0.0], 5.0).unwrap();
        assert_eq!(v.breakpoints, vec![0.0, 0.6]);
        assert_eq!(v.values, vec![5.0, 0.0]);
        let w = StepPotential::new(1.0, vec![0.2, 0.5, 0.7], vec![0.0, 5.0, 0.0], 5.0).unwrap();
        assert_eq!(w.breakpoints, vec![0.5, 0.7]);
        assert!((w.barrier_measure() - 0.2).abs() < 1e-15);
        assert_eq!(w.transitions(), 2);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(StepPotential::new(1.0, vec![0.5, 0.2], vec![0.0, 1.0], 1.0).is_err());
        assert!(StepPotential::new(1.0, vec![0.0], vec![2.0], 1.0).is_err());
        assert!(StepPotential::new(1.0, vec![1.0], vec![0.0], 1.0).is_err());
        assert!(kp_discriminant(-1.0, 0.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn discriminant_limits() {
        let e = 7.3;
        assert!((kp_discriminant(e, 0.0, 1.0, 50.0).unwrap() - e.sqrt().cos()).abs() < 1e-14);
        let q = (50.0f64 - e).sqrt();
        let d = kp_discriminant(e, 1.0, 1.0, 50.0).unwrap();
        assert!((d - q.cosh()).abs() < 1e-12 * q.cosh());
        // Removable points agree with their neighbourhoods.
        let at = kp_discriminant(50.0, 0.4, 1.0, 50.0).unwrap();
        let near = kp_discriminant(50.0 + 1e-9, 0.4, 1.0, 50.0).unwrap();
        assert!((at - near).abs() < 1e-7);
        assert!(kp_discriminant(0.0, 0.4, 1.0, 50.0).unwrap().is_finite());
    }

    #[test]
    fn sampling_averages_cells() {
        let v = StepPotential::kronig_penney(1.0, 0.25, 4.0).unwrap();
        let g = v.sample(8).unwrap();
        assert!((g.mean() - 1.0).abs() < 1e-14);
        assert_eq!(g.values[1], 4.0);
        assert_eq!(g.values[0], 2.0);
    }

    #[test]
    fn dirichlet_intervals() {
        assert!((equal_interval_high_contrast(3).unwrap() - 1.2).abs() < 1e-15);
        assert!((dirichlet_intervals_gap(&[0.4, 0.6], 2).unwrap() - 0.56).abs() < 1e-12);
    }
}

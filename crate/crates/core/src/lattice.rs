//! Two-dimensional Bravais lattices of unit volume, their reduction to the
//! fundamental parameter domain, and Brillouin-zone sampling.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

const U_TOL: f64 = 1e-12;

/// Shape parameters of a unit-volume lattice. Valid values satisfy
/// `b > 0`, `0 <= a <= 1/2` and `a^2 + b^2 >= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeParams {
    pub a: f64,
    pub b: f64,
}

impl LatticeParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let p = LatticeParams { a, b };
        p.validate()?;
        Ok(p)
    }

    pub fn square() -> Self {
        LatticeParams { a: 0.0, b: 1.0 }
    }

    pub fn triangular() -> Self {
        LatticeParams {
            a: 0.5,
            b: 3f64.sqrt() / 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let LatticeParams { a, b } = *self;
        let bad = |reason: &str| {
            Err(Error::InvalidParams {
                a,
                b,
                reason: reason.to_string(),
            })
        };
        if !(a.is_finite() && b.is_finite()) {
            return bad("non-finite value");
        }
        if b <= 0.0 {
            return bad("b must be positive");
        }
        if a < -U_TOL || a > 0.5 + U_TOL {
            return bad("a must lie in [0, 1/2]");
        }
        if a * a + b * b < 1.0 - 1e-10 {
            return bad("a^2 + b^2 must be at least 1");
        }
        Ok(())
    }

    /// Named lattice, if these parameters match one.
    pub fn kind(&self) -> Option<LatticeKind> {
        let close = |q: LatticeParams| (q.a - self.a).abs() < 1e-9 && (q.b - self.b).abs() < 1e-9;
        if close(Self::square()) {
            Some(LatticeKind::Square)
        } else if close(Self::triangular()) {
            Some(LatticeKind::Triangular)
        } else {
            None
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ParamsRepr {
    Named(String),
    Explicit { a: f64, b: f64 },
}

impl Serialize for LatticeParams {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ParamsRepr::Explicit {
            a: self.a,
            b: self.b,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LatticeParams {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        match ParamsRepr::deserialize(d)? {
            ParamsRepr::Named(name) => match LatticeKind::from_name(&name) {
                Some(kind) => Ok(kind.params()),
                None => Err(D::Error::custom(format!(
                    "unknown lattice name '{name}' (expected \"square\" or \"triangular\")"
                ))),
            },
            ParamsRepr::Explicit { a, b } => {
                LatticeParams::new(a, b).map_err(|e| D::Error::custom(e.to_string()))
            }
        }
    }
}

/// The two lattices with extra point symmetry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeKind {
    Square,
    Triangular,
}

impl LatticeKind {
    pub fn params(self) -> LatticeParams {
        match self {
            LatticeKind::Square => LatticeParams::square(),
            LatticeKind::Triangular => LatticeParams::triangular(),
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "square" => Some(LatticeKind::Square),
            "triangular" | "hexagonal" => Some(LatticeKind::Triangular),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LatticeKind::Square => "square",
            LatticeKind::Triangular => "triangular",
        }
    }
}

/// Lattice basis; columns are the primitive vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Basis(pub Matrix2<f64>);

impl Basis {
    pub fn matrix(&self) -> &Matrix2<f64> {
        &self.0
    }

    pub fn det(&self) -> f64 {
        self.0.determinant()
    }

    pub fn inverse(&self) -> Result<Matrix2<f64>> {
        let det = self.det();
        if det.abs() < 1e-12 {
            return Err(Error::SingularBasis { det });
        }
        Ok(self.0.try_inverse().expect("nonsingular"))
    }
}

/// A quasi-momentum in physical (Cartesian) coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KPoint(pub [f64; 2]);

impl KPoint {
    pub fn new(x: f64, y: f64) -> Self {
        KPoint([x, y])
    }

    pub fn gamma() -> Self {
        KPoint([0.0, 0.0])
    }

    pub fn vec(&self) -> Vector2<f64> {
        Vector2::new(self.0[0], self.0[1])
    }

    pub fn from_vec(v: Vector2<f64>) -> Self {
        KPoint([v.x, v.y])
    }

    pub fn neg(&self) -> Self {
        KPoint([-self.0[0], -self.0[1]])
    }
}

/// Ordered quasi-momentum samples with optional path labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSampling {
    pub points: Vec<KPoint>,
    /// (index into `points`, label)
    pub labels: Vec<(usize, String)>,
    /// Cumulative arc length along the sampling order.
    pub arc: Vec<f64>,
}

impl KSampling {
    pub fn from_points(points: Vec<KPoint>) -> Self {
        let arc = arc_lengths(&points);
        KSampling {
            points,
            labels: Vec::new(),
            arc,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Copy of a path with its first point appended again (for plotting a
    /// closed loop).
    pub fn closed(&self) -> Self {
        let mut out = self.clone();
        if let Some(&first) = self.points.first() {
            out.points.push(first);
            if let Some((_, l)) = self.labels.iter().find(|(i, _)| *i == 0) {
                out.labels.push((out.points.len() - 1, l.clone()));
            }
            out.arc = arc_lengths(&out.points);
        }
        out
    }

    /// Sampling closed under `k -> -k`, used for symmetry checks.
    pub fn with_negatives(&self) -> Self {
        let mut pts = self.points.clone();
        pts.extend(self.points.iter().map(|k| k.neg()));
        KSampling::from_points(pts)
    }
}

fn arc_lengths(points: &[KPoint]) -> Vec<f64> {
    let mut arc = Vec::with_capacity(points.len());
    let mut s = 0.0;
    for (i, p) in points.iter().enumerate() {
        if i > 0 {
            s += (p.vec() - points[i - 1].vec()).norm();
        }
        arc.push(s);
    }
    arc
}

/// `B_{a,b} = [[1/sqrt(b), a/sqrt(b)], [0, sqrt(b)]]`.
pub fn basis_from_params(p: LatticeParams) -> Result<Basis> {
    p.validate()?;
    let sb = p.b.sqrt();
    Ok(Basis(Matrix2::new(1.0 / sb, p.a / sb, 0.0, sb)))
}

/// Reduce an arbitrary nonsingular basis to its parameters in the
/// fundamental domain. Bases differing by rotation, reflection, unimodular
/// column change or scaling give the same result.
pub fn reduce_to_fundamental(m: &Matrix2<f64>) -> Result<LatticeParams> {
    let det = m.determinant();
    if !det.is_finite() || det.abs() < 1e-12 {
        return Err(Error::SingularBasis { det });
    }
    let scale = 1.0 / det.abs().sqrt();
    let (u, v) = gauss_reduce(m.column(0) * scale, m.column(1) * scale);
    let mut best = params_from_reduced(&u, &v);
    // Equal-length case: both orderings are reduced; keep the canonical one.
    if (v.norm_squared() - u.norm_squared()).abs() <= 1e-9 * u.norm_squared() {
        let alt = params_from_reduced(&v, &u);
        if (alt.a, alt.b) < (best.a - 1e-12, best.b) {
            best = alt;
        }
    }
    Ok(best)
}

fn gauss_reduce(mut u: Vector2<f64>, mut v: Vector2<f64>) -> (Vector2<f64>, Vector2<f64>) {
    for _ in 0..64 {
        if v.norm_squared() < u.norm_squared() {
            std::mem::swap(&mut u, &mut v);
        }
        let mu = (u.dot(&v) / u.norm_squared()).round();
        if mu == 0.0 {
            break;
        }
        v -= u * mu;
    }
    if v.norm_squared() < u.norm_squared() {
        std::mem::swap(&mut u, &mut v);
    }
    (u, v)
}

fn params_from_reduced(u: &Vector2<f64>, v: &Vector2<f64>) -> LatticeParams {
    let uu = u.norm_squared();
    // Sign flip of v makes the angle acute; then a = <u,v>/|u|^2 in [0, 1/2].
    let a = (u.dot(v).abs() / uu).clamp(0.0, 0.5);
    let b = 1.0 / uu;
    // Shortest-vector ordering guarantees a^2 + b^2 >= 1 up to rounding.
    let b = if a * a + b * b < 1.0 {
        (1.0 - a * a).sqrt()
    } else {
        b
    };
    LatticeParams { a, b }
}

/// `2*pi * B^{-T}`; columns generate the reciprocal lattice.
pub fn reciprocal_basis(b: &Basis) -> Result<Matrix2<f64>> {
    Ok(b.inverse()?.transpose() * (2.0 * PI))
}

/// Short reciprocal vectors whose bisectors can bound the Brillouin zone.
fn voronoi_candidates(recip: &Matrix2<f64>) -> Vec<Vector2<f64>> {
    let (g1, g2) = gauss_reduce(recip.column(0).into(), recip.column(1).into());
    let mut out = Vec::new();
    for i in -2i32..=2 {
        for j in -2i32..=2 {
            if i == 0 && j == 0 {
                continue;
            }
            out.push(g1 * i as f64 + g2 * j as f64);
        }
    }
    out
}

/// Vertices of the Brillouin zone (Voronoi cell of the origin in the
/// reciprocal lattice), counter-clockwise.
pub fn brillouin_zone_polygon(recip: &Matrix2<f64>) -> Vec<Vector2<f64>> {
    let cands = voronoi_candidates(recip);
    let r = cands.iter().map(|g| g.norm()).fold(0.0, f64::max) * 2.0;
    let mut poly = vec![
        Vector2::new(-r, -r),
        Vector2::new(r, -r),
        Vector2::new(r, r),
        Vector2::new(-r, r),
    ];
    for g in &cands {
        let c = g.norm_squared() / 2.0;
        poly = clip_halfplane(&poly, g, c);
    }
    // Merge vertices closer than round-off.
    let scale = cands[0].norm();
    let mut out: Vec<Vector2<f64>> = Vec::new();
    for p in poly {
        if out.last().is_none_or(|q| (p - q).norm() > 1e-10 * scale) {
            out.push(p);
        }
    }
    while out.len() > 1 && (out[0] - out[out.len() - 1]).norm() <= 1e-10 * scale {
        out.pop();
    }
    out
}

fn clip_halfplane(poly: &[Vector2<f64>], g: &Vector2<f64>, c: f64) -> Vec<Vector2<f64>> {
    let inside = |p: &Vector2<f64>| p.dot(g) <= c;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        let (pin, qin) = (inside(&p), inside(&q));
        if pin {
            out.push(p);
        }
        if pin != qin {
            let t = (c - p.dot(g)) / (q - p).dot(g);
            out.push(p + (q - p) * t);
        }
    }
    out
}

/// Whether `k` lies in the closed Brillouin zone, with relative slack `tol`.
pub fn in_closed_bz(k: &KPoint, recip: &Matrix2<f64>, tol: f64) -> bool {
    let kv = k.vec();
    voronoi_candidates(recip)
        .iter()
        .all(|g| kv.dot(g) <= g.norm_squared() / 2.0 * (1.0 + tol))
}

/// Map `k` to its representative of smallest norm modulo the reciprocal
/// lattice.
pub fn reduce_to_bz(k: Vector2<f64>, recip: &Matrix2<f64>) -> Vector2<f64> {
    let cands = voronoi_candidates(recip);
    let mut k = k;
    for _ in 0..64 {
        let mut best = k;
        for g in &cands {
            let t = k - g;
            if t.norm_squared() < best.norm_squared() - 1e-14 * g.norm_squared() {
                best = t;
            }
        }
        if best == k {
            break;
        }
        k = best;
    }
    k
}

/// Uniform samples on the boundary of the irreducible Brillouin zone:
/// Γ–X–M (square) or Γ–K–M (triangular). Each side carries
/// `points_per_side` samples including its start vertex and excluding its
/// end vertex, so the path has `3 * points_per_side` distinct points.
/// Use [`KSampling::closed`] to append the return to Γ.
pub fn ibz_boundary_path(kind: LatticeKind, points_per_side: usize) -> KSampling {
    let pps = points_per_side.max(1);
    let basis = basis_from_params(kind.params()).expect("named lattices are valid");
    let recip = reciprocal_basis(&basis).expect("named lattices are nonsingular");
    let poly = brillouin_zone_polygon(&recip);
    let nv = poly.len();
    // Edge whose midpoint has the smallest nonnegative polar angle.
    let angle = |p: &Vector2<f64>| {
        let t = p.y.atan2(p.x);
        if t < -1e-9 {
            t + 2.0 * PI
        } else {
            t.max(0.0)
        }
    };
    let edge = (0..nv)
        .min_by(|&i, &j| {
            let mi = (poly[i] + poly[(i + 1) % nv]) / 2.0;
            let mj = (poly[j] + poly[(j + 1) % nv]) / 2.0;
            angle(&mi).partial_cmp(&angle(&mj)).unwrap()
        })
        .unwrap();
    let start = poly[edge];
    let end = poly[(edge + 1) % nv];
    let mid = (start + end) / 2.0;
    let gamma = Vector2::zeros();
    let (corners, names) = match kind {
        LatticeKind::Square => ([gamma, mid, end], ["Γ", "X", "M"]),
        LatticeKind::Triangular => ([gamma, start, mid], ["Γ", "K", "M"]),
    };
    let mut points = Vec::with_capacity(3 * pps);
    let mut labels = Vec::new();
    for side in 0..3 {
        let p = corners[side];
        let q = corners[(side + 1) % 3];
        labels.push((points.len(), names[side].to_string()));
        for j in 0..pps {
            let t = j as f64 / pps as f64;
            points.push(KPoint::from_vec(p + (q - p) * t));
        }
    }
    let arc = arc_lengths(&points);
    KSampling {
        points,
        labels,
        arc,
    }
}

/// Uniform `resolution x resolution` grid over the Brillouin zone folded by
/// `k -> -k`, together with the zone's vertices and edge midpoints (folded the
/// same way). All points are reduced into the closed zone.
pub fn half_bz_grid(b: &Basis, resolution: usize) -> Result<KSampling> {
    let recip = reciprocal_basis(b)?;
    let r = resolution.max(1);
    let mut pts: Vec<Vector2<f64>> = Vec::new();
    for j in 0..r {
        for i in 0..r {
            let (ni, nj) = ((r - i) % r, (r - j) % r);
            if (i, j) > (ni, nj) {
                continue;
            }
            let f = Vector2::new(i as f64 / r as f64, j as f64 / r as f64);
            pts.push(reduce_to_bz(recip * f, &recip));
        }
    }
    let poly = brillouin_zone_polygon(&recip);
    let nv = poly.len();
    let mut special: Vec<Vector2<f64>> = Vec::new();
    for i in 0..nv {
        special.push((poly[i] + poly[(i + 1) % nv]) / 2.0);
        special.push(poly[i]);
    }
    let rinv = recip
        .try_inverse()
        .ok_or(Error::SingularBasis { det: 0.0 })?;
    // Equivalent modulo the reciprocal lattice, optionally after negation.
    let equiv = |p: &Vector2<f64>, q: &Vector2<f64>| {
        let near_int = |d: Vector2<f64>| {
            let f = rinv * d;
            (f.x - f.x.round()).abs() < 1e-9 && (f.y - f.y.round()).abs() < 1e-9
        };
        near_int(p - q) || near_int(p + q)
    };
    for s in special {
        if !pts.iter().any(|p| equiv(p, &s)) {
            pts.push(s);
        }
    }
    let points: Vec<KPoint> = pts.into_iter().map(KPoint::from_vec).collect();
    Ok(KSampling::from_points(points))
}

/// Uniform `resolution x resolution` grid over the whole Brillouin zone
/// (fractional reciprocal coordinates `i/r`, reduced into the zone). Closed
/// under `k -> -k` up to the zone-boundary identification.
pub fn full_bz_grid(b: &Basis, resolution: usize) -> Result<KSampling> {
    let recip = reciprocal_basis(b)?;
    let r = resolution.max(1);
    let mut pts = Vec::with_capacity(r * r);
    for j in 0..r {
        for i in 0..r {
            let f = Vector2::new(i as f64 / r as f64, j as f64 / r as f64);
            pts.push(KPoint::from_vec(reduce_to_bz(recip * f, &recip)));
        }
    }
    Ok(KSampling::from_points(pts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn square_basis_is_identity() {
        let b = basis_from_params(LatticeParams::square()).unwrap();
        assert_abs_diff_eq!(b.0, Matrix2::identity(), epsilon = 1e-15);
    }

    #[test]
    fn triangular_basis_entries() {
        let b = basis_from_params(LatticeParams::triangular()).unwrap();
        assert!((b.0[(0, 0)] - 1.07457).abs() < 1e-5);
        assert!((b.0[(0, 1)] - 0.53729).abs() < 1e-5);
        assert!((b.0[(1, 1)] - 0.93060).abs() < 1e-5);
        assert!((b.det() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn outside_domain_rejected() {
        assert!(matches!(
            basis_from_params(LatticeParams { a: 0.3, b: 0.5 }),
            Err(Error::InvalidParams { .. })
        ));
    }

    #[test]
    fn reduce_identity_and_hexagonal_columns() {
        let p = reduce_to_fundamental(&Matrix2::identity()).unwrap();
        assert_abs_diff_eq!(p.a, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.b, 1.0, epsilon = 1e-12);
        let h = Matrix2::new(1.0, 0.5, 0.0, 3f64.sqrt() / 2.0);
        let p = reduce_to_fundamental(&h).unwrap();
        assert_abs_diff_eq!(p.a, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p.b, 3f64.sqrt() / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn singular_basis_rejected() {
        let m = Matrix2::new(1.0, 2.0, 2.0, 4.0);
        assert!(matches!(
            reduce_to_fundamental(&m),
            Err(Error::SingularBasis { .. })
        ));
    }

    #[test]
    fn reciprocal_examples() {
        let r = reciprocal_basis(&Basis(Matrix2::identity())).unwrap();
        assert_abs_diff_eq!(r, Matrix2::identity() * 2.0 * PI, epsilon = 1e-14);
        let t = basis_from_params(LatticeParams::triangular()).unwrap();
        let r = reciprocal_basis(&t).unwrap();
        // Lattice constant of the unit-area triangular lattice.
        let a0 = t.0.column(0).norm();
        for c in 0..2 {
            assert_abs_diff_eq!(
                r.column(c).norm(),
                4.0 * PI / (3f64.sqrt() * a0),
                epsilon = 1e-12
            );
        }
        let d = Basis(Matrix2::new(1.0 / 2f64.sqrt(), 0.0, 0.0, 2f64.sqrt()));
        let r = reciprocal_basis(&d).unwrap();
        assert_abs_diff_eq!(r[(0, 0)], 2.0 * PI * 2f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(r[(1, 1)], 2.0 * PI / 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn square_path_two_per_side() {
        let s = ibz_boundary_path(LatticeKind::Square, 2);
        assert_eq!(s.len(), 6);
        let v = |i: usize| s.points[i].vec();
        assert_abs_diff_eq!(v(0), Vector2::new(0.0, 0.0), epsilon = 1e-12);
        assert_abs_diff_eq!(v(2), Vector2::new(PI, 0.0), epsilon = 1e-12);
        assert_abs_diff_eq!(v(4), Vector2::new(PI, PI), epsilon = 1e-12);
        let names: Vec<_> = s.labels.iter().map(|(i, l)| (*i, l.as_str())).collect();
        assert_eq!(names, vec![(0, "Γ"), (2, "X"), (4, "M")]);
        let c = s.closed();
        assert_eq!(c.len(), 7);
        assert_eq!(c.labels.last().unwrap(), &(6, "Γ".to_string()));
    }

    #[test]
    fn square_path_fifteen_per_side_has_45_points() {
        let s = ibz_boundary_path(LatticeKind::Square, 15);
        assert_eq!(s.len(), 45);
        for i in 0..s.len() {
            for j in 0..i {
                assert!((s.points[i].vec() - s.points[j].vec()).norm() > 1e-9);
            }
        }
    }

    #[test]
    fn triangular_k_point() {
        let s = ibz_boundary_path(LatticeKind::Triangular, 15);
        let kidx = s.labels.iter().find(|(_, l)| l == "K").unwrap().0;
        let basis = basis_from_params(LatticeParams::triangular()).unwrap();
        let a0 = basis.0.column(0).norm();
        assert_abs_diff_eq!(
            s.points[kidx].vec().norm(),
            4.0 * PI / (3.0 * a0),
            epsilon = 1e-10
        );
        let recip = reciprocal_basis(&basis).unwrap();
        for k in &s.points {
            assert!(in_closed_bz(k, &recip, 1e-9));
        }
    }

    #[test]
    fn half_grid_resolution_one() {
        let s = half_bz_grid(&Basis(Matrix2::identity()), 1).unwrap();
        assert_eq!(s.points[0], KPoint::gamma());
        // Γ, X, Y, M for the square lattice.
        assert_eq!(s.len(), 4);
    }

    #[test]
    fn half_grid_points_in_zone() {
        let b = basis_from_params(LatticeParams::new(0.25, 1.2).unwrap()).unwrap();
        let recip = reciprocal_basis(&b).unwrap();
        let s = half_bz_grid(&b, 8).unwrap();
        for k in &s.points {
            assert!(in_closed_bz(k, &recip, 1e-9));
        }
    }

    #[test]
    fn params_serde() {
        let p: LatticeParams = serde_json::from_str("\"triangular\"").unwrap();
        assert_eq!(p, LatticeParams::triangular());
        let p: LatticeParams = serde_json::from_str("{\"a\": 0.1, \"b\": 1.5}").unwrap();
        assert_eq!(p, LatticeParams { a: 0.1, b: 1.5 });
        assert!(serde_json::from_str::<LatticeParams>("{\"a\": 0.3, \"b\": 0.5}").is_err());
        let s = serde_json::to_string(&LatticeParams::square()).unwrap();
        assert_eq!(s, "{\"a\":0.0,\"b\":1.0}");
    }
}

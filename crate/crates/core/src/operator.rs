//! Discrete Hermitian operators: the twisted periodic Schrödinger operator on
//! the unit torus (2D), the Bloch operator on a period cell (1D), and
//! Dirichlet/Neumann Laplacians on the fundamental cell.

use nalgebra::{DMatrix, Matrix2, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::{basis_from_params, Basis, KPoint, LatticeParams};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Periodic potential sampled at `x_l = l/n` on the unit cell (per axis).
/// In 2D the value at `(i, j)` (first axis `i`) is stored at `i + n*j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialGrid {
    pub dim: usize,
    pub n: usize,
    pub values: Vec<f64>,
    pub v_plus: f64,
}

impl PotentialGrid {
    /// Validating constructor. Values may overshoot the box by round-off;
    /// anything beyond `1e-9 * v_plus` is rejected.
    pub fn new(dim: usize, n: usize, values: Vec<f64>, v_plus: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::DimensionMismatch(format!(
                "dimension {dim} not in {{1, 2}}"
            )));
        }
        let expect = if dim == 1 { n } else { n * n };
        if values.len() != expect {
            return Err(Error::DimensionMismatch(format!(
                "expected {expect} values for n = {n}, got {}",
                values.len()
            )));
        }
        if !(v_plus.is_finite() && v_plus >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "V_plus = {v_plus} must be finite and >= 0"
            )));
        }
        let slack = 1e-9 * v_plus.max(1.0);
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, &v)| !v.is_finite() || v < -slack || v > v_plus + slack)
        {
            return Err(Error::InvalidArgument(format!(
                "potential value {v} at index {i} outside [0, {v_plus}]"
            )));
        }
        let values = values.into_iter().map(|v| v.clamp(0.0, v_plus)).collect();
        Ok(PotentialGrid {
            dim,
            n,
            values,
            v_plus,
        })
    }

    pub fn constant(dim: usize, n: usize, value: f64, v_plus: f64) -> Result<Self> {
        let len = if dim == 1 { n } else { n * n };
        Self::new(dim, n, vec![value; len], v_plus)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        let n = self.n;
        self.values[(i % n) + n * (j % n)]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Fraction of grid points strictly inside `(tol*V+, (1-tol)*V+)`.
    pub fn interior_fraction(&self, tol: f64) -> f64 {
        let lo = tol * self.v_plus;
        let hi = (1.0 - tol) * self.v_plus;
        let c = self.values.iter().filter(|&&v| v > lo && v < hi).count();
        c as f64 / self.values.len() as f64
    }
}

/// `N = (B^T B)^{-1}`, the metric of the unit-square coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metric(pub Matrix2<f64>);

pub fn metric_from_basis(b: &Basis) -> Result<Metric> {
    let binv = b.inverse()?;
    let n = binv * binv.transpose();
    Ok(Metric((n + n.transpose()) * 0.5))
}

/// Fourier symbol of the translation-invariant part of an operator on a
/// periodic grid. Plane waves `exp(i (2 pi p + t) l / n)` per axis are its
/// eigenvectors with eigenvalue `values[p1 + n1 * p2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSymbol {
    pub shape: (usize, usize),
    /// Bloch twist per axis across one full period (radians).
    pub twist: (f64, f64),
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

/// Where an operator came from.
#[derive(Debug, Clone, PartialEq)]
pub enum OperatorKind {
    Bloch2d {
        params: LatticeParams,
        k: KPoint,
    },
    Bloch1d {
        period: f64,
        k: f64,
    },
    Laplacian {
        params: LatticeParams,
        bc: BoundaryCondition,
    },
    Custom,
}

/// Sparse Hermitian matrix in compressed-row form.
#[derive(Debug, Clone)]
pub struct HermitianOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
    pub kind: OperatorKind,
    pub h: f64,
    pub symbol: Option<Arc<GridSymbol>>,
}

impl HermitianOperator {
    /// Build from per-row entry lists; duplicate columns are summed.
    pub fn from_rows(rows: Vec<Vec<(usize, Complex64)>>, kind: OperatorKind, h: f64) -> Self {
        let dim = rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        HermitianOperator {
            dim,
            row_ptr,
            cols,
            vals,
            kind,
            h,
            symbol: None,
        }
    }

    /// Wrap a dense matrix; it is symmetrized to remove round-off.
    pub fn from_dense(m: &DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, not square",
                m.nrows(),
                m.ncols()
            )));
        }
        let d = m.nrows();
        let rows = (0..d)
            .map(|i| {
                (0..d)
                    .filter_map(|j| {
                        let v = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
                        (v != ZERO).then_some((j, v))
                    })
                    .collect()
            })
            .collect();
        Ok(Self::from_rows(rows, OperatorKind::Custom, 0.0))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.cols[s..e].binary_search(&j) {
            Ok(p) => self.vals[s + p],
            Err(_) => ZERO,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.entry(i, i).re).collect()
    }

    /// All entries have zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.vals.iter().all(|v| v.im == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `max |H - H^*|`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[p];
                worst = worst.max((self.vals[p] - self.entry(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::from_element(self.dim, self.dim, ZERO);
        for i in 0..self.dim {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[p])] += self.vals[p];
            }
        }
        m
    }

    pub fn to_dense_real(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[p])] += self.vals[p].re;
            }
        }
        m
    }

    /// `y = H x` for a block of column vectors.
    pub fn apply(&self, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        assert_eq!(x.nrows(), self.dim);
        let mut y = DMatrix::from_element(self.dim, x.ncols(), ZERO);
        for c in 0..x.ncols() {
            let xc = x.column(c);
            let xs = xc.as_slice();
            let mut yc = y.column_mut(c);
            let ys = yc.as_mut_slice();
            for (i, yi) in ys.iter_mut().enumerate() {
                let mut acc = ZERO;
                for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                    acc += self.vals[p] * xs[self.cols[p]];
                }
                *yi = acc;
            }
        }
        y
    }

    /// `H + diag(d)`.
    pub fn add_diagonal(&self, d: &[f64]) -> Self {
        assert_eq!(d.len(), self.dim);
        let mut rows: Vec<Vec<(usize, Complex64)>> = Vec::with_capacity(self.dim);
        for (i, di) in d.iter().enumerate() {
            let mut r: Vec<(usize, Complex64)> = (self.row_ptr[i]..self.row_ptr[i + 1])
                .map(|p| (self.cols[p], self.vals[p]))
                .collect();
            r.push((i, Complex64::new(*di, 0.0)));
            rows.push(r);
        }
        let mut out = Self::from_rows(rows, self.kind.clone(), self.h);
        out.symbol = self.symbol.clone();
        out
    }

    /// Iterator over `(row, col, value)`.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |p| (i, self.cols[p], self.vals[p]))
        })
    }
}

/// Stencil coefficients of the free twisted operator for one k.
struct Stencil2d {
    center: f64,
    east: Complex64,
    north: Complex64,
    /// North-east / south-west corner weight (north-west and south-east are the negation).
    corner: f64,
}

fn stencil_2d(p: LatticeParams, k: KPoint, n: usize) -> Result<(Stencil2d, Metric, Vector2<f64>)> {
    let basis = basis_from_params(p)?;
    let metric = metric_from_basis(&basis)?;
    let kp = basis.inverse()? * k.vec();
    let h = 1.0 / n as f64;
    let nm = metric.0;
    let h2 = h * h;
    let st = Stencil2d {
        center: 2.0 * (nm[(0, 0)] + nm[(1, 1)]) / h2 + k.vec().norm_squared(),
        east: Complex64::new(-nm[(0, 0)] / h2, -kp.x / h),
        north: Complex64::new(-nm[(1, 1)] / h2, -kp.y / h),
        corner: -(nm[(0, 1)] + nm[(1, 0)]) / (4.0 * h2),
    };
    Ok((st, metric, kp))
}

/// Eigenvalues of the free (V = 0) discrete twisted operator, indexed by
/// plane-wave frequency `p1 + n * p2`.
pub fn free_symbol_2d(p: LatticeParams, k: KPoint, n: usize) -> Result<GridSymbol> {
    let (_, metric, kp) = stencil_2d(p, k, n)?;
    let nm = metric.0;
    let h = 1.0 / n as f64;
    let kk = k.vec().norm_squared();
    let mut values = Vec::with_capacity(n * n);
    for p2 in 0..n {
        let t2 = 2.0 * PI * p2 as f64 / n as f64;
        for p1 in 0..n {
            let t1 = 2.0 * PI * p1 as f64 / n as f64;
            values.push(
                kk + 2.0 * nm[(0, 0)] * (1.0 - t1.cos()) / (h * h)
                    + 2.0 * nm[(1, 1)] * (1.0 - t2.cos()) / (h * h)
                    + 2.0 * kp.x * t1.sin() / h
                    + 2.0 * kp.y * t2.sin() / h
                    + 2.0 * nm[(0, 1)] * t1.sin() * t2.sin() / (h * h),
            );
        }
    }
    Ok(GridSymbol {
        shape: (n, n),
        twist: (0.0, 0.0),
        values,
    })
}

/// Nine-point discretization of `-(grad + i k)^2 + V` on the unit torus in
/// transformed coordinates, with periodic wrap.
pub fn assemble_bloch_2d(
    p: LatticeParams,
    k: KPoint,
    v: &PotentialGrid,
    n: usize,
) -> Result<HermitianOperator> {
    if v.dim != 2 || v.n != n {
        return Err(Error::DimensionMismatch(format!(
            "potential is {}D with n = {}, operator requested on 2D n = {n}",
            v.dim, v.n
        )));
    }
    if n < 4 {
        return Err(Error::DimensionMismatch(format!(
            "grid size n = {n} below 4"
        )));
    }
    let (st, _, _) = stencil_2d(p, k, n)?;
    let idx = |i: usize, j: usize| (i % n) + n * (j % n);
    let corner = Complex64::new(st.corner, 0.0);
    let mut rows = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let (ip, im, jp, jm) = (i + 1, i + n - 1, j + 1, j + n - 1);
            let mut r = Vec::with_capacity(9);
            r.push((idx(i, j), Complex64::new(st.center + v.at(i, j), 0.0)));
            r.push((idx(ip, j), st.east));
            r.push((idx(im, j), st.east.conj()));
            r.push((idx(i, jp), st.north));
            r.push((idx(i, jm), st.north.conj()));
            if st.corner != 0.0 {
                r.push((idx(ip, jp), corner));
                r.push((idx(im, jm), corner));
                r.push((idx(im, jp), -corner));
                r.push((idx(ip, jm), -corner));
            }
            rows.push(r);
        }
    }
    let mut op =
        HermitianOperator::from_rows(rows, OperatorKind::Bloch2d { params: p, k }, 1.0 / n as f64);
    op.symbol = Some(Arc::new(free_symbol_2d(p, k, n)?));
    Ok(op)
}

/// Three-point discretization of `-(d/dx)^2 + V` acting on Bloch functions
/// `psi(x + X) = exp(i k X) psi(x)`; the phase sits in the wrap entries.
/// Equivalent to `-(d/dx + i k)^2 + V` on the periodic part.
pub fn assemble_bloch_1d(period: f64, k: f64, v: &PotentialGrid) -> Result<HermitianOperator> {
    if v.dim != 1 {
        return Err(Error::DimensionMismatch(format!(
            "potential is {}D, 1D operator requested",
            v.dim
        )));
    }
    let n = v.n;
    if n < 3 {
        return Err(Error::DimensionMismatch(format!(
            "grid size n = {n} below 3"
        )));
    }
    if !(period > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "period {period} must be positive"
        )));
    }
    if k.abs() > PI / period * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "quasi-momentum {k} outside [-pi/X, pi/X]"
        )));
    }
    let h = period / n as f64;
    let off = Complex64::new(-1.0 / (h * h), 0.0);
    let mut phase = Complex64::from_polar(1.0, k * period);
    // Keep k = 0 and k = pi/X operators exactly real.
    if phase.im.abs() < 1e-14 {
        phase = Complex64::new(phase.re.signum(), 0.0);
    }
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let mut r = Vec::with_capacity(3);
        r.push((i, Complex64::new(2.0 / (h * h) + v.values[i], 0.0)));
        if i + 1 < n {
            r.push((i + 1, off));
        } else {
            r.push((0, off * phase));
        }
        if i > 0 {
            r.push((i - 1, off));
        } else {
            r.push((n - 1, off * phase.conj()));
        }
        rows.push(r);
    }
    let mut op = HermitianOperator::from_rows(rows, OperatorKind::Bloch1d { period, k }, h);
    let values = (0..n)
        .map(|j| {
            let phi = (2.0 * PI * j as f64 + k * period) / n as f64;
            (2.0 - 2.0 * phi.cos()) / (h * h)
        })
        .collect();
    op.symbol = Some(Arc::new(GridSymbol {
        shape: (n, 1),
        twist: (k * period, 0.0),
        values,
    }));
    Ok(op)
}

/// Bilinear-element stiffness of `int grad(u)^T N grad(v)` on one square cell,
/// corners ordered (0,0), (1,0), (0,1), (1,1).
fn q1_stiffness(nm: &Matrix2<f64>) -> [[f64; 4]; 4] {
    let g = 0.5 / 3f64.sqrt();
    let gauss = [0.5 - g, 0.5 + g];
    let grads = |s: f64, t: f64| -> [Vector2<f64>; 4] {
        [
            Vector2::new(-(1.0 - t), -(1.0 - s)),
            Vector2::new(1.0 - t, -s),
            Vector2::new(-t, 1.0 - s),
            Vector2::new(t, s),
        ]
    };
    let mut k = [[0.0; 4]; 4];
    for &s in &gauss {
        for &t in &gauss {
            let gr = grads(s, t);
            for a in 0..4 {
                for b in 0..4 {
                    k[a][b] += 0.25 * gr[a].dot(&(nm * gr[b]));
                }
            }
        }
    }
    k
}

/// Metric-weighted Laplacian on the fundamental cell (the unit square in
/// transformed coordinates) with Dirichlet or Neumann boundary conditions.
///
/// Bilinear elements with a lumped mass matrix; the returned matrix is the
/// symmetric form `M^{-1/2} K M^{-1/2}`, so its eigenvalues approximate the
/// continuous ones.
pub fn assemble_laplacian_bc(
    n: usize,
    bc: BoundaryCondition,
    p: LatticeParams,
) -> Result<HermitianOperator> {
    if n < 4 {
        return Err(Error::DimensionMismatch(format!(
            "grid size n = {n} below 4"
        )));
    }
    let metric = metric_from_basis(&basis_from_params(p)?)?;
    let ke = q1_stiffness(&metric.0);
    let h = 1.0 / n as f64;
    // Free node numbering.
    let (lo, hi) = match bc {
        BoundaryCondition::Dirichlet => (1, n - 1),
        BoundaryCondition::Neumann => (0, n),
    };
    let side = hi - lo + 1;
    let free = |i: usize, j: usize| -> Option<usize> {
        (i >= lo && i <= hi && j >= lo && j <= hi).then(|| (i - lo) + side * (j - lo))
    };
    let mut mass = vec![0.0; side * side];
    let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); side * side];
    for cj in 0..n {
        for ci in 0..n {
            let corners = [(ci, cj), (ci + 1, cj), (ci, cj + 1), (ci + 1, cj + 1)];
            for a in 0..4 {
                let Some(ra) = free(corners[a].0, corners[a].1) else {
                    continue;
                };
                mass[ra] += h * h / 4.0;
                for b in 0..4 {
                    if let Some(rb) = free(corners[b].0, corners[b].1) {
                        rows[ra].push((rb, Complex64::new(ke[a][b], 0.0)));
                    }
                }
            }
        }
    }
    let scale: Vec<f64> = mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    for (i, row) in rows.iter_mut().enumerate() {
        for e in row.iter_mut() {
            e.1 *= scale[i] * scale[e.0];
        }
    }
    Ok(HermitianOperator::from_rows(
        rows,
        OperatorKind::Laplacian { params: p, bc },
        h,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn zero2(n: usize) -> PotentialGrid {
        PotentialGrid::constant(2, n, 0.0, 1.0).unwrap()
    }

    #[test]
    fn metric_examples() {
        let m = metric_from_basis(&Basis(Matrix2::identity())).unwrap();
        assert_abs_diff_eq!(m.0, Matrix2::identity(), epsilon = 1e-15);
        let t = basis_from_params(LatticeParams::triangular()).unwrap();
        let m = metric_from_basis(&t).unwrap();
        assert!(m.0[(0, 1)].abs() > 0.1);
        assert!(m.0.determinant() > 0.0 && m.0[(0, 0)] > 0.0);
        let d = metric_from_basis(&Basis(Matrix2::new(2.0, 0.0, 0.0, 0.5))).unwrap();
        assert_abs_diff_eq!(d.0, Matrix2::new(0.25, 0.0, 0.0, 4.0), epsilon = 1e-15);
    }

    #[test]
    fn square_free_operator_is_five_point() {
        let n = 8;
        let op = assemble_bloch_2d(LatticeParams::square(), KPoint::gamma(), &zero2(n), n).unwrap();
        assert_eq!(op.nnz(), 5 * n * n);
        let h2 = 1.0 / (n * n) as f64;
        assert_abs_diff_eq!(op.entry(0, 0).re, 4.0 / h2, epsilon = 1e-9);
        assert_abs_diff_eq!(op.entry(0, 1).re, -1.0 / h2, epsilon = 1e-9);
        // Constant vector is in the kernel.
        let ones = DMatrix::from_element(n * n, 1, Complex64::new(1.0, 0.0));
        assert!(op.apply(&ones).iter().all(|z| z.norm() < 1e-9));
    }

    #[test]
    fn plus_minus_k_conjugate() {
        let n = 6;
        let p = LatticeParams::new(0.3, 1.1).unwrap();
        let mut v = zero2(n);
        v.values
            .iter_mut()
            .enumerate()
            .for_each(|(i, x)| *x = (i % 5) as f64 * 0.2);
        let k = KPoint::new(0.7, -1.3);
        let a = assemble_bloch_2d(p, k, &v, n).unwrap().to_dense();
        let b = assemble_bloch_2d(p, k.neg(), &v, n).unwrap().to_dense();
        assert_abs_diff_eq!((a - b.map(|z| z.conj())).norm(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn dimension_errors() {
        let v1 = PotentialGrid::constant(1, 8, 0.0, 1.0).unwrap();
        assert!(matches!(
            assemble_bloch_2d(LatticeParams::square(), KPoint::gamma(), &v1, 8),
            Err(Error::DimensionMismatch(_))
        ));
        let v2 = zero2(8);
        assert!(matches!(
            assemble_bloch_2d(LatticeParams::square(), KPoint::gamma(), &v2, 16),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            assemble_bloch_1d(1.0, 0.0, &v2),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn symbol_matches_matrix_on_plane_waves() {
        let n = 8;
        let p = LatticeParams::new(0.4, 0.95).unwrap();
        let k = KPoint::new(1.1, 0.4);
        let op = assemble_bloch_2d(p, k, &zero2(n), n).unwrap();
        let sym = free_symbol_2d(p, k, n).unwrap();
        for (p1, p2) in [(0, 0), (1, 0), (3, 5), (7, 7)] {
            let w = DMatrix::from_fn(n * n, 1, |l, _| {
                let (i, j) = (l % n, l / n);
                Complex64::from_polar(1.0, 2.0 * PI * (p1 * i + p2 * j) as f64 / n as f64)
            });
            let hw = op.apply(&w);
            let lam = sym.values[p1 + n * p2];
            assert_abs_diff_eq!(
                (hw - w * Complex64::new(lam, 0.0)).norm(),
                0.0,
                epsilon = 1e-7
            );
        }
    }

    #[test]
    fn bloch_1d_wrap_phase() {
        let v = PotentialGrid::constant(1, 10, 0.0, 1.0).unwrap();
        let op = assemble_bloch_1d(1.0, PI, &v).unwrap();
        assert!(op.is_real());
        assert_abs_diff_eq!(op.entry(0, 9).re, 100.0, epsilon = 1e-9);
        assert!(op.hermitian_defect() < 1e-12);
    }

    #[test]
    fn laplacian_neumann_kernel() {
        let op =
            assemble_laplacian_bc(6, BoundaryCondition::Neumann, LatticeParams::square()).unwrap();
        assert_eq!(op.dim(), 49);
        // M^{1/2} * ones lies in the kernel.
        let m = op.to_dense_real();
        let w = nalgebra::DVector::from_iterator(
            49,
            (0..49).map(|l| {
                let (i, j) = (l % 7, l / 7);
                let edge = |x: usize| -> f64 {
                    if x == 0 || x == 6 {
                        0.5
                    } else {
                        1.0
                    }
                };
                (edge(i) * edge(j) as f64).sqrt()
            }),
        );
        assert!((m * w).norm() < 1e-9);
    }
}

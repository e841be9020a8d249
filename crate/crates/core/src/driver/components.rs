//! Connected components of sublevel sets on the periodic grid.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{basis_from_params, LatticeParams};
use crate::operator::PotentialGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub cells: usize,
    /// Physical area (the cell has unit area).
    pub area: f64,
    /// Length of the interpolated level contour.
    pub perimeter: f64,
    /// `4 pi area / perimeter^2`; 1 for a disk.
    pub roundness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentReport {
    pub level: f64,
    pub count: usize,
    /// Sorted by decreasing area.
    pub components: Vec<Component>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// 4-connected components of `{V < level}` on the periodic 2D grid, with
/// areas and perimeters measured in physical coordinates of lattice `p`.
/// Perimeters follow the piecewise-linear level contour (marching squares);
/// at saddle squares the two inside corners are kept apart, consistent with
/// 4-connectivity.
pub fn component_analysis(
    v: &PotentialGrid,
    p: LatticeParams,
    level: f64,
) -> Result<ComponentReport> {
    if v.dim != 2 {
        return Err(Error::DimensionMismatch(
            "component analysis needs a 2D potential".into(),
        ));
    }
    if !(level > 0.0 && level < v.v_plus) {
        return Err(Error::InvalidArgument(format!(
            "level {level} must lie strictly between 0 and V+ = {}",
            v.v_plus
        )));
    }
    let basis = *basis_from_params(p)?.matrix();
    let n = v.n;
    let idx = |i: usize, j: usize| (i % n) + n * (j % n);
    let inside: Vec<bool> = v.values.iter().map(|&x| x < level).collect();

    let mut parent: Vec<usize> = (0..n * n).collect();
    for j in 0..n {
        for i in 0..n {
            let a = idx(i, j);
            if !inside[a] {
                continue;
            }
            for b in [idx(i + 1, j), idx(i, j + 1)] {
                if inside[b] {
                    let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                    if ra != rb {
                        parent[ra] = rb;
                    }
                }
            }
        }
    }
    let mut roots: Vec<usize> = Vec::new();
    let mut label = vec![usize::MAX; n * n];
    let mut cells: Vec<usize> = Vec::new();
    for c in 0..n * n {
        if !inside[c] {
            continue;
        }
        let r = find(&mut parent, c);
        let k = match roots.iter().position(|&x| x == r) {
            Some(k) => k,
            None => {
                roots.push(r);
                cells.push(0);
                roots.len() - 1
            }
        };
        label[c] = k;
        cells[k] += 1;
    }

    let mut perim = vec![0.0; roots.len()];
    let h = 1.0 / n as f64;
    for j in 0..n {
        for i in 0..n {
            square_contour(v, &inside, &label, &basis, level, h, i, j, &mut perim);
        }
    }
    let cell_area = h * h * basis.determinant().abs();
    let mut components: Vec<Component> = cells
        .iter()
        .zip(&perim)
        .map(|(&c, &per)| {
            let area = c as f64 * cell_area;
            let roundness = if per > 0.0 {
                4.0 * std::f64::consts::PI * area / (per * per)
            } else {
                0.0
            };
            Component {
                cells: c,
                area,
                perimeter: per,
                roundness,
            }
        })
        .collect();
    components.sort_by(|a, b| b.area.total_cmp(&a.area));
    Ok(ComponentReport {
        level,
        count: components.len(),
        components,
    })
}

/// Contour pieces of the square with lower-left corner `(i, j)`.
#[allow(clippy::too_many_arguments)]
fn square_contour(
    v: &PotentialGrid,
    inside: &[bool],
    label: &[usize],
    basis: &Matrix2<f64>,
    level: f64,
    h: f64,
    i: usize,
    j: usize,
    perim: &mut [f64],
) {
    let n = v.n;
    // Corners counter-clockwise; edge e joins corner e and corner e + 1.
    let offs = [(0, 0), (1, 0), (1, 1), (0, 1)];
    let ids: Vec<usize> = offs
        .iter()
        .map(|&(di, dj)| ((i + di) % n) + n * ((j + dj) % n))
        .collect();
    let ins: Vec<bool> = ids.iter().map(|&c| inside[c]).collect();
    let n_in = ins.iter().filter(|&&b| b).count();
    if n_in == 0 || n_in == 4 {
        return;
    }
    let crossing = |e: usize| -> Option<Vector2<f64>> {
        let (a, b) = (e, (e + 1) % 4);
        if ins[a] == ins[b] {
            return None;
        }
        let (fa, fb) = (v.values[ids[a]] - level, v.values[ids[b]] - level);
        let t = fa / (fa - fb);
        let pa = Vector2::new(offs[a].0 as f64, offs[a].1 as f64);
        let pb = Vector2::new(offs[b].0 as f64, offs[b].1 as f64);
        Some((pa + (pb - pa) * t) * h)
    };
    let length = |p: Vector2<f64>, q: Vector2<f64>| (basis * (q - p)).norm();
    if n_in == 2 && ins[0] == ins[2] {
        // Saddle: cut off each inside corner separately.
        for c in 0..4 {
            if ins[c] {
                let e_in = (c + 3) % 4;
                let (p, q) = (
                    crossing(e_in).expect("sign change"),
                    crossing(c).expect("sign change"),
                );
                perim[label[ids[c]]] += length(p, q);
            }
        }
        return;
    }
    let pts: Vec<Vector2<f64>> = (0..4).filter_map(crossing).collect();
    let owner = (0..4).find(|&c| ins[c]).expect("an inside corner");
    perim[label[ids[owner]]] += length(pts[0], pts[1]);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_roundness_is_close_to_one() {
        let n = 64;
        let vp = 1.0;
        let mut vals = vec![vp; n * n];
        for j in 0..n {
            for i in 0..n {
                let (x, y) = (i as f64 / n as f64 - 0.5, j as f64 / n as f64 - 0.5);
                // Smooth profile so the interpolated contour is a true circle.
                vals[i + n * j] = (x.hypot(y) / 0.5).min(1.0) * vp;
            }
        }
        let v = PotentialGrid::new(2, n, vals, vp).unwrap();
        let r = component_analysis(&v, LatticeParams::square(), 0.5).unwrap();
        assert_eq!(r.count, 1);
        let c = r.components[0];
        assert!(
            (c.perimeter - 2.0 * std::f64::consts::PI * 0.25).abs() < 2e-3,
            "{c:?}"
        );
        assert!(c.roundness > 0.97, "{c:?}");
    }
}

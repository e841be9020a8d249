//! Plots written directly as SVG paths and text.

use gapforge::bands::{DispersionTable, GapReport};
use gapforge::hill1d::StepPotential;
use gapforge::lattice::{basis_from_params, LatticeParams};
use gapforge::operator::PotentialGrid;
use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 50.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Round tick spacing giving about five ticks over `span`.
fn tick_step(span: f64) -> f64 {
    if !(span > 0.0 && span.is_finite()) {
        return 1.0;
    }
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let m = if f < 1.5 {
        1.0
    } else if f < 3.5 {
        2.0
    } else if f < 7.5 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn tick_label(x: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    format!("{:.*}", decimals, x)
}

/// Cartesian chart with linear axes.
struct Chart {
    body: String,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Chart {
    fn new(title: &str, x_range: (f64, f64), y_range: (f64, f64)) -> Self {
        let widen = |(a, b): (f64, f64)| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        let (x0, x1) = widen(x_range);
        let (y0, y1) = widen(y_range);
        let mut body = String::new();
        let _ = writeln!(
            body,
            r#"<text x="{:.2}" y="20" font-size="14" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            esc(title)
        );
        Chart {
            body,
            x0,
            x1,
            y0,
            y1,
        }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN_L + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN_B - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - MARGIN_T - MARGIN_B)
    }

    fn frame(&mut self, x_label: &str, y_label: &str, x_ticks: bool) {
        let (l, r, t, b) = (MARGIN_L, WIDTH - MARGIN_R, MARGIN_T, HEIGHT - MARGIN_B);
        let _ = writeln!(
            self.body,
            r#"<rect x="{l:.2}" y="{t:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            r - l,
            b - t
        );
        let step = tick_step(self.y1 - self.y0);
        let mut y = (self.y0 / step).ceil() * step;
        while y <= self.y1 + 1e-9 * step {
            let p = self.py(y);
            let _ = writeln!(
                self.body,
                r#"<path d="M{l:.2} {p:.2}H{:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"#,
                l + 5.0,
                l - 4.0,
                p + 4.0,
                tick_label(y, step)
            );
            y += step;
        }
        if x_ticks {
            let step = tick_step(self.x1 - self.x0);
            let mut x = (self.x0 / step).ceil() * step;
            while x <= self.x1 + 1e-9 * step {
                let p = self.px(x);
                let _ = writeln!(
                    self.body,
                    r#"<path d="M{p:.2} {b:.2}V{:.2}" stroke="black"/><text x="{p:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#,
                    b - 5.0,
                    b + 16.0,
                    tick_label(x, step)
                );
                x += step;
            }
        }
        let _ = writeln!(
            self.body,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
            (l + r) / 2.0,
            HEIGHT - 12.0,
            esc(x_label)
        );
        let _ = writeln!(
            self.body,
            r#"<text x="16" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            (t + b) / 2.0,
            (t + b) / 2.0,
            esc(y_label)
        );
    }

    fn polyline(&mut self, pts: &[(f64, f64)], color: &str, marker: bool) {
        if pts.is_empty() {
            return;
        }
        let mut d = String::new();
        for (i, &(x, y)) in pts.iter().enumerate() {
            let _ = write!(
                d,
                "{}{:.2} {:.2}",
                if i == 0 { "M" } else { "L" },
                self.px(x),
                self.py(y)
            );
        }
        let _ = writeln!(
            self.body,
            r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>"#
        );
        if marker {
            for &(x, y) in pts {
                let _ = writeln!(
                    self.body,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#,
                    self.px(x),
                    self.py(y)
                );
            }
        }
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body
        )
    }
}

/// Bands along the sampling's arc length with labeled special points and
/// the gap shaded when it is open.
pub fn band_plot(t: &DispersionTable, gap: Option<&GapReport>, title: &str) -> String {
    let arc = &t.ks.arc;
    let x_max = arc.last().copied().unwrap_or(1.0);
    let lo = t
        .energies
        .iter()
        .flatten()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let hi = t
        .energies
        .iter()
        .flatten()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let pad = 0.05 * (hi - lo).max(1e-9);
    let mut c = Chart::new(title, (0.0, x_max), (lo - pad, hi + pad));
    if let Some(g) = gap.filter(|g| g.beta > g.alpha) {
        let (ya, yb) = (c.py(g.alpha), c.py(g.beta));
        let _ = writeln!(
            c.body,
            r##"<rect x="{:.2}" y="{yb:.2}" width="{:.2}" height="{:.2}" fill="#fde68a" fill-opacity="0.6"/>"##,
            MARGIN_L,
            WIDTH - MARGIN_L - MARGIN_R,
            ya - yb
        );
        let _ = writeln!(
            c.body,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">gap {}: G = {:.4}</text>"#,
            WIDTH - MARGIN_R - 6.0,
            yb - 4.0,
            g.m,
            g.g
        );
    }
    c.frame("quasi-momentum path", "energy", t.ks.labels.is_empty());
    for (idx, label) in &t.ks.labels {
        if let Some(&x) = arc.get(*idx) {
            let p = c.px(x);
            let _ = writeln!(
                c.body,
                r##"<path d="M{p:.2} {MARGIN_T:.2}V{:.2}" stroke="#999" stroke-dasharray="3 3"/><text x="{p:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"##,
                HEIGHT - MARGIN_B,
                HEIGHT - MARGIN_B + 16.0,
                esc(label)
            );
        }
    }
    for j in 1..=t.bands {
        let pts: Vec<(f64, f64)> = arc.iter().copied().zip(t.band(j)).collect();
        let color = match gap {
            Some(g) if j == g.m || j == g.m + 1 => PALETTE[1],
            _ => PALETTE[0],
        };
        c.polyline(&pts, color, false);
    }
    c.finish()
}

/// Step potential over one period.
pub fn step_plot(v: &StepPotential, title: &str) -> String {
    let mut c = Chart::new(title, (0.0, v.period), (0.0, v.v_plus.max(1e-9) * 1.05));
    c.frame("x", "V(x)", true);
    let mut pts = Vec::new();
    let mut y = v.value_at(0.0);
    pts.push((0.0, y));
    let mut bps: Vec<f64> = v.breakpoints.clone();
    bps.sort_by(f64::total_cmp);
    for &b in &bps {
        pts.push((b, y));
        y = v.value_at(b);
        pts.push((b, y));
    }
    pts.push((v.period, y));
    c.polyline(&pts, PALETTE[0], false);
    c.finish()
}

/// Linear blend from dark blue (0) to white (`V+`).
fn shade(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let (r0, g0, b0) = (23.0, 37.0, 84.0);
    let mix = |a: f64| (a + (255.0 - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(r0), mix(g0), mix(b0))
}

/// Potential on the physical cell: grid cells are drawn as the
/// parallelograms they occupy.
pub fn potential_heatmap(v: &PotentialGrid, p: LatticeParams, title: &str) -> String {
    let basis = *basis_from_params(p)
        .or_else(|_| basis_from_params(LatticeParams::square()))
        .expect("square lattice is valid")
        .matrix();
    let n = v.n;
    let h = 1.0 / n as f64;
    let corner = |s: f64, t: f64| {
        (
            basis[(0, 0)] * s + basis[(0, 1)] * t,
            basis[(1, 0)] * s + basis[(1, 1)] * t,
        )
    };
    let cs = [
        corner(-0.5 * h, -0.5 * h),
        corner(1.0 - 0.5 * h, -0.5 * h),
        corner(-0.5 * h, 1.0 - 0.5 * h),
        corner(1.0 - 0.5 * h, 1.0 - 0.5 * h),
    ];
    let xmin = cs.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let xmax = cs.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
    let ymin = cs.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let ymax = cs.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let avail_w = WIDTH - 2.0 * MARGIN_R;
    let avail_h = HEIGHT - MARGIN_T - MARGIN_B;
    let scale = (avail_w / (xmax - xmin)).min(avail_h / (ymax - ymin));
    let ox = MARGIN_R + (avail_w - scale * (xmax - xmin)) / 2.0;
    let oy = MARGIN_T + (avail_h + scale * (ymax - ymin)) / 2.0;
    let map = |(x, y): (f64, f64)| (ox + scale * (x - xmin), oy - scale * (y - ymin));
    let mut body = String::new();
    let _ = writeln!(
        body,
        r#"<text x="{:.2}" y="20" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        esc(title)
    );
    let vp = if v.v_plus > 0.0 { v.v_plus } else { 1.0 };
    for j in 0..n {
        for i in 0..n {
            let (s, t) = ((i as f64 - 0.5) * h, (j as f64 - 0.5) * h);
            let q = [
                map(corner(s, t)),
                map(corner(s + h, t)),
                map(corner(s + h, t + h)),
                map(corner(s, t + h)),
            ];
            let c = shade(v.at(i, j) / vp);
            let _ = writeln!(
                body,
                r#"<path d="M{:.2} {:.2}L{:.2} {:.2}L{:.2} {:.2}L{:.2} {:.2}Z" fill="{c}" stroke="{c}" stroke-width="0.3"/>"#,
                q[0].0, q[0].1, q[1].0, q[1].1, q[2].0, q[2].1, q[3].0, q[3].1
            );
        }
    }
    let _ = writeln!(
        body,
        r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">dark: V = 0, white: V = {}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 14.0,
        v.v_plus
    );
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}</svg>\n"
    )
}

/// One named curve of a sweep plot.
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Curves with markers and a legend.
pub fn curve_plot(series: &[Series], title: &str, x_label: &str, y_label: &str) -> String {
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) =
        (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y1) = (0.0, 1.0, 1.0);
    }
    let mut c = Chart::new(
        title,
        (x0, x1),
        (y0, y1.max(y0) + 0.05 * (y1 - y0).max(1e-3)),
    );
    c.frame(x_label, y_label, true);
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        c.polyline(&s.points, color, true);
        let ly = MARGIN_T + 16.0 + 16.0 * i as f64;
        let lx = MARGIN_L + 12.0;
        let _ = writeln!(
            c.body,
            r#"<path d="M{lx:.2} {ly:.2}h18" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}" font-size="12">{}</text>"#,
            lx + 24.0,
            ly + 4.0,
            esc(&s.label)
        );
    }
    c.finish()
}

/// One cell of a heat map over lattice parameters; `None` marks a masked
/// (infeasible or failed) node.
pub struct HeatCell {
    pub a: f64,
    pub b: f64,
    pub value: Option<f64>,
}

/// Nodes on a regular `(a, b)` grid as colored rectangles; masked nodes are
/// hatched gray, the best node is outlined.
pub fn lattice_heatmap(cells: &[HeatCell], da: f64, db: f64, title: &str) -> String {
    let a0 = cells.iter().map(|c| c.a).fold(f64::INFINITY, f64::min) - da / 2.0;
    let a1 = cells.iter().map(|c| c.a).fold(f64::NEG_INFINITY, f64::max) + da / 2.0;
    let b0 = cells.iter().map(|c| c.b).fold(f64::INFINITY, f64::min) - db / 2.0;
    let b1 = cells.iter().map(|c| c.b).fold(f64::NEG_INFINITY, f64::max) + db / 2.0;
    let mut c = Chart::new(title, (a0, a1), (b0, b1));
    let vals: Vec<f64> = cells.iter().filter_map(|c| c.value).collect();
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let best = cells
        .iter()
        .filter(|c| c.value.is_some())
        .max_by(|x, y| x.value.partial_cmp(&y.value).unwrap());
    let _ = writeln!(
        c.body,
        r##"<defs><pattern id="mask" width="6" height="6" patternUnits="userSpaceOnUse"><rect width="6" height="6" fill="#ddd"/><path d="M0 6L6 0" stroke="#999"/></pattern></defs>"##
    );
    for cell in cells {
        let (x, y) = (c.px(cell.a - da / 2.0), c.py(cell.b + db / 2.0));
        let (w, h) = (c.px(cell.a + da / 2.0) - x, c.py(cell.b - db / 2.0) - y);
        let fill = match cell.value {
            Some(v) => {
                let t = if hi > lo { (v - lo) / (hi - lo) } else { 1.0 };
                shade(1.0 - t)
            }
            None => "url(#mask)".into(),
        };
        let _ = writeln!(
            c.body,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}"/>"#
        );
    }
    if let Some(bc) = best {
        let (x, y) = (c.px(bc.a - da / 2.0), c.py(bc.b + db / 2.0));
        let (w, h) = (c.px(bc.a + da / 2.0) - x, c.py(bc.b - db / 2.0) - y);
        let _ = writeln!(
            c.body,
            r##"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="none" stroke="#d62728" stroke-width="2"/>"##
        );
        let _ = writeln!(
            c.body,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">best G = {:.4} at ({:.3}, {:.3}); darker is larger</text>"#,
            WIDTH - MARGIN_R - 4.0,
            MARGIN_T - 4.0,
            bc.value.unwrap_or(f64::NAN),
            bc.a,
            bc.b
        );
    }
    c.frame("a", "b", true);
    c.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round() {
        assert_eq!(tick_step(10.0), 2.0);
        assert_eq!(tick_step(0.7), 0.1);
        assert_eq!(tick_label(0.30000000000000004, 0.1), "0.3");
    }
}

//! Minimal log-log SVG plots of sweep results.

use std::fmt::Write as _;
use std::path::Path;

use crate::analysis::{PointStats, SweepAxis, SweepResult};
use crate::error::{Error, Result};

use super::output::write_atomic;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

fn x_of(axis: SweepAxis, p: &PointStats) -> f64 {
    match axis {
        SweepAxis::M => p.m as f64,
        SweepAxis::Delta => p.delta,
    }
}

/// Reference curve `y0 · (g(x)/g(x0))^-rate` with `g = m` along `m` and
/// `g = 1 + δ` along `δ` (where the curves grow, so the sign flips).
fn reference(axis: SweepAxis, rate: f64, x0: f64, y0: f64, x: f64) -> f64 {
    match axis {
        SweepAxis::M => y0 * (x / x0).powf(-rate),
        SweepAxis::Delta => y0 * ((1.0 + x) / (1.0 + x0)).powf(rate),
    }
}

fn positive(v: f64) -> bool {
    v > 0.0
}

struct Scale {
    lx: (f64, f64),
    ly: (f64, f64),
}

impl Scale {
    fn px(&self, x: f64) -> f64 {
        let t = (x.log10() - self.lx.0) / (self.lx.1 - self.lx.0);
        MARGIN + t * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        let t = (y.log10() - self.ly.0) / (self.ly.1 - self.ly.0);
        HEIGHT - MARGIN - t * (HEIGHT - 2.0 * MARGIN)
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    let (a, b) = (lo.log10(), hi.log10());
    let pad = if b > a { 0.05 * (b - a) } else { 0.5 };
    (a - pad, b + pad)
}

/// Mean error per point, one polyline per curve, and two dashed reference
/// curves anchored at the first point of the first curve.
pub fn render_svg(sweep: &SweepResult) -> Result<String> {
    let series = sweep.series();
    let pts: Vec<&PointStats> = series.iter().flatten().copied().collect();
    if pts.is_empty() {
        return Err(Error::EmptyInput("sweep has no points to plot".into()));
    }
    if let Some(p) = pts
        .iter()
        .find(|p| !positive(p.mean) || !positive(x_of(sweep.axis, p)))
    {
        return Err(Error::Degenerate(format!(
            "log-log plot needs positive values, got mean {} at m={} delta={}",
            p.mean, p.m, p.delta
        )));
    }
    let axis = sweep.axis;
    let xs = pts.iter().map(|p| x_of(axis, p));
    let (xmin, xmax) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
        (a.min(x), b.max(x))
    });
    let anchor = series[0][0];
    let (x0, y0) = (x_of(axis, anchor), anchor.mean);
    let (rates, labels) = match axis {
        SweepAxis::M => ([0.5, 1.0], ["m^-1/2", "m^-1"]),
        SweepAxis::Delta => ([0.5, 1.0], ["(1+δ)^1/2", "(1+δ)"]),
    };
    let mut ys: Vec<f64> = pts.iter().map(|p| p.mean).collect();
    for r in rates {
        ys.push(reference(axis, r, x0, y0, xmax));
        ys.push(reference(axis, r, x0, y0, xmin));
    }
    let (ymin, ymax) = ys
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| {
            (a.min(y), b.max(y))
        });
    let scale = Scale {
        lx: padded(xmin, xmax),
        ly: padded(ymin, ymax),
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        s,
        r#"<path class="axes" d="M{l} {t} L{l} {b} L{r} {b}" fill="none" stroke="black"/>"#
    );
    let xlabel = match axis {
        SweepAxis::M => "m",
        SweepAxis::Delta => "δ",
    };
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{xlabel} (log)</text>"#,
        WIDTH / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{:.2}" transform="rotate(-90 15 {:.2})" text-anchor="middle">mean error (log)</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for (v, anchor) in [(xmin, "start"), (xmax, "end")] {
        let _ = writeln!(
            s,
            r#"<text class="tick" x="{:.2}" y="{:.2}" text-anchor="{anchor}">{v}</text>"#,
            scale.px(v),
            b + 18.0
        );
    }
    for v in [ymin, ymax] {
        let _ = writeln!(
            s,
            r#"<text class="tick" x="{:.2}" y="{:.2}" text-anchor="end">{v:.3e}</text>"#,
            l - 4.0,
            scale.py(v)
        );
    }

    const STEPS: usize = 32;
    for (rate, label) in rates.iter().zip(labels) {
        let path: Vec<String> = (0..=STEPS)
            .map(|i| {
                let x = 10f64
                    .powf(xmin.log10() + (xmax.log10() - xmin.log10()) * i as f64 / STEPS as f64);
                format!(
                    "{:.2},{:.2}",
                    scale.px(x),
                    scale.py(reference(axis, *rate, x0, y0, x))
                )
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="reference" points="{}" fill="none" stroke="gray" stroke-dasharray="6 4"><title>{label}</title></polyline>"#,
            path.join(" ")
        );
    }

    for (i, curve) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let head = curve[0];
        let name = match axis {
            SweepAxis::M => format!(
                "δ={} dither={}",
                head.delta,
                if head.dither { "on" } else { "off" }
            ),
            SweepAxis::Delta => format!(
                "m={} dither={}",
                head.m,
                if head.dither { "on" } else { "off" }
            ),
        };
        let coords: Vec<String> = curve
            .iter()
            .map(|p| format!("{:.2},{:.2}", scale.px(x_of(axis, p)), scale.py(p.mean)))
            .collect();
        let _ = writeln!(
            s,
            r#"<g class="series" stroke="{color}" fill="{color}"><title>{name}</title>"#
        );
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none"/>"#,
            coords.join(" ")
        );
        for c in &coords {
            let (cx, cy) = c.split_once(',').unwrap_or(("0", "0"));
            let _ = writeln!(s, r#"<circle class="marker" cx="{cx}" cy="{cy}" r="3"/>"#);
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" stroke="none">{name}</text>"#,
            r - 150.0,
            t + 16.0 * (i as f64 + 1.0)
        );
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_plot(sweep: &SweepResult, path: &Path) -> Result<()> {
    write_atomic(path, render_svg(sweep)?.as_bytes())
}

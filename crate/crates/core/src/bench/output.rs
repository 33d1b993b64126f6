use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use super::run::{AggregateRow, ResultRow};
use crate::error::Result;
use crate::recurrence::fmt_f64;

pub const CSV_HEADER: [&str; 7] = ["experiment", "method", "seed", "t", "dist", "field_evals", "predicted"];

/// Writes rows in the order given. Floats carry 17 significant digits; an
/// absent prediction is an empty field and a diverged row has `dist = inf`.
pub fn emit_csv<W: Write>(rows: &[ResultRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(CSV_HEADER)?;
    for r in rows {
        wr.write_record([
            r.experiment.clone(),
            r.method.clone(),
            r.seed.to_string(),
            r.t.to_string(),
            fmt_f64(r.dist),
            r.field_evals.to_string(),
            r.predicted.map(fmt_f64).unwrap_or_default(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];
const PANEL_W: f64 = 560.0;
const PANEL_H: f64 = 400.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 110.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Series<'a> {
    method: &'a str,
    mean: Vec<(usize, f64)>,
    theory: Vec<(usize, f64)>,
}

/// Self-contained SVG: one log-scale panel per experiment, a solid polyline
/// per method (mean distance) and a dashed one for its closed-form
/// prediction when there is one.
pub fn emit_svg<W: Write>(aggregates: &[AggregateRow], mut w: W) -> Result<()> {
    let mut panels: BTreeMap<&str, BTreeMap<&str, Series>> = BTreeMap::new();
    for a in aggregates {
        let s = panels
            .entry(&a.experiment)
            .or_default()
            .entry(&a.method)
            .or_insert_with(|| Series {
                method: &a.method,
                mean: Vec::new(),
                theory: Vec::new(),
            });
        if let Some(m) = a.mean.filter(|m| m.is_finite() && *m > 0.0) {
            s.mean.push((a.t, m));
        }
        if let Some(p) = a.predicted.filter(|p| p.is_finite() && *p > 0.0) {
            s.theory.push((a.t, p));
        }
    }
    let n_panels = panels.len().max(1);
    let width = PANEL_W * n_panels as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{PANEL_H}" viewBox="0 0 {width} {PANEL_H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="{width}" height="{PANEL_H}" fill="white"/>"#);
    if panels.is_empty() {
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">no data</text>"#, width / 2.0, PANEL_H / 2.0);
    }
    let colors: BTreeMap<&str, &str> = {
        let mut names: Vec<&str> = panels.values().flat_map(|p| p.keys().copied()).collect();
        names.sort_unstable();
        names.dedup();
        names.into_iter().zip(PALETTE.iter().copied().cycle()).collect()
    };
    for (k, (experiment, series)) in panels.iter().enumerate() {
        draw_panel(&mut svg, k as f64 * PANEL_W, experiment, series, &colors);
    }
    svg.push_str("</svg>\n");
    w.write_all(svg.as_bytes())?;
    Ok(())
}

fn draw_panel(svg: &mut String, x0: f64, title: &str, series: &BTreeMap<&str, Series>, colors: &BTreeMap<&str, &str>) {
    let pts = series.values().flat_map(|s| s.mean.iter().chain(&s.theory));
    let (mut t_max, mut lo, mut hi) = (1usize, f64::INFINITY, f64::NEG_INFINITY);
    for &(t, v) in pts {
        t_max = t_max.max(t);
        lo = lo.min(v.log10());
        hi = hi.max(v.log10());
    }
    if !lo.is_finite() {
        (lo, hi) = (-1.0, 0.0);
    }
    let (lo, mut hi) = (lo.floor(), hi.ceil());
    if hi <= lo {
        hi = lo + 1.0;
    }
    let plot_w = PANEL_W - MARGIN_L - MARGIN_R;
    let plot_h = PANEL_H - MARGIN_T - MARGIN_B;
    let px = |t: usize| x0 + MARGIN_L + plot_w * t as f64 / t_max as f64;
    let py = |v: f64| MARGIN_T + plot_h * (hi - v.log10()) / (hi - lo);

    let _ = writeln!(svg, r#"<g>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        x0 + MARGIN_L + plot_w / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r##"<rect x="{:.1}" y="{MARGIN_T}" width="{plot_w:.1}" height="{plot_h:.1}" fill="none" stroke="#333"/>"##,
        x0 + MARGIN_L
    );
    // Decades, thinned to at most ~10 labels.
    let decades = (hi - lo) as i64;
    let every = (decades / 10 + 1).max(1);
    for e in (lo as i64..=hi as i64).filter(|e| (e - lo as i64) % every == 0) {
        let y = py(10f64.powi(e as i32));
        let _ = writeln!(
            svg,
            r##"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">1e{e}</text>"##,
            x0 + MARGIN_L,
            x0 + MARGIN_L + plot_w,
            x0 + MARGIN_L - 6.0,
            y + 4.0
        );
    }
    for i in 0..=4 {
        let t = t_max * i / 4;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{t}</text>"#,
            px(t),
            MARGIN_T + plot_h + 16.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">iteration t</text>"#,
        x0 + MARGIN_L + plot_w / 2.0,
        MARGIN_T + plot_h + 32.0
    );
    let _ = writeln!(
        svg,
        r#"<text transform="translate({:.1},{:.1}) rotate(-90)" text-anchor="middle">mean distance to solution</text>"#,
        x0 + 16.0,
        MARGIN_T + plot_h / 2.0
    );

    let polyline = |svg: &mut String, pts: &[(usize, f64)], color: &str, dashed: bool| {
        if pts.is_empty() {
            return;
        }
        let coords: Vec<String> = pts.iter().map(|&(t, v)| format!("{:.2},{:.2}", px(t), py(v))).collect();
        let dash = if dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
            coords.join(" ")
        );
    };
    let mut legend_y = MARGIN_T + plot_h + 48.0;
    let mut legend_x = x0 + MARGIN_L;
    for (i, s) in series.values().enumerate() {
        let color = colors[s.method];
        polyline(svg, &s.mean, color, false);
        polyline(svg, &s.theory, color, true);
        if i > 0 && i % 2 == 0 {
            legend_y += 16.0;
            legend_x = x0 + MARGIN_L;
        }
        let label = if s.theory.is_empty() {
            escape(s.method)
        } else {
            format!("{} (dashed: theory)", escape(s.method))
        };
        let _ = writeln!(
            svg,
            r#"<line x1="{legend_x:.1}" y1="{legend_y:.1}" x2="{:.1}" y2="{legend_y:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{label}</text>"#,
            legend_x + 20.0,
            legend_x + 26.0,
            legend_y + 4.0
        );
        legend_x += plot_w / 2.0;
    }
    let _ = writeln!(svg, "</g>");
}

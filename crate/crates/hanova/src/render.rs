//! Text and SVG renderings of the classical table and the variance-component display.

use std::fmt::Write;

use hanova_core::classical::ClassicalTable;
use hanova_core::summary::{IntervalEstimate, VCSummary};

/// Width of the text display axis in characters.
pub const AXIS_CHARS: usize = 60;

fn fixed2(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.2}")).unwrap_or_default()
}

/// Fixed-width table with columns Source, Df, SS, MS, F, p.
pub fn render_classical_table(table: &ClassicalTable) -> String {
    let header = ["Source", "Df", "SS", "MS", "F", "p"];
    let rows: Vec<[String; 6]> = table
        .rows
        .iter()
        .enumerate()
        .map(|(m, r)| {
            let (f, p) = if m == table.residual { (None, None) } else { (r.f, r.p) };
            [r.label.clone(), r.df.to_string(), format!("{:.2}", r.ss), fixed2(r.ms), fixed2(f), fixed2(p)]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: [&str; 6]| {
        let mut s = format!("{:<w$}", cells[0], w = widths[0]);
        for (cell, w) in cells[1..].iter().zip(&widths[1..]) {
            let _ = write!(s, "  {cell:>w$}");
        }
        out.push_str(s.trim_end());
        out.push('\n');
    };
    line(&mut out, header);
    for row in &rows {
        line(&mut out, [&row[0], &row[1], &row[2], &row[3], &row[4], &row[5]]);
    }
    out
}

fn axis_pos(x: f64, max: f64) -> usize {
    if max.is_nan() || max <= 0.0 || !x.is_finite() {
        return 0;
    }
    let p = (x / max * (AXIS_CHARS - 1) as f64).round();
    (p.max(0.0) as usize).min(AXIS_CHARS - 1)
}

/// One axis row: `-` spans the 95% interval, `=` the 50% interval and `o`
/// marks the point estimate wherever it falls.
pub fn axis_row(iv: &IntervalEstimate, max: f64) -> String {
    let mut cells = [' '; AXIS_CHARS];
    let mut span = |lo: f64, hi: f64, glyph: char| {
        let (a, b) = (axis_pos(lo, max), axis_pos(hi, max));
        cells[a.min(b)..=a.max(b)].fill(glyph);
    };
    span(iv.q025, iv.q975, '-');
    span(iv.q25, iv.q75, '=');
    cells[axis_pos(iv.est, max)] = 'o';
    cells.iter().collect()
}

/// Axis maximum of one panel: every point and 97.5% endpoint it shows.
pub fn panel_max(summary: &VCSummary, pick: &dyn Fn(usize) -> Option<IntervalEstimate>) -> f64 {
    (0..summary.rows.len())
        .filter_map(pick)
        .flat_map(|iv| [iv.est, iv.q975])
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max)
}

fn text_panel(out: &mut String, title: &str, summary: &VCSummary, pick: &dyn Fn(usize) -> Option<IntervalEstimate>) {
    let max = panel_max(summary, pick);
    let lw = summary.rows.iter().map(|r| r.label.chars().count()).max().unwrap_or(0).max(6);
    let _ = writeln!(out, "{title}");
    let max_label = format!("{max:.3}");
    let _ = writeln!(
        out,
        "{:<lw$}  {:>4}  0{:>w$}",
        "Source",
        "df",
        max_label,
        w = AXIS_CHARS - 1
    );
    for (m, row) in summary.rows.iter().enumerate() {
        let Some(iv) = pick(m) else { continue };
        let _ = writeln!(
            out,
            "{:<lw$}  {:>4}  {}  {:.3} [{:.3}, {:.3}] [{:.3}, {:.3}]",
            row.label,
            row.df,
            axis_row(&iv, max),
            iv.est,
            iv.q25,
            iv.q75,
            iv.q025,
            iv.q975
        );
    }
}

/// Aligned text display: finite-population sds, then superpopulation sds
/// when present. Each panel has one axis from 0 to the largest value it shows.
pub fn render_vc_text(summary: &VCSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "point estimates: {}", summary.source.as_str());
    text_panel(&mut out, "finite-population sd (s)", summary, &|m| Some(summary.rows[m].s));
    if summary.rows.iter().any(|r| r.sigma.is_some()) {
        out.push('\n');
        text_panel(&mut out, "superpopulation sd (sigma)", summary, &|m| summary.rows[m].sigma);
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

const SVG_WIDTH: f64 = 720.0;
const AXIS_X0: f64 = 230.0;
const AXIS_X1: f64 = 700.0;
const ROW_H: f64 = 22.0;

fn svg_x(x: f64, max: f64) -> f64 {
    if max.is_nan() || max <= 0.0 || !x.is_finite() {
        return AXIS_X0;
    }
    AXIS_X0 + (x / max).clamp(0.0, 1.0) * (AXIS_X1 - AXIS_X0)
}

fn svg_panel(
    out: &mut String,
    top: f64,
    title: &str,
    summary: &VCSummary,
    pick: &dyn Fn(usize) -> Option<IntervalEstimate>,
) -> f64 {
    let max = panel_max(summary, pick);
    let _ = writeln!(out, r#"<text x="10.00" y="{:.2}" font-weight="bold">{}</text>"#, top + 14.0, escape(title));
    let axis_y = top + 30.0;
    let _ = writeln!(
        out,
        r#"<line x1="{AXIS_X0:.2}" y1="{axis_y:.2}" x2="{AXIS_X1:.2}" y2="{axis_y:.2}" stroke="black" stroke-width="1"/>"#
    );
    for k in 0..=4 {
        let v = max * k as f64 / 4.0;
        let x = svg_x(v, max);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{axis_y:.2}" stroke="black" stroke-width="1"/>"#,
            axis_y - 4.0
        );
        let _ = writeln!(out, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{v:.3}</text>"#, axis_y - 7.0);
    }
    let _ = writeln!(out, r#"<text x="10.00" y="{:.2}">Source</text>"#, axis_y - 7.0);
    let _ = writeln!(out, r#"<text x="200.00" y="{:.2}" text-anchor="end">df</text>"#, axis_y - 7.0);
    let mut y = axis_y;
    for (m, row) in summary.rows.iter().enumerate() {
        let Some(iv) = pick(m) else { continue };
        y += ROW_H;
        let _ = writeln!(out, r#"<text x="10.00" y="{:.2}">{}</text>"#, y + 4.0, escape(&row.label));
        let _ = writeln!(out, r#"<text x="200.00" y="{:.2}" text-anchor="end">{}</text>"#, y + 4.0, row.df);
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black" stroke-width="1"/>"#,
            svg_x(iv.q025, max),
            svg_x(iv.q975, max)
        );
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black" stroke-width="5"/>"#,
            svg_x(iv.q25, max),
            svg_x(iv.q75, max)
        );
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{y:.2}" r="3.50" fill="white" stroke="black" stroke-width="1.5"/>"#,
            svg_x(iv.est, max)
        );
    }
    y + ROW_H
}

/// SVG display; coordinates depend only on the summary, so equal input gives
/// byte-identical output.
pub fn render_vc_svg(summary: &VCSummary) -> String {
    let mut body = String::new();
    let mut y = svg_panel(&mut body, 0.0, "finite-population sd (s)", summary, &|m| Some(summary.rows[m].s));
    if summary.rows.iter().any(|r| r.sigma.is_some()) {
        y = svg_panel(&mut body, y, "superpopulation sd (sigma)", summary, &|m| summary.rows[m].sigma);
    }
    let height = y + 10.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH:.0}" height="{height:.0}" viewBox="0 0 {SVG_WIDTH:.0} {height:.0}" font-family="monospace" font-size="12">"#
    );
    let _ = writeln!(out, r#"<desc>point estimates: {}</desc>"#, summary.source.as_str());
    out.push_str(&body);
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use hanova_core::summary::{EstimateSource, VCRow};

    fn iv(est: f64, q025: f64, q25: f64, q75: f64, q975: f64) -> IntervalEstimate {
        IntervalEstimate { est, q025, q25, q75, q975 }
    }

    fn summary(rows: Vec<(&str, IntervalEstimate)>) -> VCSummary {
        VCSummary {
            rows: rows
                .into_iter()
                .map(|(l, s)| VCRow { label: l.into(), j: 3, df: 2, s, sigma: None })
                .collect(),
            source: EstimateSource::Moments,
        }
    }

    #[test]
    fn one_way_table_row() {
        let t = ClassicalTable::from_sums([("A-batch", 2, 64.0), ("residual", 3, 6.0)], 1).unwrap();
        let text = render_classical_table(&t);
        let lines: Vec<Vec<&str>> = text.lines().map(|l| l.split_whitespace().collect()).collect();
        assert_eq!(lines[0], ["Source", "Df", "SS", "MS", "F", "p"]);
        assert_eq!(lines[1], ["A-batch", "2", "64.00", "32.00", "16.00", "0.03"]);
        assert_eq!(lines[2], ["residual", "3", "6.00", "2.00"]);
    }

    #[test]
    fn residual_only_table() {
        let t = ClassicalTable::from_sums([("residual", 4, 8.0)], 0).unwrap();
        assert_eq!(render_classical_table(&t).lines().count(), 2);
    }

    #[test]
    fn zero_row_sits_at_origin() {
        let s = summary(vec![("a", iv(0.0, 0.0, 0.0, 0.0, 0.0)), ("b", iv(1.0, 0.5, 0.8, 1.2, 2.0))]);
        let row = axis_row(&s.rows[0].s, s.scale_max());
        assert_eq!(row.trim_end(), "o");
    }

    #[test]
    fn point_outside_bar_is_kept() {
        let s = summary(vec![("a", iv(0.0, 0.3, 1.0, 2.0, 4.0))]);
        let row = axis_row(&s.rows[0].s, s.scale_max());
        let o = row.find('o').unwrap();
        let bar = row.find('=').unwrap();
        assert_eq!(o, 0);
        assert!(bar > o + 1);
        assert_eq!(&row[o + 1..o + 2], " ");
    }

    #[test]
    fn svg_is_deterministic_and_escaped() {
        let s = summary(vec![("a<b", iv(1.0, 0.5, 0.8, 1.2, 2.0))]);
        let a = render_vc_svg(&s);
        assert_eq!(a, render_vc_svg(&s));
        assert!(a.contains("a&lt;b"));
        assert!(a.starts_with("<svg"));
    }
}

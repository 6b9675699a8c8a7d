//! Static log-log SVG of a sweep table.
//!
//! Points carry the CSV strings they were drawn from in `data-*` attributes.

use std::fmt::Write;

use plsagg_core::Table;

use crate::run::SweptAxis;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;

struct Series<'a> {
    label: &'a str,
    colour: &'a str,
    column: usize,
}

fn column(table: &Table, name: &str) -> usize {
    table.header().iter().position(|h| h == name).expect("sweep schema column")
}

fn parse(s: &str) -> f64 {
    s.parse().expect("report value parses")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('"', "&quot;")
}

/// Returns `None` when the table has fewer than two rows.
pub fn sweep_svg(table: &Table, axis: SweptAxis) -> Option<String> {
    let rows = table.rows();
    if rows.len() < 2 {
        return None;
    }
    let x_col = column(table, if axis == SweptAxis::N { "n" } else { "m" });
    let series = [
        Series { label: "risk", colour: "#1f77b4", column: column(table, "risk") },
        Series { label: "psi", colour: "#d62728", column: column(table, "psi") },
    ];
    let xs: Vec<f64> = rows.iter().map(|r| parse(&r[x_col]).ln()).collect();
    let ys: Vec<f64> = rows
        .iter()
        .flat_map(|r| series.iter().map(|s| parse(&r[s.column])))
        .filter(|v| *v > 0.0)
        .map(f64::ln)
        .collect();
    if ys.is_empty() {
        return None;
    }
    let (x0, x1) = bounds(&xs);
    let (y0, y1) = bounds(&ys);
    let px = |v: f64| MARGIN + (v.ln() - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |v: f64| HEIGHT - MARGIN - (v.ln() - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<line x1="{MARGIN}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{b}" stroke="black"/>"#,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{} (log scale)</text>"#,
        WIDTH / 2.0,
        HEIGHT - 20.0,
        axis.label()
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">value (log scale)</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for r in rows {
        let x = parse(&r[x_col]);
        let _ = writeln!(
            svg,
            r#"<text class="tick" x="{:.2}" y="{}" text-anchor="middle" font-size="11">{}</text>"#,
            px(x),
            HEIGHT - MARGIN + 16.0,
            escape(&r[x_col])
        );
    }
    for (k, s) in series.iter().enumerate() {
        let pts: Vec<(f64, f64, &str, &str)> = rows
            .iter()
            .filter(|r| parse(&r[s.column]) > 0.0)
            .map(|r| (px(parse(&r[x_col])), py(parse(&r[s.column])), r[x_col].as_str(), r[s.column].as_str()))
            .collect();
        let path: Vec<String> = pts.iter().map(|(x, y, _, _)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            svg,
            r#"<g class="series" data-label="{}"><polyline fill="none" stroke="{}" stroke-width="2" points="{}"/>"#,
            s.label,
            s.colour,
            path.join(" ")
        );
        for (x, y, xs, ys) in &pts {
            let _ = writeln!(
                svg,
                r#"<circle cx="{x:.2}" cy="{y:.2}" r="3.5" fill="{}" data-x="{}" data-y="{}"/>"#,
                s.colour,
                escape(xs),
                escape(ys)
            );
        }
        let _ = writeln!(svg, "</g>");
        let ly = MARGIN - 30.0 + 16.0 * k as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{lx2}" y2="{ly}" stroke="{c}" stroke-width="2"/><text x="{tx}" y="{ty}" font-size="12">{label}</text>"#,
            lx = WIDTH - 170.0,
            lx2 = WIDTH - 145.0,
            c = s.colour,
            tx = WIDTH - 138.0,
            ty = ly + 4.0,
            label = s.label
        );
    }
    svg.push_str("</svg>\n");
    Some(svg)
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use plsagg_core::report::sweep_table;
    use plsagg_core::{AggregationKind, SweepRow};

    fn rows(k: usize) -> Vec<SweepRow> {
        (0..k)
            .map(|i| {
                let m = 4usize << i;
                let psi = (m as f64).ln() / 200.0;
                SweepRow {
                    kind: AggregationKind::Ms,
                    n: 200,
                    m_dict: m,
                    d: None,
                    risk: 1.3 * psi,
                    risk_stderr: 0.1 * psi,
                    psi,
                    ratio: 1.3,
                }
            })
            .collect()
    }

    #[test]
    fn two_labelled_series_with_exact_values() {
        let table = sweep_table(&rows(4));
        let svg = sweep_svg(&table, SweptAxis::M).unwrap();
        assert!(svg.contains(r#"data-label="psi""#));
        assert!(svg.contains(r#"data-label="risk""#));
        for r in table.rows() {
            assert!(svg.contains(&format!(r#"data-x="{}" data-y="{}""#, r[2], r[6])));
            assert!(svg.contains(&format!(r#"data-x="{}" data-y="{}""#, r[2], r[4])));
        }
    }

    #[test]
    fn single_row_gives_no_plot() {
        assert!(sweep_svg(&sweep_table(&rows(1)), SweptAxis::M).is_none());
    }
}

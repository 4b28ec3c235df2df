//! Self-contained SVG plot of rejection rate against p/n.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use hetro_core::sim::SimReport;
use hetro_core::Method;

const PANEL_W: f64 = 560.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 130.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 44.0;

fn color(m: Method) -> &'static str {
    match m {
        Method::Alrt => "#1f77b4",
        Method::Cvt => "#d62728",
        Method::Bp => "#2ca02c",
        Method::White => "#9467bd",
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Cells sharing everything but the ratio form one panel.
fn panel_key(r: &SimReport) -> String {
    let s = &r.scenario;
    let mut key = format!("n={} {} {}", s.n, s.design.label(), s.model.label());
    if s.model != hetro_core::sim::Model::Null {
        let _ = write!(key, " c0={}", s.c0);
        if s.hetero_frac == hetro_core::sim::HeteroFrac::TenPercent {
            key.push_str(" p0=0.1p");
        }
    }
    key
}

/// One panel per group of cells, one polyline per test. Infeasible and
/// not-applicable cells are left out of the curves.
pub fn rejection_svg(title: &str, reports: &[SimReport]) -> String {
    let mut panels: Vec<(String, Vec<&SimReport>)> = Vec::new();
    for r in reports {
        let key = panel_key(r);
        match panels.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => panels.push((key, vec![r])),
        }
    }
    let height = MARGIN_T + panels.len().max(1) as f64 * (PANEL_H + MARGIN_B + MARGIN_T);
    let width = MARGIN_L + PANEL_W + MARGIN_R;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" font-size="15" font-weight="bold">{}</text>"#,
        MARGIN_L,
        escape(title)
    );

    for (pi, (key, cells)) in panels.iter().enumerate() {
        let top = MARGIN_T + pi as f64 * (PANEL_H + MARGIN_B + MARGIN_T) + 12.0;
        let left = MARGIN_L;
        let mut curves: BTreeMap<Method, Vec<(f64, f64)>> = BTreeMap::new();
        for r in cells {
            if r.infeasible.is_some() {
                continue;
            }
            let x = r.p as f64 / r.scenario.n as f64;
            for t in &r.tests {
                if let Some(rate) = t.rejection_rate {
                    curves.entry(t.method).or_default().push((x, rate));
                }
            }
        }
        let xmax = curves
            .values()
            .flatten()
            .map(|p| p.0)
            .fold(0.0f64, f64::max)
            .max(1e-9);
        let xmax = if xmax <= 1.0 { 1.0 } else { xmax };
        let px = |x: f64| left + x / xmax * PANEL_W;
        let py = |y: f64| top + (1.0 - y) * PANEL_H;

        let _ = writeln!(
            svg,
            r#"<text x="{left}" y="{}" font-weight="bold">{}</text>"#,
            top - 6.0,
            escape(key)
        );
        let _ = writeln!(
            svg,
            r##"<rect x="{left}" y="{top}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="#444"/>"##
        );
        for i in 0..=5 {
            let v = i as f64 / 5.0;
            let (y, x) = (py(v), px(v * xmax));
            let _ = writeln!(
                svg,
                r##"<line x1="{left}" y1="{y}" x2="{}" y2="{y}" stroke="#ddd"/><text x="{}" y="{}" text-anchor="end">{v:.1}</text>"##,
                left + PANEL_W,
                left - 6.0,
                y + 4.0
            );
            let _ = writeln!(
                svg,
                r##"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="#444"/><text x="{x}" y="{}" text-anchor="middle">{:.2}</text>"##,
                top + PANEL_H,
                top + PANEL_H + 5.0,
                top + PANEL_H + 18.0,
                v * xmax
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">p/n</text>"#,
            left + PANEL_W / 2.0,
            top + PANEL_H + 34.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" transform="rotate(-90 {} {})">rejection rate</text>"#,
            left - 40.0,
            top + PANEL_H / 2.0,
            left - 40.0,
            top + PANEL_H / 2.0
        );
        if let Some(alpha) = cells.first().map(|r| r.scenario.alpha) {
            let y = py(alpha);
            let _ = writeln!(
                svg,
                r##"<line x1="{left}" y1="{y}" x2="{}" y2="{y}" stroke="#888" stroke-dasharray="4 3"/>"##,
                left + PANEL_W
            );
        }
        for (li, (m, pts)) in curves.iter().enumerate() {
            let mut pts = pts.clone();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let path: Vec<String> = pts
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            let c = color(*m);
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="2"/>"#,
                path.join(" ")
            );
            for &(x, y) in &pts {
                let _ = writeln!(
                    svg,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{c}"/>"#,
                    px(x),
                    py(y)
                );
            }
            let ly = top + 14.0 + li as f64 * 18.0;
            let lx = left + PANEL_W + 14.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{c}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
                lx + 22.0,
                lx + 28.0,
                ly + 4.0,
                m.label()
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

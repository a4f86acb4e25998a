use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::sweep::{sweep_csv, SweepRow};
use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Svg,
}

impl ReportFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        path.extension()?.to_str()?.to_ascii_lowercase().parse().ok()
    }
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "svg" => Ok(ReportFormat::Svg),
            _ => Err(format!("unknown report format {s:?} (csv, svg)")),
        }
    }
}

const METRICS: [(&str, &str); 4] = [
    ("accuracy", "#4e79a7"),
    ("precision", "#f28e2b"),
    ("recall", "#59a14f"),
    ("F1", "#e15759"),
];

fn metric_values(r: &SweepRow) -> Option<[f64; 4]> {
    Some([r.accuracy?, r.precision_macro?, r.recall_macro?, r.f1_macro?])
}

/// Mean metrics of successful rows for each distinct value of one parameter,
/// in order of first appearance. Values whose rows all failed are skipped.
fn grouped(rows: &[SweepRow], key: impl Fn(&SweepRow) -> String) -> Vec<(String, [f64; 4])> {
    let mut groups: Vec<(String, [f64; 4], usize)> = Vec::new();
    for r in rows {
        let k = key(r);
        let idx = match groups.iter().position(|g| g.0 == k) {
            Some(i) => i,
            None => {
                groups.push((k, [0.0; 4], 0));
                groups.len() - 1
            }
        };
        if let Some(m) = metric_values(r) {
            let g = &mut groups[idx];
            for (acc, v) in g.1.iter_mut().zip(m) {
                *acc += v;
            }
            g.2 += 1;
        }
    }
    groups
        .into_iter()
        .filter(|g| g.2 > 0)
        .map(|(k, sums, n)| (k, sums.map(|s| s / n as f64)))
        .collect()
}

const PANEL_W: f64 = 300.0;
const PANEL_H: f64 = 220.0;
const MARGIN: f64 = 40.0;

/// Grouped bar chart: one panel per swept parameter, one group per value and
/// one bar per metric.
pub fn render_svg(rows: &[SweepRow]) -> Result<String, HarnessError> {
    if rows.is_empty() {
        return Err(HarnessError::EmptyReport);
    }
    let panels = [
        ("beta", grouped(rows, |r| r.beta.to_string())),
        ("d", grouped(rows, |r| r.d.to_string())),
        ("w", grouped(rows, |r| r.w.to_string())),
    ];
    let width = MARGIN + panels.len() as f64 * (PANEL_W + MARGIN);
    let height = PANEL_H + 3.0 * MARGIN;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    for (p, (name, groups)) in panels.iter().enumerate() {
        let x0 = MARGIN + p as f64 * (PANEL_W + MARGIN);
        let y0 = MARGIN;
        let base = y0 + PANEL_H;
        let _ = writeln!(s, r#"<g class="panel" data-parameter="{name}">"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{name}</text>"#,
            x0 + PANEL_W / 2.0,
            y0 - 12.0
        );
        for tick in 0..=4 {
            let v = tick as f64 / 4.0;
            let y = base - v * PANEL_H;
            let _ = writeln!(
                s,
                r##"<line x1="{x0}" y1="{y}" x2="{}" y2="{y}" stroke="#ddd"/><text x="{}" y="{}" text-anchor="end">{v}</text>"##,
                x0 + PANEL_W,
                x0 - 4.0,
                y + 4.0
            );
        }
        let gw = PANEL_W / groups.len().max(1) as f64;
        let bw = gw * 0.8 / METRICS.len() as f64;
        for (g, (label, values)) in groups.iter().enumerate() {
            let gx = x0 + g as f64 * gw + gw * 0.1;
            for (m, (&v, (metric, colour))) in values.iter().zip(METRICS).enumerate() {
                let h = v.clamp(0.0, 1.0) * PANEL_H;
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{colour}"><title>{name}={label} {metric}={v:.4}</title></rect>"#,
                    gx + m as f64 * bw,
                    base - h,
                    bw,
                    h
                );
            }
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{}" text-anchor="middle">{label}</text>"#,
                gx + gw * 0.4,
                base + 14.0
            );
        }
        let _ = writeln!(
            s,
            r##"<line x1="{x0}" y1="{base}" x2="{}" y2="{base}" stroke="#333"/></g>"##,
            x0 + PANEL_W
        );
    }
    for (m, (metric, colour)) in METRICS.iter().enumerate() {
        let x = MARGIN + m as f64 * 90.0;
        let y = height - MARGIN / 2.0;
        let _ = writeln!(
            s,
            r#"<rect x="{x}" y="{}" width="10" height="10" fill="{colour}"/><text x="{}" y="{y}">{metric}</text>"#,
            y - 9.0,
            x + 14.0
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Writes sweep rows as CSV or as an SVG chart.
pub fn emit_report(rows: &[SweepRow], format: ReportFormat, path: impl AsRef<Path>) -> Result<(), HarnessError> {
    let path = path.as_ref();
    let text = match format {
        ReportFormat::Csv => sweep_csv(rows),
        ReportFormat::Svg => render_svg(rows)?,
    };
    fs::write(path, text).map_err(|source| HarnessError::Write {
        path: path.to_path_buf(),
        source,
    })
}

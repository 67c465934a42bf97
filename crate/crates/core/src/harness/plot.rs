//! Static SVG plots of harness CSV output.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limits::beta_cdf;

use super::run::{SIMULATE_HEADER, VERIFIER_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlotKind {
    /// ECDF of undershoot/level from a `simulate` CSV, against Beta(α, 1−α).
    CdfOverlay,
    /// Verifier ratio against s on a log axis, with the reference line at 1.
    RatioVsS,
}

impl PlotKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "cdf-overlay" => Ok(PlotKind::CdfOverlay),
            "ratio-vs-s" => Ok(PlotKind::RatioVsS),
            other => Err(Error::UnknownName {
                what: "plot kind",
                given: other.to_string(),
                suggestion: if strsim::jaro_winkler(other, "cdf-overlay") >= strsim::jaro_winkler(other, "ratio-vs-s") {
                    "cdf-overlay".into()
                } else {
                    "ratio-vs-s".into()
                },
            }),
        }
    }
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 56.0;

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn parse(text: &str, expected: &[&str]) -> Result<Table> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::Format("CSV is empty".into()))?
            .split(',')
            .map(str::to_string)
            .collect();
        if header != expected {
            return Err(Error::Format(format!(
                "CSV header `{}` does not match the expected schema `{}`",
                header.join(","),
                expected.join(",")
            )));
        }
        let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
        if rows.is_empty() {
            return Err(Error::Format("CSV has no data rows".into()));
        }
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != header.len()) {
            return Err(Error::Format(format!(
                "data row {} has {} fields, expected {}",
                i + 1,
                r.len(),
                header.len()
            )));
        }
        Ok(Table { header, rows })
    }

    fn column(&self, name: &str) -> usize {
        self.header.iter().position(|h| h == name).expect("schema checked")
    }

    fn numbers(&self, name: &str) -> Result<Vec<f64>> {
        let k = self.column(name);
        self.rows
            .iter()
            .map(|r| {
                r[k].parse::<f64>()
                    .map_err(|_| Error::Format(format!("column {name}: `{}` is not a number", r[k])))
            })
            .collect()
    }
}

fn svg_open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle">{title}</text>"#, W / 2.0);
    let (x0, y0, x1, y1) = (MARGIN, H - MARGIN, W - MARGIN / 2.0, MARGIN / 2.0);
    let _ = writeln!(
        s,
        r#"<path class="axes" d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" fill="none" stroke="black"/>"#
    );
    s
}

fn path(points: &[(f64, f64)], class: &str, stroke: &str) -> String {
    let mut d = String::new();
    for (i, (x, y)) in points.iter().enumerate() {
        let _ = write!(d, "{}{:.2},{:.2} ", if i == 0 { 'M' } else { 'L' }, x, y);
    }
    format!(
        "<path class=\"{class}\" d=\"{}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"1.5\"/>\n",
        d.trim_end()
    )
}

/// Linear map of [lo, hi] onto the plot area.
fn scale(v: f64, lo: f64, hi: f64, out_lo: f64, out_hi: f64) -> f64 {
    if hi == lo {
        0.5 * (out_lo + out_hi)
    } else {
        out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo)
    }
}

fn px(u: f64) -> f64 {
    scale(u, 0.0, 1.0, MARGIN, W - MARGIN / 2.0)
}

fn py(u: f64) -> f64 {
    scale(u, 0.0, 1.0, H - MARGIN, MARGIN / 2.0)
}

fn cdf_overlay(text: &str, alpha: f64) -> Result<String> {
    let t = Table::parse(text, SIMULATE_HEADER)?;
    let under = t.numbers("undershoot")?;
    let level = t.numbers("level")?;
    let mut ratios: Vec<f64> = under.iter().zip(&level).map(|(u, s)| u / s).collect();
    ratios.sort_by(f64::total_cmp);
    let n = ratios.len() as f64;

    let mut ecdf = vec![(px(0.0), py(0.0))];
    for (i, r) in ratios.iter().enumerate() {
        ecdf.push((px(*r), py(i as f64 / n)));
        ecdf.push((px(*r), py((i + 1) as f64 / n)));
    }
    ecdf.push((px(1.0), py(1.0)));
    let beta: Vec<(f64, f64)> = (0..=200)
        .map(|k| {
            let u = k as f64 / 200.0;
            beta_cdf(alpha, u).map(|f| (px(u), py(f)))
        })
        .collect::<Result<_>>()?;

    let mut s = svg_open(&format!("Undershoot ratio ECDF vs Beta({alpha}, {})", 1.0 - alpha));
    for k in 0..=4 {
        let u = k as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{u}</text>"#, px(u), H - MARGIN + 16.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{u}</text>"#, MARGIN - 6.0, py(u) + 4.0);
    }
    s.push_str(&path(&ecdf, "ecdf", "steelblue"));
    s.push_str(&path(&beta, "beta-cdf", "firebrick"));
    s.push_str("</svg>\n");
    Ok(s)
}

fn ratio_vs_s(text: &str) -> Result<String> {
    let t = Table::parse(text, VERIFIER_HEADER)?;
    let s_vals = t.numbers("s")?;
    let ratios = t.numbers("ratio")?;
    let mut pts: Vec<(f64, f64)> = s_vals.iter().copied().zip(ratios.iter().copied()).collect();
    if pts.iter().any(|(s, _)| !(*s > 0.0)) {
        return Err(Error::Format("ratio-vs-s needs positive levels".into()));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (lx_lo, lx_hi) = (pts[0].0.log10().floor(), pts[pts.len() - 1].0.log10().ceil());
    let (lx_lo, lx_hi) = if lx_lo == lx_hi { (lx_lo - 1.0, lx_hi + 1.0) } else { (lx_lo, lx_hi) };
    let y_lo = pts.iter().map(|p| p.1).fold(1.0f64, f64::min).min(0.8) - 0.05;
    let y_hi = pts.iter().map(|p| p.1).fold(1.0f64, f64::max).max(1.2) + 0.05;
    let sx = |s: f64| px(scale(s.log10(), lx_lo, lx_hi, 0.0, 1.0));
    let sy = |r: f64| py(scale(r, y_lo, y_hi, 0.0, 1.0));

    let mut out = svg_open("Ratio to target vs level s");
    for e in (lx_lo as i32)..=(lx_hi as i32) {
        let x = sx(10f64.powi(e));
        let _ = writeln!(out, r#"<text class="x-tick" x="{x:.2}" y="{:.2}" text-anchor="middle">1e{e}</text>"#, H - MARGIN + 16.0);
    }
    for k in 0..=4 {
        let r = y_lo + (y_hi - y_lo) * k as f64 / 4.0;
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{r:.3}</text>"#, MARGIN - 6.0, sy(r) + 4.0);
    }
    let _ = writeln!(
        out,
        r#"<line class="reference" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
        px(0.0),
        sy(1.0),
        px(1.0),
        sy(1.0)
    );
    let mapped: Vec<(f64, f64)> = pts.iter().map(|&(s, r)| (sx(s), sy(r))).collect();
    out.push_str(&path(&mapped, "ratio", "steelblue"));
    for (x, y) in &mapped {
        let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="steelblue"/>"#);
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Render `csv` as an SVG document. `alpha` is required for cdf-overlay.
pub fn render_plot(csv: &str, kind: PlotKind, alpha: Option<f64>) -> Result<String> {
    match kind {
        PlotKind::CdfOverlay => {
            let alpha = alpha.ok_or_else(|| Error::Parameter("cdf-overlay needs alpha".into()))?;
            cdf_overlay(csv, alpha)
        }
        PlotKind::RatioVsS => ratio_vs_s(csv),
    }
}

pub fn emit_plot(csv_path: &Path, kind: PlotKind, alpha: Option<f64>, out: &Path) -> Result<()> {
    let text = std::fs::read_to_string(csv_path)?;
    std::fs::write(out, render_plot(&text, kind, alpha)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_data_is_a_format_error() {
        let header = SIMULATE_HEADER.join(",") + "\n";
        assert!(matches!(render_plot(&header, PlotKind::CdfOverlay, Some(0.5)), Err(Error::Format(_))));
        assert!(matches!(render_plot("", PlotKind::RatioVsS, None), Err(Error::Format(_))));
        assert!(matches!(render_plot(&header, PlotKind::RatioVsS, None), Err(Error::Format(_))));
    }

    #[test]
    fn overlay_has_both_curves() {
        let csv = format!("{}\n0,1,0.5,0.25,0.1,false\n1,1,0.7,0.9,0.2,false\n", SIMULATE_HEADER.join(","));
        let svg = render_plot(&csv, PlotKind::CdfOverlay, Some(0.5)).unwrap();
        assert!(svg.contains(r#"class="ecdf""#));
        assert!(svg.contains(r#"class="beta-cdf""#));
    }

    #[test]
    fn unknown_kind_suggests() {
        let e = PlotKind::parse("ratio-vs").unwrap_err();
        assert!(e.to_string().contains("ratio-vs-s"));
    }
}

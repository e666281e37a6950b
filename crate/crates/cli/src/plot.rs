//! Deterministic SVG scatter plots of embedding columns.

use std::fmt::Write as _;

use multinet_core::tensor::Matrix;
use multinet_core::{Error, Result};

const PANEL: f64 = 320.0;
const MARGIN: f64 = 36.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];
const UNLABELED: &str = "#4d4d4d";
const NOISE: &str = "#bdbdbd";

/// 0-based columns drawn for `paxis` eigenvectors: 1..=paxis.
pub fn plotted_columns(paxis: usize) -> Vec<usize> {
    (1..=paxis).collect()
}

/// Column pairs, one per panel.
pub fn panels(paxis: usize) -> Vec<(usize, usize)> {
    let cols = plotted_columns(paxis);
    let mut out = Vec::new();
    for a in 0..cols.len() {
        for b in (a + 1)..cols.len() {
            out.push((cols[a], cols[b]));
        }
    }
    out
}

pub fn check_columns(m: &Matrix, paxis: usize) -> Result<()> {
    if paxis < 2 {
        return Err(Error::Argument(format!("paxis must be at least 2, got {paxis}")));
    }
    let need = paxis + 1;
    if m.ncols() < need {
        return Err(Error::Validation(format!(
            "paxis={paxis} plots eigenvectors 2..={} and needs an embedding with at least {need} columns, got {}",
            paxis + 1,
            m.ncols()
        )));
    }
    Ok(())
}

/// Palette index per item. Integer labels use their value; other labels use
/// their order of first appearance. Negative integers are drawn as noise.
fn colors(labels: Option<&[String]>, n: usize) -> Vec<&'static str> {
    let Some(labels) = labels else {
        return vec![UNLABELED; n];
    };
    let mut seen: Vec<&str> = Vec::new();
    labels
        .iter()
        .map(|l| match l.parse::<i64>() {
            Ok(v) if v < 0 => NOISE,
            Ok(v) => PALETTE[(v as usize) % PALETTE.len()],
            Err(_) => {
                let idx = match seen.iter().position(|s| *s == l.as_str()) {
                    Some(i) => i,
                    None => {
                        seen.push(l);
                        seen.len() - 1
                    }
                };
                PALETTE[idx % PALETTE.len()]
            }
        })
        .collect()
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() || !hi.is_finite() {
        return (-1.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

pub fn render_svg(m: &Matrix, paxis: usize, labels: Option<&[String]>) -> Result<String> {
    check_columns(m, paxis)?;
    if let Some(l) = labels {
        if l.len() != m.nrows() {
            return Err(Error::Validation(format!(
                "{} labels for an embedding with {} rows",
                l.len(),
                m.nrows()
            )));
        }
    }
    let pairs = panels(paxis);
    let grid = (pairs.len() as f64).sqrt().ceil() as usize;
    let rows = pairs.len().div_ceil(grid);
    let width = grid as f64 * PANEL;
    let height = rows as f64 * PANEL;
    let fill = colors(labels, m.nrows());

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    )
    .unwrap();
    writeln!(s, r##"<rect width="{width}" height="{height}" fill="#ffffff"/>"##).unwrap();
    for (p, &(cx, cy)) in pairs.iter().enumerate() {
        let ox = (p % grid) as f64 * PANEL;
        let oy = (p / grid) as f64 * PANEL;
        let inner = PANEL - 2.0 * MARGIN;
        let (x0, x1) = range(m.column(cx).iter().copied());
        let (y0, y1) = range(m.column(cy).iter().copied());
        writeln!(s, r#"<g transform="translate({ox},{oy})">"#).unwrap();
        writeln!(
            s,
            r##"<rect x="{MARGIN}" y="{MARGIN}" width="{inner}" height="{inner}" fill="none" stroke="#000000"/>"##
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">eigenvector {}</text>"#,
            PANEL / 2.0,
            PANEL - 10.0,
            cx + 1
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="12" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 12 {})">eigenvector {}</text>"#,
            PANEL / 2.0,
            PANEL / 2.0,
            cy + 1
        )
        .unwrap();
        for r in 0..m.nrows() {
            let px = MARGIN + (m[(r, cx)] - x0) / (x1 - x0) * inner;
            let py = MARGIN + inner - (m[(r, cy)] - y0) / (y1 - y0) * inner;
            writeln!(s, r#"<circle cx="{px:.2}" cy="{py:.2}" r="3" fill="{}"/>"#, fill[r]).unwrap();
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// The plotted columns (and labels, when given) as CSV, keeping the
/// embedding's `dim<c>` column names.
pub fn plotted_csv(m: &Matrix, paxis: usize, labels: Option<&[String]>) -> Result<String> {
    check_columns(m, paxis)?;
    let cols = plotted_columns(paxis);
    let mut header: Vec<String> = cols.iter().map(|c| format!("dim{c}")).collect();
    if labels.is_some() {
        header.push("label".into());
    }
    let mut s = header.join(",");
    s.push('\n');
    for r in 0..m.nrows() {
        let mut row: Vec<String> = cols.iter().map(|&c| m[(r, c)].to_string()).collect();
        if let Some(l) = labels {
            row.push(l[r].clone());
        }
        s.push_str(&row.join(","));
        s.push('\n');
    }
    Ok(s)
}

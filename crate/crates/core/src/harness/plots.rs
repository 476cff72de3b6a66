//! Per-curve CSV files and self-contained SVG line charts.
//!
//! Rate CSVs use the columns `x,rate,wilson_lo,wilson_hi,trials`; the
//! complexity CSV uses `x,log2_x,sample_complexity` with an empty last field
//! when the threshold was never reached.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::sweep::{CellKey, ExperimentResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlotKind {
    RateVsT,
    ComplexityVsP,
    RateVsEta,
}

impl PlotKind {
    pub fn name(&self) -> &'static str {
        match self {
            PlotKind::RateVsT => "rate-vs-T",
            PlotKind::ComplexityVsP => "complexity-vs-p",
            PlotKind::RateVsEta => "rate-vs-eta",
        }
    }
}

/// One polyline: label plus `(x, y)` points sorted by `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    csv: String,
}

fn label_of(k: &CellKey, skip_horizon: bool, skip_eta: bool) -> String {
    let mut parts = vec![format!("p{}", k.p), format!("k{}", k.k)];
    if !skip_eta {
        parts.push(format!("eta{}", k.eta));
    }
    if !skip_horizon {
        parts.push(format!("T{}", k.horizon));
    }
    parts.push(k.ensemble.name().to_string());
    parts.push(format!("m{}", k.m));
    parts.join("_")
}

/// Groups cells into curves for `kind`.
pub fn curves(result: &ExperimentResult, kind: PlotKind) -> Vec<Curve> {
    match kind {
        PlotKind::RateVsT | PlotKind::RateVsEta => {
            let by_t = kind == PlotKind::RateVsT;
            let mut groups: Vec<(String, Vec<(f64, &super::sweep::CellResult)>)> = Vec::new();
            for c in result.cells.iter().filter(|c| c.failure.is_none() && c.trials > 0) {
                let label = label_of(&c.key, by_t, !by_t);
                let x = if by_t { c.key.horizon } else { c.key.eta };
                match groups.iter_mut().find(|(l, _)| *l == label) {
                    Some((_, v)) => v.push((x, c)),
                    None => groups.push((label, vec![(x, c)])),
                }
            }
            groups
                .into_iter()
                .map(|(label, mut v)| {
                    v.sort_by(|a, b| a.0.total_cmp(&b.0));
                    let mut csv = String::from("x,rate,wilson_lo,wilson_hi,trials\n");
                    for (x, c) in &v {
                        let _ = writeln!(csv, "{x},{},{},{},{}", c.rate, c.wilson.lo, c.wilson.hi, c.trials);
                    }
                    Curve { label, points: v.iter().map(|(x, c)| (*x, c.rate)).collect(), csv }
                })
                .collect()
        }
        PlotKind::ComplexityVsP => {
            type Group = (String, Vec<(usize, Option<f64>)>);
            let mut groups: Vec<Group> = Vec::new();
            for c in &result.complexity {
                let label = format!("k{}_eta{}_{}_m{}", c.k, c.eta, c.ensemble.name(), c.m);
                match groups.iter_mut().find(|(l, _)| *l == label) {
                    Some((_, v)) => v.push((c.p, c.sample_complexity)),
                    None => groups.push((label, vec![(c.p, c.sample_complexity)])),
                }
            }
            groups
                .into_iter()
                .map(|(label, mut v)| {
                    v.sort_by_key(|a| a.0);
                    let mut csv = String::from("x,log2_x,sample_complexity\n");
                    for (p, sc) in &v {
                        let _ =
                            writeln!(csv, "{p},{},{}", (*p as f64).log2(), sc.map_or(String::new(), |s| s.to_string()));
                    }
                    let points = v.iter().filter_map(|(p, sc)| sc.map(|s| ((*p as f64).log2(), s))).collect();
                    Curve { label, points, csv }
                })
                .collect()
        }
    }
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

/// Renders curves as a static SVG; rate plots fix the y axis to `[0, 1]`.
pub fn render_svg(curves: &[Curve], kind: PlotKind) -> String {
    let (x0, x1) = span(curves.iter().flat_map(|c| c.points.iter().map(|p| p.0)));
    let (y0, y1) = match kind {
        PlotKind::ComplexityVsP => span(curves.iter().flat_map(|c| c.points.iter().map(|p| p.1))),
        _ => (0.0, 1.0),
    };
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);
    let (xlabel, ylabel) = match kind {
        PlotKind::RateVsT => ("n eta", "success rate"),
        PlotKind::RateVsEta => ("eta", "success rate"),
        PlotKind::ComplexityVsP => ("log2 p", "sample complexity"),
    };
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{m} {t} V{b} H{r}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{xlabel}</text>"#,
        W / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.2}" font-size="12" transform="rotate(-90 14 {:.2})" text-anchor="middle">{ylabel}</text>"#,
        H / 2.0,
        H / 2.0
    );
    for (v, anchor_y) in [(x0, H - MARGIN + 16.0), (x1, H - MARGIN + 16.0)] {
        let _ =
            writeln!(s, r#"<text x="{:.2}" y="{anchor_y:.2}" font-size="10" text-anchor="middle">{v}</text>"#, px(v));
    }
    for v in [y0, y1] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{v}</text>"#,
            MARGIN - 4.0,
            py(v) + 3.0
        );
    }
    for (i, c) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = c.points.iter().map(|&(x, y)| format!("{:.3},{:.3}", px(x), py(y))).collect();
        let _ =
            writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        for &(x, y) in &c.points {
            let _ = writeln!(s, r#"<circle cx="{:.3}" cy="{:.3}" r="2.5" fill="{color}"/>"#, px(x), py(y));
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" fill="{color}">{}</text>"#,
            W - MARGIN - 150.0,
            MARGIN + 12.0 * i as f64,
            c.label
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Writes `<kind>_<curve>.csv` per curve and `<kind>.svg` into `dir`; returns the written paths.
pub fn emit_plots(result: &ExperimentResult, kind: PlotKind, dir: &Path) -> Result<Vec<PathBuf>> {
    let cs = curves(result, kind);
    if cs.is_empty() {
        return Err(Error::EmptyResult("no completed cells to plot"));
    }
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for c in &cs {
        let path = dir.join(format!("{}_{}.csv", kind.name(), c.label));
        fs::write(&path, &c.csv)?;
        written.push(path);
    }
    let svg = dir.join(format!("{}.svg", kind.name()));
    fs::write(&svg, render_svg(&cs, kind))?;
    written.push(svg);
    Ok(written)
}

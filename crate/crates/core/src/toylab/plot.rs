//! CSV, SVG and JSON artifacts for the toy experiment.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::eval::ManifoldFit;
use super::swissroll::SwissRollSample;
use super::train::LossKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ToyResult {
    pub kind: LossKind,
    pub fit: ManifoldFit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KindStats {
    pub mean_dist: f64,
    pub max_dist: f64,
    pub mean_lr_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToyStats {
    pub schema: u32,
    pub seed: u64,
    #[serde(flatten)]
    pub kinds: BTreeMap<LossKind, KindStats>,
}

impl ToyStats {
    pub fn new(seed: u64, results: &[ToyResult]) -> Self {
        Self {
            schema: 1,
            seed,
            kinds: results
                .iter()
                .map(|r| {
                    (
                        r.kind,
                        KindStats {
                            mean_dist: r.fit.mean_dist,
                            max_dist: r.fit.max_dist,
                            mean_lr_residual: r.fit.mean_lr_residual,
                        },
                    )
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyArtifacts {
    pub csv: PathBuf,
    pub svg: PathBuf,
    pub json: PathBuf,
}

pub fn toy_csv(results: &[ToyResult]) -> String {
    let mut out = String::from("loss_kind,x,y1,y2,curve_distance\n");
    for r in results {
        for p in &r.fit.points {
            writeln!(out, "{},{},{},{},{}", r.kind, p.x, p.y[0], p.y[1], p.curve_distance).unwrap();
        }
    }
    out
}

const SVG_SIZE: f64 = 640.0;
const SVG_EXTENT: f64 = 16.0;
const MAX_DATA_POINTS: usize = 3000;

fn to_px(v: [f64; 2]) -> (f64, f64) {
    let s = SVG_SIZE / (2.0 * SVG_EXTENT);
    ((v[0] + SVG_EXTENT) * s, (SVG_EXTENT - v[1]) * s)
}

fn marker(kind: LossKind, (x, y): (f64, f64)) -> String {
    match kind {
        LossKind::Mae => format!(
            r##"<polygon points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="#1e90ff"/>"##,
            x,
            y - 6.0,
            x - 5.5,
            y + 4.0,
            x + 5.5,
            y + 4.0
        ),
        LossKind::Mse => {
            let pts: Vec<String> = (0..10)
                .map(|i| {
                    let r = if i % 2 == 0 { 7.0 } else { 3.0 };
                    let a = std::f64::consts::PI * (i as f64 / 5.0 - 0.5);
                    format!("{:.2},{:.2}", x + r * a.cos(), y + r * a.sin())
                })
                .collect();
            format!(r##"<polygon points="{}" fill="#32cd32"/>"##, pts.join(" "))
        }
        LossKind::Bbl => format!(
            r##"<path d="M{:.2} {:.2}H{:.2}M{:.2} {:.2}V{:.2}" stroke="#ff0000" stroke-width="2.5"/>"##,
            x - 6.0,
            y,
            x + 6.0,
            x,
            y - 6.0,
            y + 6.0
        ),
    }
}

/// Scatter of the training targets in grey plus each model's grid estimates.
pub fn toy_svg(data: &[SwissRollSample], results: &[ToyResult]) -> String {
    let mut out = String::new();
    writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{s}" height="{s}" viewBox="0 0 {s} {s}">
<rect width="{s}" height="{s}" fill="white"/>"#,
        s = SVG_SIZE
    )
    .unwrap();
    out.push_str("<g fill=\"#b0b0b0\">\n");
    let stride = data.len().div_ceil(MAX_DATA_POINTS).max(1);
    for s in data.iter().step_by(stride) {
        let (x, y) = to_px(s.y);
        writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="1.5"/>"#).unwrap();
    }
    out.push_str("</g>\n");
    for r in results {
        writeln!(out, r#"<g class="{}">"#, r.kind).unwrap();
        for p in &r.fit.points {
            out.push_str(&marker(r.kind, to_px(p.y)));
            out.push('\n');
        }
        out.push_str("</g>\n");
    }
    let legend = [(LossKind::Mae, "MAE"), (LossKind::Mse, "MSE"), (LossKind::Bbl, "BBL")];
    for (i, (kind, label)) in legend.iter().enumerate() {
        if results.iter().any(|r| r.kind == *kind) {
            let y = 24.0 + 20.0 * i as f64;
            out.push_str(&marker(*kind, (20.0, y)));
            writeln!(
                out,
                r#"<text x="34" y="{:.0}" font-family="sans-serif" font-size="13">{label}</text>"#,
                y + 4.0
            )
            .unwrap();
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Writes `toy.csv`, `toy.svg` and `toy_stats.json` into `dir`.
pub fn export_toy_plot(
    data: &[SwissRollSample],
    results: &[ToyResult],
    seed: u64,
    dir: impl AsRef<Path>,
) -> Result<ToyArtifacts> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let artifacts = ToyArtifacts {
        csv: dir.join("toy.csv"),
        svg: dir.join("toy.svg"),
        json: dir.join("toy_stats.json"),
    };
    let write = |path: &Path, body: String| fs::write(path, body).map_err(|e| Error::io(path, e));
    write(&artifacts.csv, toy_csv(results))?;
    write(&artifacts.svg, toy_svg(data, results))?;
    let mut json = serde_json::to_string_pretty(&ToyStats::new(seed, results))?;
    json.push('\n');
    write(&artifacts.json, json)?;
    Ok(artifacts)
}

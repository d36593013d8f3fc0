use serde::{Deserialize, Serialize};

use super::mlp::MlpModel;
use super::swissroll::{downsample_target, SwissRoll};

/// LR test inputs `-7, -6, ..., 7`.
pub fn default_grid() -> Vec<f64> {
    (-7..=7).map(f64::from).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPrediction {
    pub x: f64,
    pub y: [f64; 2],
    pub curve_distance: f64,
    /// `|(y1 + y2) / 2 - x|`: how far the estimate is from reproducing its input.
    pub lr_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldFit {
    pub points: Vec<GridPrediction>,
    pub mean_dist: f64,
    pub max_dist: f64,
    pub mean_lr_residual: f64,
}

pub fn eval_manifold_fit(model: &MlpModel, roll: &SwissRoll, grid: &[f64]) -> ManifoldFit {
    let points: Vec<GridPrediction> = grid
        .iter()
        .map(|&x| {
            let out = model.forward(&[x]);
            let y = [out[0], out[1]];
            GridPrediction {
                x,
                y,
                curve_distance: roll.distance_to_curve(y).0,
                lr_residual: (downsample_target(y) - x).abs(),
            }
        })
        .collect();
    let n = points.len().max(1) as f64;
    ManifoldFit {
        mean_dist: points.iter().map(|p| p.curve_distance).sum::<f64>() / n,
        max_dist: points.iter().map(|p| p.curve_distance).fold(0.0, f64::max),
        mean_lr_residual: points.iter().map(|p| p.lr_residual).sum::<f64>() / n,
        points,
    }
}

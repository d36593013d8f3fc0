//! Swiss-roll toy study: one-to-one (MAE, MSE) versus one-to-many (best-buddy)
//! supervision of a small regressor whose HR targets are multi-modal given the
//! LR input.

mod eval;
mod mlp;
mod plot;
mod swissroll;
mod train;

pub use eval::{default_grid, eval_manifold_fit, GridPrediction, ManifoldFit};
pub use mlp::{Adam, ForwardTrace, MlpModel};
pub use plot::{export_toy_plot, toy_csv, toy_svg, KindStats, ToyArtifacts, ToyResult, ToyStats};
pub use swissroll::{downsample_target, gen_swiss_roll, SwissRoll, SwissRollSample};
pub use train::{toy_buddy, toy_buddy_index, train_toy, train_toy_on, LossKind, ToyBuddyIndex, ToyTrainConfig};

use crate::error::Result;

/// Trains one model per requested loss kind on a shared training set and
/// evaluates each on the default grid.
pub fn run_toy(kinds: &[LossKind], base: &ToyTrainConfig) -> Result<(Vec<SwissRollSample>, Vec<ToyResult>)> {
    let data = base.training_set();
    let grid = default_grid();
    let mut results = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let cfg = ToyTrainConfig {
            loss_kind: kind,
            ..*base
        };
        let model = train_toy_on(&cfg, &data)?;
        results.push(ToyResult {
            kind,
            fit: eval_manifold_fit(&model, &base.roll, &grid),
        });
    }
    Ok((data, results))
}

//! Every generator loss term on one SR/HR/LR triple, then the weighted total.
//!
//! ```bash
//! cargo run --release -p buddykit --example losses
//! ```

use buddykit::imagekit::downsample;
use buddykit::lossfns::{
    back_projection_loss, best_buddy_loss, perceptual_loss, ragan_d_loss, ragan_g_loss, IdentityExtractor, LogitBatch, LossParts,
    LossReport, LossWeights, VGG_LAYER_COEFFICIENTS,
};
use buddykit::patchcore::{BuddyProblem, BuddySearchConfig};
use buddykit::synth;

fn main() -> buddykit::Result<()> {
    let hr = synth::textured_image(48, 48, 3, 21)?;
    let lr = downsample(&hr, 4)?;
    let sr = synth::perturbed(&hr, 0.04, 22)?;

    let problem = BuddyProblem::new(&sr, &hr)?;
    let assignment = problem.search(&BuddySearchConfig::default())?;
    let bb = best_buddy_loss(&problem.queries, &assignment, &problem.db)?;
    let bp = back_projection_loss(&sr, &lr, 4)?;
    // stand-in for VGG features: the raw image at every layer
    let perceptual = perceptual_loss(&sr, &hr, &IdentityExtractor::with_layers(&VGG_LAYER_COEFFICIENTS))?;

    let logits = LogitBatch::new(vec![2.1, 1.4, 3.0, 0.7], vec![-1.2, 0.3, -0.4, -2.0])?;
    let ragan_g = ragan_g_loss(&logits)?;
    println!("discriminator loss {:.5}", ragan_d_loss(&logits)?);

    let parts = LossParts {
        bb,
        bp,
        perceptual,
        ragan_g,
    };
    let report = LossReport::new(parts, true, LossWeights::default())?;
    println!("{}", serde_json::to_string_pretty(&report).expect("serialise"));
    Ok(())
}

//! Scalar losses: best-buddy, back-projection, perceptual, relativistic-average
//! adversarial, and their weighted total.
//!
//! Every L1 term is a per-element mean over all channels jointly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagekit::{bicubic_resample, check_same_shape, ImageTensor, ResampleSpec};
use crate::patchcore::{BuddyAssignment, PatchDatabase, PatchGrid};

/// Mean over query patches of the per-element L1 distance to each buddy.
pub fn best_buddy_loss(queries: &PatchGrid, assignment: &BuddyAssignment, db: &PatchDatabase) -> Result<f64> {
    if assignment.len() != queries.len() || queries.patch_len() != db.patch_len() {
        return Err(Error::Misaligned(format!(
            "assignment covers {} patches, query grid has {}",
            assignment.len(),
            queries.len()
        )));
    }
    if queries.is_empty() {
        return Err(Error::Misaligned("no query patches".into()));
    }
    let mut total = 0.0;
    for (i, m) in assignment.matches.iter().enumerate() {
        if m.query_index != i || m.buddy_index >= db.len() {
            return Err(Error::Misaligned(format!("assignment entry {i} is out of range")));
        }
        let buddy = db.candidate(m.buddy_index);
        total += queries
            .patch(i)
            .iter()
            .zip(buddy)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>();
    }
    Ok(total / (queries.len() * queries.patch_len()) as f64)
}

/// `mean |S(sr, s) - lr|` with the default (antialiased, clamped) operator.
pub fn back_projection_loss(sr: &ImageTensor, lr: &ImageTensor, scale: usize) -> Result<f64> {
    back_projection_loss_with(sr, lr, ResampleSpec::down(scale))
}

/// Back-projection loss with an explicit downsampling operator.
pub fn back_projection_loss_with(sr: &ImageTensor, lr: &ImageTensor, spec: ResampleSpec) -> Result<f64> {
    let s = spec.factor;
    if sr.height() != lr.height() * s || sr.width() != lr.width() * s || sr.channels() != lr.channels() {
        return Err(Error::Shape(format!(
            "sr {} is not lr {} scaled by {s}",
            sr.shape_str(),
            lr.shape_str()
        )));
    }
    let projected = bicubic_resample(sr, spec)?;
    crate::imagekit::mae(&projected, lr)
}

/// A feature network `phi` with per-layer weights `eta`.
pub trait FeatureExtractor {
    fn labels(&self) -> Vec<String>;

    fn coefficients(&self) -> Vec<f64>;

    /// One flattened feature array per layer, in label order.
    fn extract(&self, img: &ImageTensor) -> Result<Vec<Vec<f64>>>;
}

/// Layer weights used with VGG-19 features: conv3_4, conv4_4, conv5_4.
pub const VGG_LAYER_COEFFICIENTS: [(&str, f64); 3] =
    [("conv3_4", 1.0 / 8.0), ("conv4_4", 1.0 / 4.0), ("conv5_4", 1.0 / 2.0)];

/// Every layer is the raw image. With one layer of weight 1 the perceptual
/// loss reduces to plain MAE.
#[derive(Debug, Clone)]
pub struct IdentityExtractor {
    layers: Vec<(String, f64)>,
}

impl IdentityExtractor {
    pub fn new() -> Self {
        Self {
            layers: vec![("identity".into(), 1.0)],
        }
    }

    pub fn with_layers(layers: &[(&str, f64)]) -> Self {
        Self {
            layers: layers.iter().map(|&(l, c)| (l.to_string(), c)).collect(),
        }
    }
}

impl Default for IdentityExtractor {
    fn default() -> Self {
        Self::new()
    }
}

impl FeatureExtractor for IdentityExtractor {
    fn labels(&self) -> Vec<String> {
        self.layers.iter().map(|(l, _)| l.clone()).collect()
    }

    fn coefficients(&self) -> Vec<f64> {
        self.layers.iter().map(|&(_, c)| c).collect()
    }

    fn extract(&self, img: &ImageTensor) -> Result<Vec<Vec<f64>>> {
        Ok(vec![img.data().to_vec(); self.layers.len()])
    }
}

pub fn perceptual_loss(sr: &ImageTensor, hr: &ImageTensor, extractor: &dyn FeatureExtractor) -> Result<f64> {
    check_same_shape(sr, hr)?;
    let coeffs = extractor.coefficients();
    let fs = extractor.extract(sr)?;
    let fh = extractor.extract(hr)?;
    if fs.len() != coeffs.len() || fh.len() != coeffs.len() {
        return Err(Error::Shape(format!(
            "extractor returned {}/{} layers for {} coefficients",
            fs.len(),
            fh.len(),
            coeffs.len()
        )));
    }
    let mut total = 0.0;
    for ((a, b), eta) in fs.iter().zip(&fh).zip(&coeffs) {
        if a.len() != b.len() || a.is_empty() {
            return Err(Error::Shape(format!("feature lengths {} vs {}", a.len(), b.len())));
        }
        let l1 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64;
        if !l1.is_finite() {
            return Err(Error::NonFinite("perceptual feature distance".into()));
        }
        total += eta * l1;
    }
    Ok(total)
}

/// Raw (untransformed) discriminator outputs for real and generated samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitBatch {
    pub real: Vec<f64>,
    pub fake: Vec<f64>,
}

/// Lower clamp applied to every log argument.
pub const LOG_CLAMP: f64 = 1e-12;

impl LogitBatch {
    pub fn new(real: Vec<f64>, fake: Vec<f64>) -> Result<Self> {
        let batch = Self { real, fake };
        batch.validate()?;
        Ok(batch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.real.is_empty() || self.fake.is_empty() {
            return Err(Error::Config("logit batch must contain real and fake logits".into()));
        }
        if self.real.iter().chain(&self.fake).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("discriminator logit".into()));
        }
        Ok(())
    }

    pub fn swapped(&self) -> Self {
        Self {
            real: self.fake.clone(),
            fake: self.real.clone(),
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn clamped_ln(x: f64) -> f64 {
    x.max(LOG_CLAMP).ln()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// `mean log D(x)` over `xs`, with `D(x) = sigmoid(x - mean(others))`.
fn mean_log_d(xs: &[f64], others_mean: f64) -> f64 {
    mean(&xs.iter().map(|&x| clamped_ln(sigmoid(x - others_mean))).collect::<Vec<_>>())
}

/// `mean log (1 - D(x))`.
fn mean_log_not_d(xs: &[f64], others_mean: f64) -> f64 {
    mean(&xs.iter().map(|&x| clamped_ln(sigmoid(others_mean - x))).collect::<Vec<_>>())
}

/// Discriminator loss `-E_r[log D(x_r)] - E_f[log(1 - D(x_f))]`.
pub fn ragan_d_loss(batch: &LogitBatch) -> Result<f64> {
    batch.validate()?;
    let (mr, mf) = (mean(&batch.real), mean(&batch.fake));
    Ok(-mean_log_d(&batch.real, mf) - mean_log_not_d(&batch.fake, mr))
}

/// Generator loss `-E_r[log(1 - D(x_r))] - E_f[log D(x_f)]`.
pub fn ragan_g_loss(batch: &LogitBatch) -> Result<f64> {
    batch.validate()?;
    let (mr, mf) = (mean(&batch.real), mean(&batch.fake));
    Ok(-mean_log_not_d(&batch.real, mf) - mean_log_d(&batch.fake, mr))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda_bb: f64,
    pub lambda_bp: f64,
    pub lambda_p: f64,
    pub lambda_g: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_bb: 0.1,
            lambda_bp: 1.0,
            lambda_p: 1.0,
            lambda_g: 0.005,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.lambda_bb, self.lambda_bp, self.lambda_p, self.lambda_g];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Config(format!("loss weights must be finite and >= 0: {all:?}")));
        }
        Ok(())
    }
}

/// Component losses of the generator objective.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossParts {
    pub bb: f64,
    pub bp: f64,
    pub perceptual: f64,
    pub ragan_g: f64,
}

pub fn total_generator_loss(parts: &LossParts, weights: &LossWeights) -> Result<f64> {
    weights.validate()?;
    for (name, v) in [
        ("bb", parts.bb),
        ("bp", parts.bp),
        ("perceptual", parts.perceptual),
        ("ragan_g", parts.ragan_g),
    ] {
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("{name} loss")));
        }
    }
    Ok(weights.lambda_bb * parts.bb
        + weights.lambda_bp * parts.bp
        + weights.lambda_p * parts.perceptual
        + weights.lambda_g * parts.ragan_g)
}

/// Serialisable loss report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub schema: u32,
    pub bb: f64,
    pub bp: f64,
    pub perceptual: f64,
    pub ragan_g: Option<f64>,
    pub total: f64,
    pub weights: LossWeights,
}

impl LossReport {
    pub fn new(parts: LossParts, has_ragan: bool, weights: LossWeights) -> Result<Self> {
        let total = total_generator_loss(&parts, &weights)?;
        Ok(Self {
            schema: 1,
            bb: parts.bb,
            bp: parts.bp,
            perceptual: parts.perceptual,
            ragan_g: has_ragan.then_some(parts.ragan_g),
            total,
            weights,
        })
    }
}

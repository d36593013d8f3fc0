//! Seeded synthetic images for demos, benchmarks and tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::imagekit::ImageTensor;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// I.i.d. uniform intensities.
pub fn uniform_image(height: usize, width: usize, channels: usize, seed: u64) -> Result<ImageTensor> {
    let mut rng = rng(seed);
    ImageTensor::from_fn(height, width, channels, |_, _, _| rng.random::<f64>())
}

/// Smooth texture: a mixture of random plane waves plus a little fine noise,
/// rescaled into `[0.05, 0.95]`.
pub fn textured_image(height: usize, width: usize, channels: usize, seed: u64) -> Result<ImageTensor> {
    let mut rng = rng(seed);
    let waves: Vec<[f64; 4]> = (0..8)
        .map(|_| {
            let theta = rng.random::<f64>() * std::f64::consts::TAU;
            let freq = 0.02 + 0.25 * rng.random::<f64>();
            let phase = rng.random::<f64>() * std::f64::consts::TAU;
            let amp = 0.5 + rng.random::<f64>();
            [freq * theta.cos(), freq * theta.sin(), phase, amp]
        })
        .collect();
    let tint: Vec<f64> = (0..channels).map(|_| 0.8 + 0.4 * rng.random::<f64>()).collect();
    let noise = Normal::new(0.0, 0.02).expect("valid sigma");
    let total_amp: f64 = waves.iter().map(|w| w[3]).sum();
    ImageTensor::from_fn(height, width, channels, |r, c, ch| {
        let s: f64 = waves
            .iter()
            .map(|w| w[3] * (w[0] * r as f64 + w[1] * c as f64 + w[2] + ch as f64).sin())
            .sum();
        let v = 0.5 + 0.45 * tint[ch] * s / total_amp + noise.sample(&mut rng);
        v.clamp(0.05, 0.95)
    })
}

/// Adds i.i.d. Gaussian noise and clamps to `[0, 1]`.
pub fn perturbed(img: &ImageTensor, sigma: f64, seed: u64) -> Result<ImageTensor> {
    let mut rng = rng(seed);
    let noise = Normal::new(0.0, sigma).expect("valid sigma");
    img.map(|v| (v + noise.sample(&mut rng)).clamp(0.0, 1.0))
}

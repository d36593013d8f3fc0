//! Binary texture masks from windowed standard deviation.
//!
//! A pixel is textured (1) when the population standard deviation of the
//! `k x k` luma window centred on it is at least `delta`. Borders are
//! reflect-padded without repeating the edge sample, and window sums come
//! from summed-area tables of `I` and `I^2` in double precision.

use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imagekit::{to_luma, write_png_bytes, ImageTensor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskConfig {
    pub k: usize,
    pub delta: f64,
}

impl Default for MaskConfig {
    fn default() -> Self {
        Self { k: 11, delta: 0.025 }
    }
}

impl MaskConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 3 || self.k % 2 == 0 {
            return Err(Error::Config(format!("window size k = {} must be odd and >= 3", self.k)));
        }
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(Error::Config(format!("delta = {} must be finite and >= 0", self.delta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMask {
    height: usize,
    width: usize,
    values: Vec<u8>,
}

impl RegionMask {
    pub fn new(height: usize, width: usize, values: Vec<u8>) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::Shape(format!(
                "mask of {} values for {height}x{width}",
                values.len()
            )));
        }
        if values.iter().any(|&v| v > 1) {
            return Err(Error::Config("mask values must be 0 or 1".into()));
        }
        Ok(Self { height, width, values })
    }

    pub fn filled(height: usize, width: usize, value: bool) -> Self {
        Self {
            height,
            width,
            values: vec![value as u8; height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.values[row * self.width + col] == 1
    }

    pub fn count_ones(&self) -> usize {
        self.values.iter().map(|&v| v as usize).sum()
    }

    /// Writes an 8-bit grayscale PNG with 0 for flat and 255 for textured pixels.
    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let bytes: Vec<u8> = self.values.iter().map(|&v| v * 255).collect();
        write_png_bytes(
            path.as_ref(),
            self.width as u32,
            self.height as u32,
            png::ColorType::Grayscale,
            &bytes,
        )
    }
}

#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let r = if i < 0 {
        -i
    } else if i >= n {
        2 * (n - 1) - i
    } else {
        i
    };
    r as usize
}

/// Population standard deviation of each reflect-padded `k x k` window of
/// the luma channel.
pub fn window_std(img: &ImageTensor, k: usize) -> Result<Vec<f64>> {
    let luma = to_luma(img)?;
    let (h, w) = (luma.height(), luma.width());
    if k > 2 * h.min(w) {
        return Err(Error::Config(format!(
            "window size {k} exceeds twice the smaller image side ({})",
            h.min(w)
        )));
    }
    let r = (k / 2) as isize;
    // centring on the global mean keeps the I^2 table small and makes flat
    // images cancel exactly
    let centre = luma.data().iter().sum::<f64>() / (h * w) as f64;
    let (ph, pw) = (h + k - 1, w + k - 1);

    // summed-area tables with a zero first row and column
    let stride = pw + 1;
    let mut sat = vec![0.0f64; (ph + 1) * stride];
    let mut sat2 = vec![0.0f64; (ph + 1) * stride];
    for y in 0..ph {
        let sy = reflect(y as isize - r, h);
        let mut run = 0.0;
        let mut run2 = 0.0;
        for x in 0..pw {
            let v = luma.get(sy, reflect(x as isize - r, w), 0) - centre;
            run += v;
            run2 += v * v;
            let above = y * stride + x + 1;
            sat[(y + 1) * stride + x + 1] = sat[above] + run;
            sat2[(y + 1) * stride + x + 1] = sat2[above] + run2;
        }
    }

    let n = (k * k) as f64;
    let box_sum = |t: &[f64], y: usize, x: usize| {
        t[(y + k) * stride + x + k] - t[y * stride + x + k] - t[(y + k) * stride + x] + t[y * stride + x]
    };
    let mut out = vec![0.0; h * w];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, slot) in row.iter_mut().enumerate() {
            let s = box_sum(&sat, y, x);
            let s2 = box_sum(&sat2, y, x);
            let var = (s2 - s * s / n) / n;
            *slot = var.max(0.0).sqrt();
        }
    });
    Ok(out)
}

pub fn compute_mask(img: &ImageTensor, cfg: &MaskConfig) -> Result<RegionMask> {
    cfg.validate()?;
    let std = window_std(img, cfg.k)?;
    let values = std.iter().map(|&s| (s >= cfg.delta) as u8).collect();
    RegionMask::new(img.height(), img.width(), values)
}

/// Multiplies every channel of `img` by the mask.
pub fn apply_mask(img: &ImageTensor, mask: &RegionMask) -> Result<ImageTensor> {
    if img.height() != mask.height || img.width() != mask.width {
        return Err(Error::Shape(format!(
            "image {} vs mask {}x{}",
            img.shape_str(),
            mask.height,
            mask.width
        )));
    }
    let ch = img.channels();
    let data = img
        .data()
        .iter()
        .enumerate()
        .map(|(i, &v)| v * mask.values[i / ch] as f64)
        .collect();
    ImageTensor::new(img.height(), img.width(), ch, data)
}

//! Image tensors, bicubic resampling, luma conversion and PNG I/O.
//!
//! Resampling uses the cubic convolution kernel with `a = -0.5` (Catmull-Rom).
//! Pixel centres map as `src = (dst + 0.5) * factor - 0.5` for downsampling and
//! `src = (dst + 0.5) / factor - 0.5` for upsampling. Antialiased downsampling
//! stretches the kernel support by the scale factor and renormalises the taps.
//! Samples outside the image replicate the nearest edge pixel.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Rec. 601 luma weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Cubic convolution coefficient.
pub const CUBIC_A: f64 = -0.5;

/// Row-major `height x width x channels` intensities, nominally in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageTensor {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::Channels(channels));
        }
        if height == 0 || width == 0 {
            return Err(Error::ZeroSize {
                height,
                width,
                channels,
            });
        }
        if data.len() != height * width * channels {
            return Err(Error::DataLength {
                height,
                width,
                channels,
                actual: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("image element {pos}")));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(height, width, channels, vec![value; height * width * channels])
    }

    /// Builds an image by evaluating `f(row, col, channel)` at every element.
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * channels);
        for r in 0..height {
            for c in 0..width {
                for ch in 0..channels {
                    data.push(f(r, c, ch));
                }
            }
        }
        Self::new(height, width, channels, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, ch: usize) -> f64 {
        self.data[(row * self.width + col) * self.channels + ch]
    }

    pub fn same_shape(&self, other: &ImageTensor) -> bool {
        self.height == other.height && self.width == other.width && self.channels == other.channels
    }

    pub fn shape_str(&self) -> String {
        format!("{}x{}x{}", self.height, self.width, self.channels)
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Result<Self> {
        Self::new(
            self.height,
            self.width,
            self.channels,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn clamped(&self) -> Self {
        Self {
            data: self.data.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
            ..self.clone()
        }
    }

    /// Crops the centred `height x width` window.
    pub fn center_crop(&self, height: usize, width: usize) -> Result<Self> {
        if height == 0 || width == 0 || height > self.height || width > self.width {
            return Err(Error::Shape(format!(
                "cannot crop {}x{} from {}",
                height,
                width,
                self.shape_str()
            )));
        }
        let top = (self.height - height) / 2;
        let left = (self.width - width) / 2;
        Self::from_fn(height, width, self.channels, |r, c, ch| {
            self.get(r + top, c + left, ch)
        })
    }

    /// Centre-crops both dimensions down to the nearest multiple of `m`.
    pub fn crop_to_multiple(&self, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Config("crop multiple must be positive".into()));
        }
        self.center_crop(self.height / m * m, self.width / m * m)
    }
}

/// Per-element mean absolute difference.
pub fn mae(a: &ImageTensor, b: &ImageTensor) -> Result<f64> {
    check_same_shape(a, b)?;
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.data.len() as f64)
}

/// Per-element mean squared difference.
pub fn mse(a: &ImageTensor, b: &ImageTensor) -> Result<f64> {
    check_same_shape(a, b)?;
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.data.len() as f64)
}

pub(crate) fn check_same_shape(a: &ImageTensor, b: &ImageTensor) -> Result<()> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(Error::Shape(format!("{} vs {}", a.shape_str(), b.shape_str())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Down,
    Up,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResampleSpec {
    pub factor: usize,
    pub direction: Direction,
    /// Stretch the kernel by the factor when downsampling. Ignored for upsampling.
    pub antialias: bool,
    /// Clamp the result to `[0, 1]`.
    pub clamp: bool,
}

impl ResampleSpec {
    pub fn down(factor: usize) -> Self {
        Self {
            factor,
            direction: Direction::Down,
            antialias: true,
            clamp: true,
        }
    }

    pub fn up(factor: usize) -> Self {
        Self {
            factor,
            direction: Direction::Up,
            antialias: false,
            clamp: true,
        }
    }

    pub fn with_antialias(mut self, antialias: bool) -> Self {
        self.antialias = antialias;
        self
    }

    pub fn unclamped(mut self) -> Self {
        self.clamp = false;
        self
    }
}

/// Cubic convolution kernel.
#[inline]
pub fn cubic_kernel(x: f64) -> f64 {
    let a = CUBIC_A;
    let x = x.abs();
    if x < 1.0 {
        ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a
    } else {
        0.0
    }
}

/// Filter taps for one output sample along one axis.
#[derive(Debug, Clone)]
struct Taps {
    indices: Vec<usize>,
    weights: Vec<f64>,
}

fn axis_taps(in_len: usize, out_len: usize, spec: &ResampleSpec) -> Vec<Taps> {
    let f = spec.factor as f64;
    let (stretch, to_src): (f64, Box<dyn Fn(f64) -> f64>) = match spec.direction {
        Direction::Down => {
            let stretch = if spec.antialias { f } else { 1.0 };
            (stretch, Box::new(move |d| (d + 0.5) * f - 0.5))
        }
        Direction::Up => (1.0, Box::new(move |d| (d + 0.5) / f - 0.5)),
    };
    let support = 2.0 * stretch;
    let last = in_len as isize - 1;
    (0..out_len)
        .map(|o| {
            let center = to_src(o as f64);
            let lo = (center - support).floor() as isize;
            let hi = (center + support).ceil() as isize;
            let mut indices = Vec::with_capacity((hi - lo + 1) as usize);
            let mut weights = Vec::with_capacity((hi - lo + 1) as usize);
            for j in lo..=hi {
                let w = cubic_kernel((j as f64 - center) / stretch);
                if w != 0.0 {
                    indices.push(j.clamp(0, last) as usize);
                    weights.push(w);
                }
            }
            let total: f64 = weights.iter().sum();
            for w in &mut weights {
                *w /= total;
            }
            Taps { indices, weights }
        })
        .collect()
}

/// Separable bicubic resampling. Rows are processed in parallel; every output
/// value is a fixed-order sum, so results do not depend on the thread count.
pub fn bicubic_resample(img: &ImageTensor, spec: ResampleSpec) -> Result<ImageTensor> {
    let (h, w, ch) = (img.height, img.width, img.channels);
    if spec.factor == 0 {
        return Err(Error::Config("resample factor must be >= 1".into()));
    }
    let (oh, ow) = match spec.direction {
        Direction::Down => {
            if h % spec.factor != 0 || w % spec.factor != 0 {
                return Err(Error::NotDivisible {
                    height: h,
                    width: w,
                    factor: spec.factor,
                });
            }
            (h / spec.factor, w / spec.factor)
        }
        Direction::Up => (h * spec.factor, w * spec.factor),
    };
    if spec.factor == 1 {
        return Ok(if spec.clamp { img.clamped() } else { img.clone() });
    }

    let htaps = axis_taps(w, ow, &spec);
    let vtaps = axis_taps(h, oh, &spec);

    // horizontal pass: h x ow
    let mut tmp = vec![0.0; h * ow * ch];
    tmp.par_chunks_mut(ow * ch).enumerate().for_each(|(r, out_row)| {
        let row = &img.data[r * w * ch..(r + 1) * w * ch];
        for (oc, taps) in htaps.iter().enumerate() {
            for k in 0..ch {
                let mut acc = 0.0;
                for (&i, &wt) in taps.indices.iter().zip(&taps.weights) {
                    acc += wt * row[i * ch + k];
                }
                out_row[oc * ch + k] = acc;
            }
        }
    });

    // vertical pass: oh x ow
    let mut out = vec![0.0; oh * ow * ch];
    out.par_chunks_mut(ow * ch).enumerate().for_each(|(or, out_row)| {
        let taps = &vtaps[or];
        for (x, slot) in out_row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (&i, &wt) in taps.indices.iter().zip(&taps.weights) {
                acc += wt * tmp[i * ow * ch + x];
            }
            *slot = if spec.clamp { acc.clamp(0.0, 1.0) } else { acc };
        }
    });

    ImageTensor::new(oh, ow, ch, out)
}

/// Downsampling operator `S(img, factor)`: antialiased, clamped.
pub fn downsample(img: &ImageTensor, factor: usize) -> Result<ImageTensor> {
    bicubic_resample(img, ResampleSpec::down(factor))
}

pub fn upsample(img: &ImageTensor, factor: usize) -> Result<ImageTensor> {
    bicubic_resample(img, ResampleSpec::up(factor))
}

pub fn to_luma(img: &ImageTensor) -> Result<ImageTensor> {
    match img.channels {
        1 => Ok(img.clone()),
        3 => {
            let data = img
                .data
                .chunks_exact(3)
                .map(|p| LUMA_WEIGHTS[0] * p[0] + LUMA_WEIGHTS[1] * p[1] + LUMA_WEIGHTS[2] * p[2])
                .collect();
            ImageTensor::new(img.height, img.width, 1, data)
        }
        n => Err(Error::Channels(n)),
    }
}

/// Loads an 8- or 16-bit grayscale or RGB PNG, normalising to `[0, 1]`.
pub fn load_png(path: impl AsRef<Path>) -> Result<ImageTensor> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let decode_err = |source| Error::PngDecode {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = decoder.read_info().map_err(decode_err)?;
    let (color, depth) = {
        let info = reader.info();
        (info.color_type, info.bit_depth)
    };
    let channels = match color {
        png::ColorType::Grayscale => 1,
        png::ColorType::Rgb => 3,
        other => return Err(Error::UnsupportedPng(format!("color type {other:?}"))),
    };
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::UnsupportedPng("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let frame = reader.next_frame(&mut buf).map_err(decode_err)?;
    let (w, h) = (frame.width as usize, frame.height as usize);
    let bytes = &buf[..frame.buffer_size()];
    let data: Vec<f64> = match depth {
        png::BitDepth::Eight => bytes.iter().map(|&b| b as f64 / 255.0).collect(),
        png::BitDepth::Sixteen => bytes
            .chunks_exact(2)
            .map(|s| u16::from_be_bytes([s[0], s[1]]) as f64 / 65535.0)
            .collect(),
        other => return Err(Error::UnsupportedPng(format!("bit depth {other:?}"))),
    };
    ImageTensor::new(h, w, channels, data)
}

/// Quantises an intensity to 8 bits, rounding half away from zero.
#[inline]
pub fn quantize_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Saves as an 8-bit grayscale or RGB PNG.
pub fn save_png(img: &ImageTensor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes: Vec<u8> = img.data.iter().map(|&v| quantize_u8(v)).collect();
    let color = if img.channels == 1 {
        png::ColorType::Grayscale
    } else {
        png::ColorType::Rgb
    };
    write_png_bytes(path, img.width as u32, img.height as u32, color, &bytes)
}

pub(crate) fn write_png_bytes(
    path: &Path,
    width: u32,
    height: u32,
    color: png::ColorType,
    bytes: &[u8],
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), width, height);
    encoder.set_color(color);
    encoder.set_depth(png::BitDepth::Eight);
    let encode_err = |source| Error::PngEncode {
        path: path.to_path_buf(),
        source,
    };
    let mut writer = encoder.write_header().map_err(encode_err)?;
    writer.write_image_data(bytes).map_err(encode_err)?;
    writer.finish().map_err(encode_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(h: usize, w: usize) -> ImageTensor {
        ImageTensor::from_fn(h, w, 1, |_, c, _| c as f64 / (w - 1) as f64).unwrap()
    }

    #[test]
    fn kernel_partition_of_unity() {
        for i in 0..100 {
            let t = i as f64 / 100.0;
            let s: f64 = (-2..=2).map(|k| cubic_kernel(t - k as f64)).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert_eq!(cubic_kernel(0.0), 1.0);
        assert_eq!(cubic_kernel(1.0), 0.0);
        assert_eq!(cubic_kernel(2.0), 0.0);
    }

    #[test]
    fn constant_down_and_up() {
        let img = ImageTensor::filled(64, 64, 1, 0.5).unwrap();
        let down = bicubic_resample(&img, ResampleSpec::down(2)).unwrap();
        assert_eq!((down.height(), down.width()), (32, 32));
        assert!(down.data().iter().all(|v| (v - 0.5).abs() < 1e-9));
        let up = bicubic_resample(&down, ResampleSpec::up(4)).unwrap();
        assert_eq!((up.height(), up.width()), (128, 128));
        assert!(up.data().iter().all(|v| (v - 0.5).abs() < 1e-9));
    }

    #[test]
    fn ramp_interior_is_linear() {
        let w = 64;
        let img = ramp(16, w);
        let down = downsample(&img, 2).unwrap();
        for c in 4..(w / 2 - 4) {
            let src = (c as f64 + 0.5) * 2.0 - 0.5;
            let expect = src / (w - 1) as f64;
            assert!((down.get(5, c, 0) - expect).abs() < 1e-6, "col {c}");
        }
    }

    #[test]
    fn down_requires_divisibility() {
        let img = ImageTensor::filled(10, 12, 1, 0.0).unwrap();
        assert!(matches!(
            downsample(&img, 4),
            Err(Error::NotDivisible { factor: 4, .. })
        ));
        assert!(matches!(
            ImageTensor::new(0, 4, 1, vec![]),
            Err(Error::ZeroSize { .. })
        ));
    }

    #[test]
    fn luma() {
        let gray = ramp(2, 3);
        assert_eq!(to_luma(&gray).unwrap(), gray);
        let white = ImageTensor::filled(1, 1, 3, 1.0).unwrap();
        assert!((to_luma(&white).unwrap().get(0, 0, 0) - 1.0).abs() < 1e-12);
        let red = ImageTensor::new(1, 1, 3, vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(to_luma(&red).unwrap().get(0, 0, 0), 0.299);
    }

    #[test]
    fn channel_validation() {
        assert!(matches!(
            ImageTensor::new(1, 1, 2, vec![0.0, 0.0]),
            Err(Error::Channels(2))
        ));
    }

    #[test]
    fn quantisation() {
        assert_eq!(quantize_u8(0.5), 128);
        assert_eq!(quantize_u8(128.0 / 255.0), 128);
        assert_eq!(quantize_u8(1.2), 255);
        assert_eq!(quantize_u8(-0.1), 0);
    }

    #[test]
    fn crop_to_multiple_centres() {
        let img = ImageTensor::from_fn(14, 13, 1, |r, c, _| (r * 13 + c) as f64 / 200.0).unwrap();
        let c = img.crop_to_multiple(12).unwrap();
        assert_eq!((c.height(), c.width()), (12, 12));
        assert_eq!(c.get(0, 0, 0), img.get(1, 0, 0));
    }
}

//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use buddykit::imagekit::ImageTensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ 0x7E57)
}

pub fn random_image(h: usize, w: usize, c: usize, seed: u64) -> ImageTensor {
    let mut r = rng(seed);
    let data = (0..h * w * c).map(|_| r.random::<f64>()).collect();
    ImageTensor::new(h, w, c, data).unwrap()
}

/// `img + N(0, sigma)` style jitter from a uniform draw, clamped to `[0, 1]`.
pub fn jittered(img: &ImageTensor, amp: f64, seed: u64) -> ImageTensor {
    let mut r = rng(seed);
    img.map(|v| (v + amp * (r.random::<f64>() - 0.5)).clamp(0.0, 1.0)).unwrap()
}

fn keys(x: f64) -> f64 {
    // Keys cubic, a = -0.5, written out piecewise
    let t = x.abs();
    if t < 1.0 {
        1.5 * t * t * t - 2.5 * t * t + 1.0
    } else if t < 2.0 {
        -0.5 * t * t * t + 2.5 * t * t - 4.0 * t + 2.0
    } else {
        0.0
    }
}

/// Normalised weights over source indices `0..n` for one output sample.
fn axis_weights(n: usize, out: usize, factor: usize, down: bool, antialias: bool) -> Vec<f64> {
    let f = factor as f64;
    let (centre, width) = if down {
        ((out as f64 + 0.5) * f - 0.5, if antialias { f } else { 1.0 })
    } else {
        ((out as f64 + 0.5) / f - 0.5, 1.0)
    };
    let mut w = vec![0.0; n];
    let reach = (2.0 * width).ceil() as i64 + 2;
    let c0 = centre.round() as i64;
    for v in c0 - reach..=c0 + reach {
        let k = keys((v as f64 - centre) / width);
        w[v.clamp(0, n as i64 - 1) as usize] += k;
    }
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

/// Direct 2-D evaluation of the separable cubic resampler (no clamping of
/// the result).
pub fn naive_resample(img: &ImageTensor, factor: usize, down: bool, antialias: bool) -> ImageTensor {
    let (h, w, c) = (img.height(), img.width(), img.channels());
    let (oh, ow) = if down { (h / factor, w / factor) } else { (h * factor, w * factor) };
    let wy: Vec<Vec<f64>> = (0..oh).map(|o| axis_weights(h, o, factor, down, antialias)).collect();
    let wx: Vec<Vec<f64>> = (0..ow).map(|o| axis_weights(w, o, factor, down, antialias)).collect();
    ImageTensor::from_fn(oh, ow, c, |r, col, ch| {
        let mut acc = 0.0;
        for (y, &a) in wy[r].iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (x, &b) in wx[col].iter().enumerate() {
                acc += a * b * img.get(y, x, ch);
            }
        }
        acc
    })
    .unwrap()
}

/// Patch at `(r, c)` flattened row-major, channels innermost.
pub fn naive_patch(img: &ImageTensor, r: usize, c: usize, p: usize) -> Vec<f64> {
    let mut out = Vec::new();
    for dy in 0..p {
        for dx in 0..p {
            for ch in 0..img.channels() {
                out.push(img.get(r + dy, c + dx, ch));
            }
        }
    }
    out
}

/// All patches of `img` at `stride`, in raster order of their origins.
pub fn naive_unfold(img: &ImageTensor, p: usize, stride: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut r = 0;
    while r + p <= img.height() {
        let mut c = 0;
        while c + p <= img.width() {
            out.push(naive_patch(img, r, c, p));
            c += stride;
        }
        r += stride;
    }
    out
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Exhaustive best buddy for every query patch. Candidates are all stride-1
/// patches of `levels` in order; ties go to the colocated HR patch, then to
/// the lowest index. Returns `(index, objective)` per query.
pub struct NaiveBuddies {
    pub candidates: Vec<Vec<f64>>,
    pub picks: Vec<(usize, f64)>,
    pub queries: Vec<Vec<f64>>,
    pub gts: Vec<Vec<f64>>,
}

pub fn naive_buddies(sr: &ImageTensor, levels: &[ImageTensor], alpha: f64, beta: f64) -> NaiveBuddies {
    let p = 3;
    let hr = &levels[0];
    let mut candidates = Vec::new();
    for l in levels {
        if l.height() >= p && l.width() >= p {
            candidates.extend(naive_unfold(l, p, 1));
        }
    }
    let hr_cols = hr.width() - p + 1;
    let queries = naive_unfold(sr, p, 3);
    let gts = naive_unfold(hr, p, 3);
    let qcols = (hr.width() - p) / 3 + 1;
    let picks = (0..queries.len())
        .map(|q| {
            let coloc = (q / qcols) * 3 * hr_cols + (q % qcols) * 3;
            let obj = |g: &[f64]| alpha * sq_dist(g, &gts[q]) + beta * sq_dist(g, &queries[q]);
            let mut best = (coloc, obj(&candidates[coloc]));
            for (j, g) in candidates.iter().enumerate() {
                let o = obj(g);
                if o < best.1 {
                    best = (j, o);
                }
            }
            best
        })
        .collect();
    NaiveBuddies {
        candidates,
        picks,
        queries,
        gts,
    }
}

pub fn luma(img: &ImageTensor, r: usize, c: usize) -> f64 {
    if img.channels() == 1 {
        img.get(r, c, 0)
    } else {
        0.299 * img.get(r, c, 0) + 0.587 * img.get(r, c, 1) + 0.114 * img.get(r, c, 2)
    }
}

fn mirror(i: i64, n: usize) -> usize {
    let n = n as i64;
    let mut i = i;
    while i < 0 || i >= n {
        i = if i < 0 { -i } else { 2 * (n - 1) - i };
    }
    i as usize
}

/// Two-pass population std of every `k x k` window, mirrored at the border
/// without repeating the edge pixel.
pub fn naive_window_std(img: &ImageTensor, k: usize) -> Vec<f64> {
    let (h, w) = (img.height(), img.width());
    let r = (k / 2) as i64;
    let mut out = Vec::with_capacity(h * w);
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let mut vals = Vec::with_capacity(k * k);
            for dy in -r..=r {
                for dx in -r..=r {
                    vals.push(luma(img, mirror(y + dy, h), mirror(x + dx, w)));
                }
            }
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            out.push(var.sqrt());
        }
    }
    out
}

/// RaGAN losses written out directly, with `1 - D(z)` as `1 / (1 + e^z)`
/// (subtracting from one loses precision once `D` is within 1e-9 of 1).
pub fn straight_ragan(real: &[f64], fake: &[f64]) -> (f64, f64) {
    let mr = real.iter().sum::<f64>() / real.len() as f64;
    let mf = fake.iter().sum::<f64>() / fake.len() as f64;
    let d = |z: f64| 1.0 / (1.0 + (-z).exp());
    let not_d = |z: f64| 1.0 / (1.0 + z.exp());
    let lg = |v: f64| if v < 1e-12 { 1e-12f64.ln() } else { v.ln() };
    let avg = |xs: Vec<f64>| xs.iter().sum::<f64>() / xs.len() as f64;
    let ld = -avg(real.iter().map(|&x| lg(d(x - mf))).collect()) - avg(fake.iter().map(|&x| lg(not_d(x - mr))).collect());
    let lgen =
        -avg(real.iter().map(|&x| lg(not_d(x - mf))).collect()) - avg(fake.iter().map(|&x| lg(d(x - mr))).collect());
    (ld, lgen)
}

/// Swiss-roll samples drawn without the library: `t ~ U[1.5pi, 4.5pi]`,
/// `y = scale (t cos t, t sin t) + N(0, sigma^2)` per coordinate.
pub fn roll_samples(n: usize, scale: f64, sigma: f64, seed: u64) -> Vec<([f64; 2], f64)> {
    let mut r = rng(seed);
    let pi = std::f64::consts::PI;
    let gauss = move |r: &mut ChaCha8Rng| {
        // Box-Muller
        let u1: f64 = 1.0 - r.random::<f64>();
        let u2: f64 = r.random::<f64>();
        (-2.0 * u1.ln()).sqrt() * (2.0 * pi * u2).cos()
    };
    (0..n)
        .map(|_| {
            let t = 1.5 * pi + 3.0 * pi * r.random::<f64>();
            let y = [
                scale * t * t.cos() + sigma * gauss(&mut r),
                scale * t * t.sin() + sigma * gauss(&mut r),
            ];
            (y, (y[0] + y[1]) / 2.0)
        })
        .collect()
}

fn kernel(x: f64, x0: f64, bw: f64) -> f64 {
    (-0.5 * ((x - x0) / bw).powi(2)).exp()
}

/// Nadaraya-Watson conditional mean of `y` given `x = x0`.
pub fn conditional_mean(samples: &[([f64; 2], f64)], x0: f64, bw: f64) -> [f64; 2] {
    let mut s = [0.0; 2];
    let mut wsum = 0.0;
    for (y, x) in samples {
        let k = kernel(*x, x0, bw);
        s[0] += k * y[0];
        s[1] += k * y[1];
        wsum += k;
    }
    [s[0] / wsum, s[1] / wsum]
}

/// Kernel-weighted coordinate-wise median of `y` given `x = x0`.
pub fn conditional_median(samples: &[([f64; 2], f64)], x0: f64, bw: f64) -> [f64; 2] {
    let mut out = [0.0; 2];
    for (d, slot) in out.iter_mut().enumerate() {
        let mut v: Vec<(f64, f64)> = samples.iter().map(|(y, x)| (y[d], kernel(*x, x0, bw))).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        let half = v.iter().map(|p| p.1).sum::<f64>() / 2.0;
        let mut acc = 0.0;
        for (y, k) in v {
            acc += k;
            if acc >= half {
                *slot = y;
                break;
            }
        }
    }
    out
}

/// Distance from `p` to the noiseless roll `scale (t cos t, t sin t)`,
/// `t in [1.5pi, 4.5pi]`, by a fine scan plus local ternary refinement.
pub fn roll_distance(p: [f64; 2], scale: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let (a, b) = (1.5 * pi, 4.5 * pi);
    let d = |t: f64| ((scale * t * t.cos() - p[0]).powi(2) + (scale * t * t.sin() - p[1]).powi(2)).sqrt();
    let n = 200_000;
    let mut best = (a, d(a));
    for i in 0..=n {
        let t = a + (b - a) * i as f64 / n as f64;
        let v = d(t);
        if v < best.1 {
            best = (t, v);
        }
    }
    let h = (b - a) / n as f64;
    let (mut lo, mut hi) = ((best.0 - h).max(a), (best.0 + h).min(b));
    for _ in 0..100 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if d(m1) < d(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    best.1.min(d(0.5 * (lo + hi)))
}

/// Central differences of `f` at `x` with step `h`.
pub fn finite_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut x = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + h;
            let up = f(&x);
            x[i] = orig - h;
            let down = f(&x);
            x[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

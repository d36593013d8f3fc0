//! Ground-truth pyramids, patch unfolding, the candidate database and exact
//! best-buddy search.
//!
//! For an estimated patch `p` and its predefined ground-truth patch `g_i`, the
//! best buddy is the database candidate minimising
//!
//! ```text
//! alpha * |g - g_i|^2 + beta * |g - p|^2
//! ```
//!
//! Ties prefer the colocated candidate (the one bit-identical to `g_i`), then
//! the lowest database index. Database indices run over pyramid levels first,
//! then rows, then columns, so the index order is lexicographic in
//! `(level, row, col)`.
//!
//! The accelerated search returns exactly what the exhaustive scan returns.
//! It uses the identity
//!
//! ```text
//! alpha |g - g_i|^2 + beta |g - p|^2 = (alpha + beta) |g - m|^2 + alpha beta / (alpha + beta) |g_i - p|^2
//! ```
//!
//! with `m = (alpha g_i + beta p) / (alpha + beta)`, together with the bound
//! `|g - m|^2 >= n (mean(g) - mean(m))^2`. Candidates are visited outward from
//! `mean(m)` in a mean-sorted copy of the database until the bound exceeds the
//! best objective so far. Each visited candidate is scored with early abandon,
//! using the same arithmetic as the exhaustive scan, so both paths agree bit for bit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagekit::{downsample, ImageTensor};

pub const PATCH_SIZE: usize = 3;

/// Scale factors of the three pyramid levels.
pub const PYRAMID_SCALES: [usize; 3] = [1, 2, 4];

/// Returns `[hr, S(hr, 2), S(hr, 4)]`.
pub fn build_pyramid(hr: &ImageTensor) -> Result<[ImageTensor; 3]> {
    let top = PYRAMID_SCALES[2];
    if hr.height() % top != 0 || hr.width() % top != 0 {
        return Err(Error::NotDivisible {
            height: hr.height(),
            width: hr.width(),
            factor: top,
        });
    }
    Ok([
        hr.clone(),
        downsample(hr, PYRAMID_SCALES[1])?,
        downsample(hr, PYRAMID_SCALES[2])?,
    ])
}

/// Flattened square patches taken on a regular grid.
///
/// Each patch is stored row by row, channels interleaved, so its length is
/// `patch_size^2 * channels`.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchGrid {
    patch_size: usize,
    stride: usize,
    channels: usize,
    grid_rows: usize,
    grid_cols: usize,
    data: Vec<f64>,
    origins: Vec<(usize, usize)>,
}

impl PatchGrid {
    pub fn patch_size(&self) -> usize {
        self.patch_size
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// `(rows, cols)` of the patch grid.
    pub fn grid_shape(&self) -> (usize, usize) {
        (self.grid_rows, self.grid_cols)
    }

    pub fn len(&self) -> usize {
        self.origins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origins.is_empty()
    }

    pub fn patch_len(&self) -> usize {
        self.patch_size * self.patch_size * self.channels
    }

    pub fn patch(&self, i: usize) -> &[f64] {
        let n = self.patch_len();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn patches(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.data.chunks_exact(self.patch_len())
    }

    pub fn origin(&self, i: usize) -> (usize, usize) {
        self.origins[i]
    }

    pub fn origins(&self) -> &[(usize, usize)] {
        &self.origins
    }
}

/// Extracts every patch whose origin lies on the stride grid and which fits
/// entirely inside the image, in row-major order.
pub fn unfold(img: &ImageTensor, patch_size: usize, stride: usize) -> Result<PatchGrid> {
    if patch_size == 0 || stride == 0 {
        return Err(Error::Config("patch size and stride must be positive".into()));
    }
    let (h, w, ch) = (img.height(), img.width(), img.channels());
    if patch_size > h || patch_size > w {
        return Err(Error::PatchTooLarge {
            patch: patch_size,
            height: h,
            width: w,
        });
    }
    let grid_rows = (h - patch_size) / stride + 1;
    let grid_cols = (w - patch_size) / stride + 1;
    let n = patch_size * patch_size * ch;
    let mut data = Vec::with_capacity(grid_rows * grid_cols * n);
    let mut origins = Vec::with_capacity(grid_rows * grid_cols);
    let src = img.data();
    for gr in 0..grid_rows {
        for gc in 0..grid_cols {
            let (r0, c0) = (gr * stride, gc * stride);
            for dr in 0..patch_size {
                let start = ((r0 + dr) * w + c0) * ch;
                data.extend_from_slice(&src[start..start + patch_size * ch]);
            }
            origins.push((r0, c0));
        }
    }
    Ok(PatchGrid {
        patch_size,
        stride,
        channels: ch,
        grid_rows,
        grid_cols,
        data,
        origins,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchConfig {
    pub patch_size: usize,
    /// Stride of the estimated/ground-truth query patches on the HR image.
    pub query_stride: usize,
    /// Stride used to harvest candidates on every pyramid level.
    pub candidate_stride: usize,
}

impl Default for PatchConfig {
    fn default() -> Self {
        Self {
            patch_size: PATCH_SIZE,
            query_stride: PATCH_SIZE,
            candidate_stride: 1,
        }
    }
}

/// Where a candidate patch came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// Pyramid scale factor: 1, 2 or 4.
    pub level: usize,
    pub row: usize,
    pub col: usize,
}

/// Candidate patches pooled from all pyramid levels.
#[derive(Debug, Clone)]
pub struct PatchDatabase {
    patch_len: usize,
    candidates: Vec<f64>,
    provenance: Vec<Provenance>,
    colocated: Vec<usize>,
    means: Vec<f64>,
    // Mean-sorted copy used by the accelerated search.
    sorted_index: Vec<usize>,
    sorted_means: Vec<f64>,
    sorted_data: Vec<f64>,
}

pub fn build_database(pyramid: &[ImageTensor; 3]) -> Result<PatchDatabase> {
    build_database_with(pyramid, &PatchConfig::default())
}

pub fn build_database_with(pyramid: &[ImageTensor; 3], cfg: &PatchConfig) -> Result<PatchDatabase> {
    if cfg.query_stride % cfg.candidate_stride != 0 {
        return Err(Error::Config(format!(
            "query stride {} must be a multiple of candidate stride {}",
            cfg.query_stride, cfg.candidate_stride
        )));
    }
    let channels = pyramid[0].channels();
    if pyramid.iter().any(|l| l.channels() != channels) {
        return Err(Error::Shape("pyramid levels disagree on channel count".into()));
    }

    let mut candidates = Vec::new();
    let mut provenance = Vec::new();
    let mut level1_cols = 0;
    for (level, img) in PYRAMID_SCALES.iter().zip(pyramid) {
        let grid = match unfold(img, cfg.patch_size, cfg.candidate_stride) {
            Ok(g) => g,
            // coarse levels of small images may be too small to hold a patch
            Err(Error::PatchTooLarge { .. }) if *level > 1 => continue,
            Err(e) => return Err(e),
        };
        if *level == 1 {
            level1_cols = grid.grid_cols;
        }
        candidates.extend_from_slice(&grid.data);
        provenance.extend(grid.origins.iter().map(|&(row, col)| Provenance {
            level: *level,
            row,
            col,
        }));
    }
    let patch_len = cfg.patch_size * cfg.patch_size * channels;

    let hr = &pyramid[0];
    let qrows = (hr.height() - cfg.patch_size) / cfg.query_stride + 1;
    let qcols = (hr.width() - cfg.patch_size) / cfg.query_stride + 1;
    let step = cfg.query_stride / cfg.candidate_stride;
    let colocated = (0..qrows)
        .flat_map(|qr| (0..qcols).map(move |qc| qr * step * level1_cols + qc * step))
        .collect();

    let means: Vec<f64> = candidates
        .chunks_exact(patch_len)
        .map(|p| p.iter().sum::<f64>() / patch_len as f64)
        .collect();
    let mut sorted_index: Vec<usize> = (0..means.len()).collect();
    sorted_index.sort_by(|&a, &b| means[a].total_cmp(&means[b]).then(a.cmp(&b)));
    let sorted_means = sorted_index.iter().map(|&i| means[i]).collect();
    let mut sorted_data = Vec::with_capacity(candidates.len());
    for &i in &sorted_index {
        sorted_data.extend_from_slice(&candidates[i * patch_len..(i + 1) * patch_len]);
    }

    Ok(PatchDatabase {
        patch_len,
        candidates,
        provenance,
        colocated,
        means,
        sorted_index,
        sorted_means,
        sorted_data,
    })
}

impl PatchDatabase {
    pub fn len(&self) -> usize {
        self.provenance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.provenance.is_empty()
    }

    pub fn patch_len(&self) -> usize {
        self.patch_len
    }

    pub fn candidate(&self, i: usize) -> &[f64] {
        &self.candidates[i * self.patch_len..(i + 1) * self.patch_len]
    }

    pub fn candidates(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.candidates.chunks_exact(self.patch_len)
    }

    pub fn provenance(&self, i: usize) -> Provenance {
        self.provenance[i]
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.means[i]
    }

    /// Database index of the level-1 candidate colocated with query `q`.
    pub fn colocated_index(&self, q: usize) -> usize {
        self.colocated[q]
    }

    pub fn query_count(&self) -> usize {
        self.colocated.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    Brute,
    #[serde(alias = "fast")]
    Accelerated,
}

impl std::str::FromStr for SearchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "brute" => Ok(SearchMode::Brute),
            "fast" | "accelerated" => Ok(SearchMode::Accelerated),
            other => Err(Error::Config(format!("unknown search mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuddySearchConfig {
    pub alpha: f64,
    pub beta: f64,
    pub mode: SearchMode,
}

impl Default for BuddySearchConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            mode: SearchMode::Accelerated,
        }
    }
}

impl BuddySearchConfig {
    pub fn new(alpha: f64, beta: f64, mode: SearchMode) -> Self {
        Self { alpha, beta, mode }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.beta.is_finite()) {
            return Err(Error::Config("alpha and beta must be finite".into()));
        }
        if self.alpha < 0.0 || self.beta < 0.0 || self.alpha + self.beta <= 0.0 {
            return Err(Error::Config(format!(
                "need alpha >= 0, beta >= 0 and alpha + beta > 0 (got {}, {})",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }
}

/// The chosen buddy for one query patch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuddyMatch {
    pub query_index: usize,
    pub buddy_index: usize,
    pub objective: f64,
    pub dist_to_gt: f64,
    pub dist_to_est: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuddyAssignment {
    pub matches: Vec<BuddyMatch>,
}

/// Serialised form of a [`BuddyMatch`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuddyRecord {
    pub query_index: usize,
    pub buddy: Provenance,
    pub objective: f64,
    pub dist_to_gt: f64,
    pub dist_to_est: f64,
}

impl BuddyAssignment {
    pub fn len(&self) -> usize {
        self.matches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matches.is_empty()
    }

    pub fn buddy_indices(&self) -> Vec<usize> {
        self.matches.iter().map(|m| m.buddy_index).collect()
    }

    pub fn records(&self, db: &PatchDatabase) -> Vec<BuddyRecord> {
        self.matches
            .iter()
            .map(|m| BuddyRecord {
                query_index: m.query_index,
                buddy: db.provenance(m.buddy_index),
                objective: m.objective,
                dist_to_gt: m.dist_to_gt,
                dist_to_est: m.dist_to_est,
            })
            .collect()
    }
}

/// Squared distances `(|g - g_i|^2, |g - p|^2)` accumulated left to right.
#[inline]
pub fn patch_distances(g: &[f64], gt: &[f64], est: &[f64]) -> (f64, f64) {
    let mut dg = 0.0;
    let mut de = 0.0;
    for ((&a, &b), &c) in g.iter().zip(gt).zip(est) {
        let u = a - b;
        let v = a - c;
        dg += u * u;
        de += v * v;
    }
    (dg, de)
}

const ABANDON_CHUNK: usize = 9;

/// Same accumulation as [`patch_distances`], abandoning once the partial
/// objective exceeds `bound`.
#[inline]
fn patch_distances_bounded(
    g: &[f64],
    gt: &[f64],
    est: &[f64],
    alpha: f64,
    beta: f64,
    bound: f64,
) -> Option<(f64, f64)> {
    let mut dg = 0.0;
    let mut de = 0.0;
    let n = g.len();
    let mut start = 0;
    while start < n {
        let end = (start + ABANDON_CHUNK).min(n);
        for k in start..end {
            let u = g[k] - gt[k];
            let v = g[k] - est[k];
            dg += u * u;
            de += v * v;
        }
        if alpha * dg + beta * de > bound {
            return None;
        }
        start = end;
    }
    Some((dg, de))
}

pub fn buddy_search(
    queries: &PatchGrid,
    gts: &PatchGrid,
    db: &PatchDatabase,
    cfg: &BuddySearchConfig,
) -> Result<BuddyAssignment> {
    cfg.validate()?;
    if db.is_empty() {
        return Err(Error::EmptyDatabase);
    }
    if queries.len() != gts.len() || queries.patch_len() != gts.patch_len() {
        return Err(Error::Misaligned(format!(
            "{} estimated patches of length {} vs {} ground-truth patches of length {}",
            queries.len(),
            queries.patch_len(),
            gts.len(),
            gts.patch_len()
        )));
    }
    if queries.origins() != gts.origins() {
        return Err(Error::Misaligned("patch origins differ".into()));
    }
    if gts.patch_len() != db.patch_len() || gts.len() != db.query_count() {
        return Err(Error::Misaligned(format!(
            "{} ground-truth patches of length {} vs database built for {} queries of length {}",
            gts.len(),
            gts.patch_len(),
            db.query_count(),
            db.patch_len()
        )));
    }
    if let Some(i) = (0..gts.len()).find(|&i| gts.patch(i) != db.candidate(db.colocated_index(i))) {
        return Err(Error::Misaligned(format!(
            "ground-truth patch {i} is not in the database at its colocated position"
        )));
    }

    let matches = (0..queries.len())
        .into_par_iter()
        .map(|i| {
            let est = queries.patch(i);
            let gt = gts.patch(i);
            let coloc = db.colocated_index(i);
            match cfg.mode {
                SearchMode::Brute => search_brute(db, i, gt, est, coloc, cfg),
                SearchMode::Accelerated => search_accelerated(db, i, gt, est, coloc, cfg),
            }
        })
        .collect();
    Ok(BuddyAssignment { matches })
}

fn make_match(query_index: usize, buddy_index: usize, d: (f64, f64), cfg: &BuddySearchConfig) -> BuddyMatch {
    BuddyMatch {
        query_index,
        buddy_index,
        objective: cfg.alpha * d.0 + cfg.beta * d.1,
        dist_to_gt: d.0,
        dist_to_est: d.1,
    }
}

fn search_brute(
    db: &PatchDatabase,
    query: usize,
    gt: &[f64],
    est: &[f64],
    coloc: usize,
    cfg: &BuddySearchConfig,
) -> BuddyMatch {
    let mut best = (usize::MAX, f64::INFINITY, (0.0, 0.0));
    let mut coloc_entry = (f64::INFINITY, (0.0, 0.0));
    for (j, g) in db.candidates().enumerate() {
        let d = patch_distances(g, gt, est);
        let obj = cfg.alpha * d.0 + cfg.beta * d.1;
        if obj < best.1 {
            best = (j, obj, d);
        }
        if j == coloc {
            coloc_entry = (obj, d);
        }
    }
    if coloc_entry.0 == best.1 {
        make_match(query, coloc, coloc_entry.1, cfg)
    } else {
        make_match(query, best.0, best.2, cfg)
    }
}

fn search_accelerated(
    db: &PatchDatabase,
    query: usize,
    gt: &[f64],
    est: &[f64],
    coloc: usize,
    cfg: &BuddySearchConfig,
) -> BuddyMatch {
    let (alpha, beta) = (cfg.alpha, cfg.beta);
    let n = db.patch_len;
    let wsum = alpha + beta;

    let blend_mean = gt
        .iter()
        .zip(est)
        .map(|(&a, &b)| (alpha * a + beta * b) / wsum)
        .sum::<f64>()
        / n as f64;
    let (gap, _) = patch_distances(gt, est, est);
    let floor = alpha * beta / wsum * gap;
    let lower_bound = |dmean: f64| wsum * n as f64 * dmean * dmean + floor;

    let d0 = patch_distances(db.candidate(coloc), gt, est);
    let mut best_idx = coloc;
    let mut best_obj = alpha * d0.0 + beta * d0.1;
    let mut best_d = d0;

    let total = db.sorted_means.len();
    let split = db.sorted_means.partition_point(|&m| m < blend_mean);
    let mut lo = split;
    let mut hi = split;
    loop {
        let dlo = if lo > 0 {
            blend_mean - db.sorted_means[lo - 1]
        } else {
            f64::INFINITY
        };
        let dhi = if hi < total {
            db.sorted_means[hi] - blend_mean
        } else {
            f64::INFINITY
        };
        let (pos, dmean) = if dlo <= dhi {
            if lo == 0 {
                break;
            }
            lo -= 1;
            (lo, dlo)
        } else {
            hi += 1;
            (hi - 1, dhi)
        };
        let threshold = best_obj + 1e-10 * best_obj.abs() + 1e-12;
        if lower_bound(dmean) > threshold {
            break;
        }
        let j = db.sorted_index[pos];
        if j == coloc {
            continue;
        }
        let g = &db.sorted_data[pos * n..(pos + 1) * n];
        if let Some(d) = patch_distances_bounded(g, gt, est, alpha, beta, best_obj) {
            let obj = alpha * d.0 + beta * d.1;
            if obj < best_obj || (obj == best_obj && best_idx != coloc && j < best_idx) {
                best_idx = j;
                best_obj = obj;
                best_d = d;
            }
        }
    }
    make_match(query, best_idx, best_d, cfg)
}

/// Estimated patches, ground-truth patches and the candidate database for one
/// SR/HR pair.
#[derive(Debug, Clone)]
pub struct BuddyProblem {
    pub queries: PatchGrid,
    pub gts: PatchGrid,
    pub db: PatchDatabase,
}

impl BuddyProblem {
    /// `sr` and `hr` must share a shape with both dimensions divisible by the
    /// query stride and by the coarsest pyramid factor.
    pub fn new(sr: &ImageTensor, hr: &ImageTensor) -> Result<Self> {
        Self::with_config(sr, hr, &PatchConfig::default())
    }

    pub fn with_config(sr: &ImageTensor, hr: &ImageTensor, cfg: &PatchConfig) -> Result<Self> {
        crate::imagekit::check_same_shape(sr, hr)?;
        for factor in [cfg.query_stride, PYRAMID_SCALES[2]] {
            if hr.height() % factor != 0 || hr.width() % factor != 0 {
                return Err(Error::NotDivisible {
                    height: hr.height(),
                    width: hr.width(),
                    factor,
                });
            }
        }
        let pyramid = build_pyramid(hr)?;
        let db = build_database_with(&pyramid, cfg)?;
        let queries = unfold(sr, cfg.patch_size, cfg.query_stride)?;
        let gts = unfold(hr, cfg.patch_size, cfg.query_stride)?;
        Ok(Self { queries, gts, db })
    }

    pub fn search(&self, cfg: &BuddySearchConfig) -> Result<BuddyAssignment> {
        buddy_search(&self.queries, &self.gts, &self.db, cfg)
    }
}

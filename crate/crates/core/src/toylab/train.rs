use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{Adam, MlpModel};
use super::swissroll::{SwissRoll, SwissRollSample};
use crate::error::{Error, Result};
use crate::synth::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Mae,
    Mse,
    Bbl,
}

impl LossKind {
    pub const ALL: [LossKind; 3] = [LossKind::Mae, LossKind::Mse, LossKind::Bbl];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Mae => "mae",
            LossKind::Mse => "mse",
            LossKind::Bbl => "bbl",
        }
    }
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mae" => Ok(LossKind::Mae),
            "mse" => Ok(LossKind::Mse),
            "bbl" => Ok(LossKind::Bbl),
            other => Err(Error::Config(format!("unknown loss kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyTrainConfig {
    pub loss_kind: LossKind,
    pub n_train: usize,
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Anneal the learning rate to zero along a half cosine.
    pub cosine_decay: bool,
    pub seed: u64,
    pub alpha: f64,
    pub beta: f64,
    pub roll: SwissRoll,
}

impl Default for ToyTrainConfig {
    fn default() -> Self {
        Self {
            loss_kind: LossKind::Bbl,
            n_train: 32768,
            steps: 40_000,
            batch_size: 128,
            learning_rate: 3e-3,
            cosine_decay: true,
            seed: 0,
            alpha: 1.0,
            beta: 1.0,
            roll: SwissRoll::default(),
        }
    }
}

impl ToyTrainConfig {
    pub fn new(loss_kind: LossKind, seed: u64) -> Self {
        Self {
            loss_kind,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_train == 0 || self.steps == 0 || self.batch_size == 0 {
            return Err(Error::Config("n_train, steps and batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.alpha < 0.0 || self.beta < 0.0 || self.alpha + self.beta <= 0.0 {
            return Err(Error::Config("need alpha, beta >= 0 with alpha + beta > 0".into()));
        }
        Ok(())
    }

    /// Seed of the training set, shared by all loss kinds of one run.
    pub fn data_seed(&self) -> u64 {
        self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0xDA7A
    }

    pub fn training_set(&self) -> Vec<SwissRollSample> {
        self.roll.sample(self.n_train, self.data_seed())
    }
}

#[inline]
fn buddy_objective(g: [f64; 2], gt: [f64; 2], est: [f64; 2], alpha: f64, beta: f64) -> f64 {
    let dg = (g[0] - gt[0]).powi(2) + (g[1] - gt[1]).powi(2);
    let de = (g[0] - est[0]).powi(2) + (g[1] - est[1]).powi(2);
    alpha * dg + beta * de
}

/// Index of the target minimising `alpha |g - gt|^2 + beta |g - est|^2`,
/// lowest index on ties.
pub fn toy_buddy_index(targets: &[[f64; 2]], gt: [f64; 2], est: [f64; 2], alpha: f64, beta: f64) -> Result<usize> {
    if targets.is_empty() {
        return Err(Error::EmptyDatabase);
    }
    let mut best = (0, f64::INFINITY);
    for (j, &g) in targets.iter().enumerate() {
        let obj = buddy_objective(g, gt, est, alpha, beta);
        if obj < best.1 {
            best = (j, obj);
        }
    }
    Ok(best.0)
}

pub fn toy_buddy(targets: &[[f64; 2]], gt: [f64; 2], est: [f64; 2], alpha: f64, beta: f64) -> Result<[f64; 2]> {
    toy_buddy_index(targets, gt, est, alpha, beta).map(|j| targets[j])
}

/// Exact buddy lookup over a fixed target set, equivalent to
/// [`toy_buddy_index`] including its tie-breaking.
///
/// With `m = (alpha gt + beta est) / (alpha + beta)` the objective equals
/// `(alpha + beta) |g - m|^2 + alpha beta / (alpha + beta) |gt - est|^2`, so the
/// buddy is the target nearest to `m`. Targets are bucketed on a uniform grid
/// and cells are visited in rings around `m` until no remaining cell can beat
/// the best objective.
#[derive(Debug, Clone)]
pub struct ToyBuddyIndex {
    targets: Vec<[f64; 2]>,
    origin: [f64; 2],
    cell: f64,
    dims: [usize; 2],
    // CSR layout: targets of cell `c` are `order[starts[c]..starts[c + 1]]`,
    // ascending by index
    starts: Vec<usize>,
    order: Vec<usize>,
}

impl ToyBuddyIndex {
    pub fn new(targets: &[[f64; 2]]) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::EmptyDatabase);
        }
        if targets.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("toy target".into()));
        }
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for t in targets {
            for k in 0..2 {
                lo[k] = lo[k].min(t[k]);
                hi[k] = hi[k].max(t[k]);
            }
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
        let per_axis = ((0.5 * (targets.len() as f64).sqrt()).ceil() as usize).clamp(1, 1024);
        let cell = span / per_axis as f64;
        let dims = [
            ((hi[0] - lo[0]) / cell) as usize + 1,
            ((hi[1] - lo[1]) / cell) as usize + 1,
        ];
        let mut index = Self {
            targets: targets.to_vec(),
            origin: lo,
            cell,
            dims,
            starts: vec![0; dims[0] * dims[1] + 1],
            order: vec![0; targets.len()],
        };
        let cells: Vec<usize> = targets.iter().map(|&t| index.cell_of(t)).collect();
        for &c in &cells {
            index.starts[c + 1] += 1;
        }
        for c in 0..dims[0] * dims[1] {
            index.starts[c + 1] += index.starts[c];
        }
        let mut fill = index.starts.clone();
        for (i, &c) in cells.iter().enumerate() {
            index.order[fill[c]] = i;
            fill[c] += 1;
        }
        Ok(index)
    }

    fn coord(&self, v: f64, k: usize) -> usize {
        (((v - self.origin[k]) / self.cell).floor().max(0.0) as usize).min(self.dims[k] - 1)
    }

    fn cell_of(&self, p: [f64; 2]) -> usize {
        self.coord(p[1], 1) * self.dims[0] + self.coord(p[0], 0)
    }

    /// Squared distance from `p` to the rectangle of cell `(cx, cy)`.
    fn cell_dist2(&self, p: [f64; 2], cx: usize, cy: usize) -> f64 {
        let gap = |v: f64, c: usize, k: usize| {
            let a = self.origin[k] + c as f64 * self.cell;
            let b = a + self.cell;
            if v < a {
                a - v
            } else if v > b {
                v - b
            } else {
                0.0
            }
        };
        gap(p[0], cx, 0).powi(2) + gap(p[1], cy, 1).powi(2)
    }

    pub fn query(&self, gt: [f64; 2], est: [f64; 2], alpha: f64, beta: f64) -> usize {
        let wsum = alpha + beta;
        let m = [(alpha * gt[0] + beta * est[0]) / wsum, (alpha * gt[1] + beta * est[1]) / wsum];
        let gap = (gt[0] - est[0]).powi(2) + (gt[1] - est[1]).powi(2);
        let floor = alpha * beta / wsum * gap;
        let (cx, cy) = (self.coord(m[0], 0) as isize, self.coord(m[1], 1) as isize);
        let max_ring = self.dims[0].max(self.dims[1]) as isize;
        let mut best = (usize::MAX, f64::INFINITY);
        for ring in 0..=max_ring {
            let threshold = best.1 + 1e-10 * best.1.abs() + 1e-12;
            // every cell of this ring is at least (ring - 1) cells away from m
            let reach = (ring - 1).max(0) as f64 * self.cell;
            if wsum * reach * reach + floor > threshold {
                break;
            }
            for y in cy - ring..=cy + ring {
                if y < 0 || y >= self.dims[1] as isize {
                    continue;
                }
                let on_edge = y == cy - ring || y == cy + ring;
                let step = if on_edge { 1 } else { (2 * ring).max(1) };
                let mut x = cx - ring;
                while x <= cx + ring {
                    if x >= 0 && x < self.dims[0] as isize {
                        let (ux, uy) = (x as usize, y as usize);
                        let threshold = best.1 + 1e-10 * best.1.abs() + 1e-12;
                        if wsum * self.cell_dist2(m, ux, uy) + floor <= threshold {
                            let c = uy * self.dims[0] + ux;
                            for &j in &self.order[self.starts[c]..self.starts[c + 1]] {
                                let obj = buddy_objective(self.targets[j], gt, est, alpha, beta);
                                if obj < best.1 || (obj == best.1 && j < best.0) {
                                    best = (j, obj);
                                }
                            }
                        }
                    }
                    x += step;
                }
            }
        }
        best.0
    }
}

/// Trains on a freshly generated training set (see [`ToyTrainConfig::training_set`]).
pub fn train_toy(cfg: &ToyTrainConfig) -> Result<MlpModel> {
    train_toy_on(cfg, &cfg.training_set())
}

/// Mini-batch Adam on the given samples. For `Bbl`, each sample's target is
/// replaced by its best buddy among all training targets, then L1 applies.
pub fn train_toy_on(cfg: &ToyTrainConfig, data: &[SwissRollSample]) -> Result<MlpModel> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Config("empty training set".into()));
    }
    let targets: Vec<[f64; 2]> = data.iter().map(|s| s.y).collect();
    let index = ToyBuddyIndex::new(&targets)?;
    let extent = cfg.roll.scale * cfg.roll.t_max;
    let mut model = MlpModel::init(&MlpModel::TOY_SIZES, cfg.seed ^ 0x1A1E).with_scales(2.0 / extent, extent / 2.0);
    let mut opt = Adam::new(model.param_count(), cfg.learning_rate);
    let mut rng = rng(cfg.seed ^ 0xBA7C);
    let mut grad = vec![0.0; model.param_count()];
    let scale = 1.0 / (2 * cfg.batch_size) as f64;

    for step in 0..cfg.steps {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        for _ in 0..cfg.batch_size {
            let sample = &data[rng.random_range(0..data.len())];
            let trace = model.forward_trace(&[sample.x]);
            let out = trace.activations.last().expect("output");
            let est = [out[0], out[1]];
            let target = match cfg.loss_kind {
                LossKind::Bbl => {
                    let j = index.query(sample.y, est, cfg.alpha, cfg.beta);
                    debug_assert!(
                        buddy_objective(targets[j], sample.y, est, cfg.alpha, cfg.beta)
                            <= buddy_objective(sample.y, sample.y, est, cfg.alpha, cfg.beta)
                    );
                    targets[j]
                }
                _ => sample.y,
            };
            let mut out_grad = [0.0; 2];
            for k in 0..2 {
                let r = est[k] - target[k];
                match cfg.loss_kind {
                    LossKind::Mse => {
                        loss += r * r * scale;
                        out_grad[k] = 2.0 * r * scale;
                    }
                    LossKind::Mae | LossKind::Bbl => {
                        loss += r.abs() * scale;
                        out_grad[k] = if r > 0.0 {
                            scale
                        } else if r < 0.0 {
                            -scale
                        } else {
                            0.0
                        };
                    }
                }
            }
            model.accumulate_grad(&trace, &out_grad, &mut grad);
        }
        if !loss.is_finite() {
            return Err(Error::Diverged { step, loss });
        }
        if cfg.cosine_decay {
            let progress = step as f64 / cfg.steps as f64;
            opt.lr = cfg.learning_rate * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos());
        }
        opt.step(model.params_mut(), &grad);
    }
    model.check_finite()?;
    Ok(model)
}

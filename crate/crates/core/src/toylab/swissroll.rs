use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::synth::rng;

/// Two-dimensional HR target `y` and its LR observation `x = (y1 + y2) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwissRollSample {
    pub y: [f64; 2],
    pub x: f64,
}

impl SwissRollSample {
    pub fn new(y: [f64; 2]) -> Self {
        Self {
            y,
            x: downsample_target(y),
        }
    }
}

/// The linear HR-to-LR map of the toy problem.
#[inline]
pub fn downsample_target(y: [f64; 2]) -> f64 {
    (y[0] + y[1]) / 2.0
}

/// Points `scale * (t cos t, t sin t)` for `t` in `[t_min, t_max]`, plus
/// isotropic Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwissRoll {
    pub scale: f64,
    pub noise: f64,
    pub t_min: f64,
    pub t_max: f64,
}

impl Default for SwissRoll {
    fn default() -> Self {
        Self {
            scale: 1.0,
            noise: 0.05,
            t_min: 1.5 * PI,
            t_max: 4.5 * PI,
        }
    }
}

impl SwissRoll {
    pub fn curve(&self, t: f64) -> [f64; 2] {
        [self.scale * t * t.cos(), self.scale * t * t.sin()]
    }

    pub fn sample(&self, n: usize, seed: u64) -> Vec<SwissRollSample> {
        let mut rng = rng(seed);
        let noise = Normal::new(0.0, self.noise).expect("noise must be finite and >= 0");
        (0..n)
            .map(|_| {
                let t = self.t_min + (self.t_max - self.t_min) * rng.random::<f64>();
                let c = self.curve(t);
                SwissRollSample::new([c[0] + noise.sample(&mut rng), c[1] + noise.sample(&mut rng)])
            })
            .collect()
    }

    /// Euclidean distance from `p` to the noiseless curve and the parameter of
    /// the closest point: a dense scan over `t` followed by golden-section
    /// refinement inside the bracketing samples.
    pub fn distance_to_curve(&self, p: [f64; 2]) -> (f64, f64) {
        const SAMPLES: usize = 10_000;
        let step = (self.t_max - self.t_min) / (SAMPLES - 1) as f64;
        let sq = |t: f64| {
            let c = self.curve(t);
            (c[0] - p[0]).powi(2) + (c[1] - p[1]).powi(2)
        };
        let mut best = (0, f64::INFINITY);
        for i in 0..SAMPLES {
            let d = sq(self.t_min + i as f64 * step);
            if d < best.1 {
                best = (i, d);
            }
        }
        let centre = self.t_min + best.0 as f64 * step;
        let mut a = (centre - step).max(self.t_min);
        let mut b = (centre + step).min(self.t_max);
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let (mut fc, mut fd) = (sq(c), sq(d));
        for _ in 0..60 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = sq(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = sq(d);
            }
        }
        let (t, d2) = [(centre, best.1), (c, fc), (d, fd)]
            .into_iter()
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("non-empty");
        (d2.sqrt(), t)
    }
}

/// Samples from the default roll.
pub fn gen_swiss_roll(n: usize, seed: u64) -> Vec<SwissRollSample> {
    SwissRoll::default().sample(n, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lr_is_mean_of_hr() {
        for s in gen_swiss_roll(200, 3) {
            assert_eq!(s.x, (s.y[0] + s.y[1]) / 2.0);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(gen_swiss_roll(64, 9), gen_swiss_roll(64, 9));
        assert_ne!(gen_swiss_roll(64, 9), gen_swiss_roll(64, 10));
    }

    #[test]
    fn bounded() {
        let roll = SwissRoll::default();
        let bound = roll.scale * roll.t_max + 5.0 * roll.noise;
        assert!(gen_swiss_roll(4096, 0)
            .iter()
            .all(|s| s.y[0].abs() <= bound && s.y[1].abs() <= bound));
    }

    #[test]
    fn on_curve_distance_is_zero() {
        let roll = SwissRoll::default();
        for t in [5.0, 7.3, 11.1, 14.0] {
            let (d, tt) = roll.distance_to_curve(roll.curve(t));
            assert!(d < 1e-6, "{t}: {d}");
            assert!((tt - t).abs() < 1e-4);
        }
    }
}

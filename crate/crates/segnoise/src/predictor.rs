//! Pluggable per-pixel predictor, plus the built-in logistic reference
//! model used by the desk-scale training loop.
//!
//! The reference model scores each pixel as a linear combination of a
//! fixed feature vector: raw intensity, box means at radii 1, 2 and 4,
//! and the box standard deviation at radius 2, all standardized per
//! image. The predicted image is the min-max-normalized score, which is
//! invariant to the scale of the weight vector, so training only has to
//! find a direction: one stochastic-gradient step per image per pass on
//! class-weighted, label-smoothed cross-entropy, followed by projection
//! of the weights back onto the unit sphere. The projection is what keeps
//! very sparse pseudo-labels workable: their cross-entropy optimum is
//! "everything is background", which shrinks unconstrained weights
//! through zero and flips the orientation, while on the sphere the same
//! updates only rotate the direction toward the class discriminant.
//!
//! The normalized score also serves the downstream candidate selection:
//! the two class clusters stay tight in score space instead of smearing
//! into the long soft tails a saturating link produces, and the
//! determinant criterion then lands on the inter-cluster gap. Orientation
//! (bright is foreground) comes from the positive initial weights; the
//! swap-invariant selection cannot decide it.

use crate::error::{Error, Result};
use crate::grid::{IntensityImage, LabelImage, ProbImage};
use crate::par;

/// A trainable per-pixel scorer.
pub trait Predictor {
    /// One pass over the training set against the current pseudo-labels.
    fn fit_epoch(
        &mut self,
        images: &[IntensityImage],
        labels: &[LabelImage],
        learning_rate: f64,
    ) -> Result<()>;

    /// Deterministic forward pass.
    fn predict(&self, image: &IntensityImage) -> Result<ProbImage>;
}

/// Number of per-pixel features.
pub const NUM_FEATURES: usize = 5;

/// Gradient L2 norms above this are rescaled before the update.
const GRAD_CLIP: f64 = 2.0;

/// Cross-entropy targets are smoothed to `[SMOOTH, 1 - SMOOTH]` so that
/// extreme label sparsity keeps bounded equilibria.
const LABEL_SMOOTH: f64 = 0.1;

/// Linear scorer with unit-norm weights over local intensity statistics.
#[derive(Debug, Clone)]
pub struct LogisticPredictor {
    weights: [f64; NUM_FEATURES],
}

impl Default for LogisticPredictor {
    fn default() -> Self {
        Self::new()
    }
}

impl LogisticPredictor {
    pub fn new() -> Self {
        let mut weights = [1.0; NUM_FEATURES];
        weights[NUM_FEATURES - 1] = 0.0; // box std starts neutral
        normalize(&mut weights);
        Self { weights }
    }

    pub fn weights(&self) -> &[f64; NUM_FEATURES] {
        &self.weights
    }

    fn features(image: &IntensityImage) -> FeatureGrid {
        FeatureGrid::compute(image)
    }
}

fn normalize(weights: &mut [f64; NUM_FEATURES]) {
    let norm = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
    if norm > 1e-12 {
        for w in weights.iter_mut() {
            *w /= norm;
        }
    } else {
        weights[0] = 1.0;
    }
}

impl Predictor for LogisticPredictor {
    fn fit_epoch(
        &mut self,
        images: &[IntensityImage],
        labels: &[LabelImage],
        learning_rate: f64,
    ) -> Result<()> {
        if images.len() != labels.len() {
            return Err(Error::OutOfRange(
                "training set",
                format!("{} images vs {} labels", images.len(), labels.len()),
            ));
        }
        for (image, label) in images.iter().zip(labels) {
            label.require_binary()?;
            // single-class pseudo-labels (the all-background start) carry
            // no class contrast; the pass is a no-op for them
            let positives = label.data().iter().filter(|&&v| v != 0).count();
            if positives == 0 || positives == label.data().len() {
                continue;
            }
            let grid = Self::features(image);
            // tempered inverse-frequency weighting: enough pull that a
            // subsampled foreground is not drowned out by the structure
            // pixels left marked background, without letting a few dozen
            // pixels dominate the step
            let a = positives as f64 / label.data().len() as f64;
            let mut grad_w = grid.backward_ce(&self.weights, label, 0.5 / a.sqrt(), 0.5);
            let norm = grad_w.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm > GRAD_CLIP {
                for g in grad_w.iter_mut() {
                    *g *= GRAD_CLIP / norm;
                }
            }
            for f in 0..NUM_FEATURES {
                self.weights[f] -= learning_rate * grad_w[f];
            }
            normalize(&mut self.weights);
        }
        Ok(())
    }

    fn predict(&self, image: &IntensityImage) -> Result<ProbImage> {
        Self::features(image).normalized_score(&self.weights)
    }
}

/// Standardized per-pixel feature matrix of one image.
struct FeatureGrid {
    width: usize,
    height: usize,
    /// Row-major, `NUM_FEATURES` values per pixel.
    values: Vec<f64>,
}

impl FeatureGrid {
    fn compute(image: &IntensityImage) -> Self {
        let (w, h) = (image.width(), image.height());
        let sums = Integral::new(image, |v| v);
        let sq_sums = Integral::new(image, |v| v * v);

        let raw_rows = par::map_rows(h, |y| {
            let mut row = Vec::with_capacity(w * NUM_FEATURES);
            for x in 0..w {
                let v = image.get(x, y);
                let m1 = sums.mean(x, y, 1);
                let m2 = sums.mean(x, y, 2);
                let m4 = sums.mean(x, y, 4);
                let var = (sq_sums.mean(x, y, 2) - m2 * m2).max(0.0);
                row.extend_from_slice(&[v, m1, m2, m4, var.sqrt()]);
            }
            row
        });
        let mut values = par::concat_rows(raw_rows);

        // standardize each feature over the image
        let n = (w * h) as f64;
        for f in 0..NUM_FEATURES {
            let mut sum = 0.0;
            let mut sq = 0.0;
            for px in 0..w * h {
                let v = values[px * NUM_FEATURES + f];
                sum += v;
                sq += v * v;
            }
            let mean = sum / n;
            let std = ((sq / n - mean * mean).max(0.0)).sqrt().max(1e-9);
            for px in 0..w * h {
                let v = &mut values[px * NUM_FEATURES + f];
                *v = (*v - mean) / std;
            }
        }
        Self {
            width: w,
            height: h,
            values,
        }
    }

    fn scores(&self, weights: &[f64; NUM_FEATURES]) -> Vec<f64> {
        let (w, h) = (self.width, self.height);
        let rows = par::map_rows(h, |y| {
            (0..w)
                .map(|x| {
                    let base = (y * w + x) * NUM_FEATURES;
                    (0..NUM_FEATURES)
                        .map(|f| weights[f] * self.values[base + f])
                        .sum::<f64>()
                })
                .collect::<Vec<f64>>()
        });
        par::concat_rows(rows)
    }

    /// Linear scores rescaled to `[0, 1]`; a constant score map becomes
    /// the flat image 0.5.
    fn normalized_score(&self, weights: &[f64; NUM_FEATURES]) -> Result<ProbImage> {
        let mut z = self.scores(weights);
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &v in &z {
            min = min.min(v);
            max = max.max(v);
        }
        if max > min {
            let span = max - min;
            for v in z.iter_mut() {
                *v = (*v - min) / span;
            }
        } else {
            for v in z.iter_mut() {
                *v = 0.5;
            }
        }
        ProbImage::new(self.width, self.height, z)
    }

    /// Mean class-weighted smoothed cross-entropy gradient through the
    /// logistic link: `Σ_x ω(x) (σ(z) - s) f(x) / n`, per-row partials
    /// folded in row order. The class weights keep a handful of positive
    /// pseudo-label pixels from being drowned out by structure pixels the
    /// subsampling left marked as background.
    fn backward_ce(
        &self,
        weights: &[f64; NUM_FEATURES],
        label: &LabelImage,
        w_pos: f64,
        w_neg: f64,
    ) -> [f64; NUM_FEATURES] {
        let (w, h) = (self.width, self.height);
        let rows = par::map_rows(h, |y| {
            let mut acc = [0.0f64; NUM_FEATURES];
            for x in 0..w {
                let px = y * w + x;
                let base = px * NUM_FEATURES;
                let z: f64 = (0..NUM_FEATURES)
                    .map(|f| weights[f] * self.values[base + f])
                    .sum();
                let sigma = 1.0 / (1.0 + (-z).exp());
                let (s, weight) = if label.data()[px] != 0 {
                    (1.0 - LABEL_SMOOTH, w_pos)
                } else {
                    (LABEL_SMOOTH, w_neg)
                };
                let gz = weight * (sigma - s);
                for f in 0..NUM_FEATURES {
                    acc[f] += gz * self.values[base + f];
                }
            }
            acc
        });
        let mut total = [0.0f64; NUM_FEATURES];
        let n = (w * h) as f64;
        for row in rows {
            for f in 0..NUM_FEATURES {
                total[f] += row[f];
            }
        }
        for t in total.iter_mut() {
            *t /= n;
        }
        total
    }
}

/// Integral image over a transformed intensity grid.
struct Integral {
    width: usize,
    height: usize,
    sums: Vec<f64>,
}

impl Integral {
    fn new(image: &IntensityImage, f: impl Fn(f64) -> f64) -> Self {
        let (w, h) = (image.width(), image.height());
        let mut sums = vec![0.0f64; (w + 1) * (h + 1)];
        for y in 0..h {
            let mut row_sum = 0.0;
            for x in 0..w {
                row_sum += f(image.get(x, y));
                sums[(y + 1) * (w + 1) + x + 1] = sums[y * (w + 1) + x + 1] + row_sum;
            }
        }
        Self {
            width: w,
            height: h,
            sums,
        }
    }

    /// Mean over the clipped `(2r+1)`-square window.
    #[inline]
    fn mean(&self, x: usize, y: usize, r: usize) -> f64 {
        let x1 = x.saturating_sub(r);
        let y1 = y.saturating_sub(r);
        let x2 = (x + r).min(self.width - 1);
        let y2 = (y + r).min(self.height - 1);
        let w1 = self.width + 1;
        let total = self.sums[(y2 + 1) * w1 + x2 + 1] + self.sums[y1 * w1 + x1]
            - self.sums[y1 * w1 + x2 + 1]
            - self.sums[(y2 + 1) * w1 + x1];
        total / ((x2 - x1 + 1) * (y2 - y1 + 1)) as f64
    }
}

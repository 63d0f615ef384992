//! Otsu thresholding, the unsupervised baseline the training loop is
//! measured against. Kept fully independent of the predictor path.

use crate::grid::{IntensityImage, LabelImage};

/// Otsu threshold level on the 256-bin histogram of the quantized image.
pub fn otsu_level(image: &IntensityImage) -> u8 {
    let mut hist = [0u32; 256];
    for &v in image.data() {
        hist[(v.clamp(0.0, 1.0) * 255.0).round() as usize] += 1;
    }
    let total = image.data().len() as f64;
    let total_sum: f64 = hist
        .iter()
        .enumerate()
        .map(|(t, &c)| t as f64 * f64::from(c))
        .sum();
    let mut bg_weight = 0.0f64;
    let mut bg_sum = 0.0f64;
    let mut best = (0u8, 0.0f64);
    for t in 0..256 {
        bg_weight += f64::from(hist[t]);
        if bg_weight == 0.0 {
            continue;
        }
        let fg_weight = total - bg_weight;
        if fg_weight == 0.0 {
            break;
        }
        bg_sum += t as f64 * f64::from(hist[t]);
        let bg_mean = bg_sum / bg_weight;
        let fg_mean = (total_sum - bg_sum) / fg_weight;
        let between = bg_weight * fg_weight * (bg_mean - fg_mean).powi(2);
        if between > best.1 {
            best = (t as u8, between);
        }
    }
    best.0
}

/// Binary mask of pixels strictly above the Otsu level.
pub fn otsu_mask(image: &IntensityImage) -> LabelImage {
    let level = f64::from(otsu_level(image)) / 255.0;
    LabelImage::from_fn_binary(image.width(), image.height(), |x, y| {
        image.get(x, y) > level
    })
}

//! Segmentation evaluation: Dice, IoU, pixel accuracy, rank-statistic AUC,
//! and signed difference images.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{LabelImage, ProbImage};

/// Overlap and ranking metrics for one prediction/reference pair.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MetricsReport {
    pub dice: f64,
    pub iou: f64,
    pub accuracy: f64,
    /// `None` when the reference contains a single class (AUC undefined).
    pub auc: Option<f64>,
}

/// Dice, IoU, and pixel accuracy of two binary masks. Two empty masks
/// overlap perfectly by convention (early training epochs routinely
/// produce empty predictions).
pub fn overlap_metrics(pred: &LabelImage, reference: &LabelImage) -> Result<MetricsReport> {
    pred.same_dims(reference)?;
    pred.require_binary()?;
    reference.require_binary()?;
    let mut inter = 0usize;
    let mut pred_fg = 0usize;
    let mut ref_fg = 0usize;
    let mut matching = 0usize;
    for (&p, &r) in pred.data().iter().zip(reference.data()) {
        let pf = p != 0;
        let rf = r != 0;
        inter += usize::from(pf && rf);
        pred_fg += usize::from(pf);
        ref_fg += usize::from(rf);
        matching += usize::from(pf == rf);
    }
    let total = pred.data().len();
    let union = pred_fg + ref_fg - inter;
    let (dice, iou) = if pred_fg + ref_fg == 0 {
        (1.0, 1.0)
    } else {
        (
            2.0 * inter as f64 / (pred_fg + ref_fg) as f64,
            inter as f64 / union as f64,
        )
    };
    Ok(MetricsReport {
        dice,
        iou,
        accuracy: matching as f64 / total as f64,
        auc: None,
    })
}

/// Mean per-class IoU over the classes present in the reference.
pub fn multiclass_mean_iou(pred: &LabelImage, reference: &LabelImage) -> Result<f64> {
    pred.same_dims(reference)?;
    let m = pred.num_classes().max(reference.num_classes());
    let mut sum = 0.0;
    let mut present = 0usize;
    for class in 0..m as u8 {
        let mut inter = 0usize;
        let mut union = 0usize;
        let mut in_ref = false;
        for (&p, &r) in pred.data().iter().zip(reference.data()) {
            let pf = p == class;
            let rf = r == class;
            inter += usize::from(pf && rf);
            union += usize::from(pf || rf);
            in_ref |= rf;
        }
        if in_ref {
            present += 1;
            sum += inter as f64 / union as f64;
        }
    }
    if present == 0 {
        return Err(Error::OutOfRange(
            "reference",
            "contains no class pixels".into(),
        ));
    }
    Ok(sum / present as f64)
}

/// Area under the ROC curve via the rank statistic: the probability that a
/// random foreground pixel outscores a random background pixel, ties
/// counted half.
pub fn auc(p: &ProbImage, reference: &LabelImage) -> Result<f64> {
    p.same_dims_mask(reference)?;
    reference.require_binary()?;
    let n_pos = reference.data().iter().filter(|&&v| v != 0).count();
    let n_neg = reference.data().len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::OutOfRange(
            "reference",
            "single-class reference, AUC undefined".into(),
        ));
    }
    let mut scored: Vec<(f64, bool)> = p
        .data()
        .iter()
        .zip(reference.data())
        .map(|(&v, &r)| (v, r != 0))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    // average ranks over tie groups
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0usize;
    while i < scored.len() {
        let mut j = i;
        while j + 1 < scored.len() && scored[j + 1].0 == scored[i].0 {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        for item in &scored[i..=j] {
            if item.1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let n_pos_f = n_pos as f64;
    Ok((rank_sum_pos - n_pos_f * (n_pos_f + 1.0) / 2.0) / (n_pos_f * n_neg as f64))
}

/// Signed per-pixel difference `clean - noisy` over `{-1, 0, +1}`: `+1`
/// marks under-segmentation by the noisy-trained result, `-1`
/// over-segmentation.
pub fn diff_image(pred_noisy: &LabelImage, pred_clean: &LabelImage) -> Result<Vec<i8>> {
    pred_noisy.same_dims(pred_clean)?;
    pred_noisy.require_binary()?;
    pred_clean.require_binary()?;
    Ok(pred_clean
        .data()
        .iter()
        .zip(pred_noisy.data())
        .map(|(&c, &n)| i8::from(c != 0) - i8::from(n != 0))
        .collect())
}

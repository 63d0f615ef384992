//! Unsupervised iteration strategy: start from all-background pseudo-labels,
//! fit the predictor, threshold its output into a ladder of candidate
//! masks, keep the candidate with the lowest determinant loss, refine it
//! into a sparse structure label, and train on that label next epoch.
//!
//! Pseudo-labels are kept per training image. Within an epoch the default
//! order is fit-then-predict, so the ladder is built from the freshly
//! updated parameters; `predict_before_fit` switches to building the
//! ladder from the pre-update prediction instead.

use crate::ems::{ems_refine, EmsParams};
use crate::error::{Error, Result};
use crate::grid::{IntensityImage, LabelImage, ProbImage};
use crate::loss::{dmi_loss, DET_CLAMP};
use crate::metrics::{auc, overlap_metrics, MetricsReport};
use crate::predictor::Predictor;
use crate::rng::derive_seed;

/// Threshold-ladder output: evenly spaced thresholds from the minimum to
/// the maximum pixel value, and the mask of strictly-greater pixels for
/// each. A flat prediction cannot span a ladder; it yields the two
/// degenerate masks and sets the flag.
#[derive(Debug, Clone)]
pub struct ThresholdLadder {
    pub thresholds: Vec<f64>,
    pub masks: Vec<LabelImage>,
    pub flat: bool,
}

/// Builds `k` candidate masks from evenly spaced thresholds. Ties
/// (`p == t`) go to background.
pub fn threshold_ladder(p: &ProbImage, k: usize) -> Result<ThresholdLadder> {
    if k < 2 {
        return Err(Error::OutOfRange("threshold count", format!("{k} < 2")));
    }
    let (min, max) = p.min_max();
    let mask_above = |t: f64| {
        LabelImage::from_fn_binary(p.width(), p.height(), |x, y| p.get(x, y) > t)
    };
    if min == max {
        return Ok(ThresholdLadder {
            thresholds: vec![min - 1.0, min],
            masks: vec![mask_above(min - 1.0), mask_above(min)],
            flat: true,
        });
    }
    let step = (max - min) / (k - 1) as f64;
    let thresholds: Vec<f64> = (0..k).map(|i| min + step * i as f64).collect();
    let masks = thresholds.iter().map(|&t| mask_above(t)).collect();
    Ok(ThresholdLadder {
        thresholds,
        masks,
        flat: false,
    })
}

/// Winning candidate of a selection sweep.
#[derive(Debug, Clone)]
pub struct Selection {
    /// Index of the selected mask; ties break to the smallest index.
    pub index: usize,
    /// Determinant loss of every candidate, in input order.
    pub losses: Vec<f64>,
}

/// Picks the candidate minimizing the determinant loss against `p`.
pub fn select_candidate(p: &ProbImage, candidates: &[LabelImage]) -> Result<Selection> {
    if candidates.is_empty() {
        return Err(Error::OutOfRange("candidates", "empty set".into()));
    }
    let losses = candidates
        .iter()
        .map(|s| dmi_loss(p, s))
        .collect::<Result<Vec<f64>>>()?;
    let mut index = 0;
    for (i, &l) in losses.iter().enumerate() {
        if l < losses[index] {
            index = i;
        }
    }
    Ok(Selection { index, losses })
}

/// Training-loop configuration.
#[derive(Debug, Clone)]
pub struct IgttConfig {
    /// Candidate thresholds per epoch.
    pub k: usize,
    /// Shift radius of the refinement stage.
    pub ems_shift_radius: usize,
    /// Retention probability of the refinement stage.
    pub ems_p_sample: f64,
    /// `false` trains directly on the selected candidate.
    pub ems_enabled: bool,
    pub max_iters: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Build the ladder from the pre-update prediction instead of the
    /// post-update one.
    pub predict_before_fit: bool,
}

impl Default for IgttConfig {
    fn default() -> Self {
        Self {
            k: 30,
            ems_shift_radius: 1,
            ems_p_sample: 0.1,
            ems_enabled: true,
            max_iters: 30,
            learning_rate: 0.1,
            seed: 0,
            predict_before_fit: false,
        }
    }
}

impl IgttConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::OutOfRange(
                "threshold count",
                format!("{} < 2", self.k),
            ));
        }
        if self.max_iters < 1 {
            return Err(Error::OutOfRange("max_iters", "must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::OutOfRange(
                "learning rate",
                format!("{}", self.learning_rate),
            ));
        }
        if !(self.ems_p_sample > 0.0 && self.ems_p_sample <= 1.0) {
            return Err(Error::ProbabilityOutOfRange(self.ems_p_sample));
        }
        Ok(())
    }
}

/// One image's record for one epoch.
#[derive(Debug, Clone)]
pub struct EpochImageRecord {
    /// Selected candidate (the model's segmentation this epoch).
    pub segmentation: LabelImage,
    /// Pseudo-label fed to the next epoch.
    pub pseudo_label: LabelImage,
    /// Determinant loss of the selected candidate.
    pub dmi_loss: f64,
    /// Ladder flatness fallback fired.
    pub flat: bool,
    /// Against the reference mask, when one was supplied.
    pub metrics: Option<MetricsReport>,
}

/// Full run output: per-epoch records (outer index epoch, inner index
/// image) and the final segmentations.
#[derive(Debug, Clone)]
pub struct IgttRun {
    pub epochs: Vec<Vec<EpochImageRecord>>,
    pub final_masks: Vec<LabelImage>,
}

/// Runs the unsupervised loop over a training set.
pub fn igtt_run(
    images: &[IntensityImage],
    references: Option<&[LabelImage]>,
    config: &IgttConfig,
    predictor: &mut dyn Predictor,
) -> Result<IgttRun> {
    config.validate()?;
    if images.is_empty() {
        return Err(Error::OutOfRange("training set", "empty".into()));
    }
    if let Some(refs) = references {
        if refs.len() != images.len() {
            return Err(Error::OutOfRange(
                "references",
                format!("{} references vs {} images", refs.len(), images.len()),
            ));
        }
    }

    // epoch 0 state: all-background pseudo-labels
    let mut pseudo: Vec<LabelImage> = images
        .iter()
        .map(|img| LabelImage::zeros(img.width(), img.height(), 2))
        .collect();
    let mut epochs = Vec::with_capacity(config.max_iters);

    for epoch in 0..config.max_iters {
        let wrap = |e: Error| Error::Predictor {
            epoch,
            reason: e.to_string(),
        };
        let stale_predictions: Option<Vec<ProbImage>> = if config.predict_before_fit {
            Some(
                images
                    .iter()
                    .map(|img| predictor.predict(img))
                    .collect::<Result<_>>()
                    .map_err(wrap)?,
            )
        } else {
            None
        };
        predictor
            .fit_epoch(images, &pseudo, config.learning_rate)
            .map_err(wrap)?;

        let mut records = Vec::with_capacity(images.len());
        for (i, image) in images.iter().enumerate() {
            let p = match &stale_predictions {
                Some(ps) => ps[i].clone(),
                None => predictor.predict(image).map_err(wrap)?,
            };
            let ladder = threshold_ladder(&p, config.k)?;
            let (segmentation, loss, flat) = if ladder.flat {
                // fall back to all-background so training continues
                let bg = LabelImage::zeros(image.width(), image.height(), 2);
                let loss = dmi_loss(&p, &bg)?;
                (bg, loss, true)
            } else {
                let selection = select_candidate(&p, &ladder.masks)?;
                (
                    ladder.masks[selection.index].clone(),
                    selection.losses[selection.index],
                    false,
                )
            };
            let pseudo_label = if config.ems_enabled {
                let params = EmsParams::new(
                    config.ems_shift_radius,
                    config.ems_p_sample,
                    derive_seed(config.seed, "igtt-ems", &[epoch as u64, i as u64]),
                )?;
                ems_refine(&segmentation, &params)?
            } else {
                segmentation.clone()
            };
            let metrics = match references {
                Some(refs) => {
                    let mut report = overlap_metrics(&segmentation, &refs[i])?;
                    report.auc = auc(&p, &refs[i]).ok();
                    Some(report)
                }
                None => None,
            };
            pseudo[i] = pseudo_label.clone();
            records.push(EpochImageRecord {
                segmentation,
                pseudo_label,
                dmi_loss: loss,
                flat,
                metrics,
            });
        }
        epochs.push(records);
    }

    let final_masks = epochs
        .last()
        .map(|records| records.iter().map(|r| r.segmentation.clone()).collect())
        .unwrap_or_default();
    Ok(IgttRun {
        epochs,
        final_masks,
    })
}

/// True when a candidate sits on the determinant clamp (degenerate).
pub fn is_degenerate_loss(loss: f64) -> bool {
    (loss - -(DET_CLAMP.ln())).abs() < 1e-9
}

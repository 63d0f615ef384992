//! Determinant mutual-information loss and soft-IoU loss, with analytic
//! per-pixel gradients.
//!
//! The joint matrix of a probability image `P` and a binary mask `S`
//! stacks `[P; 1-P]` against `[S; 1-S]` and normalizes by the pixel count,
//! so its entries form a genuine 2×2 joint distribution. The determinant
//! loss is `-ln(max(|det|, ε))` with `ε = 1e-12`; degenerate candidates
//! (all-0 or all-1 masks) land on the clamp and rank worst without
//! aborting a selection sweep.

use crate::error::Result;
use crate::grid::{LabelImage, ProbImage};
use crate::par;

/// Determinant magnitudes at or below this value are clamped.
pub const DET_CLAMP: f64 = 1e-12;

/// Stabilizer added to the soft-IoU numerator and denominator.
pub const IOU_EPS: f64 = 1e-7;

/// 2×2 joint distribution of a probability image and a binary mask.
/// `q[a][b]` pairs the foreground/background channels of each: index 0 is
/// the foreground channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointMatrix {
    pub q: [[f64; 2]; 2],
}

impl JointMatrix {
    pub fn det(&self) -> f64 {
        self.q[0][0] * self.q[1][1] - self.q[0][1] * self.q[1][0]
    }

    pub fn sum(&self) -> f64 {
        self.q[0][0] + self.q[0][1] + self.q[1][0] + self.q[1][1]
    }
}

/// Joint distribution matrix of `p` and `s`, normalized by the pixel count.
pub fn joint_matrix(p: &ProbImage, s: &LabelImage) -> Result<JointMatrix> {
    joint_matrix_impl(p, s, false)
}

/// Sequential twin of [`joint_matrix`] for the benchmark suite.
pub fn joint_matrix_seq(p: &ProbImage, s: &LabelImage) -> Result<JointMatrix> {
    joint_matrix_impl(p, s, true)
}

fn joint_matrix_impl(p: &ProbImage, s: &LabelImage, sequential: bool) -> Result<JointMatrix> {
    p.same_dims_mask(s)?;
    s.require_binary()?;
    let h = p.height();
    let row_sums = |y: usize| -> [f64; 4] {
        let pr = p.row(y);
        let sr = s.row(y);
        let mut acc = [0.0f64; 4];
        for (pv, sv) in pr.iter().zip(sr) {
            if *sv != 0 {
                acc[0] += pv;
                acc[2] += 1.0 - pv;
            } else {
                acc[1] += pv;
                acc[3] += 1.0 - pv;
            }
        }
        acc
    };
    let rows = if sequential {
        par::map_rows_seq(h, row_sums)
    } else {
        par::map_rows(h, row_sums)
    };
    let mut total = [0.0f64; 4];
    for r in rows {
        for k in 0..4 {
            total[k] += r[k];
        }
    }
    let n = (p.width() * p.height()) as f64;
    Ok(JointMatrix {
        q: [[total[0] / n, total[1] / n], [total[2] / n, total[3] / n]],
    })
}

/// `-ln(max(|det Q|, ε))`; finite for any input.
pub fn dmi_loss(p: &ProbImage, s: &LabelImage) -> Result<f64> {
    Ok(dmi_loss_of(joint_matrix(p, s)?))
}

/// Loss value of an already-computed joint matrix.
pub fn dmi_loss_of(q: JointMatrix) -> f64 {
    -q.det().abs().max(DET_CLAMP).ln()
}

/// Per-pixel gradient of [`dmi_loss`] with respect to `p`.
///
/// Inside the clamp region the gradient is defined as zero. Off the clamp,
/// the derivative of the determinant with respect to `p(x)` depends only on
/// `s(x)` and the mask fraction, so the gradient takes one of two values.
pub fn dmi_gradient(p: &ProbImage, s: &LabelImage) -> Result<Vec<f64>> {
    p.same_dims_mask(s)?;
    s.require_binary()?;
    let q = joint_matrix(p, s)?;
    let det = q.det();
    let n = (p.width() * p.height()) as f64;
    if det.abs() <= DET_CLAMP {
        return Ok(vec![0.0; p.data().len()]);
    }
    // column sums of the joint matrix are the mask fractions
    let s_frac = q.q[0][0] + q.q[1][0];
    let bg_frac = q.q[0][1] + q.q[1][1];
    let g_fg = -(bg_frac / n) / det;
    let g_bg = (s_frac / n) / det;
    Ok(s
        .data()
        .iter()
        .map(|&sv| if sv != 0 { g_fg } else { g_bg })
        .collect())
}

/// Soft-IoU loss `1 - (Σ p·s + ε) / (Σ (p + s - p·s) + ε)` and its
/// per-pixel gradient.
pub fn soft_iou_loss(p: &ProbImage, s: &LabelImage) -> Result<(f64, Vec<f64>)> {
    p.same_dims_mask(s)?;
    s.require_binary()?;
    let h = p.height();
    let rows = par::map_rows(h, |y| {
        let pr = p.row(y);
        let sr = s.row(y);
        let mut inter = 0.0f64;
        let mut union = 0.0f64;
        for (pv, sv) in pr.iter().zip(sr) {
            let sf = if *sv != 0 { 1.0 } else { 0.0 };
            inter += pv * sf;
            union += pv + sf - pv * sf;
        }
        (inter, union)
    });
    let mut inter = 0.0;
    let mut union = 0.0;
    for (i, u) in rows {
        inter += i;
        union += u;
    }
    let num = inter + IOU_EPS;
    let den = union + IOU_EPS;
    let loss = 1.0 - num / den;
    // d loss / dp = -(s·den - num·(1-s)) / den²
    let g_fg = -1.0 / den;
    let g_bg = num / (den * den);
    let grad = s
        .data()
        .iter()
        .map(|&sv| if sv != 0 { g_fg } else { g_bg })
        .collect::<Vec<f64>>();
    Ok((loss, grad))
}

/// Combined candidate-training loss: DMI plus soft-IoU with unit weights,
/// and the summed gradient.
pub fn combined_loss(p: &ProbImage, s: &LabelImage) -> Result<(f64, Vec<f64>)> {
    let dmi = dmi_loss(p, s)?;
    let dmi_grad = dmi_gradient(p, s)?;
    let (iou, iou_grad) = soft_iou_loss(p, s)?;
    let grad = dmi_grad
        .iter()
        .zip(&iou_grad)
        .map(|(a, b)| a + b)
        .collect();
    Ok((dmi + iou, grad))
}

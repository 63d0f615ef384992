//! Meta-structure extraction: skeletonize a coarse mask, randomly shift
//! each skeleton pixel within a square radius, then keep a random subset.
//!
//! Shifts are independent uniform draws over the `(2r+1)²` offsets, clamped
//! at the image border; colliding pixels collapse to one (masks are sets)
//! and subsampling runs on the de-duplicated shifted mask. The output is
//! always contained in the dilation of the skeleton by `r`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::LabelImage;
use crate::morph::skeletonize;
use crate::rng;

/// Shift radius, retention probability, and stream seed for one refinement.
#[derive(Debug, Clone, Copy)]
pub struct EmsParams {
    pub shift_radius: usize,
    pub p_sample: f64,
    pub seed: u64,
}

impl EmsParams {
    pub fn new(shift_radius: usize, p_sample: f64, seed: u64) -> Result<Self> {
        if !(p_sample > 0.0 && p_sample <= 1.0) {
            return Err(Error::ProbabilityOutOfRange(p_sample));
        }
        Ok(Self {
            shift_radius,
            p_sample,
            seed,
        })
    }
}

/// Refines a coarse binary mask into a sparse structure label.
pub fn ems_refine(s_tilde: &LabelImage, params: &EmsParams) -> Result<LabelImage> {
    s_tilde.require_binary()?;
    let skeleton = skeletonize(s_tilde)?;
    let (w, h) = (skeleton.width(), skeleton.height());
    let r = params.shift_radius as isize;

    // shift skeleton pixels in raster order (one stream, fixed order)
    let mut shift_rng = rng::stage_rng(params.seed, "ems-shift", &[]);
    let mut shifted = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            if skeleton.get(x, y) == 0 {
                continue;
            }
            let (dx, dy) = if r == 0 {
                (0, 0)
            } else {
                (shift_rng.gen_range(-r..=r), shift_rng.gen_range(-r..=r))
            };
            let nx = (x as isize + dx).clamp(0, w as isize - 1) as usize;
            let ny = (y as isize + dy).clamp(0, h as isize - 1) as usize;
            shifted[ny * w + nx] = 1;
        }
    }

    // subsample the de-duplicated shifted mask
    let mut sample_rng = rng::stage_rng(params.seed, "ems-sample", &[]);
    if params.p_sample < 1.0 {
        for v in shifted.iter_mut() {
            if *v != 0 && sample_rng.gen::<f64>() >= params.p_sample {
                *v = 0;
            }
        }
    }
    LabelImage::new(w, h, 2, shifted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corrupt::generate_rl;
    use crate::morph::{dilate_by, is_subset};

    fn blob(size: usize) -> LabelImage {
        LabelImage::from_fn_binary(size, size, |x, y| {
            let dx = x as f64 - size as f64 / 2.0;
            let dy = y as f64 - size as f64 / 2.0;
            dx * dx + dy * dy <= (size as f64 / 4.0).powi(2)
        })
    }

    #[test]
    fn disabled_randomization_reduces_to_skeleton() {
        let m = blob(48);
        let out = ems_refine(&m, &EmsParams::new(0, 1.0, 5).unwrap()).unwrap();
        assert_eq!(out, skeletonize(&m).unwrap());
    }

    #[test]
    fn output_contained_in_dilated_skeleton() {
        let m = blob(64);
        for seed in 0..20 {
            let out = ems_refine(&m, &EmsParams::new(2, 0.1, seed).unwrap()).unwrap();
            let bound = dilate_by(&skeletonize(&m).unwrap(), 2);
            assert!(is_subset(&out, &bound), "seed {seed}");
        }
    }

    #[test]
    fn containment_holds_on_random_masks() {
        for seed in 0..10 {
            let m = generate_rl(48, 48, 0.3, seed).unwrap();
            let params = EmsParams::new(1, 0.5, seed + 100).unwrap();
            let out = ems_refine(&m, &params).unwrap();
            let bound = dilate_by(&skeletonize(&m).unwrap(), 1);
            assert!(is_subset(&out, &bound), "seed {seed}");
        }
    }

    #[test]
    fn retention_tracks_sample_probability() {
        let m = blob(96);
        let p = 0.4;
        // shifted count with p_sample = 1 gives the binomial trial count
        for seed in 0..10 {
            let full = ems_refine(&m, &EmsParams::new(1, 1.0, seed).unwrap()).unwrap();
            let n = full.count_class(1) as f64;
            let sampled = ems_refine(&m, &EmsParams::new(1, p, seed).unwrap()).unwrap();
            let kept = sampled.count_class(1) as f64;
            let sigma = (n * p * (1.0 - p)).sqrt();
            assert!(
                (kept - p * n).abs() <= 3.0 * sigma,
                "seed {seed}: kept {kept} expected {} +/- {}",
                p * n,
                3.0 * sigma
            );
        }
    }

    #[test]
    fn empty_mask_passes_through() {
        let m = LabelImage::zeros(32, 32, 2);
        let out = ems_refine(&m, &EmsParams::new(2, 0.1, 0).unwrap()).unwrap();
        assert_eq!(out.count_class(1), 0);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let m = blob(40);
        let params = EmsParams::new(2, 0.3, 77).unwrap();
        assert_eq!(ems_refine(&m, &params).unwrap(), ems_refine(&m, &params).unwrap());
        let other = EmsParams::new(2, 0.3, 78).unwrap();
        assert_ne!(ems_refine(&m, &params).unwrap(), ems_refine(&m, &other).unwrap());
    }

    #[test]
    fn p_sample_zero_is_rejected() {
        assert!(EmsParams::new(1, 0.0, 0).is_err());
        assert!(EmsParams::new(1, 1.1, 0).is_err());
    }
}

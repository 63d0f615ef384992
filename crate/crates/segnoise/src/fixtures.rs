//! Deterministic synthetic scenes for analysis and training runs: a binary
//! circle-in-rectangle mask, a three-class vertical-stripe mask, and a
//! thresholdable blobs mask with a matching noisy intensity image.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::grid::{IntensityImage, LabelImage};
use crate::ntm::Ntm;
use crate::rng;

/// Which scene to generate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FixtureSpec {
    /// Centered disk (class 1) on background; radius defaults to size/4.
    CircleInRectangle { size: usize, radius: Option<f64> },
    /// Three equal vertical bands, classes 0, 1, 2 left to right.
    Stripes3 { size: usize },
    /// Random disks (class 1) plus an intensity image with bright
    /// foreground and dark background.
    Blobs { size: usize, seed: u64 },
}

/// A generated scene: the mask, and for the blobs kind the intensity image.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub mask: LabelImage,
    pub intensity: Option<IntensityImage>,
}

/// Foreground intensity mean for the blobs scene.
pub const BLOBS_FG_MEAN: f64 = 0.7;
/// Background intensity mean for the blobs scene.
pub const BLOBS_BG_MEAN: f64 = 0.3;
/// Intensity noise of the blobs scene.
pub const BLOBS_SIGMA: f64 = 0.1;

/// Generates a scene; the same spec always yields a bit-identical result.
pub fn gen_fixture(spec: FixtureSpec) -> Result<Fixture> {
    match spec {
        FixtureSpec::CircleInRectangle { size, radius } => {
            check_size(size)?;
            let r = radius.unwrap_or(size as f64 / 4.0);
            let c = (size / 2) as f64;
            let mask = LabelImage::from_fn_binary(size, size, |x, y| {
                let dx = x as f64 - c;
                let dy = y as f64 - c;
                dx * dx + dy * dy <= r * r
            });
            Ok(Fixture {
                mask,
                intensity: None,
            })
        }
        FixtureSpec::Stripes3 { size } => {
            check_size(size)?;
            let mut data = vec![0u8; size * size];
            for y in 0..size {
                for x in 0..size {
                    data[y * size + x] = (x * 3 / size) as u8;
                }
            }
            Ok(Fixture {
                mask: LabelImage::new(size, size, 3, data)?,
                intensity: None,
            })
        }
        FixtureSpec::Blobs { size, seed } => {
            check_size(size)?;
            Ok(gen_blobs(size, seed))
        }
    }
}

fn check_size(size: usize) -> Result<()> {
    if size < 64 {
        return Err(Error::OutOfRange(
            "fixture size",
            format!("{size} < 64"),
        ));
    }
    Ok(())
}

fn gen_blobs(size: usize, seed: u64) -> Fixture {
    // a handful of large disks keeps the boundary share of the foreground
    // small enough that thresholding stays meaningful
    let mut geo = rng::stage_rng(seed, "blobs-geometry", &[]);
    let num_disks = geo.gen_range(5..=8);
    let mut mask = vec![0u8; size * size];
    for _ in 0..num_disks {
        let r = geo.gen_range(size as f64 / 12.0..size as f64 / 7.0);
        let cx = geo.gen_range(r..size as f64 - r);
        let cy = geo.gen_range(r..size as f64 - r);
        let (x0, x1) = ((cx - r).floor() as usize, (cx + r).ceil() as usize);
        let (y0, y1) = ((cy - r).floor() as usize, (cy + r).ceil() as usize);
        for y in y0..=y1.min(size - 1) {
            for x in x0..=x1.min(size - 1) {
                let dx = x as f64 - cx;
                let dy = y as f64 - cy;
                if dx * dx + dy * dy <= r * r {
                    mask[y * size + x] = 1;
                }
            }
        }
    }
    let mask = LabelImage::new(size, size, 2, mask).expect("blob mask is valid");

    let mut noise = rng::stage_rng(seed, "blobs-intensity", &[]);
    let fg = Normal::new(BLOBS_FG_MEAN, BLOBS_SIGMA).expect("valid normal");
    let bg = Normal::new(BLOBS_BG_MEAN, BLOBS_SIGMA).expect("valid normal");
    let intensity: Vec<f64> = mask
        .data()
        .iter()
        .map(|&v| {
            let sample = if v != 0 {
                fg.sample(&mut noise)
            } else {
                bg.sample(&mut noise)
            };
            sample.clamp(0.0, 1.0)
        })
        .collect();
    let intensity = IntensityImage::new(size, size, intensity).expect("intensity grid is valid");
    Fixture {
        mask,
        intensity: Some(intensity),
    }
}

/// Nine reference 3×3 randomization matrices with known rank and minimum
/// pairwise column distance, entered row-major. Three are full rank, three
/// drop to rank 2 through a duplicated column, three are rank 1.
pub fn rcl_ntm_suite() -> Vec<(Ntm, usize, f64)> {
    let rows = |r: [[f64; 3]; 3]| {
        Ntm::from_rows(&r.map(|x| x.to_vec())).expect("suite matrices are valid")
    };
    vec![
        (rows([[0.5, 0.3, 0.2], [0.2, 0.6, 0.2], [0.3, 0.1, 0.6]]), 3, 0.6),
        (rows([[0.4, 0.3, 0.3], [0.3, 0.4, 0.3], [0.3, 0.3, 0.4]]), 3, 0.2),
        (rows([[0.2, 0.7, 0.6], [0.3, 0.2, 0.2], [0.5, 0.1, 0.2]]), 3, 0.2),
        (rows([[0.5, 0.5, 0.2], [0.2, 0.2, 0.2], [0.3, 0.3, 0.6]]), 2, 0.0),
        (rows([[0.2, 0.3, 0.2], [0.1, 0.5, 0.1], [0.7, 0.2, 0.7]]), 2, 0.0),
        (rows([[0.6, 0.3, 0.3], [0.1, 0.6, 0.6], [0.3, 0.1, 0.1]]), 2, 0.0),
        (rows([[0.4, 0.4, 0.4], [0.3, 0.3, 0.3], [0.3, 0.3, 0.3]]), 1, 0.0),
        (rows([[0.1, 0.1, 0.1], [0.2, 0.2, 0.2], [0.7, 0.7, 0.7]]), 1, 0.0),
        (rows([[0.2, 0.2, 0.2], [0.6, 0.6, 0.6], [0.2, 0.2, 0.2]]), 1, 0.0),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::otsu_mask;
    use crate::metrics::overlap_metrics;

    #[test]
    fn circle_count_matches_lattice_oracle() {
        let f = gen_fixture(FixtureSpec::CircleInRectangle {
            size: 256,
            radius: Some(64.0),
        })
        .unwrap();
        // oracle: per-row lattice count of dx² + dy² <= r²
        let mut expected = 0usize;
        for y in 0..256i64 {
            let dy = y - 128;
            let rem = 64 * 64 - dy * dy;
            if rem < 0 {
                continue;
            }
            let span = (rem as f64).sqrt().floor() as i64;
            // x in [128 - span, 128 + span] intersected with [0, 255]
            let lo = (128 - span).max(0);
            let hi = (128 + span).min(255);
            expected += (hi - lo + 1) as usize;
        }
        assert_eq!(f.mask.count_class(1), expected);
        let approx_area = std::f64::consts::PI * 64.0 * 64.0;
        assert!((expected as f64 - approx_area).abs() < 200.0);
    }

    #[test]
    fn stripes_have_balanced_classes() {
        let f = gen_fixture(FixtureSpec::Stripes3 { size: 255 }).unwrap();
        let hist = f.mask.class_histogram();
        assert_eq!(hist[0], hist[1]);
        assert_eq!(hist[1], hist[2]);
        let f2 = gen_fixture(FixtureSpec::Stripes3 { size: 256 }).unwrap();
        let hist2 = f2.mask.class_histogram();
        let max = *hist2.iter().max().unwrap();
        let min = *hist2.iter().min().unwrap();
        assert!(max - min <= 256, "counts differ by more than one column");
    }

    #[test]
    fn fixtures_are_reproducible() {
        let a = gen_fixture(FixtureSpec::Blobs { size: 128, seed: 5 }).unwrap();
        let b = gen_fixture(FixtureSpec::Blobs { size: 128, seed: 5 }).unwrap();
        assert_eq!(a.mask, b.mask);
        assert_eq!(a.intensity.unwrap(), b.intensity.unwrap());
    }

    #[test]
    fn blobs_intensity_means_are_separated() {
        for seed in 0..10 {
            let f = gen_fixture(FixtureSpec::Blobs { size: 256, seed }).unwrap();
            let intensity = f.intensity.unwrap();
            let mut fg_sum = 0.0;
            let mut fg_n = 0usize;
            let mut bg_sum = 0.0;
            let mut bg_n = 0usize;
            for (v, &m) in intensity.data().iter().zip(f.mask.data()) {
                if m != 0 {
                    fg_sum += v;
                    fg_n += 1;
                } else {
                    bg_sum += v;
                    bg_n += 1;
                }
            }
            assert!(fg_n > 0 && bg_n > 0, "seed {seed} degenerate mask");
            let gap = fg_sum / fg_n as f64 - bg_sum / bg_n as f64;
            assert!(gap >= 0.3, "seed {seed}: mean gap {gap}");
        }
    }

    #[test]
    fn blobs_are_thresholdable_by_otsu() {
        for seed in 0..10 {
            let f = gen_fixture(FixtureSpec::Blobs { size: 256, seed }).unwrap();
            let pred = otsu_mask(f.intensity.as_ref().unwrap());
            let report = overlap_metrics(&pred, &f.mask).unwrap();
            assert!(report.dice > 0.9, "seed {seed}: dice {}", report.dice);
        }
    }

    #[test]
    fn tiny_fixture_rejected() {
        assert!(gen_fixture(FixtureSpec::Stripes3 { size: 32 }).is_err());
    }

    #[test]
    fn reference_suite_is_valid() {
        for (ntm, rank, _) in rcl_ntm_suite() {
            ntm.validate().unwrap();
            assert_eq!(ntm.rank(), rank);
        }
    }
}

//! Label corruption: NTM-driven pixel flips, randomized-label constructors,
//! pure random masks, and per-epoch random full-rank matrices.
//!
//! Every sampler draws from per-row streams derived from the caller's seed,
//! so output is bit-identical for a given seed regardless of whether rows
//! are processed in parallel or sequentially.

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::LabelImage;
use crate::ntm::Ntm;
use crate::par;
use crate::rng;

/// Resamples every pixel from the NTM column of its true class.
///
/// A pixel with true class `i` is observed as class `j` with probability
/// `q.prob(j, i)`, independently per pixel. The identity matrix maps any
/// mask to itself exactly.
pub fn apply_ntm(y: &LabelImage, q: &Ntm, seed: u64) -> Result<LabelImage> {
    q.validate()?;
    if q.m() != y.num_classes() {
        return Err(Error::ClassMismatch(q.m(), y.num_classes()));
    }
    let (w, h) = (y.width(), y.height());
    let rows = par::map_rows(h, |row| {
        let mut rng = rng::row_rng(seed, "apply-ntm", row);
        y.row(row)
            .iter()
            .map(|&v| sample_column(q.column(v as usize), rng.gen::<f64>()))
            .collect::<Vec<u8>>()
    });
    LabelImage::new(w, h, y.num_classes(), par::concat_rows(rows))
}

/// Sequential twin of [`apply_ntm`] for the benchmark suite; identical
/// output for identical input.
pub fn apply_ntm_seq(y: &LabelImage, q: &Ntm, seed: u64) -> Result<LabelImage> {
    q.validate()?;
    if q.m() != y.num_classes() {
        return Err(Error::ClassMismatch(q.m(), y.num_classes()));
    }
    let (w, h) = (y.width(), y.height());
    let rows = par::map_rows_seq(h, |row| {
        let mut rng = rng::row_rng(seed, "apply-ntm", row);
        y.row(row)
            .iter()
            .map(|&v| sample_column(q.column(v as usize), rng.gen::<f64>()))
            .collect::<Vec<u8>>()
    });
    LabelImage::new(w, h, y.num_classes(), par::concat_rows(rows))
}

/// Inverse-CDF draw from one column distribution. `u` in `[0, 1)`, so a
/// deterministic column (a single entry 1) always returns that class.
fn sample_column(column: &[f64], u: f64) -> u8 {
    let mut cum = 0.0;
    for (j, &p) in column.iter().enumerate() {
        cum += p;
        if u < cum {
            return j as u8;
        }
    }
    (column.len() - 1) as u8
}

/// How to build a randomized-label matrix.
#[derive(Debug, Clone)]
pub enum RclMode {
    /// Flip each pixel away from its true class with probability `p_flip`,
    /// spread uniformly over the other classes.
    Flip { p_flip: f64, m: usize },
    /// Keep a non-background pixel with probability `p_sample`, otherwise
    /// send it to background; the background column is identity.
    Sample { p_sample: f64, m: usize },
    /// Binary matrix from the probability pair `(P(0|1), P(1|0))`.
    Pair { p01: f64, p10: f64 },
    /// Use the matrix as given.
    Explicit(Ntm),
}

/// Builds the matrix for the requested mode.
pub fn make_rcl_ntm(mode: RclMode) -> Result<Ntm> {
    match mode {
        RclMode::Flip { p_flip, m } => {
            check_prob(p_flip)?;
            if m < 2 {
                return Err(Error::OutOfRange("class count", format!("{m} < 2")));
            }
            let off = p_flip / (m as f64 - 1.0);
            let columns = (0..m)
                .map(|i| {
                    (0..m)
                        .map(|j| if i == j { 1.0 - p_flip } else { off })
                        .collect()
                })
                .collect();
            Ntm::from_columns(columns)
        }
        RclMode::Sample { p_sample, m } => {
            check_prob(p_sample)?;
            if m < 2 {
                return Err(Error::OutOfRange("class count", format!("{m} < 2")));
            }
            let mut columns = vec![vec![0.0; m]; m];
            columns[0][0] = 1.0;
            for (i, col) in columns.iter_mut().enumerate().skip(1) {
                col[0] = 1.0 - p_sample;
                col[i] = p_sample;
            }
            Ntm::from_columns(columns)
        }
        RclMode::Pair { p01, p10 } => {
            check_prob(p01)?;
            check_prob(p10)?;
            Ntm::from_columns(vec![vec![1.0 - p10, p10], vec![p01, 1.0 - p01]])
        }
        RclMode::Explicit(ntm) => {
            ntm.validate()?;
            Ok(ntm)
        }
    }
}

fn check_prob(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::ProbabilityOutOfRange(p))
    }
}

/// Pure random binary mask: each pixel is foreground independently with
/// probability `p_generate`.
pub fn generate_rl(width: usize, height: usize, p_generate: f64, seed: u64) -> Result<LabelImage> {
    check_prob(p_generate)?;
    if width == 0 || height == 0 {
        return Err(Error::OutOfRange(
            "dimensions",
            format!("{width}x{height}"),
        ));
    }
    let rows = par::map_rows(height, |row| {
        let mut rng = rng::row_rng(seed, "generate-rl", row);
        (0..width)
            .map(|_| u8::from(rng.gen::<f64>() < p_generate))
            .collect::<Vec<u8>>()
    });
    LabelImage::new(width, height, 2, par::concat_rows(rows))
}

/// Minimum pairwise column distance accepted by [`dynamic_ntm`]; keeps the
/// draws inside the regime where randomization leaves class structure
/// intact.
pub const DYNAMIC_NTM_MIN_CRD: f64 = 0.2;

/// Random valid full-rank matrix for one epoch: columns are drawn from the
/// simplex and the draw is rejected until the rank is full and every
/// pairwise column distance is at least [`DYNAMIC_NTM_MIN_CRD`].
/// Deterministic in `(seed, epoch)`.
pub fn dynamic_ntm(m: usize, epoch: u64, seed: u64) -> Result<Ntm> {
    if m < 2 {
        return Err(Error::OutOfRange("class count", format!("{m} < 2")));
    }
    let mut rng = rng::stage_rng(seed, "dynamic-ntm", &[epoch]);
    loop {
        let columns: Vec<Vec<f64>> = (0..m)
            .map(|_| {
                let raw: Vec<f64> = (0..m).map(|_| rng.gen::<f64>().max(1e-6)).collect();
                let sum: f64 = raw.iter().sum();
                raw.iter().map(|v| v / sum).collect()
            })
            .collect();
        let Ok(ntm) = Ntm::from_columns(columns) else {
            continue;
        };
        if ntm.rank() == m && ntm.crd().min_distance >= DYNAMIC_NTM_MIN_CRD {
            return Ok(ntm);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn circle_mask(size: usize, radius: f64) -> LabelImage {
        let c = size as f64 / 2.0;
        LabelImage::from_fn_binary(size, size, |x, y| {
            let dx = x as f64 - c;
            let dy = y as f64 - c;
            dx * dx + dy * dy <= radius * radius
        })
    }

    #[test]
    fn identity_ntm_is_identity_map() {
        let y = circle_mask(64, 20.0);
        let out = apply_ntm(&y, &Ntm::identity(2), 9).unwrap();
        assert_eq!(out, y);
    }

    #[test]
    fn class_mismatch_rejected() {
        let y = LabelImage::zeros(8, 8, 3);
        assert!(matches!(
            apply_ntm(&y, &Ntm::identity(2), 0),
            Err(Error::ClassMismatch(2, 3))
        ));
    }

    #[test]
    fn flip_counts_match_binomial_expectation() {
        // all-class-0 mask, p(1|0) = 0.3: expect 3000 +/- 3*sqrt(10000*0.3*0.7)
        let y = LabelImage::zeros(100, 100, 2);
        let q = Ntm::from_columns(vec![vec![0.7, 0.3], vec![0.0, 1.0]]).unwrap();
        let out = apply_ntm(&y, &q, 11).unwrap();
        let ones = out.count_class(1) as f64;
        let sigma = (10000.0_f64 * 0.3 * 0.7).sqrt();
        assert!(
            (ones - 3000.0).abs() <= 3.0 * sigma,
            "count {ones} outside 3000 +/- {}",
            3.0 * sigma
        );
    }

    #[test]
    fn observed_frequencies_follow_matrix_times_true_frequencies() {
        let y = circle_mask(128, 40.0);
        let q = make_rcl_ntm(RclMode::Pair {
            p01: 0.3,
            p10: 0.2,
        })
        .unwrap();
        let out = apply_ntm(&y, &q, 5).unwrap();
        let true_hist = y.class_histogram();
        let obs_hist = out.class_histogram();
        let n = (y.width() * y.height()) as f64;
        for j in 0..2 {
            let expected: f64 = (0..2)
                .map(|i| q.prob(j, i) * true_hist[i] as f64)
                .sum();
            let var: f64 = (0..2)
                .map(|i| true_hist[i] as f64 * q.prob(j, i) * (1.0 - q.prob(j, i)))
                .sum();
            let sigma = var.sqrt();
            assert!(
                (obs_hist[j] as f64 - expected).abs() <= 3.0 * sigma,
                "class {j}: observed {} expected {expected} +/- {}",
                obs_hist[j],
                3.0 * sigma
            );
            assert!(expected <= n);
        }
    }

    #[test]
    fn rank_one_corruption_is_independent_of_true_regions() {
        // chi-square test of independence on the (true, observed) table
        let y = circle_mask(128, 40.0);
        let col = vec![0.35, 0.65];
        let q = Ntm::from_columns(vec![col.clone(), col]).unwrap();
        assert_eq!(q.rank(), 1);
        let out = apply_ntm(&y, &q, 3).unwrap();
        let mut table = [[0.0f64; 2]; 2];
        for (t, o) in y.data().iter().zip(out.data()) {
            table[*t as usize][*o as usize] += 1.0;
        }
        let n: f64 = table.iter().flatten().sum();
        let mut chi2 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let row: f64 = table[i].iter().sum();
                let col: f64 = table[0][j] + table[1][j];
                let e = row * col / n;
                chi2 += (table[i][j] - e).powi(2) / e;
            }
        }
        // dof 1 critical value at alpha = 0.001
        assert!(chi2 < 10.828, "chi2 = {chi2}");
    }

    #[test]
    fn flip_zero_is_identity_matrix() {
        let q = make_rcl_ntm(RclMode::Flip { p_flip: 0.0, m: 3 }).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(q.prob(j, i), if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn sample_mode_keeps_background_and_demotes_foreground() {
        let q = make_rcl_ntm(RclMode::Sample {
            p_sample: 0.4,
            m: 3,
        })
        .unwrap();
        assert_abs_diff_eq!(q.prob(0, 0), 1.0);
        assert_abs_diff_eq!(q.prob(0, 1), 0.6);
        assert_abs_diff_eq!(q.prob(1, 1), 0.4);
        assert_abs_diff_eq!(q.prob(0, 2), 0.6);
        assert_abs_diff_eq!(q.prob(2, 2), 0.4);
    }

    #[test]
    fn pair_mode_matches_published_matrix_and_distance() {
        // (P(0|1), P(1|0)) = (0.8, 0.21) reproduces the near-random example
        let q = make_rcl_ntm(RclMode::Pair {
            p01: 0.8,
            p10: 0.21,
        })
        .unwrap();
        assert_abs_diff_eq!(q.prob(0, 0), 0.79, epsilon = 1e-12);
        assert_abs_diff_eq!(q.prob(0, 1), 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(q.crd().min_distance, 0.02, epsilon = 1e-12);
    }

    #[test]
    fn pair_mode_epsilon_family_distance_is_two_epsilon() {
        for &p01 in &[0.2, 0.4, 0.6, 0.8] {
            for &eps in &[0.01, 0.05, 0.1] {
                for sign in [-1.0, 1.0] {
                    let p10 = 1.0 - p01 + sign * eps;
                    let q = make_rcl_ntm(RclMode::Pair { p01, p10 }).unwrap();
                    assert_abs_diff_eq!(
                        q.crd().min_distance,
                        2.0 * eps,
                        epsilon = 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn pair_mode_exact_complement_is_rank_one() {
        let q = make_rcl_ntm(RclMode::Pair {
            p01: 0.3,
            p10: 0.7,
        })
        .unwrap();
        assert_eq!(q.rank(), 1);
        assert_abs_diff_eq!(q.crd().min_distance, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rl_zero_probability_is_all_background() {
        let rl = generate_rl(32, 32, 0.0, 1).unwrap();
        assert_eq!(rl.count_class(1), 0);
    }

    #[test]
    fn rl_foreground_fraction_within_binomial_band() {
        let rl = generate_rl(256, 256, 0.5, 21).unwrap();
        let frac = rl.count_class(1) as f64 / 65536.0;
        let sigma = (0.25f64 / 65536.0).sqrt();
        assert!((frac - 0.5).abs() <= 3.0 * sigma, "fraction {frac}");
    }

    #[test]
    fn sparse_rl_error_rate_below_half_flip_error() {
        // direction check: on a sparse mask, a p=0.1 random label disagrees
        // with the truth less often than a 49% flip corruption does
        let cl = circle_mask(256, 64.0);
        let rl = generate_rl(256, 256, 0.1, 4).unwrap();
        let rcl = apply_ntm(
            &cl,
            &make_rcl_ntm(RclMode::Flip { p_flip: 0.49, m: 2 }).unwrap(),
            4,
        )
        .unwrap();
        let err = |a: &LabelImage, b: &LabelImage| {
            a.data()
                .iter()
                .zip(b.data())
                .filter(|(x, y)| x != y)
                .count() as f64
                / a.data().len() as f64
        };
        let rl_err = err(&rl, &cl);
        let rcl_err = err(&rcl, &cl);
        assert!(
            rl_err < rcl_err,
            "rl error {rl_err} not below rcl error {rcl_err}"
        );
    }

    #[test]
    fn corruption_is_deterministic_per_seed() {
        let y = circle_mask(64, 20.0);
        let q = make_rcl_ntm(RclMode::Flip { p_flip: 0.3, m: 2 }).unwrap();
        let a = apply_ntm(&y, &q, 77).unwrap();
        let b = apply_ntm(&y, &q, 77).unwrap();
        let c = apply_ntm(&y, &q, 78).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn parallel_and_sequential_corruption_agree() {
        let y = circle_mask(96, 30.0);
        let q = make_rcl_ntm(RclMode::Flip { p_flip: 0.25, m: 2 }).unwrap();
        assert_eq!(
            apply_ntm(&y, &q, 13).unwrap(),
            apply_ntm_seq(&y, &q, 13).unwrap()
        );
    }

    #[test]
    fn dynamic_ntm_is_deterministic_in_seed_and_epoch() {
        let a = dynamic_ntm(3, 5, 100).unwrap();
        let b = dynamic_ntm(3, 5, 100).unwrap();
        let c = dynamic_ntm(3, 6, 100).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn dynamic_ntm_draws_are_full_rank_with_separated_columns() {
        for epoch in 0..200 {
            let q = dynamic_ntm(3, epoch, 42).unwrap();
            assert_eq!(q.rank(), 3);
            assert!(q.crd().min_distance >= DYNAMIC_NTM_MIN_CRD);
        }
        for epoch in 0..200 {
            let q = dynamic_ntm(2, epoch, 42).unwrap();
            assert_eq!(q.rank(), 2);
            assert!(q.crd().min_distance >= DYNAMIC_NTM_MIN_CRD);
        }
    }
}

//! Spatial density distributions over label grids.
//!
//! For each class, the density at a pixel is the count of same-class pixels
//! inside the square window of half-width `h` centered there. Two
//! normalizations are supported: the count divided by the (border-clipped)
//! window area, and the count scaled by `1 / (2 N h)` where `N` is the
//! class point count over the whole image. Window sums are evaluated from
//! an integral image; the brute-force window count lives in the test suite
//! as the independent oracle.
//!
//! [`count_semantic_classes`] estimates how many distinguishable class
//! structures a (possibly corrupted) label image carries: per-channel
//! density histograms over interior pixels are reduced to modes, modes
//! closer than three binomial standard deviations are merged, and pixels
//! are assigned by their per-channel mode signature. Pixels matching no
//! mode (the boundary band) stay unassigned.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::LabelImage;
use crate::morph::dilate_by;
use crate::ntm::Ntm;
use crate::par;

/// How raw window counts become density values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DensityNormalization {
    /// Count divided by the clipped window area; channels sum to 1 at every
    /// pixel.
    #[default]
    LocalFraction,
    /// Count scaled by `1 / (2 N h)` with `N` the class-m point count.
    GlobalKde,
}

/// Per-class density channels of one label image.
#[derive(Debug, Clone)]
pub struct DensityMap {
    width: usize,
    height: usize,
    bandwidth: usize,
    normalization: DensityNormalization,
    channels: Vec<Vec<f64>>,
    class_counts: Vec<usize>,
}

impl DensityMap {
    /// Computes all class channels of `y` with window half-width `h`.
    pub fn compute(y: &LabelImage, h: usize, norm: DensityNormalization) -> Result<Self> {
        if h == 0 {
            return Err(Error::OutOfRange("bandwidth", "must be at least 1".into()));
        }
        let channels = (0..y.num_classes())
            .map(|m| density_channel(y, m as u8, h, norm))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            width: y.width(),
            height: y.height(),
            bandwidth: h,
            normalization: norm,
            channels,
            class_counts: y.class_histogram(),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn normalization(&self) -> DensityNormalization {
        self.normalization
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn channel(&self, m: usize) -> &[f64] {
        &self.channels[m]
    }

    pub fn class_count(&self, m: usize) -> usize {
        self.class_counts[m]
    }
}

/// One density channel: class `m` of `y` at window half-width `h`.
pub fn density_channel(
    y: &LabelImage,
    class: u8,
    h: usize,
    norm: DensityNormalization,
) -> Result<Vec<f64>> {
    density_channel_impl(y, class, h, norm, false)
}

/// Sequential twin of [`density_channel`] for the benchmark suite.
pub fn density_channel_seq(
    y: &LabelImage,
    class: u8,
    h: usize,
    norm: DensityNormalization,
) -> Result<Vec<f64>> {
    density_channel_impl(y, class, h, norm, true)
}

fn density_channel_impl(
    y: &LabelImage,
    class: u8,
    h: usize,
    norm: DensityNormalization,
    sequential: bool,
) -> Result<Vec<f64>> {
    if h == 0 {
        return Err(Error::OutOfRange("bandwidth", "must be at least 1".into()));
    }
    if class as usize >= y.num_classes() {
        return Err(Error::OutOfRange(
            "class",
            format!("{class} >= {}", y.num_classes()),
        ));
    }
    let integral = ClassIntegral::new(y, class);
    let (w, ht) = (y.width(), y.height());
    let scale = match norm {
        DensityNormalization::LocalFraction => None,
        DensityNormalization::GlobalKde => {
            let n = y.count_class(class);
            if n == 0 {
                return Ok(vec![0.0; w * ht]);
            }
            Some(1.0 / (2.0 * n as f64 * h as f64))
        }
    };
    let eval_row = |row: usize| -> Vec<f64> {
        (0..w)
            .map(|x| {
                let (count, area) = integral.window(x, row, h);
                match scale {
                    None => f64::from(count) / area as f64,
                    Some(s) => f64::from(count) * s,
                }
            })
            .collect()
    };
    let rows = if sequential {
        par::map_rows_seq(ht, eval_row)
    } else {
        par::map_rows(ht, eval_row)
    };
    Ok(par::concat_rows(rows))
}

/// Integral image of one class indicator.
struct ClassIntegral {
    width: usize,
    height: usize,
    sums: Vec<u32>,
}

impl ClassIntegral {
    fn new(y: &LabelImage, class: u8) -> Self {
        let (w, h) = (y.width(), y.height());
        let mut sums = vec![0u32; (w + 1) * (h + 1)];
        for yy in 0..h {
            let row = y.row(yy);
            let mut row_sum = 0u32;
            for xx in 0..w {
                row_sum += u32::from(row[xx] == class);
                sums[(yy + 1) * (w + 1) + xx + 1] = sums[yy * (w + 1) + xx + 1] + row_sum;
            }
        }
        Self {
            width: w,
            height: h,
            sums,
        }
    }

    /// Count and clipped area of the `(2h+1)`-square window at `(x, y)`.
    #[inline]
    fn window(&self, x: usize, y: usize, h: usize) -> (u32, usize) {
        let x1 = x.saturating_sub(h);
        let y1 = y.saturating_sub(h);
        let x2 = (x + h).min(self.width - 1);
        let y2 = (y + h).min(self.height - 1);
        let w1 = self.width + 1;
        let count = self.sums[(y2 + 1) * w1 + x2 + 1] + self.sums[y1 * w1 + x1]
            - self.sums[y1 * w1 + x2 + 1]
            - self.sums[(y2 + 1) * w1 + x1];
        (count, (x2 - x1 + 1) * (y2 - y1 + 1))
    }
}

/// One row of a density channel.
pub fn density_curve(map: &DensityMap, channel: usize, row: usize) -> Result<Vec<f64>> {
    if row >= map.height {
        return Err(Error::OutOfRange(
            "row",
            format!("{row} >= {}", map.height),
        ));
    }
    Ok(map.channels[channel][row * map.width..(row + 1) * map.width].to_vec())
}

/// Positions `x` in a mask row where the class differs from `x - 1`; these
/// mark object outlines for curve plots.
pub fn outline_crossings(y: &LabelImage, row: usize) -> Result<Vec<usize>> {
    if row >= y.height() {
        return Err(Error::OutOfRange(
            "row",
            format!("{row} >= {}", y.height()),
        ));
    }
    let r = y.row(row);
    Ok((1..y.width()).filter(|&x| r[x] != r[x - 1]).collect())
}

/// Expected interior density of observed class `m` over true-class-`i`
/// regions under local-fraction normalization: the flip probability
/// itself.
pub fn predicted_interior_density(q: &Ntm, observed_m: usize, true_i: usize) -> f64 {
    q.prob(observed_m, true_i)
}

/// Same prediction under the global normalization: `(2h / N) * p(m | i)`.
pub fn predicted_interior_density_global(
    q: &Ntm,
    observed_m: usize,
    true_i: usize,
    h: usize,
    class_count_n: usize,
) -> f64 {
    if class_count_n == 0 {
        return 0.0;
    }
    2.0 * h as f64 / class_count_n as f64 * q.prob(observed_m, true_i)
}

/// Pixels of `class` whose whole `(2h+1)`-window lies inside the class
/// region (and inside the image); the region interior used by density
/// predictions.
pub fn class_interior(y: &LabelImage, class: u8, h: usize) -> LabelImage {
    let indicator = LabelImage::from_fn_binary(y.width(), y.height(), |x, yy| y.get(x, yy) == class);
    crate::morph::erode_by(&indicator, h)
}

/// Binary map of pixels with a 4-neighbor of a different class.
pub fn class_boundary(y: &LabelImage) -> LabelImage {
    LabelImage::from_fn_binary(y.width(), y.height(), |x, yy| {
        let v = y.get(x, yy);
        (x > 0 && y.get(x - 1, yy) != v)
            || (x + 1 < y.width() && y.get(x + 1, yy) != v)
            || (yy > 0 && y.get(x, yy - 1) != v)
            || (yy + 1 < y.height() && y.get(x, yy + 1) != v)
    })
}

/// Pixels within Chebyshev distance `radius` of a class boundary.
pub fn boundary_band(y: &LabelImage, radius: usize) -> LabelImage {
    dilate_by(&class_boundary(y), radius)
}

/// One density-vector cluster found by [`count_semantic_classes`].
#[derive(Debug, Clone, Serialize)]
pub struct DensityCluster {
    /// Characteristic density: the largest component of the centroid.
    pub level: f64,
    /// Fraction of interior pixels assigned to this cluster.
    pub share: f64,
    /// Mean density vector over member pixels, one entry per class channel.
    pub centroid: Vec<f64>,
}

/// Estimated class structure of a label image.
#[derive(Debug, Clone, Serialize)]
pub struct MetaStructureSummary {
    /// Estimated number of semantic classes.
    pub d: usize,
    /// Window half-width the estimate was computed with.
    pub h: usize,
    /// Clusters ordered by share, largest first.
    pub clusters: Vec<DensityCluster>,
}

/// Estimates the number of semantic classes of `y_star` from its density
/// maps at window half-width `h`.
///
/// Only region-interior pixels participate: the window must be unclipped,
/// and the density field must be locally flat — a pixel whose density
/// changes at window scale by more than binomial noise allows sits on a
/// region boundary, and boundary pixels are excluded rather than
/// clustered. Per channel, a mode is a local maximum of the box-smoothed
/// count histogram with prominence of at least 1% of the interior pixels;
/// modes closer than `3σ` (binomial, `σ = sqrt(p̄ (1 − p̄) / A)`,
/// `A = (2h+1)²`) are merged into the taller one. A pixel joins a cluster
/// when every channel value lies within `3σ` of a mode; clusters holding
/// at least 1% of interior pixels count toward the class estimate.
pub fn count_semantic_classes(y_star: &LabelImage, h: usize) -> Result<MetaStructureSummary> {
    if h == 0 {
        return Err(Error::OutOfRange("bandwidth", "must be at least 1".into()));
    }
    let (w, ht) = (y_star.width(), y_star.height());
    let side = 2 * h + 1;
    if w < side || ht < side {
        return Err(Error::ImageTooSmall(w, ht, side));
    }
    let m = y_star.num_classes();
    let area = side * side;

    let counts = interior_window_counts(y_star, h);
    let flat = flat_density_mask(&counts, y_star, h);
    let n_interior = flat.iter().filter(|&&f| f).count().max(1);

    // per-channel mode detection over the flat-interior population
    let min_pixels = (n_interior as f64 * 0.01).ceil() as usize;
    let mut channel_modes: Vec<ChannelModes> = Vec::with_capacity(m);
    for channel in &counts {
        let flat_counts: Vec<u32> = channel
            .iter()
            .zip(&flat)
            .filter_map(|(&c, &keep)| keep.then_some(c))
            .collect();
        channel_modes.push(detect_modes(&flat_counts, area, min_pixels));
    }

    // signature assignment: every channel must match a mode
    let mut assignments: std::collections::BTreeMap<Vec<usize>, (usize, Vec<f64>)> =
        std::collections::BTreeMap::new();
    for px in 0..flat.len() {
        if !flat[px] {
            continue;
        }
        let mut signature = Vec::with_capacity(m);
        let mut matched = true;
        for (ch, modes) in channel_modes.iter().enumerate() {
            match modes.assign(counts[ch][px]) {
                Some(idx) => signature.push(idx),
                None => {
                    matched = false;
                    break;
                }
            }
        }
        if !matched {
            continue;
        }
        let entry = assignments
            .entry(signature)
            .or_insert_with(|| (0, vec![0.0; m]));
        entry.0 += 1;
        for ch in 0..m {
            entry.1[ch] += f64::from(counts[ch][px]) / area as f64;
        }
    }

    // Fold signatures whose centroids agree within 2.5σ in every channel
    // into the most populous one. Window counts of one pixel are
    // multinomially anti-correlated across channels, so noise tails form
    // small spurious signatures that sit within two σ of a real centroid;
    // distinct classes keep centroids further apart than that in some
    // channel or they would not have separate modes, though with mode
    // gaps right at the merge tolerance the empirical centroids can sag
    // below 3σ, hence the slightly tighter fold.
    let sigmas: Vec<f64> = counts
        .iter()
        .map(|channel| {
            let total: f64 = channel.iter().map(|&c| f64::from(c)).sum();
            let p_bar = (total / (channel.len() as f64 * area as f64)).clamp(0.0, 1.0);
            (p_bar * (1.0 - p_bar) / area as f64).sqrt()
        })
        .collect();
    let mut groups: Vec<(usize, Vec<f64>)> = Vec::new(); // (count, sums)
    let mut ordered: Vec<&(usize, Vec<f64>)> = assignments.values().collect();
    ordered.sort_by(|a, b| b.0.cmp(&a.0));
    for &(count, ref sums) in ordered {
        let centroid: Vec<f64> = sums.iter().map(|s| s / count as f64).collect();
        let home = groups.iter_mut().find(|(gcount, gsums)| {
            centroid.iter().enumerate().all(|(ch, &c)| {
                (c - gsums[ch] / *gcount as f64).abs() <= 2.5 * sigmas[ch]
            })
        });
        match home {
            Some((gcount, gsums)) => {
                *gcount += count;
                for (g, s) in gsums.iter_mut().zip(sums) {
                    *g += s;
                }
            }
            None => groups.push((count, sums.clone())),
        }
    }

    let mut clusters: Vec<DensityCluster> = groups
        .iter()
        .filter(|(count, _)| *count >= min_pixels)
        .map(|(count, sums)| {
            let centroid: Vec<f64> = sums.iter().map(|s| s / *count as f64).collect();
            DensityCluster {
                level: centroid.iter().cloned().fold(0.0, f64::max),
                share: *count as f64 / n_interior as f64,
                centroid,
            }
        })
        .collect();
    if clusters.is_empty() {
        // degenerate inputs still carry one structure: keep the largest
        // signature regardless of the floor
        if let Some((count, sums)) = groups.iter().max_by_key(|(count, _)| *count) {
            let centroid: Vec<f64> = sums.iter().map(|s| s / *count as f64).collect();
            clusters.push(DensityCluster {
                level: centroid.iter().cloned().fold(0.0, f64::max),
                share: *count as f64 / n_interior as f64,
                centroid,
            });
        }
    }
    clusters.sort_by(|a, b| b.share.total_cmp(&a.share));
    Ok(MetaStructureSummary {
        d: clusters.len().max(1),
        h,
        clusters,
    })
}

/// Window counts of every class channel over the unclipped-window region,
/// row-major with width `w - 2h`.
fn interior_window_counts(y_star: &LabelImage, h: usize) -> Vec<Vec<u32>> {
    let (w, ht) = (y_star.width(), y_star.height());
    let interior_w = w - 2 * h;
    let interior_h = ht - 2 * h;
    (0..y_star.num_classes())
        .map(|class| {
            let integral = ClassIntegral::new(y_star, class as u8);
            let rows = par::map_rows(interior_h, |iy| {
                let y = iy + h;
                (0..interior_w)
                    .map(|ix| integral.window(ix + h, y, h).0)
                    .collect::<Vec<u32>>()
            });
            par::concat_rows(rows)
        })
        .collect()
}

/// Flags the pixels whose density field is locally flat in every channel:
/// window counts taken `h` apart differ by no more than four standard
/// deviations of a noise-only difference (the two windows share all but
/// `h` columns each). Everything else belongs to a region-boundary band.
fn flat_density_mask(counts: &[Vec<u32>], y_star: &LabelImage, h: usize) -> Vec<bool> {
    let (w, ht) = (y_star.width(), y_star.height());
    let interior_w = w - 2 * h;
    let interior_h = ht - 2 * h;
    let area = ((2 * h + 1) * (2 * h + 1)) as f64;
    let n = (interior_w * interior_h) as f64;
    let mut flat = vec![true; interior_w * interior_h];
    for channel in counts {
        let total: f64 = channel.iter().map(|&c| f64::from(c)).sum();
        let p_bar = (total / (n * area)).clamp(0.0, 1.0);
        let diff_var = 2.0 * (h * (2 * h + 1)) as f64 * p_bar * (1.0 - p_bar);
        let tol = 4.0 * diff_var.sqrt();
        let diff = |a: u32, b: u32| (f64::from(a) - f64::from(b)).abs();
        for iy in 0..interior_h {
            for ix in 0..interior_w {
                let px = iy * interior_w + ix;
                let lo_x = ix.saturating_sub(h);
                let hi_x = (ix + h).min(interior_w - 1);
                let lo_y = iy.saturating_sub(h);
                let hi_y = (iy + h).min(interior_h - 1);
                if diff(channel[iy * interior_w + hi_x], channel[iy * interior_w + lo_x]) > tol
                    || diff(channel[hi_y * interior_w + ix], channel[lo_y * interior_w + ix]) > tol
                {
                    flat[px] = false;
                }
            }
        }
    }
    flat
}

/// Test support: per-channel mode centers and tolerance, in count units.
#[doc(hidden)]
pub fn debug_channel_modes(y_star: &LabelImage, h: usize) -> Vec<(Vec<f64>, f64)> {
    let area = (2 * h + 1) * (2 * h + 1);
    let counts = interior_window_counts(y_star, h);
    let flat = flat_density_mask(&counts, y_star, h);
    let n_interior = flat.iter().filter(|&&f| f).count().max(1);
    let min_pixels = (n_interior as f64 * 0.01).ceil() as usize;
    counts
        .iter()
        .map(|channel| {
            let flat_counts: Vec<u32> = channel
                .iter()
                .zip(&flat)
                .filter_map(|(&c, &keep)| keep.then_some(c))
                .collect();
            let modes = detect_modes(&flat_counts, area, min_pixels);
            (modes.centers, modes.tolerance)
        })
        .collect()
}

/// Modes of one channel's count histogram.
struct ChannelModes {
    centers: Vec<f64>,
    /// Merge distance for peaks, three binomial σ.
    tolerance: f64,
    /// Membership distance for pixels, 2.5 binomial σ: the tighter cutoff
    /// leaves the ambiguous midzone between well-separated modes
    /// unassigned instead of letting noise tails flip across it.
    assign_tolerance: f64,
}

impl ChannelModes {
    /// Index of the nearest mode within the membership distance, ties to
    /// the lower index.
    fn assign(&self, count: u32) -> Option<usize> {
        let c = f64::from(count);
        let mut best: Option<(usize, f64)> = None;
        for (i, &center) in self.centers.iter().enumerate() {
            let dist = (c - center).abs();
            if dist <= self.assign_tolerance && best.map_or(true, |(_, d)| dist < d) {
                best = Some((i, dist));
            }
        }
        best.map(|(i, _)| i)
    }
}

fn detect_modes(counts: &[u32], area: usize, min_pixels: usize) -> ChannelModes {
    let n = counts.len() as f64;
    let total: f64 = counts.iter().map(|&c| f64::from(c)).sum();
    let p_bar = (total / (n * area as f64)).clamp(0.0, 1.0);
    let sigma_frac = (p_bar * (1.0 - p_bar) / area as f64).sqrt();
    let sigma_counts = sigma_frac * area as f64;
    let smooth = (sigma_counts.round() as usize).max(1);

    let mut hist = vec![0usize; area + 1];
    for &c in counts {
        hist[c as usize] += 1;
    }
    // box smoothing
    let smoothed: Vec<usize> = (0..=area)
        .map(|c| {
            let lo = c.saturating_sub(smooth);
            let hi = (c + smooth).min(area);
            hist[lo..=hi].iter().sum()
        })
        .collect();

    // plateau-aware local maxima
    let mut peaks: Vec<(usize, usize)> = Vec::new(); // (center, height)
    let mut i = 0usize;
    while i <= area {
        let v = smoothed[i];
        let mut j = i;
        while j + 1 <= area && smoothed[j + 1] == v {
            j += 1;
        }
        let left_lower = i == 0 || smoothed[i - 1] < v;
        let right_lower = j == area || smoothed[j + 1] < v;
        if v > 0 && left_lower && right_lower {
            peaks.push(((i + j) / 2, v));
        }
        i = j + 1;
    }

    // a mode must hold real mass and rise above counting noise; flank
    // wiggles that pass the noise floor sit within the merge tolerance of
    // their parent mode and are absorbed below
    peaks.retain(|&(center, height)| {
        height >= min_pixels
            && prominence(&smoothed, center, height) as f64 >= (height as f64).sqrt()
    });
    peaks.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let tolerance = 3.0 * sigma_counts;
    let mut kept: Vec<usize> = Vec::new();
    for (center, _) in peaks {
        if kept
            .iter()
            .all(|&k| (k as f64 - center as f64).abs() > tolerance)
        {
            kept.push(center);
        }
    }
    kept.sort_unstable();
    ChannelModes {
        centers: kept.iter().map(|&c| c as f64).collect(),
        tolerance,
        assign_tolerance: 2.5 * sigma_counts,
    }
}

/// Height of a peak above the higher of the two saddles that connect it
/// to taller terrain; the full height when nothing taller exists.
fn prominence(smoothed: &[usize], center: usize, height: usize) -> usize {
    let saddle = |range: &mut dyn Iterator<Item = usize>| -> Option<usize> {
        let mut low = height;
        for c in range {
            if smoothed[c] > height {
                return Some(low);
            }
            low = low.min(smoothed[c]);
        }
        None
    };
    let left = saddle(&mut (0..center).rev());
    let right = saddle(&mut (center + 1..smoothed.len()));
    match (left, right) {
        (None, None) => height,
        (Some(s), None) | (None, Some(s)) => height - s,
        (Some(a), Some(b)) => height - a.max(b),
    }
}

/// Classifies each pixel of a density channel by its nearest level.
pub fn nearest_level_map(channel: &[f64], levels: &[f64]) -> Vec<u8> {
    channel
        .iter()
        .map(|&v| {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (i, &l) in levels.iter().enumerate() {
                let d = (v - l).abs();
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
            best as u8
        })
        .collect()
}

/// Majority vote over the `(2r+1)`-square window per pixel; used to read
/// region-level structure out of a per-pixel classification.
pub fn majority_smooth(
    map: &[u8],
    width: usize,
    height: usize,
    num_levels: usize,
    radius: usize,
) -> Vec<u8> {
    if radius == 0 {
        return map.to_vec();
    }
    let img = LabelImage::new(width, height, num_levels.max(2), map.to_vec())
        .expect("level map is a valid label image");
    let integrals: Vec<ClassIntegral> = (0..num_levels)
        .map(|l| ClassIntegral::new(&img, l as u8))
        .collect();
    let rows = par::map_rows(height, |y| {
        (0..width)
            .map(|x| {
                let mut best = 0usize;
                let mut best_count = 0u32;
                for (l, integral) in integrals.iter().enumerate() {
                    let (count, _) = integral.window(x, y, radius);
                    if count > best_count {
                        best_count = count;
                        best = l;
                    }
                }
                best as u8
            })
            .collect::<Vec<u8>>()
    });
    par::concat_rows(rows)
}

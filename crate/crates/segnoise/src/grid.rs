//! Pixel-grid value types shared by all modules.
//!
//! A [`LabelImage`] stores one class index per pixel, a [`ProbImage`] one
//! real in `[0, 1]`, an [`IntensityImage`] one grayscale real in `[0, 1]`.
//! All three are row-major with `(x, y)` addressing `data[y * width + x]`.

use crate::error::{Error, Result};

/// H×W grid of integer class indices in `[0, M)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelImage {
    width: usize,
    height: usize,
    num_classes: usize,
    data: Vec<u8>,
}

impl LabelImage {
    /// Builds a label image, checking the grid invariants.
    pub fn new(width: usize, height: usize, num_classes: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidLabelImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if num_classes < 2 || num_classes > 256 {
            return Err(Error::InvalidLabelImage(format!(
                "class count must be in [2, 256], got {num_classes}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidLabelImage(format!(
                "data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        if let Some(&v) = data.iter().find(|&&v| v as usize >= num_classes) {
            return Err(Error::InvalidLabelImage(format!(
                "pixel value {v} exceeds class count {num_classes}"
            )));
        }
        Ok(Self {
            width,
            height,
            num_classes,
            data,
        })
    }

    /// All-background image (class 0 everywhere).
    pub fn zeros(width: usize, height: usize, num_classes: usize) -> Self {
        Self::new(width, height, num_classes, vec![0; width * height])
            .expect("zero image is always valid")
    }

    /// Binary mask from a boolean predicate over `(x, y)`.
    pub fn from_fn_binary(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut data = vec![0u8; width * height];
        for y in 0..height {
            for x in 0..width {
                if f(x, y) {
                    data[y * width + x] = 1;
                }
            }
        }
        Self {
            width,
            height,
            num_classes: 2,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        debug_assert!((v as usize) < self.num_classes);
        self.data[y * self.width + x] = v;
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    /// True when the image carries exactly two classes.
    pub fn is_binary(&self) -> bool {
        self.num_classes == 2
    }

    pub fn require_binary(&self) -> Result<()> {
        if self.is_binary() {
            Ok(())
        } else {
            Err(Error::NonBinaryMask(self.num_classes))
        }
    }

    pub fn same_dims(&self, other: &LabelImage) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }

    /// Number of pixels equal to `class`.
    pub fn count_class(&self, class: u8) -> usize {
        self.data.iter().filter(|&&v| v == class).count()
    }

    /// Per-class pixel counts, length `num_classes`.
    pub fn class_histogram(&self) -> Vec<usize> {
        let mut hist = vec![0usize; self.num_classes];
        for &v in &self.data {
            hist[v as usize] += 1;
        }
        hist
    }

    /// Reinterprets the mask with a larger class count (values unchanged).
    pub fn with_num_classes(&self, num_classes: usize) -> Result<Self> {
        Self::new(self.width, self.height, num_classes, self.data.clone())
    }
}

/// H×W grid of reals in `[0, 1]`, the predictor output.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ProbImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidLabelImage(format!(
                "data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        if let Some(&v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::ProbabilityOutOfRange(v));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Probability image equal to a binary mask (0.0 / 1.0).
    pub fn from_mask(mask: &LabelImage) -> Self {
        Self {
            width: mask.width(),
            height: mask.height(),
            data: mask.data().iter().map(|&v| f64::from(v.min(1))).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &v in &self.data {
            min = min.min(v);
            max = max.max(v);
        }
        (min, max)
    }

    pub fn same_dims_mask(&self, mask: &LabelImage) -> Result<()> {
        if self.width != mask.width() || self.height != mask.height() {
            return Err(Error::DimensionMismatch(
                self.width,
                self.height,
                mask.width(),
                mask.height(),
            ));
        }
        Ok(())
    }
}

/// H×W grayscale intensity grid in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl IntensityImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidLabelImage(format!(
                "data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Converts 8-bit samples to reals in `[0, 1]`.
    pub fn from_u8(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        Self::new(
            width,
            height,
            bytes.iter().map(|&b| f64::from(b) / 255.0).collect(),
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Quantizes back to 8-bit samples, clamping to `[0, 1]` first.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect()
    }
}

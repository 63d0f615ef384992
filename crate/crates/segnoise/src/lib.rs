//! Label-noise synthesis and analysis for segmentation masks.
//!
//! The crate covers four areas:
//!
//! - noise transition matrices ([`ntm`]) and the mask corruptions they
//!   drive ([`corrupt`], [`morph`]);
//! - window-count density maps over label grids and the class-structure
//!   summary built from them ([`sdd`]);
//! - the determinant mutual-information and soft-IoU losses ([`loss`]),
//!   the skeleton-shift-sample label refinement ([`ems`]), and the
//!   unsupervised threshold-ladder training loop ([`igtt`]);
//! - evaluation metrics ([`metrics`]), synthetic fixtures ([`fixtures`]),
//!   and file I/O ([`io`]).
//!
//! Hot per-pixel kernels are data-parallel over rows when the `parallel`
//! feature (default) is enabled; the sequential fallback produces
//! bit-identical results.

pub mod baseline;
pub mod corrupt;
pub mod ems;
pub mod error;
pub mod fixtures;
pub mod grid;
pub mod igtt;
pub mod io;
pub mod loss;
pub mod metrics;
pub mod morph;
pub mod ntm;
pub(crate) mod par;
pub mod predictor;
pub mod rng;
pub mod sdd;

pub use error::{Error, Result};
pub use grid::{IntensityImage, LabelImage, ProbImage};
pub use ntm::Ntm;

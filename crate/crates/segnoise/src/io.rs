//! File formats: binary PGM (P5) and 8-bit grayscale PNG for masks and
//! intensity images, JSON for transition matrices and analysis summaries,
//! CSV for metric tables.
//!
//! Masks store the class index directly as the pixel value, so mask files
//! round-trip losslessly and diff cleanly. PGM files must declare a maxval
//! of 255.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::grid::{IntensityImage, LabelImage};
use crate::ntm::Ntm;

/// Raw 8-bit grayscale buffer.
struct GrayFile {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

fn read_gray(path: &Path) -> Result<GrayFile> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("pgm") => read_pgm(path),
        Some("png") => read_png(path),
        other => Err(Error::Format {
            format: "image",
            reason: format!("unsupported extension {other:?}, expected .pgm or .png"),
        }),
    }
}

fn write_gray(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("pgm") => write_pgm(path, width, height, pixels),
        Some("png") => write_png(path, width, height, pixels),
        other => Err(Error::Format {
            format: "image",
            reason: format!("unsupported extension {other:?}, expected .pgm or .png"),
        }),
    }
}

fn read_pgm(path: &Path) -> Result<GrayFile> {
    let bytes = fs::read(path)?;
    let malformed = |reason: &str| Error::Format {
        format: "PGM",
        reason: reason.to_string(),
    };
    if bytes.len() < 2 || &bytes[0..2] != b"P5" {
        return Err(malformed("missing P5 magic"));
    }
    // header tokens: width, height, maxval; '#' starts a comment
    let mut pos = 2usize;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // skip whitespace and comments
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(malformed("truncated header"));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).expect("digits are utf-8");
        *field = text.parse().map_err(|_| malformed("bad header number"))?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(malformed(&format!("maxval {maxval}, expected 255")));
    }
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(malformed("missing whitespace after header"));
    }
    pos += 1;
    let expected = width * height;
    if bytes.len() - pos < expected {
        return Err(malformed("pixel data shorter than header promises"));
    }
    Ok(GrayFile {
        width,
        height,
        pixels: bytes[pos..pos + expected].to_vec(),
    })
}

fn write_pgm(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    let mut out = Vec::with_capacity(pixels.len() + 32);
    write!(out, "P5\n{width} {height}\n255\n").expect("in-memory write");
    out.extend_from_slice(pixels);
    fs::write(path, out)?;
    Ok(())
}

fn read_png(path: &Path) -> Result<GrayFile> {
    let img = image::open(path).map_err(|e| Error::Format {
        format: "PNG",
        reason: e.to_string(),
    })?;
    match img {
        image::DynamicImage::ImageLuma8(gray) => Ok(GrayFile {
            width: gray.width() as usize,
            height: gray.height() as usize,
            pixels: gray.into_raw(),
        }),
        other => Err(Error::Format {
            format: "PNG",
            reason: format!("expected 8-bit grayscale, got {:?}", other.color()),
        }),
    }
}

fn write_png(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    let buf: image::GrayImage =
        image::ImageBuffer::from_raw(width as u32, height as u32, pixels.to_vec())
            .expect("buffer length matches dimensions");
    buf.save(path).map_err(|e| Error::Format {
        format: "PNG",
        reason: e.to_string(),
    })
}

/// Reads a mask; the class count is the maximum pixel value plus one
/// (at least 2) unless `num_classes` overrides it.
pub fn read_mask(path: &Path, num_classes: Option<usize>) -> Result<LabelImage> {
    let gray = read_gray(path)?;
    let max = gray.pixels.iter().copied().max().unwrap_or(0);
    let m = match num_classes {
        Some(m) => {
            if usize::from(max) >= m {
                return Err(Error::Format {
                    format: "mask",
                    reason: format!("pixel value {max} not below declared class count {m}"),
                });
            }
            m
        }
        None => usize::from(max).max(1) + 1,
    };
    LabelImage::new(gray.width, gray.height, m, gray.pixels)
}

/// Writes a mask with class indices as pixel values.
pub fn write_mask(path: &Path, mask: &LabelImage) -> Result<()> {
    write_gray(path, mask.width(), mask.height(), mask.data())
}

/// Reads an 8-bit grayscale file as intensities in `[0, 1]`.
pub fn read_intensity(path: &Path) -> Result<IntensityImage> {
    let gray = read_gray(path)?;
    IntensityImage::from_u8(gray.width, gray.height, &gray.pixels)
}

/// Writes intensities as 8-bit grayscale.
pub fn write_intensity(path: &Path, image: &IntensityImage) -> Result<()> {
    write_gray(path, image.width(), image.height(), &image.to_u8())
}

/// Reads and validates a transition matrix from `{"m": .., "columns": ..}`
/// JSON.
pub fn read_ntm(path: &Path) -> Result<Ntm> {
    let text = fs::read_to_string(path)?;
    let ntm: Ntm = serde_json::from_str(&text).map_err(|e| Error::Format {
        format: "NTM JSON",
        reason: e.to_string(),
    })?;
    ntm.validate()?;
    Ok(ntm)
}

/// Writes a transition matrix as JSON.
pub fn write_ntm(path: &Path, ntm: &Ntm) -> Result<()> {
    let text = serde_json::to_string_pretty(ntm).expect("matrix serializes");
    fs::write(path, text)?;
    Ok(())
}

/// Scale recovery data for a heatmap file.
#[derive(Debug, serde::Serialize, Deserialize, PartialEq)]
pub struct HeatmapScale {
    pub min: f64,
    pub max: f64,
}

/// Writes a real-valued channel as linearly scaled 8-bit grayscale plus a
/// `.json` sidecar holding the scale.
pub fn write_heatmap(path: &Path, values: &[f64], width: usize, height: usize) -> Result<()> {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        min = min.min(v);
        max = max.max(v);
    }
    if values.is_empty() {
        min = 0.0;
        max = 0.0;
    }
    let span = if max > min { max - min } else { 1.0 };
    let pixels: Vec<u8> = values
        .iter()
        .map(|&v| (((v - min) / span) * 255.0).round() as u8)
        .collect();
    write_gray(path, width, height, &pixels)?;
    let sidecar = path.with_extension("json");
    let scale = HeatmapScale { min, max };
    fs::write(
        sidecar,
        serde_json::to_string(&scale).expect("scale serializes"),
    )?;
    Ok(())
}

/// Writes an RFC-4180 CSV table (CRLF line endings, quoting only where
/// needed).
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = String::new();
    let quote = |field: &str| -> String {
        if field.contains(',') || field.contains('"') || field.contains('\n') {
            format!("\"{}\"", field.replace('"', "\"\""))
        } else {
            field.to_string()
        }
    };
    out.push_str(&header.iter().map(|h| quote(h)).collect::<Vec<_>>().join(","));
    out.push_str("\r\n");
    for row in rows {
        out.push_str(&row.iter().map(|f| quote(f)).collect::<Vec<_>>().join(","));
        out.push_str("\r\n");
    }
    fs::write(path, out)?;
    Ok(())
}

//! Grayscale rendering of time-frequency magnitudes.

use std::fs;
use std::path::Path;

use image::{GrayImage, ImageFormat};

use crate::error::{Error, Result};
use crate::metrics::TfView;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ImageScale {
    Linear,
    #[default]
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalize {
    /// White at the 99th percentile of the (scaled) magnitude.
    #[default]
    Percentile99,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageOptions {
    pub scale: ImageScale,
    pub normalize: Normalize,
    /// Visible range below the reference level when `scale` is `Log`.
    pub dynamic_range_db: f64,
}

impl Default for ImageOptions {
    fn default() -> Self {
        Self {
            scale: ImageScale::Log,
            normalize: Normalize::Percentile99,
            dynamic_range_db: 80.0,
        }
    }
}

/// Renders `|V|` as 8-bit gray, one pixel per coefficient, frequency
/// increasing upward. An all-zero plane renders black.
pub fn render_gray(plane: &impl TfView, opts: &ImageOptions) -> Result<GrayImage> {
    if !(opts.dynamic_range_db > 0.0) {
        return Err(Error::invalid("dynamic range must be positive"));
    }
    let v = plane.values();
    let (rows, cols) = v.dim();
    if rows == 0 || cols == 0 {
        return Err(Error::Empty("plane has no coefficients".into()));
    }
    let mag = v.mapv(|c| c.norm());
    let peak = mag.iter().cloned().fold(0.0, f64::max);
    let mut img = GrayImage::new(cols as u32, rows as u32);
    if peak == 0.0 {
        return Ok(img);
    }
    let scaled = match opts.scale {
        ImageScale::Linear => mag,
        ImageScale::Log => mag.mapv(|m| 20.0 * (m + 1e-12 * peak).log10()),
    };
    let hi = match opts.normalize {
        Normalize::Max => scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        Normalize::Percentile99 => {
            let mut sorted: Vec<f64> = scaled.iter().cloned().collect();
            sorted.sort_by(f64::total_cmp);
            sorted[((sorted.len() - 1) as f64 * 0.99).round() as usize]
        }
    };
    let lo = match opts.scale {
        ImageScale::Linear => 0.0,
        ImageScale::Log => hi - opts.dynamic_range_db,
    };
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    for ((r, c), &s) in scaled.indexed_iter() {
        let level = ((s - lo) / span).clamp(0.0, 1.0);
        let y = (rows - 1 - r) as u32;
        img.put_pixel(c as u32, y, image::Luma([(level * 255.0).round() as u8]));
    }
    Ok(img)
}

/// Writes PNG when `path` ends in `.png`, binary PGM otherwise.
pub fn export_image(plane: &impl TfView, path: &Path, opts: &ImageOptions) -> Result<()> {
    let img = render_gray(plane, opts)?;
    let is_png = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    if is_png {
        img.save_with_format(path, ImageFormat::Png)
            .map_err(|e| Error::Image(e.to_string()))
    } else {
        let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
        out.extend_from_slice(img.as_raw());
        fs::write(path, out)?;
        Ok(())
    }
}

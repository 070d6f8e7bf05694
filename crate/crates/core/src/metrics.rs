//! Concentration and reconstruction-quality measures.

use std::fmt::Write as _;

use ndarray::ArrayView2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ridge::ModeEstimate;
use crate::signal::SampledSignal;
use crate::sst::SstPlane;
use crate::tfr::TfrPlane;

/// Read-only access shared by linear and synchrosqueezed planes.
pub trait TfView {
    fn values(&self) -> ArrayView2<'_, Complex64>;
    /// Row centre frequencies, increasing.
    fn freq_axis(&self) -> &[f64];
    fn time_axis(&self) -> &[f64];
}

impl TfView for TfrPlane {
    fn values(&self) -> ArrayView2<'_, Complex64> {
        self.values.view()
    }
    fn freq_axis(&self) -> &[f64] {
        &self.freq_axis_hz
    }
    fn time_axis(&self) -> &[f64] {
        &self.time_axis_s
    }
}

impl TfView for SstPlane {
    fn values(&self) -> ArrayView2<'_, Complex64> {
        self.values.view()
    }
    fn freq_axis(&self) -> &[f64] {
        &self.eta_axis_hz
    }
    fn time_axis(&self) -> &[f64] {
        &self.time_axis_s
    }
}

/// Rényi entropy (bits) of `|V|²/Σ|V|²`. Order 1 is the Shannon limit.
pub fn renyi_entropy(plane: &impl TfView, order: f64) -> Result<f64> {
    renyi_entropy_of(plane.values(), order)
}

pub fn renyi_entropy_of(values: ArrayView2<Complex64>, order: f64) -> Result<f64> {
    if !(order > 0.0 && order.is_finite()) {
        return Err(Error::invalid(format!("Rényi order must be positive, got {order}")));
    }
    let total: f64 = values.iter().map(|c| c.norm_sqr()).sum();
    if !(total > 0.0) {
        return Err(Error::Empty("plane has zero energy".into()));
    }
    let h = if (order - 1.0).abs() < 1e-12 {
        -values
            .iter()
            .map(|c| c.norm_sqr() / total)
            .filter(|&p| p > 0.0)
            .map(|p| p * p.log2())
            .sum::<f64>()
    } else {
        let s: f64 = values.iter().map(|c| (c.norm_sqr() / total).powf(order)).sum();
        s.log2() / (1.0 - order)
    };
    Ok(h.max(0.0))
}

/// Fraction of total magnitude within `±halfwidth_bins` of any track.
///
/// `if_tracks[k][m]` is the frequency of track `k` at frame `m`, Hz.
pub fn ridge_energy_fraction(plane: &impl TfView, if_tracks: &[Vec<f64>], halfwidth_bins: usize) -> Result<f64> {
    let values = plane.values();
    let axis = plane.freq_axis();
    let (rows, frames) = values.dim();
    if if_tracks.is_empty() {
        return Err(Error::Empty("no ground-truth tracks".into()));
    }
    if let Some(t) = if_tracks.iter().find(|t| t.len() != frames) {
        return Err(Error::ShapeMismatch(format!("track has {} frames, plane has {frames}", t.len())));
    }
    let total: f64 = values.iter().map(|c| c.norm()).sum();
    if !(total > 0.0) {
        return Err(Error::Empty("plane has zero magnitude".into()));
    }
    let mut inside = 0.0;
    let mut mark = vec![false; rows];
    for m in 0..frames {
        mark.iter_mut().for_each(|v| *v = false);
        for track in if_tracks {
            let b = nearest_bin(axis, track[m]);
            let lo = b.saturating_sub(halfwidth_bins);
            let hi = (b + halfwidth_bins).min(rows - 1);
            mark[lo..=hi].iter_mut().for_each(|v| *v = true);
        }
        inside += (0..rows).filter(|&r| mark[r]).map(|r| values[[r, m]].norm()).sum::<f64>();
    }
    Ok((inside / total).clamp(0.0, 1.0))
}

/// Index of the axis entry closest to `f` (axis increasing).
pub fn nearest_bin(axis: &[f64], f: f64) -> usize {
    let i = axis.partition_point(|&a| a < f);
    if i == 0 {
        0
    } else if i == axis.len() {
        axis.len() - 1
    } else if (axis[i] - f).abs() < (f - axis[i - 1]).abs() {
        i
    } else {
        i - 1
    }
}

/// `‖est − truth‖ / ‖truth‖` over the centred `interior_fraction` of samples.
pub fn relative_l2_error(estimate: &[Complex64], truth: &[Complex64], interior_fraction: f64) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::ShapeMismatch(format!(
            "estimate has {} samples, truth has {}",
            estimate.len(),
            truth.len()
        )));
    }
    if !(interior_fraction > 0.0 && interior_fraction <= 1.0) {
        return Err(Error::invalid("interior fraction must lie in (0, 1]"));
    }
    let range = interior_range(truth.len(), interior_fraction);
    let num: f64 = range.clone().map(|i| (estimate[i] - truth[i]).norm_sqr()).sum();
    let den: f64 = range.map(|i| truth[i].norm_sqr()).sum();
    if !(den > 0.0) {
        return Err(Error::Empty("ground truth has zero norm".into()));
    }
    Ok((num / den).sqrt())
}

/// Same as [`relative_l2_error`] for a mode estimate and a signal sampled on
/// the same grid.
pub fn mode_relative_l2_error(estimate: &ModeEstimate, truth: &SampledSignal, interior_fraction: f64) -> Result<f64> {
    relative_l2_error(&estimate.samples, truth.samples(), interior_fraction)
}

/// Centred index range covering `fraction` of `n` samples.
pub fn interior_range(n: usize, fraction: f64) -> std::ops::Range<usize> {
    let skip = ((n as f64) * (1.0 - fraction) / 2.0 + 1e-9).floor() as usize;
    skip..n - skip
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationReport {
    pub renyi_entropy_bits: f64,
    pub ridge_energy_fraction: Option<f64>,
    pub renyi_order: f64,
    pub halfwidth_bins: usize,
    pub plane_kind: String,
}

impl ConcentrationReport {
    pub fn compute(
        plane: &impl TfView,
        plane_kind: &str,
        order: f64,
        tracks: Option<&[Vec<f64>]>,
        halfwidth_bins: usize,
    ) -> Result<Self> {
        Ok(Self {
            renyi_entropy_bits: renyi_entropy(plane, order)?,
            ridge_energy_fraction: tracks
                .map(|t| ridge_energy_fraction(plane, t, halfwidth_bins))
                .transpose()?,
            renyi_order: order,
            halfwidth_bins,
            plane_kind: plane_kind.to_string(),
        })
    }

    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "plane_kind={}", self.plane_kind);
        let _ = writeln!(s, "renyi_order={}", self.renyi_order);
        let _ = writeln!(s, "renyi_entropy_bits={:.6}", self.renyi_entropy_bits);
        if let Some(f) = self.ridge_energy_fraction {
            let _ = writeln!(s, "halfwidth_bins={}", self.halfwidth_bins);
            let _ = writeln!(s, "ridge_energy_fraction={f:.6}");
        }
        s
    }

    pub const CSV_HEADER: &'static str = "plane_kind,renyi_order,renyi_entropy_bits,halfwidth_bins,ridge_energy_fraction";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{:.6},{},{}",
            self.plane_kind,
            self.renyi_order,
            self.renyi_entropy_bits,
            self.halfwidth_bins,
            self.ridge_energy_fraction.map(|f| format!("{f:.6}")).unwrap_or_default()
        )
    }
}

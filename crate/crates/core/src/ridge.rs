//! Ridge extraction by penalised dynamic programming, and mode
//! reconstruction by integrating a synchrosqueezed plane around a ridge.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sst::{SstKind, SstPlane};
use crate::window::DiscreteWindow;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgeParams {
    /// Jump penalty per squared bin, in units of the mean per-frame total
    /// magnitude of the plane.
    pub penalty: f64,
    pub max_jump: usize,
    /// Half-width (bins) zeroed around each ridge before the next pass.
    pub clear_bins: usize,
    /// Passes stop once the remaining magnitude falls below this fraction of
    /// the original.
    pub min_energy_fraction: f64,
}

impl Default for RidgeParams {
    fn default() -> Self {
        Self {
            penalty: 2.0,
            max_jump: 16,
            clear_bins: 8,
            min_energy_fraction: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ridge {
    /// Rank by descending energy, starting at 0.
    pub index: usize,
    pub bin_track: Vec<usize>,
    pub freq_track_hz: Vec<f64>,
    /// Σ |T| along the track.
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeSet {
    pub ridges: Vec<Ridge>,
    /// Set when fewer ridges than requested could be separated.
    pub diagnostic: Option<String>,
}

pub fn extract_ridges(s: &SstPlane, k: usize, p: &RidgeParams) -> Result<RidgeSet> {
    let mag = s.values.mapv(|c| c.norm());
    extract_ridges_from_magnitude(mag.view(), &s.eta_axis_hz, k, p)
}

/// Ridge extraction on any magnitude plane `[bin][frame]`.
///
/// Each pass maximises `Σ_m |T[b_m][m]| − λ·Σ_m (b_{m+1} − b_m)²` subject to
/// `|b_{m+1} − b_m| ≤ max_jump`, then clears `±clear_bins` around the track.
pub fn extract_ridges_from_magnitude(
    mag: ArrayView2<f64>,
    axis_hz: &[f64],
    k: usize,
    p: &RidgeParams,
) -> Result<RidgeSet> {
    let (bins, frames) = mag.dim();
    if k == 0 || k > bins {
        return Err(Error::invalid(format!("ridge count must be in 1..={bins}, got {k}")));
    }
    if axis_hz.len() != bins {
        return Err(Error::ShapeMismatch(format!("axis has {} entries for {bins} bins", axis_hz.len())));
    }
    if !(p.penalty >= 0.0) {
        return Err(Error::invalid("ridge penalty must be non-negative"));
    }
    let mut work: Array2<f64> = mag.to_owned();
    let original: f64 = work.sum();
    let mut ridges = Vec::new();
    let mut diagnostic = None;
    if !(original > 0.0) || frames == 0 {
        return Ok(RidgeSet {
            ridges,
            diagnostic: Some("plane has no energy; no ridges extracted".into()),
        });
    }
    let lambda = p.penalty * original / frames as f64;

    for pass in 0..k {
        let remaining: f64 = work.sum();
        if remaining <= p.min_energy_fraction * original {
            diagnostic = Some(format!(
                "only {pass} of {k} ridges extracted: remaining magnitude {remaining:.3e} is below \
                 {:.1e} of the original",
                p.min_energy_fraction
            ));
            break;
        }
        let track = best_track(work.view(), lambda, p.max_jump);
        let energy: f64 = track.iter().enumerate().map(|(m, &b)| mag[[b, m]]).sum();
        for (m, &b) in track.iter().enumerate() {
            let lo = b.saturating_sub(p.clear_bins);
            let hi = (b + p.clear_bins).min(bins - 1);
            for r in lo..=hi {
                work[[r, m]] = 0.0;
            }
        }
        ridges.push(Ridge {
            index: 0,
            freq_track_hz: track.iter().map(|&b| axis_hz[b]).collect(),
            bin_track: track,
            energy,
        });
    }
    ridges.sort_by(|a, b| b.energy.total_cmp(&a.energy));
    for (i, r) in ridges.iter_mut().enumerate() {
        r.index = i;
    }
    Ok(RidgeSet { ridges, diagnostic })
}

fn best_track(mag: ArrayView2<f64>, lambda: f64, max_jump: usize) -> Vec<usize> {
    let (bins, frames) = mag.dim();
    let mut score: Vec<f64> = (0..bins).map(|b| mag[[b, 0]]).collect();
    let mut next = vec![0.0; bins];
    let mut back = vec![0u32; bins * frames];
    for m in 1..frames {
        for b in 0..bins {
            let lo = b.saturating_sub(max_jump);
            let hi = (b + max_jump).min(bins - 1);
            let mut best = f64::NEG_INFINITY;
            let mut arg = b;
            for prev in lo..=hi {
                let d = prev as f64 - b as f64;
                let v = score[prev] - lambda * d * d;
                if v > best {
                    best = v;
                    arg = prev;
                }
            }
            next[b] = best + mag[[b, m]];
            back[m * bins + b] = arg as u32;
        }
        std::mem::swap(&mut score, &mut next);
    }
    let mut b = (0..bins).fold(0, |best, i| if score[i] > score[best] { i } else { best });
    let mut track = vec![0; frames];
    for m in (0..frames).rev() {
        track[m] = b;
        if m > 0 {
            b = back[m * bins + b] as usize;
        }
    }
    track
}

/// Reconstructed mode on the plane's time axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeEstimate {
    pub samples: Vec<Complex64>,
    pub time_axis_s: Vec<f64>,
    pub component_index: usize,
    pub band_halfwidth_bins: usize,
}

fn band_sum(s: &SstPlane, r: &Ridge, d_bins: usize) -> Result<Vec<Complex64>> {
    if r.bin_track.len() != s.n_frames() {
        return Err(Error::ShapeMismatch(format!(
            "ridge has {} frames, plane has {}",
            r.bin_track.len(),
            s.n_frames()
        )));
    }
    if d_bins == 0 {
        return Err(Error::invalid("band half-width must be at least 1 bin"));
    }
    let top = s.n_bins() - 1;
    r.bin_track
        .iter()
        .enumerate()
        .map(|(m, &b)| {
            if b > top {
                return Err(Error::ShapeMismatch(format!("ridge bin {b} outside plane")));
            }
            let lo = b.saturating_sub(d_bins);
            let hi = (b + d_bins).min(top);
            Ok((lo..=hi).map(|i| s.values[[i, m]]).sum())
        })
        .collect()
}

fn finish(s: &SstPlane, r: &Ridge, d_bins: usize, mut samples: Vec<Complex64>, constant: f64) -> ModeEstimate {
    let scale = if s.provenance.real_input { 2.0 } else { 1.0 } / constant;
    samples.iter_mut().for_each(|v| *v *= scale);
    ModeEstimate {
        samples,
        time_axis_s: s.time_axis_s.clone(),
        component_index: r.index,
        band_halfwidth_bins: d_bins,
    }
}

/// Normalisation constant for STFT-branch reconstruction: `fs·h[c]`.
///
/// With window-centred modulation `Σ_k S[k][m] = N·h[c]·x[m]`, so with
/// deposits weighted by Δf = fs/N the band integral equals `fs·h[c]·x`.
/// The energy-based factor `1/∫|h|²` does not recover unit amplitude under
/// this convention; it differs from this constant by the factor `fs²·h[c]`
/// for a unit-energy window.
pub fn stft_reconstruction_constant(w: &DiscreteWindow, sample_rate_hz: f64) -> f64 {
    sample_rate_hz * w.center_tap()
}

pub fn reconstruct_mode_stft(s: &SstPlane, r: &Ridge, d_bins: usize, w: &DiscreteWindow) -> Result<ModeEstimate> {
    if s.kind != SstKind::Stft {
        return Err(Error::invalid(format!("expected an sst-stft plane, got {}", s.kind.tag())));
    }
    let c = stft_reconstruction_constant(w, s.provenance.sample_rate_hz);
    Ok(finish(s, r, d_bins, band_sum(s, r, d_bins)?, c))
}

/// Band integral divided by `C_ψ` (see
/// [`cwt_reconstruction_constant`](crate::wavelet::cwt_reconstruction_constant)).
pub fn reconstruct_mode_cwt(s: &SstPlane, r: &Ridge, d_bins: usize, c_psi: f64) -> Result<ModeEstimate> {
    if s.kind != SstKind::Cwt {
        return Err(Error::invalid(format!("expected an sst-cwt plane, got {}", s.kind.tag())));
    }
    if !(c_psi > 0.0 && c_psi.is_finite()) {
        return Err(Error::invalid("C_ψ must be finite and positive"));
    }
    Ok(finish(s, r, d_bins, band_sum(s, r, d_bins)?, c_psi))
}

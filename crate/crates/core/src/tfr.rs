//! Forward STFT and CWT together with their exact time-derivative companions.
//!
//! STFT convention (window-centred phase): frame `m` is centred on sample
//! `m·hop` and
//!
//! ```text
//! S[k][m] = Σ_n x[n]·h[n − m·hop + c]·exp(−j2π f_k (n − m·hop)/fs)
//! ```
//!
//! with `c = L/2` the centre tap. Under this convention the time derivative is
//! `∂ₜS = j2π f_k·S − S^{h'}`, where `S^{h'}` is the STFT taken with the
//! window derivative, so the phase transform of a tone is its frequency.
//!
//! CWT: `W(a, n) = IFFT[x̂(ξ)·ψ̂(a·ξ)]` over the whole record (periodic
//! wrap), one row per scale. Rows are stored by increasing centre frequency.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::signal::SampledSignal;
use crate::wavelet::{gmw_freq_response, MorseWavelet};
use crate::window::{dpss_window, DiscreteWindow, WindowSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfrKind {
    Stft,
    Cwt,
}

impl TfrKind {
    pub fn tag(&self) -> &'static str {
        match self {
            TfrKind::Stft => "stft",
            TfrKind::Cwt => "cwt",
        }
    }
}

/// Complex time-frequency plane indexed `[frequency-or-scale row][frame]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TfrPlane {
    pub values: Array2<Complex64>,
    pub time_axis_s: Vec<f64>,
    /// Strictly increasing.
    pub freq_axis_hz: Vec<f64>,
    /// CWT only, in samples, aligned with the rows.
    pub scale_axis: Option<Vec<f64>>,
    pub kind: TfrKind,
    pub sample_rate_hz: f64,
    pub real_input: bool,
    /// Frames at each edge affected by boundary handling, per row.
    pub boundary_frames: Vec<usize>,
    pub warnings: Vec<String>,
}

impl TfrPlane {
    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_frames(&self) -> usize {
        self.values.ncols()
    }

    /// Row spacing of a linear axis, Hz.
    pub fn bin_spacing_hz(&self) -> f64 {
        self.freq_axis_hz[1] - self.freq_axis_hz[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StftParams {
    pub window: WindowSpec,
    pub hop_samples: usize,
    pub fft_length: usize,
}

impl StftParams {
    /// FFT length defaults to the next power of two ≥ 4× the window length.
    pub fn new(window: WindowSpec, hop_samples: usize) -> Self {
        Self {
            window,
            hop_samples,
            fft_length: (4 * window.length_samples).next_power_of_two(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.window.validate()?;
        check_stft_shape(self.window.length_samples, self.hop_samples, self.fft_length)
    }
}

impl Default for StftParams {
    fn default() -> Self {
        Self::new(WindowSpec::default(), 1)
    }
}

fn check_stft_shape(window_len: usize, hop: usize, fft_length: usize) -> Result<()> {
    if hop == 0 {
        return Err(Error::invalid("hop must be at least 1 sample"));
    }
    if !fft_length.is_power_of_two() || fft_length < window_len {
        return Err(Error::invalid(format!(
            "FFT length {fft_length} must be a power of two ≥ window length {window_len}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CwtParams {
    pub wavelet: MorseWavelet,
    pub voices_per_octave: usize,
    /// Smallest scale, samples.
    pub scale_min: f64,
    /// Largest scale, samples.
    pub scale_max: f64,
}

impl CwtParams {
    pub fn validate(&self) -> Result<()> {
        self.wavelet.validate()?;
        if self.voices_per_octave == 0 {
            return Err(Error::invalid("voices per octave must be positive"));
        }
        if !(self.scale_min > 0.0 && self.scale_min < self.scale_max && self.scale_max.is_finite()) {
            return Err(Error::invalid(format!(
                "scale grid needs 0 < scale_min < scale_max, got [{}, {}]",
                self.scale_min, self.scale_max
            )));
        }
        Ok(())
    }

    /// Geometric grid `scale_min·2^(i/v)`, increasing; its length is
    /// `v·log2(scale_max/scale_min)` rounded up.
    pub fn scales(&self) -> Vec<f64> {
        let v = self.voices_per_octave as f64;
        let count = ((v * (self.scale_max / self.scale_min).log2()).ceil() as usize).max(1);
        (0..count).map(|i| self.scale_min * (i as f64 / v).exp2()).collect()
    }

    /// Centre frequency (Hz) of a scale given in samples.
    pub fn center_frequency(&self, scale: f64, sample_rate_hz: f64) -> f64 {
        self.wavelet.peak_omega() * sample_rate_hz / (2.0 * PI * scale)
    }

    pub fn scale_for_frequency(&self, freq_hz: f64, sample_rate_hz: f64) -> f64 {
        self.wavelet.peak_omega() * sample_rate_hz / (2.0 * PI * freq_hz)
    }
}

/// Scale grid spanning centre frequencies from `4·fs/n` (about four periods
/// per record) up to `0.45·fs`.
pub fn default_scale_grid(
    sample_rate_hz: f64,
    n_samples: usize,
    wavelet: MorseWavelet,
    voices_per_octave: usize,
) -> Result<CwtParams> {
    if n_samples < 16 {
        return Err(Error::invalid(format!("default scale grid needs n ≥ 16, got {n_samples}")));
    }
    let mut p = CwtParams {
        wavelet,
        voices_per_octave,
        scale_min: 1.0,
        scale_max: 2.0,
    };
    let f_lo = 4.0 * sample_rate_hz / n_samples as f64;
    let f_hi = 0.45 * sample_rate_hz;
    p.scale_min = p.scale_for_frequency(f_hi, sample_rate_hz);
    p.scale_max = p.scale_for_frequency(f_lo, sample_rate_hz);
    p.validate()?;
    Ok(p)
}

/// Forward STFT with the DPSS window described by `p`.
pub fn stft(x: &SampledSignal, p: &StftParams) -> Result<TfrPlane> {
    p.validate()?;
    let w = dpss_window(&p.window)?;
    Ok(stft_with_window(x, &w, p.hop_samples, p.fft_length)?.0)
}

/// Exact `∂ₜS` of the STFT convention.
pub fn stft_time_derivative(x: &SampledSignal, p: &StftParams) -> Result<TfrPlane> {
    Ok(stft_with_derivative(x, p)?.1)
}

pub fn stft_with_derivative(x: &SampledSignal, p: &StftParams) -> Result<(TfrPlane, TfrPlane)> {
    p.validate()?;
    let w = dpss_window(&p.window)?;
    stft_with_window(x, &w, p.hop_samples, p.fft_length)
}

/// STFT and its time derivative for an arbitrary window.
pub fn stft_with_window(
    x: &SampledSignal,
    window: &DiscreteWindow,
    hop: usize,
    fft_length: usize,
) -> Result<(TfrPlane, TfrPlane)> {
    let len = window.len();
    check_stft_shape(len, hop, fft_length)?;
    if x.is_empty() {
        return Err(Error::Empty("signal has no samples".into()));
    }
    if len > x.len() {
        return Err(Error::invalid(format!(
            "window length {len} exceeds signal length {}",
            x.len()
        )));
    }
    let fs = x.sample_rate_hz();
    let n_frames = (x.len() - 1) / hop + 1;
    let center = window.center_index();
    let fft = FftPlanner::new().plan_fft_forward(fft_length);
    let dtaps: Vec<f64> = window.derivative_taps.iter().map(|d| d * fs).collect();

    // Output rows: 0..=N/2 for real input, fft-shifted −N/2..N/2−1 otherwise.
    let bins: Vec<i64> = if x.is_real() {
        (0..=fft_length as i64 / 2).collect()
    } else {
        (-(fft_length as i64) / 2..fft_length as i64 / 2).collect()
    };
    let freq_axis: Vec<f64> = bins.iter().map(|&k| k as f64 * fs / fft_length as f64).collect();

    let columns: Vec<(Vec<Complex64>, Vec<Complex64>)> = (0..n_frames)
        .into_par_iter()
        .map(|m| {
            let samples = x.samples();
            let mut plain = vec![Complex64::new(0.0, 0.0); fft_length];
            let mut deriv = vec![Complex64::new(0.0, 0.0); fft_length];
            let frame_center = (m * hop) as i64;
            for j in 0..len {
                let n = frame_center + j as i64 - center as i64;
                if n < 0 || n >= samples.len() as i64 {
                    continue;
                }
                let slot = (j as i64 - center as i64).rem_euclid(fft_length as i64) as usize;
                let s = samples[n as usize];
                plain[slot] = s * window.taps[j];
                deriv[slot] = s * dtaps[j];
            }
            fft.process(&mut plain);
            fft.process(&mut deriv);
            let pick = |buf: &[Complex64], k: i64| buf[k.rem_euclid(fft_length as i64) as usize];
            let s_col: Vec<Complex64> = bins.iter().map(|&k| pick(&plain, k)).collect();
            let d_col: Vec<Complex64> = bins
                .iter()
                .zip(&freq_axis)
                .map(|(&k, &f)| Complex64::new(0.0, 2.0 * PI * f) * pick(&plain, k) - pick(&deriv, k))
                .collect();
            (s_col, d_col)
        })
        .collect();

    let rows = bins.len();
    let mut values = Array2::zeros((rows, n_frames));
    let mut dvalues = Array2::zeros((rows, n_frames));
    for (m, (s_col, d_col)) in columns.into_iter().enumerate() {
        for r in 0..rows {
            values[[r, m]] = s_col[r];
            dvalues[[r, m]] = d_col[r];
        }
    }
    let time_axis: Vec<f64> = (0..n_frames).map(|m| x.time_at(m * hop)).collect();
    let boundary = (2 * len).div_ceil(hop).min(n_frames);
    let plane = TfrPlane {
        values,
        time_axis_s: time_axis,
        freq_axis_hz: freq_axis,
        scale_axis: None,
        kind: TfrKind::Stft,
        sample_rate_hz: fs,
        real_input: x.is_real(),
        boundary_frames: vec![boundary; rows],
        warnings: Vec::new(),
    };
    let mut dplane = plane.clone();
    dplane.values = dvalues;
    Ok((plane, dplane))
}

pub fn cwt(x: &SampledSignal, p: &CwtParams) -> Result<TfrPlane> {
    Ok(cwt_impl(x, p, false)?.0)
}

/// Exact spectral `∂ₜW`: the wavelet filter is multiplied by `i·ξ·fs`.
pub fn cwt_time_derivative(x: &SampledSignal, p: &CwtParams) -> Result<TfrPlane> {
    let (_, d) = cwt_impl(x, p, true)?;
    Ok(d.expect("derivative requested"))
}

pub fn cwt_with_derivative(x: &SampledSignal, p: &CwtParams) -> Result<(TfrPlane, TfrPlane)> {
    let (w, d) = cwt_impl(x, p, true)?;
    Ok((w, d.expect("derivative requested")))
}

fn cwt_impl(x: &SampledSignal, p: &CwtParams, with_derivative: bool) -> Result<(TfrPlane, Option<TfrPlane>)> {
    p.validate()?;
    if x.is_empty() {
        return Err(Error::Empty("signal has no samples".into()));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::invalid("CWT needs at least 2 samples"));
    }
    let fs = x.sample_rate_hz();
    let nyquist = 0.5 * fs;

    let mut warnings = Vec::new();
    let mut scales: Vec<f64> = p.scales();
    let before = scales.len();
    scales.retain(|&a| p.center_frequency(a, fs) <= nyquist);
    if scales.len() < before {
        warnings.push(format!(
            "dropped {} scales with centre frequency above Nyquist ({nyquist} Hz)",
            before - scales.len()
        ));
    }
    if scales.is_empty() {
        return Err(Error::invalid("scale grid has no scale below Nyquist"));
    }
    scales.reverse();

    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(n);
    let inverse: Arc<dyn Fft<f64>> = planner.plan_fft_inverse(n);
    let mut spectrum = x.samples().to_vec();
    forward.process(&mut spectrum);
    let xi: Vec<f64> = (0..n)
        .map(|k| {
            let k = if 2 * k <= n { k as f64 } else { k as f64 - n as f64 };
            2.0 * PI * k / n as f64
        })
        .collect();

    let rows: Vec<(Vec<Complex64>, Option<Vec<Complex64>>)> = scales
        .par_iter()
        .map(|&a| {
            let filter: Vec<f64> = xi.iter().map(|&w| gmw_freq_response(&p.wavelet, a * w)).collect();
            let mut buf: Vec<Complex64> = spectrum.iter().zip(&filter).map(|(s, f)| s * *f).collect();
            let dbuf = with_derivative.then(|| {
                let mut d: Vec<Complex64> = buf
                    .iter()
                    .zip(&xi)
                    .map(|(b, &w)| b * Complex64::new(0.0, w * fs))
                    .collect();
                inverse.process(&mut d);
                d.iter_mut().for_each(|v| *v /= n as f64);
                d
            });
            inverse.process(&mut buf);
            buf.iter_mut().for_each(|v| *v /= n as f64);
            (buf, dbuf)
        })
        .collect();

    let n_rows = scales.len();
    let mut values = Array2::zeros((n_rows, n));
    let mut dvalues = with_derivative.then(|| Array2::zeros((n_rows, n)));
    for (r, (row, drow)) in rows.into_iter().enumerate() {
        values.row_mut(r).assign(&ndarray::ArrayView1::from(&row));
        if let (Some(dv), Some(drow)) = (dvalues.as_mut(), drow) {
            dv.row_mut(r).assign(&ndarray::ArrayView1::from(&drow));
        }
    }
    let spread = p.wavelet.time_spread();
    let boundary: Vec<usize> = scales
        .iter()
        .map(|a| ((2.0 * a * spread).ceil() as usize).min(n))
        .collect();
    let plane = TfrPlane {
        values,
        time_axis_s: x.times(),
        freq_axis_hz: scales.iter().map(|&a| p.center_frequency(a, fs)).collect(),
        scale_axis: Some(scales),
        kind: TfrKind::Cwt,
        sample_rate_hz: fs,
        real_input: x.is_real(),
        boundary_frames: boundary,
        warnings,
    };
    let dplane = dvalues.map(|dv| {
        let mut d = plane.clone();
        d.values = dv;
        d
    });
    Ok((plane, dplane))
}

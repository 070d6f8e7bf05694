#![allow(dead_code)]

use num_complex::Complex64;
use ssqlab::{ComponentSpec, McsSpec, Ridge, SampledSignal};
use std::f64::consts::PI;

pub fn complex_tone(freq_hz: f64, fs: f64, n: usize) -> SampledSignal {
    let x = (0..n)
        .map(|i| Complex64::from_polar(1.0, 2.0 * PI * freq_hz * i as f64 / fs))
        .collect();
    SampledSignal::from_complex(x, fs).unwrap()
}

pub fn tone_spec(freq_hz: f64, fs: f64, duration_s: f64) -> McsSpec {
    McsSpec::new(vec![ComponentSpec::tone(freq_hz, 1.0)], duration_s, fs).unwrap()
}

/// Frames whose window lies fully inside the record, trimmed by `margin`.
pub fn interior(n: usize, margin: usize) -> std::ops::Range<usize> {
    margin..n - margin
}

pub fn argmax_row(col: impl Iterator<Item = f64>) -> usize {
    col.enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| if v > bv { (i, v) } else { (bi, bv) })
        .0
}

/// For each true component, the ridge whose mean frequency is closest to
/// the component's mean instantaneous frequency.
pub fn match_ridges<'a>(ridges: &'a [Ridge], spec: &McsSpec, times: &[f64]) -> Vec<&'a Ridge> {
    let tracks = spec.if_at(times);
    tracks
        .iter()
        .map(|t| {
            let mean = t.iter().sum::<f64>() / t.len() as f64;
            ridges
                .iter()
                .min_by(|a, b| {
                    let ma = a.freq_track_hz.iter().sum::<f64>() / a.freq_track_hz.len() as f64;
                    let mb = b.freq_track_hz.iter().sum::<f64>() / b.freq_track_hz.len() as f64;
                    (ma - mean).abs().total_cmp(&(mb - mean).abs())
                })
                .expect("at least one ridge")
        })
        .collect()
}

pub fn max_abs(v: impl Iterator<Item = Complex64>) -> f64 {
    v.map(|c| c.norm()).fold(0.0, f64::max)
}

pub fn ln_gamma_int(k: u32) -> f64 {
    (1..k).map(|i| (i as f64).ln()).sum()
}

/// `∫₀^∞ ψ̂(ω)/ω dω` in closed form when `β/γ` is an integer.
pub fn morse_constant_closed_form(gamma: f64, beta: f64) -> f64 {
    let r = beta / gamma;
    assert_eq!(r.fract(), 0.0);
    ((2.0 / gamma).ln() + r + r * (gamma / beta).ln() + ln_gamma_int(r as u32)).exp()
}

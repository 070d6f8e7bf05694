//! Generalized Morse wavelets, defined in the frequency domain.

use crate::error::{Error, Result};

/// Generalized Morse wavelet with symmetry `gamma` and decay `beta`.
///
/// Frequency response `ψ̂(ω) = 2·(ω/ω_p)^β·exp((β/γ)(1 − (ω/ω_p)^γ))` for
/// `ω > 0` and zero otherwise, with peak value 2 at `ω_p = (β/γ)^(1/γ)`.
/// With that normalisation a real unit cosine yields a CWT ridge of
/// magnitude 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MorseWavelet {
    pub gamma: f64,
    pub beta: f64,
}

impl MorseWavelet {
    pub fn new(gamma: f64, beta: f64) -> Result<Self> {
        let w = Self { gamma, beta };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid(format!("Morse gamma must be positive, got {}", self.gamma)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid(format!(
                "Morse beta must be positive (the reconstruction integral diverges otherwise), got {}",
                self.beta
            )));
        }
        Ok(())
    }

    /// Peak radian frequency `(β/γ)^(1/γ)`.
    pub fn peak_omega(&self) -> f64 {
        (self.beta / self.gamma).powf(1.0 / self.gamma)
    }

    pub fn freq_response(&self, omega: f64) -> f64 {
        gmw_freq_response(self, omega)
    }

    /// Rough time-domain spread in units of the scale: `sqrt(βγ)/ω_p`.
    pub fn time_spread(&self) -> f64 {
        (self.beta * self.gamma).sqrt() / self.peak_omega()
    }
}

impl Default for MorseWavelet {
    fn default() -> Self {
        Self {
            gamma: 3.0,
            beta: 60.0,
        }
    }
}

pub fn gmw_freq_response(w: &MorseWavelet, omega: f64) -> f64 {
    if omega <= 0.0 {
        return 0.0;
    }
    let u = omega / w.peak_omega();
    let log = w.beta * u.ln() + (w.beta / w.gamma) * (1.0 - u.powf(w.gamma));
    2.0 * log.exp()
}

/// `C_ψ = ∫₀^∞ ψ̂(ω)/ω dω`, the constant that turns a log-scale integral of
/// CWT coefficients back into the analytic signal.
pub fn cwt_reconstruction_constant(w: &MorseWavelet) -> Result<f64> {
    cwt_reconstruction_constant_tol(w, 1e-12)
}

pub fn cwt_reconstruction_constant_tol(w: &MorseWavelet, rel_tol: f64) -> Result<f64> {
    w.validate()?;
    log_measure_integral(|om| gmw_freq_response(w, om), w.peak_omega(), rel_tol)
}

/// `∫₀^∞ f(ω)/ω dω` for a band-pass response peaking near `peak_omega`.
///
/// The upper limit is pushed out until the response underflows.
pub fn log_measure_integral(f: impl Fn(f64) -> f64, peak_omega: f64, rel_tol: f64) -> Result<f64> {
    let g = |u: f64| if u <= 0.0 { 0.0 } else { f(peak_omega * u) / u };
    let mut upper = 2.0;
    while g(upper) > 0.0 && upper < 1e6 {
        upper *= 2.0;
    }
    let left = adaptive_gauss_kronrod(&g, 0.0, 1.0, rel_tol);
    let right = adaptive_gauss_kronrod(&g, 1.0, upper, rel_tol);
    let total = left + right;
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::invalid(format!("reconstruction integral is not finite and positive: {total}")));
    }
    Ok(total)
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const K15_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = K15_WEIGHTS[7] * fc;
    let mut gauss = G7_WEIGHTS[3] * fc;
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let s = f(c - x) + f(c + x);
        kronrod += K15_WEIGHTS[i] * s;
        if i % 2 == 1 {
            gauss += G7_WEIGHTS[i / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

fn adaptive_gauss_kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let mut intervals = vec![(a, b, gk15(f, a, b))];
    for _ in 0..2000 {
        let total: f64 = intervals.iter().map(|(_, _, (v, _))| v).sum();
        let err: f64 = intervals.iter().map(|(_, _, (_, e))| e).sum();
        if err <= rel_tol * total.abs() || err < f64::MIN_POSITIVE {
            break;
        }
        let (worst, _) = intervals
            .iter()
            .enumerate()
            .fold((0, -1.0), |(wi, we), (i, (_, _, (_, e)))| if *e > we { (i, *e) } else { (wi, we) });
        let (lo, hi, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        intervals.push((lo, mid, gk15(f, lo, mid)));
        intervals.push((mid, hi, gk15(f, mid, hi)));
    }
    intervals.iter().map(|(_, _, (v, _))| v).sum()
}

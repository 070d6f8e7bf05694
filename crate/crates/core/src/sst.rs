//! Phase transform and synchrosqueezing for both STFT and CWT planes.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::signal::SampledSignal;
use crate::tfr::{cwt_with_derivative, stft_with_derivative, CwtParams, StftParams, TfrKind, TfrPlane};

/// Magnitude threshold below which coefficients are not reassigned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    /// Fraction of the largest coefficient magnitude.
    Relative(f64),
    Absolute(f64),
}

impl Threshold {
    pub fn resolve(&self, plane: &TfrPlane) -> f64 {
        match *self {
            Threshold::Absolute(v) => v,
            Threshold::Relative(r) => r * plane.values.iter().fold(0.0f64, |m, c| m.max(c.norm())),
        }
    }

    fn validate(&self) -> Result<()> {
        let v = match *self {
            Threshold::Relative(v) | Threshold::Absolute(v) => v,
        };
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::invalid(format!("threshold must be finite and ≥ 0, got {v}")));
        }
        Ok(())
    }
}

impl Default for Threshold {
    fn default() -> Self {
        Threshold::Relative(1e-8)
    }
}

/// Reassignment kernel.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Kernel {
    /// Deposit on the single nearest output bin.
    #[default]
    Hard,
    /// Gaussian profile of width `epsilon_hz`, truncated at 4ε and
    /// renormalised to unit mass.
    Gaussian { epsilon_hz: f64 },
}

impl Kernel {
    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Hard => "hard",
            Kernel::Gaussian { .. } => "gaussian",
        }
    }

    pub fn epsilon_hz(&self) -> f64 {
        match *self {
            Kernel::Hard => 0.0,
            Kernel::Gaussian { epsilon_hz } => epsilon_hz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinSpacing {
    Linear,
    Logarithmic,
}

impl BinSpacing {
    pub fn name(&self) -> &'static str {
        match self {
            BinSpacing::Linear => "linear",
            BinSpacing::Logarithmic => "log",
        }
    }
}

/// Synchrosqueezing parameters. `None` fields take branch defaults: the STFT
/// branch uses `N/2 + 1` linear bins over `[0, fs/2]` (the source bins); the
/// CWT branch uses the scale centre frequencies on a log grid.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SstParams {
    pub threshold: Threshold,
    pub freq_range: Option<(f64, f64)>,
    pub kernel: Kernel,
    pub n_out_bins: Option<usize>,
    pub spacing: Option<BinSpacing>,
}

/// Instantaneous-frequency estimate for every coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMap {
    /// Hz; meaningful only where `valid` is set.
    pub omega_hat: Array2<f64>,
    pub valid: Array2<bool>,
    pub threshold_abs: f64,
}

impl PhaseMap {
    pub fn masked_in(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }
}

/// `ω̂ = Re[∂ₜT / (2πi·T)]` wherever `|T|` exceeds the threshold.
///
/// STFT estimates are wrapped into `[−fs/2, fs/2)` because the discrete
/// phase transform is periodic in fs. Entries outside `[0, fs/2]` or
/// non-finite are masked out.
pub fn phase_transform(plane: &TfrPlane, dplane: &TfrPlane, threshold: Threshold) -> Result<PhaseMap> {
    if plane.values.dim() != dplane.values.dim() {
        return Err(Error::ShapeMismatch(format!(
            "plane {:?} vs derivative {:?}",
            plane.values.dim(),
            dplane.values.dim()
        )));
    }
    if plane.kind != dplane.kind {
        return Err(Error::ShapeMismatch(format!(
            "plane kind {} vs derivative kind {}",
            plane.kind.tag(),
            dplane.kind.tag()
        )));
    }
    threshold.validate()?;
    let gamma = threshold.resolve(plane);
    let fs = plane.sample_rate_hz;
    let upper = 0.5 * fs * (1.0 + 1e-9);
    let wrap = plane.kind == TfrKind::Stft;

    let mut omega = Array2::zeros(plane.values.dim());
    let mut valid = Array2::from_elem(plane.values.dim(), false);
    ndarray::Zip::from(&mut omega)
        .and(&mut valid)
        .and(&plane.values)
        .and(&dplane.values)
        .par_for_each(|o, v, &c, &d| {
            if !(c.norm() > gamma) {
                return;
            }
            let mut w = (d / (Complex64::new(0.0, 2.0 * PI) * c)).re;
            if wrap {
                w -= fs * ((w + 0.5 * fs) / fs).floor();
            }
            if w.is_finite() && (0.0..=upper).contains(&w) {
                *o = w;
                *v = true;
            }
        });
    Ok(PhaseMap {
        omega_hat: omega,
        valid,
        threshold_abs: gamma,
    })
}

/// Output frequency grid of a synchrosqueezed plane.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputGrid {
    pub eta_hz: Vec<f64>,
    pub spacing: BinSpacing,
}

impl OutputGrid {
    pub fn new(lo: f64, hi: f64, n: usize, spacing: BinSpacing) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("output grid needs at least 2 bins"));
        }
        if !(lo < hi && lo >= 0.0 && hi.is_finite()) {
            return Err(Error::invalid(format!("frequency range [{lo}, {hi}] is not a valid band")));
        }
        let last = (n - 1) as f64;
        let eta_hz = match spacing {
            BinSpacing::Linear => (0..n).map(|i| lo + (hi - lo) * i as f64 / last).collect(),
            BinSpacing::Logarithmic => {
                if lo <= 0.0 {
                    return Err(Error::invalid("logarithmic output grid needs a positive lower bound"));
                }
                let ratio = (hi / lo).ln();
                (0..n).map(|i| lo * (ratio * i as f64 / last).exp()).collect()
            }
        };
        Ok(Self { eta_hz, spacing })
    }

    pub fn len(&self) -> usize {
        self.eta_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta_hz.is_empty()
    }

    fn lo(&self) -> f64 {
        self.eta_hz[0]
    }

    fn hi(&self) -> f64 {
        self.eta_hz[self.len() - 1]
    }

    /// Position of `f` in bin units (0 at the first bin).
    fn position(&self, f: f64) -> f64 {
        let last = (self.len() - 1) as f64;
        match self.spacing {
            BinSpacing::Linear => (f - self.lo()) / (self.hi() - self.lo()) * last,
            BinSpacing::Logarithmic => (f / self.lo()).ln() / (self.hi() / self.lo()).ln() * last,
        }
    }

    pub fn contains(&self, f: f64) -> bool {
        f >= self.lo() && f <= self.hi()
    }

    pub fn nearest(&self, f: f64) -> Option<usize> {
        self.contains(f)
            .then(|| (self.position(f).round() as usize).min(self.len() - 1))
    }

    /// Normalised Gaussian weights over bins within 4ε of `f`; falls back to
    /// the nearest bin when no bin centre is that close.
    fn gaussian_weights(&self, f: f64, eps: f64, out: &mut Vec<(usize, f64)>) {
        out.clear();
        let lo_pos = self.position((f - 4.0 * eps).max(self.lo()));
        let hi_pos = self.position((f + 4.0 * eps).min(self.hi()));
        let first = lo_pos.ceil().max(0.0) as usize;
        let last = (hi_pos.floor() as usize).min(self.len() - 1);
        let mut total = 0.0;
        for i in first..=last.max(first) {
            if i > last {
                break;
            }
            let d = (self.eta_hz[i] - f) / eps;
            if d.abs() > 4.0 {
                continue;
            }
            let w = (-0.5 * d * d).exp();
            total += w;
            out.push((i, w));
        }
        if out.is_empty() || total == 0.0 {
            out.clear();
            if let Some(i) = self.nearest(f) {
                out.push((i, 1.0));
            }
            return;
        }
        out.iter_mut().for_each(|(_, w)| *w /= total);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SstKind {
    Stft,
    Cwt,
}

impl SstKind {
    pub fn tag(&self) -> &'static str {
        match self {
            SstKind::Stft => "sst-stft",
            SstKind::Cwt => "sst-cwt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SqueezeStats {
    pub coefficients: usize,
    pub masked_in: usize,
    pub deposited: usize,
    pub dropped_out_of_range: usize,
    /// Σ |coefficient·measure| over deposited coefficients.
    pub deposited_magnitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SstProvenance {
    pub params: SstParams,
    pub source: TfrKind,
    pub sample_rate_hz: f64,
    pub real_input: bool,
    /// Integration measure applied to each source coefficient (Hz for STFT
    /// rows, natural-log scale step for CWT rows).
    pub measure: f64,
    pub threshold_abs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SstPlane {
    pub values: Array2<Complex64>,
    pub eta_axis_hz: Vec<f64>,
    pub time_axis_s: Vec<f64>,
    pub spacing: BinSpacing,
    pub kind: SstKind,
    pub provenance: SstProvenance,
    pub stats: SqueezeStats,
}

impl SstPlane {
    pub fn n_bins(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_frames(&self) -> usize {
        self.values.ncols()
    }
}

/// Integration measure attached to each row of a source plane.
pub fn row_measure(plane: &TfrPlane) -> f64 {
    match plane.kind {
        TfrKind::Stft => plane.bin_spacing_hz(),
        TfrKind::Cwt => {
            let s = plane.scale_axis.as_ref().expect("CWT plane carries scales");
            if s.len() < 2 {
                std::f64::consts::LN_2
            } else {
                (s[0] / s[1]).ln().abs()
            }
        }
    }
}

/// Resolves the output grid for `plane` under `p`.
pub fn output_grid(plane: &TfrPlane, p: &SstParams) -> Result<OutputGrid> {
    let fs = plane.sample_rate_hz;
    match plane.kind {
        TfrKind::Stft => {
            let (lo, hi) = p.freq_range.unwrap_or((0.0, 0.5 * fs));
            let n = p
                .n_out_bins
                .unwrap_or_else(|| ((hi - lo) / plane.bin_spacing_hz()).round() as usize + 1);
            check_range(lo, hi, fs)?;
            OutputGrid::new(lo, hi, n, p.spacing.unwrap_or(BinSpacing::Linear))
        }
        TfrKind::Cwt => {
            let axis = &plane.freq_axis_hz;
            let (lo, hi) = p.freq_range.unwrap_or((axis[0], axis[axis.len() - 1]));
            check_range(lo, hi, fs)?;
            let n = p.n_out_bins.unwrap_or(axis.len().max(2));
            OutputGrid::new(lo, hi, n, p.spacing.unwrap_or(BinSpacing::Logarithmic))
        }
    }
}

fn check_range(lo: f64, hi: f64, fs: f64) -> Result<()> {
    if !(lo < hi && hi <= 0.5 * fs * (1.0 + 1e-12)) {
        return Err(Error::invalid(format!(
            "frequency range [{lo}, {hi}] must satisfy f_lo < f_hi ≤ fs/2 = {}",
            0.5 * fs
        )));
    }
    Ok(())
}

/// Reassigns every masked-in coefficient (times its row measure) to the
/// output bin(s) at its estimated instantaneous frequency.
///
/// Columns are independent and each one is accumulated by a single worker in
/// source-row order, so the output does not depend on the thread count.
pub fn synchrosqueeze(plane: &TfrPlane, pm: &PhaseMap, p: &SstParams) -> Result<SstPlane> {
    if pm.omega_hat.dim() != plane.values.dim() {
        return Err(Error::ShapeMismatch("phase map does not match the plane".into()));
    }
    if let Kernel::Gaussian { epsilon_hz } = p.kernel {
        if !(epsilon_hz > 0.0 && epsilon_hz.is_finite()) {
            return Err(Error::invalid("Gaussian kernel needs ε > 0 (use the hard kernel for ε = 0)"));
        }
    }
    p.threshold.validate()?;
    let grid = output_grid(plane, p)?;
    let measure = row_measure(plane);
    let (rows, frames) = plane.values.dim();
    let n_out = grid.len();

    struct Column {
        values: Vec<Complex64>,
        masked_in: usize,
        deposited: usize,
        dropped: usize,
        magnitude: f64,
    }

    let columns: Vec<Column> = (0..frames)
        .into_par_iter()
        .map(|m| {
            let mut col = Column {
                values: vec![Complex64::new(0.0, 0.0); n_out],
                masked_in: 0,
                deposited: 0,
                dropped: 0,
                magnitude: 0.0,
            };
            let mut weights = Vec::new();
            for r in 0..rows {
                if !pm.valid[[r, m]] {
                    continue;
                }
                col.masked_in += 1;
                let w = pm.omega_hat[[r, m]];
                if !grid.contains(w) {
                    col.dropped += 1;
                    continue;
                }
                let c = plane.values[[r, m]] * measure;
                match p.kernel {
                    Kernel::Hard => {
                        let i = grid.nearest(w).expect("inside grid");
                        col.values[i] += c;
                    }
                    Kernel::Gaussian { epsilon_hz } => {
                        grid.gaussian_weights(w, epsilon_hz, &mut weights);
                        for &(i, g) in &weights {
                            col.values[i] += c * g;
                        }
                    }
                }
                col.deposited += 1;
                col.magnitude += c.norm();
            }
            col
        })
        .collect();

    let mut values = Array2::zeros((n_out, frames));
    let mut stats = SqueezeStats {
        coefficients: rows * frames,
        ..Default::default()
    };
    for (m, col) in columns.into_iter().enumerate() {
        values.column_mut(m).assign(&ndarray::ArrayView1::from(&col.values));
        stats.masked_in += col.masked_in;
        stats.deposited += col.deposited;
        stats.dropped_out_of_range += col.dropped;
        stats.deposited_magnitude += col.magnitude;
    }
    Ok(SstPlane {
        values,
        eta_axis_hz: grid.eta_hz,
        time_axis_s: plane.time_axis_s.clone(),
        spacing: grid.spacing,
        kind: match plane.kind {
            TfrKind::Stft => SstKind::Stft,
            TfrKind::Cwt => SstKind::Cwt,
        },
        provenance: SstProvenance {
            params: *p,
            source: plane.kind,
            sample_rate_hz: plane.sample_rate_hz,
            real_input: plane.real_input,
            measure,
            threshold_abs: pm.threshold_abs,
        },
        stats,
    })
}

/// STFT → derivative → phase transform → synchrosqueeze. Returns the source
/// plane alongside the squeezed one.
pub fn sst_stft_with_source(x: &SampledSignal, sp: &StftParams, p: &SstParams) -> Result<(TfrPlane, SstPlane)> {
    let (plane, dplane) = stft_with_derivative(x, sp)?;
    let pm = phase_transform(&plane, &dplane, p.threshold)?;
    let s = synchrosqueeze(&plane, &pm, p)?;
    Ok((plane, s))
}

pub fn sst_stft(x: &SampledSignal, sp: &StftParams, p: &SstParams) -> Result<SstPlane> {
    Ok(sst_stft_with_source(x, sp, p)?.1)
}

pub fn sst_cwt_with_source(x: &SampledSignal, cp: &CwtParams, p: &SstParams) -> Result<(TfrPlane, SstPlane)> {
    let (plane, dplane) = cwt_with_derivative(x, cp)?;
    let pm = phase_transform(&plane, &dplane, p.threshold)?;
    let s = synchrosqueeze(&plane, &pm, p)?;
    Ok((plane, s))
}

pub fn sst_cwt(x: &SampledSignal, cp: &CwtParams, p: &SstParams) -> Result<SstPlane> {
    Ok(sst_cwt_with_source(x, cp, p)?.1)
}

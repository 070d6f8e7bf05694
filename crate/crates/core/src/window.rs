//! Slepian (DPSS) analysis windows and their time derivatives.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    Slepian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSpec {
    pub length_samples: usize,
    /// Time-half-bandwidth product NW.
    pub time_half_bandwidth: f64,
    pub kind: WindowKind,
}

impl WindowSpec {
    pub fn slepian(length_samples: usize, time_half_bandwidth: f64) -> Self {
        Self {
            length_samples,
            time_half_bandwidth,
            kind: WindowKind::Slepian,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.length_samples;
        if l < 2 {
            return Err(Error::invalid(format!("window length must be at least 2, got {l}")));
        }
        let nw = self.time_half_bandwidth;
        if !(nw > 0.0 && nw < l as f64 / 2.0) {
            return Err(Error::invalid(format!(
                "time-half-bandwidth must lie in (0, {}), got {nw}",
                l as f64 / 2.0
            )));
        }
        Ok(())
    }
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self::slepian(32, 4.0)
    }
}

/// Sampled window with its derivative.
///
/// `derivative_taps` are in units of 1/sample; [`window_derivative`] rescales
/// to 1/s. `l2_norm_sq` keeps the energy of the window before it was scaled
/// to unit L2 norm (for DPSS: the peak-normalised taper).
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteWindow {
    pub taps: Vec<f64>,
    pub derivative_taps: Vec<f64>,
    pub l2_norm_sq: f64,
}

impl DiscreteWindow {
    /// Wraps arbitrary taps without rescaling them.
    pub fn from_taps(taps: Vec<f64>) -> Result<Self> {
        if taps.len() < 2 {
            return Err(Error::invalid("window derivative needs at least 2 taps"));
        }
        let derivative_taps = spectral_derivative(&taps);
        let l2_norm_sq = taps.iter().map(|t| t * t).sum();
        Ok(Self {
            taps,
            derivative_taps,
            l2_norm_sq,
        })
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Index of the tap that sits on the frame centre.
    pub fn center_index(&self) -> usize {
        self.taps.len() / 2
    }

    pub fn center_tap(&self) -> f64 {
        self.taps[self.center_index()]
    }
}

/// Order-0 discrete prolate spheroidal sequence, unit L2 norm, positive centre.
///
/// Solved as the top eigenvector of the commuting symmetric tridiagonal
/// matrix (Sturm bisection for the eigenvalue, then inverse iteration), which
/// stays well conditioned where the sinc-kernel eigenvalues cluster near 1.
pub fn dpss_window(spec: &WindowSpec) -> Result<DiscreteWindow> {
    spec.validate()?;
    let l = spec.length_samples;
    let w = spec.time_half_bandwidth / l as f64;
    let cos_w = (2.0 * PI * w).cos();
    let diag: Vec<f64> = (0..l)
        .map(|i| {
            let x = (l as f64 - 1.0 - 2.0 * i as f64) / 2.0;
            x * x * cos_w
        })
        .collect();
    // off[i] couples rows i and i + 1.
    let off: Vec<f64> = (1..l).map(|i| (i * (l - i)) as f64 / 2.0).collect();

    let lambda = largest_eigenvalue(&diag, &off);
    let mut v = inverse_iteration(&diag, &off, lambda);

    for k in 0..l / 2 {
        let m = 0.5 * (v[k] + v[l - 1 - k]);
        v[k] = m;
        v[l - 1 - k] = m;
    }
    if v.iter().sum::<f64>() < 0.0 {
        v.iter_mut().for_each(|t| *t = -*t);
    }
    let peak = v.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let l2_norm_sq = v.iter().map(|t| (t / peak).powi(2)).sum::<f64>();
    let norm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
    v.iter_mut().for_each(|t| *t /= norm);

    let derivative_taps = prolate_derivative(&v, w);
    Ok(DiscreteWindow {
        taps: v,
        derivative_taps,
        l2_norm_sq,
    })
}

/// Fraction of the window's energy inside `|f| < NW/L` cycles/sample.
pub fn dpss_concentration(taps: &[f64], time_half_bandwidth: f64) -> f64 {
    let l = taps.len();
    let w = time_half_bandwidth / l as f64;
    let mut num = 0.0;
    for i in 0..l {
        for j in 0..l {
            let k = if i == j {
                2.0 * w
            } else {
                let d = i as f64 - j as f64;
                (2.0 * PI * w * d).sin() / (PI * d)
            };
            num += taps[i] * k * taps[j];
        }
    }
    num / taps.iter().map(|t| t * t).sum::<f64>()
}

/// d/dt of the window in 1/s.
pub fn window_derivative(w: &DiscreteWindow, sample_rate_hz: f64) -> Vec<f64> {
    w.derivative_taps.iter().map(|d| d * sample_rate_hz).collect()
}

/// Derivative (1/sample) of the band-limited interpolant implied by the
/// eigen-equation `λ·v[n] = Σ_j sin(2πW(n−j))/(π(n−j))·v[j]`, evaluated at
/// the taps. Exact for an order-0 DPSS and antisymmetric for symmetric taps.
fn prolate_derivative(taps: &[f64], w: f64) -> Vec<f64> {
    let lambda = dpss_concentration(taps, w * taps.len() as f64);
    (0..taps.len())
        .map(|n| {
            let acc: f64 = taps
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != n)
                .map(|(j, &v)| {
                    let x = n as f64 - j as f64;
                    let arg = 2.0 * PI * w * x;
                    v * (2.0 * w * arg.cos() / x - arg.sin() / (PI * x * x))
                })
                .sum();
            acc / lambda
        })
        .collect()
}

/// Spectral derivative (1/sample) on a buffer padded to at least 4× the
/// window length. The pad holds a straight line between the last and first
/// tap so the periodic extension has no jump; for symmetric windows this is
/// a constant and the result is exactly antisymmetric.
pub(crate) fn spectral_derivative(taps: &[f64]) -> Vec<f64> {
    let l = taps.len();
    let p = (4 * l).next_power_of_two();
    let first = taps[0];
    let last = taps[l - 1];
    let gap = (p - l + 1) as f64;
    let mut buf: Vec<Complex64> = taps.iter().map(|&t| Complex64::new(t, 0.0)).collect();
    buf.extend((0..p - l).map(|i| Complex64::new(last + (first - last) * (i + 1) as f64 / gap, 0.0)));

    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(p).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let freq = if 2 * k < p {
            k as f64
        } else if 2 * k == p {
            0.0
        } else {
            k as f64 - p as f64
        };
        *c *= Complex64::new(0.0, 2.0 * PI * freq / p as f64);
    }
    planner.plan_fft_inverse(p).process(&mut buf);
    buf.iter().take(l).map(|c| c.re / p as f64).collect()
}

/// Number of eigenvalues of the tridiagonal matrix strictly below `x`.
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let tiny = f64::MIN_POSITIVE.sqrt();
    let mut count = 0;
    let mut q = diag[0] - x;
    for i in 0..diag.len() {
        if i > 0 {
            q = diag[i] - x - off[i - 1] * off[i - 1] / q;
        }
        if q == 0.0 {
            q = -tiny;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn largest_eigenvalue(diag: &[f64], off: &[f64]) -> f64 {
    let n = diag.len();
    let radius = |i: usize| {
        let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < n { off[i].abs() } else { 0.0 };
        left + right
    };
    let mut lo = (0..n).map(|i| diag[i] - radius(i)).fold(f64::INFINITY, f64::min);
    let mut hi = (0..n).map(|i| diag[i] + radius(i)).fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) < n {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn inverse_iteration(diag: &[f64], off: &[f64], lambda: f64) -> Vec<f64> {
    let n = diag.len();
    let scale = diag.iter().chain(off).fold(1.0f64, |m, v| m.max(v.abs()));
    let shifted: Vec<f64> = diag.iter().map(|d| d - lambda).collect();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    for _ in 0..4 {
        let mut y = solve_tridiagonal(off, &shifted, off, &v, scale * f64::EPSILON);
        let norm = y.iter().map(|t| t * t).sum::<f64>().sqrt();
        y.iter_mut().for_each(|t| *t /= norm);
        v = y;
    }
    v
}

/// Gaussian elimination with partial pivoting on a tridiagonal system.
fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64], tiny: f64) -> Vec<f64> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut dl = sub.to_vec();
    let mut du = sup.to_vec();
    let mut b = rhs.to_vec();
    if n == 1 {
        return vec![b[0] / if d[0] == 0.0 { tiny } else { d[0] }];
    }
    // dl is reused for the second superdiagonal created by row swaps.
    for i in 0..n - 1 {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                d[i] = tiny;
            }
            let fact = dl[i] / d[i];
            d[i + 1] -= fact * du[i];
            b[i + 1] -= fact * b[i];
            dl[i] = 0.0;
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            if i + 1 < n - 1 {
                dl[i] = du[i + 1];
                du[i + 1] = -fact * dl[i];
            } else {
                dl[i] = 0.0;
            }
            du[i] = temp;
            let tb = b[i];
            b[i] = b[i + 1];
            b[i + 1] = tb - fact * b[i + 1];
        }
    }
    if d[n - 1] == 0.0 {
        d[n - 1] = tiny;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = b[n - 1] / d[n - 1];
    x[n - 2] = (b[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (b[i] - du[i] * x[i + 1] - dl[i] * x[i + 2]) / d[i];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_solver_matches_dense_product() {
        let sub = [1.0, -2.0, 0.5, 3.0];
        let diag = [0.1, 4.0, -1.0, 2.0, 0.7];
        let sup = [2.0, 1.5, -0.5, 1.0];
        let x_true = [1.0, -2.0, 3.0, 0.5, -1.5];
        let mut rhs = [0.0; 5];
        for i in 0..5 {
            rhs[i] = diag[i] * x_true[i];
            if i > 0 {
                rhs[i] += sub[i - 1] * x_true[i - 1];
            }
            if i < 4 {
                rhs[i] += sup[i] * x_true[i + 1];
            }
        }
        let x = solve_tridiagonal(&sub, &diag, &sup, &rhs, 1e-300);
        for (a, b) in x.iter().zip(x_true) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn dpss_symmetric_unit_norm_positive_centre() {
        for &(l, nw) in &[(32usize, 4.0), (33, 2.5), (64, 3.0), (16, 1.5), (256, 4.0)] {
            let w = dpss_window(&WindowSpec::slepian(l, nw)).unwrap();
            for k in 0..l {
                assert!((w.taps[k] - w.taps[l - 1 - k]).abs() <= 1e-12);
            }
            let e: f64 = w.taps.iter().map(|t| t * t).sum();
            assert!((e - 1.0).abs() <= 1e-12);
            assert!(w.center_tap() > 0.0);
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(dpss_window(&WindowSpec::slepian(1, 0.2)).is_err());
        assert!(dpss_window(&WindowSpec::slepian(32, 16.0)).is_err());
        assert!(dpss_window(&WindowSpec::slepian(32, 0.0)).is_err());
        assert!(DiscreteWindow::from_taps(vec![1.0]).is_err());
    }

    #[test]
    fn constant_window_has_zero_derivative() {
        let fs = 205.0;
        let w = DiscreteWindow::from_taps(vec![1.0; 32]).unwrap();
        let d = window_derivative(&w, fs);
        let worst = d[2..30].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst <= 1e-6 * fs, "{worst}");
    }

    #[test]
    fn dpss_derivative_is_antisymmetric_and_sums_to_zero() {
        let fs = 205.0;
        let w = dpss_window(&WindowSpec::slepian(32, 4.0)).unwrap();
        let d = window_derivative(&w, fs);
        for k in 0..32 {
            assert!((d[k] + d[31 - k]).abs() <= 1e-8);
        }
        let peak = w.taps.iter().fold(0.0f64, |m, t| m.max(t.abs()));
        assert!(d.iter().sum::<f64>().abs() <= 1e-6 * fs * peak);
    }
}

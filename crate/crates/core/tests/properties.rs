//! Randomised invariants.

mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use ssqlab::metrics::{relative_l2_error, renyi_entropy_of};
use ssqlab::ridge::extract_ridges_from_magnitude;
use ssqlab::sst::phase_transform;
use ssqlab::window::dpss_concentration;
use ssqlab::{
    add_awgn, cwt, default_scale_grid, dpss_window, ridge_energy_fraction, stft, stft_with_derivative, synthesize_component,
    synthesize_mcs, ComponentSpec, McsSpec, MorseWavelet, RidgeParams, SampledSignal, StftParams, Threshold, TfrPlane,
    WindowSpec,
};

/// Unit-power circular white noise: a constant at 0 dB SNR, minus the constant.
fn complex_noise(n: usize, fs: f64, seed: u64) -> SampledSignal {
    let one = SampledSignal::from_complex(vec![Complex64::new(1.0, 0.0); n], fs).unwrap();
    let s = add_awgn(&one, 0.0, seed).samples().iter().map(|a| a - 1.0).collect();
    SampledSignal::from_complex(s, fs).unwrap()
}

fn combine(a: &SampledSignal, b: &SampledSignal, ca: Complex64, cb: Complex64) -> SampledSignal {
    let s = a.samples().iter().zip(b.samples()).map(|(x, y)| ca * x + cb * y).collect();
    SampledSignal::from_complex(s, a.sample_rate_hz()).unwrap()
}

fn plane_gap(p: &TfrPlane, q: &TfrPlane) -> f64 {
    p.values.iter().zip(q.values.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
}

fn component() -> impl Strategy<Value = ComponentSpec> {
    (0.2f64..2.0, 5.0f64..80.0, -2.0f64..2.0, -0.1f64..0.1, 0.0f64..6.0)
        .prop_map(|(a, f, r, c, p0)| ComponentSpec::new(vec![a], vec![p0 / (2.0 * std::f64::consts::PI), f, r, c]))
}

fn spec() -> impl Strategy<Value = McsSpec> {
    (prop::collection::vec(component(), 1..4), 1.0f64..4.0).prop_map(|(c, d)| McsSpec::new(c, d, 205.0).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn synthesis_is_the_sum_of_its_components(spec in spec()) {
        let x = synthesize_mcs(&spec).unwrap();
        let parts: Vec<SampledSignal> = (0..spec.components.len()).map(|k| synthesize_component(&spec, k).unwrap()).collect();
        for (n, v) in x.samples().iter().enumerate() {
            let sum: Complex64 = parts.iter().map(|p| p.samples()[n]).sum();
            prop_assert!((v - sum).norm() <= 1e-12 * (1.0 + sum.norm()));
        }
        for (k, p) in parts.iter().enumerate() {
            let a = spec.components[k].amplitude.eval(0.0);
            for v in p.samples() {
                prop_assert!((v.norm() - a).abs() <= 1e-12 * a);
            }
        }
    }

    #[test]
    fn instantaneous_frequency_matches_phase_slope(c in component(), t in 0.1f64..3.0) {
        let h = 1e-5;
        let phase = |t: f64| c.phase.eval(t);
        let fd = (phase(t + h) - phase(t - h)) / (2.0 * h);
        prop_assert!((c.instantaneous_frequency(t) - fd).abs() <= 1e-5 * (1.0 + fd.abs()));
    }

    #[test]
    fn awgn_is_reproducible_and_hits_the_snr(seed in any::<u64>(), snr in -5.0f64..30.0) {
        let x = synthesize_mcs(&McsSpec::new(vec![ComponentSpec::tone(20.0, 1.0)], 20.0, 205.0).unwrap()).unwrap();
        let a = add_awgn(&x, snr, seed);
        prop_assert_eq!(&a, &add_awgn(&x, snr, seed));
        let noise: f64 = a.samples().iter().zip(x.samples()).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>() / x.len() as f64;
        let measured = 10.0 * (x.power() / noise).log10();
        prop_assert!((measured - snr).abs() < 0.3, "{measured} vs {snr}");
        prop_assert_eq!(&add_awgn(&x, f64::INFINITY, seed), &x);
    }

    #[test]
    fn dpss_shape_invariants(l in 16usize..96, nw in 2.0f64..6.0) {
        prop_assume!(nw < l as f64 / 4.0);
        let w = dpss_window(&WindowSpec::slepian(l, nw)).unwrap();
        let norm: f64 = w.taps.iter().map(|t| t * t).sum();
        prop_assert!((norm - 1.0).abs() <= 1e-12);
        for i in 0..l {
            prop_assert!((w.taps[i] - w.taps[l - 1 - i]).abs() <= 1e-12);
            prop_assert!((w.derivative_taps[i] + w.derivative_taps[l - 1 - i]).abs() <= 1e-9);
        }
        prop_assert!(w.derivative_taps.iter().sum::<f64>().abs() <= 1e-9);
        if nw >= 3.0 {
            prop_assert!(dpss_concentration(&w.taps, nw) >= 0.999);
        }
    }

    #[test]
    fn stft_is_linear_and_finite(s1 in any::<u64>(), s2 in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0, hop in 1usize..8) {
        let (x, y) = (complex_noise(300, 205.0, s1), complex_noise(300, 205.0, s2));
        let (ca, cb) = (Complex64::new(a, 0.5), Complex64::new(b, -1.0));
        let p = StftParams::new(WindowSpec::slepian(32, 4.0), hop);
        let (sx, sy, sz) = (stft(&x, &p).unwrap(), stft(&y, &p).unwrap(), stft(&combine(&x, &y, ca, cb), &p).unwrap());
        prop_assert!(sz.values.iter().all(|c| c.re.is_finite() && c.im.is_finite()));
        let mut lin = sx.clone();
        lin.values.zip_mut_with(&sy.values, |u, v| *u = ca * *u + cb * v);
        let scale = sz.values.iter().map(|c| c.norm()).fold(0.0, f64::max);
        prop_assert!(plane_gap(&lin, &sz) <= 1e-12 * scale);
    }

    #[test]
    fn cwt_is_linear_and_finite(s1 in any::<u64>(), s2 in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let (x, y) = (complex_noise(256, 205.0, s1), complex_noise(256, 205.0, s2));
        let (ca, cb) = (Complex64::new(a, 0.25), Complex64::new(b, 0.0));
        let p = default_scale_grid(205.0, 256, MorseWavelet::default(), 16).unwrap();
        let (tx, ty, tz) = (cwt(&x, &p).unwrap(), cwt(&y, &p).unwrap(), cwt(&combine(&x, &y, ca, cb), &p).unwrap());
        prop_assert!(tz.values.iter().all(|c| c.re.is_finite() && c.im.is_finite()));
        let mut lin = tx.clone();
        lin.values.zip_mut_with(&ty.values, |u, v| *u = ca * *u + cb * v);
        let scale = tz.values.iter().map(|c| c.norm()).fold(0.0, f64::max);
        prop_assert!(plane_gap(&lin, &tz) <= 1e-12 * scale);
    }

    #[test]
    fn stft_energy_matches_signal_energy(seed in any::<u64>(), n in 800usize..2000) {
        let x = complex_noise(n, 205.0, seed);
        let s = stft(&x, &StftParams::new(WindowSpec::slepian(32, 4.0), 1)).unwrap();
        let df = s.bin_spacing_hz();
        let plane: f64 = s.values.iter().map(|c| c.norm_sqr()).sum::<f64>() * df / 205.0;
        let signal: f64 = x.samples().iter().map(|c| c.norm_sqr()).sum();
        prop_assert!((plane / signal - 1.0).abs() <= 0.02, "{plane} vs {signal}");
    }

    #[test]
    fn stft_commutes_with_time_shift(seed in any::<u64>(), shift in 1usize..40) {
        let x = complex_noise(400 + shift, 205.0, seed);
        let y = SampledSignal::from_complex(x.samples()[shift..].to_vec(), 205.0).unwrap();
        let p = StftParams::new(WindowSpec::slepian(32, 4.0), 1);
        let (sx, sy) = (stft(&x, &p).unwrap(), stft(&y, &p).unwrap());
        for m in 16..sy.n_frames() - 16 {
            for k in 0..sy.n_rows() {
                prop_assert!((sy.values[[k, m]] - sx.values[[k, m + shift]]).norm() <= 1e-9);
            }
        }
    }

    #[test]
    fn raising_the_threshold_only_removes_coefficients(seed in any::<u64>(), g1 in 1e-10f64..1e-1, g2 in 1e-10f64..1e-1) {
        let (lo, hi) = if g1 < g2 { (g1, g2) } else { (g2, g1) };
        let x = complex_noise(300, 205.0, seed);
        let (s, d) = stft_with_derivative(&x, &StftParams::new(WindowSpec::slepian(32, 4.0), 2)).unwrap();
        let a = phase_transform(&s, &d, Threshold::Relative(lo)).unwrap();
        let b = phase_transform(&s, &d, Threshold::Relative(hi)).unwrap();
        for (va, vb) in a.valid.iter().zip(b.valid.iter()) {
            prop_assert!(!*vb || *va);
        }
    }

    #[test]
    fn ridges_and_entropy_ignore_overall_scale(seed in any::<u64>(), c in 1e-3f64..1e3) {
        let x = add_awgn(&synthesize_mcs(&McsSpec::paper_3comp()).unwrap(), 10.0, seed);
        let s = stft(&x, &StftParams::new(WindowSpec::slepian(32, 4.0), 4)).unwrap();
        let mag = s.values.mapv(|v| v.norm());
        let a = extract_ridges_from_magnitude(mag.view(), &s.freq_axis_hz, 3, &RidgeParams::default()).unwrap();
        let scaled = mag.mapv(|v| v * c);
        let b = extract_ridges_from_magnitude(scaled.view(), &s.freq_axis_hz, 3, &RidgeParams::default()).unwrap();
        for (ra, rb) in a.ridges.iter().zip(&b.ridges) {
            prop_assert_eq!(&ra.bin_track, &rb.bin_track);
        }
        let h1 = renyi_entropy_of(s.values.view(), 3.0).unwrap();
        let h2 = renyi_entropy_of(s.values.mapv(|v| v * c).view(), 3.0).unwrap();
        prop_assert!((h1 - h2).abs() <= 1e-9 * h1);
    }

    #[test]
    fn ridge_fraction_grows_with_the_band(seed in any::<u64>()) {
        let spec = McsSpec::paper_3comp();
        let x = add_awgn(&synthesize_mcs(&spec).unwrap(), 5.0, seed);
        let s = stft(&x, &StftParams::new(WindowSpec::slepian(32, 4.0), 8)).unwrap();
        let tracks = spec.if_at(&s.time_axis_s);
        let mut last = 0.0;
        for h in 0..8 {
            let f = ridge_energy_fraction(&s, &tracks, h).unwrap();
            prop_assert!(f >= last && f <= 1.0);
            last = f;
        }
        prop_assert!((ridge_energy_fraction(&s, &tracks, s.n_rows()).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn relative_error_identities(seed in any::<u64>(), c in 0.5f64..2.0) {
        let t = complex_noise(200, 205.0, seed);
        let t = t.samples();
        prop_assert_eq!(relative_l2_error(t, t, 0.8).unwrap(), 0.0);
        let zeros = vec![Complex64::new(0.0, 0.0); t.len()];
        prop_assert!((relative_l2_error(&zeros, t, 0.8).unwrap() - 1.0).abs() <= 1e-12);
        let scaled: Vec<Complex64> = t.iter().map(|v| v * c).collect();
        prop_assert!((relative_l2_error(&scaled, t, 0.8).unwrap() - (c - 1.0).abs()).abs() <= 1e-12);
    }
}

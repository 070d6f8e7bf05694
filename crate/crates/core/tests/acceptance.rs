//! End-to-end acceptance criteria. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use common::*;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ssqlab::io::{preprocess_batch, BatchConfig, BatchInput, MultichannelRecord, SegmentPlan, Transform};
use ssqlab::metrics::{interior_range, nearest_bin, renyi_entropy};
use ssqlab::sst::{output_grid, row_measure};
use ssqlab::tfr::stft_with_window;
use ssqlab::window::dpss_concentration;
use ssqlab::{
    add_awgn, cwt_reconstruction_constant, cwt_with_derivative, default_scale_grid, dpss_window, extract_ridges,
    mode_relative_l2_error, phase_transform, reconstruct_mode_cwt, reconstruct_mode_stft, sst_cwt_with_source,
    sst_stft_with_source, stft_with_derivative, synchrosqueeze, synthesize_component, synthesize_mcs, ComponentSpec,
    CwtParams, DiscreteWindow, McsSpec, MorseWavelet, RidgeParams, SampledSignal, SstParams, StftParams, TfrPlane,
    WindowSpec,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn stft_params() -> StftParams {
    StftParams::new(WindowSpec::slepian(32, 4.0), 1)
}

fn cwt_params(x: &SampledSignal) -> CwtParams {
    default_scale_grid(x.sample_rate_hz(), x.len(), MorseWavelet::default(), 32).unwrap()
}

/// Interior frames of a hop-1 STFT: a window length clear of each end.
const STFT_MARGIN: usize = 64;

fn tone_concentration() -> Outcome {
    let t0 = Instant::now();
    let x = synthesize_mcs(&tone_spec(50.0, 205.0, 10.0)).unwrap();
    let (src, sst) = sst_stft_with_source(&x, &stft_params(), &SstParams::default()).unwrap();
    let frames = interior(x.len(), STFT_MARGIN);
    let fraction = |v: &ndarray::Array2<Complex64>, axis: &[f64]| {
        let b = nearest_bin(axis, 50.0);
        let (mut near, mut total) = (0.0, 0.0);
        for m in frames.clone() {
            for (r, c) in v.column(m).iter().enumerate() {
                total += c.norm();
                if r.abs_diff(b) <= 1 {
                    near += c.norm();
                }
            }
        }
        near / total
    };
    let f_sst = fraction(&sst.values, &sst.eta_axis_hz);
    let f_src = fraction(&src.values, &src.freq_axis_hz);
    let elapsed = t0.elapsed();
    outcome(
        f_sst >= 0.99 && f_src < 0.60 && elapsed < Duration::from_secs(5),
        format!("SST {f_sst:.5} (≥ 0.99), STFT {f_src:.4} (< 0.60), {elapsed:.2?} (< 5 s)"),
    )
}

fn entropy_reduction() -> Outcome {
    let t0 = Instant::now();
    let spec = McsSpec::paper_3comp();
    let clean = synthesize_mcs(&spec).unwrap();
    let noisy = add_awgn(&clean, 5.0, 2024);
    let mut lines = Vec::new();
    let mut pass = true;
    for (label, x) in [("clean", &clean), ("5 dB", &noisy)] {
        let (s, q) = sst_stft_with_source(x, &stft_params(), &SstParams::default()).unwrap();
        let (hs, hq) = (renyi_entropy(&s, 3.0).unwrap(), renyi_entropy(&q, 3.0).unwrap());
        pass &= hq < hs;
        lines.push(format!("stft/{label} {hq:.3}<{hs:.3}"));
        let (w, q) = sst_cwt_with_source(x, &cwt_params(x), &SstParams::default()).unwrap();
        let (hw, hq) = (renyi_entropy(&w, 3.0).unwrap(), renyi_entropy(&q, 3.0).unwrap());
        pass &= hq < hw;
        lines.push(format!("cwt/{label} {hq:.3}<{hw:.3}"));
    }
    let elapsed = t0.elapsed();
    pass &= elapsed < Duration::from_secs(30);
    outcome(pass, format!("H₃ bits {}; {elapsed:.2?} (< 30 s)", lines.join(", ")))
}

fn mode_round_trip() -> Outcome {
    let spec = McsSpec::paper_3comp();
    let x = synthesize_mcs(&spec).unwrap();
    let truth: Vec<SampledSignal> = (0..3).map(|k| synthesize_component(&spec, k).unwrap()).collect();
    let rp = RidgeParams::default();
    let mut errs_s = Vec::new();
    let mut errs_c = Vec::new();

    let (_, s) = sst_stft_with_source(&x, &stft_params(), &SstParams::default()).unwrap();
    let w = dpss_window(&WindowSpec::slepian(32, 4.0)).unwrap();
    let ridges = extract_ridges(&s, 3, &rp).unwrap();
    for (k, r) in match_ridges(&ridges.ridges, &spec, &s.time_axis_s).into_iter().enumerate() {
        let m = reconstruct_mode_stft(&s, r, 8, &w).unwrap();
        errs_s.push(mode_relative_l2_error(&m, &truth[k], 0.8).unwrap());
    }

    let (_, s) = sst_cwt_with_source(&x, &cwt_params(&x), &SstParams::default()).unwrap();
    let c = cwt_reconstruction_constant(&MorseWavelet::default()).unwrap();
    let ridges = extract_ridges(&s, 3, &rp).unwrap();
    for (k, r) in match_ridges(&ridges.ridges, &spec, &s.time_axis_s).into_iter().enumerate() {
        let m = reconstruct_mode_cwt(&s, r, 4, c).unwrap();
        errs_c.push(mode_relative_l2_error(&m, &truth[k], 0.8).unwrap());
    }
    let pass = errs_s.len() == 3 && errs_c.len() == 3 && errs_s.iter().all(|&e| e <= 0.1) && errs_c.iter().all(|&e| e <= 0.15);
    outcome(
        pass,
        format!("rel-L2 STFT {errs_s:.4?} (≤ 0.1), CWT {errs_c:.4?} (≤ 0.15)"),
    )
}

fn amplitude_calibration() -> Outcome {
    let x = synthesize_mcs(&tone_spec(50.0, 205.0, 10.0)).unwrap();
    let (_, s) = sst_stft_with_source(&x, &stft_params(), &SstParams::default()).unwrap();
    let w = dpss_window(&WindowSpec::slepian(32, 4.0)).unwrap();
    let ridges = extract_ridges(&s, 1, &RidgeParams::default()).unwrap();
    let m = reconstruct_mode_stft(&s, &ridges.ridges[0], 8, &w).unwrap();
    let range = interior_range(m.samples.len(), 0.8);
    let (lo, hi) = m.samples[range]
        .iter()
        .map(|c| c.norm())
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    outcome(
        (lo - 1.0).abs() <= 0.02 && (hi - 1.0).abs() <= 0.02,
        format!("|mode| ∈ [{lo:.5}, {hi:.5}] (1 ± 0.02)"),
    )
}

fn random_signal(rng: &mut ChaCha8Rng, fs: f64) -> SampledSignal {
    let n = rng.random_range(256..=1024);
    let tones: Vec<(f64, f64, f64)> = (0..rng.random_range(1..=4))
        .map(|_| (rng.random_range(0.02..0.48) * fs, rng.random_range(0.1..2.0), rng.random_range(0.0..1.0)))
        .collect();
    let samples: Vec<Complex64> = (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            let mut v = Complex64::new(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2));
            for &(f, a, p) in &tones {
                v += Complex64::from_polar(a, 2.0 * PI * (f * t + p));
            }
            v
        })
        .collect();
    if rng.random_bool(0.5) {
        let re: Vec<f64> = samples.iter().map(|c| c.re).collect();
        SampledSignal::from_real(&re, fs).unwrap()
    } else {
        SampledSignal::from_complex(samples, fs).unwrap()
    }
}

/// Independent tally of what the hard kernel must deposit.
fn expected_deposits(plane: &TfrPlane, dplane: &TfrPlane) -> (f64, Complex64) {
    let p = SstParams::default();
    let pm = phase_transform(plane, dplane, p.threshold).unwrap();
    let grid = output_grid(plane, &p).unwrap();
    let measure = row_measure(plane);
    let (mut mag, mut sum) = (0.0, Complex64::new(0.0, 0.0));
    for ((idx, &ok), &w) in pm.valid.indexed_iter().zip(pm.omega_hat.iter()) {
        if ok && grid.contains(w) {
            let v = plane.values[idx] * measure;
            mag += v.norm();
            sum += v;
        }
    }
    (mag, sum)
}

fn mass_balance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let fs = rng.random_range(100.0..1000.0);
        let x = random_signal(&mut rng, fs);
        let (plane, dplane) = if trial % 2 == 0 {
            let hop = rng.random_range(1..=4);
            stft_with_derivative(&x, &StftParams::new(WindowSpec::slepian(32, 4.0), hop)).unwrap()
        } else {
            cwt_with_derivative(&x, &cwt_params(&x)).unwrap()
        };
        let pm = phase_transform(&plane, &dplane, SstParams::default().threshold).unwrap();
        let s = synchrosqueeze(&plane, &pm, &SstParams::default()).unwrap();
        let (mag, sum) = expected_deposits(&plane, &dplane);
        let out_sum: Complex64 = s.values.iter().sum();
        worst = worst
            .max((s.stats.deposited_magnitude - mag).abs() / mag)
            .max((out_sum - sum).norm() / mag);
    }
    outcome(worst <= 1e-9, format!("worst relative imbalance {worst:.2e} over 100 signals (≤ 1e-9)"))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst = 0.0f64;
    for _ in 0..30 {
        let n: usize = rng.random_range(16..=256);
        let len: usize = rng.random_range(2..=16);
        let nfft = len.next_power_of_two() * 4;
        let taps: Vec<f64> = (0..len).map(|_| rng.random_range(0.0..1.0)).collect();
        let w = DiscreteWindow::from_taps(taps.clone()).unwrap();
        let x: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let x = SampledSignal::from_complex(x, 1.0).unwrap();
        let (plane, _) = stft_with_window(&x, &w, 1, nfft).unwrap();
        let c = len / 2;
        let scale = max_abs(plane.values.iter().copied());
        for (r, k) in (-(nfft as i64) / 2..nfft as i64 / 2).enumerate() {
            for m in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, &h) in taps.iter().enumerate() {
                    let idx = m as i64 + j as i64 - c as i64;
                    if (0..n as i64).contains(&idx) {
                        let arg = -2.0 * PI * k as f64 * (j as f64 - c as f64) / nfft as f64;
                        acc += x.samples()[idx as usize] * h * Complex64::from_polar(1.0, arg);
                    }
                }
                worst = worst.max((plane.values[[r, m]] - acc).norm() / scale);
            }
        }
    }
    let w = dpss_window(&WindowSpec::slepian(32, 4.0)).unwrap();
    let (oracle, lambda) = dense_sinc_eigenvector(32, 4.0);
    let tap_dev = w.taps.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let conc = dpss_concentration(&w.taps, 4.0);
    outcome(
        worst <= 1e-10 && tap_dev <= 1e-8 && lambda > 0.99999,
        format!("STFT vs direct DFT {worst:.2e} (≤ 1e-10); DPSS taps {tap_dev:.2e} (≤ 1e-8), λ₀ {conc:.12}"),
    )
}

fn dense_sinc_eigenvector(len: usize, nw: f64) -> (Vec<f64>, f64) {
    let w = nw / len as f64;
    let a = nalgebra::DMatrix::from_fn(len, len, |i, j| {
        if i == j {
            2.0 * w
        } else {
            let d = i as f64 - j as f64;
            (2.0 * PI * w * d).sin() / (PI * d)
        }
    });
    let eig = nalgebra::SymmetricEigen::new(a);
    let (idx, &lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let mut v: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
    let sign = v.iter().sum::<f64>().signum();
    let norm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
    v.iter_mut().for_each(|t| *t *= sign / norm);
    (v, lambda)
}

fn segmentation() -> Outcome {
    let fs = 400.0;
    let n = 240_000;
    let mut rng = ChaCha8Rng::seed_from_u64(400);
    let channels: Vec<Vec<f32>> = (0..16)
        .map(|c| {
            let f = 3.0 + 4.0 * c as f64;
            (0..n)
                .map(|i| {
                    let t = i as f64 / fs;
                    ((2.0 * PI * f * t).sin() + 0.3 * rng.random_range(-1.0..1.0)) as f32
                })
                .collect()
        })
        .collect();
    let record = MultichannelRecord::new(channels, fs, Some("interictal".into())).unwrap();
    let inputs = vec![BatchInput::Record {
        id: "synthetic".into(),
        record,
    }];
    let dir = tempfile::tempdir().unwrap();
    let mut config = BatchConfig {
        plan: SegmentPlan::default(),
        transform: Transform::SstStft,
        ..Default::default()
    };
    let mut runs = Vec::new();
    let mut slowest = Duration::ZERO;
    for (i, workers) in [8usize, 8, 1].into_iter().enumerate() {
        config.workers = workers;
        let out = dir.path().join(format!("run{i}"));
        let t0 = Instant::now();
        let summary = preprocess_batch(&inputs, &config, &out).unwrap();
        slowest = slowest.max(t0.elapsed());
        let bytes = (
            std::fs::read(&summary.tensor_path).unwrap(),
            std::fs::read(&summary.manifest_path).unwrap(),
        );
        runs.push((summary, bytes));
        std::fs::remove_file(out.join("tensor.f32")).ok();
    }
    let per_channel = runs[0].0.segments_per_channel();
    let counts_ok = per_channel.len() == 16 && per_channel.iter().all(|(_, _, k)| *k == 1050);
    let entries = runs[0].0.entries.len();
    let identical = runs[1].1 == runs[0].1 && runs[2].1 == runs[0].1;
    let hashes_equal = runs.iter().all(|r| r.0.content_hash == runs[0].0.content_hash);
    let workers: Vec<usize> = runs.iter().map(|r| r.0.workers).collect();
    outcome(
        counts_ok && entries == 16_800 && identical && hashes_equal && slowest < Duration::from_secs(120),
        format!(
            "1050 segments × 16 channels: {counts_ok}, manifest entries {entries} (16800), byte-identical across runs and workers {workers:?}: {}, slowest run {slowest:.2?} (< 2 min)",
            identical && hashes_equal
        ),
    )
}

/// Max |ω̂ − IF| at the per-frame ridge (argmax) of a single-component plane.
fn ridge_if_error(plane: &TfrPlane, dplane: &TfrPlane, spec: &McsSpec, margin: usize) -> f64 {
    let pm = phase_transform(plane, dplane, SstParams::default().threshold).unwrap();
    let truth = spec.if_at(&plane.time_axis_s).remove(0);
    let mut worst = 0.0f64;
    for m in margin..plane.n_frames() - margin {
        let k = argmax_row(plane.values.column(m).iter().map(|c| c.norm()));
        if pm.valid[[k, m]] {
            worst = worst.max((pm.omega_hat[[k, m]] - truth[m]).abs());
        } else {
            return f64::INFINITY;
        }
    }
    worst
}

fn phase_transform_accuracy() -> Outcome {
    let fs = 205.0;
    let preset = McsSpec::paper_3comp();
    let cases: Vec<(&str, McsSpec)> = vec![
        ("tone 10 Hz", tone_spec(10.0, fs, 10.0)),
        ("tone 50 Hz", tone_spec(50.0, fs, 10.0)),
        ("tone 80 Hz", tone_spec(80.0, fs, 10.0)),
        (
            "preset chirp",
            McsSpec::new(vec![preset.components[2].clone()], preset.duration_s, fs).unwrap(),
        ),
        (
            "chirp 65+3.5t",
            McsSpec::new(vec![ComponentSpec::linear_chirp(65.0, 3.5, 1.0)], 10.0, fs).unwrap(),
        ),
    ];
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (name, spec) in &cases {
        let x = synthesize_mcs(spec).unwrap();
        let (s, ds) = stft_with_derivative(&x, &stft_params()).unwrap();
        let e_s = ridge_if_error(&s, &ds, spec, STFT_MARGIN);
        let (w, dw) = cwt_with_derivative(&x, &cwt_params(&x)).unwrap();
        let e_w = ridge_if_error(&w, &dw, spec, 205);
        worst = worst.max(e_s).max(e_w);
        parts.push(format!("{name} {e_s:.3}/{e_w:.3}"));
    }
    outcome(
        worst <= 0.5,
        format!("max |ω̂ − IF| Hz (STFT/CWT): {} (≤ 0.5)", parts.join(", ")),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 tone concentration", tone_concentration),
        ("2 entropy reduction", entropy_reduction),
        ("3 mode round trip", mode_round_trip),
        ("4 amplitude calibration", amplitude_calibration),
        ("5 mass balance", mass_balance),
        ("6 oracle equivalence", oracle_equivalence),
        ("7 segmentation arithmetic", segmentation),
        ("8 phase-transform accuracy", phase_transform_accuracy),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let o = match std::panic::catch_unwind(run) {
            Ok(o) => o,
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                outcome(false, format!("panicked: {msg}"))
            }
        };
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

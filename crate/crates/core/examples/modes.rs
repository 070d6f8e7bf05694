//! Ridge extraction and mode reconstruction on both branches, scored
//! against the known components.

use ssqlab::{
    cwt_reconstruction_constant, default_scale_grid, dpss_window, extract_ridges, mode_relative_l2_error,
    reconstruct_mode_cwt, reconstruct_mode_stft, sst_cwt, sst_stft, synthesize_component, synthesize_mcs, McsSpec,
    MorseWavelet, RidgeParams, SampledSignal, SstParams, StftParams, WindowSpec,
};

fn best_error(mode: &ssqlab::ModeEstimate, truth: &[SampledSignal]) -> (usize, f64) {
    truth
        .iter()
        .enumerate()
        .map(|(k, t)| (k, mode_relative_l2_error(mode, t, 0.8).unwrap()))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
}

fn main() -> ssqlab::error::Result<()> {
    let spec = McsSpec::paper_3comp();
    let x = synthesize_mcs(&spec)?;
    let truth: Vec<SampledSignal> = (0..3).map(|k| synthesize_component(&spec, k)).collect::<Result<_, _>>()?;

    let window = WindowSpec::slepian(32, 4.0);
    let s = sst_stft(&x, &StftParams::new(window, 1), &SstParams::default())?;
    let w = dpss_window(&window)?;
    for r in &extract_ridges(&s, 3, &RidgeParams::default())?.ridges {
        let mode = reconstruct_mode_stft(&s, r, 8, &w)?;
        let (k, e) = best_error(&mode, &truth);
        println!("STFT ridge {} -> component {k}: relative error {e:.4}", r.index);
    }

    let wavelet = MorseWavelet::default();
    let q = sst_cwt(&x, &default_scale_grid(205.0, x.len(), wavelet, 32)?, &SstParams::default())?;
    let c_psi = cwt_reconstruction_constant(&wavelet)?;
    for r in &extract_ridges(&q, 3, &RidgeParams::default())?.ridges {
        let mode = reconstruct_mode_cwt(&q, r, 4, c_psi)?;
        let (k, e) = best_error(&mode, &truth);
        println!("CWT  ridge {} -> component {k}: relative error {e:.4}", r.index);
    }
    Ok(())
}

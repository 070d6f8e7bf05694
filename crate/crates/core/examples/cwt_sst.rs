//! Wavelet synchrosqueezing with a generalized Morse wavelet on a
//! logarithmic grid.

use ssqlab::{
    default_scale_grid, sst_cwt_with_source, synthesize_mcs, McsSpec, MorseWavelet, SstParams,
};

fn main() -> ssqlab::error::Result<()> {
    let x = synthesize_mcs(&McsSpec::paper_3comp())?;
    let wavelet = MorseWavelet::new(3.0, 60.0)?;
    let grid = default_scale_grid(x.sample_rate_hz(), x.len(), wavelet, 32)?;
    let (cwt, sst) = sst_cwt_with_source(&x, &grid, &SstParams::default())?;
    println!(
        "{} scales from {:.3} Hz to {:.2} Hz",
        cwt.n_rows(),
        cwt.freq_axis_hz[0],
        cwt.freq_axis_hz[cwt.n_rows() - 1]
    );
    println!("log measure per row: {:.5}", sst.provenance.measure);

    let m = x.len() / 2;
    let (k, v) = (0..sst.n_bins())
        .map(|k| (k, sst.values[[k, m]].norm()))
        .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    println!("strongest SST bin at t = {:.1} s: {:.2} Hz (|T| = {v:.3})", x.time_at(m), sst.eta_axis_hz[k]);
    Ok(())
}
